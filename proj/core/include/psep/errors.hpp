#pragma once

#include <stdexcept>
#include <string>

namespace psep {

/// Base for every error raised by the library. The CLI maps subclasses to exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Tensor/frame shapes that cannot be combined.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// log/exp (and similar) evaluated outside their domain.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// NaN/Inf detected in state that must stay finite.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// Malformed or unsupported on-disk data (WAV, dataset record, checkpoint).
class FormatError : public Error {
 public:
  using Error::Error;
};

/// Bad argument values or configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Referenced file/checkpoint does not exist.
class MissingArtifact : public Error {
 public:
  using Error::Error;
};

/// Operation requested on a model family that cannot support it.
class UnsupportedModel : public Error {
 public:
  using Error::Error;
};

}  // namespace psep
