#pragma once

#include <optional>
#include <string>
#include <vector>

#include "psep/signal.hpp"

namespace psep {

/// Identity of a trained prior: which family, which source it models, and the
/// noise level it was conditioned on.
struct ModelTag {
  std::string family;  // "flow", "ar", "gaussian"
  std::optional<SourceKind> source;
  double sigma = 0.0;
};

struct DensityWithGrad {
  double log_density = 0.0;   // nats per sample
  std::vector<double> grad;   // d(total log-density)/d(sample)
};

/// Common surface of every prior. Log-densities are reported per sample so
/// frames of different lengths are comparable.
class DensityModel {
 public:
  virtual ~DensityModel() = default;

  virtual const ModelTag& tag() const = 0;
  virtual double log_density(const Frame& frame) const = 0;
  /// True when the model provides gradients w.r.t. its continuous input.
  virtual bool differentiable() const = 0;
  /// Per-sample log-density together with the gradient of the total log-density.
  /// Non-differentiable models throw UnsupportedModel.
  virtual DensityWithGrad density_and_grad(const Frame& frame) const;
  std::vector<double> grad_log_density(const Frame& frame) const { return density_and_grad(frame).grad; }
  virtual std::vector<Frame> sample(Rng& rng, std::size_t n_frames, std::size_t length,
                                    std::uint32_t sample_rate) const = 0;
  /// Frame lengths must be a multiple of this.
  virtual std::size_t length_multiple() const { return 1; }
};

/// Independent Gaussian per sample position, N(mean_i, var_i). Vectors of size
/// one broadcast over the frame. Used as the closed-form reference prior.
class DiagonalGaussianPrior final : public DensityModel {
 public:
  DiagonalGaussianPrior(std::vector<double> means, std::vector<double> variances);
  static DiagonalGaussianPrior standard() { return DiagonalGaussianPrior({0.0}, {1.0}); }

  const ModelTag& tag() const override { return tag_; }
  double log_density(const Frame& frame) const override;
  bool differentiable() const override { return true; }
  DensityWithGrad density_and_grad(const Frame& frame) const override;
  std::vector<Frame> sample(Rng& rng, std::size_t n_frames, std::size_t length,
                            std::uint32_t sample_rate) const override;

  double mean(std::size_t i) const { return means_.size() == 1 ? means_[0] : means_.at(i); }
  double variance(std::size_t i) const { return vars_.size() == 1 ? vars_[0] : vars_.at(i); }

 private:
  void check_length(std::size_t n) const;

  ModelTag tag_{"gaussian", std::nullopt, 0.0};
  std::vector<double> means_;
  std::vector<double> vars_;
};

}  // namespace psep
