#pragma once

#include <filesystem>

#include "psep/signal.hpp"

namespace psep {

/// Reads a 16-bit PCM mono RIFF/WAVE file; samples are scaled by 1/32768.
/// Throws FormatError for anything else (non-PCM tag, stereo, other bit depths).
Frame read_wav(const std::filesystem::path& path);

/// Writes 16-bit PCM mono; samples are rounded to the nearest step and clipped.
void write_wav(const Frame& frame, const std::filesystem::path& path);

}  // namespace psep
