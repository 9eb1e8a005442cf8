#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "psep/signal.hpp"

namespace psep {

/// One toy mix: the per-source frames (SourceKind order) and their mean.
struct MixRecord {
  std::vector<Frame> sources;
  Frame mix;
};

enum class Split { Train, Test };

struct Dataset {
  std::uint32_t sample_rate = 0;
  std::size_t frame_len = 0;
  std::vector<MixRecord> train;
  std::vector<MixRecord> test;

  const std::vector<MixRecord>& split(Split s) const { return s == Split::Train ? train : test; }
  /// All frames of one source in a split.
  std::vector<Frame> source_frames(Split s, SourceKind kind) const;
};

struct ToyDataConfig {
  std::size_t n_train = 500;
  std::size_t n_test = 200;
  std::uint32_t sample_rate = 4000;
  std::size_t frame_len = 2048;
  std::uint64_t seed = 0;
};

/// Mix i (train first, then test) is built from stream_rng(seed, i), so the
/// result is a pure function of the config.
Dataset make_toy_dataset(const ToyDataConfig& config);

/// Builds one toy mix with the given generator.
MixRecord make_toy_mix(Rng& rng, std::uint32_t sample_rate, std::size_t frame_len);

// "PSEP-DS1" records: magic, u32 sample_rate, u32 frame_len, u32 n_sources,
// then f32 arrays [sources..., mix], all little-endian.
inline constexpr char kDatasetMagic[] = "PSEP-DS1";

void write_record(const MixRecord& record, const std::filesystem::path& path);
MixRecord read_record(const std::filesystem::path& path);

/// Writes `<dir>/train/mix_NNNNNN.psds` and `<dir>/test/...`.
void write_dataset(const Dataset& dataset, const std::filesystem::path& dir);
/// Reads every record in `<dir>/train` and `<dir>/test`, sorted by file name.
Dataset read_dataset(const std::filesystem::path& dir);

}  // namespace psep
