#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "psep/arprior.hpp"
#include "psep/flow.hpp"

namespace psep {

enum class ModelKind : std::uint32_t { Flow = 0, AutoRegressive = 1 };

std::string_view model_kind_name(ModelKind kind);
ModelKind parse_model_kind(std::string_view name);

/// Noise levels used for conditioning; index 0 is the noise-free model.
inline constexpr double kPaperSigmas[] = {0.0, 0.01, 0.027, 0.077, 0.129, 0.359};
inline constexpr std::uint32_t kCustomSigmaIndex = 0xFFFFFFFFu;

/// Index into kPaperSigmas, or kCustomSigmaIndex.
std::uint32_t sigma_index(double sigma);
bool is_paper_sigma(double sigma);

struct NamedArray {
  std::string name;
  std::vector<std::uint32_t> shape;
  std::vector<float> data;
};

/// In-memory image of a "PSEP-CK1" file:
///   magic, u32 kind, u32 sigma index,
///   u32 n, n x (string name, f64 value)          hyperparameters
///   u32 n, n x (string key, string value)        metadata
///   u32 n, n x (string name, u32 rank, u32 dims[rank], f32 data[])
/// Strings are u32 length + bytes; everything little-endian.
struct Checkpoint {
  ModelKind kind = ModelKind::Flow;
  std::uint32_t sigma_index = 0;
  std::map<std::string, double> hyper;
  std::map<std::string, std::string> meta;
  std::vector<NamedArray> arrays;

  std::string encode() const;
  static Checkpoint decode(const std::string& bytes);
  /// 16 hex digits of FNV-1a over the encoded bytes.
  std::string content_hash() const;
};

void save_checkpoint(const Checkpoint& ck, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// Model <-> checkpoint. to_checkpoint rounds nothing in the model; use
/// ParameterSet::round_to_f32 first for an exact save/load cycle.
Checkpoint to_checkpoint(const FlowModel& model);
Checkpoint to_checkpoint(const ARModel& model);
std::unique_ptr<FlowModel> flow_from_checkpoint(const Checkpoint& ck);
std::unique_ptr<ARModel> ar_from_checkpoint(const Checkpoint& ck);
std::unique_ptr<DensityModel> model_from_checkpoint(const Checkpoint& ck);

double checkpoint_sigma(const Checkpoint& ck);

/// `<family>_<source>_sigma<σ>_<hash>.ck`; the hash makes names content-addressed.
std::string checkpoint_file_name(const Checkpoint& ck);
/// Saves under its content-addressed name in `dir`. An existing file with the
/// same name is left untouched (same content by construction).
std::filesystem::path store_checkpoint(const Checkpoint& ck, const std::filesystem::path& dir);
/// Newest (by modification time, then name) checkpoint in `dir` matching the tag.
std::optional<std::filesystem::path> find_checkpoint(const std::filesystem::path& dir, ModelKind kind,
                                                     SourceKind source, double sigma);

}  // namespace psep
