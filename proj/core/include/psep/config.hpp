#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "psep/dataset.hpp"
#include "psep/evaluation.hpp"
#include "psep/sgld.hpp"
#include "psep/training.hpp"

namespace psep {

/// A documented configuration key with its default value.
struct ConfigKey {
  std::string section;
  std::string name;
  std::string default_value;
  std::string doc;
};

/// Every key a run config may contain, in the order they are written.
const std::vector<ConfigKey>& config_schema();

/// INI-style run configuration: `[section]` headers and `key = value` lines.
/// Keys not in the schema are rejected.
class RunConfig {
 public:
  /// Desk-scale defaults.
  RunConfig();
  /// 16 kHz, 2^14-sample frames, 5000/1500 mixes, full-size networks.
  static RunConfig paper_scale();

  static RunConfig load(const std::filesystem::path& path, RunConfig base = RunConfig());
  /// Writes every key with its resolved value and documentation.
  void write(const std::filesystem::path& path) const;
  std::string to_string() const;

  void set(const std::string& section, const std::string& key, const std::string& value);
  const std::string& get(const std::string& section, const std::string& key) const;
  double get_double(const std::string& section, const std::string& key) const;
  std::size_t get_size(const std::string& section, const std::string& key) const;
  std::uint64_t get_u64(const std::string& section, const std::string& key) const;
  bool get_bool(const std::string& section, const std::string& key) const;

  ToyDataConfig data() const;
  TrainConfig train() const;
  /// Training config for noise fine-tuning (its own step budget).
  TrainConfig finetune() const;
  SgldConfig sgld() const;
  CrossLikelihoodOptions cross_likelihood() const;
  DegenerateOptions degenerate() const;
  /// Test frames per source used by evaluation; 0 means all.
  std::size_t eval_frames() const;

 private:
  std::map<std::string, std::string> values_;  // "section.key" -> value
};

/// Parses "0.359:500,0.129:500" into annealing stages.
std::vector<NoiseStage> parse_schedule(const std::string& text);

}  // namespace psep
