#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "psep/evaluation.hpp"

namespace psep {

/// Shortest decimal form that parses back to the same double.
std::string format_double(double v);
double parse_double(std::string_view s);

/// Report values beyond this magnitude are rendered as sentinels.
inline constexpr double kRenderLimit = 1e15;

/// "-inf*" / "+inf*" for non-finite or out-of-range values, otherwise a
/// fixed-width scientific number.
std::string render_value(double v);

/// `xll_<family>_sigma<σd>_cond<σc>.csv`
std::string matrix_file_stem(const CrossLikelihoodMatrix& m);

void write_matrix_csv(const CrossLikelihoodMatrix& m, const std::filesystem::path& path);
/// Reads values and labels back from write_matrix_csv output.
CrossLikelihoodMatrix read_matrix_csv(const std::filesystem::path& path);
/// Reads labels, σ tags and values back from a degenerate-table CSV. Noise
/// draw counts and seeds live only in the JSON.
DegenerateTable read_degenerate_csv(const std::filesystem::path& path);

/// Fixed-width grid with one shading character per cell, darker = higher.
std::string render_heatmap(const CrossLikelihoodMatrix& m);
std::string render_table(const DegenerateTable& t);

std::string units_label(const std::string& family);

struct Provenance {
  std::uint64_t seed = 0;
  std::map<std::string, std::string> checkpoints;  // label -> content hash
  std::map<std::string, std::string> extra;
};

/// Writes <stem>.csv, <stem>.txt (heatmap + verdict) and <stem>.json.
std::vector<std::filesystem::path> emit_matrix_report(const CrossLikelihoodMatrix& m, const DiscriminationReport& r,
                                                      const Provenance& prov, const std::filesystem::path& out_dir);
std::vector<std::filesystem::path> emit_table_report(const DegenerateTable& t, const std::string& family,
                                                     const Provenance& prov, const std::filesystem::path& out_dir);

}  // namespace psep
