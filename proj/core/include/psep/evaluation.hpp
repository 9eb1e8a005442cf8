#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "psep/density.hpp"

namespace psep {

/// Entry (i, j): mean per-sample log-likelihood of data source i under prior j.
struct CrossLikelihoodMatrix {
  std::vector<std::string> data_labels;   // rows
  std::vector<std::string> prior_labels;  // columns
  std::vector<double> values;             // row-major
  std::vector<double> std_errors;         // standard error of each mean (0 if a single frame)
  std::string family;
  double data_sigma = 0.0;
  double cond_sigma = 0.0;

  std::size_t rows() const { return data_labels.size(); }
  std::size_t cols() const { return prior_labels.size(); }
  double at(std::size_t i, std::size_t j) const { return values.at(i * cols() + j); }
  double& at(std::size_t i, std::size_t j) { return values.at(i * cols() + j); }
};

struct CrossLikelihoodOptions {
  double data_noise = 0.0;  // σ_d added to every test frame
  std::uint64_t seed = 0;   // noise stream; identical noisy frames go to every prior
  bool force = false;       // allow mixed families / conditioning levels
};

/// Row labels come from each test set's source (in order); column labels from
/// each model's tag. Frames whose log-density is non-finite make the entry -inf.
CrossLikelihoodMatrix cross_likelihood(std::span<const DensityModel* const> models,
                                       std::span<const std::vector<Frame>> test_sets,
                                       std::span<const std::string> data_labels,
                                       const CrossLikelihoodOptions& options = {});

struct DiscriminationReport {
  /// Per prior (column j): M(j, j) - max_{i != j} M(i, j).
  std::vector<double> margins;
  std::vector<bool> dominant;
  /// Per data source (row i): M(i, i) - max_{j != i} M(i, j).
  std::vector<double> row_margins;
  std::vector<bool> row_dominant;
  bool all_dominant = false;      // every prior margin > 0
  bool all_rows_dominant = false; // every row margin > 0: strict diagonal dominance per row
};

DiscriminationReport discrimination_report(const CrossLikelihoodMatrix& matrix);

/// Table of mean log-likelihoods of degenerate inputs: rows are (input, σ tag)
/// pairs, columns the per-source priors.
struct DegenerateTable {
  std::vector<std::string> input_labels;  // per row
  std::vector<double> row_sigmas;         // per row
  std::vector<std::string> prior_labels;
  std::vector<double> values;  // row-major
  std::size_t noise_draws = 0;
  double noise_std = 0.0;
  std::uint64_t seed = 0;

  std::size_t rows() const { return input_labels.size(); }
  std::size_t cols() const { return prior_labels.size(); }
  double at(std::size_t r, std::size_t c) const { return values.at(r * cols() + c); }
};

/// Looks up the prior for (source, σ); returns nullptr when missing.
using PriorLookup = std::function<const DensityModel*(SourceKind, double sigma)>;

struct DegenerateOptions {
  std::vector<double> sigma_tags{0.0, 0.359};
  double noise_std = 0.5;
  std::size_t noise_draws = 32;
  std::size_t frame_len = 2048;
  std::uint32_t sample_rate = 4000;
  std::uint64_t seed = 0;
};

/// Rows: constant zero under each σ tag, then N(0, noise_std²) noise under each
/// σ tag (averaged over noise_draws frames). Throws MissingArtifact naming all
/// missing (source, σ) priors.
DegenerateTable degenerate_input_table(const PriorLookup& priors, const DegenerateOptions& options);

/// log10 of the log-likelihood gap in nats per sample, floored at 1 nat:
/// log10(max(1, |a - b|)). Used to compare values "in orders of magnitude".
double magnitude_gap(double a, double b);

}  // namespace psep
