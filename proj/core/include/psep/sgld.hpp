#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "psep/density.hpp"
#include "psep/signal.hpp"

namespace psep {

enum class InitPolicy { FromMix, FromNoise, Provided };

/// One annealing stage: priors conditioned on `sigma`, run for `steps` updates.
struct NoiseStage {
  double sigma = 0.0;
  std::size_t steps = 0;
};

struct SgldConfig {
  double step_size = 1e-4;  // η
  std::size_t steps = 1000;
  double mix_noise = 0.1;       // γ
  std::vector<double> weights;  // α_k; empty means 1/N each
  InitPolicy init = InitPolicy::FromMix;
  double init_std = 0.1;
  std::vector<Frame> initial;  // used with InitPolicy::Provided
  std::vector<NoiseStage> sigma_schedule;
  std::uint64_t seed = 0;
  std::size_t diag_stride = 1;
  /// Steps at or after this index enter the running posterior mean.
  /// Defaults to the second half of the run.
  std::size_t average_from = SIZE_MAX;

  void validate(std::size_t n_sources) const;
  std::vector<double> resolved_weights(std::size_t n_sources) const;
};

struct SgldDiagnostic {
  std::size_t step = 0;
  double stage_sigma = 0.0;
  double residual = 0.0;             // ||m - g(s)||² after the update
  std::vector<double> log_density;   // per source, nats per sample, before the update
};

struct SeparationResult {
  std::vector<Frame> sources;         // final state
  std::vector<Frame> posterior_mean;  // average over the averaging window
  std::size_t averaged_steps = 0;
  std::vector<SgldDiagnostic> diagnostics;
};

/// Langevin posterior sampling for m = Σ α_k s_k + N(0, γ²). Each step takes a
/// prior step per source followed by the likelihood correction, with the
/// mix residual evaluated at the state the step started from.
SeparationResult sgld_separate(const Frame& mix, std::span<const DensityModel* const> priors,
                               const SgldConfig& config);

/// Annealed variant: stage i uses `stage_priors[i]` and γ = the stage's σ
/// (falling back to config.mix_noise when σ is zero).
SeparationResult sgld_separate_annealed(const Frame& mix,
                                        std::span<const std::vector<const DensityModel*>> stage_priors,
                                        const SgldConfig& config);

/// Exact linear-Gaussian posterior per sample position.
struct GaussianPosterior {
  std::vector<Frame> means;               // one per source
  std::vector<std::vector<double>> covariances;  // per position, row-major N×N
};

GaussianPosterior gaussian_posterior_oracle(const Frame& mix, std::span<const DiagonalGaussianPrior> priors,
                                            std::span<const double> weights, double gamma);

inline constexpr double kSnrCapDb = 200.0;

struct SeparationQuality {
  std::vector<double> identity_snr_db;
  std::vector<double> identity_mse;
  std::vector<double> best_snr_db;
  std::vector<double> best_mse;
  std::vector<std::size_t> best_permutation;  // estimate index assigned to truth k
};

double snr_db(std::span<const double> truth, std::span<const double> estimate);
SeparationQuality separation_quality(std::span<const Frame> estimated, std::span<const Frame> truth);

/// Writes `estimates.psds` (sources + the observed mix), `posterior_mean.psds`
/// and `diagnostics.csv` into `dir`.
void write_separation_bundle(const SeparationResult& result, const Frame& mix, const std::filesystem::path& dir);

}  // namespace psep
