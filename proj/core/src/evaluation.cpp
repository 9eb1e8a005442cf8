#include "psep/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "psep/errors.hpp"

namespace psep {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

std::string prior_label(const DensityModel& m) {
  return m.tag().source ? std::string(source_name(*m.tag().source)) : m.tag().family;
}

double safe_log_density(const DensityModel& model, const Frame& frame) {
  try {
    const double v = model.log_density(frame);
    return std::isfinite(v) ? v : kNegInf;
  } catch (const NumericalError&) {
    return kNegInf;
  } catch (const DomainError&) {
    return kNegInf;
  }
}

}  // namespace

CrossLikelihoodMatrix cross_likelihood(std::span<const DensityModel* const> models,
                                       std::span<const std::vector<Frame>> test_sets,
                                       std::span<const std::string> data_labels,
                                       const CrossLikelihoodOptions& options) {
  if (models.empty() || test_sets.empty()) throw ConfigError("cross_likelihood needs models and test sets");
  if (data_labels.size() != test_sets.size()) throw ShapeError("cross_likelihood: one label per test set required");
  if (!(options.data_noise >= 0.0)) throw ConfigError("data noise must be non-negative");
  const DensityModel& first = *models.front();
  for (const DensityModel* m : models) {
    if (m == nullptr) throw ConfigError("cross_likelihood: null model");
    if (options.force) continue;
    if (m->tag().family != first.tag().family) {
      throw ConfigError("cross_likelihood: mixed model families (" + m->tag().family + " vs " + first.tag().family +
                        "); pass force to override");
    }
    if (m->tag().sigma != first.tag().sigma) {
      throw ConfigError("cross_likelihood: models conditioned on different sigma levels; pass force to override");
    }
  }
  for (const auto& set : test_sets) {
    if (set.empty()) throw ConfigError("cross_likelihood: empty test set");
  }

  CrossLikelihoodMatrix out;
  out.data_labels.assign(data_labels.begin(), data_labels.end());
  for (const DensityModel* m : models) out.prior_labels.push_back(prior_label(*m));
  out.family = first.tag().family;
  out.data_sigma = options.data_noise;
  out.cond_sigma = first.tag().sigma;
  out.values.assign(test_sets.size() * models.size(), 0.0);
  out.std_errors.assign(out.values.size(), 0.0);

  for (std::size_t i = 0; i < test_sets.size(); ++i) {
    std::vector<Frame> frames;
    frames.reserve(test_sets[i].size());
    for (std::size_t f = 0; f < test_sets[i].size(); ++f) {
      Rng rng = stream_rng(options.seed, (static_cast<std::uint64_t>(i) << 32) | f);
      frames.push_back(add_gaussian_noise(test_sets[i][f], options.data_noise, rng));
    }
    for (std::size_t j = 0; j < models.size(); ++j) {
      double sum = 0.0, sq = 0.0;
      for (const Frame& f : frames) {
        const double v = safe_log_density(*models[j], f);
        sum += v;
        sq += v * v;
      }
      const double n = static_cast<double>(frames.size());
      const double mean = sum / n;
      out.at(i, j) = std::isfinite(mean) ? mean : kNegInf;
      if (frames.size() > 1 && std::isfinite(mean)) {
        const double var = std::max(0.0, (sq - n * mean * mean) / (n - 1.0));
        out.std_errors[i * models.size() + j] = std::sqrt(var / n);
      }
    }
  }
  return out;
}

DiscriminationReport discrimination_report(const CrossLikelihoodMatrix& m) {
  if (m.rows() != m.cols() || m.rows() == 0) throw ShapeError("discrimination_report needs a non-empty square matrix");
  const std::size_t K = m.rows();
  DiscriminationReport r;
  for (std::size_t j = 0; j < K; ++j) {
    double best_out = kNegInf;
    for (std::size_t i = 0; i < K; ++i) {
      if (i != j) best_out = std::max(best_out, m.at(i, j));
    }
    const double margin = K == 1 ? 0.0 : m.at(j, j) - best_out;
    r.margins.push_back(margin);
    r.dominant.push_back(margin > 0.0);
  }
  for (std::size_t i = 0; i < K; ++i) {
    double best_out = kNegInf;
    for (std::size_t j = 0; j < K; ++j) {
      if (i != j) best_out = std::max(best_out, m.at(i, j));
    }
    const double margin = K == 1 ? 0.0 : m.at(i, i) - best_out;
    r.row_margins.push_back(margin);
    r.row_dominant.push_back(margin > 0.0);
  }
  r.all_dominant = std::all_of(r.dominant.begin(), r.dominant.end(), [](bool b) { return b; });
  r.all_rows_dominant = std::all_of(r.row_dominant.begin(), r.row_dominant.end(), [](bool b) { return b; });
  return r;
}

DegenerateTable degenerate_input_table(const PriorLookup& priors, const DegenerateOptions& options) {
  if (options.noise_draws == 0) throw ConfigError("noise_draws must be positive");
  std::string missing;
  for (double sigma : options.sigma_tags) {
    for (SourceKind k : kAllSources) {
      if (priors(k, sigma) == nullptr) {
        missing += (missing.empty() ? "" : ", ") + std::string(source_name(k)) + "@sigma=" + std::to_string(sigma);
      }
    }
  }
  if (!missing.empty()) throw MissingArtifact("missing priors: " + missing);

  DegenerateTable t;
  t.noise_draws = options.noise_draws;
  t.noise_std = options.noise_std;
  t.seed = options.seed;
  for (SourceKind k : kAllSources) t.prior_labels.emplace_back(source_name(k));

  const Frame zero{std::vector<double>(options.frame_len, 0.0), options.sample_rate};
  std::vector<Frame> noise;
  for (std::size_t d = 0; d < options.noise_draws; ++d) {
    Rng rng = stream_rng(options.seed, d);
    noise.push_back(add_gaussian_noise(zero, options.noise_std, rng));
  }
  const std::string noise_label = "N(0," + std::to_string(options.noise_std).substr(0, 4) + ")";

  for (int input = 0; input < 2; ++input) {
    for (double sigma : options.sigma_tags) {
      t.input_labels.push_back(input == 0 ? "0.0" : noise_label);
      t.row_sigmas.push_back(sigma);
      for (SourceKind k : kAllSources) {
        const DensityModel& model = *priors(k, sigma);
        double v = 0.0;
        if (input == 0) {
          v = safe_log_density(model, zero);
        } else {
          for (const Frame& f : noise) v += safe_log_density(model, f);
          v /= static_cast<double>(noise.size());
        }
        t.values.push_back(v);
      }
    }
  }
  return t;
}

double magnitude_gap(double a, double b) {
  const double d = std::abs(a - b);
  if (!std::isfinite(d)) return std::numeric_limits<double>::infinity();
  return std::log10(std::max(1.0, d));
}

}  // namespace psep
