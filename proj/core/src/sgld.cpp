#include "psep/sgld.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include <Eigen/Dense>

#include "psep/dataset.hpp"
#include "psep/errors.hpp"
#include "psep/report.hpp"

namespace psep {

void SgldConfig::validate(std::size_t n_sources) const {
  if (n_sources == 0) throw ConfigError("separation needs at least one source");
  if (!(step_size > 0.0) || !std::isfinite(step_size)) throw ConfigError("SGLD step size must be positive");
  if (!(mix_noise > 0.0) || !std::isfinite(mix_noise)) throw ConfigError("SGLD mix noise must be positive");
  if (sigma_schedule.empty() && steps == 0) throw ConfigError("SGLD needs at least one step");
  if (!weights.empty() && weights.size() != n_sources) {
    throw ConfigError("expected " + std::to_string(n_sources) + " mix weights, got " + std::to_string(weights.size()));
  }
  if (diag_stride == 0) throw ConfigError("diagnostic stride must be positive");
  if (init == InitPolicy::Provided && initial.size() != n_sources) {
    throw ConfigError("provided initialization needs one frame per source");
  }
  if (!(init_std >= 0.0)) throw ConfigError("init_std must be non-negative");
  for (std::size_t i = 0; i < sigma_schedule.size(); ++i) {
    if (!(sigma_schedule[i].sigma >= 0.0)) throw ConfigError("schedule sigma must be non-negative");
    if (sigma_schedule[i].steps == 0) throw ConfigError("every schedule stage needs at least one step");
    if (i > 0 && !(sigma_schedule[i].sigma < sigma_schedule[i - 1].sigma)) {
      throw ConfigError("sigma schedule must be strictly decreasing");
    }
  }
}

std::vector<double> SgldConfig::resolved_weights(std::size_t n_sources) const {
  if (!weights.empty()) return weights;
  return std::vector<double>(n_sources, 1.0 / static_cast<double>(n_sources));
}

namespace {

struct Stage {
  std::span<const DensityModel* const> priors;
  double sigma = 0.0;
  double gamma = 0.0;
  std::size_t steps = 0;
};

void check_priors(std::span<const DensityModel* const> priors, std::size_t length) {
  for (const DensityModel* p : priors) {
    if (p == nullptr) throw ConfigError("null prior");
    if (!p->differentiable()) {
      throw UnsupportedModel("prior '" + p->tag().family +
                             "' has no input gradient: Langevin separation needs a continuous density, and a "
                             "categorical model over quantized samples is not differentiable in the signal");
    }
    if (length % p->length_multiple() != 0) {
      throw ShapeError("mix length " + std::to_string(length) + " is not a multiple of " +
                       std::to_string(p->length_multiple()) + " required by a prior");
    }
  }
}

std::vector<std::vector<double>> initial_state(const Frame& mix, std::size_t n, const SgldConfig& config, Rng& rng) {
  std::vector<std::vector<double>> s(n);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (std::size_t k = 0; k < n; ++k) {
    switch (config.init) {
      case InitPolicy::FromMix:
        s[k] = mix.samples;
        for (double& v : s[k]) v += config.init_std * normal(rng);
        break;
      case InitPolicy::FromNoise:
        s[k].resize(mix.size());
        for (double& v : s[k]) v = normal(rng);
        break;
      case InitPolicy::Provided:
        if (config.initial[k].size() != mix.size()) throw ShapeError("provided initial frame length differs from mix");
        s[k] = config.initial[k].samples;
        break;
    }
  }
  return s;
}

SeparationResult run_stages(const Frame& mix, std::span<const Stage> stages, const SgldConfig& config,
                            std::size_t n) {
  mix.validate();
  const std::size_t len = mix.size();
  const std::vector<double> alpha = config.resolved_weights(n);
  Rng rng = stream_rng(config.seed, 0);
  std::vector<std::vector<double>> s = initial_state(mix, n, config, rng);
  std::normal_distribution<double> normal(0.0, 1.0);

  std::size_t total = 0;
  for (const Stage& st : stages) total += st.steps;
  const std::size_t average_from = config.average_from == SIZE_MAX ? total / 2 : config.average_from;

  SeparationResult result;
  std::vector<std::vector<double>> mean_acc(n, std::vector<double>(len, 0.0));
  std::vector<double> residual(len);
  const double eta = config.step_size;
  const double noise_scale = std::sqrt(2.0 * eta);

  std::size_t step = 0;
  for (const Stage& st : stages) {
    const double lik = eta / (st.gamma * st.gamma);
    for (std::size_t i = 0; i < st.steps; ++i, ++step) {
      // mix residual at s^t
      for (std::size_t t = 0; t < len; ++t) {
        double g = 0.0;
        for (std::size_t k = 0; k < n; ++k) g += alpha[k] * s[k][t];
        residual[t] = g - mix.samples[t];
      }
      SgldDiagnostic diag{step, st.sigma, 0.0, std::vector<double>(n)};
      for (std::size_t k = 0; k < n; ++k) {
        const DensityWithGrad dg = st.priors[k]->density_and_grad(Frame{s[k], mix.sample_rate});
        diag.log_density[k] = dg.log_density;
        std::vector<double>& sk = s[k];
        for (std::size_t t = 0; t < len; ++t) {
          sk[t] += eta * dg.grad[t] + noise_scale * normal(rng);
          sk[t] -= lik * alpha[k] * residual[t];
        }
      }
      double r2 = 0.0;
      bool finite = true;
      for (std::size_t t = 0; t < len; ++t) {
        double g = 0.0;
        for (std::size_t k = 0; k < n; ++k) g += alpha[k] * s[k][t];
        const double d = mix.samples[t] - g;
        r2 += d * d;
        finite = finite && std::isfinite(g);
      }
      diag.residual = r2;
      if (!finite || !std::isfinite(r2)) {
        throw NumericalError("SGLD state became non-finite at step " + std::to_string(step) + " (stage sigma " +
                             format_double(st.sigma) + ", residual " + format_double(r2) + ")");
      }
      if (step % config.diag_stride == 0) result.diagnostics.push_back(std::move(diag));
      if (step >= average_from) {
        for (std::size_t k = 0; k < n; ++k) {
          for (std::size_t t = 0; t < len; ++t) mean_acc[k][t] += s[k][t];
        }
        ++result.averaged_steps;
      }
    }
  }

  for (std::size_t k = 0; k < n; ++k) {
    result.sources.push_back(Frame{std::move(s[k]), mix.sample_rate});
    if (result.averaged_steps > 0) {
      const double inv = 1.0 / static_cast<double>(result.averaged_steps);
      for (double& v : mean_acc[k]) v *= inv;
    }
    result.posterior_mean.push_back(Frame{std::move(mean_acc[k]), mix.sample_rate});
  }
  return result;
}

}  // namespace

SeparationResult sgld_separate(const Frame& mix, std::span<const DensityModel* const> priors,
                               const SgldConfig& config) {
  if (!config.sigma_schedule.empty()) {
    throw ConfigError("sigma schedule given: use the annealed separation with one prior set per stage");
  }
  config.validate(priors.size());
  check_priors(priors, mix.size());
  const Stage stage{priors, 0.0, config.mix_noise, config.steps};
  return run_stages(mix, std::span<const Stage>(&stage, 1), config, priors.size());
}

SeparationResult sgld_separate_annealed(const Frame& mix,
                                        std::span<const std::vector<const DensityModel*>> stage_priors,
                                        const SgldConfig& config) {
  if (config.sigma_schedule.empty()) throw ConfigError("annealed separation needs a sigma schedule");
  if (stage_priors.size() != config.sigma_schedule.size()) {
    throw ConfigError("one prior set per schedule stage is required");
  }
  const std::size_t n = stage_priors.front().size();
  config.validate(n);
  std::vector<Stage> stages;
  for (std::size_t i = 0; i < stage_priors.size(); ++i) {
    if (stage_priors[i].size() != n) throw ConfigError("every stage needs the same number of priors");
    check_priors(stage_priors[i], mix.size());
    const NoiseStage& ns = config.sigma_schedule[i];
    for (const DensityModel* p : stage_priors[i]) {
      if (std::abs(p->tag().sigma - ns.sigma) > 1e-12) {
        throw ConfigError("stage sigma " + format_double(ns.sigma) + " given a prior conditioned on " +
                          format_double(p->tag().sigma));
      }
    }
    const double gamma = ns.sigma > 0.0 ? ns.sigma : config.mix_noise;
    stages.push_back(Stage{stage_priors[i], ns.sigma, gamma, ns.steps});
  }
  return run_stages(mix, stages, config, n);
}

GaussianPosterior gaussian_posterior_oracle(const Frame& mix, std::span<const DiagonalGaussianPrior> priors,
                                            std::span<const double> weights, double gamma) {
  const std::size_t n = priors.size();
  if (n == 0) throw ConfigError("posterior needs at least one prior");
  if (weights.size() != n) throw ConfigError("one weight per prior is required");
  if (!(gamma > 0.0)) throw DomainError("mix noise must be positive");
  const std::size_t len = mix.size();
  GaussianPosterior post;
  post.means.assign(n, Frame{std::vector<double>(len), mix.sample_rate});
  post.covariances.resize(len);
  Eigen::VectorXd a(n);
  for (std::size_t k = 0; k < n; ++k) a[static_cast<Eigen::Index>(k)] = weights[k];
  const double inv_g2 = 1.0 / (gamma * gamma);
  for (std::size_t t = 0; t < len; ++t) {
    Eigen::MatrixXd precision = inv_g2 * a * a.transpose();
    Eigen::VectorXd rhs = inv_g2 * mix.samples[t] * a;
    for (std::size_t k = 0; k < n; ++k) {
      const double v = priors[k].variance(t);
      if (!(v > 0.0)) throw DomainError("prior variance must be positive (singular covariance)");
      const auto i = static_cast<Eigen::Index>(k);
      precision(i, i) += 1.0 / v;
      rhs[i] += priors[k].mean(t) / v;
    }
    const Eigen::LLT<Eigen::MatrixXd> llt(precision);
    if (llt.info() != Eigen::Success) throw NumericalError("posterior precision is not positive definite");
    const Eigen::VectorXd mean = llt.solve(rhs);
    const Eigen::MatrixXd cov = llt.solve(Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(n),
                                                                    static_cast<Eigen::Index>(n)));
    for (std::size_t k = 0; k < n; ++k) post.means[k].samples[t] = mean[static_cast<Eigen::Index>(k)];
    post.covariances[t].assign(cov.data(), cov.data() + cov.size());
  }
  return post;
}

double snr_db(std::span<const double> truth, std::span<const double> estimate) {
  if (truth.size() != estimate.size()) throw ShapeError("SNR needs equal lengths");
  double power = 0.0, err = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    power += truth[i] * truth[i];
    const double d = truth[i] - estimate[i];
    err += d * d;
  }
  if (!(power > 0.0)) throw DomainError("SNR undefined for a zero-power reference");
  if (err == 0.0) return kSnrCapDb;
  return std::min(kSnrCapDb, 10.0 * std::log10(power / err));
}

namespace {

double mse(std::span<const double> a, std::span<const double> b) {
  double e = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) e += (a[i] - b[i]) * (a[i] - b[i]);
  return e / static_cast<double>(a.size());
}

}  // namespace

SeparationQuality separation_quality(std::span<const Frame> estimated, std::span<const Frame> truth) {
  const std::size_t n = truth.size();
  if (estimated.size() != n) throw ShapeError("estimate and truth source counts differ");
  for (std::size_t k = 0; k < n; ++k) {
    if (estimated[k].size() != truth[k].size()) throw ShapeError("estimate and truth frame lengths differ");
  }
  SeparationQuality q;
  for (std::size_t k = 0; k < n; ++k) {
    q.identity_snr_db.push_back(snr_db(truth[k].samples, estimated[k].samples));
    q.identity_mse.push_back(mse(truth[k].samples, estimated[k].samples));
  }
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  double best = -std::numeric_limits<double>::infinity();
  do {
    double total = 0.0;
    for (std::size_t k = 0; k < n; ++k) total += snr_db(truth[k].samples, estimated[perm[k]].samples);
    if (total > best) {
      best = total;
      q.best_permutation = perm;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  for (std::size_t k = 0; k < n; ++k) {
    const Frame& est = estimated[q.best_permutation[k]];
    q.best_snr_db.push_back(snr_db(truth[k].samples, est.samples));
    q.best_mse.push_back(mse(truth[k].samples, est.samples));
  }
  return q;
}

void write_separation_bundle(const SeparationResult& result, const Frame& mix, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  write_record(MixRecord{result.sources, mix}, dir / "estimates.psds");
  write_record(MixRecord{result.posterior_mean, mix}, dir / "posterior_mean.psds");
  std::ofstream out(dir / "diagnostics.csv", std::ios::trunc);
  if (!out) throw Error("cannot write diagnostics to " + dir.string());
  out << "step,stage_sigma,residual";
  const std::size_t n = result.sources.size();
  for (std::size_t k = 0; k < n; ++k) out << ",log_density_" << k;
  out << '\n';
  for (const SgldDiagnostic& d : result.diagnostics) {
    out << d.step << ',' << format_double(d.stage_sigma) << ',' << format_double(d.residual);
    for (double v : d.log_density) out << ',' << format_double(v);
    out << '\n';
  }
  if (!out) throw Error("failed writing diagnostics to " + dir.string());
}

}  // namespace psep
