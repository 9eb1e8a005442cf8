#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "psep/density.hpp"
#include "psep/params.hpp"
#include "psep/wavenet.hpp"

namespace psep {

struct ARConfig {
  std::size_t blocks = 3;
  std::size_t layers = 10;
  std::size_t kernel = 3;
  std::size_t width = 64;

  static ARConfig desk() { return {}; }
  static ARConfig paper_toy() { return {3, 10, 3, 256}; }
};

/// 1 + blocks * Σ_{l<layers} (kernel - 1) 2^l: number of past classes that can
/// reach the logits at a given step.
std::size_t receptive_field(const ARConfig& config);

/// Autoregressive categorical prior over µ-law classes. The input at step t
/// is the decoded value of class t-1 (zero at t = 0), fed through causal
/// dilated convolutions, so logits at t see classes strictly before t.
///
/// Log-densities are discrete log-masses (nats per sample); the model has no
/// gradient w.r.t. continuous input.
class ARModel final : public DensityModel {
 public:
  ARModel(const ARConfig& config, std::uint64_t seed);

  const ARConfig& config() const { return config_; }
  const ModelTag& tag() const override { return tag_; }
  ModelTag& tag() { return tag_; }
  ParameterSet& params() { return params_; }
  const ParameterSet& params() const { return params_; }
  std::size_t receptive_field() const { return psep::receptive_field(config_); }

  /// (256, T) logits for a class sequence.
  Tensor logits(std::span<const int> classes) const;
  /// d(sum of logits at step t) / d(decoded value of class j), for every j.
  /// Exactly zero wherever class j cannot reach step t.
  std::vector<double> input_sensitivity(std::span<const int> classes, std::size_t t) const;

  double log_density(const Frame& frame) const override;
  bool differentiable() const override { return false; }
  std::vector<Frame> sample(Rng& rng, std::size_t n_frames, std::size_t length,
                            std::uint32_t sample_rate) const override;

  /// Mean cross-entropy (nats per step) of one class sequence.
  double cross_entropy(std::span<const int> classes) const;
  /// Adds weight * d(mean cross-entropy)/dθ to parameter gradients; returns the loss.
  double accumulate_loss_grad(std::span<const int> classes, double weight);

  /// Sequential ancestral sampling of n classes, optionally continuing `prefix`.
  std::vector<int> generate(std::size_t n_samples, Rng& rng, std::span<const int> prefix = {}) const;

  /// Sets the output projection to zero (uniform predictive distribution).
  void zero_head();

 private:
  ad::Var build_logits(ParamBinder& bind, std::span<const int> classes) const;
  static Tensor shifted_input(std::span<const int> classes);

  ARConfig config_;
  ModelTag tag_{"ar", std::nullopt, 0.0};
  ParameterSet params_;
  WaveNetStack net_;
};

/// log softmax(logits[:, t])[cls] for one column of a (V, T) logit tensor.
double log_softmax_at(const Tensor& logits, std::size_t t, int cls);

}  // namespace psep
