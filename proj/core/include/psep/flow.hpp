#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "psep/density.hpp"
#include "psep/params.hpp"
#include "psep/wavenet.hpp"

namespace psep {

struct FlowConfig {
  std::size_t blocks = 3;  // squeeze + flows, repeated
  std::size_t flows = 4;   // ActNorm -> affine coupling -> parity flip
  std::size_t layers = 6;  // conditioner depth
  std::size_t kernel = 3;
  std::size_t width = 16;

  static FlowConfig desk() { return {}; }
  static FlowConfig paper_toy() { return {4, 6, 10, 3, 32}; }
};

/// Log-scale outputs of the coupling conditioner are squashed to ±kLogScaleBound.
inline constexpr double kLogScaleBound = 7.0;

struct FlowForward {
  Tensor latent;         // (2^blocks, L / 2^blocks)
  double log_det = 0.0;  // log |det dz/dx|, nats
};

/// Coupling-layer normalizing flow over 1-D frames.
///
/// Forward runs data -> latent: each block squeezes time into channels, then
/// applies `flows` steps of ActNorm, affine coupling z_b = (x_b - t(x_a)) /
/// s(x_a), and a flip of which channel parity conditions the next coupling.
/// The latent prior is a standard normal.
class FlowModel final : public DensityModel {
 public:
  FlowModel(const FlowConfig& config, std::uint64_t seed);

  const FlowConfig& config() const { return config_; }
  const ModelTag& tag() const override { return tag_; }
  ModelTag& tag() { return tag_; }
  ParameterSet& params() { return params_; }
  const ParameterSet& params() const { return params_; }
  std::size_t length_multiple() const override { return std::size_t{1} << config_.blocks; }

  FlowForward forward(const Frame& frame) const;
  /// Exact inverse of forward(); latent must have forward()'s output shape.
  Frame inverse(const Tensor& latent, std::uint32_t sample_rate) const;

  /// (log N(z; 0, I) + log_det) / L.
  double log_density(const Frame& frame) const override;
  bool differentiable() const override { return true; }
  DensityWithGrad density_and_grad(const Frame& frame) const override;
  std::vector<Frame> sample(Rng& rng, std::size_t n_frames, std::size_t length,
                            std::uint32_t sample_rate) const override;

  /// Adds weight * d(NLL per sample)/dθ to the parameter gradients; returns the NLL per sample.
  double accumulate_nll_grad(const Frame& frame, double weight);

  /// Data-dependent ActNorm initialization from a batch: each layer's
  /// bias/scale is set so its input is standardized per channel.
  void initialize_actnorm(std::span<const Frame> batch);
  bool actnorm_initialized() const { return actnorm_initialized_; }
  void set_actnorm_initialized(bool v) { actnorm_initialized_ = v; }

  /// Parameter indices of one coupling's conditioner output projection
  /// (channels [0, C/2) are raw log-scales, [C/2, C) translations).
  const WaveNetStack& conditioner(std::size_t block, std::size_t flow) const;

 private:
  struct Step {
    std::size_t an_bias = 0, an_logs = 0;
    WaveNetStack net;
  };
  struct GraphOut {
    ad::Var total_log_prob;
    ad::Var latent;
    ad::Var log_det;
  };

  const Step& step(std::size_t block, std::size_t flow) const { return steps_[block * config_.flows + flow]; }
  void check_length(std::size_t n) const;
  ad::Var actnorm(ParamBinder& bind, const Step& s, ad::Var x, ad::Var& log_det) const;
  ad::Var coupling(ParamBinder& bind, const Step& s, std::size_t parity, ad::Var x, ad::Var& log_det) const;
  GraphOut build(ParamBinder& bind, ad::Var x) const;

  FlowConfig config_;
  ModelTag tag_{"flow", std::nullopt, 0.0};
  ParameterSet params_;
  std::vector<Step> steps_;
  bool actnorm_initialized_ = false;
};

}  // namespace psep
