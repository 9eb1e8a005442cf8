#include "psep/flow.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "psep/errors.hpp"

namespace psep {

namespace {

std::string step_prefix(std::size_t block, std::size_t flow) {
  return "flow.b" + std::to_string(block) + ".f" + std::to_string(flow);
}

void require_finite(const Tensor& t, const char* where) {
  if (!t.all_finite()) throw NumericalError(std::string("non-finite value in flow ") + where);
}

}  // namespace

FlowModel::FlowModel(const FlowConfig& config, std::uint64_t seed) : config_(config) {
  if (config.blocks == 0 || config.flows == 0) throw ConfigError("flow needs at least one block and one flow");
  Rng rng = stream_rng(seed, 0x466c6f77);
  for (std::size_t b = 0; b < config.blocks; ++b) {
    const std::size_t channels = std::size_t{2} << b;
    const std::size_t half = channels / 2;
    for (std::size_t f = 0; f < config.flows; ++f) {
      const std::string p = step_prefix(b, f);
      Step s;
      s.an_bias = params_.add(p + ".actnorm.bias", Tensor({channels}));
      s.an_logs = params_.add(p + ".actnorm.logs", Tensor({channels}));
      WaveNetSpec spec;
      spec.in_channels = half;
      spec.out_channels = channels;  // [log s; t] for the transformed half
      spec.width = config.width;
      spec.layers = config.layers;
      spec.kernel = config.kernel;
      spec.mode = ad::ConvMode::Centered;
      spec.zero_output = true;
      s.net = WaveNetStack(params_, p + ".wn", spec, rng);
      steps_.push_back(std::move(s));
    }
  }
}

const WaveNetStack& FlowModel::conditioner(std::size_t block, std::size_t flow) const {
  return step(block, flow).net;
}

void FlowModel::check_length(std::size_t n) const {
  const std::size_t m = length_multiple();
  if (n == 0 || n % m != 0) {
    throw ShapeError("flow input length " + std::to_string(n) + " is not a positive multiple of " + std::to_string(m));
  }
}

ad::Var FlowModel::actnorm(ParamBinder& bind, const Step& s, ad::Var x, ad::Var& log_det) const {
  ad::Graph& g = bind.graph();
  const ad::Var logs = bind(s.an_logs);
  const double len = static_cast<double>(g.value(x).length());
  log_det = g.add(log_det, g.affine(g.sum(logs), len, 0.0));
  return g.mul_channel(g.add_channel(x, bind(s.an_bias)), g.exp(logs));
}

ad::Var FlowModel::coupling(ParamBinder& bind, const Step& s, std::size_t parity, ad::Var x, ad::Var& log_det) const {
  ad::Graph& g = bind.graph();
  const ad::Var even = g.even_channels(x);
  const ad::Var odd = g.odd_channels(x);
  const ad::Var cond = parity == 0 ? even : odd;
  const ad::Var moved = parity == 0 ? odd : even;
  const std::size_t half = g.value(cond).channels();
  const ad::Var h = s.net.forward(bind, cond);
  const ad::Var raw = g.channel_range(h, 0, half);
  const ad::Var shift = g.channel_range(h, half, half);
  const ad::Var logs = g.affine(g.tanh(g.affine(raw, 1.0 / kLogScaleBound, 0.0)), kLogScaleBound, 0.0);
  const ad::Var out = g.mul(g.sub(moved, shift), g.exp(g.affine(logs, -1.0, 0.0)));
  log_det = g.sub(log_det, g.sum(logs));
  return parity == 0 ? g.interleave_channels(cond, out) : g.interleave_channels(out, cond);
}

FlowModel::GraphOut FlowModel::build(ParamBinder& bind, ad::Var x) const {
  ad::Graph& g = bind.graph();
  ad::Var log_det = g.constant(Tensor::scalar(0.0));
  for (std::size_t b = 0; b < config_.blocks; ++b) {
    x = g.squeeze(x);
    for (std::size_t f = 0; f < config_.flows; ++f) {
      const Step& s = step(b, f);
      x = actnorm(bind, s, x, log_det);
      x = coupling(bind, s, f % 2, x, log_det);
    }
  }
  const double n = static_cast<double>(g.value(x).size());
  const double norm = -0.5 * n * std::log(2.0 * std::numbers::pi);
  const ad::Var log_pz = g.affine(g.sum_squares(x), -0.5, norm);
  return GraphOut{g.add(log_pz, log_det), x, log_det};
}

FlowForward FlowModel::forward(const Frame& frame) const {
  check_length(frame.size());
  ad::Graph g;
  ParamBinder bind(g, params_, false);
  const GraphOut out = build(bind, g.constant(Tensor::signal(frame.samples)));
  FlowForward result{g.value(out.latent), g.value(out.log_det).item()};
  require_finite(result.latent, "forward pass");
  if (!std::isfinite(result.log_det)) throw NumericalError("non-finite log-determinant");
  return result;
}

Frame FlowModel::inverse(const Tensor& latent, std::uint32_t sample_rate) const {
  const std::size_t top = length_multiple();
  if (latent.rank() != 2 || latent.channels() != top) {
    throw ShapeError("flow latent must have " + std::to_string(top) + " channels, got " +
                     shape_string(latent.shape()));
  }
  Tensor x = latent;
  for (std::size_t b = config_.blocks; b-- > 0;) {
    for (std::size_t f = config_.flows; f-- > 0;) {
      const Step& s = step(b, f);
      const std::size_t parity = f % 2;
      const std::size_t half = x.channels() / 2;
      const std::size_t len = x.length();
      // coupling^-1: moved = z * s + t, conditioner input is unchanged
      ad::Graph g;
      ParamBinder bind(g, params_, false);
      const ad::Var xv = g.constant(x);
      const ad::Var cond = parity == 0 ? g.even_channels(xv) : g.odd_channels(xv);
      const Tensor h = g.value(s.net.forward(bind, cond));
      for (std::size_t c = 0; c < half; ++c) {
        double* row = x.row(2 * c + (1 - parity));
        const double* raw = h.row(c);
        const double* shift = h.row(half + c);
        for (std::size_t t = 0; t < len; ++t) {
          const double logs = kLogScaleBound * std::tanh(raw[t] / kLogScaleBound);
          row[t] = row[t] * std::exp(logs) + shift[t];
        }
      }
      // ActNorm^-1
      const Tensor& bias = params_[s.an_bias].value;
      const Tensor& logs = params_[s.an_logs].value;
      for (std::size_t c = 0; c < x.channels(); ++c) {
        double* row = x.row(c);
        const double inv = std::exp(-logs[c]);
        for (std::size_t t = 0; t < len; ++t) row[t] = row[t] * inv - bias[c];
      }
    }
    ad::Graph g;
    x = g.value(g.unsqueeze(g.constant(x)));
  }
  require_finite(x, "inverse pass");
  return Frame{std::vector<double>(x.storage().begin(), x.storage().end()), sample_rate};
}

double FlowModel::log_density(const Frame& frame) const {
  check_length(frame.size());
  ad::Graph g;
  ParamBinder bind(g, params_, false);
  const GraphOut out = build(bind, g.constant(Tensor::signal(frame.samples)));
  const double total = g.value(out.total_log_prob).item();
  if (!std::isfinite(total)) throw NumericalError("non-finite flow log-density");
  return total / static_cast<double>(frame.size());
}

DensityWithGrad FlowModel::density_and_grad(const Frame& frame) const {
  check_length(frame.size());
  ad::Graph g;
  ParamBinder bind(g, params_, false);
  const ad::Var x = g.input(Tensor::signal(frame.samples));
  const GraphOut out = build(bind, x);
  g.backward(out.total_log_prob);
  DensityWithGrad result;
  result.log_density = g.value(out.total_log_prob).item() / static_cast<double>(frame.size());
  const Tensor grad = g.grad(x);
  result.grad.assign(grad.storage().begin(), grad.storage().end());
  if (!std::isfinite(result.log_density) || !grad.all_finite()) {
    throw NumericalError("non-finite flow log-density gradient");
  }
  return result;
}

std::vector<Frame> FlowModel::sample(Rng& rng, std::size_t n_frames, std::size_t length,
                                     std::uint32_t sample_rate) const {
  check_length(length);
  const std::size_t channels = length_multiple();
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<Frame> out;
  out.reserve(n_frames);
  for (std::size_t i = 0; i < n_frames; ++i) {
    Tensor z({channels, length / channels});
    for (double& v : z.values()) v = normal(rng);
    out.push_back(inverse(z, sample_rate));
  }
  return out;
}

double FlowModel::accumulate_nll_grad(const Frame& frame, double weight) {
  check_length(frame.size());
  ad::Graph g;
  ParamBinder bind(g, params_, true);
  const GraphOut out = build(bind, g.constant(Tensor::signal(frame.samples)));
  const double n = static_cast<double>(frame.size());
  const ad::Var nll = g.affine(out.total_log_prob, -1.0 / n, 0.0);
  const double value = g.value(nll).item();
  if (!std::isfinite(value)) throw NumericalError("non-finite flow training loss");
  g.backward(nll);
  bind.accumulate_grads(params_, weight);
  return value;
}

void FlowModel::initialize_actnorm(std::span<const Frame> batch) {
  if (batch.empty()) throw ConfigError("actnorm initialization needs a non-empty batch");
  std::vector<Tensor> current;
  for (const Frame& f : batch) {
    check_length(f.size());
    current.push_back(Tensor::signal(f.samples));
  }
  for (std::size_t b = 0; b < config_.blocks; ++b) {
    for (Tensor& t : current) {
      ad::Graph g;
      t = g.value(g.squeeze(g.constant(t)));
    }
    for (std::size_t f = 0; f < config_.flows; ++f) {
      const Step& s = step(b, f);
      const std::size_t channels = current.front().channels();
      Tensor& bias = params_[s.an_bias].value;
      Tensor& logs = params_[s.an_logs].value;
      for (std::size_t c = 0; c < channels; ++c) {
        double sum = 0.0, sq = 0.0, count = 0.0;
        for (const Tensor& t : current) {
          for (std::size_t i = 0; i < t.length(); ++i) {
            const double v = t.at(c, i);
            sum += v;
            sq += v * v;
            count += 1.0;
          }
        }
        const double mean = sum / count;
        const double var = std::max(0.0, sq / count - mean * mean);
        bias[c] = -mean;
        logs[c] = -std::log(std::sqrt(var) + 1e-6);
      }
      for (Tensor& t : current) {
        ad::Graph g;
        ParamBinder bind(g, params_, false);
        ad::Var log_det = g.constant(Tensor::scalar(0.0));
        ad::Var h = actnorm(bind, s, g.constant(t), log_det);
        h = coupling(bind, s, f % 2, h, log_det);
        t = g.value(h);
      }
    }
  }
  actnorm_initialized_ = true;
}

}  // namespace psep
