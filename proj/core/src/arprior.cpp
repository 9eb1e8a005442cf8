#include "psep/arprior.hpp"

#include <algorithm>
#include <cmath>

#include "psep/errors.hpp"

namespace psep {

std::size_t receptive_field(const ARConfig& config) {
  std::size_t per_block = 0;
  for (std::size_t l = 0; l < config.layers; ++l) per_block += (config.kernel - 1) << l;
  return 1 + config.blocks * per_block;
}

ARModel::ARModel(const ARConfig& config, std::uint64_t seed) : config_(config) {
  Rng rng = stream_rng(seed, 0x41522d4e);
  WaveNetSpec spec;
  spec.in_channels = 1;
  spec.out_channels = kMuLawClasses;
  spec.width = config.width;
  spec.blocks = config.blocks;
  spec.layers = config.layers;
  spec.kernel = config.kernel;
  spec.mode = ad::ConvMode::Causal;
  net_ = WaveNetStack(params_, "ar.wn", spec, rng);
}

void ARModel::zero_head() {
  params_[net_.output_weight()].value.fill(0.0);
  params_[net_.output_bias()].value.fill(0.0);
}

Tensor ARModel::shifted_input(std::span<const int> classes) {
  if (classes.empty()) throw ShapeError("ar model: empty class sequence");
  Tensor input({1, classes.size()});
  for (std::size_t t = 0; t < classes.size(); ++t) {
    const int c = classes[t];
    if (c < 0 || c >= kMuLawClasses) throw ConfigError("ar model: class " + std::to_string(c) + " out of range");
    if (t + 1 < classes.size()) input[t + 1] = mu_law_value(c);
  }
  return input;
}

ad::Var ARModel::build_logits(ParamBinder& bind, std::span<const int> classes) const {
  return net_.forward(bind, bind.graph().constant(shifted_input(classes)));
}

std::vector<double> ARModel::input_sensitivity(std::span<const int> classes, std::size_t t) const {
  if (t >= classes.size()) throw ShapeError("ar model: step outside the class sequence");
  ad::Graph g;
  ParamBinder bind(g, params_, false);
  const ad::Var x = g.input(shifted_input(classes));
  const ad::Var lg = net_.forward(bind, x);
  Tensor mask({static_cast<std::size_t>(kMuLawClasses), classes.size()});
  for (std::size_t c = 0; c < mask.channels(); ++c) mask.at(c, t) = 1.0;
  g.backward(g.sum(g.mul(lg, g.constant(std::move(mask)))));
  const Tensor dx = g.grad(x);
  // the input at step j + 1 carries class j
  std::vector<double> out(classes.size(), 0.0);
  for (std::size_t j = 0; j + 1 < classes.size(); ++j) out[j] = dx[j + 1];
  return out;
}

Tensor ARModel::logits(std::span<const int> classes) const {
  ad::Graph g;
  ParamBinder bind(g, params_, false);
  return g.value(build_logits(bind, classes));
}

double log_softmax_at(const Tensor& logits, std::size_t t, int cls) {
  double mx = logits.at(0, t);
  for (std::size_t c = 1; c < logits.channels(); ++c) mx = std::max(mx, logits.at(c, t));
  double z = 0.0;
  for (std::size_t c = 0; c < logits.channels(); ++c) z += std::exp(logits.at(c, t) - mx);
  return logits.at(static_cast<std::size_t>(cls), t) - mx - std::log(z);
}

double ARModel::cross_entropy(std::span<const int> classes) const {
  ad::Graph g;
  ParamBinder bind(g, params_, false);
  const ad::Var ce = g.softmax_cross_entropy(build_logits(bind, classes), classes);
  return g.value(ce).item() / static_cast<double>(classes.size());
}

double ARModel::log_density(const Frame& frame) const {
  frame.validate();
  return -cross_entropy(mu_law_encode(frame).classes);
}

double ARModel::accumulate_loss_grad(std::span<const int> classes, double weight) {
  ad::Graph g;
  ParamBinder bind(g, params_, true);
  const ad::Var ce = g.softmax_cross_entropy(build_logits(bind, classes), classes);
  const ad::Var loss = g.affine(ce, 1.0 / static_cast<double>(classes.size()), 0.0);
  const double value = g.value(loss).item();
  if (!std::isfinite(value)) throw NumericalError("non-finite ar training loss");
  g.backward(loss);
  bind.accumulate_grads(params_, weight);
  return value;
}

std::vector<int> ARModel::generate(std::size_t n_samples, Rng& rng, std::span<const int> prefix) const {
  std::vector<int> seq(prefix.begin(), prefix.end());
  const std::size_t rf = receptive_field();
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (std::size_t i = 0; i < n_samples; ++i) {
    // Logits at the last position of `window` predict the next class; a
    // placeholder class is appended since inputs are shifted by one step.
    const std::size_t start = seq.size() > rf ? seq.size() - rf : 0;
    std::vector<int> window(seq.begin() + static_cast<std::ptrdiff_t>(start), seq.end());
    window.push_back(0);
    const Tensor lg = logits(window);
    const std::size_t t = window.size() - 1;
    double mx = lg.at(0, t);
    for (std::size_t c = 1; c < lg.channels(); ++c) mx = std::max(mx, lg.at(c, t));
    std::vector<double> cdf(lg.channels());
    double acc = 0.0;
    for (std::size_t c = 0; c < lg.channels(); ++c) {
      acc += std::exp(lg.at(c, t) - mx);
      cdf[c] = acc;
    }
    const double u = unif(rng) * acc;
    const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
    seq.push_back(static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(it - cdf.begin()), cdf.size() - 1)));
  }
  return std::vector<int>(seq.end() - static_cast<std::ptrdiff_t>(n_samples), seq.end());
}

std::vector<Frame> ARModel::sample(Rng& rng, std::size_t n_frames, std::size_t length,
                                   std::uint32_t sample_rate) const {
  std::vector<Frame> out;
  for (std::size_t i = 0; i < n_frames; ++i) {
    const std::vector<int> classes = generate(length, rng);
    out.push_back(mu_law_decode(classes, sample_rate));
  }
  return out;
}

}  // namespace psep
