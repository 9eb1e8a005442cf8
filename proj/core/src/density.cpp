#include "psep/density.hpp"

#include <cmath>
#include <numbers>

#include "psep/errors.hpp"

namespace psep {

DensityWithGrad DensityModel::density_and_grad(const Frame&) const {
  throw UnsupportedModel("model family '" + tag().family + "' provides no gradient w.r.t. its input");
}

DiagonalGaussianPrior::DiagonalGaussianPrior(std::vector<double> means, std::vector<double> variances)
    : means_(std::move(means)), vars_(std::move(variances)) {
  if (means_.empty() || vars_.empty()) throw ConfigError("gaussian prior needs means and variances");
  for (double v : vars_) {
    if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError("gaussian prior variance must be positive and finite");
  }
}

void DiagonalGaussianPrior::check_length(std::size_t n) const {
  if ((means_.size() != 1 && means_.size() != n) || (vars_.size() != 1 && vars_.size() != n)) {
    throw ShapeError("gaussian prior parameter length does not match frame length " + std::to_string(n));
  }
}

double DiagonalGaussianPrior::log_density(const Frame& frame) const { return density_and_grad(frame).log_density; }

DensityWithGrad DiagonalGaussianPrior::density_and_grad(const Frame& frame) const {
  frame.validate();
  check_length(frame.size());
  DensityWithGrad out;
  out.grad.resize(frame.size());
  double total = 0.0;
  const double log_two_pi = std::log(2.0 * std::numbers::pi);
  for (std::size_t i = 0; i < frame.size(); ++i) {
    const double d = frame.samples[i] - mean(i);
    const double v = variance(i);
    total += -0.5 * (d * d / v + std::log(v) + log_two_pi);
    out.grad[i] = -d / v;
  }
  out.log_density = total / static_cast<double>(frame.size());
  return out;
}

std::vector<Frame> DiagonalGaussianPrior::sample(Rng& rng, std::size_t n_frames, std::size_t length,
                                                 std::uint32_t sample_rate) const {
  check_length(length);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<Frame> out;
  for (std::size_t f = 0; f < n_frames; ++f) {
    Frame frame{std::vector<double>(length), sample_rate};
    for (std::size_t i = 0; i < length; ++i) frame.samples[i] = mean(i) + std::sqrt(variance(i)) * normal(rng);
    out.push_back(std::move(frame));
  }
  return out;
}

}  // namespace psep
