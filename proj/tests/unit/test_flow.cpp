#include <Eigen/Dense>
#include <cmath>
#include <numbers>

#include "doctest.h"
#include "oracles.hpp"
#include "psep/errors.hpp"
#include "psep/flow.hpp"

using namespace psep;

namespace {

FlowConfig tiny_config(std::size_t blocks, std::size_t flows) {
  FlowConfig c;
  c.blocks = blocks;
  c.flows = flows;
  c.layers = 2;
  c.kernel = 3;
  c.width = 4;
  return c;
}

// Replaces every parameter with N(0, std²) draws so couplings and ActNorm are
// far from the identity.
void randomize(FlowModel& flow, unsigned seed, double std) {
  unsigned k = seed;
  for (Parameter& p : flow.params().all()) {
    const auto v = oracle::normal_vector(p.value.size(), ++k, std);
    p.value.storage() = v;
  }
}

double standard_normal_log_density(const std::vector<double>& x) {
  double s = 0.0;
  for (double v : x) s += -0.5 * v * v - 0.5 * std::log(2.0 * std::numbers::pi);
  return s / static_cast<double>(x.size());
}

std::vector<double> flat_latent(const FlowModel& flow, const std::vector<double>& x) {
  return flow.forward(Frame{x, 8000}).latent.storage();
}

}  // namespace

TEST_SUITE("flow") {

TEST_CASE("a freshly built flow is a permutation with unit Jacobian") {
  const FlowModel flow(FlowConfig::desk(), 3);
  const auto x = oracle::normal_vector(64, 4);
  const FlowForward out = flow.forward(Frame{x, 4000});
  CHECK(out.log_det == 0.0);
  CHECK(out.latent.channels() == 8);
  CHECK(flow.log_density(Frame{x, 4000}) == doctest::Approx(standard_normal_log_density(x)).epsilon(1e-12));
}

TEST_CASE("inverse undoes forward") {
  for (unsigned trial = 0; trial < 10; ++trial) {
    FlowModel flow(tiny_config(2 + trial % 2, 2 + trial % 3), trial);
    randomize(flow, 100 * trial, 0.3);
    const auto x = oracle::normal_vector(64, trial);
    const FlowForward fw = flow.forward(Frame{x, 4000});
    const Frame back = flow.inverse(fw.latent, 4000);
    double err = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) err = std::max(err, std::abs(back.samples[i] - x[i]));
    CHECK(err < 1e-9);
  }
}

TEST_CASE("log-determinant equals the brute-force Jacobian determinant") {
  for (unsigned trial = 0; trial < 4; ++trial) {
    FlowModel flow(tiny_config(2, 3), 10 + trial);
    randomize(flow, 7 * trial + 1, 0.4);
    const auto x = oracle::normal_vector(8, 20 + trial);
    Eigen::MatrixXd J(8, 8);
    const double eps = 1e-6;
    for (int j = 0; j < 8; ++j) {
      auto up = x, down = x;
      up[static_cast<std::size_t>(j)] += eps;
      down[static_cast<std::size_t>(j)] -= eps;
      const auto zu = flat_latent(flow, up), zd = flat_latent(flow, down);
      for (int i = 0; i < 8; ++i) J(i, j) = (zu[static_cast<std::size_t>(i)] - zd[static_cast<std::size_t>(i)]) / (2 * eps);
    }
    const double brute = std::log(std::abs(J.fullPivLu().determinant()));
    const double analytic = flow.forward(Frame{x, 8000}).log_det;
    CHECK(std::abs(analytic - brute) / std::max(1.0, std::abs(brute)) < 1e-6);
  }
}

TEST_CASE("input gradient matches finite differences") {
  FlowModel flow(tiny_config(2, 2), 5);
  randomize(flow, 55, 0.3);
  const auto x = oracle::normal_vector(16, 6);
  const DensityWithGrad dg = flow.density_and_grad(Frame{x, 8000});
  auto total = [&](const std::vector<double>& v) { return flow.log_density(Frame{v, 8000}) * 16.0; };
  CHECK(oracle::scaled_error(dg.grad, oracle::numeric_gradient(total, x, 1e-5)) < 1e-6);
  CHECK(dg.log_density == doctest::Approx(flow.log_density(Frame{x, 8000})).epsilon(1e-14));
}

TEST_CASE("parameter gradient matches finite differences") {
  FlowModel flow(tiny_config(2, 2), 8);
  randomize(flow, 80, 0.3);
  const auto x = oracle::normal_vector(16, 9);
  const Frame frame{x, 8000};
  flow.params().zero_grad();
  flow.accumulate_nll_grad(frame, 1.0);
  for (std::size_t pi = 0; pi < flow.params().size(); pi += 3) {
    Parameter& p = flow.params()[pi];
    const double analytic = p.grad[0];
    const double keep = p.value[0];
    const double eps = 1e-6;
    p.value[0] = keep + eps;
    const double up = -flow.log_density(frame);
    p.value[0] = keep - eps;
    const double down = -flow.log_density(frame);
    p.value[0] = keep;
    const double numeric = (up - down) / (2 * eps);
    CHECK(std::abs(analytic - numeric) <= 1e-6 * std::max(1.0, std::abs(numeric)));
  }
}

TEST_CASE("ActNorm initialization standardizes the first batch") {
  FlowModel flow(tiny_config(1, 1), 2);
  std::vector<Frame> batch;
  for (unsigned i = 0; i < 4; ++i) {
    auto v = oracle::normal_vector(256, 30 + i, 3.0);
    for (double& s : v) s += 1.5;
    batch.push_back(Frame{v, 8000});
  }
  flow.initialize_actnorm(batch);
  CHECK(flow.actnorm_initialized());
  // zero-initialized coupling is the identity, so the latent is the ActNorm output
  for (std::size_t c = 0; c < 2; ++c) {
    double sum = 0.0, sq = 0.0, n = 0.0;
    for (const Frame& f : batch) {
      const Tensor z = flow.forward(f).latent;
      for (std::size_t t = 0; t < z.length(); ++t) {
        sum += z.at(c, t);
        sq += z.at(c, t) * z.at(c, t);
        n += 1.0;
      }
    }
    CHECK(std::abs(sum / n) < 1e-9);
    CHECK(sq / n == doctest::Approx(1.0).epsilon(1e-5));
  }
}

TEST_CASE("samples map back to their latents") {
  FlowModel flow(tiny_config(2, 2), 12);
  randomize(flow, 120, 0.2);
  Rng rng = stream_rng(1, 0);
  const auto frames = flow.sample(rng, 3, 32, 4000);
  REQUIRE(frames.size() == 3);
  for (const Frame& f : frames) {
    CHECK(f.size() == 32);
    CHECK(f.sample_rate == 4000);
    CHECK(std::isfinite(flow.log_density(f)));
  }
}

TEST_CASE("length must be a multiple of 2^blocks") {
  const FlowModel flow(tiny_config(3, 1), 0);
  CHECK(flow.length_multiple() == 8);
  CHECK_THROWS_AS(flow.log_density(Frame{std::vector<double>(12, 0.0), 8000}), ShapeError);
  CHECK_THROWS_AS(flow.inverse(Tensor({4, 3}), 8000), ShapeError);
}

TEST_CASE("coupling log-scale stays bounded") {
  // huge conditioner outputs are squashed to |log s| <= 7 per element
  FlowModel flow(tiny_config(1, 1), 0);
  randomize(flow, 1, 30.0);
  const auto x = oracle::normal_vector(16, 2);
  const FlowForward out = flow.forward(Frame{x, 8000});
  const auto& logs = flow.params().get("flow.b0.f0.actnorm.logs").value;
  const double actnorm = 8.0 * (logs[0] + logs[1]);
  CHECK(std::abs(out.log_det - actnorm) <= 7.0 * 8.0 + 1e-9);
}

}  // TEST_SUITE
