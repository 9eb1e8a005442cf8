#include <benchmark/benchmark.h>

#include "psep/autodiff.hpp"
#include "psep/flow.hpp"
#include "psep/sgld.hpp"
#include "psep/training.hpp"

namespace {

using namespace psep;

Tensor random_tensor(Tensor::Shape shape, std::uint64_t seed) {
  Tensor t(std::move(shape));
  Rng rng = stream_rng(seed, 0);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (double& v : t.values()) v = normal(rng);
  return t;
}

Frame toy_frame(std::size_t len) {
  return synth_waveform(SourceKind::Sine, SourceParams{220.0, 0.9, 0.3}, 4000, len);
}

void BM_Conv1dForward(benchmark::State& state) {
  const auto channels = static_cast<std::size_t>(state.range(0));
  const Tensor x = random_tensor({channels, 512}, 1);
  const Tensor w = random_tensor({2 * channels, channels, 3}, 2);
  Tensor out;
  for (auto _ : state) {
    ad::conv1d_forward(x, w, nullptr, 4, ad::ConvMode::Causal, out);
    benchmark::DoNotOptimize(out.storage().data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(2 * channels * channels * 3 * 512));
}
BENCHMARK(BM_Conv1dForward)->Arg(16)->Arg(64);

void BM_Conv1dBackward(benchmark::State& state) {
  const auto channels = static_cast<std::size_t>(state.range(0));
  const Tensor x = random_tensor({channels, 512}, 1);
  const Tensor w = random_tensor({2 * channels, channels, 3}, 2);
  for (auto _ : state) {
    ad::Graph g;
    const ad::Var vx = g.input(x);
    const ad::Var vw = g.input(w);
    g.backward(g.sum_squares(g.conv1d(vx, vw, std::nullopt, 4, ad::ConvMode::Causal)));
    benchmark::DoNotOptimize(g.grad(vw).storage().data());
  }
}
BENCHMARK(BM_Conv1dBackward)->Arg(16)->Arg(64);

void BM_FlowLogDensity(benchmark::State& state) {
  const FlowModel flow(FlowConfig::desk(), 0);
  const Frame f = toy_frame(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(flow.log_density(f));
}
BENCHMARK(BM_FlowLogDensity)->Arg(512)->Arg(2048);

void BM_FlowTrainGradient(benchmark::State& state) {
  FlowModel flow(FlowConfig::desk(), 0);
  const Frame f = toy_frame(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) {
    flow.params().zero_grad();
    benchmark::DoNotOptimize(flow.accumulate_nll_grad(f, 1.0));
  }
}
BENCHMARK(BM_FlowTrainGradient)->Arg(512)->Arg(2048);

void BM_FlowInputGradient(benchmark::State& state) {
  const FlowModel flow(FlowConfig::desk(), 0);
  const Frame f = toy_frame(2048);
  for (auto _ : state) benchmark::DoNotOptimize(flow.density_and_grad(f).log_density);
}
BENCHMARK(BM_FlowInputGradient);

void BM_SgldStepGaussian(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  std::vector<DiagonalGaussianPrior> gauss(n, DiagonalGaussianPrior::standard());
  std::vector<const DensityModel*> priors;
  for (const auto& p : gauss) priors.push_back(&p);
  const Frame mix = toy_frame(2048);
  SgldConfig config;
  config.steps = 100;
  for (auto _ : state) benchmark::DoNotOptimize(sgld_separate(mix, priors, config).averaged_steps);
  state.SetItemsProcessed(state.iterations() * 100);
}
BENCHMARK(BM_SgldStepGaussian)->Arg(1)->Arg(4);

}  // namespace

BENCHMARK_MAIN();
