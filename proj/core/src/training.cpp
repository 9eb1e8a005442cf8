#include "psep/training.hpp"

#include <chrono>
#include <cmath>
#include <deque>
#include <fstream>
#include <limits>
#include <numeric>

#include "psep/adam.hpp"
#include "psep/binary_io.hpp"
#include "psep/errors.hpp"
#include "psep/report.hpp"

namespace psep {

namespace {

constexpr std::size_t kConvergenceWindow = 200;
constexpr double kConvergenceTolerance = 1e-3;
constexpr std::uint64_t kBatchStream = 0x42415443;  // per-step stream namespace

}  // namespace

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be positive");
  if (!(schedule_gamma > 0.0 && schedule_gamma < 1.0)) throw ConfigError("schedule_gamma must lie in (0, 1)");
  if (batch_size == 0) throw ConfigError("batch_size must be positive");
  if (total_steps == 0) throw ConfigError("total_steps must be positive");
}

double lr_schedule(std::size_t step, const TrainConfig& config) {
  const std::size_t total = std::max<std::size_t>(config.total_steps, 1);
  const std::size_t phases = config.schedule_steps + 1;
  const std::size_t passed = std::min(config.schedule_steps, step * phases / total);
  return config.learning_rate * std::pow(config.schedule_gamma, static_cast<double>(passed));
}

void write_telemetry_csv(std::span<const TelemetryRow> rows, const std::filesystem::path& path, bool append) {
  const bool header = !append || !std::filesystem::exists(path);
  std::ofstream out(path, append ? std::ios::app : std::ios::trunc);
  if (!out) throw Error("cannot write telemetry " + path.string());
  if (header) out << "step,lr,loss,wall_ms\n";
  for (const TelemetryRow& r : rows) {
    out << r.step << ',' << format_double(r.lr) << ',' << format_double(r.loss) << ',' << format_double(r.wall_ms)
        << '\n';
  }
}

std::vector<Frame> draw_batch(std::span<const Frame> frames, std::size_t step, const TrainConfig& config,
                              double sigma, std::size_t length_multiple) {
  if (frames.empty()) throw ConfigError("no training frames");
  Rng rng = stream_rng(config.seed ^ kBatchStream, step);
  std::uniform_int_distribution<std::size_t> pick(0, frames.size() - 1);
  std::vector<Frame> batch;
  batch.reserve(config.batch_size);
  for (std::size_t i = 0; i < config.batch_size; ++i) {
    const Frame& src = frames[pick(rng)];
    std::size_t len = src.size();
    if (config.crop_len > 0 && config.crop_len < len) len = config.crop_len;
    len -= len % length_multiple;
    if (len == 0) throw ConfigError("training crop shorter than the model's length multiple");
    std::uniform_int_distribution<std::size_t> offset(0, src.size() - len);
    const std::size_t start = len < src.size() ? offset(rng) : 0;
    Frame f{std::vector<double>(src.samples.begin() + static_cast<std::ptrdiff_t>(start),
                                src.samples.begin() + static_cast<std::ptrdiff_t>(start + len)),
            src.sample_rate};
    batch.push_back(add_gaussian_noise(f, sigma, rng));
  }
  return batch;
}

double batch_loss(const DensityModel& model, std::span<const Frame> batch) {
  double total = 0.0;
  for (const Frame& f : batch) total += -model.log_density(f);
  return total / static_cast<double>(batch.size());
}

namespace {

// One optimization step on a batch; returns the batch loss before the update.
double train_step(DensityModel& model, std::span<const Frame> batch) {
  const double w = 1.0 / static_cast<double>(batch.size());
  double loss = 0.0;
  if (auto* flow = dynamic_cast<FlowModel*>(&model)) {
    if (!flow->actnorm_initialized()) flow->initialize_actnorm(batch);
    flow->params().zero_grad();
    for (const Frame& f : batch) loss += w * flow->accumulate_nll_grad(f, w);
  } else if (auto* ar = dynamic_cast<ARModel*>(&model)) {
    ar->params().zero_grad();
    for (const Frame& f : batch) loss += w * ar->accumulate_loss_grad(mu_law_encode(f).classes, w);
  } else {
    throw UnsupportedModel("training supports flow and ar models only");
  }
  return loss;
}

ParameterSet& params_of(DensityModel& model) {
  if (auto* flow = dynamic_cast<FlowModel*>(&model)) return flow->params();
  return dynamic_cast<ARModel&>(model).params();
}

Checkpoint checkpoint_of(const DensityModel& model) {
  if (const auto* flow = dynamic_cast<const FlowModel*>(&model)) return to_checkpoint(*flow);
  return to_checkpoint(dynamic_cast<const ARModel&>(model));
}

struct LoopOptions {
  double sigma = 0.0;
  bool stop_on_convergence = false;
};

TrainResult run_loop(std::unique_ptr<DensityModel> model, std::span<const Frame> frames, const TrainConfig& config,
                     const LoopOptions& opts, const ProgressFn& progress) {
  config.validate();
  TrainResult result;
  ParameterSet& params = params_of(*model);
  Adam adam(params);
  const auto t0 = std::chrono::steady_clock::now();
  std::deque<double> window;
  double prev_window_mean = std::numeric_limits<double>::quiet_NaN();
  int slow_checks = 0;
  for (std::size_t step = 0; step < config.total_steps; ++step) {
    const std::vector<Frame> batch = draw_batch(frames, step, config, opts.sigma, model->length_multiple());
    const double loss = train_step(*model, batch);
    if (!std::isfinite(loss)) {
      throw NumericalError("training diverged at step " + std::to_string(step) + " (loss " + std::to_string(loss) +
                           ")");
    }
    const double lr = lr_schedule(step, config);
    adam.step(params, lr);
    if (!params.all_finite()) throw NumericalError("non-finite parameters after step " + std::to_string(step));
    const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    result.telemetry.push_back(TelemetryRow{step, lr, loss, ms});
    if (progress) progress(result.telemetry.back());
    result.steps_run = step + 1;

    if (opts.stop_on_convergence) {
      window.push_back(loss);
      if (window.size() > kConvergenceWindow) window.pop_front();
      if (result.steps_run % kConvergenceWindow == 0) {
        const double mean = std::accumulate(window.begin(), window.end(), 0.0) / static_cast<double>(window.size());
        if (std::isfinite(prev_window_mean)) {
          const double improvement = (prev_window_mean - mean) / std::max(std::abs(prev_window_mean), 1e-12);
          slow_checks = improvement < kConvergenceTolerance ? slow_checks + 1 : 0;
          if (slow_checks >= 2) {
            result.converged = true;
            break;
          }
        }
        prev_window_mean = mean;
      }
    }
  }
  params.round_to_f32();
  result.checkpoint = checkpoint_of(*model);
  result.checkpoint.meta["steps"] = std::to_string(result.steps_run);
  result.checkpoint.meta["seed"] = std::to_string(config.seed);
  result.model = std::move(model);
  return result;
}

}  // namespace

TrainResult train_prior(ModelKind kind, SourceKind source, std::span<const Frame> frames, const TrainConfig& config,
                        const ProgressFn& progress) {
  // every (family, source) pair gets its own streams under one run seed
  TrainConfig local = config;
  local.seed = stream_rng(config.seed, 1 + 16 * static_cast<std::uint64_t>(kind) +
                                           static_cast<std::uint64_t>(source))();
  std::unique_ptr<DensityModel> model;
  if (kind == ModelKind::Flow) {
    auto flow = std::make_unique<FlowModel>(local.flow, local.seed);
    flow->tag().source = source;
    model = std::move(flow);
  } else {
    auto ar = std::make_unique<ARModel>(local.ar, local.seed);
    ar->tag().source = source;
    model = std::move(ar);
  }
  TrainResult result = run_loop(std::move(model), frames, local, LoopOptions{0.0, false}, progress);
  result.checkpoint.meta["seed"] = std::to_string(config.seed);
  return result;
}

TrainResult finetune_noisy(const Checkpoint& base, double sigma, std::span<const Frame> frames,
                           const TrainConfig& config, const ProgressFn& progress) {
  if (!(sigma > 0.0)) throw ConfigError("fine-tuning needs sigma > 0 (use train for the noise-free prior)");
  if (base.sigma_index != 0) throw ConfigError("fine-tuning must start from a noise-free (sigma = 0) checkpoint");
  std::unique_ptr<DensityModel> model = model_from_checkpoint(base);
  if (auto* flow = dynamic_cast<FlowModel*>(model.get())) {
    flow->tag().sigma = sigma;
  } else {
    dynamic_cast<ARModel&>(*model).tag().sigma = sigma;
  }
  const std::string base_hash = base.content_hash();
  TrainConfig local = config;
  local.seed = stream_rng(config.seed, io::fnv1a(base_hash + "/" + format_double(sigma)))();
  TrainResult result = run_loop(std::move(model), frames, local, LoopOptions{sigma, true}, progress);
  result.checkpoint.meta["seed"] = std::to_string(config.seed);
  result.checkpoint.meta["base_hash"] = base_hash;
  return result;
}

}  // namespace psep
