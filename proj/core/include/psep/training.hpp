#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "psep/checkpoint.hpp"
#include "psep/signal.hpp"

namespace psep {

struct TrainConfig {
  double learning_rate = 1e-4;
  double schedule_gamma = 0.6;
  std::size_t schedule_steps = 5;  // number of decays, equally spaced
  std::size_t batch_size = 4;
  std::size_t total_steps = 2000;
  std::uint64_t seed = 0;
  /// Random crop length per training frame; 0 trains on whole frames.
  std::size_t crop_len = 0;
  FlowConfig flow;
  ARConfig ar;

  void validate() const;
};

/// lr0 * gamma^k, k = passed milestones; milestone i sits at i * total / (steps + 1).
double lr_schedule(std::size_t step, const TrainConfig& config);

struct TelemetryRow {
  std::size_t step = 0;
  double lr = 0.0;
  double loss = 0.0;
  double wall_ms = 0.0;
};

void write_telemetry_csv(std::span<const TelemetryRow> rows, const std::filesystem::path& path, bool append = false);

struct TrainResult {
  std::unique_ptr<DensityModel> model;  // FlowModel or ARModel, parameters rounded to f32
  Checkpoint checkpoint;
  std::vector<TelemetryRow> telemetry;
  std::size_t steps_run = 0;
  bool converged = false;  // fine-tuning only
};

/// Deterministic training batch for `step`: frames drawn uniformly, optionally
/// cropped, with N(0, sigma²) noise added when sigma > 0.
std::vector<Frame> draw_batch(std::span<const Frame> frames, std::size_t step, const TrainConfig& config,
                              double sigma, std::size_t length_multiple);

/// Mean training loss of a batch: NLL nats/sample (flow) or cross-entropy (ar).
double batch_loss(const DensityModel& model, std::span<const Frame> batch);

using ProgressFn = std::function<void(const TelemetryRow&)>;

/// Trains a fresh prior on one source's frames; checkpoint tagged with sigma = 0.
TrainResult train_prior(ModelKind kind, SourceKind source, std::span<const Frame> frames, const TrainConfig& config,
                        const ProgressFn& progress = {});

/// Continues training a noise-free checkpoint on frames with fresh N(0, sigma²)
/// noise per step. Stops early once the 200-step moving-average loss improves
/// by less than 0.1% on two consecutive checks.
TrainResult finetune_noisy(const Checkpoint& base, double sigma, std::span<const Frame> frames,
                           const TrainConfig& config, const ProgressFn& progress = {});

}  // namespace psep
