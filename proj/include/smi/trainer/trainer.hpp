// Copyright (C) 2026 SMI contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <atomic>
#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "smi/neuralcore/model.hpp"
#include "smi/sensekit/frame.hpp"
#include "smi/synthgen/generator.hpp"

namespace smi::train {

using synth::Dataset;

struct TrainConfig {
  double split_ratio = 0.8;
  std::size_t batch_size = 128;
  std::size_t update_window = 100;
  std::size_t epochs = 200;
  nn::TrainHyper hyper;
  sense::ModalityMask mask;
  std::string optimizer = "adam";
  std::size_t checkpoint_every = 0;  // epochs; 0 writes only the final checkpoint
  std::string checkpoint_path;       // empty: no checkpoints
  std::size_t eval_every = 1;        // validation cadence in epochs

  void validate() const;
  nlohmann::json to_json() const;
  static TrainConfig from_json(const nlohmann::json& j);
};

using Confusion = std::array<std::array<std::uint64_t, kNumClasses>, kNumClasses>;

struct EpochRecord {
  std::size_t epoch = 0;
  double train_loss = 0.0;  // per step
  double train_acc = 0.0;
  double valid_loss = 0.0;  // per step
  double valid_acc = 0.0;
  double seconds = 0.0;
};

struct Metrics {
  double acc = 0.0;
  std::array<double, kNumClasses> per_class_acc{};
  Confusion confusion{};  // [label][predicted]
  std::vector<EpochRecord> curve;
  std::size_t n_valid = 0;
  std::size_t steps = 0;
  double loss = 0.0;  // per step, when computed

  nlohmann::json to_json() const;
};

/// Deterministic stratified split; |valid| = round((1 - ratio) N) and each
/// class gets within one of its proportional share. TooSmall when N < 5.
std::pair<Dataset, Dataset> split_dataset(Dataset d, double ratio, std::uint64_t seed);

/// Frame-level accuracy over every (trajectory, step) pair, prefix steps
/// included; argmax ties go to the lowest class index.
Metrics accuracy(const nn::ModelParams<float>& params, const Dataset& d, const sense::ModalityMask& mask,
                 bool with_loss = false, double gamma = 0.0, std::size_t batch = 128, std::size_t window = 100);

/// Metrics from externally supplied per-step predictions (pred[n][t]).
Metrics accuracy_from_predictions(const Dataset& d, const std::vector<std::vector<int>>& pred);

/// Frames as the network consumes them: right-side streams mirrored into
/// the left frame, then masked.
std::vector<float> prepare_frames(const synth::LabeledTrajectory& t, const sense::ModalityMask& mask,
                                  const sense::PatchGeometry& geom);

using EpochCallback = std::function<void(const EpochRecord&)>;

struct TrainResult {
  nn::ModelParams<float> params;
  Metrics metrics;  // final validation metrics plus the per-epoch curve
  bool interrupted = false;
};

/// Trains in place of `params`. NonFinite aborts; an interrupt request
/// writes a checkpoint (when configured) and throws Interrupted.
TrainResult train(const Dataset& train_set, const Dataset& valid_set, const TrainConfig& cfg,
                  nn::ModelParams<float> params, const EpochCallback& on_epoch = {});

/// Set from a signal handler; polled between update windows.
void request_interrupt() noexcept;
void clear_interrupt() noexcept;
bool interrupt_requested() noexcept;

// Ablation harness -----------------------------------------------------------

struct AblationCondition {
  std::string name;
  sense::ModalityMask mask;
  bool support_subset = false;  // trains on the torque-subset datasets
  synth::SupportKind support = synth::SupportKind::soft;
  std::size_t batch_size = 0;  // 0 keeps the base config's batch size
};

/// full, no-force, no-prox, no-accel on the full soft dataset; soft and
/// rigid full-modality runs on the six-class torque subset, in batches of
/// 32 (the 120 training trajectories would otherwise form one batch).
std::vector<AblationCondition> default_conditions();

struct AblationRun {
  std::string condition;
  std::uint64_t seed = 0;
  Metrics metrics;
};

struct AblationReport {
  std::vector<AblationRun> runs;

  /// Per condition: mean and sample sd of the validation ACC curve.
  nlohmann::json summary() const;
  nlohmann::json to_json() const;
  /// epoch,split,condition,seed,acc,loss rows.
  std::string curves_csv() const;
};

struct AblationData {
  const Dataset* soft = nullptr;
  const Dataset* soft_subset = nullptr;
  const Dataset* rigid_subset = nullptr;
};

using RunCallback = std::function<void(const std::string& condition, std::uint64_t seed, const EpochRecord&)>;

/// Needs at least three seeds; the seed drives split, initialization and
/// batch order.
AblationReport ablation_suite(const TrainConfig& base, const AblationData& data,
                              const std::vector<std::uint64_t>& seeds,
                              const std::vector<AblationCondition>& conditions = default_conditions(),
                              const nn::ArchConfig& arch = {}, const RunCallback& progress = {});

/// Per-epoch CSV for one run.
std::string curve_csv(const Metrics& m, const std::string& condition, std::uint64_t seed);

}  // namespace smi::train
