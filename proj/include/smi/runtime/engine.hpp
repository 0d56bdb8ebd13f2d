// Copyright (C) 2026 SMI contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <condition_variable>
#include <cstdint>
#include <mutex>
#include <optional>
#include <string>

#include "json.hpp"
#include "smi/neuralcore/model.hpp"
#include "smi/runtime/mapping.hpp"
#include "smi/sensekit/frame.hpp"
#include "smi/sensekit/geometry.hpp"
#include "smi/synthgen/generator.hpp"

namespace smi::rt {

struct RuntimeConfig {
  PairTable pairs = PairTable::defaults();
  GainTable gains = GainTable::defaults();
  std::size_t smoothing_window = 5;
  std::size_t emit_divider = 5;
  double input_rate_hz = 100.0;
  synth::Side side = synth::Side::left;

  void validate() const;
  nlohmann::json to_json() const;
  /// Keys: flip (axis names), khat, deadzone, saturation (8 numbers each;
  /// a missing deadzone defaults to 0.05 * saturation), smoothing_window,
  /// emit_divider, input_rate_hz, side.
  static RuntimeConfig from_json(const nlohmann::json& j);
};

struct StepOutput {
  std::uint64_t t = 0;       // frames consumed, this one included
  ClassProbs probs{};        // smoothed
  ClassProbs raw_probs{};    // this frame only
  double force_n = 0.0;
  int top_class = 0;
  std::optional<CommandVector> cmd;
};

/// Single-owner streaming classifier + command mapper.
class Engine {
 public:
  Engine(nn::ModelParams<float> params, RuntimeConfig cfg = {},
         sense::PatchGeometry geom = sense::PatchGeometry::default_grid(),
         sense::ModalityMask mask = sense::ModalityMask::full());

  /// Loads a checkpoint (StaleModel / IoFailure / NonFinite propagate) and
  /// applies the modality mask it was trained with.
  static Engine from_checkpoint(const std::string& path, RuntimeConfig cfg = {},
                                sense::PatchGeometry geom = sense::PatchGeometry::default_grid());

  /// Validates the frame (OutOfRange / DimensionMismatch), advances the
  /// model, and every emit_divider-th frame maps a command.
  StepOutput stream_step(const sense::SensorFrame& frame);
  void reset();

  std::uint64_t frames() const { return count_; }
  const RuntimeConfig& config() const { return cfg_; }
  const sense::ModalityMask& mask() const { return mask_; }
  const nn::ModelParams<float>& params() const { return params_; }

 private:
  nn::ModelParams<float> params_;
  RuntimeConfig cfg_;
  sense::PatchGeometry geom_;
  sense::ModalityMask mask_;
  nn::WindowEngine<float> net_;
  nn::BatchState<float> state_;
  SmoothingBuffer smooth_;
  sense::FrameVec raw_{};
  sense::FrameVec input_{};
  std::uint64_t count_ = 0;
};

/// Latest-wins hand-off: the producer never blocks, a slow consumer only
/// sees the newest value.
template <class T>
class Mailbox {
 public:
  void put(T v) {
    {
      std::lock_guard<std::mutex> lk(m_);
      if (slot_) ++dropped_;
      slot_ = std::move(v);
    }
    cv_.notify_one();
  }
  std::optional<T> try_take() {
    std::lock_guard<std::mutex> lk(m_);
    std::optional<T> out = std::move(slot_);
    slot_.reset();
    return out;
  }
  template <class Rep, class Period>
  std::optional<T> take_for(std::chrono::duration<Rep, Period> d) {
    std::unique_lock<std::mutex> lk(m_);
    cv_.wait_for(lk, d, [&] { return slot_.has_value(); });
    std::optional<T> out = std::move(slot_);
    slot_.reset();
    return out;
  }
  std::uint64_t dropped() const {
    std::lock_guard<std::mutex> lk(m_);
    return dropped_;
  }

 private:
  mutable std::mutex m_;
  std::condition_variable cv_;
  std::optional<T> slot_;
  std::uint64_t dropped_ = 0;
};

}  // namespace smi::rt
