// Copyright (C) 2026 SMI contributors
// SPDX-License-Identifier: Apache-2.0
//
// Recurrent contact classifier:
//
//   e_t = tanh(o_t We + be)                        encoder
//   z_t = e_t Wx + h_{t-1} Wh + b                  LSTM gates (i, f, g, o)
//   c_t = f*c_{t-1} + i*g,  h_t = o*tanh(c_t)
//   p_t = softmax(tanh(h_t Wc1 + bc1) Wc2 + bc2)   classifier head
//   [mu, s~] = tanh(h_t Wp1 + bp1) Wp2 + bp2       predictor head (training)
//   sigma = softplus(s~) + 1e-3
//
// Training loss over a window of steps:
//   sum_t -ln p_t[label] - gamma * ln N(o_{t+1}; mu_t, diag(sigma_t^2)),
// with the predictor term dropped on the last step of a trajectory.
// Weights are stored [fan_in x fan_out] row-major.

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace smi::nn {

inline constexpr double kScaleFloor = 1e-3;

struct ArchConfig {
  std::size_t input = 301;
  std::size_t encoder = 256;
  std::size_t hidden = 256;
  std::size_t cls_hidden = 128;
  std::size_t classes = 17;
  std::size_t pred_hidden = 128;

  std::size_t pred_out() const { return 2 * input; }
  /// Exact weight + bias count.
  std::size_t param_count() const;

  nlohmann::json to_json() const;
  static ArchConfig from_json(const nlohmann::json& j);
  friend bool operator==(const ArchConfig&, const ArchConfig&) = default;
};

enum class Tensor : std::size_t {
  enc_w, enc_b,
  lstm_wx, lstm_wh, lstm_b,
  cls_w1, cls_b1, cls_w2, cls_b2,
  pred_w1, pred_b1, pred_w2, pred_b2,
};
inline constexpr std::size_t kTensorCount = 13;

struct TensorSpec {
  std::string_view name;
  std::size_t rows;
  std::size_t cols;
  std::size_t offset;
  std::size_t size() const { return rows * cols; }
};

/// Tensors in storage (and checkpoint) order.
std::array<TensorSpec, kTensorCount> tensor_layout(const ArchConfig& arch);

struct ParamBudget {
  std::size_t min = 500'000;
  std::size_t max = 1'000'000;
  static ParamBudget unbounded() { return {0, SIZE_MAX}; }
};

template <class T>
struct ModelParams {
  ArchConfig arch;
  std::array<TensorSpec, kTensorCount> layout{};
  std::vector<T> data;

  static ModelParams zeros(const ArchConfig& arch);

  std::size_t size() const { return data.size(); }
  std::span<T> tensor(Tensor t) {
    const auto& s = layout[static_cast<std::size_t>(t)];
    return {data.data() + s.offset, s.size()};
  }
  std::span<const T> tensor(Tensor t) const {
    const auto& s = layout[static_cast<std::size_t>(t)];
    return {data.data() + s.offset, s.size()};
  }
  bool all_finite() const;

  template <class U>
  ModelParams<U> cast() const {
    ModelParams<U> out{arch, layout, std::vector<U>(data.begin(), data.end())};
    return out;
  }
};

template <class T>
using ParamGradients = ModelParams<T>;

/// Fan-in scaled uniform weights U(-sqrt(3/fan_in), sqrt(3/fan_in)), zero
/// biases, forget-gate bias +1. Deterministic in `seed`. Throws
/// BudgetViolation when the parameter count falls outside `budget`.
template <class T>
ModelParams<T> init_params(const ArchConfig& arch, std::uint64_t seed, ParamBudget budget = {});

template <class T>
struct HiddenState {
  std::vector<T> h;
  std::vector<T> c;

  static HiddenState zeros(std::size_t hidden) { return {std::vector<T>(hidden), std::vector<T>(hidden)}; }
  friend bool operator==(const HiddenState&, const HiddenState&) = default;
};

template <class T>
struct GaussPred {
  std::vector<T> mean;
  std::vector<T> scale;
};

template <class T>
struct StepResult {
  HiddenState<T> state;
  std::vector<T> probs;
  GaussPred<T> pred;
};

/// One full forward step (encoder, LSTM, both heads). Throws NonFinite.
template <class T>
StepResult<T> step(std::span<const T> frame, const HiddenState<T>& state, const ModelParams<T>& params);

struct TrainHyper {
  double gamma = 0.02;
  double learning_rate = 5e-4;
  std::uint64_t seed = 0;
};

/// A trajectory as the network sees it: `frames` is steps x input,
/// row-major, already masked/aligned.
template <class T>
struct SequenceView {
  std::span<const T> frames;
  std::size_t steps;
  int label;
};

struct StepRange {
  std::size_t begin;
  std::size_t end;  // exclusive
};

template <class T>
struct LossResult {
  double loss = 0.0;
  double cls_loss = 0.0;
  double pred_nll = 0.0;  // sum of -ln p_p (unweighted)
  HiddenState<T> state;
};

template <class T>
LossResult<T> sequence_loss(const SequenceView<T>& seq, const ModelParams<T>& params,
                            const TrainHyper& hyper, const HiddenState<T>& start,
                            StepRange window);

/// Exact gradient of sequence_loss over the window; no gradient flows into
/// `start` (truncated backpropagation through time).
template <class T>
ParamGradients<T> gradients(const SequenceView<T>& seq, const ModelParams<T>& params,
                            const TrainHyper& hyper, const HiddenState<T>& start,
                            StepRange window);

// ---------------------------------------------------------------------------
// Batched window engine used by the trainer. Rows are time-major:
// row r = t * batch + b.

template <class T>
struct BatchState {
  std::size_t batch = 0;
  std::size_t hidden = 0;
  std::vector<T> h;  // batch x hidden
  std::vector<T> c;

  static BatchState zeros(std::size_t batch, std::size_t hidden) {
    return {batch, hidden, std::vector<T>(batch * hidden), std::vector<T>(batch * hidden)};
  }
};

template <class T>
struct WindowInput {
  std::size_t batch = 0;
  std::size_t steps = 0;
  // (steps + 1) x batch x input when has_next, else steps x batch x input.
  std::span<const T> frames;
  // Next-observation target exists for the last step of the window.
  bool has_next = false;
  std::span<const int> labels;  // batch
  // Per input channel: 0 drops it from the predictor likelihood (masked
  // modalities). Empty means every channel counts.
  std::span<const unsigned char> pred_channels = {};
};

struct WindowStats {
  double loss = 0.0;
  double cls_loss = 0.0;
  double pred_nll = 0.0;
  std::size_t correct = 0;
  std::size_t rows = 0;
};

enum class Pass { classify, loss, train };

template <class T>
class WindowEngine {
 public:
  explicit WindowEngine(const ArchConfig& arch) : arch_(arch) {}

  /// Runs the window, advances `state` to the last step, and for
  /// Pass::train accumulates gradients into `grads`. Writes per-row argmax
  /// to `argmax` when non-empty (size steps * batch; ties -> lowest index).
  WindowStats run(Pass pass, const ModelParams<T>& params, const WindowInput<T>& in,
                  double gamma, BatchState<T>& state, ParamGradients<T>* grads,
                  std::span<int> argmax = {});

  /// Class probabilities of the last run, rows x classes.
  std::span<const T> probs() const { return {p_.data(), rows_ * arch_.classes}; }
  /// Predictor mean / scale of row r after a Pass::loss run.
  std::span<const T> pred_mean(std::size_t r) const { return {o_.data() + r * arch_.pred_out(), arch_.input}; }
  std::span<const T> pred_scale(std::size_t r) const { return {s_.data() + r * arch_.input, arch_.input}; }

 private:
  void reserve(std::size_t rows, std::size_t batch, bool with_pred);

  ArchConfig arch_;
  std::size_t rows_ = 0;
  std::vector<T> e_, g_, cext_, tc_, hext_;
  std::vector<T> u_, p_, v_, o_, s_;
  std::vector<T> dhs_, du_, dv_, dh_, dc_;
  std::vector<unsigned char> use_;
};

/// Per-row argmax with lowest-index tie break.
template <class T>
int argmax(std::span<const T> row);

}  // namespace smi::nn
