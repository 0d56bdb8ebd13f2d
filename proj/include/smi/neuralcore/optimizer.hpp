// Copyright (C) 2026 SMI contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "smi/neuralcore/model.hpp"

namespace smi::nn {

struct AdamConfig {
  double learning_rate = 5e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Moment estimates for one parameter vector.
struct OptState {
  std::uint64_t step = 0;
  std::vector<float> m;
  std::vector<float> v;

  static OptState zeros(std::size_t n) { return {0, std::vector<float>(n), std::vector<float>(n)}; }
};

/// Bias-corrected adaptive-moment update. Returns new parameters and state;
/// the inputs are left untouched.
std::pair<ModelParams<float>, OptState> optimizer_step(const ModelParams<float>& params,
                                                       const ParamGradients<float>& grads,
                                                       const OptState& state, const AdamConfig& cfg);

class Optimizer {
 public:
  virtual ~Optimizer() = default;
  virtual std::string name() const = 0;
  /// Updates `params` in place from `grads`.
  virtual void apply(ModelParams<float>& params, const ParamGradients<float>& grads) = 0;
  virtual std::uint64_t steps() const = 0;
};

class Adam final : public Optimizer {
 public:
  Adam(std::size_t n, AdamConfig cfg) : cfg_(cfg), state_(OptState::zeros(n)) {}
  std::string name() const override { return "adam"; }
  void apply(ModelParams<float>& params, const ParamGradients<float>& grads) override;
  std::uint64_t steps() const override { return state_.step; }
  const OptState& state() const { return state_; }

 private:
  AdamConfig cfg_;
  OptState state_;
};

std::unique_ptr<Optimizer> make_optimizer(const std::string& name, std::size_t n, const AdamConfig& cfg);

}  // namespace smi::nn
