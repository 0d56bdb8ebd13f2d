// Copyright (C) 2026 SMI contributors
// SPDX-License-Identifier: Apache-2.0

#include "smi/neuralcore/optimizer.hpp"

#include <cmath>

#include "smi/common/error.hpp"
#include "smi/kernels/kernels.hpp"

namespace smi::nn {

namespace {

void adam_inplace(std::vector<float>& p, const std::vector<float>& g, OptState& st, const AdamConfig& cfg) {
  if (g.size() != p.size() || st.m.size() != p.size() || st.v.size() != p.size())
    throw Error(ErrorKind::dimension_mismatch, "optimizer state does not match parameters");
  ++st.step;
  const double t = static_cast<double>(st.step);
  kern::AdamStep s;
  s.lr = static_cast<float>(cfg.learning_rate);
  s.beta1 = static_cast<float>(cfg.beta1);
  s.beta2 = static_cast<float>(cfg.beta2);
  s.eps = static_cast<float>(cfg.eps);
  s.bias1 = static_cast<float>(1.0 - std::pow(cfg.beta1, t));
  s.bias2 = static_cast<float>(1.0 - std::pow(cfg.beta2, t));
  kern::adam_update(p.data(), g.data(), st.m.data(), st.v.data(), p.size(), s);
}

}  // namespace

std::pair<ModelParams<float>, OptState> optimizer_step(const ModelParams<float>& params,
                                                       const ParamGradients<float>& grads,
                                                       const OptState& state, const AdamConfig& cfg) {
  std::pair<ModelParams<float>, OptState> out{params, state};
  adam_inplace(out.first.data, grads.data, out.second, cfg);
  return out;
}

void Adam::apply(ModelParams<float>& params, const ParamGradients<float>& grads) {
  adam_inplace(params.data, grads.data, state_, cfg_);
}

std::unique_ptr<Optimizer> make_optimizer(const std::string& name, std::size_t n, const AdamConfig& cfg) {
  if (name == "adam") return std::make_unique<Adam>(n, cfg);
  throw Error(ErrorKind::config_invalid, "unknown optimizer '" + name + "'");
}

}  // namespace smi::nn
