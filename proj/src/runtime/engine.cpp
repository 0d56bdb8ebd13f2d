// Copyright (C) 2026 SMI contributors
// SPDX-License-Identifier: Apache-2.0

#include "smi/runtime/engine.hpp"

#include <set>

#include "smi/common/error.hpp"
#include "smi/neuralcore/checkpoint.hpp"

namespace smi::rt {

void RuntimeConfig::validate() const {
  pairs.validate();
  gains.validate();
  if (smoothing_window < 1) throw Error(ErrorKind::config_invalid, "smoothing_window must be positive");
  if (emit_divider < 1) throw Error(ErrorKind::config_invalid, "emit_divider must be positive");
  if (!(input_rate_hz > 0.0)) throw Error(ErrorKind::config_invalid, "input_rate_hz must be positive");
}

nlohmann::json RuntimeConfig::to_json() const {
  nlohmann::json pj = nlohmann::json::object();
  for (std::size_t i = 0; i < kAxes; ++i)
    pj[std::string(axis_name(i))] = {class_name(pairs.pairs[i].positive), class_name(pairs.pairs[i].negative)};
  return {{"pairs", pj},
          {"khat", gains.khat},
          {"deadzone", gains.deadzone},
          {"saturation", gains.saturation},
          {"smoothing_window", smoothing_window},
          {"emit_divider", emit_divider},
          {"input_rate_hz", input_rate_hz},
          {"side", synth::side_name(side)}};
}

RuntimeConfig RuntimeConfig::from_json(const nlohmann::json& j) {
  static const std::set<std::string> known = {"flip", "pairs", "khat", "deadzone", "saturation", "smoothing_window",
                                              "emit_divider", "input_rate_hz", "side"};
  if (!j.is_object()) throw Error(ErrorKind::config_invalid, "runtime config must be an object");
  for (const auto& [k, v] : j.items())
    if (!known.count(k)) throw Error(ErrorKind::config_invalid, "unknown runtime key '" + k + "'");
  RuntimeConfig c;
  try {
    auto axis_index = [](const std::string& name) {
      for (std::size_t i = 0; i < kAxes; ++i)
        if (axis_name(i) == name) return i;
      throw Error(ErrorKind::config_invalid, "unknown axis '" + name + "'");
    };
    if (j.contains("pairs")) {
      for (const auto& [axis, pair] : j["pairs"].items()) {
        const auto pos = parse_class(pair.at(0).get<std::string>());
        const auto neg = parse_class(pair.at(1).get<std::string>());
        if (!pos || !neg) throw Error(ErrorKind::config_invalid, "unknown class in pair for " + axis);
        c.pairs.pairs[axis_index(axis)] = {*pos, *neg};
      }
    }
    if (j.contains("flip"))
      for (const auto& a : j["flip"]) c.pairs.flip(axis_index(a.get<std::string>()));
    if (j.contains("khat")) c.gains.khat = j["khat"].get<std::array<double, kAxes>>();
    if (j.contains("saturation")) {
      c.gains.saturation = j["saturation"].get<std::array<double, kAxes>>();
      for (std::size_t i = 0; i < kAxes; ++i) c.gains.deadzone[i] = 0.05 * c.gains.saturation[i];
    }
    if (j.contains("deadzone")) c.gains.deadzone = j["deadzone"].get<std::array<double, kAxes>>();
    c.smoothing_window = j.value("smoothing_window", c.smoothing_window);
    c.emit_divider = j.value("emit_divider", c.emit_divider);
    c.input_rate_hz = j.value("input_rate_hz", c.input_rate_hz);
    if (j.contains("side")) {
      const std::string s = j["side"].get<std::string>();
      if (s == "left") c.side = synth::Side::left;
      else if (s == "right") c.side = synth::Side::right;
      else throw Error(ErrorKind::config_invalid, "side must be left or right");
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::config_invalid, std::string("runtime config: ") + e.what());
  }
  c.validate();
  return c;
}

Engine::Engine(nn::ModelParams<float> params, RuntimeConfig cfg, sense::PatchGeometry geom,
               sense::ModalityMask mask)
    : params_(std::move(params)),
      cfg_(std::move(cfg)),
      geom_(std::move(geom)),
      mask_(mask),
      net_(params_.arch),
      state_(nn::BatchState<float>::zeros(1, params_.arch.hidden)),
      smooth_(cfg_.smoothing_window) {
  cfg_.validate();
  geom_.validate();
  if (params_.arch.input != sense::kFrameDim || params_.arch.classes != kNumClasses)
    throw Error(ErrorKind::dimension_mismatch, "model must map 301 inputs to 17 classes");
  if (!params_.all_finite()) throw Error(ErrorKind::non_finite, "model parameters are not finite");
}

Engine Engine::from_checkpoint(const std::string& path, RuntimeConfig cfg, sense::PatchGeometry geom) {
  nn::Checkpoint ck = nn::load_checkpoint(path);
  sense::ModalityMask mask;
  if (ck.training.contains("config") && ck.training["config"].contains("mask"))
    mask = sense::ModalityMask::parse(ck.training["config"]["mask"].get<std::string>());
  return Engine(std::move(ck.params), std::move(cfg), std::move(geom), mask);
}

void Engine::reset() {
  state_ = nn::BatchState<float>::zeros(1, params_.arch.hidden);
  smooth_.clear();
  count_ = 0;
}

StepOutput Engine::stream_step(const sense::SensorFrame& frame) {
  if (frame.cells.size() != sense::kCells)
    throw Error(ErrorKind::dimension_mismatch, "frame must have 43 cells");
  raw_ = frame.flat();
  sense::validate_values(raw_);
  if (cfg_.side == synth::Side::right)
    sense::mirror_values(raw_, input_, geom_);
  else
    input_ = raw_;
  sense::apply_mask_inplace(input_, mask_);

  static const int no_label = 0;
  const nn::WindowInput<float> in{1, 1, std::span<const float>(input_), false, std::span<const int>(&no_label, 1)};
  net_.run(nn::Pass::classify, params_, in, 0.0, state_, nullptr);
  const auto p = net_.probs();

  StepOutput out;
  out.t = ++count_;
  std::copy(p.begin(), p.end(), out.raw_probs.begin());
  out.probs = smooth_.push(out.raw_probs);
  out.top_class = nn::argmax<float>(out.probs);
  const sense::Vec3 f = sense::pseudo_force(raw_, geom_);
  out.force_n = sense::norm(f);
  if (count_ % cfg_.emit_divider == 0) out.cmd = map_command(out.probs, f, cfg_.pairs, cfg_.gains);
  return out;
}

}  // namespace smi::rt
