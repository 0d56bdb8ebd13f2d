// Copyright (C) 2026 SMI contributors
// SPDX-License-Identifier: Apache-2.0

#include "smi/synthgen/generator.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>

#include "smi/common/binary_io.hpp"
#include "smi/common/error.hpp"

namespace smi::synth {

using sense::kCells;
using sense::kChannels;
using sense::kFrameDim;

namespace {

constexpr std::size_t kCrossFade = 3;
constexpr std::size_t kNoiseTaps = 5;
constexpr double kEnvelopeDepth = 0.15;
constexpr double kAccelPlanar = 0.25;
constexpr double kAccelNormal = 0.2;
constexpr double kAccelRate = 4.0;

// Sub-sensor directions inside a cell.
const std::array<std::array<double, 2>, 3> kSubDirs = {{
    {0.0, 1.0},
    {-0.8660254037844386, -0.5},
    {0.8660254037844386, -0.5},
}};

struct Motion {
  const ClassTemplate* tpl = nullptr;
  double amp = 0.0;
  std::array<double, 2> bias{};
  double period = 100.0;
  double phase = 0.0;
  double beta = 1.0;
  double prox_scale = 1.0;
  CellWeights jitter{};
};

// Always consumes the same number of draws so streams line up across classes.
Motion draw_motion(const ClassTemplate& tpl, const GenConfig& cfg, Rng& rng) {
  Motion m;
  m.tpl = &tpl;
  m.amp = rng.uniform(0.45, 0.7);
  m.bias[0] = rng.normal() * cfg.cue_bias_sigma;
  m.bias[1] = rng.normal() * cfg.cue_bias_sigma;
  m.period = rng.uniform(60.0, 140.0);
  m.phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
  m.beta = rng.uniform(0.8, 1.2);
  m.prox_scale = rng.uniform(0.9, 1.0);
  for (double& j : m.jitter) j = rng.uniform(0.85, 1.0);
  return m;
}

void clean_frame(const Motion& m, const sense::PatchGeometry& g, const GenConfig& cfg, std::size_t t,
                 double* out) {
  const ClassTemplate& tpl = *m.tpl;
  const double w = 2.0 * std::numbers::pi / m.period;
  const double env = 1.0 + kEnvelopeDepth * std::sin(w * static_cast<double>(t) + m.phase);
  const double denv = kEnvelopeDepth * w * std::cos(w * static_cast<double>(t) + m.phase);
  const double coupling = cfg.support.coupling * m.beta;
  const double k = cfg.cue_gain;
  for (std::size_t i = 0; i < kCells; ++i) {
    const double x = g.positions[i][0], y = g.positions[i][1];
    const auto d = tpl.drive_at(x, y);
    const double cx = d[0] + m.bias[0], cy = d[1] + m.bias[1];
    const double r = std::hypot(x, y);
    const double radial = r > 0.0 ? (cx * x + cy * y) / r : 0.0;
    const double foot = tpl.footprint[i] * m.jitter[i];
    const double base = m.amp * tpl.force_gain * env * foot * std::max(0.0, 1.0 + k * radial);
    double* v = out + i * kChannels;
    for (std::size_t j = 0; j < 3; ++j) {
      const double along = cx * kSubDirs[j][0] + cy * kSubDirs[j][1];
      v[j] = base * std::max(0.0, 1.0 + k * along);
    }
    v[3] = tpl.force_gain > 0.0 ? tpl.proximity[i] * m.prox_scale : 0.0;
    const double cell_gain = 0.6 + 0.4 * tpl.footprint[i];
    v[4] = sense::kAccelRest + coupling * kAccelPlanar * env * d[0] * cell_gain;
    v[5] = sense::kAccelRest + coupling * kAccelPlanar * env * d[1] * cell_gain;
    v[6] = sense::kAccelRest +
           coupling * cell_gain *
               (kAccelNormal * tpl.normal_drive * env + kAccelRate * m.amp * tpl.force_gain * denv * tpl.footprint[i]);
  }
}

}  // namespace

std::string_view side_name(Side s) { return s == Side::left ? "left" : "right"; }

void GenConfig::validate() const {
  auto bad = [](const std::string& msg) { throw Error(ErrorKind::config_invalid, msg); };
  if (traj_len < 2) bad("traj_len must be at least 2");
  if (n_per_class < 1 && total == 0) bad("n_per_class must be positive");
  const double lo = prefix_fraction_range[0], hi = prefix_fraction_range[1];
  if (!(lo >= 0.0 && lo <= hi && hi <= 0.5)) bad("prefix_fraction_range must satisfy 0 <= lo <= hi <= 0.5");
  if (classes.empty()) bad("class list is empty");
  if (std::set<ContactClass>(classes.begin(), classes.end()).size() != classes.size()) bad("duplicate class");
  if (sides.empty()) bad("side list is empty");
  if (std::set<Side>(sides.begin(), sides.end()).size() != sides.size()) bad("duplicate side");
  if (!(noise_scale >= 0.0) || !(cue_gain >= 0.0) || !(cue_bias_sigma >= 0.0))
    bad("noise_scale, cue_gain and cue_bias_sigma must be non-negative");
  support.validate();
}

nlohmann::json GenConfig::to_json() const {
  nlohmann::json cls = nlohmann::json::array(), sd = nlohmann::json::array();
  for (auto c : classes) cls.push_back(class_name(c));
  for (auto s : sides) sd.push_back(side_name(s));
  return {{"n_per_class", n_per_class},
          {"total", total},
          {"traj_len", traj_len},
          {"prefix_fraction_range", prefix_fraction_range},
          {"seed", seed},
          {"support", support.to_json()},
          {"classes", cls},
          {"sides", sd},
          {"noise_scale", noise_scale},
          {"cue_gain", cue_gain},
          {"cue_bias_sigma", cue_bias_sigma}};
}

GenConfig GenConfig::from_json(const nlohmann::json& j) {
  static const std::set<std::string> known = {"n_per_class", "total", "traj_len", "prefix_fraction_range",
                                              "seed", "support", "classes", "sides", "noise_scale",
                                              "cue_gain", "cue_bias_sigma"};
  if (!j.is_object()) throw Error(ErrorKind::config_invalid, "generator config must be an object");
  for (const auto& [k, v] : j.items())
    if (!known.count(k)) throw Error(ErrorKind::config_invalid, "unknown generator key '" + k + "'");
  GenConfig c;
  try {
    c.n_per_class = j.value("n_per_class", c.n_per_class);
    c.total = j.value("total", c.total);
    c.traj_len = j.value("traj_len", c.traj_len);
    if (j.contains("prefix_fraction_range")) c.prefix_fraction_range = j["prefix_fraction_range"].get<std::array<double, 2>>();
    c.seed = j.value("seed", c.seed);
    if (j.contains("support")) c.support = SupportModel::from_json(j["support"]);
    if (j.contains("classes")) {
      c.classes.clear();
      for (const auto& n : j["classes"]) {
        const auto cls = parse_class(n.get<std::string>());
        if (!cls) throw Error(ErrorKind::config_invalid, "unknown class '" + n.get<std::string>() + "'");
        c.classes.push_back(*cls);
      }
    }
    if (j.contains("sides")) {
      c.sides.clear();
      for (const auto& n : j["sides"]) {
        const std::string s = n.get<std::string>();
        if (s == "left") c.sides.push_back(Side::left);
        else if (s == "right") c.sides.push_back(Side::right);
        else throw Error(ErrorKind::config_invalid, "unknown side '" + s + "'");
      }
    }
    c.noise_scale = j.value("noise_scale", c.noise_scale);
    c.cue_gain = j.value("cue_gain", c.cue_gain);
    c.cue_bias_sigma = j.value("cue_bias_sigma", c.cue_bias_sigma);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::config_invalid, std::string("generator config: ") + e.what());
  }
  c.validate();
  return c;
}

std::size_t GenConfig::cell_count(std::size_t class_pos, std::size_t side_pos) const {
  if (total == 0) return n_per_class;
  const std::size_t cells = classes.size() * sides.size();
  const std::size_t k = class_pos * sides.size() + side_pos;
  return total / cells + (k < total % cells ? 1 : 0);
}

std::size_t GenConfig::dataset_size() const {
  return total != 0 ? total : n_per_class * classes.size() * sides.size();
}

GenConfig GenConfig::preset(std::string_view name) {
  GenConfig c;
  if (name == "desk") return c;
  if (name == "large") {
    c.total = 1038;
    return c;
  }
  throw Error(ErrorKind::config_invalid, "unknown generator preset '" + std::string(name) + "'");
}

GenConfig GenConfig::torque_subset(SupportKind kind, std::uint64_t seed) {
  GenConfig c;
  c.n_per_class = 25;
  c.seed = seed;
  c.support = SupportModel::of(kind);
  c.classes = {ContactClass::TorqueLeft,  ContactClass::TorqueRight, ContactClass::TorqueForward,
               ContactClass::TorqueBackward, ContactClass::TorqueClock, ContactClass::TorqueAnticlock};
  c.sides = {Side::left};
  return c;
}

Generator::Generator(const sense::PatchGeometry& geom) : geom_(geom), templates_(class_templates_default(geom)) {
  geom_.validate();
}

LabeledTrajectory Generator::trajectory(ContactClass target, const GenConfig& cfg, Rng& rng, Side side) const {
  const std::size_t T = cfg.traj_len;
  const Motion tm = draw_motion(templates_[index_of(target)], cfg, rng);

  // Prefix: the tail of a different class's motion.
  const double u = rng.uniform();
  std::vector<ContactClass> others;
  for (ContactClass c : cfg.classes)
    if (c != target) others.push_back(c);
  const std::uint64_t pick = rng.index(std::max<std::size_t>(others.size(), 1));
  const ContactClass prefix_class = others.empty() ? target : others[pick];
  const Motion pm = draw_motion(templates_[index_of(prefix_class)], cfg, rng);
  const double lo = cfg.prefix_fraction_range[0], hi = cfg.prefix_fraction_range[1];
  std::size_t prefix_len = others.empty() ? 0 : static_cast<std::size_t>(std::lround((lo + (hi - lo) * u) * double(T)));
  prefix_len = std::min(prefix_len, T);

  LabeledTrajectory out;
  out.label = target;
  out.side = side;
  out.prefix_class = prefix_class;
  out.prefix_len = static_cast<std::uint32_t>(prefix_len);
  out.frames.resize(T * kFrameDim);

  const double ns = cfg.noise_scale;
  std::array<double, kChannels> sigma{};
  const auto& nz = tm.tpl->noise_sigma;
  sigma = {nz[0] * ns, nz[0] * ns, nz[0] * ns, nz[1] * ns, cfg.support.accel_noise_sigma * ns,
           cfg.support.accel_noise_sigma * ns, cfg.support.accel_noise_sigma * ns};
  const bool noisy = ns > 0.0;
  std::vector<double> taps(kNoiseTaps * kFrameDim, 0.0);
  std::vector<double> cur(kFrameDim), pre(kFrameDim);
  std::vector<float> left(kFrameDim);

  for (std::size_t t = 0; t < T; ++t) {
    clean_frame(tm, geom_, cfg, t, cur.data());
    if (t < prefix_len + kCrossFade) {
      clean_frame(pm, geom_, cfg, t, pre.data());
      const double w = t < prefix_len ? 0.0 : 0.25 * double(t - prefix_len + 1);
      for (std::size_t i = 0; i < kFrameDim; ++i) cur[i] = w * cur[i] + (1.0 - w) * pre[i];
    }
    if (noisy) {
      // Causal moving average of the last five noise draws.
      double* slot = taps.data() + (t % kNoiseTaps) * kFrameDim;
      for (std::size_t i = 0; i < kFrameDim; ++i) slot[i] = rng.normal() * sigma[i % kChannels];
      const double n = double(std::min(t + 1, kNoiseTaps));
      for (std::size_t i = 0; i < kFrameDim; ++i) {
        double s = 0.0;
        for (std::size_t k = 0; k < kNoiseTaps; ++k) s += taps[k * kFrameDim + i];
        cur[i] += s / n;
      }
    }
    float* dst = out.frames.data() + t * kFrameDim;
    for (std::size_t i = 0; i < kFrameDim; ++i) left[i] = static_cast<float>(std::clamp(cur[i], 0.0, 1.0));
    if (side == Side::right)
      sense::mirror_values(left, std::span<float>(dst, kFrameDim), geom_);
    else
      std::copy(left.begin(), left.end(), dst);
  }
  return out;
}

Dataset Generator::dataset(const GenConfig& cfg) const {
  cfg.validate();
  struct Task {
    ContactClass cls;
    Side side;
    std::size_t index;
  };
  std::vector<Task> tasks;
  for (std::size_t ci = 0; ci < cfg.classes.size(); ++ci)
    for (std::size_t si = 0; si < cfg.sides.size(); ++si)
      for (std::size_t i = 0; i < cfg.cell_count(ci, si); ++i) tasks.push_back({cfg.classes[ci], cfg.sides[si], i});

  Dataset d;
  d.trajectories.resize(tasks.size());
  const long n = static_cast<long>(tasks.size());
#pragma omp parallel for schedule(dynamic)
  for (long k = 0; k < n; ++k) {
    const Task& t = tasks[static_cast<std::size_t>(k)];
    Rng rng(derive_seed(cfg.seed, {index_of(t.cls), t.index, static_cast<std::uint64_t>(t.side)}));
    d.trajectories[static_cast<std::size_t>(k)] = trajectory(t.cls, cfg, rng, t.side);
  }
  Rng order(derive_seed(cfg.seed, {0x5348554646ULL}));
  order.shuffle(std::span<LabeledTrajectory>(d.trajectories));

  nlohmann::json counts = nlohmann::json::object();
  for (std::size_t ci = 0; ci < cfg.classes.size(); ++ci) {
    std::size_t n = 0;
    for (std::size_t si = 0; si < cfg.sides.size(); ++si) n += cfg.cell_count(ci, si);
    counts[std::string(class_name(cfg.classes[ci]))] = n;
  }
  d.manifest = {{"format_version", kDatasetVersion},
                {"generator", cfg.to_json()},
                {"seed", cfg.seed},
                {"support", support_name(cfg.support.kind)},
                {"size", d.trajectories.size()},
                {"traj_len", cfg.traj_len},
                {"counts", counts}};
  return d;
}

LabeledTrajectory generate_trajectory(ContactClass target, const GenConfig& cfg, Rng& rng, Side side) {
  static const Generator gen;
  return gen.trajectory(target, cfg, rng, side);
}

Dataset generate_dataset(const GenConfig& cfg) {
  static const Generator gen;
  return gen.dataset(cfg);
}

namespace {
constexpr char kMagic[8] = {'S', 'M', 'I', 'D', 'S', 'E', 'T', '1'};
}

void save_dataset(const std::string& path, const Dataset& d) {
  nlohmann::json manifest = d.manifest;
  manifest["format_version"] = kDatasetVersion;
  manifest["size"] = d.size();
  manifest["traj_len"] = d.steps();
  const std::string text = manifest.dump();
  for (const auto& t : d.trajectories)
    if (t.steps() != d.steps()) throw Error(ErrorKind::dimension_mismatch, "trajectories differ in length");
  io::write_atomically(path, [&](std::ostream& os) {
    os.write(kMagic, sizeof kMagic);
    io::write_u32(os, static_cast<std::uint32_t>(text.size()));
    os.write(text.data(), static_cast<std::streamsize>(text.size()));
    for (const auto& t : d.trajectories) {
      const std::uint8_t head[4] = {static_cast<std::uint8_t>(t.label), static_cast<std::uint8_t>(t.side),
                                    static_cast<std::uint8_t>(t.prefix_class), 0};
      os.write(reinterpret_cast<const char*>(head), 4);
      io::write_u32(os, t.prefix_len);
      io::write_f32s(os, t.frames);
    }
  });
}

Dataset load_dataset(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error(ErrorKind::io_failure, "cannot open dataset " + path);
  char magic[8] = {};
  is.read(magic, 8);
  if (!is || !std::equal(magic, magic + 8, kMagic)) throw Error(ErrorKind::io_failure, path + ": not a dataset file");
  const std::uint32_t mlen = io::read_u32(is);
  std::string text(mlen, '\0');
  is.read(text.data(), mlen);
  if (!is) throw Error(ErrorKind::io_failure, path + ": truncated manifest");
  Dataset d;
  try {
    d.manifest = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::io_failure, path + ": bad manifest: " + e.what());
  }
  if (d.manifest.value("format_version", 0u) != kDatasetVersion)
    throw Error(ErrorKind::io_failure, path + ": unsupported dataset version");
  const std::size_t n = d.manifest.value("size", std::size_t{0});
  const std::size_t steps = d.manifest.value("traj_len", std::size_t{0});
  d.trajectories.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    auto& t = d.trajectories[k];
    std::uint8_t head[4];
    is.read(reinterpret_cast<char*>(head), 4);
    t.prefix_len = io::read_u32(is);
    if (!is) throw Error(ErrorKind::io_failure, path + ": truncated at trajectory " + std::to_string(k));
    if (head[0] >= kNumClasses || head[1] > 1 || head[2] >= kNumClasses)
      throw Error(ErrorKind::io_failure, path + ": corrupt record header at trajectory " + std::to_string(k));
    t.label = static_cast<ContactClass>(head[0]);
    t.side = static_cast<Side>(head[1]);
    t.prefix_class = static_cast<ContactClass>(head[2]);
    t.frames.resize(steps * kFrameDim);
    io::read_f32s(is, t.frames);
    if (!is) throw Error(ErrorKind::io_failure, path + ": truncated at trajectory " + std::to_string(k));
  }
  if (is.peek() != std::char_traits<char>::eof()) throw Error(ErrorKind::io_failure, path + ": trailing bytes");
  return d;
}

}  // namespace smi::synth
