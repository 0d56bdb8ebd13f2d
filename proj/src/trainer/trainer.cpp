// Copyright (C) 2026 SMI contributors
// SPDX-License-Identifier: Apache-2.0

#include "smi/trainer/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include "smi/common/error.hpp"
#include "smi/common/rng.hpp"
#include "smi/neuralcore/checkpoint.hpp"
#include "smi/neuralcore/optimizer.hpp"

namespace smi::train {

using sense::kFrameDim;

namespace {

std::atomic<bool> g_interrupt{false};

}  // namespace

void request_interrupt() noexcept { g_interrupt.store(true); }
void clear_interrupt() noexcept { g_interrupt.store(false); }
bool interrupt_requested() noexcept { return g_interrupt.load(); }

void TrainConfig::validate() const {
  auto bad = [](const std::string& m) { throw Error(ErrorKind::config_invalid, m); };
  if (!(split_ratio > 0.0 && split_ratio < 1.0)) bad("split_ratio must lie in (0, 1)");
  if (batch_size < 1) bad("batch_size must be positive");
  if (update_window < 1) bad("update_window must be positive");
  if (eval_every < 1) bad("eval_every must be positive");
  if (!(hyper.gamma >= 0.0) || !(hyper.learning_rate > 0.0)) bad("gamma >= 0 and learning_rate > 0 required");
  if (!mask.force && !mask.proximity && !mask.accel) bad("mask disables every modality");
  if (optimizer != "adam") bad("unknown optimizer '" + optimizer + "'");
}

nlohmann::json TrainConfig::to_json() const {
  return {{"split_ratio", split_ratio},   {"batch_size", batch_size},
          {"update_window", update_window}, {"epochs", epochs},
          {"gamma", hyper.gamma},          {"learning_rate", hyper.learning_rate},
          {"seed", hyper.seed},            {"mask", std::string(mask.name())},
          {"optimizer", optimizer},        {"checkpoint_every", checkpoint_every},
          {"eval_every", eval_every}};
}

TrainConfig TrainConfig::from_json(const nlohmann::json& j) {
  static const std::set<std::string> known = {"split_ratio", "batch_size", "update_window", "epochs",
                                              "gamma", "learning_rate", "seed", "mask", "optimizer",
                                              "checkpoint_every", "eval_every"};
  if (!j.is_object()) throw Error(ErrorKind::config_invalid, "training config must be an object");
  for (const auto& [k, v] : j.items())
    if (!known.count(k)) throw Error(ErrorKind::config_invalid, "unknown training key '" + k + "'");
  TrainConfig c;
  try {
    c.split_ratio = j.value("split_ratio", c.split_ratio);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.update_window = j.value("update_window", c.update_window);
    c.epochs = j.value("epochs", c.epochs);
    c.hyper.gamma = j.value("gamma", c.hyper.gamma);
    c.hyper.learning_rate = j.value("learning_rate", c.hyper.learning_rate);
    c.hyper.seed = j.value("seed", c.hyper.seed);
    if (j.contains("mask")) c.mask = sense::ModalityMask::parse(j["mask"].get<std::string>());
    c.optimizer = j.value("optimizer", c.optimizer);
    c.checkpoint_every = j.value("checkpoint_every", c.checkpoint_every);
    c.eval_every = j.value("eval_every", c.eval_every);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::config_invalid, std::string("training config: ") + e.what());
  }
  c.validate();
  return c;
}

nlohmann::json Metrics::to_json() const {
  nlohmann::json per = nlohmann::json::object();
  for (std::size_t c = 0; c < kNumClasses; ++c)
    per[std::string(class_name(static_cast<ContactClass>(c)))] = per_class_acc[c];
  nlohmann::json curve_j = nlohmann::json::array();
  for (const auto& e : curve)
    curve_j.push_back({{"epoch", e.epoch},
                       {"train_loss", e.train_loss},
                       {"train_acc", e.train_acc},
                       {"valid_loss", e.valid_loss},
                       {"valid_acc", e.valid_acc},
                       {"seconds", e.seconds}});
  return {{"acc", acc},     {"per_class_acc", per}, {"confusion", confusion}, {"n_valid", n_valid},
          {"steps", steps}, {"loss", loss},         {"curve", curve_j}};
}

std::pair<Dataset, Dataset> split_dataset(Dataset d, double ratio, std::uint64_t seed) {
  const std::size_t n = d.size();
  if (n < 5) throw Error(ErrorKind::too_small, "need at least 5 trajectories to split, have " + std::to_string(n));
  if (!(ratio > 0.0 && ratio < 1.0)) throw Error(ErrorKind::config_invalid, "split ratio must lie in (0, 1)");
  const std::size_t n_valid = static_cast<std::size_t>(std::llround((1.0 - ratio) * double(n)));

  std::array<std::vector<std::size_t>, kNumClasses> by_class;
  for (std::size_t i = 0; i < n; ++i) by_class[index_of(d.trajectories[i].label)].push_back(i);
  Rng rng(derive_seed(seed, {0x53504c4954ULL}));
  for (auto& v : by_class) rng.shuffle(std::span<std::size_t>(v));

  // Floor of each class's share, then hand out the remainder by largest
  // fractional part (lower class index first on ties).
  std::array<std::size_t, kNumClasses> take{};
  std::vector<std::pair<double, std::size_t>> frac;
  std::size_t assigned = 0;
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    const double share = (1.0 - ratio) * double(by_class[c].size());
    take[c] = static_cast<std::size_t>(std::floor(share));
    assigned += take[c];
    if (take[c] < by_class[c].size()) frac.push_back({share - double(take[c]), c});
  }
  std::stable_sort(frac.begin(), frac.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t k = 0; assigned < n_valid && k < frac.size(); ++k, ++assigned) ++take[frac[k].second];

  std::vector<char> is_valid(n, 0);
  for (std::size_t c = 0; c < kNumClasses; ++c)
    for (std::size_t k = 0; k < take[c]; ++k) is_valid[by_class[c][k]] = 1;

  Dataset tr, va;
  tr.manifest = va.manifest = d.manifest;
  for (std::size_t i = 0; i < n; ++i)
    (is_valid[i] ? va : tr).trajectories.push_back(std::move(d.trajectories[i]));
  tr.manifest["size"] = tr.size();
  va.manifest["size"] = va.size();
  tr.manifest["split"] = "train";
  va.manifest["split"] = "valid";
  return {std::move(tr), std::move(va)};
}

std::vector<float> prepare_frames(const synth::LabeledTrajectory& t, const sense::ModalityMask& mask,
                                  const sense::PatchGeometry& geom) {
  std::vector<float> out(t.frames.size());
  const std::size_t steps = t.steps();
  for (std::size_t s = 0; s < steps; ++s) {
    std::span<float> dst(out.data() + s * kFrameDim, kFrameDim);
    if (t.side == synth::Side::right)
      sense::mirror_values(t.frame(s), dst, geom);
    else
      std::copy_n(t.frames.data() + s * kFrameDim, kFrameDim, dst.data());
    sense::apply_mask_inplace(dst, mask);
  }
  return out;
}

namespace {

struct Prepared {
  std::vector<std::vector<float>> frames;
  std::vector<int> labels;
  std::size_t steps = 0;
  std::vector<unsigned char> pred_channels;  // masked modalities are not predicted
};

Prepared prepare(const Dataset& d, const sense::ModalityMask& mask) {
  static const sense::PatchGeometry geom = sense::PatchGeometry::default_grid();
  Prepared p;
  p.steps = d.steps();
  p.pred_channels.assign(kFrameDim, 1);
  for (std::size_t i = 0; i < kFrameDim; ++i) {
    const std::size_t ch = i % sense::kChannels;
    const bool on = ch < sense::kProximity ? mask.force : ch == sense::kProximity ? mask.proximity : mask.accel;
    p.pred_channels[i] = on ? 1 : 0;
  }
  p.frames.resize(d.size());
  p.labels.resize(d.size());
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (d.trajectories[i].steps() != p.steps)
      throw Error(ErrorKind::dimension_mismatch, "trajectories differ in length");
    p.frames[i] = prepare_frames(d.trajectories[i], mask, geom);
    p.labels[i] = static_cast<int>(index_of(d.trajectories[i].label));
  }
  return p;
}

// Gathers steps [t0, t1) of the batch members into time-major rows.
void gather(const Prepared& p, std::span<const std::size_t> members, std::size_t t0, std::size_t t1,
            std::vector<float>& buf) {
  const std::size_t B = members.size();
  buf.resize((t1 - t0) * B * kFrameDim);
  for (std::size_t t = t0; t < t1; ++t)
    for (std::size_t b = 0; b < B; ++b)
      std::copy_n(p.frames[members[b]].data() + t * kFrameDim, kFrameDim,
                  buf.data() + ((t - t0) * B + b) * kFrameDim);
}

Metrics evaluate(const nn::ModelParams<float>& params, const Prepared& p, bool with_loss, double gamma,
                 std::size_t batch, std::size_t window) {
  Metrics m;
  m.n_valid = p.frames.size();
  m.steps = p.frames.size() * p.steps;
  if (p.frames.empty()) return m;
  nn::WindowEngine<float> engine(params.arch);
  std::vector<float> buf;
  std::vector<int> pred;
  double loss = 0.0;
  std::vector<std::size_t> order(p.frames.size());
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t b0 = 0; b0 < order.size(); b0 += batch) {
    const std::size_t B = std::min(batch, order.size() - b0);
    std::span<const std::size_t> members(order.data() + b0, B);
    std::vector<int> labels(B);
    for (std::size_t b = 0; b < B; ++b) labels[b] = p.labels[members[b]];
    auto state = nn::BatchState<float>::zeros(B, params.arch.hidden);
    for (std::size_t t0 = 0; t0 < p.steps; t0 += window) {
      const std::size_t t1 = std::min(p.steps, t0 + window);
      const bool has_next = with_loss && t1 < p.steps;
      gather(p, members, t0, t1 + (has_next ? 1 : 0), buf);
      pred.resize((t1 - t0) * B);
      const nn::WindowInput<float> in{B, t1 - t0, buf, has_next, labels, p.pred_channels};
      const auto st = engine.run(with_loss ? nn::Pass::loss : nn::Pass::classify, params, in, gamma, state,
                                 nullptr, pred);
      loss += st.loss;
      for (std::size_t r = 0; r < pred.size(); ++r)
        ++m.confusion[static_cast<std::size_t>(labels[r % B])][static_cast<std::size_t>(pred[r])];
    }
  }
  std::uint64_t correct = 0;
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    const std::uint64_t row = std::accumulate(m.confusion[c].begin(), m.confusion[c].end(), std::uint64_t{0});
    correct += m.confusion[c][c];
    m.per_class_acc[c] = row ? double(m.confusion[c][c]) / double(row) : 0.0;
  }
  m.acc = double(correct) / double(m.steps);
  m.loss = with_loss ? loss / double(m.steps) : 0.0;
  return m;
}

}  // namespace

Metrics accuracy(const nn::ModelParams<float>& params, const Dataset& d, const sense::ModalityMask& mask,
                 bool with_loss, double gamma, std::size_t batch, std::size_t window) {
  return evaluate(params, prepare(d, mask), with_loss, gamma, std::max<std::size_t>(batch, 1),
                  std::max<std::size_t>(window, 1));
}

Metrics accuracy_from_predictions(const Dataset& d, const std::vector<std::vector<int>>& pred) {
  if (pred.size() != d.size()) throw Error(ErrorKind::dimension_mismatch, "one prediction row per trajectory");
  Metrics m;
  m.n_valid = d.size();
  std::uint64_t correct = 0;
  for (std::size_t n = 0; n < d.size(); ++n) {
    const std::size_t label = index_of(d.trajectories[n].label);
    if (pred[n].size() != d.trajectories[n].steps())
      throw Error(ErrorKind::dimension_mismatch, "one prediction per step");
    for (int c : pred[n]) {
      if (c < 0 || c >= int(kNumClasses)) throw Error(ErrorKind::out_of_range, "prediction outside class range");
      ++m.confusion[label][static_cast<std::size_t>(c)];
      correct += static_cast<std::size_t>(c) == label;
      ++m.steps;
    }
  }
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    const std::uint64_t row = std::accumulate(m.confusion[c].begin(), m.confusion[c].end(), std::uint64_t{0});
    m.per_class_acc[c] = row ? double(m.confusion[c][c]) / double(row) : 0.0;
  }
  m.acc = m.steps ? double(correct) / double(m.steps) : 0.0;
  return m;
}

TrainResult train(const Dataset& train_set, const Dataset& valid_set, const TrainConfig& cfg,
                  nn::ModelParams<float> params, const EpochCallback& on_epoch) {
  cfg.validate();
  if (train_set.size() == 0 || valid_set.size() == 0)
    throw Error(ErrorKind::too_small, "training and validation sets must be non-empty");
  if (train_set.steps() != valid_set.steps())
    throw Error(ErrorKind::dimension_mismatch, "training and validation lengths differ");
  if (params.arch.input != kFrameDim)
    throw Error(ErrorKind::dimension_mismatch, "model input must be 301 values");

  const Prepared tr = prepare(train_set, cfg.mask);
  const Prepared va = prepare(valid_set, cfg.mask);
  const std::size_t T = tr.steps, W = cfg.update_window;
  const double gamma = cfg.hyper.gamma;

  nn::AdamConfig acfg;
  acfg.learning_rate = cfg.hyper.learning_rate;
  auto opt = nn::make_optimizer(cfg.optimizer, params.size(), acfg);
  nn::WindowEngine<float> engine(params.arch);
  auto grads = nn::ParamGradients<float>::zeros(params.arch);
  std::vector<float> buf;
  std::vector<std::size_t> order(tr.frames.size());
  std::iota(order.begin(), order.end(), 0);

  TrainResult result;
  auto save = [&](std::size_t epoch, bool interrupted) {
    if (cfg.checkpoint_path.empty()) return;
    nlohmann::json meta = {{"epoch", epoch},
                           {"config", cfg.to_json()},
                           {"optimizer_steps", opt->steps()},
                           {"interrupted", interrupted}};
    if (!result.metrics.curve.empty()) meta["valid_acc"] = result.metrics.curve.back().valid_acc;
    nn::save_checkpoint(cfg.checkpoint_path, params, meta);
  };

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const auto t_start = std::chrono::steady_clock::now();
    Rng rng(derive_seed(cfg.hyper.seed, {0x45504f4348ULL, epoch}));
    rng.shuffle(std::span<std::size_t>(order));
    double loss = 0.0;
    std::size_t correct = 0, rows = 0;
    for (std::size_t b0 = 0; b0 < order.size(); b0 += cfg.batch_size) {
      const std::size_t B = std::min(cfg.batch_size, order.size() - b0);
      std::span<const std::size_t> members(order.data() + b0, B);
      std::vector<int> labels(B);
      for (std::size_t b = 0; b < B; ++b) labels[b] = tr.labels[members[b]];
      auto state = nn::BatchState<float>::zeros(B, params.arch.hidden);
      for (std::size_t t0 = 0; t0 < T; t0 += W) {
        if (interrupt_requested()) {
          save(epoch - 1, true);
          result.interrupted = true;
          throw Error(ErrorKind::interrupted, "training interrupted in epoch " + std::to_string(epoch));
        }
        const std::size_t t1 = std::min(T, t0 + W);
        const bool has_next = t1 < T;
        gather(tr, members, t0, t1 + (has_next ? 1 : 0), buf);
        std::fill(grads.data.begin(), grads.data.end(), 0.0f);
        const nn::WindowInput<float> in{B, t1 - t0, buf, has_next, labels, tr.pred_channels};
        const auto st = engine.run(nn::Pass::train, params, in, gamma, state, &grads);
        loss += st.loss;
        correct += st.correct;
        rows += st.rows;
        opt->apply(params, grads);
        if (!params.all_finite())
          throw Error(ErrorKind::non_finite, "parameters became non-finite in epoch " + std::to_string(epoch) +
                                                 " at step " + std::to_string(t0) + " (window loss " +
                                                 std::to_string(st.loss) + ")");
      }
    }
    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = loss / double(rows);
    rec.train_acc = double(correct) / double(rows);
    if (epoch % cfg.eval_every == 0 || epoch == cfg.epochs) {
      const Metrics vm = evaluate(params, va, true, gamma, cfg.batch_size, W);
      rec.valid_acc = vm.acc;
      rec.valid_loss = vm.loss;
    } else if (!result.metrics.curve.empty()) {
      rec.valid_acc = result.metrics.curve.back().valid_acc;
      rec.valid_loss = result.metrics.curve.back().valid_loss;
    }
    rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    result.metrics.curve.push_back(rec);
    if (on_epoch) on_epoch(rec);
    if (cfg.checkpoint_every && epoch % cfg.checkpoint_every == 0 && epoch != cfg.epochs) save(epoch, false);
  }

  Metrics final = evaluate(params, va, true, gamma, cfg.batch_size, W);
  final.curve = std::move(result.metrics.curve);
  result.metrics = std::move(final);
  save(cfg.epochs, false);
  result.params = std::move(params);
  return result;
}

std::vector<AblationCondition> default_conditions() {
  using sense::ModalityMask;
  return {
      {"full", ModalityMask::full(), false, synth::SupportKind::soft},
      {"no-force", ModalityMask::parse("no-force"), false, synth::SupportKind::soft},
      {"no-prox", ModalityMask::parse("no-prox"), false, synth::SupportKind::soft},
      {"no-accel", ModalityMask::parse("no-accel"), false, synth::SupportKind::soft},
      {"soft-torque", ModalityMask::full(), true, synth::SupportKind::soft, 32},
      {"rigid-torque", ModalityMask::full(), true, synth::SupportKind::rigid, 32},
  };
}

nlohmann::json AblationReport::summary() const {
  std::map<std::string, std::vector<const AblationRun*>> by;
  std::vector<std::string> names;
  for (const auto& r : runs) {
    if (!by.count(r.condition)) names.push_back(r.condition);
    by[r.condition].push_back(&r);
  }
  nlohmann::json out = nlohmann::json::object();
  for (const auto& name : names) {
    const auto& rs = by[name];
    std::size_t epochs = rs.front()->metrics.curve.size();
    for (const auto* r : rs) epochs = std::min(epochs, r->metrics.curve.size());
    std::vector<double> mean(epochs), sd(epochs), finals;
    for (std::size_t e = 0; e < epochs; ++e) {
      double s = 0.0, s2 = 0.0;
      for (const auto* r : rs) s += r->metrics.curve[e].valid_acc;
      mean[e] = s / double(rs.size());
      for (const auto* r : rs) s2 += std::pow(r->metrics.curve[e].valid_acc - mean[e], 2);
      sd[e] = rs.size() > 1 ? std::sqrt(s2 / double(rs.size() - 1)) : 0.0;
    }
    double fm = 0.0;
    for (const auto* r : rs) {
      finals.push_back(r->metrics.acc);
      fm += r->metrics.acc;
    }
    fm /= double(rs.size());
    double fs = 0.0;
    for (double f : finals) fs += (f - fm) * (f - fm);
    fs = rs.size() > 1 ? std::sqrt(fs / double(rs.size() - 1)) : 0.0;
    out[name] = {{"mean_curve", mean}, {"sd_curve", sd}, {"final_acc", finals}, {"final_mean", fm}, {"final_sd", fs}};
  }
  return out;
}

nlohmann::json AblationReport::to_json() const {
  nlohmann::json rs = nlohmann::json::array();
  for (const auto& r : runs) rs.push_back({{"condition", r.condition}, {"seed", r.seed}, {"metrics", r.metrics.to_json()}});
  return {{"runs", rs}, {"summary", summary()}};
}

std::string curve_csv(const Metrics& m, const std::string& condition, std::uint64_t seed) {
  std::ostringstream os;
  os.precision(9);
  for (const auto& e : m.curve) {
    os << e.epoch << ",train," << condition << ',' << seed << ',' << e.train_acc << ',' << e.train_loss << '\n';
    os << e.epoch << ",valid," << condition << ',' << seed << ',' << e.valid_acc << ',' << e.valid_loss << '\n';
  }
  return os.str();
}

std::string AblationReport::curves_csv() const {
  std::string out = "epoch,split,condition,seed,acc,loss\n";
  for (const auto& r : runs) out += curve_csv(r.metrics, r.condition, r.seed);
  return out;
}

AblationReport ablation_suite(const TrainConfig& base, const AblationData& data,
                              const std::vector<std::uint64_t>& seeds,
                              const std::vector<AblationCondition>& conditions, const nn::ArchConfig& arch,
                              const RunCallback& progress) {
  if (seeds.size() < 3) throw Error(ErrorKind::config_invalid, "ablation needs at least three seeds");
  AblationReport report;
  // Only the default architecture is held to the deployment budget.
  const nn::ParamBudget budget = arch == nn::ArchConfig{} ? nn::ParamBudget{} : nn::ParamBudget::unbounded();
  for (const auto& cond : conditions) {
    const Dataset* d = !cond.support_subset ? data.soft
                       : cond.support == synth::SupportKind::soft ? data.soft_subset
                                                                  : data.rigid_subset;
    if (d == nullptr) throw Error(ErrorKind::config_invalid, "no dataset for condition " + cond.name);
    for (std::uint64_t seed : seeds) {
      TrainConfig cfg = base;
      cfg.mask = cond.mask;
      if (cond.batch_size != 0) cfg.batch_size = cond.batch_size;
      cfg.hyper.seed = seed;
      cfg.checkpoint_path.clear();
      auto [tr, va] = split_dataset(*d, cfg.split_ratio, seed);
      auto params = nn::init_params<float>(arch, derive_seed(seed, {0x494e4954ULL}), budget);
      auto res = train(tr, va, cfg, std::move(params),
                       [&](const EpochRecord& e) { if (progress) progress(cond.name, seed, e); });
      report.runs.push_back({cond.name, seed, std::move(res.metrics)});
    }
  }
  return report;
}

}  // namespace smi::train
