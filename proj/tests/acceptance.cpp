// Copyright (C) 2026 SMI contributors
// SPDX-License-Identifier: Apache-2.0

// Acceptance runner: one PASS/FAIL line per criterion, nonzero exit on any
// failure. Training criteria take the bulk of the time (about half an hour
// on one core).

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <random>
#include <string>
#include <vector>

#include "smi/common/rng.hpp"
#include "smi/neuralcore/checkpoint.hpp"
#include "smi/neuralcore/model.hpp"
#include "smi/runtime/engine.hpp"
#include "smi/runtime/mapping.hpp"
#include "smi/sensekit/geometry.hpp"
#include "smi/synthgen/generator.hpp"
#include "smi/trainer/trainer.hpp"

using namespace smi;
namespace fs = std::filesystem;

namespace {

constexpr std::uint64_t kDataSeed = 2026;
const std::vector<std::uint64_t> kSeeds{1, 2, 3};
constexpr std::size_t kModalityEpochs = 15;
constexpr std::size_t kSupportEpochs = 20;

int g_failures = 0;

void report(bool ok, const char* name, const std::string& detail) {
  std::printf("%s %s: %s\n", ok ? "PASS" : "FAIL", name, detail.c_str());
  std::fflush(stdout);
  if (!ok) ++g_failures;
}

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

std::string slurp(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(is), {}};
}

const train::Metrics& run_of(const train::AblationReport& r, const std::string& cond, std::uint64_t seed) {
  for (const auto& run : r.runs)
    if (run.condition == cond && run.seed == seed) return run.metrics;
  throw std::runtime_error("missing run " + cond);
}

// Highest validation ACC over the last third of the curve.
double plateau(const train::Metrics& m) {
  const std::size_t n = m.curve.size();
  double best = 0.0;
  for (std::size_t i = n - std::max<std::size_t>(1, n / 3); i < n; ++i) best = std::max(best, m.curve[i].valid_acc);
  return best;
}

void progress(const std::string& cond, std::uint64_t seed, const train::EpochRecord& e) {
  std::fprintf(stderr, "  %s seed %llu epoch %zu valid ACC %.4f (%.1fs)\n", cond.c_str(),
               static_cast<unsigned long long>(seed), e.epoch, e.valid_acc, e.seconds);
}

void modality_criteria() {
  synth::GenConfig g = synth::GenConfig::preset("desk");
  g.seed = kDataSeed;
  const synth::Dataset soft = synth::generate_dataset(g);
  train::TrainConfig cfg;
  cfg.epochs = kModalityEpochs;
  std::vector<train::AblationCondition> conds;
  for (const auto& c : train::default_conditions())
    if (c.name == "full" || c.name == "no-accel") conds.push_back(c);
  const auto rep = train::ablation_suite(cfg, {&soft, nullptr, nullptr}, kSeeds, conds, {}, progress);

  bool ok = true;
  std::string detail = "N=" + std::to_string(soft.size()) + " epochs=" + std::to_string(kModalityEpochs) + ";";
  for (auto s : kSeeds) {
    const double acc = run_of(rep, "full", s).acc;
    ok = ok && acc >= 0.95;
    detail += fmt(" seed %.0f ACC %.4f", double(s), acc);
  }
  report(ok, "full-modality ACC >= 0.95 on 3 seeds", detail);

  ok = true;
  detail = "epochs=" + std::to_string(kModalityEpochs) + ";";
  for (auto s : kSeeds) {
    const double full = run_of(rep, "full", s).acc;
    const auto& na = run_of(rep, "no-accel", s);
    const double top = plateau(na);
    ok = ok && full > na.acc && full - top >= 0.03;
    detail += fmt(" seed %.0f full %.4f no-accel %.4f", double(s), full, na.acc) + fmt(" (plateau %.4f)", top);
  }
  report(ok, "no-accel below full by >= 3 pp on every seed", detail);
}

void support_criterion() {
  const synth::Dataset soft = synth::generate_dataset(synth::GenConfig::torque_subset(synth::SupportKind::soft, kDataSeed));
  const synth::Dataset rigid =
      synth::generate_dataset(synth::GenConfig::torque_subset(synth::SupportKind::rigid, kDataSeed));
  train::TrainConfig cfg;
  cfg.epochs = kSupportEpochs;
  std::vector<train::AblationCondition> conds;
  for (const auto& c : train::default_conditions())
    if (c.support_subset) conds.push_back(c);
  const auto rep = train::ablation_suite(cfg, {nullptr, &soft, &rigid}, kSeeds, conds, {}, progress);
  bool ok = soft.size() == 150 && rigid.size() == 150;
  std::string detail = "N=" + std::to_string(soft.size()) + "/" + std::to_string(rigid.size()) + ";";
  for (auto s : kSeeds) {
    const double a = run_of(rep, "soft-torque", s).acc, b = run_of(rep, "rigid-torque", s).acc;
    ok = ok && a - b >= 0.05;
    detail += fmt(" seed %.0f soft %.4f rigid %.4f", double(s), a, b);
  }
  report(ok, "soft support beats rigid by >= 5 pp on the torque subset", detail);
}

void gradient_criterion() {
  nn::ArchConfig a;
  a.encoder = 8;
  a.hidden = 8;
  a.cls_hidden = 8;
  a.pred_hidden = 8;
  auto p = nn::init_params<double>(a, 41, nn::ParamBudget::unbounded());
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> u(-0.3, 0.3), x01(0.0, 1.0);
  for (auto& v : p.data) v += u(rng);
  const std::size_t T = 6, D = a.input;
  std::vector<double> frames(T * D);
  for (auto& v : frames) v = x01(rng);
  const nn::SequenceView<double> seq{frames, T, 4};
  const nn::TrainHyper hyper{0.25, 5e-4, 0};
  const auto warm = nn::sequence_loss(seq, p, hyper, nn::HiddenState<double>::zeros(a.hidden), {0, 2});
  const nn::StepRange w{2, 6};
  const auto g = nn::gradients(seq, p, hyper, warm.state, w);

  std::size_t checked = 0, bad = 0;
  double worst = 0.0;
  for (std::size_t ti = 0; ti < nn::kTensorCount; ++ti) {
    const auto& spec = p.layout[ti];
    for (int k = 0; k < 10; ++k) {
      const std::size_t idx = spec.offset + rng() % spec.size();
      auto plus = p, minus = p;
      const double eps = 1e-6;
      plus.data[idx] += eps;
      minus.data[idx] -= eps;
      const double num = (nn::sequence_loss(seq, plus, hyper, warm.state, w).loss -
                          nn::sequence_loss(seq, minus, hyper, warm.state, w).loss) /
                         (2 * eps);
      const double ana = g.data[idx];
      const double rel = std::abs(num - ana) / std::max(std::abs(num) + std::abs(ana), 1e-7);
      worst = std::max(worst, rel);
      if (!(rel < 1e-4)) ++bad;
      ++checked;
    }
  }
  report(bad == 0 && checked >= 100, "gradient check (H=8, double)",
         std::to_string(checked) + " coordinates over " + std::to_string(nn::kTensorCount) + " tensors" +
             fmt(", worst relative error %.3g", worst));
}

void budget_criterion() {
  // encoder, LSTM, classifier head, predictor head (mean and scale).
  const std::size_t D = 301, E = 256, H = 256, C = 128, K = 17;
  const std::size_t want = (D * E + E) + (4 * H * (E + H) + 4 * H) + (H * C + C + C * K + K) + (H * C + C + C * 2 * D + 2 * D);
  const std::size_t got = nn::ArchConfig{}.param_count();
  report(got == want && got >= 500000 && got <= 1000000, "parameter budget",
         "analytic " + std::to_string(want) + ", model " + std::to_string(got));
}

void latency_criterion() {
  const auto params = nn::init_params<float>(nn::ArchConfig{}, 5);
  rt::RuntimeConfig rc;
  rt::Engine eng(params, rc);
  synth::GenConfig g;
  Rng rng(derive_seed(kDataSeed, {7}));
  std::vector<double> ms;
  std::size_t commands = 0, frames = 0;
  while (frames < 10000) {
    const auto t = synth::generate_trajectory(ContactClass(frames / 375 % kNumClasses), g, rng);
    for (std::size_t s = 0; s < t.steps() && frames < 10000; ++s, ++frames) {
      const auto f = sense::SensorFrame::from_flat(t.frame(s), std::uint32_t(frames));
      const auto t0 = std::chrono::steady_clock::now();
      const auto out = eng.stream_step(f);
      ms.push_back(std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count());
      if (out.cmd) ++commands;
    }
  }
  std::sort(ms.begin(), ms.end());
  const double p99 = ms[ms.size() * 99 / 100];
  const double seconds = double(frames) / rc.input_rate_hz;
  const double cmd_rate = double(commands) / seconds;
  const double want_rate = rc.input_rate_hz / 5.0;
  report(p99 < 5.0, "stream_step p99 latency < 5 ms over 10^4 frames",
         fmt("p99 %.3f ms, median %.3f ms, max %.3f ms", p99, ms[ms.size() / 2], ms.back()));
  report(rc.emit_divider == 5 && commands * 5 == frames && cmd_rate == want_rate, "command cadence input_rate/5",
         fmt("%.0f commands over %.0f frames = %.2f Hz", double(commands), double(frames), cmd_rate));
}

ClassProbs random_probs(std::mt19937_64& rng) {
  std::exponential_distribution<double> e(1.0);
  ClassProbs p{};
  double s = 0.0;
  for (auto& v : p) s += (v = e(rng));
  for (auto& v : p) v /= s;
  return p;
}

void mapper_criterion() {
  std::mt19937_64 rng(derive_seed(kDataSeed, {11}));
  std::uniform_real_distribution<double> fdist(-30.0, 30.0);
  const auto pairs = rt::PairTable::defaults();
  const auto gains = rt::GainTable::defaults();
  std::size_t checks = 0, fails = 0;
  auto expect = [&](bool c) {
    ++checks;
    if (!c) ++fails;
  };
  for (int trial = 0; trial < 5000; ++trial) {
    const auto p = random_probs(rng);
    const sense::Vec3 f{fdist(rng), fdist(rng), fdist(rng)};
    const double fn = sense::norm(f);
    const auto raw = rt::raw_command(p, fn, pairs, gains);
    const auto cmd = rt::map_command(p, f, pairs, gains);
    expect(rt::map_command(p, {0.0, 0.0, 0.0}, pairs, gains) == rt::CommandVector{});
    const auto raw3 = rt::raw_command(p, 3.0 * fn, pairs, gains);
    ClassProbs q = p;
    for (const auto& ap : pairs.pairs) std::swap(q[index_of(ap.positive)], q[index_of(ap.negative)]);
    const auto rawq = rt::raw_command(q, fn, pairs, gains);
    const auto cmdq = rt::map_command(q, f, pairs, gains);
    for (std::size_t i = 0; i < rt::kAxes; ++i) {
      expect(std::abs(raw3[i] - 3.0 * raw[i]) <= 1e-12 * std::max(1.0, std::abs(raw3[i])));
      expect(std::abs(cmd[i]) <= gains.saturation[i]);
      expect(rawq[i] == -raw[i] && cmdq[i] == -cmd[i]);
    }
  }

  // NoTouch streams, noiseless and at the default noise level.
  const auto params = nn::init_params<float>(nn::ArchConfig{}, 9);
  std::size_t notouch_cmds = 0;
  for (double noise : {0.0, 1.0}) {
    synth::GenConfig g;
    g.noise_scale = noise;
    g.prefix_fraction_range = {0.0, 0.0};
    Rng r(derive_seed(kDataSeed, {13}));
    for (int n = 0; n < 4; ++n) {
      const auto t = synth::generate_trajectory(ContactClass::NoTouch, g, r);
      rt::Engine eng(params);
      for (std::size_t s = 0; s < t.steps(); ++s) {
        const auto out = eng.stream_step(sense::SensorFrame::from_flat(t.frame(s)));
        if (out.cmd) {
          ++notouch_cmds;
          expect(*out.cmd == rt::CommandVector{});
        }
      }
    }
  }
  report(fails == 0, "mapper property suite",
         std::to_string(checks - fails) + "/" + std::to_string(checks) + " checks, " + std::to_string(notouch_cmds) +
             " NoTouch commands");
}

void oracle_criterion() {
  synth::GenConfig g;
  g.seed = kDataSeed;
  g.prefix_fraction_range = {0.1, 0.3};
  const auto d = synth::generate_dataset(g);
  std::mt19937_64 rng(derive_seed(kDataSeed, {17}));
  std::vector<std::vector<int>> uniform, oracle;
  double prefix = 0.0, frac = 0.0;
  for (const auto& t : d.trajectories) {
    std::vector<int> u(t.steps());
    for (auto& v : u) v = int(rng() % kNumClasses);
    uniform.push_back(std::move(u));
    std::vector<int> o(t.steps(), int(t.label));
    for (std::size_t s = 0; s < t.prefix_len; ++s) o[s] = int(t.prefix_class);
    oracle.push_back(std::move(o));
    prefix += double(t.prefix_len);
    frac += double(t.prefix_len) / double(t.steps());
  }
  const double acc_u = train::accuracy_from_predictions(d, uniform).acc;
  const double acc_o = train::accuracy_from_predictions(d, oracle).acc;
  const double mean_frac = frac / double(d.size());
  report(std::abs(acc_u - 1.0 / 17.0) <= 0.01, "uniform-random ACC = 1/17 +- 0.01",
         fmt("ACC %.4f vs %.4f", acc_u, 1.0 / 17.0));
  report(std::abs(acc_o - (1.0 - mean_frac)) <= 0.02, "template-oracle ACC = 1 - mean prefix fraction +- 0.02",
         fmt("ACC %.4f vs %.4f (counted %.4f)", acc_o, 1.0 - mean_frac, 1.0 - prefix / double(d.size() * 375)));
}

void determinism_criterion() {
  const fs::path dir = fs::temp_directory_path() / "smi_acceptance";
  fs::remove_all(dir);
  fs::create_directories(dir);
  synth::GenConfig g = synth::GenConfig::torque_subset(synth::SupportKind::soft, 77);
  std::string ckpt[2], data[2];
  double acc[2];
  for (int i = 0; i < 2; ++i) {
    const auto d = synth::generate_dataset(g);
    const std::string dpath = (dir / ("data" + std::to_string(i) + ".smid")).string();
    synth::save_dataset(dpath, d);
    data[i] = slurp(dpath);
    auto [tr, va] = train::split_dataset(d, 0.8, 5);
    train::TrainConfig cfg;
    cfg.epochs = 2;
    cfg.batch_size = 32;
    cfg.hyper.seed = 5;
    auto res = train::train(tr, va, cfg, nn::init_params<float>(nn::ArchConfig{}, 5));
    const std::string cpath = (dir / ("model" + std::to_string(i))).string();
    nn::save_checkpoint(cpath, res.params);
    ckpt[i] = slurp(cpath + ".bin");
    acc[i] = res.metrics.acc;
  }
  fs::remove_all(dir);
  report(!data[0].empty() && data[0] == data[1] && !ckpt[0].empty() && ckpt[0] == ckpt[1] && acc[0] == acc[1],
         "determinism", fmt("dataset %.0f bytes, checkpoint %.0f bytes, ACC %.6f", double(data[0].size()),
                            double(ckpt[0].size()), acc[0]));
}

}  // namespace

int main() {
  try {
    budget_criterion();
    gradient_criterion();
    oracle_criterion();
    mapper_criterion();
    latency_criterion();
    determinism_criterion();
    modality_criteria();
    support_criterion();
  } catch (const std::exception& e) {
    std::printf("FAIL acceptance runner: %s\n", e.what());
    return 1;
  }
  std::printf("%s: %d failing criteria\n", g_failures == 0 ? "ALL PASS" : "FAILURES", g_failures);
  return g_failures == 0 ? 0 : 1;
}
