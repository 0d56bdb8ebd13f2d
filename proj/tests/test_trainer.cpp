// Copyright (C) 2026 SMI contributors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <filesystem>
#include <map>
#include <numeric>
#include <random>
#include <set>

#include "doctest.h"
#include "smi/common/error.hpp"
#include "smi/neuralcore/checkpoint.hpp"
#include "smi/trainer/plot.hpp"
#include "smi/trainer/trainer.hpp"

using namespace smi;
using namespace smi::train;
namespace fs = std::filesystem;

namespace {

synth::Dataset make_data(std::uint64_t seed, std::size_t n_per_class, std::size_t len = 375,
                         std::array<double, 2> prefix = {0.01, 0.03}) {
  synth::GenConfig g;
  g.n_per_class = n_per_class;
  g.traj_len = len;
  g.seed = seed;
  g.prefix_fraction_range = prefix;
  return synth::generate_dataset(g);
}

nn::ArchConfig small_arch() {
  nn::ArchConfig a;
  a.encoder = 16;
  a.hidden = 16;
  a.cls_hidden = 8;
  a.pred_hidden = 8;
  return a;
}

std::multiset<std::vector<float>> contents(const Dataset& d) {
  std::multiset<std::vector<float>> s;
  for (const auto& t : d.trajectories) s.insert(t.frames);
  return s;
}

}  // namespace

TEST_CASE("split: sizes, disjointness, stratification, determinism") {
  const Dataset d = make_data(1, 3, 8);  // 102 trajectories
  auto [tr, va] = split_dataset(d, 0.8, 7);
  CHECK(va.size() == 20);  // round(0.2 * 102)
  CHECK(tr.size() == 82);

  auto all = contents(tr);
  for (const auto& t : va.trajectories) all.insert(t.frames);
  CHECK(all == contents(d));
  for (const auto& t : va.trajectories) CHECK(contents(tr).count(t.frames) == 0);

  std::map<ContactClass, int> total, valid;
  for (const auto& t : d.trajectories) ++total[t.label];
  for (const auto& t : va.trajectories) ++valid[t.label];
  for (const auto& [c, n] : total) CHECK(std::abs(valid[c] - 0.2 * n) <= 1.0);

  auto [tr2, va2] = split_dataset(d, 0.8, 7);
  CHECK(contents(va2) == contents(va));
  auto [tr3, va3] = split_dataset(d, 0.8, 8);
  CHECK(contents(va3) != contents(va));

  // N = 100 -> 80 / 20.
  Dataset h = d;
  h.trajectories.resize(100);
  auto [a, b] = split_dataset(h, 0.8, 1);
  CHECK(a.size() == 80);
  CHECK(b.size() == 20);

  Dataset tiny = d;
  tiny.trajectories.resize(4);
  CHECK_THROWS_AS(split_dataset(tiny, 0.8, 1), Error);
  CHECK_THROWS_AS(split_dataset(d, 1.0, 1), Error);
}

TEST_CASE("ACC oracles") {
  const Dataset d = make_data(3, 2, 375, {0.1, 0.3});

  SUBCASE("true one-hot gives 1") {
    std::vector<std::vector<int>> pred;
    for (const auto& t : d.trajectories) pred.emplace_back(t.steps(), int(t.label));
    CHECK(accuracy_from_predictions(d, pred).acc == 1.0);
  }

  SUBCASE("uniform random classifier gives 1/17") {
    // Oracle: independent uniform guesses hit with probability 1/17; 25500
    // steps give a standard error of 0.0015.
    std::mt19937_64 rng(99);
    std::vector<std::vector<int>> pred;
    for (const auto& t : d.trajectories) {
      std::vector<int> p(t.steps());
      for (auto& v : p) v = int(rng() % kNumClasses);
      pred.push_back(std::move(p));
    }
    const Metrics m = accuracy_from_predictions(d, pred);
    CHECK(m.steps >= 10000);
    CHECK(std::abs(m.acc - 1.0 / 17.0) <= 0.01);
  }

  SUBCASE("template oracle gives 1 - mean prefix fraction") {
    // Predicts the generating class: the prefix class before prefix_len.
    std::vector<std::vector<int>> pred;
    for (const auto& t : d.trajectories) {
      std::vector<int> p(t.steps(), int(t.label));
      for (std::size_t s = 0; s < t.prefix_len; ++s) p[s] = int(t.prefix_class);
      pred.push_back(std::move(p));
    }
    const Metrics m = accuracy_from_predictions(d, pred);
    const double expected = 1.0 - 0.5 * (0.1 + 0.3);
    CHECK(std::abs(m.acc - expected) <= 0.02);
    // Exact by counting.
    double prefix_steps = 0;
    for (const auto& t : d.trajectories) prefix_steps += t.prefix_len;
    CHECK(m.acc == doctest::Approx(1.0 - prefix_steps / double(m.steps)).epsilon(1e-12));
  }

  SUBCASE("confusion consistent with per-class and overall ACC") {
    std::mt19937_64 rng(5);
    std::vector<std::vector<int>> pred;
    for (const auto& t : d.trajectories) {
      std::vector<int> p(t.steps());
      for (auto& v : p) v = rng() % 3 == 0 ? int(rng() % kNumClasses) : int(t.label);
      pred.push_back(std::move(p));
    }
    const Metrics m = accuracy_from_predictions(d, pred);
    std::uint64_t trace = 0, total = 0;
    for (std::size_t c = 0; c < kNumClasses; ++c) {
      const auto row = std::accumulate(m.confusion[c].begin(), m.confusion[c].end(), std::uint64_t{0});
      CHECK(row == 4 * 375);
      trace += m.confusion[c][c];
      total += row;
      CHECK(m.per_class_acc[c] == doctest::Approx(double(m.confusion[c][c]) / double(row)));
    }
    CHECK(m.acc == doctest::Approx(double(trace) / double(total)));
    CHECK(m.n_valid == d.size());
  }
}

TEST_CASE("prepare_frames: mirror then mask, and the two commute") {
  const Dataset d = make_data(4, 1, 6);
  const auto geom = sense::PatchGeometry::default_grid();
  for (const char* name : {"full", "no-force", "no-prox", "no-accel"}) {
    const auto mask = sense::ModalityMask::parse(name);
    for (const auto& t : d.trajectories) {
      const std::vector<float> got = prepare_frames(t, mask, geom);
      REQUIRE(got.size() == t.frames.size());
      std::vector<float> a(sense::kFrameDim), b(sense::kFrameDim);
      for (std::size_t s = 0; s < t.steps(); ++s) {
        // mask(mirror(x)) vs mirror(mask(x)).
        std::copy_n(t.frame(s).begin(), sense::kFrameDim, a.begin());
        if (t.side == synth::Side::right) sense::mirror_values(t.frame(s), a, geom);
        sense::apply_mask_inplace(a, mask);
        std::vector<float> m(t.frame(s).begin(), t.frame(s).end());
        sense::apply_mask_inplace(m, mask);
        if (t.side == synth::Side::right)
          sense::mirror_values(m, b, geom);
        else
          b = m;
        for (std::size_t i = 0; i < sense::kFrameDim; ++i) {
          REQUIRE(got[s * sense::kFrameDim + i] == a[i]);
          REQUIRE(b[i] == doctest::Approx(a[i]).epsilon(1e-6));
        }
      }
    }
  }
}

TEST_CASE("train config validation and JSON") {
  TrainConfig c;
  c.split_ratio = 1.0;
  CHECK_THROWS_AS(c.validate(), Error);
  c = TrainConfig{};
  c.update_window = 0;
  CHECK_THROWS_AS(c.validate(), Error);
  c = TrainConfig{};
  c.optimizer = "sgd";
  CHECK_THROWS_AS(c.validate(), Error);
  c = TrainConfig{};
  c.mask = sense::ModalityMask::parse("no-prox");
  c.epochs = 150;
  const TrainConfig back = TrainConfig::from_json(c.to_json());
  CHECK(back.to_json() == c.to_json());
  CHECK(back.batch_size == 128);
  CHECK(back.update_window == 100);
  CHECK(back.split_ratio == 0.8);
  CHECK_THROWS_AS(TrainConfig::from_json({{"epoch", 3}}), Error);
  CHECK_THROWS_AS(TrainConfig::from_json({{"mask", "no-skin"}}), Error);
}

TEST_CASE("epochs = 0 returns the input parameters and one validation pass") {
  const Dataset d = make_data(5, 1, 20);
  auto [tr, va] = split_dataset(d, 0.8, 1);
  TrainConfig cfg;
  cfg.epochs = 0;
  const auto p = nn::init_params<float>(small_arch(), 3, nn::ParamBudget::unbounded());
  const TrainResult r = train::train(tr, va, cfg, p);
  CHECK(r.params.data == p.data);
  CHECK(r.metrics.curve.empty());
  CHECK(r.metrics.n_valid == va.size());
  CHECK(r.metrics.acc == accuracy(p, va, cfg.mask).acc);
}

TEST_CASE("training is deterministic and writes checkpoints") {
  const Dataset d = make_data(6, 1, 120);
  auto [tr, va] = split_dataset(d, 0.8, 2);
  TrainConfig cfg;
  cfg.epochs = 2;
  cfg.batch_size = 8;
  cfg.update_window = 50;
  const fs::path dir = fs::temp_directory_path() / "smi_test_trainer";
  fs::create_directories(dir);
  cfg.checkpoint_path = (dir / "m").string();
  cfg.checkpoint_every = 1;
  const auto p = nn::init_params<float>(small_arch(), 4, nn::ParamBudget::unbounded());
  std::vector<EpochRecord> seen;
  const TrainResult a = train::train(tr, va, cfg, p, [&](const EpochRecord& e) { seen.push_back(e); });
  const TrainResult b = train::train(tr, va, cfg, p);
  CHECK(seen.size() == 2);
  CHECK(a.metrics.curve.size() == 2);
  CHECK(a.params.data == b.params.data);
  CHECK(a.metrics.acc == b.metrics.acc);
  CHECK(a.params.data != p.data);

  const nn::Checkpoint ck = nn::load_checkpoint(cfg.checkpoint_path);
  CHECK(ck.params.data == a.params.data);
  CHECK(ck.training["epoch"] == 2);
  CHECK(ck.training["config"]["mask"] == "full");
  fs::remove_all(dir);
}

TEST_CASE("interrupt writes a checkpoint and throws Interrupted") {
  const Dataset d = make_data(7, 1, 30);
  auto [tr, va] = split_dataset(d, 0.8, 2);
  TrainConfig cfg;
  cfg.epochs = 3;
  const fs::path dir = fs::temp_directory_path() / "smi_test_interrupt";
  fs::create_directories(dir);
  cfg.checkpoint_path = (dir / "m").string();
  const auto p = nn::init_params<float>(small_arch(), 4, nn::ParamBudget::unbounded());
  request_interrupt();
  try {
    train::train(tr, va, cfg, p);
    FAIL("expected Interrupted");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::interrupted);
  }
  clear_interrupt();
  const nn::Checkpoint ck = nn::load_checkpoint(cfg.checkpoint_path);
  CHECK(ck.training["interrupted"] == true);
  CHECK(ck.params.data == p.data);
  fs::remove_all(dir);
}

TEST_CASE("toy NoTouch vs Push reaches ACC >= 0.99 within 20 epochs") {
  // Zero noise and no prefix: the classes differ on every frame.
  synth::GenConfig g;
  g.classes = {ContactClass::NoTouch, ContactClass::Push};
  g.sides = {synth::Side::left};
  g.n_per_class = 10;
  g.noise_scale = 0.0;
  g.prefix_fraction_range = {0.0, 0.0};
  g.seed = 31;
  const Dataset d = synth::generate_dataset(g);
  auto [tr, va] = split_dataset(d, 0.8, 1);
  TrainConfig cfg;
  cfg.epochs = 20;
  const TrainResult r = train::train(tr, va, cfg, nn::init_params<float>(nn::ArchConfig{}, 1));
  double best = 0.0;
  for (const auto& e : r.metrics.curve) best = std::max(best, e.valid_acc);
  CHECK(best >= 0.99);
  CHECK(r.metrics.acc >= 0.99);
}

TEST_CASE("ablation suite structure, CSV and plot") {
  const Dataset soft = make_data(8, 1, 12);
  synth::GenConfig sub = synth::GenConfig::torque_subset(synth::SupportKind::soft, 9);
  sub.n_per_class = 2;
  sub.traj_len = 12;
  const Dataset soft_sub = synth::generate_dataset(sub);
  sub.support = synth::SupportModel::rigid();
  const Dataset rigid_sub = synth::generate_dataset(sub);

  TrainConfig base;
  base.epochs = 2;
  base.update_window = 6;
  CHECK_THROWS_AS(ablation_suite(base, {&soft, &soft_sub, &rigid_sub}, {1, 2}), Error);

  std::size_t callbacks = 0;
  const AblationReport rep = ablation_suite(base, {&soft, &soft_sub, &rigid_sub}, {1, 2, 3}, default_conditions(),
                                            small_arch(), [&](const std::string&, std::uint64_t, const EpochRecord&) {
                                              ++callbacks;
                                            });
  CHECK(rep.runs.size() == 18);
  CHECK(callbacks == 36);
  const auto summary = rep.summary();
  CHECK(summary.size() == 6);
  CHECK(summary["full"]["final_acc"].size() == 3);
  CHECK(summary["rigid-torque"]["mean_curve"].size() == 2);

  const std::string csv = rep.curves_csv();
  CHECK(csv.rfind("epoch,split,condition,seed,acc,loss\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 1 + 18 * 2 * 2);

  const std::string svg = render_acc_svg(rep);
  CHECK(svg.rfind("<svg", 0) == 0);
  std::size_t groups = 0, bands = 0;
  for (std::size_t p = 0; (p = svg.find("class=\"condition\"", p)) != std::string::npos; ++p) ++groups;
  for (std::size_t p = 0; (p = svg.find("class=\"spread\"", p)) != std::string::npos; ++p) ++bands;
  CHECK(groups == 6);
  CHECK(bands == 6);
  CHECK(svg.find("stroke-dasharray") != std::string::npos);
}
