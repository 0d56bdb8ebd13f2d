// Copyright (C) 2026 SMI contributors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <map>
#include <set>

#include "doctest.h"
#include "smi/common/error.hpp"
#include "smi/synthgen/generator.hpp"

using namespace smi;
using namespace smi::synth;
namespace fs = std::filesystem;

namespace {

GenConfig small_cfg(std::uint64_t seed, std::size_t n = 2) {
  GenConfig c;
  c.n_per_class = n;
  c.seed = seed;
  return c;
}

double channel_sum(std::span<const float> f, std::size_t ch) {
  double s = 0.0;
  for (std::size_t c = 0; c < sense::kCells; ++c) s += f[c * sense::kChannels + ch];
  return s;
}

double force_total(std::span<const float> f) {
  return channel_sum(f, 0) + channel_sum(f, 1) + channel_sum(f, 2);
}

double pearson(const std::vector<double>& a, const std::vector<double>& b) {
  const double n = double(a.size());
  double ma = 0, mb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) ma += a[i] / n, mb += b[i] / n;
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  return saa > 0 && sbb > 0 ? sab / std::sqrt(saa * sbb) : 0.0;
}

// Mean over trajectories of corr(accel z summed over cells, d/dt force sum).
double accel_force_rate_corr(ContactClass cls, SupportModel support, std::uint64_t seed) {
  GenConfig cfg;
  cfg.support = support;
  Rng rng(seed);
  const auto t = generate_trajectory(cls, cfg, rng);
  std::vector<double> acc, rate;
  for (std::size_t s = t.prefix_len + 4; s < t.steps(); ++s) {
    rate.push_back(force_total(t.frame(s)) - force_total(t.frame(s - 1)));
    acc.push_back(channel_sum(t.frame(s), sense::kAccel0 + 2));
  }
  return pearson(acc, rate);
}

using Centroids = std::map<int, std::vector<double>>;

// Per-frame nearest centroid over the final 100 frames of every trajectory,
// restricted to channels where `keep(channel)` holds.
template <class Keep>
Centroids fit_centroids(const Dataset& d, Keep keep) {
  Centroids sum;
  std::map<int, double> count;
  for (const auto& t : d.trajectories) {
    auto& c = sum[int(t.label)];
    c.resize(sense::kFrameDim, 0.0);
    for (std::size_t s = t.steps() - 100; s < t.steps(); ++s) {
      const auto f = t.frame(s);
      for (std::size_t i = 0; i < sense::kFrameDim; ++i)
        if (keep(i % sense::kChannels)) c[i] += f[i];
      count[int(t.label)] += 1;
    }
  }
  for (auto& [k, c] : sum)
    for (auto& v : c) v /= count[k];
  return sum;
}

template <class Keep>
double centroid_accuracy(const Centroids& cent, const Dataset& d, Keep keep) {
  std::size_t hit = 0, total = 0;
  for (const auto& t : d.trajectories) {
    for (std::size_t s = t.steps() - 100; s < t.steps(); ++s) {
      const auto f = t.frame(s);
      int best = -1;
      double best_d = 1e300;
      for (const auto& [k, c] : cent) {
        double dist = 0.0;
        for (std::size_t i = 0; i < sense::kFrameDim; ++i)
          if (keep(i % sense::kChannels)) dist += (f[i] - c[i]) * (f[i] - c[i]);
        if (dist < best_d) best_d = dist, best = k;
      }
      hit += best == int(t.label);
      ++total;
    }
  }
  return double(hit) / double(total);
}

std::string slurp(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(is), {}};
}

}  // namespace

TEST_CASE("every generated frame is a valid frame") {
  GenConfig cfg = small_cfg(3, 1);
  for (SupportKind k : {SupportKind::soft, SupportKind::rigid}) {
    cfg.support = SupportModel::of(k);
    const Dataset d = generate_dataset(cfg);
    for (const auto& t : d.trajectories) {
      REQUIRE(t.steps() == cfg.traj_len);
      for (std::size_t s = 0; s < t.steps(); ++s) sense::validate_values(t.frame(s));
    }
  }
}

TEST_CASE("dataset size and exactly uniform labels") {
  const Dataset d = generate_dataset(small_cfg(1, 2));
  CHECK(d.size() == 68);
  std::map<ContactClass, int> per_class;
  std::map<std::pair<ContactClass, Side>, int> per_cell;
  for (const auto& t : d.trajectories) {
    ++per_class[t.label];
    ++per_cell[{t.label, t.side}];
  }
  CHECK(per_class.size() == kNumClasses);
  for (const auto& [c, n] : per_class) CHECK(n == 4);
  for (const auto& [c, n] : per_cell) CHECK(n == 2);
  CHECK(d.manifest["counts"]["Push"] == 4);
}

TEST_CASE("presets: desk is 510 trajectories, large is 1038") {
  const GenConfig desk = GenConfig::preset("desk");
  CHECK(desk.dataset_size() == 510);
  const GenConfig large = GenConfig::preset("large");
  CHECK(large.dataset_size() == 1038);
  std::size_t sum = 0, lo = SIZE_MAX, hi = 0;
  for (std::size_t c = 0; c < large.classes.size(); ++c)
    for (std::size_t s = 0; s < large.sides.size(); ++s) {
      const auto n = large.cell_count(c, s);
      sum += n;
      lo = std::min(lo, n);
      hi = std::max(hi, n);
    }
  CHECK(sum == 1038);
  CHECK(lo == 30);
  CHECK(hi == 31);
  CHECK_THROWS_AS(GenConfig::preset("huge"), Error);

  // Generation honours the total (shortened trajectories keep this fast).
  GenConfig g = large;
  g.traj_len = 4;
  CHECK(generate_dataset(g).size() == 1038);
}

TEST_CASE("generator config validation and JSON round-trip") {
  GenConfig c;
  c.traj_len = 1;
  CHECK_THROWS_AS(c.validate(), Error);
  c = GenConfig{};
  c.prefix_fraction_range = {0.2, 0.6};
  CHECK_THROWS_AS(c.validate(), Error);
  c = GenConfig{};
  c.classes = {ContactClass::Push, ContactClass::Push};
  CHECK_THROWS_AS(c.validate(), Error);
  c = GenConfig{};
  c.support = SupportModel{SupportKind::rigid, 0.5, 0.08};
  CHECK_THROWS_AS(c.validate(), Error);

  GenConfig r = GenConfig::torque_subset(SupportKind::rigid, 9);
  const GenConfig back = GenConfig::from_json(r.to_json());
  CHECK(back.to_json() == r.to_json());
  CHECK(back.support.kind == SupportKind::rigid);
  CHECK_THROWS_AS(GenConfig::from_json({{"n_per_clas", 3}}), Error);
  CHECK(GenConfig::from_json({{"support", "rigid"}}).support.coupling == 0.0);
}

TEST_CASE("prefix metadata and label semantics") {
  GenConfig cfg;
  cfg.prefix_fraction_range = {0.1, 0.3};
  cfg.noise_scale = 0.0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(seed);
    const auto t = generate_trajectory(ContactClass::NoTouch, cfg, rng);
    CHECK(t.label == ContactClass::NoTouch);
    CHECK(t.prefix_class != ContactClass::NoTouch);
    CHECK(t.prefix_len >= std::floor(0.1 * 375));
    CHECK(t.prefix_len <= std::ceil(0.3 * 375));
  }
}

TEST_CASE("NoTouch with zero noise is exactly at rest after the prefix") {
  GenConfig cfg;
  cfg.noise_scale = 0.0;
  cfg.prefix_fraction_range = {0.1, 0.3};
  for (Side side : {Side::left, Side::right}) {
    Rng rng(42);
    const auto t = generate_trajectory(ContactClass::NoTouch, cfg, rng, side);
    // The cross-fade occupies the three frames after the prefix.
    for (std::size_t s = t.prefix_len + 3; s < t.steps(); ++s) {
      const auto f = t.frame(s);
      for (std::size_t c = 0; c < sense::kCells; ++c) {
        for (std::size_t ch = 0; ch < 4; ++ch) REQUIRE(f[c * 7 + ch] == 0.0f);
        for (std::size_t ch = 4; ch < 7; ++ch) REQUIRE(f[c * 7 + ch] == doctest::Approx(0.5).epsilon(1e-6));
      }
    }
  }
}

TEST_CASE("soft support: TorqueLeft and TorqueRight accel-x mirror about 0.5") {
  GenConfig cfg;
  cfg.noise_scale = 0.0;
  Rng a(77), b(77);
  const auto left = generate_trajectory(ContactClass::TorqueLeft, cfg, a);
  const auto right = generate_trajectory(ContactClass::TorqueRight, cfg, b);
  const std::size_t start = std::max(left.prefix_len, right.prefix_len) + 3;
  double max_dev = 0.0, max_signal = 0.0;
  for (std::size_t s = start; s < left.steps(); ++s) {
    const auto fl = left.frame(s), fr = right.frame(s);
    for (std::size_t c = 0; c < sense::kCells; ++c) {
      const double xl = fl[c * 7 + 4], xr = fr[c * 7 + 4];
      max_dev = std::max(max_dev, std::abs((xl - 0.5) + (xr - 0.5)));
      max_signal = std::max(max_signal, std::abs(xl - 0.5));
    }
  }
  CHECK(max_signal > 0.05);
  CHECK(max_dev < 1e-6);
}

TEST_CASE("rigid support: accel uncorrelated with force rate") {
  // Oracle: with zero coupling accel is noise independent of the force path,
  // so the sample correlation averages to zero; soft support as a contrast.
  for (ContactClass cls : {ContactClass::Push, ContactClass::TorqueLeft, ContactClass::GrabClock}) {
    double rigid = 0.0, soft = 0.0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      rigid += accel_force_rate_corr(cls, SupportModel::rigid(), 1000 + seed) / 20.0;
      soft += accel_force_rate_corr(cls, SupportModel::soft(), 1000 + seed) / 20.0;
    }
    CAPTURE(class_name(cls));
    CHECK(std::abs(rigid) < 0.1);
    CHECK(soft > 0.2);
  }
}

TEST_CASE("right-side streams are the mirror of a left-frame synthesis") {
  GenConfig cfg;
  const auto geom = sense::PatchGeometry::default_grid();
  Rng a(5), b(5);
  const auto left = generate_trajectory(ContactClass::GrabLeft, cfg, a, Side::left);
  const auto right = generate_trajectory(ContactClass::GrabLeft, cfg, b, Side::right);
  CHECK(right.side == Side::right);
  std::vector<float> back(sense::kFrameDim);
  for (std::size_t s = 0; s < left.steps(); s += 37) {
    sense::mirror_values(right.frame(s), back, geom);
    for (std::size_t i = 0; i < sense::kFrameDim; ++i) REQUIRE(back[i] == doctest::Approx(left.frame(s)[i]).epsilon(1e-6));
  }
}

TEST_CASE("templates: pairwise distinct and physically ordered") {
  const TemplateSet ts = class_templates_default();
  // Exhaustive pairwise diff over the 136 pairs.
  int pairs = 0;
  for (std::size_t i = 0; i < kNumClasses; ++i)
    for (std::size_t j = i + 1; j < kNumClasses; ++j) {
      const auto& a = ts[i];
      const auto& b = ts[j];
      const bool differ = a.footprint != b.footprint || a.proximity != b.proximity ||
                          a.tangential_dir != b.tangential_dir || a.rotation != b.rotation ||
                          a.normal_drive != b.normal_drive || a.force_gain != b.force_gain;
      CAPTURE(class_name(a.cls));
      CAPTURE(class_name(b.cls));
      CHECK(differ);
      ++pairs;
    }
  CHECK(pairs == 136);

  for (const auto& t : ts) {
    for (double w : t.footprint) CHECK((w >= 0.0 && w <= 1.0));
    const double n = std::hypot(t.tangential_dir[0], t.tangential_dir[1]);
    CHECK((n == 0.0 || std::abs(n - 1.0) < 1e-12));
  }
  const auto& nt = ts[index_of(ContactClass::NoTouch)];
  for (std::size_t c = 0; c < sense::kCells; ++c) CHECK(nt.footprint[c] == 0.0);

  // Clockwise and anticlockwise tangential fields are negatives.
  const auto geom = sense::PatchGeometry::default_grid();
  const auto& cw = ts[index_of(ContactClass::TorqueClock)];
  const auto& acw = ts[index_of(ContactClass::TorqueAnticlock)];
  for (const auto& p : geom.positions) {
    const auto u = cw.drive_at(p[0], p[1]), v = acw.drive_at(p[0], p[1]);
    CHECK(u[0] == -v[0]);
    CHECK(u[1] == -v[1]);
  }

  // Grab leaves a gap over the palm: lower proximity than Torque on every
  // cell the fingers do not cover.
  const std::array<ContactClass, 6> grabs{ContactClass::GrabLeft, ContactClass::GrabRight, ContactClass::GrabForward,
                                          ContactClass::GrabBackward, ContactClass::GrabClock, ContactClass::GrabAnticlock};
  const std::array<ContactClass, 6> torques{ContactClass::TorqueLeft, ContactClass::TorqueRight, ContactClass::TorqueForward,
                                            ContactClass::TorqueBackward, ContactClass::TorqueClock, ContactClass::TorqueAnticlock};
  int palm_cells = 0;
  for (std::size_t k = 0; k < 6; ++k) {
    const auto& g = ts[index_of(grabs[k])];
    const auto& t = ts[index_of(torques[k])];
    for (std::size_t c = 0; c < sense::kCells; ++c) {
      if (g.footprint[c] > 0.0) continue;
      ++palm_cells;
      CHECK(g.proximity[c] < t.proximity[c]);
    }
  }
  CHECK(palm_cells > 0);
}

TEST_CASE("nearest-centroid baselines") {
  GenConfig cfg = small_cfg(11, 4);
  const Dataset fit = generate_dataset(cfg);
  cfg.seed = 12;
  const Dataset test = generate_dataset(cfg);
  auto all = [](std::size_t) { return true; };
  const double acc = centroid_accuracy(fit_centroids(fit, all), test, all);
  CHECK(acc > 1.0 / 17.0);

  // Rigid support: accel alone cannot tell TorqueLeft from TorqueRight.
  GenConfig r = GenConfig::torque_subset(SupportKind::rigid, 21);
  r.classes = {ContactClass::TorqueLeft, ContactClass::TorqueRight};
  r.n_per_class = 20;
  const Dataset rfit = generate_dataset(r);
  r.seed = 22;
  const Dataset rtest = generate_dataset(r);
  auto accel = [](std::size_t ch) { return ch >= sense::kAccel0; };
  const double racc = centroid_accuracy(fit_centroids(rfit, accel), rtest, accel);
  CHECK(std::abs(racc - 0.5) <= 0.1);
}

TEST_CASE("determinism and dataset file round-trip") {
  const GenConfig cfg = small_cfg(8, 1);
  const Dataset a = generate_dataset(cfg);
  const Dataset b = generate_dataset(cfg);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a.trajectories[i].frames == b.trajectories[i].frames);

  const fs::path dir = fs::temp_directory_path() / "smi_test_synthgen";
  fs::create_directories(dir);
  const std::string p1 = (dir / "a.smid").string(), p2 = (dir / "b.smid").string();
  save_dataset(p1, a);
  save_dataset(p2, b);
  CHECK(slurp(p1) == slurp(p2));

  const Dataset back = load_dataset(p1);
  REQUIRE(back.size() == a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(back.trajectories[i].label == a.trajectories[i].label);
    CHECK(back.trajectories[i].side == a.trajectories[i].side);
    CHECK(back.trajectories[i].prefix_class == a.trajectories[i].prefix_class);
    CHECK(back.trajectories[i].prefix_len == a.trajectories[i].prefix_len);
    CHECK(back.trajectories[i].frames == a.trajectories[i].frames);
  }
  CHECK(back.manifest["seed"] == 8);

  // Truncated file.
  const std::string bytes = slurp(p1);
  {
    std::ofstream os(dir / "short.smid", std::ios::binary);
    os.write(bytes.data(), static_cast<std::streamsize>(bytes.size() / 2));
  }
  CHECK_THROWS_AS(load_dataset((dir / "short.smid").string()), Error);
  CHECK_THROWS_AS(load_dataset((dir / "missing.smid").string()), Error);
  fs::remove_all(dir);

  GenConfig other = cfg;
  other.seed = 9;
  CHECK(generate_dataset(other).trajectories[0].frames != a.trajectories[0].frames);
}
