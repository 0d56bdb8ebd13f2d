// Copyright (C) 2026 SMI contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "smi/common/classes.hpp"
#include "smi/common/rng.hpp"
#include "smi/sensekit/frame.hpp"
#include "smi/sensekit/geometry.hpp"
#include "smi/synthgen/templates.hpp"

namespace smi::synth {

enum class Side : std::uint8_t { left = 0, right = 1 };
std::string_view side_name(Side s);

struct GenConfig {
  std::size_t n_per_class = 15;  // per class and per side
  // When nonzero, overrides n_per_class: `total` trajectories spread over
  // (class, side) cells, the first total % cells ones getting one extra.
  std::size_t total = 0;
  std::size_t traj_len = 375;
  std::array<double, 2> prefix_fraction_range{0.01, 0.03};
  std::uint64_t seed = 0;
  SupportModel support = SupportModel::soft();
  std::vector<ContactClass> classes{kAllClasses.begin(), kAllClasses.end()};
  std::vector<Side> sides{Side::left, Side::right};
  double noise_scale = 1.0;      // multiplies every noise sigma; 0 gives clean streams
  double cue_gain = 0.2;         // force-distribution response to the in-plane drive
  double cue_bias_sigma = 0.6;   // per-trajectory offset of that response

  /// ConfigInvalid on traj_len < 2, a prefix range outside [0, 0.5], empty or
  /// duplicate class/side lists, or an invalid support model.
  void validate() const;
  nlohmann::json to_json() const;
  static GenConfig from_json(const nlohmann::json& j);

  /// Trajectories generated for (class position, side position).
  std::size_t cell_count(std::size_t class_pos, std::size_t side_pos) const;
  std::size_t dataset_size() const;

  /// "desk" (15 per class and side, 510) or "large" (1038 in total).
  static GenConfig preset(std::string_view name);
  /// Six Torque classes, 25 per class, left side only.
  static GenConfig torque_subset(SupportKind kind, std::uint64_t seed);
};

struct LabeledTrajectory {
  std::vector<float> frames;  // steps x 301
  ContactClass label = ContactClass::NoTouch;
  Side side = Side::left;
  ContactClass prefix_class = ContactClass::NoTouch;
  std::uint32_t prefix_len = 0;

  std::size_t steps() const { return frames.size() / sense::kFrameDim; }
  std::span<const float> frame(std::size_t t) const {
    return std::span<const float>(frames).subspan(t * sense::kFrameDim, sense::kFrameDim);
  }
};

struct Dataset {
  std::vector<LabeledTrajectory> trajectories;
  nlohmann::json manifest = nlohmann::json::object();

  std::size_t size() const { return trajectories.size(); }
  std::size_t steps() const { return trajectories.empty() ? 0 : trajectories.front().steps(); }
};

class Generator {
 public:
  explicit Generator(const sense::PatchGeometry& geom = sense::PatchGeometry::default_grid());

  /// One trajectory in the patch's own frame; right-side streams are the
  /// mirror image of the left-frame synthesis.
  LabeledTrajectory trajectory(ContactClass target, const GenConfig& cfg, Rng& rng,
                               Side side = Side::left) const;
  /// n_per_class trajectories for every (class, side), shuffled by seed.
  /// Independent of thread count.
  Dataset dataset(const GenConfig& cfg) const;

  const TemplateSet& templates() const { return templates_; }
  const sense::PatchGeometry& geometry() const { return geom_; }

 private:
  sense::PatchGeometry geom_;
  TemplateSet templates_;
};

LabeledTrajectory generate_trajectory(ContactClass target, const GenConfig& cfg, Rng& rng,
                                      Side side = Side::left);
Dataset generate_dataset(const GenConfig& cfg);

inline constexpr std::uint32_t kDatasetVersion = 1;

/// "SMIDSET1", u32 manifest length, manifest JSON, then per trajectory:
/// u8 label, u8 side, u8 prefix class, u8 reserved, u32 prefix length,
/// steps x 301 float32 (little-endian).
void save_dataset(const std::string& path, const Dataset& d);
Dataset load_dataset(const std::string& path);

}  // namespace smi::synth
