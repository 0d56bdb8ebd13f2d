// Copyright (C) 2026 SMI contributors
// SPDX-License-Identifier: Apache-2.0

#include "smi/common/classes.hpp"

namespace smi {
namespace {
constexpr std::array<std::string_view, kNumClasses> kNames = {
    "TorqueLeft",   "TorqueRight",  "TorqueForward", "TorqueBackward", "TorqueClock",
    "TorqueAnticlock", "GrabLeft",  "GrabRight",     "GrabForward",    "GrabBackward",
    "GrabClock",    "GrabAnticlock", "TouchOutside", "TouchInside",    "Push",
    "Pull",         "NoTouch",
};
}  // namespace

std::string_view class_name(ContactClass c) noexcept { return kNames[index_of(c)]; }

std::optional<ContactClass> parse_class(std::string_view name) noexcept {
  for (std::size_t i = 0; i < kNumClasses; ++i)
    if (kNames[i] == name) return static_cast<ContactClass>(i);
  return std::nullopt;
}

}  // namespace smi
