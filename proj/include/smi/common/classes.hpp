// Copyright (C) 2026 SMI contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string_view>

namespace smi {

// Stable integer encoding 0..16; do not reorder.
enum class ContactClass : std::uint8_t {
  TorqueLeft,
  TorqueRight,
  TorqueForward,
  TorqueBackward,
  TorqueClock,
  TorqueAnticlock,
  GrabLeft,
  GrabRight,
  GrabForward,
  GrabBackward,
  GrabClock,
  GrabAnticlock,
  TouchOutside,
  TouchInside,
  Push,
  Pull,
  NoTouch,
};

inline constexpr std::size_t kNumClasses = 17;

inline constexpr std::array<ContactClass, kNumClasses> kAllClasses = {
    ContactClass::TorqueLeft,   ContactClass::TorqueRight,    ContactClass::TorqueForward,
    ContactClass::TorqueBackward, ContactClass::TorqueClock,  ContactClass::TorqueAnticlock,
    ContactClass::GrabLeft,     ContactClass::GrabRight,      ContactClass::GrabForward,
    ContactClass::GrabBackward, ContactClass::GrabClock,      ContactClass::GrabAnticlock,
    ContactClass::TouchOutside, ContactClass::TouchInside,    ContactClass::Push,
    ContactClass::Pull,         ContactClass::NoTouch,
};

constexpr std::size_t index_of(ContactClass c) { return static_cast<std::size_t>(c); }

std::string_view class_name(ContactClass c) noexcept;
std::optional<ContactClass> parse_class(std::string_view name) noexcept;

using ClassProbs = std::array<float, kNumClasses>;

}  // namespace smi
