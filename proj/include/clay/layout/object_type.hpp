/*
 * Copyright 2026 The clay Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <array>
#include <optional>
#include <string_view>

namespace clay {

/// Semantic object taxonomy. The first 24 entries are the classes the type
/// models predict; INVALID marks nodes without a valid visual representation.
enum class ObjectType : int {
  ADVERTISEMENT,
  BUTTON,
  CARD_VIEW,
  CHECKBOX,
  CONTAINER,
  DATE_PICKER,
  DRAWER,
  IMAGE,
  LABEL,
  LIST_ITEM,
  MAP,
  NAVIGATION_BAR,
  NUMBER_STEPPER,
  PAGER_INDICATOR,
  PICTOGRAM,
  PROGRESS_BAR,
  RADIO_BUTTON,
  SLIDER,
  SPINNER,
  SWITCH,
  TEXT,
  TEXT_INPUT,
  TOOLBAR,
  KEYBOARD,
  INVALID,
};

inline constexpr int kSemanticTypeCount = 24;
inline constexpr int kObjectTypeCount = 25;

inline constexpr std::array<std::string_view, kObjectTypeCount> kObjectTypeNames = {
    "ADVERTISEMENT", "BUTTON",         "CARD_VIEW",    "CHECKBOX",        "CONTAINER",
    "DATE_PICKER",   "DRAWER",         "IMAGE",        "LABEL",           "LIST_ITEM",
    "MAP",           "NAVIGATION_BAR", "NUMBER_STEPPER", "PAGER_INDICATOR", "PICTOGRAM",
    "PROGRESS_BAR",  "RADIO_BUTTON",   "SLIDER",       "SPINNER",         "SWITCH",
    "TEXT",          "TEXT_INPUT",     "TOOLBAR",      "KEYBOARD",        "INVALID",
};

constexpr std::string_view to_string(ObjectType t) { return kObjectTypeNames[static_cast<int>(t)]; }
constexpr int index_of(ObjectType t) { return static_cast<int>(t); }
constexpr ObjectType object_type_at(int i) { return static_cast<ObjectType>(i); }
constexpr bool is_semantic(ObjectType t) { return index_of(t) < kSemanticTypeCount; }

inline std::optional<ObjectType> parse_object_type(std::string_view name) {
  for (int i = 0; i < kObjectTypeCount; ++i)
    if (kObjectTypeNames[i] == name) return object_type_at(i);
  return std::nullopt;
}

}  // namespace clay
