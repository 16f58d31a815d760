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

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <ostream>
#include <type_traits>

namespace clay {

/// Axis-aligned box covering the half-open region [left, right) x [top, bottom).
template <typename T>
struct Box {
  T left{}, top{}, right{}, bottom{};

  constexpr T width() const { return right - left; }
  constexpr T height() const { return bottom - top; }
  constexpr bool empty() const { return right <= left || bottom <= top; }
  constexpr auto area() const {
    if constexpr (std::is_integral_v<T>)
      return empty() ? std::int64_t{0} : std::int64_t(width()) * std::int64_t(height());
    else
      return empty() ? T(0) : width() * height();
  }
  constexpr bool contains(const Box& o) const {
    return o.left >= left && o.right <= right && o.top >= top && o.bottom <= bottom;
  }
  constexpr bool operator==(const Box&) const = default;

  template <typename U>
  constexpr Box<U> cast() const {
    return {static_cast<U>(left), static_cast<U>(top), static_cast<U>(right), static_cast<U>(bottom)};
  }
};

using BoundingBox = Box<int>;

/// Intersection; the result may be empty.
template <typename T>
constexpr Box<T> intersect(const Box<T>& a, const Box<T>& b) {
  Box<T> r{std::max(a.left, b.left), std::max(a.top, b.top), std::min(a.right, b.right), std::min(a.bottom, b.bottom)};
  if (r.right < r.left) r.right = r.left;
  if (r.bottom < r.top) r.bottom = r.top;
  return r;
}

template <typename T>
constexpr bool overlaps(const Box<T>& a, const Box<T>& b) {
  return !intersect(a, b).empty();
}

template <typename T>
std::ostream& operator<<(std::ostream& os, const Box<T>& b) {
  return os << "[" << b.left << "," << b.top << "," << b.right << "," << b.bottom << "]";
}

/// Maps a box between frames with independent x/y scale factors, rounding
/// each edge half-up.
inline BoundingBox scale_box(const BoundingBox& b, double sx, double sy) {
  auto r = [](double v) { return static_cast<int>(std::floor(v + 0.5)); };
  return {r(b.left * sx), r(b.top * sy), r(b.right * sx), r(b.bottom * sy)};
}

}  // namespace clay
