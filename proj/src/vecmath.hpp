/*
 * Copyright 2026 The Latte Authors
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

#include <cmath>
#include <cstddef>
#include <span>

namespace latte {

// Single-precision dot product with a fixed summation order (four running
// partials merged in a fixed sequence), so results are reproducible run to
// run without -ffast-math.
inline float dot_f32(const float* a, const float* b, size_t n) {
  float s0 = 0.f, s1 = 0.f, s2 = 0.f, s3 = 0.f;
  const size_t n4 = n - n % 4;
  size_t i = 0;
  for (; i < n4; i += 4) {
    s0 += a[i] * b[i];
    s1 += a[i + 1] * b[i + 1];
    s2 += a[i + 2] * b[i + 2];
    s3 += a[i + 3] * b[i + 3];
  }
  for (; i < n; ++i) s0 += a[i] * b[i];
  return (s0 + s1) + (s2 + s3);
}

inline float dot_f32(std::span<const float> a, std::span<const float> b) {
  return dot_f32(a.data(), b.data(), a.size());
}

inline double l2_norm(std::span<const float> v) {
  double s = 0.0;
  for (float x : v) s += double(x) * double(x);
  return std::sqrt(s);
}

// Scales v to unit L2 norm. Returns false (vector untouched) when the norm
// is too small to normalize meaningfully.
inline bool l2_normalize(std::span<float> v) {
  double n = l2_norm(v);
  if (n < 1e-9) return false;
  float inv = float(1.0 / n);
  for (auto& x : v) x *= inv;
  return true;
}

}  // namespace latte
