// Copyright 2026 The cmivf Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstddef>

namespace cmivf {

// Float inputs, 64-bit accumulation. Four independent accumulators break the
// add dependency chain; they are combined in a fixed order so the result is
// reproducible.

inline double l2_sq(const float* a, const float* b, std::size_t d) {
  double s0 = 0, s1 = 0, s2 = 0, s3 = 0;
  std::size_t j = 0;
  for (; j + 4 <= d; j += 4) {
    const double e0 = double(a[j]) - double(b[j]);
    const double e1 = double(a[j + 1]) - double(b[j + 1]);
    const double e2 = double(a[j + 2]) - double(b[j + 2]);
    const double e3 = double(a[j + 3]) - double(b[j + 3]);
    s0 += e0 * e0;
    s1 += e1 * e1;
    s2 += e2 * e2;
    s3 += e3 * e3;
  }
  for (; j < d; ++j) {
    const double e = double(a[j]) - double(b[j]);
    s0 += e * e;
  }
  return (s0 + s1) + (s2 + s3);
}

inline double dot(const float* a, const float* b, std::size_t d) {
  double s0 = 0, s1 = 0, s2 = 0, s3 = 0;
  std::size_t j = 0;
  for (; j + 4 <= d; j += 4) {
    s0 += double(a[j]) * double(b[j]);
    s1 += double(a[j + 1]) * double(b[j + 1]);
    s2 += double(a[j + 2]) * double(b[j + 2]);
    s3 += double(a[j + 3]) * double(b[j + 3]);
  }
  for (; j < d; ++j) s0 += double(a[j]) * double(b[j]);
  return (s0 + s1) + (s2 + s3);
}

}  // namespace cmivf
