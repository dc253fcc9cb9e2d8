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

#include <cstdint>
#include <random>

namespace cmivf {

struct RngSeed {
  std::uint64_t value = 0;

  constexpr explicit RngSeed(std::uint64_t v = 0) : value(v) {}
  friend constexpr bool operator==(RngSeed, RngSeed) = default;
};

/// SplitMix64 finalizer; used to derive independent stream seeds.
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

/// Seed for the `stream`-th substream of `seed`. Streams are keyed by a
/// counter (chunk, trial, label...) so results do not depend on scheduling.
constexpr RngSeed derive_seed(RngSeed seed, std::uint64_t stream) {
  return RngSeed{mix64(seed.value ^ mix64(stream + 0x632BE59BD9B4E019ull))};
}

/// Portable random source.
///
/// The engine is std::mt19937_64, whose output sequence is fixed by the C++
/// standard. The standard distributions are implementation-defined, so the
/// conversions to uniform and normal variates are done here: uniforms take
/// the top 53 bits, normals use the Marsaglia polar method.
class Rng {
 public:
  explicit Rng(RngSeed seed) : engine_(mix64(seed.value)) {}
  Rng(RngSeed seed, std::uint64_t stream) : Rng(derive_seed(seed, stream)) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform in [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Uniform integer in [0, n); n must be positive.
  std::uint64_t uniform_index(std::uint64_t n);

  double normal();

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace cmivf
