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
#include <cstdint>
#include <span>
#include <vector>

#include "cmivf/random.hpp"

namespace cmivf {

/// Dense row-major matrix of float embeddings (n rows x d columns).
///
/// Construction validates the invariants: n >= 1, d >= 2, all values finite,
/// and unit row norms (within 1e-4) when `normalized` is set.
class EmbeddingSet {
 public:
  static constexpr double kNormTolerance = 1e-4;

  EmbeddingSet(std::size_t rows, std::size_t dim, std::vector<float> data, bool normalized);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t dim() const noexcept { return dim_; }
  bool normalized() const noexcept { return normalized_; }

  std::span<const float> data() const noexcept { return data_; }
  std::span<const float> row(std::size_t i) const noexcept {
    return {data_.data() + i * dim_, dim_};
  }
  const float* row_ptr(std::size_t i) const noexcept { return data_.data() + i * dim_; }

  /// Rows at `ids`, in the given order.
  EmbeddingSet select(std::span<const std::uint64_t> ids) const;

  friend bool operator==(const EmbeddingSet&, const EmbeddingSet&) = default;

 private:
  std::size_t rows_;
  std::size_t dim_;
  std::vector<float> data_;
  bool normalized_;
};

struct Neighbor {
  std::uint64_t id = 0;
  double distance = 0.0;    // squared L2
  double similarity = 0.0;  // inner product

  friend bool operator==(const Neighbor&, const Neighbor&) = default;
};

/// Per-query metadata carried through the dataset-construction pipeline.
struct QueryMeta {
  std::uint32_t label = 0;
  std::uint32_t augmentation = 0;

  friend bool operator==(const QueryMeta&, const QueryMeta&) = default;
};

/// Ranked neighbor lists, one per query. `meta` is either empty or has one
/// entry per query.
struct RetrievalResult {
  std::vector<std::vector<Neighbor>> lists;
  std::vector<QueryMeta> meta;

  std::size_t queries() const noexcept { return lists.size(); }
  std::uint32_t label_of(std::size_t q) const {
    return meta.empty() ? static_cast<std::uint32_t>(q) : meta[q].label;
  }
};

/// Strict ordering for neighbor lists: smaller distance first, then lower id.
inline bool closer(const Neighbor& a, const Neighbor& b) {
  return a.distance < b.distance || (a.distance == b.distance && a.id < b.id);
}

EmbeddingSet l2_normalize(const EmbeddingSet& v);

/// Exhaustive nearest neighbors by L2 distance; ties broken by lower id.
RetrievalResult exact_nn(const EmbeddingSet& queries, const EmbeddingSet& gallery,
                         std::size_t topk);

/// Rank-1 ids of exact_nn, without materializing lists.
std::vector<std::uint64_t> exact_nn_ids(const EmbeddingSet& queries, const EmbeddingSet& gallery);

EmbeddingSet sample_uniform_sphere(std::size_t n, std::size_t d, RngSeed seed);
EmbeddingSet sample_gaussian(std::size_t n, std::size_t d, RngSeed seed);

}  // namespace cmivf
