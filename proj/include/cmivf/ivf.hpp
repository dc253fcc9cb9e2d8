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
#include <string>
#include <vector>

#include "cmivf/embedding.hpp"
#include "cmivf/kmeans.hpp"

namespace cmivf {

enum class Quantization : std::uint8_t { kNone = 0, kScalar8 = 1 };

const char* quantization_name(Quantization q);
/// Parses "none" / "scalar8"; throws InvalidArgument otherwise.
Quantization parse_quantization(const std::string& name);

/// Posting list of one coarse cell. Exactly one of `vectors` (len*d floats)
/// or `codes` (len*d bytes) is populated, depending on the quantization.
struct Bucket {
  std::vector<std::uint64_t> ids;
  std::vector<float> vectors;
  std::vector<std::uint8_t> codes;

  friend bool operator==(const Bucket&, const Bucket&) = default;
};

/// Coarse-quantized inverted file. Immutable after construction.
///
/// Every id in [0, total) appears in exactly one bucket, and each bucket's
/// ids are ascending.
class IvfIndex {
 public:
  IvfIndex(Centroids centroids, std::vector<Bucket> buckets, Quantization quantization,
           std::vector<float> mins, std::vector<float> maxs);

  std::size_t k() const noexcept { return centroids_.k(); }
  std::size_t dim() const noexcept { return centroids_.dim(); }
  std::size_t total() const noexcept { return total_; }
  Quantization quantization() const noexcept { return quantization_; }
  const Centroids& centroids() const noexcept { return centroids_; }
  const Bucket& bucket(std::size_t c) const { return buckets_.at(c); }
  std::span<const float> mins() const noexcept { return mins_; }
  std::span<const float> maxs() const noexcept { return maxs_; }

  /// Stored (dequantized) vector of the j-th entry of bucket c.
  void decode(std::size_t c, std::size_t j, float* out) const;

  /// Stored vectors in id order.
  EmbeddingSet reconstruct() const;

  friend bool operator==(const IvfIndex&, const IvfIndex&) = default;

 private:
  Centroids centroids_;
  std::vector<Bucket> buckets_;
  Quantization quantization_;
  std::vector<float> mins_;
  std::vector<float> maxs_;
  std::size_t total_ = 0;
};

/// Assigns every gallery row to its nearest centroid. Requires a normalized
/// gallery.
IvfIndex build_index(const EmbeddingSet& gallery, const Centroids& centroids,
                     Quantization quantization = Quantization::kNone);

struct SearchStats {
  double mean_buckets = 0.0;
  double mean_candidates = 0.0;
};

/// Probes the n_probe cells with the largest query-centroid inner product
/// (ties to the lower centroid id) and ranks their members exactly.
RetrievalResult search(const IvfIndex& index, const EmbeddingSet& queries, std::size_t n_probe,
                       std::size_t topk, SearchStats* stats = nullptr);

struct RecallReport {
  std::size_t n_probe = 0;
  double recall_at_1 = 0.0;
  std::vector<std::uint8_t> hits;
  double mean_buckets = 0.0;
  double mean_candidates = 0.0;
};

RecallReport eval_recall(const IvfIndex& index, const EmbeddingSet& queries,
                         std::span<const std::uint64_t> truth, std::size_t n_probe);
/// Ground truth from exact_nn against `gallery`.
RecallReport eval_recall(const IvfIndex& index, const EmbeddingSet& queries,
                         const EmbeddingSet& gallery, std::size_t n_probe);

/// CMIV index file: "CMIV", u32 version, u32 k, u32 d, u64 total, u8
/// quantization, 7 reserved bytes; scalar8 adds d mins and d maxs (f32);
/// then the centroid CMEB payload; then per bucket u64 length, the ids
/// (u64) and the float or code block.
inline constexpr std::uint32_t kCmivVersion = 1;

std::vector<std::uint8_t> encode_index(const IvfIndex& index);
IvfIndex decode_index(std::span<const std::uint8_t> bytes);
void save_index(const IvfIndex& index, const std::string& path);
IvfIndex load_index(const std::string& path);

}  // namespace cmivf
