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
#include <optional>
#include <string>
#include <vector>

#include "cmivf/embedding.hpp"
#include "cmivf/random.hpp"

namespace cmivf {

/// k x d cluster centers. Spherical variants keep rows unit-norm.
class Centroids {
 public:
  explicit Centroids(EmbeddingSet vectors) : vectors_(std::move(vectors)) {}

  std::size_t k() const noexcept { return vectors_.rows(); }
  std::size_t dim() const noexcept { return vectors_.dim(); }
  bool normalized() const noexcept { return vectors_.normalized(); }
  const EmbeddingSet& vectors() const noexcept { return vectors_; }
  const float* row_ptr(std::size_t i) const noexcept { return vectors_.row_ptr(i); }

  friend bool operator==(const Centroids&, const Centroids&) = default;

 private:
  EmbeddingSet vectors_;
};

/// Text queries aligned with the id of their exact nearest gallery image.
/// Repeated image ids are allowed.
struct PairedSet {
  EmbeddingSet text;
  std::vector<std::uint64_t> image_nn_ids;
  std::string gallery_ref;
};

/// Computes image_nn_ids with exact_nn against `gallery`.
PairedSet make_pairs(EmbeddingSet text, const EmbeddingSet& gallery, std::string gallery_ref = {});

struct TrainRecord {
  std::size_t iteration = 0;
  double l_kmeans = 0.0;
  std::optional<double> l_crossmodal;
  std::size_t empty_clusters_reseeded = 0;
};

using TrainLog = std::vector<TrainRecord>;

struct TrainResult {
  Centroids centroids;
  TrainLog log;
};

struct KMeansOptions {
  /// Renormalize centroids after every update (spherical k-means).
  bool spherical = true;
  /// When set, L_crossmodal of these pairs is logged every iteration.
  const PairedSet* eval_pairs = nullptr;
  const EmbeddingSet* eval_gallery = nullptr;
};

inline constexpr std::size_t kDefaultKMeansIters = 10;

/// Nearest centroid per point (L2); ties go to the lower centroid id.
std::vector<std::uint32_t> assign(const EmbeddingSet& points, const Centroids& centroids);

/// k-means++ seeding alone: the starting centroids of run_kmeans (and, on
/// the gallery, of run_paired_kmeans) for the same seed.
Centroids seed_centroids(const EmbeddingSet& points, std::size_t k, RngSeed seed, bool spherical = true);

/// k-means++ seeding followed by `iters` Lloyd iterations.
TrainResult run_kmeans(const EmbeddingSet& points, std::size_t k, std::size_t iters, RngSeed seed,
                       const KMeansOptions& options = {});

/// Paired k-means: cells are formed by the paired images q(p), centroids are
/// updated to the normalized mean of the text vectors whose image landed in
/// the cell. Seeded by k-means++ on the gallery.
TrainResult run_paired_kmeans(const PairedSet& pairs, const EmbeddingSet& gallery, std::size_t k,
                              std::size_t iters, RngSeed seed);

/// Mean squared distance of each point to its nearest centroid.
double objective_kmeans(const EmbeddingSet& points, const Centroids& centroids);

/// Fraction of pairs whose text and paired image have different nearest
/// centroids.
double objective_crossmodal(const PairedSet& pairs, const EmbeddingSet& gallery,
                            const Centroids& centroids);

struct CentroidsMeta {
  std::string variant;  // "kmeans" or "paired"
  std::size_t iters = 0;
  std::uint64_t seed = 0;
};

/// Writes centroids as CMEB plus a JSON sidecar
/// {k, d, variant, iters, seed, final_objectives, log}.
void save_centroids(const TrainResult& trained, const CentroidsMeta& meta,
                    const std::string& cmeb_path, const std::string& json_path);
Centroids load_centroids(const std::string& cmeb_path);

}  // namespace cmivf
