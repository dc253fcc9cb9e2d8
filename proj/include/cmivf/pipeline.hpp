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
#include "cmivf/ivf.hpp"
#include "cmivf/random.hpp"

namespace cmivf {

struct AugmentationScore {
  std::uint32_t augmentation = 0;
  std::uint32_t loss = 0;  // in [0, k2]
  bool selected = false;

  friend bool operator==(const AugmentationScore&, const AugmentationScore&) = default;
};

/// Loss of each augmentation against fixed label clusters: the number of
/// clusters whose within-cluster pairwise inner-product sum (i < j) is
/// strictly larger after augmentation. Clusters with one member count 0.
std::vector<std::uint32_t> augmentation_losses(const EmbeddingSet& labels,
                                               std::span<const EmbeddingSet> augmented,
                                               std::span<const std::uint32_t> cluster_ids,
                                               std::size_t k2);

inline constexpr std::size_t kLabelClusterRestarts = 10;

/// Clusters the labels into k2 groups with spherical k-means (lowest
/// objective over kLabelClusterRestarts seeds), scores every augmentation
/// and selects the m lowest losses (ties to the lower id).
std::vector<AugmentationScore> select_augmentations(const EmbeddingSet& labels,
                                                    std::span<const EmbeddingSet> augmented,
                                                    std::size_t k2, std::size_t m, RngSeed seed);

/// One search per (augmentation, label) row. Query a*c + l carries label l
/// and augmentation a.
RetrievalResult diversified_retrieve(const IvfIndex& index, std::span<const EmbeddingSet> label_queries,
                                     std::size_t n_neighbors, std::size_t n_probe);

/// Distinct retrieved ids, ascending.
std::vector<std::uint64_t> distinct_ids(const RetrievalResult& result);

inline constexpr double kMinRetrievalSimilarity = 0.25;

/// Drops neighbors whose similarity is below `min_similarity`.
RetrievalResult filter_low_similarity(const RetrievalResult& result,
                                      double min_similarity = kMinRetrievalSimilarity);

struct LabeledSample {
  std::uint64_t id = 0;
  std::uint32_t label = 0;

  friend bool operator==(const LabeledSample&, const LabeledSample&) = default;
};

/// Each retrieved id takes the label of the query where its rank is
/// smallest; ties go to the higher similarity, then the lower label. Output
/// is sorted by id.
std::vector<LabeledSample> rank_pseudo_label(const RetrievalResult& result, std::size_t c);

/// Each retrieved id takes the label of its most similar query; ties go to
/// the lower label.
std::vector<LabeledSample> cosine_pseudo_label(const RetrievalResult& result, std::size_t c);

struct ManifestEntry {
  std::uint64_t id = 0;
  std::uint32_t label = 0;
  std::uint32_t cluster = 0;

  friend bool operator==(const ManifestEntry&, const ManifestEntry&) = default;
};

struct ManifestParams {
  std::size_t k1 = 0;
  std::uint64_t seed = 0;
  std::size_t m = 0;
  std::size_t n_neighbors = 0;
  std::size_t n_probe = 0;
  double min_similarity = 0.0;
  std::string labeling = "rank";
};

struct DatasetManifest {
  std::vector<ManifestEntry> entries;
  std::vector<std::size_t> per_label_counts;
  /// Labels that received no retrieved images.
  std::vector<std::uint32_t> empty_labels;
  ManifestParams params;
};

/// Per label: when the group has more than k1 images, k-means with k1
/// clusters and one uniformly random member per cluster; otherwise the
/// whole group.
DatasetManifest cluster_select(std::span<const LabeledSample> labeled, const EmbeddingSet& gallery,
                               std::size_t k1, RngSeed seed, std::size_t n_labels);

inline constexpr double kDefaultDiversityLambda = 0.2;

/// (1/m) sum_A CE(preds[A], (1 - lambda) y + lambda initial[A]) with
/// CE(p, t) = -sum_j t_j log p_j.
double diversity_loss(std::span<const std::vector<double>> preds, std::span<const double> pseudo_label,
                      std::span<const std::vector<double>> initial_preds,
                      double lambda = kDefaultDiversityLambda);

struct ConstructOptions {
  std::size_t n_neighbors = 64;
  std::size_t n_probe = 8;
  std::size_t k1 = 96;
  double min_similarity = kMinRetrievalSimilarity;
  bool rank_labeling = true;
  RngSeed seed{0};
};

/// Retrieve, filter, pseudo-label and select. Image vectors come from the
/// index's stored payload.
DatasetManifest construct_dataset(const IvfIndex& index, std::span<const EmbeddingSet> label_queries,
                                  const ConstructOptions& options);

std::string manifest_to_json(const DatasetManifest& manifest);
std::string scores_to_json(std::span<const AugmentationScore> scores, std::size_t k2, std::size_t m);

}  // namespace cmivf
