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
#include <vector>

#include "cmivf/embedding.hpp"
#include "cmivf/random.hpp"

namespace cmivf {

/// Modality-gap benchmark. Noise knobs are total noise norms: each
/// coordinate gets sigma = knob / sqrt(d).
struct GapConfig {
  std::size_t n_concepts = 1000;
  std::size_t per_concept_images = 100;
  std::size_t d = 64;
  double concept_spread = 0.2;
  double gap_magnitude = 1.0;
  double text_noise = 0.1;
  std::size_t train_texts_per_concept = 10;
  RngSeed seed{0};
};

struct SynthBundle {
  EmbeddingSet gallery;
  std::vector<std::uint32_t> gallery_concept_ids;
  /// One text query per concept.
  EmbeddingSet text_queries;
  std::vector<std::uint32_t> text_concept_ids;
  std::vector<std::uint64_t> ground_truth_nn;
  /// One fresh image per concept, not part of the gallery.
  EmbeddingSet image_queries;
  std::vector<std::uint64_t> image_ground_truth_nn;
  /// Captions used to train paired k-means; disjoint from text_queries.
  EmbeddingSet train_texts;
  std::vector<std::uint32_t> train_concept_ids;
};

/// images = normalize(dir + spread noise);
/// texts  = normalize(dir + gap_magnitude * g + text noise), with g a single
/// random unit vector shared by every concept.
SynthBundle gen_gap_dataset(const GapConfig& cfg);

struct HubConfig {
  std::size_t n_labels = 10;
  std::uint32_t hub_label = 0;
  std::size_t d = 64;
  std::size_t images_per_label = 100;
  RngSeed seed{0};
  /// Control condition: the hub text is built like every other label text
  /// from its direction with the image mean projected out.
  bool orthogonalize_hub = false;
};

struct HubScenario {
  EmbeddingSet label_texts;
  EmbeddingSet gallery;
  std::vector<std::uint32_t> true_labels;
};

/// Images share a common cone direction; the hub label's text sits near the
/// normalized image mean, so it is close to images of every label.
HubScenario gen_hub_scenario(const HubConfig& cfg);

struct AugConfig {
  std::size_t n_labels = 128;
  std::size_t n_augs = 8;
  std::size_t k2 = 16;
  std::size_t d = 64;
  RngSeed seed{0};
  bool include_collapsing = true;
};

struct LabelAugmentations {
  EmbeddingSet labels;
  /// augmented[0] is the identity. With include_collapsing, the last
  /// augmentations pull whole clusters toward their mean and the final one
  /// collapses every cluster.
  std::vector<EmbeddingSet> augmented;
  std::vector<std::uint32_t> cluster_ids;
  std::vector<std::uint8_t> collapsing;
};

LabelAugmentations gen_label_augmentations(const AugConfig& cfg);

}  // namespace cmivf
