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
#include <vector>

#include "cmivf/ivf.hpp"
#include "cmivf/report.hpp"
#include "cmivf/synth.hpp"

namespace cmivf {

struct CompareConfig {
  GapConfig data;
  std::size_t k = 256;
  std::size_t iters = kDefaultKMeansIters;
  std::vector<std::size_t> n_probes{1, 2, 4, 8, 16};
  Quantization quantization = Quantization::kNone;
  RngSeed kmeans_seed{1};
};

struct CompareRow {
  std::size_t n_probe = 0;
  double recall_standard = 0.0;
  double recall_paired = 0.0;
  /// Fresh image queries on the standard index.
  double recall_in_modal = 0.0;
};

struct ClusteringComparison {
  std::vector<CompareRow> rows;
  double crossmodal_standard = 0.0;
  double crossmodal_paired = 0.0;
  double crossmodal_paired_initial = 0.0;
};

/// Standard vs paired k-means coarse quantizers on the gap benchmark: text
/// query R@1 of both indexes and image query R@1 of the standard index per
/// n_probe, plus the final cross-modal objective of both trainings.
ClusteringComparison compare_clustering(const CompareConfig& cfg);

/// n_probe, recall_standard, recall_paired, recall_in_modal
Table comparison_table(const ClusteringComparison& cmp);

}  // namespace cmivf
