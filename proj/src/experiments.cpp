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

#include "cmivf/experiments.hpp"

#include "cmivf/error.hpp"
#include "cmivf/kmeans.hpp"

namespace cmivf {

ClusteringComparison compare_clustering(const CompareConfig& cfg) {
  if (cfg.n_probes.empty()) raise(ErrorCode::kConfigError, "n_probes must not be empty");
  const SynthBundle data = gen_gap_dataset(cfg.data);
  const PairedSet pairs = make_pairs(data.train_texts, data.gallery, "gap");

  KMeansOptions opts;
  opts.eval_pairs = &pairs;
  opts.eval_gallery = &data.gallery;
  const TrainResult standard = run_kmeans(data.gallery, cfg.k, cfg.iters, cfg.kmeans_seed, opts);
  const TrainResult paired = run_paired_kmeans(pairs, data.gallery, cfg.k, cfg.iters, cfg.kmeans_seed);

  const IvfIndex std_index = build_index(data.gallery, standard.centroids, cfg.quantization);
  const IvfIndex paired_index = build_index(data.gallery, paired.centroids, cfg.quantization);

  ClusteringComparison out;
  for (const auto n_probe : cfg.n_probes) {
    CompareRow row;
    row.n_probe = n_probe;
    row.recall_standard = eval_recall(std_index, data.text_queries, data.ground_truth_nn, n_probe).recall_at_1;
    row.recall_paired = eval_recall(paired_index, data.text_queries, data.ground_truth_nn, n_probe).recall_at_1;
    row.recall_in_modal =
        eval_recall(std_index, data.image_queries, data.image_ground_truth_nn, n_probe).recall_at_1;
    out.rows.push_back(row);
  }
  out.crossmodal_standard = standard.log.back().l_crossmodal.value();
  out.crossmodal_paired = paired.log.back().l_crossmodal.value();
  out.crossmodal_paired_initial =
      objective_crossmodal(pairs, data.gallery, seed_centroids(data.gallery, cfg.k, cfg.kmeans_seed));
  return out;
}

Table comparison_table(const ClusteringComparison& cmp) {
  Table t{{"n_probe", "recall_standard", "recall_paired", "recall_in_modal"}, {}};
  for (const auto& r : cmp.rows)
    t.add_row({static_cast<std::int64_t>(r.n_probe), r.recall_standard, r.recall_paired, r.recall_in_modal});
  return t;
}

}  // namespace cmivf
