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

#include "cmivf/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <string>

#include <json.hpp>

#include "cmivf/error.hpp"
#include "cmivf/kmeans.hpp"
#include "cmivf/parallel.hpp"

namespace cmivf {
namespace {

// sum_{i<j} <v_i, v_j> = (|sum v|^2 - sum |v|^2) / 2. Both sides of the
// comparison go through this function so equal inputs give equal sums.
double pairwise_sum(const EmbeddingSet& set, std::span<const std::size_t> members) {
  const std::size_t d = set.dim();
  std::vector<double> total(d, 0.0);
  double self = 0.0;
  for (const auto i : members) {
    const float* v = set.row_ptr(i);
    for (std::size_t j = 0; j < d; ++j) {
      total[j] += v[j];
      self += double(v[j]) * double(v[j]);
    }
  }
  double tt = 0.0;
  for (const double t : total) tt += t * t;
  return 0.5 * (tt - self);
}

struct Observation {
  std::uint64_t id;
  std::size_t rank;
  double similarity;
  std::uint32_t label;
};

template <typename Better>
std::vector<LabeledSample> pseudo_label(const RetrievalResult& result, std::size_t c, Better better) {
  std::vector<Observation> obs;
  for (std::size_t q = 0; q < result.queries(); ++q) {
    const std::uint32_t label = result.label_of(q);
    if (label >= c)
      raise(ErrorCode::kInvalidArgument, "query label " + std::to_string(label) + " >= label count " +
                                             std::to_string(c));
    const auto& list = result.lists[q];
    for (std::size_t r = 0; r < list.size(); ++r) obs.push_back({list[r].id, r, list[r].similarity, label});
  }
  if (obs.empty()) raise(ErrorCode::kEmptyResult, "no retrieved samples to label");
  std::stable_sort(obs.begin(), obs.end(), [&](const Observation& a, const Observation& b) {
    return a.id < b.id || (a.id == b.id && better(a, b));
  });
  std::vector<LabeledSample> out;
  for (std::size_t i = 0; i < obs.size(); ++i)
    if (i == 0 || obs[i].id != obs[i - 1].id) out.push_back({obs[i].id, obs[i].label});
  return out;
}

void check_distribution(std::span<const double> v, std::size_t c, const char* what) {
  if (v.size() != c)
    raise(ErrorCode::kNotADistribution, std::string(what) + " has length " + std::to_string(v.size()) +
                                            ", expected " + std::to_string(c));
  double s = 0.0;
  for (const double x : v) {
    if (!std::isfinite(x) || x < 0.0) raise(ErrorCode::kNotADistribution, std::string(what) + " has a negative entry");
    s += x;
  }
  if (std::abs(s - 1.0) > 1e-6)
    raise(ErrorCode::kNotADistribution, std::string(what) + " sums to " + std::to_string(s));
}

}  // namespace

std::vector<std::uint32_t> augmentation_losses(const EmbeddingSet& labels, std::span<const EmbeddingSet> augmented,
                                               std::span<const std::uint32_t> cluster_ids, std::size_t k2) {
  if (cluster_ids.size() != labels.rows())
    raise(ErrorCode::kInvalidArgument, "need one cluster id per label");
  for (const auto& aug : augmented)
    if (aug.rows() != labels.rows() || aug.dim() != labels.dim())
      raise(ErrorCode::kDimensionMismatch, "augmented set shape differs from the label set");
  std::vector<std::vector<std::size_t>> members(k2);
  for (std::size_t i = 0; i < cluster_ids.size(); ++i) {
    if (cluster_ids[i] >= k2) raise(ErrorCode::kInvalidArgument, "cluster id out of range");
    members[cluster_ids[i]].push_back(i);
  }
  std::vector<double> base(k2);
  for (std::size_t c = 0; c < k2; ++c) base[c] = pairwise_sum(labels, members[c]);

  std::vector<std::uint32_t> loss(augmented.size(), 0);
  parallel_for(augmented.size(), 1, [&](std::size_t begin, std::size_t end) {
    for (std::size_t a = begin; a < end; ++a)
      for (std::size_t c = 0; c < k2; ++c)
        if (members[c].size() >= 2 && pairwise_sum(augmented[a], members[c]) > base[c]) ++loss[a];
  });
  return loss;
}

std::vector<AugmentationScore> select_augmentations(const EmbeddingSet& labels,
                                                    std::span<const EmbeddingSet> augmented, std::size_t k2,
                                                    std::size_t m, RngSeed seed) {
  if (augmented.empty() || m < 1 || m > augmented.size())
    raise(ErrorCode::kTooFewAugmentations, "m=" + std::to_string(m) + " with " +
                                               std::to_string(augmented.size()) + " augmentations");
  for (const auto& aug : augmented)
    if (aug.rows() != labels.rows() || aug.dim() != labels.dim())
      raise(ErrorCode::kDimensionMismatch, "augmented set shape differs from the label set");
  // Best of several restarts: tight label clusters make a single k-means++
  // draw prone to splitting one cluster and merging two others.
  std::optional<TrainResult> best;
  for (std::size_t r = 0; r < kLabelClusterRestarts; ++r) {
    TrainResult run = run_kmeans(labels, k2, kDefaultKMeansIters, derive_seed(seed, r));
    if (!best || run.log.back().l_kmeans < best->log.back().l_kmeans) best = std::move(run);
  }
  const auto clusters = assign(labels, best->centroids);
  const auto loss = augmentation_losses(labels, augmented, clusters, k2);

  std::vector<std::uint32_t> order(augmented.size());
  std::iota(order.begin(), order.end(), 0u);
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return loss[a] < loss[b]; });
  std::vector<AugmentationScore> out(augmented.size());
  for (std::uint32_t a = 0; a < out.size(); ++a) out[a] = {a, loss[a], false};
  for (std::size_t i = 0; i < m; ++i) out[order[i]].selected = true;
  return out;
}

RetrievalResult diversified_retrieve(const IvfIndex& index, std::span<const EmbeddingSet> label_queries,
                                     std::size_t n_neighbors, std::size_t n_probe) {
  if (label_queries.empty()) raise(ErrorCode::kInvalidArgument, "no query sets");
  if (n_neighbors < 1) raise(ErrorCode::kInvalidArgument, "n_neighbors must be >= 1");
  const std::size_t c = label_queries.front().rows();
  RetrievalResult out;
  for (std::size_t a = 0; a < label_queries.size(); ++a) {
    if (label_queries[a].rows() != c)
      raise(ErrorCode::kInvalidArgument, "every augmentation needs one query per label");
    auto part = search(index, label_queries[a], n_probe, n_neighbors);
    for (std::size_t l = 0; l < c; ++l) {
      out.lists.push_back(std::move(part.lists[l]));
      out.meta.push_back({static_cast<std::uint32_t>(l), static_cast<std::uint32_t>(a)});
    }
  }
  return out;
}

std::vector<std::uint64_t> distinct_ids(const RetrievalResult& result) {
  std::vector<std::uint64_t> ids;
  for (const auto& list : result.lists)
    for (const auto& nb : list) ids.push_back(nb.id);
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  return ids;
}

RetrievalResult filter_low_similarity(const RetrievalResult& result, double min_similarity) {
  RetrievalResult out;
  out.meta = result.meta;
  out.lists.reserve(result.lists.size());
  for (const auto& list : result.lists) {
    auto& kept = out.lists.emplace_back();
    for (const auto& nb : list)
      if (nb.similarity >= min_similarity) kept.push_back(nb);
  }
  return out;
}

std::vector<LabeledSample> rank_pseudo_label(const RetrievalResult& result, std::size_t c) {
  return pseudo_label(result, c, [](const Observation& a, const Observation& b) {
    if (a.rank != b.rank) return a.rank < b.rank;
    if (a.similarity != b.similarity) return a.similarity > b.similarity;
    return a.label < b.label;
  });
}

std::vector<LabeledSample> cosine_pseudo_label(const RetrievalResult& result, std::size_t c) {
  return pseudo_label(result, c, [](const Observation& a, const Observation& b) {
    if (a.similarity != b.similarity) return a.similarity > b.similarity;
    return a.label < b.label;
  });
}

DatasetManifest cluster_select(std::span<const LabeledSample> labeled, const EmbeddingSet& gallery,
                               std::size_t k1, RngSeed seed, std::size_t n_labels) {
  if (k1 < 1) raise(ErrorCode::kInvalidArgument, "k1 must be >= 1");
  std::vector<std::vector<std::uint64_t>> groups(n_labels);
  for (const auto& s : labeled) {
    if (s.label >= n_labels) raise(ErrorCode::kInvalidArgument, "label id out of range");
    if (s.id >= gallery.rows()) raise(ErrorCode::kInvalidArgument, "gallery id out of range");
    groups[s.label].push_back(s.id);
  }
  for (auto& g : groups) {
    std::sort(g.begin(), g.end());
    if (std::adjacent_find(g.begin(), g.end()) != g.end())
      raise(ErrorCode::kInvalidArgument, "gallery id labeled twice");
  }

  std::vector<std::vector<ManifestEntry>> picked(n_labels);
  parallel_for(n_labels, 1, [&](std::size_t begin, std::size_t end) {
    for (std::size_t l = begin; l < end; ++l) {
      const auto& g = groups[l];
      auto& out = picked[l];
      const auto label = static_cast<std::uint32_t>(l);
      if (g.size() <= k1) {
        for (std::size_t i = 0; i < g.size(); ++i) out.push_back({g[i], label, static_cast<std::uint32_t>(i)});
        continue;
      }
      const RngSeed label_seed = derive_seed(seed, l);
      const EmbeddingSet vecs = gallery.select(g);
      KMeansOptions opts;
      opts.spherical = gallery.normalized();
      const Centroids cent = run_kmeans(vecs, k1, kDefaultKMeansIters, label_seed, opts).centroids;
      const auto cells = assign(vecs, cent);
      std::vector<std::vector<std::uint64_t>> members(k1);
      for (std::size_t i = 0; i < g.size(); ++i) members[cells[i]].push_back(g[i]);
      Rng rng(derive_seed(label_seed, 1));
      for (std::size_t c = 0; c < k1; ++c) {
        if (members[c].empty()) continue;
        out.push_back({members[c][rng.uniform_index(members[c].size())], label, static_cast<std::uint32_t>(c)});
      }
    }
  });

  DatasetManifest manifest;
  manifest.per_label_counts.resize(n_labels);
  for (std::size_t l = 0; l < n_labels; ++l) {
    if (groups[l].empty()) manifest.empty_labels.push_back(static_cast<std::uint32_t>(l));
    manifest.per_label_counts[l] = picked[l].size();
    check_invariant(picked[l].size() <= k1, "per-label count exceeds k1");
    manifest.entries.insert(manifest.entries.end(), picked[l].begin(), picked[l].end());
  }
  std::vector<std::uint64_t> ids;
  for (const auto& e : manifest.entries) ids.push_back(e.id);
  std::sort(ids.begin(), ids.end());
  check_invariant(std::adjacent_find(ids.begin(), ids.end()) == ids.end(), "duplicate id in manifest");
  manifest.params.k1 = k1;
  manifest.params.seed = seed.value;
  return manifest;
}

double diversity_loss(std::span<const std::vector<double>> preds, std::span<const double> pseudo_label,
                      std::span<const std::vector<double>> initial_preds, double lambda) {
  if (!(lambda >= 0.0 && lambda <= 1.0)) raise(ErrorCode::kInvalidArgument, "lambda must be in [0, 1]");
  if (preds.empty() || preds.size() != initial_preds.size())
    raise(ErrorCode::kInvalidArgument, "need one initial prediction per augmentation");
  const std::size_t c = pseudo_label.size();
  if (c == 0) raise(ErrorCode::kNotADistribution, "empty pseudo-label");
  check_distribution(pseudo_label, c, "pseudo-label");
  double total = 0.0;
  for (std::size_t a = 0; a < preds.size(); ++a) {
    check_distribution(preds[a], c, "prediction");
    check_distribution(initial_preds[a], c, "initial prediction");
    double ce = 0.0;
    for (std::size_t j = 0; j < c; ++j) {
      const double t = (1.0 - lambda) * pseudo_label[j] + lambda * initial_preds[a][j];
      if (t > 0.0) ce -= t * std::log(preds[a][j]);
    }
    total += ce;
  }
  return total / static_cast<double>(preds.size());
}

DatasetManifest construct_dataset(const IvfIndex& index, std::span<const EmbeddingSet> label_queries,
                                  const ConstructOptions& options) {
  const RetrievalResult raw = diversified_retrieve(index, label_queries, options.n_neighbors, options.n_probe);
  const RetrievalResult kept = filter_low_similarity(raw, options.min_similarity);
  const std::size_t c = label_queries.front().rows();
  const auto labeled = options.rank_labeling ? rank_pseudo_label(kept, c) : cosine_pseudo_label(kept, c);
  EmbeddingSet stored = index.reconstruct();
  if (index.quantization() == Quantization::kNone)
    stored = EmbeddingSet(stored.rows(), stored.dim(), {stored.data().begin(), stored.data().end()}, true);
  DatasetManifest manifest = cluster_select(labeled, stored, options.k1, options.seed, c);
  manifest.params.m = label_queries.size();
  manifest.params.n_neighbors = options.n_neighbors;
  manifest.params.n_probe = options.n_probe;
  manifest.params.min_similarity = options.min_similarity;
  manifest.params.labeling = options.rank_labeling ? "rank" : "cosine";
  return manifest;
}

std::string manifest_to_json(const DatasetManifest& manifest) {
  nlohmann::ordered_json j;
  auto entries = nlohmann::ordered_json::array();
  for (const auto& e : manifest.entries)
    entries.push_back(nlohmann::ordered_json{{"id", e.id}, {"label", e.label}, {"cluster", e.cluster}});
  j["entries"] = std::move(entries);
  const auto& p = manifest.params;
  j["params"] = nlohmann::ordered_json{{"k1", p.k1},
                                       {"seed", p.seed},
                                       {"m", p.m},
                                       {"n_neighbors", p.n_neighbors},
                                       {"n_probe", p.n_probe},
                                       {"min_similarity", p.min_similarity},
                                       {"labeling", p.labeling}};
  auto counts = nlohmann::ordered_json::object();
  for (std::size_t l = 0; l < manifest.per_label_counts.size(); ++l)
    counts[std::to_string(l)] = manifest.per_label_counts[l];
  j["per_label_counts"] = std::move(counts);
  j["empty_labels"] = manifest.empty_labels;
  return j.dump(2) + "\n";
}

std::string scores_to_json(std::span<const AugmentationScore> scores, std::size_t k2, std::size_t m) {
  nlohmann::ordered_json j;
  j["k2"] = k2;
  j["m"] = m;
  auto arr = nlohmann::ordered_json::array();
  for (const auto& s : scores)
    arr.push_back(nlohmann::ordered_json{{"augmentation", s.augmentation}, {"loss", s.loss}, {"selected", s.selected}});
  j["scores"] = std::move(arr);
  return j.dump(2) + "\n";
}

}  // namespace cmivf
