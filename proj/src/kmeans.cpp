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

#include "cmivf/kmeans.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <string>
#include <unordered_set>

#include <json.hpp>

#include "cmivf/cmeb.hpp"
#include "cmivf/distance.hpp"
#include "cmivf/error.hpp"
#include "cmivf/parallel.hpp"
#include "nn_kernel.hpp"

namespace cmivf {
namespace {

struct Assignment {
  std::vector<std::uint32_t> labels;
  std::vector<double> dists;  // squared distance to the assigned centroid
};

Assignment assign_detail(const EmbeddingSet& points, const float* centroids, std::size_t k) {
  const auto nearest = detail::nearest_rows(points.data().data(), points.rows(), centroids, k, points.dim(), 1);
  Assignment a{std::vector<std::uint32_t>(points.rows()), std::vector<double>(points.rows())};
  for (std::size_t i = 0; i < points.rows(); ++i) {
    a.labels[i] = static_cast<std::uint32_t>(nearest[i].id);
    a.dists[i] = nearest[i].distance;
  }
  return a;
}

void check_dims(const EmbeddingSet& points, const Centroids& centroids) {
  if (points.dim() != centroids.dim())
    raise(ErrorCode::kDimensionMismatch, "points dim " + std::to_string(points.dim()) +
                                             " != centroid dim " + std::to_string(centroids.dim()));
}

// k-means++ seeding: first center uniform, then D^2 sampling.
std::vector<float> kmeans_pp(const EmbeddingSet& points, std::size_t k, Rng& rng) {
  const std::size_t n = points.rows(), d = points.dim();
  std::vector<float> centers;
  centers.reserve(k * d);
  std::vector<double> d2(n, 0.0);
  std::size_t pick = rng.uniform_index(n);
  for (std::size_t c = 0; c < k; ++c) {
    const float* chosen = points.row_ptr(pick);
    centers.insert(centers.end(), chosen, chosen + d);
    if (c + 1 == k) break;
    parallel_for(n, 4096, [&](std::size_t begin, std::size_t end) {
      for (std::size_t i = begin; i < end; ++i) {
        const double dist = l2_sq(points.row_ptr(i), chosen, d);
        d2[i] = c == 0 ? dist : std::min(d2[i], dist);
      }
    });
    double total = 0.0;
    for (const double v : d2) total += v;
    if (total <= 0.0) {
      pick = rng.uniform_index(n);
      continue;
    }
    const double target = rng.uniform() * total;
    double acc = 0.0;
    pick = n - 1;
    for (std::size_t i = 0; i < n; ++i) {
      acc += d2[i];
      if (acc > target && d2[i] > 0.0) {
        pick = i;
        break;
      }
    }
    while (d2[pick] <= 0.0 && pick > 0) --pick;
  }
  return centers;
}

// Wraps the working buffer as-is; spherical buffers are already unit rows.
Centroids make_centroids(const std::vector<float>& data, std::size_t k, std::size_t d, bool spherical) {
  return Centroids(EmbeddingSet(k, d, data, spherical));
}

std::vector<float> renormalized(const std::vector<float>& data, std::size_t k, std::size_t d) {
  const EmbeddingSet unit = l2_normalize(EmbeddingSet(k, d, data, false));
  return {unit.data().begin(), unit.data().end()};
}

// One Lloyd update. Centroid c becomes the mean of source rows whose label is
// c. Empty cells take the source row of the element farthest from its
// current centroid (distinct rows, farthest first, ties by lower index).
std::size_t lloyd_update(const EmbeddingSet& source, const Assignment& a, std::vector<float>& centers,
                         std::size_t k, bool spherical) {
  const std::size_t d = source.dim(), n = source.rows();
  std::vector<std::size_t> offsets(k + 1, 0);
  for (const auto l : a.labels) ++offsets[l + 1];
  std::partial_sum(offsets.begin(), offsets.end(), offsets.begin());
  std::vector<std::size_t> members(n);
  {
    std::vector<std::size_t> cursor(offsets.begin(), offsets.end() - 1);
    for (std::size_t i = 0; i < n; ++i) members[cursor[a.labels[i]]++] = i;
  }

  std::vector<char> empty(k, 0);
  parallel_for(k, 8, [&](std::size_t begin, std::size_t end) {
    std::vector<double> sum(d);
    for (std::size_t c = begin; c < end; ++c) {
      const std::size_t lo = offsets[c], hi = offsets[c + 1];
      if (lo == hi) {
        empty[c] = 1;
        continue;
      }
      std::fill(sum.begin(), sum.end(), 0.0);
      for (std::size_t m = lo; m < hi; ++m) {
        const float* x = source.row_ptr(members[m]);
        for (std::size_t j = 0; j < d; ++j) sum[j] += x[j];
      }
      double scale = 1.0 / static_cast<double>(hi - lo);
      if (spherical) {
        double norm2 = 0.0;
        for (const double v : sum) norm2 += v * v;
        if (norm2 < 1e-24) {
          empty[c] = 1;
          continue;
        }
        scale = 1.0 / std::sqrt(norm2);
      }
      float* out = centers.data() + c * d;
      for (std::size_t j = 0; j < d; ++j) out[j] = static_cast<float>(sum[j] * scale);
    }
  });

  const std::size_t n_empty = static_cast<std::size_t>(std::count(empty.begin(), empty.end(), 1));
  if (n_empty == 0) return 0;
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  const std::size_t take = std::min(n, n_empty);
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(take), order.end(),
                    [&](std::size_t x, std::size_t y) {
                      return a.dists[x] > a.dists[y] || (a.dists[x] == a.dists[y] && x < y);
                    });
  std::size_t next = 0;
  for (std::size_t c = 0; c < k && next < take; ++c) {
    if (!empty[c]) continue;
    const float* x = source.row_ptr(order[next++]);
    double norm = spherical ? std::sqrt(dot(x, x, d)) : 1.0;
    if (norm < 1e-12) norm = 1.0;
    for (std::size_t j = 0; j < d; ++j) centers[c * d + j] = static_cast<float>(x[j] / norm);
  }
  return n_empty;
}

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (const double x : v) s += x;
  return s / static_cast<double>(v.size());
}

void validate_pairs(const PairedSet& pairs, const EmbeddingSet& gallery) {
  if (pairs.image_nn_ids.empty()) raise(ErrorCode::kEmptyPairs, "paired set is empty");
  if (pairs.image_nn_ids.size() != pairs.text.rows())
    raise(ErrorCode::kInvalidArgument, "paired set has " + std::to_string(pairs.text.rows()) +
                                           " texts but " + std::to_string(pairs.image_nn_ids.size()) +
                                           " image ids");
  if (pairs.text.dim() != gallery.dim())
    raise(ErrorCode::kDimensionMismatch, "text dim " + std::to_string(pairs.text.dim()) +
                                             " != gallery dim " + std::to_string(gallery.dim()));
  for (const auto id : pairs.image_nn_ids)
    if (id >= gallery.rows())
      raise(ErrorCode::kInvalidArgument, "paired image id " + std::to_string(id) + " outside gallery");
}

double crossmodal_from(const std::vector<std::uint32_t>& text_cells,
                       const std::vector<std::uint32_t>& image_cells) {
  std::size_t differ = 0;
  for (std::size_t i = 0; i < text_cells.size(); ++i) differ += text_cells[i] != image_cells[i];
  return static_cast<double>(differ) / static_cast<double>(text_cells.size());
}

}  // namespace

PairedSet make_pairs(EmbeddingSet text, const EmbeddingSet& gallery, std::string gallery_ref) {
  auto ids = exact_nn_ids(text, gallery);
  return PairedSet{std::move(text), std::move(ids), std::move(gallery_ref)};
}

Centroids seed_centroids(const EmbeddingSet& points, std::size_t k, RngSeed seed, bool spherical) {
  if (k < 1 || k > points.rows())
    raise(ErrorCode::kInvalidK, "k=" + std::to_string(k) + " must be in [1, " +
                                    std::to_string(points.rows()) + "]");
  Rng rng(seed, 0);
  std::vector<float> centers = kmeans_pp(points, k, rng);
  if (spherical) centers = renormalized(centers, k, points.dim());
  return make_centroids(centers, k, points.dim(), spherical);
}

std::vector<std::uint32_t> assign(const EmbeddingSet& points, const Centroids& centroids) {
  check_dims(points, centroids);
  return assign_detail(points, centroids.vectors().data().data(), centroids.k()).labels;
}

TrainResult run_kmeans(const EmbeddingSet& points, std::size_t k, std::size_t iters, RngSeed seed,
                       const KMeansOptions& options) {
  if (k < 1 || k > points.rows())
    raise(ErrorCode::kInvalidK, "k=" + std::to_string(k) + " must be in [1, " +
                                    std::to_string(points.rows()) + "]");
  if (iters < 1) raise(ErrorCode::kInvalidArgument, "iters must be >= 1");
  if ((options.eval_pairs == nullptr) != (options.eval_gallery == nullptr))
    raise(ErrorCode::kInvalidArgument, "eval_pairs and eval_gallery must be given together");
  if (options.eval_pairs) validate_pairs(*options.eval_pairs, *options.eval_gallery);

  const std::size_t d = points.dim();
  Rng rng(seed, 0);
  std::vector<float> centers = kmeans_pp(points, k, rng);
  if (options.spherical) centers = renormalized(centers, k, d);

  TrainLog log;
  std::size_t reseeded = 0;
  for (std::size_t it = 0;; ++it) {
    const Assignment a = assign_detail(points, centers.data(), k);
    if (it > 0) {
      TrainRecord rec{it, mean_of(a.dists), std::nullopt, reseeded};
      if (options.eval_pairs) {
        const Centroids c = make_centroids(centers, k, d, options.spherical);
        rec.l_crossmodal = objective_crossmodal(*options.eval_pairs, *options.eval_gallery, c);
      }
      log.push_back(rec);
    }
    if (it == iters) break;
    reseeded = lloyd_update(points, a, centers, k, options.spherical);
    if (options.spherical) centers = renormalized(centers, k, d);
  }
  return TrainResult{make_centroids(centers, k, d, options.spherical), std::move(log)};
}

TrainResult run_paired_kmeans(const PairedSet& pairs, const EmbeddingSet& gallery, std::size_t k,
                              std::size_t iters, RngSeed seed) {
  validate_pairs(pairs, gallery);
  const std::unordered_set<std::uint64_t> distinct(pairs.image_nn_ids.begin(), pairs.image_nn_ids.end());
  if (k < 1 || k > distinct.size())
    raise(ErrorCode::kInvalidK, "k=" + std::to_string(k) + " exceeds the " +
                                    std::to_string(distinct.size()) + " distinct paired images");
  if (iters < 1) raise(ErrorCode::kInvalidArgument, "iters must be >= 1");

  const std::size_t d = gallery.dim();
  const EmbeddingSet images = gallery.select(pairs.image_nn_ids);
  Rng rng(seed, 0);
  std::vector<float> centers = kmeans_pp(gallery, k, rng);
  centers = renormalized(centers, k, d);

  TrainLog log;
  std::size_t reseeded = 0;
  for (std::size_t it = 0;; ++it) {
    const Assignment a = assign_detail(images, centers.data(), k);
    if (it > 0) {
      const auto text_cells = assign_detail(pairs.text, centers.data(), k).labels;
      const Centroids c = make_centroids(centers, k, d, true);
      log.push_back(TrainRecord{it, objective_kmeans(gallery, c), crossmodal_from(text_cells, a.labels),
                                reseeded});
    }
    if (it == iters) break;
    reseeded = lloyd_update(pairs.text, a, centers, k, true);
    centers = renormalized(centers, k, d);
  }
  return TrainResult{make_centroids(centers, k, d, true), std::move(log)};
}

double objective_kmeans(const EmbeddingSet& points, const Centroids& centroids) {
  check_dims(points, centroids);
  return mean_of(assign_detail(points, centroids.vectors().data().data(), centroids.k()).dists);
}

double objective_crossmodal(const PairedSet& pairs, const EmbeddingSet& gallery,
                            const Centroids& centroids) {
  validate_pairs(pairs, gallery);
  check_dims(gallery, centroids);
  const EmbeddingSet images = gallery.select(pairs.image_nn_ids);
  return crossmodal_from(assign(pairs.text, centroids), assign(images, centroids));
}

void save_centroids(const TrainResult& trained, const CentroidsMeta& meta,
                    const std::string& cmeb_path, const std::string& json_path) {
  write_cmeb(trained.centroids.vectors(), cmeb_path);
  nlohmann::ordered_json j;
  j["k"] = trained.centroids.k();
  j["d"] = trained.centroids.dim();
  j["variant"] = meta.variant;
  j["iters"] = meta.iters;
  j["seed"] = meta.seed;
  nlohmann::ordered_json fin = nlohmann::ordered_json::object();
  nlohmann::ordered_json records = nlohmann::ordered_json::array();
  for (const auto& r : trained.log) {
    nlohmann::ordered_json rec;
    rec["iteration"] = r.iteration;
    rec["l_kmeans"] = r.l_kmeans;
    rec["l_crossmodal"] = r.l_crossmodal ? nlohmann::ordered_json(*r.l_crossmodal) : nullptr;
    rec["empty_clusters_reseeded"] = r.empty_clusters_reseeded;
    records.push_back(rec);
  }
  if (!trained.log.empty()) {
    fin["l_kmeans"] = trained.log.back().l_kmeans;
    fin["l_crossmodal"] = records.back()["l_crossmodal"];
  }
  j["final_objectives"] = fin;
  j["log"] = records;
  std::ofstream out(json_path);
  if (!out) raise(ErrorCode::kIoError, "cannot open '" + json_path + "' for writing");
  out << j.dump(2) << "\n";
  if (!out) raise(ErrorCode::kIoError, "write failed for '" + json_path + "'");
}

Centroids load_centroids(const std::string& cmeb_path) { return Centroids(read_cmeb(cmeb_path)); }

}  // namespace cmivf
