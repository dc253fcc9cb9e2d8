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

#include "cmivf/embedding.hpp"
#include "cmivf/ivf.hpp"
#include "cmivf/kmeans.hpp"
#include "cmivf/random.hpp"

namespace cmivf {

/// cos(arccos(max_{i != c} <c, c_i>) / 2): cosine of half the angle from
/// centroid c to its closest neighbor centroid.
double s_prime(const Centroids& centroids, std::size_t c_index);

/// Probability that none of n uniform sphere points falls in the cap of
/// cosine s' around a centroid: (1 - cap_fraction(s', d))^n.
double thm1_epsilon(double s_prime_value, std::size_t d, std::size_t n);

struct OwnCellHits {
  std::vector<std::uint8_t> hits;  // exact NN lies in the query's probed cell
  std::vector<double> cosine;      // inner product with that cell's centroid
};

/// For each query, whether its exact nearest neighbor lies in the cell an
/// n_probe=1 search would scan. Agrees with eval_recall(index, q, gallery, 1)
/// on unquantized indexes; other cells are skipped when the bisector bound
/// proves they cannot hold a closer point.
OwnCellHits own_cell_hits(const IvfIndex& index, const EmbeddingSet& queries);

struct Thm1Config {
  std::size_t n = 1'000'000;
  std::size_t k = 64;
  std::size_t d = 16;
  std::size_t n_bins = 10;
  std::size_t n_queries = 20'000;
  std::size_t n_boundary = 2'000;
  /// Step from the bisector toward the own centroid (chord length).
  double boundary_offset = 5e-4;
  std::size_t iters = kDefaultKMeansIters;
  RngSeed seed{0};
};

struct Thm1Bin {
  double cos_lo = 0.0;
  double cos_hi = 0.0;
  double recall_at_1 = 0.0;
  std::size_t count = 0;
};

struct Thm1Report {
  /// Equal-count bins in ascending query-centroid cosine.
  std::vector<Thm1Bin> bins;
  std::vector<double> s_prime;
  std::vector<double> epsilon;
  double spearman = 0.0;
  double boundary_recall_estimate = 0.0;
  std::size_t boundary_count = 0;
};

/// Uniform gallery and queries on the sphere, spherical k-means cells, R@1 at
/// n_probe=1 binned by query-centroid cosine, plus queries placed next to a
/// Voronoi boundary. Requires n >= 100 k.
Thm1Report verify_thm1(const Thm1Config& cfg);

/// Density of the nearest of n standard normal points to p, evaluated at x:
/// n (1 - P[|X - p| <= r])^(n-1) (2 pi)^(-d/2) exp(-|x|^2/2), r = |x - p|.
double pdf_thm2(std::span<const double> x, std::span<const double> p, std::size_t n);

/// Upper bound on P[|q(p) - p| > r]:
/// (1 - r^d / (2^(d/2) Gamma(d/2+1)) exp(-(|p| + r)^2 / 2))^n.
double nearest_tail_bound(double r, double p_norm, std::size_t d, std::size_t n);

/// CDF of the maximum of n standard normals, Phi(t)^n.
double max_normal_cdf(double t, std::size_t n);

struct Thm2Config {
  std::size_t d = 8;
  std::size_t n = 100;
  std::vector<double> p_norms{0.0, 1.0, 2.0, 5.0, 20.0};
  std::size_t trials = 10'000;
  std::vector<double> r_grid{0.25, 0.5, 0.75, 1.0, 1.25, 1.5, 1.75, 2.0, 2.5, 3.0};
  double alpha = 0.01;
  RngSeed seed{0};
};

struct TailCheck {
  double r = 0.0;
  double empirical = 0.0;
  double bound = 0.0;
  double sigma = 0.0;
  bool pass = false;
};

struct Thm2Report {
  double p_norm = 0.0;
  double ks_orthogonal = 0.0;
  double ks_orthogonal_pvalue = 0.0;
  bool ks_orthogonal_pass = false;
  double ks_parallel = 0.0;
  double ks_parallel_pvalue = 0.0;
  bool ks_parallel_pass = false;
  std::vector<TailCheck> tail;
  /// Mean of |q - mean(q)|^2 over trials.
  double spread = 0.0;
};

/// Monte Carlo over trials with p = |p| e_0: KS of the e_1 coordinate of q(p)
/// against N(0,1), KS of the e_0 coordinate against Phi(t)^n, and the tail
/// bound with a 3 sigma allowance. Requires trials >= 1e4.
std::vector<Thm2Report> verify_thm2(const Thm2Config& cfg);

/// Per probe: 1 when the probe's nearest centroid differs from the nearest
/// centroid of its exact nearest gallery point.
std::vector<std::uint8_t> cell_mismatch(const EmbeddingSet& gallery, const Centroids& centroids,
                                        const EmbeddingSet& probes);

struct VoronoiConfig {
  std::size_t n = 10'000;
  std::size_t k = 20;
  std::size_t probes_per_bin = 10'000;
  std::vector<double> radii{0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0};
  std::size_t iters = kDefaultKMeansIters;
  RngSeed seed{0};
};

struct VoronoiBin {
  double radius = 0.0;
  double mismatch = 0.0;
  std::size_t probes = 0;
};

/// 2-D Gaussian gallery, Euclidean k-means, probes at each radius with
/// uniform angle.
std::vector<VoronoiBin> voronoi_mismatch_map(const VoronoiConfig& cfg);

}  // namespace cmivf
