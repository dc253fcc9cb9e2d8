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

#include "cmivf/theory.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <string>

#include "cmivf/distance.hpp"
#include "cmivf/error.hpp"
#include "cmivf/parallel.hpp"
#include "cmivf/special.hpp"

namespace cmivf {
namespace {

constexpr std::uint64_t kGalleryStream = 1;
constexpr std::uint64_t kQueryStream = 2;
constexpr std::uint64_t kKMeansStream = 3;
constexpr std::uint64_t kBoundaryStream = 4;
constexpr std::uint64_t kProbeStreamBase = 100;
constexpr std::size_t kTrialChunk = 256;

// Slack on the bisector bound, covering float rounding of stored vectors.
constexpr double kPruneMargin = 1e-6;

void require(bool ok, const std::string& what) {
  if (!ok) raise(ErrorCode::kConfigError, what);
}

// Probed cell of an n_probe=1 search: largest inner product, lower id on ties.
std::size_t probed_cell(const float* q, const Centroids& c, double* best_dot) {
  std::size_t best = 0;
  double bd = dot(q, c.row_ptr(0), c.dim());
  for (std::size_t j = 1; j < c.k(); ++j) {
    const double v = dot(q, c.row_ptr(j), c.dim());
    if (v > bd) {
      bd = v;
      best = j;
    }
  }
  if (best_dot) *best_dot = bd;
  return best;
}

}  // namespace

double s_prime(const Centroids& centroids, std::size_t c_index) {
  if (centroids.k() < 2) raise(ErrorCode::kSingleCentroid, "s' needs at least two centroids");
  if (c_index >= centroids.k()) raise(ErrorCode::kInvalidArgument, "centroid index out of range");
  const std::size_t d = centroids.dim();
  double best = -INFINITY;
  const float* c = centroids.row_ptr(c_index);
  const double cn = std::sqrt(dot(c, c, d));
  for (std::size_t i = 0; i < centroids.k(); ++i) {
    if (i == c_index) continue;
    const float* o = centroids.row_ptr(i);
    best = std::max(best, dot(c, o, d) / (cn * std::sqrt(dot(o, o, d))));
  }
  return std::cos(0.5 * std::acos(std::clamp(best, -1.0, 1.0)));
}

double thm1_epsilon(double s_prime_value, std::size_t d, std::size_t n) {
  return std::pow(1.0 - cap_fraction(s_prime_value, d), static_cast<double>(n));
}

OwnCellHits own_cell_hits(const IvfIndex& index, const EmbeddingSet& queries) {
  if (index.quantization() != Quantization::kNone)
    raise(ErrorCode::kInvalidArgument, "own-cell check needs an unquantized index");
  if (queries.dim() != index.dim()) raise(ErrorCode::kDimensionMismatch, "query dim != index dim");
  const Centroids& cent = index.centroids();
  const std::size_t k = cent.k(), d = cent.dim();

  std::vector<double> sq_norm(k), gap(k * k);
  for (std::size_t i = 0; i < k; ++i) sq_norm[i] = dot(cent.row_ptr(i), cent.row_ptr(i), d);
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = 0; j < k; ++j) gap[i * k + j] = std::sqrt(l2_sq(cent.row_ptr(i), cent.row_ptr(j), d));

  OwnCellHits out{std::vector<std::uint8_t>(queries.rows()), std::vector<double>(queries.rows())};
  parallel_for(queries.rows(), 16, [&](std::size_t begin, std::size_t end) {
    std::vector<double> dots(k);
    std::vector<std::pair<double, std::size_t>> others;
    for (std::size_t q = begin; q < end; ++q) {
      const float* qp = queries.row_ptr(q);
      const std::size_t own = probed_cell(qp, cent, &out.cosine[q]);
      const Bucket& ob = index.bucket(own);
      if (ob.ids.empty()) continue;
      double best = INFINITY;
      std::uint64_t best_id = 0;
      for (std::size_t j = 0; j < ob.ids.size(); ++j) {
        const double dist = l2_sq(qp, ob.vectors.data() + j * d, d);
        if (dist < best) {
          best = dist;
          best_id = ob.ids[j];
        }
      }
      // Cell c lies in {x : <x, c_own - c> <= (|c_own|^2 - |c|^2) / 2}.
      others.clear();
      for (std::size_t c = 0; c < k; ++c) {
        if (c == own || index.bucket(c).ids.empty()) continue;
        dots[c] = dot(qp, cent.row_ptr(c), d);
        const double margin = out.cosine[q] - dots[c] - 0.5 * (sq_norm[own] - sq_norm[c]);
        others.emplace_back(gap[own * k + c] > 0.0 ? margin / gap[own * k + c] : -INFINITY, c);
      }
      std::sort(others.begin(), others.end());
      bool hit = true;
      const double radius = std::sqrt(best);
      for (const auto& [bound, c] : others) {
        if (bound - kPruneMargin > radius) break;
        const Bucket& b = index.bucket(c);
        for (std::size_t j = 0; j < b.ids.size() && hit; ++j) {
          const double dist = l2_sq(qp, b.vectors.data() + j * d, d);
          if (dist < best || (dist == best && b.ids[j] < best_id)) hit = false;
        }
        if (!hit) break;
      }
      out.hits[q] = hit;
    }
  });
  return out;
}

Thm1Report verify_thm1(const Thm1Config& cfg) {
  require(cfg.k >= 2, "k must be >= 2");
  require(cfg.d >= 2, "d must be >= 2");
  require(cfg.n >= 100 * cfg.k, "n must be >= 100 k");
  require(cfg.n_bins >= 1, "n_bins must be >= 1");
  require(cfg.n_queries >= cfg.n_bins, "need at least one query per bin");
  require(cfg.iters >= 1, "iters must be >= 1");
  require(cfg.boundary_offset >= 0.0 && cfg.boundary_offset < 1e-3, "boundary_offset must be in [0, 1e-3)");

  const std::size_t d = cfg.d, k = cfg.k;
  const EmbeddingSet gallery = sample_uniform_sphere(cfg.n, d, derive_seed(cfg.seed, kGalleryStream));
  const Centroids cent = run_kmeans(gallery, k, cfg.iters, derive_seed(cfg.seed, kKMeansStream)).centroids;
  const IvfIndex index = build_index(gallery, cent);

  Thm1Report report;
  {
    const EmbeddingSet queries = sample_uniform_sphere(cfg.n_queries, d, derive_seed(cfg.seed, kQueryStream));
    const OwnCellHits hits = own_cell_hits(index, queries);
    std::vector<std::size_t> order(queries.rows());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return hits.cosine[a] < hits.cosine[b] || (hits.cosine[a] == hits.cosine[b] && a < b);
    });
    const std::size_t base = order.size() / cfg.n_bins, extra = order.size() % cfg.n_bins;
    std::size_t pos = 0;
    std::vector<double> idx, rec;
    for (std::size_t b = 0; b < cfg.n_bins; ++b) {
      const std::size_t size = base + (b < extra ? 1 : 0);
      Thm1Bin bin;
      bin.count = size;
      bin.cos_lo = hits.cosine[order[pos]];
      bin.cos_hi = hits.cosine[order[pos + size - 1]];
      std::size_t h = 0;
      for (std::size_t i = pos; i < pos + size; ++i) h += hits.hits[order[i]];
      bin.recall_at_1 = static_cast<double>(h) / static_cast<double>(size);
      pos += size;
      report.bins.push_back(bin);
      idx.push_back(static_cast<double>(b));
      rec.push_back(bin.recall_at_1);
    }
    report.spearman = cfg.n_bins >= 2 ? spearman(idx, rec) : 0.0;
  }

  for (std::size_t c = 0; c < k; ++c) {
    report.s_prime.push_back(s_prime(cent, c));
    report.epsilon.push_back(thm1_epsilon(report.s_prime.back(), d, cfg.n));
  }

  // Boundary queries: project a uniform point onto the bisector of its two
  // closest centroids, keep it if no third centroid is as close, then step
  // boundary_offset toward the closest one.
  std::vector<float> bq;
  bq.reserve(cfg.n_boundary * d);
  Rng rng(cfg.seed, kBoundaryStream);
  std::vector<double> u(d), x(d), dots(k);
  std::vector<float> yf(d);
  std::size_t accepted = 0;
  const std::size_t max_attempts = 1000 * std::max<std::size_t>(cfg.n_boundary, 1);
  for (std::size_t attempt = 0; accepted < cfg.n_boundary; ++attempt) {
    if (attempt == max_attempts) raise(ErrorCode::kConfigError, "could not place boundary queries");
    double n2 = 0.0;
    for (auto& v : u) {
      v = rng.normal();
      n2 += v * v;
    }
    if (n2 < 1e-24) continue;
    for (std::size_t c = 0; c < k; ++c) {
      double s = 0.0;
      for (std::size_t j = 0; j < d; ++j) s += u[j] * cent.row_ptr(c)[j];
      dots[c] = s;
    }
    std::size_t a = 0, b = 1;
    if (dots[b] > dots[a]) std::swap(a, b);
    for (std::size_t c = 2; c < k; ++c) {
      if (dots[c] > dots[a]) {
        b = a;
        a = c;
      } else if (dots[c] > dots[b]) {
        b = c;
      }
    }
    const float* ca = cent.row_ptr(a);
    const float* cb = cent.row_ptr(b);
    double wu = 0.0, ww = 0.0, beta = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      const double w = double(ca[j]) - double(cb[j]);
      wu += w * u[j];
      ww += w * w;
      beta += 0.5 * (double(ca[j]) * ca[j] - double(cb[j]) * cb[j]);
    }
    if (ww <= 0.0) continue;
    double xn = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      x[j] = u[j] - (wu - beta) / ww * (double(ca[j]) - double(cb[j]));
      xn += x[j] * x[j];
    }
    xn = std::sqrt(xn);
    if (xn < 1e-12) continue;
    for (auto& v : x) v /= xn;
    double da = 0.0, db = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      da += x[j] * ca[j];
      db += x[j] * cb[j];
    }
    bool clear = true;
    for (std::size_t c = 0; c < k && clear; ++c) {
      if (c == a || c == b) continue;
      double s = 0.0;
      for (std::size_t j = 0; j < d; ++j) s += x[j] * cent.row_ptr(c)[j];
      clear = s < std::min(da, db) - 1e-6;
    }
    if (!clear) continue;
    double step = 0.0;
    for (std::size_t j = 0; j < d; ++j) step += (ca[j] - x[j]) * (ca[j] - x[j]);
    step = std::sqrt(step);
    double yn = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      x[j] += cfg.boundary_offset * (ca[j] - x[j]) / step;
      yn += x[j] * x[j];
    }
    yn = std::sqrt(yn);
    for (std::size_t j = 0; j < d; ++j) yf[j] = static_cast<float>(x[j] / yn);
    if (probed_cell(yf.data(), cent, nullptr) != a) continue;
    bq.insert(bq.end(), yf.begin(), yf.end());
    ++accepted;
  }
  report.boundary_count = accepted;
  if (accepted > 0) {
    const auto hits = own_cell_hits(index, EmbeddingSet(accepted, d, std::move(bq), true)).hits;
    report.boundary_recall_estimate =
        static_cast<double>(std::accumulate(hits.begin(), hits.end(), std::size_t{0})) /
        static_cast<double>(accepted);
  }
  return report;
}

double pdf_thm2(std::span<const double> x, std::span<const double> p, std::size_t n) {
  if (x.size() != p.size() || x.size() < 1) raise(ErrorCode::kDomainError, "x and p must share a dimension >= 1");
  if (n < 1) raise(ErrorCode::kDomainError, "n must be >= 1");
  double xx = 0.0, pp = 0.0, r2 = 0.0;
  for (std::size_t j = 0; j < x.size(); ++j) {
    if (!std::isfinite(x[j]) || !std::isfinite(p[j])) raise(ErrorCode::kDomainError, "non-finite input");
    xx += x[j] * x[j];
    pp += p[j] * p[j];
    r2 += (x[j] - p[j]) * (x[j] - p[j]);
  }
  const double d = static_cast<double>(x.size());
  const double gauss = std::exp(-0.5 * d * std::log(2.0 * std::numbers::pi) - 0.5 * xx);
  if (n == 1) return gauss;
  const double outside = noncentral_chi2_sf(r2, d, pp);
  if (outside <= 0.0) return 0.0;
  return static_cast<double>(n) * std::exp(static_cast<double>(n - 1) * std::log(outside)) * gauss;
}

double nearest_tail_bound(double r, double p_norm, std::size_t d, std::size_t n) {
  if (!(r >= 0.0) || !(p_norm >= 0.0) || d < 1 || n < 1)
    raise(ErrorCode::kDomainError, "tail bound needs r >= 0, |p| >= 0, d >= 1, n >= 1");
  if (r == 0.0) return 1.0;
  const double dd = static_cast<double>(d);
  const double log_mass = dd * std::log(r) - 0.5 * dd * std::log(2.0) - std::lgamma(0.5 * dd + 1.0) -
                          0.5 * (p_norm + r) * (p_norm + r);
  const double mass = std::min(1.0, std::exp(log_mass));
  if (mass >= 1.0) return 0.0;
  return std::exp(static_cast<double>(n) * std::log1p(-mass));
}

double max_normal_cdf(double t, std::size_t n) {
  const double phi = normal_cdf(t);
  if (phi <= 0.0) return 0.0;
  return std::exp(static_cast<double>(n) * std::log(phi));
}

std::vector<Thm2Report> verify_thm2(const Thm2Config& cfg) {
  require(cfg.trials >= 10'000, "trials must be >= 1e4");
  require(cfg.n >= 1, "n must be >= 1");
  require(cfg.d >= 2, "d must be >= 2");
  require(!cfg.p_norms.empty(), "p_norms must not be empty");
  require(cfg.alpha > 0.0 && cfg.alpha < 1.0, "alpha must be in (0, 1)");
  for (const double pn : cfg.p_norms) require(std::isfinite(pn) && pn >= 0.0, "p norms must be finite and >= 0");
  for (const double r : cfg.r_grid) require(std::isfinite(r) && r >= 0.0, "r grid must be finite and >= 0");

  const std::size_t d = cfg.d, n = cfg.n, T = cfg.trials;
  std::vector<Thm2Report> out;
  for (std::size_t pi = 0; pi < cfg.p_norms.size(); ++pi) {
    const double pn = cfg.p_norms[pi];
    const RngSeed stream_seed = derive_seed(cfg.seed, pi);
    std::vector<double> q(T * d);
    parallel_for(T, kTrialChunk, [&](std::size_t begin, std::size_t end) {
      Rng rng(stream_seed, begin / kTrialChunk);
      std::vector<double> pt(d);
      for (std::size_t t = begin; t < end; ++t) {
        double best = INFINITY;
        double* dst = q.data() + t * d;
        for (std::size_t i = 0; i < n; ++i) {
          double dist = 0.0;
          for (std::size_t j = 0; j < d; ++j) {
            pt[j] = rng.normal();
            const double diff = pt[j] - (j == 0 ? pn : 0.0);
            dist += diff * diff;
          }
          if (dist < best) {
            best = dist;
            std::copy(pt.begin(), pt.end(), dst);
          }
        }
      }
    });

    Thm2Report rep;
    rep.p_norm = pn;
    std::vector<double> orth(T), par(T), dist(T);
    std::vector<double> mean(d, 0.0);
    for (std::size_t t = 0; t < T; ++t) {
      const double* x = q.data() + t * d;
      par[t] = x[0];
      orth[t] = x[1];
      double s = 0.0;
      for (std::size_t j = 0; j < d; ++j) {
        const double diff = x[j] - (j == 0 ? pn : 0.0);
        s += diff * diff;
        mean[j] += x[j];
      }
      dist[t] = std::sqrt(s);
    }
    for (auto& m : mean) m /= static_cast<double>(T);
    double spread = 0.0;
    for (std::size_t t = 0; t < T; ++t)
      for (std::size_t j = 0; j < d; ++j) spread += (q[t * d + j] - mean[j]) * (q[t * d + j] - mean[j]);
    rep.spread = spread / static_cast<double>(T);

    rep.ks_orthogonal = ks_statistic(orth, normal_cdf);
    rep.ks_orthogonal_pvalue = ks_pvalue(rep.ks_orthogonal, T);
    rep.ks_orthogonal_pass = rep.ks_orthogonal_pvalue >= cfg.alpha;
    rep.ks_parallel = ks_statistic(par, [n](double t) { return max_normal_cdf(t, n); });
    rep.ks_parallel_pvalue = ks_pvalue(rep.ks_parallel, T);
    rep.ks_parallel_pass = rep.ks_parallel_pvalue >= cfg.alpha;

    for (const double r : cfg.r_grid) {
      TailCheck tc;
      tc.r = r;
      tc.bound = nearest_tail_bound(r, pn, d, n);
      const auto above = std::count_if(dist.begin(), dist.end(), [r](double v) { return v > r; });
      tc.empirical = static_cast<double>(above) / static_cast<double>(T);
      const double var = tc.bound <= 0.5 ? tc.bound * (1.0 - tc.bound) : 0.25;
      tc.sigma = std::sqrt(var / static_cast<double>(T));
      tc.pass = tc.empirical <= tc.bound + 3.0 * tc.sigma;
      rep.tail.push_back(tc);
    }
    out.push_back(std::move(rep));
  }
  return out;
}

std::vector<std::uint8_t> cell_mismatch(const EmbeddingSet& gallery, const Centroids& centroids,
                                        const EmbeddingSet& probes) {
  const auto probe_cells = assign(probes, centroids);
  const auto gallery_cells = assign(gallery, centroids);
  const auto nn = exact_nn_ids(probes, gallery);
  std::vector<std::uint8_t> out(probes.rows());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = probe_cells[i] != gallery_cells[nn[i]];
  return out;
}

std::vector<VoronoiBin> voronoi_mismatch_map(const VoronoiConfig& cfg) {
  require(cfg.k >= 1 && cfg.k <= cfg.n, "k must be in [1, n]");
  require(cfg.probes_per_bin >= 1, "probes_per_bin must be >= 1");
  require(!cfg.radii.empty(), "radii must not be empty");
  require(cfg.iters >= 1, "iters must be >= 1");
  for (const double r : cfg.radii) require(std::isfinite(r) && r >= 0.0, "radii must be finite and >= 0");

  const EmbeddingSet gallery = sample_gaussian(cfg.n, 2, derive_seed(cfg.seed, kGalleryStream));
  KMeansOptions opts;
  opts.spherical = false;
  const Centroids cent =
      run_kmeans(gallery, cfg.k, cfg.iters, derive_seed(cfg.seed, kKMeansStream), opts).centroids;

  std::vector<VoronoiBin> out;
  for (std::size_t b = 0; b < cfg.radii.size(); ++b) {
    Rng rng(cfg.seed, kProbeStreamBase + b);
    std::vector<float> pts(cfg.probes_per_bin * 2);
    for (std::size_t i = 0; i < cfg.probes_per_bin; ++i) {
      const double theta = 2.0 * std::numbers::pi * rng.uniform();
      pts[2 * i] = static_cast<float>(cfg.radii[b] * std::cos(theta));
      pts[2 * i + 1] = static_cast<float>(cfg.radii[b] * std::sin(theta));
    }
    const auto flags = cell_mismatch(gallery, cent, EmbeddingSet(cfg.probes_per_bin, 2, std::move(pts), false));
    const auto bad = std::accumulate(flags.begin(), flags.end(), std::size_t{0});
    out.push_back(VoronoiBin{cfg.radii[b], static_cast<double>(bad) / static_cast<double>(cfg.probes_per_bin),
                             cfg.probes_per_bin});
  }
  return out;
}

}  // namespace cmivf
