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

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "cmivf/ivf.hpp"
#include "cmivf/kmeans.hpp"
#include "cmivf/special.hpp"
#include "cmivf/theory.hpp"
#include "support.hpp"

using namespace cmivf;
using cmivf::test::unit_set;

namespace {

double standard_normal_density(double x0, double x1) {
  return std::exp(-(x0 * x0 + x1 * x1) / 2.0) / (2.0 * std::numbers::pi);
}

// Trapezoid rule over [-half, half]^2 on a square grid.
double grid_integral(const std::vector<double>& p, std::size_t n, double half, double h) {
  const auto steps = static_cast<long>(std::lround(2.0 * half / h));
  double total = 0.0;
  for (long i = 0; i <= steps; ++i)
    for (long j = 0; j <= steps; ++j) {
      const std::vector<double> x{-half + h * i, -half + h * j};
      const double w = (i == 0 || i == steps ? 0.5 : 1.0) * (j == 0 || j == steps ? 0.5 : 1.0);
      total += w * pdf_thm2(x, p, n);
    }
  return total * h * h;
}

}  // namespace

TEST_SUITE("theory") {
  TEST_CASE("s_prime examples") {
    const Centroids antipodal(unit_set(2, 2, {1, 0, -1, 0}));
    CHECK(s_prime(antipodal, 0) == doctest::Approx(0.0).epsilon(1e-12));
    const double h = std::sqrt(3.0) / 2.0;
    const Centroids sixty(unit_set(2, 2, {1, 0, 0.5f, static_cast<float>(h)}));
    CHECK(s_prime(sixty, 0) == doctest::Approx(h).epsilon(1e-6));
    CHECK(s_prime(sixty, 1) == doctest::Approx(h).epsilon(1e-6));

    // The closest of several neighbors sets the value.
    const Centroids three(unit_set(3, 2, {1, 0, 0, 1, 0.5f, static_cast<float>(h)}));
    CHECK(s_prime(three, 0) == doctest::Approx(h).epsilon(1e-6));

    CHECK_CODE(s_prime(Centroids(unit_set(1, 2, {1, 0})), 0), ErrorCode::kSingleCentroid);
    CHECK_CODE(s_prime(sixty, 2), ErrorCode::kInvalidArgument);
  }

  TEST_CASE("s_prime stays in (-1, 1]") {
    const Centroids c(sample_uniform_sphere(40, 5, RngSeed{1}));
    for (std::size_t i = 0; i < c.k(); ++i) {
      const double s = s_prime(c, i);
      CHECK(s > -1.0);
      CHECK(s <= 1.0);
    }
  }

  TEST_CASE("epsilon is the probability of an empty cap") {
    CHECK(thm1_epsilon(0.0, 8, 3) == doctest::Approx(0.125).epsilon(1e-12));
    const double f = cap_fraction(0.6, 16);
    CHECK(thm1_epsilon(0.6, 16, 50) == doctest::Approx(std::pow(1.0 - f, 50)).epsilon(1e-12));
  }

  TEST_CASE("density at x = p") {
    for (const std::size_t n : {1, 7, 100}) {
      const std::vector<double> p{0.3, -1.2, 0.5};
      const double norm2 = 0.09 + 1.44 + 0.25;
      const double want = n * std::pow(2.0 * std::numbers::pi, -1.5) * std::exp(-norm2 / 2.0);
      CHECK(pdf_thm2(p, p, n) == doctest::Approx(want).epsilon(1e-12));
    }
  }

  TEST_CASE("one point gives the standard normal density") {
    const std::vector<double> p{1.5, -0.5};
    for (double a = -3.0; a <= 3.0; a += 0.75)
      for (double b = -3.0; b <= 3.0; b += 0.75) {
        const std::vector<double> x{a, b};
        CHECK(std::abs(pdf_thm2(x, p, 1) - standard_normal_density(a, b)) <= 1e-10);
      }
  }

  TEST_CASE("density integrates to one in the plane") {
    for (const double pn : {0.0, 2.0, 5.0})
      for (const std::size_t n : {1, 10, 100}) {
        CAPTURE(pn);
        CAPTURE(n);
        const std::vector<double> p{pn, 0.0};
        CHECK(grid_integral(p, n, 9.0, 0.05) == doctest::Approx(1.0).epsilon(1e-3));
      }
  }

  TEST_CASE("density peaks on the side facing a far query") {
    const std::vector<double> p{5.0, 0.0};
    double best = -1.0, bx = 0.0, by = 0.0;
    for (double a = -4.0; a <= 4.0; a += 0.05)
      for (double b = -4.0; b <= 4.0; b += 0.05) {
        const std::vector<double> x{a, b};
        const double v = pdf_thm2(x, p, 50);
        if (v > best) {
          best = v;
          bx = a;
          by = b;
        }
      }
    CHECK(bx > 1.0);
    CHECK(std::abs(by) < 0.5);
  }

  TEST_CASE("density and bound domain errors") {
    const std::vector<double> x{0.0, 0.0};
    const std::vector<double> p3{0.0, 0.0, 0.0};
    CHECK_CODE(pdf_thm2(x, p3, 5), ErrorCode::kDomainError);
    CHECK_CODE(pdf_thm2(x, x, 0), ErrorCode::kDomainError);
    const std::vector<double> bad{NAN, 0.0};
    CHECK_CODE(pdf_thm2(bad, x, 5), ErrorCode::kDomainError);
    CHECK_CODE(nearest_tail_bound(-1.0, 0.0, 2, 5), ErrorCode::kDomainError);
    CHECK_CODE(nearest_tail_bound(1.0, 0.0, 2, 0), ErrorCode::kDomainError);
  }

  TEST_CASE("tail bound and max-normal cdf") {
    CHECK(nearest_tail_bound(0.0, 0.0, 4, 10) == doctest::Approx(1.0));
    double prev = 2.0;
    for (double r = 0.0; r <= 2.0; r += 0.25) {
      const double b = nearest_tail_bound(r, 0.0, 4, 10);
      CHECK(b <= prev);
      CHECK(b >= 0.0);
      prev = b;
    }
    // d = 2: the ball volume factor is r^2 / 2.
    const double want = std::pow(1.0 - 0.5 * std::exp(-(1.0 + 1.0) * (1.0 + 1.0) / 2.0), 7);
    CHECK(nearest_tail_bound(1.0, 1.0, 2, 7) == doctest::Approx(want).epsilon(1e-12));
    CHECK(max_normal_cdf(0.0, 3) == doctest::Approx(0.125).epsilon(1e-12));
    CHECK(max_normal_cdf(1.0, 1) == doctest::Approx(normal_cdf(1.0)).epsilon(1e-15));
  }

  TEST_CASE("own-cell hits agree with one-probe search") {
    const auto g = sample_uniform_sphere(5000, 8, RngSeed{2});
    const auto c = run_kmeans(g, 16, 5, RngSeed{3}).centroids;
    const auto ix = build_index(g, c);
    const auto q = sample_uniform_sphere(500, 8, RngSeed{4});
    const auto own = own_cell_hits(ix, q);
    const auto rep = eval_recall(ix, q, g, 1);
    CHECK(own.hits == rep.hits);
    CHECK(own.cosine.size() == q.rows());
    CHECK_CODE(own_cell_hits(build_index(g, c, Quantization::kScalar8), q), ErrorCode::kInvalidArgument);
  }

  TEST_CASE("small closed-space run") {
    Thm1Config cfg;
    cfg.n = 2000;
    cfg.k = 8;
    cfg.d = 8;
    cfg.n_bins = 5;
    cfg.n_queries = 2000;
    cfg.n_boundary = 200;
    cfg.iters = 5;
    cfg.seed = RngSeed{5};
    const auto rep = verify_thm1(cfg);
    REQUIRE(rep.bins.size() == 5);
    std::size_t total = 0;
    for (const auto& b : rep.bins) {
      total += b.count;
      CHECK(b.cos_lo <= b.cos_hi);
      CHECK(b.recall_at_1 >= 0.0);
      CHECK(b.recall_at_1 <= 1.0);
    }
    for (std::size_t i = 1; i < rep.bins.size(); ++i) CHECK(rep.bins[i - 1].cos_hi <= rep.bins[i].cos_lo);
    CHECK(total == cfg.n_queries);
    CHECK(rep.s_prime.size() == cfg.k);
    for (const double e : rep.epsilon) {
      CHECK(e >= 0.0);
      CHECK(e <= 1.0);
    }
    CHECK(rep.boundary_count == cfg.n_boundary);

    const auto again = verify_thm1(cfg);
    CHECK(again.spearman == rep.spearman);
    CHECK(again.boundary_recall_estimate == rep.boundary_recall_estimate);

    cfg.n = 799;
    CHECK_CODE(verify_thm1(cfg), ErrorCode::kConfigError);
  }

  TEST_CASE("nearest-point spread grows with the query norm") {
    Thm2Config cfg;
    cfg.d = 4;
    cfg.n = 20;
    cfg.p_norms = {0.0, 20.0};
    cfg.seed = RngSeed{6};
    const auto reps = verify_thm2(cfg);
    REQUIRE(reps.size() == 2);
    CHECK(reps[1].spread > reps[0].spread);
    for (const auto& t : reps[0].tail) CHECK(t.pass);
    for (const auto& rep : reps) {
      CHECK(rep.ks_orthogonal_pvalue >= 0.0);
      CHECK(rep.ks_orthogonal_pvalue <= 1.0);
      CHECK(rep.tail.size() == cfg.r_grid.size());
    }
    cfg.trials = 9999;
    CHECK_CODE(verify_thm2(cfg), ErrorCode::kConfigError);
  }

  TEST_CASE("cell mismatch") {
    const auto g = sample_gaussian(500, 2, RngSeed{7});
    const auto c = run_kmeans(g, 6, 5, RngSeed{8}, KMeansOptions{.spherical = false}).centroids;
    const auto at_points = cell_mismatch(g, c, g);
    CHECK(std::all_of(at_points.begin(), at_points.end(), [](auto v) { return v == 0; }));

    VoronoiConfig cfg;
    cfg.n = 2000;
    cfg.k = 10;
    cfg.probes_per_bin = 500;
    cfg.radii = {0.5, 2.0, 4.0};
    cfg.seed = RngSeed{9};
    const auto bins = voronoi_mismatch_map(cfg);
    REQUIRE(bins.size() == 3);
    for (const auto& b : bins) {
      CHECK(b.mismatch >= 0.0);
      CHECK(b.mismatch <= 1.0);
      CHECK(b.probes == 500);
    }
    cfg.k = 0;
    CHECK_CODE(voronoi_mismatch_map(cfg), ErrorCode::kConfigError);
  }
}
