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
#include <cstdint>
#include <cstdio>
#include <numeric>
#include <vector>

#include <boost/math/distributions/non_central_chi_squared.hpp>
#include <boost/math/special_functions/beta.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "cmivf/cmeb.hpp"
#include "cmivf/distance.hpp"
#include "cmivf/embedding.hpp"
#include "cmivf/parallel.hpp"
#include "cmivf/random.hpp"
#include "cmivf/special.hpp"
#include "support.hpp"

using namespace cmivf;
using cmivf::test::set_of;

TEST_SUITE("vecspace") {
  TEST_CASE("embedding set rejects invalid shapes and values") {
    CHECK_CODE(EmbeddingSet(1, 1, {1.0f}, false), ErrorCode::kInvalidArgument);
    CHECK_CODE(EmbeddingSet(0, 2, {}, false), ErrorCode::kInvalidArgument);
    CHECK_CODE(EmbeddingSet(1, 2, {1.0f}, false), ErrorCode::kInvalidArgument);
    CHECK_CODE(EmbeddingSet(1, 2, {NAN, 0.0f}, false), ErrorCode::kInvalidArgument);
    CHECK_CODE(EmbeddingSet(1, 2, {INFINITY, 0.0f}, false), ErrorCode::kInvalidArgument);
    CHECK_CODE(EmbeddingSet(1, 2, {2.0f, 0.0f}, true), ErrorCode::kInvalidArgument);
    CHECK_NOTHROW(EmbeddingSet(1, 2, {1.00005f, 0.0f}, true));
  }

  TEST_CASE("select keeps the requested order") {
    const auto s = set_of(3, 2, {1, 2, 3, 4, 5, 6});
    const std::vector<std::uint64_t> ids{2, 0, 2};
    const auto t = s.select(ids);
    CHECK(t.rows() == 3);
    CHECK(t.row(0)[0] == 5.0f);
    CHECK(t.row(1)[1] == 2.0f);
    CHECK(t.row(2)[1] == 6.0f);
    const std::vector<std::uint64_t> bad{3};
    CHECK_CODE(s.select(bad), ErrorCode::kInvalidArgument);
  }

  TEST_CASE("l2_normalize") {
    const auto a = l2_normalize(set_of(1, 2, {3, 4}));
    CHECK(a.normalized());
    CHECK(a.row(0)[0] == doctest::Approx(0.6));
    CHECK(a.row(0)[1] == doctest::Approx(0.8));

    const auto e = l2_normalize(set_of(1, 4, {1, 0, 0, 0}));
    CHECK(e.row(0)[0] == 1.0f);
    CHECK(e.row(0)[3] == 0.0f);

    const auto g = l2_normalize(sample_gaussian(100, 64, RngSeed{3}));
    for (std::size_t i = 0; i < g.rows(); ++i)
      CHECK(std::sqrt(dot(g.row_ptr(i), g.row_ptr(i), 64)) == doctest::Approx(1.0).epsilon(1e-6));

    CHECK_CODE(l2_normalize(set_of(2, 2, {1, 0, 0, 0})), ErrorCode::kZeroVector);
  }

  TEST_CASE("distance kernels match a naive sum") {
    Rng rng(RngSeed{1});
    for (std::size_t d : {1, 2, 3, 4, 5, 7, 8, 63, 64}) {
      std::vector<float> a(d), b(d);
      for (std::size_t j = 0; j < d; ++j) {
        a[j] = static_cast<float>(rng.normal());
        b[j] = static_cast<float>(rng.normal());
      }
      double l2 = 0.0, ip = 0.0;
      for (std::size_t j = 0; j < d; ++j) {
        l2 += (double(a[j]) - b[j]) * (double(a[j]) - b[j]);
        ip += double(a[j]) * b[j];
      }
      CHECK(l2_sq(a.data(), b.data(), d) == doctest::Approx(l2).epsilon(1e-12));
      CHECK(dot(a.data(), b.data(), d) == doctest::Approx(ip).epsilon(1e-12));
    }
  }

  TEST_CASE("exact_nn") {
    const auto g = set_of(3, 2, {0.9f, 0.1f, 0.0f, 1.0f, -1.0f, 0.0f});
    const auto q = set_of(1, 2, {1.0f, 0.0f});
    const auto r = exact_nn(q, g, 1);
    REQUIRE(r.lists.size() == 1);
    CHECK(r.lists[0][0].id == 0);

    const auto self = exact_nn(g, g, 1);
    for (std::size_t i = 0; i < 3; ++i) {
      CHECK(self.lists[i][0].id == i);
      CHECK(self.lists[i][0].distance == 0.0);
    }

    const auto all = exact_nn(q, g, 3);
    std::vector<std::uint64_t> ids;
    for (const auto& n : all.lists[0]) ids.push_back(n.id);
    std::sort(ids.begin(), ids.end());
    CHECK(ids == std::vector<std::uint64_t>{0, 1, 2});
    CHECK(std::is_sorted(all.lists[0].begin(), all.lists[0].end(), closer));

    CHECK(exact_nn_ids(q, g) == std::vector<std::uint64_t>{0});
    CHECK_CODE(exact_nn(set_of(1, 3, {1, 0, 0}), g, 1), ErrorCode::kDimensionMismatch);
    CHECK_CODE(exact_nn(q, g, 4), ErrorCode::kInvalidArgument);
  }

  TEST_CASE("exact_nn breaks distance ties by lower id") {
    const auto g = set_of(4, 2, {0, 1, 1, 0, 0, 1, 1, 0});
    const auto r = exact_nn(set_of(1, 2, {1, 1}), g, 4);
    std::vector<std::uint64_t> ids;
    for (const auto& n : r.lists[0]) ids.push_back(n.id);
    CHECK(ids == std::vector<std::uint64_t>{0, 1, 2, 3});
  }

  TEST_CASE("regularized incomplete beta") {
    CHECK(reg_inc_beta(1.0, 2.5, 0.7) == 1.0);
    CHECK(reg_inc_beta(0.0, 2.5, 0.7) == 0.0);
    for (double x : {0.0, 0.1, 0.37, 0.5, 0.9, 1.0}) CHECK(reg_inc_beta(x, 1.0, 1.0) == doctest::Approx(x));
    CHECK(reg_inc_beta(0.5, 0.5, 0.5) == doctest::Approx(0.5).epsilon(1e-12));
    for (double a : {0.5, 1.0, 1.5, 7.5, 63.5})
      for (double b : {0.5, 2.0, 10.0})
        for (double x : {0.01, 0.2, 0.5, 0.8, 0.99})
          CHECK(reg_inc_beta(x, a, b) == doctest::Approx(boost::math::ibeta(a, b, x)).epsilon(1e-10));
    CHECK_CODE(reg_inc_beta(1.5, 1.0, 1.0), ErrorCode::kDomainError);
    CHECK_CODE(reg_inc_beta(0.5, 0.0, 1.0), ErrorCode::kDomainError);
  }

  TEST_CASE("regularized incomplete gamma") {
    for (double a : {0.5, 1.0, 4.0, 30.0})
      for (double x : {0.01, 0.5, 2.0, 10.0, 50.0}) {
        CHECK(reg_gamma_p(a, x) == doctest::Approx(boost::math::gamma_p(a, x)).epsilon(1e-10));
        CHECK(reg_gamma_q(a, x) == doctest::Approx(boost::math::gamma_q(a, x)).epsilon(1e-10));
      }
  }

  TEST_CASE("noncentral chi-squared") {
    for (double k : {1.0, 2.0, 8.0})
      for (double lambda : {0.0, 1.0, 25.0, 400.0})
        for (double x : {0.5, 4.0, 20.0, 400.0}) {
          const boost::math::non_central_chi_squared_distribution<double> dist(k, lambda);
          CHECK(noncentral_chi2_cdf(x, k, lambda) == doctest::Approx(boost::math::cdf(dist, x)).epsilon(1e-8));
          const double sf = boost::math::cdf(boost::math::complement(dist, x));
          if (sf > 1e-300) CHECK(noncentral_chi2_sf(x, k, lambda) == doctest::Approx(sf).epsilon(1e-7));
        }
  }

  TEST_CASE("normal cdf") {
    CHECK(normal_cdf(0.0) == 0.5);
    CHECK(normal_cdf(1.959963984540054) == doctest::Approx(0.975).epsilon(1e-12));
    CHECK(normal_cdf(-3.0) + normal_cdf(3.0) == doctest::Approx(1.0).epsilon(1e-15));
  }

  TEST_CASE("cap fraction") {
    for (std::size_t d : {2, 3, 16, 128}) {
      CHECK(cap_fraction(1.0, d) == doctest::Approx(0.0));
      CHECK(cap_fraction(0.0, d) == doctest::Approx(0.5));
      CHECK(cap_fraction(-1.0, d) == doctest::Approx(1.0));
    }
    CHECK(cap_fraction(0.5, 3) == doctest::Approx(0.25).epsilon(1e-12));
    // d = 2: arc length fraction arccos(s)/pi.
    CHECK(cap_fraction(0.3, 2) == doctest::Approx(std::acos(0.3) / M_PI).epsilon(1e-12));
    CHECK(cap_fraction(-0.3, 2) == doctest::Approx(std::acos(-0.3) / M_PI).epsilon(1e-12));
  }

  TEST_CASE("uniform sphere sampler") {
    const auto x = sample_uniform_sphere(1'000'000, 16, RngSeed{21});
    CHECK(x.normalized());
    double worst = 0.0;
    std::size_t in = 0;
    for (std::size_t i = 0; i < x.rows(); ++i) {
      worst = std::max(worst, std::abs(std::sqrt(dot(x.row_ptr(i), x.row_ptr(i), 16)) - 1.0));
      in += x.row_ptr(i)[5] >= 0.3f;
    }
    CHECK(worst <= 1e-6);
    CHECK(std::abs(static_cast<double>(in) / 1e6 - cap_fraction(0.3, 16)) <= 0.005);
    CHECK(sample_uniform_sphere(5000, 8, RngSeed{4}) == sample_uniform_sphere(5000, 8, RngSeed{4}));
    CHECK_FALSE(sample_uniform_sphere(5000, 8, RngSeed{4}) == sample_uniform_sphere(5000, 8, RngSeed{5}));
  }

  TEST_CASE("gaussian sampler") {
    const auto x = sample_gaussian(1'000'000, 4, RngSeed{22});
    CHECK_FALSE(x.normalized());
    for (std::size_t j = 0; j < 4; ++j) {
      double m = 0.0, v = 0.0;
      for (std::size_t i = 0; i < x.rows(); ++i) m += x.row_ptr(i)[j];
      m /= 1e6;
      for (std::size_t i = 0; i < x.rows(); ++i) v += (x.row_ptr(i)[j] - m) * (x.row_ptr(i)[j] - m);
      v /= 1e6;
      CHECK(std::abs(m) <= 0.01);
      CHECK(std::abs(v - 1.0) <= 0.01);
    }
    const auto y = sample_gaussian(1'000'000, 2, RngSeed{23});
    std::size_t in = 0;
    for (std::size_t i = 0; i < y.rows(); ++i) in += dot(y.row_ptr(i), y.row_ptr(i), 2) <= 1.0;
    CHECK(std::abs(static_cast<double>(in) / 1e6 - (1.0 - std::exp(-0.5))) <= 0.005);
    CHECK(sample_gaussian(3000, 3, RngSeed{9}) == sample_gaussian(3000, 3, RngSeed{9}));
  }

  TEST_CASE("samplers and exact_nn do not depend on the thread count") {
    const auto before = num_threads();
    set_num_threads(1);
    const auto a = sample_uniform_sphere(20'000, 8, RngSeed{31});
    const auto na = exact_nn_ids(sample_uniform_sphere(500, 8, RngSeed{32}), a);
    set_num_threads(5);
    const auto b = sample_uniform_sphere(20'000, 8, RngSeed{31});
    const auto nb = exact_nn_ids(sample_uniform_sphere(500, 8, RngSeed{32}), b);
    set_num_threads(before);
    CHECK(a == b);
    CHECK(na == nb);
  }

  TEST_CASE("parallel_for covers every index once and rethrows") {
    std::vector<int> seen(10'001, 0);
    parallel_for(seen.size(), 64, [&](std::size_t b, std::size_t e) {
      for (std::size_t i = b; i < e; ++i) ++seen[i];
    });
    CHECK(std::all_of(seen.begin(), seen.end(), [](int v) { return v == 1; }));
    CHECK_THROWS_AS(parallel_for(100, 10,
                                 [](std::size_t b, std::size_t) {
                                   if (b == 50) raise(ErrorCode::kInternal, "boom");
                                 }),
                    Error);
  }

  TEST_CASE("rng streams") {
    Rng a(RngSeed{1}), b(RngSeed{1}), c(RngSeed{1}, 1);
    const auto x = a.next_u64();
    CHECK(x == b.next_u64());
    CHECK(x != c.next_u64());
    Rng r(RngSeed{2});
    for (int i = 0; i < 10'000; ++i) {
      const double u = r.uniform();
      CHECK((u >= 0.0 && u < 1.0));
      CHECK(r.uniform_index(7) < 7);
    }
  }

  TEST_CASE("ks statistic and p-value") {
    std::vector<double> u(5000);
    Rng r(RngSeed{8});
    for (auto& v : u) v = r.uniform();
    const auto uniform_cdf = [](double t) { return std::clamp(t, 0.0, 1.0); };
    const double d = ks_statistic(u, uniform_cdf);
    CHECK(ks_pvalue(d, u.size()) > 0.01);
    for (auto& v : u) v = v * v;
    CHECK(ks_pvalue(ks_statistic(u, uniform_cdf), u.size()) < 1e-6);
    const std::vector<double> one{0.5};
    CHECK(ks_statistic(one, uniform_cdf) == doctest::Approx(0.5));
  }

  TEST_CASE("spearman") {
    const std::vector<double> x{1, 2, 3, 4, 5};
    const std::vector<double> y{2, 4, 8, 16, 32};
    const std::vector<double> z{5, 4, 3, 2, 1};
    CHECK(spearman(x, y) == doctest::Approx(1.0));
    CHECK(spearman(x, z) == doctest::Approx(-1.0));
    // Ties take average ranks: y ranks (1.5, 1.5, 3, 4).
    const std::vector<double> a{1, 2, 3, 4};
    const std::vector<double> b{1, 1, 2, 3};
    CHECK(spearman(a, b) == doctest::Approx(4.5 / std::sqrt(5.0 * 4.5)).epsilon(1e-12));
  }

  TEST_CASE("CMEB round trip and header layout") {
    const auto s = l2_normalize(sample_gaussian(17, 5, RngSeed{12}));
    const auto bytes = encode_cmeb(s);
    REQUIRE(bytes.size() == kCmebHeaderBytes + 17 * 5 * 4);
    CHECK(std::equal(bytes.begin(), bytes.begin() + 4, "CMEB"));
    CHECK(bytes[4] == 1);
    CHECK(bytes[8] == 17);
    CHECK(bytes[16] == 5);
    CHECK(bytes[20] == 0);
    CHECK(bytes[21] == 1);
    std::size_t consumed = 0;
    CHECK(decode_cmeb(bytes, &consumed) == s);
    CHECK(consumed == bytes.size());

    const std::string path = "test_vecspace_roundtrip.cmeb";
    write_cmeb(s, path);
    CHECK(read_cmeb(path) == s);
    std::remove(path.c_str());
  }

  TEST_CASE("CMEB rejects malformed input") {
    auto bytes = encode_cmeb(set_of(2, 2, {1, 2, 3, 4}));
    auto bad_magic = bytes;
    bad_magic[0] = 'X';
    CHECK_CODE(decode_cmeb(bad_magic), ErrorCode::kFormatError);
    auto bad_version = bytes;
    bad_version[4] = 2;
    CHECK_CODE(decode_cmeb(bad_version), ErrorCode::kFormatError);
    const std::vector<std::uint8_t> truncated(bytes.begin(), bytes.end() - 1);
    CHECK_CODE(decode_cmeb(truncated), ErrorCode::kFormatError);
    const std::vector<std::uint8_t> header_only(bytes.begin(), bytes.begin() + 10);
    CHECK_CODE(decode_cmeb(header_only), ErrorCode::kFormatError);
    auto wrong_flag = bytes;
    wrong_flag[21] = 1;  // rows are not unit norm
    CHECK_CODE(decode_cmeb(wrong_flag), ErrorCode::kFormatError);
    CHECK_CODE(read_cmeb("/nonexistent/dir/x.cmeb"), ErrorCode::kIoError);
  }
}
