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
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <vector>

#include <json.hpp>

#include "cmivf/distance.hpp"
#include "cmivf/kmeans.hpp"
#include "cmivf/parallel.hpp"
#include "support.hpp"

using namespace cmivf;
using cmivf::test::set_of;
using cmivf::test::unit_set;

namespace {

Centroids centroids_of(std::size_t k, std::size_t d, std::initializer_list<float> v) {
  return Centroids(unit_set(k, d, v));
}

// Two tight blobs around (1,0) and (0,1).
EmbeddingSet two_blobs(std::size_t per_blob, RngSeed seed) {
  Rng rng(seed);
  std::vector<float> v;
  for (std::size_t b = 0; b < 2; ++b)
    for (std::size_t i = 0; i < per_blob; ++i) {
      v.push_back(static_cast<float>((b == 0 ? 1.0 : 0.0) + 0.03 * rng.normal()));
      v.push_back(static_cast<float>((b == 1 ? 1.0 : 0.0) + 0.03 * rng.normal()));
    }
  return l2_normalize(EmbeddingSet(2 * per_blob, 2, v, false));
}

}  // namespace

TEST_SUITE("kmeans") {
  TEST_CASE("assign") {
    const auto c = centroids_of(2, 2, {1, 0, 0, 1});
    CHECK(assign(set_of(1, 2, {0.9f, 0.1f}), c) == std::vector<std::uint32_t>{0});
    CHECK(assign(c.vectors(), c) == std::vector<std::uint32_t>{0, 1});
    // Equidistant point goes to the lower id.
    CHECK(assign(set_of(1, 2, {1, 1}), c) == std::vector<std::uint32_t>{0});
    CHECK_CODE(assign(set_of(1, 3, {1, 0, 0}), c), ErrorCode::kDimensionMismatch);
  }

  TEST_CASE("objective_kmeans") {
    const auto c = centroids_of(2, 2, {1, 0, 0, 1});
    CHECK(objective_kmeans(c.vectors(), c) == 0.0);
    const Centroids single(set_of(1, 2, {1, 0}, true));
    CHECK(objective_kmeans(set_of(2, 2, {1, 0, 0, 1}), single) == doctest::Approx(1.0));
  }

  TEST_CASE("objective_crossmodal") {
    const auto gallery = unit_set(2, 2, {1, 0.1f, 0.1f, 1});
    const auto c = centroids_of(2, 2, {1, 0, 0, 1});
    // Text equal to its paired image.
    const PairedSet same{gallery, {0, 1}, {}};
    CHECK(objective_crossmodal(same, gallery, c) == 0.0);
    // Text in cell 0, its image in cell 1.
    const PairedSet split{unit_set(1, 2, {1, 0.2f}), {1}, {}};
    CHECK(objective_crossmodal(split, gallery, c) == 1.0);
    const PairedSet empty{gallery, {}, {}};
    CHECK_CODE(objective_crossmodal(empty, gallery, c), ErrorCode::kEmptyPairs);
  }

  TEST_CASE("make_pairs uses exact nearest images and allows repeats") {
    const auto gallery = unit_set(3, 2, {1, 0, 0, 1, -1, 0});
    const auto p = make_pairs(unit_set(3, 2, {1, 0.1f, 1, -0.1f, -0.1f, 1}), gallery, "g");
    CHECK(p.image_nn_ids == std::vector<std::uint64_t>{0, 0, 1});
    CHECK(p.gallery_ref == "g");
  }

  TEST_CASE("k equal to n recovers the points") {
    const auto pts = sample_uniform_sphere(12, 5, RngSeed{1});
    const auto r = run_kmeans(pts, 12, 3, RngSeed{2});
    CHECK(r.log.back().l_kmeans == doctest::Approx(0.0).epsilon(1e-9).scale(1.0));
    std::multiset<std::vector<float>> want, got;
    for (std::size_t i = 0; i < 12; ++i) {
      want.insert(std::vector<float>(pts.row(i).begin(), pts.row(i).end()));
      got.insert(std::vector<float>(r.centroids.vectors().row(i).begin(), r.centroids.vectors().row(i).end()));
    }
    for (auto a = want.begin(), b = got.begin(); a != want.end(); ++a, ++b)
      for (std::size_t j = 0; j < 5; ++j) CHECK((*a)[j] == doctest::Approx((*b)[j]).epsilon(1e-6));
  }

  TEST_CASE("two blobs") {
    const auto pts = two_blobs(200, RngSeed{3});
    const auto r = run_kmeans(pts, 2, 10, RngSeed{4});
    std::vector<bool> near(2, false);
    for (std::size_t c = 0; c < 2; ++c) {
      const float* v = r.centroids.row_ptr(c);
      near[0] = near[0] || std::hypot(v[0] - 1.0, v[1]) < 0.1;
      near[1] = near[1] || std::hypot(v[0], v[1] - 1.0) < 0.1;
    }
    CHECK(near[0]);
    CHECK(near[1]);
  }

  TEST_CASE("training log and monotonicity") {
    const auto pts = sample_uniform_sphere(5000, 8, RngSeed{5});
    const auto r = run_kmeans(pts, 32, 8, RngSeed{6});
    REQUIRE(r.log.size() == 8);
    for (std::size_t i = 0; i < r.log.size(); ++i) {
      CHECK(r.log[i].iteration == i + 1);
      CHECK(r.log[i].l_kmeans >= 0.0);
      CHECK_FALSE(r.log[i].l_crossmodal.has_value());
    }
    CHECK(r.log.back().l_kmeans <= r.log.front().l_kmeans + 1e-6);
    CHECK(r.centroids.normalized());
    CHECK(r.log.back().l_kmeans == doctest::Approx(objective_kmeans(pts, r.centroids)).epsilon(1e-12));
    for (std::size_t a = 0; a < 32; ++a)
      for (std::size_t b = a + 1; b < 32; ++b)
        CHECK(l2_sq(r.centroids.row_ptr(a), r.centroids.row_ptr(b), 8) > 1e-14);
  }

  TEST_CASE("seeding is the start of training") {
    const auto pts = sample_uniform_sphere(2000, 6, RngSeed{7});
    const auto seeded = seed_centroids(pts, 10, RngSeed{8});
    CHECK(seeded.k() == 10);
    CHECK(seeded.normalized());
    CHECK(seed_centroids(pts, 10, RngSeed{8}) == seeded);
    // Seeds are data rows.
    for (std::size_t c = 0; c < 10; ++c) {
      bool found = false;
      for (std::size_t i = 0; i < pts.rows() && !found; ++i)
        found = std::equal(pts.row(i).begin(), pts.row(i).end(), seeded.vectors().row(c).begin());
      CHECK(found);
    }
  }

  TEST_CASE("run_kmeans is deterministic and thread-count independent") {
    const auto pts = sample_uniform_sphere(6000, 8, RngSeed{9});
    const auto before = num_threads();
    set_num_threads(1);
    const auto a = run_kmeans(pts, 20, 4, RngSeed{10});
    set_num_threads(3);
    const auto b = run_kmeans(pts, 20, 4, RngSeed{10});
    set_num_threads(before);
    CHECK(a.centroids == b.centroids);
  }

  TEST_CASE("non-spherical k-means keeps raw means") {
    const auto pts = sample_gaussian(3000, 3, RngSeed{11});
    KMeansOptions opts;
    opts.spherical = false;
    const auto r = run_kmeans(pts, 5, 6, RngSeed{12}, opts);
    CHECK_FALSE(r.centroids.normalized());
    CHECK(r.log.back().l_kmeans <= r.log.front().l_kmeans + 1e-9);
  }

  TEST_CASE("invalid arguments") {
    const auto pts = sample_uniform_sphere(10, 3, RngSeed{13});
    CHECK_CODE(run_kmeans(pts, 0, 3, RngSeed{1}), ErrorCode::kInvalidK);
    CHECK_CODE(run_kmeans(pts, 11, 3, RngSeed{1}), ErrorCode::kInvalidK);
    CHECK_CODE(run_kmeans(pts, 2, 0, RngSeed{1}), ErrorCode::kInvalidArgument);
    const PairedSet pairs{pts, {0, 0, 0, 0, 0, 0, 0, 0, 0, 0}, {}};
    // Only one distinct image: k = 2 cells cannot be formed.
    CHECK_CODE(run_paired_kmeans(pairs, pts, 2, 3, RngSeed{1}), ErrorCode::kInvalidK);
    const PairedSet none{pts, {}, {}};
    CHECK_CODE(run_paired_kmeans(none, pts, 1, 3, RngSeed{1}), ErrorCode::kEmptyPairs);
  }

  TEST_CASE("paired k-means without a modality gap") {
    const auto gallery = sample_uniform_sphere(3000, 8, RngSeed{14});
    const auto pairs = make_pairs(gallery, gallery);
    const auto paired = run_paired_kmeans(pairs, gallery, 16, 6, RngSeed{15});
    const auto plain = run_kmeans(gallery, 16, 6, RngSeed{15});
    CHECK(paired.log.back().l_crossmodal.value() == 0.0);
    CHECK(paired.centroids == plain.centroids);
  }

  TEST_CASE("paired k-means: duplicate pairs all contribute") {
    // Gallery: two well separated images. Texts 0 and 1 both pair with image
    // 0, text 2 with image 1; k=2 makes each image its own cell.
    const auto gallery = unit_set(2, 2, {1, 0, 0, 1});
    const auto texts = unit_set(3, 2, {1, 0.5f, 1, -0.1f, 0.2f, 1});
    const PairedSet pairs{texts, {0, 0, 1}, {}};
    const auto r = run_paired_kmeans(pairs, gallery, 2, 1, RngSeed{16});
    // The centroid of the cell holding image 0 is the normalized sum of texts 0 and 1.
    const double sx = texts.row(0)[0] + texts.row(1)[0];
    const double sy = texts.row(0)[1] + texts.row(1)[1];
    const double n = std::hypot(sx, sy);
    const auto c = assign(set_of(1, 2, {1, 0}), r.centroids)[0];
    CHECK(r.centroids.row_ptr(c)[0] == doctest::Approx(sx / n).epsilon(1e-6));
    CHECK(r.centroids.row_ptr(c)[1] == doctest::Approx(sy / n).epsilon(1e-6));
  }

  TEST_CASE("paired k-means logs both objectives") {
    const auto gallery = sample_uniform_sphere(2000, 8, RngSeed{17});
    const auto texts = sample_uniform_sphere(400, 8, RngSeed{18});
    const auto pairs = make_pairs(texts, gallery);
    const auto r = run_paired_kmeans(pairs, gallery, 12, 5, RngSeed{19});
    REQUIRE(r.log.size() == 5);
    for (const auto& rec : r.log) {
      REQUIRE(rec.l_crossmodal.has_value());
      CHECK(*rec.l_crossmodal >= 0.0);
      CHECK(*rec.l_crossmodal <= 1.0);
    }
    CHECK(r.log.back().l_crossmodal.value() == objective_crossmodal(pairs, gallery, r.centroids));
    CHECK(r.log.back().l_kmeans == doctest::Approx(objective_kmeans(gallery, r.centroids)).epsilon(1e-12));
  }

  TEST_CASE("standard k-means logs cross-modal objective when asked") {
    const auto gallery = sample_uniform_sphere(2000, 8, RngSeed{20});
    const auto pairs = make_pairs(sample_uniform_sphere(300, 8, RngSeed{21}), gallery);
    KMeansOptions opts;
    opts.eval_pairs = &pairs;
    opts.eval_gallery = &gallery;
    const auto r = run_kmeans(gallery, 10, 3, RngSeed{22}, opts);
    for (const auto& rec : r.log) CHECK(rec.l_crossmodal.has_value());
    CHECK(r.log.back().l_crossmodal.value() == objective_crossmodal(pairs, gallery, r.centroids));
    KMeansOptions half;
    half.eval_pairs = &pairs;
    CHECK_CODE(run_kmeans(gallery, 10, 3, RngSeed{22}, half), ErrorCode::kInvalidArgument);
  }

  TEST_CASE("save and load centroids") {
    const auto pts = sample_uniform_sphere(500, 4, RngSeed{23});
    const auto r = run_kmeans(pts, 5, 2, RngSeed{24});
    save_centroids(r, {"kmeans", 2, 24}, "test_kmeans_c.cmeb", "test_kmeans_c.json");
    CHECK(load_centroids("test_kmeans_c.cmeb") == r.centroids);
    std::ifstream in("test_kmeans_c.json");
    const auto j = nlohmann::json::parse(in);
    CHECK(j["k"] == 5);
    CHECK(j["d"] == 4);
    CHECK(j["variant"] == "kmeans");
    CHECK(j["iters"] == 2);
    CHECK(j["seed"] == 24);
    CHECK(j["log"].size() == 2);
    std::remove("test_kmeans_c.cmeb");
    std::remove("test_kmeans_c.json");
  }
}
