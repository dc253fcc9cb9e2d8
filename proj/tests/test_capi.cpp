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

#include <cstdio>
#include <string>
#include <vector>

#include <doctest.h>

#include "cmivf/cmivf.h"

namespace {

cmivf_embeddings* sphere_points(std::size_t rows, std::size_t dim, unsigned salt) {
  std::vector<float> v(rows * dim);
  for (std::size_t i = 0; i < v.size(); ++i)
    v[i] = static_cast<float>(((i * 2654435761u + salt) % 1000) / 500.0 - 1.0);
  cmivf_embeddings* raw = nullptr;
  REQUIRE(cmivf_embeddings_create(rows, dim, v.data(), 0, &raw) == CMIVF_OK);
  cmivf_embeddings* unit = nullptr;
  REQUIRE(cmivf_embeddings_normalize(raw, &unit) == CMIVF_OK);
  cmivf_embeddings_free(raw);
  return unit;
}

}  // namespace

TEST_SUITE("capi") {
  TEST_CASE("status codes and messages") {
    CHECK(std::string(cmivf_version()).size() > 0);
    CHECK(std::string(cmivf_status_name(CMIVF_OK)) != std::string(cmivf_status_name(CMIVF_E_IO)));
    cmivf_embeddings* out = nullptr;
    CHECK(cmivf_embeddings_read("/nonexistent/file.cmeb", &out) == CMIVF_E_IO);
    CHECK(out == nullptr);
    CHECK(std::string(cmivf_last_error()).find("nonexistent") != std::string::npos);
    const float zero[4] = {0, 0, 0, 0};
    CHECK(cmivf_embeddings_create(2, 2, zero, 1, &out) != CMIVF_OK);
    CHECK(cmivf_embeddings_create(1, 1, zero, 0, &out) == CMIVF_E_INVALID_ARGUMENT);
    double s = 0.0;
    CHECK(cmivf_cap_fraction(0.0, 4, &s) == CMIVF_OK);
    CHECK(s == doctest::Approx(0.5));
    CHECK(cmivf_cap_fraction(2.0, 4, &s) == CMIVF_E_DOMAIN);
  }

  TEST_CASE("train, index, search and evaluate") {
    cmivf_embeddings* gallery = sphere_points(800, 8, 1);
    cmivf_embeddings* queries = sphere_points(50, 8, 7);
    cmivf_centroids* c = nullptr;
    REQUIRE(cmivf_train_kmeans(gallery, 10, 4, 3, &c) == CMIVF_OK);
    CHECK(cmivf_centroids_k(c) == 10);
    cmivf_index* ix = nullptr;
    REQUIRE(cmivf_index_build(gallery, c, CMIVF_QUANT_NONE, &ix) == CMIVF_OK);
    CHECK(cmivf_index_total(ix) == 800);
    CHECK(cmivf_index_dim(ix) == 8);

    std::vector<std::uint64_t> ids(50 * 5);
    std::vector<double> sims(50 * 5);
    std::vector<std::size_t> counts(50);
    REQUIRE(cmivf_search(ix, queries, 10, 5, ids.data(), sims.data(), counts.data()) == CMIVF_OK);
    for (std::size_t q = 0; q < 50; ++q) {
      CHECK(counts[q] == 5);
      CHECK(sims[q * 5] >= sims[q * 5 + 4]);
    }
    CHECK(cmivf_search(ix, queries, 0, 5, ids.data(), sims.data(), counts.data()) == CMIVF_E_INVALID_NPROBE);

    const std::size_t probes[] = {1, 10};
    cmivf_table* t = nullptr;
    REQUIRE(cmivf_eval_recall(ix, queries, gallery, probes, 2, &t) == CMIVF_OK);
    CHECK(cmivf_table_rows(t) == 2);
    const std::string csv = cmivf_table_csv(t);
    CHECK(csv.rfind("n_probe,recall_at_1,", 0) == 0);
    CHECK(csv.find("\n10,1,") != std::string::npos);
    cmivf_table_free(t);

    REQUIRE(cmivf_index_save(ix, "test_capi_index.cmiv") == CMIVF_OK);
    cmivf_index* back = nullptr;
    REQUIRE(cmivf_index_load("test_capi_index.cmiv", &back) == CMIVF_OK);
    CHECK(cmivf_index_k(back) == 10);
    std::remove("test_capi_index.cmiv");

    cmivf_index_free(back);
    cmivf_index_free(ix);
    cmivf_centroids_free(c);
    cmivf_embeddings_free(queries);
    cmivf_embeddings_free(gallery);
  }

  TEST_CASE("embeddings round trip through a file") {
    cmivf_embeddings* e = sphere_points(7, 3, 2);
    REQUIRE(cmivf_embeddings_write(e, "test_capi.cmeb") == CMIVF_OK);
    cmivf_embeddings* r = nullptr;
    REQUIRE(cmivf_embeddings_read("test_capi.cmeb", &r) == CMIVF_OK);
    CHECK(cmivf_embeddings_rows(r) == 7);
    CHECK(cmivf_embeddings_dim(r) == 3);
    CHECK(cmivf_embeddings_is_normalized(r) == 1);
    for (std::size_t i = 0; i < 21; ++i) CHECK(cmivf_embeddings_data(r)[i] == cmivf_embeddings_data(e)[i]);
    std::remove("test_capi.cmeb");
    cmivf_embeddings_free(r);
    cmivf_embeddings_free(e);
  }

  TEST_CASE("thread control") {
    const std::size_t before = cmivf_threads();
    cmivf_set_threads(3);
    CHECK(cmivf_threads() == 3);
    cmivf_set_threads(0);
    CHECK(cmivf_threads() >= 1);
    cmivf_set_threads(before);
  }
}
