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

#include "cmivf/embedding.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "cmivf/distance.hpp"
#include "cmivf/error.hpp"
#include "cmivf/parallel.hpp"
#include "nn_kernel.hpp"

namespace cmivf {

EmbeddingSet::EmbeddingSet(std::size_t rows, std::size_t dim, std::vector<float> data,
                           bool normalized)
    : rows_(rows), dim_(dim), data_(std::move(data)), normalized_(normalized) {
  if (rows_ < 1) raise(ErrorCode::kInvalidArgument, "embedding set needs at least one row");
  if (dim_ < 2) raise(ErrorCode::kInvalidArgument, "embedding dimension must be >= 2");
  if (data_.size() != rows_ * dim_)
    raise(ErrorCode::kInvalidArgument, "data size " + std::to_string(data_.size()) +
                                           " != rows*dim " + std::to_string(rows_ * dim_));
  for (std::size_t i = 0; i < rows_; ++i) {
    const float* r = row_ptr(i);
    for (std::size_t j = 0; j < dim_; ++j)
      if (!std::isfinite(r[j]))
        raise(ErrorCode::kInvalidArgument, "non-finite value in row " + std::to_string(i));
    if (normalized_) {
      const double norm = std::sqrt(dot(r, r, dim_));
      if (std::abs(norm - 1.0) > kNormTolerance)
        raise(ErrorCode::kInvalidArgument,
              "row " + std::to_string(i) + " flagged normalized has norm " + std::to_string(norm));
    }
  }
}

EmbeddingSet EmbeddingSet::select(std::span<const std::uint64_t> ids) const {
  std::vector<float> out;
  out.reserve(ids.size() * dim_);
  for (const auto id : ids) {
    if (id >= rows_) raise(ErrorCode::kInvalidArgument, "row id out of range: " + std::to_string(id));
    const auto r = row(id);
    out.insert(out.end(), r.begin(), r.end());
  }
  return EmbeddingSet(ids.size(), dim_, std::move(out), normalized_);
}

EmbeddingSet l2_normalize(const EmbeddingSet& v) {
  const std::size_t d = v.dim();
  std::vector<float> out(v.data().begin(), v.data().end());
  for (std::size_t i = 0; i < v.rows(); ++i) {
    float* r = out.data() + i * d;
    const double norm = std::sqrt(dot(r, r, d));
    if (norm < 1e-12) raise(ErrorCode::kZeroVector, "row " + std::to_string(i) + " has zero norm");
    for (std::size_t j = 0; j < d; ++j) r[j] = static_cast<float>(double(r[j]) / norm);
  }
  return EmbeddingSet(v.rows(), d, std::move(out), true);
}

RetrievalResult exact_nn(const EmbeddingSet& queries, const EmbeddingSet& gallery,
                         std::size_t topk) {
  if (queries.dim() != gallery.dim())
    raise(ErrorCode::kDimensionMismatch, "query dim " + std::to_string(queries.dim()) +
                                             " != gallery dim " + std::to_string(gallery.dim()));
  if (topk < 1 || topk > gallery.rows())
    raise(ErrorCode::kInvalidArgument, "topk must be in [1, gallery rows]");
  const std::size_t d = gallery.dim();
  const auto flat = detail::nearest_rows(queries.data().data(), queries.rows(), gallery.data().data(),
                                         gallery.rows(), d, topk);
  RetrievalResult result;
  result.lists.resize(queries.rows());
  for (std::size_t q = 0; q < queries.rows(); ++q) {
    auto& list = result.lists[q];
    list.assign(flat.begin() + static_cast<std::ptrdiff_t>(q * topk),
                flat.begin() + static_cast<std::ptrdiff_t>((q + 1) * topk));
    for (auto& nb : list) nb.similarity = dot(queries.row_ptr(q), gallery.row_ptr(nb.id), d);
  }
  return result;
}

std::vector<std::uint64_t> exact_nn_ids(const EmbeddingSet& queries,
                                        const EmbeddingSet& gallery) {
  if (queries.dim() != gallery.dim())
    raise(ErrorCode::kDimensionMismatch, "query dim " + std::to_string(queries.dim()) +
                                             " != gallery dim " + std::to_string(gallery.dim()));
  const auto flat = detail::nearest_rows(queries.data().data(), queries.rows(), gallery.data().data(),
                                         gallery.rows(), gallery.dim(), 1);
  std::vector<std::uint64_t> ids(queries.rows());
  for (std::size_t q = 0; q < ids.size(); ++q) ids[q] = flat[q].id;
  return ids;
}

namespace {

constexpr std::size_t kSampleChunk = 4096;

std::vector<float> gaussian_rows(std::size_t n, std::size_t d, RngSeed seed, bool normalize) {
  std::vector<float> out(n * d);
  parallel_for(n, kSampleChunk, [&](std::size_t begin, std::size_t end) {
    Rng rng(seed, begin / kSampleChunk);
    std::vector<double> tmp(d);
    for (std::size_t i = begin; i < end; ++i) {
      float* r = out.data() + i * d;
      if (!normalize) {
        for (std::size_t j = 0; j < d; ++j) r[j] = static_cast<float>(rng.normal());
        continue;
      }
      double norm2 = 0.0;
      do {
        norm2 = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
          tmp[j] = rng.normal();
          norm2 += tmp[j] * tmp[j];
        }
      } while (norm2 < 1e-24);
      const double inv = 1.0 / std::sqrt(norm2);
      for (std::size_t j = 0; j < d; ++j) r[j] = static_cast<float>(tmp[j] * inv);
    }
  });
  return out;
}

}  // namespace

EmbeddingSet sample_uniform_sphere(std::size_t n, std::size_t d, RngSeed seed) {
  return EmbeddingSet(n, d, gaussian_rows(n, d, seed, true), true);
}

EmbeddingSet sample_gaussian(std::size_t n, std::size_t d, RngSeed seed) {
  return EmbeddingSet(n, d, gaussian_rows(n, d, seed, false), false);
}

}  // namespace cmivf
