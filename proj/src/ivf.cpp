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

#include "cmivf/ivf.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "byteio.hpp"
#include "cmivf/cmeb.hpp"
#include "cmivf/distance.hpp"
#include "cmivf/error.hpp"
#include "cmivf/parallel.hpp"

namespace cmivf {

const char* quantization_name(Quantization q) {
  return q == Quantization::kScalar8 ? "scalar8" : "none";
}

Quantization parse_quantization(const std::string& name) {
  if (name == "none") return Quantization::kNone;
  if (name == "scalar8") return Quantization::kScalar8;
  raise(ErrorCode::kInvalidArgument, "unknown quantization '" + name + "' (expected none|scalar8)");
}

IvfIndex::IvfIndex(Centroids centroids, std::vector<Bucket> buckets, Quantization quantization,
                   std::vector<float> mins, std::vector<float> maxs)
    : centroids_(std::move(centroids)),
      buckets_(std::move(buckets)),
      quantization_(quantization),
      mins_(std::move(mins)),
      maxs_(std::move(maxs)) {
  const std::size_t d = dim();
  if (buckets_.size() != centroids_.k())
    raise(ErrorCode::kInvalidArgument, "index needs one bucket per centroid");
  const bool scalar8 = quantization_ == Quantization::kScalar8;
  if (scalar8 ? (mins_.size() != d || maxs_.size() != d) : (!mins_.empty() || !maxs_.empty()))
    raise(ErrorCode::kInvalidArgument, "quantization ranges do not match the mode");
  for (const auto& b : buckets_) total_ += b.ids.size();
  std::vector<char> seen(total_, 0);
  for (const auto& b : buckets_) {
    const std::size_t expect = b.ids.size() * d;
    if ((scalar8 ? b.codes.size() : b.vectors.size()) != expect ||
        !(scalar8 ? b.vectors.empty() : b.codes.empty()))
      raise(ErrorCode::kInvalidArgument, "bucket payload size does not match its id count");
    for (std::size_t j = 0; j < b.ids.size(); ++j) {
      const auto id = b.ids[j];
      if (id >= total_ || seen[id]) raise(ErrorCode::kInvalidArgument, "posting ids are not a partition");
      if (j > 0 && b.ids[j - 1] >= id) raise(ErrorCode::kInvalidArgument, "posting ids not ascending");
      seen[id] = 1;
    }
  }
}

void IvfIndex::decode(std::size_t c, std::size_t j, float* out) const {
  const Bucket& b = buckets_[c];
  const std::size_t d = dim();
  if (quantization_ == Quantization::kNone) {
    std::copy_n(b.vectors.data() + j * d, d, out);
    return;
  }
  const std::uint8_t* code = b.codes.data() + j * d;
  for (std::size_t t = 0; t < d; ++t)
    out[t] = mins_[t] + static_cast<float>(code[t]) * ((maxs_[t] - mins_[t]) / 255.0f);
}

EmbeddingSet IvfIndex::reconstruct() const {
  const std::size_t d = dim();
  std::vector<float> out(total_ * d);
  for (std::size_t c = 0; c < k(); ++c)
    for (std::size_t j = 0; j < buckets_[c].ids.size(); ++j) decode(c, j, out.data() + buckets_[c].ids[j] * d);
  return EmbeddingSet(total_, d, std::move(out), false);
}

IvfIndex build_index(const EmbeddingSet& gallery, const Centroids& centroids, Quantization quantization) {
  if (gallery.dim() != centroids.dim())
    raise(ErrorCode::kDimensionMismatch, "gallery dim " + std::to_string(gallery.dim()) +
                                             " != centroid dim " + std::to_string(centroids.dim()));
  if (!gallery.normalized()) raise(ErrorCode::kInvalidArgument, "index gallery must be normalized");
  const std::size_t d = gallery.dim(), n = gallery.rows(), k = centroids.k();
  const auto cells = assign(gallery, centroids);

  std::vector<float> mins, maxs;
  const bool scalar8 = quantization == Quantization::kScalar8;
  if (scalar8) {
    mins.assign(gallery.row_ptr(0), gallery.row_ptr(0) + d);
    maxs = mins;
    for (std::size_t i = 1; i < n; ++i) {
      const float* x = gallery.row_ptr(i);
      for (std::size_t t = 0; t < d; ++t) {
        mins[t] = std::min(mins[t], x[t]);
        maxs[t] = std::max(maxs[t], x[t]);
      }
    }
  }

  std::vector<Bucket> buckets(k);
  for (std::size_t i = 0; i < n; ++i) buckets[cells[i]].ids.push_back(i);
  parallel_for(k, 8, [&](std::size_t begin, std::size_t end) {
    for (std::size_t c = begin; c < end; ++c) {
      Bucket& b = buckets[c];
      if (!scalar8) {
        b.vectors.reserve(b.ids.size() * d);
        for (const auto id : b.ids) b.vectors.insert(b.vectors.end(), gallery.row_ptr(id), gallery.row_ptr(id) + d);
        continue;
      }
      b.codes.reserve(b.ids.size() * d);
      for (const auto id : b.ids) {
        const float* x = gallery.row_ptr(id);
        for (std::size_t t = 0; t < d; ++t) {
          const float range = maxs[t] - mins[t];
          const double level = range > 0.0f ? std::round(double(x[t] - mins[t]) / range * 255.0) : 0.0;
          b.codes.push_back(static_cast<std::uint8_t>(std::clamp(level, 0.0, 255.0)));
        }
      }
    }
  });
  return IvfIndex(centroids, std::move(buckets), quantization, std::move(mins), std::move(maxs));
}

RetrievalResult search(const IvfIndex& index, const EmbeddingSet& queries, std::size_t n_probe,
                       std::size_t topk, SearchStats* stats) {
  if (queries.dim() != index.dim())
    raise(ErrorCode::kDimensionMismatch, "query dim " + std::to_string(queries.dim()) +
                                             " != index dim " + std::to_string(index.dim()));
  if (n_probe < 1 || n_probe > index.k())
    raise(ErrorCode::kInvalidNProbe, "n_probe=" + std::to_string(n_probe) + " must be in [1, " +
                                         std::to_string(index.k()) + "]");
  if (topk < 1) raise(ErrorCode::kInvalidArgument, "topk must be >= 1");
  const std::size_t d = index.dim(), k = index.k(), nq = queries.rows();
  const bool quantized = index.quantization() != Quantization::kNone;

  RetrievalResult result;
  result.lists.resize(nq);
  std::vector<std::size_t> scanned(nq, 0);
  parallel_for(nq, 16, [&](std::size_t begin, std::size_t end) {
    std::vector<std::pair<double, std::uint32_t>> order(k);
    std::vector<Neighbor> cand;
    std::vector<float> buf(d);
    for (std::size_t q = begin; q < end; ++q) {
      const float* qp = queries.row_ptr(q);
      for (std::size_t c = 0; c < k; ++c)
        order[c] = {dot(qp, index.centroids().row_ptr(c), d), static_cast<std::uint32_t>(c)};
      std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_probe), order.end(),
                        [](const auto& a, const auto& b) {
                          return a.first > b.first || (a.first == b.first && a.second < b.second);
                        });
      cand.clear();
      for (std::size_t p = 0; p < n_probe; ++p) {
        const std::size_t c = order[p].second;
        const Bucket& b = index.bucket(c);
        for (std::size_t j = 0; j < b.ids.size(); ++j) {
          const float* x = b.vectors.data() + j * d;
          if (quantized) {
            index.decode(c, j, buf.data());
            x = buf.data();
          }
          cand.push_back(Neighbor{b.ids[j], l2_sq(qp, x, d), dot(qp, x, d)});
        }
      }
      scanned[q] = cand.size();
      const std::size_t keep = std::min(topk, cand.size());
      std::partial_sort(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(keep), cand.end(), closer);
      result.lists[q].assign(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(keep));
    }
  });
  if (stats) {
    stats->mean_buckets = static_cast<double>(n_probe);
    double total = 0.0;
    for (const auto s : scanned) total += static_cast<double>(s);
    stats->mean_candidates = total / static_cast<double>(nq);
  }
  return result;
}

RecallReport eval_recall(const IvfIndex& index, const EmbeddingSet& queries,
                         std::span<const std::uint64_t> truth, std::size_t n_probe) {
  if (truth.size() != queries.rows())
    raise(ErrorCode::kInvalidArgument, "ground truth has " + std::to_string(truth.size()) +
                                           " ids for " + std::to_string(queries.rows()) + " queries");
  SearchStats stats;
  const auto found = search(index, queries, n_probe, 1, &stats);
  RecallReport report;
  report.n_probe = n_probe;
  report.hits.resize(queries.rows());
  std::size_t hit_count = 0;
  for (std::size_t q = 0; q < queries.rows(); ++q) {
    report.hits[q] = !found.lists[q].empty() && found.lists[q][0].id == truth[q];
    hit_count += report.hits[q];
  }
  report.recall_at_1 = static_cast<double>(hit_count) / static_cast<double>(queries.rows());
  report.mean_buckets = stats.mean_buckets;
  report.mean_candidates = stats.mean_candidates;
  return report;
}

RecallReport eval_recall(const IvfIndex& index, const EmbeddingSet& queries, const EmbeddingSet& gallery,
                         std::size_t n_probe) {
  if (gallery.rows() != index.total())
    raise(ErrorCode::kInvalidArgument, "gallery has " + std::to_string(gallery.rows()) +
                                           " rows but the index holds " + std::to_string(index.total()));
  const auto truth = exact_nn_ids(queries, gallery);
  return eval_recall(index, queries, truth, n_probe);
}

std::vector<std::uint8_t> encode_index(const IvfIndex& index) {
  detail::ByteWriter w;
  w.bytes("CMIV", 4);
  w.u32(kCmivVersion);
  w.u32(static_cast<std::uint32_t>(index.k()));
  w.u32(static_cast<std::uint32_t>(index.dim()));
  w.u64(index.total());
  w.u8(static_cast<std::uint8_t>(index.quantization()));
  w.zeros(7);
  for (const float v : index.mins()) w.f32(v);
  for (const float v : index.maxs()) w.f32(v);
  const auto cent = encode_cmeb(index.centroids().vectors());
  w.bytes(cent.data(), cent.size());
  for (std::size_t c = 0; c < index.k(); ++c) {
    const Bucket& b = index.bucket(c);
    w.u64(b.ids.size());
    for (const auto id : b.ids) w.u64(id);
    for (const float v : b.vectors) w.f32(v);
    w.bytes(b.codes.data(), b.codes.size());
  }
  return std::move(w.buffer());
}

IvfIndex decode_index(std::span<const std::uint8_t> bytes) {
  detail::ByteReader r(bytes.data(), bytes.size(), "CMIV");
  if (std::string(reinterpret_cast<const char*>(r.take(4)), 4) != "CMIV")
    raise(ErrorCode::kFormatError, "bad CMIV magic");
  const std::uint32_t version = r.u32();
  if (version != kCmivVersion)
    raise(ErrorCode::kFormatError, "unsupported CMIV version " + std::to_string(version));
  const std::uint32_t k = r.u32();
  const std::uint32_t d = r.u32();
  const std::uint64_t total = r.u64();
  const std::uint8_t qmode = r.u8();
  r.skip(7);
  if (qmode > 1) raise(ErrorCode::kFormatError, "unknown CMIV quantization " + std::to_string(qmode));
  const auto quant = static_cast<Quantization>(qmode);
  std::vector<float> mins, maxs;
  if (quant == Quantization::kScalar8) {
    mins.resize(d);
    maxs.resize(d);
    for (auto& v : mins) v = r.f32();
    for (auto& v : maxs) v = r.f32();
  }
  std::size_t used = 0;
  EmbeddingSet cent = decode_cmeb(bytes.subspan(r.position()), &used);
  r.skip(used);
  if (cent.rows() != k || cent.dim() != d) raise(ErrorCode::kFormatError, "CMIV centroid block shape mismatch");

  std::vector<Bucket> buckets(k);
  std::uint64_t seen = 0;
  for (auto& b : buckets) {
    const std::uint64_t len = r.u64();
    if (len > total - seen || len > r.remaining() / 8) raise(ErrorCode::kFormatError, "CMIV: bad bucket length");
    seen += len;
    b.ids.resize(len);
    for (auto& id : b.ids) id = r.u64();
    if (quant == Quantization::kNone) {
      r.need(len * d * 4);
      b.vectors.resize(len * d);
      for (auto& v : b.vectors) v = r.f32();
    } else {
      const auto* p = r.take(len * d);
      b.codes.assign(p, p + len * d);
    }
  }
  if (seen != total) raise(ErrorCode::kFormatError, "CMIV: bucket lengths do not sum to total");
  if (r.remaining() != 0) raise(ErrorCode::kFormatError, "CMIV: trailing bytes");
  try {
    return IvfIndex(Centroids(std::move(cent)), std::move(buckets), quant, std::move(mins), std::move(maxs));
  } catch (const Error& e) {
    raise(ErrorCode::kFormatError, std::string("CMIV payload violates invariants: ") + e.what());
  }
}

void save_index(const IvfIndex& index, const std::string& path) {
  detail::write_file(path, encode_index(index));
}

IvfIndex load_index(const std::string& path) { return decode_index(detail::read_file(path)); }

}  // namespace cmivf
