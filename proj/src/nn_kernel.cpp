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

#include "nn_kernel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>

#include <Eigen/Core>

#include "cmivf/distance.hpp"
#include "cmivf/parallel.hpp"

namespace cmivf::detail {
namespace {

using RowMatrix = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMatrix>;

constexpr std::size_t kQueryBlock = 128;
constexpr std::size_t kBaseBlock = 2048;

struct Candidate {
  double approx;
  std::size_t row;
};

void brute_force(const float* q, const float* base, std::size_t nb, std::size_t d, std::size_t topk,
                 Neighbor* out) {
  std::vector<Neighbor> all(nb);
  for (std::size_t i = 0; i < nb; ++i) all[i] = Neighbor{i, l2_sq(q, base + i * d, d), 0.0};
  std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(topk), all.end(), closer);
  std::copy(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(topk), out);
}

}  // namespace

std::vector<Neighbor> nearest_rows(const float* queries, std::size_t nq, const float* base, std::size_t nb,
                                   std::size_t d, std::size_t topk) {
  std::vector<Neighbor> out(nq * topk);
  if (nq == 0) return out;
  if (4 * topk >= nb) {
    parallel_for(nq, 16, [&](std::size_t begin, std::size_t end) {
      for (std::size_t q = begin; q < end; ++q) brute_force(queries + q * d, base, nb, d, topk, &out[q * topk]);
    });
    return out;
  }

  std::vector<double> base_sq(nb);
  double base_norm_max = 0.0;
  for (std::size_t i = 0; i < nb; ++i) {
    base_sq[i] = dot(base + i * d, base + i * d, d);
    base_norm_max = std::max(base_norm_max, std::sqrt(base_sq[i]));
  }
  // |float dot - exact dot| <= gamma_d * |q| * |x| for any summation order.
  const double u = std::ldexp(1.0, -24);
  const double gamma = static_cast<double>(d) * u / (1.0 - static_cast<double>(d) * u);

  parallel_for(nq, kQueryBlock, [&](std::size_t begin, std::size_t end) {
    const std::size_t m = end - begin;
    const ConstMap Q(queries + begin * d, static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(d));
    std::vector<double> q_sq(m), margin(m);
    for (std::size_t r = 0; r < m; ++r) {
      const float* q = queries + (begin + r) * d;
      q_sq[r] = dot(q, q, d);
      // Twice the dot error bound (distance = |q|^2 + |x|^2 - 2<q,x>), plus
      // slack for the double-precision terms.
      const double abs_slack = 1e-12 * (q_sq[r] + base_norm_max * base_norm_max + 1.0);
      margin[r] = 2.0 * gamma * std::sqrt(q_sq[r]) * base_norm_max * (1.0 + 1e-6) + abs_slack;
    }
    std::vector<std::priority_queue<double>> kth(m);
    std::vector<std::vector<Candidate>> cand(m);
    RowMatrix S;
    for (std::size_t b0 = 0; b0 < nb; b0 += kBaseBlock) {
      const std::size_t bn = std::min(kBaseBlock, nb - b0);
      const ConstMap B(base + b0 * d, static_cast<Eigen::Index>(bn), static_cast<Eigen::Index>(d));
      S.noalias() = Q * B.transpose();
      for (std::size_t r = 0; r < m; ++r) {
        auto& heap = kth[r];
        auto& list = cand[r];
        const float* srow = S.data() + r * bn;
        const double width = 2.0 * margin[r];
        for (std::size_t i = 0; i < bn; ++i) {
          const double a = q_sq[r] + base_sq[b0 + i] - 2.0 * static_cast<double>(srow[i]);
          if (heap.size() < topk) {
            heap.push(a);
          } else if (a < heap.top()) {
            heap.pop();
            heap.push(a);
          }
          if (heap.size() < topk || a <= heap.top() + width) list.push_back({a, b0 + i});
        }
        if (list.size() > 8 * topk + 256) {
          const double limit = heap.top() + width;
          std::erase_if(list, [&](const Candidate& c) { return c.approx > limit; });
        }
      }
    }
    std::vector<Neighbor> exact;
    for (std::size_t r = 0; r < m; ++r) {
      const float* q = queries + (begin + r) * d;
      const double limit = kth[r].top() + 2.0 * margin[r];
      exact.clear();
      for (const auto& c : cand[r])
        if (c.approx <= limit) exact.push_back(Neighbor{c.row, l2_sq(q, base + c.row * d, d), 0.0});
      std::partial_sort(exact.begin(), exact.begin() + static_cast<std::ptrdiff_t>(topk), exact.end(), closer);
      std::copy(exact.begin(), exact.begin() + static_cast<std::ptrdiff_t>(topk), &out[(begin + r) * topk]);
    }
  });
  return out;
}

}  // namespace cmivf::detail
