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
#include <vector>

#include "cmivf/embedding.hpp"

namespace cmivf::detail {

/// The `topk` rows of `base` (nb x d) nearest to each of the nq rows of
/// `queries` under l2_sq, ties to the lower row index; row q's neighbors
/// occupy [q*topk, (q+1)*topk), sorted by `closer`. `similarity` is unset.
///
/// Rows are screened with a float GEMM and the survivors re-ranked with
/// l2_sq. The screening margin bounds the float rounding error, so the
/// output equals ranking every row with l2_sq.
std::vector<Neighbor> nearest_rows(const float* queries, std::size_t nq, const float* base, std::size_t nb,
                                   std::size_t d, std::size_t topk);

}  // namespace cmivf::detail
