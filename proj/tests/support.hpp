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
#include <initializer_list>
#include <vector>

#include <doctest.h>

#include "cmivf/embedding.hpp"
#include "cmivf/error.hpp"

namespace cmivf::test {

inline EmbeddingSet set_of(std::size_t rows, std::size_t dim, std::initializer_list<float> values,
                           bool normalized = false) {
  return EmbeddingSet(rows, dim, std::vector<float>(values), normalized);
}

inline EmbeddingSet unit_set(std::size_t rows, std::size_t dim, std::initializer_list<float> values) {
  return l2_normalize(set_of(rows, dim, values));
}

template <typename F>
ErrorCode code_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::kOk;
}

}  // namespace cmivf::test

#define CHECK_CODE(expr, expected) CHECK(::cmivf::test::code_of([&] { (void)(expr); }) == (expected))
