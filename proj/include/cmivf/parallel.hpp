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
#include <functional>

namespace cmivf {

/// Worker count used by parallel loops. Defaults to CMIVF_THREADS when set,
/// otherwise std::thread::hardware_concurrency().
std::size_t num_threads();
void set_num_threads(std::size_t n);

/// Runs body(begin, end) over [0, count) in chunks of `grain` items.
///
/// Chunk boundaries depend only on `count` and `grain`, never on the worker
/// count, so any body that writes per-item results is thread-count
/// independent. Exceptions thrown by a chunk are rethrown on the caller
/// (first chunk index wins).
void parallel_for(std::size_t count, std::size_t grain,
                  const std::function<void(std::size_t, std::size_t)>& body);

}  // namespace cmivf
