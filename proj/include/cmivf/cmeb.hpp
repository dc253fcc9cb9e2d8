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

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "cmivf/embedding.hpp"

namespace cmivf {

/// CMEB embedding file: 28-byte little-endian header ("CMEB", u32 version=1,
/// u64 rows, u32 dim, u8 dtype=0 (float32), u8 normalized flag, 6 zero
/// bytes) followed by rows*dim float32 values, row-major.
inline constexpr std::uint32_t kCmebVersion = 1;
inline constexpr std::size_t kCmebHeaderBytes = 28;

std::vector<std::uint8_t> encode_cmeb(const EmbeddingSet& set);

/// Decodes one CMEB payload starting at `bytes`; `consumed` receives its size.
EmbeddingSet decode_cmeb(std::span<const std::uint8_t> bytes, std::size_t* consumed = nullptr);

void write_cmeb(const EmbeddingSet& set, const std::string& path);
EmbeddingSet read_cmeb(const std::string& path);

}  // namespace cmivf
