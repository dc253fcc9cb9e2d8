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

#include "cmivf/cmeb.hpp"

#include <fstream>
#include <iterator>

#include "byteio.hpp"
#include "cmivf/error.hpp"

namespace cmivf {

namespace detail {

std::vector<std::uint8_t> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) raise(ErrorCode::kIoError, "cannot open '" + path + "' for reading");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  if (in.bad()) raise(ErrorCode::kIoError, "read failed for '" + path + "'");
  return bytes;
}

void write_file(const std::string& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) raise(ErrorCode::kIoError, "cannot open '" + path + "' for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) raise(ErrorCode::kIoError, "write failed for '" + path + "'");
}

}  // namespace detail

std::vector<std::uint8_t> encode_cmeb(const EmbeddingSet& set) {
  detail::ByteWriter w;
  w.buffer().reserve(kCmebHeaderBytes + set.data().size() * 4);
  w.bytes("CMEB", 4);
  w.u32(kCmebVersion);
  w.u64(set.rows());
  w.u32(static_cast<std::uint32_t>(set.dim()));
  w.u8(0);
  w.u8(set.normalized() ? 1 : 0);
  w.zeros(6);
  for (const float v : set.data()) w.f32(v);
  return std::move(w.buffer());
}

EmbeddingSet decode_cmeb(std::span<const std::uint8_t> bytes, std::size_t* consumed) {
  detail::ByteReader r(bytes.data(), bytes.size(), "CMEB");
  const auto* magic = r.take(4);
  if (std::string(reinterpret_cast<const char*>(magic), 4) != "CMEB")
    raise(ErrorCode::kFormatError, "bad CMEB magic");
  const std::uint32_t version = r.u32();
  if (version != kCmebVersion)
    raise(ErrorCode::kFormatError, "unsupported CMEB version " + std::to_string(version));
  const std::uint64_t rows = r.u64();
  const std::uint32_t dim = r.u32();
  const std::uint8_t dtype = r.u8();
  const std::uint8_t normalized = r.u8();
  r.skip(6);
  if (dtype != 0) raise(ErrorCode::kFormatError, "unsupported CMEB dtype " + std::to_string(dtype));
  if (normalized > 1) raise(ErrorCode::kFormatError, "bad CMEB normalized flag");
  if (rows == 0 || dim < 2) raise(ErrorCode::kFormatError, "CMEB shape must have rows >= 1, dim >= 2");
  if (rows > r.remaining() / 4 / dim) raise(ErrorCode::kFormatError, "CMEB: truncated payload");
  std::vector<float> data(rows * dim);
  for (auto& v : data) v = r.f32();
  if (consumed) *consumed = r.position();
  try {
    return EmbeddingSet(rows, dim, std::move(data), normalized == 1);
  } catch (const Error& e) {
    raise(ErrorCode::kFormatError, std::string("CMEB payload violates invariants: ") + e.what());
  }
}

void write_cmeb(const EmbeddingSet& set, const std::string& path) {
  detail::write_file(path, encode_cmeb(set));
}

EmbeddingSet read_cmeb(const std::string& path) {
  const auto bytes = detail::read_file(path);
  std::size_t consumed = 0;
  auto set = decode_cmeb(bytes, &consumed);
  if (consumed != bytes.size())
    raise(ErrorCode::kFormatError, "trailing bytes after CMEB payload in '" + path + "'");
  return set;
}

}  // namespace cmivf
