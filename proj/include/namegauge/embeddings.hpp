// Copyright 2026 The namegauge Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "namegauge/error.hpp"
#include "namegauge/io.hpp"

namespace namegauge {

/// trial_id -> fixed-length feature vector. Values are stored as float to
/// match the on-disk payload, so write/read is bit-exact.
struct EmbeddingSet {
  std::uint32_t dim = 0;
  std::map<std::string, std::vector<float>> entries;

  void insert(std::string id, std::vector<float> values) {
    if (dim == 0) dim = static_cast<std::uint32_t>(values.size());
    if (values.size() != dim) {
      fail(ErrorKind::kDimension, "embedding for '" + id + "' has length " +
                                      std::to_string(values.size()) + ", expected " +
                                      std::to_string(dim));
    }
    for (float v : values) {
      if (!std::isfinite(v)) {
        fail(ErrorKind::kNumeric, "embedding for '" + id + "' contains a non-finite value");
      }
    }
    entries.insert_or_assign(std::move(id), std::move(values));
  }

  const std::vector<float>* find(const std::string& id) const {
    auto it = entries.find(id);
    return it == entries.end() ? nullptr : &it->second;
  }

  friend bool operator==(const EmbeddingSet&, const EmbeddingSet&) = default;
};

inline constexpr char kEmbeddingMagic[4] = {'C', 'S', 'E', 'B'};
inline constexpr std::uint32_t kEmbeddingVersion = 1;

/// CSEB layout: magic, u32 version, u32 dim, u64 count, then per record
/// u16 id length, id bytes, dim x f32. All little-endian; records sorted by id.
inline std::vector<std::uint8_t> encode_embeddings(const EmbeddingSet& set) {
  if (set.dim == 0) fail(ErrorKind::kDimension, "embedding dimension must be positive");
  io::ByteWriter w;
  w.put_bytes(std::string_view(kEmbeddingMagic, 4));
  w.put<std::uint32_t>(kEmbeddingVersion);
  w.put<std::uint32_t>(set.dim);
  w.put<std::uint64_t>(set.entries.size());
  for (const auto& [id, values] : set.entries) {
    if (id.size() > std::numeric_limits<std::uint16_t>::max()) {
      fail(ErrorKind::kFormat, "trial id too long for CSEB: " + id.substr(0, 32) + "...");
    }
    if (values.size() != set.dim) {
      fail(ErrorKind::kDimension, "embedding for '" + id + "' has wrong length");
    }
    w.put<std::uint16_t>(static_cast<std::uint16_t>(id.size()));
    w.put_bytes(id);
    for (float v : values) w.put<float>(v);
  }
  return w.bytes();
}

inline EmbeddingSet decode_embeddings(std::span<const std::uint8_t> bytes) {
  io::ByteReader r(bytes);
  const auto magic = r.get_string(4, "magic");
  if (magic != std::string_view(kEmbeddingMagic, 4)) {
    fail(ErrorKind::kFormat, "bad magic: expected CSEB");
  }
  const auto version = r.get<std::uint32_t>("version");
  if (version != kEmbeddingVersion) {
    fail(ErrorKind::kFormat, "unsupported CSEB version " + std::to_string(version));
  }
  EmbeddingSet set;
  set.dim = r.get<std::uint32_t>("dim");
  if (set.dim == 0) fail(ErrorKind::kDimension, "CSEB header declares dim 0");
  const auto count = r.get<std::uint64_t>("count");
  for (std::uint64_t i = 0; i < count; ++i) {
    const auto len = r.get<std::uint16_t>("id length");
    auto id = r.get_string(len, "trial id");
    if (r.remaining() < std::size_t{set.dim} * sizeof(float)) {
      fail(ErrorKind::kFormat, "truncated file: record '" + id + "' has fewer than " +
                                   std::to_string(set.dim) + " floats (header dim)");
    }
    std::vector<float> values(set.dim);
    for (auto& v : values) v = r.get<float>("payload");
    if (set.entries.contains(id)) {
      fail(ErrorKind::kDuplicateId, "duplicate trial_id '" + id + "' in CSEB file");
    }
    set.insert(std::move(id), std::move(values));
  }
  if (r.remaining() != 0) {
    fail(ErrorKind::kDimension, "CSEB payload longer than header dim x count implies");
  }
  return set;
}

inline EmbeddingSet read_embeddings(const std::filesystem::path& path) {
  return decode_embeddings(io::read_bytes(path));
}

inline void write_embeddings(const EmbeddingSet& set, const std::filesystem::path& path) {
  io::write_atomic(path, encode_embeddings(set));
}

}  // namespace namegauge
