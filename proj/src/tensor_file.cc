// Copyright 2026 The gridicl Authors.
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

#include "gridicl/tensor_file.h"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <numeric>

#include "gridicl/errors.h"

namespace gridicl {

size_t TensorBlob::element_count() const {
  return std::accumulate(dims.begin(), dims.end(), size_t{1},
                         [](size_t a, uint32_t d) { return a * d; });
}

void append_u32_le(uint32_t v, std::vector<uint8_t>* out) {
  for (int i = 0; i < 4; ++i) out->push_back(static_cast<uint8_t>(v >> (8 * i)));
}

void append_f32_le(float v, std::vector<uint8_t>* out) {
  append_u32_le(std::bit_cast<uint32_t>(v), out);
}

uint32_t load_u32_le(const uint8_t* p) {
  return static_cast<uint32_t>(p[0]) | (static_cast<uint32_t>(p[1]) << 8) |
         (static_cast<uint32_t>(p[2]) << 16) | (static_cast<uint32_t>(p[3]) << 24);
}

float load_f32_le(const uint8_t* p) { return std::bit_cast<float>(load_u32_le(p)); }

std::vector<uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kNotFound, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file_bytes(const std::filesystem::path& path, std::span<const uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::kIo, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorKind::kIo, "write failed for " + path.string());
}

void write_tensor(const std::filesystem::path& path, std::span<const uint32_t> dims,
                  std::span<const float> data) {
  size_t count = 1;
  for (uint32_t d : dims) count *= d;
  if (count != data.size()) throw Error(ErrorKind::kShape, "tensor dims do not match payload");
  std::vector<uint8_t> bytes;
  bytes.reserve(4 + 4 * dims.size() + 4 * data.size());
  append_u32_le(static_cast<uint32_t>(dims.size()), &bytes);
  for (uint32_t d : dims) append_u32_le(d, &bytes);
  for (float v : data) append_f32_le(v, &bytes);
  write_file_bytes(path, bytes);
}

TensorBlob read_tensor(const std::filesystem::path& path) {
  const auto bytes = read_file_bytes(path);
  if (bytes.size() < 4) throw Error(ErrorKind::kInvalidInput, "truncated tensor file");
  TensorBlob blob;
  const uint32_t rank = load_u32_le(bytes.data());
  if (bytes.size() < 4 + 4 * static_cast<size_t>(rank)) {
    throw Error(ErrorKind::kInvalidInput, "truncated tensor header");
  }
  for (uint32_t i = 0; i < rank; ++i) blob.dims.push_back(load_u32_le(bytes.data() + 4 + 4 * i));
  const size_t offset = 4 + 4 * static_cast<size_t>(rank);
  const size_t count = blob.element_count();
  if (bytes.size() != offset + 4 * count) {
    throw Error(ErrorKind::kInvalidInput, "tensor payload size does not match dims");
  }
  blob.data.resize(count);
  for (size_t i = 0; i < count; ++i) blob.data[i] = load_f32_le(bytes.data() + offset + 4 * i);
  return blob;
}

}  // namespace gridicl
