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

#ifndef GRIDICL_TENSOR_FILE_H_
#define GRIDICL_TENSOR_FILE_H_

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace gridicl {

// Binary dump format: uint32 rank, rank x uint32 dims, then the row-major
// float32 payload. Everything little-endian.
struct TensorBlob {
  std::vector<uint32_t> dims;
  std::vector<float> data;

  size_t element_count() const;
};

void write_tensor(const std::filesystem::path& path, std::span<const uint32_t> dims,
                  std::span<const float> data);
TensorBlob read_tensor(const std::filesystem::path& path);

// Little-endian helpers shared with the weight-file format.
void append_u32_le(uint32_t v, std::vector<uint8_t>* out);
void append_f32_le(float v, std::vector<uint8_t>* out);
uint32_t load_u32_le(const uint8_t* p);
float load_f32_le(const uint8_t* p);

std::vector<uint8_t> read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path, std::span<const uint8_t> bytes);

}  // namespace gridicl

#endif  // GRIDICL_TENSOR_FILE_H_
