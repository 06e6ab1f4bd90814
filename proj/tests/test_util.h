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

#ifndef GRIDICL_TESTS_TEST_UTIL_H_
#define GRIDICL_TESTS_TEST_UTIL_H_

#include <cstring>
#include <filesystem>
#include <string>

#include "gridicl/grid.h"
#include "gridicl/image.h"
#include "gridicl/network.h"
#include "gridicl/random.h"

namespace gridicl::testing {

inline Image random_image(int width, int height, uint64_t seed, int channels = 3) {
  Image img(width, height, channels);
  Rng rng(seed);
  for (float& v : img.data()) v = static_cast<float>(rng.uniform());
  return img;
}

// Small enough for finite differences and quick sampling.
inline NetworkConfig micro_config() {
  NetworkConfig c;
  c.channels = 8;
  c.heads = 2;
  c.text_dim = 8;
  c.stages = 2;
  c.blocks_per_stage = 1;
  return c;
}

// Two blocks and 3.5k parameters, for the finite-difference check.
inline NetworkConfig gradcheck_config() {
  NetworkConfig c = micro_config();
  c.stages = 1;
  return c;
}

inline NetworkConfig small_config() {
  NetworkConfig c;
  c.channels = 16;
  c.heads = 2;
  c.text_dim = 16;
  c.stages = 2;
  c.blocks_per_stage = 1;
  return c;
}

inline bool bit_equal(const Image& a, const Image& b) {
  return a.size() == b.size() && a.channels() == b.channels() &&
         std::memcmp(a.data().data(), b.data().data(), a.data().size_bytes()) == 0;
}

// Fresh scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("gridicl_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

// Analytic 512x512 grid used for the annotation golden.
inline ImageGrid golden_grid() {
  const int n = 256;
  Image a(n, n, 3), ap(n, n, 3), b(n, n, 3);
  for (int y = 0; y < n; ++y) {
    for (int x = 0; x < n; ++x) {
      const float u = x / float(n - 1), v = y / float(n - 1);
      for (int c = 0; c < 3; ++c) a.at(x, y, c) = 0.2f + 0.6f * u;
      ap.at(x, y, 0) = 0.2f + 0.6f * u;
      ap.at(x, y, 1) = 0.5f * v;
      ap.at(x, y, 2) = 0.8f - 0.6f * u;
      for (int c = 0; c < 3; ++c) b.at(x, y, c) = 0.2f + 0.6f * v;
    }
  }
  return compose_grid(a, ap, b, CellLayout::standard(), {n, n});
}

inline std::filesystem::path golden_path() {
  return std::filesystem::path(GRIDICL_TEST_DATA) / "annotation_golden.png";
}

}  // namespace gridicl::testing

#endif  // GRIDICL_TESTS_TEST_UTIL_H_
