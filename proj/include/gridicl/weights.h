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

#ifndef GRIDICL_WEIGHTS_H_
#define GRIDICL_WEIGHTS_H_

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace gridicl {

struct NamedTensor {
  std::string name;
  int rows = 0;
  int cols = 0;
  std::vector<float> data;
};

// A flat little-endian float32 blob plus a JSON manifest listing each
// tensor's name, shape and byte offset. `meta` carries free-form metadata
// (architecture, training state).
struct WeightFile {
  nlohmann::json meta = nlohmann::json::object();
  std::vector<NamedTensor> tensors;

  const NamedTensor* find(const std::string& name) const;
};

// Writes <dir>/<stem>.json and <dir>/<stem>.bin, creating dir if needed.
void save_weight_file(const WeightFile& file, const std::filesystem::path& dir,
                      const std::string& stem = "weights");
WeightFile load_weight_file(const std::filesystem::path& dir, const std::string& stem = "weights");

}  // namespace gridicl

#endif  // GRIDICL_WEIGHTS_H_
