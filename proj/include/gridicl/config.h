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

#ifndef GRIDICL_CONFIG_H_
#define GRIDICL_CONFIG_H_

#include <filesystem>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "gridicl/grid.h"
#include "gridicl/prompting.h"
#include "gridicl/sampler.h"

namespace gridicl {

// Everything a `run` needs. Serialized as one JSON object with flat dotted
// keys ("sampler.seed", "surgery.s", ...); the run manifest uses the same
// keys so it can be passed back as --config.
struct RunConfig {
  std::filesystem::path a;
  std::filesystem::path a_prime;
  std::filesystem::path b;
  std::filesystem::path out;
  std::filesystem::path weights;
  Size cell = {256, 256};
  bool swap_layout = false;
  std::string codec = "bilinear";
  SamplerConfig sampler;

  // Positive prompt override; when unset the VLM or the fallback is used.
  std::optional<std::string> prompt;
  std::string negative = negative_prompt();
  bool use_vlm = false;
  // Fail with the VLM exit code instead of falling back.
  bool require_vlm = false;
  // The API key is never serialized; it comes from the environment.
  VlmEndpoint vlm;

  CellLayout layout() const {
    return swap_layout ? CellLayout::swapped() : CellLayout::standard();
  }

  nlohmann::json to_json() const;
  // Starts from `base` and applies the keys present in `j`. Keys under
  // "manifest." are ignored; any other unknown key or a wrongly typed value
  // throws kInvalidConfig.
  static RunConfig from_json(const nlohmann::json& j, const RunConfig& base);

  // Throws kInvalidConfig; with check_files, also requires the input images
  // and the weights to exist.
  void validate(bool check_files) const;

  // SHA-256 over the serialized config minus output and debug settings.
  std::string digest() const;
};

RunConfig load_run_config(const std::filesystem::path& path, const RunConfig& base);

std::string sha256_hex(const std::string& data);

}  // namespace gridicl

#endif  // GRIDICL_CONFIG_H_
