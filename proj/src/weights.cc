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

#include "gridicl/weights.h"

#include <fstream>

#include "gridicl/errors.h"
#include "gridicl/tensor_file.h"

namespace gridicl {

const NamedTensor* WeightFile::find(const std::string& name) const {
  for (const auto& t : tensors) {
    if (t.name == name) return &t;
  }
  return nullptr;
}

void save_weight_file(const WeightFile& file, const std::filesystem::path& dir,
                      const std::string& stem) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorKind::kIo, "cannot create " + dir.string() + ": " + ec.message());
  std::vector<uint8_t> blob;
  nlohmann::json entries = nlohmann::json::array();
  for (const auto& t : file.tensors) {
    if (t.data.size() != static_cast<size_t>(t.rows) * t.cols) {
      throw Error(ErrorKind::kShape, "tensor " + t.name + " size does not match its shape");
    }
    entries.push_back({{"name", t.name}, {"shape", {t.rows, t.cols}}, {"offset", blob.size()}});
    for (float v : t.data) append_f32_le(v, &blob);
  }
  nlohmann::json manifest = {{"format", "gridicl-weights"},
                             {"version", 1},
                             {"blob", stem + ".bin"},
                             {"meta", file.meta},
                             {"tensors", entries}};
  write_file_bytes(dir / (stem + ".bin"), blob);
  const std::string text = manifest.dump(2) + "\n";
  write_file_bytes(dir / (stem + ".json"),
                   {reinterpret_cast<const uint8_t*>(text.data()), text.size()});
}

WeightFile load_weight_file(const std::filesystem::path& dir, const std::string& stem) {
  const auto manifest_bytes = read_file_bytes(dir / (stem + ".json"));
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(manifest_bytes.begin(), manifest_bytes.end());
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kInvalidInput, "bad weight manifest: " + std::string(e.what()));
  }
  if (manifest.value("format", "") != "gridicl-weights") {
    throw Error(ErrorKind::kInvalidInput, "not a gridicl weight manifest");
  }
  const auto blob = read_file_bytes(dir / manifest.at("blob").get<std::string>());
  WeightFile file;
  file.meta = manifest.value("meta", nlohmann::json::object());
  for (const auto& e : manifest.at("tensors")) {
    NamedTensor t;
    t.name = e.at("name").get<std::string>();
    t.rows = e.at("shape").at(0).get<int>();
    t.cols = e.at("shape").at(1).get<int>();
    const size_t offset = e.at("offset").get<size_t>();
    const size_t count = static_cast<size_t>(t.rows) * t.cols;
    if (offset + 4 * count > blob.size()) {
      throw Error(ErrorKind::kInvalidInput, "tensor " + t.name + " runs past the blob");
    }
    t.data.resize(count);
    for (size_t i = 0; i < count; ++i) t.data[i] = load_f32_le(blob.data() + offset + 4 * i);
    file.tensors.push_back(std::move(t));
  }
  return file;
}

}  // namespace gridicl
