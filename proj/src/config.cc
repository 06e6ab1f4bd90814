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

#include "gridicl/config.h"

#include <cstdio>
#include <fstream>
#include <set>

#include <openssl/evp.h>

#include "gridicl/errors.h"

namespace gridicl {

namespace {

// Keys excluded from the digest: they change where results go or what debug
// output is written, not the results themselves.
bool digest_excluded(const std::string& key) {
  return key == "paths.out" || key.rfind("debug.", 0) == 0;
}

template <typename V>
void read_key(const nlohmann::json& j, const char* key, V* out, std::set<std::string>* seen) {
  auto it = j.find(key);
  if (it == j.end()) return;
  seen->insert(key);
  try {
    *out = it->template get<V>();
  } catch (const nlohmann::json::exception&) {
    throw Error(ErrorKind::kInvalidConfig, std::string("config key '") + key +
                                               "' has the wrong type: " + it->dump());
  }
}

void read_path(const nlohmann::json& j, const char* key, std::filesystem::path* out,
               std::set<std::string>* seen) {
  std::string s = out->string();
  read_key(j, key, &s, seen);
  *out = s;
}

}  // namespace

nlohmann::json RunConfig::to_json() const {
  const SurgeryConfig& sc = sampler.surgery;
  nlohmann::json j = {
      {"paths.a", a.string()},
      {"paths.a_prime", a_prime.string()},
      {"paths.b", b.string()},
      {"paths.out", out.string()},
      {"paths.weights", weights.string()},
      {"grid.cell_height", cell.height},
      {"grid.cell_width", cell.width},
      {"grid.layout", swap_layout ? "swap_a_prime_b" : "default"},
      {"codec.name", codec},
      {"sampler.cfg_scale", sampler.cfg_scale},
      {"sampler.seed", sampler.seed},
      {"sampler.steps", sampler.steps},
      {"sampler.train_steps", sampler.train_steps},
      {"sampler.init_from_pasted", sampler.init_from_pasted},
      {"sampler.condition_on_pasted", sampler.condition_on_pasted},
      {"sampler.ancestral", sampler.ancestral},
      {"sampler.latent_paste", sampler.latent_paste},
      {"sampler.timeout_seconds", sampler.timeout_seconds},
      {"surgery.sac", sc.sac_enabled},
      {"surgery.cam", sc.cam_enabled},
      {"surgery.s", sc.s},
      {"surgery.layer_first", sc.layer_first},
      {"surgery.layer_last", sc.layer_last},
      {"surgery.t_min", sc.t_min},
      {"surgery.t_max", sc.t_max},
      {"surgery.symmetric_clone", sc.symmetric_clone},
      {"prompt.positive", prompt ? nlohmann::json(*prompt) : nlohmann::json(nullptr)},
      {"prompt.negative", negative},
      {"prompt.use_vlm", use_vlm},
      {"prompt.require_vlm", require_vlm},
      {"vlm.url", vlm.url},
      {"vlm.model", vlm.model},
      {"vlm.timeout_seconds", vlm.timeout_seconds},
      {"vlm.retries", vlm.retries},
      {"vlm.max_image_bytes", vlm.max_image_bytes},
      {"debug.dump_dir", sampler.dump_dir.string()},
      {"debug.dump_latent_every", sampler.dump_latent_every},
      {"debug.dump_attention_step", sampler.dump_attention_step},
      {"debug.dump_attention_layers", sampler.dump_attention_layers},
  };
  return j;
}

RunConfig RunConfig::from_json(const nlohmann::json& j, const RunConfig& base) {
  if (!j.is_object()) throw Error(ErrorKind::kInvalidConfig, "config must be a JSON object");
  RunConfig c = base;
  std::set<std::string> seen;
  SurgeryConfig& sc = c.sampler.surgery;
  read_path(j, "paths.a", &c.a, &seen);
  read_path(j, "paths.a_prime", &c.a_prime, &seen);
  read_path(j, "paths.b", &c.b, &seen);
  read_path(j, "paths.out", &c.out, &seen);
  read_path(j, "paths.weights", &c.weights, &seen);
  read_key(j, "grid.cell_height", &c.cell.height, &seen);
  read_key(j, "grid.cell_width", &c.cell.width, &seen);
  std::string layout = c.swap_layout ? "swap_a_prime_b" : "default";
  read_key(j, "grid.layout", &layout, &seen);
  if (layout != "default" && layout != "swap_a_prime_b") {
    throw Error(ErrorKind::kInvalidConfig, "grid.layout must be 'default' or 'swap_a_prime_b'");
  }
  c.swap_layout = layout == "swap_a_prime_b";
  read_key(j, "codec.name", &c.codec, &seen);
  read_key(j, "sampler.cfg_scale", &c.sampler.cfg_scale, &seen);
  read_key(j, "sampler.seed", &c.sampler.seed, &seen);
  read_key(j, "sampler.steps", &c.sampler.steps, &seen);
  read_key(j, "sampler.train_steps", &c.sampler.train_steps, &seen);
  read_key(j, "sampler.init_from_pasted", &c.sampler.init_from_pasted, &seen);
  read_key(j, "sampler.condition_on_pasted", &c.sampler.condition_on_pasted, &seen);
  read_key(j, "sampler.ancestral", &c.sampler.ancestral, &seen);
  read_key(j, "sampler.latent_paste", &c.sampler.latent_paste, &seen);
  read_key(j, "sampler.timeout_seconds", &c.sampler.timeout_seconds, &seen);
  read_key(j, "surgery.sac", &sc.sac_enabled, &seen);
  read_key(j, "surgery.cam", &sc.cam_enabled, &seen);
  read_key(j, "surgery.s", &sc.s, &seen);
  read_key(j, "surgery.layer_first", &sc.layer_first, &seen);
  read_key(j, "surgery.layer_last", &sc.layer_last, &seen);
  read_key(j, "surgery.t_min", &sc.t_min, &seen);
  read_key(j, "surgery.t_max", &sc.t_max, &seen);
  read_key(j, "surgery.symmetric_clone", &sc.symmetric_clone, &seen);
  if (auto it = j.find("prompt.positive"); it != j.end()) {
    seen.insert("prompt.positive");
    if (it->is_null()) {
      c.prompt.reset();
    } else if (it->is_string()) {
      c.prompt = it->get<std::string>();
    } else {
      throw Error(ErrorKind::kInvalidConfig, "prompt.positive must be a string or null");
    }
  }
  read_key(j, "prompt.negative", &c.negative, &seen);
  read_key(j, "prompt.use_vlm", &c.use_vlm, &seen);
  read_key(j, "prompt.require_vlm", &c.require_vlm, &seen);
  read_key(j, "vlm.url", &c.vlm.url, &seen);
  read_key(j, "vlm.model", &c.vlm.model, &seen);
  read_key(j, "vlm.timeout_seconds", &c.vlm.timeout_seconds, &seen);
  read_key(j, "vlm.retries", &c.vlm.retries, &seen);
  read_key(j, "vlm.max_image_bytes", &c.vlm.max_image_bytes, &seen);
  read_path(j, "debug.dump_dir", &c.sampler.dump_dir, &seen);
  read_key(j, "debug.dump_latent_every", &c.sampler.dump_latent_every, &seen);
  read_key(j, "debug.dump_attention_step", &c.sampler.dump_attention_step, &seen);
  read_key(j, "debug.dump_attention_layers", &c.sampler.dump_attention_layers, &seen);

  for (const auto& [key, value] : j.items()) {
    if (key.rfind("manifest.", 0) == 0) continue;
    if (!seen.count(key)) throw Error(ErrorKind::kInvalidConfig, "unknown config key '" + key + "'");
  }
  return c;
}

void RunConfig::validate(bool check_files) const {
  if (cell.height < 2 || cell.width < 2 || cell.height % 2 || cell.width % 2) {
    throw Error(ErrorKind::kInvalidConfig, "cell size must be positive and even");
  }
  const int factor = make_codec(codec)->scale_factor();
  if (cell.height % factor || cell.width % factor) {
    throw Error(ErrorKind::kInvalidConfig, "cell size must be a multiple of the codec factor " +
                                               std::to_string(factor));
  }
  sampler.validate();
  if (sampler.train_steps < 1 || sampler.steps > sampler.train_steps) {
    throw Error(ErrorKind::kInvalidConfig, "need 1 <= sampler.steps <= sampler.train_steps");
  }
  const SurgeryConfig& sc = sampler.surgery;
  if (!(sc.s > 0.0)) throw Error(ErrorKind::kInvalidConfig, "surgery.s must be positive");
  if (sc.layer_first < 0 || sc.layer_first > sc.layer_last) {
    throw Error(ErrorKind::kInvalidConfig, "surgery layer window is empty or negative");
  }
  if (sc.t_min < 0 || sc.t_min > sc.t_max || sc.t_max > sampler.train_steps) {
    throw Error(ErrorKind::kInvalidConfig, "surgery timestep window outside [0, T]");
  }
  if (require_vlm && !use_vlm) {
    throw Error(ErrorKind::kInvalidConfig, "prompt.require_vlm needs prompt.use_vlm");
  }
  if (vlm.retries < 0 || !(vlm.timeout_seconds > 0.0)) {
    throw Error(ErrorKind::kInvalidConfig, "vlm.retries must be >= 0 and timeout > 0");
  }
  if (check_files) {
    for (const auto& [name, path] : {std::pair<const char*, const std::filesystem::path*>{"a", &a},
                                     {"a_prime", &a_prime},
                                     {"b", &b}}) {
      if (path->empty() || !std::filesystem::is_regular_file(*path)) {
        throw Error(ErrorKind::kInvalidConfig,
                    std::string("input image '") + name + "' not found: " + path->string());
      }
    }
    if (weights.empty() || !std::filesystem::exists(weights / "weights.json")) {
      throw Error(ErrorKind::kInvalidConfig, "no checkpoint at '" + weights.string() + "'");
    }
  }
}

std::string RunConfig::digest() const {
  nlohmann::json j = to_json();
  for (auto it = j.begin(); it != j.end();) {
    it = digest_excluded(it.key()) ? j.erase(it) : std::next(it);
  }
  return sha256_hex(j.dump());
}

RunConfig load_run_config(const std::filesystem::path& path, const RunConfig& base) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kInvalidConfig, "cannot read config " + path.string());
  nlohmann::json j = nlohmann::json::parse(in, nullptr, false);
  if (j.is_discarded()) throw Error(ErrorKind::kInvalidConfig, path.string() + " is not JSON");
  return RunConfig::from_json(j, base);
}

std::string sha256_hex(const std::string& data) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) != 1) {
    throw Error(ErrorKind::kIo, "SHA-256 failed");
  }
  std::string hex;
  char buf[3];
  for (unsigned int i = 0; i < len; ++i) {
    std::snprintf(buf, sizeof(buf), "%02x", md[i]);
    hex += buf;
  }
  return hex;
}

}  // namespace gridicl
