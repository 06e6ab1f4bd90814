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

#include "gridicl/denoiser.h"

#include <cmath>

#include "gridicl/errors.h"

namespace gridicl {

nlohmann::json network_config_to_json(const NetworkConfig& c) {
  return {{"channels", c.channels},         {"heads", c.heads},
          {"text_dim", c.text_dim},         {"stages", c.stages},
          {"blocks_per_stage", c.blocks_per_stage}};
}

NetworkConfig network_config_from_json(const nlohmann::json& j) {
  NetworkConfig c;
  c.channels = j.value("channels", c.channels);
  c.heads = j.value("heads", c.heads);
  c.text_dim = j.value("text_dim", c.text_dim);
  c.stages = j.value("stages", c.stages);
  c.blocks_per_stage = j.value("blocks_per_stage", c.blocks_per_stage);
  c.validate();
  return c;
}

WeightFile to_weight_file(const ParamSet<float>& params) {
  WeightFile file;
  for (size_t i = 0; i < params.values.size(); ++i) {
    const auto& m = params.values[i];
    NamedTensor t{params.names[i], static_cast<int>(m.rows()), static_cast<int>(m.cols()),
                  std::vector<float>(m.data(), m.data() + m.size())};
    file.tensors.push_back(std::move(t));
  }
  return file;
}

void assign_from_weight_file(const WeightFile& file, ParamSet<float>* params) {
  for (size_t i = 0; i < params->values.size(); ++i) {
    const NamedTensor* t = file.find(params->names[i]);
    auto& m = params->values[i];
    if (t == nullptr) throw Error(ErrorKind::kInvalidInput, "missing tensor " + params->names[i]);
    if (t->rows != m.rows() || t->cols != m.cols()) {
      throw Error(ErrorKind::kInvalidInput, "shape mismatch for " + params->names[i]);
    }
    std::copy(t->data.begin(), t->data.end(), m.data());
  }
}

Denoiser Denoiser::load(const std::filesystem::path& dir) {
  const WeightFile file = load_weight_file(dir);
  Denoiser d(network_config_from_json(file.meta.value("network", nlohmann::json::object())));
  assign_from_weight_file(file, &d.network_.params());
  return d;
}

void Denoiser::save(const std::filesystem::path& dir, const nlohmann::json& extra_meta) const {
  WeightFile file = to_weight_file(network_.params());
  file.meta = extra_meta.is_object() ? extra_meta : nlohmann::json::object();
  file.meta["network"] = network_config_to_json(network_.config());
  save_weight_file(file, dir);
}

template <typename T>
Mat<T> pack_inputs(const LatentTensor& z_t, const LatentTensor& masked_latent,
                   const LatentTensor& mask, int b) {
  const int h = z_t.height;
  const int w = z_t.width;
  Mat<T> in(h * w, 9);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      auto row = in.row(y * w + x);
      for (int c = 0; c < 4; ++c) {
        row(c) = static_cast<T>(z_t.at(b, c, y, x));
        row(4 + c) = static_cast<T>(masked_latent.at(b, c, y, x));
      }
      row(8) = static_cast<T>(mask.at(mask.batch == 1 ? 0 : b, 0, y, x));
    }
  }
  return in;
}

template <typename T>
Mat<T> pack_text(const TextEmbedding& text) {
  Mat<T> m(text.length, text.dim);
  for (int i = 0; i < text.length; ++i) {
    for (int j = 0; j < text.dim; ++j) m(i, j) = static_cast<T>(text.at(i, j));
  }
  return m;
}

template Mat<float> pack_inputs<float>(const LatentTensor&, const LatentTensor&,
                                       const LatentTensor&, int);
template Mat<double> pack_inputs<double>(const LatentTensor&, const LatentTensor&,
                                         const LatentTensor&, int);
template Mat<float> pack_text<float>(const TextEmbedding&);
template Mat<double> pack_text<double>(const TextEmbedding&);

LatentTensor Denoiser::predict_noise(const LatentTensor& z_t, int timestep,
                                     const TextEmbedding& text,
                                     const LatentTensor& masked_latent, const LatentTensor& mask,
                                     const AttentionHooks* hooks) const {
  if (z_t.channels != 4 || !z_t.same_shape(masked_latent)) {
    throw Error(ErrorKind::kShape, "z_t and masked latent must both be b x 4 x h x w");
  }
  if (mask.channels != 1 || mask.height != z_t.height || mask.width != z_t.width ||
      (mask.batch != 1 && mask.batch != z_t.batch)) {
    throw Error(ErrorKind::kShape, "mask must be 1 x h x w at latent resolution");
  }
  if (text.dim != text_dim() || text.length < 1 ||
      text.values.size() != static_cast<size_t>(text.length) * text.dim) {
    throw Error(ErrorKind::kShape, "text embedding shape does not match the denoiser");
  }
  if (!z_t.all_finite() || !masked_latent.all_finite() || !mask.all_finite()) {
    throw Error(ErrorKind::kNumeric, "non-finite denoiser input");
  }
  for (float v : text.values) {
    if (!std::isfinite(v)) throw Error(ErrorKind::kNumeric, "non-finite text embedding");
  }
  const Mat<float> txt = pack_text<float>(text);
  LatentTensor out(z_t.batch, 4, z_t.height, z_t.width);
  for (int b = 0; b < z_t.batch; ++b) {
    const Mat<float> in = pack_inputs<float>(z_t, masked_latent, mask, b);
    const Mat<float> eps =
        network_.forward(in, z_t.height, z_t.width, timestep, txt, hooks, nullptr);
    for (int y = 0; y < z_t.height; ++y) {
      for (int x = 0; x < z_t.width; ++x) {
        for (int c = 0; c < 4; ++c) out.at(b, c, y, x) = eps(y * z_t.width + x, c);
      }
    }
  }
  return out;
}

}  // namespace gridicl
