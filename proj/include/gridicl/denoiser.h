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

#ifndef GRIDICL_DENOISER_H_
#define GRIDICL_DENOISER_H_

#include <filesystem>

#include "gridicl/latent.h"
#include "gridicl/network.h"
#include "gridicl/text_encoder.h"
#include "gridicl/weights.h"

namespace gridicl {

// Inpainting noise-prediction contract: noisy latent (4) + masked-image
// latent (4) + mask (1) in, predicted noise (4) out. External checkpoints
// are adapted by implementing this interface.
class NoisePredictor {
 public:
  virtual ~NoisePredictor() = default;
  virtual int block_count() const = 0;
  // Latent sides must be multiples of this.
  virtual int latent_multiple() const = 0;
  virtual int text_dim() const = 0;
  virtual LatentTensor predict_noise(const LatentTensor& z_t, int timestep,
                                     const TextEmbedding& text,
                                     const LatentTensor& masked_latent, const LatentTensor& mask,
                                     const AttentionHooks* hooks) const = 0;
};

class Denoiser final : public NoisePredictor {
 public:
  explicit Denoiser(const NetworkConfig& config) : network_(config) {}
  explicit Denoiser(Network<float> network) : network_(std::move(network)) {}

  static Denoiser load(const std::filesystem::path& dir);
  void save(const std::filesystem::path& dir, const nlohmann::json& extra_meta = {}) const;

  Network<float>& network() { return network_; }
  const Network<float>& network() const { return network_; }

  int block_count() const override { return network_.config().block_count(); }
  int latent_multiple() const override { return network_.config().spatial_multiple(); }
  int text_dim() const override { return network_.config().text_dim; }

  // Throws kShape on mismatched shapes and kNumeric on non-finite inputs.
  LatentTensor predict_noise(const LatentTensor& z_t, int timestep, const TextEmbedding& text,
                             const LatentTensor& masked_latent, const LatentTensor& mask,
                             const AttentionHooks* hooks) const override;

 private:
  Network<float> network_;
};

nlohmann::json network_config_to_json(const NetworkConfig& config);
NetworkConfig network_config_from_json(const nlohmann::json& j);

WeightFile to_weight_file(const ParamSet<float>& params);
// Copies tensors by name; throws kInvalidInput on missing names or shapes.
void assign_from_weight_file(const WeightFile& file, ParamSet<float>* params);

// Builds the 9-channel network input for batch entry b.
template <typename T>
Mat<T> pack_inputs(const LatentTensor& z_t, const LatentTensor& masked_latent,
                   const LatentTensor& mask, int b);
template <typename T>
Mat<T> pack_text(const TextEmbedding& text);

}  // namespace gridicl

#endif  // GRIDICL_DENOISER_H_
