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

#ifndef GRIDICL_SAMPLER_H_
#define GRIDICL_SAMPLER_H_

#include <cstdint>
#include <filesystem>
#include <vector>

#include "gridicl/attention.h"
#include "gridicl/codec.h"
#include "gridicl/denoiser.h"
#include "gridicl/grid.h"
#include "gridicl/latent.h"
#include "gridicl/text_encoder.h"

namespace gridicl {

// Linear beta schedule over T training steps with an evenly spaced,
// descending inference subsequence starting at T - 1.
struct NoiseSchedule {
  int train_steps = 0;
  std::vector<double> betas;
  std::vector<double> alphas;
  std::vector<double> alpha_bars;
  std::vector<int> inference_steps;

  double alpha_bar(int t) const { return alpha_bars.at(t); }
};

inline constexpr double kBetaStart = 1e-4;
inline constexpr double kBetaEnd = 2e-2;

// Throws kInvalidConfig unless 1 <= steps <= T.
NoiseSchedule build_schedule(int train_steps, int steps);

struct SamplerConfig {
  double cfg_scale = 15.0;
  uint64_t seed = 0;
  int steps = 50;
  int train_steps = 1000;
  SurgeryConfig surgery;
  // Initialize z_T from the noised query-pasted grid rather than pure noise.
  bool init_from_pasted = true;
  // Condition on E(pasted grid) instead of E(grid with blank B').
  bool condition_on_pasted = false;
  // Stochastic DDPM update instead of the deterministic DDIM one.
  bool ancestral = false;
  // Debug: after every step, overwrite known-region latents with the
  // forward-noised conditioning latent.
  bool latent_paste = false;
  // When false the denoiser runs without any attention hooks attached.
  bool attach_hooks = true;
  // Wall-clock budget for sample(); 0 disables the check.
  double timeout_seconds = 0.0;

  // Debug dumps, written under dump_dir when set.
  std::filesystem::path dump_dir;
  int dump_latent_every = 0;
  // Inference step index whose attention maps are exported (-1: none).
  int dump_attention_step = -1;
  std::vector<int> dump_attention_layers;

  void validate() const;
};

struct DiffusionState {
  LatentTensor z;
  int t = 0;
  int step = 0;  // completed inference steps
};

// z_T = sqrt(abar_T) E(pasted) + sqrt(1 - abar_T) eps, or pure noise when
// init_from_pasted is false.
DiffusionState init_latent(const ImageGrid& grid, const Codec& codec,
                           const NoiseSchedule& schedule, uint64_t seed, bool init_from_pasted);

// eps_neg + scale * (eps_pos - eps_neg).
LatentTensor cfg_combine(const LatentTensor& eps_pos, const LatentTensor& eps_neg, double scale);

// One reverse step from state.t to the next inference timestep; the final
// step returns the predicted clean latent. `seed` feeds the ancestral
// noise only.
DiffusionState denoise_step(const DiffusionState& state, const LatentTensor& eps_hat,
                            const NoiseSchedule& schedule, bool ancestral = false,
                            uint64_t seed = 0);

// Predicted clean latent (z_t - sqrt(1 - abar_t) eps) / sqrt(abar_t).
LatentTensor predict_clean(const LatentTensor& z_t, const LatentTensor& eps_hat, double alpha_bar);

// Forward process: sqrt(abar_t) z0 + sqrt(1 - abar_t) eps.
LatentTensor add_noise(const LatentTensor& z0, const LatentTensor& eps, double alpha_bar);

// Standard normal tensor drawn from the (seed, stream, index) generator.
LatentTensor gaussian_latent(int batch, int channels, int h, int w, uint64_t seed,
                             uint64_t stream, uint64_t index = 0);

struct SampleResult {
  Image b_prime;
  Image full_grid;
  LatentTensor final_latent;
  double seconds = 0.0;
};

SampleResult sample(const ImageGrid& grid, const PromptBundle& prompts,
                    const NoisePredictor& predictor, const Codec& codec,
                    const SamplerConfig& config);

}  // namespace gridicl

#endif  // GRIDICL_SAMPLER_H_
