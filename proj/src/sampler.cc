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

#include "gridicl/sampler.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <string>

#include <nlohmann/json.hpp>

#include "gridicl/errors.h"
#include "gridicl/random.h"
#include "gridicl/tensor_file.h"

namespace gridicl {

namespace {

constexpr uint64_t kInitStream = 0x1a17;
constexpr uint64_t kStepStream = 0x5e9;

}  // namespace

NoiseSchedule build_schedule(int train_steps, int steps) {
  if (train_steps < 1 || steps < 1 || steps > train_steps) {
    throw Error(ErrorKind::kInvalidConfig, "need 1 <= steps (" + std::to_string(steps) +
                                               ") <= T (" + std::to_string(train_steps) + ")");
  }
  NoiseSchedule s;
  s.train_steps = train_steps;
  s.betas.resize(train_steps);
  s.alphas.resize(train_steps);
  s.alpha_bars.resize(train_steps);
  double running = 1.0;
  for (int t = 0; t < train_steps; ++t) {
    const double frac = train_steps == 1 ? 0.0 : static_cast<double>(t) / (train_steps - 1);
    s.betas[t] = kBetaStart + (kBetaEnd - kBetaStart) * frac;
    s.alphas[t] = 1.0 - s.betas[t];
    running *= s.alphas[t];
    s.alpha_bars[t] = running;
  }
  const double stride = static_cast<double>(train_steps) / steps;
  for (int i = 0; i < steps; ++i) {
    s.inference_steps.push_back(train_steps - 1 - static_cast<int>(std::floor(i * stride)));
  }
  return s;
}

void SamplerConfig::validate() const {
  if (!(cfg_scale >= 0.0) || !std::isfinite(cfg_scale)) {
    throw Error(ErrorKind::kInvalidConfig, "guidance scale must be >= 0");
  }
  if (steps < 1) throw Error(ErrorKind::kInvalidConfig, "steps must be >= 1");
  if (timeout_seconds < 0.0) throw Error(ErrorKind::kInvalidConfig, "negative timeout");
}

LatentTensor gaussian_latent(int batch, int channels, int h, int w, uint64_t seed,
                             uint64_t stream, uint64_t index) {
  LatentTensor out(batch, channels, h, w);
  Rng rng(derive_seed(seed, stream, index));
  for (double& v : out.values) v = rng.normal();
  return out;
}

LatentTensor add_noise(const LatentTensor& z0, const LatentTensor& eps, double alpha_bar) {
  if (!z0.same_shape(eps)) throw Error(ErrorKind::kShape, "noise shape mismatch");
  LatentTensor out = z0;
  const double a = std::sqrt(alpha_bar);
  const double b = std::sqrt(1.0 - alpha_bar);
  for (size_t i = 0; i < out.values.size(); ++i) out.values[i] = a * z0.values[i] + b * eps.values[i];
  return out;
}

LatentTensor predict_clean(const LatentTensor& z_t, const LatentTensor& eps_hat,
                           double alpha_bar) {
  if (!z_t.same_shape(eps_hat)) throw Error(ErrorKind::kShape, "noise shape mismatch");
  LatentTensor out = z_t;
  const double a = std::sqrt(alpha_bar);
  const double b = std::sqrt(1.0 - alpha_bar);
  for (size_t i = 0; i < out.values.size(); ++i) {
    out.values[i] = (z_t.values[i] - b * eps_hat.values[i]) / a;
  }
  return out;
}

DiffusionState init_latent(const ImageGrid& grid, const Codec& codec,
                           const NoiseSchedule& schedule, uint64_t seed, bool init_from_pasted) {
  const int t = schedule.inference_steps.front();
  const LatentTensor base = codec.encode(grid.pasted_image);
  const LatentTensor eps =
      gaussian_latent(base.batch, base.channels, base.height, base.width, seed, kInitStream);
  DiffusionState state;
  state.t = t;
  state.z = init_from_pasted ? add_noise(base, eps, schedule.alpha_bar(t)) : eps;
  return state;
}

LatentTensor cfg_combine(const LatentTensor& eps_pos, const LatentTensor& eps_neg, double scale) {
  if (!eps_pos.same_shape(eps_neg)) throw Error(ErrorKind::kShape, "guidance branch mismatch");
  // neg + (pos - neg) is not always bit-equal to pos.
  if (scale == 1.0) return eps_pos;
  LatentTensor out = eps_neg;
  for (size_t i = 0; i < out.values.size(); ++i) {
    out.values[i] = eps_neg.values[i] + scale * (eps_pos.values[i] - eps_neg.values[i]);
  }
  return out;
}

DiffusionState denoise_step(const DiffusionState& state, const LatentTensor& eps_hat,
                            const NoiseSchedule& schedule, bool ancestral, uint64_t seed) {
  if (!eps_hat.all_finite()) throw Error(ErrorKind::kNumeric, "non-finite noise prediction");
  const auto& steps = schedule.inference_steps;
  const auto it = std::find(steps.begin(), steps.end(), state.t);
  if (it == steps.end()) {
    throw Error(ErrorKind::kInvalidInput, "timestep " + std::to_string(state.t) +
                                              " is not an inference step");
  }
  const bool last = std::next(it) == steps.end();
  const int t_prev = last ? 0 : *std::next(it);
  const double ab_t = schedule.alpha_bar(state.t);
  const double ab_prev = last ? 1.0 : schedule.alpha_bar(t_prev);

  DiffusionState next;
  next.t = t_prev;
  next.step = state.step + 1;
  const LatentTensor x0 = predict_clean(state.z, eps_hat, ab_t);
  if (last) {
    next.z = x0;
    return next;
  }
  if (!ancestral) {
    next.z = add_noise(x0, eps_hat, ab_prev);
    return next;
  }
  // DDPM posterior over the (possibly strided) interval t -> t_prev.
  const double alpha = ab_t / ab_prev;
  const double beta = 1.0 - alpha;
  const double sigma = std::sqrt(beta * (1.0 - ab_prev) / (1.0 - ab_t));
  const double coef = beta / std::sqrt(1.0 - ab_t);
  const double inv_sqrt_alpha = 1.0 / std::sqrt(alpha);
  const LatentTensor noise = gaussian_latent(state.z.batch, state.z.channels, state.z.height,
                                             state.z.width, seed, kStepStream, state.step);
  next.z = state.z;
  for (size_t i = 0; i < next.z.values.size(); ++i) {
    next.z.values[i] = inv_sqrt_alpha * (state.z.values[i] - coef * eps_hat.values[i]) +
                       sigma * noise.values[i];
  }
  return next;
}

namespace {

std::string attention_file_name(int step, int t, int layer, AttentionKind kind) {
  return "attn_step" + std::to_string(step) + "_t" + std::to_string(t) + "_L" +
         std::to_string(layer) + (kind == AttentionKind::kSelf ? "_self" : "_cross") + ".bin";
}

}  // namespace

SampleResult sample(const ImageGrid& grid, const PromptBundle& prompts,
                    const NoisePredictor& predictor, const Codec& codec,
                    const SamplerConfig& config) {
  using Clock = std::chrono::steady_clock;
  const auto started = Clock::now();
  config.validate();
  config.surgery.validate(predictor.block_count(), config.train_steps);
  const NoiseSchedule schedule = build_schedule(config.train_steps, config.steps);

  const LatentTensor masked =
      codec.encode(config.condition_on_pasted ? grid.pasted_image : grid.grid_image);
  const LatentTensor mask = downsample_mask(grid.mask, codec.scale_factor());
  const int multiple = predictor.latent_multiple();
  if (masked.height % multiple != 0 || masked.width % multiple != 0) {
    throw Error(ErrorKind::kInvalidConfig,
                "latent " + std::to_string(masked.height) + "x" + std::to_string(masked.width) +
                    " must be a multiple of " + std::to_string(multiple) +
                    "; adjust the cell size");
  }
  if (!config.dump_dir.empty()) std::filesystem::create_directories(config.dump_dir);

  DiffusionState state =
      init_latent(grid, codec, schedule, config.seed, config.init_from_pasted);
  nlohmann::json attention_index = nlohmann::json::array();

  for (size_t k = 0; k < schedule.inference_steps.size(); ++k) {
    const int t = state.t;
    AttentionHooks hooks;
    hooks.surgery = &config.surgery;
    hooks.timestep = t;
    AttentionHooks neg_hooks = hooks;
    if (static_cast<int>(k) == config.dump_attention_step && !config.dump_dir.empty()) {
      const auto& layers = config.dump_attention_layers;
      hooks.want_dump = [&layers](int layer, AttentionKind) {
        return layers.empty() || std::find(layers.begin(), layers.end(), layer) != layers.end();
      };
      hooks.dump = [&, k, t](int layer, const AttentionScores& scores) {
        const std::string name = attention_file_name(static_cast<int>(k), t, layer, scores.kind);
        const uint32_t n = static_cast<uint32_t>(scores.positions());
        const std::vector<uint32_t> dims = {static_cast<uint32_t>(scores.heads), n,
                                            static_cast<uint32_t>(scores.cols())};
        write_tensor(config.dump_dir / name, dims, scores.values);
        attention_index.push_back({{"file", name},
                                   {"step", k},
                                   {"timestep", t},
                                   {"layer", layer},
                                   {"kind", scores.kind == AttentionKind::kSelf ? "self" : "cross"},
                                   {"height", scores.resolution.height},
                                   {"width", scores.resolution.width},
                                   {"heads", scores.heads}});
      };
    }
    const AttentionHooks* pos_ptr = config.attach_hooks ? &hooks : nullptr;
    const AttentionHooks* neg_ptr = config.attach_hooks ? &neg_hooks : nullptr;
    const LatentTensor eps_pos =
        predictor.predict_noise(state.z, t, prompts.positive_emb, masked, mask, pos_ptr);
    const LatentTensor eps_neg =
        predictor.predict_noise(state.z, t, prompts.negative_emb, masked, mask, neg_ptr);
    const LatentTensor eps = cfg_combine(eps_pos, eps_neg, config.cfg_scale);
    state = denoise_step(state, eps, schedule, config.ancestral, config.seed);

    if (config.latent_paste) {
      const bool done = state.step == static_cast<int>(schedule.inference_steps.size());
      const LatentTensor noise = gaussian_latent(masked.batch, 4, masked.height, masked.width,
                                                 config.seed, kStepStream + 1, state.step);
      const LatentTensor known = done ? masked : add_noise(masked, noise, schedule.alpha_bar(state.t));
      for (int c = 0; c < 4; ++c) {
        for (int y = 0; y < masked.height; ++y) {
          for (int x = 0; x < masked.width; ++x) {
            if (mask.at(0, 0, y, x) < 0.5) state.z.at(0, c, y, x) = known.at(0, c, y, x);
          }
        }
      }
    }
    if (config.dump_latent_every > 0 && !config.dump_dir.empty() &&
        state.step % config.dump_latent_every == 0) {
      std::vector<float> data(state.z.values.begin(), state.z.values.end());
      const std::vector<uint32_t> dims = {
          static_cast<uint32_t>(state.z.batch), static_cast<uint32_t>(state.z.channels),
          static_cast<uint32_t>(state.z.height), static_cast<uint32_t>(state.z.width)};
      write_tensor(config.dump_dir / ("latent_step" + std::to_string(state.step) + ".bin"), dims,
                   data);
    }
    const double elapsed = std::chrono::duration<double>(Clock::now() - started).count();
    if (config.timeout_seconds > 0.0 && elapsed > config.timeout_seconds &&
        state.step < static_cast<int>(schedule.inference_steps.size())) {
      if (!config.dump_dir.empty()) {
        std::vector<float> data(state.z.values.begin(), state.z.values.end());
        const std::vector<uint32_t> dims = {
            static_cast<uint32_t>(state.z.batch), static_cast<uint32_t>(state.z.channels),
            static_cast<uint32_t>(state.z.height), static_cast<uint32_t>(state.z.width)};
        write_tensor(config.dump_dir / "timeout_latent.bin", dims, data);
      }
      throw Error(ErrorKind::kTimeout, "sampling exceeded " +
                                           std::to_string(config.timeout_seconds) + " s after " +
                                           std::to_string(state.step) + " steps");
    }
  }
  if (!attention_index.empty()) {
    std::ofstream(config.dump_dir / "attention_index.json") << attention_index.dump(2) << "\n";
  }

  SampleResult result;
  result.final_latent = state.z;
  result.full_grid = codec.decode(state.z);
  result.b_prime = cell(result.full_grid, grid.cell_size, Quadrant::kBottomRight);
  result.seconds = std::chrono::duration<double>(Clock::now() - started).count();
  return result;
}

}  // namespace gridicl
