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

#ifndef GRIDICL_DATASET_H_
#define GRIDICL_DATASET_H_

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "gridicl/image.h"
#include "gridicl/random.h"

namespace gridicl {

// Each task pairs a degraded source with its clean original: the analogy
// maps the degraded image (A, B) to the clean one (A', B').
enum class TaskTag { kColorize = 0, kDeblur = 1, kDenoise = 2, kBrighten = 3 };

inline constexpr std::array<TaskTag, 4> kAllTasks = {TaskTag::kColorize, TaskTag::kDeblur,
                                                     TaskTag::kDenoise, TaskTag::kBrighten};

// "grayscale_to_color", "blur_to_sharp", "noisy_to_clean", "dark_to_bright".
std::string_view task_name(TaskTag task);
// Throws kInvalidInput for unknown names.
TaskTag task_from_name(std::string_view name);
// The B' description a vision-language model would be expected to give.
std::string task_prompt(TaskTag task);

struct TaskSample {
  std::string id;
  TaskTag task = TaskTag::kColorize;
  Image a;
  Image a_prime;
  Image b;
  Image b_prime_gt;
  std::string prompt;
};

inline constexpr double kBrightnessGain = 2.0;
inline constexpr double kNoiseSigma = 0.15;

// Channelwise mean replicated to RGB.
Image grayscale(const Image& image);
// Separable Gaussian blur with clamped borders.
Image gaussian_blur(const Image& image, double sigma);
Image add_pixel_noise(const Image& image, double sigma, Rng& rng);
// Multiplies every sample by `gain`, clamping to [0, 1].
Image scale_brightness(const Image& image, double gain);
// Blur radius used for the deblurring task at a given cell width.
double blur_sigma(Size cell);

// Procedural scene: soft two-colour gradient background with 2-5 soft-edged
// coloured shapes.
Image render_sprites(Size cell, Rng& rng);

// The degraded counterpart of a clean image for `task`.
Image degrade(const Image& clean, TaskTag task, Size cell, Rng& rng);

// Deterministic in (seed, index).
TaskSample make_task_sample(uint64_t seed, uint64_t index, TaskTag task, Size cell);

// n samples with uniformly sampled tasks.
std::vector<TaskSample> make_synthetic_dataset(int n, uint64_t seed, Size cell);

// `per_task` samples of every task, grouped by task.
std::vector<TaskSample> make_balanced_dataset(int per_task, uint64_t seed, Size cell);

// FNV-1a over tasks, prompts and 8-bit quantized pixels, as 16 hex digits.
std::string dataset_hash(const std::vector<TaskSample>& samples);

}  // namespace gridicl

#endif  // GRIDICL_DATASET_H_
