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

#ifndef GRIDICL_TRAINER_H_
#define GRIDICL_TRAINER_H_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "gridicl/codec.h"
#include "gridicl/dataset.h"
#include "gridicl/denoiser.h"
#include "gridicl/latent.h"
#include "gridicl/network.h"
#include "gridicl/sampler.h"
#include "gridicl/text_encoder.h"

namespace gridicl {

// One denoising-objective example: the clean full-grid latent, the
// conditioning latent with B' blanked, the latent mask and the prompt.
struct TrainingExample {
  LatentTensor z0;
  LatentTensor masked;
  LatentTensor mask;
  TextEmbedding text;
};

struct NoiseDraw {
  int t = 0;
  LatentTensor eps;
};

// Builds the example for a task sample: standard layout, ground-truth B' in
// the bottom-right cell of z0.
TrainingExample make_training_example(const TaskSample& sample, const Codec& codec,
                                      const TextEmbedding& text, Size cell);

// Mean squared error between eps and the network's prediction at z_t, scaled
// by `weight`. When grads is non-null the gradient of the scaled loss is
// accumulated into it.
template <typename T>
double example_loss(const Network<T>& net, const TrainingExample& ex, const NoiseDraw& noise,
                    const NoiseSchedule& schedule, double weight, std::vector<Mat<T>>* grads);

// t uniform in [0, T) and standard-normal eps from the (seed, step, item)
// generator.
NoiseDraw draw_noise(const LatentTensor& shape, int train_steps, uint64_t seed, uint64_t step,
                     uint64_t item);

struct StepResult {
  double loss = 0.0;
  std::vector<Mat<float>> grads;
};

// Batch-mean loss and its parameter gradients. Throws kNumeric on a
// non-finite loss.
StepResult training_step(const Network<float>& net, const std::vector<TrainingExample>& batch,
                         const NoiseSchedule& schedule, uint64_t seed, uint64_t step);

class Adam {
 public:
  Adam(double lr = 2e-4, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
      : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}

  void step(ParamSet<float>* params, const std::vector<Mat<float>>& grads);

  long long steps_taken() const { return t_; }
  double lr() const { return lr_; }
  // Moment buffers as weight-file tensors and back.
  WeightFile state() const;
  void load_state(const WeightFile& file, const ParamSet<float>& params);

 private:
  double lr_;
  double beta1_;
  double beta2_;
  double eps_;
  long long t_ = 0;
  std::vector<Mat<float>> m_;
  std::vector<Mat<float>> v_;
};

struct TrainConfig {
  NetworkConfig network;
  int steps = 8000;
  int batch = 16;
  double lr = 2e-4;
  uint64_t seed = 0;
  Size cell = {64, 64};
  std::string codec = "bilinear";
  int train_steps = 1000;
  // Fraction of examples trained with the negative prompt as text.
  double prompt_dropout = 0.1;
  int checkpoint_every = 1000;
  // 0 draws fresh samples every step; otherwise cycles a fixed pool of this
  // many samples (overfitting checks).
  int pool_size = 0;
  std::filesystem::path out_dir;
  // Continue from a checkpoint directory written by train().
  std::filesystem::path resume_from;

  nlohmann::json to_json() const;
  static TrainConfig from_json(const nlohmann::json& j);
};

struct TrainProgress {
  int step = 0;  // 1-based count of completed steps
  double loss = 0.0;
  double seconds = 0.0;
};

// Deterministic given the config. Writes <out_dir>/step_NNNNNN/ every
// checkpoint_every steps, <out_dir>/final/ and <out_dir>/train_log.csv
// (step,loss,lr) when out_dir is set.
Denoiser train(const TrainConfig& config,
               const std::function<void(const TrainProgress&)>& on_step = {});

// Per-step losses of train(), for tests that compare curves.
std::vector<double> read_train_log(const std::filesystem::path& csv);

}  // namespace gridicl

#endif  // GRIDICL_TRAINER_H_
