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

#include "gridicl/trainer.h"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "gridicl/errors.h"
#include "gridicl/grid.h"
#include "gridicl/prompting.h"
#include "gridicl/random.h"
#include "gridicl/tensor_file.h"

namespace gridicl {

namespace {

constexpr uint64_t kNoiseStream = 0x40153;
constexpr uint64_t kPickStream = 0x91c4;
constexpr uint64_t kDropStream = 0xd209;

std::string step_dir_name(int step) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "step_%06d", step);
  return buf;
}

}  // namespace

TrainingExample make_training_example(const TaskSample& sample, const Codec& codec,
                                      const TextEmbedding& text, Size cell) {
  const ImageGrid grid =
      compose_grid(sample.a, sample.a_prime, sample.b, CellLayout::standard(), cell);
  const ImageGrid full = paste_query(grid, sample.b_prime_gt);
  TrainingExample ex;
  ex.z0 = codec.encode(full.pasted_image);
  ex.masked = codec.encode(grid.grid_image);
  ex.mask = downsample_mask(grid.mask, codec.scale_factor());
  ex.text = text;
  return ex;
}

NoiseDraw draw_noise(const LatentTensor& shape, int train_steps, uint64_t seed, uint64_t step,
                     uint64_t item) {
  Rng rng(derive_seed(seed, kNoiseStream, step, item));
  NoiseDraw d;
  d.t = rng.uniform_int(0, train_steps - 1);
  d.eps = LatentTensor(shape.batch, shape.channels, shape.height, shape.width);
  for (double& v : d.eps.values) v = rng.normal();
  return d;
}

template <typename T>
double example_loss(const Network<T>& net, const TrainingExample& ex, const NoiseDraw& noise,
                    const NoiseSchedule& schedule, double weight, std::vector<Mat<T>>* grads) {
  const LatentTensor z_t = add_noise(ex.z0, noise.eps, schedule.alpha_bar(noise.t));
  const int h = ex.z0.height;
  const int w = ex.z0.width;
  const Mat<T> input = pack_inputs<T>(z_t, ex.masked, ex.mask, 0);
  const Mat<T> text = pack_text<T>(ex.text);
  NetworkCache<T> cache;
  const Mat<T> out = net.forward(input, h, w, noise.t, text, nullptr, grads ? &cache : nullptr);
  Mat<T> diff(h * w, 4);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < 4; ++c) {
        diff(y * w + x, c) = out(y * w + x, c) - static_cast<T>(noise.eps.at(0, c, y, x));
      }
    }
  }
  const double n = static_cast<double>(diff.size());
  double sq = 0.0;
  for (Eigen::Index i = 0; i < diff.size(); ++i) {
    sq += static_cast<double>(diff.data()[i]) * static_cast<double>(diff.data()[i]);
  }
  if (grads != nullptr) {
    const Mat<T> d_out = diff * static_cast<T>(2.0 * weight / n);
    net.backward(cache, d_out, grads);
  }
  return weight * sq / n;
}

template double example_loss<float>(const Network<float>&, const TrainingExample&,
                                    const NoiseDraw&, const NoiseSchedule&, double,
                                    std::vector<Mat<float>>*);
template double example_loss<double>(const Network<double>&, const TrainingExample&,
                                     const NoiseDraw&, const NoiseSchedule&, double,
                                     std::vector<Mat<double>>*);

StepResult training_step(const Network<float>& net, const std::vector<TrainingExample>& batch,
                         const NoiseSchedule& schedule, uint64_t seed, uint64_t step) {
  if (batch.empty()) throw Error(ErrorKind::kInvalidInput, "empty training batch");
  StepResult r;
  r.grads = net.params().zeros_like();
  const double weight = 1.0 / static_cast<double>(batch.size());
  for (size_t i = 0; i < batch.size(); ++i) {
    const NoiseDraw noise = draw_noise(batch[i].z0, schedule.train_steps, seed, step, i);
    r.loss += example_loss(net, batch[i], noise, schedule, weight, &r.grads);
  }
  if (!std::isfinite(r.loss)) {
    throw Error(ErrorKind::kNumeric, "non-finite training loss at step " + std::to_string(step));
  }
  return r;
}

void Adam::step(ParamSet<float>* params, const std::vector<Mat<float>>& grads) {
  if (m_.empty()) {
    m_ = params->zeros_like();
    v_ = params->zeros_like();
  }
  ++t_;
  const float b1 = static_cast<float>(beta1_);
  const float b2 = static_cast<float>(beta2_);
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  const float step_size = static_cast<float>(lr_ / c1);
  const float inv_sqrt_c2 = static_cast<float>(1.0 / std::sqrt(c2));
  const float eps = static_cast<float>(eps_);
  for (size_t i = 0; i < grads.size(); ++i) {
    auto g = grads[i].array();
    auto m = m_[i].array();
    auto v = v_[i].array();
    m = b1 * m + (1.0f - b1) * g;
    v = b2 * v + (1.0f - b2) * g * g;
    params->values[i].array() -= step_size * m / (v.sqrt() * inv_sqrt_c2 + eps);
  }
}

WeightFile Adam::state() const {
  WeightFile f;
  f.meta = {{"optimizer", "adam"},
            {"t", t_},
            {"lr", lr_},
            {"beta1", beta1_},
            {"beta2", beta2_},
            {"eps", eps_}};
  for (size_t i = 0; i < m_.size(); ++i) {
    for (int which = 0; which < 2; ++which) {
      const Mat<float>& src = which == 0 ? m_[i] : v_[i];
      NamedTensor t;
      t.name = std::to_string(i) + (which == 0 ? ".m" : ".v");
      t.rows = static_cast<int>(src.rows());
      t.cols = static_cast<int>(src.cols());
      t.data.assign(src.data(), src.data() + src.size());
      f.tensors.push_back(std::move(t));
    }
  }
  return f;
}

void Adam::load_state(const WeightFile& file, const ParamSet<float>& params) {
  t_ = file.meta.value("t", 0LL);
  m_ = params.zeros_like();
  v_ = params.zeros_like();
  if (t_ == 0) return;
  for (size_t i = 0; i < m_.size(); ++i) {
    for (int which = 0; which < 2; ++which) {
      Mat<float>& dst = which == 0 ? m_[i] : v_[i];
      const NamedTensor* t = file.find(std::to_string(i) + (which == 0 ? ".m" : ".v"));
      if (t == nullptr || t->rows != dst.rows() || t->cols != dst.cols()) {
        throw Error(ErrorKind::kInvalidInput, "optimizer state does not match the network");
      }
      std::copy(t->data.begin(), t->data.end(), dst.data());
    }
  }
}

nlohmann::json TrainConfig::to_json() const {
  return {{"network", network_config_to_json(network)},
          {"steps", steps},
          {"batch", batch},
          {"lr", lr},
          {"seed", seed},
          {"cell_height", cell.height},
          {"cell_width", cell.width},
          {"codec", codec},
          {"train_steps", train_steps},
          {"prompt_dropout", prompt_dropout},
          {"checkpoint_every", checkpoint_every},
          {"pool_size", pool_size}};
}

TrainConfig TrainConfig::from_json(const nlohmann::json& j) {
  TrainConfig c;
  if (j.contains("network")) c.network = network_config_from_json(j["network"]);
  c.steps = j.value("steps", c.steps);
  c.batch = j.value("batch", c.batch);
  c.lr = j.value("lr", c.lr);
  c.seed = j.value("seed", c.seed);
  c.cell = {j.value("cell_height", c.cell.height), j.value("cell_width", c.cell.width)};
  c.codec = j.value("codec", c.codec);
  c.train_steps = j.value("train_steps", c.train_steps);
  c.prompt_dropout = j.value("prompt_dropout", c.prompt_dropout);
  c.checkpoint_every = j.value("checkpoint_every", c.checkpoint_every);
  c.pool_size = j.value("pool_size", c.pool_size);
  return c;
}

Denoiser train(const TrainConfig& config,
               const std::function<void(const TrainProgress&)>& on_step) {
  config.network.validate();
  if (config.steps < 1 || config.batch < 1 || !(config.lr > 0.0)) {
    throw Error(ErrorKind::kInvalidConfig, "steps, batch and lr must be positive");
  }
  const auto codec = make_codec(config.codec);
  const NoiseSchedule schedule = build_schedule(config.train_steps, 1);
  const ToyTextEncoder encoder(kDefaultTextLength, config.network.text_dim);
  const TextEmbedding negative = encoder.encode(negative_prompt());
  std::vector<TextEmbedding> task_text;
  for (TaskTag task : kAllTasks) task_text.push_back(encoder.encode(task_prompt(task)));

  Denoiser model(config.network);
  Adam adam(config.lr);
  int start_step = 0;
  if (!config.resume_from.empty()) {
    model = Denoiser::load(config.resume_from);
    if (!(model.network().config() == config.network)) {
      throw Error(ErrorKind::kInvalidConfig, "checkpoint architecture differs from the config");
    }
    const WeightFile weights = load_weight_file(config.resume_from);
    start_step = weights.meta.value("train", nlohmann::json::object()).value("step", 0);
    adam.load_state(load_weight_file(config.resume_from, "optimizer"),
                    model.network().params());
  } else {
    model.network().init(config.seed, Network<float>::Init::kTraining);
  }

  std::ofstream log;
  if (!config.out_dir.empty()) {
    std::filesystem::create_directories(config.out_dir);
    log.open(config.out_dir / "train_log.csv");
    if (!log) throw Error(ErrorKind::kIo, "cannot write training log in " + config.out_dir.string());
    log << "step,loss,lr\n";
  }
  auto checkpoint = [&](const std::filesystem::path& dir, int step) {
    nlohmann::json meta = {{"train", {{"step", step}, {"config", config.to_json()}}}};
    model.save(dir, meta);
    save_weight_file(adam.state(), dir, "optimizer");
  };

  const auto started = std::chrono::steady_clock::now();
  for (int step = start_step; step < config.steps; ++step) {
    std::vector<TrainingExample> batch;
    batch.reserve(config.batch);
    for (int i = 0; i < config.batch; ++i) {
      uint64_t index = static_cast<uint64_t>(step) * config.batch + i;
      if (config.pool_size > 0) index %= config.pool_size;
      Rng pick(derive_seed(config.seed, kPickStream, index));
      const TaskTag task = kAllTasks[pick.uniform_int(0, 3)];
      const TaskSample sample = make_task_sample(config.seed, index, task, config.cell);
      Rng drop(derive_seed(config.seed, kDropStream, step, i));
      const bool dropped = drop.uniform() < config.prompt_dropout;
      batch.push_back(make_training_example(
          sample, *codec, dropped ? negative : task_text[static_cast<int>(task)], config.cell));
    }
    StepResult r;
    try {
      r = training_step(model.network(), batch, schedule, config.seed, step);
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::kNumeric && !config.out_dir.empty()) {
        nlohmann::json diag = {{"step", step}, {"error", e.what()}, {"timesteps", nlohmann::json::array()}};
        for (size_t i = 0; i < batch.size(); ++i) {
          diag["timesteps"].push_back(
              draw_noise(batch[i].z0, schedule.train_steps, config.seed, step, i).t);
        }
        std::ofstream(config.out_dir / "diagnostics.json") << diag.dump(2) << "\n";
        checkpoint(config.out_dir / "diverged", step);
      }
      throw;
    }
    adam.step(&model.network().params(), r.grads);

    const int done = step + 1;
    if (log.is_open()) {
      char line[96];
      std::snprintf(line, sizeof(line), "%d,%.9g,%.6g\n", done, r.loss, adam.lr());
      log << line << std::flush;
    }
    if (on_step) {
      on_step({done, r.loss,
               std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count()});
    }
    if (!config.out_dir.empty() && config.checkpoint_every > 0 &&
        done % config.checkpoint_every == 0) {
      checkpoint(config.out_dir / step_dir_name(done), done);
    }
  }
  if (!config.out_dir.empty()) checkpoint(config.out_dir / "final", config.steps);
  return model;
}

std::vector<double> read_train_log(const std::filesystem::path& csv) {
  std::ifstream in(csv);
  if (!in) throw Error(ErrorKind::kIo, "cannot read " + csv.string());
  std::vector<double> losses;
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    std::istringstream row(line);
    std::string step, loss;
    std::getline(row, step, ',');
    std::getline(row, loss, ',');
    losses.push_back(std::stod(loss));
  }
  return losses;
}

}  // namespace gridicl
