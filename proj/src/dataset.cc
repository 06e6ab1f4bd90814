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

#include "gridicl/dataset.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>

#include "gridicl/errors.h"

namespace gridicl {

namespace {

constexpr uint64_t kSceneStream = 0xda7a;
constexpr uint64_t kTaskStream = 0x7a5c;

double smoothstep(double e0, double e1, double x) {
  const double t = std::clamp((x - e0) / (e1 - e0), 0.0, 1.0);
  return t * t * (3.0 - 2.0 * t);
}

std::array<float, 3> hsv_to_rgb(double h, double s, double v) {
  const double c = v * s;
  const double hp = std::fmod(h, 1.0) * 6.0;
  const double x = c * (1.0 - std::abs(std::fmod(hp, 2.0) - 1.0));
  double r = 0, g = 0, b = 0;
  switch (static_cast<int>(hp)) {
    case 0: r = c; g = x; break;
    case 1: r = x; g = c; break;
    case 2: g = c; b = x; break;
    case 3: g = x; b = c; break;
    case 4: r = x; b = c; break;
    default: r = c; b = x; break;
  }
  const double m = v - c;
  return {static_cast<float>(r + m), static_cast<float>(g + m), static_cast<float>(b + m)};
}

enum class Shape { kCircle, kEllipse, kBox, kDiamond };

}  // namespace

std::string_view task_name(TaskTag task) {
  switch (task) {
    case TaskTag::kColorize: return "grayscale_to_color";
    case TaskTag::kDeblur: return "blur_to_sharp";
    case TaskTag::kDenoise: return "noisy_to_clean";
    case TaskTag::kBrighten: return "dark_to_bright";
  }
  return "unknown";
}

TaskTag task_from_name(std::string_view name) {
  for (TaskTag t : kAllTasks) {
    if (task_name(t) == name) return t;
  }
  throw Error(ErrorKind::kInvalidInput, "unknown task '" + std::string(name) + "'");
}

std::string task_prompt(TaskTag task) {
  switch (task) {
    case TaskTag::kColorize: return "a vivid full color picture of shapes";
    case TaskTag::kDeblur: return "a sharp crisp picture of shapes";
    case TaskTag::kDenoise: return "a clean smooth picture of shapes";
    case TaskTag::kBrighten: return "a bright well lit picture of shapes";
  }
  return "";
}

Image grayscale(const Image& image) {
  Image out(image.width(), image.height(), 3);
  for (int y = 0; y < image.height(); ++y) {
    for (int x = 0; x < image.width(); ++x) {
      const float m = (image.at(x, y, 0) + image.at(x, y, 1) + image.at(x, y, 2)) / 3.0f;
      for (int c = 0; c < 3; ++c) out.at(x, y, c) = m;
    }
  }
  return out;
}

Image gaussian_blur(const Image& image, double sigma) {
  if (!(sigma > 0.0)) return image;
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> kernel(2 * radius + 1);
  double total = 0.0;
  for (int k = -radius; k <= radius; ++k) {
    kernel[k + radius] = std::exp(-0.5 * k * k / (sigma * sigma));
    total += kernel[k + radius];
  }
  for (double& v : kernel) v /= total;
  const int w = image.width();
  const int h = image.height();
  const int ch = image.channels();
  Image tmp(w, h, ch);
  Image out(w, h, ch);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < ch; ++c) {
        double acc = 0.0;
        for (int k = -radius; k <= radius; ++k) {
          acc += kernel[k + radius] * image.at(std::clamp(x + k, 0, w - 1), y, c);
        }
        tmp.at(x, y, c) = static_cast<float>(acc);
      }
    }
  }
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < ch; ++c) {
        double acc = 0.0;
        for (int k = -radius; k <= radius; ++k) {
          acc += kernel[k + radius] * tmp.at(x, std::clamp(y + k, 0, h - 1), c);
        }
        out.at(x, y, c) = static_cast<float>(acc);
      }
    }
  }
  return out;
}

Image add_pixel_noise(const Image& image, double sigma, Rng& rng) {
  Image out = image;
  for (float& v : out.data()) {
    v = std::clamp(static_cast<float>(v + sigma * rng.normal()), 0.0f, 1.0f);
  }
  return out;
}

Image scale_brightness(const Image& image, double gain) {
  Image out = image;
  const float g = static_cast<float>(gain);
  for (float& v : out.data()) v = std::clamp(v * g, 0.0f, 1.0f);
  return out;
}

double blur_sigma(Size cell) { return std::max(1.0, cell.width / 21.0); }

Image render_sprites(Size cell, Rng& rng) {
  const int w = cell.width;
  const int h = cell.height;
  Image out(w, h, 3);
  const double base_hue = rng.uniform();
  const auto c0 = hsv_to_rgb(base_hue, rng.uniform(0.2, 0.6), rng.uniform(0.35, 0.9));
  const auto c1 = hsv_to_rgb(base_hue + rng.uniform(0.1, 0.4), rng.uniform(0.2, 0.6),
                             rng.uniform(0.35, 0.9));
  const double angle = rng.uniform(0.0, 2.0 * std::numbers::pi);
  const double gx = std::cos(angle);
  const double gy = std::sin(angle);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double u = (x + 0.5) / w - 0.5;
      const double v = (y + 0.5) / h - 0.5;
      const double t = std::clamp(0.5 + (u * gx + v * gy), 0.0, 1.0);
      for (int c = 0; c < 3; ++c) {
        out.at(x, y, c) = static_cast<float>(c0[c] + (c1[c] - c0[c]) * t);
      }
    }
  }

  const int shapes = rng.uniform_int(2, 5);
  const double soft = 0.06;  // edge half-width in cell units
  for (int s = 0; s < shapes; ++s) {
    const Shape kind = static_cast<Shape>(rng.uniform_int(0, 3));
    const double cx = rng.uniform(0.2, 0.8);
    const double cy = rng.uniform(0.2, 0.8);
    const double rx = rng.uniform(0.12, 0.28);
    const double ry = kind == Shape::kCircle ? rx : rng.uniform(0.12, 0.28);
    const auto color = hsv_to_rgb(rng.uniform(), rng.uniform(0.6, 1.0), rng.uniform(0.6, 1.0));
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const double dx = ((x + 0.5) / w - cx) / rx;
        const double dy = ((y + 0.5) / h - cy) / ry;
        double dist = 0.0;  // < 1 inside, in units of the shape radius
        switch (kind) {
          case Shape::kCircle:
          case Shape::kEllipse: dist = std::sqrt(dx * dx + dy * dy); break;
          case Shape::kBox: dist = std::max(std::abs(dx), std::abs(dy)); break;
          case Shape::kDiamond: dist = std::abs(dx) + std::abs(dy); break;
        }
        const double edge = soft / std::min(rx, ry);
        const double alpha = 1.0 - smoothstep(1.0 - edge, 1.0 + edge, dist);
        if (alpha <= 0.0) continue;
        for (int c = 0; c < 3; ++c) {
          float& p = out.at(x, y, c);
          p = static_cast<float>(p + (color[c] - p) * alpha);
        }
      }
    }
  }
  return out;
}

Image degrade(const Image& clean, TaskTag task, Size cell, Rng& rng) {
  switch (task) {
    case TaskTag::kColorize: return grayscale(clean);
    case TaskTag::kDeblur: return gaussian_blur(clean, blur_sigma(cell));
    case TaskTag::kDenoise: return add_pixel_noise(clean, kNoiseSigma, rng);
    case TaskTag::kBrighten: return scale_brightness(clean, 1.0 / kBrightnessGain);
  }
  return clean;
}

TaskSample make_task_sample(uint64_t seed, uint64_t index, TaskTag task, Size cell) {
  Rng rng(derive_seed(seed, kSceneStream, index));
  TaskSample s;
  char id[64];
  std::snprintf(id, sizeof(id), "%s-%06llu", std::string(task_name(task)).c_str(),
                static_cast<unsigned long long>(index));
  s.id = id;
  s.task = task;
  s.prompt = task_prompt(task);
  s.a_prime = render_sprites(cell, rng);
  s.b_prime_gt = render_sprites(cell, rng);
  s.a = degrade(s.a_prime, task, cell, rng);
  s.b = degrade(s.b_prime_gt, task, cell, rng);
  return s;
}

std::vector<TaskSample> make_synthetic_dataset(int n, uint64_t seed, Size cell) {
  if (n < 1) throw Error(ErrorKind::kInvalidInput, "dataset size must be >= 1");
  std::vector<TaskSample> out;
  out.reserve(n);
  for (int i = 0; i < n; ++i) {
    Rng pick(derive_seed(seed, kTaskStream, i));
    out.push_back(make_task_sample(seed, i, kAllTasks[pick.uniform_int(0, 3)], cell));
  }
  return out;
}

std::vector<TaskSample> make_balanced_dataset(int per_task, uint64_t seed, Size cell) {
  if (per_task < 1) throw Error(ErrorKind::kInvalidInput, "per-task count must be >= 1");
  std::vector<TaskSample> out;
  out.reserve(per_task * kAllTasks.size());
  uint64_t index = 0;
  for (TaskTag task : kAllTasks) {
    for (int i = 0; i < per_task; ++i) out.push_back(make_task_sample(seed, index++, task, cell));
  }
  return out;
}

std::string dataset_hash(const std::vector<TaskSample>& samples) {
  uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&h](uint8_t byte) {
    h ^= byte;
    h *= 0x100000001b3ULL;
  };
  for (const TaskSample& s : samples) {
    mix(static_cast<uint8_t>(s.task));
    for (char c : s.prompt) mix(static_cast<uint8_t>(c));
    for (const Image* img : {&s.a, &s.a_prime, &s.b, &s.b_prime_gt}) {
      for (float v : img->data()) mix(to_u8(v));
    }
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace gridicl
