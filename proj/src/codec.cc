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

#include "gridicl/codec.h"

#include <algorithm>
#include <cmath>

#include "gridicl/errors.h"

namespace gridicl {

bool LatentTensor::all_finite() const {
  return std::all_of(values.begin(), values.end(), [](double v) { return std::isfinite(v); });
}

LatentTensor downsample_mask(const Image& mask, int factor) {
  if (mask.channels() != 1 || mask.width() % factor != 0 || mask.height() % factor != 0) {
    throw Error(ErrorKind::kInvalidInput, "mask not divisible by the codec factor");
  }
  LatentTensor out(1, 1, mask.height() / factor, mask.width() / factor);
  for (int y = 0; y < out.height; ++y) {
    for (int x = 0; x < out.width; ++x) {
      float m = 0.0f;
      for (int dy = 0; dy < factor; ++dy) {
        for (int dx = 0; dx < factor; ++dx) {
          m = std::max(m, mask.at(x * factor + dx, y * factor + dy, 0));
        }
      }
      out.at(0, 0, y, x) = m;
    }
  }
  return out;
}

namespace {

void check_divisible(const Image& image, int factor) {
  if (image.empty() || image.width() % factor != 0 || image.height() % factor != 0) {
    throw Error(ErrorKind::kInvalidInput, "image " + std::to_string(image.width()) + "x" +
                                              std::to_string(image.height()) +
                                              " not divisible by codec factor " +
                                              std::to_string(factor));
  }
}

void check_latent(const LatentTensor& latent) {
  if (latent.channels != 4 || latent.batch < 1 || latent.height < 1 || latent.width < 1) {
    throw Error(ErrorKind::kShape, "decode expects a 4-channel latent");
  }
}

}  // namespace

LatentTensor BilinearCodec::encode(const Image& image) const {
  check_divisible(image, factor_);
  const Image rgb = downsample_area(to_rgb(image), factor_);
  LatentTensor z(1, 4, rgb.height(), rgb.width());
  for (int c = 0; c < 3; ++c) {
    for (int y = 0; y < rgb.height(); ++y) {
      for (int x = 0; x < rgb.width(); ++x) z.at(0, c, y, x) = rgb.at(x, y, c);
    }
  }
  return z;
}

Image BilinearCodec::decode(const LatentTensor& latent) const {
  check_latent(latent);
  Image small(latent.width, latent.height, 3);
  for (int c = 0; c < 3; ++c) {
    for (int y = 0; y < latent.height; ++y) {
      for (int x = 0; x < latent.width; ++x) {
        small.at(x, y, c) = static_cast<float>(latent.at(0, c, y, x));
      }
    }
  }
  Image out = resize_bilinear(small, {latent.height * factor_, latent.width * factor_});
  for (float& v : out.data()) v = std::clamp(v, 0.0f, 1.0f);
  return out;
}

namespace {

// Rows of the 4 x 12 projection, block element order (dy, dx, channel).
double projection(int row, [[maybe_unused]] int dy, int dx, int ch) {
  if (row < 3) return ch == row ? 0.5 : 0.0;
  const double detail = 1.0 / std::sqrt(12.0);
  return dx == 0 ? detail : -detail;
}

}  // namespace

LatentTensor SpaceToDepthCodec::encode(const Image& image) const {
  check_divisible(image, 2);
  const Image rgb = to_rgb(image);
  LatentTensor z(1, 4, rgb.height() / 2, rgb.width() / 2);
  for (int y = 0; y < z.height; ++y) {
    for (int x = 0; x < z.width; ++x) {
      for (int r = 0; r < 4; ++r) {
        double acc = 0.0;
        for (int dy = 0; dy < 2; ++dy) {
          for (int dx = 0; dx < 2; ++dx) {
            for (int c = 0; c < 3; ++c) {
              acc += projection(r, dy, dx, c) * rgb.at(2 * x + dx, 2 * y + dy, c);
            }
          }
        }
        z.at(0, r, y, x) = acc;
      }
    }
  }
  return z;
}

Image SpaceToDepthCodec::decode(const LatentTensor& latent) const {
  check_latent(latent);
  Image out(latent.width * 2, latent.height * 2, 3);
  for (int y = 0; y < latent.height; ++y) {
    for (int x = 0; x < latent.width; ++x) {
      for (int dy = 0; dy < 2; ++dy) {
        for (int dx = 0; dx < 2; ++dx) {
          for (int c = 0; c < 3; ++c) {
            double v = 0.0;
            for (int r = 0; r < 4; ++r) v += projection(r, dy, dx, c) * latent.at(0, r, y, x);
            out.at(2 * x + dx, 2 * y + dy, c) = std::clamp(static_cast<float>(v), 0.0f, 1.0f);
          }
        }
      }
    }
  }
  return out;
}

std::unique_ptr<Codec> make_codec(const std::string& name) {
  if (name == "bilinear") return std::make_unique<BilinearCodec>(8);
  if (name == "space_to_depth") return std::make_unique<SpaceToDepthCodec>();
  throw Error(ErrorKind::kInvalidConfig, "unknown codec '" + name + "'");
}

}  // namespace gridicl
