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

#ifndef GRIDICL_LATENT_H_
#define GRIDICL_LATENT_H_

#include <cstddef>
#include <vector>

#include "gridicl/image.h"

namespace gridicl {

// batch x channels x h x w array in NCHW order. Latents have 4 channels;
// the same container carries 1-channel masks. Stored in double so the
// sampler's update arithmetic does not lose precision between steps.
struct LatentTensor {
  int batch = 1;
  int channels = 4;
  int height = 0;
  int width = 0;
  std::vector<double> values;

  LatentTensor() = default;
  LatentTensor(int batch, int channels, int height, int width, double fill = 0.0)
      : batch(batch),
        channels(channels),
        height(height),
        width(width),
        values(static_cast<size_t>(batch) * channels * height * width, fill) {}

  Size resolution() const { return {height, width}; }
  size_t index(int b, int c, int y, int x) const {
    return ((static_cast<size_t>(b) * channels + c) * height + y) * width + x;
  }
  double& at(int b, int c, int y, int x) { return values[index(b, c, y, x)]; }
  double at(int b, int c, int y, int x) const { return values[index(b, c, y, x)]; }

  bool same_shape(const LatentTensor& o) const {
    return batch == o.batch && channels == o.channels && height == o.height && width == o.width;
  }
  bool all_finite() const;
  bool operator==(const LatentTensor&) const = default;
};

// The pixel mask reduced to latent resolution by block max.
LatentTensor downsample_mask(const Image& mask, int factor);

}  // namespace gridicl

#endif  // GRIDICL_LATENT_H_
