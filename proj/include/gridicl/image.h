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

#ifndef GRIDICL_IMAGE_H_
#define GRIDICL_IMAGE_H_

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace gridicl {

struct Size {
  int height = 0;
  int width = 0;

  bool operator==(const Size&) const = default;
};

// Interleaved row-major raster with float samples in [0, 1].
class Image {
 public:
  Image() = default;
  Image(int width, int height, int channels, float fill = 0.0f);

  int width() const { return width_; }
  int height() const { return height_; }
  int channels() const { return channels_; }
  Size size() const { return {height_, width_}; }
  bool empty() const { return width_ == 0 || height_ == 0; }

  float& at(int x, int y, int c) {
    return data_[(static_cast<size_t>(y) * width_ + x) * channels_ + c];
  }
  float at(int x, int y, int c) const {
    return data_[(static_cast<size_t>(y) * width_ + x) * channels_ + c];
  }

  std::span<float> data() { return data_; }
  std::span<const float> data() const { return data_; }

  bool operator==(const Image&) const = default;

 private:
  int width_ = 0;
  int height_ = 0;
  int channels_ = 0;
  std::vector<float> data_;
};

// Half-pixel-centre bilinear resampling (align_corners = false). Downscaling
// by an integer factor averages the two nearest source samples per axis.
Image resize_bilinear(const Image& src, Size size);

// Copies `src` into `dst` with its top-left corner at (x0, y0).
void paste(const Image& src, int x0, int y0, Image* dst);

Image crop(const Image& src, int x0, int y0, int width, int height);

// Averages over each factor x factor block. Dimensions must divide evenly.
Image downsample_area(const Image& src, int factor);

// Samples quantized to 8 bit, as written to PNG.
uint8_t to_u8(float v);

// Gray images are replicated to three channels; RGB passes through.
Image to_rgb(const Image& src);

// Mean absolute difference over all samples; images must match in shape.
double mean_abs_error(const Image& a, const Image& b);
double psnr(const Image& a, const Image& b);

// 8-bit PNG I/O. RGB and grayscale are supported; RGBA/palette inputs are
// converted to RGB on read.
Image read_png(const std::filesystem::path& path);
void write_png(const Image& image, const std::filesystem::path& path);
std::vector<uint8_t> encode_png(const Image& image);
Image decode_png(std::span<const uint8_t> bytes);

}  // namespace gridicl

#endif  // GRIDICL_IMAGE_H_
