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

#include "gridicl/image.h"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

#include "gridicl/errors.h"

namespace gridicl {

Image::Image(int width, int height, int channels, float fill)
    : width_(width), height_(height), channels_(channels) {
  if (width < 0 || height < 0 || channels < 1 || channels > 4) {
    throw Error(ErrorKind::kInvalidInput, "bad image shape");
  }
  data_.assign(static_cast<size_t>(width) * height * channels, fill);
}

namespace {

struct Tap {
  int i0;
  int i1;
  float w1;
};

std::vector<Tap> make_taps(int src, int dst) {
  std::vector<Tap> taps(dst);
  const double scale = static_cast<double>(src) / dst;
  for (int i = 0; i < dst; ++i) {
    double x = (i + 0.5) * scale - 0.5;
    x = std::clamp(x, 0.0, static_cast<double>(src - 1));
    const int x0 = static_cast<int>(std::floor(x));
    const int x1 = std::min(x0 + 1, src - 1);
    taps[i] = {x0, x1, static_cast<float>(x - x0)};
  }
  return taps;
}

}  // namespace

Image resize_bilinear(const Image& src, Size size) {
  if (src.empty()) throw Error(ErrorKind::kInvalidInput, "resize of empty image");
  if (size.height <= 0 || size.width <= 0) {
    throw Error(ErrorKind::kInvalidInput, "resize to empty size");
  }
  if (src.size() == size) return src;
  const auto xt = make_taps(src.width(), size.width);
  const auto yt = make_taps(src.height(), size.height);
  const int ch = src.channels();
  Image out(size.width, size.height, ch);
  for (int y = 0; y < size.height; ++y) {
    const Tap& ty = yt[y];
    for (int x = 0; x < size.width; ++x) {
      const Tap& tx = xt[x];
      for (int c = 0; c < ch; ++c) {
        const float top = src.at(tx.i0, ty.i0, c) * (1 - tx.w1) + src.at(tx.i1, ty.i0, c) * tx.w1;
        const float bot = src.at(tx.i0, ty.i1, c) * (1 - tx.w1) + src.at(tx.i1, ty.i1, c) * tx.w1;
        out.at(x, y, c) = top * (1 - ty.w1) + bot * ty.w1;
      }
    }
  }
  return out;
}

void paste(const Image& src, int x0, int y0, Image* dst) {
  if (src.channels() != dst->channels() || x0 < 0 || y0 < 0 ||
      x0 + src.width() > dst->width() || y0 + src.height() > dst->height()) {
    throw Error(ErrorKind::kShape, "paste out of bounds");
  }
  const size_t row = static_cast<size_t>(src.width()) * src.channels();
  for (int y = 0; y < src.height(); ++y) {
    std::memcpy(&dst->at(x0, y0 + y, 0), src.data().data() + y * row, row * sizeof(float));
  }
}

Image crop(const Image& src, int x0, int y0, int width, int height) {
  if (x0 < 0 || y0 < 0 || x0 + width > src.width() || y0 + height > src.height()) {
    throw Error(ErrorKind::kShape, "crop out of bounds");
  }
  Image out(width, height, src.channels());
  const size_t row = static_cast<size_t>(width) * src.channels();
  for (int y = 0; y < height; ++y) {
    std::memcpy(&out.at(0, y, 0),
                src.data().data() + (static_cast<size_t>(y0 + y) * src.width() + x0) * src.channels(),
                row * sizeof(float));
  }
  return out;
}

Image downsample_area(const Image& src, int factor) {
  if (factor < 1 || src.width() % factor != 0 || src.height() % factor != 0) {
    throw Error(ErrorKind::kInvalidInput, "image not divisible by factor");
  }
  const int w = src.width() / factor;
  const int h = src.height() / factor;
  Image out(w, h, src.channels());
  const float norm = 1.0f / static_cast<float>(factor * factor);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < src.channels(); ++c) {
        float acc = 0.0f;
        for (int dy = 0; dy < factor; ++dy) {
          for (int dx = 0; dx < factor; ++dx) {
            acc += src.at(x * factor + dx, y * factor + dy, c);
          }
        }
        out.at(x, y, c) = acc * norm;
      }
    }
  }
  return out;
}

Image to_rgb(const Image& src) {
  if (src.channels() == 3) return src;
  if (src.channels() != 1) throw Error(ErrorKind::kInvalidInput, "expected gray or RGB image");
  Image out(src.width(), src.height(), 3);
  for (int y = 0; y < src.height(); ++y) {
    for (int x = 0; x < src.width(); ++x) {
      for (int c = 0; c < 3; ++c) out.at(x, y, c) = src.at(x, y, 0);
    }
  }
  return out;
}

uint8_t to_u8(float v) {
  const float clamped = std::clamp(v, 0.0f, 1.0f);
  return static_cast<uint8_t>(std::lround(clamped * 255.0f));
}

double mean_abs_error(const Image& a, const Image& b) {
  if (a.width() != b.width() || a.height() != b.height() || a.channels() != b.channels()) {
    throw Error(ErrorKind::kShape, "image shape mismatch");
  }
  double acc = 0.0;
  const auto da = a.data();
  const auto db = b.data();
  for (size_t i = 0; i < da.size(); ++i) acc += std::abs(static_cast<double>(da[i]) - db[i]);
  return da.empty() ? 0.0 : acc / static_cast<double>(da.size());
}

double psnr(const Image& a, const Image& b) {
  if (a.width() != b.width() || a.height() != b.height() || a.channels() != b.channels()) {
    throw Error(ErrorKind::kShape, "image shape mismatch");
  }
  double mse = 0.0;
  const auto da = a.data();
  const auto db = b.data();
  for (size_t i = 0; i < da.size(); ++i) {
    const double d = static_cast<double>(da[i]) - db[i];
    mse += d * d;
  }
  mse /= static_cast<double>(da.size());
  if (mse == 0.0) return INFINITY;
  return 10.0 * std::log10(1.0 / mse);
}

std::vector<uint8_t> encode_png(const Image& image) {
  if (image.empty() || (image.channels() != 1 && image.channels() != 3)) {
    throw Error(ErrorKind::kInvalidInput, "PNG export needs a non-empty gray or RGB image");
  }
  std::vector<uint8_t> pixels(image.data().size());
  std::transform(image.data().begin(), image.data().end(), pixels.begin(), to_u8);

  png_image png{};
  png.version = PNG_IMAGE_VERSION;
  png.width = static_cast<png_uint_32>(image.width());
  png.height = static_cast<png_uint_32>(image.height());
  png.format = image.channels() == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  png_alloc_size_t size = 0;
  if (!png_image_write_to_memory(&png, nullptr, &size, 0, pixels.data(), 0, nullptr)) {
    throw Error(ErrorKind::kIo, std::string("PNG encode failed: ") + png.message);
  }
  std::vector<uint8_t> out(size);
  if (!png_image_write_to_memory(&png, out.data(), &size, 0, pixels.data(), 0, nullptr)) {
    throw Error(ErrorKind::kIo, std::string("PNG encode failed: ") + png.message);
  }
  out.resize(size);
  return out;
}

Image decode_png(std::span<const uint8_t> bytes) {
  png_image png{};
  png.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&png, bytes.data(), bytes.size())) {
    throw Error(ErrorKind::kInvalidInput, std::string("PNG decode failed: ") + png.message);
  }
  const bool gray = (png.format & PNG_FORMAT_FLAG_COLOR) == 0 &&
                    (png.format & PNG_FORMAT_FLAG_ALPHA) == 0;
  png.format = gray ? PNG_FORMAT_GRAY : PNG_FORMAT_RGB;
  const int channels = gray ? 1 : 3;
  std::vector<uint8_t> pixels(PNG_IMAGE_SIZE(png));
  if (!png_image_finish_read(&png, nullptr, pixels.data(), 0, nullptr)) {
    throw Error(ErrorKind::kInvalidInput, std::string("PNG decode failed: ") + png.message);
  }
  Image out(static_cast<int>(png.width), static_cast<int>(png.height), channels);
  if (out.empty()) throw Error(ErrorKind::kInvalidInput, "zero-sized PNG");
  auto data = out.data();
  for (size_t i = 0; i < pixels.size(); ++i) data[i] = pixels[i] / 255.0f;
  return out;
}

Image read_png(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kNotFound, "cannot open " + path.string());
  std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_png(bytes);
}

void write_png(const Image& image, const std::filesystem::path& path) {
  const auto bytes = encode_png(image);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::kIo, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorKind::kIo, "write failed for " + path.string());
}

}  // namespace gridicl
