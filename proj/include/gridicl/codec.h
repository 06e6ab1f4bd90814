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

#ifndef GRIDICL_CODEC_H_
#define GRIDICL_CODEC_H_

#include <memory>
#include <string>

#include "gridicl/image.h"
#include "gridicl/latent.h"

namespace gridicl {

// Image <-> latent mapping. An external VAE can be adapted by implementing
// this interface with the same 4-channel latent contract.
class Codec {
 public:
  virtual ~Codec() = default;
  virtual std::string name() const = 0;
  virtual int scale_factor() const = 0;
  // Throws kInvalidInput when the image sides are not multiples of
  // scale_factor().
  virtual LatentTensor encode(const Image& image) const = 0;
  // Batch entry 0 is decoded; output is clamped to [0, 1].
  virtual Image decode(const LatentTensor& latent) const = 0;
};

// Box-filter downsample of RGB by `factor` into channels 0-2 with a zero
// fourth channel; decode upsamples channels 0-2 bilinearly.
class BilinearCodec final : public Codec {
 public:
  explicit BilinearCodec(int factor = 8) : factor_(factor) {}
  std::string name() const override { return "bilinear"; }
  int scale_factor() const override { return factor_; }
  LatentTensor encode(const Image& image) const override;
  Image decode(const LatentTensor& latent) const override;

 private:
  int factor_;
};

// Space-to-depth by 2 (12 values per block) followed by a fixed orthonormal
// 12 -> 4 projection: the three per-channel block means and one horizontal
// luminance detail. Decoding applies the transpose, so encode(decode(z)) == z
// for in-range z, and images constant over 2x2 blocks round-trip exactly.
class SpaceToDepthCodec final : public Codec {
 public:
  std::string name() const override { return "space_to_depth"; }
  int scale_factor() const override { return 2; }
  LatentTensor encode(const Image& image) const override;
  Image decode(const LatentTensor& latent) const override;
};

std::unique_ptr<Codec> make_codec(const std::string& name);

}  // namespace gridicl

#endif  // GRIDICL_CODEC_H_
