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

#ifndef GRIDICL_NETWORK_H_
#define GRIDICL_NETWORK_H_

// Compact inpainting noise predictor: conv stem, K resolution stages of
// (residual block + transformer block) pairs on the way down and up, and a
// conv head. Every layer has an explicit backward pass so the trainer can
// run without an autodiff framework. Templated on the scalar so the
// gradient check can run in double precision.

#include <Eigen/Core>

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "gridicl/attention.h"
#include "gridicl/grid.h"

namespace gridicl {

template <typename T>
using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct NetworkConfig {
  int channels = 64;
  int heads = 4;
  int text_dim = 64;
  int stages = 2;
  int blocks_per_stage = 2;
  int in_channels = 9;
  int out_channels = 4;

  // Encoder and decoder transformer blocks counted jointly, encoder first.
  int block_count() const { return 2 * stages * blocks_per_stage; }
  // Latent sides must be divisible by this for every stage to split into
  // quadrants.
  int spatial_multiple() const { return 2 << (stages - 1); }
  void validate() const;
  bool operator==(const NetworkConfig&) const = default;
};

// Named parameter tensors in registration order.
template <typename T>
struct ParamSet {
  std::vector<std::string> names;
  std::vector<Mat<T>> values;

  int add(std::string name, int rows, int cols);
  size_t scalar_count() const;
  std::vector<Mat<T>> zeros_like() const;
};

// Callback receiving attention maps as the surgery left them: self maps
// after softmax, cross maps after masking.
using AttentionDumpFn = std::function<void(int layer, const AttentionScores&)>;

// Surgery state for one forward pass. A null `surgery` means unhooked.
struct AttentionHooks {
  const SurgeryConfig* surgery = nullptr;
  int timestep = 0;
  // Optional attention export; `want_dump` filters which layers are copied.
  std::function<bool(int layer, AttentionKind kind)> want_dump;
  AttentionDumpFn dump;
};

// Opaque activation record filled by Network::forward for backward().
template <typename T>
class NetworkCache {
 public:
  NetworkCache();
  ~NetworkCache();
  NetworkCache(NetworkCache&&) noexcept;
  NetworkCache& operator=(NetworkCache&&) noexcept;

  struct Impl;
  Impl& impl() { return *impl_; }
  const Impl& impl() const { return *impl_; }

 private:
  std::unique_ptr<Impl> impl_;
};

struct NetworkLayout;

template <typename T>
class Network {
 public:
  explicit Network(const NetworkConfig& config);

  const NetworkConfig& config() const { return config_; }
  ParamSet<T>& params() { return params_; }
  const ParamSet<T>& params() const { return params_; }

  enum class Init {
    kTraining,   // zero output head, the rest scaled-normal
    kRandomAll,  // every tensor random, for gradient checks
    kZero,
  };
  void init(uint64_t seed, Init scheme);

  // input: (h*w) x 9 row-major positions; text: L x text_dim.
  // Returns (h*w) x 4. When `cache` is non-null, activations needed by
  // backward() are recorded; surgery must then be off.
  Mat<T> forward(const Mat<T>& input, int h, int w, int timestep, const Mat<T>& text,
                 const AttentionHooks* hooks, NetworkCache<T>* cache) const;

  // Accumulates parameter gradients of <d_out, output> into `grads`.
  void backward(const NetworkCache<T>& cache, const Mat<T>& d_out,
                std::vector<Mat<T>>* grads) const;

  // Copies parameters into a network of another scalar type.
  template <typename U>
  Network<U> cast() const {
    Network<U> out(config_);
    for (size_t i = 0; i < params_.values.size(); ++i) {
      out.params().values[i] = params_.values[i].template cast<U>();
    }
    return out;
  }

 private:
  NetworkConfig config_;
  ParamSet<T> params_;
  std::shared_ptr<const NetworkLayout> layout_;
};

template <typename T>
struct AttentionWeights {
  const Mat<T>* query;
  const Mat<T>* key;
  const Mat<T>* value;
  const Mat<T>* out;
};

// Multi-head scaled dot-product self-attention over an (h, w) feature map
// (x: positions x channels). Clones pre-softmax scores when the gate opens.
template <typename T>
Mat<T> self_attention_block(const Mat<T>& x, Size resolution, const AttentionWeights<T>& weights,
                            int heads, int layer_idx, const AttentionHooks* hooks);

// Queries from x, keys and values from text. Masks post-softmax rows when
// the gate opens.
template <typename T>
Mat<T> cross_attention_block(const Mat<T>& x, Size resolution, const Mat<T>& text,
                             const AttentionWeights<T>& weights, int heads, int layer_idx,
                             const AttentionHooks* hooks);

// Sinusoidal embedding of a scalar timestep into `dim` features.
template <typename T>
Mat<T> timestep_embedding(int timestep, int dim);

// Fixed 2D sinusoidal encoding over normalized cell coordinates.
template <typename T>
Mat<T> position_embedding(int h, int w, int dim);

}  // namespace gridicl

#endif  // GRIDICL_NETWORK_H_
