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

#ifndef GRIDICL_ATTENTION_H_
#define GRIDICL_ATTENTION_H_

#include <cstddef>
#include <span>
#include <vector>

#include "gridicl/errors.h"
#include "gridicl/grid.h"

namespace gridicl {

enum class AttentionKind { kSelf, kCross };

// Per-head score or weight matrices, stored head-major then row-major.
// Self: heads x hw x hw pre-softmax scores. Cross: heads x hw x L
// post-softmax weights.
struct AttentionScores {
  AttentionKind kind = AttentionKind::kSelf;
  int heads = 0;
  Size resolution;
  int text_len = 0;
  std::vector<float> values;

  int positions() const { return resolution.height * resolution.width; }
  int cols() const { return kind == AttentionKind::kSelf ? positions() : text_len; }
  size_t head_stride() const { return static_cast<size_t>(positions()) * cols(); }
  float& at(int head, int row, int col) {
    return values[head * head_stride() + static_cast<size_t>(row) * cols() + col];
  }
  float at(int head, int row, int col) const {
    return values[head * head_stride() + static_cast<size_t>(row) * cols() + col];
  }

  static AttentionScores self(int heads, Size resolution);
  static AttentionScores cross(int heads, Size resolution, int text_len);
};

struct SurgeryConfig {
  bool sac_enabled = true;
  bool cam_enabled = true;
  double s = 1.3;
  // Inclusive block-index window. 1..5 of 8 toy blocks is the proportional
  // image of the 3..10 window on a 16-block UNet.
  int layer_first = 1;
  int layer_last = 5;
  // Inclusive timestep window; the default covers every timestep.
  int t_min = 0;
  int t_max = 1000;
  // Also clone (B', A') from (B, A).
  bool symmetric_clone = false;

  // Throws kInvalidConfig when s <= 0 or a window falls outside the model.
  void validate(int block_count, int train_steps) const;
};

inline constexpr double kDefaultCloneScale = 1.3;
inline constexpr double kSkeletonCloneScale = 1.4;

struct Gate {
  bool apply_sac = false;
  bool apply_cam = false;
  bool operator==(const Gate&) const = default;
};

Gate gate(int layer_idx, int timestep, const SurgeryConfig& cfg);

// Overwrites the (A', B') block with s times the (A, B) block in every head.
AttentionScores clone_self_attention(const AttentionScores& scores, const RegionIndexMap& idx,
                                     double s, bool symmetric);

// Zeroes every row whose query lies outside B'.
AttentionScores mask_cross_attention(const AttentionScores& weights, const RegionIndexMap& idx);

// Row-wise softmax in place over a rows x cols row-major matrix.
template <typename T>
void softmax_rows(T* data, int rows, int cols);

// In-place single-head kernels shared with the denoiser. `scores` is a
// positions x positions row-major matrix; `weights` is positions x cols.
template <typename T>
void clone_block_inplace(T* scores, int positions, const RegionIndexMap& idx, T s,
                         bool symmetric);
template <typename T>
void mask_rows_inplace(T* weights, int positions, int cols, const RegionIndexMap& idx);

}  // namespace gridicl

#endif  // GRIDICL_ATTENTION_H_
