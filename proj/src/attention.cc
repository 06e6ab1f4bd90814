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

#include "gridicl/attention.h"

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/Core>

namespace gridicl {

AttentionScores AttentionScores::self(int heads, Size resolution) {
  AttentionScores s;
  s.kind = AttentionKind::kSelf;
  s.heads = heads;
  s.resolution = resolution;
  s.values.assign(static_cast<size_t>(heads) * s.head_stride(), 0.0f);
  return s;
}

AttentionScores AttentionScores::cross(int heads, Size resolution, int text_len) {
  AttentionScores s;
  s.kind = AttentionKind::kCross;
  s.heads = heads;
  s.resolution = resolution;
  s.text_len = text_len;
  s.values.assign(static_cast<size_t>(heads) * s.head_stride(), 0.0f);
  return s;
}

void SurgeryConfig::validate(int block_count, int train_steps) const {
  if (!(s > 0.0) || !std::isfinite(s)) {
    throw Error(ErrorKind::kInvalidConfig, "clone coefficient s must be positive");
  }
  if (layer_first < 0 || layer_last >= block_count || layer_first > layer_last) {
    throw Error(ErrorKind::kInvalidConfig,
                "layer window [" + std::to_string(layer_first) + ", " +
                    std::to_string(layer_last) + "] outside 0.." + std::to_string(block_count - 1));
  }
  if (t_min < 0 || t_max > train_steps || t_min > t_max) {
    throw Error(ErrorKind::kInvalidConfig, "timestep window outside [0, T]");
  }
}

Gate gate(int layer_idx, int timestep, const SurgeryConfig& cfg) {
  const bool in_window = layer_idx >= cfg.layer_first && layer_idx <= cfg.layer_last &&
                         timestep >= cfg.t_min && timestep <= cfg.t_max;
  return {cfg.sac_enabled && in_window, cfg.cam_enabled && in_window};
}

template <typename T>
void softmax_rows(T* data, int rows, int cols) {
  using RowArray = Eigen::Array<T, 1, Eigen::Dynamic>;
  for (int r = 0; r < rows; ++r) {
    Eigen::Map<RowArray> row(data + static_cast<size_t>(r) * cols, cols);
    row = (row - row.maxCoeff()).exp();
    row *= T(1) / row.sum();
  }
}

namespace {

template <typename T>
void copy_block(T* scores, int n, const std::vector<int>& dst_rows,
                const std::vector<int>& dst_cols, const std::vector<int>& src_rows,
                const std::vector<int>& src_cols, T s) {
  // Quadrant sets are equal-sized and in matching row-major order, so the
  // k-th entry of one set corresponds spatially to the k-th of another.
  for (size_t i = 0; i < dst_rows.size(); ++i) {
    T* dst = scores + static_cast<size_t>(dst_rows[i]) * n;
    const T* src = scores + static_cast<size_t>(src_rows[i]) * n;
    for (size_t j = 0; j < dst_cols.size(); ++j) dst[dst_cols[j]] = src[src_cols[j]] * s;
  }
}

void check_resolution(const AttentionScores& scores, const RegionIndexMap& idx) {
  if (scores.resolution != idx.resolution()) {
    throw Error(ErrorKind::kIndex, "index map resolution does not match attention map");
  }
  if (scores.values.size() != static_cast<size_t>(scores.heads) * scores.head_stride()) {
    throw Error(ErrorKind::kShape, "attention tensor size does not match its header");
  }
}

}  // namespace

template <typename T>
void clone_block_inplace(T* scores, int positions, const RegionIndexMap& idx, T s,
                         bool symmetric) {
  if (positions != idx.resolution().height * idx.resolution().width) {
    throw Error(ErrorKind::kIndex, "index map resolution does not match attention map");
  }
  // The destination block never overlaps its source block, so in-place
  // copying reads only original values.
  copy_block(scores, positions, idx.role(Role::kAPrime), idx.role(Role::kBPrime),
             idx.role(Role::kA), idx.role(Role::kB), s);
  if (symmetric) {
    copy_block(scores, positions, idx.role(Role::kBPrime), idx.role(Role::kAPrime),
               idx.role(Role::kB), idx.role(Role::kA), s);
  }
}

template <typename T>
void mask_rows_inplace(T* weights, int positions, int cols, const RegionIndexMap& idx) {
  if (positions != idx.resolution().height * idx.resolution().width) {
    throw Error(ErrorKind::kIndex, "index map resolution does not match attention map");
  }
  for (Role r : {Role::kA, Role::kAPrime, Role::kB}) {
    for (int row : idx.role(r)) {
      std::fill_n(weights + static_cast<size_t>(row) * cols, cols, T(0));
    }
  }
}

AttentionScores clone_self_attention(const AttentionScores& scores, const RegionIndexMap& idx,
                                     double s, bool symmetric) {
  if (scores.kind != AttentionKind::kSelf) {
    throw Error(ErrorKind::kInvalidInput, "cloning needs self-attention scores");
  }
  if (!(s > 0.0)) throw Error(ErrorKind::kInvalidConfig, "clone coefficient s must be positive");
  check_resolution(scores, idx);
  AttentionScores out = scores;
  const int n = out.positions();
  for (int h = 0; h < out.heads; ++h) {
    clone_block_inplace(out.values.data() + h * out.head_stride(), n, idx,
                        static_cast<float>(s), symmetric);
  }
  return out;
}

AttentionScores mask_cross_attention(const AttentionScores& weights, const RegionIndexMap& idx) {
  if (weights.kind != AttentionKind::kCross) {
    throw Error(ErrorKind::kInvalidInput, "masking needs cross-attention weights");
  }
  check_resolution(weights, idx);
  AttentionScores out = weights;
  for (int h = 0; h < out.heads; ++h) {
    mask_rows_inplace(out.values.data() + h * out.head_stride(), out.positions(), out.cols(),
                      idx);
  }
  return out;
}

template void softmax_rows<float>(float*, int, int);
template void softmax_rows<double>(double*, int, int);
template void clone_block_inplace<float>(float*, int, const RegionIndexMap&, float, bool);
template void clone_block_inplace<double>(double*, int, const RegionIndexMap&, double, bool);
template void mask_rows_inplace<float>(float*, int, int, const RegionIndexMap&);
template void mask_rows_inplace<double>(double*, int, int, const RegionIndexMap&);

}  // namespace gridicl
