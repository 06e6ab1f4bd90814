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

#ifndef GRIDICL_EVALUATION_H_
#define GRIDICL_EVALUATION_H_

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "gridicl/annotate.h"
#include "gridicl/attention.h"
#include "gridicl/dataset.h"
#include "gridicl/image.h"

namespace gridicl {

using Embedder = std::function<std::vector<double>(const Image&)>;

inline constexpr int kToyEmbeddingDim = 72;
inline constexpr char kToyEmbedderVersion[] = "toy-embedder-1";
inline constexpr double kMinDirectionNorm = 1e-8;

// 4x4 average-pooled RGB (48 values, pool-cell major then channel) followed
// by 8-bin normalized histograms of R, G and B (24 values).
std::vector<double> toy_embedder(const Image& image);

// Cosine between two direction vectors. Throws kUndefinedDirection if either
// has norm below kMinDirectionNorm, kShape on a length mismatch.
double direction_cosine(const std::vector<double>& u, const std::vector<double>& v);

// cos(E(b') - E(b), E(a') - E(a)).
double direction_similarity(const Image& a, const Image& a_prime, const Image& b,
                            const Image& b_prime, const Embedder& embed);

struct SampleOutcome {
  std::string sample_id;
  TaskTag task = TaskTag::kColorize;
  std::optional<double> similarity;
  std::optional<double> pixel_mae;
  std::string status;  // "ok", "undefined" or "error: ..."
};

struct TaskSummary {
  TaskTag task = TaskTag::kColorize;
  int count = 0;
  int defined = 0;
  int failures = 0;
  double mean_similarity = 0.0;
  double stddev_similarity = 0.0;
  double mean_pixel_mae = 0.0;
};

struct DirectionReport {
  std::vector<SampleOutcome> samples;
  std::vector<TaskSummary> tasks;
  std::string config_digest;
  std::string embedder = kToyEmbedderVersion;
  int failures = 0;
  int undefined = 0;

  const TaskSummary* find(TaskTag task) const;
  nlohmann::json summary_json() const;
};

// Produces B' for a sample; exceptions are recorded per sample.
using SamplePipeline = std::function<Image(const TaskSample&)>;

DirectionReport batch_eval(const std::vector<TaskSample>& samples, const SamplePipeline& pipeline,
                           const Embedder& embed, const std::string& config_digest);

// Columns: sample_id,task,similarity,pixel_mae,status.
void write_report_csv(const DirectionReport& report, const std::filesystem::path& path);

// Loads a dump written by the sampler. `resolution` gives the attention map
// size (the dump header stores heads x positions x columns only).
AttentionScores load_attention_dump(const std::filesystem::path& path, AttentionKind kind,
                                    Size resolution);

// Head-averaged attention from `anchor_row` to every position of `target`,
// reshaped to (h/2, w/2) and min-max normalized to [0, 1]. Uniform rows give
// all zeros.
std::vector<double> heatmap_values(const AttentionScores& scores, int anchor_row,
                                   Quadrant target);

// Fixed blue-cyan-yellow-red colormap.
Color colormap(double v);

// Heatmap image: heatmap_values rendered with colormap() and upsampled
// (nearest) to cell_size.
Image attention_heatmap(const AttentionScores& scores, int anchor_row, Quadrant target,
                        Size cell_size);

// Position of (row, col) in A's quadrant given in latent-quadrant
// coordinates, mapped to a flattened row of an attention map at
// `resolution` whose quadrant A sits at `quadrant_a`.
int anchor_to_row(int row, int col, Size latent_resolution, Size resolution,
                  Quadrant quadrant_a = Quadrant::kTopLeft);

}  // namespace gridicl

#endif  // GRIDICL_EVALUATION_H_
