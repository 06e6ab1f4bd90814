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

#ifndef GRIDICL_PIPELINE_H_
#define GRIDICL_PIPELINE_H_

#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

#include "gridicl/codec.h"
#include "gridicl/config.h"
#include "gridicl/dataset.h"
#include "gridicl/denoiser.h"
#include "gridicl/evaluation.h"
#include "gridicl/sampler.h"
#include "gridicl/trainer.h"

namespace gridicl {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInvalidConfig = 2;
inline constexpr int kExitPipelineError = 3;
inline constexpr int kExitVlmUnreachable = 4;

struct ResolvedPrompt {
  std::string positive;
  std::string source;     // "override", "vlm" or "fallback"
  std::string vlm_error;  // set when the VLM was tried and failed
};

// Override wins; otherwise the VLM is asked when enabled; otherwise, or on
// VLM failure without require_vlm, the empty fallback prompt is used.
// Throws kTransport / kMalformedResponse when require_vlm is set and the
// VLM fails.
ResolvedPrompt resolve_prompt(const RunConfig& config, const ImageGrid& grid);

struct RunResult {
  ImageGrid grid;
  ResolvedPrompt prompt;
  SampleResult sample;
};

// compose -> prompt -> sample for in-memory images.
RunResult run_analogy(const RunConfig& config, const Image& a, const Image& a_prime,
                      const Image& b, const NoisePredictor& predictor, const Codec& codec);

// Manifest: the resolved config under flat keys (prompt fixed to the one
// used, VLM disabled) plus "manifest.*" provenance entries.
nlohmann::json make_manifest(const RunConfig& config, const RunResult& result);

// Each command maps errors to the exit codes above and logs to stderr.
int cmd_run(const RunConfig& config);

int cmd_train(const TrainConfig& config);

struct EvalOptions {
  RunConfig run;  // sampler, surgery, codec, weights and cell size
  int per_task = 20;
  uint64_t data_seed = 0x5eed0e7a1ULL;
  // "task": the task's reference description; "empty": no positive prompt.
  std::string prompt_mode = "task";
  std::filesystem::path out_dir;
};

// Runs the pipeline over make_balanced_dataset(per_task, data_seed, cell).
DirectionReport run_eval(const EvalOptions& options, const NoisePredictor& predictor,
                         const Codec& codec);
// Writes report.csv and report.json into out_dir.
int cmd_eval(const EvalOptions& options);

struct VizOptions {
  RunConfig run;
  int layer = 5;
  int step = 25;  // inference step index whose attention is dumped
  int anchor_row = 3;
  int anchor_col = 7;
};

// Runs with attention dumping, then writes one heatmap PNG per target
// quadrant for the anchor in A.
int cmd_viz(const VizOptions& options);

}  // namespace gridicl

#endif  // GRIDICL_PIPELINE_H_
