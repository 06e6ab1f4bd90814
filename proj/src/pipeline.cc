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

#include "gridicl/pipeline.h"

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>

#include "gridicl/annotate.h"
#include "gridicl/errors.h"
#include "gridicl/prompting.h"
#include "gridicl/tensor_file.h"
#include "gridicl/text_encoder.h"

namespace gridicl {

namespace {

using Clock = std::chrono::steady_clock;

void log_line(const std::string& msg) { std::cerr << "[gridicl] " << msg << "\n"; }

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

void write_json(const nlohmann::json& j, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::kIo, "cannot write " + path.string());
  out << j.dump(2) << "\n";
}

std::string file_sha256(const std::filesystem::path& path) {
  const std::vector<uint8_t> bytes = read_file_bytes(path);
  return sha256_hex(std::string(bytes.begin(), bytes.end()));
}

int exit_code_for(const Error& e, const RunConfig& config) {
  switch (e.kind()) {
    case ErrorKind::kInvalidConfig: return kExitInvalidConfig;
    case ErrorKind::kTransport:
    case ErrorKind::kMalformedResponse:
      return config.require_vlm ? kExitVlmUnreachable : kExitPipelineError;
    default: return kExitPipelineError;
  }
}

PromptBundle bundle_for(const NoisePredictor& predictor, const std::string& positive,
                        const std::string& negative) {
  const ToyTextEncoder encoder(kDefaultTextLength, predictor.text_dim());
  return make_prompt_bundle(encoder, positive, negative);
}

}  // namespace

ResolvedPrompt resolve_prompt(const RunConfig& config, const ImageGrid& grid) {
  if (config.prompt) return {*config.prompt, "override", ""};
  ResolvedPrompt r{"", "fallback", ""};
  if (config.use_vlm) {
    VlmEndpoint ep = config.vlm;
    const VlmEndpoint env = endpoint_from_env();
    if (ep.url.empty()) ep.url = env.url;
    if (ep.model == VlmEndpoint().model) ep.model = env.model;
    ep.api_key = env.api_key;
    try {
      r.positive = request_prompt(ep, annotate_grid(grid), build_instruction());
      r.source = "vlm";
      return r;
    } catch (const Error& e) {
      if (config.require_vlm) throw;
      r.vlm_error = e.what();
      log_line(std::string("VLM request failed, continuing without it: ") + e.what());
    }
  }
  log_line("WARNING: no positive prompt; using the empty fallback prompt");
  return r;
}

RunResult run_analogy(const RunConfig& config, const Image& a, const Image& a_prime,
                      const Image& b, const NoisePredictor& predictor, const Codec& codec) {
  RunResult r;
  r.grid = compose_grid(a, a_prime, b, config.layout(), config.cell);
  r.prompt = resolve_prompt(config, r.grid);
  const PromptBundle prompts = bundle_for(predictor, r.prompt.positive, config.negative);
  r.sample = sample(r.grid, prompts, predictor, codec, config.sampler);
  return r;
}

nlohmann::json make_manifest(const RunConfig& config, const RunResult& result) {
  RunConfig resolved = config;
  resolved.prompt = result.prompt.positive;
  resolved.use_vlm = false;
  resolved.require_vlm = false;
  nlohmann::json m = resolved.to_json();
  m["manifest.tool"] = "gridicl";
  m["manifest.format"] = 1;
  m["manifest.config_digest"] = resolved.digest();
  m["manifest.prompt_source"] = result.prompt.source;
  if (!result.prompt.vlm_error.empty()) m["manifest.vlm_error"] = result.prompt.vlm_error;
  m["manifest.seed"] = config.sampler.seed;
  m["manifest.sample_seconds"] = result.sample.seconds;
  return m;
}

int cmd_run(const RunConfig& config) {
  const auto started = Clock::now();
  try {
    config.validate(true);
    if (config.out.empty()) throw Error(ErrorKind::kInvalidConfig, "no output directory given");
  } catch (const Error& e) {
    log_line(std::string("invalid configuration: ") + e.what());
    return kExitInvalidConfig;
  }
  try {
    const Image a = read_png(config.a);
    const Image a_prime = read_png(config.a_prime);
    const Image b = read_png(config.b);
    const Denoiser model = Denoiser::load(config.weights);
    const auto codec = make_codec(config.codec);
    log_line("sampling " + std::to_string(config.sampler.steps) + " steps at cell " +
             std::to_string(config.cell.height) + "x" + std::to_string(config.cell.width));
    const RunResult result = run_analogy(config, a, a_prime, b, model, *codec);

    std::filesystem::create_directories(config.out);
    write_png(result.sample.b_prime, config.out / "b_prime.png");
    write_png(result.sample.full_grid, config.out / "grid.png");
    write_png(result.grid.grid_image, config.out / "input_grid.png");
    nlohmann::json manifest = make_manifest(config, result);
    manifest["manifest.weights_sha256"] = file_sha256(config.weights / "weights.bin");
    manifest["manifest.total_seconds"] = seconds_since(started);
    write_json(manifest, config.out / "manifest.json");
    log_line("wrote " + (config.out / "b_prime.png").string() + " (prompt source: " +
             result.prompt.source + ")");
    return kExitOk;
  } catch (const Error& e) {
    log_line(std::string("run failed: ") + e.what());
    return exit_code_for(e, config);
  } catch (const std::exception& e) {
    log_line(std::string("run failed: ") + e.what());
    return kExitPipelineError;
  }
}

int cmd_train(const TrainConfig& config) {
  try {
    config.network.validate();
    if (config.out_dir.empty()) throw Error(ErrorKind::kInvalidConfig, "no output directory given");
  } catch (const Error& e) {
    log_line(std::string("invalid configuration: ") + e.what());
    return kExitInvalidConfig;
  }
  try {
    log_line("training " + std::to_string(config.steps) + " steps, batch " +
             std::to_string(config.batch) + ", into " + config.out_dir.string());
    double window = 0.0;
    int window_n = 0;
    train(config, [&](const TrainProgress& p) {
      window += p.loss;
      ++window_n;
      if (p.step % 100 == 0 || p.step == config.steps) {
        char buf[128];
        std::snprintf(buf, sizeof(buf), "step %d  loss %.5f  (%.1f s)", p.step, window / window_n,
                      p.seconds);
        log_line(buf);
        window = 0.0;
        window_n = 0;
      }
    });
    return kExitOk;
  } catch (const Error& e) {
    log_line(std::string("training failed: ") + e.what());
    return e.kind() == ErrorKind::kInvalidConfig ? kExitInvalidConfig : kExitPipelineError;
  }
}

DirectionReport run_eval(const EvalOptions& options, const NoisePredictor& predictor,
                         const Codec& codec) {
  const RunConfig& run = options.run;
  if (options.prompt_mode != "task" && options.prompt_mode != "empty") {
    throw Error(ErrorKind::kInvalidConfig, "prompt mode must be 'task' or 'empty'");
  }
  const std::vector<TaskSample> samples =
      make_balanced_dataset(options.per_task, options.data_seed, run.cell);
  const ToyTextEncoder encoder(kDefaultTextLength, predictor.text_dim());
  const TextEmbedding negative = encoder.encode(run.negative);
  const TextEmbedding empty = encoder.encode("");
  std::vector<TextEmbedding> task_text;
  for (TaskTag t : kAllTasks) task_text.push_back(encoder.encode(task_prompt(t)));

  int done = 0;
  const auto started = Clock::now();
  auto pipeline = [&](const TaskSample& s) {
    const ImageGrid grid = compose_grid(s.a, s.a_prime, s.b, run.layout(), run.cell);
    PromptBundle prompts;
    prompts.positive = options.prompt_mode == "task" ? s.prompt : "";
    prompts.negative = run.negative;
    prompts.positive_emb =
        options.prompt_mode == "task" ? task_text[static_cast<int>(s.task)] : empty;
    prompts.negative_emb = negative;
    Image out = sample(grid, prompts, predictor, codec, run.sampler).b_prime;
    if (++done % 10 == 0) {
      char buf[96];
      std::snprintf(buf, sizeof(buf), "evaluated %d/%zu samples (%.0f s)", done, samples.size(),
                    seconds_since(started));
      log_line(buf);
    }
    return out;
  };
  nlohmann::json digest_src = {{"run", run.digest()},
                               {"per_task", options.per_task},
                               {"data_seed", options.data_seed},
                               {"prompt_mode", options.prompt_mode},
                               {"embedder", kToyEmbedderVersion}};
  return batch_eval(samples, pipeline, toy_embedder, sha256_hex(digest_src.dump()));
}

int cmd_eval(const EvalOptions& options) {
  try {
    options.run.validate(false);
    if (options.per_task < 1) throw Error(ErrorKind::kInvalidConfig, "--n must be >= 1");
    if (options.out_dir.empty()) throw Error(ErrorKind::kInvalidConfig, "no output directory");
    if (!std::filesystem::exists(options.run.weights / "weights.json")) {
      throw Error(ErrorKind::kInvalidConfig,
                  "no checkpoint at '" + options.run.weights.string() + "'");
    }
  } catch (const Error& e) {
    log_line(std::string("invalid configuration: ") + e.what());
    return kExitInvalidConfig;
  }
  try {
    const Denoiser model = Denoiser::load(options.run.weights);
    const auto codec = make_codec(options.run.codec);
    const DirectionReport report = run_eval(options, model, *codec);
    std::filesystem::create_directories(options.out_dir);
    write_report_csv(report, options.out_dir / "report.csv");
    nlohmann::json summary = report.summary_json();
    summary["config"] = options.run.to_json();
    summary["per_task"] = options.per_task;
    summary["data_seed"] = options.data_seed;
    summary["prompt_mode"] = options.prompt_mode;
    write_json(summary, options.out_dir / "report.json");
    for (const TaskSummary& s : report.tasks) {
      std::printf("%-20s n=%d defined=%d similarity %.4f +- %.4f  pixel_mae %.4f\n",
                  std::string(task_name(s.task)).c_str(), s.count, s.defined, s.mean_similarity,
                  s.stddev_similarity, s.mean_pixel_mae);
    }
    if (report.failures > 0) log_line(std::to_string(report.failures) + " samples failed");
    return kExitOk;
  } catch (const Error& e) {
    log_line(std::string("evaluation failed: ") + e.what());
    return e.kind() == ErrorKind::kInvalidConfig ? kExitInvalidConfig : kExitPipelineError;
  }
}

int cmd_viz(const VizOptions& options) {
  RunConfig run = options.run;
  try {
    run.validate(true);
    if (run.out.empty()) throw Error(ErrorKind::kInvalidConfig, "no output directory given");
    if (options.step < 0 || options.step >= run.sampler.steps) {
      throw Error(ErrorKind::kInvalidConfig, "--t must be an inference step index in [0, " +
                                                 std::to_string(run.sampler.steps) + ")");
    }
  } catch (const Error& e) {
    log_line(std::string("invalid configuration: ") + e.what());
    return kExitInvalidConfig;
  }
  run.sampler.dump_dir = run.out / "attention";
  run.sampler.dump_attention_step = options.step;
  run.sampler.dump_attention_layers = {options.layer};
  try {
    const Denoiser model = Denoiser::load(run.weights);
    if (options.layer < 0 || options.layer >= model.block_count()) {
      throw Error(ErrorKind::kInvalidConfig, "--layer must be in [0, " +
                                                 std::to_string(model.block_count()) + ")");
    }
    const auto codec = make_codec(run.codec);
    const RunResult result =
        run_analogy(run, read_png(run.a), read_png(run.a_prime), read_png(run.b), model, *codec);
    write_png(result.sample.b_prime, run.out / "b_prime.png");

    std::ifstream index_in(run.sampler.dump_dir / "attention_index.json");
    if (!index_in) throw Error(ErrorKind::kNotFound, "no attention was dumped");
    const nlohmann::json index = nlohmann::json::parse(index_in);
    const nlohmann::json* entry = nullptr;
    for (const auto& e : index) {
      if (e["layer"] == options.layer && e["kind"] == "self") entry = &e;
    }
    if (entry == nullptr) {
      throw Error(ErrorKind::kNotFound,
                  "no self-attention dump for layer " + std::to_string(options.layer));
    }
    const Size res = {(*entry)["height"].get<int>(), (*entry)["width"].get<int>()};
    const AttentionScores scores = load_attention_dump(
        run.sampler.dump_dir / (*entry)["file"].get<std::string>(), AttentionKind::kSelf, res);
    const Size latent = result.sample.final_latent.resolution();
    const int row = anchor_to_row(options.anchor_row, options.anchor_col, latent, res,
                                  run.layout().quadrant_of(Role::kA));
    for (Quadrant q : kAllQuadrants) {
      const std::string name = "heatmap_L" + std::to_string(options.layer) + "_step" +
                               std::to_string(options.step) + "_" +
                               std::string(quadrant_name(q)) + ".png";
      write_png(attention_heatmap(scores, row, q, run.cell), run.out / name);
      log_line("wrote " + (run.out / name).string());
    }
    return kExitOk;
  } catch (const Error& e) {
    log_line(std::string("viz failed: ") + e.what());
    return exit_code_for(e, run);
  }
}

}  // namespace gridicl
