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

// gridicl command-line entry point: compose, annotate, run, train, eval, viz
// and a mock vision-language endpoint.

#include <csignal>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "gridicl/annotate.h"
#include "gridicl/config.h"
#include "gridicl/errors.h"
#include "gridicl/mock_vlm.h"
#include "gridicl/pipeline.h"
#include "gridicl/trainer.h"
#include "gridicl/weights.h"

#ifndef GRIDICL_DEFAULT_CHECKPOINT
#define GRIDICL_DEFAULT_CHECKPOINT ""
#endif

namespace {

using gridicl::RunConfig;

// Flags shared by run, eval and viz. Unset flags leave the config file (or
// default) value alone.
struct RunFlags {
  std::string config;
  std::optional<std::string> a, a_prime, b, out, weights, prompt, negative, codec;
  std::optional<std::string> vlm_url, vlm_model, dump_dir;
  std::optional<int> cell, steps, layer_first, layer_last, t_min, t_max, retries;
  std::optional<int> dump_latent_every;
  std::optional<uint64_t> seed;
  std::optional<double> cfg_scale, s, timeout, vlm_timeout;
  bool swap_layout = false, no_sac = false, no_cam = false, symmetric = false;
  bool use_vlm = false, require_vlm = false, pure_noise = false, cond_pasted = false;
  bool ancestral = false, latent_paste = false;

  void add_to(CLI::App* app, bool with_images) {
    app->add_option("--config", config, "JSON config or run manifest (flat dotted keys)");
    if (with_images) {
      app->add_option("--a", a, "example source image A");
      app->add_option("--a-prime", a_prime, "example target image A'");
      app->add_option("--b", b, "query image B");
    }
    app->add_option("--out", out, "output directory");
    app->add_option("--weights,--ckpt", weights, "checkpoint directory");
    app->add_option("--prompt", prompt, "positive prompt (skips the VLM)");
    app->add_option("--negative", negative, "negative prompt");
    app->add_option("--codec", codec, "bilinear or space_to_depth");
    app->add_option("--cell", cell, "cell size in pixels (square)");
    app->add_option("--steps", steps, "inference steps");
    app->add_option("--seed", seed, "sampler seed");
    app->add_option("--cfg-scale", cfg_scale, "classifier-free guidance scale");
    app->add_option("--s", s, "self-attention cloning coefficient");
    app->add_option("--layer-first", layer_first, "first block index with surgery");
    app->add_option("--layer-last", layer_last, "last block index with surgery");
    app->add_option("--t-min", t_min, "lowest timestep with surgery");
    app->add_option("--t-max", t_max, "highest timestep with surgery");
    app->add_option("--timeout", timeout, "sampling wall-clock budget in seconds");
    app->add_option("--dump-dir", dump_dir, "directory for debug dumps");
    app->add_option("--dump-latent-every", dump_latent_every, "dump the latent every k steps");
    app->add_flag("--swap-layout", swap_layout, "place A' at bottom-left and B at top-right");
    app->add_flag("--no-sac", no_sac, "disable self-attention cloning");
    app->add_flag("--no-cam", no_cam, "disable cross-attention masking");
    app->add_flag("--symmetric-clone", symmetric, "also clone the (B', A') block");
    app->add_flag("--pure-noise-init", pure_noise, "start from pure noise");
    app->add_flag("--condition-on-pasted", cond_pasted, "condition on the query-pasted grid");
    app->add_flag("--ancestral", ancestral, "stochastic ancestral sampling");
    app->add_flag("--latent-paste", latent_paste, "re-impose known latents every step");
    app->add_flag("--use-vlm", use_vlm, "ask the VLM endpoint for the prompt");
    app->add_flag("--require-vlm", require_vlm, "fail (exit 4) when the VLM is unreachable");
    app->add_option("--vlm-url", vlm_url, "chat-completions URL (else ANALOGIST_VLM_URL)");
    app->add_option("--vlm-model", vlm_model, "model name (else ANALOGIST_VLM_MODEL)");
    app->add_option("--vlm-timeout", vlm_timeout, "VLM request timeout in seconds");
    app->add_option("--vlm-retries", retries, "VLM retries after the first attempt");
  }

  RunConfig resolve(RunConfig base) const {
    RunConfig c = config.empty() ? base : gridicl::load_run_config(config, base);
    auto& sc = c.sampler.surgery;
    if (a) c.a = *a;
    if (a_prime) c.a_prime = *a_prime;
    if (b) c.b = *b;
    if (out) c.out = *out;
    if (weights) c.weights = *weights;
    if (prompt) c.prompt = *prompt;
    if (negative) c.negative = *negative;
    if (codec) c.codec = *codec;
    if (cell) c.cell = {*cell, *cell};
    if (steps) c.sampler.steps = *steps;
    if (seed) c.sampler.seed = *seed;
    if (cfg_scale) c.sampler.cfg_scale = *cfg_scale;
    if (s) sc.s = *s;
    if (layer_first) sc.layer_first = *layer_first;
    if (layer_last) sc.layer_last = *layer_last;
    if (t_min) sc.t_min = *t_min;
    if (t_max) sc.t_max = *t_max;
    if (timeout) c.sampler.timeout_seconds = *timeout;
    if (dump_dir) c.sampler.dump_dir = *dump_dir;
    if (dump_latent_every) c.sampler.dump_latent_every = *dump_latent_every;
    if (swap_layout) c.swap_layout = true;
    if (no_sac) sc.sac_enabled = false;
    if (no_cam) sc.cam_enabled = false;
    if (symmetric) sc.symmetric_clone = true;
    if (pure_noise) c.sampler.init_from_pasted = false;
    if (cond_pasted) c.sampler.condition_on_pasted = true;
    if (ancestral) c.sampler.ancestral = true;
    if (latent_paste) c.sampler.latent_paste = true;
    if (use_vlm) c.use_vlm = true;
    if (require_vlm) c.use_vlm = c.require_vlm = true;
    if (vlm_url) c.vlm.url = *vlm_url;
    if (vlm_model) c.vlm.model = *vlm_model;
    if (vlm_timeout) c.vlm.timeout_seconds = *vlm_timeout;
    if (retries) c.vlm.retries = *retries;
    if (c.weights.empty()) c.weights = GRIDICL_DEFAULT_CHECKPOINT;
    return c;
  }
};

// Cell size the checkpoint was trained at, when recorded.
std::optional<int> checkpoint_cell(const std::filesystem::path& weights) {
  try {
    const gridicl::WeightFile f = gridicl::load_weight_file(weights);
    const auto& cfg = f.meta.at("train").at("config");
    return cfg.at("cell_height").get<int>();
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

gridicl::MockVlmServer* g_mock = nullptr;

void stop_mock(int) {
  if (g_mock != nullptr) g_mock->stop();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"gridicl: visual in-context learning by grid inpainting with attention surgery"};
  app.require_subcommand(1);

  // compose / annotate
  std::string c_a, c_ap, c_b, c_out;
  int c_cell = 256;
  bool c_swap = false;
  CLI::App* compose = app.add_subcommand("compose", "build the 2x2 grid, mask and annotated grid");
  compose->add_option("--a", c_a, "example source image A")->required();
  compose->add_option("--a-prime", c_ap, "example target image A'")->required();
  compose->add_option("--b", c_b, "query image B")->required();
  compose->add_option("--out", c_out, "output directory")->required();
  compose->add_option("--cell", c_cell, "cell size in pixels");
  compose->add_flag("--swap-layout", c_swap, "place A' at bottom-left and B at top-right");

  RunFlags run_flags;
  CLI::App* run = app.add_subcommand("run", "synthesize B' for one analogy");
  run_flags.add_to(run, true);

  RunFlags viz_flags;
  int viz_layer = 5, viz_t = 25;
  std::string viz_anchor = "3,7";
  CLI::App* viz = app.add_subcommand("viz", "run with attention dumps and render heatmaps");
  viz_flags.add_to(viz, true);
  viz->add_option("--layer", viz_layer, "block index to visualize");
  viz->add_option("--t", viz_t, "inference step index to visualize");
  viz->add_option("--anchor", viz_anchor, "row,col of the anchor inside A (latent quadrant units)");

  RunFlags eval_flags;
  int eval_n = 20;
  std::optional<uint64_t> eval_data_seed;
  std::string eval_prompt_mode = "task";
  CLI::App* eval = app.add_subcommand("eval", "direction-similarity evaluation on synthetic tasks");
  eval_flags.add_to(eval, false);
  eval->add_option("--n", eval_n, "samples per task");
  eval->add_option("--data-seed", eval_data_seed, "seed of the held-out synthetic set");
  eval->add_option("--prompt-mode", eval_prompt_mode, "task or empty");

  gridicl::TrainConfig train_cfg;
  std::string train_config_file, train_out, train_resume;
  std::optional<int> t_steps, t_batch, t_cell, t_channels, t_every, t_pool;
  std::optional<double> t_lr;
  std::optional<uint64_t> t_seed;
  CLI::App* train = app.add_subcommand("train", "train the toy denoiser on synthetic analogies");
  train->add_option("--config", train_config_file, "training config JSON");
  train->add_option("--out", train_out, "checkpoint directory")->required();
  train->add_option("--resume", train_resume, "checkpoint directory to resume from");
  train->add_option("--steps", t_steps, "optimizer steps");
  train->add_option("--batch", t_batch, "batch size");
  train->add_option("--lr", t_lr, "learning rate");
  train->add_option("--seed", t_seed, "data, noise and init seed");
  train->add_option("--cell", t_cell, "cell size in pixels");
  train->add_option("--channels", t_channels, "base channel width");
  train->add_option("--checkpoint-every", t_every, "checkpoint interval in steps");
  train->add_option("--pool-size", t_pool, "cycle a fixed pool of samples (0: fresh data)");

  int mock_port = 8089;
  gridicl::MockVlmOptions mock_opts;
  CLI::App* mock = app.add_subcommand("mock-vlm", "serve a canned chat-completions endpoint");
  mock->add_option("--port", mock_port, "port on 127.0.0.1");
  mock->add_option("--answer", mock_opts.answer, "canned answer");
  mock->add_option("--delay", mock_opts.delay_seconds, "seconds to wait before answering");
  mock->add_option("--fail-first", mock_opts.fail_first, "answer HTTP 503 to the first N requests");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    // --help and --version exit 0; usage errors share the config exit code.
    return app.exit(e) == 0 ? gridicl::kExitOk : gridicl::kExitInvalidConfig;
  }

  try {
    if (*compose) {
      gridicl::Image a = gridicl::read_png(c_a);
      gridicl::Image ap = gridicl::read_png(c_ap);
      gridicl::Image b = gridicl::read_png(c_b);
      const auto layout = c_swap ? gridicl::CellLayout::swapped() : gridicl::CellLayout::standard();
      const gridicl::ImageGrid grid = gridicl::compose_grid(a, ap, b, layout, {c_cell, c_cell});
      std::filesystem::create_directories(c_out);
      const std::filesystem::path out(c_out);
      gridicl::write_png(grid.grid_image, out / "grid.png");
      gridicl::write_png(grid.pasted_image, out / "pasted.png");
      gridicl::write_png(grid.mask, out / "mask.png");
      gridicl::write_png(gridicl::annotate_grid(grid), out / "annotated.png");
      return gridicl::kExitOk;
    }
    if (*run) return gridicl::cmd_run(run_flags.resolve(RunConfig()));
    if (*viz) {
      gridicl::VizOptions v;
      v.run = viz_flags.resolve(RunConfig());
      v.layer = viz_layer;
      v.step = viz_t;
      if (std::sscanf(viz_anchor.c_str(), "%d,%d", &v.anchor_row, &v.anchor_col) != 2) {
        std::cerr << "--anchor expects row,col\n";
        return gridicl::kExitInvalidConfig;
      }
      return gridicl::cmd_viz(v);
    }
    if (*eval) {
      gridicl::EvalOptions e;
      RunConfig base;
      e.run = eval_flags.resolve(base);
      if (!eval_flags.cell) {
        if (auto cell = checkpoint_cell(e.run.weights)) e.run.cell = {*cell, *cell};
      }
      e.per_task = eval_n;
      if (eval_data_seed) e.data_seed = *eval_data_seed;
      e.prompt_mode = eval_prompt_mode;
      e.out_dir = e.run.out;
      return gridicl::cmd_eval(e);
    }
    if (*train) {
      if (!train_config_file.empty()) {
        std::ifstream in(train_config_file);
        if (!in) throw gridicl::Error(gridicl::ErrorKind::kInvalidConfig,
                                      "cannot read " + train_config_file);
        train_cfg = gridicl::TrainConfig::from_json(nlohmann::json::parse(in));
      }
      if (t_steps) train_cfg.steps = *t_steps;
      if (t_batch) train_cfg.batch = *t_batch;
      if (t_lr) train_cfg.lr = *t_lr;
      if (t_seed) train_cfg.seed = *t_seed;
      if (t_cell) train_cfg.cell = {*t_cell, *t_cell};
      if (t_channels) train_cfg.network.channels = *t_channels;
      if (t_every) train_cfg.checkpoint_every = *t_every;
      if (t_pool) train_cfg.pool_size = *t_pool;
      train_cfg.out_dir = train_out;
      train_cfg.resume_from = train_resume;
      return gridicl::cmd_train(train_cfg);
    }
    if (*mock) {
      gridicl::MockVlmServer server(mock_opts);
      g_mock = &server;
      std::signal(SIGINT, stop_mock);
      std::signal(SIGTERM, stop_mock);
      std::cerr << "[gridicl] mock VLM on http://127.0.0.1:" << mock_port
                << "/v1/chat/completions\n";
      server.serve_forever(mock_port);
      g_mock = nullptr;
      return gridicl::kExitOk;
    }
  } catch (const gridicl::Error& e) {
    std::cerr << "[gridicl] " << e.what() << "\n";
    return e.kind() == gridicl::ErrorKind::kInvalidConfig ? gridicl::kExitInvalidConfig
                                                          : gridicl::kExitPipelineError;
  } catch (const std::exception& e) {
    std::cerr << "[gridicl] " << e.what() << "\n";
    return gridicl::kExitPipelineError;
  }
  return gridicl::kExitOk;
}
