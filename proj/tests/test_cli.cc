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

#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <fstream>

#include "gridicl/config.h"
#include "gridicl/dataset.h"
#include "gridicl/denoiser.h"
#include "gridicl/errors.h"
#include "gridicl/mock_vlm.h"
#include "gridicl/pipeline.h"
#include "gridicl/tensor_file.h"
#include "test_util.h"

namespace gridicl {
namespace {

namespace fs = std::filesystem;

int run_cli(const std::string& args, const fs::path& log) {
  const std::string cmd = std::string(GRIDICL_CLI) + " " + args + " > " + log.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

nlohmann::json read_json(const fs::path& p) {
  std::ifstream in(p);
  return nlohmann::json::parse(in);
}

std::string quoted(const fs::path& p) { return "'" + p.string() + "'"; }

// Micro checkpoint plus a 32-pixel sample written to disk once per suite.
class CliTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    root_ = new fs::path(testing::scratch_dir("cli_fixture"));
    Network<float> net(testing::micro_config());
    net.init(21, Network<float>::Init::kRandomAll);
    Denoiser(std::move(net)).save(*root_ / "ckpt", {{"note", "cli fixture"}});
    const TaskSample s = make_task_sample(4, 0, TaskTag::kColorize, {32, 32});
    write_png(s.a, *root_ / "a.png");
    write_png(s.a_prime, *root_ / "ap.png");
    write_png(s.b, *root_ / "b.png");
  }
  static void TearDownTestSuite() { delete root_; }

  std::string inputs() const {
    return "--a " + quoted(*root_ / "a.png") + " --a-prime " + quoted(*root_ / "ap.png") +
           " --b " + quoted(*root_ / "b.png") + " --weights " + quoted(*root_ / "ckpt");
  }
  static std::string small_run() {
    return " --cell 32 --steps 4 --layer-first 1 --layer-last 2";
  }

  static fs::path* root_;
};

fs::path* CliTest::root_ = nullptr;

TEST(RunConfigJson, RoundTripAndDigest) {
  RunConfig c;
  c.a = "x.png";
  c.cell = {64, 32};
  c.swap_layout = true;
  c.sampler.seed = 42;
  c.sampler.surgery.s = 1.1;
  c.prompt = "a red car";
  const RunConfig back = RunConfig::from_json(c.to_json(), RunConfig());
  EXPECT_EQ(back.to_json(), c.to_json());
  EXPECT_EQ(back.digest(), c.digest());
  EXPECT_EQ(c.digest().size(), 64u);
  RunConfig moved = c;
  moved.out = "elsewhere";
  moved.sampler.dump_dir = "dumps";
  EXPECT_EQ(moved.digest(), c.digest());
  RunConfig other = c;
  other.sampler.seed = 43;
  EXPECT_NE(other.digest(), c.digest());
}

TEST(RunConfigJson, RejectsUnknownKeysAndBadTypes) {
  auto kind = [](const nlohmann::json& j) {
    try {
      RunConfig::from_json(j, RunConfig());
    } catch (const Error& e) {
      return e.kind();
    }
    return ErrorKind::kIo;
  };
  EXPECT_EQ(kind({{"sampler.sed", 1}}), ErrorKind::kInvalidConfig);
  EXPECT_EQ(kind({{"sampler.steps", "fifty"}}), ErrorKind::kInvalidConfig);
  EXPECT_EQ(kind({{"grid.layout", "diagonal"}}), ErrorKind::kInvalidConfig);
  EXPECT_EQ(kind(nlohmann::json::array()), ErrorKind::kInvalidConfig);
  const RunConfig ok = RunConfig::from_json({{"manifest.anything", 3}, {"sampler.steps", 7}},
                                            RunConfig());
  EXPECT_EQ(ok.sampler.steps, 7);
}

TEST(RunConfigJson, DefaultsAndValidation) {
  RunConfig c;
  EXPECT_EQ(c.cell.height, 256);
  EXPECT_EQ(c.sampler.cfg_scale, 15.0);
  EXPECT_EQ(c.sampler.surgery.s, 1.3);
  EXPECT_EQ(c.prompt, std::nullopt);
  EXPECT_NO_THROW(c.validate(false));
  c.cell = {30, 30};
  EXPECT_THROW(c.validate(false), Error);
  RunConfig missing;
  missing.a = "/nonexistent/a.png";
  EXPECT_THROW(missing.validate(true), Error);
}

TEST_F(CliTest, MissingInputsExitWithConfigError) {
  const fs::path out = testing::scratch_dir("cli_missing");
  EXPECT_EQ(run_cli("run --a /nonexistent.png --a-prime /nonexistent.png --b /nonexistent.png "
                    "--out " + quoted(out),
                    out / "log.txt"),
            2);
  EXPECT_EQ(run_cli("run " + inputs() + " --out " + quoted(out) + " --cell 30", out / "log.txt"),
            2);
  EXPECT_EQ(run_cli("frobnicate", out / "log.txt"), 2);
}

TEST_F(CliTest, RunWritesOutputsAndManifestReproduces) {
  const fs::path out1 = testing::scratch_dir("cli_run1");
  ASSERT_EQ(run_cli("run " + inputs() + small_run() + " --prompt 'a colourful scene' --out " +
                        quoted(out1),
                    out1 / "log.txt"),
            0);
  for (const char* f : {"b_prime.png", "grid.png", "input_grid.png", "manifest.json"}) {
    EXPECT_TRUE(fs::exists(out1 / f)) << f;
  }
  const nlohmann::json m = read_json(out1 / "manifest.json");
  EXPECT_EQ(m["prompt.positive"], "a colourful scene");
  EXPECT_EQ(m["manifest.prompt_source"], "override");
  EXPECT_EQ(m["sampler.steps"], 4);
  EXPECT_EQ(m["manifest.config_digest"].get<std::string>().size(), 64u);
  EXPECT_EQ(read_png(out1 / "b_prime.png").width(), 32);

  const fs::path out2 = testing::scratch_dir("cli_run2");
  ASSERT_EQ(run_cli("run --config " + quoted(out1 / "manifest.json") + " --out " + quoted(out2),
                    out2 / "log.txt"),
            0);
  EXPECT_EQ(read_file_bytes(out1 / "b_prime.png"), read_file_bytes(out2 / "b_prime.png"));
  EXPECT_EQ(read_json(out2 / "manifest.json")["manifest.config_digest"],
            m["manifest.config_digest"]);
}

TEST_F(CliTest, RequiredVlmUnreachableExitsFour) {
  int port = 0;
  {
    MockVlmServer probe;
    port = probe.start();
  }
  const fs::path out = testing::scratch_dir("cli_vlm_down");
  const std::string vlm = " --use-vlm --require-vlm --vlm-timeout 1 --vlm-retries 0 --vlm-url "
                          "http://127.0.0.1:" + std::to_string(port) + "/v1/chat/completions";
  EXPECT_EQ(run_cli("run " + inputs() + small_run() + vlm + " --out " + quoted(out),
                    out / "log.txt"),
            4);
  EXPECT_FALSE(fs::exists(out / "b_prime.png"));
  // Without --require-vlm the run falls back to the empty prompt.
  const std::string soft = " --use-vlm --vlm-timeout 1 --vlm-retries 0 --vlm-url "
                           "http://127.0.0.1:" + std::to_string(port) + "/v1/chat/completions";
  ASSERT_EQ(run_cli("run " + inputs() + small_run() + soft + " --out " + quoted(out),
                    out / "log.txt"),
            0);
  const nlohmann::json m = read_json(out / "manifest.json");
  EXPECT_EQ(m["manifest.prompt_source"], "fallback");
  EXPECT_EQ(m["prompt.positive"], "");
  EXPECT_EQ(m["prompt.use_vlm"], false);
}

TEST_F(CliTest, MockVlmPromptReachesManifest) {
  MockVlmServer server;
  server.start();
  const fs::path out = testing::scratch_dir("cli_vlm_up");
  ASSERT_EQ(run_cli("run " + inputs() + small_run() + " --use-vlm --vlm-url " + server.url() +
                        " --out " + quoted(out),
                    out / "log.txt"),
            0);
  EXPECT_EQ(server.request_count(), 1);
  const nlohmann::json m = read_json(out / "manifest.json");
  EXPECT_EQ(m["prompt.positive"], "close-up of a tiger's face");
  EXPECT_EQ(m["manifest.prompt_source"], "vlm");
}

TEST_F(CliTest, EvalWritesOneRowPerSample) {
  const fs::path out = testing::scratch_dir("cli_eval");
  ASSERT_EQ(run_cli("eval --n 2 --ckpt " + quoted(*root_ / "ckpt") + small_run() + " --out " +
                        quoted(out),
                    out / "log.txt"),
            0);
  std::ifstream in(out / "report.csv");
  std::string line;
  int rows = -1;
  while (std::getline(in, line)) ++rows;
  EXPECT_EQ(rows, 8);
  const nlohmann::json report = read_json(out / "report.json");
  EXPECT_EQ(report["samples"], 8);
  EXPECT_EQ(report["tasks"].size(), 4u);
}

TEST_F(CliTest, VizWritesFourHeatmaps) {
  const fs::path out = testing::scratch_dir("cli_viz");
  ASSERT_EQ(run_cli("viz " + inputs() + small_run() +
                        " --prompt x --layer 1 --t 2 --anchor 1,1 --out " + quoted(out),
                    out / "log.txt"),
            0);
  int heatmaps = 0;
  for (const auto& e : fs::directory_iterator(out)) {
    if (e.path().filename().string().rfind("heatmap_L1_step2_", 0) == 0) {
      ++heatmaps;
      EXPECT_EQ(read_png(e.path()).width(), 32);
    }
  }
  EXPECT_EQ(heatmaps, 4);
  EXPECT_EQ(run_cli("viz " + inputs() + small_run() + " --t 9 --out " + quoted(out),
                    out / "log.txt"),
            2);
}

TEST_F(CliTest, ComposeWritesGridFiles) {
  const fs::path out = testing::scratch_dir("cli_compose");
  ASSERT_EQ(run_cli("compose --a " + quoted(*root_ / "a.png") + " --a-prime " +
                        quoted(*root_ / "ap.png") + " --b " + quoted(*root_ / "b.png") +
                        " --cell 32 --out " + quoted(out),
                    out / "log.txt"),
            0);
  for (const char* f : {"grid.png", "pasted.png", "mask.png", "annotated.png"}) {
    ASSERT_TRUE(fs::exists(out / f)) << f;
    EXPECT_EQ(read_png(out / f).width(), 64) << f;
  }
}

TEST_F(CliTest, TrainProducesLoadableCheckpoint) {
  const fs::path out = testing::scratch_dir("cli_train");
  ASSERT_EQ(run_cli("train --steps 3 --batch 2 --cell 32 --channels 8 --out " + quoted(out),
                    out / "log.txt"),
            0);
  EXPECT_NO_THROW(Denoiser::load(out / "final"));
  EXPECT_EQ(run_cli("train --steps 3 --channels 7 --out " + quoted(out), out / "log.txt"), 2);
}

}  // namespace
}  // namespace gridicl
