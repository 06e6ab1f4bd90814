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

#include <chrono>
#include <cstdlib>

#include "gridicl/annotate.h"
#include "gridicl/errors.h"
#include "gridicl/font.h"
#include "gridicl/mock_vlm.h"
#include "gridicl/prompting.h"
#include "gridicl/tensor_file.h"
#include "test_util.h"

namespace gridicl {
namespace {

ErrorKind kind_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorKind::kInvalidInput;
}

TEST(Annotation, MatchesGolden) {
  const Image out = annotate_grid(testing::golden_grid());
  ASSERT_EQ(out.width(), 512);
  ASSERT_EQ(out.height(), 512);
  if (std::getenv("GRIDICL_UPDATE_GOLDENS") != nullptr) write_png(out, testing::golden_path());
  const Image golden = read_png(testing::golden_path());
  Image quantized = out;
  for (float& v : quantized.data()) v = to_u8(v) / 255.0f;
  EXPECT_TRUE(testing::bit_equal(quantized, golden));
  EXPECT_EQ(encode_png(out), read_file_bytes(testing::golden_path()));
}

TEST(Annotation, EmptySpecIsIdentity) {
  const ImageGrid g = testing::golden_grid();
  EXPECT_TRUE(testing::bit_equal(annotate_grid(g, AnnotationSpec::none()), g.grid_image));
}

// Template match: the rendered "A'" glyphs sit at the label offset inside the
// TR cell and nowhere in TL.
TEST(Annotation, LabelInTopRightCell) {
  const ImageGrid g = testing::golden_grid();
  const Image out = annotate_grid(g);
  const int scale = std::max(1, 256 / 85);
  Image stamp(text_width("A'", scale), 7 * scale, 3);
  draw_text("A'", 0, 0, scale, {1.0f, 1.0f, 1.0f}, &stamp);
  auto matches = [&](int x0, int y0) {
    for (int y = 0; y < stamp.height(); ++y) {
      for (int x = 0; x < stamp.width(); ++x) {
        if (stamp.at(x, y, 0) < 0.5f) continue;
        for (int c = 0; c < 3; ++c) {
          if (out.at(x0 + x, y0 + y, c) != 1.0f) return false;
        }
      }
    }
    return true;
  };
  EXPECT_TRUE(matches(256 + 8, 8));
  EXPECT_FALSE(matches(8, 8));
  // Black box behind the label.
  EXPECT_EQ(out.at(256 + 8 - 1, 8 - 1, 0), 0.0f);
}

TEST(Annotation, ArrowsAreDrawnAcrossBoundaries) {
  const ImageGrid g = testing::golden_grid();
  const Image out = annotate_grid(g);
  for (int row : {128, 384}) {
    EXPECT_EQ(out.at(256, row, 0), 1.0f);
    EXPECT_NEAR(out.at(256, row, 1), 0.15f, 1e-6);
  }
  // Far from the arrows the cells are untouched.
  EXPECT_EQ(out.at(128, 200, 1), g.grid_image.at(128, 200, 1));
}

TEST(Annotation, SwappedLayoutMovesLabels) {
  const ImageGrid g = testing::golden_grid();
  ImageGrid swapped = g;
  swapped.layout = CellLayout::swapped();
  const Image a = annotate_grid(g);
  const Image b = annotate_grid(swapped);
  EXPECT_FALSE(testing::bit_equal(a, b));
}

TEST(Annotation, MissingGlyphThrows) {
  AnnotationSpec spec;
  spec.labels[0] = "Aé";
  EXPECT_EQ(kind_of([&] { annotate_grid(testing::golden_grid(), spec); }),
            ErrorKind::kAnnotation);
  EXPECT_EQ(find_glyph('~'), nullptr);
  EXPECT_NE(find_glyph('a'), nullptr);
  EXPECT_EQ(find_glyph('a'), find_glyph('A'));
}

TEST(Instruction, FixedTemplate) {
  const std::string text = build_instruction();
  EXPECT_EQ(text, build_instruction());
  for (const char* needle : {"A'", "B'", "arrows", "short description"}) {
    EXPECT_NE(text.find(needle), std::string::npos) << needle;
  }
  EXPECT_EQ(negative_prompt(),
            "Messy, Disordered, Chaotic, Cluttered, Haphazard, Unkempt, Scattered, Disheveled, "
            "Tangled, Random");
}

TEST(NormalizeAnswer, TrimsAndUnquotes) {
  EXPECT_EQ(normalize_answer("  close-up of a tiger's face \n"), "close-up of a tiger's face");
  EXPECT_EQ(normalize_answer("\"a red car\""), "a red car");
  EXPECT_EQ(normalize_answer("'\"nested\"'"), "nested");
  EXPECT_EQ(normalize_answer("it's \"quoted\" inside"), "it's \"quoted\" inside");
  EXPECT_EQ(kind_of([] { normalize_answer("   "); }), ErrorKind::kMalformedResponse);
  EXPECT_EQ(kind_of([] { normalize_answer("\"\""); }), ErrorKind::kMalformedResponse);
  EXPECT_EQ(kind_of([] { normalize_answer(std::string(kMaxAnswerChars + 1, 'x')); }),
            ErrorKind::kMalformedResponse);
}

TEST(Base64, KnownVectors) {
  auto enc = [](const std::string& s) {
    return base64_encode({reinterpret_cast<const uint8_t*>(s.data()), s.size()});
  };
  EXPECT_EQ(enc(""), "");
  EXPECT_EQ(enc("f"), "Zg==");
  EXPECT_EQ(enc("fo"), "Zm8=");
  EXPECT_EQ(enc("foo"), "Zm9v");
  EXPECT_EQ(enc("foobar"), "Zm9vYmFy");
}

TEST(RequestBody, ChatCompletionsShape) {
  const std::vector<uint8_t> png = {1, 2, 3};
  const nlohmann::json body = build_request_body("m1", "describe", png);
  EXPECT_EQ(body["model"], "m1");
  const auto& content = body["messages"][0]["content"];
  EXPECT_EQ(body["messages"][0]["role"], "user");
  bool saw_text = false, saw_image = false;
  for (const auto& part : content) {
    if (part["type"] == "text") saw_text = part["text"] == "describe";
    if (part["type"] == "image_url") {
      saw_image = part["image_url"]["url"] == "data:image/png;base64,AQID";
    }
  }
  EXPECT_TRUE(saw_text);
  EXPECT_TRUE(saw_image);
}

TEST(ParseResponse, ContentForms) {
  EXPECT_EQ(parse_response(R"({"choices":[{"message":{"content":"a cat"}}]})"), "a cat");
  EXPECT_EQ(parse_response(
                R"({"choices":[{"message":{"content":[{"type":"text","text":"a dog"}]}}]})"),
            "a dog");
  for (const char* bad : {"not json", R"({"choices":[]})", R"({"choices":[{"message":{}}]})",
                          R"({"choices":[{"message":{"content":42}}]})"}) {
    EXPECT_EQ(kind_of([&] { parse_response(bad); }), ErrorKind::kMalformedResponse) << bad;
  }
}

TEST(Endpoint, EnvironmentOverridesDefaults) {
  setenv("ANALOGIST_VLM_URL", "http://example.invalid:9/v1/chat/completions", 1);
  setenv("ANALOGIST_VLM_KEY", "secret", 1);
  unsetenv("ANALOGIST_VLM_MODEL");
  VlmEndpoint base;
  base.model = "kept";
  const VlmEndpoint e = endpoint_from_env(base);
  EXPECT_EQ(e.url, "http://example.invalid:9/v1/chat/completions");
  EXPECT_EQ(e.api_key, "secret");
  EXPECT_EQ(e.model, "kept");
  unsetenv("ANALOGIST_VLM_URL");
  unsetenv("ANALOGIST_VLM_KEY");
}

class MockVlmTest : public ::testing::Test {
 protected:
  VlmEndpoint endpoint_for(const MockVlmServer& server) {
    VlmEndpoint e;
    e.url = server.url();
    e.api_key = "test-key";
    e.model = "mock-model";
    e.timeout_seconds = 5.0;
    e.retries = 2;
    return e;
  }
  Image annotated = annotate_grid(compose_grid(Image(16, 16, 3, 0.5f), Image(16, 16, 3, 0.2f),
                                               Image(16, 16, 3, 0.8f), CellLayout::standard(),
                                               {16, 16}),
                                  AnnotationSpec::none());
};

TEST_F(MockVlmTest, RoundTripReturnsCannedAnswerVerbatim) {
  MockVlmServer server;
  server.start();
  const std::string answer = request_prompt(endpoint_for(server), annotated, build_instruction());
  EXPECT_EQ(answer, "close-up of a tiger's face");
  EXPECT_EQ(server.request_count(), 1);
  const nlohmann::json req = server.last_request();
  EXPECT_EQ(req["model"], "mock-model");
  const std::string dump = req.dump();
  EXPECT_NE(dump.find("data:image/png;base64,"), std::string::npos);
  EXPECT_NE(dump.find("short description"), std::string::npos);
}

TEST_F(MockVlmTest, QuotedAnswerIsNormalized) {
  MockVlmOptions o;
  o.answer = "  \"a watercolor painting of a fox\"  ";
  MockVlmServer server(o);
  server.start();
  EXPECT_EQ(request_prompt(endpoint_for(server), annotated, "q"),
            "a watercolor painting of a fox");
}

TEST_F(MockVlmTest, RetriesTransientFailures) {
  MockVlmOptions o;
  o.fail_first = 2;
  MockVlmServer server(o);
  server.start();
  EXPECT_EQ(request_prompt(endpoint_for(server), annotated, "q"), o.answer);
  EXPECT_EQ(server.request_count(), 3);
}

TEST_F(MockVlmTest, GivesUpAfterRetries) {
  MockVlmOptions o;
  o.fail_first = 10;
  MockVlmServer server(o);
  server.start();
  EXPECT_EQ(kind_of([&] { request_prompt(endpoint_for(server), annotated, "q"); }),
            ErrorKind::kTransport);
  EXPECT_EQ(server.request_count(), 3);
}

TEST_F(MockVlmTest, MalformedAnswerIsNotRetried) {
  MockVlmOptions o;
  o.answer = "   ";
  MockVlmServer server(o);
  server.start();
  EXPECT_EQ(kind_of([&] { request_prompt(endpoint_for(server), annotated, "q"); }),
            ErrorKind::kMalformedResponse);
  EXPECT_EQ(server.request_count(), 1);
}

TEST_F(MockVlmTest, TimeoutIsTransportError) {
  MockVlmOptions o;
  o.delay_seconds = 2.0;
  MockVlmServer server(o);
  server.start();
  VlmEndpoint e = endpoint_for(server);
  e.timeout_seconds = 0.3;
  e.retries = 0;
  const auto t0 = std::chrono::steady_clock::now();
  EXPECT_EQ(kind_of([&] { request_prompt(e, annotated, "q"); }), ErrorKind::kTransport);
  EXPECT_LT(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count(), 1.9);
}

TEST_F(MockVlmTest, UnreachableAndOversized) {
  int port = 0;
  {
    MockVlmServer probe;
    port = probe.start();
  }
  VlmEndpoint e;
  e.url = "http://127.0.0.1:" + std::to_string(port);
  e.retries = 1;
  e.timeout_seconds = 1.0;
  EXPECT_EQ(kind_of([&] { request_prompt(e, annotated, "q"); }), ErrorKind::kTransport);
  MockVlmServer server;
  server.start();
  VlmEndpoint small = endpoint_for(server);
  small.max_image_bytes = 10;
  EXPECT_EQ(kind_of([&] { request_prompt(small, annotated, "q"); }), ErrorKind::kInvalidInput);
  EXPECT_EQ(server.request_count(), 0);
  VlmEndpoint bad;
  bad.url = "ftp://nowhere";
  EXPECT_NE(kind_of([&] { request_prompt(bad, annotated, "q"); }), ErrorKind::kMalformedResponse);
}

}  // namespace
}  // namespace gridicl
