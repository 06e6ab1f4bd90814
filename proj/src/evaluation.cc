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

#include "gridicl/evaluation.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "gridicl/errors.h"
#include "gridicl/tensor_file.h"

namespace gridicl {

std::vector<double> toy_embedder(const Image& image) {
  if (image.empty() || image.channels() < 3) {
    throw Error(ErrorKind::kInvalidInput, "embedder needs a non-empty RGB image");
  }
  std::vector<double> out(kToyEmbeddingDim, 0.0);
  const int w = image.width();
  const int h = image.height();
  for (int gy = 0; gy < 4; ++gy) {
    const int y0 = gy * h / 4;
    const int y1 = std::max(y0 + 1, (gy + 1) * h / 4);
    for (int gx = 0; gx < 4; ++gx) {
      const int x0 = gx * w / 4;
      const int x1 = std::max(x0 + 1, (gx + 1) * w / 4);
      double sum[3] = {0, 0, 0};
      for (int y = y0; y < std::min(y1, h); ++y) {
        for (int x = x0; x < std::min(x1, w); ++x) {
          for (int c = 0; c < 3; ++c) sum[c] += image.at(x, y, c);
        }
      }
      const double n = static_cast<double>(std::min(y1, h) - y0) * (std::min(x1, w) - x0);
      for (int c = 0; c < 3; ++c) out[(gy * 4 + gx) * 3 + c] = sum[c] / n;
    }
  }
  const double inv = 1.0 / (static_cast<double>(w) * h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < 3; ++c) {
        const int bin = std::clamp(static_cast<int>(image.at(x, y, c) * 8.0f), 0, 7);
        out[48 + c * 8 + bin] += inv;
      }
    }
  }
  return out;
}

double direction_cosine(const std::vector<double>& u, const std::vector<double>& v) {
  if (u.size() != v.size() || u.size() < 2) {
    throw Error(ErrorKind::kShape, "direction vectors must share a dimension >= 2");
  }
  double uu = 0.0, vv = 0.0, uv = 0.0;
  for (size_t i = 0; i < u.size(); ++i) {
    uu += u[i] * u[i];
    vv += v[i] * v[i];
    uv += u[i] * v[i];
  }
  const double nu = std::sqrt(uu);
  const double nv = std::sqrt(vv);
  if (nu < kMinDirectionNorm || nv < kMinDirectionNorm) {
    throw Error(ErrorKind::kUndefinedDirection, "embedding change has zero length");
  }
  return std::clamp(uv / (nu * nv), -1.0, 1.0);
}

double direction_similarity(const Image& a, const Image& a_prime, const Image& b,
                            const Image& b_prime, const Embedder& embed) {
  const std::vector<double> ea = embed(a);
  const std::vector<double> eap = embed(a_prime);
  const std::vector<double> eb = embed(b);
  const std::vector<double> ebp = embed(b_prime);
  std::vector<double> da(ea.size()), db(eb.size());
  for (size_t i = 0; i < ea.size(); ++i) da[i] = eap[i] - ea[i];
  for (size_t i = 0; i < eb.size(); ++i) db[i] = ebp[i] - eb[i];
  return direction_cosine(db, da);
}

const TaskSummary* DirectionReport::find(TaskTag task) const {
  for (const TaskSummary& s : tasks) {
    if (s.task == task) return &s;
  }
  return nullptr;
}

nlohmann::json DirectionReport::summary_json() const {
  nlohmann::json j = {{"config_digest", config_digest},
                      {"embedder", embedder},
                      {"samples", samples.size()},
                      {"failures", failures},
                      {"undefined", undefined},
                      {"tasks", nlohmann::json::array()}};
  for (const TaskSummary& s : tasks) {
    j["tasks"].push_back({{"task", task_name(s.task)},
                          {"count", s.count},
                          {"defined", s.defined},
                          {"failures", s.failures},
                          {"mean_similarity", s.mean_similarity},
                          {"stddev_similarity", s.stddev_similarity},
                          {"mean_pixel_mae", s.mean_pixel_mae}});
  }
  return j;
}

DirectionReport batch_eval(const std::vector<TaskSample>& samples, const SamplePipeline& pipeline,
                           const Embedder& embed, const std::string& config_digest) {
  DirectionReport report;
  report.config_digest = config_digest;
  for (const TaskSample& sample : samples) {
    SampleOutcome o;
    o.sample_id = sample.id;
    o.task = sample.task;
    try {
      const Image b_prime = pipeline(sample);
      if (b_prime.size() == sample.b_prime_gt.size()) {
        o.pixel_mae = mean_abs_error(b_prime, sample.b_prime_gt);
      }
      try {
        o.similarity = direction_similarity(sample.a, sample.a_prime, sample.b, b_prime, embed);
        o.status = "ok";
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::kUndefinedDirection) throw;
        o.status = "undefined";
        ++report.undefined;
      }
    } catch (const std::exception& e) {
      o.status = std::string("error: ") + e.what();
      ++report.failures;
    }
    report.samples.push_back(std::move(o));
  }
  for (TaskTag task : kAllTasks) {
    TaskSummary s;
    s.task = task;
    double sum = 0.0, sum_sq = 0.0, mae = 0.0;
    int mae_n = 0;
    for (const SampleOutcome& o : report.samples) {
      if (o.task != task) continue;
      ++s.count;
      if (o.status.rfind("error", 0) == 0) ++s.failures;
      if (o.similarity) {
        ++s.defined;
        sum += *o.similarity;
        sum_sq += *o.similarity * *o.similarity;
      }
      if (o.pixel_mae) {
        mae += *o.pixel_mae;
        ++mae_n;
      }
    }
    if (s.count == 0) continue;
    if (s.defined > 0) {
      s.mean_similarity = sum / s.defined;
      s.stddev_similarity =
          std::sqrt(std::max(0.0, sum_sq / s.defined - s.mean_similarity * s.mean_similarity));
    }
    if (mae_n > 0) s.mean_pixel_mae = mae / mae_n;
    report.tasks.push_back(s);
  }
  return report;
}

void write_report_csv(const DirectionReport& report, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::kIo, "cannot write " + path.string());
  out << "sample_id,task,similarity,pixel_mae,status\n";
  for (const SampleOutcome& o : report.samples) {
    char sim[32] = "";
    char mae[32] = "";
    if (o.similarity) std::snprintf(sim, sizeof(sim), "%.6f", *o.similarity);
    if (o.pixel_mae) std::snprintf(mae, sizeof(mae), "%.6f", *o.pixel_mae);
    std::string status = o.status;
    std::replace(status.begin(), status.end(), ',', ';');
    std::replace(status.begin(), status.end(), '\n', ' ');
    out << o.sample_id << ',' << task_name(o.task) << ',' << sim << ',' << mae << ',' << status
        << '\n';
  }
}

AttentionScores load_attention_dump(const std::filesystem::path& path, AttentionKind kind,
                                    Size resolution) {
  if (!std::filesystem::exists(path)) {
    throw Error(ErrorKind::kNotFound, "attention dump " + path.string() + " does not exist");
  }
  TensorBlob blob = read_tensor(path);
  const int positions = resolution.height * resolution.width;
  if (blob.dims.size() != 3 || static_cast<int>(blob.dims[1]) != positions ||
      (kind == AttentionKind::kSelf && static_cast<int>(blob.dims[2]) != positions)) {
    throw Error(ErrorKind::kShape, "attention dump " + path.string() +
                                       " does not match the requested resolution");
  }
  AttentionScores s = kind == AttentionKind::kSelf
                          ? AttentionScores::self(blob.dims[0], resolution)
                          : AttentionScores::cross(blob.dims[0], resolution, blob.dims[2]);
  s.values = std::move(blob.data);
  return s;
}

std::vector<double> heatmap_values(const AttentionScores& scores, int anchor_row,
                                   Quadrant target) {
  if (scores.kind != AttentionKind::kSelf) {
    throw Error(ErrorKind::kInvalidInput, "heatmaps are drawn from self-attention maps");
  }
  if (anchor_row < 0 || anchor_row >= scores.positions()) {
    throw Error(ErrorKind::kIndex, "anchor outside the attention map");
  }
  const RegionIndexMap idx = region_indices(scores.resolution.height, scores.resolution.width);
  const std::vector<int>& cols = idx.quadrant(target);
  std::vector<double> v(cols.size(), 0.0);
  for (int h = 0; h < scores.heads; ++h) {
    for (size_t j = 0; j < cols.size(); ++j) v[j] += scores.at(h, anchor_row, cols[j]);
  }
  const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
  const double low = *lo;
  const double range = *hi - low;
  for (double& x : v) x = range > 0.0 ? (x - low) / range : 0.0;
  return v;
}

Color colormap(double v) {
  static constexpr std::array<Color, 5> kStops = {{{0.05f, 0.05f, 0.45f},
                                                   {0.0f, 0.55f, 0.95f},
                                                   {0.2f, 0.9f, 0.6f},
                                                   {1.0f, 0.85f, 0.1f},
                                                   {0.85f, 0.1f, 0.05f}}};
  const double t = std::clamp(v, 0.0, 1.0) * (kStops.size() - 1);
  const int i = std::min(static_cast<int>(t), static_cast<int>(kStops.size()) - 2);
  const float f = static_cast<float>(t - i);
  Color c;
  for (int k = 0; k < 3; ++k) c[k] = kStops[i][k] + (kStops[i + 1][k] - kStops[i][k]) * f;
  return c;
}

Image attention_heatmap(const AttentionScores& scores, int anchor_row, Quadrant target,
                        Size cell_size) {
  const std::vector<double> v = heatmap_values(scores, anchor_row, target);
  const int qh = scores.resolution.height / 2;
  const int qw = scores.resolution.width / 2;
  Image out(cell_size.width, cell_size.height, 3);
  for (int y = 0; y < cell_size.height; ++y) {
    const int sy = y * qh / cell_size.height;
    for (int x = 0; x < cell_size.width; ++x) {
      const int sx = x * qw / cell_size.width;
      const Color c = colormap(v[sy * qw + sx]);
      for (int k = 0; k < 3; ++k) out.at(x, y, k) = c[k];
    }
  }
  return out;
}

int anchor_to_row(int row, int col, Size latent_resolution, Size resolution,
                  Quadrant quadrant_a) {
  const int lqh = latent_resolution.height / 2;
  const int lqw = latent_resolution.width / 2;
  if (row < 0 || col < 0 || row >= lqh || col >= lqw) {
    throw Error(ErrorKind::kIndex, "anchor (" + std::to_string(row) + ", " +
                                       std::to_string(col) + ") outside the " +
                                       std::to_string(lqh) + "x" + std::to_string(lqw) +
                                       " quadrant");
  }
  const int qh = resolution.height / 2;
  const int qw = resolution.width / 2;
  const int r = row * qh / lqh;
  const int c = col * qw / lqw;
  const int q = static_cast<int>(quadrant_a);
  return (r + (q / 2) * qh) * resolution.width + c + (q % 2) * qw;
}

}  // namespace gridicl
