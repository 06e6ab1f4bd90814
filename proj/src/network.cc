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

#include "gridicl/network.h"

#include <cmath>
#include <numbers>
#include <string>

#include "gridicl/errors.h"
#include "gridicl/random.h"

namespace gridicl {

void NetworkConfig::validate() const {
  if (channels < 4 || channels % 4 != 0) {
    throw Error(ErrorKind::kInvalidConfig, "channels must be a positive multiple of 4");
  }
  if (heads < 1 || channels % heads != 0) {
    throw Error(ErrorKind::kInvalidConfig, "heads must divide channels");
  }
  if (stages < 1 || blocks_per_stage < 1 || text_dim < 1) {
    throw Error(ErrorKind::kInvalidConfig, "stages, blocks and text width must be positive");
  }
  if (in_channels != 9 || out_channels != 4) {
    throw Error(ErrorKind::kInvalidConfig, "inpainting signature is 9 channels in, 4 out");
  }
}

template <typename T>
int ParamSet<T>::add(std::string name, int rows, int cols) {
  names.push_back(std::move(name));
  values.push_back(Mat<T>::Zero(rows, cols));
  return static_cast<int>(values.size()) - 1;
}

template <typename T>
size_t ParamSet<T>::scalar_count() const {
  size_t n = 0;
  for (const auto& v : values) n += static_cast<size_t>(v.size());
  return n;
}

template <typename T>
std::vector<Mat<T>> ParamSet<T>::zeros_like() const {
  std::vector<Mat<T>> out;
  out.reserve(values.size());
  for (const auto& v : values) out.push_back(Mat<T>::Zero(v.rows(), v.cols()));
  return out;
}

template <typename T>
Mat<T> timestep_embedding(int timestep, int dim) {
  Mat<T> out(1, dim);
  const int half = dim / 2;
  for (int i = 0; i < half; ++i) {
    const double freq = std::exp(-std::log(10000.0) * i / half);
    const double arg = timestep * freq;
    out(0, i) = static_cast<T>(std::sin(arg));
    out(0, half + i) = static_cast<T>(std::cos(arg));
  }
  if (dim % 2 != 0) out(0, dim - 1) = T(0);
  return out;
}

template <typename T>
Mat<T> position_embedding(int h, int w, int dim) {
  Mat<T> out(h * w, dim);
  const int bands = dim / 4;
  for (int y = 0; y < h; ++y) {
    const double v = (y + 0.5) / h;
    for (int x = 0; x < w; ++x) {
      const double u = (x + 0.5) / w;
      auto row = out.row(y * w + x);
      for (int k = 0; k < bands; ++k) {
        const double f = std::numbers::pi * (k + 1);
        row(4 * k + 0) = static_cast<T>(std::sin(f * u));
        row(4 * k + 1) = static_cast<T>(std::cos(f * u));
        row(4 * k + 2) = static_cast<T>(std::sin(f * v));
        row(4 * k + 3) = static_cast<T>(std::cos(f * v));
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Parameter layout.

struct LinearIdx {
  int w = -1;
  int b = -1;
};
struct ConvIdx {
  int w = -1;
  int b = -1;
  int in = 0;
  int out = 0;
};
struct DwIdx {
  int w = -1;
  int b = -1;
};
struct NormIdx {
  int g = -1;
  int b = -1;
};
struct AttnIdx {
  int q = -1;
  int k = -1;
  int v = -1;
  int o = -1;
};
struct ResIdx {
  NormIdx ln1;
  DwIdx dw1;
  LinearIdx pw1;
  LinearIdx temb;
  NormIdx ln2;
  DwIdx dw2;
  LinearIdx pw2;
};
struct XfIdx {
  NormIdx ln1;
  AttnIdx self;
  NormIdx ln2;
  AttnIdx cross;
  NormIdx ln3;
  LinearIdx ff1;
  LinearIdx ff2;
};

struct NetworkLayout {
  ConvIdx conv_in;
  LinearIdx time;
  std::vector<ResIdx> res;
  std::vector<XfIdx> xf;
  NormIdx ln_out;
  ConvIdx conv_out;
  // Parameter indices whose init follows each scheme.
  std::vector<int> norm_gains;
  std::vector<int> biases;
  std::vector<int> head;
  std::vector<int> fan_in;  // per parameter; 0 for gains/biases
};

namespace {

template <typename T>
struct Builder {
  ParamSet<T>* params;
  NetworkLayout* layout;

  int weight(const std::string& name, int rows, int cols, int fan_in) {
    const int i = params->add(name, rows, cols);
    layout->fan_in.push_back(fan_in);
    return i;
  }
  int bias(const std::string& name, int cols) {
    const int i = params->add(name, 1, cols);
    layout->fan_in.push_back(0);
    layout->biases.push_back(i);
    return i;
  }
  LinearIdx linear(const std::string& name, int in, int out, bool with_bias) {
    LinearIdx l;
    l.w = weight(name + ".weight", in, out, in);
    if (with_bias) l.b = bias(name + ".bias", out);
    return l;
  }
  ConvIdx conv(const std::string& name, int in, int out) {
    ConvIdx c;
    c.in = in;
    c.out = out;
    c.w = weight(name + ".weight", 9 * in, out, 9 * in);
    c.b = bias(name + ".bias", out);
    return c;
  }
  DwIdx depthwise(const std::string& name, int channels) {
    DwIdx d;
    d.w = weight(name + ".weight", 9, channels, 9);
    d.b = bias(name + ".bias", channels);
    return d;
  }
  NormIdx norm(const std::string& name, int channels) {
    NormIdx n;
    n.g = params->add(name + ".gain", 1, channels);
    layout->fan_in.push_back(0);
    layout->norm_gains.push_back(n.g);
    n.b = bias(name + ".bias", channels);
    return n;
  }
  AttnIdx attention(const std::string& name, int channels, int kv_in) {
    AttnIdx a;
    a.q = weight(name + ".to_q", channels, channels, channels);
    a.k = weight(name + ".to_k", kv_in, channels, kv_in);
    a.v = weight(name + ".to_v", kv_in, channels, kv_in);
    a.o = weight(name + ".to_out", channels, channels, channels);
    return a;
  }
};

template <typename T>
std::shared_ptr<const NetworkLayout> build_layout(const NetworkConfig& cfg, ParamSet<T>* params) {
  auto layout = std::make_shared<NetworkLayout>();
  Builder<T> b{params, layout.get()};
  const int c = cfg.channels;
  layout->conv_in = b.conv("conv_in", cfg.in_channels, c);
  layout->time = b.linear("time_embed", c, c, true);
  for (int i = 0; i < cfg.block_count(); ++i) {
    const std::string p = "blocks." + std::to_string(i);
    ResIdx r;
    r.ln1 = b.norm(p + ".res.norm1", c);
    r.dw1 = b.depthwise(p + ".res.dwconv1", c);
    r.pw1 = b.linear(p + ".res.pwconv1", c, c, true);
    r.temb = b.linear(p + ".res.time_proj", c, c, true);
    r.ln2 = b.norm(p + ".res.norm2", c);
    r.dw2 = b.depthwise(p + ".res.dwconv2", c);
    r.pw2 = b.linear(p + ".res.pwconv2", c, c, true);
    layout->res.push_back(r);
    XfIdx x;
    x.ln1 = b.norm(p + ".attn.norm1", c);
    x.self = b.attention(p + ".attn.self", c, c);
    x.ln2 = b.norm(p + ".attn.norm2", c);
    x.cross = b.attention(p + ".attn.cross", c, cfg.text_dim);
    x.ln3 = b.norm(p + ".attn.norm3", c);
    x.ff1 = b.linear(p + ".attn.ff1", c, 2 * c, true);
    x.ff2 = b.linear(p + ".attn.ff2", 2 * c, c, true);
    layout->xf.push_back(x);
  }
  layout->ln_out = b.norm("norm_out", c);
  layout->conv_out = b.conv("conv_out", c, cfg.out_channels);
  layout->head = {layout->conv_out.w, layout->conv_out.b};
  return layout;
}

constexpr double kNormEps = 1e-5;

// --------------------------- primitive layers ------------------------------

template <typename T>
Mat<T> linear_fwd(const std::vector<Mat<T>>& P, const LinearIdx& l, const Mat<T>& x) {
  Mat<T> y = x * P[l.w];
  if (l.b >= 0) y.rowwise() += P[l.b].row(0);
  return y;
}

template <typename T>
Mat<T> linear_bwd(const std::vector<Mat<T>>& P, std::vector<Mat<T>>& G, const LinearIdx& l,
                  const Mat<T>& x, const Mat<T>& dy) {
  G[l.w].noalias() += x.transpose() * dy;
  if (l.b >= 0) G[l.b] += dy.colwise().sum();
  return dy * P[l.w].transpose();
}

// Gathers 3x3 zero-padded neighbourhoods: row p holds (ky, kx, channel).
template <typename T>
Mat<T> im2col(const Mat<T>& x, int h, int w) {
  const int c = static_cast<int>(x.cols());
  Mat<T> cols = Mat<T>::Zero(h * w, 9 * c);
  for (int y = 0; y < h; ++y) {
    for (int xx = 0; xx < w; ++xx) {
      const int p = y * w + xx;
      for (int k = 0; k < 9; ++k) {
        const int sy = y + k / 3 - 1;
        const int sx = xx + k % 3 - 1;
        if (sy < 0 || sy >= h || sx < 0 || sx >= w) continue;
        cols.block(p, k * c, 1, c) = x.row(sy * w + sx);
      }
    }
  }
  return cols;
}

template <typename T>
Mat<T> col2im(const Mat<T>& cols, int h, int w, int c) {
  Mat<T> x = Mat<T>::Zero(h * w, c);
  for (int y = 0; y < h; ++y) {
    for (int xx = 0; xx < w; ++xx) {
      const int p = y * w + xx;
      for (int k = 0; k < 9; ++k) {
        const int sy = y + k / 3 - 1;
        const int sx = xx + k % 3 - 1;
        if (sy < 0 || sy >= h || sx < 0 || sx >= w) continue;
        x.row(sy * w + sx) += cols.block(p, k * c, 1, c);
      }
    }
  }
  return x;
}

template <typename T>
struct ConvCache {
  Mat<T> cols;
};

template <typename T>
Mat<T> conv_fwd(const std::vector<Mat<T>>& P, const ConvIdx& cv, const Mat<T>& x, int h, int w,
                ConvCache<T>* cache) {
  Mat<T> cols = im2col(x, h, w);
  Mat<T> y = cols * P[cv.w];
  y.rowwise() += P[cv.b].row(0);
  if (cache) cache->cols = std::move(cols);
  return y;
}

template <typename T>
Mat<T> conv_bwd(const std::vector<Mat<T>>& P, std::vector<Mat<T>>& G, const ConvIdx& cv,
                const ConvCache<T>& cache, const Mat<T>& dy, int h, int w) {
  G[cv.w].noalias() += cache.cols.transpose() * dy;
  G[cv.b] += dy.colwise().sum();
  const Mat<T> dcols = dy * P[cv.w].transpose();
  return col2im(dcols, h, w, cv.in);
}

template <typename T>
Mat<T> depthwise_fwd(const std::vector<Mat<T>>& P, const DwIdx& d, const Mat<T>& x, int h,
                     int w) {
  const Mat<T>& k = P[d.w];
  Mat<T> y(x.rows(), x.cols());
  y.rowwise() = P[d.b].row(0);
  for (int yy = 0; yy < h; ++yy) {
    for (int xx = 0; xx < w; ++xx) {
      auto out = y.row(yy * w + xx).array();
      for (int t = 0; t < 9; ++t) {
        const int sy = yy + t / 3 - 1;
        const int sx = xx + t % 3 - 1;
        if (sy < 0 || sy >= h || sx < 0 || sx >= w) continue;
        out += k.row(t).array() * x.row(sy * w + sx).array();
      }
    }
  }
  return y;
}

template <typename T>
Mat<T> depthwise_bwd(const std::vector<Mat<T>>& P, std::vector<Mat<T>>& G, const DwIdx& d,
                     const Mat<T>& x, const Mat<T>& dy, int h, int w) {
  const Mat<T>& k = P[d.w];
  Mat<T>& gk = G[d.w];
  G[d.b] += dy.colwise().sum();
  Mat<T> dx = Mat<T>::Zero(x.rows(), x.cols());
  for (int yy = 0; yy < h; ++yy) {
    for (int xx = 0; xx < w; ++xx) {
      const auto g = dy.row(yy * w + xx).array();
      for (int t = 0; t < 9; ++t) {
        const int sy = yy + t / 3 - 1;
        const int sx = xx + t % 3 - 1;
        if (sy < 0 || sy >= h || sx < 0 || sx >= w) continue;
        const int q = sy * w + sx;
        gk.row(t).array() += g * x.row(q).array();
        dx.row(q).array() += g * k.row(t).array();
      }
    }
  }
  return dx;
}

template <typename T>
struct NormCache {
  Mat<T> xhat;
  Eigen::Matrix<T, Eigen::Dynamic, 1> rstd;
};

template <typename T>
Mat<T> norm_fwd(const std::vector<Mat<T>>& P, const NormIdx& n, const Mat<T>& x,
                NormCache<T>* cache) {
  const auto c = static_cast<T>(x.cols());
  Mat<T> xhat(x.rows(), x.cols());
  Eigen::Matrix<T, Eigen::Dynamic, 1> rstd(x.rows());
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    const T mean = x.row(r).sum() / c;
    const auto centered = (x.row(r).array() - mean).eval();
    const T var = centered.square().sum() / c;
    rstd(r) = T(1) / std::sqrt(var + static_cast<T>(kNormEps));
    xhat.row(r) = centered * rstd(r);
  }
  Mat<T> y = (xhat.array().rowwise() * P[n.g].row(0).array()).matrix();
  y.rowwise() += P[n.b].row(0);
  if (cache) {
    cache->xhat = std::move(xhat);
    cache->rstd = std::move(rstd);
  }
  return y;
}

template <typename T>
Mat<T> norm_bwd(const std::vector<Mat<T>>& P, std::vector<Mat<T>>& G, const NormIdx& n,
                const NormCache<T>& cache, const Mat<T>& dy) {
  G[n.g] += (dy.array() * cache.xhat.array()).matrix().colwise().sum();
  G[n.b] += dy.colwise().sum();
  const Mat<T> dxhat = (dy.array().rowwise() * P[n.g].row(0).array()).matrix();
  const auto c = static_cast<T>(dy.cols());
  Mat<T> dx(dy.rows(), dy.cols());
  for (Eigen::Index r = 0; r < dy.rows(); ++r) {
    const T m1 = dxhat.row(r).sum() / c;
    const T m2 = dxhat.row(r).dot(cache.xhat.row(r)) / c;
    dx.row(r) = (dxhat.row(r).array() - m1 - cache.xhat.row(r).array() * m2) * cache.rstd(r);
  }
  return dx;
}

template <typename T>
Mat<T> silu_fwd(const Mat<T>& x) {
  return (x.array() / (T(1) + (-x.array()).exp())).matrix();
}

template <typename T>
Mat<T> silu_bwd(const Mat<T>& x, const Mat<T>& dy) {
  const auto sig = (T(1) / (T(1) + (-x.array()).exp())).eval();
  return (dy.array() * sig * (T(1) + x.array() * (T(1) - sig))).matrix();
}

template <typename T>
Mat<T> avgpool_fwd(const Mat<T>& x, int h, int w) {
  const int oh = h / 2;
  const int ow = w / 2;
  Mat<T> y(oh * ow, x.cols());
  for (int yy = 0; yy < oh; ++yy) {
    for (int xx = 0; xx < ow; ++xx) {
      const int p = (2 * yy) * w + 2 * xx;
      y.row(yy * ow + xx) = (x.row(p) + x.row(p + 1) + x.row(p + w) + x.row(p + w + 1)) * T(0.25);
    }
  }
  return y;
}

template <typename T>
Mat<T> avgpool_bwd(const Mat<T>& dy, int h, int w) {
  const int ow = w / 2;
  Mat<T> dx(h * w, dy.cols());
  for (int yy = 0; yy < h; ++yy) {
    for (int xx = 0; xx < w; ++xx) dx.row(yy * w + xx) = dy.row((yy / 2) * ow + xx / 2) * T(0.25);
  }
  return dx;
}

// Nearest-neighbour x2 from (h, w) to (2h, 2w).
template <typename T>
Mat<T> upsample_fwd(const Mat<T>& x, int h, int w) {
  const int oh = 2 * h;
  const int ow = 2 * w;
  Mat<T> y(oh * ow, x.cols());
  for (int yy = 0; yy < oh; ++yy) {
    for (int xx = 0; xx < ow; ++xx) y.row(yy * ow + xx) = x.row((yy / 2) * w + xx / 2);
  }
  return y;
}

template <typename T>
Mat<T> upsample_bwd(const Mat<T>& dy, int h, int w) {
  const int ow = 2 * w;
  Mat<T> dx = Mat<T>::Zero(h * w, dy.cols());
  for (int yy = 0; yy < 2 * h; ++yy) {
    for (int xx = 0; xx < ow; ++xx) dx.row((yy / 2) * w + xx / 2) += dy.row(yy * ow + xx);
  }
  return dx;
}

// ------------------------------ attention ----------------------------------

template <typename T>
struct AttnCache {
  Mat<T> x;   // query-side input
  Mat<T> kv;  // key/value-side input (x for self, text for cross)
  Mat<T> q, k, v, o;
  std::vector<Mat<T>> probs;  // per head
};

AttentionScores make_dump(AttentionKind kind, int heads, Size res, int text_len) {
  return kind == AttentionKind::kSelf ? AttentionScores::self(heads, res)
                                      : AttentionScores::cross(heads, res, text_len);
}

template <typename T>
Mat<T> attention_fwd(const Mat<T>& x, const Mat<T>& kv_in, Size res, AttentionKind kind,
                     const AttentionWeights<T>& wts, int heads, int layer_idx,
                     const AttentionHooks* hooks, AttnCache<T>* cache) {
  const int n = static_cast<int>(x.rows());
  const int channels = static_cast<int>(wts.query->cols());
  const int hd = channels / heads;
  const int m = static_cast<int>(kv_in.rows());
  if (n != res.height * res.width) throw Error(ErrorKind::kShape, "feature rows != h*w");
  const T scale = T(1) / std::sqrt(static_cast<T>(hd));

  Gate g;
  if (hooks != nullptr && hooks->surgery != nullptr) {
    g = gate(layer_idx, hooks->timestep, *hooks->surgery);
  }
  const bool surgery = kind == AttentionKind::kSelf ? g.apply_sac : g.apply_cam;
  if (surgery && cache != nullptr) {
    throw Error(ErrorKind::kInvalidConfig, "attention surgery is inference-only");
  }
  RegionIndexMap idx;
  if (surgery) idx = region_indices(res.height, res.width);
  const bool dumping = hooks != nullptr && hooks->dump && hooks->want_dump &&
                       hooks->want_dump(layer_idx, kind);
  AttentionScores dump;
  if (dumping) dump = make_dump(kind, heads, res, m);

  Mat<T> q = x * (*wts.query);
  Mat<T> k = kv_in * (*wts.key);
  Mat<T> v = kv_in * (*wts.value);
  Mat<T> o(n, channels);
  if (cache) cache->probs.resize(heads);
  Mat<T> s(n, m);
  for (int h = 0; h < heads; ++h) {
    s.noalias() = q.middleCols(h * hd, hd) * k.middleCols(h * hd, hd).transpose();
    s *= scale;
    if (kind == AttentionKind::kSelf) {
      if (surgery) {
        clone_block_inplace(s.data(), n, idx, static_cast<T>(hooks->surgery->s),
                            hooks->surgery->symmetric_clone);
      }
      softmax_rows(s.data(), n, m);
    } else {
      softmax_rows(s.data(), n, m);
      if (surgery) mask_rows_inplace(s.data(), n, m, idx);
    }
    if (dumping) {
      float* dst = dump.values.data() + h * dump.head_stride();
      for (Eigen::Index i = 0; i < s.size(); ++i) dst[i] = static_cast<float>(s.data()[i]);
    }
    o.middleCols(h * hd, hd).noalias() = s * v.middleCols(h * hd, hd);
    if (cache) cache->probs[h] = s;
  }
  if (dumping) hooks->dump(layer_idx, dump);
  Mat<T> y = o * (*wts.out);
  if (cache) {
    cache->x = x;
    cache->kv = kv_in;
    cache->q = std::move(q);
    cache->k = std::move(k);
    cache->v = std::move(v);
    cache->o = std::move(o);
  }
  return y;
}

// Returns d(query-side input). Key/value-side gradients are added to *d_kv
// when non-null (self attention), otherwise only to the weights.
template <typename T>
Mat<T> attention_bwd(const AttnCache<T>& c, const AttentionWeights<T>& wts, const AttnIdx& idx,
                     int heads, std::vector<Mat<T>>& G, const Mat<T>& dy, Mat<T>* d_kv) {
  const int channels = static_cast<int>(wts.query->cols());
  const int hd = channels / heads;
  const T scale = T(1) / std::sqrt(static_cast<T>(hd));
  G[idx.o].noalias() += c.o.transpose() * dy;
  const Mat<T> d_o = dy * wts.out->transpose();
  Mat<T> dq(c.q.rows(), channels);
  Mat<T> dk(c.k.rows(), channels);
  Mat<T> dv(c.v.rows(), channels);
  for (int h = 0; h < heads; ++h) {
    const Mat<T>& p = c.probs[h];
    const auto d_oh = d_o.middleCols(h * hd, hd);
    dv.middleCols(h * hd, hd).noalias() = p.transpose() * d_oh;
    Mat<T> dp = d_oh * c.v.middleCols(h * hd, hd).transpose();
    const auto row_dot = (dp.array() * p.array()).rowwise().sum().eval();
    Mat<T> ds = (p.array() * (dp.array().colwise() - row_dot)).matrix() * scale;
    dq.middleCols(h * hd, hd).noalias() = ds * c.k.middleCols(h * hd, hd);
    dk.middleCols(h * hd, hd).noalias() = ds.transpose() * c.q.middleCols(h * hd, hd);
  }
  G[idx.q].noalias() += c.x.transpose() * dq;
  G[idx.k].noalias() += c.kv.transpose() * dk;
  G[idx.v].noalias() += c.kv.transpose() * dv;
  Mat<T> dx = dq * wts.query->transpose();
  if (d_kv) {
    d_kv->noalias() += dk * wts.key->transpose();
    d_kv->noalias() += dv * wts.value->transpose();
  }
  return dx;
}

template <typename T>
AttentionWeights<T> weights_of(const std::vector<Mat<T>>& P, const AttnIdx& a) {
  return {&P[a.q], &P[a.k], &P[a.v], &P[a.o]};
}

// ------------------------------ composite blocks ---------------------------

template <typename T>
struct ResCache {
  NormCache<T> ln1;
  Mat<T> a1;  // ln1 output (silu input)
  Mat<T> s1;  // silu output (dw1 input)
  Mat<T> d1;  // dw1 output (pw1 input)
  NormCache<T> ln2;
  Mat<T> a2;
  Mat<T> s2;
  Mat<T> d2;
};

template <typename T>
Mat<T> res_fwd(const std::vector<Mat<T>>& P, const ResIdx& r, const Mat<T>& x, const Mat<T>& temb,
               int h, int w, ResCache<T>* c) {
  NormCache<T>* n1 = c ? &c->ln1 : nullptr;
  NormCache<T>* n2 = c ? &c->ln2 : nullptr;
  Mat<T> a1 = norm_fwd(P, r.ln1, x, n1);
  Mat<T> s1 = silu_fwd(a1);
  Mat<T> d1 = depthwise_fwd(P, r.dw1, s1, h, w);
  Mat<T> u = linear_fwd(P, r.pw1, d1);
  u.rowwise() += linear_fwd(P, r.temb, temb).row(0);
  Mat<T> a2 = norm_fwd(P, r.ln2, u, n2);
  Mat<T> s2 = silu_fwd(a2);
  Mat<T> d2 = depthwise_fwd(P, r.dw2, s2, h, w);
  Mat<T> y = x + linear_fwd(P, r.pw2, d2);
  if (c) {
    c->a1 = std::move(a1);
    c->s1 = std::move(s1);
    c->d1 = std::move(d1);
    c->a2 = std::move(a2);
    c->s2 = std::move(s2);
    c->d2 = std::move(d2);
  }
  return y;
}

template <typename T>
Mat<T> res_bwd(const std::vector<Mat<T>>& P, std::vector<Mat<T>>& G, const ResIdx& r,
               const ResCache<T>& c, const Mat<T>& temb, const Mat<T>& dy, int h, int w,
               Mat<T>* d_temb) {
  Mat<T> g = linear_bwd(P, G, r.pw2, c.d2, dy);
  g = depthwise_bwd(P, G, r.dw2, c.s2, g, h, w);
  g = silu_bwd(c.a2, g);
  g = norm_bwd(P, G, r.ln2, c.ln2, g);
  const Mat<T> du_sum = g.colwise().sum();
  *d_temb += linear_bwd(P, G, r.temb, temb, du_sum);
  g = linear_bwd(P, G, r.pw1, c.d1, g);
  g = depthwise_bwd(P, G, r.dw1, c.s1, g, h, w);
  g = silu_bwd(c.a1, g);
  g = norm_bwd(P, G, r.ln1, c.ln1, g);
  return dy + g;
}

template <typename T>
struct XfCache {
  NormCache<T> ln1;
  AttnCache<T> self;
  NormCache<T> ln2;
  AttnCache<T> cross;
  NormCache<T> ln3;
  Mat<T> n3;  // ln3 output
  Mat<T> f1;  // ff1 output (silu input)
  Mat<T> s;   // silu output
};

template <typename T>
Mat<T> xf_fwd(const std::vector<Mat<T>>& P, const XfIdx& b, const Mat<T>& x, Size res,
              const Mat<T>& text, int heads, int layer, const AttentionHooks* hooks,
              XfCache<T>* c) {
  Mat<T> y = x;
  {
    const Mat<T> n1 = norm_fwd(P, b.ln1, y, c ? &c->ln1 : nullptr);
    y += attention_fwd(n1, n1, res, AttentionKind::kSelf, weights_of(P, b.self), heads, layer,
                       hooks, c ? &c->self : nullptr);
  }
  {
    const Mat<T> n2 = norm_fwd(P, b.ln2, y, c ? &c->ln2 : nullptr);
    y += attention_fwd(n2, text, res, AttentionKind::kCross, weights_of(P, b.cross), heads,
                       layer, hooks, c ? &c->cross : nullptr);
  }
  Mat<T> n3 = norm_fwd(P, b.ln3, y, c ? &c->ln3 : nullptr);
  Mat<T> f1 = linear_fwd(P, b.ff1, n3);
  Mat<T> s = silu_fwd(f1);
  y += linear_fwd(P, b.ff2, s);
  if (c) {
    c->n3 = std::move(n3);
    c->f1 = std::move(f1);
    c->s = std::move(s);
  }
  return y;
}

template <typename T>
Mat<T> xf_bwd(const std::vector<Mat<T>>& P, std::vector<Mat<T>>& G, const XfIdx& b,
              const XfCache<T>& c, int heads, const Mat<T>& dy) {
  Mat<T> dx = dy;
  {
    Mat<T> g = linear_bwd(P, G, b.ff2, c.s, dy);
    g = silu_bwd(c.f1, g);
    g = linear_bwd(P, G, b.ff1, c.n3, g);
    dx += norm_bwd(P, G, b.ln3, c.ln3, g);
  }
  {
    Mat<T> g = attention_bwd(c.cross, weights_of(P, b.cross), b.cross, heads, G, dx,
                             static_cast<Mat<T>*>(nullptr));
    dx += norm_bwd(P, G, b.ln2, c.ln2, g);
  }
  {
    Mat<T> d_kv = Mat<T>::Zero(dx.rows(), dx.cols());
    Mat<T> g = attention_bwd(c.self, weights_of(P, b.self), b.self, heads, G, dx, &d_kv);
    g += d_kv;
    dx += norm_bwd(P, G, b.ln1, c.ln1, g);
  }
  return dx;
}

// Decoder and encoder enumerate blocks jointly: encoder stage s block j is
// s*n + j; decoder stage s block j is S*n + (S-1-s)*n + j.
int encoder_block(const NetworkConfig& cfg, int stage, int j) {
  return stage * cfg.blocks_per_stage + j;
}
int decoder_block(const NetworkConfig& cfg, int stage, int j) {
  return cfg.stages * cfg.blocks_per_stage + (cfg.stages - 1 - stage) * cfg.blocks_per_stage + j;
}

}  // namespace

template <typename T>
struct NetworkCache<T>::Impl {
  int h = 0;
  int w = 0;
  Mat<T> text;
  ConvCache<T> conv_in;
  Mat<T> t_sin;
  Mat<T> t_pre;  // time linear output (silu input)
  Mat<T> temb;
  std::vector<ResCache<T>> res;
  std::vector<XfCache<T>> xf;
  NormCache<T> ln_out;
  Mat<T> out_pre;  // ln_out output
  ConvCache<T> conv_out;
};

template <typename T>
NetworkCache<T>::NetworkCache() : impl_(std::make_unique<Impl>()) {}
template <typename T>
NetworkCache<T>::~NetworkCache() = default;
template <typename T>
NetworkCache<T>::NetworkCache(NetworkCache&&) noexcept = default;
template <typename T>
NetworkCache<T>& NetworkCache<T>::operator=(NetworkCache&&) noexcept = default;

template <typename T>
Network<T>::Network(const NetworkConfig& config) : config_(config) {
  config_.validate();
  layout_ = build_layout(config_, &params_);
}

template <typename T>
void Network<T>::init(uint64_t seed, Init scheme) {
  Rng rng(seed, 0x1417);
  auto& values = params_.values;
  for (auto& v : values) v.setZero();
  if (scheme == Init::kZero) return;
  for (int g : layout_->norm_gains) values[g].setOnes();
  for (size_t i = 0; i < values.size(); ++i) {
    const int fan_in = layout_->fan_in[i];
    if (fan_in == 0) continue;
    const double stddev = 1.0 / std::sqrt(static_cast<double>(fan_in));
    for (Eigen::Index j = 0; j < values[i].size(); ++j) {
      values[i].data()[j] = static_cast<T>(rng.normal() * stddev);
    }
  }
  if (scheme == Init::kTraining) {
    for (int h : layout_->head) values[h].setZero();
    return;
  }
  for (int b : layout_->biases) {
    for (Eigen::Index j = 0; j < values[b].size(); ++j) {
      values[b].data()[j] = static_cast<T>(0.1 * rng.normal());
    }
  }
  for (int g : layout_->norm_gains) {
    for (Eigen::Index j = 0; j < values[g].size(); ++j) {
      values[g].data()[j] = static_cast<T>(1.0 + 0.1 * rng.normal());
    }
  }
}

template <typename T>
Mat<T> Network<T>::forward(const Mat<T>& input, int h, int w, int timestep, const Mat<T>& text,
                           const AttentionHooks* hooks, NetworkCache<T>* cache) const {
  const auto& P = params_.values;
  const NetworkLayout& L = *layout_;
  const NetworkConfig& cfg = config_;
  if (input.rows() != static_cast<Eigen::Index>(h) * w || input.cols() != cfg.in_channels) {
    throw Error(ErrorKind::kShape, "network input must be (h*w) x 9");
  }
  if (h % cfg.spatial_multiple() != 0 || w % cfg.spatial_multiple() != 0) {
    throw Error(ErrorKind::kShape, "latent side not divisible by " +
                                       std::to_string(cfg.spatial_multiple()));
  }
  if (text.cols() != cfg.text_dim || text.rows() < 1) {
    throw Error(ErrorKind::kShape, "text embedding width does not match the network");
  }
  typename NetworkCache<T>::Impl* c = cache ? &cache->impl() : nullptr;
  if (c) {
    c->h = h;
    c->w = w;
    c->text = text;
    c->res.assign(cfg.block_count(), {});
    c->xf.assign(cfg.block_count(), {});
  }

  Mat<T> x = conv_fwd(P, L.conv_in, input, h, w, c ? &c->conv_in : nullptr);
  x += position_embedding<T>(h, w, cfg.channels);

  const Mat<T> t_sin = timestep_embedding<T>(timestep, cfg.channels);
  Mat<T> t_pre = linear_fwd(P, L.time, t_sin);
  const Mat<T> temb = silu_fwd(t_pre);
  if (c) {
    c->t_sin = t_sin;
    c->t_pre = t_pre;
    c->temb = temb;
  }

  auto run_pair = [&](int block, int bh, int bw) {
    x = res_fwd(P, L.res[block], x, temb, bh, bw, c ? &c->res[block] : nullptr);
    x = xf_fwd(P, L.xf[block], x, Size{bh, bw}, text, cfg.heads, block, hooks,
               c ? &c->xf[block] : nullptr);
  };

  std::vector<Mat<T>> skips(cfg.stages);
  int bh = h;
  int bw = w;
  for (int s = 0; s < cfg.stages; ++s) {
    for (int j = 0; j < cfg.blocks_per_stage; ++j) run_pair(encoder_block(cfg, s, j), bh, bw);
    if (s < cfg.stages - 1) {
      skips[s] = x;
      x = avgpool_fwd(x, bh, bw);
      bh /= 2;
      bw /= 2;
    }
  }
  for (int s = cfg.stages - 1; s >= 0; --s) {
    if (s < cfg.stages - 1) {
      x = upsample_fwd(x, bh, bw);
      bh *= 2;
      bw *= 2;
      x += skips[s];
    }
    for (int j = 0; j < cfg.blocks_per_stage; ++j) run_pair(decoder_block(cfg, s, j), bh, bw);
  }

  Mat<T> n = norm_fwd(P, L.ln_out, x, c ? &c->ln_out : nullptr);
  const Mat<T> a = silu_fwd(n);
  Mat<T> out = conv_fwd(P, L.conv_out, a, h, w, c ? &c->conv_out : nullptr);
  if (c) c->out_pre = std::move(n);
  return out;
}

template <typename T>
void Network<T>::backward(const NetworkCache<T>& cache, const Mat<T>& d_out,
                          std::vector<Mat<T>>* grads) const {
  const auto& P = params_.values;
  auto& G = *grads;
  const NetworkLayout& L = *layout_;
  const NetworkConfig& cfg = config_;
  const auto& c = cache.impl();
  const int h = c.h;
  const int w = c.w;
  if (G.size() != P.size()) throw Error(ErrorKind::kShape, "gradient set does not match");

  Mat<T> g = conv_bwd(P, G, L.conv_out, c.conv_out, d_out, h, w);
  g = silu_bwd(c.out_pre, g);
  g = norm_bwd(P, G, L.ln_out, c.ln_out, g);

  Mat<T> d_temb = Mat<T>::Zero(1, cfg.channels);
  auto back_pair = [&](int block, int bh, int bw) {
    g = xf_bwd(P, G, L.xf[block], c.xf[block], cfg.heads, g);
    g = res_bwd(P, G, L.res[block], c.res[block], c.temb, g, bh, bw, &d_temb);
  };

  std::vector<Mat<T>> d_skips(cfg.stages);
  const int low = 1 << (cfg.stages - 1);
  int bh = h / low;
  int bw = w / low;
  // Decoder in reverse: stages bottom-up mirror the forward top-down loop.
  {
    int dh = h;
    int dw = w;
    for (int s = 0; s < cfg.stages; ++s) {
      for (int j = cfg.blocks_per_stage - 1; j >= 0; --j) back_pair(decoder_block(cfg, s, j), dh, dw);
      if (s < cfg.stages - 1) {
        d_skips[s] = g;
        g = upsample_bwd(g, dh / 2, dw / 2);
        dh /= 2;
        dw /= 2;
      }
    }
    bh = dh;
    bw = dw;
  }
  for (int s = cfg.stages - 1; s >= 0; --s) {
    if (s < cfg.stages - 1) {
      g = avgpool_bwd(g, bh * 2, bw * 2);
      bh *= 2;
      bw *= 2;
      g += d_skips[s];
    }
    for (int j = cfg.blocks_per_stage - 1; j >= 0; --j) back_pair(encoder_block(cfg, s, j), bh, bw);
  }

  const Mat<T> d_tpre = silu_bwd(c.t_pre, d_temb);
  linear_bwd(P, G, L.time, c.t_sin, d_tpre);
  conv_bwd(P, G, L.conv_in, c.conv_in, g, h, w);
}

template <typename T>
Mat<T> self_attention_block(const Mat<T>& x, Size resolution, const AttentionWeights<T>& weights,
                            int heads, int layer_idx, const AttentionHooks* hooks) {
  return attention_fwd<T>(x, x, resolution, AttentionKind::kSelf, weights, heads, layer_idx,
                          hooks, nullptr);
}

template <typename T>
Mat<T> cross_attention_block(const Mat<T>& x, Size resolution, const Mat<T>& text,
                             const AttentionWeights<T>& weights, int heads, int layer_idx,
                             const AttentionHooks* hooks) {
  return attention_fwd<T>(x, text, resolution, AttentionKind::kCross, weights, heads, layer_idx,
                          hooks, nullptr);
}

#define GRIDICL_INSTANTIATE(T)                                                                \
  template struct ParamSet<T>;                                                                \
  template class NetworkCache<T>;                                                             \
  template class Network<T>;                                                                  \
  template Mat<T> timestep_embedding<T>(int, int);                                            \
  template Mat<T> position_embedding<T>(int, int, int);                                       \
  template Mat<T> self_attention_block<T>(const Mat<T>&, Size, const AttentionWeights<T>&,    \
                                          int, int, const AttentionHooks*);                   \
  template Mat<T> cross_attention_block<T>(const Mat<T>&, Size, const Mat<T>&,                \
                                           const AttentionWeights<T>&, int, int,              \
                                           const AttentionHooks*);

GRIDICL_INSTANTIATE(float)
GRIDICL_INSTANTIATE(double)

#undef GRIDICL_INSTANTIATE

}  // namespace gridicl
