// Copyright 2026 The cpt Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "cpt/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "cpt/errors.hpp"
#include "cpt/random.hpp"

namespace cpt::model {
namespace {

constexpr double kLayerNormEps = 1e-5;
constexpr double kGeluC = 0.7978845608028654;  // sqrt(2 / pi)
constexpr double kGeluA = 0.044715;

Matrix normal_matrix(int rows, int cols, double scale, std::mt19937_64& rng) {
  std::normal_distribution<double> dist(0.0, scale);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = dist(rng);
  return m;
}

Matrix ones(int cols) { return Matrix::Ones(1, cols); }
Matrix zeros(int rows, int cols) { return Matrix::Zero(rows, cols); }

// Row-wise layer norm. Returns y and fills xhat / rstd for backward.
Matrix layer_norm(const Matrix& x, const Matrix& gain, const Matrix& bias,
                  Matrix& xhat, Eigen::VectorXd& rstd) {
  const auto n = x.cols();
  xhat.resize(x.rows(), n);
  rstd.resize(x.rows());
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    double mean = x.row(r).mean();
    double var = (x.row(r).array() - mean).square().sum() /
                 static_cast<double>(n);
    double rs = 1.0 / std::sqrt(var + kLayerNormEps);
    rstd(r) = rs;
    xhat.row(r) = (x.row(r).array() - mean) * rs;
  }
  Matrix y = xhat.array().rowwise() * gain.row(0).array();
  y.array().rowwise() += bias.row(0).array();
  return y;
}

Matrix layer_norm_backward(const Matrix& dy, const Matrix& xhat,
                           const Eigen::VectorXd& rstd, const Matrix& gain,
                           Matrix* d_gain, Matrix* d_bias) {
  if (d_gain) *d_gain += (dy.array() * xhat.array()).colwise().sum().matrix();
  if (d_bias) *d_bias += dy.colwise().sum();
  Matrix dxhat = dy.array().rowwise() * gain.row(0).array();
  const double n = static_cast<double>(dy.cols());
  Matrix dx(dy.rows(), dy.cols());
  for (Eigen::Index r = 0; r < dy.rows(); ++r) {
    double m1 = dxhat.row(r).sum() / n;
    double m2 = dxhat.row(r).dot(xhat.row(r)) / n;
    dx.row(r) =
        rstd(r) * (dxhat.row(r).array() - m1 - xhat.row(r).array() * m2);
  }
  return dx;
}

double gelu(double x) {
  return 0.5 * x * (1.0 + std::tanh(kGeluC * (x + kGeluA * x * x * x)));
}

double gelu_grad(double x) {
  double t = std::tanh(kGeluC * (x + kGeluA * x * x * x));
  return 0.5 * (1.0 + t) +
         0.5 * x * (1.0 - t * t) * kGeluC * (1.0 + 3.0 * kGeluA * x * x);
}

// In-place log-softmax of each row.
void log_softmax_rows(Matrix& m) {
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    double mx = m.row(r).maxCoeff();
    double lse = mx + std::log((m.row(r).array() - mx).exp().sum());
    m.row(r).array() -= lse;
  }
}

// Softmax over the first `valid` entries of a row; the rest become zero.
template <typename Row>
void masked_softmax(Row&& row, Eigen::Index valid) {
  auto head = row.head(valid);
  double mx = head.maxCoeff();
  head = (head.array() - mx).exp();
  head /= head.sum();
  row.tail(row.size() - valid).setZero();
}

void check_ids(const BaseParams& base, std::span<const int> ids) {
  if (static_cast<int>(ids.size()) > base.config.max_context) {
    throw ContextOverflowError(
        "sequence of " + std::to_string(ids.size()) +
        " tokens exceeds context " + std::to_string(base.config.max_context));
  }
  for (int id : ids) {
    if (id < 0 || id >= base.config.vocab) {
      throw ParameterError("token id out of range: " + std::to_string(id));
    }
  }
}

}  // namespace

void ModelConfig::validate() const {
  if (layers < 1 || hidden < 1 || heads < 1 || vocab < 1 || max_context < 1 ||
      ffn < 1) {
    throw ParameterError("model dimensions must be positive");
  }
  if (hidden % heads != 0) {
    throw ParameterError("hidden size must be divisible by head count");
  }
}

BaseParams BaseParams::init(const ModelConfig& config, std::uint64_t seed,
                            double scale) {
  config.validate();
  std::mt19937_64 rng(seed);
  const int e = config.hidden;
  BaseParams p;
  p.config = config;
  p.tok_emb = normal_matrix(config.vocab, e, scale, rng);
  p.pos_emb = normal_matrix(config.max_context, e, scale, rng);
  for (int l = 0; l < config.layers; ++l) {
    LayerParams lp;
    lp.ln1_gain = ones(e);
    lp.ln1_bias = zeros(1, e);
    lp.wq = normal_matrix(e, e, scale, rng);
    lp.wk = normal_matrix(e, e, scale, rng);
    lp.wv = normal_matrix(e, e, scale, rng);
    lp.wo = normal_matrix(e, e, scale, rng);
    lp.ln2_gain = ones(e);
    lp.ln2_bias = zeros(1, e);
    lp.w1 = normal_matrix(e, config.ffn, scale, rng);
    lp.b1 = zeros(1, config.ffn);
    lp.w2 = normal_matrix(config.ffn, e, scale, rng);
    lp.b2 = zeros(1, e);
    p.layers.push_back(std::move(lp));
  }
  p.lnf_gain = ones(e);
  p.lnf_bias = zeros(1, e);
  p.w_out = normal_matrix(e, config.vocab, scale, rng);
  p.b_out = zeros(1, config.vocab);
  return p;
}

BaseParams BaseParams::zeros_like(const BaseParams& other) {
  BaseParams z = other;
  z.for_each([](const std::string&, Matrix& m) { m.setZero(); });
  return z;
}

void BaseParams::for_each(
    const std::function<void(const std::string&, Matrix&)>& fn) {
  fn("tok_emb", tok_emb);
  fn("pos_emb", pos_emb);
  for (std::size_t l = 0; l < layers.size(); ++l) {
    auto& lp = layers[l];
    const std::string p = "layer" + std::to_string(l) + ".";
    fn(p + "ln1_gain", lp.ln1_gain);
    fn(p + "ln1_bias", lp.ln1_bias);
    fn(p + "wq", lp.wq);
    fn(p + "wk", lp.wk);
    fn(p + "wv", lp.wv);
    fn(p + "wo", lp.wo);
    fn(p + "ln2_gain", lp.ln2_gain);
    fn(p + "ln2_bias", lp.ln2_bias);
    fn(p + "w1", lp.w1);
    fn(p + "b1", lp.b1);
    fn(p + "w2", lp.w2);
    fn(p + "b2", lp.b2);
  }
  fn("lnf_gain", lnf_gain);
  fn("lnf_bias", lnf_bias);
  fn("w_out", w_out);
  fn("b_out", b_out);
}

void BaseParams::for_each(
    const std::function<void(const std::string&, const Matrix&)>& fn) const {
  const_cast<BaseParams*>(this)->for_each(
      [&](const std::string& name, Matrix& m) { fn(name, m); });
}

ReparamState init_prefix(const ModelConfig& config, int m_len, int d_prime,
                         std::uint64_t seed, double scale) {
  config.validate();
  if (m_len < 1) throw ParameterError("prefix length must be at least 1");
  if (d_prime <= 0) d_prime = config.hidden;
  std::mt19937_64 rng(seed);
  ReparamState s;
  s.h_prime = normal_matrix(m_len, d_prime, scale, rng);
  s.w = normal_matrix(d_prime, config.prefix_width(), scale, rng);
  return s;
}

PrefixParams materialize_prefix(const ReparamState& state,
                                const ModelConfig& config) {
  if (state.h_prime.cols() != state.w.rows()) {
    throw DimensionError("h_prime has " + std::to_string(state.h_prime.cols()) +
                         " columns but w has " +
                         std::to_string(state.w.rows()) + " rows");
  }
  if (state.w.cols() != config.prefix_width()) {
    throw DimensionError("w has " + std::to_string(state.w.cols()) +
                         " columns, expected 2*L*E = " +
                         std::to_string(config.prefix_width()));
  }
  PrefixParams p;
  p.layers = config.layers;
  p.hidden = config.hidden;
  p.h = state.h_prime * state.w;
  return p;
}

ForwardTrace forward_trace(const BaseParams& base, const PrefixParams* prefix,
                           std::span<const int> ids) {
  check_ids(base, ids);
  const ModelConfig& cfg = base.config;
  if (prefix && (prefix->layers != cfg.layers || prefix->hidden != cfg.hidden ||
                 prefix->h.cols() != cfg.prefix_width())) {
    throw DimensionError("prefix does not match the model configuration");
  }
  const int t_len = static_cast<int>(ids.size());
  const int e = cfg.hidden;
  const int dh = e / cfg.heads;
  const int m = prefix ? prefix->m_len() : 0;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

  ForwardTrace tr;
  tr.ids.assign(ids.begin(), ids.end());
  tr.m_len = m;

  Matrix x(t_len, e);
  for (int t = 0; t < t_len; ++t) {
    x.row(t) = base.tok_emb.row(ids[t]) + base.pos_emb.row(t);
  }

  for (int l = 0; l < cfg.layers; ++l) {
    const LayerParams& lp = base.layers[l];
    LayerCache c;
    c.x_in = x;
    c.a = layer_norm(x, lp.ln1_gain, lp.ln1_bias, c.xhat1, c.rstd1);
    c.q = c.a * lp.wq;
    c.k = c.a * lp.wk;
    c.v = c.a * lp.wv;
    c.o.resize(t_len, e);
    c.attn.resize(cfg.heads);
    for (int h = 0; h < cfg.heads; ++h) {
      auto qh = c.q.middleCols(h * dh, dh);
      Matrix scores;
      Matrix mixed;
      if (prefix) {
        Matrix kf(m + t_len, dh);
        Matrix vf(m + t_len, dh);
        kf << prefix->keys(l).middleCols(h * dh, dh),
            c.k.middleCols(h * dh, dh);
        vf << prefix->values(l).middleCols(h * dh, dh),
            c.v.middleCols(h * dh, dh);
        scores = (qh * kf.transpose()) * scale;
        for (int t = 0; t < t_len; ++t) masked_softmax(scores.row(t), m + t + 1);
        mixed = scores * vf;
      } else {
        scores = (qh * c.k.middleCols(h * dh, dh).transpose()) * scale;
        for (int t = 0; t < t_len; ++t) masked_softmax(scores.row(t), t + 1);
        mixed = scores * c.v.middleCols(h * dh, dh);
      }
      c.o.middleCols(h * dh, dh) = mixed;
      c.attn[h] = std::move(scores);
    }
    c.x1 = x + c.o * lp.wo;
    c.c = layer_norm(c.x1, lp.ln2_gain, lp.ln2_bias, c.xhat2, c.rstd2);
    c.u = c.c * lp.w1;
    c.u.array().rowwise() += lp.b1.row(0).array();
    c.g = c.u.unaryExpr([](double v) { return gelu(v); });
    x = c.x1 + c.g * lp.w2;
    x.array().rowwise() += lp.b2.row(0).array();
    tr.layers.push_back(std::move(c));
  }

  tr.x_final = x;
  tr.f = layer_norm(x, base.lnf_gain, base.lnf_bias, tr.xhatf, tr.rstdf);
  tr.logits = tr.f * base.w_out;
  tr.logits.array().rowwise() += base.b_out.row(0).array();
  tr.log_probs = tr.logits;
  log_softmax_rows(tr.log_probs);
  return tr;
}

Matrix forward_with_prefix(const BaseParams& base,
                           const std::optional<PrefixParams>& prefix,
                           std::span<const int> ids) {
  ForwardTrace tr = forward_trace(base, prefix ? &*prefix : nullptr, ids);
  return tr.log_probs.array().exp().matrix();
}

Matrix forward_base(const BaseParams& base, std::span<const int> ids) {
  ForwardTrace tr = forward_trace(base, nullptr, ids);
  return tr.log_probs.array().exp().matrix();
}

void backward(const BaseParams& base, const PrefixParams* prefix,
              const ForwardTrace& tr, const Matrix& d_logits,
              BaseParams* base_grad, Matrix* prefix_grad) {
  const ModelConfig& cfg = base.config;
  const int t_len = static_cast<int>(tr.ids.size());
  const int e = cfg.hidden;
  const int dh = e / cfg.heads;
  const int m = tr.m_len;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
  if (prefix_grad && prefix) {
    if (prefix_grad->rows() != m || prefix_grad->cols() != cfg.prefix_width()) {
      throw DimensionError("prefix gradient has wrong shape");
    }
  }

  if (base_grad) {
    base_grad->w_out.noalias() += tr.f.transpose() * d_logits;
    base_grad->b_out += d_logits.colwise().sum();
  }
  Matrix df = d_logits * base.w_out.transpose();
  Matrix dx = layer_norm_backward(
      df, tr.xhatf, tr.rstdf, base.lnf_gain,
      base_grad ? &base_grad->lnf_gain : nullptr,
      base_grad ? &base_grad->lnf_bias : nullptr);

  for (int l = cfg.layers - 1; l >= 0; --l) {
    const LayerParams& lp = base.layers[l];
    const LayerCache& c = tr.layers[l];
    LayerParams* gp = base_grad ? &base_grad->layers[l] : nullptr;

    // x_out = x1 + gelu(ln2(x1) w1 + b1) w2 + b2
    Matrix dg = dx * lp.w2.transpose();
    if (gp) {
      gp->w2.noalias() += c.g.transpose() * dx;
      gp->b2 += dx.colwise().sum();
    }
    Matrix du = dg.array() *
                c.u.unaryExpr([](double v) { return gelu_grad(v); }).array();
    if (gp) {
      gp->w1.noalias() += c.c.transpose() * du;
      gp->b1 += du.colwise().sum();
    }
    Matrix dc = du * lp.w1.transpose();
    Matrix dx1 = dx + layer_norm_backward(dc, c.xhat2, c.rstd2, lp.ln2_gain,
                                          gp ? &gp->ln2_gain : nullptr,
                                          gp ? &gp->ln2_bias : nullptr);

    // x1 = x_in + attn(ln1(x_in)) wo
    if (gp) gp->wo.noalias() += c.o.transpose() * dx1;
    Matrix d_o = dx1 * lp.wo.transpose();
    Matrix dq(t_len, e), dk(t_len, e), dv(t_len, e);
    for (int h = 0; h < cfg.heads; ++h) {
      const Matrix& p = c.attn[h];
      Matrix kf(m + t_len, dh);
      Matrix vf(m + t_len, dh);
      if (m > 0) {
        kf << prefix->keys(l).middleCols(h * dh, dh),
            c.k.middleCols(h * dh, dh);
        vf << prefix->values(l).middleCols(h * dh, dh),
            c.v.middleCols(h * dh, dh);
      } else {
        kf = c.k.middleCols(h * dh, dh);
        vf = c.v.middleCols(h * dh, dh);
      }
      auto doh = d_o.middleCols(h * dh, dh);
      Matrix dp = doh * vf.transpose();
      Matrix dvf = p.transpose() * doh;
      Eigen::VectorXd row_dot = (dp.array() * p.array()).rowwise().sum();
      Matrix ds = p.array() * (dp.array().colwise() - row_dot.array());
      ds *= scale;
      dq.middleCols(h * dh, dh) = ds * kf;
      Matrix dkf = ds.transpose() * c.q.middleCols(h * dh, dh);
      dk.middleCols(h * dh, dh) = dkf.bottomRows(t_len);
      dv.middleCols(h * dh, dh) = dvf.bottomRows(t_len);
      if (prefix_grad && m > 0) {
        prefix_grad->middleCols(2 * l * e + h * dh, dh) += dkf.topRows(m);
        prefix_grad->middleCols(2 * l * e + e + h * dh, dh) += dvf.topRows(m);
      }
    }
    if (gp) {
      gp->wq.noalias() += c.a.transpose() * dq;
      gp->wk.noalias() += c.a.transpose() * dk;
      gp->wv.noalias() += c.a.transpose() * dv;
    }
    Matrix da = dq * lp.wq.transpose() + dk * lp.wk.transpose() +
                dv * lp.wv.transpose();
    dx = dx1 + layer_norm_backward(da, c.xhat1, c.rstd1, lp.ln1_gain,
                                   gp ? &gp->ln1_gain : nullptr,
                                   gp ? &gp->ln1_bias : nullptr);
  }

  if (base_grad) {
    for (int t = 0; t < t_len; ++t) {
      base_grad->tok_emb.row(tr.ids[t]) += dx.row(t);
      base_grad->pos_emb.row(t) += dx.row(t);
    }
  }
}

std::vector<int> conditioned_ids(std::span<const int> instruction,
                                 std::span<const int> x) {
  std::vector<int> ids;
  ids.reserve(instruction.size() + x.size() + 2);
  ids.push_back(1);  // <bos>
  ids.insert(ids.end(), instruction.begin(), instruction.end());
  ids.push_back(2);  // <sep>
  ids.insert(ids.end(), x.begin(), x.end());
  return ids;
}

std::vector<double> token_logprobs(const ForwardTrace& trace,
                                   std::size_t offset,
                                   std::span<const int> x) {
  std::vector<double> out(x.size());
  for (std::size_t t = 0; t < x.size(); ++t) {
    out[t] = trace.log_probs(static_cast<Eigen::Index>(offset + t - 1), x[t]);
  }
  return out;
}

double sequence_logprob(const BaseParams& base, const PrefixParams* prefix,
                        std::span<const int> instruction,
                        std::span<const int> x) {
  if (x.empty()) return 0.0;
  auto ids = conditioned_ids(instruction, x);
  ForwardTrace tr = forward_trace(base, prefix, ids);
  auto lp = token_logprobs(tr, code_offset(instruction.size()), x);
  return std::accumulate(lp.begin(), lp.end(), 0.0);
}

double masked_logprob(const BaseParams& base, const PrefixParams* prefix,
                      std::span<const int> instruction, std::span<const int> x,
                      std::span<const std::uint8_t> mask) {
  if (mask.size() != x.size()) {
    throw MaskAlignmentError("mask has " + std::to_string(mask.size()) +
                             " entries for " + std::to_string(x.size()) +
                             " tokens");
  }
  if (x.empty()) return 0.0;
  auto ids = conditioned_ids(instruction, x);
  ForwardTrace tr = forward_trace(base, prefix, ids);
  auto lp = token_logprobs(tr, code_offset(instruction.size()), x);
  double s = 0.0;
  for (std::size_t t = 0; t < x.size(); ++t) {
    if (mask[t]) s += lp[t];
  }
  return s;
}

IncrementalDecoder::IncrementalDecoder(const BaseParams& base,
                                       const PrefixParams* prefix)
    : base_(base), m_len_(prefix ? prefix->m_len() : 0) {
  const ModelConfig& cfg = base.config;
  for (int l = 0; l < cfg.layers; ++l) {
    Matrix k(m_len_ + cfg.max_context, cfg.hidden);
    Matrix v(m_len_ + cfg.max_context, cfg.hidden);
    if (prefix) {
      k.topRows(m_len_) = prefix->keys(l);
      v.topRows(m_len_) = prefix->values(l);
    }
    keys_.push_back(std::move(k));
    values_.push_back(std::move(v));
  }
}

RowVector IncrementalDecoder::step(int id) {
  const ModelConfig& cfg = base_.config;
  if (pos_ >= cfg.max_context) {
    throw ContextOverflowError("decoder context is full");
  }
  if (id < 0 || id >= cfg.vocab) {
    throw ParameterError("token id out of range: " + std::to_string(id));
  }
  const int e = cfg.hidden;
  const int dh = e / cfg.heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
  const int n = m_len_ + pos_ + 1;

  Matrix x = base_.tok_emb.row(id) + base_.pos_emb.row(pos_);
  Matrix xhat;
  Eigen::VectorXd rstd;
  for (int l = 0; l < cfg.layers; ++l) {
    const LayerParams& lp = base_.layers[l];
    Matrix a = layer_norm(x, lp.ln1_gain, lp.ln1_bias, xhat, rstd);
    Matrix q = a * lp.wq;
    keys_[l].row(m_len_ + pos_) = a * lp.wk;
    values_[l].row(m_len_ + pos_) = a * lp.wv;
    Matrix o(1, e);
    for (int h = 0; h < cfg.heads; ++h) {
      Matrix s = (q.middleCols(h * dh, dh) *
                  keys_[l].block(0, h * dh, n, dh).transpose()) *
                 scale;
      masked_softmax(s.row(0), n);
      o.middleCols(h * dh, dh) = s * values_[l].block(0, h * dh, n, dh);
    }
    Matrix x1 = x + o * lp.wo;
    Matrix c = layer_norm(x1, lp.ln2_gain, lp.ln2_bias, xhat, rstd);
    Matrix u = c * lp.w1 + lp.b1;
    Matrix g = u.unaryExpr([](double v) { return gelu(v); });
    x = x1 + g * lp.w2 + lp.b2;
  }
  Matrix f = layer_norm(x, base_.lnf_gain, base_.lnf_bias, xhat, rstd);
  Matrix logits = f * base_.w_out + base_.b_out;
  log_softmax_rows(logits);
  ++pos_;
  return logits.row(0);
}

int sample_token(const RowVector& log_probs, double temperature, double top_p,
                 std::mt19937_64& rng) {
  const Eigen::Index v = log_probs.size();
  if (temperature < 1e-6) {
    Eigen::Index best = 0;
    log_probs.maxCoeff(&best);
    return static_cast<int>(best);
  }
  RowVector p = log_probs / temperature;
  p.array() -= p.maxCoeff();
  p = p.array().exp();
  p /= p.sum();
  std::vector<int> order(static_cast<std::size_t>(v));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return p(a) > p(b); });
  std::size_t keep = order.size();
  if (top_p < 1.0) {
    double cum = 0.0;
    for (std::size_t i = 0; i < order.size(); ++i) {
      cum += p(order[i]);
      if (cum >= top_p) {
        keep = i + 1;
        break;
      }
    }
  }
  double mass = 0.0;
  for (std::size_t i = 0; i < keep; ++i) mass += p(order[i]);
  double r = uniform01(rng) * mass;
  double acc = 0.0;
  for (std::size_t i = 0; i < keep; ++i) {
    acc += p(order[i]);
    if (r < acc) return order[i];
  }
  return order[keep - 1];
}

std::vector<std::vector<int>> generate(const BaseParams& base,
                                       const PrefixParams* prefix,
                                       std::span<const int> instruction,
                                       const GenerationConfig& gen,
                                       int eos_id) {
  if (gen.temperature <= 0.0) {
    throw ParameterError("temperature must be positive");
  }
  if (gen.top_p <= 0.0 || gen.top_p > 1.0) {
    throw ParameterError("top_p must be in (0, 1]");
  }
  auto prompt = conditioned_ids(instruction, {});
  check_ids(base, prompt);
  std::mt19937_64 rng(gen.seed);
  std::vector<std::vector<int>> samples;
  samples.reserve(static_cast<std::size_t>(std::max(gen.n_samples, 0)));
  for (int s = 0; s < gen.n_samples; ++s) {
    IncrementalDecoder dec(base, prefix);
    RowVector lp;
    for (int id : prompt) lp = dec.step(id);
    std::vector<int> out;
    for (int i = 0; i < gen.max_new_tokens; ++i) {
      int tok = sample_token(lp, gen.temperature, gen.top_p, rng);
      if (tok == eos_id) break;
      out.push_back(tok);
      if (dec.position() >= base.config.max_context) break;
      lp = dec.step(tok);
    }
    samples.push_back(std::move(out));
  }
  return samples;
}

}  // namespace cpt::model
