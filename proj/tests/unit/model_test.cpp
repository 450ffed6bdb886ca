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

#include <cmath>
#include <filesystem>
#include <random>

#include "cpt/checkpoint.hpp"
#include "cpt/errors.hpp"
#include "cpt/model.hpp"
#include "cpt/vocab.hpp"
#include "doctest.h"

using namespace cpt;
using namespace cpt::model;

namespace {

ModelConfig small_config(int vocab = 24) {
  ModelConfig c;
  c.layers = 2;
  c.hidden = 16;
  c.heads = 2;
  c.vocab = vocab;
  c.max_context = 40;
  c.ffn = 32;
  return c;
}

std::vector<int> random_ids(std::mt19937_64& rng, int len, int vocab) {
  std::vector<int> ids(len);
  for (auto& id : ids) id = static_cast<int>(rng() % vocab);
  return ids;
}

// Straight loop transcription of the decoder, one position at a time.
using Vec = std::vector<double>;

Vec vec_mat(const Vec& x, const Matrix& w) {
  Vec y(w.cols(), 0.0);
  for (int j = 0; j < w.cols(); ++j) {
    for (int i = 0; i < w.rows(); ++i) y[j] += x[i] * w(i, j);
  }
  return y;
}

Vec norm(const Vec& x, const Matrix& g, const Matrix& b) {
  double mean = 0.0, var = 0.0;
  for (double v : x) mean += v;
  mean /= x.size();
  for (double v : x) var += (v - mean) * (v - mean);
  var /= x.size();
  Vec y(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    y[i] = (x[i] - mean) / std::sqrt(var + 1e-5) * g(0, i) + b(0, i);
  }
  return y;
}

double gelu_ref(double x) {
  const double pi = std::acos(-1.0);
  return 0.5 * x * (1.0 + std::tanh(std::sqrt(2.0 / pi) * (x + 0.044715 * x * x * x)));
}

std::vector<Vec> reference_probs(const BaseParams& p, const Matrix* prefix,
                                 const std::vector<int>& ids) {
  const auto& cfg = p.config;
  const int e = cfg.hidden, heads = cfg.heads, dh = e / heads;
  const int m = prefix ? static_cast<int>(prefix->rows()) : 0;
  const int t_len = static_cast<int>(ids.size());
  std::vector<Vec> x(t_len, Vec(e));
  for (int t = 0; t < t_len; ++t) {
    for (int i = 0; i < e; ++i) x[t][i] = p.tok_emb(ids[t], i) + p.pos_emb(t, i);
  }
  for (int l = 0; l < cfg.layers; ++l) {
    const auto& lp = p.layers[l];
    std::vector<Vec> keys, vals, qs(t_len);
    for (int j = 0; j < m; ++j) {
      Vec k(e), v(e);
      for (int i = 0; i < e; ++i) {
        k[i] = (*prefix)(j, 2 * l * e + i);
        v[i] = (*prefix)(j, 2 * l * e + e + i);
      }
      keys.push_back(k);
      vals.push_back(v);
    }
    for (int t = 0; t < t_len; ++t) {
      Vec a = norm(x[t], lp.ln1_gain, lp.ln1_bias);
      qs[t] = vec_mat(a, lp.wq);
      keys.push_back(vec_mat(a, lp.wk));
      vals.push_back(vec_mat(a, lp.wv));
    }
    for (int t = 0; t < t_len; ++t) {
      Vec o(e, 0.0);
      for (int h = 0; h < heads; ++h) {
        const int n = m + t + 1;
        Vec s(n);
        double mx = -1e300;
        for (int j = 0; j < n; ++j) {
          double d = 0.0;
          for (int i = 0; i < dh; ++i) d += qs[t][h * dh + i] * keys[j][h * dh + i];
          s[j] = d / std::sqrt(static_cast<double>(dh));
          mx = std::max(mx, s[j]);
        }
        double z = 0.0;
        for (auto& v : s) z += (v = std::exp(v - mx));
        for (int j = 0; j < n; ++j) {
          for (int i = 0; i < dh; ++i) o[h * dh + i] += s[j] / z * vals[j][h * dh + i];
        }
      }
      Vec proj = vec_mat(o, lp.wo);
      Vec x1(e);
      for (int i = 0; i < e; ++i) x1[i] = x[t][i] + proj[i];
      Vec u = vec_mat(norm(x1, lp.ln2_gain, lp.ln2_bias), lp.w1);
      for (std::size_t i = 0; i < u.size(); ++i) u[i] = gelu_ref(u[i] + lp.b1(0, i));
      Vec f = vec_mat(u, lp.w2);
      for (int i = 0; i < e; ++i) x1[i] += f[i] + lp.b2(0, i);
      x[t] = x1;
    }
  }
  std::vector<Vec> out;
  for (int t = 0; t < t_len; ++t) {
    Vec logits = vec_mat(norm(x[t], p.lnf_gain, p.lnf_bias), p.w_out);
    double mx = -1e300, z = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
      logits[i] += p.b_out(0, i);
      mx = std::max(mx, logits[i]);
    }
    for (auto& v : logits) z += (v = std::exp(v - mx));
    for (auto& v : logits) v /= z;
    out.push_back(logits);
  }
  return out;
}

BaseParams uniform_model() {
  auto cfg = small_config(4);
  auto p = BaseParams::init(cfg, 1, 0.3);
  p.w_out.setZero();
  p.b_out.setZero();
  return p;
}

}  // namespace

TEST_CASE("config validation") {
  CHECK_NOTHROW(small_config().validate());
  auto c = small_config();
  c.heads = 3;
  CHECK_THROWS_AS(c.validate(), ParameterError);
  c = small_config();
  c.layers = 0;
  CHECK_THROWS_AS(c.validate(), ParameterError);
}

TEST_CASE("forward matches the loop reference with and without a prefix") {
  std::mt19937_64 rng(21);
  auto base = BaseParams::init(small_config(), 4, 0.3);
  auto prefix = materialize_prefix(init_prefix(base.config, 3, 0, 8, 0.4),
                                   base.config);
  for (int it = 0; it < 5; ++it) {
    auto ids = random_ids(rng, 1 + static_cast<int>(rng() % 12), base.config.vocab);
    Matrix plain = forward_base(base, ids);
    Matrix with = forward_with_prefix(base, prefix, ids);
    auto ref_plain = reference_probs(base, nullptr, ids);
    auto ref_with = reference_probs(base, &prefix.h, ids);
    for (std::size_t t = 0; t < ids.size(); ++t) {
      for (int v = 0; v < base.config.vocab; ++v) {
        CHECK(std::abs(plain(t, v) - ref_plain[t][v]) < 1e-12);
        CHECK(std::abs(with(t, v) - ref_with[t][v]) < 1e-12);
      }
    }
  }
}

TEST_CASE("prefix-free forward is bit-identical to the base forward") {
  std::mt19937_64 rng(2);
  auto base = BaseParams::init(small_config(), 5, 0.2);
  PrefixParams empty;
  empty.layers = base.config.layers;
  empty.hidden = base.config.hidden;
  empty.h = Matrix(0, base.config.prefix_width());
  for (int it = 0; it < 20; ++it) {
    auto ids = random_ids(rng, 1 + static_cast<int>(rng() % 20), base.config.vocab);
    Matrix plain = forward_base(base, ids);
    CHECK((forward_with_prefix(base, std::nullopt, ids).array() ==
           plain.array()).all());
    CHECK((forward_with_prefix(base, empty, ids).array() == plain.array()).all());
  }
}

TEST_CASE("rows are normalized and the model is causal") {
  std::mt19937_64 rng(6);
  auto base = BaseParams::init(small_config(), 7, 0.3);
  auto prefix = materialize_prefix(init_prefix(base.config, 4, 0, 9, 0.3),
                                   base.config);
  for (int it = 0; it < 10; ++it) {
    auto ids = random_ids(rng, 10, base.config.vocab);
    Matrix p = forward_with_prefix(base, prefix, ids);
    for (Eigen::Index t = 0; t < p.rows(); ++t) {
      CHECK(std::abs(p.row(t).sum() - 1.0) < 1e-12);
    }
    auto changed = ids;
    int pos = static_cast<int>(rng() % ids.size());
    changed[pos] = (changed[pos] + 1) % base.config.vocab;
    Matrix q = forward_with_prefix(base, prefix, changed);
    for (int t = 0; t < pos; ++t) {
      CHECK((p.row(t).array() == q.row(t).array()).all());
    }
  }
}

TEST_CASE("context overflow and bad ids") {
  auto base = BaseParams::init(small_config(), 1);
  std::vector<int> long_ids(base.config.max_context + 1, 0);
  CHECK_THROWS_AS(forward_base(base, long_ids), ContextOverflowError);
  std::vector<int> bad{0, base.config.vocab};
  CHECK_THROWS_AS(forward_base(base, bad), ParameterError);
}

TEST_CASE("prefix init and materialization") {
  auto cfg = small_config();
  auto s1 = init_prefix(cfg, 5, 0, 42);
  auto s2 = init_prefix(cfg, 5, 0, 42);
  CHECK((s1.h_prime.array() == s2.h_prime.array()).all());
  CHECK((s1.w.array() == s2.w.array()).all());
  CHECK(s1.w.rows() == cfg.hidden);
  CHECK(s1.w.cols() == cfg.prefix_width());

  auto p = materialize_prefix(s1, cfg);
  CHECK(p.m_len() == 5);
  for (int l = 0; l < cfg.layers; ++l) {
    CHECK(p.keys(l).rows() == 5);
    CHECK(p.keys(l).cols() == cfg.hidden);
    CHECK(p.values(l).rows() == 5);
    CHECK(p.values(l).cols() == cfg.hidden);
  }

  ReparamState ident;
  ident.h_prime = Matrix::Random(3, cfg.prefix_width());
  ident.w = Matrix::Identity(cfg.prefix_width(), cfg.prefix_width());
  CHECK((materialize_prefix(ident, cfg).h.array() == ident.h_prime.array()).all());

  ReparamState zero = s1;
  zero.h_prime.setZero();
  CHECK(materialize_prefix(zero, cfg).h.isZero(0.0));

  ReparamState bad = s1;
  bad.w = Matrix::Zero(cfg.hidden, 7);
  CHECK_THROWS_AS(materialize_prefix(bad, cfg), DimensionError);
}

TEST_CASE("materialize is linear in h_prime") {
  auto cfg = small_config();
  auto s1 = init_prefix(cfg, 4, 0, 1, 0.5);
  auto s2 = init_prefix(cfg, 4, 0, 2, 0.5);
  s2.w = s1.w;
  const double alpha = 0.75, beta = -1.5;
  ReparamState mix = s1;
  mix.h_prime = alpha * s1.h_prime + beta * s2.h_prime;
  Matrix lhs = materialize_prefix(mix, cfg).h;
  Matrix rhs = alpha * materialize_prefix(s1, cfg).h +
               beta * materialize_prefix(s2, cfg).h;
  CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("log-probabilities under a uniform model") {
  auto base = uniform_model();
  std::vector<int> instr{0, 3};
  std::vector<int> one{2};
  CHECK(sequence_logprob(base, nullptr, instr, one) ==
        doctest::Approx(std::log(0.25)).epsilon(1e-12));
  CHECK(sequence_logprob(base, nullptr, instr, {}) == 0.0);
  std::vector<int> x{0, 1, 2};
  std::vector<std::uint8_t> pick{0, 1, 0};
  CHECK(masked_logprob(base, nullptr, instr, x, pick) ==
        doctest::Approx(std::log(0.25)).epsilon(1e-12));
}

TEST_CASE("masked log-probabilities decompose") {
  std::mt19937_64 rng(13);
  auto base = BaseParams::init(small_config(), 3, 0.3);
  auto prefix = materialize_prefix(init_prefix(base.config, 3, 0, 4, 0.3),
                                   base.config);
  for (int it = 0; it < 20; ++it) {
    auto instr = random_ids(rng, 4, base.config.vocab);
    auto x = random_ids(rng, 1 + static_cast<int>(rng() % 10), base.config.vocab);
    std::vector<std::uint8_t> m(x.size()), comp(x.size()), ones(x.size(), 1),
        zeros(x.size(), 0);
    for (std::size_t i = 0; i < x.size(); ++i) {
      m[i] = rng() % 2;
      comp[i] = 1 - m[i];
    }
    double full = sequence_logprob(base, &prefix, instr, x);
    CHECK(full <= 0.0);
    CHECK(std::abs(masked_logprob(base, &prefix, instr, x, m) +
                   masked_logprob(base, &prefix, instr, x, comp) - full) < 1e-9);
    CHECK(masked_logprob(base, &prefix, instr, x, ones) == full);
    CHECK(masked_logprob(base, &prefix, instr, x, zeros) == 0.0);
  }
  std::vector<int> x{1, 2};
  std::vector<std::uint8_t> short_mask{1};
  CHECK_THROWS_AS(masked_logprob(base, nullptr, {}, x, short_mask),
                  MaskAlignmentError);
}

TEST_CASE("incremental decoder matches the full forward") {
  std::mt19937_64 rng(17);
  auto base = BaseParams::init(small_config(), 11, 0.3);
  auto prefix = materialize_prefix(init_prefix(base.config, 3, 0, 4, 0.3),
                                   base.config);
  auto ids = random_ids(rng, 15, base.config.vocab);
  ForwardTrace tr = forward_trace(base, &prefix, ids);
  IncrementalDecoder dec(base, &prefix);
  for (std::size_t t = 0; t < ids.size(); ++t) {
    RowVector lp = dec.step(ids[t]);
    CHECK((lp - tr.log_probs.row(t)).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("generation") {
  auto base = BaseParams::init(small_config(), 19, 0.5);
  std::vector<int> instr{5, 6, 7};
  GenerationConfig gen;
  gen.n_samples = 4;
  gen.max_new_tokens = 12;
  gen.seed = 99;
  auto a = generate(base, nullptr, instr, gen, 3);
  auto b = generate(base, nullptr, instr, gen, 3);
  CHECK(a == b);
  CHECK(a.size() == 4);
  for (const auto& s : a) {
    CHECK(s.size() <= 12);
    for (int id : s) CHECK(id != 3);
  }

  gen.temperature = 1e-9;
  auto greedy = generate(base, nullptr, instr, gen, 3);
  for (const auto& s : greedy) CHECK(s == greedy[0]);

  gen.temperature = 0.0;
  CHECK_THROWS_AS(generate(base, nullptr, instr, gen, 3), ParameterError);
}

TEST_CASE("sampling respects top-p") {
  RowVector lp(4);
  lp << std::log(0.6), std::log(0.3), std::log(0.08), std::log(0.02);
  std::mt19937_64 rng(1);
  std::array<int, 4> seen{};
  for (int i = 0; i < 4000; ++i) ++seen[sample_token(lp, 1.0, 0.85, rng)];
  CHECK(seen[2] == 0);
  CHECK(seen[3] == 0);
  CHECK(seen[0] > seen[1]);
  std::array<int, 4> full{};
  for (int i = 0; i < 4000; ++i) ++full[sample_token(lp, 1.0, 1.0, rng)];
  CHECK(full[2] > 0);
  CHECK(sample_token(lp, 1e-9, 0.5, rng) == 0);
}

TEST_CASE("checkpoints round trip") {
  auto dir = std::filesystem::temp_directory_path() / "cpt_model_test";
  std::filesystem::create_directories(dir);
  auto base = BaseParams::init(small_config(), 23, 0.1);
  std::vector<std::string> tokens{"<unk>", "<bos>", "<sep>", "<eos>"};
  while (static_cast<int>(tokens.size()) < base.config.vocab) {
    tokens.push_back("t" + std::to_string(tokens.size()));
  }
  Vocabulary vocab(tokens);
  checkpoint::save_base(dir / "base.ckpt", base, vocab);
  auto loaded = checkpoint::load_base(dir / "base.ckpt");
  CHECK(loaded.params.config == base.config);
  CHECK(loaded.vocab.tokens() == vocab.tokens());
  CHECK(checkpoint::serialize_base(loaded.params, loaded.vocab) ==
        checkpoint::serialize_base(base, vocab));

  auto state = init_prefix(base.config, 3, 8, 5);
  auto prefix = materialize_prefix(state, base.config);
  checkpoint::save_prefix(dir / "prefix.ckpt", prefix, base.config, 8);
  auto lp = checkpoint::load_prefix(dir / "prefix.ckpt");
  CHECK(lp.d_prime == 8);
  CHECK(lp.config == base.config);
  CHECK((lp.prefix.h.array() == prefix.h.array()).all());

  checkpoint::TrainState ts;
  ts.state = state;
  ts.adam_m = {Matrix::Constant(3, 8, 0.5), Matrix::Constant(8, base.config.prefix_width(), 0.25)};
  ts.adam_v = ts.adam_m;
  ts.adam_step = 17;
  ts.stage = 2;
  ts.epochs_done = 1;
  checkpoint::save_train_state(dir / "state.ckpt", ts, base.config);
  auto back = checkpoint::load_train_state(dir / "state.ckpt", base.config);
  CHECK(back.adam_step == 17);
  CHECK(back.stage == 2);
  CHECK(back.epochs_done == 1);
  CHECK((back.state.w.array() == state.w.array()).all());
  CHECK((back.adam_v[1].array() == ts.adam_v[1].array()).all());

  checkpoint::write_file_atomic(dir / "junk.ckpt", "not a checkpoint");
  CHECK_THROWS_AS(checkpoint::load_base(dir / "junk.ckpt"), cpt::Error);
  std::filesystem::remove_all(dir);
}

TEST_CASE("vocabulary") {
  std::vector<lexdiff::TokenSeq> corpus{lexdiff::tokenize("x = y\nx = 1\n")};
  auto v = Vocabulary::build(corpus, 16);
  CHECK(v.token(Vocabulary::kBos) == "<bos>");
  CHECK(std::vector<std::string>(v.tokens().begin() + 4, v.tokens().end()) ==
        std::vector<std::string>{"<nl>", "=", "x", "1", "y"});
  CHECK(Vocabulary::build(corpus, 6).size() == 6);
  auto ids = v.encode(lexdiff::tokenize("x = z\n"));
  CHECK(ids[2] == Vocabulary::kUnk);
  CHECK(v.decode(std::vector<int>{Vocabulary::kBos, 6, Vocabulary::kEos}).texts() ==
        std::vector<std::string>{"x"});
}
