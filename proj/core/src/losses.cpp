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

#include "cpt/losses.hpp"

#include <cmath>
#include <limits>
#include <optional>
#include <string>

#include "cpt/errors.hpp"

namespace cpt::train {
namespace {

double softplus(double x) {
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  double e = std::exp(x);
  return e / (1.0 + e);
}

void check_mask(std::size_t n, std::span<const std::uint8_t> mask,
                const char* what) {
  if (mask.size() != n) {
    throw MaskAlignmentError(std::string(what) + ": mask has " +
                             std::to_string(mask.size()) + " entries for " +
                             std::to_string(n) + " tokens");
  }
}

// KL(P || Q) for one row of log-probabilities.
double kl_row(const Matrix& log_p, const Matrix& log_q, Eigen::Index r) {
  return (log_p.row(r).array().exp() *
          (log_p.row(r).array() - log_q.row(r).array()))
      .sum();
}

// Adds d KL(P || Q) / d logits_P (scaled) to `d_logits.row(r)`.
void add_kl_grad(const Matrix& log_p, const Matrix& log_q, Eigen::Index r,
                 double scale, Matrix& d_logits) {
  double kl = kl_row(log_p, log_q, r);
  d_logits.row(r).array() +=
      scale * log_p.row(r).array().exp() *
      (log_p.row(r).array() - log_q.row(r).array() - kl);
}

// d(coef * log P(target)) / d logits = coef * (onehot - P).
void add_logprob_grad(const Matrix& log_p, Eigen::Index r, int target,
                      double coef, Matrix& d_logits) {
  if (coef == 0.0) return;
  d_logits.row(r).array() -= coef * log_p.row(r).array().exp();
  d_logits(r, target) += coef;
}

void chain_to_state(const model::ReparamState& state, const Matrix& d_h,
                    ReparamGrad& grad) {
  grad.h_prime = d_h * state.w.transpose();
  grad.w = state.h_prime.transpose() * d_h;
}

}  // namespace

void LossWeights::validate() const {
  if (lm < 0.0 || rank < 0.0 || kl < 0.0) {
    throw ParameterError("loss weights must be non-negative");
  }
  if (lm == 0.0 && rank == 0.0 && kl == 0.0) {
    throw ParameterError("at least one loss weight must be positive");
  }
}

double rank_loss(double s_a, double s_b) {
  if (!std::isfinite(s_a) || !std::isfinite(s_b)) {
    throw NumericError("rank_loss received a non-finite log-likelihood");
  }
  return softplus(s_b - s_a);
}

double lm_loss(std::span<const double> token_logprobs,
               std::span<const std::uint8_t> mask) {
  check_mask(token_logprobs.size(), mask, "lm_loss");
  double s = 0.0;
  for (std::size_t t = 0; t < mask.size(); ++t) {
    if (mask[t]) s -= token_logprobs[t];
  }
  return s;
}

double kl_loss(const Matrix& prefixed_dists, const Matrix& base_dists,
               std::span<const std::uint8_t> mask) {
  if (prefixed_dists.rows() != base_dists.rows() ||
      prefixed_dists.cols() != base_dists.cols()) {
    throw DimensionError("kl_loss: distribution shapes differ");
  }
  check_mask(static_cast<std::size_t>(prefixed_dists.rows()), mask, "kl_loss");
  for (Eigen::Index r = 0; r < prefixed_dists.rows(); ++r) {
    if (std::abs(prefixed_dists.row(r).sum() - 1.0) > 1e-6 ||
        std::abs(base_dists.row(r).sum() - 1.0) > 1e-6) {
      throw NumericError("kl_loss: row " + std::to_string(r) +
                         " is not a normalized distribution");
    }
  }
  double total = 0.0;
  for (Eigen::Index r = 0; r < prefixed_dists.rows(); ++r) {
    if (mask[static_cast<std::size_t>(r)]) continue;
    for (Eigen::Index v = 0; v < prefixed_dists.cols(); ++v) {
      double p = prefixed_dists(r, v);
      if (p <= 0.0) continue;
      double q = base_dists(r, v);
      if (q <= 0.0) return std::numeric_limits<double>::infinity();
      total += p * std::log(p / q);
    }
  }
  return std::max(total, 0.0);
}

LossBreakdown combine_losses(double lm, double rank, double kl,
                             const LossWeights& weights) {
  return LossBreakdown{lm, rank, kl,
                       weights.lm * lm + weights.rank * rank +
                           weights.kl * kl};
}

LossBreakdown total_loss(const TrainingExample& ex,
                         const model::BaseParams& base,
                         const model::ReparamState& state,
                         const LossWeights& weights, KlScope kl_over,
                         ReparamGrad* grad) {
  check_mask(ex.a_ids.size(), ex.a_mask, "x_a");
  check_mask(ex.b_ids.size(), ex.b_mask, "x_b");
  const model::PrefixParams prefix = model::materialize_prefix(state,
                                                               base.config);
  const std::size_t off = model::code_offset(ex.instruction.size());

  auto ids_a = model::conditioned_ids(ex.instruction, ex.a_ids);
  auto ids_b = model::conditioned_ids(ex.instruction, ex.b_ids);
  auto tr_a = model::forward_trace(base, &prefix, ids_a);
  auto tr_b = model::forward_trace(base, &prefix, ids_b);
  auto lp_a = model::token_logprobs(tr_a, off, ex.a_ids);
  auto lp_b = model::token_logprobs(tr_b, off, ex.b_ids);

  double s_a = 0.0;
  double s_b = 0.0;
  for (std::size_t t = 0; t < lp_a.size(); ++t) {
    if (ex.a_mask[t]) s_a += lp_a[t];
  }
  for (std::size_t t = 0; t < lp_b.size(); ++t) {
    if (ex.b_mask[t]) s_b += lp_b[t];
  }
  const double rank = rank_loss(s_a, s_b);
  const double lm = -s_a;

  // Reference distributions from the frozen base, no prefix.
  auto ref_a = model::forward_trace(base, nullptr, ids_a);
  std::optional<model::ForwardTrace> ref_b;
  if (kl_over == KlScope::kBoth) {
    ref_b = model::forward_trace(base, nullptr, ids_b);
  }
  double kl = 0.0;
  for (std::size_t t = 0; t < ex.a_ids.size(); ++t) {
    if (!ex.a_mask[t]) {
      kl += kl_row(tr_a.log_probs, ref_a.log_probs,
                   static_cast<Eigen::Index>(off + t - 1));
    }
  }
  if (ref_b) {
    for (std::size_t t = 0; t < ex.b_ids.size(); ++t) {
      if (!ex.b_mask[t]) {
        kl += kl_row(tr_b.log_probs, ref_b->log_probs,
                     static_cast<Eigen::Index>(off + t - 1));
      }
    }
  }
  LossBreakdown out = combine_losses(lm, rank, kl, weights);
  if (!grad) return out;

  // d rank / d s_a = -sigmoid(s_b - s_a), d rank / d s_b = +sigmoid(s_b - s_a)
  const double sig = sigmoid(s_b - s_a);
  const Eigen::Index vocab = base.config.vocab;
  Matrix d_a = Matrix::Zero(static_cast<Eigen::Index>(ids_a.size()), vocab);
  Matrix d_b = Matrix::Zero(static_cast<Eigen::Index>(ids_b.size()), vocab);
  for (std::size_t t = 0; t < ex.a_ids.size(); ++t) {
    auto r = static_cast<Eigen::Index>(off + t - 1);
    if (ex.a_mask[t]) {
      add_logprob_grad(tr_a.log_probs, r, ex.a_ids[t],
                       -weights.lm - weights.rank * sig, d_a);
    } else if (weights.kl != 0.0) {
      add_kl_grad(tr_a.log_probs, ref_a.log_probs, r, weights.kl, d_a);
    }
  }
  for (std::size_t t = 0; t < ex.b_ids.size(); ++t) {
    auto r = static_cast<Eigen::Index>(off + t - 1);
    if (ex.b_mask[t]) {
      add_logprob_grad(tr_b.log_probs, r, ex.b_ids[t], weights.rank * sig,
                       d_b);
    } else if (ref_b && weights.kl != 0.0) {
      add_kl_grad(tr_b.log_probs, ref_b->log_probs, r, weights.kl, d_b);
    }
  }
  Matrix d_h = Matrix::Zero(prefix.h.rows(), prefix.h.cols());
  model::backward(base, &prefix, tr_a, d_a, nullptr, &d_h);
  model::backward(base, &prefix, tr_b, d_b, nullptr, &d_h);
  chain_to_state(state, d_h, *grad);
  return out;
}

double basic_loss(std::span<const int> instruction, std::span<const int> a_ids,
                  const model::BaseParams& base,
                  const model::ReparamState& state, ReparamGrad* grad) {
  const model::PrefixParams prefix = model::materialize_prefix(state,
                                                               base.config);
  const std::size_t off = model::code_offset(instruction.size());
  auto ids = model::conditioned_ids(instruction, a_ids);
  auto tr = model::forward_trace(base, &prefix, ids);
  auto lp = model::token_logprobs(tr, off, a_ids);
  double loss = 0.0;
  for (double v : lp) loss -= v;
  if (!grad) return loss;
  Matrix d = Matrix::Zero(static_cast<Eigen::Index>(ids.size()),
                          base.config.vocab);
  for (std::size_t t = 0; t < a_ids.size(); ++t) {
    add_logprob_grad(tr.log_probs, static_cast<Eigen::Index>(off + t - 1),
                     a_ids[t], -1.0, d);
  }
  Matrix d_h = Matrix::Zero(prefix.h.rows(), prefix.h.cols());
  model::backward(base, &prefix, tr, d, nullptr, &d_h);
  chain_to_state(state, d_h, *grad);
  return loss;
}

double base_nll(const model::BaseParams& base, std::span<const int> ids,
                model::BaseParams* grad) {
  if (ids.size() < 2) return 0.0;
  auto tr = model::forward_trace(base, nullptr, ids);
  const double n = static_cast<double>(ids.size() - 1);
  double loss = 0.0;
  for (std::size_t j = 0; j + 1 < ids.size(); ++j) {
    loss -= tr.log_probs(static_cast<Eigen::Index>(j), ids[j + 1]);
  }
  loss /= n;
  if (!grad) return loss;
  Matrix d = Matrix::Zero(static_cast<Eigen::Index>(ids.size()),
                          base.config.vocab);
  for (std::size_t j = 0; j + 1 < ids.size(); ++j) {
    add_logprob_grad(tr.log_probs, static_cast<Eigen::Index>(j), ids[j + 1],
                     -1.0 / n, d);
  }
  model::backward(base, nullptr, tr, d, grad, nullptr);
  return loss;
}

double mean_unmasked_kl(const model::BaseParams& base,
                        const model::PrefixParams& prefix,
                        std::span<const int> instruction,
                        std::span<const int> x,
                        std::span<const std::uint8_t> mask) {
  check_mask(x.size(), mask, "mean_unmasked_kl");
  auto ids = model::conditioned_ids(instruction, x);
  auto tp = model::forward_trace(base, &prefix, ids);
  auto tq = model::forward_trace(base, nullptr, ids);
  const std::size_t off = model::code_offset(instruction.size());
  double sum = 0.0;
  int count = 0;
  for (std::size_t t = 0; t < x.size(); ++t) {
    if (mask[t]) continue;
    sum += kl_row(tp.log_probs, tq.log_probs,
                  static_cast<Eigen::Index>(off + t - 1));
    ++count;
  }
  return count == 0 ? 0.0 : sum / count;
}

}  // namespace cpt::train
