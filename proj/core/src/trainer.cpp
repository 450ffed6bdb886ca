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

#include "cpt/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <string>

#include "cpt/errors.hpp"
#include "cpt/random.hpp"

namespace cpt::train {
namespace {

bool all_zero(std::span<const std::uint8_t> mask) {
  for (auto m : mask) {
    if (m) return false;
  }
  return true;
}

std::string describe(const StepLog& s) {
  std::ostringstream os;
  os.precision(17);
  os << "non-finite loss at stage " << s.stage << " epoch " << s.epoch
     << " step " << s.step << " (lm=" << s.loss.lm << " rank=" << s.loss.rank
     << " kl=" << s.loss.kl << " total=" << s.loss.total
     << " grad_norm=" << s.grad_norm << ")";
  return os.str();
}

// Shared epoch/batch loop for both prefix stages. loss_fn(index, state, grad)
// fills grad and returns the breakdown for one example.
template <typename LossFn>
TrainResult run_prefix_loop(std::size_t n, const std::vector<bool>& skip,
                            LossFn&& loss_fn, TrainProgress start,
                            const TrainConfig& config, int stage,
                            const TrainCallbacks& callbacks) {
  config.validate();
  TrainResult result;
  result.progress = std::move(start);
  model::ReparamState& state = result.progress.state;
  std::vector<Matrix*> params{&state.h_prime, &state.w};
  AdamW opt = result.progress.optimizer.m.empty()
                  ? AdamW(config.adam, params)
                  : AdamW(config.adam, params, result.progress.optimizer);

  for (std::size_t i = 0; i < n; ++i) {
    if (skip[i]) ++result.skipped;
  }
  const std::uint64_t stage_seed = derive_seed(config.seed, 1000 + stage);

  for (int epoch = result.progress.epochs_done; epoch < config.epochs;
       ++epoch) {
    std::vector<std::size_t> order;
    for (std::size_t i : shuffled_order(n, derive_seed(stage_seed, epoch))) {
      if (!skip[i]) order.push_back(i);
    }
    for (std::size_t begin = 0; begin < order.size();
         begin += static_cast<std::size_t>(config.batch_size)) {
      std::size_t end = std::min(order.size(),
                                 begin + static_cast<std::size_t>(
                                             config.batch_size));
      std::vector<Matrix> grads{Matrix::Zero(state.h_prime.rows(),
                                             state.h_prime.cols()),
                                Matrix::Zero(state.w.rows(), state.w.cols())};
      LossBreakdown mean;
      for (std::size_t j = begin; j < end; ++j) {
        ReparamGrad g;
        LossBreakdown l = loss_fn(order[j], state, &g);
        grads[0] += g.h_prime;
        grads[1] += g.w;
        mean.lm += l.lm;
        mean.rank += l.rank;
        mean.kl += l.kl;
        mean.total += l.total;
      }
      const double count = static_cast<double>(end - begin);
      if (count > 1.0) {
        for (auto& g : grads) g /= count;
        mean.lm /= count;
        mean.rank /= count;
        mean.kl /= count;
        mean.total /= count;
      }
      StepLog log;
      log.step = opt.state().step + 1;
      log.epoch = epoch;
      log.stage = stage;
      log.loss = mean;
      log.grad_norm = clip_global_norm(grads, config.clip_norm);
      if (!std::isfinite(mean.total) || !std::isfinite(log.grad_norm)) {
        throw NumericError(describe(log));
      }
      opt.step(grads, config.learning_rate);
      if (callbacks.on_step) callbacks.on_step(log);
      result.log.push_back(log);
    }
    result.progress.optimizer = opt.state();
    result.progress.epochs_done = epoch + 1;
    if (callbacks.on_epoch) callbacks.on_epoch(result.progress);
  }
  result.progress.optimizer = opt.state();
  return result;
}

}  // namespace

AdamW::AdamW(AdamWConfig config, std::vector<Matrix*> params)
    : config_(config), params_(std::move(params)) {
  for (Matrix* p : params_) {
    state_.m.push_back(Matrix::Zero(p->rows(), p->cols()));
    state_.v.push_back(Matrix::Zero(p->rows(), p->cols()));
  }
}

AdamW::AdamW(AdamWConfig config, std::vector<Matrix*> params,
             OptimizerState state)
    : config_(config), params_(std::move(params)), state_(std::move(state)) {
  if (state_.m.size() != params_.size() || state_.v.size() != params_.size()) {
    throw DimensionError("optimizer state does not match parameter list");
  }
  for (std::size_t i = 0; i < params_.size(); ++i) {
    if (state_.m[i].rows() != params_[i]->rows() ||
        state_.m[i].cols() != params_[i]->cols() ||
        state_.v[i].rows() != params_[i]->rows() ||
        state_.v[i].cols() != params_[i]->cols()) {
      throw DimensionError("optimizer moment shape mismatch");
    }
  }
}

void AdamW::step(const std::vector<Matrix>& grads, double lr) {
  if (grads.size() != params_.size()) {
    throw DimensionError("gradient list does not match parameter list");
  }
  ++state_.step;
  const double t = static_cast<double>(state_.step);
  const double bc1 = 1.0 - std::pow(config_.beta1, t);
  const double bc2 = 1.0 - std::pow(config_.beta2, t);
  for (std::size_t i = 0; i < params_.size(); ++i) {
    Matrix& p = *params_[i];
    auto m = state_.m[i].array();
    auto v = state_.v[i].array();
    auto g = grads[i].array();
    m = config_.beta1 * m + (1.0 - config_.beta1) * g;
    v = config_.beta2 * v + (1.0 - config_.beta2) * g.square();
    if (lr == 0.0) continue;
    p.array() -= lr * config_.weight_decay * p.array();
    p.array() -= lr * (m / bc1) / ((v / bc2).sqrt() + config_.eps);
  }
}

double global_norm(const std::vector<Matrix>& grads) {
  double sq = 0.0;
  for (const auto& g : grads) sq += g.squaredNorm();
  return std::sqrt(sq);
}

double clip_global_norm(std::vector<Matrix>& grads, double max_norm) {
  const double norm = global_norm(grads);
  if (std::isfinite(norm) && norm > max_norm) {
    const double scale = max_norm / norm;
    for (auto& g : grads) g *= scale;
  }
  return norm;
}

std::vector<std::size_t> shuffled_order(std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  for (std::size_t i = n; i > 1; --i) {
    // Multiply-shift maps a 64-bit draw onto [0, i) without modulo.
    auto j = static_cast<std::size_t>(
        (static_cast<unsigned __int128>(rng()) * i) >> 64);
    std::swap(order[i - 1], order[j]);
  }
  return order;
}

void TrainConfig::validate() const {
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
    throw ParameterError("learning_rate must be a finite value >= 0");
  }
  if (!(clip_norm > 0.0)) throw ParameterError("clip_norm must be > 0");
  if (epochs < 0) throw ParameterError("epochs must be >= 0");
  if (batch_size < 1) throw ParameterError("batch_size must be >= 1");
}

void BaseTrainConfig::validate() const {
  model.validate();
  if (!(learning_rate > 0.0)) throw ParameterError("learning_rate must be > 0");
  if (!(clip_norm > 0.0)) throw ParameterError("clip_norm must be > 0");
  if (epochs < 0) throw ParameterError("epochs must be >= 0");
}

TrainResult train_comparative(std::span<const TrainingExample> dataset,
                              const model::BaseParams& base,
                              TrainProgress start, const LossWeights& weights,
                              const TrainConfig& config,
                              const TrainCallbacks& callbacks) {
  weights.validate();
  if (dataset.empty()) throw ParameterError("comparative dataset is empty");
  std::vector<bool> skip(dataset.size(), false);
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    if (all_zero(dataset[i].a_mask) && all_zero(dataset[i].b_mask)) {
      skip[i] = true;
      if (callbacks.on_warning) {
        callbacks.on_warning("skipping example " + std::to_string(i) +
                             ": both masks are all zero");
      }
    }
  }
  auto fn = [&](std::size_t i, const model::ReparamState& state,
                ReparamGrad* g) {
    return total_loss(dataset[i], base, state, weights, config.kl_over, g);
  };
  return run_prefix_loop(dataset.size(), skip, fn, std::move(start), config,
                         1, callbacks);
}

TrainResult train_basic(std::span<const BasicExample> dataset,
                        const model::BaseParams& base, TrainProgress start,
                        const TrainConfig& config,
                        const TrainCallbacks& callbacks) {
  if (dataset.empty()) throw ParameterError("basic dataset is empty");
  std::vector<bool> skip(dataset.size(), false);
  auto fn = [&](std::size_t i, const model::ReparamState& state,
                ReparamGrad* g) {
    double nll = basic_loss(dataset[i].instruction, dataset[i].code, base,
                            state, g);
    LossBreakdown l;
    l.lm = nll;
    l.total = nll;
    return l;
  };
  return run_prefix_loop(dataset.size(), skip, fn, std::move(start), config,
                         2, callbacks);
}

model::BaseParams train_base(std::span<const std::vector<int>> corpus,
                             const BaseTrainConfig& config,
                             const std::function<void(int, double)>& on_epoch) {
  config.validate();
  if (corpus.empty()) throw ParameterError("pretraining corpus is empty");
  model::BaseParams base = model::BaseParams::init(config.model, config.seed,
                                                   config.init_scale);
  std::vector<Matrix*> params;
  base.for_each([&](const std::string&, Matrix& m) { params.push_back(&m); });
  AdamW opt(config.adam, params);
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    double nll_sum = 0.0;
    double tokens = 0.0;
    for (std::size_t i :
         shuffled_order(corpus.size(), derive_seed(config.seed, epoch))) {
      const auto& seq = corpus[i];
      if (seq.size() < 2) continue;
      model::BaseParams grad = model::BaseParams::zeros_like(base);
      double loss = base_nll(base, seq, &grad);
      if (!std::isfinite(loss)) {
        throw NumericError("non-finite pretraining loss at epoch " +
                           std::to_string(epoch));
      }
      const double n = static_cast<double>(seq.size() - 1);
      nll_sum += loss * n;
      tokens += n;
      std::vector<Matrix> grads;
      grad.for_each(
          [&](const std::string&, Matrix& m) { grads.push_back(std::move(m)); });
      clip_global_norm(grads, config.clip_norm);
      opt.step(grads, config.learning_rate);
    }
    if (on_epoch) on_epoch(epoch, tokens > 0.0 ? nll_sum / tokens : 0.0);
  }
  return base;
}

double grad_check(const std::function<double()>& loss,
                  const std::vector<Matrix*>& params,
                  const std::vector<Matrix>& analytic, double eps,
                  int n_coords, std::uint64_t seed) {
  if (params.size() != analytic.size()) {
    throw DimensionError("grad_check: analytic gradient list size mismatch");
  }
  std::vector<Eigen::Index> offsets{0};
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (analytic[i].rows() != params[i]->rows() ||
        analytic[i].cols() != params[i]->cols()) {
      throw DimensionError("grad_check: analytic gradient shape mismatch");
    }
    offsets.push_back(offsets.back() + params[i]->size());
  }
  const auto total = static_cast<std::uint64_t>(offsets.back());
  if (total == 0) return 0.0;
  std::mt19937_64 rng(seed);
  double worst = 0.0;
  for (int s = 0; s < n_coords; ++s) {
    auto flat = static_cast<Eigen::Index>(
        (static_cast<unsigned __int128>(rng()) * total) >> 64);
    std::size_t p = 0;
    while (flat >= offsets[p + 1]) ++p;
    Eigen::Index k = flat - offsets[p];
    double& x = params[p]->data()[k];
    const double saved = x;
    x = saved + eps;
    const double up = loss();
    x = saved - eps;
    const double down = loss();
    x = saved;
    const double numeric = (up - down) / (2.0 * eps);
    const double a = analytic[p].data()[k];
    const double denom =
        std::max({std::abs(a), std::abs(numeric), 1e-8});
    worst = std::max(worst, std::abs(a - numeric) / denom);
  }
  return worst;
}

}  // namespace cpt::train
