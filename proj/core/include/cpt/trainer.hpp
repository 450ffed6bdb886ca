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

#ifndef CPT_TRAINER_HPP
#define CPT_TRAINER_HPP

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "cpt/losses.hpp"
#include "cpt/model.hpp"

namespace cpt::train {

struct AdamWConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.01;
};

struct OptimizerState {
  std::vector<Matrix> m;
  std::vector<Matrix> v;
  std::int64_t step = 0;
};

// Adam with decoupled weight decay over a fixed list of parameter matrices.
class AdamW {
 public:
  AdamW(AdamWConfig config, std::vector<Matrix*> params);
  AdamW(AdamWConfig config, std::vector<Matrix*> params, OptimizerState state);

  void step(const std::vector<Matrix>& grads, double lr);
  const OptimizerState& state() const { return state_; }

 private:
  AdamWConfig config_;
  std::vector<Matrix*> params_;
  OptimizerState state_;
};

// L2 norm over all gradient matrices.
double global_norm(const std::vector<Matrix>& grads);
// Scales grads in place so their global norm is at most max_norm. Returns the
// norm before clipping.
double clip_global_norm(std::vector<Matrix>& grads, double max_norm);

// Deterministic Fisher-Yates permutation of 0..n-1.
std::vector<std::size_t> shuffled_order(std::size_t n, std::uint64_t seed);

struct TrainConfig {
  double learning_rate = 1e-3;
  int epochs = 3;
  double clip_norm = 1.0;
  std::uint64_t seed = 0;
  int batch_size = 1;
  KlScope kl_over = KlScope::kAOnly;
  AdamWConfig adam;

  // learning_rate >= 0, clip_norm > 0, epochs >= 0, batch_size >= 1.
  void validate() const;
};

struct StepLog {
  std::int64_t step = 0;
  int epoch = 0;
  int stage = 1;
  LossBreakdown loss;
  double grad_norm = 0.0;
};

struct TrainProgress {
  model::ReparamState state;
  OptimizerState optimizer;  // empty moments = fresh optimizer
  int epochs_done = 0;
};

struct TrainCallbacks {
  std::function<void(const StepLog&)> on_step;
  // Called after every completed epoch with the full resumable state.
  std::function<void(const TrainProgress&)> on_epoch;
  std::function<void(const std::string&)> on_warning;
};

struct TrainResult {
  TrainProgress progress;
  std::vector<StepLog> log;
  int skipped = 0;
};

// Comparative prefix tuning. Only `start.state` is updated; examples whose
// masks are all zero are skipped with a warning. Throws NumericError when the
// loss becomes non-finite.
TrainResult train_comparative(std::span<const TrainingExample> dataset,
                              const model::BaseParams& base,
                              TrainProgress start, const LossWeights& weights,
                              const TrainConfig& config,
                              const TrainCallbacks& callbacks = {});

struct BasicExample {
  std::vector<int> instruction;
  std::vector<int> code;
};

// Plain NLL of the high-quality code under the prefix.
TrainResult train_basic(std::span<const BasicExample> dataset,
                        const model::BaseParams& base, TrainProgress start,
                        const TrainConfig& config,
                        const TrainCallbacks& callbacks = {});

struct BaseTrainConfig {
  model::ModelConfig model;
  double learning_rate = 3e-3;
  int epochs = 8;
  double clip_norm = 1.0;
  double init_scale = 0.02;
  std::uint64_t seed = 0;
  AdamWConfig adam{0.9, 0.999, 1e-8, 0.0};

  void validate() const;
};

// Autoregressive pretraining of the toy base. on_epoch receives the epoch
// index and mean per-token NLL over that epoch.
model::BaseParams train_base(
    std::span<const std::vector<int>> corpus, const BaseTrainConfig& config,
    const std::function<void(int, double)>& on_epoch = {});

// Central-difference check of `analytic` against `loss` on n_coords
// coordinates drawn uniformly from the flattened params. Every coordinate is
// restored afterwards. Returns the max relative error with denominator
// max(|analytic|, |numeric|, 1e-8).
double grad_check(const std::function<double()>& loss,
                  const std::vector<Matrix*>& params,
                  const std::vector<Matrix>& analytic, double eps,
                  int n_coords, std::uint64_t seed);

}  // namespace cpt::train

#endif  // CPT_TRAINER_HPP
