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

#ifndef CPT_LOSSES_HPP
#define CPT_LOSSES_HPP

#include <cstdint>
#include <span>
#include <vector>

#include "cpt/lexdiff.hpp"
#include "cpt/model.hpp"

namespace cpt::train {

using lexdiff::MaskVector;
using model::Matrix;

struct LossWeights {
  double lm = 1.0;
  double rank = 4.0;
  double kl = 1.6;

  void validate() const;
};

struct LossBreakdown {
  double lm = 0.0;
  double rank = 0.0;
  double kl = 0.0;
  double total = 0.0;
};

enum class KlScope { kAOnly, kBoth };

// -log sigmoid(s_a - s_b), evaluated as softplus(s_b - s_a).
double rank_loss(double s_a, double s_b);

// -sum_t mask_t * logprob_t.
double lm_loss(std::span<const double> token_logprobs,
               std::span<const std::uint8_t> mask);

// sum_t (1 - mask_t) KL(P_t || Q_t) over probability rows. Rows must sum to
// one within 1e-6.
double kl_loss(const Matrix& prefixed_dists, const Matrix& base_dists,
               std::span<const std::uint8_t> mask);

LossBreakdown combine_losses(double lm, double rank, double kl,
                             const LossWeights& weights);

// One comparative pair in model-token space. x_a is the higher-quality code.
// Masks have one entry per id.
struct TrainingExample {
  std::vector<int> instruction;
  std::vector<int> a_ids;
  std::vector<int> b_ids;
  MaskVector a_mask;
  MaskVector b_mask;
};

struct ReparamGrad {
  Matrix h_prime;
  Matrix w;
};

// Weighted comparative objective for one pair under the prefix materialized
// from `state`. When `grad` is non-null it receives d(total)/d(state); the
// base model only contributes constants.
LossBreakdown total_loss(const TrainingExample& ex,
                         const model::BaseParams& base,
                         const model::ReparamState& state,
                         const LossWeights& weights, KlScope kl_over,
                         ReparamGrad* grad = nullptr);

// Full-sequence negative log-likelihood of x_a given the instruction under
// the prefix (basic single-prefix objective).
double basic_loss(std::span<const int> instruction, std::span<const int> a_ids,
                  const model::BaseParams& base,
                  const model::ReparamState& state,
                  ReparamGrad* grad = nullptr);

// Mean next-token NLL over positions 1..T-1 of a raw sequence; accumulates
// d(loss)/d(params) into grad when non-null.
double base_nll(const model::BaseParams& base, std::span<const int> ids,
                model::BaseParams* grad = nullptr);

// Mean per-position KL(P_prefixed || P_base) over positions with mask 0.
// Returns 0 when every position is masked.
double mean_unmasked_kl(const model::BaseParams& base,
                        const model::PrefixParams& prefix,
                        std::span<const int> instruction,
                        std::span<const int> x,
                        std::span<const std::uint8_t> mask);

}  // namespace cpt::train

#endif  // CPT_LOSSES_HPP
