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

// Decoder-only transformer with per-layer prefix key/value injection.
//
// Layout conventions: all matrices are row-major and activations are laid out
// as (positions x features), so a linear layer is X * W. A prefix is an
// M x (2 * L * E) matrix; for layer l, columns [2lE, 2lE + E) hold the key
// rows and [2lE + E, 2(l + 1)E) the value rows, already in the projected
// attention space. Prefix slots have no position embedding and produce no
// outputs; every real position attends to all M slots plus its own causal
// history.

#ifndef CPT_MODEL_HPP
#define CPT_MODEL_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace cpt::model {

using Matrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowVector = Eigen::Matrix<double, 1, Eigen::Dynamic>;

inline constexpr int kDefaultPrefixLength = 12;

struct ModelConfig {
  int layers = 2;
  int hidden = 64;
  int heads = 2;
  int vocab = 64;
  int max_context = 256;
  int ffn = 256;

  // Throws ParameterError when a field is out of range or hidden % heads != 0.
  void validate() const;
  // Width of one prefix row: 2 * layers * hidden.
  int prefix_width() const { return 2 * layers * hidden; }

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

struct LayerParams {
  Matrix ln1_gain, ln1_bias;
  Matrix wq, wk, wv, wo;
  Matrix ln2_gain, ln2_bias;
  Matrix w1, b1, w2, b2;
};

// Frozen base language model. Vectors are stored as 1 x n matrices so every
// parameter can be visited uniformly.
struct BaseParams {
  ModelConfig config;
  Matrix tok_emb;  // V x E
  Matrix pos_emb;  // T_max x E
  std::vector<LayerParams> layers;
  Matrix lnf_gain, lnf_bias;
  Matrix w_out;  // E x V
  Matrix b_out;

  // Weights ~ N(0, scale^2), layer-norm gains 1, biases 0.
  static BaseParams init(const ModelConfig& config, std::uint64_t seed,
                         double scale = 0.02);
  // Same shapes, all zeros (gradient accumulator).
  static BaseParams zeros_like(const BaseParams& other);

  void for_each(const std::function<void(const std::string&, Matrix&)>& fn);
  void for_each(
      const std::function<void(const std::string&, const Matrix&)>& fn) const;
};

// Trainable reparameterization H = h_prime * w. Discarded after training.
struct ReparamState {
  Matrix h_prime;  // M x D'
  Matrix w;        // D' x (2LE)

  int m_len() const { return static_cast<int>(h_prime.rows()); }
  int d_prime() const { return static_cast<int>(h_prime.cols()); }
};

// Materialized prefix H, M x (2LE).
struct PrefixParams {
  int layers = 0;
  int hidden = 0;
  Matrix h;

  int m_len() const { return static_cast<int>(h.rows()); }
  Eigen::Block<const Matrix> keys(int layer) const {
    return h.middleCols(2 * layer * hidden, hidden);
  }
  Eigen::Block<const Matrix> values(int layer) const {
    return h.middleCols(2 * layer * hidden + hidden, hidden);
  }
};

struct GenerationConfig {
  double temperature = 0.4;
  double top_p = 0.95;
  int max_new_tokens = 160;
  int n_samples = 20;
  std::uint64_t seed = 0;
};

// Entries i.i.d. N(0, scale^2). d_prime <= 0 selects the hidden size.
ReparamState init_prefix(const ModelConfig& config, int m_len, int d_prime,
                         std::uint64_t seed, double scale = 0.02);

// H = h_prime * w. Throws DimensionError on shape mismatch.
PrefixParams materialize_prefix(const ReparamState& state,
                                const ModelConfig& config);

struct LayerCache {
  Matrix x_in, xhat1, a, q, k, v, o, x1, xhat2, c, u, g;
  Eigen::VectorXd rstd1, rstd2;
  std::vector<Matrix> attn;  // per head: T x (M + T), causal zeros
};

// Everything the backward pass needs.
struct ForwardTrace {
  std::vector<int> ids;
  int m_len = 0;
  std::vector<LayerCache> layers;
  Matrix x_final, xhatf, f;
  Eigen::VectorXd rstdf;
  Matrix logits;
  Matrix log_probs;  // T x V
};

// Row t is the next-token distribution after ids[0..t]. prefix == nullptr
// runs the plain base model without touching the injection path. Throws
// ContextOverflowError when ids.size() > max_context.
ForwardTrace forward_trace(const BaseParams& base, const PrefixParams* prefix,
                           std::span<const int> ids);

// Next-token probabilities, T x V.
Matrix forward_with_prefix(const BaseParams& base,
                           const std::optional<PrefixParams>& prefix,
                           std::span<const int> ids);
Matrix forward_base(const BaseParams& base, std::span<const int> ids);

// Backpropagates d(loss)/d(logits). Gradients are accumulated into
// base_grad (if non-null) and prefix_grad (M x 2LE, if non-null).
void backward(const BaseParams& base, const PrefixParams* prefix,
              const ForwardTrace& trace, const Matrix& d_logits,
              BaseParams* base_grad, Matrix* prefix_grad);

// [<bos>] + instruction + [<sep>] + x; x starts at index instruction.size()+2.
std::vector<int> conditioned_ids(std::span<const int> instruction,
                                 std::span<const int> x);
inline std::size_t code_offset(std::size_t instruction_len) {
  return instruction_len + 2;
}

// log P(x_t | x_<t, I, H) for every t, read off a trace of conditioned_ids.
std::vector<double> token_logprobs(const ForwardTrace& trace,
                                   std::size_t offset, std::span<const int> x);

// Sum of token log-probabilities of x given the instruction.
double sequence_logprob(const BaseParams& base, const PrefixParams* prefix,
                        std::span<const int> instruction,
                        std::span<const int> x);

// Sum of mask-weighted token log-probabilities. Throws MaskAlignmentError.
double masked_logprob(const BaseParams& base, const PrefixParams* prefix,
                      std::span<const int> instruction, std::span<const int> x,
                      std::span<const std::uint8_t> mask);

// Token-at-a-time decoder with cached keys and values.
class IncrementalDecoder {
 public:
  IncrementalDecoder(const BaseParams& base, const PrefixParams* prefix);

  // Feeds one token and returns next-token log-probabilities.
  RowVector step(int id);
  int position() const { return pos_; }

 private:
  const BaseParams& base_;
  int m_len_;
  int pos_ = 0;
  std::vector<Matrix> keys_, values_;
};

// Temperature + nucleus sampling. Returns n_samples token sequences without
// the terminating <eos>.
std::vector<std::vector<int>> generate(const BaseParams& base,
                                       const PrefixParams* prefix,
                                       std::span<const int> instruction,
                                       const GenerationConfig& gen,
                                       int eos_id);

// Samples one token from log-probabilities with the given temperature and
// top-p truncation. temperature < 1e-6 is greedy.
int sample_token(const RowVector& log_probs, double temperature, double top_p,
                 std::mt19937_64& rng);

}  // namespace cpt::model

#endif  // CPT_MODEL_HPP
