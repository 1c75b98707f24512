// Copyright 2026 The exemplar-forge Authors.
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

// A small decoder-only transformer trained to fill masked exemplars.
//
// Pre-LayerNorm blocks (causal multi-head self-attention, GELU MLP), learned
// positional embeddings, final LayerNorm and an output projection that is
// tied to the token embeddings by default. Everything runs in double
// precision on one core with a fixed reduction order, so training and
// decoding are bit-reproducible for a given seed.
//
// All parameters live in one flat array; ParamGroup describes the named
// slices. The loss for a sample is the mean over loss_mask positions t of
// -log P(ids[t] | ids[0..t-1]).

#ifndef EXFORGE_TOYLM_H_
#define EXFORGE_TOYLM_H_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "exforge/masking.h"
#include "exforge/samples.h"

namespace exforge {

using Matrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct ModelConfig {
  std::size_t vocab_size = 0;
  std::size_t dim = 64;
  std::size_t n_heads = 4;
  std::size_t n_layers = 2;
  std::size_t max_len = 128;
  std::uint64_t seed = 0;
  bool tie_embeddings = true;

  // Throws Error on inconsistent dimensions.
  void Validate() const;
  nlohmann::json ToJson() const;
  static ModelConfig FromJson(const nlohmann::json& j);
};

struct ParamGroup {
  std::string name;
  std::size_t offset = 0;
  std::size_t rows = 0;
  std::size_t cols = 0;
  int layer = -1;  // transformer block index, -1 outside the blocks
  bool embedding = false;

  std::size_t size() const { return rows * cols; }
};

class ToyModel {
 public:
  // Normal(0, 0.02) weights, residual projections scaled by
  // 1 / sqrt(2 n_layers), zero biases, unit LayerNorm gains.
  static ToyModel Init(const ModelConfig& cfg);
  // Throws Error if the parameter count does not match the config.
  static ToyModel FromParameters(const ModelConfig& cfg,
                                 std::vector<double> params);

  const ModelConfig& config() const { return cfg_; }
  const std::vector<ParamGroup>& groups() const { return groups_; }
  std::span<double> params() { return params_; }
  std::span<const double> params() const { return params_; }

  // Logits of shape (ids.size(), vocab_size). Row t depends on ids[0..t]
  // only. Throws Error for out-of-range ids or over-long input.
  Matrix Forward(std::span<const TokenId> ids) const;

  // Loss of `gold` when the network reads `inputs` (which differ from
  // gold.ids only under scheduled sampling). Accumulates the gradient into
  // `grad` (resized to the parameter count) when it is non-null.
  double LossAndGradient(std::span<const TokenId> inputs,
                         const TrainingSample& gold,
                         std::vector<double>* grad) const;

 private:
  ToyModel(ModelConfig cfg);

  ModelConfig cfg_;
  std::vector<ParamGroup> groups_;
  std::vector<double> params_;
};

// Mean negative log-likelihood over loss_mask positions. Throws Error when
// the mask selects nothing or lengths disagree.
double NllLoss(const Matrix& logits, const TrainingSample& sample);

struct TrainConfig {
  double learning_rate = 6.25e-5;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  double teacher_forcing_ratio = 0.9;
  std::size_t epochs = 50;
  std::size_t batch_size = 1;
  std::uint64_t seed = 0;
  // Per transformer block; true leaves the block untouched.
  std::vector<bool> freeze_layers;
  bool freeze_embeddings = false;

  void Validate() const;
  nlohmann::json ToJson() const;
  static TrainConfig FromJson(const nlohmann::json& j);
};

struct TrainResult {
  ToyModel model;
  std::vector<double> loss_history;  // mean sample loss per epoch
};

// Adam with scheduled sampling on TARGET inputs. Throws Error on an empty
// sample set or a non-finite loss.
TrainResult Train(ToyModel model, std::span<const TrainingSample> samples,
                  const TrainConfig& tcfg);

// Index of the largest entry; the lowest index wins ties.
TokenId Argmax(const Matrix& logits, std::size_t row);

// Extends `prompt` with argmax tokens until EOS or until the sequence holds
// `max_len` tokens. Returns the generated tokens without EOS.
std::vector<TokenId> GreedyContinue(const ToyModel& model,
                                    std::span<const TokenId> prompt,
                                    std::size_t max_len);

struct DecodeOptions {
  double p = 0.0;
  std::uint64_t seed = 0;
  std::size_t max_len = 128;
  SampleOptions layout;
};

// Second-order masks the template, builds SOS x SEP1 m(e) SEP2 and decodes
// greedily. Throws Error when the prompt does not fit in max_len.
std::vector<std::string> GreedyDecode(const ToyModel& model,
                                      const Vocab& vocab,
                                      std::span<const std::string> x,
                                      const MaskedTemplate& tmpl,
                                      const DecodeOptions& opts);

struct GradientCheckResult {
  double max_relative_error = 0.0;
  double max_abs_error = 0.0;
  double max_abs_analytic = 0.0;
  double max_abs_numeric = 0.0;
  std::size_t coordinates = 0;
  std::size_t groups_covered = 0;
};

// Compares the analytic gradient against central differences on
// `coordinates` sampled parameters, visiting every group round-robin.
// Relative error is |a - n| / max(|a|, |n|, 1e-6).
GradientCheckResult GradientCheck(const ToyModel& model,
                                  const TrainingSample& sample, double epsilon,
                                  std::size_t coordinates = 240,
                                  std::uint64_t seed = 0);

// Versioned JSON checkpoint holding config, vocabulary and parameters.
nlohmann::json CheckpointToJson(const ToyModel& model, const Vocab& vocab);
struct Checkpoint {
  ToyModel model;
  Vocab vocab;
};
Checkpoint CheckpointFromJson(const nlohmann::json& j);

}  // namespace exforge

#endif  // EXFORGE_TOYLM_H_
