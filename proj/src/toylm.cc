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

#include "exforge/toylm.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

#include "exforge/error.h"
#include "exforge/rng.h"

namespace exforge {
namespace {

constexpr double kLayerNormEps = 1e-5;
constexpr double kInitStd = 0.02;
constexpr int kCheckpointVersion = 1;

using MapMatrix = Eigen::Map<Matrix>;
using ConstMapMatrix = Eigen::Map<const Matrix>;
using RowVector = Eigen::Matrix<double, 1, Eigen::Dynamic>;
using MapRow = Eigen::Map<RowVector>;
using ConstMapRow = Eigen::Map<const RowVector>;

// Group indices inside a block, in storage order.
enum BlockSlot {
  kLn1Gain,
  kLn1Bias,
  kQkvWeight,
  kQkvBias,
  kAttnOutWeight,
  kAttnOutBias,
  kLn2Gain,
  kLn2Bias,
  kFcWeight,
  kFcBias,
  kProjWeight,
  kProjBias,
  kBlockSlots,
};

constexpr std::size_t kTokenEmbedding = 0;
constexpr std::size_t kPositionEmbedding = 1;
constexpr std::size_t kFirstBlockGroup = 2;

std::size_t BlockGroup(std::size_t layer, BlockSlot slot) {
  return kFirstBlockGroup + layer * kBlockSlots + slot;
}
std::size_t FinalGainGroup(const ModelConfig& cfg) {
  return kFirstBlockGroup + cfg.n_layers * kBlockSlots;
}
std::size_t FinalBiasGroup(const ModelConfig& cfg) {
  return FinalGainGroup(cfg) + 1;
}
std::size_t OutputGroup(const ModelConfig& cfg) {
  return cfg.tie_embeddings ? kTokenEmbedding : FinalBiasGroup(cfg) + 1;
}

std::vector<ParamGroup> MakeLayout(const ModelConfig& cfg) {
  std::vector<ParamGroup> groups;
  std::size_t offset = 0;
  auto add = [&](std::string name, std::size_t rows, std::size_t cols,
                 int layer, bool embedding) {
    groups.push_back(
        ParamGroup{std::move(name), offset, rows, cols, layer, embedding});
    offset += rows * cols;
  };
  const std::size_t d = cfg.dim;
  add("tok_emb", cfg.vocab_size, d, -1, true);
  add("pos_emb", cfg.max_len, d, -1, true);
  for (std::size_t l = 0; l < cfg.n_layers; ++l) {
    const std::string p = "block" + std::to_string(l) + ".";
    const int li = static_cast<int>(l);
    add(p + "ln1.gain", 1, d, li, false);
    add(p + "ln1.bias", 1, d, li, false);
    add(p + "attn.qkv.weight", d, 3 * d, li, false);
    add(p + "attn.qkv.bias", 1, 3 * d, li, false);
    add(p + "attn.out.weight", d, d, li, false);
    add(p + "attn.out.bias", 1, d, li, false);
    add(p + "ln2.gain", 1, d, li, false);
    add(p + "ln2.bias", 1, d, li, false);
    add(p + "mlp.fc.weight", d, 4 * d, li, false);
    add(p + "mlp.fc.bias", 1, 4 * d, li, false);
    add(p + "mlp.proj.weight", 4 * d, d, li, false);
    add(p + "mlp.proj.bias", 1, d, li, false);
  }
  add("ln_f.gain", 1, d, -1, false);
  add("ln_f.bias", 1, d, -1, false);
  if (!cfg.tie_embeddings) add("out.weight", cfg.vocab_size, d, -1, false);
  return groups;
}

struct LayerNormCache {
  Matrix xhat;
  Eigen::VectorXd rstd;
};

Matrix LayerNormForward(const Matrix& x, ConstMapRow gain, ConstMapRow bias,
                        LayerNormCache& cache) {
  const Eigen::Index rows = x.rows();
  const double cols = static_cast<double>(x.cols());
  cache.xhat.resize(rows, x.cols());
  cache.rstd.resize(rows);
  Matrix y(rows, x.cols());
  for (Eigen::Index t = 0; t < rows; ++t) {
    const double mean = x.row(t).sum() / cols;
    const RowVector centered = x.row(t).array() - mean;
    const double var = centered.squaredNorm() / cols;
    const double rstd = 1.0 / std::sqrt(var + kLayerNormEps);
    cache.rstd(t) = rstd;
    cache.xhat.row(t) = centered * rstd;
    y.row(t) = cache.xhat.row(t).cwiseProduct(gain) + bias;
  }
  return y;
}

// Returns dx; accumulates into the gain and bias gradients.
Matrix LayerNormBackward(const Matrix& dy, const LayerNormCache& cache,
                         ConstMapRow gain, MapRow dgain, MapRow dbias) {
  const Eigen::Index rows = dy.rows();
  const double cols = static_cast<double>(dy.cols());
  Matrix dx(rows, dy.cols());
  for (Eigen::Index t = 0; t < rows; ++t) {
    dgain += dy.row(t).cwiseProduct(cache.xhat.row(t));
    dbias += dy.row(t);
    const RowVector dxhat = dy.row(t).cwiseProduct(gain);
    const double mean_dxhat = dxhat.sum() / cols;
    const double mean_dxhat_xhat = dxhat.dot(cache.xhat.row(t)) / cols;
    dx.row(t) = cache.rstd(t) *
                (dxhat.array() - mean_dxhat -
                 cache.xhat.row(t).array() * mean_dxhat_xhat)
                    .matrix();
  }
  return dx;
}

constexpr double kGeluC = 0.7978845608028654;  // sqrt(2 / pi)

double Gelu(double x) {
  return 0.5 * x * (1.0 + std::tanh(kGeluC * (x + 0.044715 * x * x * x)));
}

double GeluGrad(double x) {
  const double inner = kGeluC * (x + 0.044715 * x * x * x);
  const double th = std::tanh(inner);
  return 0.5 * (1.0 + th) +
         0.5 * x * (1.0 - th * th) * kGeluC * (1.0 + 3.0 * 0.044715 * x * x);
}

struct BlockCache {
  Matrix h_in;
  LayerNormCache ln1;
  Matrix a;
  Matrix qkv;
  std::vector<Matrix> probs;  // per head, lower triangular
  Matrix attn_concat;
  Matrix h_mid;
  LayerNormCache ln2;
  Matrix a2;
  Matrix fc;
  Matrix act;
};

struct ForwardCache {
  std::vector<BlockCache> blocks;
  LayerNormCache ln_f;
  Matrix hf;
};

}  // namespace

void ModelConfig::Validate() const {
  if (vocab_size == 0) throw Error("vocab_size must be positive");
  if (dim == 0) throw Error("dim must be positive");
  if (n_heads == 0) throw Error("n_heads must be positive");
  if (dim % n_heads != 0)
    throw Error("dim " + std::to_string(dim) + " is not divisible by n_heads " +
                std::to_string(n_heads));
  if (max_len == 0) throw Error("max_len must be positive");
}

nlohmann::json ModelConfig::ToJson() const {
  nlohmann::ordered_json j;
  j["vocab_size"] = vocab_size;
  j["dim"] = dim;
  j["n_heads"] = n_heads;
  j["n_layers"] = n_layers;
  j["max_len"] = max_len;
  j["seed"] = seed;
  j["tie_embeddings"] = tie_embeddings;
  return j;
}

ModelConfig ModelConfig::FromJson(const nlohmann::json& j) {
  ModelConfig c;
  c.vocab_size = j.value("vocab_size", c.vocab_size);
  c.dim = j.value("dim", c.dim);
  c.n_heads = j.value("n_heads", c.n_heads);
  c.n_layers = j.value("n_layers", c.n_layers);
  c.max_len = j.value("max_len", c.max_len);
  c.seed = j.value("seed", c.seed);
  c.tie_embeddings = j.value("tie_embeddings", c.tie_embeddings);
  return c;
}

ToyModel::ToyModel(ModelConfig cfg) : cfg_(std::move(cfg)) {
  cfg_.Validate();
  groups_ = MakeLayout(cfg_);
  const ParamGroup& last = groups_.back();
  params_.assign(last.offset + last.size(), 0.0);
}

ToyModel ToyModel::Init(const ModelConfig& cfg) {
  ToyModel model(cfg);
  Rng rng(DeriveSeed(cfg.seed, "toylm.init"));
  const double residual_std =
      cfg.n_layers ? kInitStd / std::sqrt(2.0 * static_cast<double>(cfg.n_layers))
                   : kInitStd;
  for (const ParamGroup& g : model.groups_) {
    double* p = model.params_.data() + g.offset;
    const bool is_gain = g.name.ends_with(".gain");
    const bool is_bias = g.name.ends_with(".bias");
    const bool residual = g.name.ends_with("attn.out.weight") ||
                          g.name.ends_with("mlp.proj.weight");
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (is_gain)
        p[i] = 1.0;
      else if (is_bias)
        p[i] = 0.0;
      else
        p[i] = rng.Normal() * (residual ? residual_std : kInitStd);
    }
  }
  return model;
}

ToyModel ToyModel::FromParameters(const ModelConfig& cfg,
                                  std::vector<double> params) {
  ToyModel model(cfg);
  if (params.size() != model.params_.size())
    throw Error("checkpoint has " + std::to_string(params.size()) +
                " parameters, config needs " +
                std::to_string(model.params_.size()));
  for (double v : params)
    if (!std::isfinite(v)) throw Error("checkpoint has a non-finite parameter");
  model.params_ = std::move(params);
  return model;
}

namespace {

// Shared forward pass; fills `cache` when non-null and returns logits.
Matrix RunForward(const ModelConfig& cfg, const std::vector<ParamGroup>& groups,
                  const double* theta, std::span<const TokenId> ids,
                  ForwardCache* cache) {
  const std::size_t T = ids.size();
  if (T == 0) throw Error("forward pass needs at least one token");
  if (T > cfg.max_len)
    throw Error("sequence of " + std::to_string(T) +
                " tokens exceeds max_len " + std::to_string(cfg.max_len));
  const Eigen::Index d = static_cast<Eigen::Index>(cfg.dim);
  const Eigen::Index V = static_cast<Eigen::Index>(cfg.vocab_size);
  auto mat = [&](std::size_t gi) {
    const ParamGroup& g = groups[gi];
    return ConstMapMatrix(theta + g.offset, static_cast<Eigen::Index>(g.rows),
                          static_cast<Eigen::Index>(g.cols));
  };
  auto row = [&](std::size_t gi) {
    const ParamGroup& g = groups[gi];
    return ConstMapRow(theta + g.offset, static_cast<Eigen::Index>(g.size()));
  };

  const auto tok = mat(kTokenEmbedding);
  const auto pos = mat(kPositionEmbedding);
  Matrix h(static_cast<Eigen::Index>(T), d);
  for (std::size_t t = 0; t < T; ++t) {
    if (ids[t] < 0 || ids[t] >= V)
      throw Error("token id " + std::to_string(ids[t]) + " is out of range");
    h.row(static_cast<Eigen::Index>(t)) =
        tok.row(ids[t]) + pos.row(static_cast<Eigen::Index>(t));
  }

  const std::size_t heads = cfg.n_heads;
  const Eigen::Index dh = d / static_cast<Eigen::Index>(heads);
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
  if (cache) cache->blocks.assign(cfg.n_layers, BlockCache{});

  for (std::size_t l = 0; l < cfg.n_layers; ++l) {
    BlockCache local;
    BlockCache& bc = cache ? cache->blocks[l] : local;
    bc.h_in = h;
    bc.a = LayerNormForward(h, row(BlockGroup(l, kLn1Gain)),
                            row(BlockGroup(l, kLn1Bias)), bc.ln1);
    bc.qkv = bc.a * mat(BlockGroup(l, kQkvWeight));
    bc.qkv.rowwise() += row(BlockGroup(l, kQkvBias));

    bc.attn_concat = Matrix::Zero(static_cast<Eigen::Index>(T), d);
    bc.probs.assign(heads, Matrix());
    for (std::size_t hd = 0; hd < heads; ++hd) {
      const Eigen::Index q0 = static_cast<Eigen::Index>(hd) * dh;
      const Eigen::Index k0 = d + q0;
      const Eigen::Index v0 = 2 * d + q0;
      Matrix& P = bc.probs[hd];
      P = Matrix::Zero(static_cast<Eigen::Index>(T),
                       static_cast<Eigen::Index>(T));
      for (Eigen::Index t = 0; t < static_cast<Eigen::Index>(T); ++t) {
        double mx = -std::numeric_limits<double>::infinity();
        for (Eigen::Index j = 0; j <= t; ++j) {
          const double s = bc.qkv.row(t).segment(q0, dh).dot(
                               bc.qkv.row(j).segment(k0, dh)) *
                           scale;
          P(t, j) = s;
          mx = std::max(mx, s);
        }
        double sum = 0.0;
        for (Eigen::Index j = 0; j <= t; ++j) {
          P(t, j) = std::exp(P(t, j) - mx);
          sum += P(t, j);
        }
        for (Eigen::Index j = 0; j <= t; ++j) {
          P(t, j) /= sum;
          bc.attn_concat.row(t).segment(q0, dh) +=
              P(t, j) * bc.qkv.row(j).segment(v0, dh);
        }
      }
    }
    Matrix attn = bc.attn_concat * mat(BlockGroup(l, kAttnOutWeight));
    attn.rowwise() += row(BlockGroup(l, kAttnOutBias));
    bc.h_mid = bc.h_in + attn;

    bc.a2 = LayerNormForward(bc.h_mid, row(BlockGroup(l, kLn2Gain)),
                             row(BlockGroup(l, kLn2Bias)), bc.ln2);
    bc.fc = bc.a2 * mat(BlockGroup(l, kFcWeight));
    bc.fc.rowwise() += row(BlockGroup(l, kFcBias));
    bc.act = bc.fc.unaryExpr([](double x) { return Gelu(x); });
    Matrix mlp = bc.act * mat(BlockGroup(l, kProjWeight));
    mlp.rowwise() += row(BlockGroup(l, kProjBias));
    h = bc.h_mid + mlp;
  }

  LayerNormCache local_ln;
  LayerNormCache& lnc = cache ? cache->ln_f : local_ln;
  Matrix hf = LayerNormForward(h, row(FinalGainGroup(cfg)),
                               row(FinalBiasGroup(cfg)), lnc);
  Matrix logits = hf * mat(OutputGroup(cfg)).transpose();
  if (cache) cache->hf = std::move(hf);
  return logits;
}

// Log-softmax of one row.
RowVector LogSoftmax(const Matrix& logits, Eigen::Index row) {
  const double mx = logits.row(row).maxCoeff();
  const RowVector shifted = logits.row(row).array() - mx;
  const double lse = std::log(shifted.array().exp().sum());
  return shifted.array() - lse;
}

std::vector<std::size_t> LossPositions(const TrainingSample& sample,
                                       std::size_t rows) {
  if (sample.ids.size() != sample.loss_mask.size() ||
      sample.ids.size() != sample.roles.size())
    throw Error("sample fields have different lengths");
  if (rows != sample.ids.size())
    throw Error("logits rows do not match the sample length");
  std::vector<std::size_t> out;
  for (std::size_t t = 0; t < sample.loss_mask.size(); ++t) {
    if (!sample.loss_mask[t]) continue;
    if (t == 0) throw Error("the first position cannot carry loss");
    out.push_back(t);
  }
  if (out.empty()) throw Error("sample loss mask selects no positions");
  return out;
}

}  // namespace

Matrix ToyModel::Forward(std::span<const TokenId> ids) const {
  return RunForward(cfg_, groups_, params_.data(), ids, nullptr);
}

double NllLoss(const Matrix& logits, const TrainingSample& sample) {
  const auto positions =
      LossPositions(sample, static_cast<std::size_t>(logits.rows()));
  double total = 0.0;
  for (std::size_t t : positions) {
    const RowVector lp = LogSoftmax(logits, static_cast<Eigen::Index>(t - 1));
    total -= lp(sample.ids[t]);
  }
  return total / static_cast<double>(positions.size());
}

double ToyModel::LossAndGradient(std::span<const TokenId> inputs,
                                 const TrainingSample& gold,
                                 std::vector<double>* grad) const {
  if (inputs.size() != gold.ids.size())
    throw Error("inputs and gold sample differ in length");
  ForwardCache cache;
  const Matrix logits =
      RunForward(cfg_, groups_, params_.data(), inputs, grad ? &cache : nullptr);
  const auto positions =
      LossPositions(gold, static_cast<std::size_t>(logits.rows()));
  const double inv_count = 1.0 / static_cast<double>(positions.size());

  Matrix dlogits = Matrix::Zero(logits.rows(), logits.cols());
  double total = 0.0;
  for (std::size_t t : positions) {
    const Eigen::Index r = static_cast<Eigen::Index>(t - 1);
    const RowVector lp = LogSoftmax(logits, r);
    total -= lp(gold.ids[t]);
    dlogits.row(r) += lp.array().exp().matrix() * inv_count;
    dlogits(r, gold.ids[t]) -= inv_count;
  }
  const double loss = total * inv_count;
  if (!grad) return loss;

  grad->resize(params_.size(), 0.0);
  double* g = grad->data();
  const double* theta = params_.data();
  auto mat = [&](std::size_t gi) {
    const ParamGroup& pg = groups_[gi];
    return ConstMapMatrix(theta + pg.offset, static_cast<Eigen::Index>(pg.rows),
                          static_cast<Eigen::Index>(pg.cols));
  };
  auto row = [&](std::size_t gi) {
    const ParamGroup& pg = groups_[gi];
    return ConstMapRow(theta + pg.offset, static_cast<Eigen::Index>(pg.size()));
  };
  auto dmat = [&](std::size_t gi) {
    const ParamGroup& pg = groups_[gi];
    return MapMatrix(g + pg.offset, static_cast<Eigen::Index>(pg.rows),
                     static_cast<Eigen::Index>(pg.cols));
  };
  auto drow = [&](std::size_t gi) {
    const ParamGroup& pg = groups_[gi];
    return MapRow(g + pg.offset, static_cast<Eigen::Index>(pg.size()));
  };

  const Eigen::Index T = logits.rows();
  const Eigen::Index d = static_cast<Eigen::Index>(cfg_.dim);
  const std::size_t heads = cfg_.n_heads;
  const Eigen::Index dh = d / static_cast<Eigen::Index>(heads);
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

  // logits = hf * W_out^T
  const std::size_t out_group = OutputGroup(cfg_);
  Matrix dhf = dlogits * mat(out_group);
  dmat(out_group).noalias() += dlogits.transpose() * cache.hf;
  Matrix dh_res =
      LayerNormBackward(dhf, cache.ln_f, row(FinalGainGroup(cfg_)),
                        drow(FinalGainGroup(cfg_)), drow(FinalBiasGroup(cfg_)));

  for (std::size_t li = cfg_.n_layers; li-- > 0;) {
    const BlockCache& bc = cache.blocks[li];
    // MLP branch.
    dmat(BlockGroup(li, kProjWeight)).noalias() += bc.act.transpose() * dh_res;
    drow(BlockGroup(li, kProjBias)) += dh_res.colwise().sum();
    Matrix dact = dh_res * mat(BlockGroup(li, kProjWeight)).transpose();
    Matrix dfc = dact.cwiseProduct(
        bc.fc.unaryExpr([](double x) { return GeluGrad(x); }));
    dmat(BlockGroup(li, kFcWeight)).noalias() += bc.a2.transpose() * dfc;
    drow(BlockGroup(li, kFcBias)) += dfc.colwise().sum();
    Matrix da2 = dfc * mat(BlockGroup(li, kFcWeight)).transpose();
    Matrix dh_mid = dh_res + LayerNormBackward(da2, bc.ln2,
                                               row(BlockGroup(li, kLn2Gain)),
                                               drow(BlockGroup(li, kLn2Gain)),
                                               drow(BlockGroup(li, kLn2Bias)));

    // Attention branch.
    dmat(BlockGroup(li, kAttnOutWeight)).noalias() +=
        bc.attn_concat.transpose() * dh_mid;
    drow(BlockGroup(li, kAttnOutBias)) += dh_mid.colwise().sum();
    const Matrix dconcat =
        dh_mid * mat(BlockGroup(li, kAttnOutWeight)).transpose();
    Matrix dqkv = Matrix::Zero(T, 3 * d);
    for (std::size_t hd = 0; hd < heads; ++hd) {
      const Eigen::Index q0 = static_cast<Eigen::Index>(hd) * dh;
      const Eigen::Index k0 = d + q0;
      const Eigen::Index v0 = 2 * d + q0;
      const Matrix& P = bc.probs[hd];
      for (Eigen::Index t = 0; t < T; ++t) {
        const auto dout = dconcat.row(t).segment(q0, dh);
        // dP and the value gradient.
        RowVector dP(t + 1);
        for (Eigen::Index j = 0; j <= t; ++j) {
          dP(j) = dout.dot(bc.qkv.row(j).segment(v0, dh));
          dqkv.row(j).segment(v0, dh) += P(t, j) * dout;
        }
        double weighted = 0.0;
        for (Eigen::Index j = 0; j <= t; ++j) weighted += P(t, j) * dP(j);
        for (Eigen::Index j = 0; j <= t; ++j) {
          const double ds = P(t, j) * (dP(j) - weighted) * scale;
          dqkv.row(t).segment(q0, dh) += ds * bc.qkv.row(j).segment(k0, dh);
          dqkv.row(j).segment(k0, dh) += ds * bc.qkv.row(t).segment(q0, dh);
        }
      }
    }
    dmat(BlockGroup(li, kQkvWeight)).noalias() += bc.a.transpose() * dqkv;
    drow(BlockGroup(li, kQkvBias)) += dqkv.colwise().sum();
    const Matrix da = dqkv * mat(BlockGroup(li, kQkvWeight)).transpose();
    dh_res = dh_mid + LayerNormBackward(da, bc.ln1,
                                        row(BlockGroup(li, kLn1Gain)),
                                        drow(BlockGroup(li, kLn1Gain)),
                                        drow(BlockGroup(li, kLn1Bias)));
  }

  auto dtok = dmat(kTokenEmbedding);
  auto dpos = dmat(kPositionEmbedding);
  for (Eigen::Index t = 0; t < T; ++t) {
    dtok.row(inputs[static_cast<std::size_t>(t)]) += dh_res.row(t);
    dpos.row(t) += dh_res.row(t);
  }
  return loss;
}

void TrainConfig::Validate() const {
  if (!(learning_rate > 0.0)) throw Error("learning_rate must be positive");
  if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0))
    throw Error("adam_beta1 must be in [0, 1)");
  if (!(adam_beta2 >= 0.0 && adam_beta2 < 1.0))
    throw Error("adam_beta2 must be in [0, 1)");
  if (!(teacher_forcing_ratio >= 0.0 && teacher_forcing_ratio <= 1.0))
    throw Error("teacher_forcing_ratio must be in [0, 1]");
  if (batch_size == 0) throw Error("batch_size must be positive");
}

nlohmann::json TrainConfig::ToJson() const {
  nlohmann::ordered_json j;
  j["learning_rate"] = learning_rate;
  j["adam_beta1"] = adam_beta1;
  j["adam_beta2"] = adam_beta2;
  j["adam_eps"] = adam_eps;
  j["teacher_forcing_ratio"] = teacher_forcing_ratio;
  j["epochs"] = epochs;
  j["batch_size"] = batch_size;
  j["seed"] = seed;
  j["freeze_layers"] = freeze_layers;
  j["freeze_embeddings"] = freeze_embeddings;
  return j;
}

TrainConfig TrainConfig::FromJson(const nlohmann::json& j) {
  TrainConfig c;
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  c.adam_beta1 = j.value("adam_beta1", c.adam_beta1);
  c.adam_beta2 = j.value("adam_beta2", c.adam_beta2);
  c.adam_eps = j.value("adam_eps", c.adam_eps);
  c.teacher_forcing_ratio =
      j.value("teacher_forcing_ratio", c.teacher_forcing_ratio);
  c.epochs = j.value("epochs", c.epochs);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.seed = j.value("seed", c.seed);
  c.freeze_layers = j.value("freeze_layers", c.freeze_layers);
  c.freeze_embeddings = j.value("freeze_embeddings", c.freeze_embeddings);
  return c;
}

TokenId Argmax(const Matrix& logits, std::size_t row) {
  Eigen::Index best = 0;
  const auto r = logits.row(static_cast<Eigen::Index>(row));
  for (Eigen::Index i = 1; i < r.size(); ++i)
    if (r(i) > r(best)) best = i;
  return static_cast<TokenId>(best);
}

TrainResult Train(ToyModel model, std::span<const TrainingSample> samples,
                  const TrainConfig& tcfg) {
  tcfg.Validate();
  if (samples.empty()) throw Error("training needs at least one sample");
  const ModelConfig& cfg = model.config();
  if (!tcfg.freeze_layers.empty() && tcfg.freeze_layers.size() != cfg.n_layers)
    throw Error("freeze_layers has " + std::to_string(tcfg.freeze_layers.size()) +
                " entries for " + std::to_string(cfg.n_layers) + " layers");

  const std::size_t n_params = model.params().size();
  std::vector<char> trainable(n_params, 1);
  for (const ParamGroup& g : model.groups()) {
    bool frozen = false;
    if (g.layer >= 0 && !tcfg.freeze_layers.empty())
      frozen = tcfg.freeze_layers[static_cast<std::size_t>(g.layer)];
    if (g.embedding && tcfg.freeze_embeddings) frozen = true;
    if (frozen)
      std::fill(trainable.begin() + static_cast<std::ptrdiff_t>(g.offset),
                trainable.begin() + static_cast<std::ptrdiff_t>(g.offset + g.size()),
                0);
  }

  std::vector<double> m(n_params, 0.0), v(n_params, 0.0), grad, batch_grad;
  std::vector<std::size_t> order(samples.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::size_t step = 0;
  TrainResult result{std::move(model), {}};
  ToyModel& net = result.model;

  for (std::size_t epoch = 0; epoch < tcfg.epochs; ++epoch) {
    const std::uint64_t epoch_seed = DeriveSeed(tcfg.seed, epoch);
    Rng shuffle(DeriveSeed(epoch_seed, "shuffle"));
    for (std::size_t i = order.size(); i > 1; --i)
      std::swap(order[i - 1], order[shuffle.Below(i)]);

    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += tcfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + tcfg.batch_size);
      batch_grad.assign(n_params, 0.0);
      for (std::size_t bi = start; bi < end; ++bi) {
        const std::size_t si = order[bi];
        const TrainingSample& sample = samples[si];
        std::vector<TokenId> inputs = sample.ids;
        if (tcfg.teacher_forcing_ratio < 1.0) {
          // Scheduled sampling: a TARGET input may be replaced by the
          // model's own greedy guess for that position.
          const Matrix logits = net.Forward(sample.ids);
          const std::uint64_t sample_seed = DeriveSeed(epoch_seed, si);
          for (std::size_t t = 1; t < inputs.size(); ++t) {
            if (sample.roles[t] != Role::kTarget) continue;
            if (ToUnit(DeriveSeed(sample_seed, t)) <
                1.0 - tcfg.teacher_forcing_ratio)
              inputs[t] = Argmax(logits, t - 1);
          }
        }
        grad.assign(n_params, 0.0);
        const double loss = net.LossAndGradient(inputs, sample, &grad);
        if (!std::isfinite(loss)) {
          std::ostringstream msg;
          msg << "non-finite loss " << loss << " at epoch " << epoch + 1
              << ", sample " << si << " (length " << sample.size() << ")";
          throw Error(msg.str());
        }
        epoch_loss += loss;
        for (std::size_t p = 0; p < n_params; ++p) batch_grad[p] += grad[p];
      }
      const double inv = 1.0 / static_cast<double>(end - start);
      ++step;
      const double bc1 = 1.0 - std::pow(tcfg.adam_beta1, static_cast<double>(step));
      const double bc2 = 1.0 - std::pow(tcfg.adam_beta2, static_cast<double>(step));
      std::span<double> theta = net.params();
      for (std::size_t p = 0; p < n_params; ++p) {
        if (!trainable[p]) continue;
        const double gp = batch_grad[p] * inv;
        m[p] = tcfg.adam_beta1 * m[p] + (1.0 - tcfg.adam_beta1) * gp;
        v[p] = tcfg.adam_beta2 * v[p] + (1.0 - tcfg.adam_beta2) * gp * gp;
        theta[p] -= tcfg.learning_rate * (m[p] / bc1) /
                    (std::sqrt(v[p] / bc2) + tcfg.adam_eps);
      }
    }
    result.loss_history.push_back(epoch_loss /
                                  static_cast<double>(samples.size()));
  }
  return result;
}

std::vector<TokenId> GreedyContinue(const ToyModel& model,
                                    std::span<const TokenId> prompt,
                                    std::size_t max_len) {
  const std::size_t cap = std::min(max_len, model.config().max_len);
  if (prompt.size() > cap)
    throw Error("prompt of " + std::to_string(prompt.size()) +
                " tokens exceeds max_len " + std::to_string(cap));
  std::vector<TokenId> seq(prompt.begin(), prompt.end());
  std::vector<TokenId> out;
  while (seq.size() < cap) {
    const Matrix logits = model.Forward(seq);
    const TokenId next = Argmax(logits, seq.size() - 1);
    if (next == Vocab::kEos) break;
    seq.push_back(next);
    out.push_back(next);
  }
  return out;
}

std::vector<std::string> GreedyDecode(const ToyModel& model,
                                      const Vocab& vocab,
                                      std::span<const std::string> x,
                                      const MaskedTemplate& tmpl,
                                      const DecodeOptions& opts) {
  MaskConfig mc;
  mc.p = opts.p;
  mc.seed = opts.seed;
  const MaskedTemplate masked = SecondOrderMask(tmpl, mc);
  std::vector<std::optional<std::string>> slots;
  slots.reserve(masked.size());
  for (const Slot& s : masked.slots())
    slots.push_back(s.masked() ? std::nullopt
                               : std::optional<std::string>(s.token->surface));
  const TrainingSample prompt = BuildPrompt(x, slots, vocab, opts.layout);
  return DecodeIds(GreedyContinue(model, prompt.ids, opts.max_len), vocab);
}

GradientCheckResult GradientCheck(const ToyModel& model,
                                  const TrainingSample& sample, double epsilon,
                                  std::size_t coordinates, std::uint64_t seed) {
  std::vector<double> analytic(model.params().size(), 0.0);
  model.LossAndGradient(sample.ids, sample, &analytic);

  ToyModel probe = model;
  std::span<double> theta = probe.params();
  Rng rng(DeriveSeed(seed, "gradient-check"));
  const auto& groups = model.groups();
  GradientCheckResult res;
  std::set<std::size_t> covered;
  for (std::size_t i = 0; i < coordinates; ++i) {
    const std::size_t gi = i % groups.size();
    const ParamGroup& g = groups[gi];
    const std::size_t c = g.offset + rng.Below(g.size());
    const double saved = theta[c];
    theta[c] = saved + epsilon;
    const double up = probe.LossAndGradient(sample.ids, sample, nullptr);
    theta[c] = saved - epsilon;
    const double down = probe.LossAndGradient(sample.ids, sample, nullptr);
    theta[c] = saved;
    const double numeric = (up - down) / (2.0 * epsilon);
    const double a = analytic[c];
    const double abs_err = std::abs(a - numeric);
    const double rel =
        abs_err / std::max({std::abs(a), std::abs(numeric), 1e-6});
    res.max_relative_error = std::max(res.max_relative_error, rel);
    res.max_abs_error = std::max(res.max_abs_error, abs_err);
    res.max_abs_analytic = std::max(res.max_abs_analytic, std::abs(a));
    res.max_abs_numeric = std::max(res.max_abs_numeric, std::abs(numeric));
    covered.insert(gi);
    ++res.coordinates;
  }
  res.groups_covered = covered.size();
  return res;
}

nlohmann::json CheckpointToJson(const ToyModel& model, const Vocab& vocab) {
  if (vocab.size() != model.config().vocab_size)
    throw Error("vocabulary size does not match the model");
  nlohmann::ordered_json j;
  j["format"] = "exemplar-forge-toylm";
  j["format_version"] = kCheckpointVersion;
  j["model_config"] = model.config().ToJson();
  j["vocab"] = vocab.ToJson();
  const auto p = model.params();
  j["params"] = std::vector<double>(p.begin(), p.end());
  return j;
}

Checkpoint CheckpointFromJson(const nlohmann::json& j) {
  if (j.value("format", std::string()) != "exemplar-forge-toylm")
    throw Error("not a toy-model checkpoint");
  if (j.value("format_version", 0) != kCheckpointVersion)
    throw Error("unsupported checkpoint version");
  const ModelConfig cfg = ModelConfig::FromJson(j.at("model_config"));
  Vocab vocab = Vocab::FromJson(j.at("vocab"));
  if (vocab.size() != cfg.vocab_size)
    throw Error("checkpoint vocabulary size does not match its config");
  return Checkpoint{
      ToyModel::FromParameters(cfg, j.at("params").get<std::vector<double>>()),
      std::move(vocab)};
}

}  // namespace exforge
