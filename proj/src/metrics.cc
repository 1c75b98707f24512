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

#include "exforge/metrics.h"

#include <algorithm>
#include <cmath>
#include <cstdlib>

#include <nlohmann/json.hpp>

#include "exforge/error.h"

namespace exforge {

NgramProfile::NgramProfile(std::span<const std::string> tokens, std::size_t n)
    : n_(n) {
  if (n == 0) throw Error("n-gram order must be positive");
  if (tokens.size() < n) return;
  total_ = tokens.size() - n + 1;
  for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
    ++counts_[std::vector<std::string>(tokens.begin() + i,
                                       tokens.begin() + i + n)];
  }
}

std::size_t NgramProfile::count(const std::vector<std::string>& gram) const {
  auto it = counts_.find(gram);
  return it == counts_.end() ? 0 : it->second;
}

std::size_t NgramProfile::Overlap(const NgramProfile& other) const {
  std::size_t overlap = 0;
  for (const auto& [gram, c] : counts_) overlap += std::min(c, other.count(gram));
  return overlap;
}

void BleuStats::Add(const BleuStats& other) {
  if (matches.size() < other.matches.size()) {
    matches.resize(other.matches.size(), 0.0);
    totals.resize(other.totals.size(), 0.0);
  }
  for (std::size_t i = 0; i < other.matches.size(); ++i) {
    matches[i] += other.matches[i];
    totals[i] += other.totals[i];
  }
  candidate_length += other.candidate_length;
  reference_length += other.reference_length;
}

BleuStats ComputeBleuStats(std::span<const std::string> candidate,
                           std::span<const Tokens> references,
                           std::size_t max_n) {
  if (references.empty()) throw Error("BLEU needs at least one reference");
  if (max_n == 0) throw Error("BLEU order must be positive");
  BleuStats stats;
  stats.matches.assign(max_n, 0.0);
  stats.totals.assign(max_n, 0.0);
  stats.candidate_length = static_cast<double>(candidate.size());

  // Closest reference length, shorter on ties.
  std::size_t best = references.front().size();
  for (const Tokens& ref : references) {
    const auto diff = [&](std::size_t len) {
      return len > candidate.size() ? len - candidate.size()
                                    : candidate.size() - len;
    };
    if (diff(ref.size()) < diff(best) ||
        (diff(ref.size()) == diff(best) && ref.size() < best))
      best = ref.size();
  }
  stats.reference_length = static_cast<double>(best);

  for (std::size_t n = 1; n <= max_n; ++n) {
    NgramProfile cand(candidate, n);
    // Clip each candidate n-gram by its maximum count in any reference.
    std::map<std::vector<std::string>, std::size_t> max_ref;
    for (const Tokens& ref : references) {
      NgramProfile rp(ref, n);
      for (const auto& [gram, c] : rp.counts()) {
        std::size_t& m = max_ref[gram];
        m = std::max(m, c);
      }
    }
    std::size_t clipped = 0;
    for (const auto& [gram, c] : cand.counts()) {
      auto it = max_ref.find(gram);
      if (it != max_ref.end()) clipped += std::min(c, it->second);
    }
    stats.matches[n - 1] = static_cast<double>(clipped);
    stats.totals[n - 1] = static_cast<double>(cand.total());
  }
  return stats;
}

double BrevityPenalty(double candidate_length, double reference_length) {
  if (candidate_length <= 0.0) return 0.0;
  if (candidate_length >= reference_length) return 1.0;
  return std::exp(1.0 - reference_length / candidate_length);
}

double BleuFromStats(const BleuStats& stats, bool smooth) {
  double log_sum = 0.0;
  std::size_t orders = 0;
  for (std::size_t i = 0; i < stats.matches.size(); ++i) {
    if (stats.totals[i] <= 0.0) continue;
    double m = stats.matches[i];
    if (m <= 0.0) {
      if (!smooth) return 0.0;
      m = kBleuEpsilon;
    }
    log_sum += std::log(m / stats.totals[i]);
    ++orders;
  }
  if (orders == 0) return 0.0;
  const double score =
      std::exp(log_sum / static_cast<double>(orders)) *
      BrevityPenalty(stats.candidate_length, stats.reference_length);
  return std::clamp(score, 0.0, 1.0);
}

BleuResult SentenceBleu(std::span<const std::string> candidate,
                        std::span<const Tokens> references,
                        std::size_t max_n) {
  if (references.empty()) throw Error("BLEU needs at least one reference");
  if (candidate.empty()) return BleuResult{0.0, true};
  return BleuResult{
      BleuFromStats(ComputeBleuStats(candidate, references, max_n), true),
      false};
}

double Bleu(std::span<const std::string> candidate,
            std::span<const Tokens> references, std::size_t max_n) {
  return SentenceBleu(candidate, references, max_n).score;
}

double CorpusBleu(std::span<const Tokens> candidates,
                  std::span<const std::vector<Tokens>> references,
                  std::size_t max_n) {
  if (candidates.size() != references.size())
    throw Error("corpus BLEU: candidate and reference counts differ");
  BleuStats total;
  total.matches.assign(max_n, 0.0);
  total.totals.assign(max_n, 0.0);
  for (std::size_t i = 0; i < candidates.size(); ++i)
    total.Add(ComputeBleuStats(candidates[i], references[i], max_n));
  return BleuFromStats(total, false);
}

double F1(double precision, double recall) {
  if (precision + recall <= 0.0) return 0.0;
  return 2.0 * precision * recall / (precision + recall);
}

Prf RougeN(std::span<const std::string> candidate,
           std::span<const std::string> reference, std::size_t n) {
  NgramProfile cand(candidate, n);
  NgramProfile ref(reference, n);
  const double overlap = static_cast<double>(cand.Overlap(ref));
  Prf out;
  out.precision =
      cand.total() ? overlap / static_cast<double>(cand.total()) : 0.0;
  out.recall = ref.total() ? overlap / static_cast<double>(ref.total()) : 0.0;
  out.f1 = F1(out.precision, out.recall);
  return out;
}

std::size_t LcsLength(std::span<const std::string> a,
                      std::span<const std::string> b) {
  std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1
                                    : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

Prf RougeL(std::span<const std::string> candidate,
           std::span<const std::string> reference) {
  const double lcs = static_cast<double>(LcsLength(candidate, reference));
  Prf out;
  out.precision =
      candidate.empty() ? 0.0 : lcs / static_cast<double>(candidate.size());
  out.recall =
      reference.empty() ? 0.0 : lcs / static_cast<double>(reference.size());
  out.f1 = F1(out.precision, out.recall);
  return out;
}

namespace {

double Dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

// Mean over `rows` of the best similarity to any of `cols`.
double MeanBestMatch(std::span<const std::vector<double>> rows,
                     std::span<const std::vector<double>> cols) {
  double sum = 0.0;
  for (const auto& r : rows) {
    double best = -1.0;
    for (const auto& c : cols) best = std::max(best, Dot(r, c));
    sum += best;
  }
  return sum / static_cast<double>(rows.size());
}

}  // namespace

Prf EmbedMatchScore(std::span<const std::vector<double>> candidate,
                    std::span<const std::vector<double>> reference) {
  if (candidate.empty() || reference.empty())
    throw Error("embedding match needs non-empty token lists");
  const std::size_t dim = candidate.front().size();
  for (const auto& v : candidate)
    if (v.size() != dim) throw Error("embedding match: dimension mismatch");
  for (const auto& v : reference)
    if (v.size() != dim) throw Error("embedding match: dimension mismatch");
  Prf out;
  // Rounding can push a unit-vector dot product a hair past 1.
  out.precision = std::clamp(MeanBestMatch(candidate, reference), 0.0, 1.0);
  out.recall = std::clamp(MeanBestMatch(reference, candidate), 0.0, 1.0);
  out.f1 = F1(out.precision, out.recall);
  return out;
}

EvalMode ParseEvalMode(const std::string& name) {
  if (name == "model") return EvalMode::kModel;
  if (name == "source" || name == "source-as-output")
    return EvalMode::kSourceAsOutput;
  if (name == "exemplar" || name == "exemplar-as-output")
    return EvalMode::kExemplarAsOutput;
  throw Error("unknown eval mode '" + name + "'");
}

std::string EvalModeName(EvalMode mode) {
  switch (mode) {
    case EvalMode::kModel:
      return "model";
    case EvalMode::kSourceAsOutput:
      return "source";
    case EvalMode::kExemplarAsOutput:
      return "exemplar";
  }
  return "model";
}

std::string EvalReport::ToJson() const {
  nlohmann::ordered_json j;
  j["bleu"] = bleu;
  j["rouge1"] = rouge1_f;
  j["rouge2"] = rouge2_f;
  j["rougeL"] = rougeL_f;
  j["rouge_variant"] = "f1";
  if (embed_score)
    j["embed_score"] = *embed_score;
  else
    j["embed_score"] = nullptr;
  j["n_pairs"] = n_pairs;
  return j.dump(2);
}

EvalReport EvaluateCorpus(std::span<const HypothesisRecord> hypotheses,
                          const std::map<std::string, Tokens>& references,
                          EvalMode mode, const EmbeddingTable* token_vectors) {
  std::map<std::string, const HypothesisRecord*> by_id;
  for (const HypothesisRecord& h : hypotheses) {
    if (!by_id.emplace(h.id, &h).second)
      throw Error("duplicate hypothesis id '" + h.id + "'");
  }
  for (const auto& [id, ref] : references) {
    if (!by_id.count(id)) throw Error("no hypothesis for id '" + id + "'");
  }
  for (const auto& [id, h] : by_id) {
    if (!references.count(id)) throw Error("no reference for id '" + id + "'");
  }
  if (by_id.empty()) throw Error("evaluation needs at least one pair");

  auto vectors_of = [&](const Tokens& tokens) {
    std::vector<std::vector<double>> out;
    out.reserve(tokens.size());
    for (const std::string& t : tokens) {
      if (!token_vectors->contains(t))
        throw Error("no token vector for '" + t + "'");
      out.push_back(token_vectors->at(t));
    }
    return out;
  };

  std::vector<Tokens> outputs;
  std::vector<std::vector<Tokens>> refs;
  double r1 = 0.0, r2 = 0.0, rl = 0.0, emb = 0.0;
  // std::map iteration fixes the summation order.
  for (const auto& [id, h] : by_id) {
    const Tokens& out = mode == EvalMode::kModel            ? h->output
                        : mode == EvalMode::kSourceAsOutput ? h->source
                                                            : h->exemplar;
    const Tokens& ref = references.at(id);
    outputs.push_back(out);
    refs.push_back({ref});
    r1 += RougeN(out, ref, 1).f1;
    r2 += RougeN(out, ref, 2).f1;
    rl += RougeL(out, ref).f1;
    if (token_vectors) {
      if (out.empty() || ref.empty()) continue;
      const auto cv = vectors_of(out);
      const auto rv = vectors_of(ref);
      emb += EmbedMatchScore(cv, rv).f1;
    }
  }
  const double n = static_cast<double>(by_id.size());
  EvalReport report;
  report.bleu = CorpusBleu(outputs, refs);
  report.rouge1_f = r1 / n;
  report.rouge2_f = r2 / n;
  report.rougeL_f = rl / n;
  if (token_vectors) report.embed_score = emb / n;
  report.n_pairs = by_id.size();
  return report;
}

}  // namespace exforge
