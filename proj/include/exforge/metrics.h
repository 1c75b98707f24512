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

// Generation metrics over token sequences: BLEU, ROUGE-N, ROUGE-L and a
// greedy embedding-matching score over caller-supplied token vectors.
// Scores are case-sensitive; callers normalize case if they want it.

#ifndef EXFORGE_METRICS_H_
#define EXFORGE_METRICS_H_

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "exforge/corpus.h"

namespace exforge {

using Tokens = std::vector<std::string>;

// Multiset of n-grams of one order.
class NgramProfile {
 public:
  NgramProfile(std::span<const std::string> tokens, std::size_t n);

  std::size_t n() const { return n_; }
  // max(0, len - n + 1)
  std::size_t total() const { return total_; }
  const std::map<std::vector<std::string>, std::size_t>& counts() const {
    return counts_;
  }
  std::size_t count(const std::vector<std::string>& gram) const;

  // Size of the multiset intersection.
  std::size_t Overlap(const NgramProfile& other) const;

 private:
  std::size_t n_;
  std::size_t total_ = 0;
  std::map<std::vector<std::string>, std::size_t> counts_;
};

// Replaces zero clipped-match counts in sentence-level BLEU.
inline constexpr double kBleuEpsilon = 1e-9;

struct BleuStats {
  // Per order n = 1..max_n (index n - 1).
  std::vector<double> matches;
  std::vector<double> totals;
  double candidate_length = 0;
  double reference_length = 0;

  void Add(const BleuStats& other);
};

BleuStats ComputeBleuStats(std::span<const std::string> candidate,
                           std::span<const Tokens> references,
                           std::size_t max_n = 4);

// Geometric mean of the clipped precisions times the brevity penalty. Orders
// for which the candidate has no n-grams are left out of the mean. With
// `smooth`, zero match counts are replaced by kBleuEpsilon; without it any
// zero precision makes the score 0.
double BleuFromStats(const BleuStats& stats, bool smooth);
double BrevityPenalty(double candidate_length, double reference_length);

struct BleuResult {
  double score = 0.0;
  bool empty_candidate = false;
};

// Sentence-level smoothed BLEU. An empty candidate scores 0 and sets
// empty_candidate. Throws Error if there are no references.
BleuResult SentenceBleu(std::span<const std::string> candidate,
                        std::span<const Tokens> references,
                        std::size_t max_n = 4);
double Bleu(std::span<const std::string> candidate,
            std::span<const Tokens> references, std::size_t max_n = 4);

// Corpus BLEU: clipped matches and totals are summed over the corpus before
// the geometric mean and the brevity penalty.
double CorpusBleu(std::span<const Tokens> candidates,
                  std::span<const std::vector<Tokens>> references,
                  std::size_t max_n = 4);

struct Prf {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

// Harmonic mean; 0 when both are 0.
double F1(double precision, double recall);

Prf RougeN(std::span<const std::string> candidate,
           std::span<const std::string> reference, std::size_t n);

std::size_t LcsLength(std::span<const std::string> a,
                      std::span<const std::string> b);
Prf RougeL(std::span<const std::string> candidate,
           std::span<const std::string> reference);

// Greedy matching: each token is matched to its most similar token on the
// other side. Inputs must be unit vectors of one dimension.
Prf EmbedMatchScore(std::span<const std::vector<double>> candidate,
                    std::span<const std::vector<double>> reference);

enum class EvalMode { kModel, kSourceAsOutput, kExemplarAsOutput };

EvalMode ParseEvalMode(const std::string& name);
std::string EvalModeName(EvalMode mode);

// One hypothesis-side record. Only the field selected by the mode is used.
struct HypothesisRecord {
  std::string id;
  Tokens output;
  Tokens source;
  Tokens exemplar;
};

struct EvalReport {
  double bleu = 0.0;
  double rouge1_f = 0.0;
  double rouge2_f = 0.0;
  double rougeL_f = 0.0;
  std::optional<double> embed_score;
  std::size_t n_pairs = 0;

  std::string ToJson() const;
};

// ROUGE and the embedding score are means of sentence scores; BLEU is
// corpus-level. `token_vectors` maps token surfaces to unit vectors. Throws
// Error naming the id when either side lacks a record.
EvalReport EvaluateCorpus(std::span<const HypothesisRecord> hypotheses,
                          const std::map<std::string, Tokens>& references,
                          EvalMode mode,
                          const EmbeddingTable* token_vectors = nullptr);

}  // namespace exforge

#endif  // EXFORGE_METRICS_H_
