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

// Exemplar selection for (source, target) pairs.
//
// Syntactic route: filter a candidate pool (not the source or target, length
// within max_len_diff of the target, BLEU against the target below a
// ceiling) and take the candidate whose parse is closest to the target's
// under unit-cost ordered tree edit distance.
//
// Embedding route: deduplicate the pool by text, index its sentence vectors,
// take the k nearest neighbours of the source by cosine, drop the source and
// target texts, and draw one survivor uniformly at random.

#ifndef EXFORGE_TEMPLATE_SELECT_H_
#define EXFORGE_TEMPLATE_SELECT_H_

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "exforge/corpus.h"

namespace exforge {

// Postorder form of a tree for repeated distance queries.
class TedTree {
 public:
  explicit TedTree(const ParseTree& tree);
  std::size_t size() const { return size_; }

 private:
  friend std::size_t TreeEditDistance(const TedTree& a, const TedTree& b);
  const std::uint32_t* labels() const { return data_.data(); }
  const std::uint32_t* leftmost() const { return data_.data() + size_; }
  const std::uint32_t* keyroots_begin() const { return leftmost() + size_; }
  const std::uint32_t* keyroots_end() const { return data_.data() + data_.size(); }

  std::size_t size_ = 0;
  // Postorder: interned labels (process-wide ids), then leftmost leaf
  // descendants, then ascending keyroots.
  std::vector<std::uint32_t> data_;
};

// Unit-cost ordered tree edit distance (Zhang-Shasha keyroot DP).
std::size_t TreeEditDistance(const TedTree& a, const TedTree& b);
std::size_t TreeEditDistance(const ParseTree& a, const ParseTree& b);

struct TedConfig {
  int max_len_diff = 2;
  double bleu_ceiling = 0.6;

  // Throws Error when out of range.
  void Validate() const;
};

struct CandidatePool {
  std::vector<TaggedSentence> sentences;
  std::map<std::string, ParseTree> trees;

  // Throws on duplicate ids or, when `need_trees`, a sentence without tree.
  void Validate(bool need_trees) const;
};

// Ids of pool members that pass all three filter rules, in pool order.
std::vector<std::string> CandidateFilter(const PairRecord& pair,
                                         const CandidatePool& pool,
                                         const TedConfig& cfg);

// Survivor with the smallest TED to the target's tree, ties broken by the
// lexicographically smallest id. nullopt when nothing survives the filter.
std::optional<std::string> SelectTemplateTed(const PairRecord& pair,
                                             const CandidatePool& pool,
                                             const TedConfig& cfg);

struct Neighbor {
  std::size_t index;
  double cosine;
};

class EmbeddingIndex {
 public:
  // Keeps the first sentence of every distinct token sequence in the pool.
  // Throws if the pool is empty or a sentence has no vector.
  static EmbeddingIndex Build(std::span<const TaggedSentence> pool,
                              EmbeddingTable table);

  std::size_t dim() const { return table_.dim(); }
  std::size_t size() const { return ids_.size(); }
  const std::vector<std::string>& ids() const { return ids_; }
  const std::vector<std::string>& text(std::size_t i) const {
    return texts_[i];
  }
  std::span<const double> vector(std::size_t i) const {
    return {matrix_.data() + i * dim(), dim()};
  }
  const EmbeddingTable& table() const { return table_; }

  // Exact k-NN by cosine over every entry, most similar first; equal
  // cosines keep index order.
  std::vector<Neighbor> Search(std::span<const double> query,
                               std::size_t k) const;

 private:
  EmbeddingIndex(EmbeddingTable table) : table_(std::move(table)) {}

  EmbeddingTable table_;
  std::vector<std::string> ids_;
  std::vector<std::vector<std::string>> texts_;
  std::vector<double> matrix_;  // row-major, size() x dim()
};

// Throws Error when k is 0 or the source has no vector.
std::optional<std::string> SelectTemplateEmbedding(const PairRecord& pair,
                                                   const EmbeddingIndex& index,
                                                   std::size_t k,
                                                   std::uint64_t seed);

// Seed for one pair's draw, independent of processing order.
std::uint64_t PairSeed(std::uint64_t seed, const PairRecord& pair);

}  // namespace exforge

#endif  // EXFORGE_TEMPLATE_SELECT_H_
