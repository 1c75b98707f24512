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

#include "exforge/template_select.h"

#include <algorithm>
#include <array>
#include <cstdlib>
#include <mutex>
#include <set>
#include <unordered_map>

#include "exforge/error.h"
#include "exforge/metrics.h"
#include "exforge/rng.h"

namespace exforge {
namespace {

std::uint32_t InternLabel(const std::string& label) {
  static std::mutex mu;
  static std::unordered_map<std::string, std::uint32_t> ids;
  std::lock_guard<std::mutex> lock(mu);
  return ids.emplace(label, static_cast<std::uint32_t>(ids.size()))
      .first->second;
}

std::uint32_t Visit(const ParseTree& node, std::vector<std::uint32_t>& labels,
                    std::vector<std::uint32_t>& leftmost) {
  std::uint32_t first_leftmost = 0;
  bool have_first = false;
  for (const ParseTree& child : node.children) {
    const std::uint32_t child_leftmost = Visit(child, labels, leftmost);
    if (!have_first) {
      first_leftmost = child_leftmost;
      have_first = true;
    }
  }
  const auto index = static_cast<std::uint32_t>(labels.size());
  labels.push_back(InternLabel(node.label));
  leftmost.push_back(have_first ? first_leftmost : index);
  return leftmost.back();
}

}  // namespace

TedTree::TedTree(const ParseTree& tree) {
  std::vector<std::uint32_t> leftmost;
  Visit(tree, data_, leftmost);
  size_ = data_.size();
  data_.insert(data_.end(), leftmost.begin(), leftmost.end());
  // A keyroot is the highest node with a given leftmost leaf.
  std::vector<bool> seen(size_, false);
  std::vector<std::uint32_t> keyroots;
  for (std::size_t i = size_; i-- > 0;) {
    if (!seen[leftmost[i]]) {
      seen[leftmost[i]] = true;
      keyroots.push_back(static_cast<std::uint32_t>(i));
    }
  }
  data_.insert(data_.end(), keyroots.rbegin(), keyroots.rend());
}

std::size_t TreeEditDistance(const TedTree& ta, const TedTree& tb) {
  const std::size_t n = ta.size();
  const std::size_t m = tb.size();
  // Every tree_dist entry is written (on a keyroot's leftmost path) before
  // any later keyroot pair reads it, so neither buffer needs clearing.
  constexpr std::size_t kSmall = 32;
  std::array<std::uint32_t, kSmall * kSmall> td_small;
  std::array<std::uint32_t, (kSmall + 1) * (kSmall + 1)> fd_small;
  std::uint32_t* td = td_small.data();
  // Forest distances, offset by one slot for the empty forest.
  std::uint32_t* fd = fd_small.data();
  if (n > kSmall || m > kSmall) {
    thread_local std::vector<std::uint32_t> tree_dist;
    thread_local std::vector<std::uint32_t> forest;
    if (tree_dist.size() < n * m) tree_dist.resize(n * m);
    if (forest.size() < (n + 1) * (m + 1)) forest.resize((n + 1) * (m + 1));
    td = tree_dist.data();
    fd = forest.data();
  }
  const std::size_t stride = m + 1;
  // Row and column zero (empty forests) are the same for every keyroot pair.
  for (std::size_t j = 0; j <= m; ++j) fd[j] = static_cast<std::uint32_t>(j);
  for (std::size_t i = 1; i <= n; ++i)
    fd[i * stride] = static_cast<std::uint32_t>(i);
  const std::uint32_t* la_of = ta.leftmost();
  const std::uint32_t* lb_of = tb.leftmost();
  const std::uint32_t* lab_a = ta.labels();
  const std::uint32_t* lab_b = tb.labels();

  for (const std::uint32_t* ka = ta.keyroots_begin(); ka != ta.keyroots_end();
       ++ka) {
    const std::size_t kr_a = *ka;
    const std::size_t la = la_of[kr_a];
    const std::size_t rows = kr_a - la + 1;
    for (const std::uint32_t* kb = tb.keyroots_begin();
         kb != tb.keyroots_end(); ++kb) {
      const std::size_t kr_b = *kb;
      const std::size_t lb = lb_of[kr_b];
      const std::size_t cols = kr_b - lb + 1;
      // A single node against a tree costs the tree's size, less one if
      // the label occurs in it.
      if (rows == 1) {
        const std::uint32_t label_a = lab_a[kr_a];
        std::uint32_t* td_row = td + kr_a * m;
        std::uint32_t found = 0;
        for (std::size_t b = lb; b <= kr_b; ++b) {
          found |= lab_b[b] == label_a ? 1u : 0u;
          if (lb_of[b] == lb)
            td_row[b] = static_cast<std::uint32_t>(b - lb + 1) - found;
        }
        continue;
      }
      if (cols == 1) {
        const std::uint32_t label_b = lab_b[kr_b];
        std::uint32_t found = 0;
        for (std::size_t a = la; a <= kr_a; ++a) {
          found |= lab_a[a] == label_b ? 1u : 0u;
          if (la_of[a] == la)
            td[a * m + kr_b] = static_cast<std::uint32_t>(a - la + 1) - found;
        }
        continue;
      }
      for (std::size_t i = 1; i <= rows; ++i) {
        const std::size_t node_a = la + i - 1;
        const std::uint32_t label_a = lab_a[node_a];
        // Row offsets are shifted so columns are addressed by node of b and
        // the subtree row by leftmost leaf of b.
        const std::ptrdiff_t prev = static_cast<std::ptrdiff_t>(
            (i - 1) * stride + 1) - static_cast<std::ptrdiff_t>(lb);
        const std::ptrdiff_t cur = prev + static_cast<std::ptrdiff_t>(stride);
        const std::ptrdiff_t sub =
            static_cast<std::ptrdiff_t>((la_of[node_a] - la) * stride) -
            static_cast<std::ptrdiff_t>(lb);
        std::uint32_t* td_row = td + node_a * m;
        std::uint32_t left = static_cast<std::uint32_t>(i);
        // Only `left + 1` sits on the dependency chain between columns.
        if (la_of[node_a] == la) {
          for (std::size_t b = lb; b <= kr_b; ++b) {
            const auto jb = static_cast<std::ptrdiff_t>(b);
            std::uint32_t other = fd[prev + jb] + 1;
            if (lb_of[b] == lb) {
              const std::uint32_t relabel = label_a == lab_b[b] ? 0 : 1;
              other = std::min(other, fd[prev + jb - 1] + relabel);
              left = std::min(left + 1, other);
              td_row[b] = left;
            } else {
              other = std::min(
                  other, fd[sub + static_cast<std::ptrdiff_t>(lb_of[b])] + td_row[b]);
              left = std::min(left + 1, other);
            }
            fd[cur + jb] = left;
          }
        } else {
          for (std::size_t b = lb; b <= kr_b; ++b) {
            const auto jb = static_cast<std::ptrdiff_t>(b);
            const std::uint32_t other = std::min(
                fd[prev + jb] + 1,
                fd[sub + static_cast<std::ptrdiff_t>(lb_of[b])] + td_row[b]);
            left = std::min(left + 1, other);
            fd[cur + jb] = left;
          }
        }
      }
    }
  }
  return td[(n - 1) * m + (m - 1)];
}

std::size_t TreeEditDistance(const ParseTree& a, const ParseTree& b) {
  return TreeEditDistance(TedTree(a), TedTree(b));
}

void TedConfig::Validate() const {
  if (max_len_diff < 0) throw Error("max_len_diff must be non-negative");
  if (!(bleu_ceiling > 0.0 && bleu_ceiling <= 1.0))
    throw Error("bleu_ceiling must be in (0, 1]");
}

void CandidatePool::Validate(bool need_trees) const {
  IndexById(sentences);
  if (!need_trees) return;
  for (const TaggedSentence& s : sentences) {
    if (!trees.count(s.id()))
      throw Error("no parse tree for pool sentence '" + s.id() + "'");
  }
}

std::vector<std::string> CandidateFilter(const PairRecord& pair,
                                         const CandidatePool& pool,
                                         const TedConfig& cfg) {
  cfg.Validate();
  const std::vector<Tokens> target_ref = {pair.target.Surfaces()};
  std::vector<std::string> out;
  for (const TaggedSentence& c : pool.sentences) {
    if (c.id() == pair.source.id() || c.id() == pair.target.id()) continue;
    if (SameText(c, pair.source) || SameText(c, pair.target)) continue;
    const long diff = static_cast<long>(c.size()) -
                      static_cast<long>(pair.target.size());
    if (std::labs(diff) > cfg.max_len_diff) continue;
    if (Bleu(c.Surfaces(), target_ref) >= cfg.bleu_ceiling) continue;
    out.push_back(c.id());
  }
  return out;
}

std::optional<std::string> SelectTemplateTed(const PairRecord& pair,
                                             const CandidatePool& pool,
                                             const TedConfig& cfg) {
  const std::vector<std::string> survivors = CandidateFilter(pair, pool, cfg);
  if (survivors.empty()) return std::nullopt;
  auto target_tree = pool.trees.find(pair.target.id());
  if (target_tree == pool.trees.end())
    throw Error("no parse tree for target '" + pair.target.id() + "'");
  const TedTree target(target_tree->second);

  std::optional<std::string> best;
  std::size_t best_dist = 0;
  for (const std::string& id : survivors) {
    auto tree = pool.trees.find(id);
    if (tree == pool.trees.end())
      throw Error("no parse tree for candidate '" + id + "'");
    const std::size_t d = TreeEditDistance(TedTree(tree->second), target);
    if (!best || d < best_dist || (d == best_dist && id < *best)) {
      best = id;
      best_dist = d;
    }
  }
  return best;
}

EmbeddingIndex EmbeddingIndex::Build(std::span<const TaggedSentence> pool,
                                     EmbeddingTable table) {
  if (pool.empty()) throw Error("cannot build an embedding index over an "
                                "empty pool");
  EmbeddingIndex index(std::move(table));
  std::set<std::vector<std::string>> seen;
  for (const TaggedSentence& s : pool) {
    std::vector<std::string> text = s.Surfaces();
    if (!seen.insert(text).second) continue;
    if (!index.table_.contains(s.id()))
      throw Error("no embedding for pool sentence '" + s.id() + "'");
    const std::vector<double>& v = index.table_.at(s.id());
    index.ids_.push_back(s.id());
    index.texts_.push_back(std::move(text));
    index.matrix_.insert(index.matrix_.end(), v.begin(), v.end());
  }
  return index;
}

std::vector<Neighbor> EmbeddingIndex::Search(std::span<const double> query,
                                             std::size_t k) const {
  if (query.size() != dim())
    throw Error("query dimension " + std::to_string(query.size()) +
                " does not match index dimension " + std::to_string(dim()));
  std::vector<Neighbor> all;
  all.reserve(size());
  for (std::size_t i = 0; i < size(); ++i) {
    const std::span<const double> row = vector(i);
    double dot = 0.0;
    for (std::size_t d = 0; d < dim(); ++d) dot += row[d] * query[d];
    all.push_back(Neighbor{i, dot});
  }
  const std::size_t keep = std::min(k, all.size());
  std::partial_sort(all.begin(), all.begin() + keep, all.end(),
                    [](const Neighbor& x, const Neighbor& y) {
                      if (x.cosine != y.cosine) return x.cosine > y.cosine;
                      return x.index < y.index;
                    });
  all.resize(keep);
  return all;
}

std::optional<std::string> SelectTemplateEmbedding(const PairRecord& pair,
                                                   const EmbeddingIndex& index,
                                                   std::size_t k,
                                                   std::uint64_t seed) {
  if (k == 0) throw Error("neighbourhood size k must be positive");
  if (!index.table().contains(pair.source.id()))
    throw Error("no embedding for source '" + pair.source.id() + "'");
  const std::vector<double>& query = index.table().at(pair.source.id());
  const std::vector<std::string> source = pair.source.Surfaces();
  const std::vector<std::string> target = pair.target.Surfaces();

  std::vector<std::size_t> survivors;
  for (const Neighbor& nb : index.Search(query, k)) {
    const auto& text = index.text(nb.index);
    if (text == source || text == target) continue;
    survivors.push_back(nb.index);
  }
  if (survivors.empty()) return std::nullopt;
  Rng rng(seed);
  return index.ids()[survivors[rng.Below(survivors.size())]];
}

std::uint64_t PairSeed(std::uint64_t seed, const PairRecord& pair) {
  return DeriveSeed(DeriveSeed(seed, pair.source.id()),
                    HashString(pair.target.id()));
}

}  // namespace exforge
