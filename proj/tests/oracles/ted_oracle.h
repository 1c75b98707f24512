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

// Brute-force tree edit distance references.
//
// EditGraph: every ordered labeled tree up to a node budget is a vertex and
// every single unit edit that keeps a tree is an edge: relabel, delete a
// non-root node (its children move up), delete a root with one child, and
// the inverse insertions. Breadth-first search gives the length of the
// shortest edit script. An optimal script can delete, then relabel, then
// insert, and its deletions can run outside-in towards the image of the
// other root, so every intermediate stays a tree of at most max(|a|, |b|)
// nodes.
//
// MappingDistance: enumerates Tai mappings (preorder- and ancestry-
// preserving partial matchings) and returns the cheapest.

#ifndef EXFORGE_TESTS_ORACLES_TED_ORACLE_H_
#define EXFORGE_TESTS_ORACLES_TED_ORACLE_H_

#include <algorithm>
#include <bit>
#include <cstdint>
#include <functional>
#include <string>
#include <unordered_map>
#include <vector>

#include "exforge/corpus.h"
#include "exforge/rng.h"

namespace exforge::oracle {

inline std::string TreeKey(const ParseTree& t) {
  std::string out = t.label;
  out += '(';
  for (const ParseTree& c : t.children) out += TreeKey(c);
  out += ')';
  return out;
}

inline ParseTree Node(std::string label, std::vector<ParseTree> children = {}) {
  return ParseTree{std::move(label), std::move(children)};
}

// All ordered forests with exactly n nodes.
inline std::vector<std::vector<ParseTree>> Forests(
    std::size_t n, const std::vector<std::string>& labels);

// All ordered trees with exactly n nodes.
inline std::vector<ParseTree> Trees(std::size_t n,
                                    const std::vector<std::string>& labels) {
  std::vector<ParseTree> out;
  if (n == 0) return out;
  for (const auto& forest : Forests(n - 1, labels))
    for (const std::string& l : labels) out.push_back(Node(l, forest));
  return out;
}

inline std::vector<std::vector<ParseTree>> Forests(
    std::size_t n, const std::vector<std::string>& labels) {
  std::vector<std::vector<ParseTree>> out;
  if (n == 0) {
    out.emplace_back();
    return out;
  }
  for (std::size_t first = 1; first <= n; ++first) {
    const auto heads = Trees(first, labels);
    const auto tails = Forests(n - first, labels);
    for (const ParseTree& h : heads) {
      for (const auto& tail : tails) {
        std::vector<ParseTree> f;
        f.reserve(tail.size() + 1);
        f.push_back(h);
        f.insert(f.end(), tail.begin(), tail.end());
        out.push_back(std::move(f));
      }
    }
  }
  return out;
}

inline void Preorder(ParseTree& t, std::vector<ParseTree*>& out) {
  out.push_back(&t);
  for (ParseTree& c : t.children) Preorder(c, out);
}

// Trees one relabel or one deletion away from `t`.
inline std::vector<ParseTree> ShrinkOrRelabel(
    const ParseTree& t, const std::vector<std::string>& labels) {
  std::vector<ParseTree> out;
  std::vector<ParseTree*> nodes;
  ParseTree probe = t;
  Preorder(probe, nodes);
  for (std::size_t k = 0; k < nodes.size(); ++k) {
    for (const std::string& l : labels) {
      if (l == nodes[k]->label) continue;
      ParseTree copy = t;
      std::vector<ParseTree*> cn;
      Preorder(copy, cn);
      cn[k]->label = l;
      out.push_back(std::move(copy));
    }
  }
  // Deletion: splice the children of a non-root node into its parent.
  std::function<void(const ParseTree&, std::vector<std::size_t>&)> walk;
  std::vector<std::vector<std::size_t>> paths;
  walk = [&](const ParseTree& node, std::vector<std::size_t>& path) {
    for (std::size_t i = 0; i < node.children.size(); ++i) {
      path.push_back(i);
      paths.push_back(path);
      walk(node.children[i], path);
      path.pop_back();
    }
  };
  std::vector<std::size_t> path;
  walk(t, path);
  for (const auto& p : paths) {
    ParseTree copy = t;
    ParseTree* parent = &copy;
    for (std::size_t d = 0; d + 1 < p.size(); ++d)
      parent = &parent->children[p[d]];
    const std::size_t idx = p.back();
    std::vector<ParseTree> grand = std::move(parent->children[idx].children);
    parent->children.erase(parent->children.begin() +
                           static_cast<std::ptrdiff_t>(idx));
    parent->children.insert(
        parent->children.begin() + static_cast<std::ptrdiff_t>(idx),
        std::make_move_iterator(grand.begin()),
        std::make_move_iterator(grand.end()));
    out.push_back(std::move(copy));
  }
  if (t.children.size() == 1) out.push_back(t.children[0]);
  return out;
}

class EditGraph {
 public:
  EditGraph(std::size_t max_nodes, std::vector<std::string> labels)
      : labels_(std::move(labels)) {
    for (std::size_t n = 1; n <= max_nodes; ++n)
      for (ParseTree& t : Trees(n, labels_)) {
        index_.emplace(TreeKey(t), trees_.size());
        trees_.push_back(std::move(t));
      }
    std::vector<std::vector<std::uint32_t>> adjacency(trees_.size());
    for (std::size_t i = 0; i < trees_.size(); ++i) {
      for (const ParseTree& nb : ShrinkOrRelabel(trees_[i], labels_)) {
        const std::size_t j = index_.at(TreeKey(nb));
        adjacency[i].push_back(static_cast<std::uint32_t>(j));
        // Relabels are found from both ends; deletions only from the larger
        // tree, so add the reverse (insertion) edge here.
        if (nb.NodeCount() < trees_[i].NodeCount())
          adjacency[j].push_back(static_cast<std::uint32_t>(i));
      }
    }
    offsets_.push_back(0);
    for (const auto& row : adjacency) {
      edges_.insert(edges_.end(), row.begin(), row.end());
      offsets_.push_back(edges_.size());
    }
  }

  const std::vector<ParseTree>& trees() const { return trees_; }
  std::size_t IndexOf(const ParseTree& t) const {
    return index_.at(TreeKey(t));
  }

  // Shortest edit-script length from `source` to every tree.
  std::vector<std::uint8_t> DistancesFrom(std::size_t source) const {
    std::vector<std::uint8_t> dist;
    DistancesFrom(source, dist);
    return dist;
  }

  // Same, reusing `dist` as the output buffer.
  void DistancesFrom(std::size_t source, std::vector<std::uint8_t>& dist) const {
    dist.assign(trees_.size(), 0xff);
    std::vector<std::uint32_t> queue;
    queue.reserve(trees_.size());
    queue.push_back(static_cast<std::uint32_t>(source));
    dist[source] = 0;
    for (std::size_t head = 0; head < queue.size(); ++head) {
      const std::uint32_t u = queue[head];
      const std::uint8_t next = static_cast<std::uint8_t>(dist[u] + 1);
      for (std::size_t e = offsets_[u]; e < offsets_[u + 1]; ++e) {
        const std::uint32_t v = edges_[e];
        if (dist[v] == 0xff) {
          dist[v] = next;
          queue.push_back(v);
        }
      }
    }
  }

  // Up to 64 searches at once, one bit per source. Row k of `dist`
  // (trees().size() entries) holds the distances from sources[k]. Edges come
  // in both directions, so each level pulls from neighbours.
  void DistancesFromMany(const std::vector<std::size_t>& sources,
                         std::vector<std::uint8_t>& dist) const {
    const std::size_t n = trees_.size();
    dist.assign(sources.size() * n, 0xff);
    std::vector<std::uint64_t> reached(n, 0), frontier(n, 0), next(n, 0);
    for (std::size_t k = 0; k < sources.size(); ++k) {
      frontier[sources[k]] |= std::uint64_t{1} << k;
      dist[k * n + sources[k]] = 0;
    }
    reached = frontier;
    for (std::uint8_t level = 1;; ++level) {
      bool any = false;
      for (std::size_t v = 0; v < n; ++v) {
        std::uint64_t bits = 0;
        for (std::size_t e = offsets_[v]; e < offsets_[v + 1]; ++e)
          bits |= frontier[edges_[e]];
        bits &= ~reached[v];
        next[v] = bits;
        if (!bits) continue;
        any = true;
        reached[v] |= bits;
        for (; bits; bits &= bits - 1)
          dist[static_cast<std::size_t>(std::countr_zero(bits)) * n + v] = level;
      }
      if (!any) return;
      frontier.swap(next);
    }
  }

 private:
  std::vector<std::string> labels_;
  std::vector<ParseTree> trees_;
  std::unordered_map<std::string, std::size_t> index_;
  std::vector<std::size_t> offsets_;
  std::vector<std::uint32_t> edges_;
};

// Flattened preorder view: label, parent and subtree end per node.
struct Flat {
  std::vector<std::string> labels;
  std::vector<std::size_t> end;  // one past the last descendant
};

inline void FlattenInto(const ParseTree& t, Flat& f) {
  const std::size_t me = f.labels.size();
  f.labels.push_back(t.label);
  f.end.push_back(0);
  for (const ParseTree& c : t.children) FlattenInto(c, f);
  f.end[me] = f.labels.size();
}

inline Flat Flatten(const ParseTree& t) {
  Flat f;
  FlattenInto(t, f);
  return f;
}

// Minimum cost over all Tai mappings between a and b.
inline std::size_t MappingDistance(const ParseTree& a, const ParseTree& b) {
  const Flat fa = Flatten(a);
  const Flat fb = Flatten(b);
  const std::size_t n = fa.labels.size();
  const std::size_t m = fb.labels.size();
  auto anc = [](const Flat& f, std::size_t u, std::size_t v) {
    return u < v && v < f.end[u];
  };
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  std::size_t best = n + m;
  // Preorder is preserved by any mapping, so b-indices increase with a.
  std::function<void(std::size_t, std::size_t, std::size_t)> rec =
      [&](std::size_t i, std::size_t j_min, std::size_t relabels) {
        const std::size_t cost = relabels + (n - pairs.size()) + (m - pairs.size());
        // Lower bound: remaining nodes can at best all be matched for free.
        const std::size_t can_add = std::min(n - i, m - j_min);
        if (cost < best + 2 * can_add) {
          if (cost < best) best = cost;
        } else {
          return;
        }
        if (i == n) return;
        for (std::size_t j = j_min; j < m; ++j) {
          bool ok = true;
          for (const auto& [pi, pj] : pairs) {
            if (anc(fa, pi, i) != anc(fb, pj, j)) {
              ok = false;
              break;
            }
          }
          if (!ok) continue;
          pairs.emplace_back(i, j);
          rec(i + 1, j + 1, relabels + (fa.labels[i] == fb.labels[j] ? 0 : 1));
          pairs.pop_back();
        }
        rec(i + 1, j_min, relabels);
      };
  rec(0, 0, 0);
  return best;
}

// Random ordered tree: node i attaches as the last child of a random earlier
// node.
inline ParseTree RandomTree(Rng& rng, std::size_t n,
                            const std::vector<std::string>& labels) {
  std::vector<std::vector<std::size_t>> kids(n);
  std::vector<std::string> lab(n);
  for (std::size_t i = 0; i < n; ++i) {
    lab[i] = labels[rng.Below(labels.size())];
    if (i > 0) kids[rng.Below(i)].push_back(i);
  }
  std::function<ParseTree(std::size_t)> build = [&](std::size_t u) {
    ParseTree t{lab[u], {}};
    for (std::size_t c : kids[u]) t.children.push_back(build(c));
    return t;
  };
  return build(0);
}

}  // namespace exforge::oracle

#endif  // EXFORGE_TESTS_ORACLES_TED_ORACLE_H_
