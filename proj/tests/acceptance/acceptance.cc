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

// Acceptance suite: one PASS/FAIL line per criterion.
//
// Usage: exforge_acceptance [criterion numbers...]   (default: all)
// Exit status is 0 iff every selected criterion passes.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "exforge/commands.h"
#include "exforge/corpus.h"
#include "exforge/error.h"
#include "exforge/log.h"
#include "exforge/masking.h"
#include "exforge/metrics.h"
#include "exforge/pipeline.h"
#include "exforge/rng.h"
#include "exforge/samples.h"
#include "exforge/template_select.h"
#include "exforge/toylm.h"
#include "oracles/bleu_oracle.h"
#include "oracles/knn_oracle.h"
#include "oracles/lcs_oracle.h"
#include "oracles/ted_oracle.h"
#include "test_util.h"

namespace {

using namespace exforge;
using exforge::testing::FixtureDir;
using exforge::testing::RandomSentence;
using exforge::testing::Words;
using Clock = std::chrono::steady_clock;

// Pinned limits and tolerances.
constexpr double kLawSigmas = 4.0;
constexpr double kSumTolerance = 1e-12;
constexpr double kHandTolerance = 1e-9;
constexpr double kGradTolerance = 1e-3;
constexpr double kUnitTolerance = 1e-12;
constexpr double kMaskLawSeconds = 5.0;
constexpr double kTedSeconds = 60.0;
constexpr double kToySeconds = 300.0;

struct Outcome {
  bool pass = true;
  std::string detail;

  void Require(bool ok, const std::string& what) {
    if (ok) return;
    if (pass) detail = what;  // keep the first failure
    pass = false;
  }
};

double Seconds(Clock::time_point since) {
  return std::chrono::duration<double>(Clock::now() - since).count();
}

std::string Fmt(const char* format, double a, double b = 0, double c = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, format, a, b, c);
  return buf;
}

std::vector<TaggedSentence> LoadPos(const fs::path& path) {
  std::ifstream in(path);
  return ParsePosCorpus(in);
}

// ---------------------------------------------------------------------------
// 1. Second-order masking law.

Outcome MaskingLaw() {
  Outcome out;
  const auto start = Clock::now();
  Rng rng(101);
  for (double p : {0.15, 0.5}) {
    std::size_t kept = 0;
    std::size_t masked = 0;
    for (std::size_t i = 0; kept < 20000; ++i) {
      const TaggedSentence s =
          RandomSentence(rng, "law" + std::to_string(i), 4 + rng.Below(20));
      const MaskedTemplate first = FirstOrderMask(s);
      const MaskedTemplate second = SecondOrderMask(first, MaskConfig{p, 77, "M"});
      kept += first.visible_count();
      masked += first.visible_count() - second.visible_count();
    }
    const double n = static_cast<double>(kept);
    const double frac = static_cast<double>(masked) / n;
    const double bound = kLawSigmas * std::sqrt(p * (1 - p) / n);
    out.Require(std::abs(frac - p) <= bound,
                Fmt("p=%.2f masked fraction %.5f outside +-%.5f", p, frac, bound));
    out.detail += Fmt("p=%.2f: %.4f over ", p, frac) + std::to_string(kept) +
                  " slots; ";
  }
  double worst = 0.0;
  for (std::size_t l = 0; l <= 64; ++l) {
    for (int g = 0; g <= 20; ++g) {
      const double p = g * 0.05;
      double sum = 0.0;
      for (std::size_t k = 0; k <= l; ++k) sum += MaskCountProbability(k, l, p);
      worst = std::max(worst, std::abs(sum - 1.0));
    }
  }
  out.Require(worst <= kSumTolerance, Fmt("probability mass off by %.3g", worst));
  const double secs = Seconds(start);
  out.Require(secs < kMaskLawSeconds, Fmt("took %.2fs", secs));
  if (out.pass) out.detail += Fmt("max |sum-1| = %.2g", worst);
  return out;
}

// ---------------------------------------------------------------------------
// 2. Masking endpoints.

Outcome MaskingEndpoints() {
  Outcome out;
  Rng rng(202);
  for (int i = 0; i < 1000; ++i) {
    const TaggedSentence s =
        RandomSentence(rng, "end" + std::to_string(i), rng.Below(30));
    const MaskedTemplate t =
        i % 2 ? FirstOrderMask(s) : MaskedTemplate::FromSentence(s);
    const std::uint64_t seed = rng.Next();
    const MaskedTemplate zero = SecondOrderMask(t, MaskConfig{0.0, seed, "M"});
    const MaskedTemplate one = SecondOrderMask(t, MaskConfig{1.0, seed, "M"});
    out.Require(zero == t, "p=0 changed template " + s.id());
    bool all = one.size() == t.size() && one.visible_count() == 0;
    for (const Slot& slot : one.slots()) all = all && slot.masked();
    out.Require(all, "p=1 left a visible slot in " + s.id());
  }
  if (out.pass) out.detail = "1000 templates";
  return out;
}

// ---------------------------------------------------------------------------
// 3. First-order rule on the hand-tagged fixture.

Outcome FirstOrderRule() {
  Outcome out;
  const std::vector<TaggedSentence> corpus =
      LoadPos(FixtureDir() / "hand_tagged.pos");
  std::map<std::string, std::string> expected;
  std::ifstream in(FixtureDir() / "hand_tagged_masks.tsv");
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    const auto tab = line.find('\t');
    expected[line.substr(0, tab)] = line.substr(tab + 1);
  }
  out.Require(corpus.size() == 50, "fixture has " +
                                       std::to_string(corpus.size()) +
                                       " sentences");
  out.Require(expected.size() == corpus.size(), "expectation count differs");
  static const std::set<std::string> kWh = {"what", "which", "who",
                                            "whom", "whose", "when",
                                            "where", "why", "how"};
  std::size_t masks = 0;
  for (const TaggedSentence& s : corpus) {
    const MaskedTemplate t = FirstOrderMask(s);
    const std::vector<std::string> rendered = t.Render("_");
    std::string got;
    for (const std::string& w : rendered) got += (got.empty() ? "" : " ") + w;
    out.Require(expected.count(s.id()) && expected[s.id()] == got,
                s.id() + ": got '" + got + "'");
    for (std::size_t i = 0; i < s.size(); ++i) {
      const Token& tok = s.tokens()[i];
      if (tok.upos == Upos::kPunct || kWh.count(tok.lemma))
        out.Require(!t.slots()[i].masked(),
                    s.id() + ": masked '" + tok.surface + "'");
    }
    masks += t.size() - t.visible_count();
  }
  if (out.pass)
    out.detail = std::to_string(corpus.size()) + " sentences, " +
                 std::to_string(masks) + " masked slots";
  return out;
}

// ---------------------------------------------------------------------------
// 4. Tree edit distance against brute-force edit-script search.

// True if labels first appear in preorder as A, then B, then C. Every pair
// (a, b) is a label renaming of exactly one pair whose `a` passes; both the
// dynamic program (it only tests labels for equality) and the edit graph are
// invariant under renaming, so these sources cover all ordered pairs.
bool CanonicalLabels(const ParseTree& t) {
  std::vector<std::string> seen;
  std::function<bool(const ParseTree&)> walk = [&](const ParseTree& n) {
    if (std::find(seen.begin(), seen.end(), n.label) == seen.end()) {
      if (n.label != std::string(1, static_cast<char>('A' + seen.size())))
        return false;
      seen.push_back(n.label);
    }
    for (const ParseTree& c : n.children)
      if (!walk(c)) return false;
    return true;
  };
  return walk(t);
}

Outcome TedEquivalence() {
  Outcome out;
  const auto start = Clock::now();
  const oracle::EditGraph graph(6, {"A", "B", "C"});
  const auto& trees = graph.trees();
  std::vector<TedTree> prepared;
  prepared.reserve(trees.size());
  for (const ParseTree& t : trees) prepared.emplace_back(t);
  std::vector<std::size_t> sources;
  for (std::size_t i = 0; i < trees.size(); ++i)
    if (CanonicalLabels(trees[i])) sources.push_back(i);

  // Batches of 64 sources share one bit-parallel search.
  std::atomic<std::size_t> next{0};
  std::atomic<std::size_t> mismatches{0};
  std::atomic<std::size_t> pairs{0};
  auto work = [&]() {
    std::vector<std::uint8_t> dist;
    std::vector<std::size_t> batch;
    for (;;) {
      const std::size_t first = next.fetch_add(64);
      if (first >= sources.size()) return;
      batch.assign(sources.begin() + static_cast<std::ptrdiff_t>(first),
                   sources.begin() + static_cast<std::ptrdiff_t>(
                                         std::min(first + 64, sources.size())));
      graph.DistancesFromMany(batch, dist);
      std::size_t bad = 0;
      for (std::size_t k = 0; k < batch.size(); ++k) {
        const std::uint8_t* row = dist.data() + k * trees.size();
        const TedTree& a = prepared[batch[k]];
        for (std::size_t j = 0; j < trees.size(); ++j)
          if (TreeEditDistance(a, prepared[j]) != row[j]) ++bad;
      }
      mismatches += bad;
      pairs += batch.size() * trees.size();
    }
  };
  const unsigned n_threads = std::max(1u, std::thread::hardware_concurrency());
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < n_threads; ++t) pool.emplace_back(work);
  work();
  for (std::thread& t : pool) t.join();
  const double exhaustive_secs = Seconds(start);
  out.Require(mismatches == 0, std::to_string(mismatches.load()) +
                                   " mismatching pairs up to 6 nodes");

  Rng rng(404);
  const std::vector<std::string> labels = {"A", "B", "C", "D"};
  auto random_tree = [&]() {
    return oracle::RandomTree(rng, 1 + rng.Below(12), labels);
  };
  for (int i = 0; i < 1000; ++i) {
    const ParseTree a = random_tree();
    const ParseTree b = random_tree();
    const ParseTree c = random_tree();
    const std::size_t ab = TreeEditDistance(a, b);
    out.Require(ab == TreeEditDistance(b, a), "asymmetric pair");
    out.Require(TreeEditDistance(a, c) <= ab + TreeEditDistance(b, c),
                "triangle inequality violated");
    out.Require((ab == 0) == (a == b), "identity of indiscernibles violated");
  }
  const double secs = Seconds(start);
  out.Require(secs < kTedSeconds,
              Fmt("exhaustive check agreed but took %.1fs on %.0f thread(s)",
                  secs, n_threads));
  if (out.pass)
    out.detail = std::to_string(pairs.load()) + " pairs (" +
                 std::to_string(sources.size()) + " canonical sources x " +
                 std::to_string(trees.size()) + " trees)" +
                 Fmt(" in %.1fs; 1000 random triples", exhaustive_secs);
  return out;
}

// ---------------------------------------------------------------------------
// 5. TED template selection contract.

Outcome TedSelection() {
  Outcome out;
  Rng rng(505);
  const std::vector<std::string> labels = {"S", "NP", "VP", "PP"};
  const TedConfig cfg;
  std::size_t selected = 0;
  std::size_t filtered_by_bleu = 0;
  for (int trial = 0; trial < 500; ++trial) {
    const std::string tag = "t" + std::to_string(trial) + "_";
    const TaggedSentence source =
        RandomSentence(rng, tag + "src", 3 + rng.Below(8));
    const TaggedSentence target =
        RandomSentence(rng, tag + "tgt", 3 + rng.Below(8));
    CandidatePool pool;
    const std::size_t n = 1 + rng.Below(50);
    for (std::size_t i = 0; i < n; ++i) {
      const std::string id = tag + std::to_string(i);
      const std::uint64_t kind = rng.Below(10);
      std::vector<Token> tokens;
      if (kind == 0) {
        tokens = target.tokens();  // same text as the target
      } else if (kind == 1) {
        tokens = source.tokens();  // same text as the source
      } else if (kind == 2) {
        tokens = target.tokens();  // near copy of the target
        tokens[rng.Below(tokens.size())].surface = "zz";
      } else {
        tokens = RandomSentence(rng, id, 1 + rng.Below(12)).tokens();
      }
      pool.sentences.emplace_back(id, std::move(tokens));
    }
    if (rng.Below(4) == 0) pool.sentences.push_back(source);
    if (rng.Below(4) == 0) pool.sentences.push_back(target);
    for (const TaggedSentence& s : pool.sentences)
      pool.trees[s.id()] = oracle::RandomTree(rng, 1 + rng.Below(10), labels);
    pool.trees[target.id()] = oracle::RandomTree(rng, 1 + rng.Below(10), labels);
    const PairRecord pair{source, target};

    // Survivors recomputed from the filter rules.
    std::vector<std::string> survivors;
    for (const TaggedSentence& c : pool.sentences) {
      if (c.id() == source.id() || c.id() == target.id()) continue;
      if (c.Surfaces() == source.Surfaces() ||
          c.Surfaces() == target.Surfaces())
        continue;
      const long diff =
          static_cast<long>(c.size()) - static_cast<long>(target.size());
      if (std::labs(diff) > 2) continue;
      if (oracle::SentenceBleu(c.Surfaces(), {target.Surfaces()}) >= 0.6) {
        ++filtered_by_bleu;
        continue;
      }
      survivors.push_back(c.id());
    }
    const std::optional<std::string> got = SelectTemplateTed(pair, pool, cfg);
    if (survivors.empty()) {
      out.Require(!got, tag + "selected without survivors");
      continue;
    }
    out.Require(got.has_value(), tag + "nothing selected");
    if (!got) continue;
    ++selected;
    out.Require(std::find(survivors.begin(), survivors.end(), *got) !=
                    survivors.end(),
                tag + "selection violates a filter rule");
    std::size_t best = SIZE_MAX;
    std::string best_id;
    for (const std::string& id : survivors) {
      const std::size_t d =
          TreeEditDistance(pool.trees.at(id), pool.trees.at(target.id()));
      if (d < best || (d == best && id < best_id)) {
        best = d;
        best_id = id;
      }
    }
    out.Require(*got == best_id, tag + "not the minimum-TED survivor");
  }
  if (out.pass)
    out.detail = "500 trials, " + std::to_string(selected) +
                 " with a selection, " + std::to_string(filtered_by_bleu) +
                 " candidates cut by BLEU";
  return out;
}

// ---------------------------------------------------------------------------
// 6. Embedding selection against a full-sort reference.

std::vector<double> RandomVector(Rng& rng, std::size_t dim) {
  std::vector<double> v(dim);
  for (double& x : v) x = rng.Normal();
  return v;
}

Outcome EmbeddingSelection() {
  Outcome out;
  Rng rng(606);
  constexpr std::size_t kDim = 8;
  std::size_t none = 0;
  for (int trial = 0; trial < 500; ++trial) {
    const std::string tag = "e" + std::to_string(trial) + "_";
    const TaggedSentence source = RandomSentence(rng, tag + "src", 2 + rng.Below(4));
    const TaggedSentence target = RandomSentence(rng, tag + "tgt", 2 + rng.Below(4));
    EmbeddingTable table(kDim);
    std::vector<TaggedSentence> pool;
    for (std::size_t i = 0; i < 50; ++i) {
      const std::string id = tag + std::to_string(i);
      const std::uint64_t kind = rng.Below(10);
      std::vector<Token> tokens =
          kind == 0   ? source.tokens()
          : kind == 1 ? target.tokens()
          : kind == 2 && !pool.empty()
              ? pool[rng.Below(pool.size())].tokens()  // duplicate text
              : RandomSentence(rng, id, 2 + rng.Below(3)).tokens();
      pool.emplace_back(id, std::move(tokens));
      // Occasionally reuse a vector so equal cosines occur.
      if (kind == 3 && i > 0) {
        table.Add(id, table.at(pool[rng.Below(i)].id()));
      } else {
        table.Add(id, RandomVector(rng, kDim));
      }
    }
    table.Add(source.id(), RandomVector(rng, kDim));
    const EmbeddingIndex index = EmbeddingIndex::Build(pool, table);
    const PairRecord pair{source, target};
    const std::size_t k = 1 + rng.Below(20);
    const std::uint64_t seed = PairSeed(rng.Next(), pair);
    const auto got = SelectTemplateEmbedding(pair, index, k, seed);
    const auto want =
        oracle::SelectByFullSort(pool, table, source, target, k, seed);
    out.Require(got == want, tag + "differs from the full-sort reference");
    if (!got) {
      ++none;
      continue;
    }
    for (const TaggedSentence& s : pool) {
      if (s.id() != *got) continue;
      out.Require(s.Surfaces() != source.Surfaces() &&
                      s.Surfaces() != target.Surfaces(),
                  tag + "returned the source or target text");
    }
  }
  if (out.pass)
    out.detail = "500 indexes, " + std::to_string(none) + " without survivors";
  return out;
}

// ---------------------------------------------------------------------------
// 7. Metric identities.

Outcome MetricIdentities() {
  Outcome out;
  Rng rng(707);
  for (int i = 0; i < 200; ++i) {
    const std::size_t len = 2 + rng.Below(15);
    Tokens a, b;
    for (std::size_t t = 0; t < len; ++t) {
      a.push_back("a" + std::to_string(rng.Below(6)));
      b.push_back("b" + std::to_string(rng.Below(6)));
    }
    // One-hot token vectors: distinct words are orthogonal.
    std::map<std::string, std::vector<double>> onehot;
    auto vec = [&](const std::string& w) {
      const std::size_t slot = (w[0] == 'a' ? 0 : 6) + std::stoul(w.substr(1));
      std::vector<double> v(12, 0.0);
      v[slot] = 1.0;
      return v;
    };
    auto vectors = [&](const Tokens& t) {
      std::vector<std::vector<double>> out_v;
      for (const std::string& w : t) out_v.push_back(vec(w));
      return out_v;
    };
    const std::vector<Tokens> ref_a = {a};
    const std::vector<Tokens> ref_b = {b};
    out.Require(Bleu(a, ref_a) == 1.0, "bleu(x, x) != 1");
    out.Require(RougeN(a, a, 1).f1 == 1.0 && RougeN(a, a, 2).f1 == 1.0 &&
                    RougeL(a, a).f1 == 1.0,
                "rouge(x, x) != 1");
    out.Require(std::abs(EmbedMatchScore(vectors(a), vectors(a)).f1 - 1.0) <=
                    kUnitTolerance,
                "embed(x, x) != 1");
    out.Require(Bleu(a, ref_b) <= 1e-6, "bleu on disjoint input above epsilon");
    out.Require(RougeN(a, b, 1).f1 == 0.0 && RougeN(a, b, 2).f1 == 0.0 &&
                    RougeL(a, b).f1 == 0.0,
                "rouge on disjoint input != 0");
    out.Require(EmbedMatchScore(vectors(a), vectors(b)).f1 == 0.0,
                "embed on disjoint input != 0");
  }

  const oracle::SubsequenceLattice lattice(
      oracle::AllSequences(7, {"a", "b", "c"}));
  const auto& family = lattice.family();
  std::size_t lcs_bad = 0;
  for (std::size_t i = 0; i < family.size(); ++i)
    for (std::size_t j = 0; j < family.size(); ++j)
      if (LcsLength(family[i], family[j]) != lattice.Lcs(i, j)) ++lcs_bad;
  out.Require(lcs_bad == 0, std::to_string(lcs_bad) + " LCS mismatches");

  // Hand-computed cases.
  const Tokens cat = Words("the cat sat on the mat");
  const Tokens cat_is = Words("the cat is on the mat");
  struct Case {
    std::string name;
    double got;
    double want;
  };
  const std::vector<Case> cases = {
      // the x2, cat, on, mat shared: 5 of 6 each way.
      {"rouge-1 f", RougeN(cat, cat_is, 1).f1, 5.0 / 6.0},
      // the cat, on the, the mat: 3 of 5 bigrams.
      {"rouge-2 f", RougeN(cat, cat_is, 2).f1, 3.0 / 5.0},
      // LCS "the cat on the mat" = 5.
      {"rouge-l f", RougeL(cat, cat_is).f1, 5.0 / 6.0},
      // one "the" clipped: P = 1/3, R = 1/2.
      {"rouge-1 clipped", RougeN(Words("the the the"), Words("the cat"), 1).f1,
       0.4},
      // LCS "a c e": P = 3/5, R = 3/4.
      {"rouge-l unequal", RougeL(Words("a b c d e"), Words("a c e f")).f1,
       2.0 / 3.0},
      // all n-grams match; BP = exp(1 - 7/6).
      {"bleu brevity",
       Bleu(cat, std::vector<Tokens>{Words("the cat sat on the mat today")}),
       std::exp(-1.0 / 6.0)},
      // unigram only: 2 of 4 clipped matches, c = 4 > r = 3.
      {"bleu-1 clipped",
       Bleu(Words("the the the the"), std::vector<Tokens>{Words("the cat the")},
            1),
       0.5},
      // orders 3 and 4 have no candidate n-grams and drop out.
      {"bleu effective order",
       Bleu(Words("a b"), std::vector<Tokens>{Words("a b")}), 1.0},
      // refs of length 3 and 5 tie at distance 1; the shorter one sets BP = 1.
      {"bleu closest reference",
       Bleu(Words("a b c d"),
            std::vector<Tokens>{Words("a b c"), Words("a b c d e")}),
       1.0},
      // candidate tokens (1,0), (0,1) against (1,0): P = 1/2, R = 1.
      {"embed match",
       EmbedMatchScore(std::vector<std::vector<double>>{{1, 0}, {0, 1}},
                       std::vector<std::vector<double>>{{1, 0}})
           .f1,
       2.0 / 3.0},
  };
  for (const Case& c : cases)
    out.Require(std::abs(c.got - c.want) <= kHandTolerance,
                c.name + Fmt(": %.12f vs %.12f", c.got, c.want));
  if (out.pass)
    out.detail = "200 identity pairs, " +
                 std::to_string(family.size() * family.size()) +
                 " LCS pairs, " + std::to_string(cases.size()) + " hand cases";
  return out;
}

// ---------------------------------------------------------------------------
// Shared fixture for the toy-model criteria.

struct FixtureData {
  std::vector<TaggedSentence> corpus;
  std::map<std::string, const TaggedSentence*> by_id;
  std::vector<TemplateRow> train_rows;
  std::vector<TemplateRow> eval_rows;
  Vocab vocab;
};

FixtureData LoadFixture() {
  FixtureData f;
  SelectCommand cmd;
  cmd.pairs = FixtureDir() / "train_pairs.tsv";
  cmd.pool = FixtureDir() / "corpus.pos";
  cmd.trees = FixtureDir() / "trees.txt";
  const SelectionInputs inputs = LoadSelectionInputs(cmd);
  cmd.train_split = true;
  f.train_rows = SelectTemplates(inputs, ReadPairs(cmd.pairs), cmd);
  cmd.train_split = false;
  f.eval_rows = SelectTemplates(
      inputs, ReadPairs(FixtureDir() / "eval_pairs.tsv"), cmd);
  f.corpus = inputs.corpus;
  f.vocab = Vocab::Build(f.corpus, 1);
  return f;
}

const TaggedSentence& At(const FixtureData& f, const std::string& id) {
  for (const TaggedSentence& s : f.corpus)
    if (s.id() == id) return s;
  throw Error("unknown id " + id);
}

std::vector<TrainingSample> MaskedSamples(const FixtureData& f,
                                          std::size_t limit, double p,
                                          std::size_t copies) {
  std::vector<TrainingSample> out;
  for (std::size_t r = 0; r < f.train_rows.size() && r < limit; ++r) {
    const TemplateRow& row = f.train_rows[r];
    if (!row.template_id) continue;
    const TaggedSentence& x = At(f, row.source_id);
    const TaggedSentence& y = At(f, row.target_id);
    const MaskedTemplate first = FirstOrderMask(At(f, *row.template_id));
    for (std::size_t c = 0; c < copies; ++c) {
      const MaskedTemplate m =
          SecondOrderMask(first, MaskConfig{p, DeriveSeed(9, c), "M"});
      out.push_back(BuildSample(SampleMode::kMasked, x, m, y, f.vocab));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// 8. Toy language model correctness.

Outcome ToyModelCorrectness() {
  Outcome out;
  const auto start = Clock::now();
  const FixtureData f = LoadFixture();
  const std::vector<TrainingSample> samples = MaskedSamples(f, 32, 0.15, 1);
  out.Require(samples.size() == 32, "expected 32 samples");

  // Causality over several shapes.
  Rng rng(808);
  for (std::size_t layers : {0, 1, 2}) {
    for (bool tie : {true, false}) {
      ModelConfig mc;
      mc.vocab_size = f.vocab.size();
      mc.dim = 16;
      mc.n_heads = 4;
      mc.n_layers = layers;
      mc.max_len = 48;
      mc.seed = layers * 2 + tie;
      mc.tie_embeddings = tie;
      const ToyModel m = ToyModel::Init(mc);
      const std::vector<TokenId>& ids = samples[layers].ids;
      const Matrix base = m.Forward(ids);
      for (std::size_t cut = 0; cut + 1 < ids.size(); ++cut) {
        std::vector<TokenId> changed = ids;
        for (std::size_t k = cut + 1; k < changed.size(); ++k)
          changed[k] = static_cast<TokenId>(rng.Below(f.vocab.size()));
        const Matrix other = m.Forward(changed);
        out.Require(other.topRows(static_cast<Eigen::Index>(cut + 1)) ==
                        base.topRows(static_cast<Eigen::Index>(cut + 1)),
                    "prefix logits changed after position " +
                        std::to_string(cut));
      }
    }
  }

  // Finite-difference gradients.
  double worst_grad = 0.0;
  for (bool tie : {true, false}) {
    ModelConfig mc;
    mc.vocab_size = f.vocab.size();
    mc.dim = 16;
    mc.n_heads = 4;
    mc.n_layers = 2;
    mc.max_len = 48;
    mc.seed = 3;
    mc.tie_embeddings = tie;
    const GradientCheckResult g =
        GradientCheck(ToyModel::Init(mc), samples[0], 1e-4, 240, 8);
    worst_grad = std::max(worst_grad, g.max_relative_error);
    out.Require(g.coordinates >= 200, "fewer than 200 coordinates checked");
    out.Require(g.groups_covered == ToyModel::Init(mc).groups().size(),
                "gradient check missed a parameter group");
  }
  out.Require(worst_grad < kGradTolerance,
              Fmt("gradient relative error %.3g", worst_grad));

  // Overfit one sample.
  {
    const TemplateRow& row = f.train_rows[0];
    ModelConfig mc;
    mc.vocab_size = f.vocab.size();
    mc.dim = 16;
    mc.n_heads = 4;
    mc.n_layers = 2;
    mc.max_len = 48;
    mc.seed = 1;
    TrainConfig tc;
    tc.learning_rate = 1e-3;
    tc.epochs = 500;
    tc.seed = 2;
    const TrainResult r =
        Train(ToyModel::Init(mc), std::vector<TrainingSample>{samples[0]}, tc);
    MaskedTemplate m = FirstOrderMask(At(f, *row.template_id));
    m = SecondOrderMask(m, MaskConfig{0.15, DeriveSeed(9, 0), "M"});
    DecodeOptions opts;
    opts.max_len = 48;
    const auto decoded =
        GreedyDecode(r.model, f.vocab, At(f, row.source_id).Surfaces(), m, opts);
    out.Require(decoded == At(f, row.target_id).Surfaces(),
                "overfit-one decode differs from its target");
  }

  // 32-sample corpus under the default training configuration.
  double ratio = 0.0;
  {
    ModelConfig mc;
    mc.vocab_size = f.vocab.size();
    const TrainConfig tc;  // defaults, 50 epochs
    const TrainResult r = Train(ToyModel::Init(mc), samples, tc);
    ratio = r.loss_history.back() / r.loss_history.front();
    out.Require(r.loss_history.size() == 50, "expected 50 epochs");
    out.Require(ratio < 0.5, Fmt("epoch-50 loss is %.3f of epoch-1 loss (%.3f -> %.3f)",
                                 ratio, r.loss_history.front(),
                                 r.loss_history.back()));
  }
  const double secs = Seconds(start);
  out.Require(secs < kToySeconds, Fmt("took %.1fs", secs));
  if (out.pass)
    out.detail = Fmt("grad rel err %.2g, loss ratio %.3f, %.1fs", worst_grad,
                     ratio, secs);
  return out;
}

// ---------------------------------------------------------------------------
// 9. Creativity direction.

Outcome CreativityDirection() {
  Outcome out;
  const FixtureData f = LoadFixture();
  const std::vector<TrainingSample> samples = MaskedSamples(f, 1000, 0.15, 2);
  ModelConfig mc;
  mc.vocab_size = f.vocab.size();
  mc.dim = 32;
  mc.n_heads = 4;
  mc.n_layers = 2;
  mc.max_len = 48;
  mc.seed = 11;
  TrainConfig tc;
  tc.learning_rate = 3e-3;
  tc.epochs = 30;
  tc.seed = 12;
  const TrainResult r = Train(ToyModel::Init(mc), samples, tc);

  double rouge[2] = {0.0, 0.0};
  std::size_t n = 0;
  for (const TemplateRow& row : f.eval_rows) {
    if (!row.template_id) continue;
    const MaskedTemplate tmpl = FirstOrderMask(At(f, *row.template_id));
    const Tokens target = At(f, row.target_id).Surfaces();
    for (int k = 0; k < 2; ++k) {
      DecodeOptions opts;
      opts.p = k;
      opts.seed = 13;
      opts.max_len = 48;
      const auto decoded = GreedyDecode(
          r.model, f.vocab, At(f, row.source_id).Surfaces(), tmpl, opts);
      rouge[k] += RougeL(decoded, target).f1;
    }
    ++n;
  }
  out.Require(n > 0, "no eval pair has a template");
  rouge[0] /= static_cast<double>(n);
  rouge[1] /= static_cast<double>(n);
  out.Require(rouge[0] > rouge[1],
              Fmt("ROUGE-L at p=0 (%.4f) does not exceed p=1 (%.4f)", rouge[0],
                  rouge[1]));
  if (out.pass)
    out.detail = Fmt("ROUGE-L p=0 %.4f > p=1 %.4f", rouge[0], rouge[1]) +
                 " over " + std::to_string(n) + " eval pairs";
  return out;
}

// ---------------------------------------------------------------------------
// 10. Copy-baseline sanity.

Outcome BaselineSanity() {
  Outcome out;
  const std::vector<TaggedSentence> corpus = LoadPos(FixtureDir() / "corpus.pos");
  const auto index = IndexById(corpus);
  std::ifstream vin(FixtureDir() / "token_vectors.txt");
  const EmbeddingTable vectors = LoadEmbeddings(vin);
  std::vector<HypothesisRecord> hyps;
  std::map<std::string, Tokens> refs;
  std::map<std::string, Tokens> copied;
  for (const IdPair& ids : ReadPairs(FixtureDir() / "eval_pairs.tsv")) {
    const PairRecord pair = ResolvePair(index, ids);
    HypothesisRecord h;
    h.id = ids.first + "->" + ids.second;
    h.source = pair.source.Surfaces();
    h.exemplar = h.source;
    h.output = h.source;
    out.Require(h.source != pair.target.Surfaces(), "fixture pair is a copy");
    refs[h.id] = pair.target.Surfaces();
    copied[h.id] = h.source;
    hyps.push_back(std::move(h));
  }
  const EvalReport diff =
      EvaluateCorpus(hyps, refs, EvalMode::kSourceAsOutput, &vectors);
  const EvalReport same =
      EvaluateCorpus(hyps, copied, EvalMode::kSourceAsOutput, &vectors);
  const std::vector<std::pair<std::string, std::pair<double, double>>> rows = {
      {"bleu", {diff.bleu, same.bleu}},
      {"rouge1", {diff.rouge1_f, same.rouge1_f}},
      {"rouge2", {diff.rouge2_f, same.rouge2_f}},
      {"rougeL", {diff.rougeL_f, same.rougeL_f}},
      {"embed", {diff.embed_score.value_or(1.0), same.embed_score.value_or(0.0)}},
  };
  std::string detail;
  for (const auto& [name, v] : rows) {
    out.Require(v.first < 1.0, name + " reaches 1 when sources differ");
    out.Require(std::abs(v.second - 1.0) <= kUnitTolerance,
                name + Fmt(" is %.15f on copied targets", v.second));
    detail += name + Fmt("=%.3f ", v.first);
  }
  if (out.pass)
    out.detail = std::to_string(hyps.size()) + " pairs; " + detail +
                 "(all 1 when copied)";
  return out;
}

// ---------------------------------------------------------------------------
// 11. End-to-end determinism.

std::map<std::string, std::string> Snapshot(const fs::path& dir) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(dir))
    if (e.is_regular_file())
      files[fs::relative(e.path(), dir).string()] = ReadFile(e.path());
  return files;
}

Outcome EndToEndDeterminism() {
  Outcome out;
  PipelineConfig cfg = PipelineConfig::Load(FixtureDir() / "pipeline.json");
  std::vector<std::map<std::string, std::string>> runs;
  for (const char* name : {"exforge_acceptance_run_a", "exforge_acceptance_run_b"}) {
    cfg.out_dir = fs::temp_directory_path() / name;
    fs::remove_all(cfg.out_dir);
    const PipelineResult r = RunPipeline(cfg);
    out.Require(r.exit_code == 0, std::string("pipeline failed in ") + name);
    for (const StageOutcome& s : r.stages)
      out.Require(!s.skipped, "stage " + s.name + " skipped on a fresh run");
    runs.push_back(Snapshot(cfg.out_dir));
  }
  out.Require(runs[0].count("manifest.json") == 1, "no manifest written");
  out.Require(runs[0].size() == runs[1].size(), "runs wrote different file sets");
  for (const auto& [path, bytes] : runs[0]) {
    auto it = runs[1].find(path);
    out.Require(it != runs[1].end() && it->second == bytes,
                path + " differs between runs");
  }
  if (out.pass)
    out.detail = std::to_string(runs[0].size()) +
                 " files byte-identical across two fresh runs";
  return out;
}

struct Criterion {
  int number;
  const char* name;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  SetLogLevel(LogLevel::kWarning);
  const std::vector<Criterion> criteria = {
      {1, "masking law", MaskingLaw},
      {2, "masking endpoints", MaskingEndpoints},
      {3, "first-order rule conformance", FirstOrderRule},
      {4, "tree edit distance oracle equivalence", TedEquivalence},
      {5, "TED template selection contract", TedSelection},
      {6, "embedding selection oracle equivalence", EmbeddingSelection},
      {7, "metric identities", MetricIdentities},
      {8, "toy language model correctness", ToyModelCorrectness},
      {9, "creativity direction", CreativityDirection},
      {10, "copy-baseline sanity", BaselineSanity},
      {11, "end-to-end determinism", EndToEndDeterminism},
  };
  std::set<int> wanted;
  for (int i = 1; i < argc; ++i) wanted.insert(std::atoi(argv[i]));

  int failed = 0;
  for (const Criterion& c : criteria) {
    if (!wanted.empty() && !wanted.count(c.number)) continue;
    const auto start = Clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    if (!o.pass) ++failed;
    std::printf("%s  %2d. %s: %s [%.1fs]\n", o.pass ? "PASS" : "FAIL",
                c.number, c.name, o.detail.c_str(), Seconds(start));
    std::fflush(stdout);
  }
  std::printf("%s: %d failed\n", failed ? "FAILED" : "ALL PASSED", failed);
  return failed ? 1 : 0;
}
