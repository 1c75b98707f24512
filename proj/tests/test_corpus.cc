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


#include <cmath>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "exforge/corpus.h"
#include "exforge/error.h"
#include "oracles/ted_oracle.h"
#include "test_util.h"

using namespace exforge;
using exforge::testing::FixtureDir;
using exforge::testing::RandomSentence;

TEST_SUITE("corpus") {

TEST_CASE("pos block parses into one question") {
  const auto corpus = ParsePosCorpus(
      "How\tADV\thow\ncan\tAUX\tcan\nI\tPRON\ti\nlose\tVERB\tlose\n"
      "weight\tNOUN\tweight\n?\tPUNCT\t?\n");
  REQUIRE(corpus.size() == 1);
  CHECK(corpus[0].size() == 6);
  CHECK(corpus[0].is_question());
  CHECK(corpus[0].id() == "1");
  CHECK(corpus[0].tokens()[0].surface == "How");
  CHECK(corpus[0].tokens()[0].lemma == "how");
  CHECK(corpus[0].tokens()[3].upos == Upos::kVerb);
}

TEST_CASE("empty stream gives no sentences") {
  CHECK(ParsePosCorpus("").empty());
  CHECK(ParsePosCorpus("\n\n").empty());
}

TEST_CASE("column count errors carry the line number") {
  try {
    ParsePosCorpus("a\tDET\ta\nlose\tVB\n");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.position() == 2);
  }
}

TEST_CASE("unknown tag is named") {
  try {
    ParsePosCorpus("lose\tVB\tlose\n");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("VB") != std::string::npos);
    CHECK(e.position() == 1);
  }
}

TEST_CASE("comment-only block is rejected") {
  CHECK_THROWS_AS(ParsePosCorpus("# id = a\n\nx\tX\tx\n"), ParseError);
}

TEST_CASE("id comments and sequential ids") {
  const auto c = ParsePosCorpus(
      "# id = first\nhi\tINTJ\thi\n\nyo\tINTJ\tyo\n\n# id = third\n"
      "ok\tINTJ\tok\n");
  REQUIRE(c.size() == 3);
  CHECK(c[0].id() == "first");
  CHECK(c[1].id() == "2");
  CHECK(c[2].id() == "third");
  CHECK_FALSE(c[0].is_question());
}

TEST_CASE("duplicate ids are rejected") {
  CHECK_THROWS_AS(ParsePosCorpus("# id = a\nx\tX\tx\n\n# id = a\ny\tX\ty\n"),
                  Error);
}

TEST_CASE("question flag follows the last punctuation token") {
  using testing::Sent;
  CHECK(Sent("a", {"why/ADV", "?/PUNCT"}).is_question());
  CHECK_FALSE(Sent("b", {"so/ADV", "?/PUNCT", "./PUNCT"}).is_question());
  CHECK(Sent("c", {"really/ADV", "?/PUNCT", "ok/INTJ"}).is_question());
  CHECK_FALSE(Sent("d", {"no/INTJ"}).is_question());
}

TEST_CASE("sentence validation") {
  CHECK_THROWS_AS(TaggedSentence("x", {}), Error);
  CHECK_THROWS_AS(TaggedSentence("x", {Token{"a b", Upos::kX, "a"}}), Error);
  CHECK_THROWS_AS(TaggedSentence("x", {Token{"", Upos::kX, ""}}), Error);
  CHECK_THROWS_AS(MakePair(testing::Sent("s", {"a/X"}),
                           testing::Sent("s", {"b/X"})),
                  Error);
}

TEST_CASE("bracketed tree") {
  const ParseTree t = ParsePtbTree("(ROOT (NP (DT the) (NN cat)))");
  // ROOT, NP, DT, NN and the two leaves.
  CHECK(t.NodeCount() == 6);
  CHECK(t.Leaves() == std::vector<std::string>{"the", "cat"});
  CHECK(t.label == "ROOT");

  const ParseTree x = ParsePtbTree("(X a)");
  CHECK(x.label == "X");
  REQUIRE(x.children.size() == 1);
  CHECK(x.children[0].label == "a");
  CHECK(x.children[0].is_leaf());
}

TEST_CASE("bracketed tree errors") {
  try {
    ParsePtbTree("(ROOT (NP (DT the)");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.position() == 6);  // the "(NP" left open
  }
  CHECK_THROWS_AS(ParsePtbTree("( (A b))"), ParseError);
  CHECK_THROWS_AS(ParsePtbTree("(A b))"), ParseError);
  CHECK_THROWS_AS(ParsePtbTree("(A)"), ParseError);
  CHECK_THROWS_AS(ParsePtbTree(""), ParseError);
}

TEST_CASE("embedding rows are normalized") {
  std::istringstream in("dim 3\ns1 3 0 4\ns2 1 0 0\n");
  const EmbeddingTable t = LoadEmbeddings(in);
  CHECK(t.dim() == 3);
  CHECK(t.at("s1")[0] == doctest::Approx(0.6).epsilon(1e-15));
  CHECK(t.at("s1")[1] == 0.0);
  CHECK(t.at("s1")[2] == doctest::Approx(0.8).epsilon(1e-15));
  CHECK(t.at("s2") == std::vector<double>{1, 0, 0});
}

TEST_CASE("embedding errors") {
  std::istringstream dup("dim 3\ns1 3 0 4\ns1 1 0 0\n");
  CHECK_THROWS_AS(LoadEmbeddings(dup), Error);
  std::istringstream zero("dim 2\nz 0 0\n");
  CHECK_THROWS_AS(LoadEmbeddings(zero), Error);
  std::istringstream wrong("dim 3\ns1 1 2\n");
  try {
    LoadEmbeddings(wrong);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("s1") != std::string::npos);
  }
  std::istringstream no_header("s1 1 2\n");
  CHECK_THROWS_AS(LoadEmbeddings(no_header), Error);
}

TEST_CASE("loaded vectors have unit norm") {
  Rng rng(11);
  std::ostringstream text;
  text << "dim 7\n";
  for (int i = 0; i < 200; ++i) {
    text << "v" << i;
    for (int d = 0; d < 7; ++d) text << ' ' << rng.Normal() * (1 + i);
    text << '\n';
  }
  std::istringstream in(text.str());
  const EmbeddingTable t = LoadEmbeddings(in);
  for (const auto& [id, v] : t.entries()) {
    double sq = 0;
    for (double x : v) sq += x * x;
    CHECK(std::abs(std::sqrt(sq) - 1.0) < 1e-9);
  }
  std::ostringstream out;
  WriteEmbeddings(out, t);
  std::istringstream again(out.str());
  const EmbeddingTable t2 = LoadEmbeddings(again);
  for (const auto& [id, v] : t.entries()) {
    for (std::size_t d = 0; d < v.size(); ++d)
      CHECK(t2.at(id)[d] == doctest::Approx(v[d]).epsilon(1e-15));
  }
}

TEST_CASE("pos corpus round trip") {
  Rng rng(3);
  std::vector<TaggedSentence> corpus;
  for (int i = 0; i < 100; ++i)
    corpus.push_back(RandomSentence(rng, "s" + std::to_string(i),
                                    1 + rng.Below(12)));
  std::ostringstream out;
  WritePosCorpus(out, corpus);
  CHECK(ParsePosCorpus(out.str()) == corpus);
}

TEST_CASE("tree round trip") {
  Rng rng(5);
  const std::vector<std::string> labels = {"S", "NP", "VP", "a", "b"};
  std::vector<std::pair<std::string, ParseTree>> trees;
  for (int i = 0; i < 300; ++i) {
    ParseTree t = oracle::RandomTree(rng, 2 + rng.Below(14), labels);
    CHECK(ParsePtbTree(FormatPtbTree(t)) == t);
    trees.emplace_back("t" + std::to_string(i), std::move(t));
  }
  std::ostringstream out;
  WriteTreeFile(out, trees);
  std::istringstream in(out.str());
  const auto again = ParseTreeFile(in);
  REQUIRE(again.size() == trees.size());
  for (std::size_t i = 0; i < trees.size(); ++i) {
    CHECK(again[i].first == trees[i].first);
    CHECK(again[i].second == trees[i].second);
  }
}

TEST_CASE("fixture tree leaves match sentence tokens") {
  std::ifstream pos(FixtureDir() / "corpus.pos");
  const auto corpus = ParsePosCorpus(pos);
  std::ifstream tf(FixtureDir() / "trees.txt");
  const auto trees = ParseTreeFile(tf);
  REQUIRE(corpus.size() == trees.size());
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    CHECK(trees[i].first == corpus[i].id());
    CHECK(trees[i].second.Leaves() == corpus[i].Surfaces());
  }
}

}  // TEST_SUITE
