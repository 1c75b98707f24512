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

// In-memory corpus types and their text formats:
//
//   POS corpus     one "surface<TAB>UPOS<TAB>lemma" per line, blank line ends
//                  a sentence, optional "# id = <id>" as the first line.
//   Tree file      one bracketed tree per line, same "# id = " comments.
//   Embedding file "dim <d>" then "id v1 ... vd" per line.

#ifndef EXFORGE_CORPUS_H_
#define EXFORGE_CORPUS_H_

#include <cstddef>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace exforge {

// Universal POS inventory.
enum class Upos {
  kNoun,
  kVerb,
  kAux,
  kAdj,
  kAdv,
  kPron,
  kDet,
  kAdp,
  kNum,
  kPart,
  kCconj,
  kSconj,
  kIntj,
  kPropn,
  kPunct,
  kSym,
  kX,
};

std::string_view UposName(Upos tag);
std::optional<Upos> ParseUpos(std::string_view name);

struct Token {
  std::string surface;
  Upos upos = Upos::kX;
  std::string lemma;

  friend bool operator==(const Token&, const Token&) = default;
};

// A validated, immutable tokenized sentence.
class TaggedSentence {
 public:
  TaggedSentence() = default;
  // Throws Error if tokens is empty or a token is malformed.
  TaggedSentence(std::string id, std::vector<Token> tokens);

  const std::string& id() const { return id_; }
  const std::vector<Token>& tokens() const { return tokens_; }
  std::size_t size() const { return tokens_.size(); }
  // True iff the last PUNCT token is "?".
  bool is_question() const { return is_question_; }

  std::vector<std::string> Surfaces() const;

  friend bool operator==(const TaggedSentence&,
                         const TaggedSentence&) = default;

 private:
  std::string id_;
  std::vector<Token> tokens_;
  bool is_question_ = false;
};

bool SameText(const TaggedSentence& a, const TaggedSentence& b);

struct PairRecord {
  TaggedSentence source;
  TaggedSentence target;
};

// Throws Error when source and target share an id.
PairRecord MakePair(TaggedSentence source, TaggedSentence target);

std::vector<TaggedSentence> ParsePosCorpus(std::istream& in);
std::vector<TaggedSentence> ParsePosCorpus(std::string_view text);
void WritePosCorpus(std::ostream& out,
                    std::span<const TaggedSentence> sentences);

// Looks up sentences by id; throws Error on duplicates.
std::map<std::string, const TaggedSentence*> IndexById(
    std::span<const TaggedSentence> sentences);

// Rooted, ordered, labeled tree. Leaves are the sentence tokens.
struct ParseTree {
  std::string label;
  std::vector<ParseTree> children;

  bool is_leaf() const { return children.empty(); }
  std::size_t NodeCount() const;
  std::vector<std::string> Leaves() const;

  friend bool operator==(const ParseTree&, const ParseTree&) = default;
};

// Parses "(LABEL child+)". ParseError::position() is a character offset.
ParseTree ParsePtbTree(std::string_view text);
std::string FormatPtbTree(const ParseTree& tree);

std::vector<std::pair<std::string, ParseTree>> ParseTreeFile(std::istream& in);
void WriteTreeFile(std::ostream& out,
                   std::span<const std::pair<std::string, ParseTree>> trees);

// Unit-normalized vectors keyed by id.
class EmbeddingTable {
 public:
  explicit EmbeddingTable(std::size_t dim);

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return entries_.size(); }
  bool contains(const std::string& id) const { return entries_.count(id) > 0; }
  // Throws Error for unknown ids.
  const std::vector<double>& at(const std::string& id) const;
  const std::map<std::string, std::vector<double>>& entries() const {
    return entries_;
  }

  // Normalizes and stores. Throws on dimension mismatch, duplicate id or a
  // zero vector.
  void Add(const std::string& id, std::vector<double> vector);

 private:
  std::size_t dim_;
  std::map<std::string, std::vector<double>> entries_;
};

EmbeddingTable LoadEmbeddings(std::istream& in);
void WriteEmbeddings(std::ostream& out, const EmbeddingTable& table);

}  // namespace exforge

#endif  // EXFORGE_CORPUS_H_
