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

#include "exforge/corpus.h"

#include <array>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "exforge/error.h"
#include "exforge/text.h"

namespace exforge {
namespace {

constexpr std::array<std::pair<Upos, std::string_view>, 17> kUposNames = {{
    {Upos::kNoun, "NOUN"},   {Upos::kVerb, "VERB"},   {Upos::kAux, "AUX"},
    {Upos::kAdj, "ADJ"},     {Upos::kAdv, "ADV"},     {Upos::kPron, "PRON"},
    {Upos::kDet, "DET"},     {Upos::kAdp, "ADP"},     {Upos::kNum, "NUM"},
    {Upos::kPart, "PART"},   {Upos::kCconj, "CCONJ"}, {Upos::kSconj, "SCONJ"},
    {Upos::kIntj, "INTJ"},   {Upos::kPropn, "PROPN"}, {Upos::kPunct, "PUNCT"},
    {Upos::kSym, "SYM"},     {Upos::kX, "X"},
}};

constexpr std::string_view kIdPrefix = "# id =";

bool HasWhitespace(std::string_view s) {
  for (char c : s) {
    if (c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' ||
        c == '\v')
      return true;
  }
  return false;
}

// Returns the id if `line` is an id comment.
std::optional<std::string> IdComment(std::string_view line) {
  if (!line.starts_with(kIdPrefix)) return std::nullopt;
  return std::string(Trim(line.substr(kIdPrefix.size())));
}

bool IsComment(std::string_view line) {
  return line.starts_with('#') && line.find('\t') == std::string_view::npos;
}

}  // namespace

std::string_view UposName(Upos tag) {
  for (const auto& [t, name] : kUposNames) {
    if (t == tag) return name;
  }
  return "X";
}

std::optional<Upos> ParseUpos(std::string_view name) {
  for (const auto& [t, n] : kUposNames) {
    if (n == name) return t;
  }
  return std::nullopt;
}

TaggedSentence::TaggedSentence(std::string id, std::vector<Token> tokens)
    : id_(std::move(id)), tokens_(std::move(tokens)) {
  if (id_.empty()) throw Error("sentence id is empty");
  if (tokens_.empty()) throw Error("sentence '" + id_ + "' has no tokens");
  for (const Token& t : tokens_) {
    if (t.surface.empty() || HasWhitespace(t.surface))
      throw Error("sentence '" + id_ + "': invalid token surface '" +
                  t.surface + "'");
  }
  for (auto it = tokens_.rbegin(); it != tokens_.rend(); ++it) {
    if (it->upos == Upos::kPunct) {
      is_question_ = it->surface == "?";
      break;
    }
  }
}

std::vector<std::string> TaggedSentence::Surfaces() const {
  std::vector<std::string> out;
  out.reserve(tokens_.size());
  for (const Token& t : tokens_) out.push_back(t.surface);
  return out;
}

bool SameText(const TaggedSentence& a, const TaggedSentence& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a.tokens()[i].surface != b.tokens()[i].surface) return false;
  }
  return true;
}

PairRecord MakePair(TaggedSentence source, TaggedSentence target) {
  if (source.id() == target.id())
    throw Error("pair source and target share id '" + source.id() + "'");
  return PairRecord{std::move(source), std::move(target)};
}

std::vector<TaggedSentence> ParsePosCorpus(std::istream& in) {
  std::vector<TaggedSentence> out;
  std::optional<std::string> block_id;
  std::vector<Token> tokens;
  bool in_block = false;
  std::size_t block_start = 0;
  std::size_t line_no = 0;

  auto flush = [&]() {
    if (!in_block) return;
    if (tokens.empty())
      throw ParseError("line " + std::to_string(block_start) +
                           ": sentence block has no tokens",
                       block_start);
    std::string id = block_id ? *block_id : std::to_string(out.size() + 1);
    out.emplace_back(std::move(id), std::move(tokens));
    tokens.clear();
    block_id.reset();
    in_block = false;
  };

  std::string line;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (Trim(line).empty()) {
      flush();
      continue;
    }
    if (!in_block) {
      in_block = true;
      block_start = line_no;
    }
    if (IsComment(line)) {
      if (auto id = IdComment(line)) {
        if (!tokens.empty() || block_id)
          throw ParseError("line " + std::to_string(line_no) +
                               ": id comment must open its sentence block",
                           line_no);
        if (id->empty())
          throw ParseError("line " + std::to_string(line_no) + ": empty id",
                           line_no);
        block_id = std::move(*id);
      }
      continue;
    }
    std::vector<std::string_view> cols = Split(line, '\t');
    if (cols.size() != 3)
      throw ParseError("line " + std::to_string(line_no) + ": expected 3 "
                           "tab-separated columns, got " +
                           std::to_string(cols.size()),
                       line_no);
    auto tag = ParseUpos(cols[1]);
    if (!tag)
      throw ParseError("line " + std::to_string(line_no) +
                           ": unknown POS tag '" + std::string(cols[1]) + "'",
                       line_no);
    if (cols[0].empty() || HasWhitespace(cols[0]))
      throw ParseError("line " + std::to_string(line_no) +
                           ": invalid surface '" + std::string(cols[0]) + "'",
                       line_no);
    tokens.push_back(
        Token{std::string(cols[0]), *tag, std::string(cols[2])});
  }
  flush();
  IndexById(out);
  return out;
}

std::vector<TaggedSentence> ParsePosCorpus(std::string_view text) {
  std::istringstream in{std::string(text)};
  return ParsePosCorpus(in);
}

void WritePosCorpus(std::ostream& out,
                    std::span<const TaggedSentence> sentences) {
  for (const TaggedSentence& s : sentences) {
    out << kIdPrefix << ' ' << s.id() << '\n';
    for (const Token& t : s.tokens())
      out << t.surface << '\t' << UposName(t.upos) << '\t' << t.lemma << '\n';
    out << '\n';
  }
}

std::map<std::string, const TaggedSentence*> IndexById(
    std::span<const TaggedSentence> sentences) {
  std::map<std::string, const TaggedSentence*> index;
  for (const TaggedSentence& s : sentences) {
    if (!index.emplace(s.id(), &s).second)
      throw Error("duplicate sentence id '" + s.id() + "'");
  }
  return index;
}

std::size_t ParseTree::NodeCount() const {
  std::size_t n = 1;
  for (const ParseTree& c : children) n += c.NodeCount();
  return n;
}

std::vector<std::string> ParseTree::Leaves() const {
  std::vector<std::string> out;
  std::vector<const ParseTree*> stack{this};
  while (!stack.empty()) {
    const ParseTree* node = stack.back();
    stack.pop_back();
    if (node->is_leaf()) {
      out.push_back(node->label);
      continue;
    }
    for (auto it = node->children.rbegin(); it != node->children.rend(); ++it)
      stack.push_back(&*it);
  }
  return out;
}

namespace {

class TreeParser {
 public:
  explicit TreeParser(std::string_view text) : text_(text) {}

  ParseTree Parse() {
    SkipSpace();
    if (pos_ >= text_.size() || text_[pos_] != '(')
      Fail("expected '('");
    ParseTree tree = ParseNode();
    SkipSpace();
    if (pos_ != text_.size()) {
      if (text_[pos_] == ')') Fail("unbalanced ')'");
      Fail("trailing text after tree");
    }
    return tree;
  }

 private:
  [[noreturn]] void Fail(const std::string& what) const {
    throw ParseError("offset " + std::to_string(pos_) + ": " + what, pos_);
  }

  void SkipSpace() {
    while (pos_ < text_.size() &&
           (text_[pos_] == ' ' || text_[pos_] == '\t' || text_[pos_] == '\n' ||
            text_[pos_] == '\r'))
      ++pos_;
  }

  std::string Atom() {
    const std::size_t start = pos_;
    while (pos_ < text_.size() && text_[pos_] != '(' && text_[pos_] != ')' &&
           text_[pos_] != ' ' && text_[pos_] != '\t' && text_[pos_] != '\n' &&
           text_[pos_] != '\r')
      ++pos_;
    return std::string(text_.substr(start, pos_ - start));
  }

  // Expects text_[pos_] == '('.
  ParseTree ParseNode() {
    const std::size_t open = pos_;
    ++pos_;
    SkipSpace();
    ParseTree node;
    node.label = Atom();
    if (node.label.empty()) Fail("empty label");
    for (;;) {
      SkipSpace();
      if (pos_ >= text_.size()) {
        pos_ = open;
        Fail("unbalanced '(' never closed");
      }
      const char c = text_[pos_];
      if (c == ')') {
        ++pos_;
        break;
      }
      if (c == '(') {
        node.children.push_back(ParseNode());
      } else {
        node.children.push_back(ParseTree{Atom(), {}});
      }
    }
    if (node.children.empty()) {
      pos_ = open;
      Fail("node '" + node.label + "' has no children");
    }
    return node;
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

void FormatInto(const ParseTree& tree, std::string& out) {
  if (tree.is_leaf()) {
    out += tree.label;
    return;
  }
  out += '(';
  out += tree.label;
  for (const ParseTree& c : tree.children) {
    out += ' ';
    FormatInto(c, out);
  }
  out += ')';
}

}  // namespace

ParseTree ParsePtbTree(std::string_view text) {
  return TreeParser(text).Parse();
}

std::string FormatPtbTree(const ParseTree& tree) {
  std::string out;
  FormatInto(tree, out);
  return out;
}

std::vector<std::pair<std::string, ParseTree>> ParseTreeFile(
    std::istream& in) {
  std::vector<std::pair<std::string, ParseTree>> out;
  std::optional<std::string> pending_id;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (Trim(line).empty()) continue;
    if (line.starts_with('#')) {
      if (auto id = IdComment(line)) pending_id = std::move(*id);
      continue;
    }
    ParseTree tree;
    try {
      tree = ParsePtbTree(line);
    } catch (const ParseError& e) {
      throw ParseError("line " + std::to_string(line_no) + ": " + e.what(),
                       line_no);
    }
    std::string id =
        pending_id ? *pending_id : std::to_string(out.size() + 1);
    pending_id.reset();
    out.emplace_back(std::move(id), std::move(tree));
  }
  return out;
}

void WriteTreeFile(std::ostream& out,
                   std::span<const std::pair<std::string, ParseTree>> trees) {
  for (const auto& [id, tree] : trees)
    out << kIdPrefix << ' ' << id << '\n' << FormatPtbTree(tree) << '\n';
}

EmbeddingTable::EmbeddingTable(std::size_t dim) : dim_(dim) {
  if (dim == 0) throw Error("embedding dimension must be positive");
}

const std::vector<double>& EmbeddingTable::at(const std::string& id) const {
  auto it = entries_.find(id);
  if (it == entries_.end()) throw Error("no embedding for id '" + id + "'");
  return it->second;
}

void EmbeddingTable::Add(const std::string& id, std::vector<double> vector) {
  if (vector.size() != dim_)
    throw Error("embedding '" + id + "' has " + std::to_string(vector.size()) +
                " values, expected " + std::to_string(dim_));
  if (entries_.count(id)) throw Error("duplicate embedding id '" + id + "'");
  double sq = 0.0;
  for (double v : vector) {
    if (!std::isfinite(v))
      throw Error("embedding '" + id + "' has a non-finite value");
    sq += v * v;
  }
  const double norm = std::sqrt(sq);
  if (norm == 0.0) throw Error("embedding '" + id + "' is the zero vector");
  for (double& v : vector) v /= norm;
  entries_.emplace(id, std::move(vector));
}

EmbeddingTable LoadEmbeddings(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  std::optional<EmbeddingTable> table;
  while (std::getline(in, line)) {
    ++line_no;
    std::vector<std::string_view> fields = SplitWhitespace(line);
    if (fields.empty()) continue;
    if (!table) {
      std::size_t dim = 0;
      if (fields.size() != 2 || fields[0] != "dim" ||
          !ParseSize(fields[1], dim) || dim == 0)
        throw ParseError("line " + std::to_string(line_no) +
                             ": expected header 'dim <d>'",
                         line_no);
      table.emplace(dim);
      continue;
    }
    const std::string id(fields[0]);
    std::vector<double> values;
    values.reserve(fields.size() - 1);
    for (std::size_t i = 1; i < fields.size(); ++i) {
      double v = 0.0;
      if (!ParseDouble(fields[i], v))
        throw ParseError("line " + std::to_string(line_no) + ": embedding '" +
                             id + "' has a non-numeric value",
                         line_no);
      values.push_back(v);
    }
    table->Add(id, std::move(values));
  }
  if (!table) throw ParseError("embedding file has no 'dim' header", 0);
  return std::move(*table);
}

void WriteEmbeddings(std::ostream& out, const EmbeddingTable& table) {
  out << "dim " << table.dim() << '\n';
  char buf[32];
  for (const auto& [id, vec] : table.entries()) {
    out << id;
    for (double v : vec) {
      std::snprintf(buf, sizeof(buf), "%.17g", v);
      out << ' ' << buf;
    }
    out << '\n';
  }
}

}  // namespace exforge
