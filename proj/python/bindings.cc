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

// Python bindings for the exemplar-forge core.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "exforge/corpus.h"
#include "exforge/error.h"
#include "exforge/masking.h"
#include "exforge/metrics.h"
#include "exforge/pipeline.h"
#include "exforge/template_select.h"

namespace py = pybind11;
using namespace exforge;

namespace {

Upos UposFromName(const std::string& name) {
  const std::optional<Upos> tag = ParseUpos(name);
  if (!tag) throw Error("unknown UPOS tag: " + name);
  return *tag;
}

EmbeddingTable TableFromDict(
    const std::map<std::string, std::vector<double>>& vectors) {
  if (vectors.empty()) throw Error("no vectors");
  EmbeddingTable table(vectors.begin()->second.size());
  for (const auto& [id, v] : vectors) table.Add(id, v);
  return table;
}

py::dict PrfDict(const Prf& s) {
  py::dict d;
  d["precision"] = s.precision;
  d["recall"] = s.recall;
  d["f1"] = s.f1;
  return d;
}

void BindCorpus(py::module_& m) {
  py::class_<Token>(m, "Token")
      .def(py::init([](std::string surface, const std::string& upos,
                       std::string lemma) {
             return Token{std::move(surface), UposFromName(upos),
                          std::move(lemma)};
           }),
           py::arg("surface"), py::arg("upos"), py::arg("lemma"))
      .def_readonly("surface", &Token::surface)
      .def_property_readonly(
          "upos", [](const Token& t) { return std::string(UposName(t.upos)); })
      .def_readonly("lemma", &Token::lemma)
      .def("__eq__", [](const Token& a, const Token& b) { return a == b; })
      .def("__repr__", [](const Token& t) {
        return "Token(" + t.surface + "/" + std::string(UposName(t.upos)) +
               ")";
      });

  py::class_<TaggedSentence>(m, "TaggedSentence")
      .def(py::init<std::string, std::vector<Token>>(), py::arg("id"),
           py::arg("tokens"))
      .def_property_readonly("id", &TaggedSentence::id)
      .def_property_readonly("tokens", &TaggedSentence::tokens)
      .def_property_readonly("is_question", &TaggedSentence::is_question)
      .def("surfaces", &TaggedSentence::Surfaces)
      .def("__len__", &TaggedSentence::size)
      .def("__repr__", [](const TaggedSentence& s) {
        return "TaggedSentence(" + s.id() + ")";
      });

  m.def("parse_pos_corpus",
        [](const std::string& text) { return ParsePosCorpus(text); },
        py::arg("text"), "Parses a POS-tagged corpus in the text format.");

  py::class_<ParseTree>(m, "ParseTree")
      .def_readonly("label", &ParseTree::label)
      .def_readonly("children", &ParseTree::children)
      .def("node_count", &ParseTree::NodeCount)
      .def("leaves", &ParseTree::Leaves)
      .def("__eq__",
           [](const ParseTree& a, const ParseTree& b) { return a == b; })
      .def("__str__", &FormatPtbTree);
  m.def("parse_ptb_tree",
        [](const std::string& text) { return ParsePtbTree(text); },
        py::arg("text"));
}

void BindMasking(py::module_& m) {
  m.attr("DEFAULT_MASK_TOKEN") = kDefaultMaskToken;

  py::class_<MaskedTemplate>(m, "MaskedTemplate")
      .def_property_readonly("origin_id", &MaskedTemplate::origin_id)
      .def_property_readonly("visible_count", &MaskedTemplate::visible_count)
      .def_property_readonly("masked",
                             [](const MaskedTemplate& t) {
                               std::vector<bool> out;
                               for (const Slot& s : t.slots())
                                 out.push_back(s.masked());
                               return out;
                             })
      .def("render", &MaskedTemplate::Render,
           py::arg("mask_token") = std::string(kDefaultMaskToken))
      .def("__len__", &MaskedTemplate::size);

  m.def("is_maskable", &IsMaskable, py::arg("token"), py::arg("in_question"));
  m.def("first_order_mask", &FirstOrderMask, py::arg("sentence"));
  m.def(
      "second_order_mask",
      [](const MaskedTemplate& t, double p, std::uint64_t seed,
         std::string mask_token) {
        return SecondOrderMask(t, MaskConfig{p, seed, std::move(mask_token)});
      },
      py::arg("template"), py::arg("p"), py::arg("seed"),
      py::arg("mask_token") = std::string(kDefaultMaskToken));
  m.def("slot_draw", &SlotDraw, py::arg("seed"), py::arg("origin_id"),
        py::arg("index"));
  m.def("mask_count_probability", &MaskCountProbability, py::arg("k"),
        py::arg("l"), py::arg("p"));
}

void BindSelection(py::module_& m) {
  m.def("tree_edit_distance",
        py::overload_cast<const ParseTree&, const ParseTree&>(
            &TreeEditDistance),
        py::arg("a"), py::arg("b"));
  m.def(
      "tree_edit_distance",
      [](const std::string& a, const std::string& b) {
        return TreeEditDistance(ParsePtbTree(a), ParsePtbTree(b));
      },
      py::arg("a"), py::arg("b"), "Unit-cost TED between bracketed trees.");

  m.def(
      "select_template_ted",
      [](const TaggedSentence& source, const TaggedSentence& target,
         std::vector<TaggedSentence> pool, std::map<std::string, ParseTree> trees,
         int max_len_diff, double bleu_ceiling) {
        CandidatePool candidates{std::move(pool), std::move(trees)};
        candidates.Validate(true);
        const TedConfig cfg{max_len_diff, bleu_ceiling};
        cfg.Validate();
        return SelectTemplateTed(MakePair(source, target), candidates, cfg);
      },
      py::arg("source"), py::arg("target"), py::arg("pool"), py::arg("trees"),
      py::arg("max_len_diff") = 2, py::arg("bleu_ceiling") = 0.6,
      "Id of the chosen exemplar, or None when no candidate survives.");

  m.def(
      "select_template_embedding",
      [](const TaggedSentence& source, const TaggedSentence& target,
         const std::vector<TaggedSentence>& pool,
         const std::map<std::string, std::vector<double>>& vectors,
         std::size_t k, std::uint64_t seed) {
        const EmbeddingIndex index =
            EmbeddingIndex::Build(pool, TableFromDict(vectors));
        return SelectTemplateEmbedding(MakePair(source, target), index, k,
                                       seed);
      },
      py::arg("source"), py::arg("target"), py::arg("pool"),
      py::arg("vectors"), py::arg("k") = 10, py::arg("seed") = 0,
      "`vectors` maps sentence ids (pool and source) to embeddings.");
}

void BindMetrics(py::module_& m) {
  m.def(
      "bleu",
      [](const Tokens& candidate, const std::vector<Tokens>& references,
         std::size_t max_n) { return Bleu(candidate, references, max_n); },
      py::arg("candidate"), py::arg("references"), py::arg("max_n") = 4,
      "Smoothed sentence BLEU in [0, 1].");
  m.def(
      "corpus_bleu",
      [](const std::vector<Tokens>& candidates,
         const std::vector<std::vector<Tokens>>& references,
         std::size_t max_n) {
        return CorpusBleu(candidates, references, max_n);
      },
      py::arg("candidates"), py::arg("references"), py::arg("max_n") = 4);
  m.def(
      "rouge_n",
      [](const Tokens& candidate, const Tokens& reference, std::size_t n) {
        return PrfDict(RougeN(candidate, reference, n));
      },
      py::arg("candidate"), py::arg("reference"), py::arg("n"));
  m.def(
      "rouge_l",
      [](const Tokens& candidate, const Tokens& reference) {
        return PrfDict(RougeL(candidate, reference));
      },
      py::arg("candidate"), py::arg("reference"));
  m.def(
      "lcs_length",
      [](const Tokens& a, const Tokens& b) { return LcsLength(a, b); },
      py::arg("a"), py::arg("b"));
  m.def(
      "embed_match_score",
      [](const std::vector<std::vector<double>>& candidate,
         const std::vector<std::vector<double>>& reference) {
        return PrfDict(EmbedMatchScore(candidate, reference));
      },
      py::arg("candidate"), py::arg("reference"),
      "Inputs are unit vectors of one dimension.");
}

void BindPipeline(py::module_& m) {
  m.attr("PIPELINE_STAGES") = PipelineStages();
  m.def(
      "validate_config",
      [](const fs::path& path) {
        std::vector<std::pair<std::string, std::string>> out;
        for (const Diagnostic& d : ValidateConfig(PipelineConfig::Load(path)))
          out.emplace_back(d.field, d.reason);
        return out;
      },
      py::arg("config"), "(field, reason) pairs; empty when runnable.");
  m.def(
      "run_pipeline",
      [](const fs::path& path, std::optional<fs::path> out_dir) {
        PipelineConfig cfg = PipelineConfig::Load(path);
        if (out_dir) cfg.out_dir = *out_dir;
        PipelineResult result;
        {
          py::gil_scoped_release release;
          result = RunPipeline(cfg);
        }
        py::dict d;
        d["exit_code"] = result.exit_code;
        py::list diagnostics;
        for (const Diagnostic& diag : result.diagnostics)
          diagnostics.append(py::make_tuple(diag.field, diag.reason));
        d["diagnostics"] = diagnostics;
        py::list stages;
        for (const StageOutcome& s : result.stages) {
          py::dict stage;
          stage["name"] = s.name;
          stage["ok"] = s.ok;
          stage["skipped"] = s.skipped;
          stage["error"] = s.error;
          stages.append(stage);
        }
        d["stages"] = stages;
        d["manifest"] = result.manifest;
        return d;
      },
      py::arg("config"), py::arg("out_dir") = py::none());
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Template-masking paraphrase toolkit";

  PYBIND11_CONSTINIT static py::gil_safe_call_once_and_store<py::object>
      error_type;
  PYBIND11_CONSTINIT static py::gil_safe_call_once_and_store<py::object>
      parse_error_type;
  error_type.call_once_and_store_result([&]() {
    return py::object(py::exception<Error>(m, "Error", PyExc_ValueError));
  });
  parse_error_type.call_once_and_store_result([&]() {
    return py::object(py::exception<ParseError>(m, "ParseError",
                                                error_type.get_stored().ptr()));
  });
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const ParseError& e) {
      const py::object& type = parse_error_type.get_stored();
      py::object exc = type(e.what());
      exc.attr("position") = e.position();
      PyErr_SetObject(type.ptr(), exc.ptr());
    } catch (const Error& e) {
      py::set_error(error_type.get_stored(), e.what());
    }
  });

  BindCorpus(m);
  BindMasking(m);
  BindSelection(m);
  BindMetrics(m);
  BindPipeline(m);
}
