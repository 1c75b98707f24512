# Copyright 2026 The exemplar-forge Authors.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
"""Template-masking paraphrase toolkit."""

from exemplar_forge._core import (
    DEFAULT_MASK_TOKEN,
    PIPELINE_STAGES,
    Error,
    MaskedTemplate,
    ParseError,
    ParseTree,
    TaggedSentence,
    Token,
    bleu,
    corpus_bleu,
    embed_match_score,
    first_order_mask,
    is_maskable,
    lcs_length,
    mask_count_probability,
    parse_pos_corpus,
    parse_ptb_tree,
    rouge_l,
    rouge_n,
    run_pipeline,
    second_order_mask,
    select_template_embedding,
    select_template_ted,
    slot_draw,
    tree_edit_distance,
    validate_config,
)

__version__ = "0.1.0"

__all__ = [
    "DEFAULT_MASK_TOKEN",
    "PIPELINE_STAGES",
    "Error",
    "MaskedTemplate",
    "ParseError",
    "ParseTree",
    "TaggedSentence",
    "Token",
    "bleu",
    "corpus_bleu",
    "embed_match_score",
    "first_order_mask",
    "is_maskable",
    "lcs_length",
    "mask_count_probability",
    "parse_pos_corpus",
    "parse_ptb_tree",
    "rouge_l",
    "rouge_n",
    "run_pipeline",
    "second_order_mask",
    "select_template_embedding",
    "select_template_ted",
    "slot_draw",
    "tree_edit_distance",
    "validate_config",
]
