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
"""Generates the synthetic paraphrase fixture under data/fixture/.

Sentences are question frames with three content slots (verb, adjective,
noun). A pair joins two frames filled with synonyms of the same content.
Usage: python tools/make_fixture.py [out_dir]
"""

import itertools
import random
import sys
from pathlib import Path

SEED = 7
DIM = 16

# (surface, upos, lemma) per frame position; V, A, N mark content slots.
FRAMES = {
    "how_can": (
        [("how", "ADV", "how"), ("can", "AUX", "can"), ("i", "PRON", "i"),
         "V", ("the", "DET", "the"), "A", "N", ("?", "PUNCT", "?")],
        "(ROOT (SBARQ (WHADVP (WRB how)) (SQ (MD can) (NP (PRP i)) "
        "(VP (VB {V}) (NP (DT the) (JJ {A}) (NN {N})))) (. ?)))"),
    "best_way": (
        [("what", "PRON", "what"), ("is", "AUX", "be"), ("the", "DET", "the"),
         ("best", "ADJ", "good"), ("way", "NOUN", "way"), ("to", "PART", "to"),
         "V", ("the", "DET", "the"), "A", "N", ("?", "PUNCT", "?")],
        "(ROOT (SBARQ (WHNP (WP what)) (SQ (VBZ is) (NP (NP (DT the) "
        "(JJS best) (NN way)) (S (VP (TO to) (VP (VB {V}) (NP (DT the) "
        "(JJ {A}) (NN {N}))))))) (. ?)))"),
    "how_do": (
        [("how", "ADV", "how"), ("do", "AUX", "do"), ("i", "PRON", "i"),
         "V", ("the", "DET", "the"), "A", "N", ("?", "PUNCT", "?")],
        "(ROOT (SBARQ (WHADVP (WRB how)) (SQ (VBP do) (NP (PRP i)) "
        "(VP (VB {V}) (NP (DT the) (JJ {A}) (NN {N})))) (. ?)))"),
    "should_do": (
        [("what", "PRON", "what"), ("should", "AUX", "should"),
         ("i", "PRON", "i"), ("do", "VERB", "do"), ("to", "PART", "to"),
         "V", ("the", "DET", "the"), "A", "N", ("?", "PUNCT", "?")],
        "(ROOT (SBARQ (WHNP (WP what)) (SQ (MD should) (NP (PRP i)) "
        "(VP (VB do) (S (VP (TO to) (VP (VB {V}) (NP (DT the) (JJ {A}) "
        "(NN {N}))))))) (. ?)))"),
    "is_there": (
        [("is", "AUX", "be"), ("there", "PRON", "there"), ("a", "DET", "a"),
         ("way", "NOUN", "way"), ("to", "PART", "to"), "V",
         ("the", "DET", "the"), "A", "N", ("?", "PUNCT", "?")],
        "(ROOT (SQ (VBZ is) (NP (EX there)) (NP (NP (DT a) (NN way)) "
        "(S (VP (TO to) (VP (VB {V}) (NP (DT the) (JJ {A}) (NN {N})))))) "
        "(. ?)))"),
    "want_to": (
        [("i", "PRON", "i"), ("want", "VERB", "want"), ("to", "PART", "to"),
         "V", ("my", "PRON", "my"), "A", "N", (".", "PUNCT", ".")],
        "(ROOT (S (NP (PRP i)) (VP (VBP want) (S (VP (TO to) (VP (VB {V}) "
        "(NP (PRP$ my) (JJ {A}) (NN {N})))))) (. .)))"),
}

VERBS = [["sell", "trade"], ["fix", "repair", "mend"], ["clean", "wash"],
         ["paint", "color"], ["insure", "cover"]]
ADJS = [["old", "aged"], ["big", "large", "huge"], ["small", "tiny"],
        ["new", "fresh"], ["broken", "damaged"]]
NOUNS = [["car", "vehicle", "auto"], ["house", "home"], ["phone", "mobile"],
         ["bike", "bicycle"], ["computer", "laptop"]]


def fill(frame, v, a, n):
    tokens, tree = FRAMES[frame]
    out = []
    for t in tokens:
        if t == "V":
            out.append((v, "VERB", v))
        elif t == "A":
            out.append((a, "ADJ", a))
        elif t == "N":
            out.append((n, "NOUN", n))
        else:
            out.append(t)
    return out, tree.format(V=v, A=a, N=n)


def vec(rng, base=None, noise=1.0):
    if base is None:
        return [rng.gauss(0.0, 1.0) for _ in range(DIM)]
    return [b + rng.gauss(0.0, noise) for b in base]


def fmt(values):
    return " ".join(f"{x:.6f}" for x in values)


def main(out_dir):
    rng = random.Random(SEED)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    frames = sorted(FRAMES)

    sentences = []  # (id, tokens, tree)
    pairs = []
    for gi, (vg, ag, ng) in enumerate(itertools.product(VERBS, ADJS, NOUNS)):
        f_src, f_tgt = rng.sample(frames, 2)
        ids = []
        for side, frame in (("a", f_src), ("b", f_tgt)):
            tokens, tree = fill(frame, rng.choice(vg), rng.choice(ag),
                                rng.choice(ng))
            sid = f"q{gi:03d}{side}"
            sentences.append((sid, tokens, tree))
            ids.append(sid)
        pairs.append(tuple(ids))
    rng.shuffle(pairs)
    train, evals = pairs[:100], pairs[100:]

    with open(out / "corpus.pos", "w") as f:
        for sid, tokens, _ in sentences:
            f.write(f"# id = {sid}\n")
            for s, u, l in tokens:
                f.write(f"{s}\t{u}\t{l}\n")
            f.write("\n")
    with open(out / "trees.txt", "w") as f:
        for sid, _, tree in sentences:
            f.write(f"# id = {sid}\n{tree}\n")
    for name, rows in (("train_pairs.tsv", train), ("eval_pairs.tsv", evals)):
        with open(out / name, "w") as f:
            for s, t in rows:
                f.write(f"{s}\t{t}\n")

    # Token vectors: synonyms share a base direction.
    token_vec = {}
    for group in VERBS + ADJS + NOUNS:
        base = vec(rng)
        for w in group:
            token_vec[w] = vec(rng, base, 0.25)
    for sid, tokens, _ in sentences:
        for s, _, _ in tokens:
            if s not in token_vec:
                token_vec[s] = vec(rng)
    with open(out / "token_vectors.txt", "w") as f:
        f.write(f"dim {DIM}\n")
        for w in sorted(token_vec):
            f.write(f"{w} {fmt(token_vec[w])}\n")

    # Sentence vectors: sum of token vectors plus noise.
    with open(out / "embeddings.txt", "w") as f:
        f.write(f"dim {DIM}\n")
        for sid, tokens, _ in sentences:
            total = [0.0] * DIM
            for s, _, _ in tokens:
                total = [a + b for a, b in zip(total, token_vec[s])]
            f.write(f"{sid} {fmt(vec(rng, total, 0.5))}\n")


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else
         Path(__file__).resolve().parent.parent / "data" / "fixture")
