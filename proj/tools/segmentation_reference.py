#!/usr/bin/env python3
"""Reference clause segmenter and fixture generator.

Builds a deterministic suite of bracketed parse trees and the expected
segmentation of each, written to tests/data/segmentation_trees.txt and
tests/data/segmentation_golden.txt. The C++ tests compare their rendering of
the same trees byte for byte against the golden file.

Golden line format, one per tree:
    <index>\twhole\t0-<n>\t<all tokens>
    <index>\tclauses\t<b>-<e> <b>-<e> ...\t<clause tokens> | <clause tokens> ...
Spans are half-open token ranges over the tree's leaves.
"""

import argparse
import random
from pathlib import Path

L_MAX = 20
L_MIN = 2
SEED = 20240611


# ---------------------------------------------------------------------------
# Trees as (label, children) with str children for words.

def read_tree(s):
    toks = s.replace("(", " ( ").replace(")", " ) ").split()
    pos = 0

    def node():
        nonlocal pos
        assert toks[pos] == "("
        pos += 1
        label = ""
        if toks[pos] not in ("(", ")"):
            label = toks[pos]
            pos += 1
        kids = []
        while toks[pos] != ")":
            if toks[pos] == "(":
                kids.append(node())
            else:
                kids.append(toks[pos])
                pos += 1
        pos += 1
        return (label, kids)

    t = node()
    assert pos == len(toks)
    return t


def words(t):
    if isinstance(t, str):
        return [t]
    out = []
    for k in t[1]:
        out.extend(words(k))
    return out


def is_preterminal(t):
    return not isinstance(t, str) and len(t[1]) == 1 and isinstance(t[1][0], str)


def bare(label):
    if label.startswith("-"):
        return label
    for i, ch in enumerate(label):
        if ch in "-=":
            return label[:i]
    return label


def segment(tree):
    """Returns None for a whole sentence, else a list of (begin, end)."""
    root = tree
    while len(root[1]) == 1 and not is_preterminal(root[1][0]) \
            and not isinstance(root[1][0], str) and bare(root[0]) != "S":
        root = root[1][0]

    found = []

    def walk(t, start):
        if isinstance(t, str) or is_preterminal(t):
            return
        tag = bare(t[0])
        n = len(words(t))
        if tag == "SBAR":
            return
        if tag == "S":
            if L_MIN <= n <= L_MAX:
                found.append((start, start + n))
                return
            if n < L_MIN:
                return
        at = start
        for k in t[1]:
            walk(k, at)
            at += len(words(k))

    at = 0
    for k in root[1]:
        walk(k, at)
        at += len(words(k))

    if len(found) < 2:
        return None
    for (_, e0), (b1, _) in zip(found, found[1:]):
        if b1 - e0 > L_MIN:
            return None
    return found


def golden_line(i, tree):
    toks = words(tree)
    spans = segment(tree)
    if spans is None:
        return f"{i}\twhole\t0-{len(toks)}\t{' '.join(toks)}"
    rng = " ".join(f"{b}-{e}" for b, e in spans)
    txt = " | ".join(" ".join(toks[b:e]) for b, e in spans)
    return f"{i}\tclauses\t{rng}\t{txt}"


# ---------------------------------------------------------------------------
# Random grammar

NOUNS = ["room", "staff", "bed", "view", "lobby", "pool", "coffee", "street", "desk", "price"]
ADJS = ["clean", "noisy", "small", "friendly", "great", "old", "quiet", "cheap", "warm", "slow"]
VERBS = ["liked", "saw", "booked", "found", "wanted", "enjoyed", "missed", "paid"]
PREPS = ["near", "with", "for", "after", "during"]


def np_(rng, extra=0):
    k = [f"(DT {rng.choice(['the', 'a', 'our'])})"]
    for _ in range(extra):
        k.append(f"(JJ {rng.choice(ADJS)})")
    k.append(f"(NN {rng.choice(NOUNS)})")
    return "(NP " + " ".join(k) + ")"


def pp(rng):
    return f"(PP (IN {rng.choice(PREPS)}) {np_(rng, rng.randrange(3))})"


def simple_s(rng, pad):
    """S of roughly 4 + pad tokens."""
    parts = [np_(rng)]
    vp = f"(VBD was) (ADJP (JJ {rng.choice(ADJS)}))"
    if pad > 0:
        vp = f"(VBD {rng.choice(VERBS)}) {np_(rng)}"
        pad -= 1
    extras = []
    while pad > 0:
        extras.append(pp(rng))
        pad -= 3
    return "(S " + " ".join(parts) + " (VP " + vp + (" " + " ".join(extras) if extras else "") + "))"


def tiny_s(rng):
    return f"(S (VP (VB {rng.choice(['go', 'stay', 'wait'])})))"


def sbar(rng):
    return f"(SBAR (IN because) {simple_s(rng, rng.randrange(4))})"


def random_tree(rng):
    kind = rng.randrange(7)
    if kind == 0:
        inner = simple_s(rng, rng.randrange(6))[3:-1]
        return f"(ROOT (S {inner} (. .)))"
    if kind == 1:
        a, b = simple_s(rng, rng.randrange(5)), simple_s(rng, rng.randrange(5))
        conj = rng.choice(["(CC and)", "(CC but)", "(, ,) (CC and)", "(, ,) (RB then) (CC so)"])
        return f"(ROOT (S {a} {conj} {b} (. .)))"
    if kind == 2:
        a = simple_s(rng, rng.randrange(3))
        return f"(ROOT (S {a} {sbar(rng)} (. .)))"
    if kind == 3:
        # long sentence whose top S children exceed the maximum
        big = "(S " + simple_s(rng, 10)[3:-1] + " (CC and) " + simple_s(rng, 10) + ")"
        return f"(ROOT (S {big} (CC and) {simple_s(rng, rng.randrange(4))} (. .)))"
    if kind == 4:
        return f"(ROOT (S {simple_s(rng, 1)} (CC and) {tiny_s(rng)} (. .)))"
    if kind == 5:
        clauses = [simple_s(rng, rng.randrange(3)) for _ in range(3)]
        return f"(ROOT (S {clauses[0]} (: ;) {clauses[1]} (: ;) {clauses[2]} (. .)))"
    a, b = simple_s(rng, rng.randrange(3)), simple_s(rng, rng.randrange(3))
    return f"(ROOT (S {a} (, ,) (ADVP (RB however) (RB very) (RB clearly)) {b} (. .)))"


FIXED = [
    # one clause in bounds under the root: whole sentence
    "(ROOT (S (NP (DT The) (NN room)) (VP (VBD was) (ADJP (JJ spacious))) (. .)))",
    # two adjacent clauses of lengths 5 and 7
    "(ROOT (S (S (NP (DT The) (NN location)) (VP (VBD was) (ADJP (RB very) (JJ good)))) (CC and)"
    " (S (NP (DT the) (NN staff)) (VP (VBD was) (ADJP (RB really) (JJ helpful)) (PP (IN at) (NN night))))"
    " (. .)))",
    # root of 30 tokens with children of 14 and 15
    "(S (S (NP (DT the) (NN hotel)) (VP (VBD was) (ADJP (RB very) (JJ close)) (PP (IN to) (NP (DT the) (NN station)))"
    " (PP (IN with) (NP (DT a) (JJ short) (JJ quiet) (NN walk) (NN home))))) (CC and)"
    " (S (NP (DT the) (NN breakfast)) (VP (VBD had) (NP (JJ fresh) (NN fruit) (CC and) (JJ hot) (NN coffee))"
    " (PP (IN in) (NP (DT the) (JJ large) (JJ sunny) (NN room))) (ADVP (RB every) (NN day)))))",
    # SBAR blocks its embedded S
    "(ROOT (S (NP (PRP We)) (VP (VBD left) (SBAR (IN because) (S (NP (DT the) (NN bed)) (VP (VBD was) (ADJP (JJ hard)))))) (. .)))",
]


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--out", default=str(Path(__file__).resolve().parent.parent / "tests" / "data"))
    args = ap.parse_args()
    rng = random.Random(SEED)
    trees = list(FIXED)
    while len(trees) < 50:
        trees.append(random_tree(rng))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "segmentation_trees.txt").write_text("".join(t + "\n" for t in trees))
    lines = [golden_line(i, read_tree(t)) for i, t in enumerate(trees)]
    (out / "segmentation_golden.txt").write_text("".join(l + "\n" for l in lines))


if __name__ == "__main__":
    main()
