#!/usr/bin/env python3
"""Generate the bundled toy corpus: 3 hotels x 20 annotated reviews.

Writes data/toy/corpus.jsonl and data/toy/summaries.jsonl. Output is a pure
function of SEED, so rerunning reproduces the committed files.
"""

import argparse
import json
import random
from pathlib import Path

SEED = 7

ASPECTS = {
    "rooms": {
        "nouns": ["room", "bed", "bathroom", "view"],
        "positive": ["spacious", "comfortable", "clean", "quiet", "modern"],
        "negative": ["small", "noisy", "dated"],
    },
    "location": {
        "nouns": ["location", "neighborhood", "area"],
        "positive": ["great", "convenient", "central"],
        "negative": ["remote", "sketchy"],
    },
    "staff": {
        "nouns": ["staff", "receptionist", "concierge"],
        "positive": ["friendly", "helpful", "attentive"],
        "negative": ["rude", "slow"],
    },
    "food": {
        "nouns": ["breakfast", "coffee", "restaurant"],
        "positive": ["delicious", "fresh", "tasty"],
        "negative": ["bland", "cold", "overpriced"],
    },
}

HOTELS = {
    "hotel_seattle": {
        "landmarks": ["pike place market", "the space needle", "the waterfront"],
        "details": ["a vintage library", "a rooftop bar", "the ferry terminal", "a sound view",
                    "a fish market breakfast", "a glass elevator"],
        "mix": {"rooms": 0.9, "location": 0.95, "staff": 0.85, "food": 0.3},
    },
    "hotel_chicago": {
        "landmarks": ["millennium park", "the river walk", "navy pier"],
        "details": ["an art deco lobby", "the blue line", "a jazz club", "a deep dish pizza",
                    "a lake breeze", "a marble staircase"],
        "mix": {"rooms": 0.35, "location": 0.9, "staff": 0.9, "food": 0.8},
    },
    "hotel_denver": {
        "landmarks": ["union station", "the convention center", "larimer square"],
        "details": ["a mountain view terrace", "the light rail", "a brewery", "a ski shuttle",
                    "a green chile omelette", "a fire pit"],
        "mix": {"rooms": 0.85, "location": 0.4, "staff": 0.8, "food": 0.85},
    },
}

# Opinions the upstream summarizer "wrote" per hotel: (aspect, sentiment, pairs).
SUMMARIES = {
    "hotel_seattle": [
        ("rooms", "positive", [("room", "spacious"), ("room", "comfortable")]),
        ("location", "positive", [("location", "great")]),
        ("staff", "positive", [("staff", "friendly"), ("staff", "helpful")]),
        ("food", "negative", [("breakfast", "bland")]),
    ],
    "hotel_chicago": [
        ("location", "positive", [("location", "convenient")]),
        ("staff", "positive", [("staff", "attentive")]),
        ("food", "positive", [("breakfast", "delicious"), ("coffee", "fresh")]),
        ("rooms", "negative", [("room", "small")]),
    ],
    "hotel_denver": [
        ("rooms", "positive", [("room", "modern"), ("bed", "comfortable")]),
        ("staff", "positive", [("staff", "helpful")]),
        ("food", "positive", [("breakfast", "tasty")]),
        ("location", "negative", [("area", "remote")]),
    ],
}

COMPLAINTS = ["we expected better", "we asked for a refund", "we wanted an apology",
              "we left early", "we complained twice"]

FILLERS = [
    "We checked in on a Tuesday",
    "This was our second visit",
    "We booked through the website",
    "Our flight landed late",
]


def leaf(tag, word):
    return f"({tag} {word})"


def np_tree(words):
    tags = ["DT"] * (len(words) - 1) + ["NN"]
    return "(NP " + " ".join(leaf(t, w) for t, w in zip(tags, words)) + ")"


def clause(noun, adj, cap):
    """'The noun was adj' as (words, S subtree)."""
    det = "The" if cap else "the"
    words = [det, noun, "was", adj]
    tree = f"(S {np_tree([det, noun])} (VP {leaf('VBD', 'was')} (ADJP {leaf('JJ', adj)})))"
    return words, tree


def sentence(rng, hotel, aspect, sentiment):
    a = ASPECTS[aspect]
    info = HOTELS[hotel]
    noun = rng.choice(a["nouns"])
    adj = rng.choice(a[sentiment])
    shape = rng.randrange(4)
    pairs = [[noun, adj]]

    if shape == 0:
        words, tree = clause(noun, adj, True)
        text = " ".join(words) + " ."
        parse = f"(ROOT (S {tree[3:-1]} {leaf('.', '.')}))"
    elif shape == 1:
        noun2 = rng.choice([n for n in a["nouns"] if n != noun])
        adj2 = rng.choice(a[sentiment])
        w1, t1 = clause(noun, adj, True)
        w2, t2 = clause(noun2, adj2, False)
        text = " ".join(w1 + ["and"] + w2) + " ."
        parse = f"(ROOT (S {t1} {leaf('CC', 'and')} {t2} {leaf('.', '.')}))"
        pairs.append([noun2, adj2])
    elif shape == 2:
        place = rng.choice(info["landmarks"])
        minutes = rng.randint(2, 6)
        text = f"The {noun} was {adj} , {minutes} minutes from {place} ."
        parse = None
    else:
        detail = rng.choice(info["details"])
        w1, t1 = clause(noun, adj, True)
        positive = sentiment == "positive"
        tail = ("we loved " + detail if positive else rng.choice(COMPLAINTS)).split()
        tail_tree = ("(S (NP (PRP we)) (VP " + leaf("VBD", tail[1]) + " (NP "
                     + " ".join(leaf("NN", w) for w in tail[2:]) + ")))")
        conj = "and" if positive else "but"
        text = " ".join(w1 + [conj] + tail) + " ."
        parse = f"(ROOT (S {t1} {leaf('CC', conj)} {tail_tree} {leaf('.', '.')}))"
    record = {"text": text, "parse": parse,
              "absa": {"aspect": aspect, "sentiment": sentiment, "pairs": pairs}}
    return record


def review(rng, hotel, idx):
    mix = HOTELS[hotel]["mix"]
    sentences = []
    if rng.random() < 0.4:
        sentences.append({"text": rng.choice(FILLERS) + " .", "parse": None,
                          "absa": {"aspect": "general", "sentiment": "neutral", "pairs": []}})
    for aspect in rng.sample(sorted(ASPECTS), 3):
        sentiment = "positive" if rng.random() < mix[aspect] else "negative"
        sentences.append(sentence(rng, hotel, aspect, sentiment))
    return {"entity_id": hotel, "review_id": f"r{idx:02d}", "sentences": sentences}


def summary_lines(hotel):
    out = []
    for aspect, sentiment, pairs in SUMMARIES[hotel]:
        nouns = sorted({n for n, _ in pairs})
        adjs = " and ".join(a for _, a in pairs)
        text = f"The {' and '.join(nouns)} {'were' if len(nouns) > 1 else 'was'} {adjs} ."
        out.append({"entity_id": hotel, "text": text,
                    "absa": {"aspect": aspect, "sentiment": sentiment,
                             "pairs": [list(p) for p in pairs]}})
    return out


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default=str(Path(__file__).resolve().parent.parent / "data" / "toy"))
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    rng = random.Random(SEED)
    with open(out / "corpus.jsonl", "w") as f:
        for hotel in HOTELS:
            for i in range(20):
                f.write(json.dumps(review(rng, hotel, i)) + "\n")
    with open(out / "summaries.jsonl", "w") as f:
        for hotel in HOTELS:
            for line in summary_lines(hotel):
                f.write(json.dumps(line) + "\n")


if __name__ == "__main__":
    main()
