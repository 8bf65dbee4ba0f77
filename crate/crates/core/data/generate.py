"""Regenerates the bundled synthetic corpus and 300-d embedding file.

The embeddings are not GloVe vectors. Each word is a sum of a shared
offset, a syntactic-role direction, a topic direction (food or
technology, absent for neutral words) and small isotropic noise, so
that topical neighbours are close in cosine distance.

Usage: python3 generate.py  (writes next to this script)
"""
import os
import random

import numpy as np

HERE = os.path.dirname(os.path.abspath(__file__))
DIM = 300

# token -> (pos, role, topic)
WORDS = {
    # seen during training
    "man": ("noun", "agent", None),
    "woman": ("noun", "agent", None),
    "person": ("noun", "agent", None),
    "cooks": ("tverb", "verb", "food"),
    "debugs": ("tverb", "verb", "tech"),
    "prepares": ("tverb", "verb", None),
    "meal": ("noun", "thing", "food"),
    "soup": ("noun", "thing", "food"),
    "software": ("noun", "thing", "tech"),
    "application": ("noun", "thing", "tech"),
    "tasty": ("adj", "quality", "food"),
    "useful": ("adj", "quality", "tech"),
    # never seen during training
    "girl": ("noun", "agent", None),
    "boy": ("noun", "agent", None),
    "bakes": ("tverb", "verb", "food"),
    "compiles": ("tverb", "verb", "tech"),
    "bread": ("noun", "thing", "food"),
    "stew": ("noun", "thing", "food"),
    "code": ("noun", "thing", "tech"),
    "website": ("noun", "thing", "tech"),
    "delicious": ("adj", "quality", "food"),
    "efficient": ("adj", "quality", "tech"),
}
SEEN = list(WORDS)[:12]
UNSEEN = list(WORDS)[12:]

DISTRACTORS = [
    "river", "mountain", "tree", "cloud", "music", "guitar", "song", "car",
    "road", "train", "city", "house", "window", "door", "garden", "flower",
    "blue", "green", "quickly", "slowly", "walks", "sings", "reads", "writes",
    "book", "paper", "school", "teacher",
]


def unit(rng):
    v = rng.standard_normal(DIM)
    return v / np.linalg.norm(v)


def embeddings():
    rng = np.random.default_rng(2024)
    shared = unit(rng)
    roles = {r: unit(rng) for r in ["agent", "verb", "thing", "quality", "misc"]}
    topics = {t: unit(rng) for t in ["food", "tech", "nature", "art", "travel"]}
    vecs = {}
    for w, (_, role, topic) in WORDS.items():
        v = 0.6 * shared + 1.0 * roles[role] + 0.35 * unit(rng)
        if topic is not None:
            v += 1.6 * topics[topic]
        vecs[w] = v
    other = ["nature", "art", "travel"]
    for i, w in enumerate(DISTRACTORS):
        v = 0.6 * shared + 1.0 * roles["misc"] + 1.2 * topics[other[i % 3]] + 0.5 * unit(rng)
        vecs[w] = v
    return vecs


def sentence(subj, verb, adj, obj):
    words = [subj, verb] + ([adj] if adj else []) + [obj]
    text = " ".join(words)
    return text[0].upper() + text[1:] + "."


def combos(subjects, food_verbs, tech_verbs, food_objs, tech_objs, food_adj, tech_adj):
    out = []
    for s in subjects:
        for v in food_verbs:
            for o in food_objs:
                for a in [None] + food_adj:
                    out.append((1, sentence(s, v, a, o)))
        for v in tech_verbs:
            for o in tech_objs:
                for a in [None] + tech_adj:
                    out.append((0, sentence(s, v, a, o)))
    return out


def write_split(name, rows):
    with open(os.path.join(HERE, name), "w") as f:
        for label, text in rows:
            f.write(f"{label}\t{text}\n")


def main():
    vecs = embeddings()
    order = list(WORDS) + DISTRACTORS
    with open(os.path.join(HERE, "embeddings_synthetic_300d.txt"), "w") as f:
        for w in order:
            f.write(w + " " + " ".join(f"{x:.6f}" for x in vecs[w]) + "\n")

    with open(os.path.join(HERE, "lexicon.tsv"), "w") as f:
        for w, (pos, _, _) in WORDS.items():
            f.write(f"{w}\t{pos}\n")

    rng = random.Random(7)
    seen = combos(["man", "woman", "person"], ["cooks", "prepares"], ["debugs", "prepares"],
                  ["meal", "soup"], ["software", "application"], ["tasty"], ["useful"])
    rng.shuffle(seen)
    write_split("train.tsv", seen[:30])
    write_split("dev.tsv", seen[30:39])
    write_split("test.tsv", seen[39:48])

    unseen = combos(["girl", "boy"], ["bakes"], ["compiles"],
                    ["bread", "stew"], ["code", "website"], ["delicious"], ["efficient"])
    rng.shuffle(unseen)
    write_split("oov.tsv", unseen[:12])

    mixed = (
        combos(["man", "girl"], ["bakes"], ["compiles"], ["meal"], ["software"], ["delicious"], ["efficient"])
        + combos(["boy"], ["cooks"], ["debugs"], ["bread"], ["code"], ["tasty"], ["useful"])
    )
    rng.shuffle(mixed)
    write_split("redundancy.tsv", mixed[:12])


if __name__ == "__main__":
    main()
