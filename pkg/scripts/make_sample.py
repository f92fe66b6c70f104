"""Generate the bundled sample treebank and cluster file.

The sentences come from a small probabilistic grammar of English-like
clauses (subjects, objects, adjectives, prepositional phrases, auxiliaries,
adverbs, coordination and punctuation), so every tree is projective.
Usage: python scripts/make_sample.py [outdir]
"""

import random
import sys
from pathlib import Path

LEX = {
    "DT": ["the", "a", "this", "every", "some", "that"],
    "JJ": ["big", "small", "red", "old", "new", "quiet", "happy", "strange", "green", "long"],
    "NN": ["dog", "cat", "man", "woman", "house", "car", "book", "tree", "city", "river",
           "teacher", "child", "bird", "letter", "garden", "window", "song", "story"],
    "NNS": ["dogs", "cats", "people", "houses", "cars", "books", "trees", "cities",
            "children", "birds", "letters", "songs"],
    "NNP": ["John", "Mary", "Paris", "London", "Alice", "Bob"],
    "PRP": ["he", "she", "they", "we", "it", "I"],
    "VBD": ["saw", "liked", "found", "bought", "read", "wrote", "watched", "took", "made",
            "painted", "sold", "visited"],
    "VB": ["see", "like", "find", "buy", "read", "write", "watch", "take", "make", "visit"],
    "VBI": ["slept", "arrived", "laughed", "waited", "left", "smiled"],
    "MD": ["will", "can", "should", "might"],
    "IN": ["in", "on", "near", "with", "under", "behind", "from"],
    "RB": ["quickly", "often", "never", "slowly", "really", "yesterday"],
    "CC": ["and", "but", "or"],
    "TO": ["to"],
    "VBZ": ["wants", "tries", "hopes", "plans"],
}
PUNCT = [(".", "."), ("!", "."), ("?", ".")]


class Builder:
    def __init__(self, rng):
        self.rng = rng
        self.toks = []  # [form, tag, head(obj or None), label]

    def add(self, form, tag, label):
        node = [form, tag, None, label]
        self.toks.append(node)
        return node

    def word(self, tag, label):
        form = self.rng.choice(LEX[tag])
        return self.add(form, "VBD" if tag == "VBI" else tag, label)


def noun_phrase(b, label, depth):
    rng = b.rng
    r = rng.random()
    if r < 0.15:
        return [b.word("PRP", label)], None
    if r < 0.25:
        return [b.word("NNP", label)], None
    deps = []
    plural = rng.random() < 0.3
    if not plural or rng.random() < 0.5:
        deps.append(b.word("DT", "det"))
    for _ in range(rng.choice([0, 0, 1, 1, 2])):
        deps.append(b.word("JJ", "amod"))
    head = b.word("NNS" if plural else "NN", label)
    for d in deps:
        d[2] = head
    if depth < 2 and rng.random() < 0.3:
        pp = prep_phrase(b, depth + 1)
        pp[2] = head
    return [head], head


def prep_phrase(b, depth):
    p = b.word("IN", "prep")
    heads, _ = noun_phrase(b, "pobj", depth)
    heads[0][2] = p
    return p


def clause(b, depth):
    rng = b.rng
    subj, _ = noun_phrase(b, "nsubj", depth)
    pre = []
    if rng.random() < 0.25:
        pre.append(b.word("MD", "aux"))
    if rng.random() < 0.15:
        pre.append(b.word("RB", "advmod"))
    kind = rng.random()
    if kind < 0.2:
        verb = b.word("VBI", "root")
        objs = []
    elif kind < 0.35 and depth < 1:
        verb = b.word("VBZ", "root")
        to = b.word("TO", "aux")
        inner = b.word("VB", "xcomp")
        to[2] = inner
        inner[2] = verb
        obj, _ = noun_phrase(b, "dobj", depth + 1)
        obj[0][2] = inner
        objs = []
    else:
        verb = b.word("VB" if pre and pre[0][1] == "MD" else "VBD", "root")
        obj, _ = noun_phrase(b, "dobj", depth)
        objs = obj
    for t in subj + pre + objs:
        t[2] = verb
    if rng.random() < 0.35:
        pp = prep_phrase(b, depth + 1)
        pp[2] = verb
    if rng.random() < 0.15:
        adv = b.word("RB", "advmod")
        adv[2] = verb
    return verb


def sentence(rng):
    b = Builder(rng)
    verb = clause(b, 0)
    verb[3] = "root"
    if rng.random() < 0.2:
        comma = b.add(",", ",", "punct")
        comma[2] = verb
        cc = b.word("CC", "cc")
        cc[2] = verb
        v2 = clause(b, 1)
        v2[3] = "conj"
        v2[2] = verb
    form, tag = rng.choice(PUNCT)
    p = b.add(form, tag, "punct")
    p[2] = verb
    index = {id(t): i for i, t in enumerate(b.toks, 1)}
    rows = []
    for i, (f, t, h, l) in enumerate(b.toks, 1):
        head = 0 if h is None else index[id(h)]
        rows.append(f"{i}\t{f}\t_\t{t}\t{t}\t_\t{head}\t{l}\t_\t_")
    return "\n".join(rows) + "\n"


def clusters(rng):
    lines = []
    for ci, (tag, words) in enumerate(sorted(LEX.items())):
        prefix = format(ci, "05b")
        for w in words:
            bits = prefix + "".join(rng.choice("01") for _ in range(rng.randint(1, 4)))
            lines.append(f"{bits}\t{w}\t{rng.randint(1, 500)}")
            lines.append(f"{bits}\t{w.capitalize()}\t{rng.randint(1, 50)}")
    return "\n".join(lines) + "\n"


def main(out: Path, n_train=240, n_dev=60, seed=7):
    rng = random.Random(seed)
    out.mkdir(parents=True, exist_ok=True)
    for name, count in (("train.conll", n_train), ("dev.conll", n_dev)):
        with open(out / name, "w") as f:
            f.write("\n".join(sentence(rng) for _ in range(count)))
    (out / "clusters.txt").write_text(clusters(rng))


if __name__ == "__main__":
    main(Path(sys.argv[1]) if len(sys.argv) > 1 else
         Path(__file__).resolve().parents[1] / "src" / "arceager" / "data" / "sample")
