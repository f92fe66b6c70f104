"""Worked examples used across the tests."""

from arceager.conll import Sentence
from arceager.transition import LEFT_ARC, REDUCE, RIGHT_ARC, SHIFT

FORMS = "I want to parse a sentence .".split()
TAGS = "PRP VBP TO VB DT NN .".split()
HEADS = [2, 0, 4, 2, 6, 4, 2]
LABELS = ["nsubj", "root", "aux", "xcomp", "det", "dobj", "punct"]

# (kind, label name) rows of the worked transition table
WORKED_ACTIONS = [
    (SHIFT, None), (LEFT_ARC, "nsubj"), (SHIFT, None), (SHIFT, None),
    (LEFT_ARC, "aux"), (RIGHT_ARC, "xcomp"), (SHIFT, None), (LEFT_ARC, "det"),
    (RIGHT_ARC, "dobj"), (REDUCE, None), (REDUCE, None), (RIGHT_ARC, "punct"),
    (REDUCE, None), (LEFT_ARC, "root"),
]

# arcs as (label, head, dependent); ROOT is position 8
WORKED_ARCS = {("nsubj", 2, 1), ("aux", 4, 3), ("xcomp", 2, 4), ("det", 6, 5),
                ("dobj", 4, 6), ("punct", 2, 7), ("root", 8, 2)}

# partial tree: aux(parse->to), dobj(parse->sentence), punct(want->.)
PARTIAL_HEADS = [-1, -1, 4, -1, -1, 4, 2]
PARTIAL_LABELS = [None, None, "aux", None, None, "dobj", "punct"]


def worked_sentence(with_tree=True) -> Sentence:
    if with_tree:
        return Sentence.from_lists(FORMS, TAGS, HEADS, LABELS)
    return Sentence.from_lists(FORMS, TAGS)


def partial_sentence() -> Sentence:
    return Sentence.from_lists(FORMS, TAGS, PARTIAL_HEADS, PARTIAL_LABELS)
