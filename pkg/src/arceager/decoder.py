"""Beam-search decoding, constrained decoding and corpus parsing."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from typing import List, NamedTuple, Optional, Sequence, TextIO

import numpy as np

from .conll import Sentence
from .oracles import Gold, kind_costs
from .transition import (LEFT_ARC, RIGHT_ARC, ActionSpace, Configuration, RootMode,
                         apply_kind, conll_heads, initial_configuration, is_terminal,
                         legal_kinds)

CARRY = -1  # pseudo action id for a finished item kept in the beam


class BeamItem:
    """A configuration with its cumulative score.

    The action history is recovered through parent links; `features` holds
    the feature keys of the parent configuration that scored `action`.
    """
    __slots__ = ("config", "score", "parent", "action", "features", "terminal")

    def __init__(self, config: Configuration, score: float = 0.0, parent=None,
                 action: int = CARRY, features=None):
        self.config = config
        self.score = score
        self.parent = parent
        self.action = action
        self.features = features
        self.terminal = is_terminal(config)

    @property
    def history(self) -> List[int]:
        out = []
        item = self
        while item.parent is not None:
            out.append(item.action)
            item = item.parent
        return out[::-1]


class Step(NamedTuple):
    items: list           # scored (non-terminal) items, row order
    keys: np.ndarray
    comps: list
    scores: np.ndarray    # (rows, actions)

    def row_of(self, item) -> int:
        for i, it in enumerate(self.items):
            if it is item:
                return i
        raise KeyError("item was not scored in this step")


class Searcher:
    """Beam primitives shared by decoding and training."""

    def __init__(self, extractor, space: ActionSpace):
        self.extractor = extractor
        self.space = space
        A = space.size
        self.kind_of = np.array([space.decode(a).kind for a in range(A)], dtype=np.intp)
        self.label_of = np.array([space.decode(a).label for a in range(A)], dtype=np.intp)
        self.legal_table = np.zeros((32, A), dtype=bool)
        for bits in range(32):
            for a in range(A):
                self.legal_table[bits, a] = bool(bits >> self.kind_of[a] & 1)

    def start(self, n: int, root: RootMode) -> BeamItem:
        return BeamItem(initial_configuration(n, root))

    def score(self, beam: Sequence[BeamItem], enc, weights, extra=()) -> Step:
        items = [it for it in beam if not it.terminal]
        items.extend(extra)
        if not items:
            return Step(items, np.zeros((0, 0), dtype=np.uint64), [], np.zeros((0, self.space.size)))
        keys, comps = self.extractor.batch([it.config for it in items], enc)
        scores = weights.score_rows(weights.rows(keys, comps))
        return Step(items, keys, comps, scores)

    def legal_mask(self, step: Step, constraint: Optional[Gold] = None):
        """Boolean (rows, actions) mask and a per-row flag telling whether the
        constraint set had to be relaxed for that row."""
        bits = [legal_kinds(it.config) for it in step.items]
        mask = self.legal_table[bits]
        relaxed = np.zeros(len(bits), dtype=bool)
        if constraint is not None:
            for r, it in enumerate(step.items):
                mask[r], relaxed[r] = self._constrained_row(it.config, constraint)
        return mask, relaxed

    def _constrained_row(self, c: Configuration, gold: Gold):
        space = self.space
        costs = kind_costs(c, gold)
        row = np.zeros(space.size, dtype=bool)
        best = min(cost for _, cost, _ in costs)
        for kind, cost, label in costs:
            if cost != best:
                continue
            ids = space.ids_for_kind(kind)
            if label is not None and kind in (LEFT_ARC, RIGHT_ARC):
                row[ids.start + label] = True
            else:
                row[ids.start:ids.stop] = True
        return row, best > 0

    def expand(self, beam: Sequence[BeamItem], step: Step, width: int, mask=None):
        """Top-`width` successors; ties go to the lower action id, then to
        the earlier parent. Returns the new beam and a map from
        (id(parent), action id) to the created item."""
        if mask is None:
            mask, _ = self.legal_mask(step)
        n_rows = len(step.items)
        rows_idx, acts = np.nonzero(mask[:n_rows]) if n_rows else (np.zeros(0, np.intp),) * 2
        base = np.array([it.score for it in step.items])
        cand_score = base[rows_idx] + step.scores[rows_idx, acts] if n_rows else np.zeros(0)
        # parent order = position in the current beam
        pos_in_beam = {id(it): i for i, it in enumerate(beam)}
        row_parent = np.array([pos_in_beam.get(id(it), len(beam)) for it in step.items],
                              dtype=np.intp)
        cand_parent = row_parent[rows_idx] if n_rows else np.zeros(0, np.intp)
        done = [i for i, it in enumerate(beam) if it.terminal]
        if done:
            cand_score = np.concatenate([cand_score, [beam[i].score for i in done]])
            acts = np.concatenate([acts, np.full(len(done), CARRY, dtype=np.intp)])
            rows_idx = np.concatenate([rows_idx, np.full(len(done), -1, dtype=np.intp)])
            cand_parent = np.concatenate([cand_parent, np.array(done, dtype=np.intp)])
        keep = cand_parent < len(beam)
        order = np.lexsort((cand_parent[keep], acts[keep], -cand_score[keep]))[:width]
        sel = np.flatnonzero(keep)[order]
        new_beam, chosen = [], {}
        for j in sel.tolist():
            a = int(acts[j])
            if a == CARRY:
                new_beam.append(beam[int(cand_parent[j])])
                continue
            r = int(rows_idx[j])
            parent = step.items[r]
            item = self._make(parent, step, r, a, float(cand_score[j]))
            new_beam.append(item)
            chosen[(id(parent), a)] = item
        return new_beam, chosen

    def _make(self, parent: BeamItem, step: Step, r: int, a: int, score: float) -> BeamItem:
        c = apply_kind(parent.config, int(self.kind_of[a]), int(self.label_of[a]))
        feats = (step.keys[r], step.comps[r] if step.comps else ())
        return BeamItem(c, score, parent, a, feats)

    def successor(self, item: BeamItem, step: Step, a: int) -> BeamItem:
        r = step.row_of(item)
        return self._make(item, step, r, a, item.score + float(step.scores[r, a]))


class Constraints(NamedTuple):
    """Required heads (CoNLL indexing, None = free) and optional labels."""
    heads: tuple
    labels: tuple

    @classmethod
    def from_sentence(cls, s: Sentence) -> "Constraints":
        heads = tuple(None if (h is None or h < 0) else h for h in s.heads)
        labels = tuple(l if h is not None else None for h, l in zip(heads, s.labels))
        return cls(heads, labels)

    @property
    def empty(self) -> bool:
        return all(h is None for h in self.heads)


class ParseResult(NamedTuple):
    heads: List[int]
    labels: List[Optional[str]]
    tree_score: float
    fallback_used: bool = False
    error: Optional[str] = None
    score: float = 0.0

    def apply_to(self, s: Sentence) -> Sentence:
        return s.with_parse(self.heads, self.labels)


def _constraint_gold(constraints: Constraints, model) -> Gold:
    al = model.alphabets
    labels = []
    for l in constraints.labels:
        lid = al.label_id(l) if (model.labeled and l is not None) else None
        labels.append(lid)
    return Gold.build(list(constraints.heads), labels, model.root)


def parse(s: Sentence, model, beam_width: Optional[int] = None,
          constraints: Optional[Constraints] = None) -> ParseResult:
    """Beam search with averaged weights; width 1 is greedy decoding."""
    n = len(s)
    if n == 0:
        raise ValueError("cannot parse an empty sentence")
    width = model.beam_width if beam_width is None else beam_width
    if width < 1:
        raise ValueError("beam width must be at least 1")
    if model.lowercase:
        s = s.lowercased()
    searcher = model.searcher
    weights = model.weights
    enc = searcher.extractor.encode(s)
    gold = None
    if constraints is not None and not constraints.empty:
        if len(constraints.heads) != n:
            raise ValueError("constraints do not match the sentence length")
        gold = _constraint_gold(constraints, model)
    beam = [searcher.start(n, model.root)]
    while not all(it.terminal for it in beam):
        step = searcher.score(beam, enc, weights)
        mask, _ = searcher.legal_mask(step, gold)
        beam, _ = searcher.expand(beam, step, width, mask)
    best = beam[0]
    c = best.config
    fallback = gold is not None and any(
        gold.heads[d] is not None and (c.heads[d] != gold.heads[d] or (
            gold.labels[d] is not None and c.labels[d] != gold.labels[d]))
        for d in range(1, n + 1))
    heads = conll_heads(c)
    labels = model.alphabets.labels
    out_labels = [labels[c.labels[d]] if model.labeled else None for d in range(1, n + 1)]
    return ParseResult(heads, out_labels, best.score / n, fallback, None, best.score)


def _parse_one(args):
    s, model, width, cons = args
    try:
        return parse(s, model, width, cons)
    except ValueError as e:
        return ParseResult([], [], 0.0, False, str(e))


def parse_corpus(sentences: Sequence[Sentence], model, beam_width: Optional[int] = None,
                 threads: int = 1, constraints: Optional[Sequence[Optional[Constraints]]] = None
                 ) -> List[ParseResult]:
    """Parse many sentences; results keep the input order whatever the
    thread count."""
    if threads < 1:
        raise ValueError("need at least one thread")
    cons = constraints if constraints is not None else [None] * len(sentences)
    jobs = [(s, model, beam_width, c) for s, c in zip(sentences, cons)]
    if threads == 1 or len(jobs) < 2:
        return [_parse_one(j) for j in jobs]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(_parse_one, jobs))


def write_scores(results: Sequence[ParseResult], stream: TextIO) -> None:
    """One length-normalized tree score per line."""
    for r in results:
        stream.write(f"{r.tree_score!r}\n")
