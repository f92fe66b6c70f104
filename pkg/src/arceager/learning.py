"""Averaged structured perceptron with beam-search training.

Weights are stored as one dense row of per-action weights per feature key,
with a dictionary mapping keys to rows. Averaging is lazy: every row keeps
the sum of its past values and the clock value at which that sum was last
brought up to date, so an update only touches the rows it changes.
"""

from __future__ import annotations

import logging
import random
import time
from dataclasses import dataclass
from enum import Enum
from itertools import repeat
from typing import Dict, Iterable, NamedTuple, Optional, Sequence

import numpy as np

from .features import SUPPRESSED
from .oracles import (Gold, OracleError, OracleMode, select_oracle, static_oracle,
                      zero_cost_actions)
from .transition import RootMode, apply_kind, initial_configuration, is_terminal

log = logging.getLogger(__name__)


def _lookup_rows(index: dict, keys: np.ndarray, comps) -> np.ndarray:
    """Map a (B, T) key array plus composite keys to weight rows (0 = unseen)."""
    get = index.get
    B = keys.shape[0]
    flat = keys.ravel().tolist()
    rows = np.fromiter(map(get, flat, repeat(0)), dtype=np.intp, count=len(flat))
    rows = rows.reshape(B, -1)
    if comps:
        extra = np.array([[get(k, 0) for k in row] for row in comps], dtype=np.intp)
        rows = np.concatenate([rows, extra], axis=1)
    return rows


class AveragedWeights:
    """Immutable weight snapshot used for decoding."""

    def __init__(self, index: dict, matrix: np.ndarray, clock: int = 0):
        self.index = index
        self.matrix = matrix
        self.clock = clock
        self.matrix.setflags(write=False)

    @property
    def n_actions(self) -> int:
        return self.matrix.shape[1]

    def rows(self, keys, comps) -> np.ndarray:
        return _lookup_rows(self.index, keys, comps)

    def score_rows(self, rows: np.ndarray) -> np.ndarray:
        return self.matrix[rows].sum(axis=1)

    def score(self, features: Iterable, action: int) -> float:
        total = 0.0
        for k in features:
            r = self.index.get(k)
            if r is not None:
                total += self.matrix[r, action]
        return float(total)

    def __eq__(self, other):
        return (isinstance(other, AveragedWeights) and self.index == other.index
                and np.array_equal(self.matrix, other.matrix))


class WeightVector:
    """Raw perceptron weights with lazy averaging.

    Row 0 is a permanent zero row standing for unseen features.
    """

    def __init__(self, n_actions: int, capacity: int = 4096):
        self.n_actions = n_actions
        self.index: Dict[object, int] = {}
        self.W = np.zeros((capacity, n_actions))
        self.acc = np.zeros((capacity, n_actions))
        self.last = np.zeros(capacity, dtype=np.int64)
        self.n_rows = 1
        self.clock = 0

    def __len__(self):
        return len(self.index)

    def _grow(self, need: int) -> None:
        cap = self.W.shape[0]
        if need <= cap:
            return
        while cap < need:
            cap *= 2
        for name in ("W", "acc"):
            old = getattr(self, name)
            new = np.zeros((cap, self.n_actions))
            new[:old.shape[0]] = old
            setattr(self, name, new)
        last = np.zeros(cap, dtype=np.int64)
        last[:self.last.shape[0]] = self.last
        self.last = last

    def _row(self, key) -> int:
        r = self.index.get(key)
        if r is None:
            r = self.n_rows
            self._grow(r + 1)
            self.index[key] = r
            self.n_rows += 1
        return r

    def rows(self, keys, comps) -> np.ndarray:
        return _lookup_rows(self.index, keys, comps)

    def score_rows(self, rows: np.ndarray, averaged: bool = False) -> np.ndarray:
        if not averaged:
            return self.W[rows].sum(axis=1)
        return self._averaged_rows(rows).sum(axis=1)

    def _averaged_rows(self, rows) -> np.ndarray:
        if self.clock == 0:
            return self.W[rows]
        gap = (self.clock - self.last[rows])[..., None]
        return (self.acc[rows] + self.W[rows] * gap) / self.clock

    def score(self, features: Iterable, action: int, averaged: bool = False) -> float:
        rows = [self.index[k] for k in features if k in self.index]
        if not rows:
            return 0.0
        rows = np.array(rows, dtype=np.intp)
        values = self._averaged_rows(rows) if averaged else self.W[rows]
        return float(values[:, action].sum())

    def update(self, deltas: Dict[tuple, float]) -> None:
        """Apply one update event: `deltas` maps (key, action) to a change."""
        items = [(k, a, v) for (k, a), v in deltas.items() if v != 0 and k != SUPPRESSED]
        self.clock += 1
        if not items:
            return
        rows = np.fromiter((self._row(k) for k, _, _ in items), dtype=np.intp, count=len(items))
        acts = np.fromiter((a for _, a, _ in items), dtype=np.intp, count=len(items))
        vals = np.fromiter((v for _, _, v in items), dtype=float, count=len(items))
        touched = np.unique(rows)
        prev = self.clock - 1
        self.acc[touched] += self.W[touched] * (prev - self.last[touched])[:, None]
        self.last[touched] = prev
        np.add.at(self.W, (rows, acts), vals)

    def averaged(self) -> AveragedWeights:
        """Averaged snapshot; the raw weights are left untouched."""
        n = self.n_rows
        if self.clock == 0:
            matrix = self.W[:n].copy()
        else:
            gap = (self.clock - self.last[:n])[:, None]
            matrix = (self.acc[:n] + self.W[:n] * gap) / self.clock
        return AveragedWeights(dict(self.index), matrix, self.clock)

    def raw(self) -> AveragedWeights:
        return AveragedWeights(dict(self.index), self.W[:self.n_rows].copy(), self.clock)


def finalize(w: WeightVector) -> AveragedWeights:
    return w.averaged()


class UpdateStrategy(str, Enum):
    MAX_VIOLATION = "max_violation"
    EARLY = "early"


@dataclass
class TrainConfig:
    beam_width: int = 64
    iterations: int = 20
    update: UpdateStrategy = UpdateStrategy.MAX_VIOLATION
    oracle: OracleMode = OracleMode.DYNAMIC_MAX_SCORING
    labeled: bool = True
    lowercase: bool = False
    root: RootMode = RootMode.FINAL
    threads: int = 8
    seed: int = 1
    basic: bool = False
    shuffle: bool = True

    def __post_init__(self):
        if self.beam_width < 1:
            raise ValueError("beam width must be at least 1")
        if self.iterations < 1:
            raise ValueError("need at least one iteration")
        if self.threads < 1:
            raise ValueError("need at least one thread")
        self.update = UpdateStrategy(self.update)
        self.oracle = OracleMode(self.oracle)
        self.root = RootMode(self.root)

    def as_dict(self) -> dict:
        return {"beam_width": self.beam_width, "iterations": self.iterations,
                "update": self.update.value, "oracle": self.oracle.value,
                "labeled": self.labeled, "lowercase": self.lowercase,
                "root": self.root.value, "threads": self.threads, "seed": self.seed,
                "basic": self.basic, "shuffle": self.shuffle}


def find_violation(best_scores: Sequence[float], gold_scores: Sequence[float],
                   gold_in_beam: Sequence[bool], strategy: UpdateStrategy,
                   final_correct: bool) -> Optional[int]:
    """Number of steps to update on (1-based prefix length), or None.

    `final_correct` says whether the top item after the last recorded step
    already equals the gold derivation.
    """
    steps = len(best_scores)
    if steps == 0:
        return None
    if UpdateStrategy(strategy) == UpdateStrategy.EARLY:
        for t, inside in enumerate(gold_in_beam):
            if not inside:
                return t + 1
        return None if final_correct else steps
    best_t, best_gap = None, 0.0
    for t in range(steps):
        gap = best_scores[t] - gold_scores[t]
        if gap > best_gap:
            best_t, best_gap = t, gap
    if best_t is not None:
        return best_t + 1
    return None if final_correct else steps


class EpochStats(NamedTuple):
    sentences: int
    updates: int
    skipped: int
    seconds: float


def gold_for(sentence, alphabets, root: RootMode, labeled: bool) -> Gold:
    labels = [alphabets.label_id(l) if labeled else 0 for l in sentence.labels]
    labels = [0 if l is None else l for l in labels]
    return Gold.build(sentence.heads, labels, root)


def derivable(gold: Gold, root: RootMode) -> bool:
    """True iff the static oracle rebuilds the gold tree exactly."""
    c = initial_configuration(gold.n, root)
    try:
        while not is_terminal(c):
            a = static_oracle(c, gold)
            c = apply_kind(c, a.kind, a.label)
    except OracleError:
        return False
    return all(c.heads[d] == gold.heads[d] and c.labels[d] == gold.labels[d]
               for d in range(1, gold.n + 1))


class TrainingInstance(NamedTuple):
    enc: object
    gold: Gold


class Trainer:
    """Runs beam-search perceptron training over encoded instances."""

    def __init__(self, extractor, space, cfg: TrainConfig, weights: Optional[WeightVector] = None):
        from .decoder import Searcher
        self.cfg = cfg
        self.space = space
        self.weights = weights or WeightVector(space.size)
        self.searcher = Searcher(extractor, space)
        self.rng = random.Random(cfg.seed)

    def prepare(self, sentences, alphabets):
        """Encode training sentences, dropping those that cannot be derived."""
        fx = self.searcher.extractor
        out, skipped = [], 0
        for s in sentences:
            if len(s) == 0 or not s.has_full_tree():
                skipped += 1
                continue
            if self.cfg.lowercase:
                s = s.lowercased()
            gold = gold_for(s, alphabets, self.cfg.root, self.cfg.labeled)
            if not derivable(gold, self.cfg.root):
                skipped += 1
                continue
            out.append(TrainingInstance(fx.encode(s), gold))
        return out, skipped

    def train_epoch(self, data: Sequence[TrainingInstance]) -> EpochStats:
        start = time.perf_counter()
        order = list(range(len(data)))
        if self.cfg.shuffle:
            self.rng.shuffle(order)
        updates = 0
        for i in order:
            updates += self.train_sentence(data[i])
        return EpochStats(len(data), updates, 0, time.perf_counter() - start)

    def _gold_action(self, c, gold: Gold, scores: np.ndarray) -> int:
        space = self.space
        if self.cfg.oracle == OracleMode.STATIC:
            return space.encode(static_oracle(c, gold))
        ids = [space.encode(a) for a in zero_cost_actions(c, gold, space.n_labels)]
        return select_oracle(ids, scores, self.cfg.oracle, self.rng)

    def train_sentence(self, inst: TrainingInstance) -> int:
        """One beam-search pass with gold tracking; returns 1 if an update happened."""
        cfg = self.cfg
        searcher = self.searcher
        gold = inst.gold
        w = self.weights
        beam = [searcher.start(gold.n, cfg.root)]
        g = beam[0]
        g_in = True
        best_scores, gold_scores, inside, best_items, gold_items = [], [], [], [], []
        while True:
            g_done = is_terminal(g.config)
            if g_done and all(it.terminal for it in beam):
                break
            extra = [] if (g_in or g_done) else [g]
            step = searcher.score(beam, inst.enc, w, extra)
            ga = None
            if not g_done:
                row = step.row_of(g)
                ga = self._gold_action(g.config, gold, step.scores[row])
            new_beam, chosen = searcher.expand(beam, step, cfg.beam_width)
            if not g_done:
                succ = chosen.get((id(g), ga)) if g_in else None
                g = succ if succ is not None else searcher.successor(g, step, ga)
            g_in = any(it is g for it in new_beam)
            beam = new_beam
            best_scores.append(beam[0].score)
            gold_scores.append(g.score)
            inside.append(g_in)
            best_items.append(beam[0])
            gold_items.append(g)
            if cfg.update == UpdateStrategy.EARLY and not g_in:
                break
        top = beam[0]
        final_correct = top is g or (top.terminal and is_terminal(g.config)
                                     and _same_tree(top.config, g.config))
        t = find_violation(best_scores, gold_scores, inside, cfg.update, final_correct)
        if t is None:
            return 0
        pred, gitem = best_items[t - 1], gold_items[t - 1]
        if pred is gitem:
            return 0
        w.update(_deltas(gitem, pred))
        return 1


def _same_tree(a, b) -> bool:
    return a.heads == b.heads and a.labels == b.labels


def _chain(item) -> list:
    out = []
    while item.parent is not None:
        out.append(item)
        item = item.parent
    return out


def _deltas(gold_item, pred_item) -> Dict[tuple, float]:
    """+1 on the gold prefix features, -1 on the predicted prefix features,
    skipping the ancestors both derivations share."""
    gold_chain, pred_chain = _chain(gold_item), _chain(pred_item)
    gold_ids = {id(it) for it in gold_chain}
    pred_ids = {id(it) for it in pred_chain}
    deltas: Dict[tuple, float] = {}
    for sign, chain, other in ((1.0, gold_chain, pred_ids), (-1.0, pred_chain, gold_ids)):
        for it in chain:
            if id(it) in other:
                break
            keys, comps = it.features
            a = it.action
            for k in keys.tolist():
                if k != SUPPRESSED:
                    deltas[(k, a)] = deltas.get((k, a), 0.0) + sign
            for k in comps:
                if k != SUPPRESSED:
                    deltas[(k, a)] = deltas.get((k, a), 0.0) + sign
    return deltas
