"""Static and dynamic oracles for the arc-eager system.

Action costs are computed arc by arc: a gold arc is either already built,
still individually reachable from the configuration, or lost. The cost of
an action is the number of gold arcs it turns from reachable into lost.
Arcs may be left unconstrained (head ``None``), which is how partial trees
are handled during constrained decoding.
"""

from __future__ import annotations

import random
from enum import Enum
from typing import Dict, Iterable, List, Mapping, NamedTuple, Optional, Sequence

from .transition import (LEFT_ARC, REDUCE, RIGHT_ARC, SHIFT, UNSHIFT, Action,
                         Configuration, RootMode, apply_kind, legal_kinds)


class OracleMode(str, Enum):
    STATIC = "static"
    DYNAMIC_RANDOM = "random"
    DYNAMIC_MAX_SCORING = "max"


class OracleError(RuntimeError):
    """The gold tree cannot be derived (typically: it is non-projective)."""


class Gold(NamedTuple):
    """Target arcs in configuration positions.

    ``heads[d]``/``labels[d]`` for d in 1..n; ``None`` means unconstrained.
    ``rightmost[h]`` is the rightmost gold dependent of h (or -1).
    """
    n: int
    heads: tuple
    labels: tuple
    rightmost: tuple

    @classmethod
    def build(cls, heads: Sequence[Optional[int]], labels: Sequence[Optional[int]],
              mode: RootMode = RootMode.FINAL) -> "Gold":
        """`heads` in CoNLL indexing (0 = root; None or -1 = unconstrained)."""
        n = len(heads)
        root = 0 if mode in (RootMode.INITIAL, "initial") else n + 1
        hs = [None] * (n + 3)
        ls = [None] * (n + 3)
        rightmost = [-1] * (n + 3)
        for d, (h, l) in enumerate(zip(heads, labels), 1):
            if h is None or h < 0:
                continue
            h = root if h == 0 else h
            hs[d] = h
            ls[d] = l
            if d > rightmost[h]:
                rightmost[h] = d
        return cls(n, tuple(hs), tuple(ls), tuple(rightmost))


def static_oracle(c: Configuration, gold: Gold) -> Action:
    """Deterministic gold action: left-arc, right-arc, reduce, shift."""
    none = c.n + 2
    f = c.front
    stack = c.stack
    s = stack[-1] if stack else none
    if s != none and f != none:
        if gold.heads[s] == f:
            action = Action(LEFT_ARC, gold.labels[s] or 0)
        elif f <= c.n and gold.heads[f] == s:
            action = Action(RIGHT_ARC, gold.labels[f] or 0)
        elif c.heads[s] != none and not _has_buffer_dependent(c, gold, s):
            action = Action(REDUCE)
        else:
            action = Action(SHIFT)
    elif s != none:
        action = Action(REDUCE)
    else:
        action = Action(SHIFT)
    if not legal_kinds(c) >> action.kind & 1:
        raise OracleError(f"static oracle stuck at {c!r}; is the tree projective?")
    return action


def _has_buffer_dependent(c: Configuration, gold: Gold, s: int) -> bool:
    if gold.rightmost[s] >= c.buf:
        return True
    u = c.unshifted
    return u != c.n + 2 and gold.heads[u] == s


def unreachable(c: Configuration, gold: Gold) -> int:
    """Number of gold arcs that can no longer be built from `c`."""
    n = c.n
    none = n + 2
    stack = c.stack
    pos = set(stack)
    heads = c.heads
    labels = c.labels
    buf, end, u = c.buf, c.end, c.unshifted
    lost = 0
    for d in range(1, n + 1):
        h = gold.heads[d]
        if h is None:
            continue
        hd = heads[d]
        if hd != none:
            gl = gold.labels[d]
            if hd != h or (gl is not None and labels[d] != gl):
                lost += 1
            continue
        if h == u or buf <= h <= end:
            continue
        if d in pos or h not in pos:
            lost += 1
    return lost


def _arc_label(gold: Gold, head: int, dep: int) -> Optional[int]:
    """Gold label if head->dep is a gold arc with a required label."""
    if gold.heads[dep] == head:
        return gold.labels[dep]
    return None


def kind_costs(c: Configuration, gold: Gold) -> List[tuple]:
    """(kind, cost, label) for each legal kind.

    For arc kinds, `label` is the required gold label when the arc is gold
    and labeled (any other label costs one more), otherwise ``None``
    meaning every label has the same cost.
    """
    base = unreachable(c, gold)
    bits = legal_kinds(c)
    out = []
    for kind in (SHIFT, RIGHT_ARC, LEFT_ARC, REDUCE, UNSHIFT):
        if not bits >> kind & 1:
            continue
        label = None
        if kind == RIGHT_ARC:
            label = _arc_label(gold, c.stack[-1], c.front)
        elif kind == LEFT_ARC:
            label = _arc_label(gold, c.front, c.stack[-1])
        succ = apply_kind(c, kind, label or 0)
        out.append((kind, unreachable(succ, gold) - base, label))
    return out


def action_costs(c: Configuration, gold: Gold, n_labels: int = 1) -> Dict[Action, int]:
    costs = {}
    for kind, cost, label in kind_costs(c, gold):
        if kind in (LEFT_ARC, RIGHT_ARC):
            for l in range(n_labels):
                extra = 1 if label is not None and l != label else 0
                costs[Action(kind, l)] = cost + extra
        else:
            costs[Action(kind)] = cost
    return costs


def zero_cost_actions(c: Configuration, gold: Gold, n_labels: int = 1) -> List[Action]:
    out = []
    for kind, cost, label in kind_costs(c, gold):
        if cost != 0:
            continue
        if kind in (LEFT_ARC, RIGHT_ARC):
            if label is not None:
                out.append(Action(kind, label))
            else:
                out.extend(Action(kind, l) for l in range(n_labels))
        else:
            out.append(Action(kind))
    if not out:
        raise OracleError(f"no zero-cost action at {c!r}")
    return out


def select_oracle(candidates: Iterable, scores: Optional[Mapping] = None,
                  mode: OracleMode = OracleMode.DYNAMIC_MAX_SCORING,
                  rng: Optional[random.Random] = None):
    """Pick one gold action among zero-cost candidates.

    Candidates must be orderable (action tuples or action ids); ties in the
    max-scoring mode go to the smallest candidate.
    """
    cands = sorted(candidates)
    if not cands:
        raise ValueError("no candidate actions")
    if len(cands) == 1:
        return cands[0]
    if mode == OracleMode.DYNAMIC_RANDOM:
        if rng is None:
            raise ValueError("random oracle selection needs an rng")
        return cands[rng.randrange(len(cands))]
    if mode == OracleMode.STATIC:
        return cands[0]
    best = cands[0]
    best_score = scores[best]
    for a in cands[1:]:
        if scores[a] > best_score:
            best, best_score = a, scores[a]
    return best
