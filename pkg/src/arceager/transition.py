"""Arc-eager transition system with an optional unshift action.

Token positions inside a configuration are 1..n for words. The artificial
ROOT sits at n+1 when the root is sentence-final (the default) and at 0 when
it is sentence-initial; position n+2 is a null sentinel meaning "nothing"
(no head, empty slot), which keeps feature lookups branch-free.

Every complete derivation yields a tree rooted at ROOT (ROOT may take
several dependents). With a final ROOT this holds by construction. With an
initial ROOT the buffer can run out while headless words remain on the
stack; unshift moves such a word back to the buffer so it can be attached.
"""

from __future__ import annotations

from enum import Enum
from typing import List, NamedTuple, Optional, Sequence

SHIFT, RIGHT_ARC, LEFT_ARC, REDUCE, UNSHIFT = range(5)
KIND_NAMES = ("SHIFT", "RIGHT_ARC", "LEFT_ARC", "REDUCE", "UNSHIFT")


class RootMode(str, Enum):
    FINAL = "final"
    INITIAL = "initial"


class TransitionError(RuntimeError):
    """An action was applied where it is not permitted."""


class Action(NamedTuple):
    kind: int
    label: int = 0

    def __repr__(self):
        if self.kind in (LEFT_ARC, RIGHT_ARC):
            return f"{KIND_NAMES[self.kind]}({self.label})"
        return KIND_NAMES[self.kind]


class ActionSpace:
    """Dense integer ids for labeled actions.

    Ids follow the tie-breaking order SHIFT < RIGHT_ARC(l) < LEFT_ARC(l) <
    REDUCE < UNSHIFT, with labels ascending inside each arc block.
    """

    def __init__(self, n_labels: int):
        if n_labels < 1:
            raise ValueError("need at least one label")
        self.n_labels = n_labels
        self.size = 2 * n_labels + 3
        self.reduce_id = 2 * n_labels + 1
        self.unshift_id = 2 * n_labels + 2

    def encode(self, action: Action) -> int:
        kind, label = action
        if kind == SHIFT:
            return 0
        if kind == RIGHT_ARC:
            return 1 + label
        if kind == LEFT_ARC:
            return 1 + self.n_labels + label
        if kind == REDUCE:
            return self.reduce_id
        return self.unshift_id

    def decode(self, action_id: int) -> Action:
        L = self.n_labels
        if action_id == 0:
            return Action(SHIFT)
        if action_id <= L:
            return Action(RIGHT_ARC, action_id - 1)
        if action_id <= 2 * L:
            return Action(LEFT_ARC, action_id - 1 - L)
        if action_id == self.reduce_id:
            return Action(REDUCE)
        if action_id == self.unshift_id:
            return Action(UNSHIFT)
        raise ValueError(f"action id {action_id} out of range")

    def kind_of(self, action_id: int) -> int:
        return self.decode(action_id).kind

    def ids_for_kind(self, kind: int) -> range:
        L = self.n_labels
        if kind == SHIFT:
            return range(0, 1)
        if kind == RIGHT_ARC:
            return range(1, 1 + L)
        if kind == LEFT_ARC:
            return range(1 + L, 1 + 2 * L)
        if kind == REDUCE:
            return range(self.reduce_id, self.reduce_id + 1)
        return range(self.unshift_id, self.unshift_id + 1)


class DepRecord(NamedTuple):
    """Dependents bookkeeping for one token, used by the feature extractor."""
    l1: int   # leftmost dependent
    l2: int   # second leftmost
    r1: int   # rightmost dependent
    r2: int   # second rightmost
    lval: int
    rval: int
    lset: int  # bitmask of left dependent label ids
    rset: int


class Configuration:
    __slots__ = ("n", "initial", "stack", "buf", "unshifted", "flag",
                 "heads", "labels", "deps")

    @property
    def none(self) -> int:
        return self.n + 2

    @property
    def root(self) -> int:
        return 0 if self.initial else self.n + 1

    @property
    def end(self) -> int:
        """Last position of the fresh buffer (ROOT included when final)."""
        return self.n if self.initial else self.n + 1

    @property
    def front(self) -> int:
        if self.unshifted != self.n + 2:
            return self.unshifted
        if self.buf <= self.end:
            return self.buf
        return self.n + 2

    @property
    def buffer(self) -> List[int]:
        out = [] if self.unshifted == self.n + 2 else [self.unshifted]
        out.extend(range(self.buf, self.end + 1))
        return out

    def in_buffer(self, t: int) -> bool:
        return t == self.unshifted or self.buf <= t <= self.end

    def head_of(self, t: int) -> Optional[int]:
        h = self.heads[t]
        return None if h == self.n + 2 else h

    def arcs(self) -> dict:
        """dependent -> (head, label id) for every attached word."""
        none = self.n + 2
        return {d: (self.heads[d], self.labels[d])
                for d in range(1, self.n + 1) if self.heads[d] != none}

    def signature(self):
        return (self.stack, self.buf, self.unshifted, self.flag, self.heads, self.labels)

    def __eq__(self, other):
        return isinstance(other, Configuration) and self.signature() == other.signature()

    def __hash__(self):
        return hash(self.signature())

    def __repr__(self):
        return (f"Configuration(stack={list(self.stack)}, buffer={self.buffer}, "
                f"arcs={self.arcs()})")


def _empty_record(none: int) -> DepRecord:
    return DepRecord(none, none, none, none, 0, 0, 0, 0)


def initial_configuration(n: int, mode: RootMode = RootMode.FINAL) -> Configuration:
    """Start state for an n-word sentence."""
    if n < 1:
        raise ValueError("cannot parse an empty sentence")
    c = Configuration.__new__(Configuration)
    none = n + 2
    c.n = n
    c.initial = mode == RootMode.INITIAL or mode == "initial"
    c.stack = (0,) if c.initial else ()
    c.buf = 1
    c.unshifted = none
    c.flag = False
    c.heads = (none,) * (n + 3)
    c.labels = (0,) * (n + 3)
    c.deps = (_empty_record(none),) * (n + 3)
    return c


def is_terminal(c: Configuration) -> bool:
    if c.initial:
        return c.buf > c.n and c.unshifted == c.n + 2 and len(c.stack) == 1
    return not c.stack and c.buf == c.n + 1


def legal_kinds(c: Configuration) -> int:
    """Bitmask over action kinds (bit k set iff kind k is permitted)."""
    n = c.n
    none = n + 2
    stack = c.stack
    heads = c.heads
    bits = 0
    if c.initial:
        s = stack[-1]
        if c.unshifted != none or c.buf <= n:
            if c.unshifted == none and not c.flag:
                bits |= 1 << SHIFT
            bits |= 1 << RIGHT_ARC
            if s != 0:
                bits |= 1 << (LEFT_ARC if heads[s] == none else REDUCE)
        elif s != 0:
            if heads[s] != none:
                bits |= 1 << REDUCE
            elif c.flag:
                bits |= 1 << UNSHIFT
        return bits
    if c.buf <= n:
        bits |= 1 << SHIFT
        if stack:
            bits |= 1 << RIGHT_ARC
    if stack:
        bits |= 1 << (LEFT_ARC if heads[stack[-1]] == none else REDUCE)
    return bits


def legal_actions(c: Configuration, n_labels: int = 1) -> List[Action]:
    if is_terminal(c):
        raise TransitionError("no actions are legal in a terminal configuration")
    bits = legal_kinds(c)
    out = []
    for kind in range(5):
        if bits >> kind & 1:
            if kind in (LEFT_ARC, RIGHT_ARC):
                out.extend(Action(kind, l) for l in range(n_labels))
            else:
                out.append(Action(kind))
    return out


def _copy(c: Configuration) -> Configuration:
    d = Configuration.__new__(Configuration)
    d.n = c.n
    d.initial = c.initial
    d.stack = c.stack
    d.buf = c.buf
    d.unshifted = c.unshifted
    d.flag = c.flag
    d.heads = c.heads
    d.labels = c.labels
    d.deps = c.deps
    return d


def _attach(d: Configuration, head: int, dep: int, label: int) -> None:
    heads = list(d.heads)
    heads[dep] = head
    d.heads = tuple(heads)
    labels = list(d.labels)
    labels[dep] = label
    d.labels = tuple(labels)
    deps = list(d.deps)
    none = d.n + 2
    l1, l2, r1, r2, lval, rval, lset, rset = deps[head]
    if dep < head:
        if l1 == none or dep < l1:
            l1, l2 = dep, l1
        elif l2 == none or dep < l2:
            l2 = dep
        lval += 1
        lset |= 1 << label
    else:
        if r1 == none or dep > r1:
            r1, r2 = dep, r1
        elif r2 == none or dep > r2:
            r2 = dep
        rval += 1
        rset |= 1 << label
    deps[head] = DepRecord(l1, l2, r1, r2, lval, rval, lset, rset)
    d.deps = tuple(deps)


def _advance(d: Configuration) -> None:
    """Remove the buffer front."""
    none = d.n + 2
    if d.unshifted != none:
        d.unshifted = none
    else:
        d.buf += 1
    if d.initial and d.buf > d.n and d.unshifted == none:
        d.flag = True


def apply_kind(c: Configuration, kind: int, label: int = 0) -> Configuration:
    """Successor configuration; the caller guarantees legality."""
    d = _copy(c)
    if kind == SHIFT:
        f = c.front
        _advance(d)
        d.stack = c.stack + (f,)
    elif kind == RIGHT_ARC:
        f = c.front
        _attach(d, c.stack[-1], f, label)
        _advance(d)
        d.stack = c.stack + (f,)
    elif kind == LEFT_ARC:
        _attach(d, c.front, c.stack[-1], label)
        d.stack = c.stack[:-1]
    elif kind == REDUCE:
        d.stack = c.stack[:-1]
    else:
        d.unshifted = c.stack[-1]
        d.stack = c.stack[:-1]
    return d


def apply(c: Configuration, action: Action) -> Configuration:
    """Checked transition."""
    if is_terminal(c) or not legal_kinds(c) >> action.kind & 1:
        raise TransitionError(f"{action!r} is not legal in {c!r}")
    return apply_kind(c, action.kind, action.label)


def internal_heads(heads: Sequence[int], mode: RootMode) -> List[int]:
    """Map CoNLL heads (0 = root) to configuration positions."""
    n = len(heads)
    root = 0 if mode in (RootMode.INITIAL, "initial") else n + 1
    return [root if h == 0 else h for h in heads]


def conll_heads(c: Configuration) -> List[Optional[int]]:
    """Heads of words 1..n in CoNLL indexing (0 = root, None = unattached)."""
    root = c.root
    none = c.n + 2
    out = []
    for d in range(1, c.n + 1):
        h = c.heads[d]
        out.append(None if h == none else (0 if h == root else h))
    return out


def is_projective(heads: Sequence[Optional[int]], mode: RootMode = RootMode.FINAL) -> bool:
    """Crossing-arc test on a complete tree given in CoNLL indexing.

    Root arcs are anchored at the ROOT position of `mode`. The choice only
    matters when several words attach to the root.
    """
    n = len(heads)
    if any(h is None or h < 0 for h in heads):
        raise ValueError("projectivity needs a complete tree")
    spans = []
    for d, h in enumerate(heads, 1):
        if h == 0:
            h = 0 if mode in (RootMode.INITIAL, "initial") else n + 1
        spans.append((min(h, d), max(h, d)))
    for i, (a, b) in enumerate(spans):
        for c, d in spans[i + 1:]:
            if a < c < b < d or c < a < d < b:
                return False
    return True
