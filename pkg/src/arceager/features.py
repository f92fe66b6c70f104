"""Feature templates and extraction.

Context positions follow the usual shift-reduce naming: S0 is the stack
top, N0..N2 the first buffer items, S0h/S0h2 the head and grand-head of S0,
S0l/S0l2 and S0r/S0r2 its leftmost and rightmost dependents, N0l/N0l2 the
leftmost dependents of N0.

Most templates are packed exactly into 64-bit integers: the template id
takes the top 8 bits and the arguments are laid out below it with fixed
bit widths. Templates that pair a dependent-label set with a word or tag
are kept as composite tuple keys because a label set does not fit a fixed
width. Key 0 is reserved for "suppressed" (a cluster template fired on a
word that has no cluster) and never receives weight.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Dict, Iterable, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from .conll import ClusterLexicon, Sentence
from .transition import Configuration, RootMode, is_terminal

MANIFEST_VERSION = 1

NULL, UNKNOWN, ROOT = 0, 1, 2
FIRST_ID = 3
SUPPRESSED = 0
TEMPLATE_BITS = 8
ARG_BITS = 64 - TEMPLATE_BITS

# Bit budget per argument kind.
WIDTHS = {
    "w": 20,   # word
    "p": 8,    # POS tag
    "l": 8,    # arc label (0 null, 1 headless, 2+ label id)
    "c": 13,   # full cluster id
    "p4": 7,   # 4-bit cluster prefix
    "p6": 7,   # 6-bit cluster prefix
    "d": 3,    # distance bucket
    "vl": 3,   # left valency
    "vr": 3,   # right valency
}

POSITIONS = ("S0", "N0", "N1", "N2", "S0h", "S0h2", "S0l", "S0l2",
             "S0r", "S0r2", "N0l", "N0l2")
_POS_INDEX = {p: i for i, p in enumerate(POSITIONS)}
_TOKEN_ATTRS = ("w", "p", "l", "c", "p4", "p6")
# scalar columns appended after the per-position attribute block
_SCALARS = ("d", "vl", "vr", "N0vl")
_CLUSTER_ATTRS = ("c", "p4", "p6")


class FeatureSet(str, Enum):
    BASIC = "basic"
    EXTENDED = "extended"


@dataclass(frozen=True)
class FeatureSetMode:
    feature_set: FeatureSet = FeatureSet.EXTENDED
    with_clusters: bool = False


def _t(spec: str) -> Tuple[Tuple[str, str], ...]:
    """'S0.w N0.p' -> (('S0','w'), ('N0','p'))"""
    return tuple(tuple(part.split(".")) for part in spec.split())


BASIC_TEMPLATES = [
    # single words
    ("S0wp", "S0.w S0.p"), ("S0w", "S0.w"), ("S0p", "S0.p"),
    ("N0wp", "N0.w N0.p"), ("N0w", "N0.w"), ("N0p", "N0.p"),
    ("N1wp", "N1.w N1.p"), ("N1w", "N1.w"), ("N1p", "N1.p"),
    ("N2wp", "N2.w N2.p"), ("N2w", "N2.w"), ("N2p", "N2.p"),
    # word pairs
    ("S0wpN0wp", "S0.w S0.p N0.w N0.p"), ("S0wpN0w", "S0.w S0.p N0.w"),
    ("S0wN0wp", "S0.w N0.w N0.p"), ("S0wpN0p", "S0.w S0.p N0.p"),
    ("S0pN0wp", "S0.p N0.w N0.p"), ("S0wN0w", "S0.w N0.w"),
    ("S0pN0p", "S0.p N0.p"), ("N0pN1p", "N0.p N1.p"),
    # three words
    ("N0pN1pN2p", "N0.p N1.p N2.p"), ("S0pN0pN1p", "S0.p N0.p N1.p"),
    ("S0hpS0pN0p", "S0h.p S0.p N0.p"), ("S0pS0lpN0p", "S0.p S0l.p N0.p"),
    ("S0pS0rpN0p", "S0.p S0r.p N0.p"), ("S0pN0pN0lp", "S0.p N0.p N0l.p"),
]

EXTENDED_TEMPLATES = [
    # distance
    ("S0wd", "S0.w _.d"), ("S0pd", "S0.p _.d"), ("N0wd", "N0.w _.d"),
    ("N0pd", "N0.p _.d"), ("S0wN0wd", "S0.w N0.w _.d"), ("S0pN0pd", "S0.p N0.p _.d"),
    # valency
    ("S0wvr", "S0.w _.vr"), ("S0pvr", "S0.p _.vr"), ("S0wvl", "S0.w _.vl"),
    ("S0pvl", "S0.p _.vl"), ("N0wvl", "N0.w _.N0vl"), ("N0pvl", "N0.p _.N0vl"),
    # unigram context
    ("S0hw", "S0h.w"), ("S0hp", "S0h.p"), ("S0l", "S0.l"),
    ("S0lw", "S0l.w"), ("S0lp", "S0l.p"), ("S0ll", "S0l.l"),
    ("S0rw", "S0r.w"), ("S0rp", "S0r.p"), ("S0rl", "S0r.l"),
    ("N0lw", "N0l.w"), ("N0lp", "N0l.p"), ("N0ll", "N0l.l"),
    # third order
    ("S0h2w", "S0h2.w"), ("S0h2p", "S0h2.p"), ("S0hl", "S0h.l"),
    ("S0l2w", "S0l2.w"), ("S0l2p", "S0l2.p"), ("S0l2l", "S0l2.l"),
    ("S0r2w", "S0r2.w"), ("S0r2p", "S0r2.p"), ("S0r2l", "S0r2.l"),
    ("N0l2w", "N0l2.w"), ("N0l2p", "N0l2.p"), ("N0l2l", "N0l2.l"),
    ("S0pS0lpS0l2p", "S0.p S0l.p S0l2.p"), ("S0pS0rpS0r2p", "S0.p S0r.p S0r2.p"),
    ("S0pS0hpS0h2p", "S0.p S0h.p S0h2.p"), ("N0pN0lpN0l2p", "N0.p N0l.p N0l2.p"),
]

# (name, lexical slot, which label set): composite keys
LABEL_SET_TEMPLATES = [
    ("S0wsr", ("S0", "w"), "S0r"), ("S0psr", ("S0", "p"), "S0r"),
    ("S0wsl", ("S0", "w"), "S0l"), ("S0psl", ("S0", "p"), "S0l"),
    ("N0wsl", ("N0", "w"), "N0l"), ("N0psl", ("N0", "p"), "N0l"),
]
_LABEL_SETS = ("S0r", "S0l", "N0l")


class Template(NamedTuple):
    tid: int
    name: str
    slots: tuple          # ((position or "_", attr), ...)
    suppress: tuple = ()  # slot indices whose zero value suppresses the feature


class CompositeTemplate(NamedTuple):
    tid: int
    name: str
    slot: tuple           # (position, attr)
    label_set: str
    suppress: bool = False


def _cluster_variants(name: str, slots: tuple):
    """One variant per S0/N0 slot: words get the full cluster id, tags get
    the 4- and 6-bit prefixes."""
    for i, (pos, attr) in enumerate(slots):
        if pos not in ("S0", "N0"):
            continue
        subs = ("c",) if attr == "w" else ("p4", "p6") if attr == "p" else ()
        for sub in subs:
            new = slots[:i] + ((pos, sub),) + slots[i + 1:]
            yield f"{name}[{pos}.{sub}]", new, i


@dataclass(frozen=True)
class Manifest:
    """Frozen template inventory for a feature mode."""
    mode: FeatureSetMode
    templates: tuple
    composites: tuple

    @classmethod
    def build(cls, mode: FeatureSetMode) -> "Manifest":
        groups = list(BASIC_TEMPLATES)
        extended = mode.feature_set == FeatureSet.EXTENDED
        if extended:
            groups += EXTENDED_TEMPLATES
        # Ids are handed out in layers (basic, extended, label sets, cluster
        # variants) so every smaller inventory keeps its ids in a larger one.
        plain = [(name, _t(spec), ()) for name, spec in groups]
        comp = [(name, slot, ls, False) for name, slot, ls in LABEL_SET_TEMPLATES] \
            if extended else []
        if mode.with_clusters:
            for name, spec in groups:
                for vname, vslots, i in _cluster_variants(name, _t(spec)):
                    plain.append((vname, vslots, (i,)))
            for name, slot, ls, _ in list(comp):
                for vname, vslots, _ in _cluster_variants(name, (slot,)):
                    comp.append((vname, vslots[0], ls, True))
        n_base = len(groups)
        order = ([("t", x) for x in plain[:n_base]] + [("c", x) for x in comp if not x[3]]
                 + [("t", x) for x in plain[n_base:]] + [("c", x) for x in comp if x[3]])
        templates, composites = [], []
        tid = 1
        for kind, x in order:
            if kind == "t":
                templates.append(Template(tid, *x))
            else:
                composites.append(CompositeTemplate(tid, *x))
            tid += 1
        if tid >= 1 << TEMPLATE_BITS:
            raise ValueError("too many templates for the template id budget")
        for t in templates:
            if sum(WIDTHS[_attr_kind(a)] for _, a in t.slots) > ARG_BITS:
                raise ValueError(f"template {t.name} exceeds {ARG_BITS} argument bits")
        return cls(mode, tuple(templates), tuple(composites))

    @property
    def size(self) -> int:
        return len(self.templates) + len(self.composites)

    def describe(self) -> dict:
        """Serializable description (stored in model files)."""
        return {
            "version": MANIFEST_VERSION,
            "feature_set": self.mode.feature_set.value,
            "with_clusters": self.mode.with_clusters,
            "widths": WIDTHS,
            "distance_buckets": [1, 2, 3, 4, 5, "6-9", "10+"],
            "valency_cap": 5,
            "templates": [[t.tid, t.name, [list(s) for s in t.slots]] for t in self.templates],
            "composites": [[t.tid, t.name, list(t.slot), t.label_set] for t in self.composites],
        }


def _attr_kind(attr: str) -> str:
    return "vl" if attr == "N0vl" else attr


def pack(template: Template, args: Sequence[int]) -> int:
    """Exact packing of a template and its argument ids into one integer."""
    if len(args) != len(template.slots):
        raise ValueError(f"{template.name} takes {len(template.slots)} arguments")
    key = 0
    shift = 0
    for (_, attr), v in zip(template.slots, args):
        width = WIDTHS[_attr_kind(attr)]
        if not 0 <= v < 1 << width:
            raise ValueError(f"argument {v} exceeds {width} bits in template {template.name}")
        key |= int(v) << shift
        shift += width
    return key | template.tid << ARG_BITS


class Alphabet:
    """String to dense id map with reserved ids for null, unknown and ROOT."""

    def __init__(self, width: int, items: Iterable[str] = ()):
        self.width = width
        self.index: Dict[str, int] = {}
        for item in items:
            self.add(item)

    def add(self, item: str) -> int:
        i = self.index.get(item)
        if i is None:
            i = FIRST_ID + len(self.index)
            if i >= 1 << self.width:
                raise ValueError(f"alphabet overflow: more than {(1 << self.width) - FIRST_ID} "
                                 "distinct entries")
            self.index[item] = i
        return i

    def get(self, item: str) -> int:
        return self.index.get(item, UNKNOWN)

    def __len__(self):
        return len(self.index)

    def items(self) -> List[str]:
        return sorted(self.index, key=self.index.__getitem__)

    def __eq__(self, other):
        return isinstance(other, Alphabet) and self.index == other.index


class Alphabets:
    """Word and tag alphabets plus the label list (labels use plain ids 0..L-1)."""

    def __init__(self, words: Alphabet, tags: Alphabet, labels: List[str]):
        if len(labels) > (1 << WIDTHS["l"]) - 2:
            raise ValueError("too many dependency labels")
        self.words = words
        self.tags = tags
        self.labels = list(labels)
        self.label_index = {l: i for i, l in enumerate(self.labels)}

    @classmethod
    def from_sentences(cls, sentences: Iterable[Sentence], labeled: bool = True) -> "Alphabets":
        words = Alphabet(WIDTHS["w"])
        tags = Alphabet(WIDTHS["p"])
        labels = set()
        for s in sentences:
            for t in s:
                words.add(t.form)
                tags.add(t.pos)
                if labeled and t.label is not None:
                    labels.add(t.label)
        return cls(words, tags, sorted(labels) if labeled and labels else ["_"])

    @property
    def n_labels(self) -> int:
        return len(self.labels)

    def label_id(self, label: Optional[str]) -> Optional[int]:
        if label is None:
            return None
        return self.label_index.get(label)

    def __eq__(self, other):
        return (isinstance(other, Alphabets) and self.words == other.words
                and self.tags == other.tags and self.labels == other.labels)


class ClusterIds:
    """Dense ids for full cluster strings and their 4/6-bit prefixes."""

    def __init__(self, lexicon: Optional[ClusterLexicon]):
        self.lexicon = lexicon or ClusterLexicon()
        self.full = self.lexicon.cluster_ids()
        p4 = sorted({b[:4] for b in self.full})
        p6 = sorted({b[:6] for b in self.full})
        self.p4 = {b: i for i, b in enumerate(p4, 1)}
        self.p6 = {b: i for i, b in enumerate(p6, 1)}
        for table, attr in ((self.p4, "p4"), (self.p6, "p6"), (self.full, "c")):
            if len(table) >= 1 << WIDTHS[attr]:
                raise ValueError(f"too many distinct cluster values for {attr}")

    def lookup(self, word: str) -> Tuple[int, int, int]:
        bits = self.lexicon.get(word)
        if bits is None:
            return 0, 0, 0
        return self.full[bits], self.p4[bits[:4]], self.p6[bits[:6]]


class EncodedSentence(NamedTuple):
    """Per-position id arrays of length n+3 (see transition positions)."""
    n: int
    attrs: np.ndarray  # shape (6, n+3): w, p, l-placeholder, c, p4, p6


_ATTR_ROW = {a: i for i, a in enumerate(_TOKEN_ATTRS)}


def _distance_bucket(d: int) -> int:
    if d <= 5:
        return d
    return 6 if d <= 9 else 7


_DIST = np.array([0] + [_distance_bucket(d) for d in range(1, 64)] + [7], dtype=np.uint64)


class FeatureExtractor:
    """Compiles a manifest into vectorized extraction over a batch of
    configurations that share one sentence."""

    def __init__(self, alphabets: Alphabets, mode: FeatureSetMode = FeatureSetMode(),
                 clusters: Optional[ClusterLexicon] = None, root: RootMode = RootMode.FINAL):
        self.alphabets = alphabets
        self.mode = mode
        self.root = RootMode(root)
        self.clusters = ClusterIds(clusters if mode.with_clusters else None)
        self.manifest = Manifest.build(mode)
        n_pos = len(POSITIONS)
        n_tok_cols = n_pos * len(_TOKEN_ATTRS)
        self._n_cols = n_tok_cols + len(_SCALARS) + 2  # + zero column + one column
        zero_col = self._n_cols - 2
        one_col = self._n_cols - 1

        def col(pos, attr):
            if pos == "_":
                return n_tok_cols + _SCALARS.index(attr)
            return _POS_INDEX[pos] * len(_TOKEN_ATTRS) + _ATTR_ROW[attr]

        T = len(self.manifest.templates)
        src = np.full((T, 4), zero_col, dtype=np.intp)
        shifts = np.zeros((T, 4), dtype=np.uint64)
        supp = np.full(T, one_col, dtype=np.intp)
        base = np.zeros(T, dtype=np.uint64)
        for i, t in enumerate(self.manifest.templates):
            shift = 0
            for k, (pos, attr) in enumerate(t.slots):
                src[i, k] = col(pos, attr)
                shifts[i, k] = shift
                shift += WIDTHS[_attr_kind(attr)]
            for k in t.suppress:
                supp[i] = src[i, k]
            base[i] = np.uint64(t.tid) << np.uint64(ARG_BITS)
        self._src, self._shifts, self._supp, self._base = src, shifts, supp, base
        self._zero_col, self._one_col = zero_col, one_col
        self._comp = [(t.tid, _POS_INDEX[t.slot[0]] * len(_TOKEN_ATTRS) + _ATTR_ROW[t.slot[1]],
                       _LABEL_SETS.index(t.label_set), t.suppress)
                      for t in self.manifest.composites]

    @property
    def n_templates(self) -> int:
        return self.manifest.size

    def encode(self, sentence: Sentence) -> EncodedSentence:
        n = len(sentence)
        a = np.zeros((len(_TOKEN_ATTRS), n + 3), dtype=np.uint64)
        root = 0 if self.root == RootMode.INITIAL else n + 1
        words, tags = self.alphabets.words, self.alphabets.tags
        for i, tok in enumerate(sentence, 1):
            a[0, i] = words.get(tok.form)
            a[1, i] = tags.get(tok.pos)
            if self.mode.with_clusters:
                a[3, i], a[4, i], a[5, i] = self.clusters.lookup(tok.form)
        a[0, root] = ROOT
        a[1, root] = ROOT
        return EncodedSentence(n, a)

    def _contexts(self, configs: Sequence[Configuration]):
        """Python-side gather of context positions, arc labels and scalars."""
        P = len(POSITIONS)
        B = len(configs)
        pos = np.empty((B, P), dtype=np.intp)
        lab = np.empty((B, P), dtype=np.uint64)
        scal = np.empty((B, len(_SCALARS)), dtype=np.uint64)
        sets = []
        for b, c in enumerate(configs):
            none = c.n + 2
            heads = c.heads
            labels = c.labels
            deps = c.deps
            s0 = c.stack[-1] if c.stack else none
            u = c.unshifted
            buf, end = c.buf, c.end
            if u != none:
                n0 = u
                n1 = buf if buf <= end else none
                n2 = buf + 1 if buf + 1 <= end else none
            else:
                n0 = buf if buf <= end else none
                n1 = buf + 1 if buf + 1 <= end else none
                n2 = buf + 2 if buf + 2 <= end else none
            s0h = heads[s0]
            s0h2 = heads[s0h]
            ds = deps[s0]
            dn = deps[n0]
            row = (s0, n0, n1, n2, s0h, s0h2, ds.l1, ds.l2, ds.r1, ds.r2, dn.l1, dn.l2)
            pos[b] = row
            lab[b] = [0 if t == none else (1 if heads[t] == none else labels[t] + 2) for t in row]
            if s0 != none and n0 != none:
                dist = _distance_bucket(abs(n0 - s0))
            else:
                dist = 0
            scal[b] = (dist,
                       0 if s0 == none else min(ds.lval, 5) + 1,
                       0 if s0 == none else min(ds.rval, 5) + 1,
                       0 if n0 == none else min(dn.lval, 5) + 1)
            sets.append((ds.rset if s0 != none else -1, ds.lset if s0 != none else -1,
                         dn.lset if n0 != none else -1))
        return pos, lab, scal, sets

    def batch(self, configs: Sequence[Configuration], enc: EncodedSentence):
        """Integer keys (B x T uint64 array) and composite keys (B lists)."""
        pos, lab, scal, sets = self._contexts(configs)
        B, P = pos.shape
        A = len(_TOKEN_ATTRS)
        V = np.empty((B, self._n_cols), dtype=np.uint64)
        tok = enc.attrs[:, pos]                     # (A, B, P)
        tok[2] = lab
        V[:, :P * A] = tok.transpose(1, 2, 0).reshape(B, P * A)
        V[:, P * A:P * A + len(_SCALARS)] = scal
        V[:, self._zero_col] = 0
        V[:, self._one_col] = 1
        g = V[:, self._src]                         # (B, T, 4)
        keys = (g << self._shifts).sum(axis=2, dtype=np.uint64) | self._base
        keys[V[:, self._supp] == 0] = SUPPRESSED
        comps = []
        if self._comp:
            Vl = V.tolist()
            for b in range(B):
                row = Vl[b]
                sb = sets[b]
                out = []
                for tid, c, si, supp in self._comp:
                    v = row[c]
                    out.append(SUPPRESSED if supp and v == 0 else (tid, v, sb[si]))
                comps.append(out)
        return keys, comps

    def extract(self, c: Configuration, enc: EncodedSentence) -> list:
        """Feature keys for one configuration (suppressed entries dropped)."""
        if is_terminal(c):
            raise ValueError("features are undefined for a terminal configuration")
        keys, comps = self.batch([c], enc)
        out = [k for k in keys[0].tolist() if k != SUPPRESSED]
        if comps:
            out.extend(k for k in comps[0] if k != SUPPRESSED)
        return out


def extract(c: Configuration, s: Sentence, alphabets: Alphabets,
            mode: FeatureSetMode = FeatureSetMode(),
            clusters: Optional[ClusterLexicon] = None,
            root: RootMode = RootMode.FINAL) -> list:
    """Convenience wrapper building a throwaway extractor."""
    fx = FeatureExtractor(alphabets, mode, clusters, root)
    return fx.extract(c, fx.encode(s))
