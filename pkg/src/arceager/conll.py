"""Readers and writers for CoNLL 2006 treebanks, tagged text, punctuation
lists and Brown cluster files."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from importlib import resources
from typing import Iterable, List, Optional, TextIO

UNKNOWN_HEAD = -1
MAX_CLUSTERS = 4096


class ConllError(ValueError):
    """Raised for malformed input files."""

    def __init__(self, message: str, line: Optional[int] = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


@dataclass(frozen=True)
class Token:
    index: int
    form: str
    pos: str
    head: Optional[int] = None
    label: Optional[str] = None
    lemma: str = "_"
    cpos: str = "_"
    feats: str = "_"

    def __post_init__(self):
        if self.index < 1:
            raise ConllError(f"token index must be >= 1, got {self.index}")


@dataclass(frozen=True)
class Sentence:
    tokens: tuple

    def __len__(self):
        return len(self.tokens)

    def __iter__(self):
        return iter(self.tokens)

    def __getitem__(self, i):
        return self.tokens[i]

    @property
    def forms(self) -> List[str]:
        return [t.form for t in self.tokens]

    @property
    def tags(self) -> List[str]:
        return [t.pos for t in self.tokens]

    @property
    def heads(self) -> List[Optional[int]]:
        return [t.head for t in self.tokens]

    @property
    def labels(self) -> List[Optional[str]]:
        return [t.label for t in self.tokens]

    def has_full_tree(self) -> bool:
        return all(t.head is not None and t.head >= 0 for t in self.tokens)

    def has_unknown_heads(self) -> bool:
        return any(t.head is None or t.head < 0 for t in self.tokens)

    def with_parse(self, heads, labels) -> "Sentence":
        return Sentence(tuple(replace(t, head=h, label=l)
                              for t, h, l in zip(self.tokens, heads, labels)))

    def without_heads(self) -> "Sentence":
        return Sentence(tuple(replace(t, head=None, label=None) for t in self.tokens))

    def lowercased(self) -> "Sentence":
        return Sentence(tuple(replace(t, form=t.form.lower()) for t in self.tokens))

    @classmethod
    def from_lists(cls, forms, tags, heads=None, labels=None) -> "Sentence":
        n = len(forms)
        heads = heads if heads is not None else [None] * n
        labels = labels if labels is not None else [None] * n
        return cls(tuple(Token(i + 1, f, p, h, l)
                         for i, (f, p, h, l) in enumerate(zip(forms, tags, heads, labels))))


def is_tree(heads: List[int], single_root: bool = True) -> bool:
    """True iff `heads` (CoNLL indexing, 0 = root) is an acyclic tree under
    the root node. With `single_root`, exactly one word may attach to it."""
    n = len(heads)
    roots = sum(1 for h in heads if h == 0)
    if roots == 0 or (single_root and roots != 1):
        return False
    for d in range(1, n + 1):
        seen = set()
        h = d
        while h != 0:
            if h in seen or not 1 <= h <= n:
                return False
            seen.add(h)
            h = heads[h - 1]
    return True


def _field(value: str) -> Optional[str]:
    return None if value == "_" else value


def _parse_block(lines, lowercase: bool) -> Sentence:
    tokens = []
    for lineno, line in lines:
        cols = line.split("\t")
        if len(cols) != 10:
            raise ConllError(f"expected 10 tab-separated columns, got {len(cols)}", lineno)
        try:
            index = int(cols[0])
        except ValueError:
            raise ConllError(f"non-integer token index {cols[0]!r}", lineno) from None
        if index != len(tokens) + 1:
            raise ConllError(f"token index {index} out of sequence", lineno)
        head_col = cols[6]
        if head_col == "_":
            head = None
        else:
            try:
                head = int(head_col)
            except ValueError:
                raise ConllError(f"non-integer head {head_col!r}", lineno) from None
        form = cols[1].lower() if lowercase else cols[1]
        tokens.append(Token(index, form, cols[4], head, _field(cols[7]),
                            lemma=cols[2], cpos=cols[3], feats=cols[5]))
    n = len(tokens)
    for (lineno, _), tok in zip(lines, tokens):
        h = tok.head
        if h is None or h == UNKNOWN_HEAD:
            continue
        if h < UNKNOWN_HEAD or h > n or h == tok.index:
            raise ConllError(f"head {h} invalid for token {tok.index} in sentence of length {n}",
                             lineno)
    return Sentence(tuple(tokens))


def read_conll(stream: TextIO, lowercase: bool = False) -> List[Sentence]:
    sentences = []
    block = []
    for lineno, raw in enumerate(stream, 1):
        line = raw.rstrip("\r\n")
        if not line.strip():
            if block:
                sentences.append(_parse_block(block, lowercase))
                block = []
            continue
        block.append((lineno, line))
    if block:
        sentences.append(_parse_block(block, lowercase))
    return sentences


def write_conll(sentences: Iterable[Sentence], stream: TextIO, labeled: bool = True) -> None:
    for sent in sentences:
        for tok in sent:
            if tok.head is None:
                raise AssertionError(f"token {tok.index} ({tok.form!r}) has no head")
            label = tok.label if (labeled and tok.label) else "_"
            stream.write("\t".join((str(tok.index), tok.form, tok.lemma or "_",
                                    tok.cpos or "_", tok.pos, tok.feats or "_",
                                    str(tok.head), label, "_", "_")))
            stream.write("\n")
        stream.write("\n")


def read_tagged(stream: TextIO, delimiter: str = "_", lowercase: bool = False) -> List[Sentence]:
    """One sentence per line, tokens written as form<delim>tag.

    The tag is split off at the last occurrence of the delimiter so forms may
    contain it.
    """
    sentences = []
    for lineno, raw in enumerate(stream, 1):
        items = raw.split()
        if not items:
            continue
        forms, tags = [], []
        for item in items:
            form, sep, tag = item.rpartition(delimiter)
            if not sep or not form or not tag:
                raise ConllError(f"token {item!r} lacks delimiter {delimiter!r}", lineno)
            forms.append(form.lower() if lowercase else form)
            tags.append(tag)
        sentences.append(Sentence.from_lists(forms, tags))
    return sentences


@dataclass(frozen=True)
class ClusterLexicon:
    """Word to Brown-cluster bit-string map."""

    clusters: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.clusters)

    def __bool__(self):
        return bool(self.clusters)

    def get(self, word: str) -> Optional[str]:
        return self.clusters.get(word)

    @property
    def bitstrings(self) -> List[str]:
        return sorted(set(self.clusters.values()))

    def cluster_ids(self) -> dict:
        """Dense IDs per distinct bit-string, starting at 1."""
        return {b: i for i, b in enumerate(self.bitstrings, 1)}


def read_clusters(stream: TextIO) -> ClusterLexicon:
    clusters = {}
    distinct = set()
    for lineno, raw in enumerate(stream, 1):
        line = raw.rstrip("\r\n")
        if not line.strip():
            continue
        cols = line.split("\t")
        if len(cols) < 2 or not cols[0] or set(cols[0]) - {"0", "1"}:
            raise ConllError(f"malformed cluster line {line!r}", lineno)
        if len(cols) > 2:
            try:
                int(cols[2])
            except ValueError:
                raise ConllError(f"non-integer count {cols[2]!r}", lineno) from None
        bits, word = cols[0], cols[1]
        distinct.add(bits)
        if len(distinct) > MAX_CLUSTERS:
            raise ConllError(f"more than {MAX_CLUSTERS} distinct clusters", lineno)
        clusters[word] = bits
    return ClusterLexicon(clusters)


def read_punctuation(stream: TextIO) -> frozenset:
    return frozenset(line.strip() for line in stream if line.strip())


def default_punctuation(name: str = "wsj") -> frozenset:
    path = resources.files("arceager").joinpath("data").joinpath(f"{name}.puncs")
    with path.open(encoding="utf-8") as f:
        return read_punctuation(f)
