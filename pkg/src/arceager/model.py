"""Trained parser models: decoding entry points, binary storage and the
training driver that produces one model per iteration.

File layout: an 8-byte magic string, a little-endian uint32 format
version, then named sections (uint16 name length, name, uint64 payload
length, payload). Metadata sections are canonical JSON; the weight matrix
is raw little-endian float64.
"""

from __future__ import annotations

import io
import json
import logging
import struct
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, List, NamedTuple, Optional, Sequence

import numpy as np

from .conll import ClusterLexicon, Sentence, default_punctuation
from .decoder import Constraints, ParseResult, Searcher, parse, parse_corpus
from .evaluation import EvalResult, dev_eval_hook
from .features import (Alphabet, Alphabets, FeatureExtractor, FeatureSet, FeatureSetMode,
                       Manifest, WIDTHS)
from .learning import AveragedWeights, TrainConfig, Trainer
from .transition import KIND_NAMES, ActionSpace, RootMode

log = logging.getLogger(__name__)

MAGIC = b"ARCEAGR\x00"
FORMAT_VERSION = 1


class ModelError(RuntimeError):
    """Unreadable or incompatible model file."""


@dataclass
class ParserModel:
    alphabets: Alphabets
    weights: AveragedWeights
    mode: FeatureSetMode = FeatureSetMode()
    root: RootMode = RootMode.FINAL
    labeled: bool = True
    lowercase: bool = False
    beam_width: int = 64
    clusters: ClusterLexicon = field(default_factory=ClusterLexicon)
    punct: frozenset = frozenset()
    config: dict = field(default_factory=dict)
    iteration: int = 0

    @cached_property
    def space(self) -> ActionSpace:
        return ActionSpace(self.alphabets.n_labels)

    @cached_property
    def extractor(self) -> FeatureExtractor:
        return FeatureExtractor(self.alphabets, self.mode, self.clusters, self.root)

    @cached_property
    def searcher(self) -> Searcher:
        return Searcher(self.extractor, self.space)

    def parse(self, s: Sentence, beam_width: Optional[int] = None,
              constraints: Optional[Constraints] = None) -> ParseResult:
        return parse(s, self, beam_width, constraints)

    def parse_corpus(self, sentences: Sequence[Sentence], beam_width: Optional[int] = None,
                     threads: int = 1, constraints=None) -> List[ParseResult]:
        return parse_corpus(sentences, self, beam_width, threads, constraints)

    # storage

    def to_bytes(self) -> bytes:
        out = io.BytesIO()
        out.write(MAGIC)
        out.write(struct.pack("<I", FORMAT_VERSION))
        w = self.weights
        order = sorted(w.index.items(), key=lambda kv: kv[1])
        int_keys = [(k, r) for k, r in order if isinstance(k, int)]
        comp_keys = [[list(k), r] for k, r in order if not isinstance(k, int)]
        meta = {
            "root": self.root.value, "labeled": self.labeled, "lowercase": self.lowercase,
            "beam_width": self.beam_width, "feature_set": self.mode.feature_set.value,
            "with_clusters": self.mode.with_clusters, "iteration": self.iteration,
            "clock": w.clock, "shape": list(w.matrix.shape), "config": self.config,
            "manifest": self.extractor.manifest.describe(),
        }
        sections = [
            ("meta", _json(meta)),
            ("words", _json(self.alphabets.words.items())),
            ("tags", _json(self.alphabets.tags.items())),
            ("labels", _json(self.alphabets.labels)),
            ("clusters", _json(self.clusters.clusters)),
            ("punct", _json(sorted(self.punct))),
            ("int_keys", np.array([k for k, _ in int_keys], dtype="<u8").tobytes()),
            ("int_rows", np.array([r for _, r in int_keys], dtype="<i8").tobytes()),
            ("comp_keys", _json(comp_keys)),
            ("weights", np.ascontiguousarray(w.matrix, dtype="<f8").tobytes()),
        ]
        for name, payload in sections:
            raw = name.encode()
            out.write(struct.pack("<H", len(raw)))
            out.write(raw)
            out.write(struct.pack("<Q", len(payload)))
            out.write(payload)
        return out.getvalue()

    @classmethod
    def from_bytes(cls, data: bytes, source: str = "<bytes>") -> "ParserModel":
        if data[:8] != MAGIC:
            raise ModelError(f"{source}: not a parser model (bad magic)")
        try:
            (version,) = struct.unpack_from("<I", data, 8)
        except struct.error:
            raise ModelError(f"{source}: truncated header") from None
        if version != FORMAT_VERSION:
            raise ModelError(f"{source}: unsupported format version {version} "
                             f"(expected {FORMAT_VERSION})")
        pos = 12
        sec = {}
        try:
            while pos < len(data):
                (ln,) = struct.unpack_from("<H", data, pos)
                name = data[pos + 2:pos + 2 + ln].decode()
                pos += 2 + ln
                (size,) = struct.unpack_from("<Q", data, pos)
                pos += 8
                if pos + size > len(data):
                    raise ModelError(f"{source}: section {name!r} is truncated")
                sec[name] = data[pos:pos + size]
                pos += size
        except (struct.error, UnicodeDecodeError) as e:
            raise ModelError(f"{source}: corrupt section table ({e})") from None
        missing = {"meta", "words", "tags", "labels", "clusters", "punct", "int_keys",
                   "int_rows", "comp_keys", "weights"} - sec.keys()
        if missing:
            raise ModelError(f"{source}: missing sections {sorted(missing)}")
        try:
            meta = json.loads(sec["meta"])
            words = Alphabet(WIDTHS["w"], json.loads(sec["words"]))
            tags = Alphabet(WIDTHS["p"], json.loads(sec["tags"]))
            alphabets = Alphabets(words, tags, json.loads(sec["labels"]))
            clusters = ClusterLexicon(json.loads(sec["clusters"]))
            punct = frozenset(json.loads(sec["punct"]))
            index = {}
            keys = np.frombuffer(sec["int_keys"], dtype="<u8").tolist()
            rows = np.frombuffer(sec["int_rows"], dtype="<i8").tolist()
            index.update(zip(keys, rows))
            for k, r in json.loads(sec["comp_keys"]):
                index[tuple(k)] = r
            shape = tuple(meta["shape"])
            matrix = np.frombuffer(sec["weights"], dtype="<f8").reshape(shape).copy()
            mode = FeatureSetMode(FeatureSet(meta["feature_set"]), meta["with_clusters"])
        except (ValueError, KeyError, TypeError) as e:
            raise ModelError(f"{source}: corrupt model ({e})") from None
        if Manifest.build(mode).describe() != meta["manifest"]:
            raise ModelError(f"{source}: feature templates differ from this build")
        return cls(alphabets, AveragedWeights(index, matrix, meta["clock"]), mode,
                   RootMode(meta["root"]), meta["labeled"], meta["lowercase"],
                   meta["beam_width"], clusters, punct, meta["config"], meta["iteration"])

    def save(self, path: str, iteration: Optional[int] = None) -> str:
        """Write the model; with `iteration` the file name gets an _iterK suffix."""
        target = f"{path}_iter{iteration}" if iteration is not None else str(path)
        try:
            with open(target, "wb") as f:
                f.write(self.to_bytes())
        except OSError as e:
            raise ModelError(f"cannot write model to {target}: {e}") from e
        return target

    @classmethod
    def load(cls, path: str) -> "ParserModel":
        try:
            with open(path, "rb") as f:
                data = f.read()
        except OSError as e:
            raise ModelError(f"cannot read model {path}: {e}") from e
        return cls.from_bytes(data, str(path))

    def dump(self, stream) -> None:
        """Human-readable weight listing, one feature per line."""
        space = self.space
        names = []
        for a in range(space.size):
            act = space.decode(a)
            names.append(KIND_NAMES[act.kind] if act.kind in (0, 3, 4)
                         else f"{KIND_NAMES[act.kind]}:{self.alphabets.labels[act.label]}")
        m = self.weights.matrix
        for key, row in sorted(self.weights.index.items(), key=lambda kv: kv[1]):
            cells = [f"{names[a]}={m[row, a]:.6g}" for a in np.flatnonzero(m[row])]
            if cells:
                stream.write(f"{key!r}\t" + " ".join(cells) + "\n")


def _json(obj) -> bytes:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False).encode()


def save(model: ParserModel, path: str, iteration: Optional[int] = None) -> str:
    return model.save(path, iteration)


def load(path: str) -> ParserModel:
    return ParserModel.load(path)


class IterationLog(NamedTuple):
    iteration: int
    seconds: float
    updates: int
    sentences: int
    skipped: int
    dev: Optional[EvalResult]
    path: Optional[str]

    def line(self) -> str:
        """Tab-separated log line."""
        from .evaluation import round_half_up
        uas = round_half_up(self.dev.uas) if self.dev else "-"
        las = round_half_up(self.dev.las) if self.dev else "-"
        return (f"iter\t{self.iteration}\ttime\t{self.seconds:.2f}\tupdates\t{self.updates}"
                f"\tdev_uas\t{uas}\tdev_las\t{las}")


def train(sentences: Sequence[Sentence], cfg: TrainConfig = None,
          dev: Optional[Sequence[Sentence]] = None, punct=None,
          clusters: Optional[ClusterLexicon] = None, model_path: Optional[str] = None,
          on_iteration: Optional[Callable[[IterationLog, ParserModel], None]] = None):
    """Train for cfg.iterations epochs; returns (final model, iteration logs).

    After every epoch the averaged snapshot is wrapped in a model, saved as
    ``model_path_iterK`` when a path is given and evaluated on `dev`.
    """
    cfg = cfg or TrainConfig()
    punct = frozenset(default_punctuation() if punct is None else punct)
    clusters = clusters or ClusterLexicon()
    source = [s.lowercased() for s in sentences] if cfg.lowercase else list(sentences)
    alphabets = Alphabets.from_sentences(source, cfg.labeled)
    mode = FeatureSetMode(FeatureSet.BASIC if cfg.basic else FeatureSet.EXTENDED,
                          bool(clusters))
    extractor = FeatureExtractor(alphabets, mode, clusters, cfg.root)
    space = ActionSpace(alphabets.n_labels)
    trainer = Trainer(extractor, space, cfg)
    data, skipped = trainer.prepare(source, alphabets)
    if skipped:
        log.info("skipped %d sentences that are non-projective or lack a full tree", skipped)
    logs, model = [], None
    for it in range(1, cfg.iterations + 1):
        stats = trainer.train_epoch(data)
        model = ParserModel(alphabets, trainer.weights.averaged(), mode, cfg.root, cfg.labeled,
                            cfg.lowercase, cfg.beam_width, clusters, punct, cfg.as_dict(), it)
        # share the compiled extractor instead of rebuilding it
        model.__dict__["extractor"] = extractor
        path = model.save(model_path, it) if model_path else None
        res = dev_eval_hook(it, model, dev, punct, cfg.beam_width, cfg.threads)
        entry = IterationLog(it, stats.seconds, stats.updates, stats.sentences, skipped, res, path)
        log.info(entry.line())
        logs.append(entry)
        if on_iteration:
            on_iteration(entry, model)
    return model, logs
