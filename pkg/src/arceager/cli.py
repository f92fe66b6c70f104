"""Command line interface.

    arceager train -train-file F -model M [-dev F] [-punc F] [-cluster F]
                   [beam:K] [iter:N] [nt:T] [seed:S] [unlabeled] [lowercase]
                   [basic] [static] [early] [random] [root_first]
    arceager parse_conll   -input F -out F -model M [beam:K] [nt:T] [-score F]
    arceager parse_tagged  -input F -out F -model M [-delim D] [beam:K] [nt:T] [-score F]
    arceager parse_partial -input F -out F -model M [beam:K] [nt:T] [-score F]
    arceager eval -gold F -parse F [-punc F]

Exit status: 0 success, 1 usage error, 2 data error.
"""

from __future__ import annotations

import logging
import sys
from typing import Dict, List, NamedTuple, Optional, Sequence

from .conll import (ConllError, default_punctuation, read_clusters, read_conll,
                    read_punctuation, read_tagged, write_conll)
from .decoder import Constraints, write_scores
from .evaluation import AlignmentError, evaluate
from .learning import TrainConfig, UpdateStrategy
from .model import ModelError, ParserModel, train
from .oracles import OracleMode
from .transition import RootMode

EXIT_OK, EXIT_USAGE, EXIT_DATA = 0, 1, 2

_VALUED = {
    "train": {"-train-file", "-dev", "-model", "-punc", "-cluster"},
    "parse_conll": {"-input", "-out", "-model", "-score"},
    "parse_tagged": {"-input", "-out", "-model", "-delim", "-score"},
    "parse_partial": {"-input", "-out", "-model", "-score"},
    "eval": {"-gold", "-parse", "-punc"},
}
_REQUIRED = {
    "train": ("-train-file", "-model"),
    "parse_conll": ("-input", "-out", "-model"),
    "parse_tagged": ("-input", "-out", "-model"),
    "parse_partial": ("-input", "-out", "-model"),
    "eval": ("-gold", "-parse"),
}
_NUMERIC = {
    "train": {"beam", "iter", "nt", "seed"},
    "parse_conll": {"beam", "nt"},
    "parse_tagged": {"beam", "nt"},
    "parse_partial": {"beam", "nt"},
    "eval": set(),
}
_TOGGLES = {
    "train": {"unlabeled", "lowercase", "basic", "static", "early", "random", "root_first"},
}


class UsageError(Exception):
    pass


class CommandSpec(NamedTuple):
    command: str
    flags: Dict[str, str]
    numbers: Dict[str, int]
    toggles: frozenset


def parse_command(argv: Sequence[str]) -> CommandSpec:
    if not argv:
        raise UsageError("missing subcommand")
    cmd, rest = argv[0], list(argv[1:])
    if cmd not in _VALUED:
        raise UsageError(f"unknown subcommand {cmd!r}")
    flags: Dict[str, str] = {}
    numbers: Dict[str, int] = {}
    toggles = set()
    i = 0
    while i < len(rest):
        tok = rest[i]
        if tok in _VALUED[cmd]:
            if i + 1 >= len(rest):
                raise UsageError(f"{tok} needs a value")
            if tok in flags:
                raise UsageError(f"{tok} given twice")
            flags[tok] = rest[i + 1]
            i += 2
            continue
        key, sep, value = tok.partition(":")
        if sep and key in _NUMERIC[cmd]:
            if key in numbers:
                raise UsageError(f"{key}: given twice")
            try:
                numbers[key] = int(value)
            except ValueError:
                raise UsageError(f"{tok}: expected an integer") from None
            if key in ("beam", "iter", "nt") and numbers[key] < 1:
                raise UsageError(f"{tok}: must be at least 1")
        elif tok in _TOGGLES.get(cmd, ()):
            if tok in toggles:
                raise UsageError(f"{tok} given twice")
            toggles.add(tok)
        else:
            raise UsageError(f"unknown option {tok!r} for {cmd}")
        i += 1
    for req in _REQUIRED[cmd]:
        if req not in flags:
            raise UsageError(f"{cmd} requires {req}")
    return CommandSpec(cmd, flags, numbers, frozenset(toggles))


def train_config(spec: CommandSpec) -> TrainConfig:
    t, n = spec.toggles, spec.numbers
    if "static" in t:
        oracle = OracleMode.STATIC
    elif "random" in t:
        oracle = OracleMode.DYNAMIC_RANDOM
    else:
        oracle = OracleMode.DYNAMIC_MAX_SCORING
    return TrainConfig(
        beam_width=n.get("beam", 64), iterations=n.get("iter", 20), threads=n.get("nt", 8),
        seed=n.get("seed", 1),
        update=UpdateStrategy.EARLY if "early" in t else UpdateStrategy.MAX_VIOLATION,
        oracle=oracle, labeled="unlabeled" not in t, lowercase="lowercase" in t,
        root=RootMode.INITIAL if "root_first" in t else RootMode.FINAL, basic="basic" in t)


def _read_conll_file(path):
    with open(path, encoding="utf-8") as f:
        return read_conll(f)


def _punct(path: Optional[str]) -> frozenset:
    if path is None:
        return default_punctuation()
    with open(path, encoding="utf-8") as f:
        return read_punctuation(f)


def run_train(spec: CommandSpec, out=None) -> int:
    out = out or sys.stdout
    cfg = train_config(spec)
    f = spec.flags
    sentences = _read_conll_file(f["-train-file"])
    dev = _read_conll_file(f["-dev"]) if "-dev" in f else None
    clusters = None
    if "-cluster" in f:
        with open(f["-cluster"], encoding="utf-8") as cf:
            clusters = read_clusters(cf)
    punct = _punct(f.get("-punc"))

    def report(entry, _model):
        out.write(entry.line() + "\n")
        out.flush()

    _, logs = train(sentences, cfg, dev, punct, clusters, f["-model"], report)
    if logs:
        out.write(f"skipped\t{logs[0].skipped}\n")
    return EXIT_OK


def _parse_and_write(spec: CommandSpec, sentences, constraints=None) -> int:
    f = spec.flags
    model = ParserModel.load(f["-model"])
    threads = spec.numbers.get("nt", 8)
    beam = spec.numbers.get("beam")
    inputs = [s.without_heads() for s in sentences]
    results = model.parse_corpus(inputs, beam, threads, constraints)
    bad = [i for i, r in enumerate(results) if r.error]
    if bad:
        raise ConllError(f"sentence {bad[0]}: {results[bad[0]].error}")
    parsed = [r.apply_to(s) for r, s in zip(results, sentences)]
    with open(f["-out"], "w", encoding="utf-8") as out:
        write_conll(parsed, out, labeled=model.labeled)
    if "-score" in f:
        with open(f["-score"], "w", encoding="utf-8") as out:
            write_scores(results, out)
    return EXIT_OK


def run_parse_conll(spec: CommandSpec) -> int:
    return _parse_and_write(spec, _read_conll_file(spec.flags["-input"]))


def run_parse_tagged(spec: CommandSpec) -> int:
    with open(spec.flags["-input"], encoding="utf-8") as f:
        sentences = read_tagged(f, spec.flags.get("-delim", "_"))
    return _parse_and_write(spec, sentences)


def run_parse_partial(spec: CommandSpec) -> int:
    sentences = _read_conll_file(spec.flags["-input"])
    constraints = [Constraints.from_sentence(s) for s in sentences]
    return _parse_and_write(spec, sentences, constraints)


def run_eval(spec: CommandSpec, out=None) -> int:
    out = out or sys.stdout
    gold = _read_conll_file(spec.flags["-gold"])
    parsed = _read_conll_file(spec.flags["-parse"])
    res = evaluate(gold, parsed, _punct(spec.flags.get("-punc")))
    out.write(res.format() + "\n")
    return EXIT_OK


_RUNNERS = {
    "train": run_train,
    "parse_conll": run_parse_conll,
    "parse_tagged": run_parse_tagged,
    "parse_partial": run_parse_partial,
    "eval": run_eval,
}


def main(argv: Optional[List[str]] = None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    logging.basicConfig(level=logging.WARNING, format="%(message)s")
    try:
        spec = parse_command(argv)
    except UsageError as e:
        print(f"usage error: {e}", file=sys.stderr)
        print(__doc__, file=sys.stderr)
        return EXIT_USAGE
    try:
        return _RUNNERS[spec.command](spec)
    except (ConllError, ModelError, AlignmentError, OSError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
