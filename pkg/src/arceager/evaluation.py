"""Attachment scores with punctuation excluded by gold POS tag."""

from __future__ import annotations

import logging
from decimal import ROUND_HALF_UP, Decimal
from typing import Iterable, NamedTuple, Optional, Sequence

from .conll import Sentence

log = logging.getLogger(__name__)


class AlignmentError(ValueError):
    def __init__(self, message: str, sentence_index: Optional[int] = None):
        if sentence_index is not None:
            message = f"sentence {sentence_index}: {message}"
        super().__init__(message)
        self.sentence_index = sentence_index


def round_half_up(x: float, places: int = 2) -> str:
    q = Decimal(1).scaleb(-places)
    return str(Decimal(repr(x)).quantize(q, rounding=ROUND_HALF_UP))


class EvalResult(NamedTuple):
    uas: float
    las: float
    evaluated: int
    excluded: int
    correct_heads: int = 0
    correct_labeled: int = 0

    @property
    def total(self) -> int:
        return self.evaluated + self.excluded

    def format(self) -> str:
        return (f"UAS: {round_half_up(self.uas)}\tLAS: {round_half_up(self.las)}\t"
                f"evaluated: {self.evaluated}\texcluded: {self.excluded}")


def evaluate(gold: Sequence[Sentence], parsed: Sequence[Sentence],
             punct: Iterable[str] = frozenset()) -> EvalResult:
    punct = frozenset(punct)
    if len(gold) != len(parsed):
        raise AlignmentError(f"gold has {len(gold)} sentences but parse has {len(parsed)}")
    evaluated = excluded = heads_ok = both_ok = 0
    for i, (g, p) in enumerate(zip(gold, parsed)):
        if len(g) != len(p):
            raise AlignmentError(f"gold has {len(g)} tokens but parse has {len(p)}", i)
        for gt, pt in zip(g, p):
            if gt.pos in punct:
                excluded += 1
                continue
            evaluated += 1
            if gt.head == pt.head:
                heads_ok += 1
                if gt.label == pt.label:
                    both_ok += 1
    if evaluated == 0:
        return EvalResult(0.0, 0.0, 0, excluded)
    return EvalResult(100.0 * heads_ok / evaluated, 100.0 * both_ok / evaluated,
                      evaluated, excluded, heads_ok, both_ok)


def dev_eval_hook(iteration: int, model, dev: Optional[Sequence[Sentence]],
                  punct: Iterable[str], beam_width: Optional[int] = None,
                  threads: int = 1) -> Optional[EvalResult]:
    """Parse `dev` with the iteration's model and log the scores.

    Does nothing when there is no development data.
    """
    if not dev:
        return None
    results = model.parse_corpus([s.without_heads() for s in dev], beam_width, threads)
    parsed = [r.apply_to(s) for r, s in zip(results, dev)]
    res = evaluate(dev, parsed, punct)
    log.info("iteration %d dev %s", iteration, res.format())
    return res
