"""Acceptance criteria. Each test records one PASS/FAIL line that is printed
in the terminal summary under "acceptance criteria"."""

import io
import random
import time
from contextlib import contextmanager

import numpy as np
import pytest

import conftest
from arceager.conll import Sentence, default_punctuation, is_tree, write_conll
from arceager.decoder import Constraints
from arceager.evaluation import evaluate, round_half_up
from arceager.features import Alphabets, FeatureSetMode
from arceager.learning import TrainConfig, UpdateStrategy, WeightVector
from arceager.model import ParserModel, load, train
from arceager.oracles import Gold, action_costs, static_oracle, zero_cost_actions
from arceager.transition import (UNSHIFT, Action, RootMode, apply, conll_heads,
                                 initial_configuration, is_terminal)
from treegen import brute_force_best, projective_trees, random_projective_tree
from worked import LABELS, WORKED_ACTIONS, WORKED_ARCS

PUNCT = default_punctuation()


@contextmanager
def criterion(number, title):
    details = []
    try:
        yield details
    except BaseException:
        conftest.ACCEPTANCE_LINES.append(f"criterion {number} FAIL {title} {' '.join(details)}")
        raise
    conftest.ACCEPTANCE_LINES.append(f"criterion {number} PASS {title} {' '.join(details)}")


def uas(model, sentences, beam, threads=1):
    res = model.parse_corpus([s.without_heads() for s in sentences], beam, threads)
    return evaluate(sentences, [r.apply_to(s) for r, s in zip(res, sentences)], PUNCT).uas


def conll_text(model, sentences, beam, threads):
    res = model.parse_corpus([s.without_heads() for s in sentences], beam, threads)
    out = io.StringIO()
    write_conll([r.apply_to(s) for r, s in zip(res, sentences)], out, labeled=model.labeled)
    return out.getvalue()


@pytest.fixture(scope="module")
def default_run(sample_train):
    start = time.perf_counter()
    model, logs = train(sample_train, TrainConfig(threads=1))
    return model, logs, time.perf_counter() - start


# 1

def test_worked_example_replay():
    with criterion(1, "worked example replay") as info:
        ids = {l: i for i, l in enumerate(sorted(set(LABELS)))}
        names = {i: l for l, i in ids.items()}
        actions = [Action(k, ids[l] if l else 0) for k, l in WORKED_ACTIONS]
        best = float("inf")
        for _ in range(50):
            t = time.perf_counter()
            c = initial_configuration(7)
            for a in actions:
                c = apply(c, a)
            best = min(best, time.perf_counter() - t)
        arcs = {(names[l], h, d) for d, (h, l) in c.arcs().items()}
        info.append(f"actions={len(actions)} time={best * 1e3:.3f}ms")
        assert arcs == WORKED_ARCS
        assert is_terminal(c) and c.stack == () and c.buffer == [8]
        assert best < 1e-3


# 2

def static_replay(heads, labels, mode):
    gold = Gold.build(heads, labels, mode)
    c = initial_configuration(len(heads), mode)
    while not is_terminal(c):
        c = apply(c, static_oracle(c, gold))
    return conll_heads(c) == list(heads) and list(c.labels[1:len(heads) + 1]) == list(labels)


def test_static_oracle_round_trip():
    with criterion(2, "static oracle round trip") as info:
        start = time.perf_counter()
        total = ok = 0
        for mode in RootMode:
            for n in range(1, 6):
                for heads in projective_trees(n):
                    total += 1
                    ok += static_replay(heads, [d % 3 for d in range(1, n + 1)], mode)
            rng = random.Random(12)
            for _ in range(1000):
                n = rng.randint(1, 12)
                heads = random_projective_tree(n, rng)
                total += 1
                ok += static_replay(heads, [rng.randrange(5) for _ in range(n)], mode)
        secs = time.perf_counter() - start
        info.append(f"trees={total} exact={ok} time={secs:.1f}s")
        assert ok == total and secs < 60


# 3

def zero_cost_frontier(c, gold, depth):
    """Configurations reachable from c by at most `depth` zero-cost actions."""
    seen, frontier = {c}, [c]
    for _ in range(depth):
        nxt = []
        for x in frontier:
            if is_terminal(x):
                continue
            for a in zero_cost_actions(x, gold, 2):
                y = apply(x, a)
                if y not in seen:
                    seen.add(y)
                    nxt.append(y)
        frontier = nxt
    return seen


def zero_cost_leaves(c, gold, memo):
    """Set of terminal trees reachable through zero-cost actions only."""
    if c in memo:
        return memo[c]
    if is_terminal(c):
        out = {(tuple(c.heads[1:c.n + 1]), tuple(c.labels[1:c.n + 1]))}
    else:
        out = set()
        for a in zero_cost_actions(c, gold, 2):
            out |= zero_cost_leaves(apply(c, a), gold, memo)
    memo[c] = out
    return out


def test_dynamic_oracle_matches_brute_force():
    with criterion(3, "dynamic oracle vs exhaustive search") as info:
        start = time.perf_counter()
        checked = mismatches = 0
        for mode in RootMode:
            for n in range(1, 5):
                for heads in projective_trees(n):
                    labels = [d % 2 for d in range(1, n + 1)]
                    gold = Gold.build(heads, labels, mode)
                    init = initial_configuration(n, mode)
                    for c in zero_cost_frontier(init, gold, 6):
                        if is_terminal(c):
                            continue
                        best = brute_force_best(c, gold, 2)
                        for a, cost in action_costs(c, gold, 2).items():
                            if a.kind == UNSHIFT:
                                continue
                            checked += 1
                            if best - brute_force_best(apply(c, a), gold, 2) != cost:
                                mismatches += 1
                    leaves = zero_cost_leaves(init, gold, {})
                    assert leaves == {(gold.heads[1:n + 1], gold.labels[1:n + 1])}
        secs = time.perf_counter() - start
        info.append(f"action_costs_checked={checked} mismatches={mismatches} "
                    f"time={secs:.1f}s")
        assert mismatches == 0 and secs < 300


# 4

def test_lazy_equals_eager_averaging():
    with criterion(4, "lazy averaging equals eager shadow") as info:
        rng = random.Random(21)
        keys = list(range(1, 200)) + [(90, i, 3) for i in range(20)]
        w = WeightVector(6, capacity=16)
        raw, total = {}, {}
        for _ in range(10_000):
            deltas = {}
            for _ in range(rng.randint(1, 8)):
                k = (rng.choice(keys), rng.randrange(6))
                deltas[k] = deltas.get(k, 0.0) + rng.uniform(-2, 2)
            w.update(deltas)
            for k, v in deltas.items():
                raw[k] = raw.get(k, 0.0) + v
            for k, v in raw.items():
                total[k] = total.get(k, 0.0) + v
        snap = w.averaged()
        worst = 0.0
        for (key, a), s in total.items():
            worst = max(worst, abs(snap.matrix[snap.index[key], a] - s / w.clock))
        feats = keys[:50]
        for a in range(6):
            eager = sum(total.get((k, a), 0.0) for k in feats) / w.clock
            worst = max(worst, abs(w.score(feats, a, averaged=True) - eager))
        info.append(f"updates={w.clock} max_abs_diff={worst:.2e}")
        assert worst < 1e-9


# 5

def test_training_convergence(default_run, sample_train, sample_dev):
    with criterion(5, "training convergence with defaults") as info:
        model, logs, secs = default_run
        start = time.perf_counter()
        greedy, _ = train(sample_train, TrainConfig(beam_width=1, threads=1))
        train_uas = uas(model, sample_train, 64)
        dev64 = uas(model, sample_dev, 64)
        dev1 = uas(greedy, sample_dev, 1)
        total = secs + time.perf_counter() - start
        info.append(f"sentences={len(sample_train)} train_uas={round_half_up(train_uas)} "
                    f"dev_uas_beam64={round_half_up(dev64)} dev_uas_beam1={round_half_up(dev1)} "
                    f"time={total:.0f}s")
        assert len(sample_train) >= 200
        assert len(logs) == 20
        assert train_uas >= 95
        assert dev64 >= dev1
        assert total < 600


# 6

def test_update_strategies_converge(tmp_path, sample_train, sample_dev):
    with criterion(6, "early and max-violation both converge") as info:
        for update in UpdateStrategy:
            path = str(tmp_path / f"{update.value}.model")
            cfg = TrainConfig(beam_width=8, iterations=8, update=update, threads=1)
            model, logs = train(sample_train, cfg, dev=sample_dev, model_path=path)
            final = uas(model, sample_train, 8)
            info.append(f"{update.value}: updates {logs[0].updates}->{logs[-1].updates} "
                        f"train_uas={round_half_up(final)} "
                        f"dev_uas={round_half_up(logs[-1].dev.uas)}")
            assert all(e.dev is not None for e in logs)
            assert [e.path for e in logs] == [f"{path}_iter{k}" for k in range(1, 9)]
            assert all(load(e.path).iteration == e.iteration for e in logs)
            assert logs[-1].updates < logs[0].updates / 2
            assert final >= 95


# 7

def throughput(model, sentences, beam):
    inputs = [s.without_heads() for s in sentences]
    best = 0.0
    for _ in range(2):
        t = time.perf_counter()
        model.parse_corpus(inputs, beam, 1)
        best = max(best, len(inputs) / (time.perf_counter() - t))
    return best


def test_speed_against_beam_width(default_run, sample_train, sample_dev, sample_clusters):
    with criterion(7, "throughput falls with beam width") as info:
        model = default_run[0]
        corpus = sample_dev
        speeds = [throughput(model, corpus, b) for b in (1, 8, 64)]
        basic, _ = train(sample_train, TrainConfig(beam_width=1, iterations=2, threads=1,
                                                   basic=True))
        rich, _ = train(sample_train, TrainConfig(beam_width=4, iterations=2, threads=1),
                        clusters=sample_clusters)
        assert rich.mode == FeatureSetMode(with_clusters=True)
        fast = throughput(basic, corpus, 1)
        slow = throughput(rich, corpus, 64)
        info.append("sent/s beam1={:.0f} beam8={:.0f} beam64={:.0f}".format(*speeds)
                    + f" basic_beam1={fast:.0f} clusters_beam64={slow:.1f}"
                    f" ratio={fast / slow:.1f}")
        assert speeds[0] >= speeds[1] >= speeds[2]
        assert fast >= 5 * slow


# 8

def test_thread_count_determinism(default_run, sample_train, sample_dev):
    with criterion(8, "thread count does not change output") as info:
        model = default_run[0]
        corpus = sample_dev + sample_train[:140]
        outputs = {t: conll_text(model, corpus, 8, t) for t in (1, 4, 8)}
        info.append(f"sentences={len(corpus)} threads=1,4,8")
        assert outputs[1] == outputs[4] == outputs[8]
        # input order: token columns match the input sentence by sentence
        blocks = outputs[8].strip("\n").split("\n\n")
        assert [[l.split("\t")[1] for l in b.splitlines()] for b in blocks] == \
            [s.forms for s in corpus]


# 9

def test_partial_parsing_keeps_planted_arcs(default_run, sample_train):
    with criterion(9, "partial parsing keeps planted arcs") as info:
        model = default_run[0]
        rng = random.Random(9)
        vocab = [t for s in sample_train for t in s]
        labels = model.alphabets.labels
        planted = kept = fallbacks = 0
        for _ in range(500):
            n = rng.randint(2, 15)
            heads = random_projective_tree(n, rng)
            toks = [rng.choice(vocab) for _ in range(n)]
            chosen = set(rng.sample(range(n), max(1, round(0.3 * n))))
            c_heads = [h if i in chosen else -1 for i, h in enumerate(heads)]
            c_labels = [rng.choice(labels) if i in chosen else None for i in range(n)]
            s = Sentence.from_lists([t.form for t in toks], [t.pos for t in toks])
            cons = Constraints(tuple(h if h >= 0 else None for h in c_heads), tuple(c_labels))
            r = model.parse(s, 8, cons)
            fallbacks += r.fallback_used
            for i in chosen:
                planted += 1
                kept += r.heads[i] == heads[i] and r.labels[i] == c_labels[i]
        info.append(f"trees=500 planted={planted} kept={kept} fallbacks={fallbacks}")
        assert kept == planted and fallbacks == 0


# 10

def test_evaluation_correctness(sample_dev):
    with criterion(10, "evaluation correctness") as info:
        same = evaluate(sample_dev, sample_dev, PUNCT)
        gold = Sentence.from_lists(["He", "ate", "the", "cake", "."],
                                   ["PRP", "VBD", "DT", "NN", "."], [2, 0, 4, 2, 2],
                                   ["nsubj", "root", "det", "dobj", "punct"])
        wrong = gold.with_parse([2, 0, 2, 2, 4], gold.labels)
        three_of_four = evaluate([gold], [wrong], PUNCT)
        info.append(f"self={round_half_up(same.uas)}/{round_half_up(same.las)} "
                    f"three_of_four={round_half_up(three_of_four.uas)}")
        assert round_half_up(same.uas) == round_half_up(same.las) == "100.00"
        assert round_half_up(three_of_four.uas) == "75.00"
        assert three_of_four.excluded == 1 and three_of_four.evaluated == 4
        n_punct = sum(t.pos in PUNCT for s in sample_dev for t in s)
        assert n_punct > 0 and same.excluded == n_punct


# 11

class RandomWeights:
    """Stand-in for an untrained model: every (feature, action) pair gets a
    fixed pseudo-random weight derived from a hash of the key."""

    def __init__(self, n_actions, seed):
        self.n_actions = n_actions
        self.mult = np.uint64(0x9E3779B97F4A7C15 ^ seed)
        self.acts = (np.arange(n_actions, dtype=np.uint64) + np.uint64(1)) * np.uint64(
            0xBF58476D1CE4E5B9)

    def rows(self, keys, comps):
        if comps:
            extra = np.array([[hash(k) & 0xFFFFFFFFFFFF for k in row] for row in comps],
                             dtype=np.uint64)
            keys = np.concatenate([keys, extra], axis=1)
        return keys

    def score_rows(self, rows):
        with np.errstate(over="ignore"):
            h = (rows[..., None] * self.mult) ^ self.acts
            h ^= h >> np.uint64(29)
        w = (h & np.uint64(0xFFFF)).astype(float) / 32768.0 - 1.0
        w[rows == 0] = 0.0
        return w.sum(axis=1)


def test_unshift_robustness(sample_train):
    with criterion(11, "root-initial greedy decoding always yields trees") as info:
        alphabets = Alphabets.from_sentences(sample_train)
        model = ParserModel(alphabets, None, root=RootMode.INITIAL, beam_width=1)
        model.weights = RandomWeights(model.space.size, 11)
        searcher = model.searcher
        rng = random.Random(11)
        vocab = [t for s in sample_train for t in s]
        used_unshift = well_formed = 0
        for _ in range(10_000):
            n = rng.randint(1, 20)
            toks = [rng.choice(vocab) for _ in range(n)]
            s = Sentence.from_lists([t.form for t in toks], [t.pos for t in toks])
            enc = searcher.extractor.encode(s)
            beam = [searcher.start(n, RootMode.INITIAL)]
            steps = 0
            while not beam[0].terminal:
                step = searcher.score(beam, enc, model.weights)
                beam, _ = searcher.expand(beam, step, 1)
                steps += 1
                assert steps <= 6 * n + 10, "decoding did not terminate"
            c = beam[0].config
            used_unshift += searcher.space.size - 1 in beam[0].history
            heads = conll_heads(c)
            well_formed += None not in heads and is_tree(heads, single_root=False)
        info.append(f"sentences=10000 well_formed={well_formed} with_unshift={used_unshift}")
        assert well_formed == 10_000
        assert used_unshift > 0


# 12

def test_model_round_trip(default_run, tmp_path, sample_train, sample_dev):
    with criterion(12, "model save/load/parse round trip") as info:
        model = default_run[0]
        path = model.save(str(tmp_path / "default.model"))
        loaded = load(path)
        corpus = sample_train + sample_dev
        before = conll_text(model, corpus, None, 4)
        after = conll_text(loaded, corpus, None, 4)
        info.append(f"sentences={len(corpus)} bytes={len(before.encode())}")
        assert before.encode() == after.encode()
        assert loaded.to_bytes() == model.to_bytes()
