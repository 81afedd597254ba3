"""Acceptance run: one test per criterion, each recording a PASS/FAIL line.

The lines are printed in the terminal summary by conftest.py.  Criterion 9
is a documented exclusion and only records its status.
"""

import itertools
import random
import time

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import P0, P1, TINY, Z1_TUPLE
from znec.adversary import (
    FEEDBACK_TAMPER,
    HIDE,
    R_ONLY,
    RANDOM,
    SCHEDULE_CATALOGUE,
    SINGLE_FIRST,
    confusion_replay,
    exhaustive_strategies,
    scenario_strategy,
)
from znec.bounds import (
    FourNodeCode,
    confusion_attack,
    four_node_cut,
    lemma1_margin,
    parameter_grid,
    singleton_bounds,
    theorem1_bound,
    tight_condition,
    upper_bound,
)
from znec.codec import MessageBlock, build_keys, encode
from znec.harness import Session, SessionConfig, run_session, symbol_digest
from znec.mds import FieldTooSmall, make_mds, mds_encode, mds_erasure_decode, mds_error_decode

RESULTS: dict[int, str] = {}


class record:
    """Context manager timing one criterion and storing its verdict line."""

    def __init__(self, number: int, limit_s: float, what: str):
        self.number, self.limit, self.what = number, limit_s, what
        self.detail = ""

    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def __exit__(self, exc_type, exc, tb):
        dt = time.perf_counter() - self.t0
        ok = exc_type is None and dt < self.limit
        why = "" if exc_type is None else f"; {exc_type.__name__}: {exc}"
        if exc_type is None and dt >= self.limit:
            why = f"; exceeded {self.limit:g}s"
        RESULTS[self.number] = (f"criterion {self.number}: {'PASS' if ok else 'FAIL'} "
                                f"({self.what}; {dt:.1f}s{'; ' + self.detail if self.detail else ''}{why})")
        if exc_type is None and not ok:
            pytest.fail(RESULTS[self.number])
        return False


def _rank_mod(rows, q):
    """Plain Gaussian elimination mod q; independent of the package's own linear algebra."""
    M = [list(map(int, r)) for r in rows]
    rank, cols = 0, len(M[0]) if M else 0
    for c in range(cols):
        piv = next((r for r in range(rank, len(M)) if M[r][c] % q), None)
        if piv is None:
            continue
        M[rank], M[piv] = M[piv], M[rank]
        inv = pow(M[rank][c], q - 2, q)
        M[rank] = [v * inv % q for v in M[rank]]
        for r in range(len(M)):
            if r != rank and M[r][c] % q:
                f = M[r][c]
                M[r] = [(a - f * b) % q for a, b in zip(M[r], M[rank])]
        rank += 1
    return rank


def test_criterion_1_rate_identity():
    with record(1, 1.0, "P0 encoder consumes UB = 10 symbols") as rec:
        keys = build_keys(P0)
        assert upper_bound(P0) == 10 == keys.ub
        rng = random.Random(0)
        msg = MessageBlock.random(P0, keys.layout, rng)
        assert msg.size == 10
        cw = encode(P0, keys, msg)
        assert cw.matrix.rows == P0.a and cw.matrix.cols == P0.n + P0.m
        with pytest.raises(ValueError):
            MessageBlock.from_vector([0] * 11, keys.layout, P0)
        rec.detail = "10 symbols per codeword"


def test_criterion_2_bound_ordering():
    with record(2, 10.0, "UB < SB1..SB3 and Lemma-1 margin > 0 on tight grid") as rec:
        tight = [p for p in parameter_grid() if tight_condition(p)]
        assert tight
        skipped = 0
        for p in tight:
            sb = singleton_bounds(p)
            assert upper_bound(p) < min(sb["SB1"], sb["SB2"], sb["SB3"]), p
            if p.n < 2:
                # two identified upstream links need n >= 2
                skipped += 1
                continue
            assert lemma1_margin(p, 2) > 0, p
        rec.detail = f"{len(tight)} tight tuples; Lemma 1 on {len(tight) - skipped} with n >= 2"


def test_criterion_3_theorem1_consistency():
    with record(3, 5.0, "Theorem-1 bound on the four-node cut equals UB") as rec:
        grid = list(parameter_grid())
        for p in grid:
            Z1 = [f"up{j + 1}" for j in range(p.z)]
            Z2 = [f"dn{j + 1}" for j in range(p.z)]
            assert theorem1_bound(four_node_cut(p), Z1, Z2, p.z) == upper_bound(p), p
        rec.detail = f"{len(grid)} grid tuples"


@settings(max_examples=150, deadline=None, derandomize=True)
@given(st.data())
def _converse_examples(data):
    M = theorem1_bound(four_node_cut(TINY), ["up1"], ["dn1"], TINY.z)
    size = TINY.q ** M + 1
    codebook = data.draw(st.lists(st.integers(0, 10 ** 6), min_size=size, max_size=size))
    code = FourNodeCode(TINY, data.draw(st.integers(0, 50)))
    pair = confusion_attack(TINY, codebook, ["up1"], ["dn1"], code=code)
    assert pair is not None
    replay = confusion_replay(TINY, pair, code)
    flat = lambda obs: [v for _, vals in obs for v in vals]
    assert symbol_digest(flat(replay.branch1)) == symbol_digest(flat(replay.branch2))
    assert np.asarray(flat(replay.branch1), dtype="<u4").tobytes() == \
        np.asarray(flat(replay.branch2), dtype="<u4").tobytes()
    assert pair.x != pair.x_prime or pair.index != pair.other_index


def test_criterion_4_converse_demonstration():
    with record(4, 60.0, "tiny preset: 2^M + 1 codewords always confusable") as rec:
        M = theorem1_bound(four_node_cut(TINY), ["up1"], ["dn1"], TINY.z)
        assert M == upper_bound(TINY) == 4
        _converse_examples()
        rec.detail = "150 codebooks of size 17, byte-identical replays"


def _all_errors(length, t, q, values=None):
    values = values or range(1, q)
    for w in range(t + 1):
        for support in itertools.combinations(range(length), w):
            for vals in itertools.product(values, repeat=w):
                e = [0] * length
                for j, v in zip(support, vals):
                    e[j] = v
                yield e


def test_criterion_5_mds_suite():
    with record(5, 60.0, "MDS rank, erasure and error-decoding checks") as rec:
        codes = 0
        for q in (13, 257):
            for length in range(1, 13):
                for dim in range(1, length + 1):
                    code = make_mds(dim, length, q, seed=length * 31 + dim)
                    G = code.gen_array().T.tolist()
                    for cols in itertools.combinations(range(length), dim):
                        assert _rank_mod([G[c] for c in cols], q) == dim
                    codes += 1
        for p in (P0, P1, Z1_TUPLE):
            for rk in build_keys(p).rows:
                for code in (rk.code, rk.claim, rk.case3):
                    if code is None or code.length > 12 or code.dim == 0:
                        continue
                    G = code.gen_array().T.tolist()
                    for cols in itertools.combinations(range(code.length), code.dim):
                        assert _rank_mod([G[c] for c in cols], p.q) == code.dim
                    codes += 1

        code = make_mds(3, 7, 11, seed=5)
        for msg in itertools.product(range(11), repeat=3):
            if random.Random(repr(msg)).random() > 0.05:
                continue
            cw = mds_encode(code, msg)
            for cols in itertools.combinations(range(7), 3):
                assert mds_erasure_decode(code, {c: cw[c] for c in cols}) == list(msg)

        patterns = 0
        rng = random.Random(1)
        for length in range(2, 9):
            for dim in range(1, length):
                t = (length - dim) // 2
                if length < 5:
                    q, msgs = 5, list(itertools.product(range(5), repeat=dim))
                else:
                    with pytest.raises(FieldTooSmall):
                        make_mds(dim, length, 5)
                    q = 7 if length <= 6 else 11
                    msgs = [tuple(rng.randrange(q) for _ in range(dim)) for _ in range(2)]
                code = make_mds(dim, length, q, seed=length + 10 * dim)
                values = None if t <= 2 else (1, 2, q - 1)
                for msg in msgs:
                    cw = mds_encode(code, msg)
                    for e in _all_errors(length, t, q, values):
                        got = mds_error_decode(code, [(a + b) % q for a, b in zip(cw, e)], t)
                        assert got == list(msg)
                        patterns += 1
        rec.detail = f"{codes} codes rank-checked; {patterns} error patterns decoded"


def test_criterion_6_detection_soundness(p0_keys, p1_keys):
    with record(6, 60.0, "10^5 clean rounds over P0 and P1 stay silent") as rec:
        total = 0
        for p, keys in ((P0, p0_keys), (P1, p1_keys)):
            s = Session(SessionConfig(p, rounds=0, seed=6), keys)
            for _ in range(50_000):
                t = s.step()
                assert not t.cs and not t.claim_delivered
                assert t.feedback_count == p.b and t.overhead == 0
                assert t.correct and not t.newly_identified
                total += 1
        assert total == 100_000
        rec.detail = "0 CS, 0 claims, b feedback symbols per round"


def test_criterion_7_z1_exhaustive(z1_keys):
    with record(7, 300.0, "z = 1 exhaustive links x vectors x schedules") as rec:
        p = Z1_TUPLE
        sessions = 0
        for strategy in exhaustive_strategies(p, schedules=SCHEDULE_CATALOGUE):
            res = run_session(SessionConfig(p, rounds=3, strategy=strategy, seed=sessions, strict=True), z1_keys)
            assert res.ok, (strategy, res.verdict)
            assert not res.false_identifications
            sessions += 1
        assert sessions == 10 * (p.n * 5 ** p.a + p.m * 5 ** p.c + 5 ** p.b)
        rec.detail = f"{sessions} sessions, every round decoded"


def test_criterion_8_z2_scenarios(p0_keys):
    with record(8, 600.0, "P0 scenarios x 10^4 seeded trials each") as rec:
        trials = 0
        for kind in (SINGLE_FIRST, HIDE, R_ONLY, FEEDBACK_TAMPER, RANDOM):
            for seed in range(10_000):
                cfg = SessionConfig(P0, rounds=5, strategy=scenario_strategy(kind, P0, seed), seed=seed, strict=True)
                res = run_session(cfg, p0_keys)
                assert res.ok, (kind, seed, res.verdict)
                for t in res.transcripts:
                    if t.adversarial:
                        assert t.event or t.correct
                trials += 1
        rec.detail = f"{trials} trials of 5 rounds, all ALL_CORRECT"


def test_criterion_9_documented_exclusion():
    RESULTS[9] = "criterion 9: EXCLUDED (no reconstructible numeric comparison; acceptance is property-based)"
