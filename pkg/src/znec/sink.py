"""Sink-side decoding by search over trusted symbol sets.

A hypothesis S names the links the sink distrusts this round (always a
superset of the identified links, at most z of them).  The remaining wire
symbols, plus the X symbols that the relays' signaling vouches for, form a
linear system in the UB message unknowns; a hypothesis is accepted when that
system has full rank and is consistent.

The search is correct whenever every pair of maximal hypotheses shares a
full-rank set of trusted symbols: the true hypothesis is always consistent,
and any other consistent one must then agree with it.  `certificate` checks
exactly that condition.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .bounds import NetworkParams
from .codec import CodecKeys, Link, MessageBlock, all_links
from .galois import InconsistentSystem, UnderdeterminedSystem, independent_rows, np_inverse, np_rank
from .mds import DecodeFailure, mds_error_decode
from .signaling import FeedbackMessage, check_message

Z1_PATH = "Z1_PATH"
NO_SIGNAL_SUBSET = "NO_SIGNAL_SUBSET"
CLAIM_MDS = "CLAIM_MDS"
POST_2_IDENTIFIED = "POST_2_IDENTIFIED"
THEOREM2 = "THEOREM2"


@dataclass(frozen=True)
class SinkView:
    upstream: np.ndarray               # a x n, as received by A and relayed
    downstream: np.ndarray             # c x m
    feedback_echo: tuple = ()          # messages A reports having sent
    claims: np.ndarray | None = None   # (a-c) x m claim block, when B sent one
    identified: frozenset = frozenset()

    @property
    def e(self) -> int:
        return len(self.identified)

    @property
    def identified_up(self) -> frozenset:
        return frozenset(l.index for l in self.identified if l.kind == "up")


@dataclass(frozen=True)
class DecodeOutcome:
    message: MessageBlock | None
    newly_identified: frozenset
    mode: str
    vector: np.ndarray | None = field(default=None, compare=False)
    hypothesis: tuple = ()
    tried: int = 0

    @property
    def ok(self) -> bool:
        return self.message is not None


# -- trusted sets ---------------------------------------------------------------

def _up_count(I: Iterable[Link]) -> int:
    return sum(1 for l in I if l.kind == "up")


def _mode(keys: CodecKeys, I: frozenset, claim: bool) -> str:
    if _up_count(I) >= 2:
        return POST_2_IDENTIFIED
    return CLAIM_MDS if claim else NO_SIGNAL_SUBSET


def pinned_slots(keys: CodecKeys, I: frozenset) -> tuple[int, ...]:
    """X symbols the signaling vouches for when no claim arrived and feedback was clean."""
    P = {l.index for l in I if l.kind == "up"}
    n = keys.params.n
    out = []
    for i, lr in enumerate(keys.layout):
        if len(P) == 1 and lr.case(keys.params.z) == 4:
            cols = [j for j in range(lr.k1, lr.dim) if j not in P]
        else:
            cols = [j for j in range(n) if j not in P]
        out.extend(keys.wire.up[j][i] for j in cols)
    return tuple(out)


def trusted_symbols(keys: CodecKeys, I: frozenset, S: frozenset, claim: bool) -> tuple[int, ...]:
    wl, p = keys.wire, keys.params
    mode = _mode(keys, I, claim)
    idx: set[int] = set()
    for j in range(p.n):
        if Link("up", j) not in S:
            idx.update(wl.up[j])
    for j in range(p.m):
        if Link("dn", j) not in S:
            idx.update(wl.dn[j])
            if mode == CLAIM_MDS:
                idx.update(wl.claim[j])
    if mode == NO_SIGNAL_SUBSET and Link("fb") not in S:
        idx.update(pinned_slots(keys, I))
    return tuple(sorted(idx))


def hypotheses(keys: CodecKeys, I: frozenset, claim: bool, maximal_only: bool = False) -> list[frozenset]:
    """Hypotheses in search order: fewer extra links first, then upstream < downstream < feedback."""
    cache_key = ("hyp", I, claim, maximal_only)
    hit = keys._cache.get(cache_key)
    if hit is not None:
        return hit
    p = keys.params
    mode = _mode(keys, I, claim)
    cand = [l for l in all_links(p) if l not in I and not (l.kind == "fb" and mode != NO_SIGNAL_SUBSET)]
    budget = max(0, min(p.z - len(I), len(cand)))
    sizes = [budget] if maximal_only else range(budget + 1)
    out = [frozenset(I) | frozenset(E) for k in sizes for E in itertools.combinations(cand, k)]
    keys._cache[cache_key] = out
    return out


@dataclass(frozen=True, eq=False)
class _Solver:
    rows: np.ndarray
    inverse: np.ndarray
    rest: np.ndarray
    rest_gen: np.ndarray


def _solver(keys: CodecKeys, trusted: tuple[int, ...]) -> _Solver | None:
    key = ("solve", trusted)
    if key in keys._cache:
        return keys._cache[key]
    q, ub = keys.params.q, keys.ub
    G = keys.wire_gen[:, list(trusted)]
    piv = independent_rows(G.T, q) if G.size else []
    if len(piv) < ub:
        solver = None
    else:
        rows = np.array([trusted[k] for k in piv], dtype=np.int64)
        inverse = np_inverse(keys.wire_gen[:, rows], q)
        chosen = set(piv)
        rest = np.array([t for k, t in enumerate(trusted) if k not in chosen], dtype=np.int64)
        solver = _Solver(rows, inverse, rest, keys.wire_gen[:, rest])
    keys._cache[key] = solver
    return solver


def solve_trusted(keys: CodecKeys, trusted: tuple[int, ...], obs: np.ndarray) -> np.ndarray:
    """Message vector explaining `obs` on the trusted symbols.

    Raises UnderdeterminedSystem when the symbols do not pin the message down
    and InconsistentSystem when no message explains them.
    """
    s = _solver(keys, trusted)
    if s is None:
        raise UnderdeterminedSystem("trusted symbols do not determine the message")
    q = keys.params.q
    u = (obs[s.rows] @ s.inverse) % q
    if s.rest.size and np.any((u @ s.rest_gen - obs[s.rest]) % q):
        raise InconsistentSystem("trusted symbols disagree")
    return u


def certificate(keys: CodecKeys, I: frozenset = frozenset(), claim: bool = False) -> bool:
    """Every pair of maximal hypotheses shares trusted symbols of full rank."""
    key = ("cert", frozenset(I), claim)
    if key in keys._cache:
        return keys._cache[key]
    q, ub = keys.params.q, keys.ub
    hyps = hypotheses(keys, frozenset(I), claim, maximal_only=True)
    sets = [frozenset(trusted_symbols(keys, frozenset(I), S, claim)) for S in hyps]
    seen: set = set()
    ok = True
    for a in range(len(sets)):
        for b in range(a, len(sets)):
            inter = sets[a] & sets[b]
            if inter in seen:
                continue
            seen.add(inter)
            if np_rank(keys.wire_gen[:, sorted(inter)], q) < ub:
                ok = False
                break
        if not ok:
            break
    keys._cache[key] = ok
    return ok


# -- observations ---------------------------------------------------------------

def observation_vector(keys: CodecKeys, view: SinkView) -> np.ndarray:
    wl, p = keys.wire, keys.params
    o = np.zeros(wl.total, dtype=np.int64)
    up = np.asarray(view.upstream, dtype=np.int64)
    dn = np.asarray(view.downstream, dtype=np.int64)
    for j in range(p.n):
        o[list(wl.up[j])] = up[:, j]
    for j in range(p.m):
        o[list(wl.dn[j])] = dn[:, j]
        if view.claims is not None:
            o[list(wl.claim[j])] = np.asarray(view.claims)[:, j]
    return o % p.q


def view_from_wire(keys: CodecKeys, wire: np.ndarray, claim: bool, feedback_echo=(),
                   identified: frozenset = frozenset()) -> SinkView:
    """Split a wire-symbol vector into the blocks a SinkView holds."""
    wl, p = keys.wire, keys.params
    up = np.stack([wire[list(wl.up[j])] for j in range(p.n)], axis=1)
    dn = np.stack([wire[list(wl.dn[j])] for j in range(p.m)], axis=1)
    W = np.stack([wire[list(wl.claim[j])] for j in range(p.m)], axis=1) if claim else None
    return SinkView(up, dn, tuple(feedback_echo), W, frozenset(identified))


# -- decoders -------------------------------------------------------------------

def consistency_decode(view: SinkView, assumed_bad: Iterable[Link], p: NetworkParams,
                       keys: CodecKeys) -> MessageBlock:
    """Decode assuming exactly the links in `assumed_bad` (plus identified ones) may be wrong."""
    S = frozenset(view.identified) | frozenset(assumed_bad)
    if len(S) > p.z:
        raise ValueError(f"assumed bad set of size {len(S)} exceeds z = {p.z}")
    claim = view.claims is not None
    trusted = trusted_symbols(keys, frozenset(view.identified), S, claim)
    u = solve_trusted(keys, trusted, observation_vector(keys, view))
    return MessageBlock.from_vector(u, keys.layout, p)


def decode_with_claim(X_hat, W_hat, keys: CodecKeys, erased_columns: Sequence[int] = (),
                      t: int | None = None) -> list[list[int]]:
    """Correct each row of (X̂ | Ŵ) under the claim code; returns per-row messages.

    Columns 0..n-1 are upstream links, n..n+m-1 downstream links.  Raises
    DecodeFailure when some row has no codeword within distance t.
    """
    p = keys.params
    if not keys.claim_available:
        raise DecodeFailure(f"no claim code over GF({p.q}) for length {p.n + p.m}")
    t = p.z if t is None else t
    X_hat = np.asarray(X_hat, dtype=np.int64)
    W_hat = np.asarray(W_hat, dtype=np.int64)
    out = []
    for i, rk in enumerate(keys.rows):
        row = [int(v) for v in X_hat[i, :p.n]] + [int(v) for v in W_hat[i, :p.m]]
        out.append(mds_error_decode(rk.claim, row, t, erasures=erased_columns))
    return out


def claim_radius_ok(keys: CodecKeys, erased: int, t: int) -> bool:
    return all(2 * t < rk.claim.distance - erased for rk in keys.rows)


def _mode_label(keys: CodecKeys, I: frozenset, claim: bool) -> str:
    mode = _mode(keys, I, claim)
    if mode != NO_SIGNAL_SUBSET:
        return mode
    if _up_count(I) == 1 and any(lr.case(keys.params.z) == 4 for lr in keys.layout):
        return THEOREM2
    return Z1_PATH if keys.params.z == 1 else NO_SIGNAL_SUBSET


def _search(keys: CodecKeys, view: SinkView, order: Sequence[frozenset], strict: bool):
    I = frozenset(view.identified)
    claim = view.claims is not None
    o = observation_vector(keys, view)
    found, hyp, tried = None, (), 0
    for S in order:
        tried += 1
        try:
            u = solve_trusted(keys, trusted_symbols(keys, I, S, claim), o)
        except (InconsistentSystem, UnderdeterminedSystem):
            continue
        if found is None:
            found, hyp = u, tuple(sorted(S, key=Link.sort_key))
            if not strict:
                break
        elif not np.array_equal(found, u):
            raise AssertionError(f"hypotheses {hyp} and {sorted(S)} decode to different messages")
    return found, hyp, tried


def identify_links(keys: CodecKeys, view: SinkView, u: np.ndarray) -> frozenset:
    """Links whose delivered symbols provably differ from the decoded codeword.

    The feedback link is identified when node B's observable decision (claim
    or not) disagrees with what A's echoed feedback would have produced.
    """
    p, wl = keys.params, keys.wire
    o = observation_vector(keys, view)
    expect = (u @ keys.wire_gen) % p.q
    diff = (o - expect) % p.q
    bad = set()
    for j in range(p.n):
        if np.any(diff[list(wl.up[j])]):
            bad.add(Link("up", j))
    for j in range(p.m):
        idx = list(wl.dn[j]) + (list(wl.claim[j]) if view.claims is not None else [])
        if np.any(diff[idx]):
            bad.add(Link("dn", j))
    P = frozenset(l.index for l in view.identified if l.kind == "up")
    if view.feedback_echo and len(P) < 2:
        expected_claim = any(check_message(m, u, P, keys).claim for m in view.feedback_echo)
        if expected_claim != (view.claims is not None):
            bad.add(Link("fb"))
    return frozenset(bad) - frozenset(view.identified)


def _outcome(keys: CodecKeys, view: SinkView, found, hyp, tried, mode) -> DecodeOutcome:
    if found is None:
        return DecodeOutcome(None, frozenset(), mode, None, (), tried)
    msg = MessageBlock.from_vector(found, keys.layout, keys.params)
    return DecodeOutcome(msg, identify_links(keys, view, found), mode, found, hyp, tried)


def decode(view: SinkView, p: NetworkParams, keys: CodecKeys, strict: bool = False) -> DecodeOutcome:
    """Decode one round.  With `strict`, every consistent hypothesis is checked to agree."""
    I = frozenset(view.identified)
    claim = view.claims is not None
    mode = _mode_label(keys, I, claim)
    if mode == POST_2_IDENTIFIED:
        return decode_post_identified(view, p, keys, strict=strict)
    if mode == THEOREM2:
        (i,) = [l.index for l in I if l.kind == "up"]
        return theorem2_decode(view, p, keys, i, strict=strict)
    found, hyp, tried = _search(keys, view, hypotheses(keys, I, claim), strict)
    if claim and strict and found is not None:
        erased = sorted(l.index if l.kind == "up" else p.n + l.index for l in I if l.kind != "fb")
        t = p.z - len(I)
        if keys.claim_available and claim_radius_ok(keys, len(erased), t):
            X_hat = np.asarray(view.upstream)[:len(keys.layout)]
            rows = decode_with_claim(X_hat, view.claims, keys, erased, t)
            flat = [v for r in rows for v in r]
            if flat != [int(v) for v in found[:len(flat)]]:
                raise AssertionError("claim-code decode disagrees with the subset search")
    return _outcome(keys, view, found, hyp, tried, mode)


def decode_post_identified(view: SinkView, p: NetworkParams, keys: CodecKeys, strict: bool = False) -> DecodeOutcome:
    """Decode from the links left after two upstream identifications; feedback is ignored."""
    I = frozenset(view.identified)
    if _up_count(I) < 2:
        raise ValueError("needs at least two identified upstream links")
    found, hyp, tried = _search(keys, view, hypotheses(keys, I, False), strict)
    return _outcome(keys, view, found, hyp, tried, POST_2_IDENTIFIED)


def theorem2_order(keys: CodecKeys, I: frozenset, claim: bool = False) -> list[frozenset]:
    """Removal sets ordered O-1 (extra links all upstream), O-2 (mixed), O-3 (all downstream)."""
    def group(S):
        kinds = {l.kind for l in S - I}
        if kinds <= {"up"}:
            return 0
        if kinds <= {"dn"}:
            return 2
        return 1
    hyps = hypotheses(keys, I, claim)
    return sorted(hyps, key=lambda S: (group(S), len(S)))


def theorem2_decode(view: SinkView, p: NetworkParams, keys: CodecKeys, identified_up: int,
                    strict: bool = False) -> DecodeOutcome:
    """Decode with one identified upstream link and raw v symbols forwarded, without a claim."""
    I = frozenset(view.identified)
    if Link("up", identified_up) not in I or _up_count(I) != 1:
        raise ValueError("exactly one identified upstream link is required")
    claim = view.claims is not None
    found, hyp, tried = _search(keys, view, theorem2_order(keys, I, claim), strict)
    return _outcome(keys, view, found, hyp, tried, CLAIM_MDS if claim else THEOREM2)
