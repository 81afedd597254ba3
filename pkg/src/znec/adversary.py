"""Attack strategies and the replay of the cut-confusion converse."""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .bounds import ConfusionPair, FourNodeCode, NetworkParams, evaluate_links, sink_observation
from .codec import CodecKeys, Link, all_links, link_capacity
from .galois import np_rref
from .signaling import FeedbackMessage, feedback_wire, new_node_a, node_a_observe

NONE = "NONE"
SINGLE_FIRST = "SINGLE_FIRST"
HIDE = "HIDE"
R_ONLY = "R_ONLY"
FEEDBACK_TAMPER = "FEEDBACK_TAMPER"
RANDOM = "RANDOM"
EXHAUSTIVE = "EXHAUSTIVE"
KINDS = (NONE, SINGLE_FIRST, HIDE, R_ONLY, FEEDBACK_TAMPER, RANDOM, EXHAUSTIVE)

# multipliers applied to the base error vector in rounds 1..3
SCHEDULE_CATALOGUE = (
    (1, 0, 0), (0, 1, 0), (0, 0, 1), (1, 1, 1), (1, 2, 3),
    (2, 0, 1), (1, 1, 0), (0, 1, 1), (3, 1, 2), (1, 0, 4),
)


class BudgetViolation(ValueError):
    pass


@dataclass(frozen=True)
class AdversaryAction:
    round: int
    errors: dict = field(default_factory=dict)     # Link -> tuple, length = capacity
    overhead: dict = field(default_factory=dict)   # downstream Link -> tuple of a-c claim-symbol errors

    @property
    def links(self) -> frozenset:
        return frozenset(l for l, e in self.errors.items() if any(e)) | \
            frozenset(l for l, e in self.overhead.items() if any(e))

    def fb_errors(self, b: int) -> tuple[int, ...]:
        return tuple(self.errors.get(Link("fb"), (0,) * b))


@dataclass(frozen=True)
class Strategy:
    kind: str
    owned: tuple = ()
    seed: int = 0
    link: Link | None = None              # SINGLE_FIRST / HIDE first link / R_ONLY link
    schedule: tuple = ()                  # SINGLE_FIRST values, EXHAUSTIVE multipliers
    row: int = 0                          # R_ONLY
    vector: tuple = ()                    # EXHAUSTIVE base error vector

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown strategy kind {self.kind!r}")


@dataclass
class AdversaryView:
    """What the omniscient adversary knows when choosing a round's errors."""
    round: int
    clean_wire: np.ndarray
    identified: frozenset = frozenset()


def _rand_vec(rng: random.Random, k: int, q: int, nonzero: bool = False) -> tuple[int, ...]:
    while True:
        v = tuple(rng.randrange(q) for _ in range(k))
        if not nonzero or any(v):
            return v


def _codewords_on(keys: CodecKeys, row: int, cols: Sequence[int], rng: random.Random) -> np.ndarray:
    """A random codeword of the row code supported inside `cols` (zero if only the trivial one exists)."""
    p = keys.params
    q = p.q
    G = keys.rows[row].code.gen_array()
    n = p.n
    outside = [j for j in range(n) if j not in set(cols)]
    dim = G.shape[0]
    if dim == 0:
        return np.zeros(n, dtype=np.int64)
    # messages m with (m G)[outside] = 0: null space of G[:, outside]^T
    A = G[:, outside].T if outside else np.zeros((0, dim), dtype=np.int64)
    R, piv = np_rref(A, q) if A.size else (np.zeros((0, dim), dtype=np.int64), [])
    free = [c for c in range(dim) if c not in piv]
    if not free:
        return np.zeros(n, dtype=np.int64)
    m = np.zeros(dim, dtype=np.int64)
    for c in free:
        m[c] = rng.randrange(q)
    for r, c in enumerate(piv):
        m[c] = (-int(R[r, free] @ m[free])) % q
    return (m @ G) % q


class Adversary:
    """Stateful driver for one session; all randomness comes from the strategy seed."""

    def __init__(self, strategy: Strategy, p: NetworkParams, keys: CodecKeys):
        owned = tuple(strategy.owned)
        if len(set(owned)) > p.z:
            raise BudgetViolation(f"adversary owns {len(set(owned))} links, budget is z = {p.z}")
        for l in owned:
            if l not in all_links(p):
                raise ValueError(f"unknown link {l}")
        self.strategy = strategy
        self.p = p
        self.keys = keys
        self.owned = frozenset(owned)
        self.rng = random.Random(repr(("adv", strategy.seed, strategy.kind)))

    # -- helpers -----------------------------------------------------------
    def _zero(self, l: Link) -> tuple[int, ...]:
        return (0,) * link_capacity(self.p, l)

    def _random_errors(self, links: Iterable[Link], prob: float = 1.0) -> tuple[dict, dict]:
        p, errs, over = self.p, {}, {}
        for l in sorted(links, key=Link.sort_key):
            if self.rng.random() >= prob:
                continue
            errs[l] = _rand_vec(self.rng, link_capacity(p, l), p.q, nonzero=True)
            if l.kind == "dn":
                over[l] = _rand_vec(self.rng, p.a - p.c, p.q)
        return errs, over

    def _fb_cover(self, view: AdversaryView, errs: dict) -> tuple[int, ...]:
        """Feedback errors that make B receive what an honest A would send on a clean round."""
        p, keys = self.p, self.keys
        P = frozenset(l.index for l in view.identified if l.kind == "up")
        wl = keys.wire
        clean_up = np.stack([view.clean_wire[list(wl.up[j])] for j in range(p.n)], axis=1)
        dirty = clean_up.copy()
        for l, e in errs.items():
            if l.kind == "up":
                dirty[:, l.index] = (dirty[:, l.index] + np.array(e)) % p.q
        a_state = new_node_a(keys)
        a_state.identified_positions = P
        honest, _ = node_a_observe(a_state, clean_up, keys.layout, keys)
        a_state = new_node_a(keys)
        a_state.identified_positions = P
        actual, _ = node_a_observe(a_state, dirty, keys.layout, keys)
        h, a = feedback_wire(honest), feedback_wire(actual)
        if len(h) != len(a):
            return (0,) * len(a)
        return tuple(int(v) for v in (h - a) % p.q)

    # -- main entry ----------------------------------------------------------
    def next_action(self, view: AdversaryView) -> AdversaryAction:
        s, p, r = self.strategy, self.p, view.round
        errs: dict = {}
        over: dict = {}
        if s.kind == NONE:
            pass
        elif s.kind == SINGLE_FIRST:
            if r < len(s.schedule):
                val = s.schedule[r]
                vec = tuple(val) if isinstance(val, (tuple, list)) else (int(val),) + (0,) * (link_capacity(p, s.link) - 1)
                errs[s.link] = tuple(int(v) % p.q for v in vec)
        elif s.kind == R_ONLY:
            e = [0] * link_capacity(p, s.link)
            e[s.row] = self.rng.randrange(1, p.q)
            errs[s.link] = tuple(e)
        elif s.kind == HIDE:
            errs, over = self._hide(view)
        elif s.kind == FEEDBACK_TAMPER:
            others = [l for l in self.owned if l.kind != "fb"]
            errs, over = self._random_errors(others, prob=0.5)
            if Link("fb") in self.owned and p.b:
                errs[Link("fb")] = _rand_vec(self.rng, p.b, p.q, nonzero=True)
        elif s.kind == RANDOM:
            errs, over = self._random_errors(self.owned, prob=0.5)
            if Link("fb") in errs and self.rng.random() < 0.5:
                errs[Link("fb")] = self._fb_cover(view, errs)
        elif s.kind == EXHAUSTIVE:
            if r < len(s.schedule) and s.schedule[r]:
                errs[s.link] = tuple(int(v) * s.schedule[r] % p.q for v in s.vector)
        action = AdversaryAction(r, {l: e for l, e in errs.items() if any(e)},
                                 {l: e for l, e in over.items() if any(e)})
        self.check(action)
        return action

    def _hide(self, view: AdversaryView) -> tuple[dict, dict]:
        """First round: one error on the first link.  Later: errors that keep A's checks silent."""
        s, p, keys = self.strategy, self.p, self.keys
        if view.round == 0:
            e = [0] * link_capacity(p, s.link)
            e[0] = self.rng.randrange(1, p.q)
            return {s.link: tuple(e)}, {}
        ups = sorted(l.index for l in self.owned if l.kind == "up")
        errs: dict = {}
        for l in self.owned:
            if l.kind != "fb":
                errs[l] = list(self._zero(l))
        for i in range(len(keys.layout)):
            cw = _codewords_on(keys, i, ups, self.rng)
            for j in ups:
                errs[Link("up", j)][i] = int(cw[j])
        for l in list(errs):
            if l.kind == "up":
                for rr in range(len(keys.layout), p.a):
                    errs[l][rr] = self.rng.randrange(p.q)
            elif l.kind == "dn":
                errs[l] = list(_rand_vec(self.rng, p.c, p.q))
        errs = {l: tuple(v) for l, v in errs.items()}
        over = {l: _rand_vec(self.rng, p.a - p.c, p.q) for l in errs if l.kind == "dn"}
        if Link("fb") in self.owned:
            errs[Link("fb")] = self._fb_cover(view, errs)
        return errs, over

    def check(self, action: AdversaryAction) -> None:
        p = self.p
        for l, e in action.errors.items():
            if l not in self.owned:
                raise BudgetViolation(f"error on unowned link {l}")
            if len(e) != link_capacity(p, l):
                raise BudgetViolation(f"error vector on {l} has length {len(e)}, capacity {link_capacity(p, l)}")
        for l, e in action.overhead.items():
            if l not in self.owned or l.kind != "dn" or len(e) != p.a - p.c:
                raise BudgetViolation(f"bad overhead error on {l}")


def next_action(adversary: Adversary, view: AdversaryView) -> AdversaryAction:
    return adversary.next_action(view)


# -- strategy catalogue ------------------------------------------------------------

def parse_strategy(text: str, p: NetworkParams, seed: int = 0) -> Strategy:
    """Parse NAME[:ARGS] as used on the command line.

    none | single:LINK[:v1,v2,..] | hide:FIRST[:L1,L2] | r_only:ROW:COL |
    feedback[:LINK] | random[:SEED] | exhaustive:LINK:v1,..:m1,m2,..
    """
    parts = text.split(":")
    name = parts[0].strip().lower()
    args = parts[1:]
    if name == "none":
        return Strategy(NONE)
    if name in ("single", "single_first"):
        link = Link.parse(args[0]) if args else Link("up", 0)
        sched = tuple(int(v) for v in args[1].split(",")) if len(args) > 1 else (1,)
        return Strategy(SINGLE_FIRST, (link,), seed, link=link, schedule=sched)
    if name == "hide":
        first = Link.parse(args[0]) if args else Link("up", 0)
        rest = [Link.parse(x) for x in args[1].split(",")] if len(args) > 1 else []
        owned = tuple(dict.fromkeys([first] + rest))
        return Strategy(HIDE, owned, seed, link=first)
    if name in ("r_only", "ronly"):
        row = int(args[0]) if args else 0
        col = int(args[1]) if len(args) > 1 else p.n - 1
        link = Link("up", col)
        return Strategy(R_ONLY, (link,), seed, link=link, row=row)
    if name in ("feedback", "feedback_tamper"):
        owned = (Link("fb"),) + ((Link.parse(args[0]),) if args else ())
        return Strategy(FEEDBACK_TAMPER, owned, seed)
    if name == "random":
        s = int(args[0]) if args else seed
        return random_strategy(p, s)
    if name == "exhaustive":
        link = Link.parse(args[0])
        vec = tuple(int(v) for v in args[1].split(","))
        sched = tuple(int(v) for v in args[2].split(",")) if len(args) > 2 else (1,)
        return Strategy(EXHAUSTIVE, (link,), seed, link=link, vector=vec, schedule=sched)
    raise ValueError(f"unknown strategy {text!r}")


def random_strategy(p: NetworkParams, seed: int) -> Strategy:
    rng = random.Random(repr(("owned", seed)))
    links = all_links(p)
    k = rng.randint(1, p.z)
    owned = tuple(sorted(rng.sample(links, k), key=Link.sort_key))
    return Strategy(RANDOM, owned, seed)


def scenario_strategy(kind: str, p: NetworkParams, seed: int) -> Strategy:
    """Seeded instance of a named scenario on any parameter tuple (used by the randomized trials)."""
    rng = random.Random(repr(("scenario", kind, seed)))
    ups = [Link("up", j) for j in range(p.n)]
    dns = [Link("dn", j) for j in range(p.m)]
    if kind == SINGLE_FIRST:
        link = rng.choice(ups + dns)
        sched = tuple(rng.randrange(p.q) for _ in range(4))
        return Strategy(SINGLE_FIRST, (link,), seed, link=link, schedule=sched)
    if kind == HIDE:
        first = rng.choice(ups)
        pool = [l for l in ups + dns + [Link("fb")] if l != first]
        rest = rng.sample(pool, p.z - 1)
        return Strategy(HIDE, tuple([first] + rest), seed, link=first)
    if kind == R_ONLY:
        row = rng.randrange(p.a - p.c)
        link = Link("up", rng.randrange(p.n))
        return Strategy(R_ONLY, (link,), seed, link=link, row=row)
    if kind == FEEDBACK_TAMPER:
        other = rng.sample(ups + dns, p.z - 1)
        return Strategy(FEEDBACK_TAMPER, (Link("fb"), *other), seed)
    if kind == RANDOM:
        return random_strategy(p, seed)
    if kind == NONE:
        return Strategy(NONE)
    raise ValueError(f"no scenario for {kind}")


def exhaustive_strategies(p: NetworkParams, schedules: Sequence[tuple] | None = None,
                          rounds: int | None = None) -> Iterable[Strategy]:
    """Every (owned link, error vector, schedule) for a one-link adversary.

    By default the schedules inject the error in exactly one of `rounds` rounds.
    """
    if schedules is None:
        rounds = rounds or 1
        schedules = [tuple(int(k == r) for k in range(rounds)) for r in range(rounds)]
    for cursor, (link, sched) in enumerate(itertools.product(all_links(p), schedules)):
        cap = link_capacity(p, link)
        for vec in itertools.product(range(p.q), repeat=cap):
            yield Strategy(EXHAUSTIVE, (link,), cursor, link=link, vector=vec, schedule=tuple(sched))


def exhaustive_count(p: NetworkParams, n_schedules: int) -> int:
    return sum(p.q ** link_capacity(p, l) for l in all_links(p)) * n_schedules


# -- converse replay ------------------------------------------------------------------

@dataclass(frozen=True)
class ReplayResult:
    branch1: tuple
    branch2: tuple
    outputs1: dict
    outputs2: dict

    @property
    def identical(self) -> bool:
        return self.branch1 == self.branch2


def confusion_replay(p: NetworkParams, pair: ConfusionPair, code: FourNodeCode | None = None) -> ReplayResult:
    """Run both attack branches through the link model; the sink sides must coincide."""
    code = code or FourNodeCode(p)
    out1 = evaluate_links(code, pair.x, pair.errors_z1)
    out2 = evaluate_links(code, pair.x_prime, pair.errors_z2)
    res = ReplayResult(sink_observation(out1), sink_observation(out2), out1, out2)
    if not res.identical:
        raise AssertionError("confusion branches produce different sink observations")
    return res
