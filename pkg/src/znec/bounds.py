"""Capacity bounds for the four-node zig-zag family and the cut-confusion converse.

The four-node network has a source s, relays A and B and a sink u; n upstream
links s->A of capacity a, m downstream links B->u of capacity c, one feedback
link A->B of capacity b, and unbounded reliable links s->B and A->u.
"""

from __future__ import annotations

import hashlib
import itertools
from dataclasses import dataclass, field
from typing import Hashable, Iterable, Mapping, Sequence

from .galois import check_modulus


class InvalidParameters(ValueError):
    pass


class InvalidCutChoice(ValueError):
    pass


@dataclass(frozen=True)
class NetworkParams:
    n: int
    m: int
    a: int
    b: int
    c: int
    z: int
    q: int = 257

    def __post_init__(self):
        for name in ("n", "m", "a", "b", "c", "z"):
            v = getattr(self, name)
            if not isinstance(v, int) or v < 1:
                raise InvalidParameters(f"{name} must be a positive integer, got {v!r}")
        if not self.a > self.c:
            raise InvalidParameters(f"need a > c, got a={self.a}, c={self.c}")
        if not self.a > self.b:
            raise InvalidParameters(f"need a > b, got a={self.a}, b={self.b}")
        if self.n < self.z or self.m < self.z:
            raise InvalidParameters(f"need n >= z and m >= z, got n={self.n}, m={self.m}, z={self.z}")
        try:
            check_modulus(self.q)
        except ValueError as exc:
            raise InvalidParameters(str(exc)) from None

    def replace(self, **kw) -> "NetworkParams":
        fields = dict(n=self.n, m=self.m, a=self.a, b=self.b, c=self.c, z=self.z, q=self.q)
        fields.update(kw)
        return NetworkParams(**fields)

    def as_tuple(self) -> tuple[int, ...]:
        return (self.n, self.m, self.a, self.b, self.c, self.z, self.q)


def upper_bound(p: NetworkParams) -> int:
    return (p.n - p.z) * p.a + (p.m - p.z) * p.c + p.b


def classify(p: NetworkParams) -> int:
    wide_up = p.n >= 2 * (p.z - 1)
    wide_down = p.m >= 2 * p.z
    if wide_up and wide_down:
        return 1
    if wide_down:
        return 2
    if wide_up:
        return 3
    return 4


def singleton_bounds(p: NetworkParams) -> dict[str, int]:
    """Closed-form SB1..SB3 for the category of `p`; SB4 coincides with the upper bound."""
    n, m, a, c, z = p.n, p.m, p.a, p.c, p.z
    cat = classify(p)
    if cat in (1, 2):
        sb1 = n * a + (m - 2 * z) * c
    else:
        sb1 = (n - (2 * z - m)) * a
    if cat in (1, 3):
        sb2 = (n - 2 * (z - 1)) * a + m * c
    else:
        sb2 = (m - (2 * (z - 1) - n)) * c
    sb3 = (n - z + 1) * a + (m - z) * c
    return {"SB1": sb1, "SB2": sb2, "SB3": sb3, "SB4": upper_bound(p)}


def tight_limits(p: NetworkParams) -> tuple[int, int]:
    """The two quantities b must stay strictly below for the category of `p`."""
    n, m, a, c, z = p.n, p.m, p.a, p.c, p.z
    cat = classify(p)
    up = z * (a - c) if cat in (1, 2) else (m - z) * (a - c)
    down = z * c - (z - 2) * a if cat in (1, 3) else (n - z + 2) * c - (n - z) * a
    return up, down


def tight_condition(p: NetworkParams) -> bool:
    return p.b < min(tight_limits(p))


def lemma1_margin(p: NetworkParams, x: int) -> int:
    """Singleton bound on the network left after removing x identified upstream links, minus UB."""
    if not 0 <= x <= p.n:
        raise ValueError(f"x must lie in [0, {p.n}], got {x}")
    a, b, c, n, z = p.a, p.b, p.c, p.n, p.z
    if classify(p) in (2, 4) and x <= 2 * z - n:
        return x * c - (n - z) * (a - c) - b
    return a * x - z * (a - c) - b


@dataclass(frozen=True)
class BoundReport:
    ub: int
    sb: dict
    category: int
    tight: bool
    lemma1_margin_at_2: int

    def __post_init__(self):
        if self.tight and not all(self.ub < self.sb[k] for k in ("SB1", "SB2", "SB3")):
            raise AssertionError(f"tight tuple with UB={self.ub} not below {self.sb}")


def bound_report(p: NetworkParams) -> BoundReport:
    return BoundReport(
        ub=upper_bound(p),
        sb=singleton_bounds(p),
        category=classify(p),
        tight=tight_condition(p),
        lemma1_margin_at_2=lemma1_margin(p, min(2, p.n)),
    )


def parameter_grid(a_max=8, n_max=6, m_max=8, z_max=3, q=257) -> Iterable[NetworkParams]:
    for a in range(2, a_max + 1):
        for c in range(1, a):
            for b in range(1, a):
                for z in range(1, z_max + 1):
                    for n in range(z, n_max + 1):
                        for m in range(z, m_max + 1):
                            yield NetworkParams(n=n, m=m, a=a, b=b, c=c, z=z, q=q)


# -- symbol counts used by the decoding arguments ------------------------------

def post_identification_count(p: NetworkParams) -> int:
    """Worst-case clean MDS symbols after two identified upstream links (K1 or K2)."""
    n, m, a, c, z = p.n, p.m, p.a, p.c, p.z
    if 2 * z - 2 <= n:
        return a * (n + 2 - 2 * z) + c * m
    return c * (m + n - 2 * z + 2)


def feedback_condition(p: NetworkParams) -> int | None:
    """1 when b = z(a-c)-1 with z > 2, 2 when z = 2 and b is odd below z(a-c)-1."""
    full = p.z * (p.a - p.c) - 1
    if p.z > 2 and p.b == full:
        return 1
    if p.z == 2 and p.b % 2 == 1 and p.b < full:
        return 2
    return None


def theorem2_counts(p: NetworkParams) -> tuple[int, int, int]:
    """(R1, R2, trusted v count) for the single-identification decoder."""
    n, m, a, b, c, z = p.n, p.m, p.a, p.b, p.c, p.z
    cond = feedback_condition(p)
    if cond is None:
        raise InvalidParameters("tuple satisfies neither feedback condition")
    if cond == 1:
        r1 = (n - 1) * (a - c - 1)
        v_count = z - 1
    else:
        r1 = (n - 2) * (a - c - 1) + (b - 1) - b // 2
        v_count = 1
    # drop 2(z-1) of the remaining links, upstream first; each surviving upstream
    # link adds its c bottom symbols plus one from the |Δ| = 1 row
    ups_left = max(0, n - 1 - 2 * (z - 1))
    dn_removed = max(0, 2 * (z - 1) - (n - 1))
    r2 = ups_left * (c + 1) + (m - dn_removed) * c
    return r1, r2, v_count


# -- cuts and the confusion bound ---------------------------------------------

@dataclass(frozen=True)
class CutSpec:
    forward_links: tuple[tuple[str, int], ...]
    feedback_links: tuple[tuple[str, int], ...]
    # (forward id, feedback id): the feedback link is directly downstream of the forward link
    downstream_of: frozenset = frozenset()
    # (feedback id, forward id): the feedback link is directly upstream of the forward link
    upstream_of: frozenset = frozenset()
    _cap: dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        fwd = {i for i, _ in self.forward_links}
        fb = {i for i, _ in self.feedback_links}
        if len(fwd) != len(self.forward_links) or len(fb) != len(self.feedback_links) or fwd & fb:
            raise ValueError("link ids must be unique")
        for l, w in self.downstream_of:
            if l not in fwd or w not in fb:
                raise ValueError(f"downstream_of references unknown link ({l}, {w})")
        for w, l in self.upstream_of:
            if w not in fb or l not in fwd:
                raise ValueError(f"upstream_of references unknown link ({w}, {l})")
        self._cap.update(dict(self.forward_links))
        self._cap.update(dict(self.feedback_links))

    def capacity(self, link: str) -> int:
        return self._cap[link]

    @property
    def forward_ids(self) -> list[str]:
        return [i for i, _ in self.forward_links]

    def feedback_between(self, sources: Iterable[str], targets: Iterable[str]) -> set[str]:
        """Feedback links directly downstream of some source and directly upstream of some target."""
        sources, targets = set(sources), set(targets)
        below = {w for l, w in self.downstream_of if l in sources}
        above = {w for w, l in self.upstream_of if l in targets}
        return below & above


def four_node_cut(p: NetworkParams) -> CutSpec:
    ups = tuple((f"up{j + 1}", p.a) for j in range(p.n))
    dns = tuple((f"dn{j + 1}", p.c) for j in range(p.m))
    return CutSpec(
        forward_links=ups + dns,
        feedback_links=(("fb", p.b),),
        downstream_of=frozenset((u, "fb") for u, _ in ups),
        upstream_of=frozenset(("fb", d) for d, _ in dns),
    )


def confusion_sets(cut: CutSpec, Z1: Iterable[str], Z2: Iterable[str], z: int,
                   refine: bool = False) -> tuple[set, set, set]:
    """Validate (Z1, Z2) and return (remaining forward links, W1, W2).

    With `refine` and W2 empty, W1 only keeps feedback links that feed a
    forward link outside both Z1 and Z2.
    """
    Z1, Z2 = set(Z1), set(Z2)
    fwd = set(cut.forward_ids)
    if not (Z1 <= fwd and Z2 <= fwd):
        raise InvalidCutChoice("Z1 and Z2 must be forward links of the cut")
    if Z1 & Z2:
        raise InvalidCutChoice("Z1 and Z2 must be disjoint")
    if len(Z1) > z or len(Z2) > z:
        raise InvalidCutChoice(f"|Z1|, |Z2| must not exceed z={z}")
    rest = fwd - Z1 - Z2
    W2 = cut.feedback_between(Z2, fwd - Z2)
    if W2 or not refine:
        W1 = cut.feedback_between(Z1, fwd - Z1)
    else:
        W1 = cut.feedback_between(Z1, rest)
    feeds = {(l, w) for l, w in cut.downstream_of}
    if any((l, w) in feeds for l in Z2 for w in W1) or any((l, w) in feeds for l in Z1 for w in W2):
        raise InvalidCutChoice("invalid Z1/Z2 pair for this cut")
    return rest, W1, W2


def theorem1_bound(cut: CutSpec, Z1: Iterable[str], Z2: Iterable[str], z: int, refine: bool = False) -> int:
    rest, W1, W2 = confusion_sets(cut, Z1, Z2, z, refine)
    return sum(cut.capacity(l) for l in rest | W1 | W2)


def theorem1_min(cut: CutSpec, z: int, refine: bool = False) -> tuple[int, frozenset, frozenset]:
    """Smallest bound over all valid (Z1, Z2) choices; cuts up to 12 forward links."""
    fwd = cut.forward_ids
    if len(fwd) > 12:
        raise ValueError("exhaustive search limited to 12 forward links")
    best = None
    subsets = [frozenset(s) for k in range(z + 1) for s in itertools.combinations(fwd, k)]
    for Z1 in subsets:
        for Z2 in subsets:
            if Z1 & Z2:
                continue
            try:
                M = theorem1_bound(cut, Z1, Z2, z, refine)
            except InvalidCutChoice:
                continue
            key = (M, sorted(Z1), sorted(Z2))
            if best is None or key < (best[0], sorted(best[1]), sorted(best[2])):
                best = (M, Z1, Z2)
    return best


# -- deterministic four-node network codes for the converse --------------------

def _hash_symbols(seed: int, tag: str, key: Hashable, count: int, q: int) -> tuple[int, ...]:
    digest = hashlib.sha256(repr((seed, tag, key)).encode()).digest()
    while len(digest) < 2 * count:
        digest += hashlib.sha256(digest).digest()
    return tuple(int.from_bytes(digest[2 * i:2 * i + 2], "little") % q for i in range(count))


@dataclass(frozen=True)
class FourNodeCode:
    """An arbitrary deterministic code on the four-node network.

    Upstream symbols depend on the message; node A's feedback on what A
    receives; node B's downstream symbols on the message and what B hears
    on the feedback link.  Default maps are seeded pseudo-random functions.
    """

    p: NetworkParams
    seed: int = 0

    def upstream(self, msg) -> list[tuple[int, ...]]:
        return [_hash_symbols(self.seed, f"up{j}", msg, self.p.a, self.p.q) for j in range(self.p.n)]

    def feedback(self, received_up: Sequence[tuple[int, ...]]) -> tuple[int, ...]:
        return _hash_symbols(self.seed, "fb", tuple(received_up), self.p.b, self.p.q)

    def downstream(self, msg, fb_received: tuple[int, ...]) -> list[tuple[int, ...]]:
        return [_hash_symbols(self.seed, f"dn{j}", (msg, fb_received), self.p.c, self.p.q)
                for j in range(self.p.m)]


def _add(vec, err, q):
    if err is None:
        return tuple(vec)
    if len(err) != len(vec):
        raise ValueError("error vector length does not match link capacity")
    return tuple((v + e) % q for v, e in zip(vec, err))


def evaluate_links(code: FourNodeCode, msg, errors: Mapping[str, Sequence[int]] | None = None) -> dict:
    """Run one transmission and return every link's output, keyed by link id."""
    errors = errors or {}
    q = code.p.q
    out = {}
    up = code.upstream(msg)
    received = [_add(v, errors.get(f"up{j + 1}"), q) for j, v in enumerate(up)]
    for j, v in enumerate(received):
        out[f"up{j + 1}"] = v
    fb = _add(code.feedback(received), errors.get("fb"), q)
    out["fb"] = fb
    for j, v in enumerate(code.downstream(msg, fb)):
        out[f"dn{j + 1}"] = _add(v, errors.get(f"dn{j + 1}"), q)
    return out


def sink_observation(outputs: Mapping[str, tuple]) -> tuple:
    """What the sink side of the cut sees: every forward link output, in link order."""
    ups = sorted((k for k in outputs if k.startswith("up")), key=lambda s: int(s[2:]))
    dns = sorted((k for k in outputs if k.startswith("dn")), key=lambda s: int(s[2:]))
    return tuple((k, outputs[k]) for k in ups + dns)


@dataclass(frozen=True)
class ConfusionPair:
    index: int
    other_index: int
    x: Hashable
    x_prime: Hashable
    errors_z1: dict  # applied while x is sent
    errors_z2: dict  # applied while x' is sent
    bound: int


def confusion_attack(p: NetworkParams, codebook: Sequence[Hashable], Z1: Iterable[str], Z2: Iterable[str],
                     code: FourNodeCode | None = None, refine: bool = False) -> ConfusionPair | None:
    """Find two codewords and error patterns on Z1 / Z2 that the sink cannot tell apart."""
    code = code or FourNodeCode(p)
    cut = four_node_cut(p)
    Z1, Z2 = sorted(Z1), sorted(Z2)
    rest, W1, W2 = confusion_sets(cut, Z1, Z2, p.z, refine)
    M = sum(cut.capacity(l) for l in rest | W1 | W2)
    if len(codebook) <= p.q ** M:
        raise ValueError(f"codebook of size {len(codebook)} does not exceed q^M = {p.q ** M}")
    agree_on = sorted(rest | W1 | W2)
    seen: dict[tuple, int] = {}
    for idx, msg in enumerate(codebook):
        clean = evaluate_links(code, msg)
        key = tuple(clean[l] for l in agree_on)
        if key not in seen:
            seen[key] = idx
            continue
        first = seen[key]
        x, xp = codebook[first], msg
        cx, cxp = evaluate_links(code, x), clean
        q = p.q
        e1 = {l: tuple((u2 - u1) % q for u1, u2 in zip(cx[l], cxp[l])) for l in Z1}
        e2 = {l: tuple((w1 - w2) % q for w1, w2 in zip(cx[l], cxp[l])) for l in Z2}
        return ConfusionPair(first, idx, x, xp, e1, e2, M)
    return None
