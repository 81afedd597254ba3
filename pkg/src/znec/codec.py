"""Encoder for the four-node network: row layouts, codewords, syndromes and claim blocks.

The message vector u holds the X messages row by row followed by Y in
row-major order.  Every wire symbol is a fixed linear function of u, so
the whole encoder collapses into one generator `wire_gen` whose columns are
laid out link by link (see `WireLayout`).
"""

from __future__ import annotations

import itertools
import random
import struct
from dataclasses import dataclass, field
from functools import lru_cache
from typing import NamedTuple, Sequence

import numpy as np

from .bounds import NetworkParams, classify, tight_condition, upper_bound
from .galois import SymbolMatrix, np_inverse, np_rank
from .mds import FieldTooSmall, MdsCode, choose_points, mds_on_points


class UnsupportedParameters(ValueError):
    pass


_KIND_ORDER = {"up": 0, "dn": 1, "fb": 2}


class Link(NamedTuple):
    kind: str   # 'up', 'dn' or 'fb'
    index: int = 0

    def sort_key(self) -> tuple[int, int]:
        return (_KIND_ORDER[self.kind], self.index)

    def __str__(self):
        return "fb" if self.kind == "fb" else f"{self.kind}{self.index + 1}"

    @classmethod
    def parse(cls, text: str) -> "Link":
        text = text.strip()
        if text == "fb":
            return cls("fb", 0)
        if text[:2] in ("up", "dn") and text[2:].isdigit() and int(text[2:]) >= 1:
            return cls(text[:2], int(text[2:]) - 1)
        raise ValueError(f"bad link id {text!r}; expected upN, dnN or fb")


def all_links(p: NetworkParams) -> list[Link]:
    return ([Link("up", j) for j in range(p.n)] + [Link("dn", j) for j in range(p.m)] + [Link("fb")])


def link_capacity(p: NetworkParams, link: Link) -> int:
    return {"up": p.a, "dn": p.c, "fb": p.b}[link.kind]


@dataclass(frozen=True)
class LayoutRow:
    k1: int
    k2_prime: int
    k3: int

    @property
    def dim(self) -> int:
        return self.k1 + self.k2_prime

    def case(self, z: int) -> int:
        """Signaling case: 1 for |Δ|=z, 2 for 2<=|Δ|<z, 3 for |Δ|=0, 4 for |Δ|=1."""
        if self.k3 == z:
            return 1
        if self.k3 == 0:
            return 3
        if self.k3 == 1:
            return 4
        return 2


@dataclass(frozen=True)
class RowLayout:
    rows: tuple[LayoutRow, ...]

    def __post_init__(self):
        for r in self.rows:
            if r.k3 < 0 or r.k1 + r.k2_prime + r.k3 < 0:
                raise ValueError(f"invalid layout row {r}")

    @property
    def k2_primes(self) -> tuple[int, ...]:
        return tuple(r.k2_prime for r in self.rows)

    def __len__(self):
        return len(self.rows)

    def __iter__(self):
        return iter(self.rows)

    def __getitem__(self, i):
        return self.rows[i]


def _k2_assignment(p: NetworkParams) -> list[int]:
    rows, z, b = p.a - p.c, p.z, p.b
    out = [0] * rows
    if z == 1:
        out[:b] = [1] * b
        return out
    if z == 2:
        if b % 2 == 0:
            out[:b // 2] = [2] * (b // 2)
            return out
        if b == 2 * rows - 1:
            raise UnsupportedParameters(
                "b = z(a-c)-1 with z = 2 is uncovered: neither feedback condition applies")
        out[:b // 2] = [2] * (b // 2)
        out[b // 2] = 1
        return out
    Q = -(-b // z)
    phi = Q * z - b
    if phi == 0:
        out[:Q] = [z] * Q
    elif Q == rows:
        # phi >= 2 leaves a row with 2 <= |Δ| <= z; phi == 1 is the single |Δ| = 1 row
        out[:Q - 1] = [z] * (Q - 1)
        out[Q - 1] = z - phi
    else:
        out[:Q - 1] = [z] * (Q - 1)
        out[Q - 1] = z - phi - 1
        out[Q] = 1
    return out


def plan_layout(p: NetworkParams) -> RowLayout:
    if not tight_condition(p):
        raise UnsupportedParameters(f"tight condition fails for {p}")
    k1 = p.n - p.z
    ks = _k2_assignment(p)
    assert sum(ks) == p.b and all(0 <= k <= p.z for k in ks)
    return RowLayout(tuple(LayoutRow(k1, k, p.z - k) for k in ks))


@dataclass(frozen=True)
class MessageBlock:
    x_symbols: tuple[tuple[int, ...], ...]
    y_symbols: tuple[tuple[int, ...], ...]

    def to_vector(self) -> np.ndarray:
        flat = [v for r in self.x_symbols for v in r] + [v for r in self.y_symbols for v in r]
        return np.array(flat, dtype=np.int64)

    @classmethod
    def from_vector(cls, u, layout: RowLayout, p: NetworkParams) -> "MessageBlock":
        u = [int(v) for v in u]
        if len(u) != upper_bound(p):
            raise ValueError(f"message vector has {len(u)} symbols, expected {upper_bound(p)}")
        xs, pos = [], 0
        for r in layout:
            xs.append(tuple(u[pos:pos + r.dim]))
            pos += r.dim
        w = p.n + p.m - 2 * p.z
        ys = tuple(tuple(u[pos + i * w:pos + (i + 1) * w]) for i in range(p.c))
        return cls(tuple(xs), ys)

    @classmethod
    def random(cls, p: NetworkParams, layout: RowLayout, rng: random.Random) -> "MessageBlock":
        return cls.from_vector([rng.randrange(p.q) for _ in range(upper_bound(p))], layout, p)

    @property
    def size(self) -> int:
        return sum(map(len, self.x_symbols)) + sum(map(len, self.y_symbols))


@dataclass(frozen=True)
class WireLayout:
    """Column indices of `wire_gen` belonging to each link.

    Upstream link j carries column j of C (a symbols, X rows first); downstream
    link j carries the bottom c entries of column n+j, plus the a-c claim
    symbols of W column j in claim rounds.
    """

    up: tuple[tuple[int, ...], ...]
    dn: tuple[tuple[int, ...], ...]
    claim: tuple[tuple[int, ...], ...]
    base_size: int
    total: int

    def x_slot(self, row: int, col: int) -> int:
        return self.up[col][row]


def _wire_layout(p: NetworkParams) -> WireLayout:
    up, pos = [], 0
    for _ in range(p.n):
        up.append(tuple(range(pos, pos + p.a)))
        pos += p.a
    dn = []
    for _ in range(p.m):
        dn.append(tuple(range(pos, pos + p.c)))
        pos += p.c
    base = pos
    claim = []
    for _ in range(p.m):
        claim.append(tuple(range(pos, pos + p.a - p.c)))
        pos += p.a - p.c
    return WireLayout(tuple(up), tuple(dn), tuple(claim), base, pos)


@dataclass(frozen=True, eq=False)
class RowKeys:
    points: tuple[int, ...]
    code: MdsCode            # C1: dim k1+k2', length n
    eta: np.ndarray          # parity of C1, dim x k3
    theta: np.ndarray        # k1 x k2' coefficients of the feedback symbols
    sub_parity: np.ndarray   # parity of C0 (dim k1), k1 x z
    claim: MdsCode | None    # dim k1+k2', length n+m
    case3: MdsCode | None    # dim n, length n+z


@dataclass(frozen=True, eq=False)
class CodecKeys:
    params: NetworkParams
    layout: RowLayout
    rows: tuple[RowKeys, ...]
    l_coeffs: np.ndarray     # UB x (c*2z); column r*2z+j feeds L[r, j]
    wire: WireLayout
    wire_gen: np.ndarray     # UB x wire.total
    seed: int = 0
    _cache: dict = field(default_factory=dict, compare=False, repr=False, hash=False)

    @property
    def ub(self) -> int:
        return self.l_coeffs.shape[0]

    @property
    def claim_available(self) -> bool:
        return all(r.claim is not None for r in self.rows)

    @property
    def H(self) -> np.ndarray:
        """θ coefficients of all rows, side by side (k1 x b)."""
        k1 = self.params.n - self.params.z
        return np.hstack([np.zeros((k1, 0), dtype=np.int64)] + [r.theta for r in self.rows])

    def x_offsets(self) -> list[int]:
        offs, pos = [], 0
        for r in self.layout:
            offs.append(pos)
            pos += r.dim
        return offs


def _row_keys(p: NetworkParams, row: LayoutRow, seed, index: int) -> RowKeys:
    q = p.q
    if q <= p.n:
        raise FieldTooSmall(f"field too small: need q > {p.n}, got q = {q}")
    if row.k3 == 0 and q <= p.n + p.z:
        raise FieldTooSmall(f"field too small: need q > {p.n + p.z} for |Δ| = 0 rows, got q = {q}")
    if q > p.n + p.m:
        length = p.n + p.m
    elif q > p.n + p.z:
        length = p.n + p.z
    else:
        length = p.n
    pts = choose_points(length, q, repr((seed, "row", index)))
    code = mds_on_points(row.dim, pts[:p.n], q)
    sub = mds_on_points(row.k1, pts[:p.n], q)
    sub_parity = sub.parity.to_array() if row.k1 else np.zeros((0, p.z), dtype=np.int64)
    theta = sub_parity[:, :row.k2_prime]
    eta = code.parity.to_array() if row.dim else np.zeros((0, row.k3), dtype=np.int64)
    claim = mds_on_points(row.dim, pts, q) if len(pts) >= p.n + p.m else None
    case3 = mds_on_points(p.n, pts[:p.n + p.z], q) if row.k3 == 0 else None
    return RowKeys(tuple(pts), code, eta, theta, sub_parity, claim, case3)


def _assemble_wire_gen(p: NetworkParams, layout: RowLayout, rows: Sequence[RowKeys],
                       l_coeffs: np.ndarray, wire: WireLayout) -> np.ndarray:
    ub, q = upper_bound(p), p.q
    G = np.zeros((ub, wire.total), dtype=np.int64)
    off = 0
    for i, (r, rk) in enumerate(zip(layout, rows)):
        if r.dim:
            block = rk.code.gen_array()
            for j in range(p.n):
                G[off:off + r.dim, wire.up[j][i]] = block[:, j]
            if rk.claim is not None:
                cb = rk.claim.gen_array()
                for j in range(p.m):
                    G[off:off + r.dim, wire.claim[j][i]] = cb[:, p.n + j]
        off += r.dim
    ywidth = p.n + p.m - 2 * p.z
    rows_x = p.a - p.c

    def bottom(rr: int, col: int) -> np.ndarray:
        v = np.zeros(ub, dtype=np.int64)
        if col < ywidth:
            v[off + rr * ywidth + col] = 1
        else:
            v[:] = l_coeffs[:, rr * 2 * p.z + (col - ywidth)]
        return v

    for rr in range(p.c):
        for j in range(p.n):
            G[:, wire.up[j][rows_x + rr]] = bottom(rr, j)
        for j in range(p.m):
            G[:, wire.dn[j][rr]] = bottom(rr, p.n + j)
    return G % q


def _l_coeffs(p: NetworkParams, seed, attempt: int) -> np.ndarray:
    rng = random.Random(repr((seed, "L", attempt)))
    cols = p.c * 2 * p.z
    return np.array([[rng.randrange(1, p.q) for _ in range(cols)] for _ in range(upper_bound(p))],
                    dtype=np.int64)


def build_keys(p: NetworkParams, seed: int = 0, certify: bool = False, max_attempts: int = 64) -> CodecKeys:
    """Construct the codec keys for `p`.

    With `certify`, the L coefficients are redrawn until the sink's
    decodability certificate holds in every reachable state: each set of at
    most z identified links, with and without a claim block.
    """
    return _build_keys(p, seed, certify, max_attempts)


def certified_states(keys: "CodecKeys"):
    """(identified set, claim flag) pairs the certificate has to cover."""
    p = keys.params
    links = all_links(p)
    modes = [False] + ([True] if keys.claim_available else [])
    for r in range(p.z + 1):
        for I in itertools.combinations(links, r):
            for claim in modes:
                yield frozenset(I), claim


@lru_cache(maxsize=64)
def _build_keys(p: NetworkParams, seed: int, certify: bool, max_attempts: int) -> CodecKeys:
    from .sink import certificate  # sink depends on codec

    layout = plan_layout(p)
    rows = tuple(_row_keys(p, r, seed, i) for i, r in enumerate(layout))
    wire = _wire_layout(p)
    for attempt in range(max_attempts):
        lc = _l_coeffs(p, seed, attempt)
        gen = _assemble_wire_gen(p, layout, rows, lc, wire)
        keys = CodecKeys(p, layout, rows, lc, wire, gen, seed)
        if np_rank(gen[:, :wire.base_size], p.q) < upper_bound(p):
            continue
        if not certify:
            return keys
        if all(certificate(keys, I, claim) for I, claim in certified_states(keys)):
            return keys
    raise UnsupportedParameters(f"no generic L block found for {p} after {max_attempts} attempts")


# -- encoding ------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Codeword:
    matrix: SymbolMatrix
    wire: np.ndarray
    layout: RowLayout
    layout_m: int

    @property
    def X(self) -> np.ndarray:
        n = self.matrix.cols - self.layout_m
        return self.matrix.to_array()[:len(self.layout), :n]


def wire_symbols(keys: CodecKeys, u: np.ndarray) -> np.ndarray:
    """All wire symbols (base and claim) for message vector(s) u; works on batches."""
    return (np.asarray(u, dtype=np.int64) @ keys.wire_gen) % keys.params.q


def codeword_matrix(keys: CodecKeys, wire: np.ndarray) -> np.ndarray:
    p, wl = keys.params, keys.wire
    C = np.zeros((p.a, p.n + p.m), dtype=np.int64)
    for j in range(p.n):
        C[:, j] = wire[list(wl.up[j])]
    for j in range(p.m):
        C[p.a - p.c:, p.n + j] = wire[list(wl.dn[j])]
    return C


def encode(p: NetworkParams, keys: CodecKeys, msg: MessageBlock) -> Codeword:
    if keys.params != p:
        raise ValueError("keys were built for different parameters")
    expected = [r.dim for r in keys.layout]
    if [len(r) for r in msg.x_symbols] != expected or len(msg.y_symbols) != p.c or \
            any(len(r) != p.n + p.m - 2 * p.z for r in msg.y_symbols):
        raise ValueError("message dimensions do not match the row layout")
    w = wire_symbols(keys, msg.to_vector() % p.q)
    return Codeword(SymbolMatrix.from_array(codeword_matrix(keys, w), p.q), w, keys.layout, p.m)


# -- per-row quantities computed by node A ------------------------------------

def compute_delta(row_received: Sequence[int], row: int, keys: CodecKeys) -> np.ndarray:
    """Parity residuals of one received X row: r̂_j minus its re-encoding from (x̂, v̂)."""
    lr, rk, q = keys.layout[row], keys.rows[row], keys.params.q
    r = np.asarray(row_received, dtype=np.int64)
    if lr.k3 == 0:
        return np.zeros(0, dtype=np.int64)
    return (r[lr.dim:] - r[:lr.dim] @ rk.eta) % q


def feedback_symbols(row_received: Sequence[int], row: int, keys: CodecKeys) -> np.ndarray:
    """f_j = v̂_j minus the C0 re-encoding of x̂ at the v positions."""
    lr, rk, q = keys.layout[row], keys.rows[row], keys.params.q
    r = np.asarray(row_received, dtype=np.int64)
    if lr.k2_prime == 0:
        return np.zeros(0, dtype=np.int64)
    return (r[lr.k1:lr.dim] - r[:lr.k1] @ rk.theta) % q


def case3_symbols(row_received: Sequence[int], row: int, keys: CodecKeys) -> np.ndarray:
    rk = keys.rows[row]
    return (np.asarray(row_received, dtype=np.int64) @ rk.case3.parity.to_array()) % keys.params.q


def claim_matrix(keys: CodecKeys, X) -> np.ndarray:
    """W block: row i is the last m coordinates of the claim-code extension of X row i."""
    p = keys.params
    if not keys.claim_available:
        raise FieldTooSmall(f"claim code needs q > n+m = {p.n + p.m}")
    X = np.asarray(X, dtype=np.int64)
    W = np.zeros((len(keys.layout), p.m), dtype=np.int64)
    for i, (lr, rk) in enumerate(zip(keys.layout, keys.rows)):
        if lr.dim:
            W[i] = (X[i, :lr.dim] @ rk.claim.gen_array()[:, p.n:]) % p.q
    return W


# -- key serialization ---------------------------------------------------------

MAGIC = b"ZNEC1"


def _pack_matrix(arr: np.ndarray) -> bytes:
    arr = np.asarray(arr, dtype=np.int64)
    r, c = arr.shape if arr.ndim == 2 else (0, 0)
    return struct.pack("<II", r, c) + b"".join(struct.pack("<I", int(v)) for v in arr.ravel())


def _unpack_matrix(buf: bytes, pos: int) -> tuple[np.ndarray, int]:
    r, c = struct.unpack_from("<II", buf, pos)
    pos += 8
    vals = struct.unpack_from(f"<{r * c}I", buf, pos)
    pos += 4 * r * c
    return np.array(vals, dtype=np.int64).reshape(r, c), pos


def keys_to_blob(keys: CodecKeys) -> bytes:
    """Versioned blob: magic, params, per-row points, then the L coefficients and wire generator."""
    p = keys.params
    out = [MAGIC, struct.pack("<7I", *p.as_tuple()), struct.pack("<I", len(keys.rows))]
    for rk in keys.rows:
        out.append(_pack_matrix(np.array([rk.points], dtype=np.int64)))
    out.append(_pack_matrix(keys.l_coeffs))
    out.append(_pack_matrix(keys.wire_gen))
    return b"".join(out)


def keys_from_blob(blob: bytes) -> CodecKeys:
    if not blob.startswith(MAGIC):
        raise ValueError("not a ZNEC1 key blob")
    pos = len(MAGIC)
    n, m, a, b, c, z, q = struct.unpack_from("<7I", blob, pos)
    pos += 28
    p = NetworkParams(n=n, m=m, a=a, b=b, c=c, z=z, q=q)
    layout = plan_layout(p)
    (count,) = struct.unpack_from("<I", blob, pos)
    pos += 4
    if count != len(layout):
        raise ValueError("row count in blob does not match the layout")
    rows = []
    for lr in layout:
        pts, pos = _unpack_matrix(blob, pos)
        pts = tuple(int(v) for v in pts.ravel())
        code = mds_on_points(lr.dim, pts[:n], q)
        sub = mds_on_points(lr.k1, pts[:n], q)
        sub_parity = sub.parity.to_array() if lr.k1 else np.zeros((0, z), dtype=np.int64)
        eta = code.parity.to_array() if lr.dim else np.zeros((0, lr.k3), dtype=np.int64)
        rows.append(RowKeys(pts, code, eta, sub_parity[:, :lr.k2_prime], sub_parity,
                            mds_on_points(lr.dim, pts, q) if len(pts) >= n + m else None,
                            mds_on_points(n, pts[:n + z], q) if lr.k3 == 0 else None))
    lc, pos = _unpack_matrix(blob, pos)
    gen, pos = _unpack_matrix(blob, pos)
    wire = _wire_layout(p)
    rebuilt = _assemble_wire_gen(p, layout, rows, lc, wire)
    if not np.array_equal(rebuilt, gen):
        raise ValueError("wire generator in blob is inconsistent with its row points")
    return CodecKeys(p, layout, tuple(rows), lc, wire, gen)


def category_supports_claims(p: NetworkParams) -> bool:
    return classify(p) in (1, 2)
