"""Systematic MDS codes built as Reed-Solomon evaluation codes.

A code is fixed by a list of distinct evaluation points.  Its generator is
the Vandermonde matrix brought to systematic form, so the parity block is a
generalized Cauchy matrix and every square minor of it is nonsingular.
Codes on a shared point list nest: the dimension-k code is a subcode of the
dimension-(k+1) code, and truncating the points punctures the code.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .galois import (
    InconsistentSystem,
    LinAlgError,
    SymbolMatrix,
    check_modulus,
    np_inverse,
)


class FieldTooSmall(ValueError):
    pass


class InsufficientData(LinAlgError):
    pass


class DecodeFailure(LinAlgError):
    """No codeword lies within the requested distance of the received word."""


@dataclass(frozen=True)
class MdsCode:
    length: int
    dim: int
    generator: SymbolMatrix
    points: tuple[int, ...]
    _inverse_cache: dict = field(default_factory=dict, compare=False, repr=False)

    @property
    def q(self) -> int:
        return self.generator.q

    @property
    def parity(self) -> SymbolMatrix:
        return self.generator.select_columns(range(self.dim, self.length))

    @property
    def distance(self) -> int:
        return self.length - self.dim + 1

    def gen_array(self) -> np.ndarray:
        arr = self._inverse_cache.get("G")
        if arr is None:
            arr = self.generator.to_array()
            self._inverse_cache["G"] = arr
        return arr

    def info_inverse(self, coords: tuple[int, ...]) -> np.ndarray:
        """Inverse of the generator restricted to `dim` coordinates."""
        inv = self._inverse_cache.get(coords)
        if inv is None:
            inv = np_inverse(self.gen_array()[:, list(coords)], self.q)
            self._inverse_cache[coords] = inv
        return inv


def choose_points(length: int, q: int, seed) -> tuple[int, ...]:
    check_modulus(q)
    if q <= length:
        raise FieldTooSmall(f"field too small: need q > {length}, got q = {q}")
    rng = random.Random(seed)
    return tuple(rng.sample(range(q), length))


def mds_on_points(dim: int, points: Sequence[int], q: int) -> MdsCode:
    """Systematic RS code of dimension `dim` evaluated at `points`."""
    length = len(points)
    if not 0 <= dim <= length:
        raise ValueError(f"need 0 <= dim <= length, got dim={dim}, length={length}")
    if len(set(points)) != length:
        raise ValueError("evaluation points must be distinct")
    if dim == 0:
        return MdsCode(length, 0, SymbolMatrix(0, length, q, ()), tuple(points))
    vander = np.array([[pow(a, i, q) for a in points] for i in range(dim)], dtype=np.int64)
    systematic = (np_inverse(vander[:, :dim], q) @ vander) % q
    return MdsCode(length, dim, SymbolMatrix.from_array(systematic, q), tuple(points))


def make_mds(dim: int, length: int, q: int, seed=0) -> MdsCode:
    if not 0 <= dim <= length:
        raise ValueError(f"need 0 <= dim <= length, got dim={dim}, length={length}")
    return mds_on_points(dim, choose_points(length, q, seed), q)


def mds_encode(code: MdsCode, message: Sequence[int]) -> list[int]:
    if len(message) != code.dim:
        raise ValueError(f"message length {len(message)} != code dimension {code.dim}")
    if code.dim == 0:
        return [0] * code.length
    return code.generator.vecmul([int(v) % code.q for v in message])


def mds_erasure_decode(code: MdsCode, known: Mapping[int, int]) -> list[int]:
    """Recover the message from known coordinates.

    Raises InsufficientData with fewer than `dim` coordinates and
    InconsistentSystem when the coordinates do not lie on one codeword.
    """
    if len(known) < code.dim:
        raise InsufficientData(f"{len(known)} coordinates known, need {code.dim}")
    coords = sorted(known)
    if any(not 0 <= c < code.length for c in coords):
        raise ValueError("coordinate outside the code length")
    q = code.q
    if code.dim == 0:
        if any(known[c] % q for c in coords):
            raise InconsistentSystem("nonzero symbol in the zero code")
        return []
    info = tuple(coords[:code.dim])
    vals = np.array([known[c] % q for c in info], dtype=np.int64)
    msg = (vals @ code.info_inverse(info)) % q
    full = (msg @ code.gen_array()) % q
    for c in coords[code.dim:]:
        if full[c] != known[c] % q:
            raise InconsistentSystem(f"coordinate {c} disagrees with the decoded codeword")
    return [int(v) for v in msg]


def mds_error_decode(code: MdsCode, received: Sequence[int], t: int, erasures: Sequence[int] = ()) -> list[int]:
    """Correct up to `t` symbol errors by trying every error support.

    Erased coordinates are ignored.  Supports are tried by increasing size and
    then lexicographically; the first consistent one is unique because
    2t < distance - |erasures|.
    """
    if len(received) != code.length:
        raise ValueError(f"received length {len(received)} != code length {code.length}")
    erased = set(erasures)
    live = [i for i in range(code.length) if i not in erased]
    if 2 * t >= code.distance - len(erased):
        raise ValueError(f"t={t} exceeds the unique-decoding radius")
    for size in range(t + 1):
        for support in itertools.combinations(live, size):
            bad = set(support)
            known = {i: received[i] for i in live if i not in bad}
            try:
                return mds_erasure_decode(code, known)
            except InconsistentSystem:
                continue
    raise DecodeFailure(f"no codeword within distance {t}")


def is_mds(code: MdsCode) -> bool:
    """Exhaustive check that every `dim` columns of the generator are independent."""
    from .galois import np_rank

    G = code.gen_array()
    return all(np_rank(G[:, list(cols)], code.q) == code.dim
               for cols in itertools.combinations(range(code.length), code.dim))
