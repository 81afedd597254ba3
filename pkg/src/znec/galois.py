"""Prime-field arithmetic and dense linear algebra over GF(q).

Two flavours live here.  The `FieldElement` / `SymbolMatrix` layer is the
exact, immutable API used by tests and by the slower reference paths.  The
`np_*` helpers run the same leftmost-pivot elimination on int64 arrays and
back the hot loops of the simulator; both produce identical pivots.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "FieldElement",
    "SymbolMatrix",
    "LinAlgError",
    "InconsistentSystem",
    "UnderdeterminedSystem",
    "is_prime",
    "field_add",
    "field_sub",
    "field_mul",
    "field_neg",
    "field_inv",
    "mat_rank",
    "mat_solve",
    "mat_inverse",
    "np_rref",
    "np_rank",
    "np_inverse",
]

# keeps q*q*100 inside int64 for the numpy dot products
MAX_MODULUS = 1 << 20


class LinAlgError(ArithmeticError):
    pass


class InconsistentSystem(LinAlgError):
    """No vector satisfies every equation."""


class UnderdeterminedSystem(LinAlgError):
    """The system is consistent but the solution is not unique."""


def is_prime(q: int) -> bool:
    if q < 2:
        return False
    if q < 4:
        return True
    if q % 2 == 0:
        return False
    f = 3
    while f * f <= q:
        if q % f == 0:
            return False
        f += 2
    return True


def check_modulus(q: int) -> int:
    if not isinstance(q, int) or not is_prime(q):
        raise ValueError(f"field order must be prime, got {q!r}")
    if q >= MAX_MODULUS:
        raise ValueError(f"field order {q} exceeds supported range")
    return q


@dataclass(frozen=True, slots=True)
class FieldElement:
    value: int
    q: int

    def __post_init__(self):
        if not 0 <= self.value < self.q:
            raise ValueError(f"{self.value} is not an element of GF({self.q})")

    def _other(self, other) -> "FieldElement":
        if isinstance(other, int):
            return FieldElement(other % self.q, self.q)
        if other.q != self.q:
            raise ValueError(f"modulus mismatch: GF({self.q}) vs GF({other.q})")
        return other

    def __add__(self, other):
        return field_add(self, self._other(other))

    __radd__ = __add__

    def __sub__(self, other):
        return field_sub(self, self._other(other))

    def __rsub__(self, other):
        return field_sub(self._other(other), self)

    def __mul__(self, other):
        return field_mul(self, self._other(other))

    __rmul__ = __mul__

    def __neg__(self):
        return field_neg(self)

    def __truediv__(self, other):
        return field_mul(self, field_inv(self._other(other)))

    def inverse(self) -> "FieldElement":
        return field_inv(self)

    def __int__(self):
        return self.value

    def __repr__(self):
        return f"{self.value}(mod {self.q})"


def _same_q(x: FieldElement, y: FieldElement) -> int:
    if x.q != y.q:
        raise ValueError(f"modulus mismatch: GF({x.q}) vs GF({y.q})")
    return x.q


def field_add(x: FieldElement, y: FieldElement) -> FieldElement:
    q = _same_q(x, y)
    return FieldElement((x.value + y.value) % q, q)


def field_sub(x: FieldElement, y: FieldElement) -> FieldElement:
    q = _same_q(x, y)
    return FieldElement((x.value - y.value) % q, q)


def field_mul(x: FieldElement, y: FieldElement) -> FieldElement:
    q = _same_q(x, y)
    return FieldElement((x.value * y.value) % q, q)


def field_neg(x: FieldElement) -> FieldElement:
    return FieldElement((-x.value) % x.q, x.q)


def field_inv(x: FieldElement) -> FieldElement:
    if x.value == 0:
        raise ZeroDivisionError("zero has no inverse")
    return FieldElement(pow(x.value, x.q - 2, x.q), x.q)


def inv_mod(v: int, q: int) -> int:
    if v % q == 0:
        raise ZeroDivisionError("zero has no inverse")
    return pow(v, q - 2, q)


@dataclass(frozen=True)
class SymbolMatrix:
    """Row-major matrix over GF(q); entries are stored as plain ints."""

    rows: int
    cols: int
    q: int
    entries: tuple[int, ...]

    def __post_init__(self):
        if len(self.entries) != self.rows * self.cols:
            raise ValueError("entries length does not match shape")
        if any(not 0 <= v < self.q for v in self.entries):
            raise ValueError(f"entry outside GF({self.q})")

    @classmethod
    def from_rows(cls, rows: Sequence[Sequence[int]], q: int, cols: int | None = None) -> "SymbolMatrix":
        rows = [list(r) for r in rows]
        if cols is None:
            cols = len(rows[0]) if rows else 0
        if any(len(r) != cols for r in rows):
            raise ValueError("ragged rows")
        flat = tuple(int(v) % q for r in rows for v in r)
        return cls(len(rows), cols, q, flat)

    @classmethod
    def from_array(cls, arr, q: int) -> "SymbolMatrix":
        arr = np.asarray(arr, dtype=np.int64) % q
        if arr.ndim != 2:
            raise ValueError("expected a 2-d array")
        return cls(arr.shape[0], arr.shape[1], q, tuple(int(v) for v in arr.ravel()))

    @classmethod
    def zeros(cls, rows: int, cols: int, q: int) -> "SymbolMatrix":
        return cls(rows, cols, q, (0,) * (rows * cols))

    @classmethod
    def identity(cls, k: int, q: int) -> "SymbolMatrix":
        return cls(k, k, q, tuple(int(i == j) for i in range(k) for j in range(k)))

    def __getitem__(self, ij: tuple[int, int]) -> int:
        i, j = ij
        return self.entries[i * self.cols + j]

    def element(self, i: int, j: int) -> FieldElement:
        return FieldElement(self[i, j], self.q)

    def row(self, i: int) -> list[int]:
        return list(self.entries[i * self.cols:(i + 1) * self.cols])

    def col(self, j: int) -> list[int]:
        return [self.entries[i * self.cols + j] for i in range(self.rows)]

    def to_rows(self) -> list[list[int]]:
        return [self.row(i) for i in range(self.rows)]

    def to_array(self) -> np.ndarray:
        return np.array(self.entries, dtype=np.int64).reshape(self.rows, self.cols)

    def transpose(self) -> "SymbolMatrix":
        return SymbolMatrix.from_rows([self.col(j) for j in range(self.cols)], self.q, self.rows)

    def select_columns(self, cols: Iterable[int]) -> "SymbolMatrix":
        cols = list(cols)
        return SymbolMatrix.from_rows([[r[j] for j in cols] for r in self.to_rows()], self.q, len(cols))

    def select_rows(self, rows: Iterable[int]) -> "SymbolMatrix":
        rows = list(rows)
        return SymbolMatrix.from_rows([self.row(i) for i in rows], self.q, self.cols)

    def hstack(self, other: "SymbolMatrix") -> "SymbolMatrix":
        if other.rows != self.rows or other.q != self.q:
            raise ValueError("shape or modulus mismatch")
        return SymbolMatrix.from_rows([a + b for a, b in zip(self.to_rows(), other.to_rows())], self.q)

    def __matmul__(self, other: "SymbolMatrix") -> "SymbolMatrix":
        if other.q != self.q:
            raise ValueError("modulus mismatch")
        if self.cols != other.rows:
            raise ValueError(f"cannot multiply {self.rows}x{self.cols} by {other.rows}x{other.cols}")
        q = self.q
        b_cols = [other.col(j) for j in range(other.cols)]
        out = [[sum(x * y for x, y in zip(r, c)) % q for c in b_cols] for r in self.to_rows()]
        return SymbolMatrix.from_rows(out, q, other.cols)

    def vecmul(self, v: Sequence[int]) -> list[int]:
        """Row vector times matrix: v·M."""
        if len(v) != self.rows:
            raise ValueError("vector length does not match rows")
        q = self.q
        return [sum(v[i] * self.entries[i * self.cols + j] for i in range(self.rows)) % q
                for j in range(self.cols)]

    def matvec(self, v: Sequence[int]) -> list[int]:
        """Matrix times column vector: M·v."""
        if len(v) != self.cols:
            raise ValueError("vector length does not match columns")
        q = self.q
        return [sum(a * b for a, b in zip(self.row(i), v)) % q for i in range(self.rows)]


def _rref(rows: list[list[int]], q: int, ncols: int) -> list[int]:
    """In-place reduced row echelon form; returns pivot columns."""
    pivots = []
    r = 0
    nrows = len(rows)
    for c in range(ncols):
        if r == nrows:
            break
        p = next((i for i in range(r, nrows) if rows[i][c] % q), None)
        if p is None:
            continue
        rows[r], rows[p] = rows[p], rows[r]
        inv = inv_mod(rows[r][c], q)
        rows[r] = [(v * inv) % q for v in rows[r]]
        for i in range(nrows):
            if i != r and rows[i][c] % q:
                f = rows[i][c]
                rows[i] = [(a - f * b) % q for a, b in zip(rows[i], rows[r])]
        pivots.append(c)
        r += 1
    return pivots


def mat_rank(M: SymbolMatrix) -> int:
    return len(_rref(M.to_rows(), M.q, M.cols))


def mat_solve(A: SymbolMatrix, b: Sequence[int]) -> list[int]:
    """Solve A·x = b exactly.

    Raises InconsistentSystem when no solution exists and
    UnderdeterminedSystem when the solution is not unique.
    """
    if len(b) != A.rows:
        raise ValueError(f"right-hand side has {len(b)} entries, matrix has {A.rows} rows")
    q = A.q
    aug = [r + [int(v) % q] for r, v in zip(A.to_rows(), b)]
    pivots = _rref(aug, q, A.cols + 1)
    if pivots and pivots[-1] == A.cols:
        raise InconsistentSystem("system has no solution")
    if len(pivots) < A.cols:
        raise UnderdeterminedSystem(f"rank {len(pivots)} < {A.cols} unknowns")
    return [aug[i][A.cols] for i in range(A.cols)]


def mat_inverse(A: SymbolMatrix) -> SymbolMatrix:
    if A.rows != A.cols:
        raise ValueError("only square matrices are invertible")
    k, q = A.rows, A.q
    aug = [r + [int(i == j) for j in range(k)] for i, r in enumerate(A.to_rows())]
    pivots = _rref(aug, q, k)
    if len(pivots) < k:
        raise LinAlgError("matrix is singular")
    return SymbolMatrix.from_rows([r[k:] for r in aug], q, k)


# -- numpy fast paths ---------------------------------------------------------

def np_rref(arr: np.ndarray, q: int, ncols: int | None = None) -> tuple[np.ndarray, list[int]]:
    """Leftmost-pivot RREF of a copy of `arr`; eliminates only the first `ncols` columns."""
    m = np.array(arr, dtype=np.int64) % q
    nrows = m.shape[0]
    if ncols is None:
        ncols = m.shape[1]
    pivots: list[int] = []
    r = 0
    for c in range(ncols):
        if r == nrows:
            break
        nz = np.nonzero(m[r:, c])[0]
        if nz.size == 0:
            continue
        p = r + int(nz[0])
        if p != r:
            m[[r, p]] = m[[p, r]]
        m[r] = (m[r] * inv_mod(int(m[r, c]), q)) % q
        col = m[:, c].copy()
        col[r] = 0
        hit = np.nonzero(col)[0]
        if hit.size:
            m[hit] = (m[hit] - np.outer(col[hit], m[r])) % q
        pivots.append(c)
        r += 1
    return m, pivots


def np_rank(arr: np.ndarray, q: int) -> int:
    if arr.size == 0:
        return 0
    return len(np_rref(arr, q)[1])


def np_inverse(arr: np.ndarray, q: int) -> np.ndarray:
    k = arr.shape[0]
    aug = np.hstack([np.asarray(arr, dtype=np.int64) % q, np.eye(k, dtype=np.int64)])
    m, pivots = np_rref(aug, q, k)
    if len(pivots) < k:
        raise LinAlgError("matrix is singular")
    return m[:, k:]


def independent_rows(arr: np.ndarray, q: int) -> list[int]:
    """Indices of a lexicographically first maximal independent row subset."""
    _, pivots = np_rref(np.asarray(arr).T, q)
    return pivots
