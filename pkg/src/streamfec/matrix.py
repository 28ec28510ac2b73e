"""Dense matrices over finite fields and erasure-oriented linear algebra.

The elimination kernels are compiled with numba.  Prime fields below 2**26
use lazy reduction (products are accumulated and reduced in batches), larger
primes below 2**31 reduce on every update, and binary extension fields go
through log/antilog tables.
"""
from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

import numba
import numpy as np

from .field import BinaryField, Field, PrimeField, as_field

_LAZY_LIMIT = 2**26
_LAZY_BATCH = 4096


@numba.njit(cache=True)
def _modinv(x, p):
    e = p - 2
    r = 1
    x %= p
    while e:
        if e & 1:
            r = (r * x) % p
        x = (x * x) % p
        e >>= 1
    return r


@numba.njit(cache=True)
def _elim_prime(a, p, full, lazy, max_rank):
    rows, cols = a.shape
    piv = np.empty(min(rows, cols), dtype=np.int64)
    k = 0
    since = 0
    for c in range(cols):
        if k == rows or k == max_rank:
            break
        r = -1
        for i in range(k, rows):
            v = a[i, c] % p
            a[i, c] = v
            if v != 0 and r < 0:
                r = i
        if r < 0:
            continue
        if r != k:
            for j in range(cols):
                t = a[k, j]
                a[k, j] = a[r, j]
                a[r, j] = t
        inv = _modinv(a[k, c], p)
        for j in range(cols):
            a[k, j] = ((a[k, j] % p) * inv) % p
        lo = 0 if full else k + 1
        for i in range(lo, rows):
            if i == k:
                continue
            f = a[i, c] % p
            if f != 0:
                g = p - f
                if lazy:
                    for j in range(c, cols):
                        a[i, j] += g * a[k, j]
                else:
                    for j in range(c, cols):
                        a[i, j] = (a[i, j] + g * a[k, j]) % p
        piv[k] = c
        k += 1
        since += 1
        if lazy and since >= 4096:
            for i in range(rows):
                for j in range(cols):
                    a[i, j] %= p
            since = 0
    for i in range(rows):
        for j in range(cols):
            a[i, j] %= p
    return k, piv[:k]


@numba.njit(cache=True)
def _elim_gf2(a, exp, log, order, full, max_rank):
    rows, cols = a.shape
    piv = np.empty(min(rows, cols), dtype=np.int64)
    k = 0
    for c in range(cols):
        if k == rows or k == max_rank:
            break
        r = -1
        for i in range(k, rows):
            if a[i, c] != 0:
                r = i
                break
        if r < 0:
            continue
        if r != k:
            for j in range(cols):
                t = a[k, j]
                a[k, j] = a[r, j]
                a[r, j] = t
        linv = (order - log[a[k, c]]) % order
        for j in range(cols):
            if a[k, j] != 0:
                a[k, j] = exp[log[a[k, j]] + linv]
        lo = 0 if full else k + 1
        for i in range(lo, rows):
            if i == k:
                continue
            f = a[i, c]
            if f != 0:
                lf = log[f]
                for j in range(c, cols):
                    v = a[k, j]
                    if v != 0:
                        a[i, j] ^= exp[log[v] + lf]
        piv[k] = c
        k += 1
    return k, piv[:k]


def echelon(a: np.ndarray, field: Field, full: bool = False, max_rank: int | None = None):
    """Row-reduce a copy of ``a``.

    Returns ``(reduced, pivots)`` where ``pivots[r]`` is the pivot column of
    row ``r``.  With ``full`` the result is in reduced row echelon form.
    """
    a = np.array(a, dtype=np.int64, copy=True)
    if a.ndim != 2:
        raise ValueError("expected a 2-d array")
    if a.size == 0:
        return a, np.zeros(0, dtype=np.int64)
    cap = min(a.shape) if max_rank is None else max_rank
    if isinstance(field, BinaryField):
        k, piv = _elim_gf2(a, field.exp, field.log, field.q - 1, full, cap)
    elif isinstance(field, PrimeField) and field.p < 2**31:
        k, piv = _elim_prime(a, field.p, full, field.p < _LAZY_LIMIT, cap)
    else:
        return _echelon_object(a, field, full, cap)
    return a, piv.copy()


def _echelon_object(a, field, full, cap):
    # Slow path for primes too large for int64 products.
    p = field.p
    m = [[int(x) % p for x in row] for row in a.tolist()]
    rows, cols = len(m), len(m[0]) if m else 0
    piv = []
    k = 0
    for c in range(cols):
        if k == rows or k == cap:
            break
        r = next((i for i in range(k, rows) if m[i][c]), None)
        if r is None:
            continue
        m[k], m[r] = m[r], m[k]
        inv = pow(m[k][c], p - 2, p)
        m[k] = [(x * inv) % p for x in m[k]]
        for i in range(0 if full else k + 1, rows):
            if i != k and m[i][c]:
                f = m[i][c]
                m[i] = [(x - f * y) % p for x, y in zip(m[i], m[k])]
        piv.append(c)
        k += 1
    return np.array(m, dtype=object).astype(np.int64) if p < 2**63 else np.array(m, dtype=object), np.array(piv, dtype=np.int64)


@dataclass
class Matrix:
    """A dense field matrix; ``data`` holds integer representatives."""

    data: np.ndarray
    field: Field

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=np.int64)
        if self.data.ndim != 2:
            raise ValueError("matrix data must be 2-d")

    @property
    def shape(self):
        return self.data.shape

    @property
    def rows(self) -> int:
        return self.data.shape[0]

    @property
    def cols(self) -> int:
        return self.data.shape[1]

    def __matmul__(self, other: "Matrix") -> "Matrix":
        return Matrix(self.field.matmul(self.data, other.data), self.field)

    def __eq__(self, other):
        return isinstance(other, Matrix) and self.field == other.field and np.array_equal(self.data, other.data)

    def to_json(self) -> dict:
        return {"field": self.field.spec.to_json(), "rows": self.rows, "cols": self.cols,
                "data": self.data.tolist()}

    @classmethod
    def from_json(cls, obj: dict) -> "Matrix":
        data = np.array(obj["data"], dtype=np.int64).reshape(obj["rows"], obj["cols"])
        return cls(data, as_field(obj["field"]))


def rank(m: Matrix) -> int:
    return len(echelon(m.data, m.field)[1])


@dataclass
class ErasureSolveReport:
    """Outcome of solving ``A x = y`` for erased unknowns.

    ``determined[j]`` is True when unknown ``j`` takes the same value in
    every solution; ``values[j]`` is that value (0 for free unknowns).
    """

    determined: np.ndarray
    values: np.ndarray
    consistent: bool
    rank: int

    @property
    def free(self) -> np.ndarray:
        return ~self.determined

    @property
    def all_determined(self) -> bool:
        return bool(self.consistent and self.determined.all())


def determined_from_rref(r: np.ndarray, pivots: np.ndarray, ncols: int) -> np.ndarray:
    det = np.zeros(ncols, dtype=bool)
    if len(pivots) == 0:
        return det
    free = np.ones(ncols, dtype=bool)
    free[pivots] = False
    rows = r[: len(pivots), :ncols]
    support_free = (rows[:, free] != 0).any(axis=1) if free.any() else np.zeros(len(pivots), dtype=bool)
    det[pivots[~support_free]] = True
    return det


def solve_erasures(a: Matrix | np.ndarray, y=None, field: Field | None = None) -> ErasureSolveReport:
    """Determine which unknowns of ``a x = y`` are fixed by the equations.

    A pivot unknown is determined exactly when its reduced row has no
    support on free columns.  ``y`` may be a vector, a matrix of stacked
    right-hand sides (one column each), or None for a pattern-only check.
    """
    if isinstance(a, Matrix):
        field = a.field
        a = a.data
    if field is None:
        raise ValueError("field required")
    a = np.asarray(a, dtype=np.int64)
    rows, ncols = a.shape
    if y is None:
        aug = a
        rhs_cols = 0
    else:
        y = np.asarray(y, dtype=np.int64)
        y2 = y.reshape(rows, -1)
        rhs_cols = y2.shape[1]
        aug = np.concatenate([a, y2], axis=1)
    r, piv = echelon(aug, field, full=True)
    consistent = True
    real = piv < ncols
    if rhs_cols and not real.all():
        consistent = False
    piv = piv[real]
    r = r[: len(piv)] if rhs_cols == 0 else r[np.nonzero(real)[0]]
    det = determined_from_rref(r, piv, ncols)
    if rhs_cols:
        vals = np.zeros((ncols, rhs_cols), dtype=np.int64)
        for row, c in enumerate(piv):
            if det[c]:
                vals[c] = r[row, ncols:]
        values = vals.reshape((ncols,) + y.shape[1:]) if y.ndim > 1 else vals[:, 0]
    else:
        values = np.zeros(ncols, dtype=np.int64)
    return ErasureSolveReport(det, values, consistent, len(piv))


def targets_determined(a: np.ndarray, targets, field: Field) -> bool:
    """True when every unknown listed in ``targets`` is fixed by ``a x = y``.

    Eliminates the non-target columns first; the remaining rows vanish on
    those columns and must have full rank on the targets.
    """
    targets = np.asarray(targets, dtype=np.int64)
    nt = len(targets)
    if nt == 0:
        return True
    rows, ncols = a.shape
    if rows < nt:
        return False
    mask = np.ones(ncols, dtype=bool)
    mask[targets] = False
    order = np.concatenate([np.nonzero(mask)[0], targets])
    r, piv = echelon(a[:, order], field)
    return int((piv >= ncols - nt).sum()) == nt


def rs_generator(n: int, k: int, field) -> Matrix:
    """Systematic ``k x n`` generator ``[I | P]`` of an MDS code."""
    field = as_field(field)
    if not 0 < k <= n:
        raise ValueError("need 0 < k <= n")
    if n > field.q:
        raise ValueError(f"MDS length {n} exceeds field size {field.q}")
    pts = np.arange(n, dtype=np.int64)
    if isinstance(field, BinaryField):
        v = np.ones((k, n), dtype=np.int64)
        for i in range(1, k):
            v[i] = field.mul(v[i - 1], pts)
    else:
        v = np.ones((k, n), dtype=np.int64)
        for i in range(1, k):
            v[i] = (v[i - 1] * pts) % field.p
    r, piv = echelon(v, field, full=True)
    if list(piv) != list(range(k)):
        raise ArithmeticError("Vandermonde block unexpectedly singular")
    return Matrix(r, field)


def is_mds(g: Matrix) -> bool:
    """Check that every set of ``k`` columns of ``g`` is invertible."""
    k, n = g.shape
    for cols in combinations(range(n), k):
        if len(echelon(g.data[:, list(cols)], g.field)[1]) < k:
            return False
    return True


def identity(k: int, field: Field) -> Matrix:
    return Matrix(np.eye(k, dtype=np.int64), field)
