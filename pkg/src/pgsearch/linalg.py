"""Dense linear algebra over prime fields, plus integer Smith normal form.

Everything here is exact.  Matrices over F_p are numpy int64 arrays with
entries reduced into [0, p); integer matrices are plain Python lists so
arbitrary-precision arithmetic is available for the Smith normal form.

The central object is :class:`Subspace`: a subspace of F_p^n held in reduced
row-echelon form.  Equal subspaces have byte-identical canonical bases, which
is what makes orbit deduplication order-independent.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Optional, Sequence

import numpy as np


def _as_fp_array(entries, p: int) -> np.ndarray:
    arr = np.array(entries, dtype=np.int64)
    if arr.ndim == 1:
        arr = arr.reshape(1, -1) if arr.size else arr.reshape(0, 0)
    return np.mod(arr, p)


@dataclass(frozen=True)
class FpMatrix:
    """Matrix over the prime field F_p with entries reduced mod p."""

    prime: int
    data: np.ndarray

    def __post_init__(self):
        if self.prime < 2:
            raise ValueError(f"prime must be >= 2, got {self.prime}")
        arr = np.asarray(self.data, dtype=np.int64)
        if arr.ndim != 2:
            raise ValueError("FpMatrix data must be 2-dimensional")
        if arr.size and (arr.min() < 0 or arr.max() >= self.prime):
            arr = np.mod(arr, self.prime)
        object.__setattr__(self, "data", arr)

    @classmethod
    def from_rows(cls, rows: Sequence[Sequence[int]], p: int, cols: Optional[int] = None) -> "FpMatrix":
        rows = list(rows)
        if not rows:
            return cls(p, np.zeros((0, cols or 0), dtype=np.int64))
        return cls(p, _as_fp_array(rows, p))

    @property
    def rows(self) -> int:
        return self.data.shape[0]

    @property
    def cols(self) -> int:
        return self.data.shape[1]

    def row(self, i: int) -> tuple[int, ...]:
        return tuple(int(x) for x in self.data[i])

    def matmul(self, other: "FpMatrix") -> "FpMatrix":
        if self.prime != other.prime:
            raise ValueError("prime mismatch")
        return FpMatrix(self.prime, np.mod(self.data @ other.data, self.prime))

    def key(self) -> bytes:
        """Canonical byte key; equal matrices give equal keys."""
        return self.data.astype(np.uint8).tobytes()

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, FpMatrix)
            and self.prime == other.prime
            and self.data.shape == other.data.shape
            and bool(np.array_equal(self.data, other.data))
        )

    def __hash__(self):
        return hash((self.prime, self.data.shape, self.key()))


def rref(m: FpMatrix) -> tuple[FpMatrix, list[int]]:
    """Reduced row-echelon form over F_p.

    Args:
        m: matrix with entries already reduced mod its prime.

    Returns:
        (echelon, pivots): the unique RREF with zero rows dropped, and the
        strictly increasing pivot column list.  len(pivots) is the rank.
    """
    p = m.prime
    a = m.data.copy()
    nrows, ncols = a.shape
    pivots: list[int] = []
    r = 0
    for col in range(ncols):
        sel = -1
        for i in range(r, nrows):
            if a[i, col]:
                sel = i
                break
        if sel < 0:
            continue
        if sel != r:
            a[[r, sel]] = a[[sel, r]]
        inv = pow(int(a[r, col]), p - 2, p)
        if inv != 1:
            a[r] = (a[r] * inv) % p
        for i in range(nrows):
            if i != r and a[i, col]:
                a[i] = (a[i] - a[i, col] * a[r]) % p
        pivots.append(col)
        r += 1
        if r == nrows:
            break
    return FpMatrix(p, a[:r]), pivots


def rank(m: FpMatrix) -> int:
    return len(rref(m)[1])


def solve(m: FpMatrix, target: Sequence[int]) -> Optional[list[int]]:
    """Solve x * m = target over F_p, returning one solution or None.

    Rows of ``m`` are the spanning vectors; the solution expresses ``target``
    as a linear combination of them.
    """
    p = m.prime
    nrows = m.rows
    if nrows == 0:
        return [] if not any(v % p for v in target) else None
    aug = np.concatenate([m.data, np.eye(nrows, dtype=np.int64)], axis=1)
    reduced, pivots = rref(FpMatrix(p, aug))
    vec = np.mod(np.array(list(target), dtype=np.int64), p)
    coeffs = np.zeros(nrows, dtype=np.int64)
    for i, col in enumerate(pivots):
        if col >= m.cols:
            break
        if vec[col]:
            c = int(vec[col])
            vec = (vec - c * reduced.data[i, : m.cols]) % p
            coeffs = (coeffs + c * reduced.data[i, m.cols :]) % p
    if vec.any():
        return None
    return [int(x) for x in coeffs]


@dataclass(frozen=True)
class Subspace:
    """Subspace of F_p^n, stored as a reduced row-echelon basis."""

    ambient_dim: int
    basis: FpMatrix
    pivots: tuple[int, ...] = field(default=())

    @classmethod
    def from_vectors(cls, vectors: Iterable[Sequence[int]], ambient_dim: int, p: int) -> "Subspace":
        mat = FpMatrix.from_rows(list(vectors), p, cols=ambient_dim)
        if mat.rows == 0:
            mat = FpMatrix(p, np.zeros((0, ambient_dim), dtype=np.int64))
        if mat.cols != ambient_dim:
            raise ValueError(f"vector length {mat.cols} != ambient dim {ambient_dim}")
        ech, piv = rref(mat)
        return cls(ambient_dim, ech, tuple(piv))

    @classmethod
    def zero(cls, ambient_dim: int, p: int) -> "Subspace":
        return cls.from_vectors([], ambient_dim, p)

    @classmethod
    def full(cls, ambient_dim: int, p: int) -> "Subspace":
        return cls.from_vectors(np.eye(ambient_dim, dtype=np.int64), ambient_dim, p)

    @property
    def prime(self) -> int:
        return self.basis.prime

    @property
    def dim(self) -> int:
        return self.basis.rows

    def key(self) -> bytes:
        return self.basis.key()

    def sort_key(self) -> tuple:
        return tuple(int(x) for x in self.basis.data.reshape(-1))

    def reduce_vector(self, v: Sequence[int]) -> tuple[int, ...]:
        """Reduce v modulo this subspace (clear the pivot coordinates)."""
        p = self.prime
        vec = [int(x) % p for x in v]
        for i, col in enumerate(self.pivots):
            c = vec[col]
            if c:
                row = self.basis.data[i]
                for j in range(self.ambient_dim):
                    vec[j] = (vec[j] - c * int(row[j])) % p
        return tuple(vec)

    def contains_vector(self, v: Sequence[int]) -> bool:
        return not any(self.reduce_vector(v))

    def contains(self, other: "Subspace") -> bool:
        return all(self.contains_vector(other.basis.row(i)) for i in range(other.dim))

    def sum(self, other: "Subspace") -> "Subspace":
        self._check_compatible(other)
        rows = list(self.basis.data) + list(other.basis.data)
        return Subspace.from_vectors(rows, self.ambient_dim, self.prime)

    def intersection(self, other: "Subspace") -> "Subspace":
        self._check_compatible(other)
        a, b = self.basis, other.basis
        if a.rows == 0 or b.rows == 0:
            return Subspace.zero(self.ambient_dim, self.prime)
        # Left-kernel trick: rows (x, y) with x*A + y*B = 0 give points x*A
        # of the intersection.
        p = self.prime
        stacked = np.concatenate([a.data, b.data], axis=0)
        ident = np.eye(a.rows + b.rows, dtype=np.int64)
        aug = np.concatenate([stacked, ident], axis=1)
        reduced, _ = rref(FpMatrix(p, aug))
        vectors = []
        for i in range(reduced.rows):
            if not reduced.data[i, : self.ambient_dim].any():
                x = reduced.data[i, self.ambient_dim : self.ambient_dim + a.rows]
                vectors.append(np.mod(x @ a.data, p))
        return Subspace.from_vectors(vectors, self.ambient_dim, self.prime)

    def _check_compatible(self, other: "Subspace"):
        if self.ambient_dim != other.ambient_dim or self.prime != other.prime:
            raise ValueError("ambient mismatch")

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Subspace)
            and self.ambient_dim == other.ambient_dim
            and self.basis == other.basis
        )

    def __hash__(self):
        return hash((self.ambient_dim, self.basis))


def all_subspaces_of_dim(ambient_dim: int, dim: int, p: int) -> Iterator[Subspace]:
    """Every subspace of F_p^ambient_dim of the given dimension, once each.

    Enumerates reduced row-echelon bases directly: a choice of pivot columns
    plus arbitrary values at the free positions.
    """
    if dim == 0:
        yield Subspace.zero(ambient_dim, p)
        return
    for pivots in itertools.combinations(range(ambient_dim), dim):
        free_positions = []
        for r, pc in enumerate(pivots):
            for col in range(pc + 1, ambient_dim):
                if col not in pivots:
                    free_positions.append((r, col))
        for values in itertools.product(range(p), repeat=len(free_positions)):
            mat = np.zeros((dim, ambient_dim), dtype=np.int64)
            for r, pc in enumerate(pivots):
                mat[r, pc] = 1
            for (r, col), v in zip(free_positions, values):
                mat[r, col] = v
            yield Subspace(ambient_dim, FpMatrix(p, mat), tuple(pivots))


def enumerate_supplements(m_dim: int, nucleus: Subspace, codim: int) -> list[Subspace]:
    """Proper subspaces U of codimension ``codim`` with U + nucleus = F_p^m_dim.

    Args:
        m_dim: dimension of the ambient space.
        nucleus: subspace N that U must supplement.
        codim: required codimension of U (>= 1).

    Returns:
        All such subspaces, each exactly once, sorted lexicographically by
        canonical basis.  Empty when codim exceeds dim(N).
    """
    if codim <= 0:
        raise ValueError(f"codim must be positive, got {codim}")
    if nucleus.ambient_dim != m_dim:
        raise ValueError("nucleus ambient dimension mismatch")
    if codim > nucleus.dim:
        return []
    p = nucleus.prime
    out = []
    for cand in all_subspaces_of_dim(m_dim, m_dim - codim, p):
        if cand.sum(nucleus).dim == m_dim:
            out.append(cand)
    out.sort(key=lambda s: s.sort_key())
    return out


# ---------------------------------------------------------------------------
# Integer Smith normal form


def smith_normal_form(rows: Sequence[Sequence[int]]) -> list[int]:
    """Invariant factors d_1 | d_2 | ... of an integer matrix.

    Plain Python integers throughout, so there is no overflow however large
    the intermediate entries get.  Returns min(rows, cols) nonnegative
    factors in divisibility order; trailing zeros indicate free cokernel rank.
    """
    a = [list(int(x) for x in row) for row in rows]
    m = len(a)
    n = len(a[0]) if m else 0
    size = min(m, n)
    result: list[int] = []
    top = 0
    while top < size:
        # Locate a nonzero entry of smallest magnitude in the remaining block.
        best = None
        best_abs = 0
        for i in range(top, m):
            for j in range(top, n):
                v = abs(a[i][j])
                if v and (best is None or v < best_abs):
                    best, best_abs = (i, j), v
        if best is None:
            break
        bi, bj = best
        a[top], a[bi] = a[bi], a[top]
        for row in a:
            row[top], row[bj] = row[bj], row[top]
        pivot = a[top][top]
        for i in range(top + 1, m):
            q = a[i][top] // pivot
            if q:
                for j in range(top, n):
                    a[i][j] -= q * a[top][j]
        for j in range(top + 1, n):
            q = a[top][j] // pivot
            if q:
                for i in range(top, m):
                    a[i][j] -= q * a[i][top]
        if any(a[i][top] for i in range(top + 1, m)) or any(
            a[top][j] for j in range(top + 1, n)
        ):
            continue  # remainders survive; rerun with a smaller pivot
        # Pivot must divide every remaining entry; fold an offending row in.
        offender = None
        for i in range(top + 1, m):
            if any(a[i][j] % pivot for j in range(top + 1, n)):
                offender = i
                break
        if offender is not None:
            for j in range(top, n):
                a[top][j] += a[offender][j]
            continue
        result.append(abs(pivot))
        top += 1
    result.extend([0] * (size - len(result)))
    return result


def cokernel_invariants(rows: Sequence[Sequence[int]], ncols: int) -> list[int]:
    """Invariants of Z^ncols / row-span, with 1s dropped and 0s for free rank."""
    rows = [list(r) for r in rows]
    if not rows:
        return [0] * ncols
    factors = smith_normal_form(rows)
    nonzero = [d for d in factors if d != 0]
    inv = [d for d in nonzero if d != 1]
    inv.extend([0] * (ncols - len(nonzero)))
    return inv
