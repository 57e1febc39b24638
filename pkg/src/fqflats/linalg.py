"""Linalg module - dense vectors and matrices over GF(q)

Array helpers work on int64 numpy arrays whose entries are field elements and
do all arithmetic through the context tables, so prime and extension fields
share one code path.
"""

import logging
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .constants import LOGGER_NAME
from .errors import DimensionMismatch, FieldElementError, ParameterMismatch
from .gf import FieldCtx

log = logging.getLogger(LOGGER_NAME)


@dataclass(frozen=True)
class FqVector:
    ctx: FieldCtx
    coords: tuple[int, ...]

    def __post_init__(self):
        if any(not 0 <= c < self.ctx.q for c in self.coords):
            raise FieldElementError(f"{self.coords} has entries outside GF({self.ctx.q})")

    @property
    def d(self) -> int:
        return len(self.coords)

    @property
    def array(self) -> np.ndarray:
        return np.array(self.coords, dtype=np.int64)

    def __add__(self, other: "FqVector") -> "FqVector":
        _same(self, other)
        return FqVector(self.ctx, tuple(int(c) for c in self.ctx.add_t[self.array, other.array]))

    def __sub__(self, other: "FqVector") -> "FqVector":
        _same(self, other)
        return FqVector(self.ctx, tuple(int(c) for c in self.ctx.sub_t[self.array, other.array]))

    def scale(self, c: int) -> "FqVector":
        return FqVector(self.ctx, tuple(int(x) for x in self.ctx.mul_t[c, self.array]))


@dataclass(frozen=True)
class FqMatrix:
    """Row-major dense matrix; ``cols`` is kept explicitly so 0-row matrices know their width"""

    ctx: FieldCtx
    entries: tuple[tuple[int, ...], ...]
    cols: int

    @classmethod
    def from_rows(cls, ctx: FieldCtx, rows: Iterable[Sequence[int]], cols: int | None = None) -> "FqMatrix":
        rows = tuple(tuple(int(c) for c in r) for r in rows)
        if cols is None:
            if not rows:
                raise DimensionMismatch("column count required for an empty matrix")
            cols = len(rows[0])
        if any(len(r) != cols for r in rows):
            raise DimensionMismatch(f"rows of unequal length (expected {cols})")
        if any(not 0 <= c < ctx.q for r in rows for c in r):
            raise FieldElementError(f"entries outside GF({ctx.q})")
        return cls(ctx, rows, cols)

    @property
    def rows(self) -> int:
        return len(self.entries)

    @property
    def array(self) -> np.ndarray:
        return np.array(self.entries, dtype=np.int64).reshape(self.rows, self.cols)


def _same(u: FqVector, v: FqVector):
    if u.ctx != v.ctx:
        raise ParameterMismatch(f"vectors over {u.ctx} and {v.ctx}")
    if u.d != v.d:
        raise DimensionMismatch(f"vector lengths {u.d} and {v.d}")


def as_rows(ctx: FieldCtx, vectors, d: int | None = None) -> np.ndarray:
    """Stack FqVectors or plain coordinate sequences into an (n, d) array"""
    coords = []
    for v in vectors:
        if isinstance(v, FqVector):
            if v.ctx != ctx:
                raise ParameterMismatch(f"vector over {v.ctx}, expected {ctx}")
            v = v.coords
        coords.append(tuple(int(c) for c in v))

    lengths = {len(c) for c in coords}
    if d is not None:
        lengths.add(d)
    if len(lengths) > 1:
        raise DimensionMismatch(f"mixed vector lengths {sorted(lengths)}")
    width = lengths.pop() if lengths else 0

    arr = np.array(coords, dtype=np.int64).reshape(len(coords), width)
    if arr.size and (arr.min() < 0 or arr.max() >= ctx.q):
        raise FieldElementError(f"entries outside GF({ctx.q})")
    return arr


def rref_array(ctx: FieldCtx, a: np.ndarray) -> tuple[np.ndarray, list[int]]:
    """Gauss-Jordan elimination with first-nonzero pivoting

    Returns the reduced matrix (same shape, zero rows last) and the pivot columns.
    """
    a = np.array(a, dtype=np.int64, copy=True)
    nrows, ncols = a.shape
    pivots = []
    r = 0
    for c in range(ncols):
        if r == nrows:
            break
        nz = np.flatnonzero(a[r:, c])
        if nz.size == 0:
            continue
        i = r + nz[0]
        if i != r:
            a[[r, i]] = a[[i, r]]
        a[r] = ctx.mul_t[ctx.inv_t[a[r, c]], a[r]]

        others = np.flatnonzero(a[:, c])
        others = others[others != r]
        if others.size:
            factors = a[others, c][:, None]
            a[others] = ctx.sub_t[a[others], ctx.mul_t[factors, a[r][None, :]]]
        pivots.append(c)
        r += 1
    return a, pivots


def reduce_rows(ctx: FieldCtx, x: np.ndarray, basis: np.ndarray, pivots: Sequence[int]) -> np.ndarray:
    """Eliminate the pivot columns of an RREF basis from every row of x

    The residual is zero exactly when the row lies in the span, and it is the
    unique coset representative with zeros at the pivot columns.
    """
    x = np.array(x, dtype=np.int64, copy=True)
    for row, c in zip(basis, pivots):
        coef = x[..., c : c + 1]
        x = ctx.sub_t[x, ctx.mul_t[coef, row]]
    return x


def mat_mul(ctx: FieldCtx, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Matrix product over GF(q)"""
    if a.shape[1] != b.shape[0]:
        raise DimensionMismatch(f"cannot multiply {a.shape} by {b.shape}")
    out = np.zeros((a.shape[0], b.shape[1]), dtype=np.int64)
    for l in range(a.shape[1]):
        out = ctx.add_t[out, ctx.mul_t[a[:, l][:, None], b[l][None, :]]]
    return out


def rref(m: FqMatrix) -> tuple[FqMatrix, int, list[int]]:
    reduced, pivots = rref_array(m.ctx, m.array)
    return FqMatrix.from_rows(m.ctx, reduced.tolist(), m.cols), len(pivots), pivots


def rank_of(ctx: FieldCtx, vectors) -> int:
    rows = as_rows(ctx, vectors)
    if rows.shape[0] == 0:
        return 0
    return len(rref_array(ctx, rows)[1])


def in_span(ctx: FieldCtx, vectors, x) -> bool:
    """True iff x is a linear combination of vectors"""
    target = as_rows(ctx, [x])
    rows = as_rows(ctx, vectors, d=target.shape[1])
    basis, pivots = rref_array(ctx, rows)
    residual = reduce_rows(ctx, target, basis[: len(pivots)], pivots)
    return not residual.any()
