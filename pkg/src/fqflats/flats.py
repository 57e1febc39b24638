"""Flats module - canonical affine k-flats in F_q^d, enumeration and counting

A flat is stored as its RREF direction basis together with the base point
reduced against that basis (zero at every pivot column). Both are unique for
a given point set, so equality, hashing and indexing work on plain tuples.

Canonical order: pivot sets lexicographically, then the free RREF entries
row-major, then the base point over the non-pivot columns. Position in that
order is computable directly (see ``flat_index``), which is how the
incidence graph maps flats to vertices without a lookup table of flats.
"""

import logging
import math
from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations, product
from typing import Iterable, Iterator, Sequence

import numpy as np

from .constants import LOGGER_NAME
from .errors import (
    DegenerateSpan,
    FlatFormatError,
    InvalidDimension,
    InvalidParameters,
    ParameterMismatch,
)
from .gf import FieldCtx, field_new
from .linalg import as_rows, mat_mul, reduce_rows, rref_array

log = logging.getLogger(LOGGER_NAME)


@dataclass(frozen=True)
class Flat:
    ctx: FieldCtx
    d: int
    k: int
    basis: tuple[tuple[int, ...], ...]
    pivots: tuple[int, ...]
    base: tuple[int, ...]

    @property
    def basis_array(self) -> np.ndarray:
        return np.array(self.basis, dtype=np.int64).reshape(self.k, self.d)

    @property
    def base_array(self) -> np.ndarray:
        return np.array(self.base, dtype=np.int64)

    def sort_key(self) -> tuple:
        return self.pivots, self.basis, self.base

    def __str__(self) -> str:
        return format_flat(self)


def _make_flat(ctx: FieldCtx, d: int, basis: np.ndarray, pivots: Sequence[int], base: np.ndarray) -> Flat:
    k = len(pivots)
    rows = tuple(tuple(int(c) for c in row) for row in basis[:k])
    return Flat(ctx, d, k, rows, tuple(int(p) for p in pivots), tuple(int(c) for c in base))


def _check_dims(d: int, k: int):
    if not 0 <= k < d:
        raise InvalidDimension(f"flat dimension k={k} must satisfy 0 <= k < d={d}")


def flat_from_span(ctx: FieldCtx, directions, base) -> Flat:
    """Canonical flat span{directions} + base"""
    base_row = as_rows(ctx, [base])
    d = base_row.shape[1]
    directions = list(directions)
    _check_dims(d, len(directions))

    reduced, pivots = rref_array(ctx, as_rows(ctx, directions, d=d))
    if len(pivots) < len(directions):
        raise DegenerateSpan(f"{len(directions)} direction vectors span only rank {len(pivots)}")

    basis = reduced[: len(pivots)]
    return _make_flat(ctx, d, basis, pivots, reduce_rows(ctx, base_row, basis, pivots)[0])


def _check_pair(u: Flat, v: Flat):
    if u.ctx != v.ctx or u.d != v.d:
        raise ParameterMismatch(f"flats live in {u.ctx}^{u.d} and {v.ctx}^{v.d}")


def flat_eq(u: Flat, v: Flat) -> bool:
    _check_pair(u, v)
    if u.k != v.k:
        raise ParameterMismatch(f"comparing a {u.k}-flat with a {v.k}-flat")
    return u.basis == v.basis and u.base == v.base


def contains_point(v: Flat, x) -> bool:
    point = as_rows(v.ctx, [x], d=v.d)
    diff = v.ctx.sub_t[point, v.base_array]
    return not reduce_rows(v.ctx, diff, v.basis_array, v.pivots).any()


def flat_contains_flat(outer: Flat, inner: Flat) -> bool:
    """Direction rows of inner and the base difference must lie in outer's direction space"""
    _check_pair(outer, inner)
    if inner.k > outer.k:
        raise ParameterMismatch(f"a {outer.k}-flat cannot contain a {inner.k}-flat")
    ctx = outer.ctx
    rows = np.vstack([inner.basis_array, ctx.sub_t[inner.base_array, outer.base_array][None, :]])
    return not reduce_rows(ctx, rows, outer.basis_array, outer.pivots).any()


def points_array(v: Flat) -> np.ndarray:
    """All q^k points of the flat as a (q^k, d) array"""
    ctx = v.ctx
    coeffs = np.array(list(product(range(ctx.q), repeat=v.k)), dtype=np.int64).reshape(ctx.q**v.k, v.k)
    return ctx.add_t[mat_mul(ctx, coeffs, v.basis_array), v.base_array[None, :]]


def points_of(v: Flat) -> list[tuple[int, ...]]:
    return [tuple(int(c) for c in row) for row in points_array(v)]


# ----------------------------------------------------------------------
# Enumeration and indexing
# ----------------------------------------------------------------------


@lru_cache(maxsize=None)
def enumerate_directions(ctx: FieldCtx, d: int, k: int) -> tuple[np.ndarray, ...]:
    """All k-dimensional subspaces of F_q^d as RREF bases, in canonical order"""
    directions = []
    for pivots in combinations(range(d), k):
        free = [(i, c) for i, p in enumerate(pivots) for c in range(p + 1, d) if c not in pivots]
        rows = [i for i, _ in free]
        cols = [c for _, c in free]
        for values in product(range(ctx.q), repeat=len(free)):
            m = np.zeros((k, d), dtype=np.int64)
            for i, p in enumerate(pivots):
                m[i, p] = 1
            if free:
                m[rows, cols] = values
            m.setflags(write=False)
            directions.append(m)
    return tuple(directions)


@lru_cache(maxsize=None)
def _direction_index(ctx: FieldCtx, d: int, k: int) -> dict[bytes, int]:
    return {m.tobytes(): i for i, m in enumerate(enumerate_directions(ctx, d, k))}


def base_indices(ctx: FieldCtx, bases: np.ndarray, pivots: Sequence[int]) -> np.ndarray:
    """Rank of reduced base points among the q^(d-k) cosets of their direction"""
    d = bases.shape[-1]
    free = [c for c in range(d) if c not in pivots]
    weights = ctx.q ** np.arange(len(free) - 1, -1, -1, dtype=np.int64)
    return bases[..., free] @ weights


def direction_index(ctx: FieldCtx, basis: np.ndarray) -> int:
    k, d = basis.shape
    return _direction_index(ctx, d, k)[np.ascontiguousarray(basis, dtype=np.int64).tobytes()]


def flat_index(v: Flat) -> int:
    """Position of v in enumerate_flats(v.ctx, v.d, v.k)"""
    cosets = v.ctx.q ** (v.d - v.k)
    base = int(base_indices(v.ctx, v.base_array, v.pivots))
    return direction_index(v.ctx, v.basis_array) * cosets + base


def enumerate_flats(ctx: FieldCtx, d: int, k: int) -> list[Flat]:
    """Every k-flat of F_q^d exactly once, in canonical order"""
    _check_dims(d, k)
    flats = []
    for basis in enumerate_directions(ctx, d, k):
        pivots = [int(np.flatnonzero(row)[0]) for row in basis]
        free = [c for c in range(d) if c not in pivots]
        rows = tuple(tuple(int(c) for c in row) for row in basis)
        for values in product(range(ctx.q), repeat=len(free)):
            base = [0] * d
            for c, val in zip(free, values):
                base[c] = val
            flats.append(Flat(ctx, d, k, rows, tuple(pivots), tuple(base)))
    log.debug(f"Flats - enumerated {len(flats)} {k}-flats of {ctx}^{d}")
    return flats


def within_arrays(outer: Flat, k: int) -> Iterator[tuple[np.ndarray, list[int], np.ndarray]]:
    """For every k-dimensional direction inside outer: (RREF basis, pivots, reduced bases)

    The reduced bases are the q^(h-k) distinct cosets of that direction lying in outer.
    """
    if not 0 <= k <= outer.k:
        raise InvalidParameters(f"no {k}-flats inside a {outer.k}-flat")
    ctx = outer.ctx
    points = points_array(outer)
    frame = outer.basis_array
    for local in enumerate_directions(ctx, outer.k, k):
        basis, pivots = rref_array(ctx, mat_mul(ctx, local, frame))
        bases = np.unique(reduce_rows(ctx, points, basis, pivots), axis=0)
        yield basis, pivots, bases


def flats_within(outer: Flat, k: int) -> list[Flat]:
    """The x(h, k) k-flats contained in outer"""
    return [
        _make_flat(outer.ctx, outer.d, basis, pivots, base)
        for basis, pivots, bases in within_arrays(outer, k)
        for base in bases
    ]


def within_indices(outer: Flat, k: int) -> np.ndarray:
    """Canonical indices of the k-flats inside outer"""
    cosets = outer.ctx.q ** (outer.d - k)
    chunks = [
        direction_index(outer.ctx, basis) * cosets + base_indices(outer.ctx, bases, pivots)
        for basis, pivots, bases in within_arrays(outer, k)
    ]
    return np.concatenate(chunks)


# ----------------------------------------------------------------------
# Exact counts
# ----------------------------------------------------------------------


def gaussian_binomial(n: int, k: int, q: int) -> int:
    """Number of k-dimensional subspaces of F_q^n (0 outside 0 <= k <= n)"""
    if not 0 <= k <= n:
        return 0
    num = math.prod(q**n - q**i for i in range(k))
    den = math.prod(q**k - q**i for i in range(k))
    return num // den


def count_x(h: int, k: int, q: int) -> int:
    """Number of k-flats inside a fixed h-flat"""
    if not 0 <= k <= h:
        raise InvalidParameters(f"x(h={h}, k={k}) needs 0 <= k <= h")
    return q ** (h - k) * gaussian_binomial(h, k, q)


def count_y(d: int, h: int, k: int, q: int) -> int:
    """Number of h-flats of F_q^d containing a fixed k-flat"""
    if not 0 <= k <= h < d:
        raise InvalidParameters(f"y(d={d}, h={h}, k={k}) needs 0 <= k <= h < d")
    num = math.prod(q ** (d - i) - 1 for i in range(k, h))
    den = math.prod(q ** (h - i) - 1 for i in range(k, h))
    return num // den


def count_flats(d: int, k: int, q: int) -> int:
    _check_dims(d, k)
    return q ** (d - k) * gaussian_binomial(d, k, q)


@dataclass(frozen=True)
class CountTable:
    q: int
    d: int
    k: int
    h: int
    n_kflats: int
    n_hflats: int
    x_hk: int
    y_hk: int

    @property
    def edges(self) -> int:
        return self.n_kflats * self.y_hk

    @property
    def identity_ok(self) -> bool:
        return self.n_kflats * self.y_hk == self.n_hflats * self.x_hk

    @property
    def exponents(self) -> dict[str, int]:
        """Leading q-exponents of each count"""
        d, k, h = self.d, self.k, self.h
        return {
            "n_kflats": (d - k) * (k + 1),
            "n_hflats": (d - h) * (h + 1),
            "x": (h - k) * (k + 1),
            "y": (d - h) * (h - k),
        }

    def to_dict(self) -> dict:
        return {
            "params": {"q": self.q, "d": self.d, "k": self.k, "h": self.h},
            "n_kflats": self.n_kflats,
            "n_hflats": self.n_hflats,
            "x": self.x_hk,
            "y": self.y_hk,
            "edges": self.edges,
            "identity": "ok" if self.identity_ok else "FAILED",
            "exponents": self.exponents,
        }


def check_graph_params(d: int, k: int, h: int):
    if not 0 <= k < h < d:
        raise InvalidParameters(f"need 0 <= k < h < d, got d={d}, k={k}, h={h}")


def count_table(d: int, k: int, h: int, q: int) -> CountTable:
    check_graph_params(d, k, h)
    return CountTable(
        q, d, k, h,
        n_kflats=count_flats(d, k, q),
        n_hflats=count_flats(d, h, q),
        x_hk=count_x(h, k, q),
        y_hk=count_y(d, h, k, q),
    )


# ----------------------------------------------------------------------
# Serialization: "q d k | row; row | base"
# ----------------------------------------------------------------------


def format_flat(v: Flat) -> str:
    rows = "; ".join(" ".join(str(c) for c in row) for row in v.basis)
    base = " ".join(str(c) for c in v.base)
    basis = f" {rows} " if rows else " "
    return f"{v.ctx.q} {v.d} {v.k} |{basis}| {base}"


def parse_flat(line: str, ctx: FieldCtx | None = None) -> Flat:
    parts = line.strip().split("|")
    if len(parts) != 3:
        raise FlatFormatError(f"expected 'q d k | basis | base', got {line!r}")
    try:
        q, d, k = (int(t) for t in parts[0].split())
        rows = [[int(c) for c in row.split()] for row in parts[1].split(";") if row.strip()]
        base = [int(c) for c in parts[2].split()]
    except ValueError as e:
        raise FlatFormatError(f"malformed flat line {line!r}: {e}") from None

    if ctx is None:
        ctx = field_new(q)
    elif ctx.q != q:
        raise FlatFormatError(f"flat over GF({q}) read with a GF({ctx.q}) context")
    if len(rows) != k or len(base) != d:
        raise FlatFormatError(f"header says d={d}, k={k} but line has {len(rows)} rows, {len(base)} coordinates")
    return flat_from_span(ctx, rows, base)


def write_flats(flats: Iterable[Flat], stream):
    for v in flats:
        stream.write(format_flat(v) + "\n")
