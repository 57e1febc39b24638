"""Incidence module - the k-flat / h-flat incidence graph and its pair structure"""

import csv
import dataclasses
import logging
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

from .config import Budget
from .constants import EXPONENT_WINDOW, LOGGER_NAME
from .errors import (
    BadSubset,
    IdenticalFlats,
    InvalidParameters,
    InvariantViolation,
    ParameterMismatch,
    TooLarge,
)
from .flats import (
    CountTable,
    Flat,
    check_graph_params,
    count_table,
    count_x,
    enumerate_directions,
    enumerate_flats,
    flat_contains_flat,
    flat_eq,
    flat_index,
    gaussian_binomial,
    within_indices,
)
from .gf import FieldCtx
from .linalg import reduce_rows, rref_array

log = logging.getLogger(LOGGER_NAME)


def index_mask(indices: Iterable[int], n: int, label: str = "subset") -> np.ndarray:
    """Boolean membership mask of an index subset of range(n)"""
    idx = np.asarray(list(indices) if not isinstance(indices, np.ndarray) else indices)
    if idx.size and not np.issubdtype(idx.dtype, np.integer):
        raise BadSubset(f"{label} holds non-integer indices")
    idx = idx.astype(np.int64)
    if idx.size and (idx.min() < 0 or idx.max() >= n):
        raise BadSubset(f"{label} has indices outside 0..{n - 1}")
    mask = np.zeros(n, dtype=bool)
    mask[idx] = True
    return mask


@dataclass(frozen=True)
class IncidenceGraph:
    """Bipartite graph: all k-flats (part A) against all h-flats (part B)

    Edges are stored once, sorted by (a, b); adjacency views are derived.
    """

    ctx: FieldCtx
    d: int
    k: int
    h: int
    part_a: tuple[Flat, ...]
    part_b: tuple[Flat, ...]
    edge_a: np.ndarray
    edge_b: np.ndarray
    counts: CountTable

    @property
    def params(self) -> dict[str, int]:
        return {"q": self.ctx.q, "d": self.d, "k": self.k, "h": self.h}

    @property
    def n_a(self) -> int:
        return len(self.part_a)

    @property
    def n_b(self) -> int:
        return len(self.part_b)

    @property
    def edge_count(self) -> int:
        return int(self.edge_a.size)

    @cached_property
    def degrees_a(self) -> np.ndarray:
        return np.bincount(self.edge_a, minlength=self.n_a)

    @cached_property
    def degrees_b(self) -> np.ndarray:
        return np.bincount(self.edge_b, minlength=self.n_b)

    @cached_property
    def adjacency(self) -> tuple[np.ndarray, ...]:
        """For each A-index, the sorted incident B-indices"""
        bounds = np.concatenate([[0], np.cumsum(self.degrees_a)])
        return tuple(self.edge_b[bounds[i] : bounds[i + 1]] for i in range(self.n_a))

    @cached_property
    def adjacency_b(self) -> tuple[np.ndarray, ...]:
        order = np.lexsort((self.edge_a, self.edge_b))
        bounds = np.concatenate([[0], np.cumsum(self.degrees_b)])
        ea = self.edge_a[order]
        return tuple(ea[bounds[j] : bounds[j + 1]] for j in range(self.n_b))

    def index_a(self, v: Flat) -> int:
        return self._index(v, self.k)

    def index_b(self, v: Flat) -> int:
        return self._index(v, self.h)

    def _index(self, v: Flat, dim: int) -> int:
        if v.ctx != self.ctx or v.d != self.d or v.k != dim:
            raise ParameterMismatch(f"{v} is not a {dim}-flat of {self.ctx}^{self.d}")
        return flat_index(v)

    def count_edges(self, xs: Iterable[int], ys: Iterable[int]) -> int:
        """e(X, Y) for X within part A and Y within part B"""
        mask_x = index_mask(xs, self.n_a, "X")
        mask_y = index_mask(ys, self.n_b, "Y")
        return int(np.count_nonzero(mask_x[self.edge_a] & mask_y[self.edge_b]))

    def incidence_matrix(self, dtype=np.int64) -> np.ndarray:
        n = np.zeros((self.n_a, self.n_b), dtype=dtype)
        n[self.edge_a, self.edge_b] = 1
        return n

    def check_biregular(self) -> list[str]:
        """Problems found against the exact degree formulas; empty when sound"""
        problems = []
        y, x = self.counts.y_hk, self.counts.x_hk
        bad_a = np.flatnonzero(self.degrees_a != y)
        bad_b = np.flatnonzero(self.degrees_b != x)
        if bad_a.size:
            problems.append(f"{bad_a.size} k-flats with degree != y={y} (first: {int(bad_a[0])})")
        if bad_b.size:
            problems.append(f"{bad_b.size} h-flats with degree != x={x} (first: {int(bad_b[0])})")
        if self.edge_count != self.counts.edges:
            problems.append(f"{self.edge_count} edges, expected {self.counts.edges}")
        return problems

    def drop_edges(self, positions: Sequence[int]) -> "IncidenceGraph":
        """Copy of the graph without the edges at the given positions"""
        keep = np.ones(self.edge_count, dtype=bool)
        keep[list(positions)] = False
        return dataclasses.replace(self, edge_a=self.edge_a[keep], edge_b=self.edge_b[keep])


def build_graph(ctx: FieldCtx, d: int, k: int, h: int, budget: Budget | None = None) -> IncidenceGraph:
    """Build G_P with an edge whenever a k-flat lies in an h-flat"""
    counts = count_table(d, k, h, ctx.q)
    budget = budget or Budget.from_env()
    largest = max(counts.n_kflats, counts.n_hflats)
    if largest > budget.max_flats:
        raise TooLarge(f"part of size {largest} exceeds the budget of {budget.max_flats} flats")

    part_a = tuple(enumerate_flats(ctx, d, k))
    part_b = tuple(enumerate_flats(ctx, d, h))

    inside = [within_indices(outer, k) for outer in part_b]
    edge_a = np.concatenate(inside).astype(np.int64)
    edge_b = np.repeat(np.arange(len(part_b), dtype=np.int64), [len(c) for c in inside])
    order = np.lexsort((edge_b, edge_a))

    graph = IncidenceGraph(ctx, d, k, h, part_a, part_b, edge_a[order], edge_b[order], counts)
    problems = graph.check_biregular()
    if problems:
        for problem in problems:
            log.error(f"Graph - {problem}")
        raise InvariantViolation(f"incidence graph for {graph.params} is not biregular")

    log.debug(
        f"Graph - built q={ctx.q} d={d} k={k} h={h}: "
        f"|A|={graph.n_a}, |B|={graph.n_b}, {graph.edge_count} edges"
    )
    return graph


def _dedupe(flats: Iterable[Flat]) -> list[Flat]:
    return list(dict.fromkeys(flats))


def _common_shape(flats: Sequence[Flat], label: str) -> tuple[FieldCtx, int, int] | None:
    shapes = {(v.ctx, v.d, v.k) for v in flats}
    if len(shapes) > 1:
        raise ParameterMismatch(f"{label} mixes flats of different fields, dimensions or ambient spaces")
    return shapes.pop() if shapes else None


def count_incidences(ks: Iterable[Flat], hs: Iterable[Flat]) -> int:
    """|{(p, pi) : p in ks, pi in hs, p inside pi}| for arbitrary flat sets

    Small instances test containment pairwise; larger ones enumerate the
    k-flats inside each h-flat and look them up among ks.
    """
    ks, hs = _dedupe(ks), _dedupe(hs)
    shape_k = _common_shape(ks, "k-flat set")
    shape_h = _common_shape(hs, "h-flat set")
    if shape_k is None or shape_h is None:
        return 0
    if shape_k[:2] != shape_h[:2] or shape_k[2] > shape_h[2]:
        raise ParameterMismatch("k-flats and h-flats must share field and dimension, with k <= h")

    k, h, q = shape_k[2], shape_h[2], shape_k[0].q
    if len(ks) <= count_x(h, k, q):
        return sum(flat_contains_flat(pi, p) for pi in hs for p in ks)

    wanted = np.array(sorted(flat_index(p) for p in ks), dtype=np.int64)
    return int(sum(np.isin(within_indices(pi, k), wanted).sum() for pi in hs))


def pair_rank(v1: Flat, v2: Flat) -> int:
    """rank of [basis1; basis2; base2 - base1]"""
    if flat_eq(v1, v2):
        raise IdenticalFlats(f"pair rank needs distinct flats, got {v1} twice")
    ctx = v1.ctx
    stacked = np.vstack(
        [v1.basis_array, v2.basis_array, ctx.sub_t[v2.base_array, v1.base_array][None, :]]
    )
    return len(rref_array(ctx, stacked)[1])


def common_neighbor_count(v1: Flat, v2: Flat, h: int) -> int:
    """Number of h-flats containing both v1 and v2"""
    check_graph_params(v1.d, v1.k, h)
    t = pair_rank(v1, v2)
    return gaussian_binomial(v1.d - t, h - t, v1.ctx.q)


def gram_matrix(graph: IncidenceGraph, budget: Budget | None = None, side: str = "A") -> np.ndarray:
    """NN^T (side "A") or N^TN (side "B") as an exact int64 matrix

    Both share their nonzero eigenvalues.
    """
    budget = budget or Budget.from_env()
    if side not in ("A", "B"):
        raise InvalidParameters(f"side must be 'A' or 'B', got {side!r}")
    size = graph.n_a if side == "A" else graph.n_b
    if size**2 > budget.max_gram_entries:
        raise TooLarge(f"{size}^2 Gram entries exceed the budget of {budget.max_gram_entries}")
    n = graph.incidence_matrix(dtype=np.float64)
    product = n @ n.T if side == "A" else n.T @ n
    return np.rint(product).astype(np.int64)


def pair_rank_matrix(graph: IncidenceGraph, budget: Budget | None = None) -> np.ndarray:
    """pair_rank for every ordered pair of k-flats, diagonal set to k

    Flats sharing a direction form contiguous blocks of q^(d-k) cosets, so each
    pair of directions is one vectorized membership test of base differences.
    """
    budget = budget or Budget.from_env()
    if graph.n_a > budget.max_dense:
        raise TooLarge(f"pair scan over {graph.n_a} flats exceeds the dense budget {budget.max_dense}")

    ctx, d, k = graph.ctx, graph.d, graph.k
    directions = enumerate_directions(ctx, d, k)
    cosets = ctx.q ** (d - k)
    bases = np.array([v.base for v in graph.part_a], dtype=np.int64).reshape(len(directions), cosets, d)

    ranks = np.empty((graph.n_a, graph.n_a), dtype=np.int8)
    for i, di in enumerate(directions):
        rows_i = slice(i * cosets, (i + 1) * cosets)
        for j in range(i, len(directions)):
            span, pivots = rref_array(ctx, np.vstack([di, directions[j]]))
            diff = ctx.sub_t[bases[j][None, :, :], bases[i][:, None, :]]
            outside = reduce_rows(ctx, diff, span[: len(pivots)], pivots).any(axis=-1)
            block = len(pivots) + outside.astype(np.int8)
            rows_j = slice(j * cosets, (j + 1) * cosets)
            ranks[rows_i, rows_j] = block
            ranks[rows_j, rows_i] = block.T
    return ranks


@dataclass(frozen=True)
class RankClass:
    t: int
    constant: int  # expected common-neighbor count
    pairs: int  # ordered pairs in the class
    degree: int | None  # regular degree of E_t, None if irregular
    exponent: int
    degree_ratio: float | None
    mismatches: int

    @property
    def exponent_ok(self) -> bool:
        lo, hi = EXPONENT_WINDOW
        return self.degree_ratio is not None and lo <= self.degree_ratio <= hi

    def to_dict(self) -> dict:
        return {
            "t": self.t,
            "constant": self.constant,
            "pairs": self.pairs,
            "degree": self.degree,
            "exponent": self.exponent,
            "degree_ratio": self.degree_ratio,
            "exponent_ok": self.exponent_ok,
            "mismatches": self.mismatches,
        }


@dataclass(frozen=True)
class DecompositionReport:
    params: dict
    diagonal: int
    diagonal_mismatches: int
    classes: tuple[RankClass, ...]
    failures: tuple[str, ...]

    @property
    def passed(self) -> bool:
        return not self.failures

    def to_dict(self) -> dict:
        return {
            "params": self.params,
            "diagonal": self.diagonal,
            "diagonal_mismatches": self.diagonal_mismatches,
            "classes": [c.to_dict() for c in self.classes],
            "failures": list(self.failures),
            "pass": self.passed,
        }


def verify_decomposition(
    graph: IncidenceGraph,
    gram: np.ndarray | None = None,
    ranks: np.ndarray | None = None,
    budget: Budget | None = None,
) -> DecompositionReport:
    """Check entrywise that NN^T depends only on the pair rank, with exact class constants"""
    ranks = pair_rank_matrix(graph, budget) if ranks is None else ranks
    gram = gram_matrix(graph, budget) if gram is None else gram
    q, d, k, h = graph.ctx.q, graph.d, graph.k, graph.h
    failures = []

    y = graph.counts.y_hk
    diagonal_mismatches = int(np.count_nonzero(np.diagonal(gram) != y))
    if diagonal_mismatches:
        failures.append(f"{diagonal_mismatches} diagonal entries differ from y={y}")

    off = ~np.eye(graph.n_a, dtype=bool)
    if np.any(np.diagonal(ranks) != k) or np.any((ranks[off] <= k) | (ranks[off] > 2 * k + 1)):
        failures.append(f"pair ranks outside {k + 1}..{2 * k + 1}")

    classes = []
    for t in range(k + 1, 2 * k + 2):
        members = (ranks == t) & off
        constant = gaussian_binomial(d - t, h - t, q)
        mismatches = int(np.count_nonzero(gram[members] != constant))
        row_degrees = members.sum(axis=1)
        regular = bool(np.all(row_degrees == row_degrees[0]))
        degree = int(row_degrees[0]) if regular else None
        exponent = (t - k) * (d - t + k + 1)
        ratio = degree / q**exponent if degree is not None else None
        rank_class = RankClass(t, constant, int(members.sum()), degree, exponent, ratio, mismatches)
        classes.append(rank_class)

        if mismatches:
            failures.append(f"class t={t}: {mismatches} entries differ from {constant}")
        if not regular:
            failures.append(f"E_{t} is not regular")
        elif not rank_class.exponent_ok:
            failures.append(f"E_{t} degree {degree} is not of order q^{exponent}")

    report = DecompositionReport(graph.params, y, diagonal_mismatches, tuple(classes), tuple(failures))
    log.debug(f"Graph - decomposition {graph.params}: {'pass' if report.passed else failures}")
    return report


def export_adjacency_csv(graph: IncidenceGraph, stream):
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(["a_index", "b_index"])
    writer.writerows(zip(graph.edge_a.tolist(), graph.edge_b.tolist()))


def export_gram_csv(gram: np.ndarray, stream):
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow([f"c{j}" for j in range(gram.shape[1])])
    writer.writerows(gram.tolist())
