"""Richness module - t-rich vertices of incidence graphs and the lower bounds on their number

S is a subset of one part of the graph; R_t(S) is the set of vertices of the
other part with at least t neighbours in S. Lower bounds come in two forms:
the exact one, computed from the graph's degrees and measured lambda3/lambda1,
and the closed form in powers of q.
"""

import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable

import numpy as np

from .constants import DEFAULT_TOL, FLOOR_SLACK, LOGGER_NAME
from .errors import InvalidParameters, ParameterMismatch
from .flats import Flat, check_graph_params
from .gf import FieldCtx
from .incidence import IncidenceGraph, build_graph, index_mask
from .spectral import SpectrumReport, _within, graph_spectrum

log = logging.getLogger(LOGGER_NAME)

SIDES = ("A", "B")


def _ceil(value: Fraction) -> int:
    return -(-value.numerator // value.denominator)


def _check_side(side: str) -> str:
    side = side.upper()
    if side not in SIDES:
        raise InvalidParameters(f"side must be one of {SIDES}, got {side!r}")
    return side


def neighbour_counts(graph: IncidenceGraph, subset: Iterable[int], side: str = "B") -> np.ndarray:
    """For every vertex of the part opposite to side, its number of neighbours in subset"""
    side = _check_side(side)
    if side == "B":
        mask = index_mask(subset, graph.n_b, "S")
        return np.bincount(graph.edge_a[mask[graph.edge_b]], minlength=graph.n_a)
    mask = index_mask(subset, graph.n_a, "S")
    return np.bincount(graph.edge_b[mask[graph.edge_a]], minlength=graph.n_b)


def rich_objects(graph: IncidenceGraph, subset: Iterable[int], t: int, side: str = "B") -> np.ndarray:
    """Sorted indices of the opposite part with at least t neighbours in subset"""
    if t < 1:
        raise InvalidParameters(f"richness threshold must be >= 1, got t={t}")
    return np.flatnonzero(neighbour_counts(graph, subset, side) >= t)


@dataclass(frozen=True)
class RichReport:
    """Lower bound audit for |R_t(S)|

    The exact constant uses the degree of the opposite part and measured
    mu = lambda3/lambda1; the closed-form one replaces both by powers of q.
    A report whose hypothesis is unmet is not applicable and neither passes
    nor fails. When only the closed-form hypothesis holds, the status follows
    the closed-form floor, and missing it reads BELOW-CLOSED-FORM, not FAIL.
    """

    params: dict
    t: int
    side: str
    s_size: int
    threshold_size: int
    hypothesis_exact: bool
    hypothesis_closed: bool | None
    r_count: int
    opposite_size: int
    c_exact: float
    floor_exact: int
    c_closed: Fraction | None
    floor_closed: int | None

    @property
    def hypothesis_met(self) -> bool:
        return self.hypothesis_exact if self.hypothesis_closed is None else self.hypothesis_closed

    @property
    def pass_exact(self) -> bool | None:
        if not self.hypothesis_exact:
            return None
        return self.r_count >= self.floor_exact

    @property
    def pass_closed(self) -> bool | None:
        if self.c_closed is None or not self.hypothesis_met:
            return None
        return self.r_count >= self.floor_closed

    @property
    def status(self) -> str:
        if not self.hypothesis_met:
            return "NOT-APPLICABLE"
        if self.pass_exact is None:
            return "PASS" if self.pass_closed else "BELOW-CLOSED-FORM"
        return "PASS" if self.pass_exact else "FAIL"

    def to_dict(self) -> dict:
        return {
            "params": self.params,
            "t": self.t,
            "side": self.side,
            "S_size": self.s_size,
            "threshold_size": self.threshold_size,
            "hypothesis_met": self.hypothesis_met,
            "hypothesis_exact": self.hypothesis_exact,
            "R_count": self.r_count,
            "c_exact": self.c_exact,
            "c_paper": None if self.c_closed is None else float(self.c_closed),
            "floor_exact": self.floor_exact,
            "floor_paper": self.floor_closed,
            "pass_exact": self.pass_exact,
            "pass_paper": self.pass_closed,
            "hypothesis_closed": self.hypothesis_closed,
            "status": self.status,
        }


def _opposite(graph: IncidenceGraph, side: str) -> tuple[int, int]:
    """Size and vertex degree of the part opposite to side"""
    if side == "B":
        return graph.n_a, graph.counts.y_hk
    return graph.n_b, graph.counts.x_hk


def hypothesis_size(graph: IncidenceGraph, t: int, side: str = "B") -> int:
    """Smallest |S| with |S| >= 2(t-1)|part of S| / deg(opposite part)"""
    if t < 2:
        raise InvalidParameters(f"richness bounds need t >= 2, got t={t}")
    side = _check_side(side)
    own = graph.n_b if side == "B" else graph.n_a
    return _ceil(Fraction(2 * (t - 1) * own, _opposite(graph, side)[1]))


def _rich_report(
    graph: IncidenceGraph,
    subset: Iterable[int],
    t: int,
    side: str,
    spectrum: SpectrumReport | None,
    tol: float,
    c_closed: Fraction | None = None,
    closed_scale: int | None = None,
    hypothesis_closed: bool | None = None,
) -> RichReport:
    side = _check_side(side)
    threshold = hypothesis_size(graph, t, side)
    subset = np.unique(np.asarray(list(subset), dtype=np.int64))
    r_count = int(rich_objects(graph, subset, t, side).size)

    opposite, degree = _opposite(graph, side)
    spectrum = spectrum or graph_spectrum(graph, tol)
    c_exact = (t - 1) / (t - 1 + 2 * degree * spectrum.mu**2)
    floor_exact = math.ceil(c_exact * opposite - FLOOR_SLACK)
    floor_closed = None if c_closed is None else _ceil(c_closed * closed_scale)

    report = RichReport(
        graph.params,
        t,
        side,
        int(subset.size),
        threshold,
        int(subset.size) >= threshold,
        hypothesis_closed,
        r_count,
        opposite,
        c_exact,
        floor_exact,
        c_closed,
        floor_closed,
    )
    log.debug(
        f"Richness - {graph.params} t={t} |S|={report.s_size} ({side}): "
        f"|R|={r_count}, floor_exact={floor_exact}, floor_closed={floor_closed}"
    )
    return report


def k_rich_constant(d: int, k: int, h: int, q: int, t: int) -> Fraction:
    """Closed-form c for k-flats lying in at least t members of a set of h-flats"""
    return Fraction(t - 1, (t - 1) + 2 * q ** ((d - h - 1) * (h - k) + k))


def h_rich_constant(d: int, k: int, h: int, q: int, t: int) -> Fraction:
    """Closed-form c for h-flats containing at least t members of a set of k-flats"""
    return Fraction(t - 1, (t - 1) + 2 * q ** (k * (h - k + 1)))


def closed_form_hypothesis_size(d: int, k: int, h: int, q: int, t: int) -> int:
    return 2 * (t - 1) * q ** ((d - h) * (k + 1))


def _closed_form(graph: IncidenceGraph, t: int, side: str) -> tuple[Fraction, int]:
    """Closed-form constant and the part size it multiplies, q^(dimension of the part)"""
    d, k, h, q = graph.d, graph.k, graph.h, graph.ctx.q
    if side == "B":
        return k_rich_constant(d, k, h, q, t), q ** ((d - k) * (k + 1))
    return h_rich_constant(d, k, h, q, t), q ** ((d - h) * (h + 1))


def rich_lower_check(
    graph: IncidenceGraph,
    subset: Iterable[int],
    t: int,
    spectrum: SpectrumReport | None = None,
    tol: float = DEFAULT_TOL,
    side: str = "B",
    hypothesis_closed: bool | None = None,
) -> RichReport:
    """|R_t(S)| >= c|A| for S within part B, whenever |S| >= 2(t-1)|B|/deg(A)

    With side="A" the roles of the parts swap.
    """
    side = _check_side(side)
    c_closed, scale = _closed_form(graph, t, side)
    return _rich_report(
        graph,
        subset,
        t,
        side,
        spectrum,
        tol,
        c_closed=c_closed,
        closed_scale=scale,
        hypothesis_closed=hypothesis_closed,
    )


def _graph_for(ctx: FieldCtx, d: int, k: int, h: int, graph: IncidenceGraph | None) -> IncidenceGraph:
    check_graph_params(d, k, h)
    if graph is None:
        return build_graph(ctx, d, k, h)
    if graph.ctx != ctx or (graph.d, graph.k, graph.h) != (d, k, h):
        raise ParameterMismatch(f"graph {graph.params} does not match q={ctx.q} d={d} k={k} h={h}")
    return graph


def rich_kflats_check(
    ctx: FieldCtx,
    d: int,
    k: int,
    h: int,
    t: int,
    hs: Iterable[Flat],
    graph: IncidenceGraph | None = None,
    spectrum: SpectrumReport | None = None,
    tol: float = DEFAULT_TOL,
) -> RichReport:
    """Count k-flats lying in at least t of the h-flats hs"""
    graph = _graph_for(ctx, d, k, h, graph)
    subset = {graph.index_b(v) for v in hs}
    met = len(subset) >= closed_form_hypothesis_size(d, k, h, ctx.q, t)
    return rich_lower_check(graph, subset, t, spectrum, tol, side="B", hypothesis_closed=met)


def rich_hflats_check(
    ctx: FieldCtx,
    d: int,
    k: int,
    h: int,
    t: int,
    ks: Iterable[Flat],
    graph: IncidenceGraph | None = None,
    spectrum: SpectrumReport | None = None,
    tol: float = DEFAULT_TOL,
) -> RichReport:
    """Count h-flats containing at least t of the k-flats ks"""
    graph = _graph_for(ctx, d, k, h, graph)
    subset = {graph.index_a(v) for v in ks}
    met = len(subset) >= closed_form_hypothesis_size(d, k, h, ctx.q, t)
    return rich_lower_check(graph, subset, t, spectrum, tol, side="A", hypothesis_closed=met)


# ----------------------------------------------------------------------
# Upper bound from the mixing lemma
# ----------------------------------------------------------------------


@dataclass(frozen=True)
class RichUpperReport:
    """|R_t(S)| <= lambda3^2 |S| / (t - a|S|/|B|)^2, meaningful once t exceeds a|S|/|B|"""

    params: dict
    t: int
    side: str
    s_size: int
    r_count: int
    expected: Fraction
    bound: float | None
    tol: float

    @property
    def applicable(self) -> bool:
        return self.bound is not None

    @property
    def passed(self) -> bool:
        return not self.applicable or _within(self.r_count, self.bound, self.tol)

    def to_dict(self) -> dict:
        return {
            "params": self.params,
            "t": self.t,
            "side": self.side,
            "S_size": self.s_size,
            "R_count": self.r_count,
            "expected_neighbours": float(self.expected),
            "bound": self.bound,
            "pass": self.passed,
        }


def rich_upper_check(
    graph: IncidenceGraph,
    subset: Iterable[int],
    t: int,
    side: str = "B",
    spectrum: SpectrumReport | None = None,
    tol: float = DEFAULT_TOL,
) -> RichUpperReport:
    """Few vertices can have many more neighbours in S than the average a|S|/|B|"""
    side = _check_side(side)
    subset = np.unique(np.asarray(list(subset), dtype=np.int64))
    r_count = int(rich_objects(graph, subset, t, side).size)

    # a/|B| == b/|A|, so the average is the same from either side
    expected = Fraction(graph.counts.y_hk * int(subset.size), graph.n_b)
    bound = None
    if t > expected:
        spectrum = spectrum or graph_spectrum(graph, tol)
        bound = spectrum.lambda3**2 * int(subset.size) / float(t - expected) ** 2
    return RichUpperReport(graph.params, t, side, int(subset.size), r_count, expected, bound, tol)
