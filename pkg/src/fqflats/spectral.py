"""Spectral module - eigenvalues of incidence graphs, mixing audits and incidence bounds

Only a Gram matrix is diagonalized: the squared eigenvalues of the bipartite
adjacency matrix are the eigenvalues of NN^T (equivalently the nonzero ones of
N^TN), so lambda1^2 is the top eigenvalue and lambda3^2 the second one. The
smaller of the two Gram matrices is used.
"""

import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable

import numpy as np

from .config import Budget
from .constants import CLOSE_TO_EXPECTED, DEFAULT_TOL, EXPONENT_WINDOW, JACOBI_MAX_SWEEPS, LOGGER_NAME
from .errors import DimensionMismatch, InvalidParameters, NotSymmetric, ParameterMismatch, TooLarge
from .flats import Flat, check_graph_params, count_table
from .incidence import IncidenceGraph, count_incidences, gram_matrix

log = logging.getLogger(LOGGER_NAME)


def _within(value: float, bound: float, tol: float) -> bool:
    """value <= bound up to floating-point slack"""
    return value <= bound + 10 * tol * max(1.0, abs(bound))


# ----------------------------------------------------------------------
# Dense symmetric eigensolve
# ----------------------------------------------------------------------


def eigen_sym(m, tol: float = DEFAULT_TOL, method: str = "lapack", budget: Budget | None = None) -> np.ndarray:
    """All eigenvalues of a real symmetric matrix, sorted descending

    method="lapack" uses numpy's eigvalsh; method="jacobi" runs cyclic Jacobi
    rotations, meant for small matrices and cross-checks.
    """
    a = np.asarray(m, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionMismatch(f"expected a square matrix, got shape {a.shape}")
    budget = budget or Budget.from_env()
    if a.shape[0] > budget.max_dense:
        raise TooLarge(f"{a.shape[0]}x{a.shape[0]} eigensolve exceeds the dense budget {budget.max_dense}")
    if a.size == 0:
        return np.zeros(0)

    scale = max(1.0, float(np.abs(a).max()))
    asymmetry = float(np.abs(a - a.T).max())
    if asymmetry > tol * scale:
        raise NotSymmetric(f"matrix asymmetric by {asymmetry:.3g} (tolerance {tol * scale:.3g})")
    a = (a + a.T) / 2

    if method == "jacobi":
        values = _jacobi_eigenvalues(a, tol)
    elif method == "lapack":
        values = np.linalg.eigvalsh(a)
    else:
        raise InvalidParameters(f"unknown eigensolver {method!r}")
    return np.sort(values)[::-1]


def _jacobi_eigenvalues(a: np.ndarray, tol: float) -> np.ndarray:
    a = a.copy()
    n = a.shape[0]
    target = tol * max(1.0, float(np.linalg.norm(a)))
    for sweep in range(JACOBI_MAX_SWEEPS):
        off = math.sqrt(max(float(np.sum(a**2) - np.sum(np.diag(a) ** 2)), 0.0))
        if off <= target:
            log.debug(f"Spectral - Jacobi converged after {sweep} sweeps (n={n})")
            break
        for p in range(n - 1):
            for r in range(p + 1, n):
                apr = float(a[p, r])
                if apr == 0.0:
                    continue
                diff = float(a[r, r] - a[p, p])
                if abs(diff) + 100.0 * abs(apr) == abs(diff):
                    t = apr / diff  # 1/(2 theta) once theta^2 would overflow
                else:
                    theta = diff / (2.0 * apr)
                    t = math.copysign(1.0, theta) / (abs(theta) + math.hypot(theta, 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                col_p, col_r = a[:, p].copy(), a[:, r].copy()
                a[:, p] = c * col_p - s * col_r
                a[:, r] = s * col_p + c * col_r
                row_p, row_r = a[p, :].copy(), a[r, :].copy()
                a[p, :] = c * row_p - s * row_r
                a[r, :] = s * row_p + c * row_r
    else:
        log.warning(f"Jacobi did not converge in {JACOBI_MAX_SWEEPS} sweeps (n={n})")
    return np.diag(a).copy()


# ----------------------------------------------------------------------
# Spectrum of the plane-incidence graph
# ----------------------------------------------------------------------


def lambda3_exponent(d: int, k: int, h: int) -> int:
    return (d - h) * h + k * (2 * h - d - k + 1)


def lambda3_bound_sq(d: int, k: int, h: int, q: int) -> Fraction:
    """(2k+1) q^((d-h)h + k(2h-d-k+1)), the closed-form bound on lambda3^2"""
    return (2 * k + 1) * Fraction(q) ** lambda3_exponent(d, k, h)


def bound_is_strict(d: int, k: int, h: int) -> bool:
    """Whether lambda3^2 <= lambda3_bound_sq is asserted exactly rather than to leading order

    Holds for h-flats that are hyperplanes. Elsewhere lower-order terms can
    exceed the closed form at small q: points against lines of F_q^3 have
    lambda3^2 = q^2 + q against a bound of q^2.
    """
    return h == d - 1


@dataclass(frozen=True)
class SpectrumReport:
    params: dict
    lambda1: float
    lambda2: float
    lambda3: float
    bound_lambda3: float
    ab_check: float
    tol: float

    @property
    def ratio(self) -> float:
        return self.lambda3 / self.bound_lambda3

    @property
    def mu(self) -> float:
        return self.lambda3 / self.lambda1

    @property
    def strict(self) -> bool:
        p = self.params
        return bound_is_strict(p["d"], p["k"], p["h"])

    @property
    def leading_ratio(self) -> float:
        """lambda3^2 / q^exponent"""
        p = self.params
        return self.lambda3**2 / float(p["q"]) ** lambda3_exponent(p["d"], p["k"], p["h"])

    @property
    def bound_ok(self) -> bool:
        if self.strict:
            return _within(self.lambda3**2, self.bound_lambda3**2, self.tol)
        lo, hi = EXPONENT_WINDOW
        return lo <= self.leading_ratio <= hi

    @property
    def passed(self) -> bool:
        return self.bound_ok and self.ab_check <= 10 * self.tol * max(1.0, self.lambda1)

    def to_dict(self) -> dict:
        return {
            "params": self.params,
            "lambda1": self.lambda1,
            "lambda2": self.lambda2,
            "lambda3": self.lambda3,
            "bound": self.bound_lambda3,
            "ratio": self.ratio,
            "leading_ratio": self.leading_ratio,
            "strict": self.strict,
            "ab_check": self.ab_check,
            "pass": self.passed,
        }


def graph_spectrum(
    graph: IncidenceGraph,
    tol: float = DEFAULT_TOL,
    gram: np.ndarray | None = None,
    method: str = "lapack",
    budget: Budget | None = None,
) -> SpectrumReport:
    if gram is None:
        budget = budget or Budget.from_env()
        side = min(graph.n_a, graph.n_b)
        if side > budget.max_dense:
            raise TooLarge(f"smaller part has {side} vertices, over the dense budget {budget.max_dense}")
        gram = gram_matrix(graph, budget, side="A" if graph.n_a <= graph.n_b else "B")
    values = eigen_sym(gram, tol, method=method, budget=budget)

    lambda1 = math.sqrt(max(float(values[0]), 0.0))
    lambda3 = math.sqrt(max(float(values[1]), 0.0)) if values.size > 1 else 0.0
    p = graph.params
    bound = math.sqrt(float(lambda3_bound_sq(p["d"], p["k"], p["h"], p["q"])))
    ab = math.sqrt(graph.counts.y_hk * graph.counts.x_hk)

    report = SpectrumReport(p, lambda1, -lambda1, lambda3, bound, abs(lambda1 - ab), tol)
    log.debug(f"Spectral - {p}: lambda1={lambda1:.6f}, lambda3={lambda3:.6f}, bound={bound:.6f}")
    return report


# ----------------------------------------------------------------------
# Expander mixing audit
# ----------------------------------------------------------------------


@dataclass(frozen=True)
class MixingReport:
    x_size: int
    y_size: int
    e: int
    main: Fraction
    deviation: float
    bound_basic: float
    bound_refined: float
    tol: float

    @property
    def pass_basic(self) -> bool:
        return _within(self.deviation, self.bound_basic, self.tol)

    @property
    def pass_refined(self) -> bool:
        return _within(self.deviation, self.bound_refined, self.tol)

    @property
    def passed(self) -> bool:
        return self.pass_basic and self.pass_refined

    def to_dict(self) -> dict:
        return {
            "X_size": self.x_size,
            "Y_size": self.y_size,
            "e": self.e,
            "main": float(self.main),
            "deviation": self.deviation,
            "bound_basic": self.bound_basic,
            "bound_refined": self.bound_refined,
            "pass": self.passed,
        }


def mixing_audit(
    graph: IncidenceGraph,
    xs: Iterable[int],
    ys: Iterable[int],
    spectrum: SpectrumReport | None = None,
    tol: float = DEFAULT_TOL,
) -> MixingReport:
    """|e(X,Y) - a|X||Y|/|B|| against lambda3 sqrt(|X||Y|) and its refined form"""
    xs, ys = list(xs), list(ys)
    e = graph.count_edges(xs, ys)
    spectrum = spectrum or graph_spectrum(graph, tol)

    nx, ny = len(set(xs)), len(set(ys))
    main = Fraction(graph.counts.y_hk * nx * ny, graph.n_b)
    deviation = float(abs(e - main))
    basic = spectrum.lambda3 * math.sqrt(nx * ny)
    shrink = (1 - Fraction(nx, graph.n_a)) * (1 - Fraction(ny, graph.n_b))
    refined = spectrum.lambda3 * math.sqrt(nx * ny * float(shrink))
    return MixingReport(nx, ny, e, main, deviation, basic, refined, tol)


# ----------------------------------------------------------------------
# Incidence bound between sets of flats
# ----------------------------------------------------------------------


def threshold_exponent(d: int, k: int, h: int) -> int:
    return d * (k + h) + 2 * d + k - k * k - h * h - 2 * h


def guarantee_threshold(d: int, k: int, h: int, q: int) -> int:
    """Above this value of |P||H| the incidence bound forces an incidence"""
    check_graph_params(d, k, h)
    if h < 2 * k + 1:
        raise InvalidParameters(f"the incidence bound needs h >= 2k+1, got k={k}, h={h}")
    return (2 * k + 1) * q ** threshold_exponent(d, k, h)


@dataclass(frozen=True)
class IncidenceReport:
    params: dict
    p_size: int
    h_size: int
    incidences: int
    main: Fraction
    deviation: float
    bound: float
    mode: str  # "closed_form" or "measured"
    hypothesis_met: bool
    threshold: int | None
    tol: float

    @property
    def above_threshold(self) -> bool:
        return self.threshold is not None and self.p_size * self.h_size > self.threshold

    @property
    def nonempty_ok(self) -> bool:
        return not self.above_threshold or self.incidences > 0

    @property
    def close_to_expected(self) -> bool | None:
        if self.main == 0:
            return None
        return self.deviation / float(self.main) <= CLOSE_TO_EXPECTED

    @property
    def ratio(self) -> float:
        return self.deviation / self.bound if self.bound else 0.0

    @property
    def passed(self) -> bool:
        return _within(self.deviation, self.bound, self.tol) and self.nonempty_ok

    def to_dict(self) -> dict:
        return {
            "params": self.params,
            "P_size": self.p_size,
            "H_size": self.h_size,
            "I": self.incidences,
            "main": float(self.main),
            "deviation": self.deviation,
            "bound": self.bound,
            "ratio": self.ratio,
            "mode": self.mode,
            "hypothesis_met": self.hypothesis_met,
            "threshold": self.threshold,
            "above_threshold": self.above_threshold,
            "close_to_expected": self.close_to_expected,
            "pass": self.passed,
        }


def _check_flats(flats: list[Flat], q: int, d: int, dim: int, label: str):
    for v in flats:
        if v.ctx.q != q or v.d != d or v.k != dim:
            raise ParameterMismatch(f"{label} holds {v}, expected a {dim}-flat of GF({q})^{d}")


def incidence_bound_check(
    ks: Iterable[Flat],
    hs: Iterable[Flat],
    d: int,
    k: int,
    h: int,
    q: int,
    incidences: int | None = None,
    lambda3: float | None = None,
    tol: float = DEFAULT_TOL,
) -> IncidenceReport:
    """Compare I(P, H) with |P||H|/q^((d-h)(k+1)) under the closed-form deviation bound

    With lambda3 given the audit switches to the exact main term a|P||H|/|B|
    and the measured bound lambda3 sqrt(|P||H|).
    """
    check_graph_params(d, k, h)
    ks, hs = list(dict.fromkeys(ks)), list(dict.fromkeys(hs))
    _check_flats(ks, q, d, k, "P")
    _check_flats(hs, q, d, h, "H")

    hypothesis = h >= 2 * k + 1
    if not hypothesis:
        log.warning(f"h={h} < 2k+1={2 * k + 1}: the closed-form bound is outside its hypothesis")
    if incidences is None:
        incidences = count_incidences(ks, hs)

    size = len(ks) * len(hs)
    if lambda3 is None:
        main = Fraction(size, q ** ((d - h) * (k + 1)))
        bound = math.sqrt(float(lambda3_bound_sq(d, k, h, q)) * size)
        mode = "closed_form"
    else:
        counts = count_table(d, k, h, q)
        main = Fraction(counts.y_hk * size, counts.n_hflats)
        bound = lambda3 * math.sqrt(size)
        mode = "measured"

    return IncidenceReport(
        {"q": q, "d": d, "k": k, "h": h},
        len(ks),
        len(hs),
        int(incidences),
        main,
        float(abs(incidences - main)),
        bound,
        mode,
        hypothesis,
        guarantee_threshold(d, k, h, q) if hypothesis else None,
        tol,
    )
