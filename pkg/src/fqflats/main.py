"""Main application - command line entry point and verification runs"""

import argparse
import logging
import math
import sys
from contextlib import contextmanager
from typing import Iterable

import numpy as np

from .config import Budget, RunConfig
from .constants import (
    DEFAULT_SEED,
    DEFAULT_TOL,
    EXIT_FAILED,
    EXIT_OK,
    EXIT_USAGE,
    GRID_MAX_D,
    GRID_ORDERS,
    GRID_SHAPES,
    INCIDENCE_SAMPLES,
    JACOBI_CROSS_CHECK_MAX,
    LOGGER_NAME,
    MIXING_SAMPLES,
    ORACLE_SAMPLES,
    RICH_SAMPLES,
    RICH_THRESHOLDS,
    SHARPNESS_TOL,
)
from .errors import FqFlatsError, InvalidParameters, TooLarge
from .flats import (
    check_graph_params,
    count_flats,
    count_table,
    enumerate_flats,
    flat_contains_flat,
    flat_eq,
    flat_from_span,
    points_array,
    write_flats,
)
from .gf import field_new
from .incidence import (
    build_graph,
    common_neighbor_count,
    export_adjacency_csv,
    export_gram_csv,
    gram_matrix,
    pair_rank,
    verify_decomposition,
)
from .linalg import mat_mul, rank_of
from .richness import hypothesis_size, rich_hflats_check, rich_kflats_check, rich_lower_check, rich_upper_check
from .sampling import make_rng, random_flat, random_invertible, sample_at_least, sample_subset
from .spectral import graph_spectrum, guarantee_threshold, incidence_bound_check, mixing_audit, threshold_exponent
from .worker import FORMATS, ReportWriter

log = logging.getLogger(LOGGER_NAME)

PASS, FAIL, SKIPPED = "PASS", "FAIL", "SKIPPED"


# ----------------------------------------------------------------------
# Arguments and configuration
# ----------------------------------------------------------------------


def parse_grid(text: str) -> tuple[tuple[int, int, int, int], ...]:
    """'q:d:k:h,q:d:k:h,...' into a tuple of parameter sets"""
    entries = []
    for item in text.split(","):
        item = item.strip()
        if not item:
            continue
        try:
            q, d, k, h = (int(v) for v in item.split(":"))
        except ValueError:
            raise InvalidParameters(f"grid entry {item!r} is not of the form q:d:k:h") from None
        entries.append((q, d, k, h))
    if not entries:
        raise InvalidParameters("empty grid")
    return tuple(entries)


def default_grid() -> tuple[tuple[int, int, int, int], ...]:
    return tuple(
        (q, d, k, h)
        for q in GRID_ORDERS
        for d, k, h in GRID_SHAPES
        if d <= GRID_MAX_D.get(q, d)
    )


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--q", type=int, help="field order (odd prime power)")
    common.add_argument("--d", type=int, help="ambient dimension")
    common.add_argument("--k", type=int, help="dimension of the small flats")
    common.add_argument("--h", type=int, help="dimension of the large flats")
    common.add_argument("--seed", type=int, default=DEFAULT_SEED, help="seed for every sampled subset")
    common.add_argument("--samples", type=int, help="samples per check (default: per check)")
    common.add_argument("--tol", type=float, default=DEFAULT_TOL, help="floating-point tolerance")
    common.add_argument("--format", dest="fmt", choices=FORMATS, default="json", help="report format")
    common.add_argument("--output", "-o", help="output file (default: stdout)")
    common.add_argument("--grid", help="parameter sets as q:d:k:h,q:d:k:h,...")
    common.add_argument("-v", dest="verbose", action="store_true", help="debug logging")
    common.add_argument("-q", dest="quiet", action="store_true", help="warnings and errors only")

    parser = argparse.ArgumentParser(
        prog="fqflats",
        description="Exact incidence graphs of affine flats over finite fields and their spectral bounds",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("count", parents=[common], help="flat counts and degrees")
    verify = sub.add_parser("verify", parents=[common], help="run every check over a parameter grid")
    verify.add_argument("--tamper", type=int, default=0, help=argparse.SUPPRESS)

    spectrum = sub.add_parser("spectrum", parents=[common], help="lambda1 and lambda3 of one graph")
    spectrum.add_argument("--method", choices=("lapack", "jacobi"), default="lapack")

    sub.add_parser("mixing", parents=[common], help="seeded expander mixing audits")

    rich = sub.add_parser("rich", parents=[common], help="seeded t-rich lower bound audits")
    rich.add_argument("--t", type=int, default=RICH_THRESHOLDS[0], help="richness threshold")
    rich.add_argument(
        "--side",
        choices=("A", "B"),
        default="B",
        help="part the sampled sets come from (B: h-flats, A: k-flats)",
    )

    sub.add_parser("enumerate", parents=[common], help="list every k-flat in canonical order")

    export = sub.add_parser("export", parents=[common], help="adjacency or Gram matrix as CSV")
    export.add_argument("--what", choices=("adjacency", "gram"), default="adjacency")
    return parser


def config_from_args(args: argparse.Namespace) -> RunConfig:
    extra = tuple(
        (name, getattr(args, name))
        for name in ("tamper", "method", "t", "side", "what")
        if hasattr(args, name)
    )
    if args.samples is not None and args.samples < 0:
        raise InvalidParameters(f"--samples must be >= 0, got {args.samples}")
    return RunConfig(
        command=args.command,
        q=args.q,
        d=args.d,
        k=args.k,
        h=args.h,
        seed=args.seed,
        samples=args.samples,
        tol=args.tol,
        budget=Budget.from_env(),
        fmt=args.fmt,
        output=args.output,
        grid=parse_grid(args.grid) if args.grid else (),
        extra=extra,
    )


def _require(config: RunConfig, *names: str):
    missing = [f"--{n}" for n in names if getattr(config, n) is None]
    if missing:
        raise InvalidParameters(f"{config.command} needs {' '.join(missing)}")


def _graph_params(config: RunConfig):
    _require(config, "q", "d", "k", "h")
    ctx = field_new(config.q)
    check_graph_params(config.d, config.k, config.h)
    return ctx, config.d, config.k, config.h


@contextmanager
def _text_output(path: str | None):
    if path in (None, "-"):
        yield sys.stdout
        sys.stdout.flush()
        return
    with open(path, "w", encoding="utf-8", newline="") as stream:
        yield stream


def _write_records(config: RunConfig, records: Iterable[dict]):
    writer = ReportWriter(config.output, config.fmt)
    if not writer.start():
        raise OSError(f"cannot open report output {config.output}")
    try:
        for record in records:
            writer.write(record)
    finally:
        ok = writer.stop()
    if not ok:
        raise OSError(f"failed writing report to {config.output or 'stdout'}")


def _exit_code(failed: bool) -> int:
    return EXIT_FAILED if failed else EXIT_OK


# ----------------------------------------------------------------------
# Single-graph commands
# ----------------------------------------------------------------------


def cmd_count(config: RunConfig) -> int:
    _require(config, "q", "d", "k", "h")
    field_new(config.q)
    q, d, k, h = config.q, config.d, config.k, config.h
    table = count_table(d, k, h, q)

    record = table.to_dict()
    if h >= 2 * k + 1:
        record["threshold"] = guarantee_threshold(d, k, h, q)
        record["threshold_exponent"] = threshold_exponent(d, k, h)
    _write_records(config, [record])
    return _exit_code(not table.identity_ok)


def cmd_spectrum(config: RunConfig) -> int:
    ctx, d, k, h = _graph_params(config)
    graph = build_graph(ctx, d, k, h, config.budget)
    spectrum = graph_spectrum(graph, config.tol, method=config.option("method", "lapack"), budget=config.budget)
    _write_records(config, [spectrum.to_dict()])
    return _exit_code(not spectrum.passed)


def cmd_mixing(config: RunConfig) -> int:
    ctx, d, k, h = _graph_params(config)
    graph = build_graph(ctx, d, k, h, config.budget)
    spectrum = graph_spectrum(graph, config.tol, budget=config.budget)
    samples = MIXING_SAMPLES if config.samples is None else config.samples
    rng = make_rng(config.seed, f"mixing:{ctx.q}:{d}:{k}:{h}")

    records, failed = [], False
    for i in range(samples):
        xs = sample_subset(rng, graph.n_a)
        ys = sample_subset(rng, graph.n_b)
        report = mixing_audit(graph, xs, ys, spectrum, config.tol)
        failed |= not report.passed
        records.append({"params": graph.params, "sample": i, **report.to_dict()})
    _write_records(config, records)
    return _exit_code(failed)


def cmd_rich(config: RunConfig) -> int:
    ctx, d, k, h = _graph_params(config)
    t, side = config.option("t", RICH_THRESHOLDS[0]), config.option("side", "B")
    graph = build_graph(ctx, d, k, h, config.budget)
    spectrum = graph_spectrum(graph, config.tol, budget=config.budget)
    samples = RICH_SAMPLES if config.samples is None else config.samples
    rng = make_rng(config.seed, f"rich:{ctx.q}:{d}:{k}:{h}:{t}:{side}")

    part = graph.part_b if side == "B" else graph.part_a
    check = rich_kflats_check if side == "B" else rich_hflats_check
    minimum = min(hypothesis_size(graph, t, side), len(part))

    records, failed = [], False
    for i in range(samples):
        subset = sample_at_least(rng, len(part), minimum)
        report = check(ctx, d, k, h, t, [part[j] for j in subset], graph=graph, spectrum=spectrum, tol=config.tol)
        failed |= report.status == FAIL
        records.append({"sample": i, **report.to_dict()})
    _write_records(config, records)
    return _exit_code(failed)


def cmd_enumerate(config: RunConfig) -> int:
    _require(config, "q", "d", "k")
    ctx = field_new(config.q)
    total = count_flats(config.d, config.k, config.q)
    if total > config.budget.max_flats:
        raise TooLarge(f"{total} flats exceed the budget of {config.budget.max_flats}")
    with _text_output(config.output) as stream:
        write_flats(enumerate_flats(ctx, config.d, config.k), stream)
    return EXIT_OK


def cmd_export(config: RunConfig) -> int:
    ctx, d, k, h = _graph_params(config)
    graph = build_graph(ctx, d, k, h, config.budget)
    what = config.option("what", "adjacency")
    gram = gram_matrix(graph, config.budget) if what == "gram" else None
    with _text_output(config.output) as stream:
        if gram is None:
            export_adjacency_csv(graph, stream)
        else:
            export_gram_csv(gram, stream)
    return EXIT_OK


# ----------------------------------------------------------------------
# Grid verification
# ----------------------------------------------------------------------


class EntryVerifier:
    """Every check for one parameter set, one record per check"""

    def __init__(self, config: RunConfig, q: int, d: int, k: int, h: int):
        self.config = config
        self.q, self.d, self.k, self.h = q, d, k, h
        self.params = {"q": q, "d": d, "k": k, "h": h}
        self.ctx = field_new(q)
        self.table = count_table(d, k, h, q)
        self.graph = None
        self.spectrum = None
        self.records = []

    def record(self, check: str, status: str, **detail):
        self.records.append({"params": self.params, "check": check, "status": status, **detail})
        if status == FAIL:
            log.warning(f"Verify - {self.params} {check}: FAIL")
        else:
            log.debug(f"Verify - {self.params} {check}: {status}")

    def samples(self, default: int) -> int:
        return default if self.config.samples is None else self.config.samples

    def rng(self, check: str) -> np.random.Generator:
        return make_rng(self.config.seed, f"{check}:{self.q}:{self.d}:{self.k}:{self.h}")

    def run(self) -> list[dict]:
        try:
            self.graph = build_graph(self.ctx, self.d, self.k, self.h, self.config.budget)
        except TooLarge as e:
            log.warning(f"Verify - {self.params} skipped: {e}")
            self.record("graph", SKIPPED, reason=str(e))
            return self.records

        tamper = self.config.option("tamper", 0)
        if tamper:
            self.graph = self.graph.drop_edges(range(min(tamper, self.graph.edge_count)))

        self.check_counts()
        self.check_decomposition()
        self.check_spectrum()
        self.check_sharpness()
        self.check_mixing()
        self.check_incidence_bound()
        for t in RICH_THRESHOLDS:
            for side in ("B", "A"):
                self.check_richness(t, side)
        self.check_oracles()
        return self.records

    def check_counts(self):
        problems = self.graph.check_biregular()
        detail = {key: value for key, value in self.table.to_dict().items() if key != "params"}
        if self.h >= 2 * self.k + 1:
            detail["threshold_exponent"] = threshold_exponent(self.d, self.k, self.h)
        ok = self.table.identity_ok and not problems
        self.record("counts", PASS if ok else FAIL, problems=problems, **detail)

    def check_decomposition(self):
        try:
            report = verify_decomposition(self.graph, budget=self.config.budget)
        except TooLarge as e:
            self.record("decomposition", SKIPPED, reason=str(e))
            return
        detail = {key: value for key, value in report.to_dict().items() if key not in ("params", "pass")}
        self.record("decomposition", PASS if report.passed else FAIL, **detail)

    def check_spectrum(self):
        graph, tol, budget = self.graph, self.config.tol, self.config.budget
        try:
            self.spectrum = graph_spectrum(graph, tol, budget=budget)
        except TooLarge as e:
            self.record("spectrum", SKIPPED, reason=str(e))
            return

        detail = {key: value for key, value in self.spectrum.to_dict().items() if key not in ("params", "pass")}
        ok = self.spectrum.passed
        if min(graph.n_a, graph.n_b) <= JACOBI_CROSS_CHECK_MAX:
            jacobi = graph_spectrum(graph, tol, method="jacobi", budget=budget)
            agree = abs(jacobi.lambda3 - self.spectrum.lambda3) <= SHARPNESS_TOL * max(1.0, self.spectrum.lambda3)
            detail["jacobi_lambda3"] = jacobi.lambda3
            ok = ok and agree
        self.record("spectrum", PASS if ok else FAIL, **detail)

    def check_sharpness(self):
        if (self.d, self.k, self.h) != (2, 0, 1) or self.spectrum is None:
            return
        expected = math.sqrt(self.q)
        gap = abs(self.spectrum.lambda3 - expected)
        self.record(
            "sharpness",
            PASS if gap <= SHARPNESS_TOL else FAIL,
            lambda3=self.spectrum.lambda3,
            expected=expected,
        )

    def check_mixing(self):
        n = self.samples(MIXING_SAMPLES)
        if self.spectrum is None or n == 0:
            self.record("mixing", SKIPPED, reason="no spectrum" if self.spectrum is None else "no samples")
            return
        rng, graph = self.rng("mixing"), self.graph
        failures, worst = 0, 0.0
        for _ in range(n):
            xs, ys = sample_subset(rng, graph.n_a), sample_subset(rng, graph.n_b)
            report = mixing_audit(graph, xs, ys, self.spectrum, self.config.tol)
            failures += not report.passed
            if report.bound_refined > 0:
                worst = max(worst, report.deviation / report.bound_refined)
        self.record("mixing", FAIL if failures else PASS, samples=n, failures=failures, max_ratio=worst)

    def check_incidence_bound(self):
        n = self.samples(INCIDENCE_SAMPLES)
        if self.h < 2 * self.k + 1 or n == 0:
            reason = "needs h >= 2k+1" if n else "no samples"
            self.record("incidence_bound", SKIPPED, reason=reason)
            return
        rng, graph = self.rng("incidence_bound"), self.graph
        failures, above, worst = 0, 0, 0.0
        for _ in range(n):
            ps, hs = sample_subset(rng, graph.n_a), sample_subset(rng, graph.n_b)
            report = incidence_bound_check(
                [graph.part_a[i] for i in ps],
                [graph.part_b[j] for j in hs],
                self.d,
                self.k,
                self.h,
                self.q,
                incidences=graph.count_edges(ps, hs),
                tol=self.config.tol,
            )
            failures += not report.passed
            above += report.above_threshold
            worst = max(worst, report.ratio)
        self.record(
            "incidence_bound",
            FAIL if failures else PASS,
            samples=n,
            failures=failures,
            above_threshold=above,
            max_ratio=worst,
        )

    def check_richness(self, t: int, side: str):
        check = f"richness_t{t}_{side}"
        n = self.samples(RICH_SAMPLES)
        if self.spectrum is None or n == 0:
            self.record(check, SKIPPED, reason="no spectrum" if self.spectrum is None else "no samples")
            return
        graph = self.graph
        size = graph.n_b if side == "B" else graph.n_a
        minimum = hypothesis_size(graph, t, side)
        if minimum > size:
            self.record(check, SKIPPED, reason=f"hypothesis needs |S| >= {minimum} > {size}")
            return

        rng, tol = self.rng(check), self.config.tol
        failures, upper_failures, closed_checked, closed_passed = 0, 0, 0, 0
        for _ in range(n):
            subset = sample_at_least(rng, size, minimum)
            report = rich_lower_check(graph, subset, t, self.spectrum, tol, side=side)
            failures += report.pass_exact is False
            if report.pass_closed is not None:
                closed_checked += 1
                closed_passed += report.pass_closed
            upper_failures += not rich_upper_check(graph, subset, t, side, self.spectrum, tol).passed

        self.record(
            check,
            FAIL if failures or upper_failures else PASS,
            t=t,
            side=side,
            samples=n,
            failures=failures,
            upper_failures=upper_failures,
            closed_checked=closed_checked,
            closed_passed=closed_passed,
        )

    def check_oracles(self):
        """Flat predicates against brute-force point sets and adjacency lists"""
        n = self.samples(ORACLE_SAMPLES)
        if n == 0:
            self.record("oracles", SKIPPED, reason="no samples")
            return
        ctx, d, k, h, graph = self.ctx, self.d, self.k, self.h, self.graph
        rng = self.rng("oracles")
        disagreements = {"canonical": 0, "flat_eq": 0, "contains": 0, "pair_rank": 0, "common_neighbors": 0}

        for _ in range(n):
            u, v = random_flat(rng, ctx, d, k), random_flat(rng, ctx, d, k)
            pts_u, pts_v = points_array(u), points_array(v)
            set_u = set(map(tuple, pts_u.tolist()))
            set_v = set(map(tuple, pts_v.tolist()))

            # same flat from another spanning set and base point
            mix = random_invertible(rng, ctx, k)
            shift = rng.integers(0, ctx.q, size=(1, k), dtype=np.int64)
            base = ctx.add_t[u.base_array, mat_mul(ctx, shift, u.basis_array)[0]]
            again = flat_from_span(ctx, mat_mul(ctx, mix, u.basis_array).tolist(), base.tolist())
            disagreements["canonical"] += not flat_eq(u, again)

            disagreements["flat_eq"] += flat_eq(u, v) != (set_u == set_v)

            outer = graph.part_b[int(rng.integers(graph.n_b))]
            set_outer = set(map(tuple, points_array(outer).tolist()))
            disagreements["contains"] += flat_contains_flat(outer, u) != set_u.issubset(set_outer)

            if set_u == set_v:
                continue
            union = np.vstack([pts_u, pts_v])
            hull = rank_of(ctx, ctx.sub_t[union, union[0][None, :]])
            disagreements["pair_rank"] += pair_rank(u, v) != hull

            shared = np.intersect1d(graph.adjacency[graph.index_a(u)], graph.adjacency[graph.index_a(v)]).size
            disagreements["common_neighbors"] += common_neighbor_count(u, v, h) != shared

        total = sum(disagreements.values())
        self.record("oracles", FAIL if total else PASS, samples=n, disagreements=disagreements)


def run_verify(config: RunConfig) -> tuple[list[dict], bool]:
    """All verification records for the config's grid and whether any check failed"""
    if config.grid:
        grid = config.grid
    elif None not in (config.q, config.d, config.k, config.h):
        grid = ((config.q, config.d, config.k, config.h),)
    else:
        grid = default_grid()

    records = []
    for q, d, k, h in grid:
        log.info(f"Verify - q={q} d={d} k={k} h={h}")
        records.extend(EntryVerifier(config, q, d, k, h).run())
    failed = any(r["status"] == FAIL for r in records)
    log.info(f"Verify - {len(records)} records, {'FAILED' if failed else 'all passed'}")
    return records, failed


def cmd_verify(config: RunConfig) -> int:
    records, failed = run_verify(config)
    _write_records(config, records)
    return _exit_code(failed)


COMMANDS = {
    "count": cmd_count,
    "verify": cmd_verify,
    "spectrum": cmd_spectrum,
    "mixing": cmd_mixing,
    "rich": cmd_rich,
    "enumerate": cmd_enumerate,
    "export": cmd_export,
}


def main(argv=None) -> int:
    """Main entry point"""
    args = build_parser().parse_args(argv)
    level = logging.DEBUG if args.verbose else logging.WARNING if args.quiet else logging.INFO
    logging.basicConfig(
        level=level,
        format="%(asctime)s [%(levelname)s] %(message)s",
        datefmt="%H:%M:%S",
    )
    logging.getLogger(LOGGER_NAME).setLevel(level)

    try:
        config = config_from_args(args)
        return COMMANDS[config.command](config)
    except (FqFlatsError, OSError) as e:
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
