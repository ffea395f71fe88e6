"""Command-line tool: draw samples, run the benchmark grid, run the
validation suites, and build the truncation table.  Everything emits CSV.

Exit codes: 0 success, 1 validation failure, 2 usage error, 3 numerical
failure.  All statistical output is deterministic for a fixed seed; only
the timing columns of ``bench`` vary between runs.
"""

import argparse
import csv
import statistics
import sys
import time

import numpy as np
from scipy import stats as spstats

from . import alternate, saddle
from .density import (
    build_trunc_table,
    default_trunc_table,
    load_trunc_table,
    sample_gamma_sum,
    set_default_trunc_table,
    verify_domination,
)
from .errors import (
    ConvergenceError,
    DominationViolationError,
    EnvelopeValidityError,
    IterationCapError,
)
from .pg import (
    DEFAULT_THRESHOLDS,
    GAMMA_SUM_TERMS,
    Method,
    PgParams,
    choose_method,
    pg_mean,
    pg_var,
    sample_pg_batch,
)
from .rng import RngStream

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_USAGE = 2
EXIT_NUMERICAL = 3

BENCH_GRID_B = [1, 2, 3, 4, 10, 12, 14, 16, 18, 20, 30, 40, 50, 100]
BENCH_GRID_Z = [0.0, 0.1, 0.5, 1.0, 2.0, 10.0]

_METHOD_CHOICES = ["auto"] + [m.value for m in Method]

VALIDATE_SUITES = ["moments", "ks", "domination", "envelope", "conjecture", "cgf"]


def _parse_grid(text):
    try:
        return [float(v) for v in text.split(",") if v.strip() != ""]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad grid {text!r}") from exc


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="pgrv",
        description="Polya-Gamma random variate sampling, benchmarking, "
                    "and validation.",
    )
    shared = argparse.ArgumentParser(add_help=False)
    shared.add_argument("--seed", type=int, default=0,
                        help="base RNG seed (default 0)")
    shared.add_argument("--out", default="-",
                        help="output path ('-' for stdout, the default)")
    shared.add_argument("--ttable", default=None,
                        help="path to a precomputed truncation table CSV")

    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sample", parents=[shared],
                       help="draw PG(b, z) variates")
    p.add_argument("--b", type=float, required=True, help="shape b > 0")
    p.add_argument("--z", type=float, default=0.0, help="tilt z (any sign)")
    p.add_argument("--n", type=int, default=1, help="number of draws")
    p.add_argument("--method", choices=_METHOD_CHOICES, default="auto")
    p.add_argument("--format", choices=["plain", "csv"], default="plain")

    p = sub.add_parser("bench", parents=[shared],
                       help="time every applicable method over a (b, z) grid")
    p.add_argument("--grid-b", type=_parse_grid,
                   default=[float(b) for b in BENCH_GRID_B])
    p.add_argument("--grid-z", type=_parse_grid, default=list(BENCH_GRID_Z))
    p.add_argument("--n", type=int, default=10_000, help="draws per cell")
    p.add_argument("--reps", type=int, default=3,
                   help="timing repetitions per cell (median reported)")

    p = sub.add_parser("validate", parents=[shared],
                       help="run the statistical/numerical validation suites")
    p.add_argument("--suites", default=",".join(VALIDATE_SUITES),
                   help="comma-separated subset of: " + ", ".join(VALIDATE_SUITES))
    p.add_argument("--n", type=int, default=100_000,
                   help="draws per statistical test")
    # Fault injection for harness tests: corrupts one pass threshold so a
    # record must fail.  Deliberately undocumented.
    p.add_argument("--inject-fault", action="store_true",
                   help=argparse.SUPPRESS)

    p = sub.add_parser("table", parents=[shared],
                       help="precompute the truncation-point table as CSV")
    p.add_argument("--h-min", type=float, default=1.0)
    p.add_argument("--h-max", type=float, default=4.0)
    p.add_argument("--step", type=float, default=0.01)

    return parser


def _install_ttable(path):
    if path is not None:
        set_default_trunc_table(load_trunc_table(path))


class _Out:
    """Output sink: path or stdout, usable as a context manager."""

    def __init__(self, spec):
        self.spec = spec
        self.is_stdout = spec in (None, "-")

    def __enter__(self):
        self.fh = sys.stdout if self.is_stdout else open(self.spec, "w", newline="")
        return self.fh

    def __exit__(self, *exc):
        if not self.is_stdout:
            self.fh.close()
        return False


def _cmd_sample(args):
    params = PgParams(args.b, args.z)
    if args.n < 1:
        raise ValueError("sample: --n must be >= 1")
    rng = RngStream(args.seed)
    draws = sample_pg_batch(params, rng, size=args.n, method=args.method)
    with _Out(args.out) as fh:
        if args.format == "csv":
            fh.write("draw\n")
        for v in draws:
            fh.write(f"{v:.17g}\n")
    return EXIT_OK


def _bench_methods(b, z):
    """Methods benchmarked at one grid cell.

    The saddlepoint row starts where the hybrid rule hands over to it;
    below that its approximation error would contaminate the smoke
    moment check that every row doubles as.
    """
    methods = []
    if b >= 1.0 and b == int(b):
        methods.append(Method.DEVROYE)
    if b >= 1.0:
        methods.append(Method.ALTERNATE)
    if b >= DEFAULT_THRESHOLDS.alternate_max:
        methods.append(Method.SADDLEPOINT)
    if b > DEFAULT_THRESHOLDS.saddle_max:
        methods.append(Method.NORMAL)
    methods.append(Method.GAMMA_SUM)
    return methods


def _cmd_bench(args):
    if not args.grid_b or not args.grid_z:
        raise ValueError("bench: grids must be nonempty")
    cells = []
    for b in args.grid_b:
        for z in args.grid_z:
            for m in _bench_methods(b, z):
                cells.append((m.value, float(b), float(z)))
    cells.sort()
    default_trunc_table()  # grid-reusable; never charged to a cell
    rows = []
    for index, (method, b, z) in enumerate(cells):
        cell_seed = args.seed ^ index
        params = PgParams(b, z)
        m = Method(method)
        # per-cell reusable setup (kept out of the timed section)
        t0 = time.perf_counter()
        if m is Method.SADDLEPOINT:
            saddle._build_envelope_cached.cache_clear()
            saddle.build_envelope(b, abs(z) / 2.0)
        elif m is Method.ALTERNATE:
            alternate._domination_guard(alternate._pieces(b)[1])
        setup_seconds = time.perf_counter() - t0
        times = []
        draws = None
        for _ in range(max(1, args.reps)):
            rng = RngStream(cell_seed)
            t0 = time.perf_counter()
            draws = sample_pg_batch(params, rng, size=args.n, method=m)
            times.append(time.perf_counter() - t0)
        wall = statistics.median(times)
        rows.append({
            "method": method,
            "b": b,
            "z": z,
            "n_draws": args.n,
            "setup_seconds": setup_seconds,
            "wall_seconds": wall,
            "draws_per_sec": args.n / wall if wall > 0 else float("inf"),
            "sample_mean": float(draws.mean()),
            "sample_var": float(draws.var(ddof=1)),
            "seed": cell_seed,
        })
    fields = ["method", "b", "z", "n_draws", "setup_seconds", "wall_seconds",
              "draws_per_sec", "sample_mean", "sample_var", "seed"]
    out = _Out(args.out)
    with out as fh:
        w = csv.DictWriter(fh, fieldnames=fields)
        w.writeheader()
        for r in rows:
            w.writerow({k: (f"{v:.6g}" if isinstance(v, float) else v)
                        for k, v in r.items()})
    # best-method pivot (one row per b, one column per z)
    best = {}
    for r in rows:
        key = (r["b"], r["z"])
        if key not in best or r["draws_per_sec"] > best[key]["draws_per_sec"]:
            best[key] = r
    pivot_fh = sys.stdout
    if out.is_stdout:
        pivot_fh.write("\n")
    pivot = csv.writer(pivot_fh)
    zs = sorted(set(z for (_, z) in best))
    pivot.writerow(["b"] + [f"z={z:g}" for z in zs])
    for b in sorted(set(b for (b, _) in best)):
        pivot.writerow([f"{b:g}"] + [best[(b, z)]["method"] for z in zs])
    return EXIT_OK


def _suite_moments(n, seed, records, allow_scale):
    grid_b = [1.0, 2.0, 3.5, 12.0, 50.0]
    grid_z = [0.0, 1.0]
    for i, b in enumerate(grid_b):
        for j, z in enumerate(grid_z):
            params = PgParams(b, z)
            rng = RngStream(seed ^ (101 * i + j))
            draws = sample_pg_batch(params, rng, size=n)
            m_exact = pg_mean(params)
            v_exact = pg_var(params)
            se = np.sqrt(v_exact / n)
            allow = 0.01 * m_exact if choose_method(b) is Method.SADDLEPOINT else 0.0
            records.append({
                "suite": "moments", "test": "mean", "b": b, "z": z,
                "statistic": abs(float(draws.mean()) - m_exact),
                "threshold": (4.0 * se + allow) * allow_scale,
            })
            records.append({
                "suite": "moments", "test": "variance", "b": b, "z": z,
                "statistic": abs(float(draws.var(ddof=1)) / v_exact - 1.0),
                "threshold": 0.05 * allow_scale,
            })


def _suite_ks(n, seed, records, allow_scale):
    for i, (b, z) in enumerate([(1.0, 0.0), (1.0, 2.0), (2.0, 1.0),
                                (3.5, 0.5)]):
        params = PgParams(b, z)
        rng = RngStream(seed ^ (977 * (i + 1)))
        draws = sample_pg_batch(params, rng, size=n)
        oracle = sample_gamma_sum(params.jstar, GAMMA_SUM_TERMS, rng,
                                  size=n) / 4.0
        p_value = float(spstats.ks_2samp(draws, oracle).pvalue)
        records.append({
            "suite": "ks", "test": "vs-gamma-sum-oracle", "b": b, "z": z,
            "statistic": p_value,
            "threshold": 0.001 * allow_scale,
            "higher_is_better": True,
        })


def _suite_domination(records, allow_scale):
    for h in np.arange(1.0, 4.0 + 1e-9, 0.1):
        h = round(float(h), 10)
        report = verify_domination(h)
        records.append({
            "suite": "domination", "test": "max-f-over-left-kernel",
            "b": h, "z": 0.0,
            "statistic": report.max_rho_left,
            "threshold": (1.0 + 1e-9) * allow_scale,
        })
        records.append({
            "suite": "domination", "test": "max-f-over-right-kernel",
            "b": h, "z": 0.0,
            "statistic": report.max_rho_right,
            "threshold": (1.0 + 1e-9) * allow_scale,
        })


def _suite_envelope(records, allow_scale):
    for (b, z) in [(4.0, 0.0), (13.0, 0.0), (16.0, 1.0), (64.0, 2.0),
                   (170.0, 0.5)]:
        env = saddle.build_envelope(b, z)
        xs = np.logspace(np.log10(env.m / 20.0), np.log10(20.0 * env.m), 2000)
        gap = saddle._log_envelope(env, xs) - saddle._log_sp_vec(xs, b, z)
        records.append({
            "suite": "envelope", "test": "log-dominance-gap", "b": b, "z": z,
            "statistic": float(gap.min()),
            "threshold": float(np.log1p(-1e-9)) * allow_scale,
            "higher_is_better": True,
        })


def _suite_conjecture(records, allow_scale):
    for z in [0.0, 1.0, 4.0]:
        result = saddle.check_curvature_monotonicity(z, warn=False)
        records.append({
            "suite": "conjecture", "test": "curvature-ratio-monotonicity",
            "b": 0.0, "z": z,
            "statistic": 1.0 if all(result.values()) else 0.0,
            "threshold": 0.5 * allow_scale,
            "higher_is_better": True,
        })


def _suite_cgf(records, allow_scale):
    worst = 0.0
    for z in [0.0, 1.0, 3.0]:
        for s in [-2.0, -0.5, 0.0, 0.3]:
            if s - 0.5 * z * z >= saddle.U_MAX - 0.01:
                continue
            step = 1e-6 * max(1.0, abs(s))
            fd1 = (saddle.cgf(s + step, z) - saddle.cgf(s - step, z)) / (2 * step)
            fd2 = (saddle.cgf_p1(s + step, z) - saddle.cgf_p1(s - step, z)) / (2 * step)
            worst = max(worst,
                        abs(fd1 / saddle.cgf_p1(s, z) - 1.0),
                        abs(fd2 / saddle.cgf_p2(s, z) - 1.0))
    records.append({
        "suite": "cgf", "test": "derivatives-vs-finite-difference",
        "b": 0.0, "z": 0.0,
        "statistic": worst,
        "threshold": 1e-6 * allow_scale,
    })


def _cmd_validate(args):
    suites = [s.strip() for s in args.suites.split(",") if s.strip()]
    unknown = set(suites) - set(VALIDATE_SUITES)
    if unknown:
        raise ValueError(f"validate: unknown suites {sorted(unknown)}")
    # A corrupted threshold must surface as a failing record, proving the
    # harness cannot silently pass.
    allow_scale = 1e-6 if args.inject_fault else 1.0
    records = []
    if "moments" in suites:
        _suite_moments(args.n, args.seed, records, allow_scale)
    if "ks" in suites:
        _suite_ks(args.n, args.seed, records, allow_scale)
    if "domination" in suites:
        _suite_domination(records, allow_scale)
    if "envelope" in suites:
        _suite_envelope(records, allow_scale)
    if "conjecture" in suites:
        _suite_conjecture(records, allow_scale)
    if "cgf" in suites:
        _suite_cgf(records, allow_scale)

    failed = []
    with _Out(args.out) as fh:
        w = csv.writer(fh)
        w.writerow(["suite", "test", "b", "z", "statistic", "threshold",
                    "pass"])
        for r in records:
            if r.get("higher_is_better"):
                ok = r["statistic"] > r["threshold"]
            else:
                ok = r["statistic"] <= r["threshold"]
            if not ok:
                failed.append(r)
            w.writerow([r["suite"], r["test"], f"{r['b']:g}", f"{r['z']:g}",
                        f"{r['statistic']:.6g}", f"{r['threshold']:.6g}",
                        "pass" if ok else "FAIL"])
    for r in failed:
        print(f"FAILED: {r['suite']}/{r['test']} at b={r['b']:g} z={r['z']:g} "
              f"(statistic {r['statistic']:.6g}, threshold {r['threshold']:.6g})",
              file=sys.stderr)
    return EXIT_VALIDATION if failed else EXIT_OK


def _cmd_table(args):
    if not (1.0 <= args.h_min < args.h_max <= 4.0):
        raise ValueError("table: need 1 <= h-min < h-max <= 4")
    table = build_trunc_table(args.h_min, args.h_max, args.step)
    with _Out(args.out) as fh:
        fh.write("h,t\n")
        for h, t in zip(table.h, table.t):
            fh.write(f"{h:.17g},{t:.17g}\n")
    return EXIT_OK


_COMMANDS = {
    "sample": _cmd_sample,
    "bench": _cmd_bench,
    "validate": _cmd_validate,
    "table": _cmd_table,
}


def main(argv=None):
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        _install_ttable(args.ttable)
        return _COMMANDS[args.command](args)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ConvergenceError, IterationCapError, DominationViolationError,
            EnvelopeValidityError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


def run():
    sys.exit(main())


if __name__ == "__main__":
    run()
