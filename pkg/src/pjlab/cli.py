"""Command-line frontend over the verification library.

Subcommands
-----------
moments      dual-path moment table (closed form against direct quadrature)
verify       residual sweeps: identities | difference | polyode | evolution
             | riccati | odes | painleve | sigmaode
asymptotics  large-n fits: beta | p | sigma | logd
density      equilibrium-density samples and constraint checks

Rows are emitted sorted by (relation, n, t) or by the subcommand's natural
key, numbers as decimal strings sized to the working precision, so two runs
with the same configuration are byte-identical.  Exit codes: 0 every check
passed, 1 a tolerance failed, 2 usage or domain error, 3 precision
exhausted even after escalation.
"""

from __future__ import annotations

import argparse
import os
import sys
from concurrent.futures import ProcessPoolExecutor

from mpmath import mp

from .coulomb import (
    beta_expansion,
    check_equilibrium,
    decay_fit,
    density,
    density_mass,
    expansion_eval,
    fit_logd_constants,
    p_expansion,
    sigma_expansion,
    solve_support,
)
from .orthopoly import (
    WeightParams,
    build_moments,
    build_recurrence_table,
    moments_by_quadrature,
)
from .painleve import (
    build_stencil_bundle,
    check_painleve_v,
    check_riccati,
    check_second_order_odes,
    check_sigma_ode,
    check_t_evolution,
)
from .precision import (
    GUARD_BITS,
    DomainError,
    PrecisionContext,
    PrecisionExhaustedError,
)
from .relations import (
    check_compatibility,
    check_lowering,
    check_polynomial_ode,
    residual_beta_difference,
    residual_p_difference,
    residual_sigma_difference,
)
from .reports import (
    format_mpf,
    reports_to_csv,
    reports_to_json,
    rows_to_csv,
    rows_to_json,
    sort_reports,
)

EXIT_PASS, EXIT_FAIL, EXIT_USAGE, EXIT_PRECISION = 0, 1, 2, 3

BITS_ENV = "PJLAB_BITS"

DEFAULT_Z_SAMPLES = "0,1/2,-1/2,9/10,-9/10"

VERIFY_SUITES = ("identities", "difference", "polyode", "evolution",
                 "riccati", "odes", "painleve", "sigmaode")

ASYMPTOTIC_SERIES = ("beta", "p", "sigma", "logd")

MOMENT_COLUMNS = ("k", "mu_closed", "mu_quad", "rel_gap")
DECAY_COLUMNS = ("series", "n", "exact", "partial_sum", "abs_error", "slope")
LOGD_COLUMNS = ("series", "n", "exact", "partial_sum", "abs_error",
                "c1", "c0", "conjecture_gap")
DENSITY_COLUMNS = ("x", "sigma_x", "eq_dev_rel", "mass_gap_rel", "A")

_FIRST_KIND = ("S1", "S22", "S2P3")     # compatibility rows defined from n = 0
_SECOND_KIND = ("S21", "S2P1", "S2P2")  # and the three defined from n = 1

# decay exponent of the first term beyond everything a series carries
_SERIES_TAIL = {"beta": -3.0, "p": -5.0 / 3.0, "sigma": -1.0}


# ---------------------------------------------------------------------------
# shared plumbing
# ---------------------------------------------------------------------------

def _resolve_bits(raw, n_ref: int) -> int:
    """--bits wins over the environment; "auto" is max(256, 12 * n_ref)."""
    if raw is None:
        raw = os.environ.get(BITS_ENV) or "auto"
    raw = str(raw).strip().lower()
    if raw == "auto":
        return max(256, 12 * int(n_ref))
    try:
        bits = int(raw)
    except ValueError:
        raise DomainError(f"--bits takes an integer or 'auto', got {raw!r}")
    if bits < 128:
        raise DomainError("--bits must be >= 128")
    return bits


def _params(args, ctx: PrecisionContext) -> WeightParams:
    return WeightParams(alpha=ctx.mpf(args.alpha), t=ctx.mpf(args.t))


def _emit(text: str, out) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


def _note(message: str) -> None:
    print(message, file=sys.stderr)


def _plot_path(args, name: str) -> str:
    os.makedirs(args.plot_dir, exist_ok=True)
    return os.path.join(args.plot_dir, name)


# ---------------------------------------------------------------------------
# verify: task table (module level so worker processes can import it)
# ---------------------------------------------------------------------------

def _ctx_of(obj) -> PrecisionContext:
    return PrecisionContext(bits=obj.bits)


def _worst(reports):
    """Single row per n: the sample with the largest relative residual."""
    return max(reports, key=lambda r: r.relative)


def _run_task(work):
    kind, obj, n, tol, z = work
    if kind == "identities":
        return check_compatibility(obj, n, tol)
    if kind == "btd":
        return [residual_beta_difference(obj, n, tol)]
    if kind == "pnd":
        return [residual_p_difference(obj, n, tol)]
    if kind == "snd":
        return [residual_sigma_difference(obj, n, tol)]
    if kind == "polyode":
        return [_worst(check_polynomial_ode(obj, n, z, tol)),
                _worst(check_lowering(obj, n, z, tol))]
    if kind == "evolution":
        return check_t_evolution(obj, n, tol)
    if kind == "riccati":
        return check_riccati(obj, n, tol)
    if kind == "odes":
        return check_second_order_odes(obj, n, tol, _ctx_of(obj))
    if kind == "painleve":
        return [check_painleve_v(obj, n, tol, _ctx_of(obj))]
    if kind == "sigmaode":
        return [check_sigma_ode(obj, n, tol, _ctx_of(obj))]
    raise AssertionError(f"unknown task kind {kind!r}")


def _keep_all(report) -> bool:
    return True


def _verify_works(suite, params, ctx, n_single, n_max, tol, z):
    """Build the table or stencil bundle once, then one task per n."""
    if suite == "identities":
        top = n_single if n_single is not None else n_max
        table = build_recurrence_table(params, top + 2, ctx)
        if n_single is not None:
            return [("identities", table, n_single, tol, z)], _keep_all
        works = [("identities", table, n, tol, z) for n in range(n_max + 1)]

        def keep(r):
            if r.relation in _FIRST_KIND:
                return r.n <= n_max - 1
            return r.n >= 1

        return works, keep

    if suite == "difference":
        if n_single is not None:
            if n_single < 1:
                raise DomainError("difference checks need n >= 1")
            table = build_recurrence_table(params, n_single + 1, ctx)
            return ([(k, table, n_single, tol, z)
                     for k in ("btd", "pnd", "snd")], _keep_all)
        table = build_recurrence_table(params, n_max, ctx)
        works = [(k, table, n, tol, z)
                 for n in range(1, n_max) for k in ("btd", "pnd", "snd")]
        return works, _keep_all

    if suite == "polyode":
        if n_single is not None:
            if n_single < 1:
                raise DomainError("polynomial checks need n >= 1")
            table = build_recurrence_table(params, n_single + 1, ctx)
            return [("polyode", table, n_single, tol, z)], _keep_all
        table = build_recurrence_table(params, n_max + 1, ctx)
        return ([("polyode", table, n, tol, z)
                 for n in range(1, n_max + 1)], _keep_all)

    # the five t-differential suites share one five-point stencil bundle
    lo = {"evolution": 0, "odes": 0, "painleve": 0,
          "riccati": 1, "sigmaode": 1}[suite]
    if n_single is not None:
        if n_single < lo:
            raise DomainError(f"{suite} checks need n >= {lo}")
        bundle = build_stencil_bundle(params, n_single + 1, ctx)
        return [(suite, bundle, n_single, tol, z)], _keep_all
    hi = n_max if suite == "sigmaode" else n_max - 1
    bundle = build_stencil_bundle(params, n_max, ctx)
    return [(suite, bundle, n, tol, z) for n in range(lo, hi + 1)], _keep_all


def _execute(works, workers: int):
    if workers <= 1 or len(works) <= 1:
        batches = [_run_task(w) for w in works]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            batches = list(pool.map(_run_task, works))
    out = []
    for batch in batches:
        out.extend(batch)
    return out


# ---------------------------------------------------------------------------
# subcommand runners
# ---------------------------------------------------------------------------

def run_moments(args) -> int:
    if args.k_max < 0:
        raise DomainError("--k-max must be >= 0")
    bits = _resolve_bits(args.bits, args.k_max)
    ctx = PrecisionContext(bits=bits)
    params = _params(args, ctx)
    closed = build_moments(params, args.k_max, ctx)
    quad = moments_by_quadrature(params, args.k_max, ctx)
    digits = ctx.decimal_digits
    rows = []
    ok = True
    with ctx.workprec():
        tol = (mp.mpf(2) ** (-(bits // 2) + 16) if args.tolerance == "auto"
               else mp.mpf(args.tolerance))
        for k in range(args.k_max + 1):
            mu_c, mu_q = closed.mu[k], quad[k]
            scale = max(abs(mu_c), abs(mu_q))
            gap = abs(mu_c - mu_q) / scale if scale > 0 else mp.mpf(0)
            ok = ok and bool(gap <= tol)
            rows.append({"k": k,
                         "mu_closed": format_mpf(mu_c, digits),
                         "mu_quad": format_mpf(mu_q, digits),
                         "rel_gap": format_mpf(gap, digits),
                         "rel_gap_value": gap})
    payload = [{key: row[key] for key in MOMENT_COLUMNS} for row in rows]
    text = (rows_to_csv(payload, MOMENT_COLUMNS) if args.format == "csv"
            else rows_to_json(payload))
    _emit(text, args.out)
    if args.plot_dir:
        from . import plotting
        _note("figure: " + plotting.save_moment_figure(
            rows, _plot_path(args, "moments.png")))
    return EXIT_PASS if ok else EXIT_FAIL


def run_verify(args) -> int:
    n_single = args.n
    n_max = args.n_max
    if n_single is None and n_max is None:
        n_max = 10
    if n_single is not None and n_single < 0:
        raise DomainError("--n must be >= 0")
    if n_max is not None and n_max < 1:
        raise DomainError("--n-max must be >= 1")
    ref = (n_single + 1) if n_single is not None else n_max
    bits = _resolve_bits(args.bits, ref)
    ctx = PrecisionContext(bits=bits)
    params = _params(args, ctx)
    with ctx.workprec():
        tol = (ctx.half_eps if args.tolerance == "auto"
               else mp.mpf(args.tolerance))
        z = tuple(mp.mpf(s) for s in args.z_samples.split(","))
    for zz in z:
        if not abs(zz) < 1:
            raise DomainError("z samples must satisfy |z| < 1")
    works, keep = _verify_works(args.suite, params, ctx,
                                n_single, n_max, tol, z)
    reports = sort_reports(r for r in _execute(works, args.workers)
                           if keep(r))
    text = (reports_to_csv(reports, ctx.decimal_digits)
            if args.format == "csv"
            else reports_to_json(reports, ctx.decimal_digits))
    _emit(text, args.out)
    if args.plot_dir:
        from . import plotting
        _note("figure: " + plotting.save_residual_figure(
            reports, _plot_path(args, f"verify-{args.suite}.png")))
    return EXIT_PASS if all(r.passed for r in reports) else EXIT_FAIL


def _parse_grid(text: str) -> list[int]:
    try:
        if ":" in text:
            parts = [int(p) for p in text.split(":")]
            if len(parts) != 3:
                raise DomainError(
                    "--n-grid expects start:stop:step or a comma list")
            start, stop, step = parts
            if start < 1 or stop < start or step < 1:
                raise DomainError("--n-grid bounds must satisfy "
                                  "1 <= start <= stop, step >= 1")
            return list(range(start, stop + 1, step))
        grid = sorted({int(p) for p in text.split(",")})
    except ValueError:
        raise DomainError(f"could not parse --n-grid {text!r}")
    if not grid or grid[0] < 1:
        raise DomainError("--n-grid values must be integers >= 1")
    return grid


def _slope_target(series, order: int, name: str) -> float:
    """Exponent of the first nonzero term beyond the kept partial sum."""
    with mp.workprec(series.bits + GUARD_BITS):
        threshold = -mp.mpf(order) / 3
        below = [e for e, c in series.coefficients if e < threshold and c != 0]
        if below:
            return float(max(below))
    return _SERIES_TAIL[name]


def run_asymptotics(args) -> int:
    grid = _parse_grid(args.n_grid)
    bits = _resolve_bits(args.bits, max(grid))
    ctx = PrecisionContext(bits=bits)
    params = _params(args, ctx)
    table = build_recurrence_table(params, max(grid), ctx)
    digits = ctx.decimal_digits
    if args.series == "logd":
        return _asymptotics_logd(args, grid, table, params, ctx, digits)

    builder = {"beta": beta_expansion, "p": p_expansion,
               "sigma": sigma_expansion}[args.series]
    exact_of = {"beta": table.beta, "p": table.p,
                "sigma": table.sigma}[args.series]
    series = builder(params, ctx)
    order = args.order if args.order is not None else series.truncation_order
    pairs = [(n, exact_of[n]) for n in grid]
    fit = decay_fit(pairs, series, truncation=order)
    target = _slope_target(series, order, args.series)
    window = float(mp.mpf(args.slope_window))
    ok = abs(fit.slope - target) <= window
    rows = []
    with ctx.workprec():
        for n, exact in pairs:
            partial = expansion_eval(series, n, order)
            rows.append({"series": args.series, "n": n,
                         "exact": format_mpf(exact, digits),
                         "partial_sum": format_mpf(partial, digits),
                         "abs_error": format_mpf(abs(exact - partial), digits),
                         "slope": f"{fit.slope:.6f}"})
    text = (rows_to_csv(rows, DECAY_COLUMNS) if args.format == "csv"
            else rows_to_json(rows))
    _emit(text, args.out)
    if fit.excluded:
        _note("note: error at the precision floor for n = "
              + ",".join(str(n) for n in fit.excluded)
              + "; excluded from the fit")
    verdict = "pass" if ok else "FAIL"
    _note(f"fit: slope={fit.slope:.6f} target={target:.6f} "
          f"window={window:g} -> {verdict}")
    if args.plot_dir:
        from . import plotting
        _note("figure: " + plotting.save_decay_figure(
            args.series, fit.used, fit.slope, fit.intercept,
            _plot_path(args, f"asymptotics-{args.series}.png")))
    return EXIT_PASS if ok else EXIT_FAIL


def _asymptotics_logd(args, grid, table, params, ctx, digits) -> int:
    pairs = [(n, table.log_d[n]) for n in grid]
    fit = fit_logd_constants(pairs, params, ctx)
    rows = []
    with ctx.workprec():
        tol = (mp.mpf("5e-3") if args.tolerance == "auto"
               else mp.mpf(args.tolerance))
        ok = all(gap <= tol for _, gap in fit.holdout)
        for n, exact in pairs:
            pred = expansion_eval(fit.series, n)
            rows.append({"series": "logd", "n": n,
                         "exact": format_mpf(exact, digits),
                         "partial_sum": format_mpf(pred, digits),
                         "abs_error": format_mpf(abs(exact - pred), digits),
                         "c1": format_mpf(fit.c1, digits),
                         "c0": format_mpf(fit.c0, digits),
                         "conjecture_gap": format_mpf(fit.conjecture_gap,
                                                      digits)})
        warn = bool(fit.conjecture_gap > mp.mpf("1e-3"))
    text = (rows_to_csv(rows, LOGD_COLUMNS) if args.format == "csv"
            else rows_to_json(rows))
    _emit(text, args.out)
    worst = max((gap for _, gap in fit.holdout), default=mp.mpf(0))
    _note(f"fit: n={fit.fit_ns} c1={format_mpf(fit.c1, 12)} "
          f"c0={format_mpf(fit.c0, 12)} worst-holdout={format_mpf(worst, 8)}")
    if warn:
        _note("warning: fitted c1 deviates from alpha*log(4) by "
              + format_mpf(fit.conjecture_gap, 8)
              + "; that closed form is conjectural, so the gap is reported, "
                "not enforced")
    if args.plot_dir:
        from . import plotting
        _note("figure: " + plotting.save_decay_figure(
            "logd holdout gap", fit.holdout, None, None,
            _plot_path(args, "asymptotics-logd.png")))
    return EXIT_PASS if ok else EXIT_FAIL


def run_density(args) -> int:
    if args.n < 1:
        raise DomainError("--n must be >= 1")
    bits = _resolve_bits(args.bits, args.n)
    ctx = PrecisionContext(bits=bits)
    params = _params(args, ctx)
    measure = solve_support(params, args.n, ctx)
    digits = ctx.decimal_digits
    with ctx.workprec():
        tol = (mp.mpf(2) ** (-(bits // 2) + 16) if args.tolerance == "auto"
               else mp.mpf(args.tolerance))
        b = measure.b
        xs = sorted([j * b / 3 for j in (-2, -1, 0, 1, 2)] + [-b, b])
        interior = [x for x in xs if abs(x) < b]
        mass_gap = abs(density_mass(measure, ctx) - measure.n) / measure.n
    eq_reports = check_equilibrium(measure, interior, ctx, tol)
    eq_by_x = dict(zip(interior, eq_reports))
    ok = bool(mass_gap <= tol) and all(r.passed for r in eq_reports)
    rows = []
    sigmas = []
    with ctx.workprec():
        for x in xs:
            sigma_x = density(measure, x, ctx)
            sigmas.append(sigma_x)
            r = eq_by_x.get(x)
            rows.append({"x": format_mpf(x, digits),
                         "sigma_x": format_mpf(sigma_x, digits),
                         "eq_dev_rel": (None if r is None
                                        else format_mpf(r.relative, digits)),
                         "mass_gap_rel": format_mpf(mass_gap, digits),
                         "A": format_mpf(measure.A, digits)})
    text = (rows_to_csv(rows, DENSITY_COLUMNS) if args.format == "csv"
            else rows_to_json(rows))
    _emit(text, args.out)
    if args.plot_dir:
        from . import plotting
        with ctx.workprec():
            fine = [(-b) + (2 * b) * mp.mpf(j) / 200 for j in range(201)]
            prof = [density(measure, x, ctx) for x in fine]
        _note("figure: " + plotting.save_density_figure(
            fine, prof, _plot_path(args, "density.png")))
    return EXIT_PASS if ok else EXIT_FAIL


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------

def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--alpha", default="1",
                   help="weight exponent alpha > 0, decimal string (default 1)")
    p.add_argument("--t", default="1",
                   help="hard-edge parameter t > 0, decimal string (default 1)")
    p.add_argument("--bits", default=None, metavar="BITS|auto",
                   help="working precision; 'auto' is max(256, 12*n); "
                        f"default comes from ${BITS_ENV} when set, else auto")
    p.add_argument("--tolerance", default="auto",
                   help="pass/fail budget as a decimal string; 'auto' picks "
                        "the precision-scaled policy of the subcommand")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--out", default=None, metavar="PATH",
                   help="write rows to PATH instead of standard output")
    p.add_argument("--plot-dir", default=None, metavar="DIR",
                   help="also render matplotlib figures into DIR")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pjlab",
        description="numerical laboratory for a perturbed-Jacobi weight")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("moments", help="dual-path moment table")
    _add_common(p)
    p.add_argument("--k-max", type=int, default=10)
    p.set_defaults(func=run_moments)

    p = sub.add_parser("verify", help="residual sweeps")
    p.add_argument("suite", choices=VERIFY_SUITES)
    _add_common(p)
    group = p.add_mutually_exclusive_group()
    group.add_argument("--n-max", type=int, default=None,
                       help="sweep every defined n up to this bound "
                            "(default 10)")
    group.add_argument("--n", type=int, default=None,
                       help="check a single n instead of sweeping")
    p.add_argument("--z-samples", default=DEFAULT_Z_SAMPLES,
                   help="comma list of interior points for the polynomial "
                        "checks (|z| < 1)")
    p.add_argument("--workers", type=int, default=1,
                   help="process pool size; 1 keeps everything in-process")
    p.set_defaults(func=run_verify)

    p = sub.add_parser("asymptotics", help="large-n expansion fits")
    p.add_argument("series", choices=ASYMPTOTIC_SERIES)
    _add_common(p)
    p.add_argument("--n-grid", default="40:160:20",
                   help="start:stop:step or comma list (default 40:160:20)")
    p.add_argument("--order", type=int, default=None,
                   help="truncation order in thirds; default keeps every "
                        "term the series carries")
    p.add_argument("--slope-window", default="0.15",
                   help="acceptance half-width around the predicted decay "
                        "exponent")
    p.set_defaults(func=run_asymptotics)

    p = sub.add_parser("density", help="equilibrium density report")
    _add_common(p)
    p.add_argument("--n", type=int, default=10,
                   help="particle number of the equilibrium problem")
    p.set_defaults(func=run_density)

    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return args.func(args)
    except PrecisionExhaustedError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PRECISION
    except (DomainError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
