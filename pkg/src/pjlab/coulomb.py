"""Continuum (electrostatic) model of the eigenvalue density and the large-n
expansions it predicts.

The particle number n enters as a continuous parameter: the support endpoint,
the multiplier of the normalization constraint and the free energy are all
smooth in n, which is what makes dF/dn = A checkable by finite differences.
Expansion series carry their coefficients in closed form; the two constants of
the log-determinant series that have no closed form are fitted, never
fabricated.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from enum import Enum

import mpmath as mp
import numpy as np

from .orthopoly import WeightParams
from .precision import (
    GUARD_BITS,
    DomainError,
    PrecisionContext,
    central_derivative,
    real_cubic_root,
    tanh_sinh_integrate,
)
from .reports import ResidualReport, make_report


class UnfittedConstantError(ValueError):
    """A partial sum was requested through a constant that was never fitted."""


class DegenerateInputError(ValueError):
    """Fit input that cannot determine the requested quantities."""


# ---------------------------------------------------------------------------
# equilibrium measure
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class EquilibriumMeasure:
    """Support and multiplier data for the continuum density at particle
    number n.

    u = sqrt(1 - b^2) is the real root in (0,1) of the support cubic
    2(n+alpha) u^3 + (t-2 alpha) u^2 - t = 0; the support is (-b, b).  A is
    the multiplier enforcing integral(density) = n.  xi is the discriminant
    combination entering the radical closed form of u; it is None in the
    regime where that radical turns complex (three real cubic roots), which
    the root finder does not rely on.
    """

    params: WeightParams
    n: mp.mpf
    bits: int
    u: mp.mpf
    b: mp.mpf
    A: mp.mpf
    xi: mp.mpf | None


def solve_support(params: WeightParams, n, ctx: PrecisionContext) -> EquilibriumMeasure:
    """Support endpoint and multiplier at (continuous) particle number n > 0.

        A = t/u - 2n log(b/2) + 2 alpha log(2/(1+u))
    """
    nn = ctx.mpf(n)
    if not nn > 0:
        raise DomainError("particle number must be positive")
    a = params.alpha
    t = params.t
    with ctx.workprec():
        u = real_cubic_root(2 * (nn + a), t - 2 * a, -t, ctx)
        b = mp.sqrt((1 - u) * (1 + u))
        A = t / u - 2 * nn * mp.log(b / 2) + 2 * a * mp.log(2 / (1 + u))
        radicand = 3 * t * (27 * nn * (nn + 2 * a) * t
                            - (t - 8 * a) * (t + a) ** 2)
        if radicand >= 0:
            xi = (8 * a ** 3 + 6 * t * (9 * nn ** 2 + 18 * nn * a + 7 * a ** 2)
                  + 6 * t ** 2 * a - t ** 3
                  + 6 * (nn + a) * mp.sqrt(radicand))
        else:
            xi = None
        return EquilibriumMeasure(params=params, n=nn, bits=ctx.bits, u=+u,
                                  b=+b, A=+A, xi=xi)


def support_root_radical(params: WeightParams, n, ctx: PrecisionContext) -> mp.mpf:
    """u by the explicit radical, valid only where the discriminant
    combination stays real.  Cross-validates the iterative root."""
    nn = ctx.mpf(n)
    a = params.alpha
    t = params.t
    with ctx.workprec():
        radicand = 3 * t * (27 * nn * (nn + 2 * a) * t
                            - (t - 8 * a) * (t + a) ** 2)
        if radicand < 0:
            raise DomainError("radical form leaves the real axis here")
        xi = (8 * a ** 3 + 6 * t * (9 * nn ** 2 + 18 * nn * a + 7 * a ** 2)
              + 6 * t ** 2 * a - t ** 3 + 6 * (nn + a) * mp.sqrt(radicand))
        cr = mp.cbrt(xi)
        return +((2 * a - t + cr + (2 * a - t) ** 2 / cr) / (6 * (nn + a)))


def density(measure: EquilibriumMeasure, x, ctx: PrecisionContext) -> mp.mpf:
    """Continuum eigenvalue density at x, supported on [-b, b]."""
    with mp.workprec(measure.bits + GUARD_BITS):
        x = mp.mpf(x)
        b = measure.b
        if abs(x) > b:
            raise DomainError("x outside the support")
        a = measure.params.alpha
        t = measure.params.t
        e = (1 - b) * (1 + b)          # = 1 - b^2 = u^2
        root = mp.sqrt((b - x) * (b + x))
        num = 2 * t - b * b * t * (1 + x * x) + 2 * a * e * (1 - x * x)
        den = 2 * mp.pi * e * mp.sqrt(e) * (1 - x * x) ** 2
        return +(root * num / den)


def density_mass(measure: EquilibriumMeasure, ctx: PrecisionContext) -> mp.mpf:
    """integral of the density over its support (should equal n)."""
    with ctx.workprec():
        half = tanh_sinh_integrate(lambda y: density(measure, y, ctx),
                                   mp.mpf(0), measure.b, ctx)
        return +(2 * half)       # even integrand


def _potential(params: WeightParams, x) -> mp.mpf:
    g = (1 - x) * (1 + x)
    return params.t / g - params.alpha * mp.log(g)


def _log_energy(measure: EquilibriumMeasure, x, ctx: PrecisionContext) -> mp.mpf:
    """integral of density(y) log|x-y| dy, split at the singular point.

    Each half is parameterized by the distance s = |y - x|, so the log
    argument is exact even when an outer quadrature places x exponentially
    close to a support endpoint; y itself is clamped against rounding past b.
    """
    b = measure.b

    def halfline(sign):
        def f(s):
            y = x + sign * s
            if y > b:
                y = b
            elif y < -b:
                y = -b
            return density(measure, y, ctx) * mp.log(s)
        return f

    with ctx.workprec():
        return (tanh_sinh_integrate(halfline(-1), mp.mpf(0), x + b, ctx,
                                    full_precision=False)
                + tanh_sinh_integrate(halfline(1), mp.mpf(0), b - x, ctx,
                                      full_precision=False))


DEFAULT_SAMPLE_FRACTIONS = ("0", "1/3", "-1/3", "2/3", "-2/3")


def check_equilibrium(measure: EquilibriumMeasure, x_samples, ctx: PrecisionContext,
                      tolerance) -> list[ResidualReport]:
    """Constancy of v(x) - 2 integral(log|x-y| density(y) dy) across the
    support: the deviation from A at each sample, relative to |A|.

    Samples must lie strictly inside (-b, b).  The report's n column carries
    the integer particle number of the run.
    """
    out = []
    with ctx.workprec():
        for xs in x_samples:
            x = mp.mpf(xs)
            if not abs(x) < measure.b:
                raise DomainError("sample outside the open support")
            dev = (_potential(measure.params, x)
                   - 2 * _log_energy(measure, x, ctx) - measure.A)
            out.append(make_report("EQUILIBRIUM", int(measure.n),
                                   measure.params, ctx.bits, dev,
                                   abs(measure.A), tolerance))
    return out


def free_energy(measure: EquilibriumMeasure, ctx: PrecisionContext) -> mp.mpf:
    """F = integral(density * v) - double integral(density log|x-y| density).

    Nested double-exponential quadrature; the inner integral runs at higher
    precision than the outer one so its noise stays below the outer target.
    Both run against the relaxed (contract-floor) convergence criterion,
    which is ample for the finite-difference consumers of F.  Outer nodes
    within 2^-(bits/2) of the endpoint are dropped: their total contribution
    is O(gap^{3/2}), far below the convergence target, while their inner
    integrals would degenerate.
    """
    inner_ctx = ctx.with_bits(ctx.bits + 64)
    with ctx.workprec():
        b = measure.b
        fringe = mp.mpf(2) ** (-(ctx.bits // 2))

        def integrand(x):
            if b - x <= fringe:
                return mp.mpf(0)
            return density(measure, x, ctx) * (
                _potential(measure.params, x)
                - _log_energy(measure, x, inner_ctx))

        half = tanh_sinh_integrate(integrand, mp.mpf(0), b, ctx,
                                   full_precision=False)
        return +(2 * half)       # x -> -x symmetry


def free_energy_derivative(params: WeightParams, n, ctx: PrecisionContext,
                           dn=None) -> mp.mpf:
    """dF/dn by a five-point stencil in the continuous particle number."""
    with ctx.workprec():
        dn = mp.mpf(1) / 64 if dn is None else mp.mpf(dn)

    def f(nn):
        return free_energy(solve_support(params, nn, ctx), ctx)

    return central_derivative(f, ctx.mpf(n), 1, ctx, h=dn)


def check_multiplier_derivative(params: WeightParams, n: int,
                                ctx: PrecisionContext, tolerance,
                                dn=None) -> ResidualReport:
    """dF/dn must reproduce the normalization multiplier A."""
    measure = solve_support(params, n, ctx)
    dF = free_energy_derivative(params, n, ctx, dn=dn)
    with ctx.workprec():
        residual = dF - measure.A
    return make_report("F_MULTIPLIER", n, params, ctx.bits, residual,
                       abs(measure.A), tolerance)


# ---------------------------------------------------------------------------
# large-n expansion series
# ---------------------------------------------------------------------------

class SeriesKind(str, Enum):
    BETA = "beta"
    P = "p"
    SIGMA = "sigma"
    LOGD = "logd"
    A_SERIES = "multiplier"
    F_SERIES = "free_energy"


@dataclass(frozen=True)
class ExpansionSeries:
    """Partial-sum machinery for a series sum_j c_j n^{e_j} (+ c_log log n).

    coefficients are (exponent, value) pairs in descending exponent order,
    exponents in thirds.  truncation_order J means the default partial sum
    keeps exponents >= -J/3.  unknown_slots list constants with no closed
    form as (name, exponent, sign); they must be folded in through
    with_constants before any partial sum that reaches their exponent.
    """

    kind: SeriesKind
    params: WeightParams
    bits: int
    coefficients: tuple
    truncation_order: int
    log_coefficient: mp.mpf | None = None
    unknown_slots: tuple = ()

    def with_constants(self, **values) -> "ExpansionSeries":
        """Fold fitted values into the coefficient list by slot name."""
        remaining = []
        extra = []
        for name, exponent, sign in self.unknown_slots:
            if name in values:
                with mp.workprec(self.bits + GUARD_BITS):
                    extra.append((exponent, sign * mp.mpf(values.pop(name))))
            else:
                remaining.append((name, exponent, sign))
        if values:
            raise DomainError(f"unknown constant names {sorted(values)}")
        merged = {}
        for e, c in tuple(self.coefficients) + tuple(extra):
            with mp.workprec(self.bits + GUARD_BITS):
                key = e._mpf_
                merged[key] = (e, merged.get(key, (e, mp.mpf(0)))[1] + c)
        coeffs = tuple(sorted(merged.values(), key=lambda p: -p[0]))
        return dataclasses.replace(self, coefficients=coeffs,
                                   unknown_slots=tuple(remaining))


def expansion_eval(series: ExpansionSeries, n, truncation: int | None = None) -> mp.mpf:
    """Partial sum keeping exponents >= -truncation/3 (default: everything
    the series carries).  Raises UnfittedConstantError if an unfitted
    constant falls inside the requested range."""
    J = series.truncation_order if truncation is None else truncation
    if J > series.truncation_order:
        raise DomainError("truncation beyond the coefficients provided")
    with mp.workprec(series.bits + GUARD_BITS):
        threshold = -mp.mpf(J) / 3
        for name, exponent, _sign in series.unknown_slots:
            if exponent >= threshold:
                raise UnfittedConstantError(
                    f"constant {name!r} of the {series.kind.value} series "
                    "was never fitted")
        nn = mp.mpf(n)
        total = mp.fsum(c * mp.power(nn, e)
                        for e, c in series.coefficients if e >= threshold)
        if series.log_coefficient is not None and threshold <= 0:
            total += series.log_coefficient * mp.log(nn)
        return +total


def _thirds(ctx, j: int) -> mp.mpf:
    return mp.mpf(j) / 3


def beta_expansion(params: WeightParams, ctx: PrecisionContext) -> ExpansionSeries:
    """Recurrence-coefficient series: 1/4 plus corrections in n^{-1/3}.

    The n^{-1/3} and n^{-1} coefficients vanish identically and are carried
    as explicit zeros, since their absence is itself a checkable prediction.
    """
    a = params.alpha
    t = params.t
    with ctx.workprec():
        tc = mp.cbrt(t)
        t23 = tc * tc
        c13 = mp.cbrt(2)
        c23 = c13 * c13
        coeffs = (
            (_thirds(ctx, 0), mp.mpf(1) / 4),
            (_thirds(ctx, -1), mp.mpf(0)),
            (_thirds(ctx, -2), -t23 / (4 * c23)),
            (_thirds(ctx, -3), mp.mpf(0)),
            (_thirds(ctx, -4), tc * (t - 2 * a) / (12 * c13)),
            (_thirds(ctx, -5), t23 * a / (6 * c23)),
            (_thirds(ctx, -6), (5 - 3 * (t - 2 * a) ** 2) / mp.mpf(144)),
            (_thirds(ctx, -7), -a * tc * (t - 2 * a) / (9 * c13)),
            (_thirds(ctx, -8),
             5 * (2 * t ** 3 - 12 * t ** 2 * a - t * (12 * a ** 2 + 17)
                  - 16 * a * (a ** 2 - 1)) / (1296 * c23 * tc)),
        )
    return ExpansionSeries(kind=SeriesKind.BETA, params=params, bits=ctx.bits,
                           coefficients=coeffs, truncation_order=8)


def p_expansion(params: WeightParams, ctx: PrecisionContext) -> ExpansionSeries:
    """Subleading-coefficient series: -n/4 plus corrections."""
    a = params.alpha
    t = params.t
    with ctx.workprec():
        tc = mp.cbrt(t)
        t23 = tc * tc
        c13 = mp.cbrt(2)
        c23 = c13 * c13
        coeffs = (
            (_thirds(ctx, 3), -mp.mpf(1) / 4),
            (_thirds(ctx, 2), mp.mpf(0)),
            (_thirds(ctx, 1), 3 * t23 / (4 * c23)),
            (_thirds(ctx, 0), (2 * a + 1 - 4 * t) / mp.mpf(8)),
            (_thirds(ctx, -1), tc * (t - 2 * a) / (4 * c13)),
            (_thirds(ctx, -2), (2 * a - 1) * t23 / (8 * c23)),
            (_thirds(ctx, -3), (5 - 3 * (t - 2 * a) ** 2) / mp.mpf(144)),
            (_thirds(ctx, -4), (2 * a - 1) * tc * (2 * a - t) / (24 * c13)),
        )
    return ExpansionSeries(kind=SeriesKind.P, params=params, bits=ctx.bits,
                           coefficients=coeffs, truncation_order=4)


def sigma_expansion(params: WeightParams, ctx: PrecisionContext) -> ExpansionSeries:
    """Series for 2t d/dt log D_n; leading term is order n^{4/3}."""
    a = params.alpha
    t = params.t
    with ctx.workprec():
        tc = mp.cbrt(t)
        t23 = tc * tc
        c13 = mp.cbrt(2)
        c23 = c13 * c13
        coeffs = (
            (_thirds(ctx, 4), -3 * t23 / c23),
            (_thirds(ctx, 2), -tc * (t - 2 * a) / c13),
            (_thirds(ctx, 1), -2 * c13 * t23 * a),
            (_thirds(ctx, 0),
             (3 * t ** 2 + 60 * t * a - 24 * a ** 2 + 4) / mp.mpf(36)),
            (_thirds(ctx, -1), -c23 * a * tc * (t - 2 * a) / 3),
            (_thirds(ctx, -2),
             -(t ** 3 - 6 * t ** 2 * a + 48 * t * a ** 2 + 2 * t
               - 8 * a ** 3 + 8 * a) / (54 * tc * c23)),
        )
    return ExpansionSeries(kind=SeriesKind.SIGMA, params=params, bits=ctx.bits,
                           coefficients=coeffs, truncation_order=2)


def logd_expansion(params: WeightParams, ctx: PrecisionContext) -> ExpansionSeries:
    """Series for log D_n.  The linear ("c1") and constant ("c0") terms have
    no closed form and stay as unfitted slots; everything else, including the
    log n coefficient and the t-dependent part of the constant, is exact."""
    a = params.alpha
    t = params.t
    with ctx.workprec():
        tc = mp.cbrt(t)
        t23 = tc * tc
        c13 = mp.cbrt(2)
        c23 = c13 * c13
        coeffs = (
            (_thirds(ctx, 6), -mp.log(2)),
            (_thirds(ctx, 4), -9 * t23 / (4 * c23)),
            (_thirds(ctx, 2), -3 * tc * (t - 8 * a) / (8 * c13)),
            (_thirds(ctx, 1), -3 * t23 * a / c23),
            (_thirds(ctx, 0),
             (3 * t ** 2 + 120 * t * a
              - 8 * (6 * a ** 2 - 1) * mp.log(t)) / mp.mpf(144)),
            (_thirds(ctx, -1), -a * tc * (t - 8 * a) / (4 * c13)),
            (_thirds(ctx, -2),
             -(5 * t ** 3 - 48 * t ** 2 * a + 40 * (24 * a ** 2 + 1) * t
               + 320 * a * (a ** 2 - 1)) / (1440 * tc * c23)),
        )
        log_coeff = (12 * a ** 2 - 5) / mp.mpf(36)
        slots = (("c1", _thirds(ctx, 3), -1), ("c0", _thirds(ctx, 0), -1))
    return ExpansionSeries(kind=SeriesKind.LOGD, params=params, bits=ctx.bits,
                           coefficients=coeffs, truncation_order=2,
                           log_coefficient=log_coeff, unknown_slots=slots)


def multiplier_expansion(params: WeightParams, ctx: PrecisionContext) -> ExpansionSeries:
    """Series for the normalization multiplier A."""
    a = params.alpha
    t = params.t
    with ctx.workprec():
        tc = mp.cbrt(t)
        t23 = tc * tc
        c13 = mp.cbrt(2)
        c23 = c13 * c13
        coeffs = (
            (_thirds(ctx, 3), mp.log(4)),
            (_thirds(ctx, 1), 3 * t23 / c23),
            (_thirds(ctx, 0), a * mp.log(4)),
            (_thirds(ctx, -1), tc * (t - 8 * a) / (4 * c13)),
            (_thirds(ctx, -2), t23 * a / c23),
            (_thirds(ctx, -3), -a ** 2 / mp.mpf(3)),
            (_thirds(ctx, -4), -a * tc * (t - 8 * a) / (12 * c13)),
            (_thirds(ctx, -5),
             -(5 * t ** 3 - 48 * t ** 2 * a + 960 * a ** 2 * t
               + 320 * a ** 3) / (2160 * c23 * tc)),
            (_thirds(ctx, -6), a ** 3 / mp.mpf(3)),
        )
    return ExpansionSeries(kind=SeriesKind.A_SERIES, params=params,
                           bits=ctx.bits, coefficients=coeffs,
                           truncation_order=6)


def free_energy_expansion(params: WeightParams, ctx: PrecisionContext) -> ExpansionSeries:
    """Series for the continuum free energy; its additive constant has no
    closed form and stays an unfitted slot."""
    a = params.alpha
    t = params.t
    with ctx.workprec():
        tc = mp.cbrt(t)
        t23 = tc * tc
        c13 = mp.cbrt(2)
        c23 = c13 * c13
        coeffs = (
            (_thirds(ctx, 6), mp.log(2)),
            (_thirds(ctx, 4), 9 * t23 / (4 * c23)),
            (_thirds(ctx, 3), a * mp.log(4)),
            (_thirds(ctx, 2), 3 * tc * (t - 8 * a) / (8 * c13)),
            (_thirds(ctx, 1), 3 * a * t23 / c23),
            (_thirds(ctx, -1), a * tc * (t - 8 * a) / (4 * c13)),
            (_thirds(ctx, -2),
             (5 * t ** 3 - 48 * t ** 2 * a + 960 * a ** 2 * t
              + 320 * a ** 3) / (1440 * tc * c23)),
        )
        log_coeff = -a ** 2 / mp.mpf(3)
        slots = (("C0", _thirds(ctx, 0), 1),)
    return ExpansionSeries(kind=SeriesKind.F_SERIES, params=params,
                           bits=ctx.bits, coefficients=coeffs,
                           truncation_order=2, log_coefficient=log_coeff,
                           unknown_slots=slots)


# ---------------------------------------------------------------------------
# exact-vs-series fits
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DecayFit:
    """Least-squares slope of log|exact - partial sum| against log n."""

    slope: float
    intercept: float
    used: tuple          # (n, truncation error) pairs entering the fit
    excluded: tuple      # n values whose error sat at the precision floor


def decay_fit(exact, series: ExpansionSeries, truncation: int | None = None,
              floor_bits: int | None = None) -> DecayFit:
    """Fit the decay exponent of the truncation error over an n-grid.

    exact: iterable of (n, value) with the exact finite-n data.  Points whose
    error has underflowed to the precision floor carry no slope information
    and are excluded (and reported).  Requires >= 4 points spanning at least
    a factor 4 in n.
    """
    with mp.workprec(series.bits + GUARD_BITS):
        pairs = sorted((int(n), mp.mpf(v)) for n, v in exact)
    if len(pairs) < 4 or pairs[-1][0] < 4 * pairs[0][0]:
        raise DegenerateInputError(
            "need >= 4 n-values spanning at least a factor 4")
    if floor_bits is None:
        floor_bits = series.bits // 2
    used = []
    excluded = []
    with mp.workprec(series.bits + GUARD_BITS):
        floor = mp.mpf(2) ** (-floor_bits)
        for n, value in pairs:
            err = abs(value - expansion_eval(series, n, truncation))
            if err <= floor * max(mp.mpf(1), abs(value)):
                excluded.append(n)
            else:
                used.append((n, err))
    if len(used) < 2:
        raise DegenerateInputError("too few points above the precision floor")
    xs = np.array([mp.log(n) for n, _ in used], dtype=float)
    ys = np.array([mp.log(e) for _, e in used], dtype=float)
    slope, intercept = np.polyfit(xs, ys, 1)
    return DecayFit(slope=float(slope), intercept=float(intercept),
                    used=tuple(used), excluded=tuple(excluded))


@dataclass(frozen=True)
class LogDFit:
    """The two fitted constants of the log-determinant series.

    conjecture_gap = |c1 - alpha log 4| is diagnostic only: the linear
    constant is believed, not proven, to equal alpha log 4.
    """

    c1: mp.mpf
    c0: mp.mpf
    fit_ns: tuple
    holdout: tuple       # (n, |prediction - exact|) pairs
    conjecture_gap: mp.mpf
    series: ExpansionSeries


def fit_logd_constants(exact_logd, params: WeightParams,
                       ctx: PrecisionContext) -> LogDFit:
    """Fit the linear and constant terms of the log D_n series from the two
    largest n-values supplied, then validate at the held-out remainder.

    exact_logd: iterable of (n, log D_n) pairs, distinct n, at least two.
    """
    with ctx.workprec():
        pairs = sorted((int(n), mp.mpf(v)) for n, v in exact_logd)
    if len(pairs) < 2:
        raise DegenerateInputError("need at least two (n, log D_n) pairs")
    if len({n for n, _ in pairs}) != len(pairs):
        raise DegenerateInputError("duplicate n values make the fit singular")
    base = logd_expansion(params, ctx)
    known = dataclasses.replace(base, unknown_slots=())

    with ctx.workprec():
        (n1, y1), (n2, y2) = pairs[-2], pairs[-1]
        g1 = y1 - expansion_eval(known, n1)
        g2 = y2 - expansion_eval(known, n2)
        # g_i = -c1 n_i - c0
        c1 = (g1 - g2) / (n2 - n1)
        c0 = -g1 - c1 * n1
        fitted = base.with_constants(c1=c1, c0=c0)
        holdout = []
        for n, y in pairs[:-2]:
            holdout.append((n, abs(expansion_eval(fitted, n) - y)))
        gap = abs(c1 - params.alpha * mp.log(4))
        return LogDFit(c1=+c1, c0=+c0, fit_ns=(n1, n2),
                       holdout=tuple(holdout), conjecture_gap=+gap,
                       series=fitted)
