"""Differential (in t) structure: evolution laws, Riccati pair, second-order
ODEs, the Painleve V form and the sigma-form ODE.

All t-derivatives are formed from five-point central stencils over recurrence
tables built at t, t +- h, t +- 2h.  Tables are cached process-wide, so the
five stencil points, the half-step refinement and repeated CLI calls share
work.  Second-order ODE checks always confirm the O(h^4) stencil signature
against a half-step run before declaring a pass.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

import mpmath as mp

from .orthopoly import (
    RecurrenceTable,
    WeightParams,
    build_recurrence_table,
)
from .precision import (
    GUARD_BITS,
    DomainError,
    PrecisionContext,
    kummer_u,
    stencil_derivative,
)
from .reports import ResidualReport, make_report

_TABLE_CACHE: dict[tuple, RecurrenceTable] = {}


def cached_table(params: WeightParams, n_max: int,
                 ctx: PrecisionContext) -> RecurrenceTable:
    """build_recurrence_table with process-wide memoization (exact-key)."""
    key = (params.alpha._mpf_, params.t._mpf_, n_max, ctx.bits, ctx.quad_level)
    table = _TABLE_CACHE.get(key)
    if table is None:
        table = build_recurrence_table(params, n_max, ctx)
        _TABLE_CACHE[key] = table
    return table


@dataclass(frozen=True)
class StencilBundle:
    """Recurrence tables at the five stencil points t_c + j*h, j = -2..2."""

    params: WeightParams
    n_target: int
    t_center: mp.mpf
    h: mp.mpf
    bits: int
    tables: tuple   # (t-2h, t-h, t, t+h, t+2h)

    def samples(self, extract) -> list:
        return [extract(tb) for tb in self.tables]

    @property
    def center(self) -> RecurrenceTable:
        return self.tables[2]

    def d1(self, extract) -> mp.mpf:
        with mp.workprec(self.bits + GUARD_BITS):
            return +stencil_derivative(self.samples(extract), self.h, 1)

    def d2(self, extract) -> mp.mpf:
        with mp.workprec(self.bits + GUARD_BITS):
            return +stencil_derivative(self.samples(extract), self.h, 2)


def build_stencil_bundle(params: WeightParams, n_target: int,
                         ctx: PrecisionContext, h=None) -> StencilBundle:
    """Five cached tables spanning the stencil; h defaults to 2^-(bits/4)."""
    if n_target < 1:
        raise DomainError("n_target must be >= 1")
    with ctx.workprec():
        h = ctx.fd_step if h is None else mp.mpf(h)
        t_c = params.t
        if t_c - 2 * h <= 0:
            raise DomainError("stencil leaves the domain t > 0")
        tables = []
        for j in range(-2, 3):
            tj = t_c + j * h
            pj = WeightParams(alpha=params.alpha, t=tj)
            tables.append(cached_table(pj, n_target, ctx))
    return StencilBundle(params=params, n_target=n_target, t_center=t_c,
                         h=h, bits=ctx.bits, tables=tuple(tables))


def _half_bundle(bundle: StencilBundle, ctx: PrecisionContext) -> StencilBundle:
    return build_stencil_bundle(bundle.params, bundle.n_target, ctx,
                                h=bundle.h / 2)


def _sum_terms_report(relation, bundle, n, terms, tolerance) -> ResidualReport:
    residual = mp.fsum(terms)
    scale = mp.fsum(abs(x) for x in terms)
    return make_report(relation, n, bundle.params, bundle.bits,
                       residual, scale, tolerance)


# ---------------------------------------------------------------------------
# first-order relations
# ---------------------------------------------------------------------------

def check_t_evolution(bundle: StencilBundle, n: int,
                      tolerance) -> list[ResidualReport]:
    """Evolution of log h_n, p(n) and beta_n along t.

        2t (log h_n)' = -R_n          (n <= n_target - 1)
        2t p(n)'      = r_n - beta_n R_n
        2t beta_n'    = beta_n (R_{n-1} - R_n)   (additionally n >= 1)
    """
    if not (0 <= n <= bundle.n_target - 1):
        raise DomainError("need 0 <= n <= n_target - 1")
    tb = bundle.center
    out = []
    with mp.workprec(bundle.bits + GUARD_BITS):
        t2 = 2 * bundle.t_center
        d_lnh = bundle.d1(lambda T: mp.log(T.h[n]))
        out.append(_sum_terms_report(
            "EQ1", bundle, n, [t2 * d_lnh, tb.R[n]], tolerance))

        d_p = bundle.d1(lambda T: T.p[n])
        out.append(_sum_terms_report(
            "PNT", bundle, n,
            [t2 * d_p, -tb.r[n], tb.beta[n] * tb.R[n]], tolerance))

        if n >= 1:
            d_b = bundle.d1(lambda T: T.beta[n])
            out.append(_sum_terms_report(
                "EQ2", bundle, n,
                [t2 * d_b, -tb.beta[n] * (tb.R[n - 1] - tb.R[n])], tolerance))
    return out


def check_riccati(bundle: StencilBundle, n: int,
                  tolerance) -> list[ResidualReport]:
    """Coupled Riccati pair for r_n and R_n (1 <= n <= n_target - 1)."""
    if not (1 <= n <= bundle.n_target - 1):
        raise DomainError("need 1 <= n <= n_target - 1")
    tb = bundle.center
    P = bundle.params
    out = []
    with mp.workprec(bundle.bits + GUARD_BITS):
        a = P.alpha
        t = bundle.t_center
        r = tb.r[n]
        R = tb.R[n]
        c = 2 * n + 1 + 2 * a

        d_r = bundle.d1(lambda T: T.r[n])
        terms = [2 * t * d_r, -2 * n * t, r * r, -2 * (n + a + 1 - t) * r,
                 2 * c * (r * r + 2 * t * r) / R]
        out.append(_sum_terms_report("RIC1", bundle, n, terms, tolerance))

        d_R = bundle.d1(lambda T: T.R[n])
        terms = [2 * t * d_R, -R * R, -2 * (n + a + 1 - t) * R,
                 2 * r * (c + R), 2 * t * c]
        out.append(_sum_terms_report("RIC2", bundle, n, terms, tolerance))
    return out


# ---------------------------------------------------------------------------
# second-order ODEs (with mandatory half-step signature confirmation)
# ---------------------------------------------------------------------------

def _scaling_consistent(rel_h, rel_half, bits) -> bool:
    """Residual halving must follow the O(h^4) law or sit below the floor."""
    floor = mp.mpf(2) ** (-(bits // 2))
    if rel_h == 0 or rel_half == 0:
        return True
    if max(rel_h, rel_half) <= floor:
        return True
    return rel_half <= rel_h / 8


def _with_scaling(report: ResidualReport, half_report: ResidualReport) -> ResidualReport:
    ok = _scaling_consistent(report.relative, half_report.relative, report.bits)
    return report if ok else dataclasses.replace(report, passed=False)


def _ode_r_residual(bundle: StencilBundle, n: int, tolerance) -> ResidualReport:
    tb = bundle.center
    P = bundle.params
    with mp.workprec(bundle.bits + GUARD_BITS):
        a = P.alpha
        t = bundle.t_center
        R = tb.R[n]
        Rp = bundle.d1(lambda T: T.R[n])
        Rpp = bundle.d2(lambda T: T.R[n])
        c = 2 * n + 1 + 2 * a
        blocks = [
            8 * t ** 2 * R * (c + R) * Rpp,
            -4 * t ** 2 * (2 * c + 3 * R) * Rp ** 2,
            8 * t * R * (c + R) * Rp,
            -R ** 5,
            -2 * c * R ** 4,
            -4 * ((n + a) * (n + 1 + a) - t * (t - 2 * a)) * R ** 3,
            16 * t * c * (t - a) * R ** 2,
            4 * t * c ** 2 * (5 * t - 2 * a) * R,
            8 * t ** 2 * c ** 3,
        ]
        residual = mp.fsum(blocks)
        scale = max(abs(x) for x in blocks)
    return make_report("ODE_R", n, P, bundle.bits, residual, scale, tolerance)


def _ode_r_small_residual(bundle: StencilBundle, n: int, tolerance) -> ResidualReport:
    tb = bundle.center
    P = bundle.params
    with mp.workprec(bundle.bits + GUARD_BITS):
        a = P.alpha
        t = bundle.t_center
        r = tb.r[n]
        rp = bundle.d1(lambda T: T.r[n])
        rpp = bundle.d2(lambda T: T.r[n])
        blocks = [
            4 * t ** 2 * r * (2 * t + r) * rpp,
            -4 * t ** 2 * (t + r) * rp ** 2,
            4 * t * r ** 2 * rp,
            -r ** 5,
            -(2 * n + 2 * a + 5 * t) * r ** 4,
            -8 * t * (n + a + t) * r ** 3,
            -4 * t * ((t + a) ** 2 + n * (2 * t + a) - 1) * r ** 2,
            4 * n ** 2 * t ** 2 * r,
            4 * n ** 2 * t ** 3,
        ]
        residual = mp.fsum(blocks)
        scale = max(abs(x) for x in blocks)
    return make_report("ODE_SMALL_R", n, P, bundle.bits, residual, scale, tolerance)


def check_second_order_odes(bundle: StencilBundle, n: int, tolerance,
                            ctx: PrecisionContext) -> list[ResidualReport]:
    """Second-order ODEs for R_n (n >= 0) and r_n (n >= 1)."""
    if not (0 <= n <= bundle.n_target - 1):
        raise DomainError("need 0 <= n <= n_target - 1")
    half = _half_bundle(bundle, ctx)
    out = [_with_scaling(_ode_r_residual(bundle, n, tolerance),
                         _ode_r_residual(half, n, tolerance))]
    if n >= 1:
        out.append(_with_scaling(_ode_r_small_residual(bundle, n, tolerance),
                                 _ode_r_small_residual(half, n, tolerance)))
    return out


def _pv_residual_from_samples(R_samples, n, params, h, bits,
                              tolerance) -> ResidualReport:
    """Painleve V residual for W = 1 + R_n/(2n+1+2 alpha) given five R values."""
    with mp.workprec(bits + GUARD_BITS):
        a = params.alpha
        t = params.t
        c = 2 * n + 1 + 2 * a
        W_samples = [1 + Rv / c for Rv in R_samples]
        W = W_samples[2]
        Wp = stencil_derivative(W_samples, h, 1)
        Wpp = stencil_derivative(W_samples, h, 2)
        mu1 = c ** 2 / mp.mpf(8)
        mu2 = -mp.mpf(1) / 8
        mu3 = a
        mu4 = -mp.mpf(1) / 2
        rhs_terms = [
            (3 * W - 1) * Wp ** 2 / (2 * W * (W - 1)),
            -Wp / t,
            (W - 1) ** 2 / t ** 2 * (mu1 * W + mu2 / W),
            mu3 * W / t,
            mu4 * W * (W + 1) / (W - 1),
        ]
        residual = Wpp - mp.fsum(rhs_terms)
        scale = abs(Wpp) + mp.fsum(abs(x) for x in rhs_terms)
    return make_report("PV", n, params, bits, residual, scale, tolerance)


def check_painleve_v(bundle: StencilBundle, n: int, tolerance,
                     ctx: PrecisionContext) -> ResidualReport:
    """Painleve V for the table-backed R_n (0 <= n <= n_target - 1)."""
    if not (0 <= n <= bundle.n_target - 1):
        raise DomainError("need 0 <= n <= n_target - 1")
    report = _pv_residual_from_samples(
        bundle.samples(lambda T: T.R[n]), n, bundle.params, bundle.h,
        bundle.bits, tolerance)
    half = _half_bundle(bundle, ctx)
    half_report = _pv_residual_from_samples(
        half.samples(lambda T: T.R[n]), n, bundle.params, half.h,
        half.bits, tolerance)
    return _with_scaling(report, half_report)


def closed_form_r0(params: WeightParams, ctx: PrecisionContext) -> mp.mpf:
    """R_0(t) = 2t U(1/2, 1-alpha, t) / U(1/2, -alpha, t)."""
    with ctx.workprec():
        half = mp.mpf(1) / 2
        num = kummer_u(half, 1 - params.alpha, params.t, ctx)
        den = kummer_u(half, -params.alpha, params.t, ctx)
        return +(2 * params.t * num / den)


def check_painleve_v_r0(params: WeightParams, ctx: PrecisionContext,
                        tolerance, h=None) -> ResidualReport:
    """Painleve V at n = 0 fed by the confluent-hypergeometric closed form,
    bypassing the moment/Hankel pipeline entirely."""
    with ctx.workprec():
        h = ctx.fd_step if h is None else mp.mpf(h)
        if params.t - 2 * h <= 0:
            raise DomainError("stencil leaves the domain t > 0")
        R_samples = []
        for j in range(-2, 3):
            pj = WeightParams(alpha=params.alpha, t=params.t + j * h)
            R_samples.append(closed_form_r0(pj, ctx))
        report = _pv_residual_from_samples(R_samples, 0, params, h, ctx.bits,
                                           tolerance)
        # half-step stencil reuses t +- h as its outer points; only t +- h/2
        # are new evaluations
        extra = []
        for j in (-1, 1):
            pj = WeightParams(alpha=params.alpha, t=params.t + j * h / 2)
            extra.append(closed_form_r0(pj, ctx))
        half_samples = [R_samples[1], extra[0], R_samples[2], extra[1],
                        R_samples[3]]
        half_report = _pv_residual_from_samples(half_samples, 0, params, h / 2,
                                                ctx.bits, tolerance)
        return _with_scaling(report, half_report)


def check_sigma_ode(bundle: StencilBundle, n: int, tolerance,
                    ctx: PrecisionContext) -> ResidualReport:
    """Sigma-form ODE for sigma_n = 2t (log D_n)' (1 <= n <= n_target)."""
    if not (1 <= n <= bundle.n_target):
        raise DomainError("need 1 <= n <= n_target")
    report = _sigma_ode_residual(bundle, n, tolerance)
    half = _half_bundle(bundle, ctx)
    return _with_scaling(report, _sigma_ode_residual(half, n, tolerance))


def _sigma_ode_residual(bundle: StencilBundle, n: int, tolerance) -> ResidualReport:
    tb = bundle.center
    P = bundle.params
    with mp.workprec(bundle.bits + GUARD_BITS):
        a = P.alpha
        t = bundle.t_center
        s = tb.sigma[n]
        sp = bundle.d1(lambda T: T.sigma[n])
        spp = bundle.d2(lambda T: T.sigma[n])
        na = n + a

        big1_blocks = [
            t ** 4 * spp ** 2,
            2 * t ** 2 * (na ** 2 + t * (a - sp)) * spp,
            2 * t ** 3 * sp ** 3,
            -t ** 2 * ((t + a) ** 2 - 3 * n * (n + 2 * a) - 1 + 4 * s) * sp ** 2,
            -2 * t * (3 * n ** 4 + 12 * n ** 3 * a
                      + n ** 2 * (t ** 2 + 4 * t * a + 15 * a ** 2 + 2)
                      + 2 * n * a * (t ** 2 + 4 * t * a + 3 * a ** 2 + 2)
                      + a * (t + 2 * a)) * sp,
            2 * t * (3 * na ** 2 + t * (t + 4 * a)) * s * sp,
            -(2 * n ** 4 + 8 * n ** 3 * a
              + 2 * n ** 2 * (t ** 2 + 3 * t * a + 6 * a ** 2)
              + 4 * n * a * (t + a) * (t + 2 * a)
              + 2 * a * (t + a) ** 3) * s,
            2 * n ** 6 + 12 * n ** 5 * a
            + 2 * (t ** 2 + 3 * t * a + 14 * a ** 2 + 1) * n ** 4
            + 8 * n ** 3 * a * (t ** 2 + 3 * t * a + 4 * a ** 2 + 1)
            + n ** 2 * (2 * t ** 3 * a + (14 * a ** 2 + 1) * t ** 2
                        + 2 * t * a * (15 * a ** 2 + 2)
                        + 6 * a ** 2 * (3 * a ** 2 + 2))
            + n * (4 * t ** 3 * a ** 2 + 2 * t ** 2 * a * (6 * a ** 2 + 1)
                   + 4 * t * a ** 2 * (3 * a ** 2 + 2)
                   + 4 * a ** 3 * (a ** 2 + 2))
            + 2 * a ** 2 * (t + a) ** 2,
        ]
        big1 = mp.fsum(big1_blocks)

        big2 = (t ** 2 * spp
                - t * (2 * n ** 2 + 4 * n * a + 1 - 2 * s) * sp
                - (na ** 2 + t * (t + 2 * a)) * s
                + n ** 4 + 4 * n ** 3 * a + a * (t + a)
                + n ** 2 * (t ** 2 + 2 * t * a + 5 * a ** 2 + 1)
                + 2 * n * a * ((t + a) ** 2 + 1))
        lhs = big1 ** 2
        rhs = 4 * na ** 2 * (na ** 2 + t * (t + 2 * a) - 2 * t * sp) * big2 ** 2
        residual = lhs - rhs
        scale = max(abs(lhs), abs(rhs))
    return make_report("SIGMA_ODE", n, P, bundle.bits, residual, scale, tolerance)
