"""Moments, Hankel factorization and recurrence data for the weight

    w(x, t) = (1 - x^2)^alpha * exp(-t / (1 - x^2)),   x in (-1, 1),

with alpha > 0, t > 0.  The essential singularity at the endpoints makes
every moment finite for arbitrary alpha and pushes the weight smoothly to
zero at x = +-1.

Even moments reduce to confluent hypergeometric values,

    mu_k = e^{-t} Gamma((k+1)/2) U((k+1)/2, -alpha, t),

equivalently (substituting s = x^2/(1-x^2)) to the Laplace integral

    mu_k = e^{-t} int_0^inf e^{-t s} s^{(k-1)/2} (1+s)^{-alpha-(k+3)/2} ds,

which is how the moment table is actually filled: consecutive even k differ
by a factor s/(1+s) inside the integral, so the whole table comes out of one
shared quadrature pass.  Odd moments vanish by symmetry and are stored as
exact zeros.
"""

from __future__ import annotations

import contextlib
from dataclasses import dataclass, replace
from typing import Sequence

import mpmath as mp

from .precision import (
    GUARD_BITS,
    DomainError,
    PrecisionContext,
    PrecisionExhaustedError,
    gamma,
    kummer_u,
    run_with_escalation,
    tanh_sinh_family,
    tanh_sinh_integrate,
)


@dataclass(frozen=True)
class WeightParams:
    """Weight parameters; both must be strictly positive."""

    alpha: mp.mpf
    t: mp.mpf

    def __post_init__(self) -> None:
        object.__setattr__(self, "alpha", mp.mpf(self.alpha))
        object.__setattr__(self, "t", mp.mpf(self.t))
        if not (self.alpha > 0):
            raise DomainError("alpha must be > 0")
        if not (self.t > 0):
            raise DomainError("t must be > 0")

    def key(self) -> tuple:
        # exact binary representation; hashable and precision-independent
        return (self.alpha._mpf_, self.t._mpf_)


def weight_value(params: WeightParams, x, ctx: PrecisionContext | None = None) -> mp.mpf:
    """w(x, t); zero at the endpoints (the essential singularity wins).

    Runs at the ambient precision unless a context is supplied; quadrature
    drivers call it under their own guard.
    """
    with ctx.workprec() if ctx is not None else contextlib.nullcontext():
        x = mp.mpf(x)
        if abs(x) >= 1:
            if abs(x) == 1:
                return mp.mpf(0)
            raise DomainError("weight support is (-1, 1)")
        g = 1 - x * x
        return g ** params.alpha * mp.exp(-params.t / g)


@dataclass(frozen=True)
class MomentTable:
    params: WeightParams
    k_max: int
    bits: int
    mu: tuple
    mu_companion: tuple | None = None   # same table at alpha-1, when requested


def _even_moment_family(alpha, t, count: int, ctx: PrecisionContext) -> list:
    """[mu_0, mu_2, ..., mu_{2(count-1)}] via the shared Laplace-integral pass."""
    with ctx.workprec():
        alpha = mp.mpf(alpha)
        t = mp.mpf(t)
        half = mp.mpf(1) / 2

        def base(s):
            return mp.exp(-t * s) * s ** (-half) * (1 + s) ** (-alpha - 3 * half)

        def ratio(s):
            return s / (1 + s)

        vals = tanh_sinh_family(base, ratio, count, "halfline", ctx)
        et = mp.exp(-t)
        return [+(et * v) for v in vals]


def build_moments(params: WeightParams, k_max: int, ctx: PrecisionContext,
                  *, companion: bool = False) -> MomentTable:
    """Moment table mu_0..mu_{k_max} at the context precision.

    companion=True also fills the table for alpha-1 (any real exponent is
    integrable here), which feeds the derivative identity
    d mu_k / dt = -mu_k^{(alpha-1)} used by the differential checks.
    """
    if k_max < 0:
        raise DomainError("k_max must be >= 0")
    count = k_max // 2 + 1
    evens = _even_moment_family(params.alpha, params.t, count, ctx)
    zero = mp.mpf(0)
    mu = []
    for i in range(k_max + 1):
        mu.append(evens[i // 2] if i % 2 == 0 else zero)
    comp = None
    if companion:
        evens_c = _even_moment_family(params.alpha - 1, params.t, count, ctx)
        comp = tuple(evens_c[i // 2] if i % 2 == 0 else zero
                     for i in range(k_max + 1))
    return MomentTable(params=params, k_max=k_max, bits=ctx.bits,
                       mu=tuple(mu), mu_companion=comp)


def moment_closed_form(params: WeightParams, k: int, ctx: PrecisionContext) -> mp.mpf:
    """Single moment through Gamma((k+1)/2) U((k+1)/2, -alpha, t) directly."""
    if k < 0:
        raise DomainError("k must be >= 0")
    if k % 2 == 1:
        return mp.mpf(0)
    with ctx.workprec():
        a = mp.mpf(k + 1) / 2
        u = kummer_u(a, -params.alpha, params.t, ctx)
        return +(mp.exp(-params.t) * gamma(a, ctx) * u)


def moments_by_quadrature(params: WeightParams, k_max: int,
                          ctx: PrecisionContext) -> tuple:
    """mu_0..mu_{k_max} by direct quadrature of x^k w(x) over (-1, 1).

    Independent of the confluent-hypergeometric route; the two tables are
    compared digit-for-digit by the dual-path checks.
    """
    count = k_max // 2 + 1
    with ctx.workprec():
        def base(x):
            return weight_value(params, x)

        def ratio(x):
            return x * x

        evens = tanh_sinh_family(base, ratio, count, "finite", ctx,
                                 lo=-1, hi=1, even=True)
        zero = mp.mpf(0)
        return tuple(evens[i // 2] if i % 2 == 0 else zero
                     for i in range(k_max + 1))


# ---------------------------------------------------------------------------
# Hankel factorization and recurrence data
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RecurrenceTable:
    """Everything the identity checks consume, indexed as follows.

    h[0..n_max]        squared norms (= LDL^T pivots of the Hankel matrix)
    log_d[0..n_max+1]  log Hankel determinants, log_d[0] = 0
    beta[0..n_max]     recurrence coefficients, beta[0] = 0 exactly
    p[0..n_max+1]      subleading coefficient of the monic polynomials,
                       p[0] = p[1] = 0 exactly; running sum kept exact so
                       beta[n] == p[n] - p[n+1] holds bit-for-bit
    r[0..n_max]        ladder auxiliary r_n(t)
    R[0..n_max-1]      ladder auxiliary R_n(t)
    sigma[0..n_max]    sigma_n = 2t d/dt log D_n through the p-representation
    """

    params: WeightParams
    n_max: int
    bits: int
    h: tuple
    log_d: tuple
    beta: tuple
    p: tuple
    r: tuple | None = None
    R: tuple | None = None
    sigma: tuple | None = None


def factor_hankel(moments: MomentTable, n_max: int,
                  ctx: PrecisionContext) -> RecurrenceTable:
    """Root-free Cholesky (LDL^T) of the (n_max+1) x (n_max+1) Hankel matrix.

    The pivots are the squared norms h_n; a non-positive pivot means the
    precision cannot support this matrix size and raises
    PrecisionExhaustedError (the matrix is positive definite in exact
    arithmetic).
    """
    if 2 * n_max > moments.k_max:
        raise DomainError("need moments up to k = 2*n_max")
    mu = moments.mu
    N = n_max
    with mp.workprec(ctx.bits + GUARD_BITS):
        d: list = []
        rows: list = []      # rows[i] = L[i][:i]
        acc_rows: list = []  # acc_rows[i][k] = L[i][k] * d[k]
        for i in range(N + 1):
            Li: list = []
            Mi: list = []
            for j in range(i):
                acc = mu[i + j]
                if j:
                    acc -= mp.fdot(zip(Li, acc_rows[j]))
                Li.append(acc / d[j])
                Mi.append(acc)
            dii = mu[2 * i]
            if i:
                dii -= mp.fdot(zip(Li, Mi))
            if not (dii > 0):
                raise PrecisionExhaustedError(
                    f"Hankel pivot {i} lost positivity at {ctx.bits} bits")
            d.append(dii)
            rows.append(Li)
            acc_rows.append(Mi)

        beta = [mp.mpf(0)]
        for n in range(1, N + 1):
            beta.append(d[n] / d[n - 1])

        log_d = [mp.mpf(0)]
        for n in range(N + 1):
            log_d.append(log_d[n] + mp.log(d[n]))

    # p is the running sum of -beta; with a little extra precision the
    # subtractions below are exact, so beta[n] == p[n] - p[n+1] bit-for-bit
    with mp.workprec(ctx.bits + 2 * GUARD_BITS):
        p = [mp.mpf(0), mp.mpf(0)]
        for n in range(1, N + 1):
            p.append(p[n] - beta[n])

    return RecurrenceTable(params=moments.params, n_max=N, bits=ctx.bits,
                           h=tuple(d), log_d=tuple(log_d), beta=tuple(beta),
                           p=tuple(p))


def ladder_quantities(table: RecurrenceTable, ctx: PrecisionContext) -> RecurrenceTable:
    """Fill r_n and R_n from the structural identities

        r_n = n - (2n+1+2 alpha) beta_n + 2 p(n),
        R_n = 2n+1+2t - (2n+3+2 alpha)(beta_n + beta_{n+1}) + 4 p(n).
    """
    a2 = 2 * table.params.alpha
    t2 = 2 * table.params.t
    with mp.workprec(ctx.bits + GUARD_BITS):
        r = []
        for n in range(table.n_max + 1):
            r.append(n - (2 * n + 1 + a2) * table.beta[n] + 2 * table.p[n])
        R = []
        for n in range(table.n_max):
            R.append(2 * n + 1 + t2
                     - (2 * n + 3 + a2) * (table.beta[n] + table.beta[n + 1])
                     + 4 * table.p[n])
    return replace(table, r=tuple(r), R=tuple(R))


def sigma_values(table: RecurrenceTable, ctx: PrecisionContext) -> RecurrenceTable:
    """sigma_n = -n(n+2t) - (2n-1+2 alpha) p(n) - (2n+1+2 alpha) p(n+1)."""
    a2 = 2 * table.params.alpha
    t2 = 2 * table.params.t
    with mp.workprec(ctx.bits + GUARD_BITS):
        sig = []
        for n in range(table.n_max + 1):
            sig.append(-n * (n + t2)
                       - (2 * n - 1 + a2) * table.p[n]
                       - (2 * n + 1 + a2) * table.p[n + 1])
    return replace(table, sigma=tuple(sig))


def build_recurrence_table(params: WeightParams, n_max: int,
                           ctx: PrecisionContext, *,
                           escalate: bool = True) -> RecurrenceTable:
    """Moments -> LDL^T -> ladder/sigma data, with precision escalation.

    On PrecisionExhaustedError (quadrature stall or lost pivot) the build is
    retried at doubled bits, at most twice; the returned table records the
    bits actually used.
    """
    if n_max < 1:
        raise DomainError("n_max must be >= 1")

    def attempt(c: PrecisionContext) -> RecurrenceTable:
        moments = build_moments(params, 2 * n_max, c)
        table = factor_hankel(moments, n_max, c)
        table = ladder_quantities(table, c)
        return sigma_values(table, c)

    if escalate:
        return run_with_escalation(attempt, ctx)
    return attempt(ctx)


# ---------------------------------------------------------------------------
# monic polynomials
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PolyCoeffs:
    """Monic P_n as ascending coefficients; wrong-parity slots exactly zero.

    Evaluation and differentiation happen at the recorded precision, not at
    whatever precision happens to be ambient.
    """

    n: int
    bits: int
    coeffs: tuple

    def __call__(self, z) -> mp.mpf:
        with mp.workprec(self.bits + GUARD_BITS):
            z = mp.mpf(z)
            acc = mp.mpf(0)
            for c in reversed(self.coeffs):
                acc = acc * z + c
            return +acc

    def derivative(self) -> "PolyCoeffs":
        with mp.workprec(self.bits + GUARD_BITS):
            d = tuple(k * self.coeffs[k] for k in range(1, len(self.coeffs)))
        return PolyCoeffs(n=max(self.n - 1, 0), bits=self.bits,
                          coeffs=d if d else (mp.mpf(0),))


def polynomial_coeffs(table: RecurrenceTable, n: int) -> PolyCoeffs:
    """P_n from the three-term recurrence x P_k = P_{k+1} + beta_k P_{k-1}."""
    if not (0 <= n <= table.n_max):
        raise DomainError("n out of table range")
    with mp.workprec(table.bits + GUARD_BITS):
        zero = mp.mpf(0)
        prev = [mp.mpf(1)]              # P_0
        if n == 0:
            return PolyCoeffs(n=0, bits=table.bits, coeffs=tuple(prev))
        curr = [zero, mp.mpf(1)]        # P_1
        for k in range(1, n):
            nxt = [zero] * (k + 2)
            for i, c in enumerate(curr):
                nxt[i + 1] = c
            b = table.beta[k]
            for i, c in enumerate(prev):
                nxt[i] -= b * c
            prev, curr = curr, nxt
        return PolyCoeffs(n=n, bits=table.bits, coeffs=tuple(curr))


def ladder_integrals(table: RecurrenceTable, n: int,
                     ctx: PrecisionContext) -> tuple[mp.mpf, mp.mpf]:
    """(R_n, r_n) from their defining weighted integrals,

        R_n = (2t/h_n)     int P_n(y)^2          w(y)/(1-y^2) dy,
        r_n = (2t/h_{n-1}) int y P_n(y) P_{n-1}(y) w(y)/(1-y^2) dy,

    a route independent of the beta/p representation.  Requires n >= 1.
    """
    if not (1 <= n <= table.n_max):
        raise DomainError("need 1 <= n <= n_max")
    params = table.params
    pn = polynomial_coeffs(table, n)
    pn1 = polynomial_coeffs(table, n - 1)
    with ctx.workprec():
        t2 = 2 * params.t

        def red_weight(y):
            g = 1 - y * y
            return g ** (params.alpha - 1) * mp.exp(-params.t / g)

        big = tanh_sinh_integrate(lambda y: pn(y) ** 2 * red_weight(y),
                                  -1, 1, ctx)
        small = tanh_sinh_integrate(lambda y: y * pn(y) * pn1(y) * red_weight(y),
                                    -1, 1, ctx)
        return +(t2 * big / table.h[n]), +(t2 * small / table.h[n - 1])
