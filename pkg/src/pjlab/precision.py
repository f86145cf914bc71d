"""Arbitrary-precision primitives: contexts, quadrature, Kummer functions, stencils.

Everything downstream funnels its arithmetic through this module.  The working
representation is mpmath's mpf (binary floating point with per-operation
rounding at the active precision); a PrecisionContext pins the target bit
count and derived settings so that identical inputs always produce identical
bits.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import mpmath as mp

# Extra bits carried by all internal arithmetic so that results are honest at
# the advertised precision.  Fixed once; changing it changes every emitted bit.
GUARD_BITS = 32

_INF = mp.inf


class DomainError(ValueError):
    """Input outside the mathematical domain of an operation."""


class PrecisionExhaustedError(ArithmeticError):
    """The requested accuracy could not be certified at the configured precision."""


@dataclass(frozen=True)
class PrecisionContext:
    """Immutable bundle of precision settings.

    bits
        target mantissa precision; results aim at relative error ~2^-bits.
    quad_level
        deepest tanh-sinh refinement level (step 2^-quad_level).
    fd_step_exponent
        e such that finite-difference stencils use h = 2^-e by default.
    """

    bits: int
    quad_level: int = 13
    fd_step_exponent: int | None = None

    def __post_init__(self) -> None:
        if self.bits < 128:
            raise ValueError("bits must be >= 128")
        if self.quad_level < 4:
            raise ValueError("quad_level must be >= 4")
        if self.fd_step_exponent is None:
            object.__setattr__(self, "fd_step_exponent", self.bits // 4)

    # -- conversions -------------------------------------------------------

    def mpf(self, x) -> mp.mpf:
        """Parse x (str/int/float/mpf) to an mpf rounded at this context."""
        with mp.workprec(self.bits + GUARD_BITS):
            return mp.mpf(x)

    def workprec(self):
        """mpmath precision guard for arithmetic belonging to this context."""
        return mp.workprec(self.bits + GUARD_BITS)

    def with_bits(self, bits: int) -> "PrecisionContext":
        return PrecisionContext(bits=bits, quad_level=self.quad_level)

    def escalated(self) -> "PrecisionContext":
        return self.with_bits(2 * self.bits)

    # -- derived quantities ------------------------------------------------

    @property
    def eps(self) -> mp.mpf:
        return mp.mpf(2) ** (-self.bits)

    @property
    def half_eps(self) -> mp.mpf:
        return mp.mpf(2) ** (-(self.bits // 2))

    @property
    def fd_step(self) -> mp.mpf:
        return mp.mpf(2) ** (-self.fd_step_exponent)

    @property
    def decimal_digits(self) -> int:
        """Digits needed to serialize without losing information."""
        return math.ceil(self.bits * 0.302) + 2

    def default_tolerance(self) -> mp.mpf:
        return mp.mpf(2) ** (-(self.bits // 4))


def run_with_escalation(task: Callable[[PrecisionContext], object],
                        ctx: PrecisionContext, retries: int = 2):
    """Run task(ctx); on PrecisionExhaustedError retry at doubled bits.

    At most `retries` doublings, after which the error propagates.
    """
    attempt = ctx
    for k in range(retries + 1):
        try:
            return task(attempt)
        except PrecisionExhaustedError:
            if k == retries:
                raise
            attempt = attempt.escalated()
    raise AssertionError("unreachable")


# ---------------------------------------------------------------------------
# tanh-sinh (double-exponential) quadrature
#
# Finite intervals use x = m + s*tanh(pi/2 * sinh(u)); the half line uses
# s = exp(u - exp(-u)).  Abscissa/weight pairs depend only on (precision,
# level, index), so they are cached globally and shared across integrals,
# parameter sets and stencil points.  Level L works on the grid of spacing
# 2^-L; level 1 holds every multiple of 1/2, deeper levels add the odd
# multiples of their spacing.
# ---------------------------------------------------------------------------

# (prec, level) -> [(u, delta=1-u, w)] for sigma = j*h resp. (2j-1)*h, j >= 1
_FINITE_NODES: dict[tuple[int, int], list] = {}
# (prec, level, side) -> [(s, w)], side +1 walks sigma up, -1 down; j >= 1
_HALFLINE_NODES: dict[tuple[int, int, int], list] = {}

_MAX_NODES_PER_LEVEL = 1 << 22


def _finite_node(prec: int, level: int, j: int):
    """(u, delta, w) for the finite-interval rule at positive sigma index j."""
    key = (prec, level)
    nodes = _FINITE_NODES.setdefault(key, [])
    while len(nodes) < j:
        i = len(nodes) + 1
        with mp.workprec(prec):
            h = mp.mpf(2) ** (-level)
            sigma = (i * h) if level == 1 else ((2 * i - 1) * h)
            q = mp.pi / 2 * mp.sinh(sigma)
            # 1 - tanh(q) = 2/(e^{2q}+1): no cancellation at large q
            e2q = mp.exp(2 * q)
            delta = 2 / (e2q + 1)
            u = 1 - delta
            w = mp.pi / 2 * mp.cosh(sigma) * (4 * e2q / (e2q + 1) ** 2)
        nodes.append((u, delta, w))
    return nodes[j - 1]


def _halfline_node(prec: int, level: int, side: int, j: int):
    """(s, w) for the (0, inf) rule; j >= 1.  The center sigma=0 is separate."""
    key = (prec, level, side)
    nodes = _HALFLINE_NODES.setdefault(key, [])
    while len(nodes) < j:
        i = len(nodes) + 1
        with mp.workprec(prec):
            h = mp.mpf(2) ** (-level)
            sigma = side * ((i * h) if level == 1 else ((2 * i - 1) * h))
            em = mp.exp(-sigma)
            s = mp.exp(sigma - em)
            w = s * (1 + em)
        nodes.append((s, w))
    return nodes[j - 1]


def _halfline_center(prec: int):
    with mp.workprec(prec):
        s = mp.exp(mp.mpf(-1))
        return s, 2 * s


def _level_step(level: int) -> mp.mpf:
    return mp.mpf(2) ** (-level)


def _converged(I_curr, I_prev, bits: int, level: int, best: list) -> bool:
    err = abs(I_curr - I_prev)
    scale = abs(I_curr) + mp.mpf(2) ** (-8 * bits)
    rel = err / scale
    if rel < best[0]:
        best[0] = rel
    return level >= 4 and rel <= mp.mpf(2) ** (-(bits + 8))


def _finish(I_last, best, ctx: PrecisionContext):
    if best[0] <= ctx.half_eps:
        return +I_last
    raise PrecisionExhaustedError(
        f"quadrature stalled at relative agreement {mp.nstr(best[0], 5)} "
        f"with target 2^-{ctx.bits}")


def tanh_sinh_integrate(f, lo, hi, ctx: PrecisionContext, *,
                        full_precision: bool = True) -> mp.mpf:
    """Integrate f over (lo, hi) by double-exponential quadrature.

    Refines the level-halving ladder until two successive levels agree to
    ~2^-bits (or, with full_precision=False, to the contractual 2^-(bits/2))
    and returns the deepest estimate.  If the ladder is exhausted before even
    2^-(bits/2) agreement is reached, raises PrecisionExhaustedError.  Nodes
    that round onto a finite endpoint are skipped, so integrable endpoint
    blow-ups are tolerated.

    Supported shapes: finite intervals, (a, +inf) and (-inf, b).
    """
    if lo == hi:
        return ctx.mpf(0)
    if lo == -_INF and hi == _INF:
        raise DomainError("doubly infinite interval not supported")
    if hi != _INF and lo != -_INF and mp.mpf(lo) > mp.mpf(hi):
        return -tanh_sinh_integrate(f, hi, lo, ctx, full_precision=full_precision)
    if lo == -_INF:
        b = mp.mpf(hi)
        return _ts_halfline(lambda s: f(b - s), ctx, full_precision)
    if hi == _INF:
        a = mp.mpf(lo)
        return _ts_halfline(lambda s: f(a + s), ctx, full_precision)
    return _ts_finite(f, mp.mpf(lo), mp.mpf(hi), ctx, full_precision)


def _maybe_done(I_curr, I_prev, level, best, ctx, full_precision):
    if I_prev is None:
        return None
    if _converged(I_curr, I_prev, ctx.bits, level, best):
        return +I_curr
    if not full_precision and level >= 6 and best[0] <= ctx.half_eps:
        return +I_curr
    return None


def _ts_finite(f, a, b, ctx: PrecisionContext, full_precision: bool) -> mp.mpf:
    prec = ctx.bits + GUARD_BITS
    with mp.workprec(prec):
        mid = (a + b) / 2
        sh = (b - a) / 2
        cutoff = mp.mpf(2) ** (-(prec + 8))
        floor_delta = mp.mpf(2) ** (-2 * prec)
        T = mp.pi / 2 * f(mid)
        max_term = abs(T)
        I_prev = None
        best = [mp.inf]
        for level in range(1, ctx.quad_level + 1):
            S = mp.mpf(0)
            for side in (+1, -1):
                small = 0
                j = 1
                while True:
                    u, delta, w = _finite_node(prec, level, j)
                    x = mid + side * sh * u
                    if x <= a or x >= b or sh * delta < floor_delta:
                        break
                    term = w * f(x)
                    S += term
                    at = abs(term)
                    if at > max_term:
                        max_term = at
                    small = small + 1 if at < cutoff * max_term else 0
                    if small >= 2:
                        break
                    j += 1
                    if j > _MAX_NODES_PER_LEVEL:
                        raise PrecisionExhaustedError("node budget exhausted")
            T += S
            I_curr = sh * _level_step(level) * T
            done = _maybe_done(I_curr, I_prev, level, best, ctx, full_precision)
            if done is not None:
                return done
            I_prev = I_curr
        return _finish(I_prev, best, ctx)


def _ts_halfline(f, ctx: PrecisionContext, full_precision: bool) -> mp.mpf:
    prec = ctx.bits + GUARD_BITS
    with mp.workprec(prec):
        cutoff = mp.mpf(2) ** (-(prec + 8))
        s0, w0 = _halfline_center(prec)
        T = w0 * f(s0)
        max_term = abs(T)
        I_prev = None
        best = [mp.inf]
        for level in range(1, ctx.quad_level + 1):
            S = mp.mpf(0)
            for side in (+1, -1):
                small = 0
                j = 1
                while True:
                    s, w = _halfline_node(prec, level, side, j)
                    term = w * f(s)
                    S += term
                    at = abs(term)
                    if at > max_term:
                        max_term = at
                    small = small + 1 if at < cutoff * max_term else 0
                    if small >= 2:
                        break
                    j += 1
                    if j > _MAX_NODES_PER_LEVEL:
                        raise PrecisionExhaustedError("node budget exhausted")
            T += S
            I_curr = _level_step(level) * T
            done = _maybe_done(I_curr, I_prev, level, best, ctx, full_precision)
            if done is not None:
                return done
            I_prev = I_curr
        return _finish(I_prev, best, ctx)


# ---------------------------------------------------------------------------
# simultaneous integration of a geometric family base * ratio^m
# ---------------------------------------------------------------------------

class _FamilyStream:
    """Shared node/value store for integrating base(x)*ratio(x)^m, m = 0..M-1.

    Values advance member-by-member with one multiply per node; each member's
    level sums are accumulated to its own convergence check, and truncation
    ranges extend on demand when a late member's tail reaches further than the
    earlier ones needed (cheap under a double-exponential map).
    """

    def __init__(self, prec: int, max_level: int):
        self.prec = prec
        self.max_level = max_level
        # (level, side) -> dict with parallel lists: w, rv, val; plus "mval"
        self.store: dict[tuple[int, int], dict] = {}
        self.center = None        # [w, rv, val, mval] or None if skipped
        self.member = -1

    # subclasses provide _raw_node(level, side, i) -> (w, base, ratio) or None

    def _bucket(self, level, side):
        return self.store.setdefault(
            (level, side), {"w": [], "rv": [], "val": [], "mval": []})

    def _ensure(self, level, side, j, m):
        bk = self._bucket(level, side)
        while len(bk["w"]) < j:
            i = len(bk["w"]) + 1
            raw = self._raw_node(level, side, i)
            if raw is None:
                return None
            w, bv, rv = raw
            bk["w"].append(w)
            bk["rv"].append(rv)
            bk["val"].append(bv * rv ** m if m else bv)
            bk["mval"].append(m)
        return bk

    def _advance_and_sum(self, level, side, m, cutoff, scale_box):
        """Walk one side of one level for member m, returning its sum."""
        total = mp.mpf(0)
        small = 0
        j = 1
        max_term = scale_box[0]
        while True:
            bk = self._ensure(level, side, j, m)
            if bk is None:
                break
            idx = j - 1
            lag = m - bk["mval"][idx]
            if lag == 1:
                bk["val"][idx] *= bk["rv"][idx]
            elif lag > 1:
                bk["val"][idx] *= bk["rv"][idx] ** lag
            bk["mval"][idx] = m
            term = bk["w"][idx] * bk["val"][idx]
            total += term
            at = abs(term)
            if at > max_term:
                max_term = at
            small = small + 1 if at < cutoff * max_term else 0
            if small >= 2:
                break
            j += 1
            if j > _MAX_NODES_PER_LEVEL:
                raise PrecisionExhaustedError("node budget exhausted")
        scale_box[0] = max_term
        return total

    def _center_term(self, m):
        if self.center is None:
            return mp.mpf(0)
        c = self.center
        lag = m - c[3]
        if lag >= 1:
            c[2] *= c[1] ** lag if lag > 1 else c[1]
            c[3] = m
        return c[0] * c[2]

    def run(self, count: int, ctx: PrecisionContext) -> list[mp.mpf]:
        cutoff = mp.mpf(2) ** (-(self.prec + 8))
        out = []
        for m in range(count):
            scale_box = [mp.mpf(0)]
            T = self._center_term(m)
            scale_box[0] = abs(T)
            I_prev = None
            best = [mp.inf]
            val = None
            for level in range(1, self.max_level + 1):
                for side in (+1, -1):
                    T += self._advance_and_sum(level, side, m, cutoff, scale_box)
                I_curr = self.h_scale * _level_step(level) * T
                if I_prev is not None and _converged(I_curr, I_prev, ctx.bits,
                                                     level, best):
                    val = +I_curr
                    break
                I_prev = I_curr
            out.append(_finish(I_prev, best, ctx) if val is None else val)
        return out


class _HalflineFamily(_FamilyStream):
    def __init__(self, base, ratio, prec, max_level):
        super().__init__(prec, max_level)
        self.base = base
        self.ratio = ratio
        self.h_scale = mp.mpf(1)
        s0, w0 = _halfline_center(prec)
        # layout: [w, rv, val, mval]
        self.center = [w0, ratio(s0), base(s0), 0]

    def _raw_node(self, level, side, i):
        s, w = _halfline_node(self.prec, level, side, i)
        return w, self.base(s), self.ratio(s)


class _FiniteFamily(_FamilyStream):
    def __init__(self, base, ratio, a, b, prec, max_level, even):
        super().__init__(prec, max_level)
        self.base = base
        self.ratio = ratio
        self.a = a
        self.b = b
        self.mid = (a + b) / 2
        self.h_scale = (b - a) / 2
        self.even = even
        self.floor_delta = mp.mpf(2) ** (-2 * prec)
        self.center = [mp.pi / 2, ratio(self.mid), base(self.mid), 0]

    def _raw_node(self, level, side, i):
        if self.even and side == -1:
            return None
        u, delta, w = _finite_node(self.prec, level, i)
        x = self.mid + side * self.h_scale * u
        if x <= self.a or x >= self.b or self.h_scale * delta < self.floor_delta:
            return None
        if self.even:
            w = 2 * w
        return w, self.base(x), self.ratio(x)


def tanh_sinh_family(base, ratio, count: int, kind: str, ctx: PrecisionContext,
                     *, lo=None, hi=None, even: bool = False) -> list[mp.mpf]:
    """Integrals of base(x)*ratio(x)^m for m = 0..count-1, one shared pass.

    kind="halfline" integrates over (0, inf); kind="finite" over (lo, hi).
    even=True asserts every member is even about the interval midpoint, which
    halves the work (only meaningful for the finite kind).
    """
    if count < 1:
        raise DomainError("count must be >= 1")
    prec = ctx.bits + GUARD_BITS
    with mp.workprec(prec):
        if kind == "halfline":
            stream = _HalflineFamily(base, ratio, prec, ctx.quad_level)
        elif kind == "finite":
            stream = _FiniteFamily(base, ratio, mp.mpf(lo), mp.mpf(hi),
                                   prec, ctx.quad_level, even)
        else:
            raise DomainError(f"unknown family kind {kind!r}")
        return stream.run(count, ctx)


# ---------------------------------------------------------------------------
# special functions
# ---------------------------------------------------------------------------

def gamma(x, ctx: PrecisionContext) -> mp.mpf:
    """Euler gamma at the context precision.  Poles raise DomainError."""
    with ctx.workprec():
        xv = mp.mpf(x)
        if xv <= 0 and xv == mp.floor(xv):
            raise DomainError(f"gamma pole at {xv}")
        return +mp.gamma(xv)


def kummer_u(a, b, z, ctx: PrecisionContext) -> mp.mpf:
    """Confluent hypergeometric U(a, b, z) for a > 0, z > 0, real b.

    Computed from the Laplace-type integral
        U(a,b,z) = (1/Gamma(a)) int_0^inf e^{-z s} s^{a-1} (1+s)^{b-a-1} ds,
    which is the representation the rest of the package is built to trust;
    series forms live in the test suite as cross-checks.
    """
    with ctx.workprec():
        a = mp.mpf(a)
        b = mp.mpf(b)
        z = mp.mpf(z)
        if a <= 0:
            raise DomainError("kummer_u requires a > 0")
        if z <= 0:
            raise DomainError("kummer_u requires z > 0")
        am1 = a - 1
        bma1 = b - a - 1

        def integrand(s):
            return mp.exp(-z * s) * s ** am1 * (1 + s) ** bma1

        val = tanh_sinh_integrate(integrand, 0, mp.inf, ctx)
        return +(val / mp.gamma(a))


# ---------------------------------------------------------------------------
# finite differences
# ---------------------------------------------------------------------------

def central_derivative(f, t, order: int, ctx: PrecisionContext, h=None) -> mp.mpf:
    """Fourth-order five-point central derivative of f at t (order 1 or 2).

    The sample points t, t±h, t±2h must stay inside the domain t > 0.
    """
    with ctx.workprec():
        t = mp.mpf(t)
        h = ctx.fd_step if h is None else mp.mpf(h)
        if t - 2 * h <= 0:
            raise DomainError("stencil leaves the domain t > 0")
        samples = [f(t - 2 * h), f(t - h), f(t) if order == 2 else mp.mpf(0),
                   f(t + h), f(t + 2 * h)]
        return +stencil_derivative(samples, h, order)


def stencil_derivative(values: Sequence, h, order: int) -> mp.mpf:
    """Five-point stencils on precomputed samples [f(t-2h), ..., f(t+2h)].

    The middle sample is ignored for order 1.
    """
    if len(values) != 5:
        raise DomainError("need exactly five samples")
    fm2, fm1, f0, fp1, fp2 = values
    h = mp.mpf(h)
    if order == 1:
        return (fm2 - 8 * fm1 + 8 * fp1 - fp2) / (12 * h)
    if order == 2:
        return (-fm2 + 16 * fm1 - 30 * f0 + 16 * fp1 - fp2) / (12 * h * h)
    raise DomainError("order must be 1 or 2")


# ---------------------------------------------------------------------------
# cubic solver
# ---------------------------------------------------------------------------

def real_cubic_root(c3, c2, c0, ctx: PrecisionContext) -> mp.mpf:
    """The real root in (0, 1) of c3*u^3 + c2*u^2 + c0 = 0.

    Closed-form (Cardano) seed, trigonometric branch when all three roots are
    real, then Newton polishing at full precision with a bisection bracket as
    the safety net.  Raises DomainError if no root is bracketed inside (0, 1).
    """
    with ctx.workprec():
        c3 = mp.mpf(c3)
        c2 = mp.mpf(c2)
        c0 = mp.mpf(c0)
        if c3 == 0:
            raise DomainError("leading coefficient vanishes")

        def poly(u):
            return (c3 * u + c2) * u * u + c0

        def dpoly(u):
            return (3 * c3 * u + 2 * c2) * u

        lo, hi = mp.mpf(0), mp.mpf(1)
        plo, phi = poly(lo), poly(hi)
        if plo == 0 or phi == 0:
            raise DomainError("root sits on the boundary of (0, 1)")
        if mp.sign(plo) == mp.sign(phi):
            raise DomainError("no sign change of the cubic on (0, 1)")

        # depressed form y^3 + p y + q = 0 with u = y - c2/(3 c3)
        shift = c2 / (3 * c3)
        p = -(c2 * c2) / (3 * c3 * c3)
        q = 2 * c2 ** 3 / (27 * c3 ** 3) + c0 / c3
        disc = q * q / 4 + p ** 3 / 27
        u = None
        if disc >= 0:
            rt = mp.sqrt(disc)
            u = mp.cbrt(-q / 2 + rt) + mp.cbrt(-q / 2 - rt) - shift
        elif p < 0:
            # three real roots: y_k = 2 sqrt(-p/3) cos((theta - 2 pi k)/3)
            amp = 2 * mp.sqrt(-p / 3)
            theta = mp.acos(3 * q / (p * amp))
            for k in range(3):
                cand = amp * mp.cos((theta - 2 * mp.pi * k) / 3) - shift
                if 0 < cand < 1:
                    u = cand
                    break
        if u is None or not mp.isfinite(u) or not (0 < u < 1):
            u = (lo + hi) / 2

        # narrow a bracket around the sign change, then polish
        blo, bhi = lo, hi
        for _ in range(2 * ctx.bits):
            mid = (blo + bhi) / 2
            pm = poly(mid)
            if pm == 0:
                return +mid
            if mp.sign(pm) == mp.sign(plo):
                blo = mid
            else:
                bhi = mid
            if bhi - blo < mp.mpf(2) ** (-(ctx.bits // 2)):
                break
        if not (blo < u < bhi):
            u = (blo + bhi) / 2

        for _ in range(64):
            d = dpoly(u)
            if d == 0:
                break
            step = poly(u) / d
            u_new = u - step
            if u_new == u:
                break
            u = u_new
            if abs(step) <= abs(u) * mp.mpf(2) ** (-(ctx.bits + GUARD_BITS - 2)):
                # one more Newton step after touching the floor, then stop
                d = dpoly(u)
                if d != 0:
                    u = u - poly(u) / d
                break
        if not (0 < u < 1):
            raise DomainError("polished root escaped (0, 1)")
        return +u
