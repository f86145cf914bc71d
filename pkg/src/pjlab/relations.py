"""Residual checks for the algebraic structure of the recurrence data.

Each function evaluates one (or a family of) exact identities on a
RecurrenceTable and returns ResidualReport objects.  Residuals are always
formed from the table's own quantities, never re-derived from the identity
being tested, so a pass is evidence and not circularity.
"""

from __future__ import annotations

from dataclasses import dataclass

import mpmath as mp

from .orthopoly import RecurrenceTable, polynomial_coeffs
from .precision import GUARD_BITS, DomainError
from .reports import ResidualReport, make_report


def _wp(table: RecurrenceTable):
    return mp.workprec(table.bits + GUARD_BITS)


# ---------------------------------------------------------------------------
# ladder coefficient rationals
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LadderRational:
    """A_n and B_n as rational functions of z on (-1, 1).

    A_n(z) = (2n+1+2a)/(1-z^2) + R_n/(1-z^2)^2
    B_n(z) = n z/(1-z^2) + z r_n/(1-z^2)^2

    Evaluation runs at the stored bit count regardless of ambient precision.
    """

    n: int
    alpha: mp.mpf
    t: mp.mpf
    R_n: mp.mpf
    r_n: mp.mpf
    bits: int

    def _wp(self):
        return mp.workprec(self.bits + GUARD_BITS)

    def _g(self, z):
        z = mp.mpf(z)
        if abs(z) >= 1:
            raise DomainError("ladder rationals live on |z| < 1")
        return z, 1 - z * z

    def a_value(self, z):
        with self._wp():
            z, g = self._g(z)
            return (2 * self.n + 1 + 2 * self.alpha) / g + self.R_n / g ** 2

    def a_prime(self, z):
        with self._wp():
            z, g = self._g(z)
            return 2 * z * (2 * self.n + 1 + 2 * self.alpha) / g ** 2 \
                + 4 * z * self.R_n / g ** 3

    def b_value(self, z):
        with self._wp():
            z, g = self._g(z)
            return self.n * z / g + z * self.r_n / g ** 2

    def b_prime(self, z):
        with self._wp():
            z, g = self._g(z)
            return self.n * (1 + z * z) / g ** 2 \
                + self.r_n * (1 + 3 * z * z) / g ** 3

    def v_prime(self, z):
        with self._wp():
            z, g = self._g(z)
            return 2 * self.alpha * z / g + 2 * self.t * z / g ** 2


def ladder_rational(table: RecurrenceTable, n: int) -> LadderRational:
    if table.R is None or n >= len(table.R):
        raise DomainError("table lacks R_n at this index")
    return LadderRational(n=n, alpha=table.params.alpha, t=table.params.t,
                          R_n=table.R[n], r_n=table.r[n], bits=table.bits)


# ---------------------------------------------------------------------------
# compatibility identities
# ---------------------------------------------------------------------------

def check_compatibility(table: RecurrenceTable, n: int, tolerance) -> list[ResidualReport]:
    """The six algebraic constraints tying r, R, beta and p together at index n.

    All six need n <= n_max - 2 (they look one or two steps ahead); the three
    that reference R_{n-1} additionally need n >= 1 and are omitted at n = 0.
    """
    if table.R is None:
        raise DomainError("run ladder_quantities first")
    if not (0 <= n <= table.n_max - 2):
        raise DomainError("need 0 <= n <= n_max - 2")
    P = table.params
    out = []
    with _wp(table):
        a2 = 2 * P.alpha
        t = P.t
        r = table.r
        R = table.R
        b = table.beta

        terms = [r[n + 1], r[n], -R[n], 2 * t]
        out.append(_sum_report("S1", table, n, terms, tolerance))

        terms = [r[n + 1], -r[n], -1,
                 -(2 * n - 1 + a2) * b[n], (2 * n + 3 + a2) * b[n + 1]]
        out.append(_sum_report("S22", table, n, terms, tolerance))

        sum_R = mp.fsum(R[j] for j in range(n))
        terms = [n * (n + a2 - 2 * t), -2 * (n + P.alpha) * r[n], sum_R,
                 -(2 * n + 1 + a2) * (2 * n - 1 + a2) * b[n]]
        out.append(_sum_report("S2P3", table, n, terms, tolerance))

        if n >= 1:
            terms = [r[n + 1], -r[n], -b[n + 1] * R[n + 1], b[n] * R[n - 1]]
            out.append(_sum_report("S21", table, n, terms, tolerance))

            terms = [r[n] ** 2, 2 * t * r[n], -b[n] * R[n] * R[n - 1]]
            out.append(_sum_report("S2P1", table, n, terms, tolerance))

            terms = [r[n] ** 2, 2 * (t - n - P.alpha) * r[n], -2 * n * t,
                     (2 * n + 1 + a2) * b[n] * R[n - 1],
                     (2 * n - 1 + a2) * b[n] * R[n]]
            out.append(_sum_report("S2P2", table, n, terms, tolerance))
    return out


def _sum_report(relation, table, n, terms, tolerance) -> ResidualReport:
    residual = mp.fsum(terms)
    scale = mp.fsum(abs(x) for x in terms)
    return make_report(relation, n, table.params, table.bits, residual, scale,
                       tolerance)


# ---------------------------------------------------------------------------
# second-order difference equations
# ---------------------------------------------------------------------------

def residual_beta_difference(table: RecurrenceTable, n: int, tolerance) -> ResidualReport:
    """Quartic-squared difference equation for beta_n (needs 1 <= n <= n_max-1)."""
    if not (1 <= n <= table.n_max - 1):
        raise DomainError("need 1 <= n <= n_max - 1")
    P = table.params
    with _wp(table):
        a = P.alpha
        t = P.t
        na = n + a
        bn = table.beta[n]
        bm = (2 * n - 3 + 2 * a) * table.beta[n - 1]   # beta-tilde_{n-1}
        bp = (2 * n + 3 + 2 * a) * table.beta[n + 1]   # beta-tilde_{n+1}

        lhs_core = ((68 * na ** 2 - 9) * bn ** 3
                    + (12 - 80 * na ** 2 + (14 * n + 5 + 14 * a) * bm
                       + (14 * n - 5 + 14 * a) * bp) * bn ** 2
                    + (24 * na ** 2 + 4 * t * (t - 2 * a) - 3
                       - 2 * (2 * n + 1 + 2 * a) * bm
                       - 2 * (2 * n - 1 + 2 * a) * bp + bm * bp) * bn
                    - 2 * (na ** 2 - t * a))
        lhs = lhs_core ** 2

        f1 = (2 * (2 * n - 1 + 2 * a) * (2 * n + 1 + 2 * a) * bn ** 2
              + ((2 * n + 1 + 2 * a) * bm + (2 * n - 1 + 2 * a) * bp
                 - 2 * (2 * n - 1 + 2 * a) * (2 * n + 1 + 2 * a)) * bn
              + na ** 2 + t * (t - 2 * a))
        f2 = 12 * na * bn ** 2 + (bm + bp - 8 * na) * bn + na
        rhs = 4 * f1 * f2 ** 2

        residual = lhs - rhs
        scale = max(abs(lhs), abs(rhs))
    return make_report("BTD", n, P, table.bits, residual, scale, tolerance)


def residual_p_difference(table: RecurrenceTable, n: int, tolerance) -> ResidualReport:
    """Second-order difference equation for p(n) (needs 1 <= n <= n_max)."""
    if not (1 <= n <= table.n_max):
        raise DomainError("need 1 <= n <= n_max")
    P = table.params
    with _wp(table):
        a = P.alpha
        t = P.t
        pn = table.p[n]
        ptm = (2 * n - 3 + 2 * a) * (table.p[n - 1] - table.p[n])   # p-tilde(n-1)
        ptp = (2 * n + 1 + 2 * a) * (table.p[n] - table.p[n + 1])   # p-tilde(n+1)

        e1 = n + 2 * pn - ptp
        e2 = n - 2 + 4 * t - ptm + ptp
        e3 = (n ** 2 - n * (1 - a) - a + 2 * t - 2 * t ** 2
              - ptm * (n + a - t - ptp) - (n - 1 + 2 * t) * ptp)
        e4 = n - 1 + 2 * t - ptm

        blocks = [
            e1 ** 3,
            e1 ** 2 * e2,
            -2 * e1 * e3,
            -e4 * (2 * n * t - ptp * e4),
            4 * pn ** 2 * ptp,
            2 * pn * (e1 ** 2 + 2 * ptp * e4
                      - 2 * e1 * (n + a - t - ptp) - 2 * n * t),
        ]
        residual = mp.fsum(blocks)
        scale = mp.fsum(abs(x) for x in blocks)
    return make_report("PND", n, P, table.bits, residual, scale, tolerance)


def residual_sigma_difference(table: RecurrenceTable, n: int, tolerance) -> ResidualReport:
    """Second-order difference equation for sigma_n (needs 1 <= n <= n_max-1)."""
    if table.sigma is None:
        raise DomainError("run sigma_values first")
    if not (1 <= n <= table.n_max - 1):
        raise DomainError("need 1 <= n <= n_max - 1")
    P = table.params
    with _wp(table):
        a = P.alpha
        t = P.t
        sm, s0, sp = table.sigma[n - 1], table.sigma[n], table.sigma[n + 1]

        f = ((2 * n + 1 + 2 * a) * sm - (2 * n - 1 + 2 * a) * sp - sm * sp
             - s0 ** 2 + s0 * (sm + sp - 2))
        g = (2 * n - 1 + 2 * a + sm - s0) * (2 * n + 1 + 2 * a + s0 - sp)
        core = (n * (n + 2 * a - 2 * t) - s0) * f \
            - 2 * n * t * (2 * n - 1 + 2 * a) * (2 * n + 1 + 2 * a)

        blocks = [
            core ** 2,
            4 * t * (n + a) * g * core,
            -4 * (n + a) ** 2 * (sm - s0) * (s0 - sp)
            * (n ** 2 + 2 * n * a - s0) * g,
        ]
        residual = mp.fsum(blocks)
        scale = mp.fsum(abs(x) for x in blocks)
    return make_report("SND", n, P, table.bits, residual, scale, tolerance)


# ---------------------------------------------------------------------------
# the polynomial ODE and the lowering relation
# ---------------------------------------------------------------------------

def _sum_aj(table: RecurrenceTable, n: int, z, g):
    """sum_{j<n} A_j(z), in closed form through beta_n and p(n)."""
    P = table.params
    a2 = 2 * P.alpha
    num1 = n * n + n * a2
    num2 = (n * (n + 2 * P.t) - (2 * n + 1 + a2) * table.beta[n]
            + 4 * (n + P.alpha) * table.p[n])
    return num1 / g + num2 / g ** 2


def check_polynomial_ode(table: RecurrenceTable, n: int, z_samples,
                         tolerance) -> list[ResidualReport]:
    """Second-order ODE for the monic P_n at each sample point.

    Returns one report per z; the reported relative is the residual against
    the largest of the three assembled terms at that point.  Needs
    1 <= n <= n_max - 1 (the coefficients use beta_{n+1} through R_n).
    """
    if not (1 <= n <= table.n_max - 1):
        raise DomainError("need 1 <= n <= n_max - 1")
    lad = ladder_rational(table, n)
    pn = polynomial_coeffs(table, n)
    out = []
    with _wp(table):
        dpn = pn.derivative()
        ddpn = dpn.derivative()
        for z in z_samples:
            z = mp.mpf(z)
            g = 1 - z * z
            A = lad.a_value(z)
            Ap = lad.a_prime(z)
            B = lad.b_value(z)
            Bp = lad.b_prime(z)
            S = _sum_aj(table, n, z, g)
            t1 = ddpn(z)
            t2 = -(lad.v_prime(z) + Ap / A) * dpn(z)
            t3 = (Bp - B * Ap / A + S) * pn(z)
            residual = t1 + t2 + t3
            scale = max(abs(t1), abs(t2), abs(t3))
            out.append(make_report("POLY_ODE", n, table.params, table.bits,
                                   residual, scale, tolerance))
    return out


def check_lowering(table: RecurrenceTable, n: int, z_samples,
                   tolerance) -> list[ResidualReport]:
    """Ladder (lowering) relation P_n' = beta_n A_n P_{n-1} - B_n P_n."""
    if not (1 <= n <= table.n_max - 1):
        raise DomainError("need 1 <= n <= n_max - 1")
    lad = ladder_rational(table, n)
    pn = polynomial_coeffs(table, n)
    pm = polynomial_coeffs(table, n - 1)
    out = []
    with _wp(table):
        dpn = pn.derivative()
        bn = table.beta[n]
        for z in z_samples:
            z = mp.mpf(z)
            t1 = dpn(z)
            t2 = lad.b_value(z) * pn(z)
            t3 = -bn * lad.a_value(z) * pm(z)
            residual = t1 + t2 + t3
            scale = max(abs(t1), abs(t2), abs(t3))
            out.append(make_report("LOWERING", n, table.params, table.bits,
                                   residual, scale, tolerance))
    return out
