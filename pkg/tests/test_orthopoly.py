"""Moments, Hankel factorization and recurrence data.

The frozen literals were produced by an independent route: moments from a
generic adaptive quadrature, Hankel determinants from LU, monic coefficients
from a direct linear solve.  Everything here must reproduce them.
"""

import pytest
from mpmath import mp

from pjlab.orthopoly import (
    WeightParams,
    build_moments,
    build_recurrence_table,
    ladder_integrals,
    moment_closed_form,
    moments_by_quadrature,
    polynomial_coeffs,
    weight_value,
)
from pjlab.precision import DomainError, PrecisionContext, tanh_sinh_integrate
from conftest import PAIRS, make_params, rel_gap, table_at

# (alpha, t) = (1, 1) unless a test says otherwise
MU0 = ("0.37379233941510402783467301356417998770190541922847512958225354939"
       "24382812898957699289104357389106312")
MU2 = ("0.04667787718183064157158423967028692711666253591880607882635830805"
       "664656999820388383940769823077649541")
MU10 = ("0.0011683582853200169149630318835422160693577736906912895458460589"
        "06587183367290652474717143459359072451")
BETA5 = ("0.1965182362577168235189024408492320314962376889634059335646980766"
         "68345683183137208538137652")
H3 = ("0.001324009393803800783115998463235055983872046433451065929862236986"
      "55124579472588910842742361")
P5 = ("-0.65096892315848384070062975588630756276379884874118477609191499099"
      "3357909768513668713726136")
P4 = ("-0.46218877988099877814324121194897945578727872291641435592047607734"
      "7794293387889189679251325")
R3 = ("3.8314297039435622151226426527428199834541246331786217079115093759766"
      "5840609617095310956888")
SMALL_R3 = ("0.83238883975789545954039905995138807177040346308392504163828958"
            "0773446773058818601847294461")


@pytest.fixture(scope="module")
def table256(ctx256):
    return table_at("1", "1", 12, ctx256)


# ---------------------------------------------------------------------------
# weight
# ---------------------------------------------------------------------------

def test_weight_positive_even_and_vanishing(ctx256):
    params = make_params(ctx256, "1", "1")
    with ctx256.workprec():
        x = mp.mpf("0.7")
        assert weight_value(params, x, ctx256) > 0
        assert weight_value(params, x, ctx256) == weight_value(params, -x, ctx256)
        # essential singularity kills every polynomial order at the edge
        assert weight_value(params, mp.mpf("0.999999"), ctx256) < mp.mpf("1e-100000")


def test_weight_params_validate():
    ctx = PrecisionContext(bits=128)
    with pytest.raises(ValueError):
        WeightParams(alpha=ctx.mpf(0), t=ctx.mpf(1))
    with pytest.raises(ValueError):
        WeightParams(alpha=ctx.mpf(1), t=ctx.mpf(-1))


# ---------------------------------------------------------------------------
# moments
# ---------------------------------------------------------------------------

def test_moment_oracles(ctx256):
    # agreement is capped by the 256-bit build (~86 digits), not the oracle
    table = build_moments(make_params(ctx256, "1", "1"), 10, ctx256)
    assert rel_gap(table.mu[0], MU0) <= mp.mpf("1e-82")
    assert rel_gap(table.mu[2], MU2) <= mp.mpf("1e-82")
    assert rel_gap(table.mu[10], MU10) <= mp.mpf("1e-82")


def test_odd_moments_vanish_exactly(ctx256):
    table = build_moments(make_params(ctx256, "1/2", "5/2"), 9, ctx256)
    assert all(table.mu[k] == 0 for k in range(1, 10, 2))


def test_even_moments_positive_decreasing(ctx256):
    table = build_moments(make_params(ctx256, "2", "1/2"), 20, ctx256)
    evens = table.mu[::2]
    assert all(m > 0 for m in evens)
    assert all(a > b for a, b in zip(evens, evens[1:]))


@pytest.mark.parametrize("alpha,t", PAIRS)
def test_moment_dual_path(alpha, t, ctx256):
    params = make_params(ctx256, alpha, t)
    closed = build_moments(params, 12, ctx256)
    quad = moments_by_quadrature(params, 12, ctx256)
    for k in range(13):
        assert rel_gap(closed.mu[k], quad[k]) <= mp.mpf(2) ** -(256 - 20)


def test_single_closed_form_matches_family(ctx256):
    params = make_params(ctx256, "1", "5/2")
    table = build_moments(params, 8, ctx256)
    for k in (0, 4, 8):
        got = moment_closed_form(params, k, ctx256)
        assert rel_gap(got, table.mu[k]) <= mp.mpf(2) ** -(256 - 20)


def test_companion_table_is_t_derivative(ctx256):
    """d mu_k/dt equals minus the same moment taken at alpha - 1."""
    params = make_params(ctx256, "1", "1")
    table = build_moments(params, 4, ctx256, companion=True)
    with ctx256.workprec():
        h = mp.mpf(2) ** -40
        for k in (0, 2, 4):
            def at(tv):
                return moment_closed_form(
                    WeightParams(alpha=params.alpha, t=tv), k, ctx256)
            fd = (at(params.t + h) - at(params.t - h)) / (2 * h)
            # central difference is O(h^2); that is the binding error here
            assert rel_gap(fd, -table.mu_companion[k]) <= mp.mpf(2) ** -75


def test_moment_domain_guard(ctx256):
    with pytest.raises(DomainError):
        build_moments(make_params(ctx256, "1", "1"), -1, ctx256)


# ---------------------------------------------------------------------------
# recurrence table
# ---------------------------------------------------------------------------

def test_exact_initial_values(table256):
    assert table256.beta[0] == 0
    assert table256.p[0] == 0
    assert table256.p[1] == 0
    assert table256.r[0] == 0
    assert table256.log_d[0] == 0


def test_pivots_positive_and_beta_positive(table256):
    assert all(h > 0 for h in table256.h)
    assert all(b > 0 for b in table256.beta[1:])


def test_beta_is_exact_p_difference(table256):
    # the table builds p by exact cumulative sums, so no rounding slack;
    # the subtraction must be formed at table precision to see that
    with mp.workprec(table256.bits + 64):
        for n in range(table256.n_max + 1):
            assert table256.beta[n] == table256.p[n] - table256.p[n + 1]


def test_log_d_is_pivot_cumsum(table256):
    bits = table256.bits
    with mp.workprec(bits + 64):
        for n in range(table256.n_max):
            gap = table256.log_d[n + 1] - table256.log_d[n] - mp.log(table256.h[n])
            assert abs(gap) <= mp.mpf(2) ** -(bits - 10)


def test_recurrence_oracles(table256):
    assert rel_gap(table256.beta[5], BETA5) <= mp.mpf("1e-80")
    assert rel_gap(table256.h[3], H3) <= mp.mpf("1e-80")
    assert rel_gap(table256.p[5], P5) <= mp.mpf("1e-80")
    assert rel_gap(table256.p[4], P4) <= mp.mpf("1e-80")
    assert rel_gap(table256.R[3], R3) <= mp.mpf("1e-80")
    assert rel_gap(table256.r[3], SMALL_R3) <= mp.mpf("1e-80")


def test_ladder_integral_route(table256, ctx256):
    """R_n, r_n from their defining integrals against the algebraic table."""
    big, small = ladder_integrals(table256, 3, ctx256)
    assert rel_gap(big, table256.R[3]) <= mp.mpf(2) ** -(256 - 25)
    assert rel_gap(small, table256.r[3]) <= mp.mpf(2) ** -(256 - 25)


def test_table_range_guard(ctx256):
    with pytest.raises(DomainError):
        build_recurrence_table(make_params(ctx256, "1", "1"), 0, ctx256)


# ---------------------------------------------------------------------------
# monic polynomials
# ---------------------------------------------------------------------------

def test_polynomials_monic_with_parity(table256):
    for n in (0, 1, 4, 7):
        pc = polynomial_coeffs(table256, n)
        assert pc.coeffs[n] == 1
        assert all(pc.coeffs[k] == 0 for k in range(n % 2 == 0, n, 2))


def test_three_term_recurrence_pointwise(table256, ctx256):
    with ctx256.workprec():
        z = mp.mpf("0.37")
        for n in range(1, 8):
            lhs = polynomial_coeffs(table256, n + 1)(z)
            rhs = (z * polynomial_coeffs(table256, n)(z)
                   - table256.beta[n] * polynomial_coeffs(table256, n - 1)(z))
            assert abs(lhs - rhs) <= mp.mpf(2) ** -(256 - 15)


def test_orthogonality_and_norms(table256, ctx256):
    # int P3 (P3 + P5) w = h_3 exactly iff P3 _|_ P5; phrasing it this way
    # keeps the quadrature target nonzero, which a relative-error ladder needs
    params = table256.params
    p3 = polynomial_coeffs(table256, 3)
    p5 = polynomial_coeffs(table256, 5)
    with ctx256.workprec():
        mixed = tanh_sinh_integrate(
            lambda y: p3(y) * (p3(y) + p5(y)) * weight_value(params, y),
            -1, 1, ctx256)
        norm3 = tanh_sinh_integrate(
            lambda y: p3(y) ** 2 * weight_value(params, y),
            -1, 1, ctx256)
        assert rel_gap(mixed, table256.h[3]) <= mp.mpf(2) ** -(256 - 30)
        assert rel_gap(norm3, table256.h[3]) <= mp.mpf(2) ** -(256 - 30)
