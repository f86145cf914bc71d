"""Continuum (equilibrium-measure) side: support, density, series, fits."""

import dataclasses

import pytest
from mpmath import mp

from pjlab import (
    DegenerateInputError,
    DomainError,
    PrecisionContext,
    UnfittedConstantError,
    beta_expansion,
    check_equilibrium,
    decay_fit,
    density,
    density_mass,
    expansion_eval,
    fit_logd_constants,
    free_energy_expansion,
    logd_expansion,
    multiplier_expansion,
    p_expansion,
    sigma_expansion,
    solve_support,
    support_root_radical,
)

from conftest import make_params, rel_gap

# root in (0,1) of 22 u^3 - u^2 - 1 = 0 (the support cubic at alpha=1, t=1,
# n=10), frozen from a 110-digit bisection run
U_110 = ("0.37269587463936376414682697947632159077090152969962008609"
         "42916340213930872895972867497056240308031616")

DEEP_GRID = (40, 60, 80, 100, 120, 140, 160)


@pytest.fixture(scope="module")
def ctx():
    return PrecisionContext(bits=256)


@pytest.fixture(scope="module")
def measure(ctx):
    return solve_support(make_params(ctx, "1", "1"), 10, ctx)


# ---------------------------------------------------------------------------
# support endpoint
# ---------------------------------------------------------------------------

def test_support_root_oracle():
    ctx384 = PrecisionContext(bits=384)
    m = solve_support(make_params(ctx384, "1", "1"), 10, ctx384)
    assert rel_gap(m.u, U_110, bits=384) <= mp.mpf("1e-95")


def test_support_u_b_relation(measure):
    with mp.workprec(320):
        assert 0 < measure.u < 1
        assert 0 < measure.b < 1
        assert abs(measure.u ** 2 + measure.b ** 2 - 1) <= mp.mpf(2) ** -250


@pytest.mark.parametrize("alpha,t,n", [("1", "1", 10), ("1/2", "1", 5),
                                       ("2", "5/2", 3)])
def test_radical_route_agrees_with_iteration(alpha, t, n, ctx):
    params = make_params(ctx, alpha, t)
    m = solve_support(params, n, ctx)
    radical = support_root_radical(params, n, ctx)
    assert m.xi is not None
    assert rel_gap(m.u, radical) <= mp.mpf(2) ** -216


def test_degenerate_cubic_at_t_twice_alpha(ctx):
    # t = 2 alpha kills the quadratic term: u = cbrt(t / (2(n+alpha)))
    m = solve_support(make_params(ctx, "1", "2"), 7, ctx)
    assert rel_gap(m.u, "0.5") <= mp.mpf(2) ** -240


def test_radical_route_domain(ctx):
    params = make_params(ctx, "1/2", "5")
    m = solve_support(params, "0.01", ctx)
    assert m.xi is None
    assert 0 < m.u < 1
    with pytest.raises(DomainError):
        support_root_radical(params, "0.01", ctx)


def test_particle_number_guard(ctx):
    with pytest.raises(DomainError):
        solve_support(make_params(ctx, "1", "1"), 0, ctx)


# ---------------------------------------------------------------------------
# density and equilibrium property
# ---------------------------------------------------------------------------

def test_density_shape(measure, ctx):
    with ctx.workprec():
        assert density(measure, measure.b, ctx) == 0
        assert density(measure, -measure.b, ctx) == 0
        assert density(measure, 0, ctx) > 0
        x = measure.b / 2
        assert rel_gap(density(measure, x, ctx),
                       density(measure, -x, ctx)) <= mp.mpf(2) ** -240
        with pytest.raises(DomainError):
            density(measure, measure.b * (1 + mp.mpf(2) ** -50), ctx)


def test_density_mass_matches_particle_number(measure, ctx):
    mass = density_mass(measure, ctx)
    assert rel_gap(mass, "10") <= mp.mpf("1e-30")


def test_equilibrium_constancy(measure, ctx):
    with ctx.workprec():
        xs = [measure.b * mp.mpf(f) / 3 for f in (0, 1, -1, 2, -2)]
    reports = check_equilibrium(measure, xs, ctx, "1e-20")
    assert len(reports) == 5
    for rep in reports:
        assert rep.relation == "EQUILIBRIUM"
        assert rep.n == 10
        assert rep.passed, f"rel={rep.relative}"


def test_equilibrium_sample_guard(measure, ctx):
    with pytest.raises(DomainError):
        check_equilibrium(measure, [measure.b], ctx, "1e-20")


# ---------------------------------------------------------------------------
# large-n series structure
# ---------------------------------------------------------------------------

def _coeff(series, exponent_thirds):
    with mp.workprec(series.bits + 32):
        target = mp.mpf(exponent_thirds) / 3
        for e, c in series.coefficients:
            if e == target:
                return c
    raise AssertionError(f"series lacks exponent {exponent_thirds}/3")


def test_beta_series_structure(ctx):
    series = beta_expansion(make_params(ctx, "1", "1"), ctx)
    assert series.truncation_order == 8
    with mp.workprec(320):
        assert _coeff(series, 0) == mp.mpf(1) / 4
        # the n^{-1/3} and n^{-1} corrections vanish identically
        assert _coeff(series, -1) == 0
        assert _coeff(series, -3) == 0


def test_beta_series_extra_zeros_at_degenerate_t(ctx):
    series = beta_expansion(make_params(ctx, "1", "2"), ctx)
    assert _coeff(series, -4) == 0
    assert _coeff(series, -7) == 0


def test_p_series_structure(ctx):
    series = p_expansion(make_params(ctx, "1", "1"), ctx)
    assert series.truncation_order == 4
    with mp.workprec(320):
        assert _coeff(series, 3) == -mp.mpf(1) / 4
        assert _coeff(series, 2) == 0


def test_sigma_series_leading_term(ctx):
    series = sigma_expansion(make_params(ctx, "1", "1"), ctx)
    with mp.workprec(320):
        lead = _coeff(series, 4)
        target = -3 / mp.cbrt(4)
        assert rel_gap(lead, target) <= mp.mpf(2) ** -240


def test_multiplier_series_leading_term(ctx):
    series = multiplier_expansion(make_params(ctx, "1", "1"), ctx)
    with mp.workprec(320):
        assert rel_gap(_coeff(series, 3), mp.log(4)) <= mp.mpf(2) ** -240


def test_partial_sum_truncation(ctx):
    series = beta_expansion(make_params(ctx, "1", "1"), ctx)
    with mp.workprec(320):
        assert expansion_eval(series, 50, truncation=0) == mp.mpf(1) / 4
    with pytest.raises(DomainError):
        expansion_eval(series, 50, truncation=9)


def test_unfitted_constants_guard(ctx):
    params = make_params(ctx, "1", "1")
    for series in (logd_expansion(params, ctx), free_energy_expansion(params, ctx)):
        assert series.unknown_slots
        with pytest.raises(UnfittedConstantError):
            expansion_eval(series, 100)
    fitted = logd_expansion(params, ctx).with_constants(c1="0", c0="0")
    assert not fitted.unknown_slots
    expansion_eval(fitted, 100)
    with pytest.raises(DomainError):
        logd_expansion(params, ctx).with_constants(nonsense="1")


# ---------------------------------------------------------------------------
# decay and constant fits
# ---------------------------------------------------------------------------

def test_decay_fit_recovers_synthetic_power(ctx):
    series = beta_expansion(make_params(ctx, "1", "1"), ctx)
    with ctx.workprec():
        exact = [(n, expansion_eval(series, n) + 3 * mp.mpf(n) ** (-mp.mpf(7) / 3))
                 for n in (40, 60, 80, 120, 160)]
    fit = decay_fit(exact, series)
    assert abs(fit.slope + 7 / 3) < 1e-6
    assert len(fit.used) == 5
    assert fit.excluded == ()


def test_decay_fit_floor_exclusion(ctx):
    series = beta_expansion(make_params(ctx, "1", "1"), ctx)
    with ctx.workprec():
        exact = []
        for n in (40, 60, 80, 120, 160):
            val = expansion_eval(series, n)
            if n != 120:
                val += 3 * mp.mpf(n) ** (-mp.mpf(7) / 3)
            exact.append((n, val))
    fit = decay_fit(exact, series)
    assert fit.excluded == (120,)
    assert len(fit.used) == 4


def test_decay_fit_degenerate_inputs(ctx):
    series = beta_expansion(make_params(ctx, "1", "1"), ctx)
    with ctx.workprec():
        good = [(n, expansion_eval(series, n) + mp.mpf(n) ** -2)
                for n in (40, 50, 60, 70)]
        flat = [(n, expansion_eval(series, n)) for n in (40, 60, 80, 120, 160)]
    with pytest.raises(DegenerateInputError):
        decay_fit(good[:3], series)
    with pytest.raises(DegenerateInputError):
        decay_fit(good, series)           # span < factor 4
    with pytest.raises(DegenerateInputError):
        decay_fit(flat, series)           # everything at the floor


def test_fit_logd_constants_synthetic_recovery(ctx):
    params = make_params(ctx, "1", "1")
    with ctx.workprec():
        truth = logd_expansion(params, ctx).with_constants(
            c1=mp.log(4), c0=mp.mpf(2))
        exact = [(n, expansion_eval(truth, n)) for n in (40, 80, 120, 160)]
    fit = fit_logd_constants(exact, params, ctx)
    assert fit.fit_ns == (120, 160)
    with ctx.workprec():
        ln4 = mp.log(4)
    assert rel_gap(fit.c1, ln4) <= mp.mpf("1e-60")
    assert rel_gap(fit.c0, "2") <= mp.mpf("1e-55")
    assert fit.conjecture_gap <= mp.mpf("1e-60")
    assert len(fit.holdout) == 2
    assert all(err <= mp.mpf("1e-55") for _, err in fit.holdout)


def test_fit_logd_degenerate_inputs(ctx):
    params = make_params(ctx, "1", "1")
    with pytest.raises(DegenerateInputError):
        fit_logd_constants([(40, "1")], params, ctx)
    with pytest.raises(DegenerateInputError):
        fit_logd_constants([(40, "1"), (40, "2")], params, ctx)


# ---------------------------------------------------------------------------
# what limits the measurable decay order on a moderate n-grid
# ---------------------------------------------------------------------------

def test_beta_tail_after_second_order_is_known_terms(deep_table):
    """On n <= 160 the error of the two-term partial sum is dominated by the
    closed-form 4/3-through-8/3 corrections, not by anything unmodeled; the
    observed decay slope is therefore theirs, not the next term's."""
    table, ctx = deep_table
    series = beta_expansion(table.params, ctx)
    with mp.workprec(table.bits + 64):
        for n in DEEP_GRID:
            err = abs(table.beta[n] - expansion_eval(series, n, truncation=2))
            model = abs(expansion_eval(series, n)
                        - expansion_eval(series, n, truncation=2))
            ratio = err / model
            assert mp.mpf("0.95") < ratio < mp.mpf("1.05"), f"n={n} ratio={ratio}"

    fit_exact = decay_fit(((n, table.beta[n]) for n in DEEP_GRID),
                          series, truncation=2)
    fit_model = decay_fit(((n, expansion_eval(series, n)) for n in DEEP_GRID),
                          series, truncation=2)
    assert abs(fit_exact.slope - fit_model.slope) < 0.03
