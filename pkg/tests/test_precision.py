"""Quadrature, special functions, stencils and the cubic solver, checked
against closed forms and values frozen from independent implementations."""

import random

import pytest
from mpmath import mp

from pjlab.precision import (
    GUARD_BITS,
    DomainError,
    PrecisionContext,
    PrecisionExhaustedError,
    central_derivative,
    gamma,
    kummer_u,
    real_cubic_root,
    run_with_escalation,
    stencil_derivative,
    tanh_sinh_family,
    tanh_sinh_integrate,
)
from conftest import rel_gap


# ---------------------------------------------------------------------------
# context plumbing
# ---------------------------------------------------------------------------

def test_context_rejects_low_precision():
    with pytest.raises(ValueError):
        PrecisionContext(bits=64)


def test_context_derived_quantities():
    ctx = PrecisionContext(bits=256)
    assert ctx.fd_step_exponent == 64
    assert ctx.eps == mp.mpf(2) ** -256
    assert ctx.half_eps == mp.mpf(2) ** -128
    assert ctx.decimal_digits == 80
    assert ctx.escalated().bits == 512
    assert ctx.with_bits(384).quad_level == ctx.quad_level


def test_context_parse_is_exact():
    ctx = PrecisionContext(bits=192)
    x = ctx.mpf("1/3")
    with ctx.workprec():
        assert abs(3 * x - 1) <= mp.mpf(2) ** -(192 + GUARD_BITS - 2)


def test_domain_error_is_value_error():
    assert issubclass(DomainError, ValueError)


def test_escalation_retries_then_succeeds():
    seen = []

    def task(ctx):
        seen.append(ctx.bits)
        if ctx.bits < 512:
            raise PrecisionExhaustedError("not enough")
        return ctx.bits

    assert run_with_escalation(task, PrecisionContext(bits=128)) == 512
    assert seen == [128, 256, 512]


def test_escalation_gives_up():
    def task(ctx):
        raise PrecisionExhaustedError("never enough")

    with pytest.raises(PrecisionExhaustedError):
        run_with_escalation(task, PrecisionContext(bits=128), retries=1)


# ---------------------------------------------------------------------------
# tanh-sinh quadrature
# ---------------------------------------------------------------------------

def test_finite_interval_exact_polynomial():
    ctx = PrecisionContext(bits=256)
    val = tanh_sinh_integrate(lambda x: x * x, 0, 1, ctx)
    assert rel_gap(val, "1/3") <= mp.mpf(2) ** -250


def test_halfline_gamma_integral():
    # int_0^inf e^-s s^{-1/2} ds = sqrt(pi)
    ctx = PrecisionContext(bits=256)
    val = tanh_sinh_integrate(lambda s: mp.exp(-s) / mp.sqrt(s), 0, mp.inf, ctx)
    with ctx.workprec():
        assert rel_gap(val, mp.sqrt(mp.pi)) <= mp.mpf(2) ** -250


def test_endpoint_log_singularity():
    ctx = PrecisionContext(bits=256)
    val = tanh_sinh_integrate(mp.log, 0, 1, ctx)
    assert rel_gap(val, -1) <= mp.mpf(2) ** -250


def test_relaxed_mode_meets_contract_floor():
    ctx = PrecisionContext(bits=256)
    val = tanh_sinh_integrate(lambda x: mp.exp(x), 0, 1, ctx,
                              full_precision=False)
    with ctx.workprec():
        assert rel_gap(val, mp.e - 1) <= ctx.half_eps


def test_full_precision_stalls_on_kink():
    # |x - 1/3| is only C^0, so the node ladder cannot reach 2^-(bits+8)
    ctx = PrecisionContext(bits=256)
    with pytest.raises(PrecisionExhaustedError):
        tanh_sinh_integrate(lambda x: abs(x - mp.mpf(1) / 3), 0, 1, ctx)


def test_family_matches_single_integrals_finite():
    ctx = PrecisionContext(bits=192)
    with ctx.workprec():
        base = mp.exp
        ratio = lambda x: x * x
        fam = tanh_sinh_family(base, ratio, 4, "finite", ctx, lo=-1, hi=1)
        for m, got in enumerate(fam):
            want = tanh_sinh_integrate(lambda x: mp.exp(x) * x ** (2 * m),
                                       -1, 1, ctx)
            assert rel_gap(got, want, 192) <= mp.mpf(2) ** -180


def test_family_matches_single_integrals_halfline():
    ctx = PrecisionContext(bits=192)
    with ctx.workprec():
        fam = tanh_sinh_family(lambda s: mp.exp(-s), lambda s: s / (1 + s),
                               3, "halfline", ctx)
        for m, got in enumerate(fam):
            want = tanh_sinh_integrate(
                lambda s: mp.exp(-s) * (s / (1 + s)) ** m, 0, mp.inf, ctx)
            assert rel_gap(got, want, 192) <= mp.mpf(2) ** -180


def test_family_rejects_empty():
    ctx = PrecisionContext(bits=128)
    with pytest.raises(DomainError):
        tanh_sinh_family(mp.exp, lambda x: x, 0, "finite", ctx, lo=0, hi=1)


# ---------------------------------------------------------------------------
# special functions
# ---------------------------------------------------------------------------

def test_gamma_half_integer():
    ctx = PrecisionContext(bits=256)
    with ctx.workprec():
        want = 3 * mp.sqrt(mp.pi) / 4
    assert rel_gap(gamma("5/2", ctx), want) <= mp.mpf(2) ** -250


def test_gamma_pole():
    with pytest.raises(DomainError):
        gamma(-2, PrecisionContext(bits=128))


# frozen from an independent confluent-hypergeometric implementation
KUMMER_CASES = [
    ("1/2", "-1", "1",
     "0.57325775976067243205172610492829305015717636763185037144735142232587469945447491"),
    ("1/2", "0", "1",
     "0.68092059029987814210359791525393472338974451684061208797222364642638848882557916"),
    ("3/2", "-2", "5/2",
     "0.063385263350100200624804459309956767762927504717498592006620619045183744310291818"),
    ("21/2", "-1", "1/2",
     "0.00000000077863727192935597598565829589418405951635829095777844853110309416270827024316804"),
    ("1/2", "-4", "2",
     "0.37834002217725530426582768651525103879033839325224408240054539298103681520590471"),
]


@pytest.mark.parametrize("a,b,z,frozen", KUMMER_CASES)
def test_kummer_u_oracle(a, b, z, frozen):
    ctx = PrecisionContext(bits=256)
    got = kummer_u(ctx.mpf(a), ctx.mpf(b), ctx.mpf(z), ctx)
    assert rel_gap(got, frozen) <= mp.mpf("1e-70")


def test_kummer_u_domain():
    ctx = PrecisionContext(bits=128)
    with pytest.raises(DomainError):
        kummer_u(0, -1, 1, ctx)
    with pytest.raises(DomainError):
        kummer_u(1, -1, -2, ctx)


# ---------------------------------------------------------------------------
# finite differences
# ---------------------------------------------------------------------------

def test_central_derivative_first_order():
    ctx = PrecisionContext(bits=256)
    got = central_derivative(mp.exp, 1, 1, ctx)
    with ctx.workprec():
        assert rel_gap(got, mp.e) <= mp.mpf(2) ** -200


def test_central_derivative_second_order():
    ctx = PrecisionContext(bits=256)
    got = central_derivative(mp.exp, 1, 2, ctx)
    with ctx.workprec():
        # cancellation in the f''-stencil costs ~2h^-2 of the guard budget
        assert rel_gap(got, mp.e) <= mp.mpf(2) ** -140


def test_central_derivative_domain_guard():
    ctx = PrecisionContext(bits=256)
    with pytest.raises(DomainError):
        central_derivative(mp.exp, mp.mpf(2) ** -70, 1, ctx)


def test_stencil_derivative_validates():
    with pytest.raises(DomainError):
        stencil_derivative([1, 2, 3], mp.mpf(1), 1)
    with pytest.raises(DomainError):
        stencil_derivative([1, 2, 3, 4, 5], mp.mpf(1), 3)


def test_stencil_matches_central():
    ctx = PrecisionContext(bits=192)
    with ctx.workprec():
        h = ctx.fd_step
        samples = [mp.sin(1 + j * h) for j in (-2, -1, 0, 1, 2)]
        direct = central_derivative(mp.sin, 1, 2, ctx)
        assert stencil_derivative(samples, h, 2) == direct


# ---------------------------------------------------------------------------
# cubic solver
# ---------------------------------------------------------------------------

# real root of 22 u^3 - u^2 - 1 in (0,1), frozen from a polynomial
# root-finder unrelated to the Cardano/Newton path under test
CUBIC_ROOT_110 = ("0.37269587463936376414682697947632159077090152969962008609"
                  "42916340213930872895972867497056240308031616")


def test_cubic_root_oracle():
    ctx = PrecisionContext(bits=384)
    got = real_cubic_root(ctx.mpf(22), ctx.mpf(-1), ctx.mpf(-1), ctx)
    assert rel_gap(got, CUBIC_ROOT_110, 384) <= mp.mpf("1e-95")


def test_cubic_root_random_residuals():
    ctx = PrecisionContext(bits=256)
    rng = random.Random(20240817)
    drawn = 0
    while drawn < 20:
        c3 = rng.uniform(0.5, 50.0)
        c2 = rng.uniform(-3.0, 3.0)
        c0 = rng.uniform(-5.0, -0.1)
        if c3 + c2 + c0 <= 0:     # need a sign change across (0, 1)
            continue
        drawn += 1
        cs = [ctx.mpf(str(c)) for c in (c3, c2, c0)]
        u = real_cubic_root(*cs, ctx)
        with ctx.workprec():
            res = abs(cs[0] * u ** 3 + cs[1] * u ** 2 + cs[2])
            scale = abs(cs[0]) + abs(cs[1]) + abs(cs[2])
            assert res <= scale * mp.mpf(2) ** -(256 - 8)
            assert 0 < u < 1


def test_cubic_root_requires_bracket():
    ctx = PrecisionContext(bits=128)
    with pytest.raises(DomainError):
        real_cubic_root(ctx.mpf(1), ctx.mpf(1), ctx.mpf(1), ctx)
