"""Shared fixtures: the parameter grid and memoized recurrence tables.

Tables go through the same process-wide memo the stencil machinery uses, so
every module sees identical data and nothing is factored twice.
"""

import pytest
from mpmath import mp

from pjlab.orthopoly import WeightParams
from pjlab.painleve import cached_table
from pjlab.precision import PrecisionContext

ALPHAS = ("1/2", "1", "2")
TS = ("1/2", "1", "5/2")
PAIRS = tuple((a, t) for a in ALPHAS for t in TS)


def make_params(ctx: PrecisionContext, alpha, t) -> WeightParams:
    return WeightParams(alpha=ctx.mpf(alpha), t=ctx.mpf(t))


def table_at(alpha, t, n_max: int, ctx: PrecisionContext):
    return cached_table(make_params(ctx, alpha, t), n_max, ctx)


def rel_gap(x, y, bits: int = 256):
    """|x - y| / max(|x|, |y|), 0 when both vanish."""
    with mp.workprec(bits + 64):
        x, y = mp.mpf(x), mp.mpf(y)
        scale = max(abs(x), abs(y))
        if scale == 0:
            return mp.mpf(0)
        return +(abs(x - y) / scale)


@pytest.fixture(scope="session")
def ctx256() -> PrecisionContext:
    return PrecisionContext(bits=256)


@pytest.fixture(scope="session")
def ctx512() -> PrecisionContext:
    return PrecisionContext(bits=512)


@pytest.fixture(scope="session")
def deep_table():
    """(alpha, t) = (1, 1) recurrence data covering the n = 40..160 grid.

    2048 bits: the beta_n truncation errors being fitted sit around 1e-7,
    while the exact values carry ~616 decimal digits of headroom, so the
    fit errors are pure series truncation, never arithmetic noise.
    """
    ctx = PrecisionContext(bits=2048)
    return table_at("1", "1", 161, ctx), ctx
