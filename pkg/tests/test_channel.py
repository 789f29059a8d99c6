import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from cofrelay.channel import (BetaVector, ChannelGains, ChannelVariances, PowerBudget, clamp_beta,
                              db_to_linear, derive_seed, draw_channel, linear_to_db, splitmix64)

NEG_INF = -math.inf


@pytest.mark.parametrize("x_db, expected", [(0, 1.0), (20, 100.0)])
def test_db_to_linear_exact_points(x_db, expected):
    assert db_to_linear(x_db) == expected


def test_db_to_linear_fifteen():
    assert db_to_linear(15) == pytest.approx(31.6227766016838, rel=1e-14)


@given(st.floats(min_value=-100, max_value=100))
def test_db_round_trip(x):
    assert linear_to_db(db_to_linear(x)) == pytest.approx(x, abs=1e-9)


def test_splitmix_reference_value():
    # first output of the SplitMix64 generator seeded with 0
    assert splitmix64(0) == 0xE220A8397B1DCDAF


def test_derive_seed_is_path_dependent():
    assert derive_seed(1, 0, 1) != derive_seed(1, 1, 0)
    assert derive_seed(1, 2) == derive_seed(1, 2)


def test_dead_variances_give_zero_gains():
    ch = draw_channel(ChannelVariances(*([NEG_INF] * 5)), 7)
    assert ch.as_tuple() == (0.0,) * 5
    assert ch.is_dead()


def test_draw_is_deterministic():
    v = ChannelVariances(26, 26, 14, 0, 18)
    assert draw_channel(v, 99) == draw_channel(v, 99)
    assert draw_channel(v, 99) != draw_channel(v, 100)


def test_sample_variance_matches_unit_variance():
    v = ChannelVariances(0, 0, 0, 0, 0)
    draws = np.array([draw_channel(v, derive_seed(3, i)).as_tuple() for i in range(100_000)])
    assert np.all(np.abs(draws.var(axis=0) - 1.0) < 0.03)


def test_variance_scales_standard_deviation():
    a = draw_channel(ChannelVariances(0, 0, 0, 0, 0), 5).as_tuple()
    b = draw_channel(ChannelVariances(20, 20, 20, 20, 20), 5).as_tuple()
    assert np.allclose(np.array(b), 10.0 * np.array(a))


def test_variance_rejects_nan_and_plus_inf():
    with pytest.raises(ValueError):
        ChannelVariances(math.nan, 0, 0, 0, 0)
    with pytest.raises(ValueError):
        ChannelVariances(0, math.inf, 0, 0, 0)


def test_gains_reject_non_finite():
    with pytest.raises(ValueError):
        ChannelGains(math.nan, 0, 0, 0, 0)


@pytest.mark.parametrize("bad", [0.0, -1.0, math.inf, math.nan])
def test_budget_rejects_non_positive(bad):
    with pytest.raises(ValueError):
        PowerBudget(bad, 1, 1, 1, 1)


def test_budget_from_db():
    b = PowerBudget.from_db(15.0)
    assert b.p == 100.0
    assert b.snr == pytest.approx(db_to_linear(15.0), rel=1e-14)
    assert b.beta_limits() == (1.0, 1.0, 1.0)


def test_clamp_feasible_unchanged():
    b = PowerBudget(1, 1, 1, 1, 1)
    beta = BetaVector(0.3, -0.7, 1.0)
    assert clamp_beta(beta, b) == beta


def test_clamp_box_boundaries():
    assert clamp_beta(BetaVector(5, 0, 0), PowerBudget(1, 1, 1, 1, 1)).beta_a == 1.0
    assert clamp_beta(BetaVector(-5, 0, 0), PowerBudget(4, 1, 1, 1, 1)).beta_a == -2.0


@given(st.tuples(*[st.floats(-10, 10)] * 3),
       st.tuples(*[st.floats(0.01, 100)] * 3))
def test_clamp_is_feasible_and_idempotent(vals, caps):
    b = PowerBudget(caps[0], caps[1], caps[2], 1.0, 1.0)
    c = clamp_beta(BetaVector(*vals), b)
    assert c.is_feasible(b)
    assert clamp_beta(c, b) == c


def test_corner_scaling():
    b = PowerBudget(4, 1, 9, 1, 1)
    assert BetaVector.corner(b, 0.5).as_array().tolist() == [1.0, 0.5, 1.5]
