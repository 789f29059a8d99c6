import math

import numpy as np
import pytest

from cofrelay.baselines import optimize_baseline
from cofrelay.channel import BetaVector, ChannelGains, PowerBudget
from cofrelay.cod import cod_rate
from cofrelay.cof import cof_rate
from cofrelay.errors import ZeroRelayLink
from cofrelay.integer_select import cof_miqp
from cofrelay.orchestrate import (DescentResult, _primitive_directions, algorithm_a, algorithm_b,
                                  aligned_start_points, iterations_to_match, multistart_a,
                                  multistart_b, select_integers, start_points)

from conftest import random_channel

DEAD = ChannelGains(0, 0, 0, 0, 0)


def non_decreasing(trace):
    rates = [row[1] for row in trace]
    return all(b >= a - 1e-12 for a, b in zip(rates, rates[1:]))


def test_algorithm_a_dead_channel():
    res = algorithm_a(DEAD, PowerBudget.from_db(20))
    assert res.rate == 0.0 and res.iterations == 1


def test_algorithm_b_dead_channel():
    assert algorithm_b(DEAD, PowerBudget.from_db(20)).rate == 0.0


def test_algorithm_b_needs_relay_link():
    with pytest.raises(ZeroRelayLink):
        algorithm_b(ChannelGains(1, 1, 1, 1, 0), PowerBudget.from_db(20))


def test_algorithm_a_probe_dominance():
    ch = ChannelGains(1, 1, 1, 0, 1)
    budget = PowerBudget.from_db(20.0)
    beta0 = BetaVector.corner(budget, 0.9)
    res = algorithm_a(ch, budget, beta0)
    assert res.rate >= cof_rate(ch, budget, beta0, (1, 0), (0, 1)).rate - 1e-12
    assert res.rate >= cof_rate(ch, budget, BetaVector.corner(budget), (1, 1), (1, 0)).rate - 1e-12
    assert non_decreasing(res.trace)
    assert res.converged


@pytest.mark.parametrize("snr", [0.0, 10.0, 20.0, 30.0])
def test_algorithm_a_round_trip(snr, rng):
    budget = PowerBudget.from_db(snr)
    for _ in range(3):
        ch = random_channel(rng, 3.0)
        res = algorithm_a(ch, budget)
        assert res.beta.is_feasible(budget)
        assert cof_rate(ch, budget, res.beta, res.k, res.t).rate == pytest.approx(res.rate, abs=1e-9)
        assert non_decreasing(res.trace)


@pytest.mark.parametrize("snr", [0.0, 15.0, 30.0])
def test_algorithm_b_round_trip_and_cf_dominance(snr, rng):
    budget = PowerBudget.from_db(snr)
    for _ in range(3):
        ch = random_channel(rng, 3.0)
        res = algorithm_b(ch, budget)
        assert cod_rate(ch, budget, res.beta.beta_s, res.k, res.t).rate == \
            pytest.approx(res.rate, abs=1e-9)
        assert non_decreasing(res.trace)
        cf = optimize_baseline("CF", ch, budget, starts=[res.beta])
        assert res.rate <= cf.rate + 1e-6


def test_integer_methods_agree_inside_descent(rng):
    budget = PowerBudget.from_db(15.0)
    for _ in range(5):
        ch = random_channel(rng, 2.0)
        problem = cof_miqp(ch, budget, BetaVector(0.9, 0.9, 0.9))
        objs = {m: select_integers(problem, m, verify=True).objective
                for m in ("linearized", "branch_and_bound", "exhaustive")}
        assert max(objs.values()) - min(objs.values()) <= 1e-12


def test_select_integers_unknown_method():
    with pytest.raises(ValueError):
        select_integers(cof_miqp(ChannelGains(1, 1, 1, 1, 1), PowerBudget.from_db(10),
                                 BetaVector(1, 1, 1)), "guess")


def test_multistart_reports_best_run(rng):
    budget = PowerBudget.from_db(20.0)
    ch = random_channel(rng, 3.0)
    best, runs = multistart_a(ch, budget, starts=5, seed=3)
    assert len(runs) == 5
    assert best.rate == max(r.rate for r in runs)
    assert all(non_decreasing(r.trace) for r in runs)
    best_b, runs_b = multistart_b(ch, budget, starts=5, seed=3)
    assert best_b.rate == max(r.rate for r in runs_b)
    assert all(non_decreasing(r.trace) for r in runs_b)


def test_start_points_are_deterministic_and_feasible():
    budget = PowerBudget(4, 1, 2, 1, 0.1)
    pts = start_points(budget, 6, seed=11)
    assert pts == start_points(budget, 6, seed=11)
    assert pts[0] == BetaVector.corner(budget, 0.9)
    assert pts[1] == BetaVector.corner(budget)
    assert all(p.is_feasible(budget) for p in pts)


def test_primitive_directions():
    dirs = _primitive_directions(3)
    assert (1, 0) in dirs and (0, 1) in dirs and (1, -1) in dirs
    assert (2, 2) not in dirs and (-1, 1) not in dirs
    assert all(math.gcd(a, b) == 1 for a, b in dirs)


def test_aligned_starts_feasible_and_ranked():
    ch = ChannelGains(math.sqrt(10 ** 2.6), math.sqrt(10 ** 2.6), math.sqrt(10 ** 1.4), 1.0,
                      math.sqrt(10 ** 1.8))
    budget = PowerBudget.from_db(20.0)
    pts = aligned_start_points(ch, budget, "CoF")
    assert pts and all(p.is_feasible(budget) for p in pts)
    # every aligned start makes one scaled gain vector parallel to a small integer vector
    dirs = _primitive_directions(5)
    for p in pts:
        scaled = [p.beta_s * ch.h_r, p.beta_s * ch.h_d]
        assert any(abs(v[0] * d[1] - v[1] * d[0]) <= 1e-9 * np.linalg.norm(v) * math.hypot(*d)
                   for v in scaled for d in dirs)


def test_iterations_to_match():
    beta = BetaVector(1, 1, 1)
    res = DescentResult("CoF", beta, (1, 0), (0, 1), 1.0, 3,
                        ((0, 0.5, beta), (1, 0.8, beta), (2, 0.9995, beta), (3, 1.0, beta)))
    assert iterations_to_match(res, 1.0) == 2
    assert iterations_to_match(res, 2.0) is None
    flat = DescentResult("CoF", beta, (1, 0), (0, 1), 0.0, 1, ((0, 0.0, beta),))
    assert iterations_to_match(flat, 0.0) == 1
