import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cofrelay.channel import BetaVector, ChannelGains, PowerBudget
from cofrelay.cof import cof_rate
from cofrelay.errors import Infeasible
from cofrelay.integer_select import (LinearizationState, MiqpProblem, branch_and_bound_select,
                                     canonical, cod_miqp, cof_miqp, exhaustive_select, norm_bounds,
                                     problem_bounds, linearized_det_loop,
                                     _approximation_error, _bnb, _linear_cut)

from conftest import channels, unit_beta

UNITS = ((0, 1), (1, 0))


def brute_force(q_t, q_k, floor, radius):
    """Every pair of integer vectors in the square of half-width ``radius``."""
    r = np.arange(-radius, radius + 1)
    a, b = np.meshgrid(r, r, indexing="ij")
    vecs = np.stack([a.ravel(), b.ravel()], axis=1)
    vecs = vecs[np.any(vecs != 0, axis=1)]

    def vals(q):
        return np.einsum("ij,jk,ik->i", vecs, q, vecs)

    vt, vk = vals(q_t), vals(q_k)
    det = vecs[:, None, 0] * vecs[None, :, 1] - vecs[:, None, 1] * vecs[None, :, 0]
    obj = np.maximum(np.maximum(vk[:, None], vt[None, :]), floor)
    obj = np.where(det != 0, obj, np.inf)
    return float(obj.min())


def test_norm_bounds_vanishing_snr():
    b = PowerBudget(1, 1, 1, 1, 1e12)
    assert norm_bounds(ChannelGains(1, 2, 3, 4, 5), b) == pytest.approx((1.0, 1.0), abs=1e-9)


def test_norm_bounds_plug_in():
    b = PowerBudget(1, 1, 1, 1, 0.01)
    assert norm_bounds(ChannelGains(1, 1, 0, 0, 1), b)[0] == pytest.approx(201.0)


def test_miqp_validation():
    with pytest.raises(ValueError):
        MiqpProblem(np.eye(3), np.eye(2))
    with pytest.raises(ValueError):
        MiqpProblem(np.array([[1.0, 0.5], [0.0, 1.0]]), np.eye(2))
    with pytest.raises(ValueError):
        MiqpProblem(-np.eye(2), np.eye(2))
    with pytest.raises(ValueError):
        MiqpProblem(np.eye(2), np.eye(2), det_sign="zero")


def test_exhaustive_identity_forms():
    sol = exhaustive_select(np.eye(2), np.eye(2), 0.0, (10.0, 10.0))
    assert sol.objective == 1.0
    assert {sol.k, sol.t} == set(UNITS)


def test_exhaustive_floor_dominated():
    q = np.array([[1.0, 0.2], [0.2, 0.5]])
    sol = exhaustive_select(q, q, 5.0, (10.0, 10.0))
    assert sol.objective == 5.0
    assert sol.k[0] * sol.t[1] - sol.k[1] * sol.t[0] != 0


def test_canonical_sign():
    assert canonical((-2, 3)) == (2, -3)
    assert canonical((0, -1)) == (0, 1)
    assert canonical((3, -1)) == (3, -1)


@settings(max_examples=150, deadline=None)
@given(channels(), st.sampled_from([0.0, 5.0, 10.0]), unit_beta, unit_beta, unit_beta)
def test_selectors_match_brute_force(ch, s, ba, bb, br):
    budget = PowerBudget.from_db(s)
    problem = cof_miqp(ch, budget, BetaVector(ba, bb, br))
    bounds = problem_bounds(problem)
    radius = int(math.isqrt(int(min(max(norm_bounds(ch, budget)), 49.0))))
    ref = brute_force(problem.q_t, problem.q_k, problem.constant_floor, max(radius, 1))
    ex = exhaustive_select(problem.q_t, problem.q_k, problem.constant_floor, bounds)
    bb_sol = branch_and_bound_select(problem, bounds)
    lin = linearized_det_loop(problem, LinearizationState.from_pair(*UNITS), bounds, certify=False)
    # the brute-force square may be smaller than the search region, never larger
    assert ex.objective <= ref + 1e-12
    if max(norm_bounds(ch, budget)) <= 49.0:
        assert ex.objective == pytest.approx(ref, abs=1e-12)
    assert bb_sol.objective == pytest.approx(ex.objective, abs=1e-12)
    assert lin.objective == pytest.approx(ex.objective, abs=1e-12)


@settings(max_examples=100, deadline=None)
@given(channels(live_relay=True), st.sampled_from([0.0, 10.0, 20.0, 30.0]), unit_beta, unit_beta)
def test_branch_and_bound_matches_exhaustive_for_cod(ch, s, ba, bb):
    problem = cod_miqp(ch, PowerBudget.from_db(s), (ba, bb))
    bounds = problem_bounds(problem)
    ex = exhaustive_select(problem.q_t, problem.q_k, 0.0, bounds)
    assert branch_and_bound_select(problem, bounds).objective == pytest.approx(ex.objective, abs=1e-12)


def test_objective_round_trips_to_rate(rng):
    budget = PowerBudget.from_db(20.0)
    for _ in range(50):
        ch = ChannelGains(*map(float, rng.normal(0, 1, 5)))
        beta = BetaVector(*map(float, rng.uniform(-1, 1, 3)))
        sol = branch_and_bound_select(cof_miqp(ch, budget, beta))
        rate = cof_rate(ch, budget, beta, sol.k, sol.t).rate
        assert rate == pytest.approx(max(0.0, -0.25 * math.log2(sol.objective)), abs=1e-9)


def test_branch_and_bound_identity_nodes():
    problem = MiqpProblem(np.eye(2), np.eye(2))
    bounds = (25.0, 25.0)
    sol = branch_and_bound_select(problem, bounds)
    enumeration = (len([v for v in itertools.product(range(-5, 6), repeat=2)
                        if v != (0, 0) and v[0] ** 2 + v[1] ** 2 <= 25])) ** 2
    assert sol.objective == 1.0
    assert sol.node_count <= enumeration


def test_branch_and_bound_zero_forms():
    problem = MiqpProblem(np.zeros((2, 2)), np.zeros((2, 2)), 0.3)
    sol = branch_and_bound_select(problem, (4.0, 4.0))
    assert sol.objective == 0.3
    assert {sol.k, sol.t} == set(UNITS)


def test_branch_and_bound_is_deterministic(rng):
    budget = PowerBudget.from_db(25.0)
    ch = ChannelGains(*map(float, rng.normal(0, 1, 5)))
    problem = cof_miqp(ch, budget, BetaVector(0.7, -0.4, 1.0))
    assert branch_and_bound_select(problem) == branch_and_bound_select(problem)


@pytest.mark.parametrize("sign", ["plus", "minus"])
def test_signed_determinant(sign):
    q = np.array([[2.0, 0.3], [0.3, 1.0]])
    sol = branch_and_bound_select(MiqpProblem(q, q, det_sign=sign), (9.0, 9.0))
    det = sol.k[0] * sol.t[1] - sol.k[1] * sol.t[0]
    assert det >= 1 if sign == "plus" else det <= -1
    both = branch_and_bound_select(MiqpProblem(q, q), (9.0, 9.0))
    assert sol.objective == both.objective


def test_linearization_state_round_trip():
    state = LinearizationState.from_pair((0, 3), (-2, 1))
    assert state.pair() == ((0, 3), (-2, 1))
    assert state.kappa == (1.0, 3.0)
    assert state.k_tilde == (-1.0, 0.0)
    with pytest.raises(ValueError):
        LinearizationState((0.0, 1.0), (1.0, 1.0))


def test_linearized_fixed_point_converges_at_once(rng):
    # anchored at its own answer, the branch whose sign matches det(k, t) returns
    # the same pair in its first round with zero linearization error
    budget = PowerBudget.from_db(20.0)
    for _ in range(20):
        ch = ChannelGains(*map(float, rng.normal(0, 1, 5)))
        problem = cof_miqp(ch, budget, BetaVector(*map(float, rng.uniform(-1, 1, 3))))
        bounds = problem_bounds(problem)
        first = linearized_det_loop(problem, LinearizationState.from_pair(*UNITS), bounds,
                                    certify=False)
        state = LinearizationState.from_pair(first.k, first.t)
        sign = 1 if first.k[0] * first.t[1] - first.k[1] * first.t[0] > 0 else -1
        solver = _bnb(problem, bounds, _linear_cut(state, sign), [state.pair()])
        assert solver.best_val == pytest.approx(first.objective, abs=1e-14)
        k, t = solver.best
        assert problem.objective(k, t) == pytest.approx(first.objective, abs=1e-14)
        assert _approximation_error(state, first.k, first.t) == 0.0
        again = linearized_det_loop(problem, state, bounds, certify=False)
        assert again.objective == first.objective


def test_linearized_identity_forms():
    problem = MiqpProblem(np.eye(2), np.eye(2))
    sol = linearized_det_loop(problem, LinearizationState((1.0, 1.0), (1.0, 1.0)), (10.0, 10.0),
                              certify=False)
    ex = exhaustive_select(np.eye(2), np.eye(2), 0.0, (10.0, 10.0))
    assert sol.objective == ex.objective == 1.0
    assert {sol.k, sol.t} == set(UNITS)


def test_linearized_mirror_symmetry(rng):
    budget = PowerBudget.from_db(15.0)
    beta = BetaVector(0.8, 0.6, 1.0)
    for _ in range(20):
        g = rng.normal(0, 1, 5)
        ch = ChannelGains(*map(float, g))
        mirror = ChannelGains(g[0], g[1], -g[2], -g[3], g[4])
        a = linearized_det_loop(cof_miqp(ch, budget, beta), LinearizationState.from_pair(*UNITS))
        b = linearized_det_loop(cof_miqp(mirror, budget, beta), LinearizationState.from_pair(*UNITS))
        assert a.objective == pytest.approx(b.objective, abs=1e-14)


def test_infeasible_signed_cut():
    # a zero-radius search region admits no pair at all
    with pytest.raises(Infeasible):
        branch_and_bound_select(MiqpProblem(np.eye(2), np.eye(2)), (0.5, 0.5))


@settings(max_examples=100, deadline=None)
@given(channels(), st.sampled_from([0.0, 10.0, 20.0, 30.0]), unit_beta, unit_beta, unit_beta)
def test_selectors_return_the_same_pair(ch, s, ba, bb, br):
    # ties, e.g. a floor-dominated objective, resolve to the exhaustive choice everywhere
    problem = cof_miqp(ch, PowerBudget.from_db(s), BetaVector(ba, bb, br))
    bounds = problem_bounds(problem)
    ex = exhaustive_select(problem.q_t, problem.q_k, problem.constant_floor, bounds)
    for sol in (branch_and_bound_select(problem, bounds),
                linearized_det_loop(problem, LinearizationState.from_pair(*UNITS), bounds)):
        assert (sol.k, sol.t) == (ex.k, ex.t)


def test_floor_dominated_ties_pick_small_entries():
    ch = ChannelGains(13.8052681197202, 14.307806899347682, 0.3995977999357756,
                      1.1470654740376116, -0.9524575430879887)
    problem = cof_miqp(ch, PowerBudget.from_db(15.0), BetaVector(0.9, 0.9, 0.9))
    sol = linearized_det_loop(problem, LinearizationState.from_pair(*UNITS))
    assert sol.k == (1, 1) and sol.t == (0, 1)
