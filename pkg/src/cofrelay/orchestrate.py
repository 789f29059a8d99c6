"""Coordinate descent over integer equations and power scaling.

Both strategies alternate two half-steps that each minimize the same
epigraph value (the worst equation noise), so the rate trace can only go up:
the integer step is solved to global optimality at fixed scaling and the
power step is a monotone SCA started from the incumbent scaling.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .channel import BetaVector, ChannelGains, PowerBudget, clamp_beta, derive_seed
from .cod import cod_rate
from .cof import cof_rate
from .errors import NonConvergence, ZeroRelayLink
from .integer_select import (IntegerSolution, LinearizationState, MiqpProblem, branch_and_bound_select,
                             cod_miqp, cof_miqp, exhaustive_select, linearized_det_loop,
                             problem_bounds)
from .sca import START_SCALE, sca_power_cod, sca_power_cof

log = logging.getLogger(__name__)

MAX_OUTER = 50
DEFAULT_EPS = (1e-5, 1e-5)
UNIT_PAIR = ((0, 1), (1, 0))
INTEGER_METHODS = ("linearized", "branch_and_bound", "exhaustive")
ALIGN_MAX_ENTRY = 5
ALIGN_DISTINCT = 1e-3


@dataclass(frozen=True)
class DescentResult:
    strategy: str
    beta: BetaVector
    k: tuple
    t: tuple
    rate: float
    iterations: int
    trace: tuple
    converged: bool = True


def select_integers(problem: MiqpProblem, method: str = "linearized", previous=UNIT_PAIR,
                    verify: bool = False) -> IntegerSolution:
    """Optimal (k, t) for a fixed-scaling problem with the chosen solver.

    With ``verify`` the answer is cross-checked against the exhaustive
    search; a disagreement is logged and the exhaustive answer is used.
    """
    bounds = problem_bounds(problem)
    if method == "linearized":
        sol = linearized_det_loop(problem, LinearizationState.from_pair(*previous), bounds)
    elif method == "branch_and_bound":
        sol = branch_and_bound_select(problem, bounds)
    elif method == "exhaustive":
        sol = exhaustive_select(problem.q_t, problem.q_k, problem.constant_floor, bounds)
    else:
        raise ValueError(f"unknown integer method {method!r}; choose from {INTEGER_METHODS}")
    if verify and method != "exhaustive":
        ref = exhaustive_select(problem.q_t, problem.q_k, problem.constant_floor, bounds)
        if sol.objective > ref.objective * (1.0 + 1e-12) + 1e-300:
            log.warning("integer selection %s gave %r, exhaustive %r", method, sol.objective,
                        ref.objective)
            sol = ref
    return sol


def _keep_or_switch(problem, current, candidate):
    """Prefer the incumbent pair unless the candidate is strictly better."""
    cur_val = problem.objective(*current)
    if candidate.objective < cur_val:
        return candidate.k, candidate.t
    return current


def _distance(a: BetaVector, b: BetaVector) -> float:
    return float(np.linalg.norm(a.as_array() - b.as_array()))


def _converged(step, change, same_pair, eps) -> bool:
    """Both the scaling step and the rate change are small, or the rate has
    settled with the integer pair unchanged (flat directions of the scaling,
    such as an unused relay power, would otherwise never pass the step test).
    """
    return change <= eps[1] and (step <= eps[0] or same_pair)


def _dead_result(strategy, beta):
    return DescentResult(strategy, beta, UNIT_PAIR[0], UNIT_PAIR[1], 0.0, 1,
                         ((0, 0.0, beta),), True)


def algorithm_a(ch: ChannelGains, budget: PowerBudget, beta0: Optional[BetaVector] = None,
                eps: tuple = DEFAULT_EPS, max_iter: int = MAX_OUTER, verify: bool = True,
                integer_method: str = "linearized", sink=None) -> DescentResult:
    """Maximize the relay compute-and-forward rate by coordinate descent."""
    beta = clamp_beta(beta0 if beta0 is not None else BetaVector.corner(budget, START_SCALE), budget)
    if ch.is_dead():
        return _dead_result("CoF", beta)
    sol = select_integers(cof_miqp(ch, budget, beta), integer_method, verify=verify)
    k, t = sol.k, sol.t
    rate = cof_rate(ch, budget, beta, k, t).rate
    trace = [(0, rate, beta)]
    for it in range(1, max_iter + 1):
        try:
            sca = sca_power_cof(ch, budget, k, t, beta0=beta, sink=sink)
        except NonConvergence as exc:
            sca = exc.best
        new_beta = sca.beta
        if cof_rate(ch, budget, new_beta, k, t).rate < rate:
            new_beta = beta
        problem = cof_miqp(ch, budget, new_beta)
        cand = select_integers(problem, integer_method, (k, t), verify)
        new_k, new_t = _keep_or_switch(problem, (k, t), cand)
        new_rate = cof_rate(ch, budget, new_beta, new_k, new_t).rate
        step, change = _distance(new_beta, beta), abs(new_rate - rate)
        same_pair = (new_k, new_t) == (k, t)
        beta, k, t, rate = new_beta, new_k, new_t, new_rate
        trace.append((it, rate, beta))
        if _converged(step, change, same_pair, eps):
            return DescentResult("CoF", beta, k, t, rate, it, tuple(trace), True)
    log.warning("algorithm A hit the %d-iteration cap", max_iter)
    return DescentResult("CoF", beta, k, t, rate, max_iter, tuple(trace), False)


def _cod_beta(budget, beta_s) -> BetaVector:
    return BetaVector(float(beta_s[0]), float(beta_s[1]), budget.beta_limits()[2])


def algorithm_b(ch: ChannelGains, budget: PowerBudget, beta_s0=None, eps: tuple = DEFAULT_EPS,
                max_iter: int = MAX_OUTER, verify: bool = True,
                integer_method: str = "linearized", sink=None) -> DescentResult:
    """Maximize the compute-at-destination rate by coordinate descent.

    The relay always forwards at full power.  A dead channel returns rate 0;
    a dead relay-destination link with live source links raises ZeroRelayLink.
    """
    lims = budget.beta_limits()
    if beta_s0 is None:
        beta_s0 = (START_SCALE * lims[0], START_SCALE * lims[1])
    beta = clamp_beta(_cod_beta(budget, beta_s0), budget)
    if ch.is_dead():
        return _dead_result("CoD", beta)
    if ch.h_rd == 0.0:
        raise ZeroRelayLink("compute-at-destination needs a live relay-destination link")
    sol = select_integers(cod_miqp(ch, budget, beta.beta_s), integer_method, verify=verify)
    k, t = sol.k, sol.t
    rate = cod_rate(ch, budget, beta.beta_s, k, t).rate
    trace = [(0, rate, beta)]
    for it in range(1, max_iter + 1):
        try:
            sca = sca_power_cod(ch, budget, k, t, beta_s0=beta.beta_s, sink=sink)
        except NonConvergence as exc:
            sca = exc.best
        new_beta = _cod_beta(budget, sca.beta.beta_s)
        if cod_rate(ch, budget, new_beta.beta_s, k, t).rate < rate:
            new_beta = beta
        problem = cod_miqp(ch, budget, new_beta.beta_s)
        cand = select_integers(problem, integer_method, (k, t), verify)
        new_k, new_t = _keep_or_switch(problem, (k, t), cand)
        new_rate = cod_rate(ch, budget, new_beta.beta_s, new_k, new_t).rate
        step, change = _distance(new_beta, beta), abs(new_rate - rate)
        same_pair = (new_k, new_t) == (k, t)
        beta, k, t, rate = new_beta, new_k, new_t, new_rate
        trace.append((it, rate, beta))
        if _converged(step, change, same_pair, eps):
            return DescentResult("CoD", beta, k, t, rate, it, tuple(trace), True)
    log.warning("algorithm B hit the %d-iteration cap", max_iter)
    return DescentResult("CoD", beta, k, t, rate, max_iter, tuple(trace), False)


def start_points(budget: PowerBudget, count: int, seed: int = 0) -> list:
    """Deterministic starting scalings: 0.9 x corner, the corner, then seeded draws in the box."""
    lims = np.array(budget.beta_limits())
    pts = [BetaVector.corner(budget, START_SCALE), BetaVector.corner(budget)][:max(count, 0)]
    for i in range(len(pts), count):
        rng = np.random.Generator(np.random.PCG64(derive_seed(seed, i)))
        pts.append(BetaVector(*(rng.uniform(-1.0, 1.0, 3) * lims)))
    return pts


def _primitive_directions(max_entry: int) -> list:
    """Canonical primitive integer pairs with entries bounded by ``max_entry``."""
    out = []
    for a in range(0, max_entry + 1):
        for b in range(-max_entry, max_entry + 1):
            if (a, b) == (0, 0) or (a == 0 and b < 0) or math.gcd(a, b) != 1:
                continue
            out.append((a, b))
    return out


def _aligned_scaling(gains, direction, lims):
    """Source scaling that makes the effective gains parallel to ``direction``, or None."""
    raw = []
    for g, d, lim in zip(gains, direction, lims):
        if d == 0:
            raw.append(0.0)
        elif g == 0.0:
            return None
        else:
            raw.append(d / g)
    raw = np.array(raw)
    scale = np.max(np.abs(raw) / np.asarray(lims))
    return raw / scale


def aligned_start_points(ch: ChannelGains, budget: PowerBudget, strategy: str,
                         max_entry: int = ALIGN_MAX_ENTRY) -> list:
    """Scalings aligned with short integer equations, best first.

    Each candidate scales the sources so the effective gains toward the relay
    (or the destination) point along a short integer vector, which makes that
    vector a nearly noise-free equation.  Candidates are ranked by the rate
    reached after the exact integer selection at that scaling; the coordinate
    descent can rarely leave the basin of its first integer pair, so these
    starts reach equation pairs a corner start never sees.
    """
    lims = budget.beta_limits()
    relay_max = lims[2]
    scored = []
    for gains in (ch.h_r, ch.h_d):
        for direction in _primitive_directions(max_entry):
            bs = _aligned_scaling(gains, direction, lims[:2])
            if bs is None:
                continue
            beta = clamp_beta(BetaVector(float(bs[0]), float(bs[1]), relay_max), budget)
            if strategy == "CoF":
                sol = branch_and_bound_select(cof_miqp(ch, budget, beta))
                rate = cof_rate(ch, budget, beta, sol.k, sol.t).rate
            else:
                sol = branch_and_bound_select(cod_miqp(ch, budget, beta.beta_s))
                rate = cod_rate(ch, budget, beta.beta_s, sol.k, sol.t).rate
            scored.append((rate, len(scored), beta))
    scored.sort(key=lambda e: (-e[0], e[1]))
    return [b for _, _, b in scored]


def _descent_starts(ch, budget, strategy, count, seed):
    """The default start, then the best distinct aligned starts, then seeded draws."""
    pts = start_points(budget, 1, seed)[:count]
    if count > 1 and not ch.is_dead() and (strategy == "CoF" or ch.h_rd != 0.0):
        for beta in aligned_start_points(ch, budget, strategy):
            if len(pts) >= count:
                break
            if all(_distance(beta, p) > ALIGN_DISTINCT for p in pts):
                pts.append(beta)
    if len(pts) < count:
        extra = start_points(budget, count, seed)[1:]
        pts += extra[:count - len(pts)]
    return pts


def _best(results):
    # highest rate; earliest start wins ties so the choice is deterministic
    return max(enumerate(results), key=lambda ir: (ir[1].rate, -ir[0]))[1]


def multistart_a(ch, budget, starts: int = 5, seed: int = 0, **kwargs) -> tuple:
    """Run algorithm A from several starts; returns (best, all results)."""
    runs = [algorithm_a(ch, budget, b, **kwargs) for b in _descent_starts(ch, budget, "CoF", starts, seed)]
    return _best(runs), runs


def multistart_b(ch, budget, starts: int = 5, seed: int = 0, **kwargs) -> tuple:
    """Run algorithm B from several starts; returns (best, all results)."""
    runs = [algorithm_b(ch, budget, b.beta_s, **kwargs)
            for b in _descent_starts(ch, budget, "CoD", starts, seed)]
    return _best(runs), runs


def iterations_to_match(result: DescentResult, target: float, tol: float = 1e-3) -> Optional[int]:
    """First outer iteration whose rate is within ``tol`` of ``target`` (None if never)."""
    for it, rate, _ in result.trace[1:]:
        if abs(rate - target) <= tol:
            return it
    if len(result.trace) == 1 and abs(result.rate - target) <= tol:
        return result.iterations
    return None
