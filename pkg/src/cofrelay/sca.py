"""Power allocation by successive convex approximation.

The scaling factors are shifted, delta_i = beta_i + c_i with c_i above the
box half-width, so every variable is strictly positive.  Each epigraph
constraint is then written as f <= g with f, g posynomials in the shifted
variables.  Replacing every g by its local monomial approximation turns the
problem into a geometric program whose feasible set lies inside the true one;
re-anchoring at each solution gives a monotone sequence of epigraph values.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .channel import BetaVector, ChannelGains, PowerBudget, clamp_beta
from .cod import build_effective_system, optimal_combiner
from .cof import det2, equation_noise, log_plus
from .errors import NonConvergence, SingularEquations, ZeroRelayLink
from .gp import GpProblem, Monomial, Posynomial, monomial_approx, solve_gp

SHIFT_FACTOR = 1.1
STEP_TOL = 1e-5
RATE_TOL = 1e-5
MAX_OUTER = 100
START_SCALE = 0.9
WARM_LIFT = 1e-2
DIST_LIFT = 1e-3
CANCEL = True
EXTRAPOLATION_MAX = 64.0


class SignedPoly:
    """Polynomial with real (possibly negative) coefficients over named variables."""

    def __init__(self, terms=None):
        self.terms: dict = {}
        for exps, c in (terms or {}).items():
            self._add(exps, c)

    def _add(self, exps, c):
        if c == 0:
            return
        self.terms[exps] = self.terms.get(exps, 0.0) + c

    @classmethod
    def const(cls, c):
        return cls({(): float(c)})

    @classmethod
    def var(cls, name, power=1):
        return cls({((name, float(power)),): 1.0})

    def __add__(self, other):
        other = other if isinstance(other, SignedPoly) else SignedPoly.const(other)
        out = SignedPoly(self.terms)
        for e, c in other.terms.items():
            out._add(e, c)
        return out

    __radd__ = __add__

    def __neg__(self):
        return self * -1.0

    def __sub__(self, other):
        return self + (-other if isinstance(other, SignedPoly) else -float(other))

    def __mul__(self, other):
        if not isinstance(other, SignedPoly):
            return SignedPoly({e: c * float(other) for e, c in self.terms.items()})
        out = SignedPoly()
        for e1, c1 in self.terms.items():
            for e2, c2 in other.terms.items():
                exps = dict(e1)
                for k, v in e2:
                    exps[k] = exps.get(k, 0.0) + v
                out._add(tuple(sorted((k, v) for k, v in exps.items() if v != 0)), c1 * c2)
        return out

    __rmul__ = __mul__

    def positive(self) -> list:
        return [Monomial(c, dict(e)) for e, c in self.terms.items() if c > 0]

    def negative(self) -> list:
        return [Monomial(-c, dict(e)) for e, c in self.terms.items() if c < 0]


def relocate(lhs: SignedPoly, rhs: SignedPoly, cancel: bool = False) -> tuple:
    """Turn lhs <= rhs into f <= g with both sides posynomials.

    Negative terms of either side move to the opposite side with their sign
    flipped.  With ``cancel`` like terms are first netted across the two
    sides, which gives the smallest g and so the least conservative
    monomial approximation.
    """
    if cancel:
        diff = lhs - rhs
        return Posynomial(diff.positive()), Posynomial(diff.negative())
    f = lhs.positive() + rhs.negative()
    g = rhs.positive() + lhs.negative()
    return Posynomial(f), Posynomial(g)


@dataclass(frozen=True)
class ShiftedPowerVars:
    delta: dict
    shift: dict
    epigraph: float


@dataclass(frozen=True)
class RatioProblem:
    """minimize a monomial epigraph variable subject to f_j <= g_j over a box."""

    epigraph: str
    constraints: tuple
    box: dict
    labels: tuple = ()

    def condense(self, anchor) -> GpProblem:
        """GP obtained by replacing every g_j with its monomial approximation at ``anchor``."""
        ineqs = []
        for f, g in self.constraints:
            g_mono = monomial_approx(g, anchor)
            ineqs.append(f / g_mono)
        return GpProblem(Monomial(1.0, {self.epigraph: 1.0}), tuple(ineqs), (), dict(self.box))

    def violations(self, point) -> list:
        return [f(point) / g(point) for f, g in self.constraints]


def default_shift(budget: PowerBudget) -> tuple:
    return tuple(SHIFT_FACTOR * m for m in budget.beta_limits())


def _psi_pair(snr_p, n, ga, gb, z, delta, shift, eps_name):
    """psi_1 and psi_2 for one receiver with gains (ga, gb) and equation z."""
    P = snr_p
    da, db = SignedPoly.var(delta[0]), SignedPoly.var(delta[1])
    ca, cb = shift
    eps = SignedPoly.var(eps_name)
    za, zb = z
    nz = za * za + zb * zb
    ga2, gb2, gab = ga * ga, gb * gb, ga * gb * za * zb
    psi1 = (2.0 * P * eps * (ga2 * ca * da + gb2 * cb * db)
            + P * nz * (ga2 * (da * da + ca * ca) + gb2 * (db * db + cb * cb))
            + 2.0 * P * (ga2 * za * za * ca * da + gb2 * zb * zb * cb * db
                         + gab * (cb * da + ca * db))
            + n * nz)
    psi2 = (eps * (n + P * ga2 * (da * da + ca * ca) + P * gb2 * (db * db + cb * cb))
            + 2.0 * P * nz * (ga2 * ca * da + gb2 * cb * db)
            + P * (ga2 * za * za * (da * da + ca * ca) + gb2 * zb * zb * (db * db + cb * cb)
                   + 2.0 * gab * (da * db + ca * cb)))
    return psi1, psi2


def _cross_pair(snr, ga, gb, z, delta, shift, eps_name):
    """Equation-noise constraint written with the two-dimensional cross product.

    ||z||^2 (1 + u ||g||^2) - u (g.z)^2 = ||z||^2 + u (g_a z_b - g_b z_a)^2, so
    eps (1 + u ||g||^2) >= ||z||^2 + u (g_a z_b - g_b z_a)^2 is the same
    constraint without the two large, nearly cancelling sides of the psi
    form, which keeps the monomial approximation accurate at high snr.
    """
    ba, bb = (SignedPoly.var(d) - c for d, c in zip(delta, shift))
    eps = SignedPoly.var(eps_name)
    za, zb = z
    cross = ba * (ga * zb) - bb * (gb * za)
    lhs = float(za * za + zb * zb) + snr * cross * cross
    rhs = eps * (1.0 + snr * (ga * ga * ba * ba + gb * gb * bb * bb))
    return relocate(lhs, rhs, CANCEL)


def build_cof_power_problem(ch: ChannelGains, budget: PowerBudget, k, t, shift=None,
                            form: str = "psi") -> RatioProblem:
    """Epigraph power problem of the relay compute-and-forward strategy.

    Variables: ``da``, ``db``, ``dr`` (shifted scaling factors) and ``eps``
    (the epigraph value).  The three constraints are the destination
    equation t, the relay equation k and the relay forwarding floor.
    ``form`` selects how the equation constraints are written: "psi" uses
    the psi-function pair, "cross" the equivalent cross-product form.
    """
    if form not in ("psi", "cross"):
        raise ValueError(f"form must be psi or cross, got {form!r}")
    if abs(det2(k, t)) < 1:
        raise SingularEquations(f"det(k, t) = 0 for k={tuple(k)}, t={tuple(t)}")
    shift = default_shift(budget) if shift is None else tuple(shift)
    lims = budget.beta_limits()
    if any(c <= m for c, m in zip(shift, lims)):
        raise ValueError("shift constants must exceed the box half-widths")
    p, n, snr = budget.p, budget.n, budget.snr
    names = ("da", "db", "dr")
    cons = []
    for (ga, gb), z in (((ch.h_ad, ch.h_bd), t), ((ch.h_ar, ch.h_br), k)):
        if form == "cross":
            cons.append(_cross_pair(snr, ga, gb, z, names[:2], shift[:2], "eps"))
            continue
        psi1, psi2 = _psi_pair(p, n, ga, gb, z, names[:2], shift[:2], "eps")
        cons.append(relocate(psi1, psi2))
    cr = shift[2]
    dr = SignedPoly.var("dr")
    eps = SignedPoly.var("eps")
    f3 = n + 2.0 * p * ch.h_rd ** 2 * cr * eps * dr
    g3 = eps * (n + p * ch.h_rd ** 2 * (dr * dr + cr * cr))
    cons.append(relocate(f3, g3))

    box = {nm: (c - m, c + m) for nm, c, m in zip(names, shift, lims)}
    scale = max(1.0, *(l * l for l in lims[:2]))
    # the epigraph value is at least the smallest eigenvalue bound of each equation
    lo_t = (t[0] ** 2 + t[1] ** 2) / (1.0 + snr * scale * float(ch.h_d @ ch.h_d))
    lo_k = (k[0] ** 2 + k[1] ** 2) / (1.0 + snr * scale * float(ch.h_r @ ch.h_r))
    lo_f = 1.0 / (1.0 + snr * ch.h_rd ** 2 * lims[2] ** 2)
    hi = max(t[0] ** 2 + t[1] ** 2, k[0] ** 2 + k[1] ** 2, 1.0)
    box["eps"] = (0.5 * max(lo_t, lo_k, lo_f), 2.0 * hi)
    return RatioProblem("eps", tuple(cons), box, ("destination", "relay", "forward"))


def cof_epigraph(ch: ChannelGains, budget: PowerBudget, k, t, beta: BetaVector) -> float:
    """max of the three right-hand sides: equation noises and the forwarding floor."""
    snr = budget.snr
    bs = beta.beta_s
    n_t = equation_noise(bs * ch.h_d, snr, t)
    n_k = equation_noise(bs * ch.h_r, snr, k)
    floor = 1.0 / (1.0 + snr * ch.h_rd ** 2 * beta.beta_r ** 2)
    return max(n_t, n_k, floor)


@dataclass(frozen=True)
class ScaResult:
    beta: BetaVector
    objective: float
    iterations: int
    trace: tuple
    kkt_residual: float
    alpha_t: Optional[tuple] = None
    alpha_k: Optional[tuple] = None

    def __iter__(self):
        if self.alpha_t is None:
            return iter((self.beta, self.objective))
        return iter((self.beta.beta_s, self.alpha_t, self.alpha_k, self.objective))


def _emit(sink, row):
    if sink is not None:
        sink.write(f"{row[0]},{row[1]!r},{row[2]!r}\n")


def _extrapolate(problem, names, origin, cand, cand_obj, anchor):
    """Push further along the SCA step while the exact objective keeps falling.

    Any point with tight auxiliaries is a valid anchor, so this only speeds
    up progress along flat valleys and never breaks monotonicity.
    """
    best, best_obj = cand, cand_obj
    scale = 2.0
    while scale <= EXTRAPOLATION_MAX:
        trial = dict(best)
        for nm in names:
            lo, hi = problem.box[nm]
            v = origin[nm] + scale * (cand[nm] - origin[nm])
            trial[nm] = min(max(v, lo), hi)
        trial, val = anchor(trial)
        if not val < best_obj:
            break
        best, best_obj = trial, val
        scale *= 2.0
    return best, best_obj


def _sca_loop(problem, names, point, true_obj, sink, eps, max_iter, tighten=None, lifts=None,
              extrapolate=True, rate_tol=RATE_TOL):
    """Generic SCA iteration on a RatioProblem.

    ``point`` is the starting assignment, ``true_obj`` maps an assignment to
    the exact epigraph value and ``tighten`` (optional) resets auxiliary
    variables to their tight values.  Every anchor is tight, hence feasible
    for the true constraints, so the condensed GP admits it and the
    epigraph sequence cannot increase.  ``lifts`` are relative increases
    applied to the warm start only, making it strictly feasible.
    Returns (point, objective, iterations, trace, kkt).
    """
    lifts = {problem.epigraph: WARM_LIFT, **(lifts or {})}
    tighten = tighten or (lambda pt: pt)

    def anchor(pt):
        pt = tighten(dict(pt))
        val = float(true_obj(pt))
        pt[problem.epigraph] = val
        return pt, val

    point, obj = anchor(point)
    trace = [(0, obj, 0.0)]
    _emit(sink, trace[0])
    kkt = math.nan
    for it in range(1, max_iter + 1):
        gp = problem.condense(point)
        x0 = {nm: min(v * (1.0 + lifts.get(nm, 0.0)), problem.box[nm][1])
              for nm, v in point.items()}
        sol = solve_gp(gp, x0=x0)
        cand, new_obj = anchor(sol.assignment)
        if extrapolate and new_obj <= obj:
            cand, new_obj = _extrapolate(problem, names, point, cand, new_obj, anchor)
        step = math.sqrt(sum((cand[nm] - point[nm]) ** 2 for nm in names))
        if new_obj > obj:
            # the condensed problem admits the previous anchor, so an increase is solver noise
            kkt = sol.kkt_residual if math.isnan(kkt) else kkt
            return point, obj, it, trace, kkt
        kkt = sol.kkt_residual
        gain = 0.25 * math.log2(obj / new_obj) if new_obj > 0 else math.inf
        point, obj = cand, new_obj
        trace.append((it, obj, step))
        _emit(sink, trace[-1])
        if step <= eps or gain <= rate_tol:
            return point, obj, it, trace, kkt
    raise NonConvergence(f"SCA did not converge in {max_iter} iterations",
                         best=(point, obj, max_iter, trace, kkt))


def sca_power_cof(ch: ChannelGains, budget: PowerBudget, k, t, beta0: Optional[BetaVector] = None,
                  eps: float = STEP_TOL, max_iter: int = MAX_OUTER, sink=None,
                  form: str = "cross") -> ScaResult:
    """Minimize the CoF epigraph value over the scaling factors for fixed (k, t).

    The relay factor only enters through the forwarding floor, which falls
    as |beta_r| grows, so every anchor puts it at full power.
    """
    problem = build_cof_power_problem(ch, budget, k, t, form=form)
    shift = default_shift(budget)
    beta0 = clamp_beta(beta0 if beta0 is not None else BetaVector.corner(budget, START_SCALE), budget)
    names = ("da", "db", "dr")

    def to_beta(pt):
        return clamp_beta(BetaVector(*(float(pt[nm] - c) for nm, c in zip(names, shift))), budget)

    def true_obj(pt):
        return cof_epigraph(ch, budget, k, t, to_beta(pt))

    relay_full = problem.box["dr"][1]

    def tighten(pt):
        pt["dr"] = relay_full
        return pt

    start = {nm: b + c for nm, b, c in zip(names, beta0.as_array(), shift)}
    try:
        point, obj, it, trace, kkt = _sca_loop(problem, names, start, true_obj, sink, eps,
                                               max_iter, tighten=tighten)
    except NonConvergence as exc:
        point, obj, it, trace, kkt = exc.best
        exc.best = ScaResult(to_beta(point), obj, it, tuple(trace), kkt)
        raise
    return ScaResult(to_beta(point), obj, it, tuple(trace), kkt)


# --- compute-at-destination --------------------------------------------------

def _distortion_constraint(ch, budget, deltas, shift, dist):
    """dist >= the compression distortion at equality, multiplied out."""
    n, snr = budget.n, budget.snr
    kappa = n * n / (ch.h_rd ** 2 * budget.p_r)
    beta2 = [(d - c) * (d - c) for d, c in zip(deltas, shift)]
    hd2 = (ch.h_ad ** 2, ch.h_bd ** 2)
    hr2 = (ch.h_ar ** 2, ch.h_br ** 2)
    cross2 = (ch.h_ar * ch.h_bd - ch.h_br * ch.h_ad) ** 2
    q_d = 1.0 + snr * (hd2[0] * beta2[0] + hd2[1] * beta2[1])
    x_num = (1.0 + snr * ((hr2[0] + hd2[0]) * beta2[0] + (hr2[1] + hd2[1]) * beta2[1])
             + snr * snr * cross2 * beta2[0] * beta2[1])
    return relocate(kappa * x_num, dist * q_d)


def _source_box(budget, shift):
    lims = budget.beta_limits()[:2]
    return {nm: (c - m, c + m) for nm, c, m in zip(("da", "db"), shift, lims)}


def _distortion_box(ch, budget):
    kappa = budget.n ** 2 / (ch.h_rd ** 2 * budget.p_r)
    scale = max(1.0, *(l * l for l in budget.beta_limits()[:2]))
    return (0.5 * kappa, 2.0 * kappa * (1.0 + budget.snr * scale * float(ch.h_r @ ch.h_r)))


def build_cod_joint_problem(ch: ChannelGains, budget: PowerBudget, k, t, shift=None) -> RatioProblem:
    """Compute-at-destination power problem with the combiners eliminated.

    With optimal combiners the noise of equation c is a ratio of
    polynomials in the scaling, the distortion ``dist`` and snr:

        (||c||^2 + u X_c + u e Y_c) / (1 + u A + u e B + u^2 e C),  e = N/(N + dist)

    where X_c, Y_c are squared cross products of c with the direct and relay
    gain vectors, A, B their squared norms and C the squared cross product
    of the two.  Multiplying by (N + dist) gives one polynomial constraint
    per equation; the noise grows with dist, so the distortion constraint
    can stay an inequality.
    """
    if abs(det2(k, t)) < 1:
        raise SingularEquations(f"det(k, t) = 0 for k={tuple(k)}, t={tuple(t)}")
    if ch.h_rd == 0.0:
        raise ZeroRelayLink("compute-at-destination needs a live relay-destination link")
    shift = default_shift(budget)[:2] if shift is None else tuple(shift)[:2]
    lims = budget.beta_limits()[:2]
    if any(c <= m for c, m in zip(shift, lims)):
        raise ValueError("shift constants must exceed the box half-widths")
    n, u = budget.n, budget.snr
    deltas = (SignedPoly.var("da"), SignedPoly.var("db"))
    dist, theta = SignedPoly.var("dist"), SignedPoly.var("theta")
    ba, bb = (d - c for d, c in zip(deltas, shift))
    gd = (ba * ch.h_ad, bb * ch.h_bd)
    gr = (ba * ch.h_ar, bb * ch.h_br)

    def cross(v, w):
        return v[0] * w[1] - v[1] * w[0]

    def sq(x):
        return x * x

    scale_n = dist + n  # N + dist, so e (N + dist) = N
    den = (scale_n * (1.0 + u * (sq(gd[0]) + sq(gd[1])))
           + n * u * (sq(gr[0]) + sq(gr[1])) + n * u * u * sq(cross(gd, gr)))
    cons = []
    for z in (t, k):
        zc = (SignedPoly.const(z[0]), SignedPoly.const(z[1]))
        num = (scale_n * (float(z[0] ** 2 + z[1] ** 2) + u * sq(cross(gd, zc)))
               + n * u * sq(cross(gr, zc)))
        cons.append(relocate(num, theta * den, CANCEL))
    cons.append(_distortion_constraint(ch, budget, deltas, shift, dist))

    box = _source_box(budget, shift)
    box["dist"] = _distortion_box(ch, budget)
    s2 = max(1.0, *(l * l for l in lims))
    worst_den = (1.0 + u * s2 * (float(ch.h_d @ ch.h_d) + float(ch.h_r @ ch.h_r))
                 + u * u * s2 * s2 * (ch.h_ad * ch.h_br - ch.h_bd * ch.h_ar) ** 2)
    norms = [float(z[0] ** 2 + z[1] ** 2) for z in (t, k)]
    box["theta"] = (0.5 * min(norms) / worst_den, 2.0 * max(norms))
    return RatioProblem("theta", tuple(cons), box, ("equation_t", "equation_k", "distortion"))


def build_cod_power_problem(ch: ChannelGains, budget: PowerBudget, k, t, alpha_t, alpha_k,
                            shift=None) -> RatioProblem:
    """Epigraph power problem of compute-at-destination for fixed combiners.

    Variables: ``da``, ``db`` (shifted source scaling), ``dist`` (the
    compression distortion, kept as an upper-bounding variable) and ``theta``
    (the epigraph value).  Constraints: one per equation bounding the
    combiner-noise objective divided by snr, and the distortion constraint
    multiplied out by its denominator.
    """
    if abs(det2(k, t)) < 1:
        raise SingularEquations(f"det(k, t) = 0 for k={tuple(k)}, t={tuple(t)}")
    shift = default_shift(budget)[:2] if shift is None else tuple(shift)[:2]
    lims = budget.beta_limits()[:2]
    if any(c <= m for c, m in zip(shift, lims)):
        raise ValueError("shift constants must exceed the box half-widths")
    p, n, snr = budget.p, budget.n, budget.snr
    d_a, d_b = SignedPoly.var("da"), SignedPoly.var("db")
    dist, theta = SignedPoly.var("dist"), SignedPoly.var("theta")
    deltas = (d_a, d_b)

    cons = []
    for z, alpha in ((t, alpha_t), (k, alpha_k)):
        a1, a2 = alpha
        w = (a1 * ch.h_ad + a2 * ch.h_ar, a1 * ch.h_bd + a2 * ch.h_br)
        lhs = SignedPoly.const((a1 * a1 + a2 * a2) / snr) + (a2 * a2 / p) * dist
        for wi, zi, d, c in zip(w, z, deltas, shift):
            # (beta_i w_i - z_i)^2 with beta_i = d - c
            lhs = lhs + (wi * wi) * (d * d) - (2.0 * wi * (wi * c + zi)) * d + (wi * c + zi) ** 2
        cons.append(relocate(lhs, theta))

    cons.append(_distortion_constraint(ch, budget, deltas, shift, dist))

    box = _source_box(budget, shift)
    box["dist"] = _distortion_box(ch, budget)
    d_over_n_max = box["dist"][1] / n
    floor = max((a[0] ** 2 + a[1] ** 2) / snr for a in (alpha_t, alpha_k))
    worst = 0.0
    for z, alpha in ((t, alpha_t), (k, alpha_k)):
        a1, a2 = alpha
        w = (abs(a1 * ch.h_ad) + abs(a2 * ch.h_ar), abs(a1 * ch.h_bd) + abs(a2 * ch.h_br))
        resid = sum((m * wi + abs(zi)) ** 2 for m, wi, zi in zip(lims, w, z))
        worst = max(worst, resid + (a1 * a1 + a2 * a2 * (1.0 + d_over_n_max)) / snr)
    box["theta"] = (0.5 * floor if floor > 0 else 0.5 * min(1.0, worst), 2.0 * worst)
    return RatioProblem("theta", tuple(cons), box, ("equation_t", "equation_k", "distortion"))


def cod_epigraph(ch, budget, k, t, beta_s, alpha_t, alpha_k) -> float:
    """max over the two equations of the combiner noise / snr, distortion at equality."""
    sys = build_effective_system(ch, budget, beta_s)
    vals = []
    for z, a in ((t, alpha_t), (k, alpha_k)):
        res = sys.g.T @ np.asarray(a) - np.asarray(z, dtype=float)
        vals.append(float(res @ res) + (a[0] ** 2 * sys.n_d[0] + a[1] ** 2 * sys.n_d[1]) / sys.snr)
    return max(vals)


def cod_optimal_epigraph(ch, budget, k, t, beta_s) -> tuple:
    """Epigraph value with the combiners re-optimized at beta_s, and the combiners."""
    sys = build_effective_system(ch, budget, beta_s)
    a_t, a_k = optimal_combiner(sys, t), optimal_combiner(sys, k)
    return cod_epigraph(ch, budget, k, t, beta_s, a_t, a_k), a_t, a_k


def sca_power_cod(ch: ChannelGains, budget: PowerBudget, k, t, beta_s0=None,
                  eps: tuple = (STEP_TOL, RATE_TOL), max_iter: int = MAX_OUTER,
                  sink=None, method: str = "joint") -> ScaResult:
    """Minimize the compute-at-destination epigraph value over the source scaling.

    ``method="joint"`` runs one SCA on the problem with the combiners
    eliminated (see build_cod_joint_problem); ``method="alternating"``
    alternates exact combiner updates with an SCA at fixed combiners.  Both
    return the exact combiners at the final scaling.
    """
    if method == "joint":
        return _sca_cod_joint(ch, budget, k, t, beta_s0, eps, max_iter, sink)
    if method == "alternating":
        return _sca_cod_alternating(ch, budget, k, t, beta_s0, eps, max_iter, sink)
    raise ValueError(f"unknown method {method!r}")


def _clamp_pair(beta_s, budget):
    lims = budget.beta_limits()
    return tuple(min(max(float(b), -m), m) for b, m in zip(beta_s, lims))


def _distortion_tightener(ch, budget, problem, to_bs):
    lo, hi = problem.box["dist"]

    def tighten(pt):
        d = build_effective_system(ch, budget, to_bs(pt)).d
        pt["dist"] = min(max(d, lo), hi)
        return pt
    return tighten


def _sca_cod_joint(ch, budget, k, t, beta_s0, eps, max_iter, sink) -> ScaResult:
    lims = budget.beta_limits()
    if beta_s0 is None:
        beta_s0 = (START_SCALE * lims[0], START_SCALE * lims[1])
    beta_s = _clamp_pair(beta_s0, budget)
    problem = build_cod_joint_problem(ch, budget, k, t)
    shift = default_shift(budget)[:2]
    names = ("da", "db")

    def to_bs(pt):
        return _clamp_pair([pt[nm] - c for nm, c in zip(names, shift)], budget)

    def true_obj(pt):
        return cod_optimal_epigraph(ch, budget, k, t, to_bs(pt))[0]

    start = {nm: b + c for nm, b, c in zip(names, beta_s, shift)}
    tighten = _distortion_tightener(ch, budget, problem, to_bs)

    def finish(point, obj, it, trace, kkt):
        bs = to_bs(point)
        _, a_t, a_k = cod_optimal_epigraph(ch, budget, k, t, bs)
        return ScaResult(BetaVector(bs[0], bs[1], lims[2]), obj, it, tuple(trace), kkt, a_t, a_k)

    try:
        return finish(*_sca_loop(problem, names, start, true_obj, sink, eps[0], max_iter,
                                 tighten, {"dist": DIST_LIFT}))
    except NonConvergence as exc:
        exc.best = finish(*exc.best)
        raise


def _sca_cod_alternating(ch, budget, k, t, beta_s0, eps, max_iter, sink) -> ScaResult:
    """Alternate combiner updates with an SCA over the source scaling factors.

    Each round fixes the combiners at their optimum for the current scaling,
    runs the inner SCA, then re-optimizes the combiners; rounds stop when
    the rate changes by at most ``eps[1]``.
    """
    lims = budget.beta_limits()
    if beta_s0 is None:
        beta_s0 = (START_SCALE * lims[0], START_SCALE * lims[1])
    beta_s = tuple(min(max(float(b), -m), m) for b, m in zip(beta_s0, lims))
    shift = default_shift(budget)[:2]
    names = ("da", "db")
    obj, a_t, a_k = cod_optimal_epigraph(ch, budget, k, t, beta_s)
    trace = [(0, obj, 0.0)]
    _emit(sink, trace[0])
    kkt = math.nan
    total = 0

    def to_bs(pt):
        return tuple(min(max(pt[nm] - c, -m), m) for nm, c, m in zip(names, shift, lims))

    for outer in range(1, max_iter + 1):
        problem = build_cod_power_problem(ch, budget, k, t, a_t, a_k)

        def true_obj(pt, a_t=a_t, a_k=a_k):
            return cod_epigraph(ch, budget, k, t, to_bs(pt), a_t, a_k)

        start = {nm: b + c for nm, b, c in zip(names, beta_s, shift)}
        tighten = _distortion_tightener(ch, budget, problem, to_bs)
        try:
            point, _, it, inner, inner_kkt = _sca_loop(problem, names, start, true_obj, None,
                                                       eps[0], max_iter, tighten,
                                                       {"dist": DIST_LIFT})
        except NonConvergence as exc:
            point, _, it, inner, inner_kkt = exc.best
        total += it
        for row in inner[1:]:
            trace.append((len(trace), row[1], row[2]))
            _emit(sink, trace[-1])
        if not math.isnan(inner_kkt):
            kkt = inner_kkt
        new_bs = to_bs(point)
        new_obj, new_at, new_ak = cod_optimal_epigraph(ch, budget, k, t, new_bs)
        if new_obj > obj:
            break
        rate_change = 0.25 * abs(log_plus(1.0 / new_obj) - log_plus(1.0 / obj))
        beta_s, obj, a_t, a_k = new_bs, new_obj, new_at, new_ak
        trace.append((len(trace), obj, 0.0))
        _emit(sink, trace[-1])
        if rate_change <= eps[1]:
            break
    else:
        raise NonConvergence("alternating CoD power allocation did not converge",
                             best=ScaResult(BetaVector(*beta_s, lims[2]), obj, total,
                                            tuple(trace), kkt, a_t, a_k))
    return ScaResult(BetaVector(beta_s[0], beta_s[1], lims[2]), obj, total, tuple(trace),
                     kkt, a_t, a_k)
