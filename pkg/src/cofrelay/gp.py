"""Posynomial algebra and a log-barrier solver for geometric programs.

A geometric program minimizes a posynomial subject to posynomial <= 1 and
monomial = 1 constraints over positive variables.  With y = log x every
posynomial becomes a log-sum-exp of affine functions, so the problem is
convex; it is solved here with a damped Newton log-barrier method after
eliminating the affine equalities.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Optional

import numpy as np
from scipy.optimize import nnls

from .errors import InfeasibleGP, MaxIterations

BARRIER_START = 1.0
BARRIER_END = 1e-9
BARRIER_FACTOR = 10.0
NEWTON_MAX = 100
TOTAL_NEWTON_MAX = 2000
GRAD_TOL = 1e-11
VALUE_EPS = 1e-14
STAGE_CENTER_TOL = 1e-6
PHASE_ONE_MARGIN = 1e-6
BOX_PULL_IN = 1e-3
DUAL_ACTIVE = 1e-6


@dataclass(frozen=True)
class Monomial:
    """c * prod_i x_i^{a_i} with c > 0."""

    coefficient: float
    exponents: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self):
        if not (self.coefficient > 0 and math.isfinite(self.coefficient)):
            raise ValueError(f"monomial coefficient must be positive, got {self.coefficient}")
        clean = {k: float(v) for k, v in self.exponents.items() if v != 0}
        object.__setattr__(self, "exponents", clean)

    def __call__(self, x: Mapping[str, float]) -> float:
        v = self.coefficient
        for name, a in self.exponents.items():
            v *= x[name] ** a
        return v

    def key(self) -> tuple:
        return tuple(sorted(self.exponents.items()))

    def __mul__(self, other):
        if isinstance(other, Monomial):
            exps = dict(self.exponents)
            for k, v in other.exponents.items():
                exps[k] = exps.get(k, 0.0) + v
            return Monomial(self.coefficient * other.coefficient, exps)
        if isinstance(other, Posynomial):
            return Posynomial([self]) * other
        return Monomial(self.coefficient * float(other), self.exponents)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Monomial):
            return self * other ** -1
        return Monomial(self.coefficient / float(other), self.exponents)

    def __pow__(self, p: float):
        return Monomial(self.coefficient ** p, {k: v * p for k, v in self.exponents.items()})

    def __add__(self, other):
        return Posynomial([self]) + other

    __radd__ = __add__


@dataclass(frozen=True)
class Posynomial:
    """Sum of monomials; like terms are merged on construction."""

    terms: tuple

    def __init__(self, terms):
        merged: dict = {}
        for m in terms:
            if isinstance(m, (int, float)):
                if m == 0:
                    continue
                m = Monomial(float(m))
            k = m.key()
            merged[k] = merged.get(k, 0.0) + m.coefficient
        if not merged:
            raise ValueError("a posynomial needs at least one term")
        object.__setattr__(self, "terms", tuple(Monomial(c, dict(k)) for k, c in merged.items()))

    def __call__(self, x: Mapping[str, float]) -> float:
        return sum(m(x) for m in self.terms)

    @property
    def variables(self) -> set:
        return {k for m in self.terms for k in m.exponents}

    def __add__(self, other):
        if isinstance(other, Posynomial):
            return Posynomial(self.terms + other.terms)
        if isinstance(other, Monomial):
            return Posynomial(self.terms + (other,))
        if other == 0:
            return self
        return Posynomial(self.terms + (Monomial(float(other)),))

    __radd__ = __add__

    def __mul__(self, other):
        if isinstance(other, Posynomial):
            return Posynomial([a * b for a in self.terms for b in other.terms])
        if isinstance(other, Monomial):
            return Posynomial([a * other for a in self.terms])
        return Posynomial([a * float(other) for a in self.terms])

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Monomial):
            inv = other ** -1
            return Posynomial([a * inv for a in self.terms])
        return Posynomial([a / float(other) for a in self.terms])


def variable(name: str) -> Monomial:
    return Monomial(1.0, {name: 1.0})


def posy(*parts) -> Posynomial:
    """Sum of monomials, posynomials and positive constants; zero constants are dropped."""
    terms = []
    for p in parts:
        if isinstance(p, Posynomial):
            terms.extend(p.terms)
        elif isinstance(p, Monomial):
            terms.append(p)
        elif p != 0:
            terms.append(Monomial(float(p)))
    return Posynomial(terms)


def monomial_approx(g, point: Mapping[str, float]) -> Monomial:
    """Best local monomial approximation of a posynomial at a positive point.

    With weights w_j = u_j(x0) / g(x0), the weighted AM-GM inequality gives
    g(x) >= prod_j (u_j(x) / w_j)^{w_j}; the bound is tight at x0 and shares
    its logarithmic gradient there.
    """
    if isinstance(g, Monomial):
        return g
    vals = np.array([m(point) for m in g.terms])
    total = vals.sum()
    if not total > 0:
        raise ValueError("posynomial must be positive at the anchor")
    weights = vals / total
    log_coef = 0.0
    exps: dict = {}
    for w, m in zip(weights, g.terms):
        if w == 0:
            continue
        log_coef += w * (math.log(m.coefficient) - math.log(w))
        for k, a in m.exponents.items():
            exps[k] = exps.get(k, 0.0) + w * a
    return Monomial(math.exp(log_coef), exps)


@dataclass(frozen=True)
class GpProblem:
    objective: object
    ineq_constraints: tuple = ()
    mono_constraints: tuple = ()
    box: Mapping[str, tuple] = field(default_factory=dict)

    def __post_init__(self):
        for name, (lo, hi) in self.box.items():
            if not (0 < lo <= hi):
                raise ValueError(f"box for {name} must satisfy 0 < lo <= hi, got {(lo, hi)}")
        used = _as_posy(self.objective).variables
        for c in self.ineq_constraints:
            used |= _as_posy(c).variables
        for m in self.mono_constraints:
            used |= set(m.exponents)
        missing = used - set(self.box)
        if missing:
            raise ValueError(f"variables without a box: {sorted(missing)}")

    @property
    def variables(self) -> list:
        return sorted(self.box)


def _as_posy(p) -> Posynomial:
    return p if isinstance(p, Posynomial) else Posynomial([p])


@dataclass(frozen=True)
class LseForm:
    """log(sum_j exp(a_j . y + b_j)), the log-space image of a posynomial."""

    a: np.ndarray
    b: np.ndarray

    def value(self, y) -> float:
        z = self.a @ y + self.b
        zmax = z.max()
        return float(zmax + math.log(np.exp(z - zmax).sum()))

    def derivatives(self, y):
        z = self.a @ y + self.b
        zmax = z.max()
        e = np.exp(z - zmax)
        s = e.sum()
        p = e / s
        grad = self.a.T @ p
        hess = (self.a.T * p) @ self.a - np.outer(grad, grad)
        return float(zmax + math.log(s)), grad, hess


@dataclass(frozen=True)
class ConvexProgram:
    """minimize objective(y) s.t. ineqs(y) <= 0, eq_a y + eq_b = 0, log_lo <= y <= log_hi."""

    variables: tuple
    objective: LseForm
    ineqs: tuple
    eq_a: np.ndarray
    eq_b: np.ndarray
    log_lo: np.ndarray
    log_hi: np.ndarray


def _lse_of(p, index) -> LseForm:
    p = _as_posy(p)
    a = np.zeros((len(p.terms), len(index)))
    b = np.zeros(len(p.terms))
    for j, m in enumerate(p.terms):
        b[j] = math.log(m.coefficient)
        for k, v in m.exponents.items():
            a[j, index[k]] = v
    return LseForm(a, b)


def to_convex_form(p: GpProblem) -> ConvexProgram:
    names = tuple(p.variables)
    index = {k: i for i, k in enumerate(names)}
    eq_a = np.zeros((len(p.mono_constraints), len(names)))
    eq_b = np.zeros(len(p.mono_constraints))
    for r, m in enumerate(p.mono_constraints):
        eq_b[r] = math.log(m.coefficient)
        for k, v in m.exponents.items():
            eq_a[r, index[k]] = v
    lo = np.array([math.log(p.box[k][0]) for k in names])
    hi = np.array([math.log(p.box[k][1]) for k in names])
    return ConvexProgram(names, _lse_of(p.objective, index),
                         tuple(_lse_of(c, index) for c in p.ineq_constraints),
                         eq_a, eq_b, lo, hi)


@dataclass(frozen=True)
class GpSolution:
    assignment: dict
    objective: float
    kkt_residual: float
    newton_steps: int

    def __iter__(self):
        return iter((self.assignment, self.objective))


class _Barrier:
    """Log-barrier machinery on the equality-reduced coordinates y = y0 + Z w.

    All inequality log-sum-exp forms are stacked into one term matrix with
    group offsets so values, gradients and Hessians are single numpy passes.
    """

    def __init__(self, prog: ConvexProgram):
        self.prog = prog
        n = len(prog.variables)
        if prog.eq_a.shape[0]:
            y0, *_ = np.linalg.lstsq(prog.eq_a, -prog.eq_b, rcond=None)
            if np.abs(prog.eq_a @ y0 + prog.eq_b).max() > 1e-9:
                raise InfeasibleGP("monomial equality constraints are inconsistent")
            _, sv, vt = np.linalg.svd(prog.eq_a)
            rank = int((sv > 1e-12 * max(1.0, sv.max())).sum())
            self.z = vt[rank:].T
        else:
            y0, self.z = np.zeros(n), np.eye(n)
        self.y0 = y0
        # box rows in reduced coordinates: c w <= d
        self.c = np.vstack([self.z, -self.z])
        self.d = np.concatenate([prog.log_hi - y0, y0 - prog.log_lo])
        self.ineqs = [LseForm(f.a @ self.z, f.b + f.a @ y0) for f in prog.ineqs]
        f0 = prog.objective
        self.obj = LseForm(f0.a @ self.z, f0.b + f0.a @ y0)
        dim = self.z.shape[1]
        if self.ineqs:
            self.a_all = np.vstack([f.a for f in self.ineqs])
            self.b_all = np.concatenate([f.b for f in self.ineqs])
            sizes = [len(f.b) for f in self.ineqs]
        else:
            self.a_all, self.b_all, sizes = np.zeros((0, dim)), np.zeros(0), []
        self.starts = np.cumsum([0] + sizes[:-1]).astype(int)
        self.group = np.repeat(np.arange(len(sizes)), sizes)

    def y(self, w):
        return self.y0 + self.z @ w

    def _lse(self, w):
        """Per-constraint values plus normalized term weights."""
        if not self.ineqs:
            return np.zeros(0), np.zeros(0)
        zt = self.a_all @ w + self.b_all
        zmax = np.maximum.reduceat(zt, self.starts)
        e = np.exp(zt - zmax[self.group])
        tot = np.add.reduceat(e, self.starts)
        return zmax + np.log(tot), e / tot[self.group]

    def slacks(self, w, s=0.0):
        """Constraint values shifted by s (all must be < 0 for strict feasibility)."""
        vals, _ = self._lse(w)
        return vals - s, self.c @ w - self.d - s

    def phi(self, w, t, s=None):
        shift = 0.0 if s is None else s
        cons, lin = self.slacks(w, shift)
        if (cons >= 0).any() or (lin >= 0).any() or (s is not None and s <= -1.0):
            return math.inf
        base = t * (self.obj.value(w) if s is None else s)
        val = base - np.log(-cons).sum() - np.log(-lin).sum()
        if s is not None:
            val -= math.log(s + 1.0)  # keeps the phase-one objective bounded below
        return val

    def newton_parts(self, w, t, s=None):
        """Gradient and Hessian of the barrier in w (or in (w, s) for phase one)."""
        phase1 = s is not None
        shift = s if phase1 else 0.0
        vals, pw = self._lse(w)
        m = len(vals)
        # per-constraint gradients: sums of weighted term rows
        g_rows = (np.add.reduceat(self.a_all * pw[:, None], self.starts)
                  if m else np.zeros((0, self.z.shape[1])))
        inv = -1.0 / (vals - shift)
        lin = self.c @ w - self.d - shift
        inv_lin = -1.0 / lin
        # sum_j inv_j (hess_j) + inv_j^2 g_j g_j^T, with hess_j = A^T diag(p) A - g g^T
        grad_w = inv @ g_rows + inv_lin @ self.c
        hess_w = ((self.a_all * (inv[self.group] * pw)[:, None]).T @ self.a_all
                  + (g_rows * (inv * inv - inv)[:, None]).T @ g_rows
                  + (self.c * (inv_lin * inv_lin)[:, None]).T @ self.c)
        if not phase1:
            _, g0, h0 = self.obj.derivatives(w)
            return grad_w + t * g0, hess_w + t * h0
        # the shifted constraints depend on s with derivative -1
        cross = -(inv * inv) @ g_rows - (inv_lin * inv_lin) @ self.c
        grad = np.append(grad_w, t - 1.0 / (s + 1.0) - inv.sum() - inv_lin.sum())
        dim = len(w) + 1
        hess = np.zeros((dim, dim))
        hess[:-1, :-1] = hess_w
        hess[:-1, -1] = hess[-1, :-1] = cross
        hess[-1, -1] = (inv * inv).sum() + (inv_lin * inv_lin).sum() + 1.0 / (s + 1.0) ** 2
        return grad, hess


def _newton(barrier, w, t, s=None, stop=None, budget=None, center_tol=1e-14):
    """Damped Newton minimization of the barrier at parameter t; returns (w, s, steps)."""
    steps = 0
    phase1 = s is not None
    for _ in range(NEWTON_MAX):
        x = np.append(w, s) if phase1 else w
        grad, hess = barrier.newton_parts(w, t, s)
        try:
            dx = -np.linalg.solve(hess, grad)
        except np.linalg.LinAlgError:
            dx = -np.linalg.lstsq(hess, grad, rcond=None)[0]
        dec = float(-grad @ dx)
        # the scaled gradient grad/t is the stationarity error of the true program
        if dec / 2.0 <= center_tol or np.abs(grad).max() <= GRAD_TOL * t:
            break
        f0 = barrier.phi(w, t, s)
        # below this the Armijo test only sees rounding noise in the barrier value
        if dec / 2.0 <= VALUE_EPS * abs(f0):
            break
        step = 1.0
        accepted = False
        while step > 1e-14:
            xn = x + step * dx
            wn, sn = (xn[:-1], xn[-1]) if phase1 else (xn, None)
            fn = barrier.phi(wn, t, sn)
            # inside the quadratic region the barrier value is too large to
            # resolve the decrease, so any strictly feasible full step is taken
            if fn <= f0 - 0.25 * step * dec or (dec < 1e-8 and math.isfinite(fn)):
                accepted = True
                break
            step *= 0.5
        if not accepted:
            break
        w, s = wn, sn
        steps += 1
        if budget is not None:
            budget[0] += 1
            if budget[0] > TOTAL_NEWTON_MAX:
                raise MaxIterations("Newton step budget exhausted", best=w)
        if stop is not None and stop(w, s):
            break
    return w, s, steps


def _phase_one(barrier, w, budget):
    """Find a strictly feasible point by minimizing the largest constraint violation."""
    cons, lin = barrier.slacks(w)
    worst = max(cons.max(initial=-math.inf), lin.max())
    if worst < 0:
        return w
    s = worst + 1.0
    t = 1.0
    for _ in range(40):
        w, s, _ = _newton(barrier, w, t, s, stop=lambda w_, s_: s_ < -PHASE_ONE_MARGIN,
                          budget=budget)
        if s < -PHASE_ONE_MARGIN:
            return w
        t *= BARRIER_FACTOR
        if t > 1e12:
            break
    cons, lin = barrier.slacks(w)
    if max(cons.max(initial=-math.inf), lin.max()) < 0:
        return w
    raise InfeasibleGP(f"no strictly feasible point (smallest violation {s:.3e})")


def _kkt_residual(barrier, w, t, active_tol=1e-6):
    """KKT residual of the reduced convex program at w.

    Several multiplier choices are scored and the best is reported: the
    barrier duals 1/(t * slack_j) of the final stage, non-negative
    least-squares fits of the stationarity condition over the constraints
    within ``active_tol`` of their bound or with a non-negligible barrier
    dual, and one fit of stationarity and complementarity jointly over all
    constraints.  Each residual is the largest of the stationarity error,
    the complementarity products and the constraint violation.
    """
    _, grad, _ = barrier.obj.derivatives(w)
    cons, lin = barrier.slacks(w)
    vals = np.concatenate([cons, lin])
    _, pw = barrier._lse(w)
    g_rows = (np.add.reduceat(barrier.a_all * pw[:, None], barrier.starts)
              if len(cons) else np.zeros((0, len(w))))
    grads = list(g_rows) + list(barrier.c)
    infeas = float(max(vals.max(initial=0.0), 0.0))

    def score(lam):
        r = grad + sum(l * g for l, g in zip(lam, grads))
        comp = float(np.abs(lam * vals).max(initial=0.0))
        return float(max(np.abs(r).max(initial=0.0), comp, infeas))

    def fitted(active):
        lam = np.zeros(len(vals))
        if active:
            jac = np.array([grads[i] for i in active]).T
            lam[active] = nnls(jac, -grad)[0]
        return lam

    best = score(fitted([i for i, v in enumerate(vals) if v > -active_tol]))
    if grads:
        # stationarity and complementarity fitted jointly over every constraint
        aug = np.vstack([np.array(grads).T, np.diag(vals)])
        rhs = np.concatenate([-grad, np.zeros(len(vals))])
        best = min(best, score(nnls(aug, rhs)[0]))
    if infeas == 0.0 and (vals < 0).all():
        duals = 1.0 / (t * -vals)
        best = min(best, score(duals),
                   score(fitted([i for i, d in enumerate(duals) if d > DUAL_ACTIVE])))
    return best


def solve_gp(p: GpProblem, x0: Optional[Mapping[str, float]] = None) -> GpSolution:
    """Solve a GP with a log-barrier interior-point method.

    The barrier weight 1/t runs from 1 down to 1e-9 in factors of 10, each
    stage solved by damped Newton with backtracking.  ``x0`` is an optional
    warm start; if it is not strictly feasible a phase-one problem is solved
    from it.  Raises InfeasibleGP or MaxIterations.
    """
    prog = to_convex_form(p)
    barrier = _Barrier(prog)
    if x0 is not None:
        y_start = np.array([math.log(x0[k]) for k in prog.variables])
        y_start = np.clip(y_start, prog.log_lo, prog.log_hi)
    else:
        y_start = 0.5 * (prog.log_lo + prog.log_hi)
    mid = 0.5 * (prog.log_lo + prog.log_hi)
    # pull the start slightly inside the box so the box barrier is finite
    y_start = mid + (1.0 - BOX_PULL_IN) * (y_start - mid)
    w, *_ = np.linalg.lstsq(barrier.z, y_start - barrier.y0, rcond=None)
    budget = [0]
    w = _phase_one(barrier, w, budget)
    mu = BARRIER_START
    while True:
        last = mu <= BARRIER_END * (1 + 1e-12)
        # intermediate stages only need rough centering; the last one is exact
        w, _, _ = _newton(barrier, w, 1.0 / mu, budget=budget,
                          center_tol=1e-14 if last else STAGE_CENTER_TOL)
        if last:
            break
        mu /= BARRIER_FACTOR
    y = barrier.y(w)
    assignment = {k: math.exp(v) for k, v in zip(prog.variables, y)}
    objective = _as_posy(p.objective)(assignment)
    return GpSolution(assignment, objective, _kkt_residual(barrier, w, 1.0 / mu), budget[0])
