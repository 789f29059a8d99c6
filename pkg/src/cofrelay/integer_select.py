"""Integer equation selection for both strategies.

Both strategies pick a pair of integer vectors (k, t) with |det(k, t)| >= 1
minimizing the epigraph objective

    max(t^T Q_t t, k^T Q_k k, floor),

whose value Delta maps to the rate (1/4) log+(1/Delta).  Three solvers are
provided: an exhaustive enumeration oracle, a depth-first branch and bound,
and the iterated first-order linearization of the determinant constraint that
drives the branch and bound inside the outer coordinate descent.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .channel import BetaVector, ChannelGains, PowerBudget
from .cod import build_effective_system, omega_matrix
from .cof import log_plus
from .errors import Infeasible

LINEARIZATION_TOL = 0.05
LINEARIZATION_MAX_ITER = 20


@dataclass(frozen=True)
class MiqpProblem:
    """Epigraph problem min Delta s.t. t^T q_t t <= Delta, k^T q_k k <= Delta, floor <= Delta.

    ``det_sign`` selects |det| >= 1 ("both"), det(k, t) >= 1 ("plus") or
    det(k, t) <= -1 ("minus").
    """

    q_t: np.ndarray
    q_k: np.ndarray
    constant_floor: float = 0.0
    det_sign: str = "both"

    def __post_init__(self):
        for name in ("q_t", "q_k"):
            q = np.asarray(getattr(self, name), dtype=float)
            if q.shape != (2, 2):
                raise ValueError(f"{name} must be 2x2")
            if abs(q[0, 1] - q[1, 0]) > 1e-9 * (1.0 + np.abs(q).max()):
                raise ValueError(f"{name} must be symmetric")
            if np.linalg.eigvalsh(q).min() < -1e-12 * (1.0 + np.abs(q).max()):
                raise ValueError(f"{name} must be positive semi-definite")
            object.__setattr__(self, name, 0.5 * (q + q.T))
        if self.det_sign not in ("both", "plus", "minus"):
            raise ValueError(f"det_sign must be both, plus or minus, got {self.det_sign!r}")

    @property
    def quad_forms(self) -> list:
        return [(self.q_t, "t"), (self.q_k, "k")]

    def objective(self, k, t) -> float:
        return max(quad(self.q_t, t), quad(self.q_k, k), self.constant_floor)


@dataclass(frozen=True)
class IntegerSolution:
    k: tuple
    t: tuple
    objective: float
    rate: float
    node_count: int = 0
    iterations: int = 0


@dataclass(frozen=True)
class LinearizationState:
    """Expansion anchors (kappa, tau) and the log-coordinates of the current pair."""

    kappa: tuple
    tau: tuple
    k_tilde: tuple = (0.0, 0.0)
    t_tilde: tuple = (0.0, 0.0)

    def __post_init__(self):
        if any(v == 0 for v in (*self.kappa, *self.tau)):
            raise ValueError("linearization anchors must be nonzero")

    @classmethod
    def from_pair(cls, k, t) -> "LinearizationState":
        """Anchor at an integer pair; zero entries anchor at 1 with log-coordinate -1."""
        def split(v):
            anchor = tuple(float(x) if x != 0 else 1.0 for x in v)
            tilde = tuple(0.0 if x != 0 else -1.0 for x in v)
            return anchor, tilde
        kappa, kt = split(k)
        tau, tt = split(t)
        return cls(kappa, tau, kt, tt)

    def pair(self) -> tuple:
        """Integer pair represented by the anchors, kappa o (1 + k_tilde)."""
        k = tuple(int(round(a * (1.0 + x))) for a, x in zip(self.kappa, self.k_tilde))
        t = tuple(int(round(a * (1.0 + x))) for a, x in zip(self.tau, self.t_tilde))
        return k, t


def quad(q, c) -> float:
    a, b = float(c[0]), float(c[1])
    return q[0, 0] * a * a + 2.0 * q[0, 1] * a * b + q[1, 1] * b * b


def _quad_arrays(q, a, b):
    return q[0, 0] * a * a + 2.0 * q[0, 1] * a * b + q[1, 1] * b * b


def canonical(c) -> tuple:
    """Sign representative whose first nonzero entry is positive."""
    a, b = int(c[0]), int(c[1])
    if a < 0 or (a == 0 and b < 0):
        return (-a, -b)
    return (a, b)


def tie_key(k, t) -> tuple:
    return (abs(k[0]), abs(k[1]), k[0], k[1], abs(t[0]), abs(t[1]), t[0], t[1])


def _det(k, t) -> int:
    return k[0] * t[1] - k[1] * t[0]


def _det_ok(k, t, det_sign) -> bool:
    d = _det(k, t)
    if det_sign == "plus":
        return d >= 1
    if det_sign == "minus":
        return d <= -1
    return d != 0


def _solution(k, t, objective, nodes=0, iterations=0) -> IntegerSolution:
    return IntegerSolution(tuple(int(x) for x in k), tuple(int(x) for x in t), float(objective),
                           0.25 * log_plus(1.0 / objective) if objective > 0 else math.inf,
                           nodes, iterations)


# --- problem builders ------------------------------------------------------

def norm_bounds(ch: ChannelGains, budget: PowerBudget) -> tuple:
    """Squared-norm bounds (B_k, B_t) beyond which an equation cannot have positive rate.

    When a source cap exceeds the reference power the scaling factors can
    exceed one, so the gain norms are scaled by the largest cap ratio.
    """
    scale = max(1.0, budget.p_a / budget.p, budget.p_b / budget.p)
    snr = budget.snr
    b_k = 1.0 + scale * float(ch.h_r @ ch.h_r) * snr
    b_t = 1.0 + scale * float(ch.h_d @ ch.h_d) * snr
    return b_k, b_t


def form_bound(q) -> float:
    """Squared-norm radius outside which c^T q c exceeds every unit-vector value.

    Any vector outside this radius can be swapped for a unit vector that is
    independent of the other equation without increasing the objective, so
    restricting the search to the radius is lossless.
    """
    lam_min = float(np.linalg.eigvalsh(q)[0])
    top = max(q[0, 0], q[1, 1])
    if lam_min <= 1e-15 * max(top, 1e-300):
        return math.inf
    return max(1.0, top / lam_min * (1.0 + 1e-9))


def problem_bounds(problem: MiqpProblem) -> tuple:
    return form_bound(problem.q_k), form_bound(problem.q_t)


def _mmse_form(v, snr) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    return np.eye(2) - snr * np.outer(v, v) / (1.0 + snr * float(v @ v))


def cof_miqp(ch: ChannelGains, budget: PowerBudget, beta: BetaVector) -> MiqpProblem:
    """Integer problem of the relay compute-and-forward strategy at fixed scaling."""
    snr = budget.snr
    bs = beta.beta_s
    q_t = _mmse_form(bs * ch.h_d, snr)
    q_k = _mmse_form(bs * ch.h_r, snr)
    floor = 1.0 / (1.0 + snr * ch.h_rd ** 2 * beta.beta_r ** 2)
    return MiqpProblem(q_t, q_k, floor)


def cod_miqp(ch: ChannelGains, budget: PowerBudget, beta_s) -> MiqpProblem:
    """Integer problem of compute-at-destination: both equations share the same form."""
    omega = omega_matrix(build_effective_system(ch, budget, beta_s))
    return MiqpProblem(omega, omega.copy(), 0.0)


# --- exhaustive oracle -------------------------------------------------------

def _candidates(q, bound, tau):
    """Canonical nonzero integer vectors with ||c||^2 <= bound and c^T q c <= tau.

    Rows are indexed by the first entry; within each row only the interval
    where the quadratic can be <= tau is listed (widened by one), and the
    exact filter is applied afterwards, so nothing inside the ball is missed.
    """
    radius = int(math.isqrt(int(math.floor(bound))))
    q00, q01, q11 = q[0, 0], q[0, 1], q[1, 1]
    a_max = radius
    det = q00 * q11 - q01 * q01
    if det > 0 and math.isfinite(tau):
        a_max = min(radius, int(math.floor(math.sqrt(tau * q11 / det))) + 1)
    a_vals = np.arange(0, a_max + 1, dtype=np.int64)
    ball = np.floor(np.sqrt(np.maximum(bound - a_vals.astype(float) ** 2, 0.0))).astype(np.int64)
    lo, hi = -ball, ball.copy()
    if q11 > 0 and math.isfinite(tau):
        af = a_vals.astype(float)
        disc = (q01 * af) ** 2 - q11 * (q00 * af * af - tau)
        ok = disc >= 0
        root = np.sqrt(np.where(ok, disc, 0.0))
        e_lo = np.floor((-q01 * af - root) / q11) - 1
        e_hi = np.ceil((-q01 * af + root) / q11) + 1
        lo = np.maximum(lo, np.where(ok, e_lo, 1).astype(np.int64))
        hi = np.minimum(hi, np.where(ok, e_hi, 0).astype(np.int64))
    lo[0] = max(lo[0], 1)  # first entry zero: canonical vectors have b >= 1
    counts = np.maximum(hi - lo + 1, 0)
    total = int(counts.sum())
    if total == 0:
        return np.zeros((0, 2), dtype=np.int64), np.zeros(0)
    rows = np.repeat(a_vals, counts)
    starts = np.repeat(lo, counts)
    offsets = np.arange(total) - np.repeat(np.cumsum(counts) - counts, counts)
    cols = starts + offsets
    af, bf = rows.astype(float), cols.astype(float)
    vals = _quad_arrays(q, af, bf)
    keep = (vals <= tau) & (af * af + bf * bf <= bound)
    return np.stack([rows[keep], cols[keep]], axis=1), vals[keep]


def _sorted_by_value(vecs, vals):
    keys = np.lexsort((vecs[:, 1], vecs[:, 0], np.abs(vecs[:, 1]), vals))
    return vecs[keys], vals[keys]


def _unit_incumbent(q_t, q_k, floor):
    best = None
    for k, t in (((0, 1), (1, 0)), ((1, 0), (0, 1))):
        val = max(quad(q_t, t), quad(q_k, k), floor)
        if best is None or (val, tie_key(k, t)) < (best[0], tie_key(best[1], best[2])):
            best = (val, k, t)
    return best


def exhaustive_select(q_t, q_k, floor: float, bounds: tuple) -> IntegerSolution:
    """Enumerate every canonical integer pair in the norm balls and return the best.

    ``bounds`` is (B_k, B_t).  Only vectors whose own quadratic value does not
    exceed the best unit-pair objective can belong to an optimal pair, which
    keeps the enumeration to the relevant part of each ball.
    """
    q_t = np.asarray(q_t, dtype=float)
    q_k = np.asarray(q_k, dtype=float)
    b_k, b_t = bounds
    if b_k < 1 or b_t < 1:
        raise Infeasible("norm bounds below 1 exclude the unit vectors")
    tau, _, _ = _unit_incumbent(q_t, q_k, floor)
    tv, ta = _sorted_by_value(*_candidates(q_t, b_t, tau))
    kv, kb = _sorted_by_value(*_candidates(q_k, b_k, tau))
    assert len(tv) and len(kv), "unit vectors are always candidates"

    def first_independent(vecs, vals, other):
        for v, x in zip(vecs, vals):
            if v[0] * other[1] - v[1] * other[0] != 0:
                return x
        return math.inf

    # An optimal pair can always be rebuilt around the best t or the best k.
    via_t = max(ta[0], first_independent(kv, kb, tv[0]), floor)
    via_k = max(kb[0], first_independent(tv, ta, kv[0]), floor)
    best = min(via_t, via_k)
    if not math.isfinite(best):
        raise Infeasible("no det-feasible pair inside the norm balls")

    pair = _first_tied_pair(kv, kb, tv, ta, best)
    if pair is None:
        raise Infeasible("no det-feasible pair attains the optimum")  # pragma: no cover
    return _solution(pair[0], pair[1], best, nodes=len(tv) + len(kv))


def _first_tied_pair(kv, kb, tv, ta, best):
    """Lexicographically smallest independent pair whose quadratic values are <= best."""
    def by_key(vecs, vals):
        sel = vecs[vals <= best]
        order = np.lexsort((sel[:, 1], sel[:, 0], np.abs(sel[:, 1]), np.abs(sel[:, 0])))
        return [tuple(int(x) for x in v) for v in sel[order]]

    ks, ts = by_key(kv, kb), by_key(tv, ta)
    for k in ks:
        for t in ts:
            if _det(k, t) != 0:
                return k, t
    return None


def resolve_ties(problem: MiqpProblem, bounds: tuple, k, t) -> tuple:
    """Replace an optimal pair by the canonical representative of its tie class.

    Every selector ends here, so equal objectives always map to the same
    pair, the one exhaustive enumeration returns.
    """
    val = problem.objective(k, t)
    b_k, b_t = bounds
    kv, kb = _candidates(problem.q_k, b_k, val)
    tv, ta = _candidates(problem.q_t, b_t, val)
    pair = _first_tied_pair(kv, kb, tv, ta, val)
    return pair if pair is not None else (canonical(k), canonical(t))


# --- branch and bound --------------------------------------------------------

def _box_min(q, alo, ahi, blo, bhi):
    """Exact minimum of a PSD 2x2 quadratic over a rectangle, with a minimizer."""
    if alo <= 0 <= ahi and blo <= 0 <= bhi:
        return 0.0, 0.0, 0.0
    q00, q01, q11 = q[0, 0], q[0, 1], q[1, 1]
    best = (math.inf, 0.0, 0.0)
    for a in {alo, ahi}:
        if q11 > 0:
            b = min(max(-q01 * a / q11, blo), bhi)
        else:
            b = blo if q01 * a * blo <= q01 * a * bhi else bhi
        v = q00 * a * a + 2.0 * q01 * a * b + q11 * b * b
        if v < best[0]:
            best = (v, float(a), float(b))
    for b in {blo, bhi}:
        if q00 > 0:
            a = min(max(-q01 * b / q00, alo), ahi)
        else:
            a = alo if q01 * b * alo <= q01 * b * ahi else ahi
        v = q00 * a * a + 2.0 * q01 * a * b + q11 * b * b
        if v < best[0]:
            best = (v, float(a), float(b))
    return max(best[0], 0.0), best[1], best[2]


def _segment_min(q, p0, d, s_lo, s_hi):
    """Minimum of q over the segment p0 + s d, s in [s_lo, s_hi]."""
    qd = q @ d
    curv = float(d @ qd)
    slope = float(p0 @ qd)
    if curv > 0:
        s = min(max(-slope / curv, s_lo), s_hi)
    else:
        s = s_lo if slope >= 0 else s_hi
    x = p0 + s * d
    return quad(q, x), float(x[0]), float(x[1])


def _box_halfplane_min(q, alo, ahi, blo, bhi, w, r):
    """Exact minimum of a PSD quadratic over a rectangle intersected with w.c >= r.

    Returns None when the intersection is empty.
    """
    wa, wb = w
    if wa * (ahi if wa > 0 else alo) + wb * (bhi if wb > 0 else blo) < r - 1e-9:
        return None
    best = _box_min(q, alo, ahi, blo, bhi)
    if wa * best[1] + wb * best[2] >= r - 1e-12:
        return best
    # convexity: the constrained minimum sits on the line w.c = r inside the box
    if abs(wb) >= abs(wa):
        # b = (r - wa a) / wb, a ranging over the part of [alo, ahi] keeping b in range
        lo_a, hi_a = float(alo), float(ahi)
        if wa != 0:
            a1, a2 = (r - wb * blo) / wa, (r - wb * bhi) / wa
            lo_a, hi_a = max(lo_a, min(a1, a2)), min(hi_a, max(a1, a2))
        if lo_a > hi_a + 1e-12:
            return None
        p0 = np.array([0.0, r / wb])
        d = np.array([1.0, -wa / wb])
        return _segment_min(q, p0, d, lo_a, max(lo_a, hi_a))
    lo_b, hi_b = float(blo), float(bhi)
    if wb != 0:
        b1, b2 = (r - wa * alo) / wb, (r - wa * ahi) / wb
        lo_b, hi_b = max(lo_b, min(b1, b2)), min(hi_b, max(b1, b2))
    if lo_b > hi_b + 1e-12:
        return None
    p0 = np.array([r / wa, 0.0])
    d = np.array([-wb / wa, 1.0])
    return _segment_min(q, p0, d, lo_b, max(lo_b, hi_b))


def _min_sq_norm(lo, hi):
    s = 0
    for l, h in zip(lo, hi):
        if l > 0:
            s += l * l
        elif h < 0:
            s += h * h
    return s


def _nonzero_boxes(radius, canonical_only):
    """Boxes covering the nonzero integer vectors of [-R, R]^2 (or their canonical half)."""
    boxes = [((1, radius), (-radius, radius)), ((0, 0), (1, radius))]
    if not canonical_only:
        boxes += [((-radius, -1), (-radius, radius)), ((0, 0), (-radius, -1))]
    return [b for b in boxes if b[0][0] <= b[0][1] and b[1][0] <= b[1][1]]


class _BranchAndBound:
    """Depth-first branch and bound over (t_a, t_b, k_a, k_b)."""

    def __init__(self, problem, bounds, cut=None):
        self.q_t, self.q_k = problem.q_t, problem.q_k
        self.floor = problem.constant_floor
        self.det_sign = problem.det_sign
        self.b_k, self.b_t = bounds
        self.cut = cut  # (coefficients over (t_a, t_b, k_a, k_b), rhs) meaning coef.x >= rhs
        self.nodes = 0
        self.best_val = math.inf
        self.best = None

    def feasible(self, t, k):
        if t == (0, 0) or k == (0, 0):
            return False
        if t[0] ** 2 + t[1] ** 2 > self.b_t or k[0] ** 2 + k[1] ** 2 > self.b_k:
            return False
        if not _det_ok(k, t, self.det_sign):
            return False
        if self.cut is not None:
            coef, rhs = self.cut
            if coef[0] * t[0] + coef[1] * t[1] + coef[2] * k[0] + coef[3] * k[1] < rhs - 1e-9:
                return False
        return True

    def offer(self, k, t):
        if not self.feasible(t, k):
            return
        val = max(quad(self.q_t, t), quad(self.q_k, k), self.floor)
        if val < self.best_val:
            self.best_val, self.best = val, (k, t)

    def det_reachable(self, lo, hi) -> bool:
        """Whether some point of the box can meet the determinant constraint.

        det = k_a t_b - k_b t_a is bilinear in separate variables, so its exact
        range over the box comes from the corner products of each term.
        """
        pa = [lo[2] * lo[1], lo[2] * hi[1], hi[2] * lo[1], hi[2] * hi[1]]
        pb = [lo[3] * lo[0], lo[3] * hi[0], hi[3] * lo[0], hi[3] * hi[0]]
        d_lo, d_hi = min(pa) - max(pb), max(pa) - min(pb)
        if self.det_sign == "plus":
            return d_hi >= 1
        if self.det_sign == "minus":
            return d_lo <= -1
        return d_hi >= 1 or d_lo <= -1

    def bound(self, box):
        """Lower bound and relaxed minimizer of a node, or None if the node is empty."""
        lo, hi = box[0::2], box[1::2]
        if _min_sq_norm(lo[:2], hi[:2]) > self.b_t or _min_sq_norm(lo[2:], hi[2:]) > self.b_k:
            return None
        if not self.det_reachable(lo, hi):
            return None
        if self.cut is None:
            vt, ta, tb = _box_min(self.q_t, *box[0:4])
            vk, ka, kb = _box_min(self.q_k, *box[4:8])
            return max(vt, vk, self.floor), (ta, tb, ka, kb)
        coef, rhs = self.cut
        top = [c * (h if c > 0 else l) for c, l, h in zip(coef, lo, hi)]
        if sum(top) < rhs - 1e-9:
            return None
        # each vector must carry what the other vector's box cannot supply
        res_t = _box_halfplane_min(self.q_t, *box[0:4], coef[0:2], rhs - top[2] - top[3])
        res_k = _box_halfplane_min(self.q_k, *box[4:8], coef[2:4], rhs - top[0] - top[1])
        if res_t is None or res_k is None:
            return None
        return max(res_t[0], res_k[0], self.floor), (res_t[1], res_t[2], res_k[1], res_k[2])

    def run(self, roots):
        stack = []
        for box in roots:
            res = self.bound(box)
            if res is not None:
                stack.append((res[0], box, res[1]))
        stack.sort(key=lambda e: -e[0])
        while stack:
            lb, box, x = stack.pop()
            if lb >= self.best_val:
                continue
            self.nodes += 1
            children = self.branch(box, x)
            if children is None:
                continue
            scored = []
            for child in children:
                res = self.bound(child)
                if res is not None and res[0] < self.best_val:
                    scored.append((res[0], child, res[1]))
            scored.sort(key=lambda e: -e[0])
            stack.extend(scored)

    def branch(self, box, x):
        frac = [min(v - math.floor(v), math.ceil(v) - v) for v in x]
        j = max(range(4), key=lambda i: frac[i])
        if frac[j] > 1e-9:
            lo, hi = box[2 * j], box[2 * j + 1]
            cut = math.floor(x[j])
            left, right = list(box), list(box)
            left[2 * j + 1] = min(hi, cut)
            right[2 * j] = max(lo, cut + 1)
            return [tuple(left), tuple(right)]
        p = [int(round(v)) for v in x]
        t, k = (p[0], p[1]), (p[2], p[3])
        if self.feasible(t, k):
            self.offer(k, t)
            return None
        widths = [box[2 * i + 1] - box[2 * i] for i in range(4)]
        j = max(range(4), key=lambda i: widths[i])
        if widths[j] == 0:
            return None
        lo, hi, v = box[2 * j], box[2 * j + 1], p[j]
        out = []
        for a, b in ((lo, v - 1), (v, v), (v + 1, hi)):
            if a <= b:
                child = list(box)
                child[2 * j], child[2 * j + 1] = a, b
                out.append(tuple(child))
        return out


def _bnb(problem, bounds, cut=None, incumbents=()):
    b_k, b_t = bounds
    r_t = int(math.isqrt(int(min(b_t, 2 ** 62))))
    r_k = int(math.isqrt(int(min(b_k, 2 ** 62))))
    canon = cut is None and problem.det_sign == "both"
    solver = _BranchAndBound(problem, bounds, cut)
    for k, t in incumbents:
        solver.offer(tuple(k), tuple(t))
    roots = []
    t_boxes = _nonzero_boxes(r_t, canon)
    # with a sign-restricted determinant, t keeps both signs so k alone is canonical
    k_boxes = _nonzero_boxes(r_k, cut is None)
    for tb in t_boxes:
        for kb in k_boxes:
            roots.append((*tb[0], *tb[1], *kb[0], *kb[1]))
    solver.run(roots)
    return solver


def _canonical_solution(problem, bounds, k, t, nodes, iterations=0):
    k, t = resolve_ties(problem, bounds, k, t)
    return _solution(k, t, problem.objective(k, t), nodes, iterations)


def branch_and_bound_select(problem: MiqpProblem, bounds: Optional[tuple] = None,
                            cut=None, incumbent=None) -> IntegerSolution:
    """Certified-optimal selection by depth-first branch and bound.

    The node bound is the larger of the two box-constrained quadratic minima
    (exact for 2x2 forms) and the floor; branching splits the most fractional
    coordinate of the relaxed minimizer, or excludes an integral but infeasible
    minimizer with a three-way split.  The incumbent starts from the best
    canonical unit pair.  ``cut`` adds a linear constraint coef.(t, k) >= rhs.
    """
    if bounds is None:
        bounds = problem_bounds(problem)
    incumbents = [] if incumbent is None else [incumbent]
    signs = [(1, 1), (1, -1), (-1, 1), (-1, -1)] if cut is not None else [(1, 1)]
    for k, t in (((0, 1), (1, 0)), ((1, 0), (0, 1)), ((1, 0), (1, 1)), ((0, 1), (1, 1)),
                 ((1, 1), (1, 0)), ((1, 1), (0, 1))):
        for sk, st in signs:
            incumbents.append(((sk * k[0], sk * k[1]), (st * t[0], st * t[1])))
    solver = _bnb(problem, bounds, cut, incumbents)
    if solver.best is None:
        raise Infeasible("no integer pair satisfies the constraints")
    k, t = solver.best
    if cut is not None or problem.det_sign != "both":
        return _solution(k, t, solver.best_val, solver.nodes)
    return _canonical_solution(problem, bounds, k, t, solver.nodes)


def _linear_cut(state: LinearizationState, sign: int):
    """First-order surrogate of sign*det(k, t) >= 1 around the anchors.

    Expanding k_a t_b and k_b t_a to first order at (kappa, tau) gives
    L = tau_b k_a + kappa_a t_b - tau_a k_b - kappa_b t_a - det(kappa, tau),
    and the surrogate constraint is sign * L >= 1.
    """
    (ka, kb), (ta, tb) = state.kappa, state.tau
    coef = (-sign * kb, sign * ka, sign * tb, -sign * ta)
    rhs = 1.0 + sign * (ka * tb - kb * ta)
    return coef, rhs


def _approximation_error(state: LinearizationState, k, t) -> float:
    """Largest relative gap between exp(x) and 1 + x over the log-coordinates."""
    worst = 0.0
    for new, anchor, tilde in zip((*k, *t), (*state.kappa, *state.tau),
                                  (*state.k_tilde, *state.t_tilde)):
        if new == 0 and tilde == -1.0:
            continue  # zero entry represented exactly by the -1 log-coordinate
        x = new / anchor - 1.0
        worst = max(worst, abs(1.0 - (1.0 + x) * math.exp(-x)))
    return worst


def linearized_det_loop(problem: MiqpProblem, init: LinearizationState,
                        bounds: Optional[tuple] = None, certify: bool = True) -> IntegerSolution:
    """Selection via the linearized determinant constraint, both sign branches.

    Each branch solves the branch and bound with the surrogate cut at the
    current anchors, moves the anchors to the returned pair and repeats until
    the log-coordinates are within 5% of their linear model or 20 rounds
    pass.  The better branch is kept.  With ``certify`` an exact branch and
    bound over the true determinant constraint runs first; its pair seeds
    every surrogate round (where the cut admits it) and replaces the branch
    result if strictly better, so the returned objective is the global
    optimum.
    """
    if bounds is None:
        bounds = problem_bounds(problem)
    best = None
    nodes = 0
    rounds = 0
    warm = []
    if certify:
        # the certificate is computed first so every surrogate round can
        # prune against it; seeds violating a round's cut are rejected there
        exact = _bnb(problem, bounds)
        nodes += exact.nodes
        if exact.best is not None:
            k0, t0 = exact.best
            warm = [((sk * k0[0], sk * k0[1]), (st * t0[0], st * t0[1]))
                    for sk in (1, -1) for st in (1, -1)]
    for sign in (1, -1):
        state = init
        found = None
        for it in range(1, LINEARIZATION_MAX_ITER + 1):
            seeds = [state.pair()] + ([found[:2]] if found else []) + warm
            solver = _bnb(problem, bounds, _linear_cut(state, sign), seeds)
            nodes += solver.nodes
            rounds += 1
            if solver.best is None:
                break
            k, t = solver.best
            found = (k, t, solver.best_val)
            err = _approximation_error(state, k, t)
            state = LinearizationState.from_pair(k, t)
            if err <= LINEARIZATION_TOL:
                break
        if found and (best is None or found[2] < best[2]):
            best = found
    if best is None and not certify:
        raise Infeasible("both linearized branches are infeasible")
    if certify:
        if exact.best is None:
            raise Infeasible("no integer pair satisfies the constraints")
        k, t = exact.best
        if best is not None and problem.objective(best[0], best[1]) <= exact.best_val:
            k, t = best[0], best[1]
    else:
        k, t = best[0], best[1]
    return _canonical_solution(problem, bounds, k, t, nodes, rounds)
