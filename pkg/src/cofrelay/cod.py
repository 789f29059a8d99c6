"""Compress at the relay, compute both equations at the destination.

The destination sees its own observation and the relay's compressed
observation; stacking both gives the 2x2 effective gain matrix ``g`` whose
rows are the scaled direct and relay gains.  Each equation is decoded with
an MMSE combiner over the two observations.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .baselines import cf_distortion
from .channel import ChannelGains, PowerBudget
from .cof import det2, log_plus
from .errors import SingularEquations, ZeroCoefficients


@dataclass(frozen=True)
class EffectiveSystem:
    g: np.ndarray
    n_cov: np.ndarray
    n_d: tuple
    d: float
    snr: float


@dataclass(frozen=True)
class CodRateBreakdown:
    r_t: float
    r_k: float
    rate: float
    alpha_t: tuple
    alpha_k: tuple


def _inv2(a: np.ndarray) -> np.ndarray:
    det = a[0, 0] * a[1, 1] - a[0, 1] * a[1, 0]
    return np.array([[a[1, 1], -a[0, 1]], [-a[1, 0], a[0, 0]]]) / det


def build_effective_system(ch: ChannelGains, budget: PowerBudget, beta_s) -> EffectiveSystem:
    ba, bb = float(beta_s[0]), float(beta_s[1])
    d = cf_distortion(ch, budget, (ba, bb))
    g = np.array([[ba * ch.h_ad, bb * ch.h_bd], [ba * ch.h_ar, bb * ch.h_br]])
    snr = budget.snr
    n_cov = np.diag([1.0 / snr, 1.0 / snr + d / budget.p])
    return EffectiveSystem(g, n_cov, (1.0, 1.0 + d / budget.n), d, snr)


def optimal_combiner(sys: EffectiveSystem, coeff) -> tuple:
    """alpha* = (G G^T + N_d)^{-1} G c."""
    g = sys.g
    a = g @ g.T + sys.n_cov
    alpha = _inv2(a) @ (g @ np.asarray(coeff, dtype=float))
    return float(alpha[0]), float(alpha[1])


def combiner_objective(sys: EffectiveSystem, coeff, alpha) -> float:
    """snr ||G^T alpha - c||^2 + (alpha o alpha)^T n_d."""
    res = sys.g.T @ np.asarray(alpha, dtype=float) - np.asarray(coeff, dtype=float)
    return sys.snr * float(res @ res) + alpha[0] ** 2 * sys.n_d[0] + alpha[1] ** 2 * sys.n_d[1]


def cod_equation_rate(sys: EffectiveSystem, beta_s, ch: ChannelGains, snr: float, coeff, alpha) -> float:
    if coeff[0] == 0 and coeff[1] == 0:
        raise ZeroCoefficients("equation coefficients are all zero")
    a1, a2 = alpha
    ra = beta_s[0] * (a1 * ch.h_ad + a2 * ch.h_ar) - coeff[0]
    rb = beta_s[1] * (a1 * ch.h_bd + a2 * ch.h_br) - coeff[1]
    denom = snr * (ra * ra + rb * rb) + a1 * a1 * sys.n_d[0] + a2 * a2 * sys.n_d[1]
    return 0.25 * log_plus(snr / denom)


def omega_matrix(sys: EffectiveSystem) -> np.ndarray:
    """Quadratic form whose value c^T Omega c is the combiner-minimized noise divided by snr."""
    g = sys.g
    m = _inv2(g @ g.T + sys.n_cov) @ g
    x = g.T @ m - np.eye(2)
    omega = x.T @ x + m.T @ sys.n_cov @ m
    return 0.5 * (omega + omega.T)


def cod_rate(ch: ChannelGains, budget: PowerBudget, beta_s, k, t) -> CodRateBreakdown:
    if abs(det2(k, t)) < 1:
        raise SingularEquations(f"det(k, t) = 0 for k={tuple(k)}, t={tuple(t)}")
    sys = build_effective_system(ch, budget, beta_s)
    alpha_t = optimal_combiner(sys, t)
    alpha_k = optimal_combiner(sys, k)
    r_t = cod_equation_rate(sys, beta_s, ch, sys.snr, t, alpha_t)
    r_k = cod_equation_rate(sys, beta_s, ch, sys.snr, k, alpha_k)
    return CodRateBreakdown(r_t, r_k, min(r_t, r_k), alpha_t, alpha_k)
