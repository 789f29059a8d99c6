"""Symmetric rates of amplify-, decode- and compress-and-forward relaying.

All rates are in bits per channel use and carry the 1/4 factor of the
two-phase half-duplex protocol.  The kernels below accept either scalars or
numpy arrays for the scaling factors so the coarse grid search of
``optimize_baseline`` can be evaluated in one vectorized call.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Optional

import numpy as np
from scipy.optimize import minimize

from .channel import BetaVector, ChannelGains, PowerBudget, clamp_beta
from .errors import NonpositiveDistortion, ZeroRelayLink

STRATEGIES = ("AF", "DF", "CF")
GRID_POINTS = 9
REFINE_STARTS = 3
BETA_TOL = 1e-6


@dataclass(frozen=True)
class BaselineResult:
    strategy: str
    beta: BetaVector
    rate: float
    distortion: Optional[float] = None


def _af_kernel(ch, snr, ba, bb, br):
    ba2, bb2 = ba * ba, bb * bb
    relay_pow = snr * (ba2 * ch.h_ar ** 2 + bb2 * ch.h_br ** 2)
    gamma2 = br * br * snr / (1.0 + relay_pow)
    # squared gain of the amplified path, h_rd^2 gamma^2 / (1 + gamma^2 h_rd^2)
    rho2 = ch.h_rd ** 2 * gamma2 / (1.0 + gamma2 * ch.h_rd ** 2)
    na = ch.h_ad ** 2 + ch.h_ar ** 2 * rho2
    nb = ch.h_bd ** 2 + ch.h_br ** 2 * rho2
    cross2 = rho2 * (ch.h_ad * ch.h_br - ch.h_bd * ch.h_ar) ** 2
    xa, xb = snr * ba2, snr * bb2
    single_a = np.log2(1.0 + xa * na)
    single_b = np.log2(1.0 + xb * nb)
    joint = 0.5 * np.log2(1.0 + xa * na + xb * nb + xa * xb * cross2)
    return 0.25 * np.maximum(np.minimum(np.minimum(single_a, single_b), joint), 0.0)


def _mac_symmetric(snr, ba2, bb2, ga, gb):
    """Inner min of two single-user logs and half the sum log for one receiver."""
    ua = np.log2(1.0 + snr * ga * ga * ba2)
    ub = np.log2(1.0 + snr * gb * gb * bb2)
    joint = 0.5 * np.log2(1.0 + snr * (ga * ga * ba2 + gb * gb * bb2))
    return np.minimum(np.minimum(ua, ub), joint)


def _df_kernel(ch, snr, ba, bb, br):
    ba2, bb2 = ba * ba, bb * bb
    at_relay = _mac_symmetric(snr, ba2, bb2, ch.h_ar, ch.h_br)
    at_dest = _mac_symmetric(snr, ba2, bb2, ch.h_ad, ch.h_bd)
    forward = 0.5 * np.log2(1.0 + snr * ch.h_rd ** 2 * br * br)
    return 0.25 * np.maximum(np.minimum(at_relay, at_dest + forward), 0.0)


def _cf_terms(ch, budget, ba, bb):
    """Return (rate, D/N) with D at equality and full relay power.

    With a dead relay link the compressed observation carries nothing and D/N
    is reported as +inf, which reduces the rate to the direct-link MAC value.
    """
    snr = budget.snr
    ba2, bb2 = ba * ba, bb * bb
    hd = ba2 * ch.h_ad ** 2 + bb2 * ch.h_bd ** 2
    hr = ba2 * ch.h_ar ** 2 + bb2 * ch.h_br ** 2
    # (1+s hr)(1+s hd) - s^2 (cross)^2 written without cancellation
    det2 = ba2 * bb2 * (ch.h_ar * ch.h_bd - ch.h_br * ch.h_ad) ** 2
    if ch.h_rd == 0.0:
        d_over_n = np.full(np.shape(hd), np.inf) if np.ndim(hd) else math.inf
        shrink = 0.0 * hd
    else:
        d_over_n = budget.n / (ch.h_rd ** 2 * budget.p_r) * (
            1.0 + snr * (hr + hd) + snr * snr * det2) / (1.0 + snr * hd)
        shrink = 1.0 / (1.0 + d_over_n)
    ua = np.log2(1.0 + snr * ch.h_ad ** 2 * ba2 + snr * ch.h_ar ** 2 * ba2 * shrink)
    ub = np.log2(1.0 + snr * ch.h_bd ** 2 * bb2 + snr * ch.h_br ** 2 * bb2 * shrink)
    joint = np.log2(1.0 + snr * hd + snr * (hr + snr * det2) * shrink)
    rate = 0.25 * np.maximum(np.minimum(np.minimum(ua, ub), 0.5 * joint), 0.0)
    return rate, d_over_n


def af_rate(ch: ChannelGains, budget: PowerBudget, beta: BetaVector) -> float:
    return float(_af_kernel(ch, budget.snr, beta.beta_a, beta.beta_b, beta.beta_r))


def df_rate(ch: ChannelGains, budget: PowerBudget, beta: BetaVector) -> float:
    return float(_df_kernel(ch, budget.snr, beta.beta_a, beta.beta_b, beta.beta_r))


def cf_distortion(ch: ChannelGains, budget: PowerBudget, beta_s) -> float:
    """Wyner-Ziv distortion at equality, with the relay at full power."""
    if ch.h_rd == 0.0:
        raise ZeroRelayLink("h_rd = 0: compression distortion is unbounded")
    ba, bb = float(beta_s[0]), float(beta_s[1])
    _, d_over_n = _cf_terms(ch, budget, ba, bb)
    return float(d_over_n) * budget.n


def wz_rate(ch: ChannelGains, budget: PowerBudget, beta_s, d: float) -> float:
    """Quantization rate needed to describe the relay observation at distortion d."""
    if not d > 0:
        raise NonpositiveDistortion(f"distortion must be positive, got {d}")
    if math.isinf(d):
        return 0.0
    p, n = budget.p, budget.n
    ba2, bb2 = float(beta_s[0]) ** 2, float(beta_s[1]) ** 2
    hd = ba2 * ch.h_ad ** 2 + bb2 * ch.h_bd ** 2
    hr = ba2 * ch.h_ar ** 2 + bb2 * ch.h_br ** 2
    cross = ba2 * ch.h_ar * ch.h_ad + bb2 * ch.h_br * ch.h_bd
    residual = n + p * hr - (p * cross) ** 2 / (n + p * hd)
    return 0.25 * math.log2(1.0 + residual / d)


def cf_rate(ch: ChannelGains, budget: PowerBudget, beta_s) -> tuple:
    """CF symmetric rate and the distortion it uses, as (rate, D)."""
    if ch.h_rd == 0.0:
        raise ZeroRelayLink("h_rd = 0: compress-and-forward reduces to direct transmission")
    rate, d_over_n = _cf_terms(ch, budget, float(beta_s[0]), float(beta_s[1]))
    return float(rate), float(d_over_n) * budget.n


def _objective(strategy, ch, budget):
    snr = budget.snr
    if strategy == "AF":
        return lambda x: _af_kernel(ch, snr, x[0], x[1], x[2]), 3
    if strategy == "DF":
        return lambda x: _df_kernel(ch, snr, x[0], x[1], x[2]), 3
    if strategy == "CF":
        return lambda x: _cf_terms(ch, budget, x[0], x[1])[0], 2
    raise ValueError(f"unknown baseline strategy {strategy!r}")


def optimize_baseline(strategy: str, ch: ChannelGains, budget: PowerBudget,
                      starts: Iterable[BetaVector] = ()) -> BaselineResult:
    """Maximize a baseline rate over the feasible box.

    A 9-point-per-axis grid on the non-negative half of the box (the baseline
    rates depend on the scaling factors only through their squares) is
    followed by bounded Nelder-Mead refinement from the best three grid points
    and from any caller-supplied ``starts``.
    """
    rate_fn, dim = _objective(strategy, ch, budget)
    lim = np.array(budget.beta_limits()[:dim])

    axes = [np.linspace(0.0, m, GRID_POINTS) for m in lim]
    mesh = np.meshgrid(*axes, indexing="ij")
    pts = np.stack([m.ravel() for m in mesh], axis=1)
    vals = np.asarray(rate_fn(pts.T), dtype=float)
    order = np.argsort(-vals, kind="stable")

    best_x, best_val = pts[order[0]].copy(), float(vals[order[0]])
    seeds = [pts[i] for i in order[:REFINE_STARTS]]
    seeds += [np.abs(b.as_array()[:dim]) for b in starts]

    bounds = [(0.0, float(m)) for m in lim]
    for x0 in seeds:
        x0 = np.minimum(np.abs(x0), lim)
        v0 = float(rate_fn(x0))
        if v0 > best_val:
            best_x, best_val = x0.copy(), v0
        if v0 <= 0.0 and not np.any(vals > 0.0):
            continue  # flat zero landscape, nothing to refine
        res = minimize(lambda x: -float(rate_fn(np.clip(x, 0.0, lim))), x0,
                       method="Nelder-Mead", bounds=bounds,
                       options={"xatol": BETA_TOL, "fatol": 1e-12, "maxiter": 2000})
        x = np.clip(res.x, 0.0, lim)
        v = float(rate_fn(x))
        if v > best_val:
            best_x, best_val = x, v

    if dim == 2:
        beta = BetaVector(best_x[0], best_x[1], budget.beta_limits()[2])
    else:
        beta = BetaVector(*best_x)
    beta = clamp_beta(beta, budget)
    if strategy == "CF":
        rate, d_over_n = _cf_terms(ch, budget, beta.beta_a, beta.beta_b)
        return BaselineResult("CF", beta, float(rate), float(d_over_n) * budget.n)
    return BaselineResult(strategy, beta, float(rate_fn(beta.as_array())))
