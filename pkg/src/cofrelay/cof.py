"""Compute-and-forward at the relay: computation rates and the three-way symmetric rate."""
from __future__ import annotations

import logging
import math
from collections import Counter
from dataclasses import dataclass

from .channel import BetaVector, ChannelGains, PowerBudget
from .errors import SingularEquations, ZeroCoefficients

log = logging.getLogger(__name__)

# Counts of numerical guard activations (never expected to fire in practice).
diagnostics: Counter = Counter()


@dataclass(frozen=True)
class CofRateBreakdown:
    r_sd: float
    r_sr: float
    r_rd: float
    rate: float


def log_plus(x: float) -> float:
    return math.log2(x) if x > 1.0 else 0.0


def det2(k, t) -> float:
    return k[0] * t[1] - k[1] * t[0]


def effective_noise_variance(alpha, h_eff, coeff, p, n) -> float:
    """Noise plus self-noise power after inflating the received signal by alpha."""
    return alpha * alpha * n + p * sum((alpha * h - c) ** 2 for h, c in zip(h_eff, coeff))


def optimal_inflation(h_eff, snr: float, coeff) -> float:
    """MMSE inflation factor snr (h.c) / (1 + snr ||h||^2)."""
    dot = h_eff[0] * coeff[0] + h_eff[1] * coeff[1]
    return snr * dot / (1.0 + snr * (h_eff[0] ** 2 + h_eff[1] ** 2))


def equation_noise(h_eff, snr: float, coeff) -> float:
    """c^T (I + snr h h^T)^{-1} c, the normalized noise of decoding equation c.

    Evaluated through the 2-D Lagrange identity
    ||c||^2 ||h||^2 - (h.c)^2 = (h_a c_b - h_b c_a)^2, which keeps the
    numerator a sum of non-negative terms.
    """
    ha, hb = h_eff[0], h_eff[1]
    ca, cb = coeff[0], coeff[1]
    cross = ha * cb - hb * ca
    return (ca * ca + cb * cb + snr * cross * cross) / (1.0 + snr * (ha * ha + hb * hb))


def computation_rate(h_eff, snr: float, coeff) -> float:
    if coeff[0] == 0 and coeff[1] == 0:
        raise ZeroCoefficients("equation coefficients are all zero")
    noise = equation_noise(h_eff, snr, coeff)
    if not noise > 0.0:
        diagnostics["nonpositive_noise"] += 1
        log.warning("nonpositive equation noise %r clamped to zero rate", noise)
        return 0.0
    return 0.25 * log_plus(1.0 / noise)


def relay_forward_rate(h_rd: float, beta_r: float, snr: float) -> float:
    return 0.25 * math.log2(1.0 + snr * h_rd * h_rd * beta_r * beta_r)


def cof_rate(ch: ChannelGains, budget: PowerBudget, beta: BetaVector, k, t) -> CofRateBreakdown:
    """Symmetric rate with the relay decoding equation k and the destination equation t."""
    if abs(det2(k, t)) < 1:
        raise SingularEquations(f"det(k, t) = 0 for k={tuple(k)}, t={tuple(t)}")
    snr = budget.snr
    ba, bb = beta.beta_a, beta.beta_b
    r_sd = computation_rate((ba * ch.h_ad, bb * ch.h_bd), snr, t)
    r_sr = computation_rate((ba * ch.h_ar, bb * ch.h_br), snr, k)
    r_rd = relay_forward_rate(ch.h_rd, beta.beta_r, snr)
    return CofRateBreakdown(r_sd, r_sr, r_rd, min(r_sd, r_sr, r_rd))
