"""Channel and power domain types, dB conversions and random channel draws.

Random draws use numpy's PCG64 bit generator (a documented, portable
algorithm) fed with explicit integer seeds; per-trial seeds are derived with
the SplitMix64 mixing function so every trial can be reproduced in isolation.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

_MASK64 = (1 << 64) - 1


def db_to_linear(x_db: float) -> float:
    """Convert decibels to a linear ratio, 10^(x/10)."""
    return 10.0 ** (x_db / 10.0)


def linear_to_db(x: float) -> float:
    return 10.0 * math.log10(x)


def splitmix64(x: int) -> int:
    """One SplitMix64 step: a bijective 64-bit mixer used for seed derivation."""
    z = (x + 0x9E3779B97F4A7C15) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def derive_seed(seed: int, *indices: int) -> int:
    """Derive a child seed from a base seed and a path of indices."""
    s = splitmix64(int(seed) & _MASK64)
    for i in indices:
        s = splitmix64((s + int(i)) & _MASK64)
    return s


@dataclass(frozen=True)
class ChannelGains:
    """Real amplitude gains of the five links (sources to relay/destination, relay to destination)."""

    h_ar: float
    h_br: float
    h_ad: float
    h_bd: float
    h_rd: float

    def __post_init__(self):
        for name in ("h_ar", "h_br", "h_ad", "h_bd", "h_rd"):
            v = getattr(self, name)
            if not math.isfinite(v):
                raise ValueError(f"{name} must be finite, got {v}")

    @property
    def h_d(self) -> np.ndarray:
        return np.array([self.h_ad, self.h_bd])

    @property
    def h_r(self) -> np.ndarray:
        return np.array([self.h_ar, self.h_br])

    @property
    def matrix(self) -> np.ndarray:
        """Stacked source gains, first row to the destination, second row to the relay."""
        return np.array([[self.h_ad, self.h_bd], [self.h_ar, self.h_br]])

    def as_tuple(self) -> tuple:
        return (self.h_ar, self.h_br, self.h_ad, self.h_bd, self.h_rd)

    def is_dead(self) -> bool:
        return all(v == 0.0 for v in self.as_tuple())


@dataclass(frozen=True)
class PowerBudget:
    """Per-node power caps, reference power and noise variance, all in watts."""

    p_a: float
    p_b: float
    p_r: float
    p: float
    n: float

    def __post_init__(self):
        for name in ("p_a", "p_b", "p_r", "p", "n"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise ValueError(f"{name} must be positive and finite, got {v}")

    @property
    def snr(self) -> float:
        return self.p / self.n

    @classmethod
    def from_db(cls, snr_db: float, p_a_dbw=20.0, p_b_dbw=20.0, p_r_dbw=20.0, p_dbw=20.0):
        """Budget with caps given in dBW and the noise variance set by the target SNR."""
        p = db_to_linear(p_dbw)
        return cls(db_to_linear(p_a_dbw), db_to_linear(p_b_dbw), db_to_linear(p_r_dbw),
                   p, p / db_to_linear(snr_db))

    def beta_limits(self) -> tuple:
        """Box half-widths sqrt(P_i/P) for (a, b, r)."""
        return (math.sqrt(self.p_a / self.p), math.sqrt(self.p_b / self.p),
                math.sqrt(self.p_r / self.p))


@dataclass(frozen=True)
class BetaVector:
    """Power-scaling factors of the two sources and the relay; may be negative."""

    beta_a: float
    beta_b: float
    beta_r: float

    @property
    def beta_s(self) -> np.ndarray:
        return np.array([self.beta_a, self.beta_b])

    def as_array(self) -> np.ndarray:
        return np.array([self.beta_a, self.beta_b, self.beta_r])

    def is_feasible(self, budget: PowerBudget, tol: float = 1e-12) -> bool:
        lim = budget.beta_limits()
        return all(abs(b) <= m + tol for b, m in zip(self.as_array(), lim))

    @classmethod
    def corner(cls, budget: PowerBudget, scale: float = 1.0) -> "BetaVector":
        """Full-power corner of the box, optionally scaled inward."""
        a, b, r = budget.beta_limits()
        return cls(scale * a, scale * b, scale * r)


def clamp_beta(beta: BetaVector, budget: PowerBudget) -> BetaVector:
    """Project beta onto the feasible box |beta_i| <= sqrt(P_i/P)."""
    lim = budget.beta_limits()
    vals = [min(max(b, -m), m) for b, m in zip(beta.as_array(), lim)]
    return BetaVector(*vals)


@dataclass(frozen=True)
class ChannelVariances:
    """Variances (dBW) of the zero-mean Gaussian gains; -inf yields an identically zero gain."""

    var_ar: float
    var_br: float
    var_ad: float
    var_bd: float
    var_rd: float

    def __post_init__(self):
        for name in ("var_ar", "var_br", "var_ad", "var_bd", "var_rd"):
            v = getattr(self, name)
            if math.isnan(v) or v == math.inf:
                raise ValueError(f"{name} must be finite or -inf, got {v}")

    def as_tuple(self) -> tuple:
        return (self.var_ar, self.var_br, self.var_ad, self.var_bd, self.var_rd)


def draw_channel(variances: ChannelVariances, seed: int) -> ChannelGains:
    """Draw the five gains independently from N(0, 10^(var/10)) with a PCG64 stream."""
    rng = np.random.Generator(np.random.PCG64(seed))
    z = rng.standard_normal(5)
    gains = []
    for zi, v in zip(z, variances.as_tuple()):
        std = 0.0 if v == -math.inf else math.sqrt(db_to_linear(v))
        gains.append(float(std * zi) + 0.0)
    return ChannelGains(*gains)
