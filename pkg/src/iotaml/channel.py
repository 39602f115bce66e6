"""Path-loss geometry, Gaussian sensed power and SINR outcomes."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Tuple

import numpy as np

Position = Tuple[float, float]


@dataclass
class NodeLayout:
    B: Position = (0.0, 15.0)
    T: Position = (-10.0, 0.0)
    R: Position = (0.0, 0.0)
    A: Position = (10.0, 0.0)

    def __post_init__(self):
        self.B, self.T, self.R, self.A = (tuple(float(c) for c in p)
                                          for p in (self.B, self.T, self.R, self.A))
        names = ("B", "T", "R", "A")
        for i, a in enumerate(names):
            for b in names[i + 1:]:
                if getattr(self, a) == getattr(self, b):
                    raise ValueError(f"nodes {a} and {b} are coincident")


@dataclass
class ChannelModel:
    pathloss_exponent: float = 2.0
    mean_noise_power: float = 1.0
    power_std: float = 0.6
    sinr_threshold: float = 3.0
    P_B: float = 1000.0
    P_T: float = 1000.0
    P_A: float = 1000.0

    def __post_init__(self):
        for name in ("sinr_threshold", "P_B", "P_T", "P_A"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if not self.power_std >= 0:
            raise ValueError("power_std must be nonnegative")
        if not self.mean_noise_power >= 0:
            raise ValueError("mean_noise_power must be nonnegative")


def channel_gain(a: Position, b: Position, model: ChannelModel) -> float:
    d = math.dist(a, b)
    if d == 0:
        raise ValueError(f"coincident positions {a} and {b}")
    return d ** (-model.pathloss_exponent)


def _draw(mean: float, model: ChannelModel, rng: np.random.Generator) -> float:
    # always consume one variate so paired runs stay aligned even when std is 0
    z = rng.standard_normal()
    return max(0.0, mean + model.power_std * z)


def sample_sensed_power(active: Iterable[Tuple[float, float]], model: ChannelModel,
                        rng: np.random.Generator) -> float:
    """Noise plus the received power of each active (power, gain) pair, clamped at 0."""
    mean = model.mean_noise_power + sum(p * g for p, g in active)
    return _draw(mean, model, rng)


def sinr(tx_power_gain: float, interferer_power_gains: Iterable[float], model: ChannelModel,
         rng: np.random.Generator) -> float:
    signal = _draw(tx_power_gain, model, rng)
    noise = _draw(model.mean_noise_power + sum(interferer_power_gains), model, rng)
    if noise == 0.0:
        return math.inf
    return signal / noise


def transmission_success(tx_power_gain: float, interferer_power_gains: Iterable[float],
                         model: ChannelModel, rng: np.random.Generator) -> bool:
    if not tx_power_gain > 0:
        raise ValueError("transmit power-gain product must be positive")
    return sinr(tx_power_gain, interferer_power_gains, model, rng) >= model.sinr_threshold


def clamped_gaussian_mean(mu: float, sigma: float) -> float:
    """E[max(0, X)] for X ~ N(mu, sigma^2)."""
    if sigma == 0:
        return max(0.0, mu)
    a = mu / sigma
    pdf = math.exp(-0.5 * a * a) / math.sqrt(2 * math.pi)
    cdf = 0.5 * (1 + math.erf(a / math.sqrt(2)))
    return mu * cdf + sigma * pdf
