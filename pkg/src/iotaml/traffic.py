"""Ground-truth channel occupancy: a queued background transmitter and a
bursty high-priority user."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class BackgroundTraffic:
    arrival_rate: float = 0.8
    activation_prob: float = 0.5
    queue_len: int = 0
    transmitting: bool = False

    def __post_init__(self):
        if not 0.0 <= self.arrival_rate <= 1.0:
            raise ValueError("arrival_rate must be in [0,1]")
        if not 0.0 < self.activation_prob <= 1.0:
            raise ValueError("activation_prob must be in (0,1]")


@dataclass
class PriorityTraffic:
    start_prob: float = 0.2
    burst_len: int = 5
    backoff_len: int = 2
    remaining: int = 0

    def __post_init__(self):
        if not 0.0 <= self.start_prob <= 1.0:
            raise ValueError("start_prob must be in [0,1]")
        if self.burst_len < 1 or self.backoff_len < 1:
            raise ValueError("burst_len and backoff_len must be positive")

    def stationary_active_fraction(self) -> float:
        p, L = self.start_prob, self.burst_len
        return L * p / (L * p + (1 - p))


def step_background(state: BackgroundTraffic, rng: np.random.Generator) -> bool:
    """Advance one slot; returns whether B occupies the channel in this slot.

    A transmitting B sends one queued packet per slot and stops once its queue
    is empty; an idle B with a backlog switches on with ``activation_prob``.
    The new arrival lands after this slot's service decision.
    """
    u_arrival, u_activate = rng.random(2)
    busy = False
    if state.transmitting:
        state.queue_len -= 1
        busy = True
    elif state.queue_len >= 1 and u_activate < state.activation_prob:
        state.transmitting = True
        state.queue_len -= 1
        busy = True
    if u_arrival < state.arrival_rate:
        state.queue_len += 1
    if state.transmitting and state.queue_len == 0:
        state.transmitting = False
    return busy


def step_priority(state: PriorityTraffic, rng: np.random.Generator) -> bool:
    """Renewal process: after a burst ends, each slot starts a new
    ``burst_len``-slot burst (counting this slot) with ``start_prob``."""
    u = rng.random()
    if state.remaining > 0:
        state.remaining -= 1
        return True
    if u < state.start_prob:
        state.remaining = state.burst_len - 1
        return True
    return False
