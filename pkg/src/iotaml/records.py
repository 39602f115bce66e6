"""Per-slot trace records and the sliding-window dataset builder."""

from __future__ import annotations

from dataclasses import dataclass, asdict
from typing import Optional, Sequence

import numpy as np

from .nnet import Dataset

TRUTHS = ("idle", "busy_background", "busy_priority")
DECISIONS = ("transmit", "hold", "backoff")
ACTIONS = ("none", "jam_data", "poison_sense", "replay_priority")
OUTCOMES = ("success", "collision_fail", "jammed_fail", "no_attempt")
PHASES = ("train_collect", "observe", "retrain_collect", "test")
SENSING_ACTIONS = ("poison_sense", "replay_priority")


@dataclass
class SlotRecord:
    slot_index: int
    truth: str
    sensed_T: float
    sensed_A: float
    t_decision: str = "hold"
    attack_action: str = "none"
    outcome: str = "no_attempt"
    ack: bool = False
    defense_flip: bool = False
    warmup: bool = False
    # classifier output before any defense flip; None when not evaluated
    t_label: Optional[int] = None
    t_score: Optional[float] = None
    a_predicts_success: Optional[bool] = None
    phase: str = "test"

    @property
    def busy(self) -> bool:
        return self.truth != "idle"

    @property
    def attempted(self) -> bool:
        return self.t_decision == "transmit"

    def determination(self) -> Optional[int]:
        """T's channel-state call for error accounting: backoff counts as busy."""
        if self.warmup:
            return None
        if self.t_decision == "backoff":
            return 1
        return self.t_label

    def as_dict(self) -> dict:
        return asdict(self)


def window_matrix(values: Sequence[float], n_new: int) -> np.ndarray:
    v = np.asarray(values, dtype=np.float64)
    return np.lib.stride_tricks.sliding_window_view(v, n_new).copy()


def collect_dataset(records: Sequence[SlotRecord], n_new: int, owner: str) -> Dataset:
    """Windows of the owner's own sensed powers, one sample per slot t >= n_new-1.

    Transmitter labels are channel state (1 = busy); adversary labels are the
    ACK observed in slot t.
    """
    if len(records) < n_new:
        raise ValueError(f"need at least n_new={n_new} records, got {len(records)}")
    if owner == "transmitter":
        X = window_matrix([r.sensed_T for r in records], n_new)
        y = [int(r.busy) for r in records[n_new - 1:]]
    elif owner == "adversary":
        X = window_matrix([r.sensed_A for r in records], n_new)
        y = [int(r.ack) for r in records[n_new - 1:]]
    else:
        raise ValueError(f"unknown owner {owner!r}")
    return Dataset(X, np.array(y, dtype=np.int64))
