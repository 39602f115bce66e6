"""The adversary: black-box exploratory learning of T's transmission outcomes
and the jamming, spectrum-poisoning and priority-violation executors."""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np

from . import nnet
from .nnet import DenseNet, Hyperparams
from .records import SlotRecord, collect_dataset
from .transmitter import fit_classifier

KINDS = ("none", "jamming", "spectrum_poisoning", "priority_violation")
ATTACK_PHASES = ("test", "retraining")
SENSING_KINDS = ("spectrum_poisoning", "priority_violation")


class AttackContractError(RuntimeError):
    """An executor was invoked for the wrong attack kind or phase."""


@dataclass
class AttackConfig:
    kind: str = "none"
    phase: str = "test"
    observe_slots: int = 1000

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"attack kind must be one of {KINDS}, got {self.kind!r}")
        if self.phase not in ATTACK_PHASES:
            raise ValueError(f"attack phase must be one of {ATTACK_PHASES}, got {self.phase!r}")
        if self.observe_slots < 1:
            raise ValueError("observe_slots must be positive")

    def active_in(self, sim_phase: str) -> bool:
        if self.kind == "none":
            return False
        return ((self.phase == "test" and sim_phase == "test")
                or (self.phase == "retraining" and sim_phase == "retrain_collect"))


class Adversary:
    def __init__(self, config: AttackConfig, n_new: int,
                 candidates: Optional[List[Hyperparams]] = None,
                 backoff_len: int = 2, validation_fraction: float = 0.2):
        self.config = config
        self.n_new = n_new
        self.candidates = candidates or nnet.default_grid()
        self.backoff_len = backoff_len
        self.validation_fraction = validation_fraction
        self.net: Optional[DenseNet] = None
        self.hyper: Optional[Hyperparams] = None
        # slots still covered by a backoff this adversary believes it induced
        self.induced_backoff = 0
        self._replayed_this_slot = False

    @property
    def tau(self) -> float:
        return self.hyper.decision_threshold if self.hyper else 0.5

    def exploratory_train(self, records: Sequence[SlotRecord], rng: np.random.Generator) -> DenseNet:
        """Learn to predict ACKs from A's own sensing; labels are overheard feedback."""
        data = collect_dataset(records, self.n_new, "adversary")
        if not data.has_both_labels():
            raise ValueError("observation window holds a single ACK outcome; cannot train")
        result = fit_classifier(data, self.candidates, self.validation_fraction, rng)
        self.net, self.hyper = result.net, result.hyperparams
        return self.net

    def predicts_success(self, window) -> bool:
        label, _ = nnet.classify(self.net, window, self.tau)
        return label == 1

    def act_sensing_phase(self, window, sim_phase: str, predicted: Optional[bool] = None) -> str:
        kind = self.config.kind
        if kind not in SENSING_KINDS or not self.config.active_in(sim_phase):
            raise AttackContractError(
                f"sensing-phase attack requested for kind={kind!r} in phase {sim_phase!r}")
        self._replayed_this_slot = False
        if kind == "priority_violation" and self.induced_backoff > 0:
            self.induced_backoff -= 1
            return "none"
        if predicted is None:
            predicted = self.predicts_success(window)
        if not predicted:
            return "none"
        if kind == "spectrum_poisoning":
            return "poison_sense"
        self._replayed_this_slot = True
        return "replay_priority"

    def act_data_phase(self, window, sim_phase: str, predicted: Optional[bool] = None) -> str:
        if self.config.kind == "none":
            return "none"
        if self.config.kind != "jamming" or not self.config.active_in(sim_phase):
            raise AttackContractError(
                f"data-phase jamming requested for kind={self.config.kind!r} in phase {sim_phase!r}")
        if predicted is None:
            predicted = self.predicts_success(window)
        return "jam_data" if predicted else "none"

    def observe_feedback(self, ack: bool) -> None:
        # a replay followed by silence is taken as a backoff triggered at T
        if self._replayed_this_slot and not ack:
            self.induced_backoff = self.backoff_len
        self._replayed_this_slot = False
