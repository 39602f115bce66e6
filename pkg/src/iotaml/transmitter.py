"""The IoT transmitter: channel-state classifier, slot decisions with the
confidence-based defense, and feedback-driven retraining."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from typing import List, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from . import nnet
from .nnet import Dataset, DenseNet, Hyperparams
from .records import SlotRecord, collect_dataset

EPS = 1e-6


@dataclass
class DefensePolicy:
    enabled: bool = False
    p_d: float = 0.0
    # set from training scores by compute_confidence_thresholds
    tau0: Optional[float] = None
    tau1: Optional[float] = None

    def __post_init__(self):
        if not 0.0 <= self.p_d <= 1.0:
            raise ValueError(f"p_d must be in [0,1], got {self.p_d}")

    def high_confidence(self, score: float) -> bool:
        if self.tau0 is None or self.tau1 is None:
            return False
        return score <= self.tau0 or score >= self.tau1


def compute_confidence_thresholds(scores: Sequence[float], labels: Sequence[int],
                                  tau: float = 0.5) -> Tuple[float, float]:
    """Median training score per class, pushed outside tau if needed."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    if not (labels == 0).any() or not (labels == 1).any():
        raise ValueError("both labels are needed to set confidence thresholds")
    tau0 = float(np.median(scores[labels == 0]))
    tau1 = float(np.median(scores[labels == 1]))
    if not tau0 < tau < tau1:
        tau0 = min(tau0, tau - EPS)
        tau1 = max(tau1, tau + EPS)
    return tau0, tau1


class Decision(NamedTuple):
    action: str
    defense_flip: bool
    label: Optional[int]
    score: Optional[float]


def decide(net: DenseNet, window, policy: DefensePolicy, backoff_remaining: int,
           rng: np.random.Generator, tau: float = 0.5) -> Decision:
    """Transmit iff the classifier calls the channel idle, subject to backoff
    and the randomized flip of high-confidence decisions."""
    u = rng.random()
    if backoff_remaining > 0:
        return Decision("backoff", False, None, None)
    label, score = nnet.classify(net, window, tau)
    action = "transmit" if label == 0 else "hold"
    if policy.enabled and policy.high_confidence(score) and u < policy.p_d:
        return Decision("hold" if action == "transmit" else "transmit", True, label, score)
    return Decision(action, False, label, score)


def feedback_dataset(records: Sequence[SlotRecord], n_new: int) -> Dataset:
    """Retraining labels: ACK -> idle, missing ACK -> busy on transmitted
    slots; sensed ground truth elsewhere."""
    data = collect_dataset(records, n_new, "transmitter")
    labels = data.labels.copy()
    for i, r in enumerate(records[n_new - 1:]):
        if r.attempted:
            labels[i] = 0 if r.ack else 1
    return Dataset(data.features, labels)


class Transmitter:
    def __init__(self, n_new: int, candidates: Optional[List[Hyperparams]] = None,
                 policy: Optional[DefensePolicy] = None, backoff_len: Optional[int] = None,
                 validation_fraction: float = 0.2):
        self.n_new = n_new
        self.candidates = candidates or nnet.default_grid()
        self.policy = policy or DefensePolicy()
        # None disables backoff (no priority traffic in the scenario)
        self.backoff_len = backoff_len
        self.validation_fraction = validation_fraction
        self.net: Optional[DenseNet] = None
        self.hyper: Optional[Hyperparams] = None
        self.train_data: Optional[Dataset] = None
        self.backoff_remaining = 0

    @property
    def tau(self) -> float:
        return self.hyper.decision_threshold if self.hyper else 0.5

    def train_initial(self, records: Sequence[SlotRecord], rng: np.random.Generator) -> DenseNet:
        data = collect_dataset(records, self.n_new, "transmitter")
        if not data.has_both_labels():
            raise ValueError("training records cover a single channel state")
        result = fit_classifier(data, self.candidates, self.validation_fraction, rng)
        self.net, self.hyper, self.train_data = result.net, result.hyperparams, data
        self.policy.tau0, self.policy.tau1 = compute_confidence_thresholds(
            nnet.scores(self.net, data.features), data.labels, self.tau)
        return self.net

    def decide(self, window, rng: np.random.Generator) -> Decision:
        d = decide(self.net, window, self.policy, self.backoff_remaining, rng, self.tau)
        if d.action == "backoff":
            self.backoff_remaining -= 1
        elif self.backoff_len is not None and d.label == 1:
            self.backoff_remaining = self.backoff_len
        return d

    def retrain(self, records: Sequence[SlotRecord], rng: np.random.Generator) -> DenseNet:
        """Warm-start from the current classifier on old plus feedback-labeled data."""
        if len(records) < self.n_new:
            return self.net
        new = feedback_dataset(records, self.n_new)
        union = Dataset.concat([self.train_data, new])
        h = dataclasses.replace(self.hyper, batch_size=min(self.hyper.batch_size, len(union)))
        self.net, _ = nnet.train(self.net, union, h, rng)
        return self.net


def fit_classifier(data: Dataset, candidates: Sequence[Hyperparams], validation_fraction: float,
                   rng: np.random.Generator) -> nnet.SearchResult:
    """hyper_search on a time-ordered train/validation split of ``data``.

    Tiny sets whose split would leave a one-class validation tail are used
    whole for both roles.
    """
    train_set, validation = data.split(validation_fraction)
    if len(train_set) == 0 or not validation.has_both_labels() or not train_set.has_both_labels():
        train_set = validation = data
    candidates = [dataclasses.replace(h, batch_size=min(h.batch_size, len(train_set)))
                  for h in candidates]
    return nnet.hyper_search(candidates, train_set, validation, rng)
