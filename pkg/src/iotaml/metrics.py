"""Error probabilities, throughput, success ratio and attack energy."""

from __future__ import annotations

from dataclasses import dataclass, asdict
from fractions import Fraction
from numbers import Real
from typing import Sequence

from .records import SENSING_ACTIONS, SlotRecord


class UndefinedMetric(ValueError):
    """The metric's denominator is empty for this record list."""


@dataclass
class Metrics:
    e_FA: float
    e_MD: float
    normalized_throughput: float
    success_ratio: float
    attack_count: int
    attack_energy: float

    def as_dict(self) -> dict:
        return asdict(self)


def _scored(records: Sequence[SlotRecord]):
    return [r for r in records if not r.warmup]


def confusion(records: Sequence[SlotRecord]):
    """(e_FA, e_MD) of T's channel-state calls against ground truth.

    Uses the classifier label before any defense flip; slots spent in backoff
    count as busy calls.
    """
    calls = [(r.busy, r.determination()) for r in _scored(records)]
    calls = [(b, c) for b, c in calls if c is not None]
    idle = [c for b, c in calls if not b]
    busy = [c for b, c in calls if b]
    if not idle or not busy:
        raise UndefinedMetric("confusion needs at least one idle and one busy slot")
    return sum(c == 1 for c in idle) / len(idle), sum(c == 0 for c in busy) / len(busy)


def normalized_throughput(records: Sequence[SlotRecord]) -> float:
    recs = _scored(records)
    idle = sum(not r.busy for r in recs)
    if idle == 0:
        raise UndefinedMetric("no idle slots: ideal throughput is zero")
    return sum(r.outcome == "success" for r in recs) / idle


def success_ratio(records: Sequence[SlotRecord]) -> float:
    recs = _scored(records)
    attempts = sum(r.attempted for r in recs)
    if attempts == 0:
        raise UndefinedMetric("no transmission attempts")
    return sum(r.outcome == "success" for r in recs) / attempts


def attack_count(records: Sequence[SlotRecord]) -> int:
    return sum(r.attack_action != "none" for r in records)


def attack_energy(records: Sequence[SlotRecord], ratio: Real = Fraction(1, 9),
                  p_a: Real = 1000) -> Fraction:
    """Adversary energy in power x phase-length units (data phase = 1).

    Exact rational arithmetic so energy ratios between attack kinds are exact.
    """
    ratio, p_a = Fraction(ratio), Fraction(p_a)
    if not 0 < ratio < 1:
        raise ValueError("ratio must be in (0,1)")
    n_data = sum(r.attack_action == "jam_data" for r in records)
    n_sense = sum(r.attack_action in SENSING_ACTIONS for r in records)
    return p_a * (n_data + n_sense * ratio)


def compute_metrics(records: Sequence[SlotRecord], ratio: Real = Fraction(1, 9),
                    p_a: Real = 1000) -> Metrics:
    """All metrics for one phase; undefined ratios are reported as NaN."""
    def safe(fn):
        try:
            return fn(records)
        except UndefinedMetric:
            return float("nan")

    cf = safe(confusion)
    e_fa, e_md = cf if isinstance(cf, tuple) else (cf, cf)
    return Metrics(e_fa, e_md, safe(normalized_throughput), safe(success_ratio),
                   attack_count(records), float(attack_energy(records, ratio, p_a)))
