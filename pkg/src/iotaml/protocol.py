"""Scenario description and the slot engine.

Each slot runs sensing -> decision -> transmission -> feedback. Randomness
comes from named streams derived from the master seed per (phase, purpose),
and every stream is consumed the same number of times per slot whatever the
agents do, so toggling an attack leaves unrelated draws untouched.
"""

from __future__ import annotations

import copy
import zlib
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional

import numpy as np

from . import channel
from .adversary import Adversary, AttackConfig, SENSING_KINDS
from .channel import ChannelModel, NodeLayout
from .nnet import Hyperparams
from .records import PHASES, SlotRecord
from .traffic import BackgroundTraffic, PriorityTraffic, step_background, step_priority
from .transmitter import DefensePolicy, Transmitter


@dataclass
class NNetConfig:
    learning_rates: List[float] = field(default_factory=lambda: [0.1, 0.03, 0.01])
    hidden_layers: int = 3
    neurons_per_layer: int = 100
    batch_size: int = 100
    training_steps: int = 1000
    decision_threshold: float = 0.5
    validation_fraction: float = 0.2

    def __post_init__(self):
        if not self.learning_rates:
            raise ValueError("learning_rates must be non-empty")
        if not 0.0 < self.validation_fraction < 1.0:
            raise ValueError("validation_fraction must be in (0,1)")
        for h in self.candidates():
            h.validate()

    def candidates(self) -> List[Hyperparams]:
        return [Hyperparams(learning_rate=float(lr), hidden_layers=self.hidden_layers,
                            neurons_per_layer=self.neurons_per_layer,
                            batch_size=self.batch_size, training_steps=self.training_steps,
                            decision_threshold=self.decision_threshold)
                for lr in self.learning_rates]


@dataclass
class ScenarioConfig:
    layout: NodeLayout = field(default_factory=NodeLayout)
    channel: ChannelModel = field(default_factory=ChannelModel)
    background: BackgroundTraffic = field(default_factory=BackgroundTraffic)
    priority: Optional[PriorityTraffic] = None
    n_new: int = 10
    train_slots: int = 1000
    test_slots: int = 500
    retrain_slots: int = 1000
    attack: AttackConfig = field(default_factory=AttackConfig)
    defense: DefensePolicy = field(default_factory=DefensePolicy)
    nnet: NNetConfig = field(default_factory=NNetConfig)
    master_seed: int = 0
    sensing_to_transmission_ratio: Fraction = Fraction(1, 9)

    def __post_init__(self):
        for name in ("n_new", "train_slots", "test_slots", "retrain_slots"):
            v = getattr(self, name)
            if int(v) != v or v < 1:
                raise ValueError(f"{name} must be a positive integer, got {v}")
        if self.n_new > self.train_slots:
            raise ValueError("n_new must not exceed train_slots")
        self.sensing_to_transmission_ratio = Fraction(self.sensing_to_transmission_ratio)
        if not 0 < self.sensing_to_transmission_ratio < 1:
            raise ValueError("sensing_to_transmission_ratio must be in (0,1)")
        if self.attack.kind == "priority_violation" and self.priority is None:
            raise ValueError("priority_violation needs a scenario with priority traffic")

    def phase_slots(self, phase: str) -> int:
        return {"train_collect": self.train_slots, "observe": self.attack.observe_slots,
                "retrain_collect": self.retrain_slots, "test": self.test_slots}[phase]


def _key(name: str) -> int:
    return zlib.crc32(name.encode())


def derive_seed(master_seed: int, *names) -> int:
    key = tuple(_key(str(n)) for n in names)
    return int(np.random.SeedSequence(master_seed, spawn_key=key).generate_state(1)[0])


class Simulation:
    """World state plus both agents, advanced one slot at a time."""

    STREAMS = ("traffic", "channel-T", "channel-A", "channel-R", "defense", "nnet-T", "nnet-A")

    def __init__(self, config: ScenarioConfig, seed: Optional[int] = None):
        self.config = config
        self.seed = config.master_seed if seed is None else seed
        cm, lay = config.channel, config.layout
        g = lambda a, b: channel.channel_gain(a, b, cm)
        self.rx_B_at_T = cm.P_B * g(lay.B, lay.T)
        self.rx_B_at_A = cm.P_B * g(lay.B, lay.A)
        self.rx_A_at_T = cm.P_A * g(lay.A, lay.T)
        self.rx_T_at_R = cm.P_T * g(lay.T, lay.R)
        self.rx_B_at_R = cm.P_B * g(lay.B, lay.R)
        self.rx_A_at_R = cm.P_A * g(lay.A, lay.R)

        self.background = copy.deepcopy(config.background)
        self.priority = copy.deepcopy(config.priority)
        backoff_len = config.priority.backoff_len if config.priority else None
        cands = config.nnet.candidates()
        vf = config.nnet.validation_fraction
        self.transmitter = Transmitter(config.n_new, cands, copy.deepcopy(config.defense),
                                       backoff_len, vf)
        self.adversary = Adversary(config.attack, config.n_new, cands,
                                   backoff_len if backoff_len else 2, vf)
        self.hist_T: deque = deque(maxlen=config.n_new)
        self.hist_A: deque = deque(maxlen=config.n_new)
        self.slot = 0
        self._streams: Dict[tuple, np.random.Generator] = {}

    def rng(self, phase: str, name: str) -> np.random.Generator:
        key = (phase, name)
        if key not in self._streams:
            ss = np.random.SeedSequence(self.seed, spawn_key=(_key(phase), _key(name)))
            self._streams[key] = np.random.default_rng(ss)
        return self._streams[key]

    def branch(self, seed: Optional[int] = None, attack: Optional[AttackConfig] = None,
               defense: Optional[DefensePolicy] = None) -> "Simulation":
        """Independent copy; later phases draw from streams of ``seed``."""
        other = copy.deepcopy(self)
        if seed is not None:
            other.seed = seed
            other._streams = {}
        if attack is not None:
            other.adversary.config = attack
            other.config = copy.copy(other.config)
            other.config.attack = attack
        if defense is not None:
            pol = other.transmitter.policy
            pol.enabled, pol.p_d = defense.enabled, defense.p_d
        return other

    def run_slot(self, phase: str) -> SlotRecord:
        T, A = self.transmitter, self.adversary
        n_new = self.config.n_new
        attack_on = A.config.active_in(phase) and A.net is not None

        # (1) traffic
        trng = self.rng(phase, "traffic")
        bg_busy = step_background(self.background, trng)
        pr_busy = step_priority(self.priority, trng) if self.priority else False
        truth = "busy_priority" if pr_busy else ("busy_background" if bg_busy else "idle")
        b_on = truth != "idle"

        # A senses the start of the sensing phase, before any injection of its own
        s_A = channel.sample_sensed_power([(self.rx_B_at_A, 1.0)] if b_on else [],
                                          self.config.channel, self.rng(phase, "channel-A"))
        self.hist_A.append(s_A)
        a_ready = len(self.hist_A) == n_new
        a_window = np.fromiter(self.hist_A, float, n_new) if a_ready else None
        predicted = A.predicts_success(a_window) if attack_on and a_ready else None

        # (2) sensing-phase attack
        action = "none"
        if attack_on and a_ready and A.config.kind in SENSING_KINDS:
            action = A.act_sensing_phase(a_window, phase, predicted)

        # (3) T senses, including injected energy
        sources = []
        if b_on:
            sources.append((self.rx_B_at_T, 1.0))
        if action != "none":
            sources.append((self.rx_A_at_T, 1.0))
        s_T = channel.sample_sensed_power(sources, self.config.channel, self.rng(phase, "channel-T"))
        self.hist_T.append(s_T)

        rec = SlotRecord(slot_index=self.slot, truth=truth, sensed_T=s_T, sensed_A=s_A,
                         attack_action=action, phase=phase, a_predicts_success=predicted)

        # (4) decision
        drng = self.rng(phase, "defense")
        if len(self.hist_T) < n_new:
            drng.random()
            rec.warmup = True
        elif T.net is None:
            drng.random()
        else:
            d = T.decide(np.fromiter(self.hist_T, float, n_new), drng)
            rec.t_decision, rec.defense_flip = d.action, d.defense_flip
            rec.t_label, rec.t_score = d.label, d.score

        # (5) data-phase jamming
        if attack_on and a_ready and A.config.kind == "jamming":
            rec.attack_action = A.act_data_phase(a_window, phase, predicted)

        # (6) outcome; the SINR draw happens every slot to keep streams aligned
        interferers = []
        if b_on:
            interferers.append(self.rx_B_at_R)
        jammed = rec.attack_action == "jam_data"
        if jammed:
            interferers.append(self.rx_A_at_R)
        ok = channel.transmission_success(self.rx_T_at_R, interferers, self.config.channel,
                                          self.rng(phase, "channel-R"))
        if rec.t_decision == "transmit":
            rec.outcome = "success" if ok else ("jammed_fail" if jammed else "collision_fail")
        rec.ack = rec.outcome == "success"

        # (7) feedback overheard by A
        A.observe_feedback(rec.ack)
        self.slot += 1
        return rec

    def run_phase(self, phase: str, n_slots: Optional[int] = None) -> List[SlotRecord]:
        if phase not in PHASES:
            raise ValueError(f"unknown phase {phase!r}")
        n = self.config.phase_slots(phase) if n_slots is None else n_slots
        return [self.run_slot(phase) for _ in range(n)]


def run_phase(config: ScenarioConfig, phase: str, sim: Simulation) -> List[SlotRecord]:
    return sim.run_phase(phase)


def causative_campaign(sim: Simulation) -> List[str]:
    """Run the retraining-collection phase under a retraining-phase attack and
    return the adversary's per-slot actions (records stay on ``sim``)."""
    if sim.adversary.config.phase != "retraining":
        raise ValueError("causative campaign needs attack.phase == 'retraining'")
    sim.last_retrain_records = sim.run_phase("retrain_collect")
    return [r.attack_action for r in sim.last_retrain_records]


@dataclass
class PipelineResult:
    seed: int
    train_records: List[SlotRecord]
    observe_records: List[SlotRecord]
    retrain_records: List[SlotRecord]
    test_records: List[SlotRecord]
    sim: Simulation


def prepare(config: ScenarioConfig, seed: Optional[int] = None, train_adversary: bool = True):
    """Train T on the collection phase, then let T operate unattacked while
    A observes. Returns (sim, train_records, observe_records)."""
    sim = Simulation(config, seed)
    train_records = sim.run_phase("train_collect")
    sim.transmitter.train_initial(train_records, sim.rng("train_collect", "nnet-T"))
    observe_records = sim.run_phase("observe")
    if train_adversary and config.attack.kind != "none":
        sim.adversary.exploratory_train(observe_records, sim.rng("observe", "nnet-A"))
    return sim, train_records, observe_records


def finish(sim: Simulation) -> tuple:
    """Optional retraining phase, then the test phase."""
    retrain_records: List[SlotRecord] = []
    if sim.adversary.config.phase == "retraining":
        retrain_records = sim.run_phase("retrain_collect")
        sim.transmitter.retrain(retrain_records, sim.rng("retrain_collect", "nnet-T"))
    return retrain_records, sim.run_phase("test")


def run_pipeline(config: ScenarioConfig, seed: Optional[int] = None) -> PipelineResult:
    sim, train_records, observe_records = prepare(config, seed)
    retrain_records, test_records = finish(sim)
    return PipelineResult(sim.seed, train_records, observe_records, retrain_records,
                          test_records, sim)
