"""Leader-follower search for the defense probability p_d.

T (leader) commits to flipping high-confidence decisions with probability
p_d; A (follower) rebuilds its ACK predictor on what it then observes and
attacks. T keeps the p_d with the best attacked throughput, searching a coarse
grid first and then the 1% neighborhood of the coarse winner.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Tuple

from .metrics import normalized_throughput
from .protocol import ScenarioConfig, Simulation, derive_seed, finish
from .transmitter import DefensePolicy


@dataclass
class GameResult:
    evaluated: List[Tuple[float, float]] = field(default_factory=list)
    chosen_p_d: float = 0.0
    chosen_throughput: float = float("-inf")


def _grid(start: float, stop: float, step: float) -> List[float]:
    if step <= 0:
        raise ValueError("step must be positive")
    n = int(round((stop - start) / step))
    return [round(start + i * step, 10) for i in range(n + 1)]


def _best(evaluated: Sequence[Tuple[float, float]]) -> Tuple[float, float]:
    # highest throughput; ties go to the cheaper (smaller) p_d
    return min(evaluated, key=lambda pv: (-pv[1], pv[0]))


def stackelberg_search(evaluate: Callable[[float], float],
                       round1: Tuple[float, float, float] = (0.05, 0.25, 0.05),
                       round2_step: float = 0.01, round2_radius: int = 3) -> GameResult:
    """Two-round coarse-to-fine search; ``evaluate`` maps p_d to V*(p_d)."""
    first = _grid(*round1)
    if not first:
        raise ValueError("empty round-one grid")
    evaluated = [(p, float(evaluate(p))) for p in first]
    winner, _ = _best(evaluated)
    seen = {p for p, _ in evaluated}
    for k in [*range(-round2_radius, 0), *range(1, round2_radius + 1)]:
        p = round(winner + k * round2_step, 10)
        if 0.0 <= p <= 1.0 and p not in seen:
            evaluated.append((p, float(evaluate(p))))
            seen.add(p)
    p, v = _best(evaluated)
    return GameResult(evaluated, p, v)


def prepare_transmitter(config: ScenarioConfig, seed: Optional[int] = None) -> Simulation:
    """Collect training data and train T's classifier; nothing else yet."""
    sim = Simulation(config, seed)
    records = sim.run_phase("train_collect")
    sim.transmitter.train_initial(records, sim.rng("train_collect", "nnet-T"))
    return sim


def evaluate_pd(p_d: float, base: Simulation, details: bool = False):
    """Attacked throughput when T defends with ``p_d`` and A best-responds.

    ``base`` is a simulation whose transmitter is trained; it is not mutated.
    The evaluation draws from streams derived from (base seed, p_d).
    """
    if not 0.0 <= p_d <= 1.0:
        raise ValueError("p_d must be in [0,1]")
    if base.config.attack.kind == "none":
        raise ValueError("defense evaluation needs an attack kind")
    sim = base.branch(seed=derive_seed(base.seed, "defense", round(p_d * 1e6)),
                      defense=DefensePolicy(enabled=p_d > 0, p_d=p_d))
    observed = sim.run_phase("observe")
    # the follower's best response: hyper_search over its own candidate grid
    sim.adversary.exploratory_train(observed, sim.rng("observe", "nnet-A"))
    _, test = finish(sim)
    v = normalized_throughput(test)
    return (v, test) if details else v


def defense_search(config: ScenarioConfig, seed: Optional[int] = None,
                   round1: Tuple[float, float, float] = (0.05, 0.25, 0.05),
                   round2_step: float = 0.01) -> Tuple[GameResult, float, Simulation]:
    """Run the search for one master seed.

    Returns the game result, the undefended attacked throughput V*(0), and the
    prepared simulation (reusable for re-evaluating the chosen p_d).
    """
    base = prepare_transmitter(config, seed)
    result = stackelberg_search(lambda p: evaluate_pd(p, base), round1, round2_step)
    return result, evaluate_pd(0.0, base), base
