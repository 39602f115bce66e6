"""Experiment harness and command-line entry point.

    iotaml run <config.yaml> [--reps N] [--out DIR] [--trace]
    iotaml replicate [--out DIR] [--reps N]
    iotaml defense-search <config.yaml> [--out DIR]

Results go to CSV; the resolved configuration (every default included) is
echoed next to them as YAML.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import logging
import statistics
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence

from . import config as cfgmod
from .config import ConfigError, dump_config, parse_config, preset
from .defense_game import defense_search
from .metrics import Metrics, compute_metrics
from .protocol import ScenarioConfig, finish, prepare
from .records import SlotRecord

log = logging.getLogger("iotaml")

CSV_COLUMNS = ("seed", "attack_kind", "attack_phase", "p_d", "e_fa", "e_md",
               "norm_throughput", "success_ratio", "attack_count", "attack_energy")
TABLE_COLUMNS = ("attack", "false_alarm", "misdetection", "normalized_throughput",
                 "success_ratio")


@dataclass
class RunReport:
    config: dict
    seeds: List[int]
    # one {phase: Metrics} mapping per repetition
    phase_metrics: List[Dict[str, Metrics]]
    rows: List[dict]
    wall_clock: float
    traces: List[List[SlotRecord]] = field(default_factory=list)


def _metrics(config: ScenarioConfig, records: Sequence[SlotRecord]) -> Metrics:
    return compute_metrics(records, config.sensing_to_transmission_ratio, config.channel.P_A)


def csv_row(seed: int, config: ScenarioConfig, m: Metrics) -> dict:
    p_d = config.defense.p_d if config.defense.enabled else 0.0
    return {"seed": seed, "attack_kind": config.attack.kind, "attack_phase": config.attack.phase,
            "p_d": p_d, "e_fa": m.e_FA, "e_md": m.e_MD,
            "norm_throughput": m.normalized_throughput, "success_ratio": m.success_ratio,
            "attack_count": m.attack_count, "attack_energy": m.attack_energy}


def summary_rows(rows: Sequence[dict]) -> List[dict]:
    out = []
    for label, fn in (("mean", statistics.fmean), ("std", statistics.pstdev)):
        row = {c: "" for c in CSV_COLUMNS}
        row["seed"] = label
        row["attack_kind"], row["attack_phase"], row["p_d"] = (
            rows[0]["attack_kind"], rows[0]["attack_phase"], rows[0]["p_d"])
        for c in CSV_COLUMNS[4:]:
            row[c] = fn([float(r[c]) for r in rows])
        out.append(row)
    return out


def run_one(config: ScenarioConfig, seed: int, trace: bool = False):
    sim, _, observe = prepare(config, seed)
    retrain, test = finish(sim)
    phases = {"observe": _metrics(config, observe), "test": _metrics(config, test)}
    if retrain:
        phases["retrain_collect"] = _metrics(config, retrain)
    records = observe + retrain + test if trace else []
    return phases, records


def run_experiment(config: ScenarioConfig, repetitions: int = 1, trace: bool = False) -> RunReport:
    """Repetition i uses master seed ``config.master_seed + i``."""
    if repetitions < 1:
        raise ValueError("repetitions must be positive")
    t0 = time.perf_counter()
    seeds = [config.master_seed + i for i in range(repetitions)]
    phase_metrics, rows, traces = [], [], []
    for seed in seeds:
        phases, records = run_one(config, seed, trace)
        phase_metrics.append(phases)
        rows.append(csv_row(seed, config, phases["test"]))
        if trace:
            traces.append(records)
        log.info("seed %d: %s", seed, phases["test"])
    return RunReport(cfgmod.config_to_dict(config), seeds, phase_metrics, rows,
                     time.perf_counter() - t0, traces)


def write_csv(path: Path, rows: Sequence[dict], columns: Sequence[str]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as f:
        w = csv.DictWriter(f, fieldnames=list(columns))
        w.writeheader()
        w.writerows(rows)


def write_report(report: RunReport, config: ScenarioConfig, out: Path) -> None:
    out.mkdir(parents=True, exist_ok=True)
    write_csv(out / "results.csv", report.rows + summary_rows(report.rows), CSV_COLUMNS)
    (out / "config.yaml").write_text(dump_config(config))
    phase_rows = []
    for seed, phases in zip(report.seeds, report.phase_metrics):
        for phase, m in phases.items():
            phase_rows.append({"seed": seed, "phase": phase, **m.as_dict()})
    write_csv(out / "phase_metrics.csv", phase_rows,
              ["seed", "phase", *Metrics.__dataclass_fields__])
    if report.traces:
        trace_rows = [{"seed": s, **r.as_dict()} for s, recs in zip(report.seeds, report.traces)
                      for r in recs]
        write_csv(out / "trace.csv", trace_rows, ["seed", *SlotRecord.__dataclass_fields__])
    (out / "run.txt").write_text(f"seeds: {report.seeds}\nwall_clock_s: {report.wall_clock:.2f}\n")


TABLES = {
    "table_jamming": ("no_attack", [("No attack", "no_attack"),
                                    ("Jamming attack", "jamming"),
                                    ("Jamming attack on retraining", "jamming_retrain")]),
    "table_poisoning": ("no_attack", [("No attack", "no_attack"),
                                      ("Poisoning attack", "poisoning"),
                                      ("Poisoning attack on retraining", "poisoning_retrain")]),
    "table_priority": ("priority_no_attack",
                       [("No attack", "priority_no_attack"),
                        ("Priority violation attack", "priority_violation"),
                        ("Priority violation attack on retraining",
                         "priority_violation_retrain")]),
}


def _branch_metrics(base_preset: str, rows, seed: int, overrides: dict) -> List[Metrics]:
    """Metrics of several presets that share traffic, T and A up to the
    attack; the shared prefix is simulated once and branched."""
    attack_cfgs = [preset(name).attack for _, name in rows]
    kind = next((a.kind for a in attack_cfgs if a.kind != "none"), "none")
    base_cfg = preset(base_preset, **overrides)
    base_cfg.attack = dataclasses.replace(base_cfg.attack, kind=kind)
    sim, _, _ = prepare(base_cfg, seed)
    out = []
    for attack in attack_cfgs:
        _, test = finish(sim.branch(attack=attack))
        out.append(_metrics(base_cfg, test))
    return out


def replicate_tables(outdir: Path, reps: int = 5, seed: int = 0,
                    overrides: Optional[dict] = None) -> Dict[str, List[dict]]:
    """Measured versions of the three attack tables and the defense search.

    Rows of one table share seeds, so they differ only by the attack.
    ``overrides`` are top-level config entries applied to every preset.
    """
    overrides = overrides or {}
    outdir = Path(outdir)
    tables = {}
    for name, (base, rows) in TABLES.items():
        per_seed = [_branch_metrics(base, rows, seed + i, overrides) for i in range(reps)]
        table = []
        for j, (label, _) in enumerate(rows):
            ms = [p[j] for p in per_seed]
            table.append({"attack": label,
                          "false_alarm": statistics.fmean(m.e_FA for m in ms),
                          "misdetection": statistics.fmean(m.e_MD for m in ms),
                          "normalized_throughput": statistics.fmean(
                              m.normalized_throughput for m in ms),
                          "success_ratio": statistics.fmean(m.success_ratio for m in ms)})
        write_csv(outdir / f"{name}.csv", table, TABLE_COLUMNS)
        tables[name] = table
        log.info("wrote %s", name)

    result, v0, _ = defense_search(
        preset("priority_violation", **{**overrides, "master_seed": seed}))
    trace = [{"iteration": i + 1, "p_d": p, "throughput": v}
             for i, (p, v) in enumerate(result.evaluated)]
    write_csv(outdir / "defense_trace.csv", trace, ("iteration", "p_d", "throughput"))
    write_csv(outdir / "defense_summary.csv",
              [{"undefended_throughput": v0, "chosen_p_d": result.chosen_p_d,
                "chosen_throughput": result.chosen_throughput}],
              ("undefended_throughput", "chosen_p_d", "chosen_throughput"))
    tables["defense_trace"] = trace
    return tables


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = argparse.ArgumentParser(prog="iotaml", description=__doc__.split("\n")[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run one scenario for several seeds")
    p_run.add_argument("config")
    p_run.add_argument("--reps", type=int, default=1)
    p_run.add_argument("--out", default="out")
    p_run.add_argument("--trace", action="store_true", help="also write per-slot trace.csv")

    p_rep = sub.add_parser("replicate", help="regenerate the attack tables and defense trace")
    p_rep.add_argument("--out", default="out/replicate")
    p_rep.add_argument("--reps", type=int, default=5)
    p_rep.add_argument("--seed", type=int, default=0)

    p_def = sub.add_parser("defense-search", help="search the defense probability p_d")
    p_def.add_argument("config")
    p_def.add_argument("--out", default="out/defense")

    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        if args.command == "run":
            config = parse_config(args.config)
            report = run_experiment(config, args.reps, args.trace)
            write_report(report, config, Path(args.out))
            mean = summary_rows(report.rows)[0]
            print(f"{args.reps} run(s) -> {args.out}/results.csv; mean throughput "
                  f"{mean['norm_throughput']:.4f}, success ratio {mean['success_ratio']:.4f}")
        elif args.command == "replicate":
            tables = replicate_tables(Path(args.out), args.reps, args.seed)
            for name in TABLES:
                print(name)
                for row in tables[name]:
                    print("  {attack:42s} FA {false_alarm:.4f}  MD {misdetection:.4f}  "
                          "thr {normalized_throughput:.4f}  succ {success_ratio:.4f}".format(**row))
        else:
            config = parse_config(args.config)
            result, v0, _ = defense_search(config)
            out = Path(args.out)
            write_csv(out / "defense_trace.csv",
                      [{"iteration": i + 1, "p_d": p, "throughput": v}
                       for i, (p, v) in enumerate(result.evaluated)],
                      ("iteration", "p_d", "throughput"))
            (out / "config.yaml").write_text(dump_config(config))
            print(f"undefended {v0:.4f}; chosen p_d {result.chosen_p_d:.2f} "
                  f"-> {result.chosen_throughput:.4f}")
    except (ConfigError, FileNotFoundError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
