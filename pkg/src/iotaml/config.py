"""YAML scenario files: strict parsing, echo, and the named scenario presets.

Sections mirror :class:`ScenarioConfig`: ``layout``, ``channel``,
``background``, ``priority``, ``attack``, ``defense`` and ``nnet``; everything
else is a top-level scalar. Unknown keys are rejected, missing keys keep
their defaults.
"""

from __future__ import annotations

import copy
from fractions import Fraction
from pathlib import Path
from typing import Any, Dict, Optional, Union

import yaml

from .adversary import AttackConfig
from .channel import ChannelModel, NodeLayout
from .protocol import NNetConfig, ScenarioConfig
from .traffic import BackgroundTraffic, PriorityTraffic
from .transmitter import DefensePolicy


class ConfigError(ValueError):
    def __init__(self, key_path: str, message: str):
        super().__init__(f"{key_path}: {message}" if key_path else message)
        self.key_path = key_path


SECTIONS = {
    "layout": (NodeLayout, ("B", "T", "R", "A")),
    "channel": (ChannelModel, ("pathloss_exponent", "mean_noise_power", "power_std",
                               "sinr_threshold", "P_B", "P_T", "P_A")),
    "background": (BackgroundTraffic, ("arrival_rate", "activation_prob")),
    "priority": (PriorityTraffic, ("start_prob", "burst_len", "backoff_len")),
    "attack": (AttackConfig, ("kind", "phase", "observe_slots")),
    "defense": (DefensePolicy, ("enabled", "p_d")),
    "nnet": (NNetConfig, ("learning_rates", "hidden_layers", "neurons_per_layer", "batch_size",
                          "training_steps", "decision_threshold", "validation_fraction")),
}
SCALARS = ("n_new", "train_slots", "test_slots", "retrain_slots", "master_seed",
           "sensing_to_transmission_ratio")
INT_KEYS = {"n_new", "train_slots", "test_slots", "retrain_slots", "master_seed", "burst_len",
            "backoff_len", "observe_slots", "hidden_layers", "neurons_per_layer", "batch_size",
            "training_steps"}


def _ratio(value, path: str) -> Fraction:
    try:
        return Fraction(str(value))
    except (ValueError, ZeroDivisionError):
        raise ConfigError(path, f"not a number or fraction: {value!r}") from None


def _check_type(key: str, value, path: str):
    if key in INT_KEYS and (isinstance(value, bool) or not isinstance(value, int)):
        raise ConfigError(path, f"expected an integer, got {value!r}")
    if key == "enabled" and not isinstance(value, bool):
        raise ConfigError(path, f"expected true/false, got {value!r}")
    return value


def config_from_dict(data: Optional[Dict[str, Any]]) -> ScenarioConfig:
    data = {} if data is None else data
    if not isinstance(data, dict):
        raise ConfigError("", "top level must be a mapping")
    kwargs: Dict[str, Any] = {}
    for key, value in data.items():
        if key in SECTIONS:
            cls, allowed = SECTIONS[key]
            if value is None:
                if key == "priority":
                    kwargs[key] = None
                    continue
                value = {}
            if not isinstance(value, dict):
                raise ConfigError(key, "section must be a mapping")
            fields = {}
            for sub, v in value.items():
                path = f"{key}.{sub}"
                if sub not in allowed:
                    raise ConfigError(path, "unknown key")
                fields[sub] = _check_type(sub, v, path)
            try:
                kwargs[key] = cls(**fields)
            except (ValueError, TypeError) as e:
                raise ConfigError(key, str(e)) from None
        elif key in SCALARS:
            if key == "sensing_to_transmission_ratio":
                kwargs[key] = _ratio(value, key)
            else:
                kwargs[key] = _check_type(key, value, key)
        else:
            raise ConfigError(str(key), "unknown key")
    try:
        return ScenarioConfig(**kwargs)
    except (ValueError, TypeError) as e:
        msg = str(e)
        path = next((k for k in (*SCALARS, *SECTIONS) if msg.startswith(k)), "")
        raise ConfigError(path, msg) from None


def parse_config(path: Union[str, Path]) -> ScenarioConfig:
    text = Path(path).read_text()
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as e:
        raise ConfigError("", f"malformed YAML: {e}") from None
    return config_from_dict(data)


def config_to_dict(config: ScenarioConfig) -> Dict[str, Any]:
    """Every resolved parameter, in a form config_from_dict accepts."""
    out: Dict[str, Any] = {}
    for key, (_, allowed) in SECTIONS.items():
        obj = getattr(config, key)
        if obj is None:
            out[key] = None
            continue
        sec = {}
        for f in allowed:
            v = getattr(obj, f)
            sec[f] = list(v) if isinstance(v, tuple) else v
        out[key] = sec
    for key in SCALARS:
        v = getattr(config, key)
        out[key] = str(v) if isinstance(v, Fraction) else v
    return out


def dump_config(config: ScenarioConfig) -> str:
    return yaml.safe_dump(config_to_dict(config), sort_keys=False)


PRIORITY_TRAFFIC = {"priority": {}, "background": {"arrival_rate": 0.0}}

PRESETS: Dict[str, Dict[str, Any]] = {
    "no_attack": {},
    "jamming": {"attack": {"kind": "jamming", "phase": "test"}},
    "jamming_retrain": {"attack": {"kind": "jamming", "phase": "retraining"}},
    "clean_retrain": {"attack": {"kind": "none", "phase": "retraining"}},
    "poisoning": {"attack": {"kind": "spectrum_poisoning", "phase": "test"}},
    "poisoning_retrain": {"attack": {"kind": "spectrum_poisoning", "phase": "retraining"}},
    "priority_no_attack": dict(PRIORITY_TRAFFIC),
    "priority_violation": {**PRIORITY_TRAFFIC,
                           "attack": {"kind": "priority_violation", "phase": "test"}},
    "priority_violation_retrain": {**PRIORITY_TRAFFIC,
                                   "attack": {"kind": "priority_violation",
                                              "phase": "retraining"}},
    "priority_poisoning": {**PRIORITY_TRAFFIC,
                           "attack": {"kind": "spectrum_poisoning", "phase": "test"}},
}


def preset(name: str, **overrides) -> ScenarioConfig:
    if name not in PRESETS:
        raise KeyError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}")
    data = copy.deepcopy(PRESETS[name])
    data.update(overrides)
    return config_from_dict(data)
