"""Configuration files and ``key=value`` overrides.

A configuration file holds one ``key=value`` pair per line; blank lines and
lines starting with ``#`` are ignored::

    # continuous sweep base
    n_particles = 50
    inertia = 0.1
    path_loss_exponent = 2.5
"""
from dataclasses import fields, replace
from pathlib import Path
from typing import Dict, Iterable, Mapping, Union

from loguru import logger

from trilat_pso.mopso import CrowdingUpdate
from trilat_pso.radio import RadioParams
from trilat_pso.swarm import FixedInertia, PositionUpdate, PsoConfig, RandomInertia

RADIO_KEYS = {f.name for f in fields(RadioParams)}


def parse_bool(value: str) -> bool:
    lowered = value.strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"expected a boolean, got {value!r}.")


def parse_inertia(value: str):
    """``random`` or a fixed weight."""
    if value.strip().lower() == "random":
        return RandomInertia()
    return FixedInertia(float(value))


def parse_mutation_value(value: str):
    """``min``, ``max`` or a range in meters."""
    lowered = value.strip().lower()
    if lowered in ("min", "max"):
        return lowered
    return float(value)


CONVERTERS = {
    "n_particles": int,
    "n_iterations": int,
    "c1": float,
    "c2": float,
    "inertia": parse_inertia,
    "min_range": float,
    "max_range": float,
    "seed": int,
    "position_update": PositionUpdate,
    "objective": str,
    "archive_capacity": int,
    "mutation_fraction": float,
    "mutation_value": parse_mutation_value,
    "epsilon_equal": float,
    "include_messages": parse_bool,
    "crowding_update": CrowdingUpdate,
    **{key: float for key in RADIO_KEYS},
}


def parse_key_values(lines: Iterable[str]) -> Dict[str, str]:
    """Parse ``key=value`` lines.

    Raises
    ------
    ValueError
        If a non-comment line has no ``=``.
    """
    pairs = {}
    for lineno, line in enumerate(lines, start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected key=value, got {line!r}.")
        key, value = line.split("=", 1)
        pairs[key.strip()] = value.strip()
    return pairs


def read_config_file(path: Union[str, Path]) -> Dict[str, str]:
    """Read a ``key=value`` configuration file."""
    logger.info("Reading config file {}.", path)
    with open(path, "r", encoding="utf-8") as config_file:
        return parse_key_values(config_file)


def apply_overrides(config: PsoConfig, overrides: Mapping[str, str]) -> PsoConfig:
    """Return a copy of ``config`` with the overrides applied.

    Parameters
    ----------
    config: PsoConfig or MopsoConfig
    overrides: Mapping[str, str]
        Raw string values keyed by field name. Link budget keys update the
        nested RadioParams.

    Raises
    ------
    ValueError
        If a key is unknown for this kind of config or a value does not parse.
    """
    known = {f.name for f in fields(config)} | RADIO_KEYS
    changes = {}
    radio_changes = {}
    for key, raw in overrides.items():
        if key not in known or key not in CONVERTERS:
            raise ValueError(f"unknown config key {key!r}.")
        try:
            value = CONVERTERS[key](raw)
        except (TypeError, ValueError) as exc:
            raise ValueError(f"bad value for {key}: {raw!r} ({exc}).") from exc
        if key in RADIO_KEYS:
            radio_changes[key] = value
        else:
            changes[key] = value
    if radio_changes:
        changes["radio"] = replace(config.radio, **radio_changes)
    logger.debug("config overrides {}", changes)
    return replace(config, **changes)


def describe(config: PsoConfig) -> Dict[str, str]:
    """Flatten a config into printable ``key -> value`` strings."""
    described = {}
    for f in fields(config):
        value = getattr(config, f.name)
        if f.name == "radio":
            described.update({k: repr(getattr(value, k)) for k in sorted(RADIO_KEYS)})
        elif hasattr(value, "value") and not isinstance(value, (int, float)):
            described[f.name] = str(value.value)
        else:
            described[f.name] = str(value)
    return described


__all__ = [
    "apply_overrides",
    "describe",
    "parse_key_values",
    "read_config_file",
]
