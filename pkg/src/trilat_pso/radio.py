"""ZigBee link budget: transmit power to range and back.

Ranges come from the log-distance link budget of a 2.4 GHz transceiver::

    x = (P_o - F_m - P_r + 30 n - 32.44 - 10 n log10(f)) / (10 n)
    R = 10 ** x

and the inverse gives the output power needed to reach a range. Output power
is converted to milliwatts with ``10 ** (P_o / 10)``.

Examples
--------
>>> from trilat_pso.radio import PowerLevel, level_range, mw_from_dbm
>>> round(level_range(PowerLevel.MAX), 2)
132.22
>>> round(mw_from_dbm(-3), 4)
0.5012
"""
import enum
import functools
import math
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

# Representational limits of a continuous range in meters.
RANGE_LIMITS = (60.0, 132.0)


@dataclass(frozen=True)
class RadioParams:
    """Link budget constants.

    Parameters
    ----------
    fade_margin_db: float, default 8
        Fade margin F_m in dB.
    receiver_sensitivity_dbm: float, default -98
        Receiver sensitivity P_r in dBm.
    frequency_mhz: float, default 2405
        Carrier frequency f in MHz.
    path_loss_exponent: float, default 2.5
        Path loss exponent n.
    """

    fade_margin_db: float = 8.0
    receiver_sensitivity_dbm: float = -98.0
    frequency_mhz: float = 2405.0
    path_loss_exponent: float = 2.5

    def __post_init__(self):
        if self.path_loss_exponent <= 0:
            raise ValueError("path_loss_exponent must be positive.")
        if self.frequency_mhz <= 0:
            raise ValueError("frequency_mhz must be positive.")

    @property
    def _offset_dbm(self):
        """Terms of the budget that do not depend on power or range."""
        n = self.path_loss_exponent
        return (
            10 * n * math.log10(self.frequency_mhz)
            - 30 * n
            + self.fade_margin_db
            + self.receiver_sensitivity_dbm
            + 32.44
        )


DEFAULT_RADIO = RadioParams()


class PowerLevel(enum.IntEnum):
    """The three discrete output power levels.

    The integer value is the column of the level in a binary position matrix.
    """

    MIN = 0
    MID = 1
    MAX = 2

    @property
    def output_dbm(self) -> float:
        return LEVEL_DBM[self]


LEVEL_DBM = {PowerLevel.MIN: -3.0, PowerLevel.MID: 1.0, PowerLevel.MAX: 5.0}


def range_from_dbm(p_o, params: RadioParams = DEFAULT_RADIO):
    """Transmission range in meters reached with output power ``p_o`` dBm.

    Works elementwise on numpy arrays.
    """
    n = params.path_loss_exponent
    x = (np.asarray(p_o, dtype=float) - params._offset_dbm) / (10 * n)
    r = np.power(10.0, x)
    return float(r) if np.ndim(r) == 0 else r


def dbm_from_range(r, params: RadioParams = DEFAULT_RADIO):
    """Output power in dBm needed to reach ``r`` meters.

    Raises
    ------
    ValueError
        If any range is not strictly positive.
    """
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0):
        raise ValueError("range must be positive.")
    p_o = 10 * params.path_loss_exponent * np.log10(r) + params._offset_dbm
    return float(p_o) if np.ndim(p_o) == 0 else p_o


def mw_from_dbm(p):
    """Convert dBm to milliwatts."""
    mw = np.power(10.0, np.asarray(p, dtype=float) / 10)
    return float(mw) if np.ndim(mw) == 0 else mw


def level_range(level: PowerLevel, params: RadioParams = DEFAULT_RADIO) -> float:
    """Range in meters of a discrete power level."""
    return range_from_dbm(PowerLevel(level).output_dbm, params)


def level_power_mw(level: PowerLevel) -> float:
    """Per-message power in mW of a discrete power level."""
    return mw_from_dbm(PowerLevel(level).output_dbm)


@functools.lru_cache(maxsize=None)
def _level_ranges(params: RadioParams) -> np.ndarray:
    return np.array([level_range(lv, params) for lv in PowerLevel])


@functools.lru_cache(maxsize=None)
def _level_powers() -> np.ndarray:
    return np.array([level_power_mw(lv) for lv in PowerLevel])


class AssignmentMode(enum.Enum):
    """How a RangeAssignment expresses each node's transmit configuration."""

    DISCRETE = "discrete"
    CONTINUOUS = "continuous"


@dataclass(frozen=True)
class RangeAssignment:
    """Per-node transmit configuration.

    Build one with :meth:`discrete` or :meth:`continuous` rather than directly.

    Parameters
    ----------
    mode: AssignmentMode
        Discrete power levels or continuous ranges.
    values: tuple
        One PowerLevel (discrete) or one range in meters (continuous) per node.
    params: RadioParams
        Link budget used to turn values into ranges and power.
    """

    mode: AssignmentMode
    values: Tuple
    params: RadioParams = DEFAULT_RADIO

    @classmethod
    def discrete(cls, levels: Sequence, params: RadioParams = DEFAULT_RADIO):
        """Assign a power level to every node."""
        return cls(AssignmentMode.DISCRETE, tuple(PowerLevel(lv) for lv in levels), params)

    @classmethod
    def uniform(cls, level: PowerLevel, n_nodes: int, params: RadioParams = DEFAULT_RADIO):
        """Assign the same power level to all ``n_nodes`` nodes."""
        return cls.discrete([level] * n_nodes, params)

    @classmethod
    def continuous(
        cls,
        ranges: Sequence[float],
        params: RadioParams = DEFAULT_RADIO,
        bounds: Optional[Tuple[float, float]] = RANGE_LIMITS,
    ):
        """Assign a range in meters to every node.

        Parameters
        ----------
        ranges: Sequence[float]
            One range per node.
        bounds: (float, float) or None, default RANGE_LIMITS
            Inclusive bounds every range must satisfy. None disables the check.

        Raises
        ------
        ValueError
            If a range lies outside ``bounds``.
        """
        values = tuple(float(r) for r in ranges)
        if bounds is not None:
            low, high = bounds
            for node, r in enumerate(values):
                if not low <= r <= high:
                    raise ValueError(f"range {r} of node {node} outside [{low}, {high}].")
        return cls(AssignmentMode.CONTINUOUS, values, params)

    def __len__(self):
        return len(self.values)

    def ranges_m(self) -> np.ndarray:
        """Transmission range of every node in meters."""
        if self.mode is AssignmentMode.DISCRETE:
            return _level_ranges(self.params)[np.array(self.values, dtype=int)]
        return np.array(self.values, dtype=float)

    def power_mw(self) -> np.ndarray:
        """Per-message transmit power of every node in mW."""
        if self.mode is AssignmentMode.DISCRETE:
            return _level_powers()[np.array(self.values, dtype=int)]
        return mw_from_dbm(dbm_from_range(np.array(self.values, dtype=float), self.params))

    def levels(self) -> Optional[np.ndarray]:
        """Level index of every node, or None in continuous mode."""
        if self.mode is AssignmentMode.DISCRETE:
            return np.array(self.values, dtype=int)
        return None

    def __str__(self):
        if self.mode is AssignmentMode.DISCRETE:
            return " ".join(PowerLevel(v).name for v in self.values)
        return " ".join(repr(v) for v in self.values)
