"""Particle swarm building blocks and the single-objective optimizer.

A particle encodes one RangeAssignment. In binary mode the position is an
N × 3 one-hot matrix whose set column picks the Min, Mid or Max power level of
a node; in continuous mode it is a vector of N ranges in meters.

Randomness is drawn from streams keyed by (seed, stream, iteration, particle),
so a particle's moves do not depend on the order particles are processed in.
"""
import enum
from dataclasses import dataclass, field, replace
from typing import List, Optional, Tuple, Union

import numpy as np
from loguru import logger

from trilat_pso.radio import DEFAULT_RADIO, PowerLevel, RadioParams, RangeAssignment
from trilat_pso.simulation import SimOutcome, simulate
from trilat_pso.topology import Topology

N_LEVELS = len(PowerLevel)


class Representation(enum.Enum):
    """Particle encoding."""

    BINARY = "binary"
    CONTINUOUS = "continuous"


class PositionUpdate(enum.Enum):
    """Continuous-mode velocity clamp and position rule.

    ``STANDARD`` clamps velocities into [-δ, δ] and moves ``p + v``.
    ``LITERAL`` maps velocities to mRange (below δ) or δ, and moves to
    ``Ran + v`` with ``Ran ~ U(0, xRange)``. ``"paper-literal"`` is accepted as
    another name for ``LITERAL``.
    """

    STANDARD = "standard"
    LITERAL = "literal"

    @classmethod
    def _missing_(cls, value):
        if value == "paper-literal":
            return cls.LITERAL
        return None


class Stream(enum.IntEnum):
    """Tags separating the random streams of one run."""

    INIT = 0
    MOVE = 1
    MUTATION = 2
    INERTIA = 3


def stream_rng(seed: int, stream: Stream, iteration: int = 0, index: int = 0):
    """Generator for one (seed, stream, iteration, particle) combination."""
    return np.random.default_rng([seed, int(stream), iteration, index])


@dataclass(frozen=True)
class FixedInertia:
    """Constant inertia weight ω."""

    weight: float = 0.1

    def draw(self, rng) -> float:
        return self.weight

    def __str__(self):
        return repr(self.weight)


@dataclass(frozen=True)
class RandomInertia:
    """Random inertia weight, ω = 0.5 + U(0, 1) / 2, redrawn every iteration."""

    def draw(self, rng) -> float:
        return 0.5 + rng.random() / 2

    def __str__(self):
        return "random"


Inertia = Union[FixedInertia, RandomInertia]


@dataclass(frozen=True)
class PsoConfig:
    """Swarm parameters. Defaults are the single-objective settings.

    Parameters
    ----------
    n_particles: int, default 100
    n_iterations: int, default 200
    c1, c2: float, default 1.49445
        Cognitive and social acceleration coefficients.
    inertia: FixedInertia or RandomInertia, default RandomInertia()
    min_range, max_range: float, default 64 and 132
        Continuous range bounds mRange and xRange in meters.
    seed: int, default 0
    position_update: PositionUpdate, default PositionUpdate.STANDARD
    radio: RadioParams
        Link budget used to decode positions.
    objective: str, default "localized"
        Name of the scalarizer the single-objective optimizer uses.
    """

    n_particles: int = 100
    n_iterations: int = 200
    c1: float = 1.49445
    c2: float = 1.49445
    inertia: Inertia = field(default_factory=RandomInertia)
    min_range: float = 64.0
    max_range: float = 132.0
    seed: int = 0
    position_update: PositionUpdate = PositionUpdate.STANDARD
    radio: RadioParams = DEFAULT_RADIO
    objective: str = "localized"

    def __post_init__(self):
        if self.n_particles < 1:
            raise ValueError("n_particles must be at least 1.")
        if self.n_iterations < 0:
            raise ValueError("n_iterations must be non-negative.")
        if not self.min_range < self.max_range:
            raise ValueError("min_range must be below max_range.")
        if self.seed < 0:
            raise ValueError("seed must be non-negative.")

    @property
    def delta(self) -> float:
        """Velocity bound δ = (xRange - mRange) / 2."""
        return (self.max_range - self.min_range) / 2

    @property
    def bounds(self) -> Tuple[float, float]:
        return (self.min_range, self.max_range)


@dataclass(frozen=True)
class ObjectiveVector:
    """Objectives of one assignment.

    Time, power and localized blind nodes take part in dominance; messages
    only when asked for. ``level_messages`` counts broadcasts per power level
    in binary mode.
    """

    time_steps: int
    power_mw: float
    localized_blind: int
    messages: int
    node_steps: int = 0
    participants: int = 0
    level_messages: Optional[Tuple[int, int, int]] = None

    @classmethod
    def from_outcome(cls, outcome: SimOutcome, level_messages=None):
        return cls(
            time_steps=outcome.steps,
            power_mw=outcome.total_power_mw,
            localized_blind=outcome.localized_blind,
            messages=outcome.messages,
            node_steps=outcome.node_steps,
            participants=outcome.participants,
            level_messages=level_messages,
        )

    def minimized(self, include_messages: bool = False) -> Tuple[float, ...]:
        """Objective tuple to minimize; localized blind nodes are negated."""
        vector = (float(self.time_steps), float(self.power_mw), -float(self.localized_blind))
        if include_messages:
            vector += (float(self.messages),)
        return vector


@dataclass(frozen=True, eq=False)
class Particle:
    """A candidate assignment with its velocity and personal best."""

    position: np.ndarray
    velocity: np.ndarray
    objectives: ObjectiveVector
    best_position: np.ndarray
    best_objectives: ObjectiveVector


@dataclass(frozen=True)
class Scalarizer:
    """Single objective used by the single-objective optimizer."""

    name: str
    metric: str
    maximize: bool

    def __call__(self, objectives: ObjectiveVector) -> float:
        return float(getattr(objectives, self.metric))

    def better(self, new: ObjectiveVector, old: ObjectiveVector) -> bool:
        """True if ``new`` is strictly better than ``old``."""
        if self.maximize:
            return self(new) > self(old)
        return self(new) < self(old)


SCALARIZERS = {
    "localized": Scalarizer("localized", "localized_blind", maximize=True),
    "time": Scalarizer("time", "time_steps", maximize=False),
    "power": Scalarizer("power", "power_mw", maximize=False),
    "messages": Scalarizer("messages", "messages", maximize=False),
}


def get_scalarizer(name: str) -> Scalarizer:
    """Look up a scalarizer by name.

    Raises
    ------
    ValueError
        If no scalarizer has that name.
    """
    try:
        return SCALARIZERS[name]
    except KeyError as exc:
        raise ValueError(
            f"unknown objective {name!r}; choose from {', '.join(SCALARIZERS)}."
        ) from exc


def random_position(rng, n_nodes: int, mode: Representation, config: PsoConfig) -> np.ndarray:
    """Draw a position uniformly over the representation."""
    if mode is Representation.BINARY:
        return np.eye(N_LEVELS)[rng.integers(N_LEVELS, size=n_nodes)]
    return rng.uniform(config.min_range, config.max_range, size=n_nodes)


def random_velocity(rng, n_nodes: int, mode: Representation, config: PsoConfig) -> np.ndarray:
    """Draw a velocity uniformly over its allowed range."""
    if mode is Representation.BINARY:
        return rng.random((n_nodes, N_LEVELS))
    if config.position_update is PositionUpdate.LITERAL:
        low, high = sorted((config.min_range, config.delta))
        return rng.uniform(low, high, size=n_nodes)
    return rng.uniform(-config.delta, config.delta, size=n_nodes)


def _positions(particle_or_position) -> np.ndarray:
    return np.asarray(getattr(particle_or_position, "position", particle_or_position))


def decode(
    particle_or_position,
    mode: Representation,
    radio: RadioParams = DEFAULT_RADIO,
    bounds: Optional[Tuple[float, float]] = None,
) -> RangeAssignment:
    """Turn a particle position into a RangeAssignment.

    Parameters
    ----------
    particle_or_position: Particle or numpy.ndarray
    mode: Representation
    radio: RadioParams
    bounds: (float, float), optional
        Continuous bounds to validate against.

    Raises
    ------
    AssertionError
        If a binary row is not one-hot.
    """
    position = _positions(particle_or_position)
    if mode is Representation.BINARY:
        if position.ndim != 2 or not np.all(position.sum(axis=1) == 1):
            raise AssertionError("binary position rows must be one-hot.")
        return RangeAssignment.discrete(np.argmax(position, axis=1), radio)
    return RangeAssignment.continuous(position, radio, bounds=bounds)


def evaluate(
    particle_or_position,
    topology: Topology,
    mode: Representation,
    radio: RadioParams = DEFAULT_RADIO,
    bounds: Optional[Tuple[float, float]] = None,
) -> ObjectiveVector:
    """Decode, flood the network and collect the objectives.

    ``bounds`` is passed on to :func:`decode`.
    """
    assignment = decode(particle_or_position, mode, radio, bounds)
    outcome = simulate(topology, assignment)
    level_messages = None
    if mode is Representation.BINARY:
        broadcasters = np.array(sorted(outcome.localized_set), dtype=int)
        counts = np.bincount(assignment.levels()[broadcasters], minlength=N_LEVELS)
        level_messages = tuple(int(c) for c in counts)
    return ObjectiveVector.from_outcome(outcome, level_messages)


def init_swarm(config: PsoConfig, topology: Topology, mode: Representation) -> List[Particle]:
    """Create and evaluate ``config.n_particles`` random particles."""
    swarm = []
    for index in range(config.n_particles):
        rng = stream_rng(config.seed, Stream.INIT, 0, index)
        position = random_position(rng, len(topology), mode, config)
        velocity = random_velocity(rng, len(topology), mode, config)
        objectives = evaluate(position, topology, mode, config.radio, config.bounds)
        swarm.append(Particle(position, velocity, objectives, position.copy(), objectives))
    return swarm


def velocity_step(velocity, position, best_position, guide, weight, c1, c2, r1, r2):
    """Raw velocity update ``ωv + c1 r1 (p̂ - p) + c2 r2 (ĝ - p)``."""
    return weight * velocity + c1 * r1 * (best_position - position) + c2 * r2 * (guide - position)


def clamp_velocity(velocity, mode: Representation, config: PsoConfig) -> np.ndarray:
    """Bring a raw velocity back into the range of its representation."""
    if mode is Representation.BINARY:
        return np.clip(velocity, 0.0, 1.0)
    if config.position_update is PositionUpdate.LITERAL:
        return np.where(velocity < config.delta, config.min_range, config.delta)
    return np.clip(velocity, -config.delta, config.delta)


def update_velocity(
    particle: Particle,
    guide: np.ndarray,
    config: PsoConfig,
    rng,
    mode: Representation,
    weight: float,
) -> np.ndarray:
    """New velocity towards the personal best and the guide.

    ``r1`` and ``r2`` are drawn per element.
    """
    shape = particle.position.shape
    r1 = rng.random(shape)
    r2 = rng.random(shape)
    raw = velocity_step(
        particle.velocity,
        particle.position,
        particle.best_position,
        guide,
        weight,
        config.c1,
        config.c2,
        r1,
        r2,
    )
    return clamp_velocity(raw, mode, config)


def repair_one_hot(bits: np.ndarray, velocity: np.ndarray) -> np.ndarray:
    """Keep one set bit per row.

    Among the set bits (or all bits of an empty row) the one with the highest
    velocity wins; ties go to the lowest power level.
    """
    bits = bits.astype(bool)
    candidates = np.where(bits.any(axis=1, keepdims=True), bits, True)
    scores = np.where(candidates, velocity, -np.inf)
    return np.eye(bits.shape[1])[np.argmax(scores, axis=1)]


def update_position(
    particle: Particle, config: PsoConfig, rng, mode: Representation
) -> np.ndarray:
    """New position from the particle's (already updated) velocity."""
    velocity = particle.velocity
    if mode is Representation.BINARY:
        bits = rng.random(velocity.shape) < velocity
        return repair_one_hot(bits, velocity)
    if config.position_update is PositionUpdate.LITERAL:
        raw = rng.uniform(0.0, config.max_range, size=velocity.shape) + velocity
    else:
        raw = particle.position + velocity
    return np.clip(raw, config.min_range, config.max_range)


def move(
    particle: Particle,
    guide: np.ndarray,
    config: PsoConfig,
    rng,
    mode: Representation,
    weight: float,
) -> Particle:
    """Update velocity then position. Objectives are left stale."""
    velocity = update_velocity(particle, guide, config, rng, mode, weight)
    moved = replace(particle, velocity=velocity)
    return replace(moved, position=update_position(moved, config, rng, mode))


def with_evaluation(particle: Particle, objectives: ObjectiveVector) -> Particle:
    return replace(particle, objectives=objectives)


@dataclass(frozen=True, eq=False)
class SopsoResult:
    """Best solution of a single-objective run and its fitness trace."""

    best_position: np.ndarray
    best_assignment: RangeAssignment
    best_objectives: ObjectiveVector
    best_fitness: float
    trace: Tuple[float, ...]


def _advance(particle, guide, config, mode, topology, scalarizer, weight, iteration, index):
    rng = stream_rng(config.seed, Stream.MOVE, iteration, index)
    moved = move(particle, guide, config, rng, mode, weight)
    objectives = evaluate(moved, topology, mode, config.radio, config.bounds)
    moved = with_evaluation(moved, objectives)
    if scalarizer.better(objectives, particle.best_objectives):
        moved = replace(moved, best_position=moved.position.copy(), best_objectives=objectives)
    return moved


def sopso_run(
    topology: Topology,
    config: PsoConfig,
    objective: Optional[Scalarizer] = None,
    mode: Representation = Representation.BINARY,
) -> SopsoResult:
    """Global-best particle swarm optimization of a single objective.

    Parameters
    ----------
    topology: Topology
    config: PsoConfig
    objective: Scalarizer, optional
        Defaults to the scalarizer named by ``config.objective``.
    mode: Representation, default Representation.BINARY

    Returns
    -------
    SopsoResult
        The best solution ever seen and the best fitness after each iteration.
    """
    scalarizer = objective or get_scalarizer(config.objective)
    swarm = init_swarm(config, topology, mode)
    leader = swarm[0]
    for particle in swarm[1:]:
        if scalarizer.better(particle.best_objectives, leader.best_objectives):
            leader = particle
    best_position = leader.best_position.copy()
    best_objectives = leader.best_objectives
    trace = []
    for iteration in range(config.n_iterations):
        weight = config.inertia.draw(stream_rng(config.seed, Stream.INERTIA, iteration))
        swarm = [
            _advance(p, best_position, config, mode, topology, scalarizer, weight, iteration, i)
            for i, p in enumerate(swarm)
        ]
        for particle in swarm:
            if scalarizer.better(particle.best_objectives, best_objectives):
                best_position = particle.best_position.copy()
                best_objectives = particle.best_objectives
        trace.append(scalarizer(best_objectives))
        logger.debug("iteration {}: best {} = {}", iteration, scalarizer.name, trace[-1])
    return SopsoResult(
        best_position=best_position,
        best_assignment=decode(best_position, mode, config.radio, config.bounds),
        best_objectives=best_objectives,
        best_fitness=scalarizer(best_objectives),
        trace=tuple(trace),
    )
