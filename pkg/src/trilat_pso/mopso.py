"""Multi-objective particle swarm optimization with a leaders archive.

Particles are guided by leaders drawn from a bounded archive of mutually
non-dominated solutions. Binary tournaments on NSGA-II crowding distance pick
the leader, and the least crowded-apart entry is evicted when the archive
overflows. A boundary mutation resets one node of a share of the swarm to the
minimum range every iteration.
"""
import enum
import math
from dataclasses import dataclass, field, replace
from typing import List, Sequence, Tuple, Union

import numpy as np
from loguru import logger

from trilat_pso.radio import PowerLevel
from trilat_pso.swarm import (
    FixedInertia,
    Inertia,
    N_LEVELS,
    ObjectiveVector,
    Particle,
    PsoConfig,
    Representation,
    Stream,
    evaluate,
    init_swarm,
    move,
    stream_rng,
    with_evaluation,
)
from trilat_pso.topology import Topology


class Dominance(enum.Enum):
    """Outcome of comparing two objective vectors."""

    A_DOMINATES = "a"
    B_DOMINATES = "b"
    NON_DOMINATED = "none"
    EQUAL = "equal"


class CrowdingUpdate(enum.Enum):
    """When crowding distances are measured during a run."""

    PARTICLE = "particle"
    ITERATION = "iteration"


@dataclass(frozen=True)
class MopsoConfig(PsoConfig):
    """Multi-objective swarm parameters.

    Use :meth:`defaults` for the binary or continuous settings.

    Parameters
    ----------
    archive_capacity: int, default 100
    mutation_fraction: float, default 0.15
        Share of the swarm mutated each iteration.
    mutation_value: "min", "max" or float, default "min"
        Value a mutated node is set to: the range bound / power level, or a
        range in meters within [min_range, max_range] (continuous mode only).
    epsilon_equal: float, default 1e-9
        Relative tolerance under which two objective values are equal.
    include_messages: bool, default False
        Add messages sent as a fourth objective.
    crowding_update: CrowdingUpdate, default CrowdingUpdate.PARTICLE
    """

    inertia: Inertia = field(default_factory=FixedInertia)
    archive_capacity: int = 100
    mutation_fraction: float = 0.15
    mutation_value: Union[str, float] = "min"
    epsilon_equal: float = 1e-9
    include_messages: bool = False
    crowding_update: CrowdingUpdate = CrowdingUpdate.PARTICLE

    def __post_init__(self):
        super().__post_init__()
        if not 0 <= self.mutation_fraction <= 1:
            raise ValueError("mutation_fraction must lie in [0, 1].")
        if self.archive_capacity < 2:
            raise ValueError("archive_capacity must be at least 2.")
        if isinstance(self.mutation_value, str):
            if self.mutation_value not in ("min", "max"):
                raise ValueError("mutation_value must be 'min', 'max' or a range in meters.")
        elif not self.min_range <= self.mutation_value <= self.max_range:
            bounds = f"[{self.min_range}, {self.max_range}]"
            raise ValueError(f"mutation_value {self.mutation_value} outside {bounds}.")

    @classmethod
    def defaults(cls, mode: Representation, **overrides):
        """Settings of the binary (100 × 200, 15 %) or continuous (50 × 50, 20 %) runs."""
        if mode is Representation.BINARY:
            base = dict(n_particles=100, n_iterations=200, mutation_fraction=0.15)
        else:
            base = dict(n_particles=50, n_iterations=50, mutation_fraction=0.20)
        return cls(**{**base, **overrides})


def _close(a: float, b: float, epsilon: float) -> bool:
    return a == b or math.isclose(a, b, rel_tol=epsilon, abs_tol=0.0)


def dominance(a: Sequence[float], b: Sequence[float], epsilon: float = 1e-9) -> Dominance:
    """Compare two minimized objective vectors.

    Raises
    ------
    ValueError
        If the vectors differ in length.
    """
    if len(a) != len(b):
        raise ValueError("objective vectors must have the same dimension.")
    a_better = b_better = False
    for x, y in zip(a, b):
        if _close(x, y, epsilon):
            continue
        if x < y:
            a_better = True
        else:
            b_better = True
    if a_better and not b_better:
        return Dominance.A_DOMINATES
    if b_better and not a_better:
        return Dominance.B_DOMINATES
    if not a_better and not b_better:
        return Dominance.EQUAL
    return Dominance.NON_DOMINATED


def crowding_distances(vectors: Sequence[Sequence[float]]) -> List[float]:
    """NSGA-II crowding distance of every vector.

    For each objective the vectors are sorted; the two extremes get +inf and
    every interior one adds the gap between its neighbours divided by the
    objective's span. Objectives with zero span are skipped; fewer than three
    vectors are all extremes.
    """
    k = len(vectors)
    if k < 3:
        return [math.inf] * k
    values = np.asarray(vectors, dtype=float).reshape(k, -1)
    distances = np.zeros(k)
    for m in range(values.shape[1]):
        order = np.argsort(values[:, m], kind="stable")
        column = values[order, m]
        span = column[-1] - column[0]
        if span == 0:
            continue
        distances[order[0]] = distances[order[-1]] = np.inf
        distances[order[1:-1]] += (column[2:] - column[:-2]) / span
    return [float(d) for d in distances]


@dataclass(frozen=True, eq=False)
class ArchiveEntry:
    """A leader: a position, its objectives and its crowding distance."""

    position: np.ndarray
    objectives: ObjectiveVector
    vector: Tuple[float, ...]
    crowding: float = math.inf


@dataclass(frozen=True)
class LeadersArchive:
    """Bounded set of mutually non-dominated, mutually non-equal leaders.

    Every operation returns an updated copy.
    """

    capacity: int = 100
    epsilon: float = 1e-9
    include_messages: bool = False
    entries: Tuple[ArchiveEntry, ...] = ()

    def __len__(self):
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def with_crowding(self) -> "LeadersArchive":
        """Measure the crowding distance of every entry."""
        distances = crowding_distances([entry.vector for entry in self.entries])
        entries = tuple(replace(e, crowding=d) for e, d in zip(self.entries, distances))
        return replace(self, entries=entries)

    def insert(self, position: np.ndarray, objectives: ObjectiveVector) -> "LeadersArchive":
        """Offer a solution to the archive.

        A candidate dominated by or equal to an entry is rejected. Otherwise it
        is added, the entries it dominates are dropped, and on overflow the entry
        with the smallest crowding distance is evicted.
        """
        vector = objectives.minimized(self.include_messages)
        kept = []
        for entry in self.entries:
            relation = dominance(vector, entry.vector, self.epsilon)
            if relation in (Dominance.B_DOMINATES, Dominance.EQUAL):
                return self
            if relation is not Dominance.A_DOMINATES:
                kept.append(entry)
        kept.append(ArchiveEntry(np.array(position, copy=True), objectives, vector))
        archive = replace(self, entries=tuple(kept))
        if len(archive) > self.capacity:
            archive = archive.with_crowding()
            crowding = [entry.crowding for entry in archive.entries]
            evict = int(np.argmin(crowding))
            entries = archive.entries[:evict] + archive.entries[evict + 1 :]
            archive = replace(archive, entries=entries)
        return archive


def archive_insert(
    archive: LeadersArchive, position: np.ndarray, objectives: ObjectiveVector
) -> LeadersArchive:
    """Functional spelling of :meth:`LeadersArchive.insert`."""
    return archive.insert(position, objectives)


def select_leader(archive: LeadersArchive, rng) -> ArchiveEntry:
    """Binary tournament on crowding distance.

    Two entries are drawn uniformly with replacement, so an entry can meet
    itself; the one with the larger crowding distance wins and ties are broken
    uniformly.

    Raises
    ------
    RuntimeError
        If the archive is empty.
    """
    if len(archive) == 0:
        raise RuntimeError("cannot select a leader from an empty archive.")
    if len(archive) == 1:
        return archive.entries[0]
    i, j = rng.integers(len(archive), size=2)
    first, second = archive.entries[i], archive.entries[j]
    if first.crowding > second.crowding:
        return first
    if second.crowding > first.crowding:
        return second
    return first if rng.random() < 0.5 else second


def mutation_count(fraction: float, n_particles: int) -> int:
    """Number of particles a mutation round touches."""
    return int(math.ceil(round(fraction * n_particles, 9)))


def boundary_mutation(
    positions: Sequence[np.ndarray], config: MopsoConfig, rng, mode: Representation
) -> List[np.ndarray]:
    """Reset one random node of a share of the swarm to the mutation value.

    Returns new position arrays; untouched particles are returned as is.
    """
    positions = list(positions)
    count = mutation_count(config.mutation_fraction, len(positions))
    if count == 0:
        return positions
    chosen = rng.choice(len(positions), size=count, replace=False)
    for index in sorted(int(i) for i in chosen):
        mutated = np.array(positions[index], copy=True)
        node = int(rng.integers(len(mutated)))
        if mode is Representation.BINARY:
            mutated[node] = np.eye(N_LEVELS)[_mutation_level(config.mutation_value)]
        else:
            mutated[node] = _mutation_range(config)
        positions[index] = mutated
    return positions


def _mutation_level(value) -> PowerLevel:
    if value == "min":
        return PowerLevel.MIN
    if value == "max":
        return PowerLevel.MAX
    raise ValueError(f"binary mutation needs 'min' or 'max', got {value!r}.")


def _mutation_range(config: MopsoConfig) -> float:
    if config.mutation_value == "min":
        return config.min_range
    if config.mutation_value == "max":
        return config.max_range
    return float(config.mutation_value)


def _update_memory(particle: Particle, config: MopsoConfig, rng) -> Particle:
    relation = dominance(
        particle.objectives.minimized(config.include_messages),
        particle.best_objectives.minimized(config.include_messages),
        config.epsilon_equal,
    )
    replace_best = relation is Dominance.A_DOMINATES or (
        relation is Dominance.NON_DOMINATED and rng.random() < 0.5
    )
    if replace_best:
        return replace(
            particle, best_position=particle.position.copy(), best_objectives=particle.objectives
        )
    return particle


@dataclass(frozen=True)
class MopsoResult:
    """Final leaders archive and archive size after every iteration."""

    archive: LeadersArchive
    size_trace: Tuple[int, ...]


def mopso_run(topology: Topology, config: MopsoConfig, mode: Representation) -> MopsoResult:
    """Run the multi-objective swarm.

    Each iteration every particle draws a leader from the archive as it stood
    when the iteration began and moves towards it; the swarm is then mutated
    and evaluated, and personal bests and the archive are updated in particle
    order.

    Parameters
    ----------
    topology: Topology
    config: MopsoConfig
    mode: Representation

    Returns
    -------
    MopsoResult

    Raises
    ------
    ValueError
        If a binary run is given a mutation value in meters.
    """
    if mode is Representation.BINARY:
        _mutation_level(config.mutation_value)
    swarm = init_swarm(config, topology, mode)
    archive = LeadersArchive(config.archive_capacity, config.epsilon_equal, config.include_messages)
    for particle in swarm:
        archive = archive_insert(archive, particle.position, particle.objectives)
    archive = archive.with_crowding()
    size_trace = []
    for iteration in range(config.n_iterations):
        weight = config.inertia.draw(stream_rng(config.seed, Stream.INERTIA, iteration))
        rngs = [stream_rng(config.seed, Stream.MOVE, iteration, i) for i in range(len(swarm))]
        swarm = [
            move(particle, select_leader(archive, rng).position, config, rng, mode, weight)
            for particle, rng in zip(swarm, rngs)
        ]
        mutated = boundary_mutation(
            [particle.position for particle in swarm],
            config,
            stream_rng(config.seed, Stream.MUTATION, iteration),
            mode,
        )
        swarm = [
            with_evaluation(
                replace(particle, position=position),
                evaluate(position, topology, mode, config.radio, config.bounds),
            )
            for particle, position in zip(swarm, mutated)
        ]
        swarm = [_update_memory(p, config, rng) for p, rng in zip(swarm, rngs)]
        for particle in swarm:
            archive = archive_insert(archive, particle.position, particle.objectives)
            if config.crowding_update is CrowdingUpdate.PARTICLE:
                archive = archive.with_crowding()
        if config.crowding_update is CrowdingUpdate.ITERATION:
            archive = archive.with_crowding()
        size_trace.append(len(archive))
        logger.debug("iteration {}: {} leaders", iteration, len(archive))
    return MopsoResult(archive=archive, size_trace=tuple(size_trace))
