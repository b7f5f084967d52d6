import math
from dataclasses import replace

import numpy as np
import pytest
from pytest import approx, raises

from tests.conftest import exhaustive_front, weakly_dominates
from trilat_pso.mopso import (
    CrowdingUpdate,
    Dominance,
    LeadersArchive,
    MopsoConfig,
    archive_insert,
    boundary_mutation,
    crowding_distances,
    dominance,
    mopso_run,
    mutation_count,
    select_leader,
)
from trilat_pso.radio import PowerLevel
from trilat_pso.swarm import FixedInertia, ObjectiveVector, Representation, evaluate
from trilat_pso.topology import generate_random

BINARY = Representation.BINARY
CONTINUOUS = Representation.CONTINUOUS


def _obj(steps, power, localized, messages=0):
    return ObjectiveVector(steps, power, localized, messages)


def test_dominance():
    """Dominance, equality and incomparability are told apart."""
    assert dominance((1, 2, 3), (2, 2, 3)) is Dominance.A_DOMINATES
    assert dominance((2, 2, 3), (1, 2, 3)) is Dominance.B_DOMINATES
    assert dominance((1, 3, 3), (2, 2, 3)) is Dominance.NON_DOMINATED
    assert dominance((1, 2, 3), (1, 2, 3)) is Dominance.EQUAL


def test_dominance_epsilon():
    """Values within the relative tolerance count as equal."""
    assert dominance((1.0, 2.0), (1.0, 2.0 + 1e-12)) is Dominance.EQUAL
    assert dominance((1.0, 2.0), (1.0, 2.1), epsilon=0.1) is Dominance.EQUAL


def test_dominance_dimension():
    """Vectors of different length cannot be compared."""
    with raises(ValueError):
        dominance((1, 2), (1, 2, 3))


def test_crowding_distances():
    """Extremes are infinite and interior points add normalized gaps."""
    distances = crowding_distances([(0.0, 4.0), (1.0, 3.0), (3.0, 1.0), (4.0, 0.0)])
    assert distances[0] == math.inf
    assert distances[3] == math.inf
    assert distances[1] == approx(3 / 4 + 3 / 4)
    assert distances[2] == approx(3 / 4 + 3 / 4)


def test_crowding_collinear():
    """The middle of three equally spaced points scores 2."""
    assert crowding_distances([(0.0, 2.0), (1.0, 1.0), (2.0, 0.0)])[1] == approx(2.0)


def test_crowding_small_sets():
    """One or two vectors are all extremes."""
    assert crowding_distances([]) == []
    assert crowding_distances([(1.0, 2.0)]) == [math.inf]
    assert crowding_distances([(1.0, 2.0), (2.0, 1.0)]) == [math.inf, math.inf]


def test_crowding_flat_objective():
    """An objective with zero span adds nothing."""
    distances = crowding_distances([(0.0, 5.0), (1.0, 5.0), (2.0, 5.0)])
    assert distances[1] == approx(1.0)


def test_archive_rejects_dominated_and_equal():
    """Dominated and equal candidates are not added."""
    archive = LeadersArchive(capacity=10).insert(np.zeros(2), _obj(2, 5.0, 3))
    assert len(archive.insert(np.ones(2), _obj(3, 5.0, 3))) == 1
    assert len(archive.insert(np.ones(2), _obj(2, 5.0, 3))) == 1


def test_archive_evicts_dominated():
    """A dominating candidate replaces the entries it dominates."""
    archive = LeadersArchive(capacity=10)
    archive = archive.insert(np.zeros(2), _obj(2, 5.0, 3))
    archive = archive.insert(np.ones(2), _obj(1, 9.0, 3))
    archive = archive.insert(np.full(2, 2.0), _obj(1, 4.0, 3))
    assert len(archive) == 1
    assert next(iter(archive)).objectives.power_mw == 4.0


def test_archive_copy_on_insert():
    """Insert leaves the original archive untouched."""
    archive = LeadersArchive(capacity=10)
    grown = archive.insert(np.zeros(2), _obj(1, 1.0, 1))
    assert len(archive) == 0
    assert len(grown) == 1


def test_archive_insert_function():
    """The functional spelling matches the method and leaves the original untouched."""
    archive = LeadersArchive(capacity=10).insert(np.zeros(2), _obj(2, 5.0, 3))
    grown = archive_insert(archive, np.ones(2), _obj(1, 6.0, 3))
    assert len(archive) == 1
    expected = archive.insert(np.ones(2), _obj(1, 6.0, 3))
    assert [e.vector for e in grown] == [e.vector for e in expected]


def test_archive_capacity():
    """Overflow evicts the least crowded-apart entry."""
    archive = LeadersArchive(capacity=3)
    for steps, power in [(1, 10.0), (2, 6.0), (3, 5.5), (5, 1.0)]:
        archive = archive.insert(np.zeros(1), _obj(steps, power, 0))
    assert len(archive) == 3
    kept = sorted(entry.objectives.time_steps for entry in archive)
    assert kept[0] == 1 and kept[-1] == 5


def test_archive_mutually_nondominated():
    """The archive stays mutually non-dominated under random inserts."""
    rng = np.random.default_rng(1)
    archive = LeadersArchive(capacity=15)
    for _ in range(300):
        archive = archive.insert(
            np.zeros(1), _obj(int(rng.integers(1, 8)), float(rng.uniform(1, 20)), int(rng.integers(0, 6)))
        )
        vectors = [entry.vector for entry in archive]
        assert len(vectors) <= 15
        for i, a in enumerate(vectors):
            for b in vectors[i + 1 :]:
                assert dominance(a, b) is Dominance.NON_DOMINATED


def test_select_leader_empty():
    """An empty archive has no leader."""
    with raises(RuntimeError):
        select_leader(LeadersArchive(), np.random.default_rng(0))


class _FixedDraws:
    """Generator stand-in returning preset tournament draws."""

    def __init__(self, indices, coin):
        self.indices = np.array(indices)
        self.coin = coin

    def integers(self, high, size=None):
        return self.indices

    def random(self):
        return self.coin


def _three_entry_archive(crowding):
    archive = LeadersArchive(capacity=10)
    for steps, power in [(1, 3.0), (2, 2.0), (3, 1.0)]:
        archive = archive.insert(np.full(1, float(steps)), _obj(steps, power, 0))
    entries = tuple(replace(e, crowding=c) for e, c in zip(archive.entries, crowding))
    return replace(archive, entries=entries)


def test_select_leader_pair():
    """Of an infinite and a finite entry the infinite one leads."""
    archive = _three_entry_archive((math.inf, 0.5, 0.1))
    assert select_leader(archive, _FixedDraws([0, 1], 0.9)) is archive.entries[0]
    assert select_leader(archive, _FixedDraws([1, 2], 0.9)) is archive.entries[1]


def test_select_leader_tie_coin():
    """Equal crowding is settled by the coin flip."""
    archive = _three_entry_archive((math.inf, 0.5, math.inf))
    assert select_leader(archive, _FixedDraws([0, 2], 0.2)) is archive.entries[0]
    assert select_leader(archive, _FixedDraws([0, 2], 0.8)) is archive.entries[2]


def test_select_leader_self_pairing():
    """An entry drawn twice wins its own tournament."""
    archive = _three_entry_archive((math.inf, 0.1, math.inf))
    assert select_leader(archive, _FixedDraws([1, 1], 0.9)) is archive.entries[1]


def test_select_leader_with_replacement():
    """The least crowded of three entries leads only when drawn twice."""
    archive = _three_entry_archive((math.inf, 0.1, math.inf))
    rng = np.random.default_rng(0)
    draws = 9000
    picks = sum(1 for _ in range(draws) if select_leader(archive, rng) is archive.entries[1])
    assert picks / draws == approx(1 / 9, abs=0.02)


def test_select_leader_single():
    """A one-entry archive always yields that entry."""
    archive = LeadersArchive().insert(np.zeros(1), _obj(1, 1.0, 0))
    assert select_leader(archive, np.random.default_rng(0)) is archive.entries[0]


def test_select_leader_prefers_crowding():
    """Tournaments favour entries with larger crowding distance."""
    archive = LeadersArchive(capacity=10)
    for steps, power in [(1, 10.0), (2, 5.0), (3, 4.5), (4, 4.0), (6, 1.0)]:
        archive = archive.insert(np.array([float(steps)]), _obj(steps, power, 0))
    archive = archive.with_crowding()
    rng = np.random.default_rng(0)
    picks = [select_leader(archive, rng).objectives.time_steps for _ in range(500)]
    extremes = sum(1 for p in picks if p in (1, 6))
    assert extremes > 250


def test_mutation_count():
    """The mutated share is rounded up."""
    assert mutation_count(0.15, 100) == 15
    assert mutation_count(0.20, 50) == 10
    assert mutation_count(0.15, 10) == 2
    assert mutation_count(0.0, 100) == 0


def test_boundary_mutation_binary():
    """Mutated binary nodes move to the Min level."""
    config = MopsoConfig(n_particles=10, mutation_fraction=0.3)
    positions = [np.eye(3)[[2] * 6] for _ in range(10)]
    mutated = boundary_mutation(positions, config, np.random.default_rng(0), BINARY)
    changed = [i for i in range(10) if not np.array_equal(mutated[i], positions[i])]
    assert len(changed) == 3
    for i in changed:
        assert (np.argmax(mutated[i], axis=1) == PowerLevel.MIN).sum() == 1
        assert np.all(mutated[i].sum(axis=1) == 1)


def test_boundary_mutation_continuous():
    """Continuous mutation uses the configured value."""
    config = MopsoConfig(n_particles=4, mutation_fraction=1.0, mutation_value="max")
    positions = [np.full(5, 80.0) for _ in range(4)]
    mutated = boundary_mutation(positions, config, np.random.default_rng(0), CONTINUOUS)
    for position in mutated:
        assert sorted(position.tolist()) == [80.0] * 4 + [132.0]
    config = MopsoConfig(n_particles=4, mutation_fraction=1.0, mutation_value=70.0)
    mutated = boundary_mutation(positions, config, np.random.default_rng(0), CONTINUOUS)
    assert all(70.0 in position for position in mutated)


def test_config_defaults():
    """Binary and continuous runs have their own defaults."""
    binary = MopsoConfig.defaults(BINARY)
    assert (binary.n_particles, binary.n_iterations, binary.mutation_fraction) == (100, 200, 0.15)
    continuous = MopsoConfig.defaults(CONTINUOUS, seed=4)
    assert (continuous.n_particles, continuous.n_iterations) == (50, 50)
    assert continuous.mutation_fraction == 0.20
    assert continuous.seed == 4
    assert continuous.inertia == FixedInertia(0.1)


def test_config_validation():
    """Invalid multi-objective settings raise ValueError."""
    with raises(ValueError):
        MopsoConfig(mutation_fraction=1.5)
    with raises(ValueError):
        MopsoConfig(archive_capacity=1)
    with raises(ValueError):
        MopsoConfig(mutation_value="middle")


def test_mutation_value_within_bounds():
    """A numeric mutation range must lie within the range bounds."""
    with raises(ValueError):
        MopsoConfig(mutation_value=200.0)
    with raises(ValueError):
        MopsoConfig(mutation_value=50.0)
    assert MopsoConfig(mutation_value=132.0).mutation_value == 132.0


def test_binary_run_rejects_numeric_mutation(small_topology):
    """Binary runs mutate to a power level, so a range in meters is refused."""
    config = MopsoConfig(n_particles=4, n_iterations=2, mutation_value=70.0)
    with raises(ValueError):
        mopso_run(small_topology, config, BINARY)


def test_continuous_mutation_at_upper_bound(small_topology):
    """Mutating every particle to the upper bound keeps positions within bounds."""
    config = MopsoConfig.defaults(
        CONTINUOUS, n_particles=6, n_iterations=4, mutation_fraction=1.0, mutation_value=132.0
    )
    for entry in mopso_run(small_topology, config, CONTINUOUS).archive:
        assert np.all((entry.position >= 64.0) & (entry.position <= 132.0))


def _assert_archive_valid(archive):
    vectors = [entry.vector for entry in archive]
    for i, a in enumerate(vectors):
        for b in vectors[i + 1 :]:
            assert dominance(a, b) is Dominance.NON_DOMINATED


def test_mopso_binary_run(small_topology):
    """A binary run leaves a non-dominated archive of one-hot positions."""
    config = MopsoConfig(n_particles=10, n_iterations=8, seed=2)
    result = mopso_run(small_topology, config, BINARY)
    assert len(result.size_trace) == 8
    assert 1 <= len(result.archive) <= config.archive_capacity
    _assert_archive_valid(result.archive)
    for entry in result.archive:
        assert np.all(entry.position.sum(axis=1) == 1)


def test_mopso_continuous_run(small_topology):
    """A continuous run keeps positions within bounds."""
    config = MopsoConfig.defaults(CONTINUOUS, n_particles=10, n_iterations=8, seed=2)
    result = mopso_run(small_topology, config, CONTINUOUS)
    _assert_archive_valid(result.archive)
    for entry in result.archive:
        assert np.all((entry.position >= 64.0) & (entry.position <= 132.0))


def test_mopso_crowding_per_iteration(small_topology):
    """Crowding measured once per iteration still gives a valid archive."""
    config = MopsoConfig(
        n_particles=10, n_iterations=5, crowding_update=CrowdingUpdate.ITERATION, include_messages=True
    )
    result = mopso_run(small_topology, config, BINARY)
    _assert_archive_valid(result.archive)
    assert all(len(entry.vector) == 4 for entry in result.archive)


def test_mopso_deterministic(small_topology):
    """Equal seeds give equal archives."""
    config = MopsoConfig(n_particles=8, n_iterations=5, seed=7)
    first = mopso_run(small_topology, config, BINARY)
    second = mopso_run(small_topology, config, BINARY)
    assert [e.vector for e in first.archive] == [e.vector for e in second.archive]


def test_archive_entries_match_reevaluation(small_topology):
    """Every archived vector is what its stored position evaluates to."""
    for mode in (BINARY, CONTINUOUS):
        config = MopsoConfig.defaults(mode, n_particles=10, n_iterations=6, seed=5)
        for entry in mopso_run(small_topology, config, mode).archive:
            objectives = evaluate(entry.position, small_topology, mode, config.radio, config.bounds)
            assert objectives.minimized() == entry.vector


def test_all_anchor_archive_single_entry():
    """With only anchors the cheapest assignment is the whole front."""
    topology = generate_random(4, 4, 150.0, seed=5)
    config = MopsoConfig(n_particles=10, n_iterations=5, seed=1)
    result = mopso_run(topology, config, BINARY)
    assert len(result.archive) == 1
    assert set(result.size_trace) == {1}
    entry = next(iter(result.archive))
    assert entry.objectives.localized_blind == 0


def _front_instances():
    return [generate_random(n, 3, 150.0, seed=seed) for n, seed in [(4, 1), (5, 2), (5, 3)]]


def test_archive_within_exhaustive_front():
    """No archive entry is beaten by any of the 3^N level choices."""
    for topology in _front_instances():
        front = exhaustive_front(topology)
        config = MopsoConfig(n_particles=50, n_iterations=50, seed=1)
        archive = mopso_run(topology, config, BINARY).archive
        for entry in archive:
            assert not any(weakly_dominates(v, entry.vector) for v in front)


def _covers(front, archive):
    found = [entry.vector for entry in archive]
    hits = sum(
        1
        for v in front
        if any(all(math.isclose(x, y, rel_tol=1e-9, abs_tol=1e-12) for x, y in zip(v, w)) for w in found)
    )
    return hits / len(front)


@pytest.mark.slow
def test_archive_covers_exhaustive_front():
    """The archive covers most of the true front on most seeds."""
    good = 0
    runs = 0
    for index in range(10):
        topology = generate_random(6, 3, 150.0, seed=100 + index)
        front = exhaustive_front(topology)
        for seed in range(3):
            config = MopsoConfig(n_particles=50, n_iterations=50, mutation_fraction=0.2, seed=seed)
            archive = mopso_run(topology, config, BINARY).archive
            runs += 1
            good += _covers(front, archive) >= 0.9
    assert good >= 0.8 * runs
