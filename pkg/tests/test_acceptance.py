"""Statistical checks on full-size networks. Run with ``pytest -m slow``."""
import numpy as np
import pytest

from trilat_pso.harness import improvement_over, trial_seed
from trilat_pso.mopso import MopsoConfig, mopso_run
from trilat_pso.radio import PowerLevel, RangeAssignment
from trilat_pso.simulation import simulate
from trilat_pso.swarm import PsoConfig, Representation, sopso_run
from trilat_pso.topology import generate_random

pytestmark = pytest.mark.slow

TOPOLOGY_SEEDS = range(500, 510)
RUN_SEEDS = range(10)


def _uniform_max(topology):
    return simulate(topology, RangeAssignment.uniform(PowerLevel.MAX, len(topology)))


def test_sopso_reaches_uniform_max():
    """Single-objective runs localize at least 95% of the uniform-Max count."""
    hits = 0
    runs = 0
    for topology_seed in TOPOLOGY_SEEDS:
        topology = generate_random(240, 40, 1000.0, topology_seed)
        target = _uniform_max(topology).localized_blind
        for seed in RUN_SEEDS:
            result = sopso_run(topology, PsoConfig(seed=trial_seed(topology_seed, seed)))
            runs += 1
            hits += result.best_objectives.localized_blind >= 0.95 * target
    assert hits >= 0.9 * runs


def test_mopso_beats_uniform_max_power():
    """Continuous archives hold a full-coverage solution cheaper than uniform Max."""
    improvements = []
    for topology_seed in TOPOLOGY_SEEDS:
        topology = generate_random(240, 40, 1000.0, topology_seed)
        baseline = _uniform_max(topology)
        for seed in RUN_SEEDS:
            config = MopsoConfig.defaults(Representation.CONTINUOUS, seed=trial_seed(topology_seed, seed))
            archive = mopso_run(topology, config, Representation.CONTINUOUS).archive
            improvements.append(improvement_over([e.objectives for e in archive], baseline))
    found = [i for i in improvements if i is not None and i > 0]
    assert len(found) >= 0.8 * len(improvements)
    print(f"median power improvement {np.median(found):.1%}")
