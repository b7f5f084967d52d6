import itertools
import math

import pytest

from trilat_pso.radio import RangeAssignment
from trilat_pso.simulation import simulate
from trilat_pso.topology import Node, NodeKind, Topology, distance, generate_random

A = NodeKind.ANCHOR
B = NodeKind.BLIND

# Node ids of the six-node flooding example.
NODE_A, NODE_D, NODE_F, NODE_B, NODE_C, NODE_E = range(6)


@pytest.fixture
def worked_topology():
    """Three anchors (a, d, f) and three blind nodes (b, c, e).

    With every node at 132 m, c and e localize in the first step and b never
    does; with smaller ranges on d, f and e, c has to wait for e.
    """
    return Topology(
        (
            Node(NODE_A, 500.0, 600.0, A),
            Node(NODE_D, 500.0, 500.0, A),
            Node(NODE_F, 420.0, 500.0, A),
            Node(NODE_B, 500.0, 720.0, B),
            Node(NODE_C, 530.0, 500.0, B),
            Node(NODE_E, 470.0, 500.0, B),
        ),
        1000.0,
    )


@pytest.fixture
def method_one():
    return RangeAssignment.continuous([132.0] * 6)


@pytest.fixture
def method_two():
    return RangeAssignment.continuous([132.0, 63.2, 91.0, 132.0, 132.0, 83.4])


@pytest.fixture
def far_anchor_topology():
    """One blind node that localizes only if anchor 2 transmits at Max."""
    return Topology(
        (
            Node(0, 150.0, 100.0, A),
            Node(1, 100.0, 150.0, A),
            Node(2, 220.0, 100.0, A),
            Node(3, 100.0, 100.0, B),
        ),
        300.0,
    )


@pytest.fixture
def small_topology():
    return generate_random(5, 3, 200.0, seed=11)


def naive_flood(topology, ranges):
    """From-scratch flood over plain Python sets.

    Returns the list of (senders, newly localized) per step and the final
    localized set.
    """
    nodes = topology.nodes
    localized = {node.id for node in nodes if node.is_anchor}
    pending = set(localized)
    heard = {node.id: set() for node in nodes}
    steps = []
    while pending:
        senders = sorted(pending)
        pending = set()
        for s in senders:
            for node in nodes:
                if node.id not in localized and distance(nodes[s], node) <= ranges[s]:
                    heard[node.id].add(s)
        newly = sorted(u for u in heard if u not in localized and len(heard[u]) >= 3)
        localized.update(newly)
        pending.update(newly)
        steps.append((tuple(senders), tuple(newly)))
        if not newly:
            break
    return steps, localized


def weakly_dominates(a, b):
    """Vector a is no worse than b everywhere and better somewhere."""
    no_worse = all(x <= y or math.isclose(x, y, rel_tol=1e-9) for x, y in zip(a, b))
    better = any(x < y and not math.isclose(x, y, rel_tol=1e-9) for x, y in zip(a, b))
    return no_worse and better


def exhaustive_front(topology):
    """Minimized objective vectors of the true Pareto front over all 3^N level choices."""
    vectors = set()
    for levels in itertools.product(range(3), repeat=len(topology)):
        outcome = simulate(topology, RangeAssignment.discrete(levels))
        vectors.add((float(outcome.steps), outcome.total_power_mw, -float(outcome.localized_blind)))
    return [v for v in vectors if not any(weakly_dominates(w, v) for w in vectors)]
