"""Step-synchronous flooding simulation of trilateration-based localization.

Every localized node broadcasts its position exactly once, in the step after
it localizes (anchors in the first step). A message is heard by every node
within the sender's range. A blind node that has heard three distinct
localized senders by the end of a step is localized and broadcasts in the next
step. The flood stops after a step that localizes nobody.
"""
from dataclasses import dataclass
from typing import FrozenSet, Iterator, List, Tuple

import numpy as np
from loguru import logger

from trilat_pso.radio import RangeAssignment
from trilat_pso.topology import Topology

# Distinct localized senders a blind node must hear to trilaterate.
SENDERS_TO_LOCALIZE = 3


@dataclass(frozen=True)
class NodeSimState:
    """State of one node when the flood ends.

    Parameters
    ----------
    localized: bool
        Anchors, and blind nodes that heard enough senders.
    pending_broadcast: bool
        True if the node localized but has not broadcast yet.
    heard_from: frozenset of int
        Ids of the distinct localized senders the node heard.
    """

    localized: bool
    pending_broadcast: bool
    heard_from: FrozenSet[int]


@dataclass(frozen=True)
class StepRecord:
    """One broadcasting round of the flood."""

    step: int
    senders: Tuple[int, ...]
    ranges_m: Tuple[float, ...]
    power_mw: Tuple[float, ...]
    newly_localized: Tuple[int, ...]

    @property
    def total_power_mw(self) -> float:
        return float(sum(self.power_mw))


@dataclass(frozen=True)
class SimOutcome:
    """Metrics of one flood.

    ``node_steps`` (steps × N) is a reporting aid: it is the reading of the
    baseline table's time column as steps times network size, an inference.
    """

    steps: int
    messages: int
    total_power_mw: float
    localized_blind: int
    participants: int
    localized_set: FrozenSet[int]
    node_steps: int


class _Flood:
    """Mutable flood state over numpy arrays."""

    def __init__(self, topology: Topology, assignment: RangeAssignment):
        if len(assignment) != len(topology):
            raise ValueError(
                f"assignment has {len(assignment)} entries but the topology has "
                f"{len(topology)} nodes."
            )
        self.distances = topology.distances
        self.ranges = assignment.ranges_m()
        self.power = assignment.power_mw()
        self.localized = topology.anchor_mask.copy()
        self.pending = self.localized.copy()
        n = len(topology)
        # heard[u, s] is True when u received the broadcast of s.
        self.heard = np.zeros((n, n), dtype=bool)

    def run(self) -> Iterator[StepRecord]:
        step = 0
        while self.pending.any():
            step += 1
            senders = np.flatnonzero(self.pending)
            self.pending[senders] = False
            reach = self.distances[senders] <= self.ranges[senders, None]
            reach &= ~self.localized[None, :]
            self.heard[:, senders] = reach.T
            counts = self.heard.sum(axis=1)
            newly = np.flatnonzero(~self.localized & (counts >= SENDERS_TO_LOCALIZE))
            self.localized[newly] = True
            self.pending[newly] = True
            logger.debug(
                "step {}: {} senders, {} newly localized", step, len(senders), len(newly)
            )
            yield StepRecord(
                step=step,
                senders=tuple(int(s) for s in senders),
                ranges_m=tuple(float(r) for r in self.ranges[senders]),
                power_mw=tuple(float(p) for p in self.power[senders]),
                newly_localized=tuple(int(u) for u in newly),
            )
            if len(newly) == 0:
                break


def flood_steps(topology: Topology, assignment: RangeAssignment) -> Iterator[StepRecord]:
    """Yield the broadcasting rounds of the flood one by one.

    Raises
    ------
    ValueError
        If the assignment length differs from the number of nodes.
    """
    return _Flood(topology, assignment).run()


def simulate(topology: Topology, assignment: RangeAssignment) -> SimOutcome:
    """Flood the network and measure time, messages, power and localizability.

    Parameters
    ----------
    topology: Topology
        Node positions and kinds.
    assignment: RangeAssignment
        Transmit configuration of every node, anchors included.

    Returns
    -------
    SimOutcome
        ``steps`` counts the rounds in which at least one node broadcast.

    Raises
    ------
    ValueError
        If the assignment length differs from the number of nodes.
    """
    flood = _Flood(topology, assignment)
    steps = 0
    messages = 0
    total_power = 0.0
    for record in flood.run():
        steps = record.step
        messages += len(record.senders)
        total_power += record.total_power_mw
    localized_set = frozenset(int(u) for u in np.flatnonzero(flood.localized))
    n_anchors = topology.n_anchors
    return SimOutcome(
        steps=steps,
        messages=messages,
        total_power_mw=total_power,
        localized_blind=len(localized_set) - n_anchors,
        participants=len(localized_set),
        localized_set=localized_set,
        node_steps=steps * len(topology),
    )


def node_states(topology: Topology, assignment: RangeAssignment) -> List[NodeSimState]:
    """Run the flood to completion and return the final state of every node."""
    flood = _Flood(topology, assignment)
    for _ in flood.run():
        pass
    return [
        NodeSimState(
            localized=bool(flood.localized[u]),
            pending_broadcast=bool(flood.pending[u]),
            heard_from=frozenset(int(s) for s in np.flatnonzero(flood.heard[u])),
        )
        for u in range(len(topology))
    ]
