"""Wireless sensor network topologies.

A topology is a square field of side ``M`` meters holding anchor nodes, which
know their position, and blind nodes, which must localize. Blind coordinates
are ground truth for reachability only.

Topology file format::

    trilat-topology v1 <field_side>
    <id>,<A|B>,<x>,<y>
    ...
"""
import enum
import math
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Iterable, Tuple, Union

import numpy as np
from loguru import logger

HEADER_MAGIC = "trilat-topology"
FORMAT_VERSION = "v1"


class TopologyParseError(ValueError):
    """A topology file line could not be parsed."""

    def __init__(self, lineno: int, message: str):
        super().__init__(f"line {lineno}: {message}")
        self.lineno = lineno


class TopologyValidationError(ValueError):
    """A topology violates an invariant (ids, bounds)."""


class NodeKind(enum.Enum):
    """Anchor nodes know their position; blind nodes must localize."""

    ANCHOR = "A"
    BLIND = "B"


@dataclass(frozen=True)
class Node:
    """A sensor node.

    Parameters
    ----------
    id: int
        Dense index 0..N-1.
    x, y: float
        Position in meters.
    kind: NodeKind
        Anchor or blind.
    """

    id: int
    x: float
    y: float
    kind: NodeKind = NodeKind.BLIND

    @property
    def is_anchor(self) -> bool:
        return self.kind is NodeKind.ANCHOR


def distance(a: Node, b: Node) -> float:
    """Euclidean distance between two nodes in meters."""
    return math.hypot(a.x - b.x, a.y - b.y)


@dataclass(frozen=True)
class Topology:
    """An immutable set of nodes on an ``field_side`` × ``field_side`` field.

    Parameters
    ----------
    nodes: tuple of Node
        Nodes sorted by id, ids dense from 0.
    field_side: float
        Side M of the square field in meters.

    Raises
    ------
    TopologyValidationError
        If ids are duplicated or not dense, or a node lies outside the field.
    """

    nodes: Tuple[Node, ...]
    field_side: float

    def __post_init__(self):
        object.__setattr__(self, "nodes", tuple(self.nodes))
        if not self.field_side > 0:
            raise TopologyValidationError("field_side must be positive.")
        seen = set()
        for position, node in enumerate(self.nodes):
            if node.id in seen:
                raise TopologyValidationError(f"duplicate node id {node.id}.")
            seen.add(node.id)
            if node.id != position:
                raise TopologyValidationError(
                    f"node ids must be dense and sorted; found {node.id} at position {position}."
                )
            if not (0 <= node.x <= self.field_side and 0 <= node.y <= self.field_side):
                raise TopologyValidationError(
                    f"node {node.id} at ({node.x}, {node.y}) lies outside the "
                    f"{self.field_side} m field."
                )

    def __len__(self):
        return len(self.nodes)

    @property
    def n_anchors(self) -> int:
        return sum(1 for node in self.nodes if node.is_anchor)

    @property
    def n_blind(self) -> int:
        return len(self.nodes) - self.n_anchors

    @cached_property
    def anchor_mask(self) -> np.ndarray:
        """Boolean vector, True for anchors."""
        return np.array([node.is_anchor for node in self.nodes], dtype=bool)

    @cached_property
    def distances(self) -> np.ndarray:
        """N × N matrix of pairwise distances in meters."""
        xy = np.array([(node.x, node.y) for node in self.nodes], dtype=float).reshape(-1, 2)
        return np.hypot(xy[:, None, 0] - xy[None, :, 0], xy[:, None, 1] - xy[None, :, 1])


def generate_random(n_nodes: int, n_anchors: int, field_side: float, seed: int) -> Topology:
    """Scatter nodes uniformly over the field.

    The ``n_anchors`` lowest ids are anchors.

    Parameters
    ----------
    n_nodes: int
        Total number of nodes.
    n_anchors: int
        Number of anchors, at most ``n_nodes``.
    field_side: float
        Side of the square field in meters.
    seed: int
        Seed of the position generator; equal seeds give equal topologies.

    Raises
    ------
    ValueError
        If the counts or the field side are invalid.
    """
    if n_nodes < 0 or n_anchors < 0:
        raise ValueError("node counts must be non-negative.")
    if n_anchors > n_nodes:
        raise ValueError(f"n_anchors ({n_anchors}) exceeds n_nodes ({n_nodes}).")
    if not field_side > 0:
        raise ValueError("field_side must be positive.")
    rng = np.random.default_rng(seed)
    xy = rng.uniform(0.0, field_side, size=(n_nodes, 2))
    nodes = tuple(
        Node(i, float(x), float(y), NodeKind.ANCHOR if i < n_anchors else NodeKind.BLIND)
        for i, (x, y) in enumerate(xy)
    )
    logger.debug("generated {} nodes ({} anchors) on a {} m field", n_nodes, n_anchors, field_side)
    return Topology(nodes, float(field_side))


def dumps(topology: Topology) -> str:
    """Render a topology in the text file format."""
    lines = [f"{HEADER_MAGIC} {FORMAT_VERSION} {topology.field_side!r}"]
    lines.extend(
        f"{node.id},{node.kind.value},{node.x!r},{node.y!r}" for node in topology.nodes
    )
    return "\n".join(lines) + "\n"


def loads(text: str) -> Topology:
    """Parse a topology from the text file format.

    Raises
    ------
    TopologyParseError
        If a line is malformed; carries the 1-based line number.
    TopologyValidationError
        If the parsed nodes violate a topology invariant.
    """
    return _parse(text.splitlines())


def _parse(lines: Iterable[str]) -> Topology:
    lines = list(lines)
    if not lines:
        raise TopologyParseError(1, "missing header.")
    header = lines[0].split()
    if len(header) != 3 or header[0] != HEADER_MAGIC:
        raise TopologyParseError(1, f"expected '{HEADER_MAGIC} {FORMAT_VERSION} <field_side>'.")
    if header[1] != FORMAT_VERSION:
        raise TopologyParseError(1, f"unsupported format version {header[1]}.")
    try:
        field_side = float(header[2])
    except ValueError as exc:
        raise TopologyParseError(1, f"bad field side {header[2]!r}.") from exc
    nodes = []
    ids = set()
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = [part.strip() for part in line.split(",")]
        if len(parts) != 4:
            raise TopologyParseError(lineno, f"expected 'id,kind,x,y', got {line!r}.")
        try:
            node_id = int(parts[0])
            kind = NodeKind(parts[1])
            x, y = float(parts[2]), float(parts[3])
        except ValueError as exc:
            raise TopologyParseError(lineno, str(exc)) from exc
        if node_id in ids:
            raise TopologyValidationError(f"duplicate node id {node_id} on line {lineno}.")
        ids.add(node_id)
        nodes.append(Node(node_id, x, y, kind))
    nodes.sort(key=lambda node: node.id)
    return Topology(tuple(nodes), field_side)


def save(topology: Topology, path: Union[str, Path]) -> Path:
    """Write a topology file and return its path."""
    path = Path(path)
    path.write_text(dumps(topology), encoding="utf-8")
    logger.info("Wrote topology with {} nodes to {}.", len(topology), path)
    return path


def load(path: Union[str, Path]) -> Topology:
    """Read a topology file.

    Raises
    ------
    OSError
        If the file cannot be read.
    TopologyParseError, TopologyValidationError
        If the contents are invalid.
    """
    path = Path(path)
    logger.info("Reading topology {}.", path)
    with open(path, "r", encoding="utf-8") as topology_file:
        return _parse(topology_file.read().splitlines())
