# -*- coding: utf-8 -*-

"""
Node-level mesh topologies, the grid generator and the protocol-model
conflict predicate
"""

__all__ = [
    "NodeId",
    "RadioId",
    "RadioLink",
    "Node",
    "WmnGraph",
    "ProtocolModelParams",
    "ProtocolModel",
    "ConflictModel",
    "TopologyError",
    "DisconnectedTopology",
    "RangeViolation",
    "DuplicateEdge",
    "InvalidEdge",
    "UnknownRadio",
    "build_grid",
    "validate",
    "links_conflict_protocol",
    "random_topology",
    "square_topology",
    "case_topology",
]

import math
from typing import (
    Any,
    Dict,
    Iterable,
    List,
    NamedTuple,
    Optional,
    Protocol,
    Sequence,
    Tuple,
)

import networkx as nx
import numpy as np
from scipy.spatial import cKDTree

NodeId = int
Edge = Tuple[NodeId, NodeId]


class TopologyError(ValueError):
    pass


class DisconnectedTopology(TopologyError):
    pass


class RangeViolation(TopologyError):
    pass


class DuplicateEdge(TopologyError):
    pass


class InvalidEdge(TopologyError):
    pass


class UnknownRadio(TopologyError):
    pass


class RadioId(NamedTuple):
    node: NodeId
    index: int

    def __str__(self) -> str:
        return f"{self.node}.{self.index}"

    @staticmethod
    def parse(text: str) -> "RadioId":
        node, index = str(text).split(".")
        return RadioId(int(node), int(index))


class RadioLink(NamedTuple):
    """A link between two radios on distinct mesh nodes

    Build these with :func:`RadioLink.of`, which puts the endpoints in
    canonical (lexicographic) order.
    """

    a: RadioId
    b: RadioId

    @staticmethod
    def of(x: RadioId, y: RadioId) -> "RadioLink":
        if x.node == y.node:
            raise ValueError(
                f"A radio link must span two mesh nodes, got {x} and {y}"
            )
        return RadioLink(x, y) if x < y else RadioLink(y, x)

    @property
    def nodes(self) -> Tuple[NodeId, NodeId]:
        return (self.a.node, self.b.node)

    def __str__(self) -> str:
        return f"{self.a}-{self.b}"

    def save(self) -> List[str]:
        return [str(self.a), str(self.b)]

    @staticmethod
    def load(data: Sequence[str]) -> "RadioLink":
        return RadioLink.of(RadioId.parse(data[0]), RadioId.parse(data[1]))


class Node(NamedTuple):
    id: NodeId
    x: float
    y: float
    radios: int = 1

    @staticmethod
    def load(data: Dict[str, Any]) -> "Node":
        return Node(
            int(data["id"]),
            float(data["x_m"]),
            float(data["y_m"]),
            int(data.get("radios", 1)),
        )

    def save(self) -> Dict[str, Any]:
        return {
            "id": self.id,
            "x_m": self.x,
            "y_m": self.y,
            "radios": self.radios,
        }


def _canonical_edge(i: NodeId, j: NodeId) -> Edge:
    return (i, j) if i <= j else (j, i)


def edges_within_range(
    nodes: Sequence[Node], tx_range: float
) -> List[Edge]:
    if len(nodes) < 2:
        return []
    points = np.array([(n.x, n.y) for n in nodes], dtype=float)
    pairs = cKDTree(points).query_pairs(tx_range)
    return sorted(
        _canonical_edge(nodes[i].id, nodes[j].id) for i, j in pairs
    )


class WmnGraph:
    """A node-level wireless mesh topology

    The edge list is kept as given (each pair in canonical order) so that
    :func:`validate` can report duplicates; everything else treats the
    graph as an immutable value.
    """

    def __init__(
        self,
        nodes: Iterable[Node],
        tx_range: float,
        edges: Optional[Iterable[Edge]] = None,
    ):
        self.nodes: Tuple[Node, ...] = tuple(
            sorted(nodes, key=lambda n: n.id)
        )
        self.tx_range = float(tx_range)
        if edges is None:
            raw = edges_within_range(self.nodes, self.tx_range)
        else:
            raw = [_canonical_edge(int(i), int(j)) for i, j in edges]
        self.raw_edges: Tuple[Edge, ...] = tuple(raw)
        self.edges: Tuple[Edge, ...] = tuple(
            sorted(set(e for e in raw if e[0] != e[1]))
        )
        self._index: Dict[NodeId, Node] = {n.id: n for n in self.nodes}
        self._adjacency: Dict[NodeId, List[NodeId]] = {
            n.id: [] for n in self.nodes
        }
        for i, j in self.edges:
            if i in self._adjacency and j in self._adjacency:
                self._adjacency[i].append(j)
                self._adjacency[j].append(i)
        for neighbors in self._adjacency.values():
            neighbors.sort()

    def __len__(self) -> int:
        return len(self.nodes)

    def __contains__(self, node: Any) -> bool:
        return node in self._index

    def node(self, node: NodeId) -> Node:
        try:
            return self._index[node]
        except KeyError:
            raise TopologyError(f"Unknown node {node}")

    def neighbors(self, node: NodeId) -> List[NodeId]:
        return list(self._adjacency[node])

    def distance(self, i: NodeId, j: NodeId) -> float:
        a, b = self.node(i), self.node(j)
        return math.hypot(a.x - b.x, a.y - b.y)

    def radios(self, node: NodeId) -> List[RadioId]:
        return [RadioId(node, k) for k in range(self.node(node).radios)]

    def all_radios(self) -> List[RadioId]:
        return [r for n in self.nodes for r in self.radios(n.id)]

    def has_radio(self, radio: RadioId) -> bool:
        node = self._index.get(radio.node)
        return node is not None and 0 <= radio.index < node.radios

    def link_length(self, link: RadioLink) -> float:
        return self.distance(link.a.node, link.b.node)

    def to_networkx(self) -> nx.Graph:
        graph = nx.Graph()
        graph.add_nodes_from(n.id for n in self.nodes)
        graph.add_edges_from(self.edges)
        return graph

    @staticmethod
    def load(data: Dict[str, Any]) -> "WmnGraph":
        edges = data.get("edges")
        return WmnGraph(
            nodes=map(Node.load, data.get("nodes", [])),
            tx_range=float(data["tx_range_m"]),
            edges=None
            if edges is None
            else [(int(e[0]), int(e[1])) for e in edges],
        )

    def save(self) -> Dict[str, Any]:
        return {
            "tx_range_m": self.tx_range,
            "nodes": [n.save() for n in self.nodes],
            "edges": [list(e) for e in self.raw_edges],
        }


def build_grid(
    rows: int,
    cols: int,
    spacing: float = 200.0,
    radios_per_node: int = 2,
    tx_range: float = 250.0,
) -> WmnGraph:
    """Build a rows x cols lattice; node ``r * cols + c`` sits at
    ``(c * spacing, r * spacing)`` and every pair within range is linked"""
    if rows < 1 or cols < 1:
        raise ValueError("A grid needs at least one row and one column")
    if spacing <= 0 or tx_range <= 0:
        raise ValueError("Spacing and transmission range must be positive")
    if radios_per_node < 1:
        raise ValueError("Every node needs at least one radio")
    if spacing > tx_range:
        raise ValueError(
            f"Spacing {spacing} m exceeds the transmission range "
            f"{tx_range} m; the lattice would be disconnected"
        )
    nodes = [
        Node(r * cols + c, c * spacing, r * spacing, radios_per_node)
        for r in range(rows)
        for c in range(cols)
    ]
    return WmnGraph(nodes, tx_range)


def validate(g: WmnGraph) -> None:
    """Raise a :class:`TopologyError` unless ``g`` is a well formed,
    connected mesh"""
    if g.tx_range <= 0:
        raise TopologyError("The transmission range must be positive")
    if not g.nodes:
        raise DisconnectedTopology("The topology has no nodes")
    if len(set(n.id for n in g.nodes)) != len(g.nodes):
        raise TopologyError("Node identifiers must be unique")
    for n in g.nodes:
        if n.radios < 1:
            raise TopologyError(f"Node {n.id} has no radios")

    seen = set()
    for i, j in g.raw_edges:
        if i == j:
            raise InvalidEdge(f"Self-loop on node {i}")
        if i not in g or j not in g:
            raise InvalidEdge(f"Edge ({i}, {j}) names an unknown node")
        if (i, j) in seen:
            raise DuplicateEdge(f"Edge ({i}, {j}) is listed twice")
        seen.add((i, j))
        dist = g.distance(i, j)
        if dist > g.tx_range:
            raise RangeViolation(
                f"Edge ({i}, {j}) spans {dist:.1f} m, beyond the "
                f"{g.tx_range:.1f} m range"
            )

    if not nx.is_connected(g.to_networkx()):
        raise DisconnectedTopology("The topology is not connected")


class ProtocolModelParams(NamedTuple):
    delta: float = 1.0
    tx_range: float = 250.0

    def check(self) -> "ProtocolModelParams":
        if self.delta < 0:
            raise ValueError("delta must be non-negative")
        if self.tx_range <= 0:
            raise ValueError("tx_range must be positive")
        return self


def _check_link(g: WmnGraph, link: RadioLink) -> None:
    for radio in link:
        if not g.has_radio(radio):
            raise UnknownRadio(f"Radio {radio} is not part of the topology")


def links_conflict_protocol(
    g: WmnGraph, x: RadioLink, l: RadioLink, p: ProtocolModelParams
) -> bool:
    """Decide whether two radio links are potential interference links

    Links sharing a radio always conflict. Links that only share a mesh
    node never conflict here; co-location is handled by the enhanced
    builder. Otherwise the links conflict when some endpoint of one lies
    strictly inside ``(1 + delta)`` times the length of either link from
    some endpoint of the other.
    """
    if x == l:
        raise ValueError("A link cannot conflict with itself")
    _check_link(g, x)
    _check_link(g, l)

    if set(x) & set(l):
        return True
    if set(x.nodes) & set(l.nodes):
        return False

    scale = 1.0 + p.delta
    radius = scale * max(g.link_length(x), g.link_length(l))
    return any(
        g.distance(u, v) < radius for u in x.nodes for v in l.nodes
    )


class ConflictModel(Protocol):
    """An interference model usable by the conflict graph builders

    For two links that share no mesh node, ``conflicts`` must depend only
    on the positions of their endpoint nodes; ``reach`` bounds the distance
    between link midpoints beyond which such links never conflict.
    """

    name: str

    def conflicts(self, g: WmnGraph, x: RadioLink, l: RadioLink) -> bool:
        ...

    def reach(self, g: WmnGraph) -> float:
        ...


class ProtocolModel:
    name = "protocol"

    def __init__(self, params: Optional[ProtocolModelParams] = None):
        self.params = (params or ProtocolModelParams()).check()

    def conflicts(self, g: WmnGraph, x: RadioLink, l: RadioLink) -> bool:
        return links_conflict_protocol(g, x, l, self.params)

    def reach(self, g: WmnGraph) -> float:
        longest = max((g.distance(i, j) for i, j in g.edges), default=0.0)
        return (2.0 + self.params.delta) * longest

    def __repr__(self) -> str:
        return f"ProtocolModel(delta={self.params.delta})"


def random_topology(
    rng: np.random.Generator,
    *,
    max_nodes: int = 12,
    max_radios: int = 4,
    tx_range: float = 250.0,
) -> WmnGraph:
    """Grow a random connected topology; each new node is dropped within
    range of a node placed before it"""
    count = int(rng.integers(2, max_nodes + 1))
    positions: List[Tuple[float, float]] = [(0.0, 0.0)]
    while len(positions) < count:
        ax, ay = positions[int(rng.integers(len(positions)))]
        radius = tx_range * float(rng.uniform(0.3, 0.95))
        angle = float(rng.uniform(0.0, 2.0 * math.pi))
        positions.append(
            (
                round(ax + radius * math.cos(angle), 3),
                round(ay + radius * math.sin(angle), 3),
            )
        )
    nodes = [
        Node(k, x, y, int(rng.integers(1, max_radios + 1)))
        for k, (x, y) in enumerate(positions)
    ]
    # Rounding can push a parent/child pair just past the range
    graph = WmnGraph(nodes, tx_range)
    if not nx.is_connected(graph.to_networkx()):
        return random_topology(
            rng, max_nodes=max_nodes, max_radios=max_radios, tx_range=tx_range
        )
    return graph


def square_topology(spacing: float = 200.0) -> WmnGraph:
    """Four nodes on a square: 0 and 3 carry two radios, 1 and 2 carry one

    Nodes 0-1, 0-2, 1-3 and 2-3 are linked; the diagonals are out of range.
    """
    return WmnGraph(
        [
            Node(0, 0.0, 0.0, 2),
            Node(1, spacing, 0.0, 1),
            Node(2, 0.0, spacing, 1),
            Node(3, spacing, spacing, 2),
        ],
        tx_range=250.0 * spacing / 200.0,
    )


_CASES: Dict[str, Tuple[Tuple[int, ...], Dict[RadioId, int]]] = {
    # two nodes, one and two radios, common channel
    "pair": ((1, 2), {}),
    # three-node chains A-B-C; A and C use one radio each
    "srcc": ((1, 1, 1), {}),
    "mrcc": ((1, 2, 1), {}),
    "mrdc": (
        (1, 2, 1),
        {
            RadioId(0, 0): 1,
            RadioId(1, 0): 1,
            RadioId(1, 1): 2,
            RadioId(2, 0): 2,
        },
    ),
}


def case_topology(
    name: str, spacing: float = 200.0, tx_range: float = 250.0
) -> Tuple[WmnGraph, Dict[RadioId, int]]:
    """Return one of the co-location scenarios and its channel map

    Radios missing from the channel map sit on the default channel.
    """
    try:
        radios, channels = _CASES[name]
    except KeyError:
        raise ValueError(
            f"Unknown scenario '{name}'; expected one of {sorted(_CASES)}"
        )
    nodes = [Node(k, k * spacing, 0.0, r) for k, r in enumerate(radios)]
    return WmnGraph(nodes, tx_range), dict(channels)
