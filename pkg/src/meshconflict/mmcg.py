# -*- coding: utf-8 -*-

"""
Radio graphs and multi-radio multi-channel conflict graphs

Two builders share one engine: the classical builder only asks the
interference model, the enhanced builder also joins every pair of links
that touch a common mesh node on the same channel (radio co-location).
"""

__all__ = [
    "Variant",
    "RadioGraph",
    "ChannelAssignment",
    "ConflictGraph",
    "UnknownVertex",
    "SweepRow",
    "expand",
    "channel_of_link",
    "build_cmmcg",
    "build_emmcg",
    "build_mmcg",
    "potential_conflicts",
    "interference_degree",
    "total_interference_degree",
    "tid_sweep",
]

import enum
from collections import defaultdict
from itertools import combinations, product
from typing import (
    Any,
    Dict,
    Iterable,
    List,
    NamedTuple,
    Optional,
    Sequence,
    Set,
    Tuple,
)

import click
import networkx as nx
import numpy as np
from scipy.spatial import cKDTree

from .topology import (
    ConflictModel,
    Edge,
    NodeId,
    ProtocolModel,
    ProtocolModelParams,
    RadioId,
    RadioLink,
    UnknownRadio,
    WmnGraph,
    build_grid,
    validate,
)

DEFAULT_CONTEXT = "all-default"


class UnknownVertex(ValueError):
    pass


class Variant(str, enum.Enum):
    CLASSICAL = "classical"
    ENHANCED = "enhanced"

    def __str__(self) -> str:
        return self.value


class RadioGraph:
    """The per-radio expansion of a mesh topology

    Every node edge ``(i, j)`` contributes one radio link per pair of
    radios on ``i`` and ``j``.
    """

    def __init__(self, g: WmnGraph):
        self.topology = g
        self.radios: Tuple[RadioId, ...] = tuple(g.all_radios())
        self.links: Tuple[RadioLink, ...] = tuple(
            sorted(
                RadioLink.of(x, y)
                for i, j in g.edges
                for x, y in product(g.radios(i), g.radios(j))
            )
        )

    def __repr__(self) -> str:
        return (
            f"RadioGraph(radios={len(self.radios)}, "
            f"links={len(self.links)})"
        )


def expand(g: WmnGraph) -> RadioGraph:
    validate(g)
    return RadioGraph(g)


class ChannelAssignment(NamedTuple):
    channels: Dict[RadioId, int]
    scheme: str = DEFAULT_CONTEXT
    seed: Optional[int] = None
    channel_set: Tuple[int, ...] = (1,)

    @staticmethod
    def all_default(
        rg: RadioGraph, channel_set: Sequence[int] = (1,)
    ) -> "ChannelAssignment":
        channel_set = tuple(channel_set)
        if not channel_set:
            raise ValueError("At least one channel is required")
        return ChannelAssignment(
            {r: channel_set[0] for r in rg.radios},
            DEFAULT_CONTEXT,
            None,
            channel_set,
        )

    def channel(self, radio: RadioId) -> int:
        try:
            return self.channels[radio]
        except KeyError:
            raise UnknownRadio(f"Radio {radio} has no channel")

    def check(self, rg: RadioGraph) -> "ChannelAssignment":
        missing = [r for r in rg.radios if r not in self.channels]
        if missing:
            raise UnknownRadio(
                f"{len(missing)} radios have no channel, e.g. {missing[0]}"
            )
        allowed = set(self.channel_set)
        for radio, ch in self.channels.items():
            if ch not in allowed:
                raise ValueError(
                    f"Radio {radio} uses channel {ch} outside "
                    f"{list(self.channel_set)}"
                )
        return self

    @staticmethod
    def load(data: Dict[str, Any]) -> "ChannelAssignment":
        seed = data.get("seed")
        return ChannelAssignment(
            {
                RadioId.parse(k): int(v)
                for k, v in data.get("channels", {}).items()
            },
            str(data.get("scheme", DEFAULT_CONTEXT)),
            None if seed is None else int(seed),
            tuple(int(c) for c in data.get("channel_set", (1,))),
        )

    def save(self) -> Dict[str, Any]:
        return {
            "scheme": self.scheme,
            "seed": self.seed,
            "channel_set": list(self.channel_set),
            "channels": {
                str(r): self.channels[r] for r in sorted(self.channels)
            },
        }


def channel_of_link(ca: ChannelAssignment, v: RadioLink) -> Optional[int]:
    """The channel a link operates on, or ``None`` if its radios disagree"""
    a, b = ca.channel(v.a), ca.channel(v.b)
    return a if a == b else None


class ConflictGraph:
    """Vertices are operational radio links, edges are conflicts

    ``edges`` is an ``(m, 2)`` integer array of vertex indices with
    ``i < j`` in each row, rows sorted lexicographically.
    """

    def __init__(
        self,
        vertices: Sequence[RadioLink],
        edges: Any,
        variant: Variant,
        context: str = DEFAULT_CONTEXT,
        channels: Optional[Sequence[int]] = None,
    ):
        self.vertices: Tuple[RadioLink, ...] = tuple(vertices)
        self.variant = Variant(variant)
        self.context = context
        self.channels: Tuple[int, ...] = (
            tuple(channels)
            if channels is not None
            else (0,) * len(self.vertices)
        )
        self.edges = _normalize_edges(edges, len(self.vertices))
        self._index = {v: k for k, v in enumerate(self.vertices)}

    def __len__(self) -> int:
        return len(self.vertices)

    def __contains__(self, v: Any) -> bool:
        return v in self._index

    @property
    def tid(self) -> int:
        return int(self.edges.shape[0])

    def index(self, v: RadioLink) -> int:
        try:
            return self._index[v]
        except KeyError:
            raise UnknownVertex(f"{v} is not a vertex of this conflict graph")

    def degrees(self) -> np.ndarray:
        return np.bincount(
            self.edges.ravel(), minlength=len(self.vertices)
        ).astype(np.int64)

    def degree(self, v: RadioLink) -> int:
        k = self.index(v)
        return int(np.count_nonzero(self.edges == k))

    def edge_set(self) -> Set[Tuple[RadioLink, RadioLink]]:
        return {
            (self.vertices[i], self.vertices[j]) for i, j in self.edges
        }

    def neighbors(self) -> List[List[int]]:
        adjacency: List[List[int]] = [[] for _ in self.vertices]
        for i, j in self.edges.tolist():
            adjacency[i].append(j)
            adjacency[j].append(i)
        return adjacency

    def restrict(self, links: Iterable[RadioLink]) -> "ConflictGraph":
        """The subgraph induced by ``links``"""
        keep = sorted(set(self.index(v) for v in links))
        remap = np.full(len(self.vertices), -1, dtype=np.int64)
        remap[keep] = np.arange(len(keep))
        mapped = remap[self.edges]
        return ConflictGraph(
            [self.vertices[k] for k in keep],
            mapped[(mapped >= 0).all(axis=1)],
            self.variant,
            self.context,
            [self.channels[k] for k in keep],
        )

    def to_networkx(self) -> nx.Graph:
        graph = nx.Graph(variant=str(self.variant), context=self.context)
        for k, (v, ch) in enumerate(zip(self.vertices, self.channels)):
            graph.add_node(k, link=v, channel=ch)
        graph.add_edges_from(self.edges.tolist())
        return graph

    def degree_rows(self) -> List[Tuple[str, int, int]]:
        return [
            (str(v), ch, int(d))
            for v, ch, d in zip(self.vertices, self.channels, self.degrees())
        ]

    @staticmethod
    def load(data: Dict[str, Any]) -> "ConflictGraph":
        graph = ConflictGraph(
            [RadioLink.load(v) for v in data.get("vertices", [])],
            data.get("edges", []),
            Variant(data["variant"]),
            str(data.get("context", DEFAULT_CONTEXT)),
            data.get("channels"),
        )
        if "tid" in data and int(data["tid"]) != graph.tid:
            raise ValueError(
                f"Stored TID {data['tid']} does not match the "
                f"{graph.tid} stored edges"
            )
        return graph

    def save(self) -> Dict[str, Any]:
        return {
            "variant": str(self.variant),
            "context": self.context,
            "vertices": [v.save() for v in self.vertices],
            "channels": list(self.channels),
            "edges": self.edges.tolist(),
            "tid": self.tid,
        }

    def __repr__(self) -> str:
        return (
            f"ConflictGraph(variant={self.variant}, "
            f"vertices={len(self.vertices)}, tid={self.tid})"
        )


def _normalize_edges(edges: Any, count: int) -> np.ndarray:
    array = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
    if not array.shape[0]:
        return np.zeros((0, 2), dtype=np.int64)
    array = np.sort(array, axis=1)
    if (array[:, 0] == array[:, 1]).any():
        raise ValueError("Conflict graphs cannot contain self-loops")
    if array.min() < 0 or array.max() >= count:
        raise ValueError("Conflict edge refers to an unknown vertex")
    array = np.unique(array, axis=0)
    return array[np.lexsort((array[:, 1], array[:, 0]))]


def build_mmcg(
    rg: RadioGraph,
    ca: ChannelAssignment,
    model: ConflictModel,
    variant: Variant,
) -> ConflictGraph:
    """Build the conflict graph of ``rg`` under ``ca``

    Only operational links become vertices, and only links on a common
    channel can be joined.
    """
    variant = Variant(variant)
    enhanced = variant is Variant.ENHANCED
    g = rg.topology

    vertices: List[RadioLink] = []
    channels: List[int] = []
    for v in rg.links:
        ch = channel_of_link(ca, v)
        if ch is not None:
            vertices.append(v)
            channels.append(ch)

    groups: Dict[Edge, List[int]] = defaultdict(list)
    for k, v in enumerate(vertices):
        groups[v.nodes].append(k)
    keys = sorted(groups)

    edges: List[Tuple[int, int]] = []

    def join(
        first: Sequence[int], second: Sequence[int], co_located: bool
    ) -> None:
        for i, j in product(first, second):
            if channels[i] != channels[j]:
                continue
            if (co_located and enhanced) or model.conflicts(
                g, vertices[i], vertices[j]
            ):
                edges.append((i, j) if i < j else (j, i))

    # links between the same two nodes
    for key in keys:
        members = groups[key]
        for x, y in combinations(members, 2):
            join((x,), (y,), True)

    # links meeting at exactly one node
    incident: Dict[NodeId, List[Edge]] = defaultdict(list)
    for key in keys:
        incident[key[0]].append(key)
        incident[key[1]].append(key)
    for node in sorted(incident):
        for p, q in combinations(incident[node], 2):
            join(groups[p], groups[q], True)

    # node-disjoint links, one model query per pair of node edges
    if len(keys) > 1:
        midpoints = np.array(
            [
                (
                    (g.node(i).x + g.node(j).x) / 2.0,
                    (g.node(i).y + g.node(j).y) / 2.0,
                )
                for i, j in keys
            ]
        )
        candidates = cKDTree(midpoints).query_pairs(
            model.reach(g), output_type="ndarray"
        )
        for s, t in sorted(map(tuple, candidates.tolist())):
            p, q = keys[s], keys[t]
            if set(p) & set(q):
                continue
            first, second = groups[p], groups[q]
            if not model.conflicts(
                g, vertices[first[0]], vertices[second[0]]
            ):
                continue
            for i, j in product(first, second):
                if channels[i] == channels[j]:
                    edges.append((i, j) if i < j else (j, i))

    return ConflictGraph(vertices, edges, variant, ca.scheme, channels)


def build_cmmcg(
    rg: RadioGraph, ca: ChannelAssignment, model: ConflictModel
) -> ConflictGraph:
    return build_mmcg(rg, ca, model, Variant.CLASSICAL)


def build_emmcg(
    rg: RadioGraph, ca: ChannelAssignment, model: ConflictModel
) -> ConflictGraph:
    return build_mmcg(rg, ca, model, Variant.ENHANCED)


def potential_conflicts(
    rg: RadioGraph, model: ConflictModel, variant: Variant
) -> ConflictGraph:
    """The conflict graph with every radio on one channel

    Every other assignment yields this graph restricted to its operational
    links, keeping only edges between links on equal channels.
    """
    return build_mmcg(rg, ChannelAssignment.all_default(rg), model, variant)


def interference_degree(cg: ConflictGraph, v: RadioLink) -> int:
    return cg.degree(v)


def total_interference_degree(cg: ConflictGraph) -> int:
    return cg.tid


class SweepRow(NamedTuple):
    n: int
    rows: int
    cols: int
    tid_classical: int
    tid_enhanced: int

    @property
    def gap(self) -> int:
        return self.tid_enhanced - self.tid_classical

    def save(self) -> Dict[str, Any]:
        return {
            "n": self.n,
            "grid": f"{self.rows}x{self.cols}",
            "tid_classical": self.tid_classical,
            "tid_enhanced": self.tid_enhanced,
            "gap": self.gap,
        }


def tid_sweep(
    max_n: int,
    *,
    step: int = 5,
    spacing: float = 200.0,
    radios_per_node: int = 2,
    params: Optional[ProtocolModelParams] = None,
    verbose: bool = False,
) -> List[SweepRow]:
    """Default-channel TIDs of both variants on ``step*n`` square grids"""
    if max_n < 1:
        raise ValueError("The sweep needs at least one grid size")
    params = params or ProtocolModelParams()
    model = ProtocolModel(params)
    rows = []
    for n in range(1, max_n + 1):
        side = step * n
        g = build_grid(side, side, spacing, radios_per_node, params.tx_range)
        rg = expand(g)
        classical = potential_conflicts(rg, model, Variant.CLASSICAL)
        enhanced = potential_conflicts(rg, model, Variant.ENHANCED)
        row = SweepRow(n, side, side, classical.tid, enhanced.tid)
        if verbose:
            click.secho(
                f"{side}x{side}: TID classical={row.tid_classical} "
                f"enhanced={row.tid_enhanced} gap={row.gap}"
            )
        rows.append(row)
    return rows
