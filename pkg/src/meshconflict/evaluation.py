# -*- coding: utf-8 -*-

"""
Deterministic flow evaluation: shortest-hop routing, max-min fair TDMA
scheduling over the cliques of a conflict graph, grid flow suites and
the link between interference degree and throughput
"""

__all__ = [
    "FlowSpec",
    "Route",
    "ScheduleResult",
    "Evaluation",
    "PerformanceRecord",
    "NoRoute",
    "UnknownCase",
    "InsufficientData",
    "CliqueBudgetExceeded",
    "CLASS3_CASES",
    "route",
    "schedule",
    "row_flow",
    "column_flow",
    "diagonal_flows",
    "flow_suite",
    "evaluate",
    "tid_performance_correlation",
    "percent_change",
    "relative_gains",
]

from collections import defaultdict
from itertools import combinations
from typing import (
    Any,
    Dict,
    Iterable,
    List,
    NamedTuple,
    Optional,
    Sequence,
    Tuple,
    Union,
)

import click
import networkx as nx
import numpy as np
from scipy.stats import rankdata

from .mmcg import (
    ChannelAssignment,
    ConflictGraph,
    Variant,
    build_emmcg,
    channel_of_link,
    expand,
)
from .topology import (
    ConflictModel,
    NodeId,
    ProtocolModel,
    RadioLink,
    WmnGraph,
)

DEFAULT_PHY_RATE = 9.0
DEFAULT_CLIQUE_BUDGET = 200_000
CLASS3_CASES = ("D2", "H4V4", "H5V5", "H5V5D2")

FlowSet = Tuple["FlowSpec", ...]


class NoRoute(ValueError):
    pass


class UnknownCase(ValueError):
    pass


class InsufficientData(ValueError):
    pass


class CliqueBudgetExceeded(RuntimeError):
    pass


class FlowSpec(NamedTuple):
    src: NodeId
    dst: NodeId
    label: str = ""

    def save(self) -> Dict[str, Any]:
        return {"src": self.src, "dst": self.dst, "label": self.label}


class Route(NamedTuple):
    flow: FlowSpec
    nodes: Tuple[NodeId, ...]
    links: Tuple[RadioLink, ...]

    @property
    def hops(self) -> int:
        return len(self.links)


class ScheduleResult(NamedTuple):
    throughput: Tuple[float, ...]
    aggregate: float
    airtime: Dict[RadioLink, float]
    routes: Tuple[Route, ...]

    @staticmethod
    def empty() -> "ScheduleResult":
        return ScheduleResult((), 0.0, {}, ())

    def save(self) -> Dict[str, Any]:
        return {
            "aggregate_mbps": self.aggregate,
            "flows": [
                {
                    **r.flow.save(),
                    "mbps": rate,
                    "path": list(r.nodes),
                    "links": [str(v) for v in r.links],
                }
                for r, rate in zip(self.routes, self.throughput)
            ],
            "airtime": {
                str(v): share for v, share in sorted(self.airtime.items())
            },
        }


def _operational_graph(g: WmnGraph, ca: ChannelAssignment) -> nx.Graph:
    graph = nx.Graph()
    graph.add_nodes_from(n.id for n in g.nodes)
    for i, j in g.edges:
        for x in g.radios(i):
            for y in g.radios(j):
                if ca.channel(x) == ca.channel(y):
                    graph.add_edge(i, j)
    return graph


def route(
    g: WmnGraph,
    ca: ChannelAssignment,
    flows: Sequence[FlowSpec],
    *,
    conflicts: Optional[ConflictGraph] = None,
    model: Optional[ConflictModel] = None,
) -> List[Route]:
    """Route each flow over a shortest path of operational links

    Among equally short paths the walk always steps to the smallest node
    id. Each hop uses the operational radio link with the lowest degree in
    the enhanced conflict graph of ``ca``.
    """
    if conflicts is None:
        conflicts = build_emmcg(expand(g), ca, model or ProtocolModel())
    degrees = dict(zip(conflicts.vertices, conflicts.degrees().tolist()))
    graph = _operational_graph(g, ca)

    routes = []
    for flow in flows:
        if flow.src == flow.dst:
            raise ValueError(f"Flow {flow.label!r} starts at its destination")
        for node in (flow.src, flow.dst):
            if node not in graph:
                raise NoRoute(f"Node {node} is not in the topology")
        distance = nx.single_source_shortest_path_length(graph, flow.dst)
        if flow.src not in distance:
            raise NoRoute(
                f"No operational path from {flow.src} to {flow.dst}"
            )

        nodes = [flow.src]
        while nodes[-1] != flow.dst:
            here = nodes[-1]
            nodes.append(
                min(
                    m
                    for m in graph.neighbors(here)
                    if distance.get(m, -1) == distance[here] - 1
                )
            )

        links = []
        for i, j in zip(nodes[:-1], nodes[1:]):
            candidates = [
                RadioLink.of(x, y)
                for x in g.radios(i)
                for y in g.radios(j)
                if channel_of_link(ca, RadioLink.of(x, y)) is not None
            ]
            links.append(
                min(candidates, key=lambda v: (degrees.get(v, 0), v))
            )
        routes.append(Route(flow, tuple(nodes), tuple(links)))
    return routes


def _cliques(graph: nx.Graph, budget: int) -> List[List[int]]:
    cliques = []
    for clique in nx.find_cliques(graph):
        cliques.append(sorted(clique))
        if len(cliques) > budget:
            raise CliqueBudgetExceeded(
                f"More than {budget} maximal cliques among active links"
            )
    return sorted(cliques)


def schedule(
    cg: ConflictGraph,
    routes: Sequence[Route],
    phy_rate: float = DEFAULT_PHY_RATE,
    *,
    clique_budget: int = DEFAULT_CLIQUE_BUDGET,
    eps: float = 1e-9,
) -> ScheduleResult:
    """Max-min fair rates of fluid TDMA over the conflict graph

    Rates of all unfrozen flows grow together; whenever the links of a
    maximal clique of active conflicting links fill the channel, every
    flow crossing that clique is frozen.
    """
    if phy_rate <= 0:
        raise ValueError("The PHY rate must be positive")
    if not routes:
        return ScheduleResult.empty()

    active = sorted({v for r in routes for v in r.links})
    local = cg.restrict(active)
    uses = np.zeros((len(local), len(routes)))
    for f, r in enumerate(routes):
        for v in r.links:
            uses[local.index(v), f] += 1.0

    cliques = _cliques(local.to_networkx(), clique_budget)
    load = np.array([uses[clique].sum(axis=0) for clique in cliques])

    rates = np.zeros(len(routes))
    frozen = np.zeros(len(routes), dtype=bool)
    tolerance = eps * phy_rate
    while not frozen.all():
        slack = phy_rate - load @ rates
        growth = load[:, ~frozen].sum(axis=1)
        limiting = growth > 0
        step = np.min(slack[limiting] / growth[limiting])
        rates[~frozen] += max(step, 0.0)
        saturated = (phy_rate - load @ rates) <= tolerance
        newly = (load[saturated] > 0).any(axis=0) & ~frozen
        if not newly.any():
            break
        frozen |= newly

    airtime = uses @ rates / phy_rate
    return ScheduleResult(
        tuple(float(x) for x in rates),
        float(rates.sum()),
        {v: float(airtime[k]) for k, v in enumerate(local.vertices)},
        tuple(routes),
    )


def _node_label(node: NodeId) -> int:
    return node + 1


def row_flow(rows: int, cols: int, row: int) -> FlowSpec:
    """A full-width flow along ``row``, left to right"""
    src, dst = row * cols, row * cols + cols - 1
    return FlowSpec(src, dst, f"{cols - 1}-HHF-R{row + 1}")


def column_flow(rows: int, cols: int, col: int) -> FlowSpec:
    """A full-height flow down ``col``, top to bottom"""
    src, dst = col, (rows - 1) * cols + col
    return FlowSpec(src, dst, f"{rows - 1}-HVF-C{col + 1}")


def diagonal_flows(rows: int, cols: int) -> Tuple[FlowSpec, FlowSpec]:
    hops = rows + cols - 2

    def diagonal(src: NodeId, dst: NodeId) -> FlowSpec:
        label = f"{hops}-HDF({_node_label(src)},{_node_label(dst)})"
        return FlowSpec(src, dst, label)

    return diagonal(0, rows * cols - 1), diagonal((rows - 1) * cols, cols - 1)


def _one_hop_horizontal(rows: int, cols: int) -> List[FlowSpec]:
    flows = []
    for r in range(rows):
        for c in range(0, cols - 1, 2):
            a, b = r * cols + c, r * cols + c + 1
            flows.append(
                FlowSpec(a, b, f"1-HHF({_node_label(a)},{_node_label(b)})")
            )
    return flows


def _one_hop_vertical(rows: int, cols: int) -> List[FlowSpec]:
    flows = []
    for c in range(cols):
        for r in range(rows - 1, 0, -2):
            a, b = r * cols + c, (r - 1) * cols + c
            flows.append(
                FlowSpec(a, b, f"1-HVF({_node_label(a)},{_node_label(b)})")
            )
    return flows


def flow_suite(
    rows: int, cols: int, cls: int, case: Union[int, str]
) -> List[FlowSet]:
    """The flow sets of a test case; families return one set per
    combination

    Class 1 case 1, 2 and 3 are the one-hop vertical, horizontal and
    combined suites. Class 2 case ``y`` runs every choice of ``y`` full
    rows. Class 3 cases are ``D2``, ``H4V4``, ``H5V5`` and ``H5V5D2``.
    """
    if rows < 2 or cols < 2:
        raise UnknownCase("Flow suites need at least a 2x2 grid")
    cls = int(cls)
    if cls == 1:
        suites = {
            "1": _one_hop_vertical(rows, cols),
            "2": _one_hop_horizontal(rows, cols),
            "3": _one_hop_horizontal(rows, cols)
            + _one_hop_vertical(rows, cols),
        }
        try:
            return [tuple(suites[str(case)])]
        except KeyError:
            raise UnknownCase(f"Class 1 has cases 1, 2 and 3, not {case!r}")

    if cls == 2:
        try:
            count = int(case)
        except ValueError:
            raise UnknownCase(f"Class 2 cases are row counts, not {case!r}")
        if not 1 <= count <= rows:
            raise UnknownCase(
                f"Class 2 case must lie between 1 and {rows}, got {count}"
            )
        return [
            tuple(row_flow(rows, cols, r) for r in chosen)
            for chosen in combinations(range(rows), count)
        ]

    if cls == 3:
        name = str(case).upper()
        full_rows = tuple(row_flow(rows, cols, r) for r in range(rows))
        full_cols = tuple(column_flow(rows, cols, c) for c in range(cols))
        if name == "D2":
            return [diagonal_flows(rows, cols)]
        if name == "H4V4":
            return [
                tuple(row_flow(rows, cols, r) for r in range(i, i + rows - 1))
                + tuple(
                    column_flow(rows, cols, c) for c in range(j, j + cols - 1)
                )
                for i in (0, 1)
                for j in (0, 1)
            ]
        if name == "H5V5":
            return [full_rows + full_cols]
        if name == "H5V5D2":
            return [full_rows + full_cols + diagonal_flows(rows, cols)]
        raise UnknownCase(
            f"Class 3 cases are {list(CLASS3_CASES)}, not {case!r}"
        )

    raise UnknownCase(f"Unknown test case class {cls}")


class Evaluation(NamedTuple):
    cls: int
    case: str
    mean: float
    runs: Tuple[ScheduleResult, ...]

    def save(self) -> Dict[str, Any]:
        return {
            "class": self.cls,
            "case": self.case,
            "aggregate_mbps": self.mean,
            "runs": [r.save() for r in self.runs],
        }


def evaluate(
    g: WmnGraph,
    ca: ChannelAssignment,
    cls: int,
    case: Union[int, str],
    phy_rate: float = DEFAULT_PHY_RATE,
    *,
    model: Optional[ConflictModel] = None,
    clique_budget: int = DEFAULT_CLIQUE_BUDGET,
    verbose: bool = False,
) -> Evaluation:
    """Route and schedule every flow set of a test case

    The scheduler always sees the enhanced conflict graph of ``ca``. The
    mean is taken over the aggregate throughput of the flow sets.
    """
    rows, cols = _grid_shape(g)
    flow_sets = flow_suite(rows, cols, cls, case)
    conflicts = build_emmcg(expand(g), ca, model or ProtocolModel())
    runs = []
    for flows in flow_sets:
        if not flows:
            runs.append(ScheduleResult.empty())
            continue
        routes = route(g, ca, flows, conflicts=conflicts)
        result = schedule(
            conflicts, routes, phy_rate, clique_budget=clique_budget
        )
        if verbose:
            labels = ", ".join(f.label for f in flows)
            click.secho(f"{labels}: {result.aggregate:.3f} Mbps")
        runs.append(result)
    mean = float(np.mean([r.aggregate for r in runs])) if runs else 0.0
    return Evaluation(int(cls), str(case), mean, tuple(runs))


def _grid_shape(g: WmnGraph) -> Tuple[int, int]:
    """Recover rows and columns of a lattice laid out by ``build_grid``"""
    xs = sorted({n.x for n in g.nodes})
    ys = sorted({n.y for n in g.nodes})
    if len(xs) * len(ys) != len(g.nodes):
        raise UnknownCase("Flow suites need a rectangular grid topology")
    return len(ys), len(xs)


class PerformanceRecord(NamedTuple):
    scheme: str
    variant: Variant
    tid: int
    aggregate: float

    @staticmethod
    def load(data: Dict[str, Any]) -> "PerformanceRecord":
        return PerformanceRecord(
            str(data["scheme"]),
            Variant(data["variant"]),
            int(data["tid"]),
            float(data["aggregate_mbps"]),
        )

    def save(self) -> Dict[str, Any]:
        return {
            "scheme": self.scheme,
            "variant": str(self.variant),
            "tid": self.tid,
            "aggregate_mbps": self.aggregate,
        }


def tid_performance_correlation(
    records: Sequence[Tuple[str, float, float]]
) -> float:
    """Spearman rank correlation of TID against aggregate throughput

    Tied values share their mean rank; a constant column correlates 0.
    """
    if len(records) < 3:
        raise InsufficientData(
            f"At least 3 records are needed, got {len(records)}"
        )
    tid = rankdata([r[1] for r in records])
    throughput = rankdata([r[2] for r in records])
    if np.ptp(tid) == 0 or np.ptp(throughput) == 0:
        return 0.0
    return float(np.clip(np.corrcoef(tid, throughput)[0, 1], -1.0, 1.0))


def percent_change(base: float, value: float) -> float:
    if base == 0:
        raise ValueError("Cannot express a change relative to zero")
    return 100.0 * (value - base) / base


def relative_gains(
    records: Iterable[PerformanceRecord], *, base: str = "bfs"
) -> Dict[str, Any]:
    """Percent changes between variants and against a base scheme

    ``enhanced_over_classical`` compares each scheme's two variants,
    ``over_base`` compares each scheme with ``base`` within a variant and
    ``variant_gap`` is the difference of those comparisons across
    variants. Repeated records are averaged.
    """
    grouped: Dict[Tuple[str, Variant], List[float]] = defaultdict(list)
    for r in records:
        grouped[(r.scheme, Variant(r.variant))].append(r.aggregate)
    mean = {k: float(np.mean(v)) for k, v in grouped.items()}
    schemes = sorted({s for s, _ in mean})

    def change(b: Tuple[str, Variant], v: Tuple[str, Variant]) -> float:
        return percent_change(mean[b], mean[v])

    enhanced_over_classical = {
        s: change((s, Variant.CLASSICAL), (s, Variant.ENHANCED))
        for s in schemes
        if (s, Variant.CLASSICAL) in mean and (s, Variant.ENHANCED) in mean
    }
    over_base: Dict[str, Dict[str, float]] = {}
    for variant in Variant:
        if (base, variant) not in mean:
            continue
        over_base[str(variant)] = {
            s: change((base, variant), (s, variant))
            for s in schemes
            if s != base and (s, variant) in mean
        }
    variant_gap = {
        s: over_base[str(Variant.ENHANCED)][s]
        - over_base[str(Variant.CLASSICAL)][s]
        for s in schemes
        if s in over_base.get(str(Variant.ENHANCED), {})
        and s in over_base.get(str(Variant.CLASSICAL), {})
    }
    return {
        "base": base,
        "enhanced_over_classical": enhanced_over_classical,
        "over_base": over_base,
        "variant_gap": variant_gap,
    }
