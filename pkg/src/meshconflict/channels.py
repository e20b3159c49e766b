# -*- coding: utf-8 -*-

"""
Channel assignment heuristics over multi-radio conflict graphs

Every scheme starts with all radios on the default channel and changes
them through :class:`_AssignmentState`, which refuses any change that
would split the mesh into pieces over operational links.
"""

__all__ = [
    "CaConfig",
    "GatewayMissing",
    "SCHEMES",
    "bfs_ca",
    "mais_ca",
    "cen_ca",
    "clq_ca",
    "default_assignment",
    "preserves_connectivity",
    "derive_seed",
    "run_scheme",
    "save_assignment",
    "load_assignment",
]

import hashlib
import itertools
from collections import defaultdict
from pathlib import Path
from typing import (
    Callable,
    Dict,
    Iterable,
    List,
    Mapping,
    NamedTuple,
    Optional,
    Sequence,
    Set,
    Tuple,
)

import click
import networkx as nx
import numpy as np

from . import filesystem
from .mmcg import (
    ChannelAssignment,
    ConflictGraph,
    RadioGraph,
    Variant,
    channel_of_link,
    potential_conflicts,
)
from .topology import (
    ConflictModel,
    Edge,
    NodeId,
    RadioId,
    RadioLink,
    UnknownRadio,
)

SCHEMES = ("bfs", "mais", "cen", "clq")


class GatewayMissing(ValueError):
    pass


class CaConfig(NamedTuple):
    channels: Tuple[int, ...] = (1, 2, 3)
    gateway: Optional[NodeId] = None
    seed: int = 0

    @property
    def default(self) -> int:
        return self.channels[0]

    def check(self) -> "CaConfig":
        if not self.channels:
            raise ValueError("At least one channel is required")
        if len(set(self.channels)) != len(self.channels):
            raise ValueError(f"Duplicate channels in {list(self.channels)}")
        return self


def default_assignment(
    rg: RadioGraph, channels: Sequence[int] = (1, 2, 3)
) -> ChannelAssignment:
    return ChannelAssignment.all_default(rg, channels)


def derive_seed(seed: int, label: str) -> int:
    """A stable 64-bit seed for the stream named ``label``"""
    digest = hashlib.sha256(f"{seed}:{label}".encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big")


def _node_graph(rg: RadioGraph, pairs: Iterable[Edge]) -> nx.Graph:
    graph = nx.Graph()
    graph.add_nodes_from(n.id for n in rg.topology.nodes)
    graph.add_edges_from(pairs)
    return graph


def preserves_connectivity(rg: RadioGraph, ca: ChannelAssignment) -> bool:
    pairs = {
        v.nodes for v in rg.links if channel_of_link(ca, v) is not None
    }
    return nx.is_connected(_node_graph(rg, pairs))


class _AssignmentState:
    """Working channels of every radio plus the operational link count of
    every node pair

    Radios not fixed yet sit on the default channel.
    """

    def __init__(self, rg: RadioGraph, cfg: CaConfig):
        self.rg = rg
        self.cfg = cfg.check()
        self.current: Dict[RadioId, int] = {
            r: cfg.default for r in rg.radios
        }
        self.fixed: Dict[RadioId, int] = {}
        self.rejected = 0
        g = rg.topology
        self.operational: Dict[Edge, int] = {
            (i, j): len(g.radios(i)) * len(g.radios(j)) for i, j in g.edges
        }
        self._radios = {n.id: g.radios(n.id) for n in g.nodes}
        self._neighbors = {n.id: g.neighbors(n.id) for n in g.nodes}

    def _count(self, pair: Edge) -> int:
        i, j = pair
        return sum(
            1
            for x in self._radios[i]
            for y in self._radios[j]
            if self.current[x] == self.current[y]
        )

    def _apply(self, changes: Mapping[RadioId, int]) -> List[Edge]:
        for radio, channel in changes.items():
            self.current[radio] = channel
        touched = set()
        for radio in changes:
            for m in self._neighbors[radio.node]:
                i, j = radio.node, m
                touched.add((i, j) if i < j else (j, i))
        lost = []
        for pair in touched:
            before = self.operational[pair]
            self.operational[pair] = self._count(pair)
            if before and not self.operational[pair]:
                lost.append(pair)
        return lost

    def connected(self) -> bool:
        pairs = (p for p, count in self.operational.items() if count)
        return nx.is_connected(_node_graph(self.rg, pairs))

    def try_move(self, changes: Mapping[RadioId, int]) -> bool:
        """Move radios to new channels unless the mesh would disconnect"""
        for radio, channel in changes.items():
            if radio not in self.current:
                raise UnknownRadio(f"Radio {radio} is not in the topology")
            if channel not in self.cfg.channels:
                raise ValueError(f"Channel {channel} is not available")
        previous = {r: self.current[r] for r in changes}
        lost = self._apply(changes)
        if lost and not self.connected():
            self._apply(previous)
            self.rejected += 1
            return False
        return True

    def try_fix(self, radio: RadioId, channel: int) -> bool:
        """Fix a radio once; a radio that is already fixed keeps its
        channel"""
        if radio in self.fixed:
            return self.fixed[radio] == channel
        if self.try_move({radio: channel}):
            self.fixed[radio] = channel
            return True
        return False

    def pending(self, v: RadioLink) -> List[RadioId]:
        return [r for r in v if r not in self.fixed]

    def fixed_channel(self, v: RadioLink) -> Optional[int]:
        """The channel of ``v`` if both its radios are fixed and agree"""
        a, b = self.fixed.get(v.a), self.fixed.get(v.b)
        return a if a is not None and a == b else None

    def sibling_channels(self, radio: RadioId) -> Set[int]:
        """Channels fixed on the other radios of ``radio``'s node"""
        return {
            self.fixed[o]
            for o in self._radios[radio.node]
            if o != radio and o in self.fixed
        }

    def pair_fixed_operational(self, v: RadioLink) -> bool:
        i, j = v.nodes
        return any(
            self.fixed_channel(RadioLink(x, y)) is not None
            for x in self._radios[i]
            for y in self._radios[j]
        )

    def settle_pending(self, scorer: "_TidScorer") -> None:
        """Fix every radio still pending on the channel that adds the
        fewest conflicts"""
        for radio in sorted(self.current):
            if radio in self.fixed:
                continue
            base = self.current[radio]
            best: Optional[Tuple[int, int]] = None
            for channel in self.cfg.channels:
                if not self.try_move({radio: channel}):
                    continue
                self._apply({radio: base})
                gain = scorer.delta(self.current, {radio: channel})
                if best is None or gain < best[0]:
                    best = (gain, channel)
            if best is not None:
                self.try_fix(radio, best[1])

    def _joining_moves(self, pair: Edge) -> List[Dict[RadioId, int]]:
        i, j = pair
        moves = []
        for p, q in ((i, j), (j, i)):
            for x in self._radios[p]:
                for y in self._radios[q]:
                    if self.current[x] != self.current[y]:
                        moves.append({x: self.current[y]})
        for x in self._radios[i]:
            for y in self._radios[j]:
                for channel in self.cfg.channels:
                    moves.append({x: channel, y: channel})
        return moves

    def rejoin_pairs(self, scorer: "_TidScorer") -> int:
        """Give every node pair left without an operational link one back

        A pair takes the move that adds the fewest conflicts without
        costing any other pair its last link; fixed radios follow the move.
        Sweeps repeat until one changes nothing.
        """
        rejoined = 0
        changed = True
        while changed:
            changed = False
            for pair in sorted(self.operational):
                if self.operational[pair]:
                    continue
                best: Optional[Tuple[int, Dict[RadioId, int]]] = None
                for change in self._joining_moves(pair):
                    previous = {r: self.current[r] for r in change}
                    lost = self._apply(change)
                    joined = not lost and self.operational[pair] > 0
                    self._apply(previous)
                    if not joined:
                        continue
                    gain = scorer.delta(self.current, change)
                    if best is None or gain < best[0]:
                        best = (gain, change)
                if best is None:
                    continue
                self._apply(best[1])
                for radio, channel in best[1].items():
                    if radio in self.fixed:
                        self.fixed[radio] = channel
                rejoined += 1
                changed = True
        return rejoined

    def finish(self, scheme: str) -> ChannelAssignment:
        return ChannelAssignment(
            dict(self.current), scheme, self.cfg.seed, self.cfg.channels
        )


def _check_input(rg: RadioGraph, mmcg: ConflictGraph) -> None:
    for v in mmcg.vertices:
        for r in v:
            if not rg.topology.has_radio(r):
                raise UnknownRadio(
                    f"Conflict graph vertex {v} names unknown radio {r}"
                )


def _settle(
    state: _AssignmentState,
    mmcg: ConflictGraph,
    scheme: str,
    verbose: bool,
) -> ChannelAssignment:
    scorer = _TidScorer(mmcg)
    state.settle_pending(scorer)
    rejoined = state.rejoin_pairs(scorer)
    if verbose and rejoined:
        click.secho(f"{scheme}: {rejoined} node pairs rejoined")
    return state.finish(scheme)


def bfs_ca(
    rg: RadioGraph,
    mmcg: ConflictGraph,
    cfg: CaConfig,
    *,
    verbose: bool = False,
) -> ChannelAssignment:
    """Visit conflict graph vertices outward from the gateway

    A vertex takes the first channel not used by an operational neighbor,
    or a random channel when every channel is taken. Under the enhanced
    graph the random pick avoids channels already fixed on other radios of
    the same nodes. A link with a single unfixed radio between two nodes
    that are not yet joined inherits the channel of its fixed radio.
    """
    g = rg.topology
    if cfg.gateway is None or cfg.gateway not in g:
        raise GatewayMissing(
            f"A gateway node in the topology is required, got {cfg.gateway}"
        )
    _check_input(rg, mmcg)
    state = _AssignmentState(rg, cfg)
    rng = np.random.default_rng(cfg.seed)

    hops = nx.single_source_shortest_path_length(g.to_networkx(), cfg.gateway)
    order = sorted(
        range(len(mmcg)),
        key=lambda k: (
            (hops[mmcg.vertices[k].a.node] + hops[mmcg.vertices[k].b.node])
            / 2.0,
            k,
        ),
    )
    adjacency = mmcg.neighbors()

    for k in order:
        v = mmcg.vertices[k]
        pending = state.pending(v)
        if not pending:
            continue
        if len(pending) == 1 and not state.pair_fixed_operational(v):
            other = v.b if pending[0] == v.a else v.a
            state.try_fix(pending[0], state.fixed[other])
            continue
        used = set()
        for u in adjacency[k]:
            ch = state.fixed_channel(mmcg.vertices[u])
            if ch is not None:
                used.add(ch)
        free = [c for c in cfg.channels if c not in used]
        if free:
            channel = free[0]
        else:
            pool: Sequence[int] = cfg.channels
            if mmcg.variant is Variant.ENHANCED:
                taken: Set[int] = set()
                for radio in pending:
                    taken |= state.sibling_channels(radio)
                pool = [c for c in cfg.channels if c not in taken] or pool
            channel = int(rng.choice(pool))
        for radio in pending:
            state.try_fix(radio, channel)

    if verbose:
        click.secho(
            f"bfs: fixed {len(state.fixed)} of {len(rg.radios)} radios, "
            f"{state.rejected} changes refused"
        )
    return _settle(state, mmcg, "bfs", verbose)


def _greedy_independent_set(graph: nx.Graph) -> List[int]:
    """Minimum-degree greedy maximal independent set, ties by index"""
    graph = graph.copy()
    chosen = []
    while graph:
        node = min(graph.degree, key=lambda item: (item[1], item[0]))[0]
        chosen.append(node)
        graph.remove_nodes_from(set(graph.neighbors(node)) | {node})
    return sorted(chosen)


def mais_ca(
    rg: RadioGraph,
    mmcg: ConflictGraph,
    cfg: CaConfig,
    *,
    verbose: bool = False,
) -> ChannelAssignment:
    """Give each successive maximal independent set the next channel

    Under the enhanced graph a vertex is passed over, its radios left
    pending, when one of its radios is already fixed elsewhere or when a
    pending radio would share the channel with a radio of its own node.
    Radios still pending at the end take their cheapest channel.
    """
    _check_input(rg, mmcg)
    state = _AssignmentState(rg, cfg)
    enhanced = mmcg.variant is Variant.ENHANCED
    remaining = mmcg.to_networkx()
    inoperative = 0
    rounds = 0
    while remaining:
        independent = _greedy_independent_set(remaining)
        channel = cfg.channels[rounds % len(cfg.channels)]
        for k in independent:
            v = mmcg.vertices[k]
            if enhanced and (
                any(state.fixed.get(r, channel) != channel for r in v)
                or any(
                    channel in state.sibling_channels(r)
                    for r in state.pending(v)
                )
            ):
                inoperative += 1
                continue
            fixes = [state.try_fix(r, channel) for r in v]
            if not all(fixes):
                inoperative += 1
        remaining.remove_nodes_from(independent)
        rounds += 1

    if verbose:
        click.secho(
            f"mais: {rounds} independent sets, {inoperative} links left "
            "inoperative"
        )
    return _settle(state, mmcg, "mais", verbose)


class _TidScorer:
    """Conflict count of an assignment over a potential conflict graph"""

    def __init__(self, potential: ConflictGraph):
        self.potential = potential
        self.adjacency = potential.neighbors()
        self.by_radio: Dict[RadioId, List[int]] = defaultdict(list)
        for k, v in enumerate(potential.vertices):
            self.by_radio[v.a].append(k)
            self.by_radio[v.b].append(k)

    def _channel(self, k: int, channels: Mapping[RadioId, int]) -> int:
        v = self.potential.vertices[k]
        a, b = channels[v.a], channels[v.b]
        return a if a == b else -1

    def total(self, channels: Mapping[RadioId, int]) -> int:
        count = 0
        for i, j in self.potential.edges.tolist():
            ch = self._channel(i, channels)
            if ch >= 0 and ch == self._channel(j, channels):
                count += 1
        return count

    def _local(
        self, affected: Set[int], channels: Mapping[RadioId, int]
    ) -> int:
        count = 0
        for i in affected:
            ch = self._channel(i, channels)
            if ch < 0:
                continue
            for j in self.adjacency[i]:
                if j in affected and j < i:
                    continue
                if self._channel(j, channels) == ch:
                    count += 1
        return count

    def delta(
        self,
        channels: Dict[RadioId, int],
        changes: Mapping[RadioId, int],
    ) -> int:
        affected = set()
        for radio in changes:
            affected.update(self.by_radio.get(radio, ()))
        before = self._local(affected, channels)
        trial = dict(channels)
        trial.update(changes)
        return self._local(affected, trial) - before


def cen_ca(
    rg: RadioGraph,
    cfg: CaConfig,
    model: ConflictModel,
    variant: Variant,
    *,
    trace: Optional[List[int]] = None,
    verbose: bool = False,
) -> ChannelAssignment:
    """Local search: move link endpoints to whichever channel pair lowers
    the total interference degree most, until a full pass changes nothing

    Node pairs the search leaves without an operational link are joined
    again afterwards; ``trace`` then ends with the rejoined total.
    """
    potential = potential_conflicts(rg, model, variant)
    state = _AssignmentState(rg, cfg)
    scorer = _TidScorer(potential)
    tid = scorer.total(state.current)
    if trace is not None:
        trace.append(tid)

    passes = 0
    improved = True
    while improved:
        improved = False
        passes += 1
        for link in rg.links:
            options = []
            for position, (first, second) in enumerate(
                itertools.product(cfg.channels, repeat=2)
            ):
                if (
                    state.current[link.a] == first
                    and state.current[link.b] == second
                ):
                    continue
                change = {link.a: first, link.b: second}
                gain = scorer.delta(state.current, change)
                if gain < 0:
                    options.append((gain, position, change))
            for gain, _, change in sorted(options, key=lambda o: o[:2]):
                if state.try_move(change):
                    tid += gain
                    if trace is not None:
                        trace.append(tid)
                    improved = True
                    break

    rejoined = state.rejoin_pairs(scorer)
    if rejoined:
        tid = scorer.total(state.current)
        if trace is not None:
            trace.append(tid)
    if verbose:
        click.secho(
            f"cen: {passes} passes, {rejoined} node pairs rejoined, "
            f"final TID {tid}"
        )
    return state.finish("cen")


def _greedy_clique(graph: nx.Graph) -> List[int]:
    """Grow a maximal clique from the highest degree vertex"""
    start = min(graph.nodes, key=lambda n: (-graph.degree[n], n))
    clique = [start]
    candidates = set(graph.neighbors(start))
    while candidates:
        best = min(candidates, key=lambda n: (-graph.degree[n], n))
        clique.append(best)
        candidates &= set(graph.neighbors(best))
    return sorted(clique)


def clq_ca(
    rg: RadioGraph,
    mmcg: ConflictGraph,
    cfg: CaConfig,
    *,
    verbose: bool = False,
) -> ChannelAssignment:
    """Spread the channels across one maximal clique at a time"""
    _check_input(rg, mmcg)
    state = _AssignmentState(rg, cfg)
    residual = mmcg.to_networkx()
    cliques = 0
    while residual.number_of_edges():
        clique = _greedy_clique(residual)
        for position, k in enumerate(clique):
            channel = cfg.channels[position % len(cfg.channels)]
            for radio in mmcg.vertices[k]:
                state.try_fix(radio, channel)
        residual.remove_edges_from(
            (u, w) for i, u in enumerate(clique) for w in clique[i + 1 :]
        )
        cliques += 1

    if verbose:
        click.secho(f"clq: {cliques} cliques spread over the channels")
    return _settle(state, mmcg, "clq", verbose)


def run_scheme(
    name: str,
    rg: RadioGraph,
    cfg: CaConfig,
    model: ConflictModel,
    variant: Variant,
    *,
    verbose: bool = False,
) -> ChannelAssignment:
    """Run a scheme by name against the conflict graph of ``variant``"""
    if name == "cen":
        return cen_ca(rg, cfg, model, variant, verbose=verbose)
    schemes: Dict[str, Callable[..., ChannelAssignment]] = {
        "bfs": bfs_ca,
        "mais": mais_ca,
        "clq": clq_ca,
    }
    try:
        scheme = schemes[name]
    except KeyError:
        raise ValueError(
            f"Unknown scheme '{name}'; expected one of {list(SCHEMES)}"
        )
    mmcg = potential_conflicts(rg, model, variant)
    return scheme(rg, mmcg, cfg, verbose=verbose)


def save_assignment(
    path: Path, ca: ChannelAssignment, *, verbose: bool = False
) -> Path:
    return filesystem.write_csv(
        path,
        ["node_id", "radio_index", "channel"],
        (
            (radio.node, radio.index, ca.channels[radio])
            for radio in sorted(ca.channels)
        ),
        verbose=verbose,
    )


def load_assignment(
    path: Path,
    *,
    scheme: str = "file",
    seed: Optional[int] = None,
    channel_set: Optional[Sequence[int]] = None,
) -> ChannelAssignment:
    channels = {
        RadioId(int(row["node_id"]), int(row["radio_index"])): int(
            row["channel"]
        )
        for row in filesystem.read_csv(path)
    }
    return ChannelAssignment(
        channels,
        scheme,
        seed,
        tuple(channel_set)
        if channel_set
        else tuple(sorted(set(channels.values()))),
    )
