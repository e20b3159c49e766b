# -*- coding: utf-8 -*-

import json
import math
import time
from itertools import combinations
from typing import Dict, FrozenSet, Optional, Set

import numpy as np
import pytest

from meshconflict.mmcg import (
    ChannelAssignment,
    ConflictGraph,
    RadioGraph,
    UnknownVertex,
    Variant,
    build_cmmcg,
    build_emmcg,
    build_mmcg,
    channel_of_link,
    expand,
    interference_degree,
    potential_conflicts,
    tid_sweep,
    total_interference_degree,
)
from meshconflict.topology import (
    ProtocolModel,
    ProtocolModelParams,
    RadioId,
    RadioLink,
    UnknownRadio,
    build_grid,
    case_topology,
    random_topology,
    square_topology,
)

Pair = FrozenSet[RadioLink]

# node letters of the four-node square
LETTERS = {"A": 0, "B": 1, "C": 2, "D": 3}


def named(name: str) -> RadioLink:
    """``"A0B1"`` is the link between radio 0 of A and radio 1 of B"""
    return RadioLink.of(
        RadioId(LETTERS[name[0]], int(name[1])),
        RadioId(LETTERS[name[2]], int(name[3])),
    )


def pairs(*names: str) -> Set[Pair]:
    result = set()
    for item in names:
        first, second = item.split("-")
        result.add(frozenset((named(first), named(second))))
    return result


def edge_pairs(cg: ConflictGraph) -> Set[Pair]:
    return {frozenset(e) for e in cg.edge_set()}


def scenario(name: str) -> tuple:
    g, channels = case_topology(name)
    rg = expand(g)
    ca = ChannelAssignment(
        {r: channels.get(r, 1) for r in rg.radios}, "case", None, (1, 2, 3)
    )
    return rg, ca


SQUARE_CLASSICAL = pairs(
    "A0B0-A1B0",
    "A0C0-A1C0",
    "A0B0-A0C0",
    "A1B0-A1C0",
    "B0D0-B0D1",
    "C0D0-C0D1",
    "B0D0-C0D0",
    "B0D1-C0D1",
    "A0B0-B0D0",
    "A0B0-B0D1",
    "A1B0-B0D0",
    "A1B0-B0D1",
    "A0C0-C0D0",
    "A0C0-C0D1",
    "A1C0-C0D0",
    "A1C0-C0D1",
)
SQUARE_CO_LOCATED = pairs(
    "A0B0-A1C0", "A1B0-A0C0", "B0D0-C0D1", "C0D0-B0D1"
)


def test_expand_square() -> None:
    rg = expand(square_topology())
    assert len(rg.radios) == 6
    assert set(rg.links) == {
        named(n)
        for n in (
            "A0B0",
            "A1B0",
            "A0C0",
            "A1C0",
            "B0D0",
            "B0D1",
            "C0D0",
            "C0D1",
        )
    }
    assert list(rg.links) == sorted(rg.links)


def test_expand_counts() -> None:
    assert len(expand(build_grid(1, 2, 200, 1, 250)).links) == 1
    rg = expand(build_grid(5, 5, 200, 2, 250))
    assert len(rg.radios) == 50
    assert len(rg.links) == 160


def test_channel_of_link() -> None:
    rg = expand(build_grid(1, 3, 200, 2, 250))
    channels = {r: 1 for r in rg.radios}
    channels[RadioId(1, 1)] = 2
    ca = ChannelAssignment(channels, channel_set=(1, 2))
    assert channel_of_link(ca, RadioLink.of(RadioId(0, 1), RadioId(1, 0))) == 1
    assert (
        channel_of_link(ca, RadioLink.of(RadioId(0, 1), RadioId(1, 1)))
        is None
    )
    default = ChannelAssignment.all_default(rg, (3, 1))
    assert all(channel_of_link(default, v) == 3 for v in rg.links)
    with pytest.raises(UnknownRadio):
        channel_of_link(ca, RadioLink.of(RadioId(0, 5), RadioId(1, 0)))


def test_assignment_check() -> None:
    rg = expand(build_grid(1, 2, 200, 2, 250))
    ca = ChannelAssignment.all_default(rg, (1, 2))
    assert ca.check(rg) is ca
    with pytest.raises(UnknownRadio):
        ChannelAssignment({RadioId(0, 0): 1}).check(rg)
    with pytest.raises(ValueError):
        ChannelAssignment({r: 4 for r in rg.radios}, "x", None, (1, 2)).check(
            rg
        )


def test_square_without_geometric_conflicts() -> None:
    rg = expand(square_topology())
    ca = ChannelAssignment.all_default(rg)
    model = ProtocolModel(ProtocolModelParams(delta=0.0))
    classical = build_cmmcg(rg, ca, model)
    enhanced = build_emmcg(rg, ca, model)
    assert edge_pairs(classical) == SQUARE_CLASSICAL
    assert edge_pairs(enhanced) == SQUARE_CLASSICAL | SQUARE_CO_LOCATED
    assert enhanced.tid == classical.tid + 4


def test_square_default_margin() -> None:
    rg = expand(square_topology())
    ca = ChannelAssignment.all_default(rg)
    model = ProtocolModel()
    classical = build_cmmcg(rg, ca, model)
    enhanced = build_emmcg(rg, ca, model)
    assert edge_pairs(classical) >= SQUARE_CLASSICAL
    assert edge_pairs(enhanced) - edge_pairs(classical) == SQUARE_CO_LOCATED


def test_scenario_single_radio_chain() -> None:
    rg, ca = scenario("srcc")
    for build in (build_cmmcg, build_emmcg):
        cg = build(rg, ca, ProtocolModel())
        assert len(cg) == 2
        assert total_interference_degree(cg) == 1
        assert all(interference_degree(cg, v) == 1 for v in cg.vertices)


def test_scenario_common_channel() -> None:
    rg, ca = scenario("mrcc")
    classical = build_cmmcg(rg, ca, ProtocolModel())
    enhanced = build_emmcg(rg, ca, ProtocolModel())
    assert len(enhanced) == 4
    assert total_interference_degree(enhanced) == 6
    for v in enhanced.vertices:
        assert interference_degree(enhanced, v) == 3
    assert total_interference_degree(classical) == 4


def test_scenario_distinct_channels() -> None:
    rg, ca = scenario("mrdc")
    for build in (build_cmmcg, build_emmcg):
        cg = build(rg, ca, ProtocolModel())
        assert len(cg) == 2
        assert total_interference_degree(cg) == 0
        assert set(cg.channels) == {1, 2}


def test_scenario_pair() -> None:
    rg, ca = scenario("pair")
    for build in (build_cmmcg, build_emmcg):
        cg = build(rg, ca, ProtocolModel())
        assert cg.tid == 1


def test_unknown_vertex() -> None:
    rg, ca = scenario("mrdc")
    cg = build_emmcg(rg, ca, ProtocolModel())
    inoperative = RadioLink.of(RadioId(0, 0), RadioId(1, 1))
    assert inoperative not in cg
    with pytest.raises(UnknownVertex):
        interference_degree(cg, inoperative)


def test_empty_graph() -> None:
    rg = expand(build_grid(1, 1, 200, 2, 250))
    cg = build_emmcg(rg, ChannelAssignment.all_default(rg), ProtocolModel())
    assert len(cg) == 0
    assert total_interference_degree(cg) == 0
    assert cg.degrees().shape == (0,)


def oracle(
    rg: RadioGraph,
    ca: ChannelAssignment,
    params: ProtocolModelParams,
    variant: Variant,
) -> Set[Pair]:
    """Test every pair of operational links against the written rules"""
    g = rg.topology

    def distance(i: int, j: int) -> float:
        a, b = g.node(i), g.node(j)
        return math.hypot(a.x - b.x, a.y - b.y)

    links = [v for v in rg.links if channel_of_link(ca, v) is not None]
    result = set()
    for u, v in combinations(links, 2):
        if channel_of_link(ca, u) != channel_of_link(ca, v):
            continue
        if {u.a, u.b} & {v.a, v.b}:
            # one radio serves both links
            conflict = True
        elif set(u.nodes) & set(v.nodes):
            # different radios of a shared node
            conflict = variant is Variant.ENHANCED
        else:
            radius = (1.0 + params.delta) * max(
                distance(*u.nodes), distance(*v.nodes)
            )
            conflict = any(
                distance(i, j) < radius for i in u.nodes for j in v.nodes
            )
        if conflict:
            result.add(frozenset((u, v)))
    return result


def random_assignment(
    rg: RadioGraph, rng: np.random.Generator, channels: int
) -> ChannelAssignment:
    channel_set = tuple(range(1, channels + 1))
    return ChannelAssignment(
        {r: int(rng.choice(channel_set)) for r in rg.radios},
        "random",
        None,
        channel_set,
    )


@pytest.mark.parametrize("chunk", range(10))
def test_superset_and_oracle(chunk: int) -> None:
    model = ProtocolModel()
    for seed in range(100 * chunk, 100 * (chunk + 1)):
        rng = np.random.default_rng(seed)
        g = random_topology(rng, max_nodes=12, max_radios=4)
        rg = expand(g)
        ca = random_assignment(rg, rng, int(rng.integers(1, 4)))
        classical = build_cmmcg(rg, ca, model)
        enhanced = build_emmcg(rg, ca, model)
        assert classical.vertices == enhanced.vertices
        assert edge_pairs(classical) <= edge_pairs(enhanced), seed
        assert enhanced.tid >= classical.tid

        for cg in (classical, enhanced):
            channels = np.array(cg.channels)
            if cg.tid:
                assert (
                    channels[cg.edges[:, 0]] == channels[cg.edges[:, 1]]
                ).all()

        if len(g.nodes) <= 8:
            for cg in (classical, enhanced):
                assert edge_pairs(cg) == oracle(
                    rg, ca, model.params, cg.variant
                ), seed


@pytest.mark.parametrize("seed", range(25))
def test_potential_graph_restriction(seed: int) -> None:
    rng = np.random.default_rng(1000 + seed)
    rg = expand(random_topology(rng, max_nodes=10, max_radios=3))
    ca = random_assignment(rg, rng, 3)
    model = ProtocolModel()
    for variant in Variant:
        potential = potential_conflicts(rg, model, variant)
        expected = {
            pair
            for pair in edge_pairs(potential)
            if len({channel_of_link(ca, v) for v in pair} - {None}) == 1
            and all(channel_of_link(ca, v) is not None for v in pair)
        }
        assert edge_pairs(build_mmcg(rg, ca, model, variant)) == expected


@pytest.mark.parametrize("seed", range(25))
def test_single_radio_variants_agree(seed: int) -> None:
    rng = np.random.default_rng(2000 + seed)
    rg = expand(random_topology(rng, max_nodes=12, max_radios=1))
    ca = random_assignment(rg, rng, 2)
    model = ProtocolModel()
    assert edge_pairs(build_cmmcg(rg, ca, model)) == edge_pairs(
        build_emmcg(rg, ca, model)
    )


def test_deterministic_output() -> None:
    model = ProtocolModel()

    def build() -> str:
        rg = expand(build_grid(4, 4, 200, 2, 250))
        ca = random_assignment(rg, np.random.default_rng(5), 3)
        return json.dumps(build_emmcg(rg, ca, model).save())

    assert build() == build()


def test_conflict_graph_file() -> None:
    rg, ca = scenario("mrcc")
    cg = build_emmcg(rg, ca, ProtocolModel())
    data = cg.save()
    assert data["variant"] == "enhanced"
    assert data["tid"] == 6
    loaded = ConflictGraph.load(json.loads(json.dumps(data)))
    assert loaded.vertices == cg.vertices
    assert edge_pairs(loaded) == edge_pairs(cg)
    data["tid"] = 5
    with pytest.raises(ValueError):
        ConflictGraph.load(data)


def test_restrict() -> None:
    rg, ca = scenario("mrcc")
    cg = build_emmcg(rg, ca, ProtocolModel())
    sub = cg.restrict(cg.vertices[:2])
    assert len(sub) == 2
    assert sub.tid == 1
    assert sub.variant is Variant.ENHANCED


def test_degree_rows() -> None:
    rg, ca = scenario("srcc")
    rows = build_cmmcg(rg, ca, ProtocolModel()).degree_rows()
    assert rows == [("0.0-1.0", 1, 1), ("1.0-2.0", 1, 1)]


def test_grid_gap() -> None:
    rg = expand(build_grid(5, 5, 200, 2, 250))
    model = ProtocolModel()
    classical = potential_conflicts(rg, model, Variant.CLASSICAL)
    enhanced = potential_conflicts(rg, model, Variant.ENHANCED)
    assert enhanced.tid > classical.tid > 0


def check_sweep(max_n: int) -> None:
    rows = tid_sweep(max_n)
    assert [r.n for r in rows] == list(range(1, max_n + 1))
    for r in rows:
        assert r.tid_enhanced > r.tid_classical
    for before, after in zip(rows[:-1], rows[1:]):
        assert after.tid_classical > before.tid_classical
        assert after.tid_enhanced > before.tid_enhanced
        assert after.gap > before.gap


def test_sweep() -> None:
    check_sweep(3)


@pytest.mark.experiment
def test_sweep_full() -> None:
    check_sweep(10)


def test_sweep_matches_single_build() -> None:
    row = tid_sweep(1)[0]
    rg = expand(build_grid(5, 5, 200, 2, 250))
    cg = potential_conflicts(rg, ProtocolModel(), Variant.ENHANCED)
    assert row.tid_enhanced == cg.tid


def test_build_time_scales() -> None:
    model = ProtocolModel()
    timings: Dict[int, float] = {}
    for side in (10, 20):
        rg = expand(build_grid(side, side, 200, 2, 250))
        best: Optional[float] = None
        for _ in range(2):
            start = time.perf_counter()
            potential_conflicts(rg, model, Variant.ENHANCED)
            elapsed = time.perf_counter() - start
            best = elapsed if best is None else min(best, elapsed)
        assert best is not None
        timings[side] = best
    # four times the links; quadratic growth would be sixteen
    assert timings[20] / max(timings[10], 1e-3) < 100


@pytest.mark.parametrize("variant", list(Variant))
def test_dedicated_channels_leave_no_conflicts(variant: Variant) -> None:
    g = build_grid(3, 3, 200, 4, 250)
    rg = expand(g)
    channels: Dict[RadioId, int] = {}
    for e, (i, j) in enumerate(g.edges, start=1):
        for n in (i, j):
            used = sum(1 for r in channels if r.node == n)
            channels[RadioId(n, used)] = e
    spare = len(g.edges)
    for r in rg.radios:
        if r not in channels:
            spare += 1
            channels[r] = spare
    ca = ChannelAssignment(
        channels, "dedicated", None, tuple(range(1, spare + 1))
    )
    cg = build_mmcg(rg, ca, ProtocolModel(), variant)
    assert len(cg) == len(g.edges)
    assert cg.tid == 0
    assert edge_pairs(cg) == set()
