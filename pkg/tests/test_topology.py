# -*- coding: utf-8 -*-

import tempfile
from itertools import combinations
from pathlib import Path

import numpy as np
import pytest

from meshconflict import filesystem
from meshconflict.topology import (
    DisconnectedTopology,
    DuplicateEdge,
    InvalidEdge,
    Node,
    ProtocolModel,
    ProtocolModelParams,
    RadioId,
    RadioLink,
    RangeViolation,
    UnknownRadio,
    WmnGraph,
    build_grid,
    case_topology,
    links_conflict_protocol,
    random_topology,
    square_topology,
    validate,
)


def link(a: str, b: str) -> RadioLink:
    return RadioLink.of(RadioId.parse(a), RadioId.parse(b))


def test_single_node_grid() -> None:
    g = build_grid(1, 1, 200, 2, 250)
    assert len(g.nodes) == 1
    assert g.edges == ()
    validate(g)


def test_grid_counts() -> None:
    g = build_grid(5, 5, 200, 2, 250)
    assert len(g.nodes) == 25
    assert len(g.edges) == 40
    assert all(n.radios == 2 for n in g.nodes)
    assert g.node(7) == Node(7, 400.0, 200.0, 2)


def test_chain_grid() -> None:
    g = build_grid(1, 3, 200, 2, 250)
    assert g.edges == ((0, 1), (1, 2))


def test_grid_degrees() -> None:
    rows, cols = 4, 6
    g = build_grid(rows, cols, 200, 1, 250)
    for r in range(rows):
        for c in range(cols):
            border = (r in (0, rows - 1)) + (c in (0, cols - 1))
            assert len(g.neighbors(r * cols + c)) == 4 - border


def test_grid_rejects_sparse_spacing() -> None:
    with pytest.raises(ValueError):
        build_grid(2, 2, 300, 2, 250)
    with pytest.raises(ValueError):
        build_grid(0, 2, 200, 2, 250)


@pytest.mark.parametrize("seed", range(20))
def test_random_grids_validate(seed: int) -> None:
    rng = np.random.default_rng(seed)
    tx_range = float(rng.uniform(50, 500))
    g = build_grid(
        int(rng.integers(1, 8)),
        int(rng.integers(1, 8)),
        float(rng.uniform(1, tx_range)),
        int(rng.integers(1, 4)),
        tx_range,
    )
    validate(g)


def test_validate_range_violation() -> None:
    nodes = [Node(0, 0, 0), Node(1, 300, 0)]
    with pytest.raises(RangeViolation):
        validate(WmnGraph(nodes, 250, edges=[(0, 1)]))


def test_validate_disconnected() -> None:
    nodes = [Node(0, 0, 0), Node(1, 300, 0)]
    with pytest.raises(DisconnectedTopology):
        validate(WmnGraph(nodes, 250))
    with pytest.raises(DisconnectedTopology):
        validate(WmnGraph(nodes, 250, edges=[]))


def test_validate_bad_edges() -> None:
    nodes = [Node(0, 0, 0), Node(1, 200, 0)]
    with pytest.raises(DuplicateEdge):
        validate(WmnGraph(nodes, 250, edges=[(0, 1), (1, 0)]))
    with pytest.raises(InvalidEdge):
        validate(WmnGraph(nodes, 250, edges=[(0, 1), (1, 1)]))
    with pytest.raises(InvalidEdge):
        validate(WmnGraph(nodes, 250, edges=[(0, 1), (1, 2)]))


def test_radio_link_canonical() -> None:
    assert link("1.0", "0.1") == RadioLink(RadioId(0, 1), RadioId(1, 0))
    assert str(link("1.0", "0.1")) == "0.1-1.0"
    with pytest.raises(ValueError):
        link("0.0", "0.1")


def test_shared_radio_conflicts() -> None:
    g = build_grid(1, 3, 200, 2, 250)
    p = ProtocolModelParams(delta=1.0)
    assert links_conflict_protocol(
        g, link("0.1", "1.0"), link("1.0", "2.0"), p
    )


def test_shared_node_without_shared_radio() -> None:
    g = build_grid(1, 3, 200, 2, 250)
    p = ProtocolModelParams(delta=1.0)
    assert not links_conflict_protocol(
        g, link("0.1", "1.0"), link("1.1", "2.0"), p
    )


def test_geometric_conflict() -> None:
    g = build_grid(1, 4, 200, 1, 250)
    p = ProtocolModelParams(delta=1.0)
    x, l = link("0.0", "1.0"), link("2.0", "3.0")
    assert links_conflict_protocol(g, x, l, p)


def test_boundary_is_not_a_conflict() -> None:
    g = build_grid(1, 4, 200, 1, 250)
    x, l = link("0.0", "1.0"), link("2.0", "3.0")
    assert not links_conflict_protocol(g, x, l, ProtocolModelParams(0.0))
    assert links_conflict_protocol(g, x, l, ProtocolModelParams(0.01))


def test_predicate_errors() -> None:
    g = build_grid(1, 3, 200, 1, 250)
    p = ProtocolModelParams()
    with pytest.raises(ValueError):
        links_conflict_protocol(g, link("0.0", "1.0"), link("0.0", "1.0"), p)
    with pytest.raises(UnknownRadio):
        links_conflict_protocol(g, link("0.0", "1.0"), link("1.3", "2.0"), p)
    with pytest.raises(ValueError):
        ProtocolModelParams(delta=-1.0).check()


@pytest.mark.parametrize("seed", range(10))
def test_predicate_symmetric_and_monotone(seed: int) -> None:
    rng = np.random.default_rng(seed)
    g = random_topology(rng, max_nodes=8, max_radios=2)
    links = [
        RadioLink.of(x, y)
        for i, j in g.edges
        for x in g.radios(i)
        for y in g.radios(j)
    ]
    small, large = ProtocolModelParams(0.5), ProtocolModelParams(1.5)
    for x, l in combinations(links, 2):
        verdict = links_conflict_protocol(g, x, l, small)
        assert verdict == links_conflict_protocol(g, l, x, small)
        if verdict and not set(x.nodes) & set(l.nodes):
            assert links_conflict_protocol(g, x, l, large)


def test_model_reach() -> None:
    g = build_grid(2, 2, 200, 1, 250)
    assert ProtocolModel(ProtocolModelParams(1.0)).reach(g) == 600.0


@pytest.mark.parametrize("seed", range(10))
def test_random_topology_is_valid(seed: int) -> None:
    g = random_topology(np.random.default_rng(seed))
    validate(g)
    assert 2 <= len(g.nodes) <= 12
    assert all(1 <= n.radios <= 4 for n in g.nodes)


def test_square_topology() -> None:
    g = square_topology()
    validate(g)
    assert g.edges == ((0, 1), (0, 2), (1, 3), (2, 3))
    assert [n.radios for n in g.nodes] == [2, 1, 1, 2]


def test_case_topology() -> None:
    g, channels = case_topology("mrdc")
    validate(g)
    assert [n.radios for n in g.nodes] == [1, 2, 1]
    assert channels[RadioId(1, 1)] == 2
    with pytest.raises(ValueError):
        case_topology("nope")


def test_topology_file() -> None:
    g = build_grid(2, 3, 200, 2, 250)
    with tempfile.TemporaryDirectory() as d:
        path = filesystem.write_json(Path(d) / "topology.json", g.save())
        loaded = WmnGraph.load(filesystem.read_json(path))
    assert loaded.nodes == g.nodes
    assert loaded.edges == g.edges
    assert loaded.tx_range == g.tx_range


def test_topology_without_edges() -> None:
    data = {
        "tx_range_m": 250.0,
        "nodes": [
            {"id": 0, "x_m": 0.0, "y_m": 0.0, "radios": 2},
            {"id": 1, "x_m": 200.0, "y_m": 0.0, "radios": 1},
            {"id": 2, "x_m": 400.0, "y_m": 0.0},
        ],
    }
    g = WmnGraph.load(data)
    assert g.edges == ((0, 1), (1, 2))
    assert g.node(2).radios == 1
