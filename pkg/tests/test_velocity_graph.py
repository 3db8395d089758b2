
import pytest

from mbroute.instance import Edge, Network, Station, Train
from mbroute.velocity_graph import build_extended_graph, speed_grid, stop_candidates

T = Train("T", 100.0, 10.0, 1.0, 1.0)


def one_edge(length, limit=10.0):
    return Network(("A", "B"), (Edge("e", "A", "B", length, limit),))


def test_long_edge_all_pairs_feasible():
    g = build_extended_graph(T, one_edge(1000.0), 5.0)
    assert g.speed_sets["A"].speeds == (0.0, 5.0, 10.0)
    assert len(g.edges) == 9


def test_short_edge_keeps_only_reachable_pairs():
    # 0->5 needs 12.5 m and 5->10 needs 37.5 m, so on 10 m only the constant-speed pairs remain
    g = build_extended_graph(T, one_edge(10.0), 5.0)
    assert sorted((e.p1, e.p2) for e in g.edges) == [(0.0, 0.0), (5.0, 5.0), (10.0, 10.0)]


def test_train_cap_dominates():
    slow = Train("S", 100.0, 5.0, 1.0, 1.0)
    g = build_extended_graph(slow, one_edge(1000.0), 5.0)
    assert g.speed_sets["A"].speeds == (0.0, 5.0)


def test_speed_grid_appends_cap():
    assert speed_grid(12.0, 5.0) == (0.0, 5.0, 10.0, 12.0)
    assert speed_grid(10.0, 5.0) == (0.0, 5.0, 10.0)


def test_stop_edges_have_unbounded_max_time():
    net = Network(("A", "B"), (Edge("e", "A", "B", 500.0, 10.0, stop_allowed=True),))
    g = build_extended_graph(T, net, 5.0)
    assert all(e.tau_max == float("inf") for e in g.edges)
    assert all(e.tau_min > 0 for e in g.edges)


def platform(length_train):
    net = Network(("M0", "M1", "M2"), (Edge("pa", "M0", "M1", 100.0, 10.0, True),
                                       Edge("pb", "M1", "M2", 100.0, 10.0, True)))
    tr = Train("T", length_train, 10.0, 1.0, 1.0)
    return tr, net, build_extended_graph(tr, net, 5.0)


def test_stop_candidates():
    tr, net, g = platform(100.0)
    single = Network(("A", "B"), (Edge("s", "A", "B", 200.0, 10.0, True),))
    gs = build_extended_graph(tr, single, 5.0)
    assert stop_candidates(gs, Station("S", ("s",)), tr, single) == {"B"}
    tr, net, g = platform(150.0)
    assert stop_candidates(g, Station("P", ("pa", "pb")), tr, net) == {"M2"}
    tr, net, g = platform(80.0)
    assert stop_candidates(g, Station("P", ("pa", "pb")), tr, net) == {"M1", "M2"}


def test_rejects_bad_step():
    with pytest.raises(ValueError):
        build_extended_graph(T, one_edge(100.0), 0.0)
