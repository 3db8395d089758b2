import pytest

import fixtures as F
from mbroute.config import SolveConfig, Strategy
from mbroute.headway import cover, enumerate_all_headway_constraints, same_direction_headway_constraints
from mbroute.lazy import solve_iteratively
from mbroute.model import build_base_model

CFG = SolveConfig(gap_abs=0)


def ctx_for(doc, cfg=CFG):
    h, _ = build_base_model(F.load(doc), None, cfg)
    return h.ctx


def test_cover_arithmetic():
    assert cover([30.0] * 5, 50.0) == (2, pytest.approx(20.0))
    assert cover([30.0] * 5, 30.0) == (1, pytest.approx(30.0))
    assert cover([30.0, 30.0], 100.0)[0] == 3


def test_follower_at_rest_needs_only_rear_clearance():
    ctx = ctx_for(F.line_two_trains())
    rows = same_direction_headway_constraints(ctx, "T2", "T1", "l_L0_L1", speeds=[0.0])
    rear = [r for r in rows if r.tag.endswith(":rear")]
    assert len(rear) == 1
    keys = {k for k, _ in rear[0].terms}
    assert ("a", "T2", "L0") in keys and ("r", "T1", "L0") in keys


def test_disjoint_routes_give_no_rows():
    ctx = ctx_for(F.disjoint_lines(2))
    assert same_direction_headway_constraints(ctx, "T0", "T1", "u0_1") == []
    assert enumerate_all_headway_constraints(ctx) == []


def test_hand_count_on_one_way_line():
    # three 1000 m edges, speeds {0, 5, 10}; entry speed fixed to 0.
    # per ordered pair: first edge 1 rear row + head row; other edges
    # 1 rear row + 2 speeds x (lb1, lb2) + head row = 6 -> 14; two orders -> 28
    vs = ["A", "B", "C", "D"]
    edges = [F._edge(f"e{i}", a, b, 1000.0, 10.0) for i, (a, b) in enumerate(zip(vs, vs[1:]))]
    doc = F.finalize(vs, edges, [F.train("T1", 100, 10), F.train("T2", 100, 10)],
                     [F.demand("T1", "A", "D", 0), F.demand("T2", "A", "D", 0)])
    ctx = ctx_for(doc, SolveConfig(delta_v=5.0))
    rows = enumerate_all_headway_constraints(ctx)
    fam = {}
    for r in rows:
        fam[r.family] = fam.get(r.family, 0) + 1
    assert fam["headway"] + fam["headway_head"] == 28
    assert fam["headway_head"] == 6


def test_opposite_trains_on_single_track_are_serialized():
    vs, edges = F.single_line()
    doc = F.finalize(vs, edges, [F.train("T1"), F.train("T2")],
                     [F.demand("T1", "L0", "L3", 0, slack=300), F.demand("T2", "L3", "L0", 0, width=200, slack=300)])
    res = solve_iteratively(F.load(doc), SolveConfig(strategy=Strategy.ADJACENT_VIOLATED, gap_abs=0))
    assert res.optimal and res.report.feasible
    s1, s2 = res.schedule.trains["T1"], res.schedule.trains["T2"]
    first, second = (s1, s2) if s1.a_front["L0"] <= s2.a_front["L3"] else (s2, s1)
    assert second.a_front[second.vertices[0]] >= first.d_rear[first.vertices[-1]] - 1e-6
