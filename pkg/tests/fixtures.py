"""Hand-built instance documents shared by the unit and acceptance tests.

Windows are derived from each train's own fastest run so a fixture stays
meaningful if a train parameter is tweaked.
"""
from __future__ import annotations

import copy
import json
import math

from mbroute.config import SolveConfig
from mbroute.generator import generate_instance
from mbroute.instance import instance_to_dict, load_instance
from mbroute.validator import fastest_single_train_time


def _edge(eid, a, b, length, limit, stop=False, reverse=None):
    e = {"id": eid, "from": a, "to": b, "length_m": float(length), "speed_limit_mps": float(limit),
         "stop_allowed": stop}
    if reverse:
        e["reverse_of"] = reverse
    return e


def pair(a, b, length, limit, stop=False, tag="e"):
    """Both directions of one physical track."""
    f, r = f"{tag}_{a}_{b}", f"{tag}_{b}_{a}"
    return [_edge(f, a, b, length, limit, stop, r), _edge(r, b, a, length, limit, stop, f)]


def train(tid, length=100.0, vmax=30.0, acc=1.0, dec=1.0):
    return {"id": tid, "length_m": float(length), "max_speed_mps": float(vmax),
            "acceleration_mps2": float(acc), "deceleration_mps2": float(dec)}


def demand(tid, entry, exit_, start, *, width=0.0, slack=None, exit_lo=None, exit_hi=None, weight=1.0,
           entry_speed=0.0, stops=()):
    """Exit window filled in by :func:`finalize` when ``exit_lo`` is left open."""
    return {"train": tid, "weight": weight, "entry_vertex": entry, "entry_speed_mps": entry_speed,
            "entry_window_s": [float(start), float(start + width)], "exit_vertex": exit_,
            "exit_window_s": [exit_lo, exit_hi], "stops": list(stops), "_slack": slack}


def stop(station, arr=(0.0, 1e5), dep=(0.0, 1e5), dwell=0.0):
    return {"station": station, "arrival_window_s": list(map(float, arr)),
            "departure_window_s": list(map(float, dep)), "min_dwell_s": float(dwell)}


def finalize(vertices, edges, trains, demands, stations=()) -> dict:
    """Complete open exit windows as [ceil(start + fastest), start + width + fastest + slack]."""
    doc = {"network": {"vertices": list(vertices), "edges": edges}, "trains": trains,
           "stations": list(stations), "demands": []}
    for d in demands:
        d = dict(d)
        slack = d.pop("_slack")
        lo, hi = d["exit_window_s"]
        if lo is None or hi is None:
            probe = copy.deepcopy(doc)
            probe["demands"] = [{**d, "exit_window_s": [0.0, 1e7]}]
            probe["trains"] = [t for t in trains if t["id"] == d["train"]]
            fastest = fastest_single_train_time(load_instance(json.dumps(probe)), d["train"], config=SolveConfig())
            start, end = d["entry_window_s"]
            if lo is None:
                lo = float(math.ceil(start + fastest))
            if hi is None:
                hi = float(math.ceil(end + fastest + (300.0 if slack is None else slack)))
        d["exit_window_s"] = [lo, hi]
        doc["demands"].append(d)
    return doc


def load(doc):
    return load_instance(json.dumps(doc))


# -- networks -----------------------------------------------------------------

def single_line(n=3, length=500.0, limit=30.0):
    vs = [f"L{i}" for i in range(n + 1)]
    edges = []
    for a, b in zip(vs, vs[1:]):
        edges += pair(a, b, length, limit, tag="l")
    return vs, edges


def double_track():
    """Two parallel bidirectional tracks A and B with a crossover pair in the middle."""
    a = [f"A{i}" for i in range(4)]
    b = [f"B{i}" for i in range(4)]
    edges = []
    for i in range(3):
        edges += pair(a[i], a[i + 1], 400.0, 30.0, tag="a")
        edges += pair(b[i], b[i + 1], 400.0, 30.0, tag="b")
    edges += pair("A1", "B2", 450.0, 15.0, tag="x")
    edges += pair("B1", "A2", 450.0, 15.0, tag="x")
    return a + b, edges


def y_junction():
    vs = ["S0", "S1", "J", "P1", "P2", "Q1", "Q2"]
    edges = (pair("S0", "S1", 500.0, 30.0, tag="s") + pair("S1", "J", 400.0, 30.0, tag="s")
             + pair("J", "P1", 400.0, 20.0, tag="p") + pair("P1", "P2", 500.0, 30.0, tag="p")
             + pair("J", "Q1", 350.0, 25.0, tag="q") + pair("Q1", "Q2", 500.0, 30.0, tag="q"))
    return vs, edges


def platform_line():
    """Approach, two 100 m platform sections in a row, departure track. One direction only."""
    vs = ["W", "M0", "M1", "M2", "E"]
    edges = [_edge("in", "W", "M0", 600.0, 25.0),
             _edge("pa", "M0", "M1", 100.0, 15.0, True),
             _edge("pb", "M1", "M2", 100.0, 15.0, True),
             _edge("out", "M2", "E", 600.0, 25.0)]
    return vs, edges, [{"name": "P", "edges": ["pa", "pb"]}]


# -- feasible fixtures ----------------------------------------------------------

def line_two_trains():
    vs, edges = single_line()
    trains = [train("T1", 120, 25, 0.8, 0.9), train("T2", 80, 30, 1.0, 1.0)]
    demands = [demand("T1", "L0", "L3", 0, slack=200), demand("T2", "L0", "L3", 15, width=40, slack=200)]
    return finalize(vs, edges, trains, demands)


def line_three_trains():
    vs, edges = single_line(4, 450.0, 30.0)
    trains = [train("T1", 100, 20, 0.6, 0.8), train("T2", 150, 30, 1.0, 1.0), train("T3", 60, 30, 1.2, 1.2)]
    demands = [demand("T1", "L0", "L4", 0, slack=250, weight=2),
               demand("T2", "L0", "L4", 10, width=60, slack=250),
               demand("T3", "L4", "L0", 0, width=120, slack=400)]
    return finalize(vs, edges, trains, demands)


def double_track_crossing():
    vs, edges = double_track()
    trains = [train("T1", 100, 30, 1.0, 1.0), train("T2", 100, 30, 1.0, 1.0), train("T3", 140, 25, 0.8, 0.8)]
    demands = [demand("T1", "A0", "B3", 0, slack=200), demand("T2", "B0", "B3", 10, slack=200),
               demand("T3", "B3", "A0", 20, slack=300, weight=2)]
    return finalize(vs, edges, trains, demands)


def y_junction_merge():
    vs, edges = y_junction()
    trains = [train("T1", 100, 30, 1.0, 1.0), train("T2", 120, 25, 0.9, 0.9), train("T3", 80, 30, 1.1, 1.1)]
    demands = [demand("T1", "P2", "S0", 0, slack=200), demand("T2", "Q2", "S0", 5, width=40, slack=200),
               demand("T3", "S0", "Q2", 90, slack=400)]
    return finalize(vs, edges, trains, demands)


def platform_pair(long_first=False, overlap=True):
    """Two trains that must dwell at platform P.

    With ``overlap`` the windows force both dwells to cover [95, 135]:
    arrivals by 95, departures from 135. A 150 m first train needs both
    sections, so the pair becomes infeasible exactly when ``long_first``.
    """
    vs, edges, stations = platform_line()
    first_len = 150.0 if long_first else 80.0
    trains = [train("T1", first_len, 25, 1.0, 1.0), train("T2", 80.0, 25, 1.0, 1.0)]
    if overlap:
        s1 = stop("P", arr=(0, 95), dep=(135, 400), dwell=20)
        s2 = stop("P", arr=(0, 95), dep=(135, 400), dwell=20)
    else:
        s1 = stop("P", dwell=20)
        s2 = stop("P", dwell=20)
    demands = [demand("T1", "W", "E", 0, slack=400, stops=[s1]),
               demand("T2", "W", "E", 15, width=30, slack=400, stops=[s2])]
    return finalize(vs, edges, trains, demands, stations)


def disjoint_lines(n_trains=3):
    """Parallel one-way lines with no shared track and no paired segments."""
    vs, edges, trains, demands = [], [], [], []
    for k in range(n_trains):
        a, b, c = f"U{k}a", f"U{k}b", f"U{k}c"
        vs += [a, b, c]
        edges += [_edge(f"u{k}_1", a, b, 500.0, 30.0), _edge(f"u{k}_2", b, c, 500.0, 30.0)]
        trains.append(train(f"T{k}", 100 + 20 * k, 25 + k, 1.0, 1.0))
        demands.append(demand(f"T{k}", a, c, 5 * k, slack=100))
    return finalize(vs, edges, trains, demands)


GENERATED = [("line", 2, 3, 200.0), ("line", 3, 3, 200.0), ("junction", 2, 3, 300.0),
             ("junction", 3, 3, 300.0), ("corridor", 2, 4, 300.0)]


def generated(template, seed, trains, horizon):
    return instance_to_dict(generate_instance(seed, trains, template, horizon))


def feasible_suite():
    out = {
        "line_two_trains": line_two_trains(),
        "line_three_trains": line_three_trains(),
        "double_track_crossing": double_track_crossing(),
        "y_junction_merge": y_junction_merge(),
        "platform_short_pair": platform_pair(),
    }
    for template, seed, n, horizon in GENERATED:
        out[f"gen_{template}_s{seed}_n{n}"] = generated(template, seed, n, horizon)
    return out


# -- infeasible fixtures --------------------------------------------------------

def exit_too_tight():
    vs, edges = single_line()
    doc = finalize(vs, edges, [train("T1")], [demand("T1", "L0", "L3", 0)])
    lo, _ = doc["demands"][0]["exit_window_s"]
    doc["demands"][0]["exit_window_s"] = [0.0, lo - 5.0]
    return doc


def opposing_mandatory():
    """Opposite trains on one single track, both forced onto it at the same time."""
    vs, edges = single_line()
    trains = [train("T1"), train("T2")]
    demands = [demand("T1", "L0", "L3", 0, slack=20), demand("T2", "L3", "L0", 10, slack=20)]
    return finalize(vs, edges, trains, demands)


def unreachable_exit():
    vs = ["L0", "L1", "L2"]
    edges = [_edge("f1", "L0", "L1", 500.0, 30.0), _edge("f2", "L1", "L2", 500.0, 30.0)]
    doc = finalize(vs, edges, [train("T1")], [demand("T1", "L0", "L2", 0)])
    doc["trains"].append(train("T2"))
    doc["demands"].append({"train": "T2", "weight": 1.0, "entry_vertex": "L2", "entry_speed_mps": 0.0,
                           "entry_window_s": [0.0, 0.0], "exit_vertex": "L0", "exit_window_s": [0.0, 500.0],
                           "stops": []})
    return doc


def infeasible_suite():
    return {
        "exit_too_tight": exit_too_tight(),
        "opposing_mandatory": opposing_mandatory(),
        "unreachable_exit": unreachable_exit(),
        "platform_long_blocks": platform_pair(long_first=True),
    }


# -- single-train fixtures ------------------------------------------------------

def single_train_suite():
    out = {}
    vs, edges = single_line(3, 700.0, 30.0)
    out["cruise_moving_entry"] = finalize(vs, edges, [train("T1", 100, 30, 0.7, 0.9)],
                                          [demand("T1", "L0", "L3", 12, entry_speed=20.0, exit_lo=50.0,
                                                  exit_hi=400.0)])
    out["late_exit_window"] = finalize(vs, edges, [train("T1")],
                                       [demand("T1", "L0", "L3", 0, exit_lo=500.0, exit_hi=900.0)])
    edges2 = pair("L0", "L1", 600, 35, tag="l") + pair("L1", "L2", 300, 12, tag="l") + pair("L2", "L3", 800, 35, tag="l")
    out["slow_zone"] = finalize(["L0", "L1", "L2", "L3"], edges2, [train("T1", 80, 35, 1.0, 0.6)],
                                [demand("T1", "L0", "L3", 3, width=20, exit_lo=30.0, exit_hi=600.0)])
    vs3, edges3, stations = platform_line()
    out["platform_stop"] = finalize(vs3, edges3, [train("T1", 150, 25, 1.0, 1.0)],
                                    [demand("T1", "W", "E", 0, exit_lo=20.0, exit_hi=800.0,
                                            stops=[stop("P", dwell=30)])], stations)
    # diamond: long fast branch against short slow branch
    vs4 = ["O", "N", "S", "D"]
    edges4 = (pair("O", "N", 900, 40, tag="n") + pair("N", "D", 900, 40, tag="n")
              + pair("O", "S", 600, 12, tag="s") + pair("S", "D", 600, 12, tag="s"))
    out["route_choice"] = finalize(vs4, edges4, [train("T1", 120, 40, 1.0, 1.0)],
                                   [demand("T1", "O", "D", 7, exit_lo=10.0, exit_hi=900.0)])
    vs5, edges5 = y_junction()
    out["junction_branch"] = finalize(vs5, edges5, [train("T1", 200, 28, 0.5, 0.7)],
                                      [demand("T1", "Q2", "S0", 100, exit_lo=150.0, exit_hi=900.0, weight=3.0)])
    return out
