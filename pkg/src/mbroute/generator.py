"""Seeded random instances on three network templates.

Templates stand in for proprietary benchmark networks:

* ``line``: a single bidirectional track, trains running both ways.
* ``corridor``: two bidirectional tracks with crossovers between them.
* ``junction``: a Y-shaped single-track network (stem plus two branches).

Sampled ranges (all values rounded so output is byte-stable):
train length 50-200 m, max speed 15-35 m/s, acceleration and deceleration
0.5-1.2 m/s^2, edge length 300-900 m, speed limits 20-40 m/s.
"""
from __future__ import annotations

import math

import numpy as np

from mbroute.config import SolveConfig
from mbroute.errors import GenerationFailure, NoPath
from mbroute.instance import Demand, Edge, Instance, Network, Train, instance_to_dict
from mbroute.validator import fastest_single_train_time

TEMPLATES = ("line", "corridor", "junction")
MAX_TRIES = 50


def _pair(edges, a, b, length, limit, tag):
    fwd, bwd = f"{tag}_{a}_{b}", f"{tag}_{b}_{a}"
    edges.append(Edge(fwd, a, b, length, limit, False, bwd))
    edges.append(Edge(bwd, b, a, length, limit, False, fwd))


def _length(rng):
    return float(rng.integers(6, 19) * 50)


def _limit(rng):
    return float(rng.choice([20.0, 25.0, 30.0, 40.0]))


def line_network(rng, sections: int = 5) -> tuple[Network, list[tuple[str, str]]]:
    vs = [f"L{i}" for i in range(sections + 1)]
    edges: list[Edge] = []
    for a, b in zip(vs, vs[1:]):
        _pair(edges, a, b, _length(rng), _limit(rng), "l")
    return Network(tuple(vs), tuple(edges)), [(vs[0], vs[-1]), (vs[-1], vs[0])]


def corridor_network(rng, sections: int = 4) -> tuple[Network, list[tuple[str, str]]]:
    a = [f"A{i}" for i in range(sections + 1)]
    b = [f"B{i}" for i in range(sections + 1)]
    edges: list[Edge] = []
    for i in range(sections):
        length, limit = _length(rng), _limit(rng)
        _pair(edges, a[i], a[i + 1], length, limit, "a")
        _pair(edges, b[i], b[i + 1], length, limit, "b")
    # crossovers in both diagonals at every other section
    for i in range(1, sections - 1, 2):
        length = float(rng.integers(4, 9) * 50)
        _pair(edges, a[i], b[i + 1], length, 20.0, "x")
        _pair(edges, b[i], a[i + 1], length, 20.0, "x")
    ends = [(a[0], a[-1]), (b[0], b[-1]), (a[-1], a[0]), (b[-1], b[0]),
            (a[0], b[-1]), (b[-1], a[0])]
    return Network(tuple(a + b), tuple(edges)), ends


def junction_network(rng, stem: int = 3, branch: int = 2) -> tuple[Network, list[tuple[str, str]]]:
    s = [f"S{i}" for i in range(stem)] + ["J"]
    left = ["J"] + [f"P{i}" for i in range(1, branch + 1)]
    right = ["J"] + [f"Q{i}" for i in range(1, branch + 1)]
    edges: list[Edge] = []
    for chain, tag in ((s, "s"), (left, "p"), (right, "q")):
        for u, v in zip(chain, chain[1:]):
            _pair(edges, u, v, _length(rng), _limit(rng), tag)
    vertices = tuple(s + left[1:] + right[1:])
    ends = [(s[0], left[-1]), (s[0], right[-1]), (left[-1], s[0]), (right[-1], s[0])]
    return Network(vertices, tuple(edges)), ends


_BUILDERS = {"line": line_network, "corridor": corridor_network, "junction": junction_network}


def _train(rng, i: int) -> Train:
    return Train(
        f"T{i:02d}",
        float(rng.integers(5, 21) * 10),
        float(rng.integers(30, 71) / 2),
        float(rng.integers(50, 121) / 100),
        float(rng.integers(50, 121) / 100),
    )


def generate_instance(seed: int, trains: int, template: str = "corridor", horizon: float = 1800.0,
                      config: SolveConfig | None = None) -> Instance:
    """Deterministic instance; every train can meet its windows when alone."""
    if template not in _BUILDERS:
        raise ValueError(f"unknown template {template!r}; choose from {TEMPLATES}")
    if trains < 0:
        raise ValueError("trains must be >= 0")
    config = config or SolveConfig()
    rng = np.random.default_rng(seed)
    network, ends = _BUILDERS[template](rng)
    chosen_trains, demands = [], []
    for i in range(trains):
        for _ in range(MAX_TRIES):
            train = _train(rng, i)
            entry, exit_ = ends[int(rng.integers(len(ends)))]
            start = float(round(horizon * i / max(trains, 1) + rng.uniform(0, 30)))
            width = float(rng.integers(0, 7) * 10)
            slack = float(rng.integers(12, 61) * 10)
            probe = Demand(train.id, 1.0, entry, (start, start + width), exit_, (0.0, math.inf))
            inst = Instance(network, (train,), (), (probe,))
            try:
                fastest = fastest_single_train_time(inst, train.id, config=config)
            except NoPath:
                continue
            t_lo = float(math.ceil(start + fastest))
            demand = Demand(train.id, float(rng.integers(1, 4)), entry, (start, start + width), exit_,
                            (t_lo, float(math.ceil(start + width + fastest + slack))))
            chosen_trains.append(train)
            demands.append(demand)
            break
        else:
            raise GenerationFailure(f"no feasible demand for train {i} after {MAX_TRIES} tries")
    return Instance(network, tuple(chosen_trains), (), tuple(demands))


def generate_document(seed: int, trains: int, template: str = "corridor", horizon: float = 1800.0) -> dict:
    doc = instance_to_dict(generate_instance(seed, trains, template, horizon))
    doc["meta"] = {"seed": seed, "template": template, "trains": trains, "horizon_s": horizon}
    return doc
