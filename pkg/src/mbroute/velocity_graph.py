"""Per-train graphs whose nodes are (vertex, discretised speed) pairs."""
from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field
from functools import cached_property
from typing import Mapping

import numpy as np

from mbroute import kinematics
from mbroute._kernels import FASTEST, SLOWEST
from mbroute.errors import EmptyGraph, InstanceError
from mbroute.instance import Demand, Network, Station, Train, station_chains

KMH = 1 / 3.6
DEFAULT_DELTA_V = 10 * KMH
_SPEED_TOL = 1e-9


@dataclass(frozen=True)
class SpeedSet:
    vertex: str
    speeds: tuple[float, ...]

    @property
    def cap(self) -> float:
        return self.speeds[-1]


@dataclass(frozen=True)
class ExtendedEdge:
    base_edge: str
    source: str
    target: str
    p1: float
    p2: float
    tau_min: float
    tau_max: float


@dataclass(frozen=True)
class ExtendedGraph:
    train: str
    speed_sets: Mapping[str, SpeedSet]
    edges: tuple[ExtendedEdge, ...]
    stop_vertices: Mapping[str, frozenset] = field(default_factory=dict)
    entry: tuple[str, float] | None = None
    exit: str | None = None

    @cached_property
    def by_base(self) -> dict[str, list[int]]:
        out = defaultdict(list)
        for k, eps in enumerate(self.edges):
            out[eps.base_edge].append(k)
        return dict(out)

    @cached_property
    def into(self) -> dict[tuple[str, float], list[int]]:
        out = defaultdict(list)
        for k, eps in enumerate(self.edges):
            out[(eps.target, eps.p2)].append(k)
        return dict(out)

    @cached_property
    def out_of(self) -> dict[tuple[str, float], list[int]]:
        out = defaultdict(list)
        for k, eps in enumerate(self.edges):
            out[(eps.source, eps.p1)].append(k)
        return dict(out)

    @cached_property
    def vertices(self) -> frozenset:
        return frozenset(v for eps in self.edges for v in (eps.source, eps.target))

    @cached_property
    def base_edges(self) -> frozenset:
        return frozenset(self.by_base)


def speed_grid(cap: float, delta_v: float) -> tuple[float, ...]:
    """``{0, dv, 2dv, ...}`` below ``cap`` plus ``cap`` itself."""
    n = int(np.floor(cap / delta_v + _SPEED_TOL))
    values = [k * delta_v for k in range(n + 1) if k * delta_v < cap - 1e-7]
    values.append(cap)
    return tuple(values)


def vertex_caps(train: Train, network: Network) -> dict[str, float]:
    caps = {}
    for v in network.vertices:
        limits = [e.speed_limit for e in network.incident(v)]
        caps[v] = min(train.max_speed, max(limits)) if limits else train.max_speed
    return caps


def build_extended_graph(train: Train, network: Network, delta_v: float = DEFAULT_DELTA_V, *,
                         v_floor: float = 0.5, extra_speeds: Mapping[str, float] | None = None,
                         stations: tuple[Station, ...] = ()) -> ExtendedGraph:
    if not delta_v > 0:
        raise ValueError(f"delta_v must be > 0, got {delta_v!r}")
    caps = vertex_caps(train, network)
    speed_sets = {}
    for v in network.vertices:
        speeds = set(speed_grid(caps[v], delta_v))
        if extra_speeds and v in extra_speeds:
            extra = extra_speeds[v]
            if extra > caps[v] + _SPEED_TOL:
                raise InstanceError(f"train {train.id}: speed {extra} at {v} exceeds cap {caps[v]}")
            if all(abs(extra - s) > _SPEED_TOL for s in speeds):
                speeds.add(extra)
        speed_sets[v] = SpeedSet(v, tuple(sorted(speeds)))

    rows = []
    for e in network.edges:
        limit = min(train.max_speed, e.speed_limit)
        for p1 in speed_sets[e.source].speeds:
            if p1 > limit + _SPEED_TOL:
                continue
            for p2 in speed_sets[e.target].speeds:
                if p2 > limit + _SPEED_TOL:
                    continue
                rows.append((e, p1, p2, limit))
    if rows:
        length = np.array([r[0].length for r in rows])
        v1 = np.array([r[1] for r in rows])
        v2 = np.array([r[2] for r in rows])
        vmax = np.array([r[3] for r in rows])
        ok = kinematics.feasible_transitions(length, v1, v2, train.acceleration, train.deceleration)
        floor = np.minimum(v_floor, 0.5 * vmax)
        v1c, v2c = np.minimum(v1, vmax), np.minimum(v2, vmax)
        zeros = np.zeros_like(length)
        tmin = kinematics.batch_times(FASTEST, length, v1c, v2c, zeros, length, vmax,
                                      train.acceleration, train.deceleration, floor)
        tmax = kinematics.batch_times(SLOWEST, length, v1c, v2c, zeros, length, vmax,
                                      train.acceleration, train.deceleration, floor)
    edges = []
    for k, (e, p1, p2, _) in enumerate(rows):
        if not ok[k]:
            continue
        edges.append(ExtendedEdge(e.id, e.source, e.target, p1, p2, float(tmin[k]),
                                  float("inf") if e.stop_allowed else float(tmax[k])))
    graph = ExtendedGraph(train.id, speed_sets, tuple(edges))
    if stations:
        stops = {s.name: frozenset(stop_candidates(graph, s, train, network)) for s in stations}
        graph = ExtendedGraph(train.id, speed_sets, tuple(edges), stops)
    return graph


def edge_params(train: Train, network: Network, edge_id: str, v_floor: float) -> kinematics.KinematicParams:
    """Kinematic parameters the graph used for ``edge_id`` (train cap reduced to the edge limit)."""
    limit = min(train.max_speed, network.edge[edge_id].speed_limit)
    return kinematics.KinematicParams(limit, train.acceleration, train.deceleration, min(v_floor, 0.5 * limit))


def stop_candidates(graph: ExtendedGraph, station: Station, train: Train, network: Network) -> set[str]:
    """Vertices where the front can stop with the whole train inside ``station``."""
    heads = {network.edge[e].target for e in station.edges}
    return {v for v in heads
            if v in graph.speed_sets and 0.0 in graph.speed_sets[v].speeds
            and station_chains(network, station, v, train.length)}


def restrict_to_demand(graph: ExtendedGraph, demand: Demand) -> ExtendedGraph:
    """Keep only nodes on some (entry, entry_speed) -> exit walk; no edges into entry or out of exit."""
    v_in, v_out = demand.entry_vertex, demand.exit_vertex
    speeds = graph.speed_sets.get(v_in)
    start = None
    if speeds is not None:
        for s in speeds.speeds:
            if abs(s - demand.entry_speed) <= _SPEED_TOL:
                start = (v_in, s)
    if start is None:
        raise EmptyGraph(f"train {graph.train}: entry speed {demand.entry_speed} not available at {v_in}")
    usable = [eps for eps in graph.edges if eps.target != v_in and eps.source != v_out]
    succ, pred = defaultdict(list), defaultdict(list)
    for eps in usable:
        succ[(eps.source, eps.p1)].append((eps.target, eps.p2))
        pred[(eps.target, eps.p2)].append((eps.source, eps.p1))

    fwd, todo = {start}, [start]
    while todo:
        n = todo.pop()
        for m in succ[n]:
            if m not in fwd:
                fwd.add(m)
                todo.append(m)
    goals = [n for n in fwd if n[0] == v_out]
    if not goals:
        raise EmptyGraph(f"train {graph.train}: exit {v_out} unreachable from {v_in}")
    bwd, todo = set(goals), list(goals)
    while todo:
        n = todo.pop()
        for m in pred[n]:
            if m not in bwd:
                bwd.add(m)
                todo.append(m)
    keep = tuple(eps for eps in usable
                 if (eps.source, eps.p1) in fwd and (eps.target, eps.p2) in bwd
                 and (eps.source, eps.p1) in bwd)
    nodes = {(eps.source, eps.p1) for eps in keep} | {(eps.target, eps.p2) for eps in keep}
    sets = {}
    for v, ss in graph.speed_sets.items():
        kept = tuple(s for s in ss.speeds if (v, s) in nodes)
        if kept:
            sets[v] = SpeedSet(v, kept)
    stops = {name: frozenset(v for v in vs if v in sets) for name, vs in graph.stop_vertices.items()}
    return ExtendedGraph(graph.train, sets, keep, stops, entry=start, exit=v_out)
