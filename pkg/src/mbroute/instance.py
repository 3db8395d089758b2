"""Problem input: network, trains, stations and timetable demands.

Instances are stored as JSON documents::

    {"network": {"vertices": [...], "edges": [{"id", "from", "to", "length_m",
                 "speed_limit_mps", "stop_allowed", "reverse_of"?}]},
     "trains": [{"id", "length_m", "max_speed_mps", "acceleration_mps2", "deceleration_mps2"}],
     "stations": [{"name", "edges"}],
     "demands": [{"train", "weight", "entry_vertex", "entry_speed_mps", "entry_window_s",
                  "exit_vertex", "exit_window_s",
                  "stops": [{"station", "arrival_window_s", "departure_window_s", "min_dwell_s"}]}]}
"""
from __future__ import annotations

import json
import math
from collections import defaultdict
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

from mbroute.errors import InvalidRoute, ParseError, ValidationError

Window = tuple[float, float]


@dataclass(frozen=True)
class Train:
    id: str
    length: float
    max_speed: float
    acceleration: float
    deceleration: float


@dataclass(frozen=True)
class Edge:
    id: str
    source: str
    target: str
    length: float
    speed_limit: float
    stop_allowed: bool = False
    reverse_of: str | None = None


@dataclass(frozen=True)
class Network:
    vertices: tuple[str, ...]
    edges: tuple[Edge, ...]

    @cached_property
    def edge(self) -> dict[str, Edge]:
        return {e.id: e for e in self.edges}

    @cached_property
    def out_edges(self) -> dict[str, tuple[Edge, ...]]:
        out = defaultdict(list)
        for e in self.edges:
            out[e.source].append(e)
        return {v: tuple(out[v]) for v in self.vertices}

    @cached_property
    def in_edges(self) -> dict[str, tuple[Edge, ...]]:
        inc = defaultdict(list)
        for e in self.edges:
            inc[e.target].append(e)
        return {v: tuple(inc[v]) for v in self.vertices}

    def incident(self, v: str) -> tuple[Edge, ...]:
        return self.in_edges.get(v, ()) + self.out_edges.get(v, ())


@dataclass(frozen=True)
class Station:
    name: str
    edges: tuple[str, ...]


@dataclass(frozen=True)
class StopRequest:
    station: str
    arrival_window: Window
    departure_window: Window
    min_dwell: float = 0.0


@dataclass(frozen=True)
class Demand:
    train: str
    weight: float
    entry_vertex: str
    entry_window: Window
    exit_vertex: str
    exit_window: Window
    entry_speed: float = 0.0
    stops: tuple[StopRequest, ...] = field(default_factory=tuple)


@dataclass(frozen=True)
class Instance:
    network: Network
    trains: tuple[Train, ...]
    stations: tuple[Station, ...]
    demands: tuple[Demand, ...]

    @cached_property
    def train(self) -> dict[str, Train]:
        return {t.id: t for t in self.trains}

    @cached_property
    def demand(self) -> dict[str, Demand]:
        return {d.train: d for d in self.demands}

    @cached_property
    def station(self) -> dict[str, Station]:
        return {s.name: s for s in self.stations}

    @property
    def train_ids(self) -> list[str]:
        return sorted(self.train)


# -- parsing -----------------------------------------------------------------

def _get(obj, key, path, kind=None, default=...):
    if not isinstance(obj, dict):
        raise ValidationError(path, "expected an object")
    if key not in obj:
        if default is not ...:
            return default
        raise ValidationError(f"{path}.{key}" if path else key, "missing")
    value = obj[key]
    where = f"{path}.{key}" if path else key
    if kind is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
            raise ValidationError(where, "expected a finite number")
        return float(value)
    if kind is str:
        if not isinstance(value, str):
            raise ValidationError(where, "expected a string")
        return value
    if kind is bool:
        if not isinstance(value, bool):
            raise ValidationError(where, "expected true/false")
        return value
    if kind is list:
        if not isinstance(value, list):
            raise ValidationError(where, "expected a list")
        return value
    return value


def _window(obj, key, path) -> Window:
    raw = _get(obj, key, path, list)
    where = f"{path}.{key}"
    if len(raw) != 2 or any(isinstance(x, bool) or not isinstance(x, (int, float)) for x in raw):
        raise ValidationError(where, "expected [lo, hi]")
    lo, hi = float(raw[0]), float(raw[1])
    if lo < 0 or lo > hi:
        raise ValidationError(where, "need 0 <= lo <= hi")
    return lo, hi


def _positive(value, where):
    if not value > 0:
        raise ValidationError(where, "must be > 0")
    return value


def _parse(doc) -> Instance:
    if not isinstance(doc, dict):
        raise ParseError("top level must be an object")
    net = _get(doc, "network", "")
    vertices = _get(net, "vertices", "network", list)
    for i, v in enumerate(vertices):
        if not isinstance(v, str):
            raise ValidationError(f"network.vertices[{i}]", "expected a string")
    if len(set(vertices)) != len(vertices):
        raise ValidationError("network.vertices", "duplicate vertex id")
    vset = set(vertices)

    edges = []
    for i, raw in enumerate(_get(net, "edges", "network", list)):
        p = f"edges[{i}]"
        eid = _get(raw, "id", p, str)
        src = _get(raw, "from", p, str)
        dst = _get(raw, "to", p, str)
        length = _positive(_get(raw, "length_m", p, float), f"{p}.length")
        limit = _positive(_get(raw, "speed_limit_mps", p, float), f"{p}.speed_limit")
        stop = _get(raw, "stop_allowed", p, bool, False)
        rev = raw.get("reverse_of")
        if rev is not None and not isinstance(rev, str):
            raise ValidationError(f"{p}.reverse_of", "expected a string")
        if src not in vset:
            raise ValidationError(f"{p}.from", f"unknown vertex {src!r}")
        if dst not in vset:
            raise ValidationError(f"{p}.to", f"unknown vertex {dst!r}")
        edges.append(Edge(eid, src, dst, length, limit, stop, rev))

    ids, pairs = {}, {}
    for i, e in enumerate(edges):
        if e.id in ids:
            raise ValidationError(f"edges[{i}].id", f"duplicate edge id {e.id!r}")
        ids[e.id] = i
        if (e.source, e.target) in pairs:
            raise ValidationError(f"edges[{i}]", f"second edge {e.source}->{e.target}")
        pairs[(e.source, e.target)] = i
    for i, e in enumerate(edges):
        if e.reverse_of is None:
            continue
        p = f"edges[{i}].reverse_of"
        if e.reverse_of not in ids:
            raise ValidationError(p, f"unknown edge {e.reverse_of!r}")
        r = edges[ids[e.reverse_of]]
        if (r.source, r.target) != (e.target, e.source):
            raise ValidationError(p, "endpoints are not swapped")
        if not math.isclose(r.length, e.length, rel_tol=1e-9, abs_tol=1e-9):
            raise ValidationError(p, "lengths differ")
        if r.reverse_of != e.id:
            raise ValidationError(p, "pairing is not symmetric")
    network = Network(tuple(vertices), tuple(edges))

    trains = []
    for i, raw in enumerate(_get(doc, "trains", "", list)):
        p = f"trains[{i}]"
        t = Train(
            _get(raw, "id", p, str),
            _positive(_get(raw, "length_m", p, float), f"{p}.length"),
            _positive(_get(raw, "max_speed_mps", p, float), f"{p}.max_speed"),
            _positive(_get(raw, "acceleration_mps2", p, float), f"{p}.acceleration"),
            _positive(_get(raw, "deceleration_mps2", p, float), f"{p}.deceleration"),
        )
        if any(t.id == o.id for o in trains):
            raise ValidationError(f"{p}.id", f"duplicate train id {t.id!r}")
        trains.append(t)
    by_train = {t.id: t for t in trains}

    stations = []
    for i, raw in enumerate(_get(doc, "stations", "", list, [])):
        p = f"stations[{i}]"
        name = _get(raw, "name", p, str)
        members = _get(raw, "edges", p, list)
        if not members:
            raise ValidationError(f"{p}.edges", "station needs at least one edge")
        for j, eid in enumerate(members):
            if eid not in ids:
                raise ValidationError(f"{p}.edges[{j}]", f"unknown edge {eid!r}")
        if any(name == s.name for s in stations):
            raise ValidationError(f"{p}.name", f"duplicate station {name!r}")
        stations.append(Station(name, tuple(members)))
    by_station = {s.name: s for s in stations}

    demands = []
    seen = set()
    for i, raw in enumerate(_get(doc, "demands", "", list)):
        p = f"demands[{i}]"
        tid = _get(raw, "train", p, str)
        if tid not in by_train:
            raise ValidationError(f"{p}.train", f"unknown train {tid!r}")
        if tid in seen:
            raise ValidationError(f"{p}.train", f"second demand for train {tid!r}")
        seen.add(tid)
        weight = _get(raw, "weight", p, float)
        if weight < 0:
            raise ValidationError(f"{p}.weight", "must be >= 0")
        v_in = _get(raw, "entry_vertex", p, str)
        v_out = _get(raw, "exit_vertex", p, str)
        if v_in not in vset:
            raise ValidationError(f"{p}.entry_vertex", f"unknown vertex {v_in!r}")
        if v_out not in vset:
            raise ValidationError(f"{p}.exit_vertex", f"unknown vertex {v_out!r}")
        if v_in == v_out:
            raise ValidationError(f"{p}.exit_vertex", "entry and exit coincide")
        speed = _get(raw, "entry_speed_mps", p, float, 0.0)
        if speed < 0 or speed > by_train[tid].max_speed:
            raise ValidationError(f"{p}.entry_speed", "must lie in [0, max_speed]")
        t_in = _window(raw, "entry_window_s", p)
        t_out = _window(raw, "exit_window_s", p)
        if not t_in[0] < t_out[1]:
            raise ValidationError(f"{p}.exit_window_s", "exit window ends before entry opens")
        stops = []
        for j, sraw in enumerate(_get(raw, "stops", p, list, [])):
            sp = f"{p}.stops[{j}]"
            sname = _get(sraw, "station", sp, str)
            if sname not in by_station:
                raise ValidationError(f"{sp}.station", f"unknown station {sname!r}")
            arr = _window(sraw, "arrival_window_s", sp)
            dep = _window(sraw, "departure_window_s", sp)
            dwell = _get(sraw, "min_dwell_s", sp, float, 0.0)
            if dwell < 0:
                raise ValidationError(f"{sp}.min_dwell_s", "must be >= 0")
            if arr[0] + dwell > dep[1]:
                raise ValidationError(f"{sp}.departure_window_s", "cannot satisfy arrival + dwell")
            stops.append(StopRequest(sname, arr, dep, dwell))
        demands.append(Demand(tid, weight, v_in, t_in, v_out, t_out, speed, tuple(stops)))
    for i, t in enumerate(trains):
        if t.id not in seen:
            raise ValidationError(f"trains[{i}].id", f"train {t.id!r} has no demand")

    instance = Instance(network, tuple(trains), tuple(stations), tuple(demands))
    _check_stops_reachable(instance)
    return instance


def _reachable(network: Network, start: str, forward: bool) -> set[str]:
    seen, todo = {start}, [start]
    while todo:
        v = todo.pop()
        nxt = network.out_edges[v] if forward else network.in_edges[v]
        for e in nxt:
            w = e.target if forward else e.source
            if w not in seen:
                seen.add(w)
                todo.append(w)
    return seen


def station_chains(network: Network, station: Station, vertex: str, length: float) -> list[tuple[str, ...]]:
    """Minimal backward runs of station edges ending at ``vertex`` that hold ``length`` metres.

    Chains are returned in travel order (first edge first).
    """
    members = set(station.edges)
    out = []

    def walk(v, acc, chain, visited):
        for e in network.in_edges[v]:
            if e.id not in members or e.source in visited:
                continue
            total = acc + e.length
            if total >= length - 1e-9:
                out.append(tuple(reversed(chain + [e.id])))
            else:
                walk(e.source, total, chain + [e.id], visited | {e.source})

    walk(vertex, 0.0, [], {vertex})
    return sorted(out)


def _check_stops_reachable(instance: Instance):
    net = instance.network
    for i, d in enumerate(instance.demands):
        if not d.stops:
            continue
        fwd = _reachable(net, d.entry_vertex, True)
        bwd = _reachable(net, d.exit_vertex, False)
        length = instance.train[d.train].length
        for j, stop in enumerate(d.stops):
            station = instance.station[stop.station]
            heads = {net.edge[e].target for e in station.edges}
            ok = any(v in fwd and v in bwd and station_chains(net, station, v, length) for v in heads)
            if not ok:
                raise ValidationError(f"demands[{i}].stops[{j}].station",
                                      "no vertex of this station can hold the train on an entry-exit path")


def load_instance(text: str) -> Instance:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(str(exc)) from exc
    return _parse(doc)


def read_instance(path) -> Instance:
    with open(path, encoding="utf-8") as fh:
        return load_instance(fh.read())


def instance_to_dict(instance: Instance) -> dict:
    edges = []
    for e in instance.network.edges:
        item = {"id": e.id, "from": e.source, "to": e.target, "length_m": e.length,
                "speed_limit_mps": e.speed_limit, "stop_allowed": e.stop_allowed}
        if e.reverse_of is not None:
            item["reverse_of"] = e.reverse_of
        edges.append(item)
    return {
        "network": {"vertices": list(instance.network.vertices), "edges": edges},
        "trains": [{"id": t.id, "length_m": t.length, "max_speed_mps": t.max_speed,
                    "acceleration_mps2": t.acceleration, "deceleration_mps2": t.deceleration}
                   for t in instance.trains],
        "stations": [{"name": s.name, "edges": list(s.edges)} for s in instance.stations],
        "demands": [{"train": d.train, "weight": d.weight, "entry_vertex": d.entry_vertex,
                     "entry_speed_mps": d.entry_speed, "entry_window_s": list(d.entry_window),
                     "exit_vertex": d.exit_vertex, "exit_window_s": list(d.exit_window),
                     "stops": [{"station": s.station, "arrival_window_s": list(s.arrival_window),
                                "departure_window_s": list(s.departure_window),
                                "min_dwell_s": s.min_dwell} for s in d.stops]}
                    for d in instance.demands],
    }


def save_instance(instance: Instance) -> str:
    return json.dumps(instance_to_dict(instance), indent=2) + "\n"


def check_route(network: Network, route: Sequence[str]) -> None:
    for i, eid in enumerate(route):
        if eid not in network.edge:
            raise InvalidRoute(f"unknown edge {eid!r}")
        if i and network.edge[route[i - 1]].target != network.edge[eid].source:
            raise InvalidRoute(f"edges {route[i - 1]!r} and {eid!r} are not connected")


def shared_edges(instance: Instance, route_a: Iterable[str], route_b: Iterable[str]) -> tuple[set[str], set[str]]:
    """Edges used by both routes, and edges of ``route_a`` whose reverse lies on ``route_b``."""
    route_a, route_b = list(route_a), list(route_b)
    check_route(instance.network, route_a)
    check_route(instance.network, route_b)
    in_b = set(route_b)
    same = {e for e in route_a if e in in_b}
    edge = instance.network.edge
    opposite = {e for e in route_a if edge[e].reverse_of is not None and edge[e].reverse_of in in_b}
    return same, opposite
