"""MILP-free feasibility checks on decoded schedules.

Everything here is recomputed from the instance and the raw timings with the
scalar kinematics functions; no model rows or variable values are consulted.
"""
from __future__ import annotations

import heapq
import itertools
import json
import math
from dataclasses import asdict, dataclass, field
from typing import Mapping

from mbroute import kinematics
from mbroute.config import SolveConfig
from mbroute.errors import NoPath
from mbroute.instance import Instance, station_chains
from mbroute.schedule import CandidateSolution, TrainSchedule
from mbroute.segments import track_segments
from mbroute.velocity_graph import ExtendedGraph, build_extended_graph

KINDS = ("Headway", "OppositeDirection", "TrackRelease", "Timetable", "Kinematics", "Routing")


@dataclass(frozen=True)
class Violation:
    kind: str
    trains: tuple[str, ...]
    location: str
    magnitude: float
    detail: str

    def to_dict(self) -> dict:
        d = asdict(self)
        d["trains"] = list(self.trains)
        return d


@dataclass
class ViolationReport:
    entries: list[Violation] = field(default_factory=list)

    @property
    def feasible(self) -> bool:
        return not self.entries

    def of_kind(self, kind: str) -> list[Violation]:
        return [v for v in self.entries if v.kind == kind]

    def to_dict(self) -> dict:
        return {"feasible": self.feasible, "entries": [v.to_dict() for v in self.entries]}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    def __str__(self):
        if not self.entries:
            return "no violations"
        return "\n".join(f"{v.kind} {','.join(v.trains)} @ {v.location}: {v.magnitude:.6g} ({v.detail})"
                         for v in self.entries)


def _params(instance, tr, edge_id, v_floor):
    train = instance.train[tr]
    limit = min(train.max_speed, instance.network.edge[edge_id].speed_limit)
    return kinematics.KinematicParams(limit, train.acceleration, train.deceleration, min(v_floor, 0.5 * limit))


class _Checker:
    def __init__(self, instance: Instance, schedule: CandidateSolution, v_floor: float, buffer: float, tol: float):
        self.inst = instance
        self.sched = schedule
        self.v_floor = v_floor
        self.buffer = buffer
        self.tol = tol
        self.out: list[Violation] = []
        self.ok: dict[str, TrainSchedule] = {}

    def add(self, kind, trains, location, magnitude, detail):
        self.out.append(Violation(kind, tuple(trains), str(location), float(magnitude), detail))

    # (a) routing
    def routing(self):
        inst, net = self.inst, self.inst.network
        for tr in sorted(set(self.sched.trains) - set(inst.train)):
            self.add("Routing", [tr], "-", 0.0, "train not in instance")
        for tr in inst.train_ids:
            s = self.sched.trains.get(tr)
            if s is None:
                self.add("Routing", [tr], "-", 0.0, "train missing from schedule")
                continue
            d = inst.demand[tr]
            problems = []
            if any(e not in net.edge for e in s.route):
                problems.append("unknown edge")
            elif len(s.vertices) != len(s.route) + 1 or len(s.speeds) != len(s.vertices):
                problems.append("vertex/speed list does not match route")
            else:
                for i, e in enumerate(s.route):
                    edge = net.edge[e]
                    if edge.source != s.vertices[i] or edge.target != s.vertices[i + 1]:
                        problems.append(f"edge {e} does not connect {s.vertices[i]}->{s.vertices[i + 1]}")
                if not s.route:
                    problems.append("empty route")
                if s.vertices[0] != d.entry_vertex or s.vertices[-1] != d.exit_vertex:
                    problems.append("route does not run entry->exit")
                if len(set(s.vertices)) != len(s.vertices):
                    problems.append("route revisits a vertex")
            if len(s.stops) != len(d.stops):
                problems.append(f"{len(s.stops)} stops for {len(d.stops)} requests")
            for p in problems:
                self.add("Routing", [tr], d.entry_vertex, 0.0, p)
            if not problems:
                self.ok[tr] = s

    # (b) kinematics
    def kinematics(self):
        net, tol = self.inst.network, self.tol
        for tr, s in self.ok.items():
            d = self.inst.demand[tr]
            if abs(s.speeds[0] - d.entry_speed) > 1e-6:
                self.add("Kinematics", [tr], s.vertices[0], abs(s.speeds[0] - d.entry_speed), "wrong entry speed")
            for i, v in enumerate(s.vertices):
                wait = s.d_front[v] - s.a_front[v]
                if wait < -tol:
                    self.add("Kinematics", [tr], v, -wait, "departs before arriving")
                elif wait > tol and s.speeds[i] > 1e-9:
                    self.add("Kinematics", [tr], v, wait, f"waits while moving at {s.speeds[i]:.3f} m/s")
            for i, e in enumerate(s.route):
                edge = net.edge[e]
                u, v = s.vertices[i], s.vertices[i + 1]
                params = _params(self.inst, tr, e, self.v_floor)
                v1, v2 = s.speeds[i], s.speeds[i + 1]
                if max(v1, v2) > params.v_max + 1e-6:
                    self.add("Kinematics", [tr], e, max(v1, v2) - params.v_max, "speed above limit")
                    continue
                v1, v2 = min(v1, params.v_max), min(v2, params.v_max)
                if not kinematics.feasible_transition(edge.length, v1, v2, params):
                    self.add("Kinematics", [tr], e, 0.0, f"cannot change {v1:.3f}->{v2:.3f} m/s")
                    continue
                gap = s.a_front[v] - s.d_front[u]
                lo = kinematics.min_traverse_time(edge.length, v1, v2, params)
                hi = kinematics.max_traverse_time(edge.length, v1, v2, edge.stop_allowed, params)
                if gap < lo - tol:
                    self.add("Kinematics", [tr], e, lo - gap, f"traversed in {gap:.4f} s < {lo:.4f} s")
                elif gap > hi + tol:
                    self.add("Kinematics", [tr], e, gap - hi, f"traversed in {gap:.4f} s > {hi:.4f} s")

    def front_passage(self, tr: str, start: int, distance: float) -> float:
        """Earliest consistent time the front of ``tr`` is ``distance`` metres past vertex ``start``."""
        s = self.ok[tr]
        net = self.inst.network
        done = 0.0
        for i in range(start, len(s.route)):
            edge = net.edge[s.route[i]]
            if done + edge.length >= distance - 1e-9:
                off = min(max(distance - done, 0.0), edge.length)
                u, v = s.vertices[i], s.vertices[i + 1]
                params = _params(self.inst, tr, edge.id, self.v_floor)
                v1, v2 = min(s.speeds[i], params.v_max), min(s.speeds[i + 1], params.v_max)
                early = s.d_front[u] + kinematics.min_time_over_interval(edge.length, v1, v2, 0.0, off, params)
                slow = kinematics.max_time_over_interval(edge.length, v1, v2, off, edge.length,
                                                         edge.stop_allowed, params)
                late = s.a_front[v] - slow if math.isfinite(slow) else -math.inf
                return max(early, late)
            done += edge.length
        # the train leaves the network at its exit before covering the distance
        return s.d_front[s.vertices[-1]]

    # (c) track release
    def track_release(self):
        for tr, s in self.ok.items():
            length = self.inst.train[tr].length
            for j, v in enumerate(s.vertices):
                need = self.front_passage(tr, j, length)
                if s.d_rear[v] < need - self.tol:
                    self.add("TrackRelease", [tr], v, need - s.d_rear[v], "rear released before it cleared")

    # (d) same-direction headway
    def headway(self):
        net = self.inst.network
        users: dict[str, list[str]] = {}
        for tr, s in self.ok.items():
            for e in s.route:
                users.setdefault(e, []).append(tr)
        for e in sorted(users):
            u, v = net.edge[e].source, net.edge[e].target
            order = sorted(users[e], key=lambda tr: (self.ok[tr].a_front[u], tr))
            for leader, follower in zip(order, order[1:]):
                fs, ls = self.ok[follower], self.ok[leader]
                p = fs.speeds[fs.vertices.index(u)]
                decel = self.inst.train[follower].deceleration
                dist = kinematics.braking_distance(p, decel) + self.buffer
                need = self.front_passage(leader, ls.vertices.index(u), dist + self.inst.train[leader].length)
                if fs.a_front[u] < need - self.tol:
                    self.add("Headway", [leader, follower], u, need - fs.a_front[u],
                             f"{follower} reaches {u} at {p:.3f} m/s before {leader} is {dist:.1f} m clear")
                need = self.front_passage(leader, ls.vertices.index(v), self.inst.train[leader].length)
                if fs.a_front[v] < need - self.tol:
                    self.add("Headway", [leader, follower], v, need - fs.a_front[v],
                             f"{follower} reaches {v} before the rear of {leader} clears it")

    # (e) opposite direction
    def opposite(self):
        net = self.inst.network
        for seg in track_segments(net):
            occ = {}
            for tr, s in self.ok.items():
                idx = [i for i, e in enumerate(s.route) if seg.direction(e)]
                if idx:
                    first, last = idx[0], idx[-1]
                    occ[tr] = (seg.direction(s.route[first]), s.a_front[s.vertices[first]],
                               s.d_rear[s.vertices[last + 1]])
            for a, b in itertools.combinations(sorted(occ), 2):
                if occ[a][0] == occ[b][0]:
                    continue
                overlap = min(occ[a][2], occ[b][2]) - max(occ[a][1], occ[b][1])
                if overlap > self.tol:
                    self.add("OppositeDirection", [a, b], seg.id, overlap, "opposing trains share the segment")

    # (f) timetable
    def timetable(self):
        inst, tol = self.inst, self.tol
        for tr, s in self.ok.items():
            d = inst.demand[tr]
            t_in, t_out = s.a_front[s.vertices[0]], s.d_rear[s.vertices[-1]]
            self._window(tr, s.vertices[0], t_in, d.entry_window, "entry")
            self._window(tr, s.vertices[-1], t_out, d.exit_window, "exit")
            last = -1
            for i, (req, v) in enumerate(zip(d.stops, s.stops)):
                if v not in s.vertices:
                    self.add("Timetable", [tr], v, 0.0, f"stop {i} not on route")
                    continue
                j = s.vertices.index(v)
                if j < last:
                    self.add("Timetable", [tr], v, 0.0, f"stop {i} out of order")
                last = j
                if s.speeds[j] > 1e-9:
                    self.add("Timetable", [tr], v, s.speeds[j], f"stop {i} made at nonzero speed")
                chains = station_chains(inst.network, inst.station[req.station], v, inst.train[tr].length)
                behind = s.route[:j]
                if not any(list(c) == behind[len(behind) - len(c):] for c in chains if len(c) <= len(behind)):
                    self.add("Timetable", [tr], v, 0.0, f"train not inside station {req.station}")
                self._window(tr, v, s.a_front[v], req.arrival_window, f"stop {i} arrival")
                self._window(tr, v, s.d_front[v], req.departure_window, f"stop {i} departure")
                dwell = s.d_front[v] - s.a_front[v]
                if dwell < req.min_dwell - tol:
                    self.add("Timetable", [tr], v, req.min_dwell - dwell, f"stop {i} dwell too short")

    def _window(self, tr, where, t, window, what):
        lo, hi = window
        if t < lo - self.tol:
            self.add("Timetable", [tr], where, lo - t, f"{what} before window")
        elif t > hi + self.tol:
            self.add("Timetable", [tr], where, t - hi, f"{what} after window")


def verify_schedule(instance: Instance, schedule: CandidateSolution, config: SolveConfig | None = None,
                    tolerance: float = 1e-4) -> ViolationReport:
    config = config or SolveConfig()
    c = _Checker(instance, schedule, config.v_floor, config.buffer, tolerance)
    c.routing()
    c.kinematics()
    c.track_release()
    c.headway()
    c.opposite()
    c.timetable()
    return ViolationReport(c.out)


def fastest_single_train_time(instance: Instance, train: str, graphs: Mapping[str, ExtendedGraph] | None = None,
                              config: SolveConfig | None = None) -> float:
    """Shortest entry-to-exit front travel time using fastest edge times plus mandated dwells.

    Dijkstra over (vertex, speed, stops done, trailing station length) on the
    unrestricted velocity-extended graph.
    """
    config = config or SolveConfig()
    d = instance.demand[train]
    tr = instance.train[train]
    net = instance.network
    if graphs is not None and train in graphs and graphs[train].entry is None:
        g = graphs[train]
    else:
        extra = {d.entry_vertex: d.entry_speed} if d.entry_speed > 0 else None
        g = build_extended_graph(tr, net, config.delta_v, v_floor=config.v_floor, extra_speeds=extra)
    entry = [p for p in g.speed_sets[d.entry_vertex].speeds if abs(p - d.entry_speed) <= 1e-9]
    if not entry:
        raise NoPath(f"train {train}: entry speed not on the grid")
    out_of: dict = {}
    for eps in g.edges:
        out_of.setdefault((eps.source, eps.p1), []).append(eps)
    stops = d.stops
    members = [set(instance.station[r.station].edges) for r in stops]
    holds = [{v for v in {net.edge[e].target for e in m}
              if station_chains(net, instance.station[r.station], v, tr.length)} for r, m in zip(stops, members)]

    start = (d.entry_vertex, entry[0], 0, 0.0)
    best = {start: 0.0}
    heap = [(0.0, start)]
    while heap:
        t, state = heapq.heappop(heap)
        if t > best.get(state, math.inf):
            continue
        v, p, done, run = state
        if v == d.exit_vertex and done == len(stops):
            return t
        nxt = []
        if done < len(stops) and p == 0 and v in holds[done] and run >= tr.length - 1e-9:
            nxt.append((t + stops[done].min_dwell, (v, p, done + 1, 0.0)))
        if v != d.exit_vertex:
            for eps in out_of.get((v, p), ()):
                if eps.target == d.entry_vertex:
                    continue
                r = 0.0
                if done < len(stops) and eps.base_edge in members[done]:
                    r = min(run + net.edge[eps.base_edge].length, tr.length)
                nxt.append((t + eps.tau_min, (eps.target, eps.p2, done, r)))
        for t2, s2 in nxt:
            if t2 < best.get(s2, math.inf):
                best[s2] = t2
                heapq.heappush(heap, (t2, s2))
    raise NoPath(f"train {train}: no route from {d.entry_vertex} to {d.exit_vertex}")
