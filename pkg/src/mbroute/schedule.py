"""Decoded schedules: route, speeds and timings per train."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Mapping

from mbroute.errors import DecodeError, ParseError


@dataclass
class TrainSchedule:
    train: str
    route: list[str]
    vertices: list[str]
    speeds: list[float]
    a_front: dict[str, float]
    d_front: dict[str, float]
    d_rear: dict[str, float]
    stops: list[str] = field(default_factory=list)

    @property
    def speed_at(self) -> dict[str, float]:
        return dict(zip(self.vertices, self.speeds))

    def to_dict(self) -> dict:
        return {
            "route": list(self.route),
            "vertices": [
                {"id": v, "speed": self.speeds[i], "arrival": self.a_front[v],
                 "departure": self.d_front[v], "rear_departure": self.d_rear[v]}
                for i, v in enumerate(self.vertices)
            ],
            "stops": list(self.stops),
        }

    @classmethod
    def from_dict(cls, train: str, doc: Mapping) -> "TrainSchedule":
        try:
            verts = doc["vertices"]
            return cls(
                train=train,
                route=[str(e) for e in doc["route"]],
                vertices=[str(v["id"]) for v in verts],
                speeds=[float(v["speed"]) for v in verts],
                a_front={str(v["id"]): float(v["arrival"]) for v in verts},
                d_front={str(v["id"]): float(v["departure"]) for v in verts},
                d_rear={str(v["id"]): float(v["rear_departure"]) for v in verts},
                stops=[str(s) for s in doc.get("stops", [])],
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ParseError(f"schedule for train {train}: {exc}") from exc


@dataclass
class CandidateSolution:
    trains: dict[str, TrainSchedule]
    objective: float | None = None

    def to_dict(self) -> dict:
        return {"objective": self.objective,
                "trains": {tr: self.trains[tr].to_dict() for tr in sorted(self.trains)}}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    @classmethod
    def from_dict(cls, doc: Mapping) -> "CandidateSolution":
        if not isinstance(doc, Mapping) or not isinstance(doc.get("trains"), Mapping):
            raise ParseError("schedule document needs a 'trains' object")
        trains = {str(tr): TrainSchedule.from_dict(str(tr), d) for tr, d in doc["trains"].items()}
        obj = doc.get("objective")
        return cls(trains, None if obj is None else float(obj))

    @classmethod
    def from_json(cls, text: str) -> "CandidateSolution":
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ParseError(f"invalid JSON: {exc}") from exc
        return cls.from_dict(doc)


def extract_solution(handle, values: Mapping[tuple, float], objective: float | None = None) -> CandidateSolution:
    """Decode binaries (rounded at 0.5) and timings of a model solution."""
    ctx = handle.ctx
    net = ctx.instance.network
    trains = {}
    for tr in ctx.trains:
        g = ctx.graphs[tr]
        used = {e for e in g.base_edges if values[("x", tr, e)] > 0.5}
        v_in, v_out = g.entry[0], g.exit
        route, verts, v = [], [v_in], v_in
        while v != v_out:
            nxt = [e for e in ctx.out_edges(tr, v) if e in used]
            if len(nxt) != 1:
                raise DecodeError(f"train {tr}: {len(nxt)} used edges leave {v}")
            v = net.edge[nxt[0]].target
            if v in verts:
                raise DecodeError(f"train {tr}: route revisits {v}")
            route.append(nxt[0])
            verts.append(v)
        if len(route) != len(used):
            raise DecodeError(f"train {tr}: used edges off the entry-exit path")
        speeds = []
        for i, e in enumerate(route):
            picks = [k for k in g.by_base[e] if values[("y", tr, k)] > 0.5]
            if len(picks) != 1:
                raise DecodeError(f"train {tr}: {len(picks)} speed profiles on edge {e}")
            eps = g.edges[picks[0]]
            if i == 0:
                speeds.append(eps.p1)
            elif abs(speeds[-1] - eps.p1) > 1e-9:
                raise DecodeError(f"train {tr}: speed jumps at {eps.source}")
            speeds.append(eps.p2)
        stops = []
        for i in range(len(ctx.instance.demand[tr].stops)):
            at = [key[3] for key in handle.vars.keys
                  if key[0] == "stop" and key[1] == tr and key[2] == i and values[key] > 0.5]
            if len(at) != 1:
                raise DecodeError(f"train {tr}: stop {i} placed {len(at)} times")
            stops.append(at[0])
        trains[tr] = TrainSchedule(
            tr, route, verts, [float(s) for s in speeds],
            {w: values[("a", tr, w)] for w in verts},
            {w: values[("d", tr, w)] for w in verts},
            {w: values[("r", tr, w)] for w in verts},
            stops,
        )
    return CandidateSolution(trains, objective)
