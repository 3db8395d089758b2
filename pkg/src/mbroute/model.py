"""Routing/timing MILP without headways.

Variables are addressed by tuple keys, for train ``t``:

    ("x", t, edge)            edge used
    ("y", t, k)               k-th extended edge of t's graph used
    ("a", t, v) ("d", t, v)   front arrival / departure at v
    ("r", t, v)               rear departure from v (track release)
    ("stop", t, i, v)         i-th stop made with the front at v
    ("c", t, i, v, j)         j-th station chain occupied for that stop
    ("o", f, l, edge)         f follows l on edge
    ("q", t1, t2, segment)    t1 clears the segment before t2 enters

Every constraint is a ``LinearConstraint`` whose tag identifies it uniquely;
the part before the first ``:`` names the constraint family.
"""
from __future__ import annotations

import heapq
import logging
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from mbroute import kinematics
from mbroute._kernels import FASTEST, SLOWEST
from mbroute.backend import BackendSolution, SolverBackend, make_backend
from mbroute.config import SolveConfig
from mbroute.errors import EmptyGraph, EnumerationLimitExceeded, NoRoute, UnsatisfiableStop
from mbroute.instance import Instance, Train, station_chains
from mbroute.segments import TrackSegment, track_segments
from mbroute.velocity_graph import ExtendedGraph, build_extended_graph, restrict_to_demand

log = logging.getLogger(__name__)

Key = tuple
Terms = tuple[tuple[Key, float], ...]
# a guard is an affine 0/1 expression: sum(coef * var) + const
Guard = tuple[Terms, float]

SENSES = ("<=", "=", ">=")
BINARY_KINDS = frozenset({"x", "y", "stop", "c", "o", "q"})


@dataclass(frozen=True)
class LinearConstraint:
    terms: Terms
    sense: str
    rhs: float
    tag: str

    def __post_init__(self):
        if not self.tag:
            raise ValueError("constraint tag must be nonempty")
        if self.sense not in SENSES:
            raise ValueError(f"bad sense {self.sense!r}")
        keys = [k for k, _ in self.terms]
        if len(set(keys)) != len(keys):
            raise ValueError(f"duplicate variables in {self.tag}")

    @property
    def family(self) -> str:
        return self.tag.split(":", 1)[0]

    def lhs(self, values: Mapping[Key, float]) -> float:
        return math.fsum(c * values[k] for k, c in self.terms)

    def slack(self, values: Mapping[Key, float]) -> float:
        lhs = self.lhs(values)
        if self.sense == ">=":
            return lhs - self.rhs
        if self.sense == "<=":
            return self.rhs - lhs
        return -abs(lhs - self.rhs)

    def violation(self, values: Mapping[Key, float]) -> float:
        return max(0.0, -self.slack(values))

    def format(self) -> str:
        body = " + ".join(f"{c:g}*{key_name(k)}" for k, c in self.terms) or "0"
        return f"{self.tag} | {body} | {self.sense} | {self.rhs:g}"


def key_name(key: Key) -> str:
    return f"{key[0]}[{','.join(str(p) for p in key[1:])}]"


def make_constraint(terms: Iterable[tuple[Key, float]], sense: str, rhs: float, tag: str) -> LinearConstraint:
    """Merge duplicate keys and drop zero coefficients."""
    merged: dict[Key, float] = {}
    for k, c in terms:
        merged[k] = merged.get(k, 0.0) + c
    return LinearConstraint(tuple((k, c) for k, c in merged.items() if c != 0.0), sense, float(rhs), tag)


def var_guard(key: Key) -> Guard:
    return (((key, 1.0),), 0.0)


def sum_guard(keys: Iterable[Key]) -> Guard:
    return (tuple((k, 1.0) for k in keys), 0.0)


def not_guard(key: Key) -> Guard:
    return (((key, -1.0),), 1.0)


def implication(body: Sequence[tuple[Key, float]], sense: str, rhs: float, guards: Sequence[Guard],
                bounds: Callable[[Key], tuple[float, float]], tag: str) -> LinearConstraint:
    """``body sense rhs`` enforced only when every guard equals 1.

    The big-M is the smallest value that makes the row vacuous under the
    variable bounds when any guard is 0.
    """
    if not guards:
        return make_constraint(body, sense, rhs, tag)
    if sense == ">=":
        lo = sum(min(c * bounds(k)[0], c * bounds(k)[1]) for k, c in body)
        m = max(0.0, rhs - lo)
        sign = -1.0
    elif sense == "<=":
        hi = sum(max(c * bounds(k)[0], c * bounds(k)[1]) for k, c in body)
        m = max(0.0, hi - rhs)
        sign = 1.0
    else:
        raise ValueError("implications need an inequality")
    terms = list(body)
    # body + sign*M*sum(1 - g) ... folded into terms and rhs
    shift = 0.0
    for g_terms, const in guards:
        shift += 1.0 - const
        terms.extend((k, sign * m * c) for k, c in g_terms)
    return make_constraint(terms, sense, rhs + sign * m * shift, tag)


# -- variables ----------------------------------------------------------------

_MAPS = {"x": "x", "y": "y", "a": "a_front", "d": "d_front", "r": "d_rear", "stop": "stop",
         "o": "order", "q": "segment_order", "c": "chain"}


@dataclass
class VariableIndex:
    x: dict = field(default_factory=dict)
    y: dict = field(default_factory=dict)
    a_front: dict = field(default_factory=dict)
    d_front: dict = field(default_factory=dict)
    d_rear: dict = field(default_factory=dict)
    stop: dict = field(default_factory=dict)
    order: dict = field(default_factory=dict)
    segment_order: dict = field(default_factory=dict)
    chain: dict = field(default_factory=dict)
    keys: list = field(default_factory=list)

    def _map(self, kind: str) -> dict:
        return getattr(self, _MAPS[kind])

    def __contains__(self, key: Key) -> bool:
        return key[1:] in self._map(key[0])

    def column(self, key: Key) -> int:
        return self._map(key[0])[key[1:]]

    def register(self, key: Key, col: int) -> None:
        m = self._map(key[0])
        if key[1:] in m:
            raise KeyError(f"variable {key_name(key)} exists")
        if col != len(self.keys):
            raise ValueError("columns must be registered in order")
        m[key[1:]] = col
        self.keys.append(key)

    def __len__(self):
        return len(self.keys)


# -- per-train context ------------------------------------------------------------

@dataclass(frozen=True)
class FrontPoint:
    """A point ``offset`` metres into the last of ``edges``, or the exit."""
    edges: tuple[str, ...]
    offset: float
    at_exit: bool = False


class ModelContext:
    """Immutable data shared by model building, separation and decoding."""

    def __init__(self, instance: Instance, graphs: Mapping[str, ExtendedGraph], config: SolveConfig):
        self.instance = instance
        self.config = config
        self.graphs: dict[str, ExtendedGraph] = {}
        for tr in instance.train_ids:
            g = graphs[tr]
            if g.entry is None:
                try:
                    g = restrict_to_demand(g, instance.demand[tr])
                except EmptyGraph as exc:
                    raise NoRoute(f"train {tr} has no entry->exit path: {exc}") from exc
            self.graphs[tr] = g
        self.t_out = {tr: float(instance.demand[tr].exit_window[1]) for tr in instance.train_ids}
        self.windows = {tr: time_windows(self.graphs[tr], instance.demand[tr]) for tr in instance.train_ids}
        self._partial: dict = {}

    @property
    def trains(self) -> list[str]:
        return self.instance.train_ids

    @cached_property
    def segments(self) -> list[TrackSegment]:
        return track_segments(self.instance.network)

    def bounds(self, key: Key) -> tuple[float, float]:
        kind = key[0]
        if kind in BINARY_KINDS:
            return (0.0, 1.0)
        lo, hi = self.windows[key[1]].get(key[2], (0.0, self.t_out[key[1]]))
        return (lo, self.t_out[key[1]]) if kind == "r" else (lo, hi)

    @cached_property
    def _out(self) -> dict[str, dict[str, list[str]]]:
        net = self.instance.network
        out = {}
        for tr, g in self.graphs.items():
            adj: dict[str, list[str]] = {}
            for e in sorted(g.base_edges):
                adj.setdefault(net.edge[e].source, []).append(e)
            out[tr] = adj
        return out

    def out_edges(self, tr: str, v: str) -> list[str]:
        return self._out[tr].get(v, [])

    def tail_speeds(self, tr: str, edge_id: str) -> list[float]:
        g = self.graphs[tr]
        return sorted({g.edges[k].p1 for k in g.by_base.get(edge_id, ())})

    def speed_indicator(self, tr: str, edge_id: str, p: float) -> list[Key]:
        g = self.graphs[tr]
        return [("y", tr, k) for k in g.by_base.get(edge_id, ()) if g.edges[k].p1 == p]

    def partial_times(self, tr: str, edge_id: str, s: float) -> tuple[np.ndarray, np.ndarray]:
        """Per extended edge on ``edge_id``: fastest time over [0, s], slowest over [s, l]."""
        ck = (tr, edge_id, round(s, 9))
        hit = self._partial.get(ck)
        if hit is not None:
            return hit
        net = self.instance.network
        edge = net.edge[edge_id]
        train = self.instance.train[tr]
        g = self.graphs[tr]
        ks = g.by_base[edge_id]
        n = len(ks)
        s = min(max(s, 0.0), edge.length)
        limit = min(train.max_speed, edge.speed_limit)
        floor = min(self.config.v_floor, 0.5 * limit)
        length = np.full(n, edge.length)
        v1 = np.array([min(g.edges[k].p1, limit) for k in ks])
        v2 = np.array([min(g.edges[k].p2, limit) for k in ks])
        lam = np.zeros(n)
        sarr = np.full(n, s)
        tmin = kinematics.batch_times(FASTEST, length, v1, v2, lam, sarr, limit,
                                      train.acceleration, train.deceleration, floor)
        if s >= edge.length:
            tmax = np.zeros(n)
        elif edge.stop_allowed:
            tmax = np.full(n, np.inf)
        else:
            tmax = kinematics.batch_times(SLOWEST, length, v1, v2, sarr, length, limit,
                                          train.acceleration, train.deceleration, floor)
        self._partial[ck] = (tmin, tmax)
        return tmin, tmax

    def front_points(self, tr: str, start: str, distance: float, first_edge: str | None = None) -> list[FrontPoint]:
        """Every place the front can be after moving ``distance`` metres forward from ``start``.

        Edge sequences are minimal (the last edge is needed to cover the
        distance). Routes ending at the exit before covering it yield an
        exit point instead.
        """
        net = self.instance.network
        exit_v = self.graphs[tr].exit
        limit = self.config.max_release_paths
        points: list[FrontPoint] = []

        def walk(v, done, path, visited):
            if v == exit_v:
                points.append(FrontPoint(tuple(path), 0.0, True))
            else:
                choices = [first_edge] if (first_edge is not None and not path) else self.out_edges(tr, v)
                for e in choices:
                    edge = net.edge[e]
                    if edge.target in visited:
                        continue
                    total = done + edge.length
                    if total >= distance - 1e-9:
                        points.append(FrontPoint(tuple(path + [e]), min(distance - done, edge.length)))
                    else:
                        walk(edge.target, total, path + [e], visited | {edge.target})
                    if len(points) > limit:
                        break
            if len(points) > limit:
                raise EnumerationLimitExceeded(
                    f"train {tr}: more than {limit} forward paths of {distance:g} m from vertex {start}")

        walk(start, 0.0, [], {start})
        return points


def _dijkstra(sources, succ):
    dist = dict.fromkeys(sources, 0.0)
    heap = [(0.0, n) for n in sources]
    heapq.heapify(heap)
    while heap:
        t, n = heapq.heappop(heap)
        if t > dist[n]:
            continue
        for m, w in succ.get(n, ()):
            if t + w < dist.get(m, math.inf):
                dist[m] = t + w
                heapq.heappush(heap, (t + w, m))
    return dist


def time_windows(graph: ExtendedGraph, demand) -> dict[str, tuple[float, float]]:
    """Earliest and latest front times per vertex from fastest times to and from it.

    Vertices that cannot lie on any route meeting the windows keep the
    trivial range, which stays valid because every row touching an unused
    vertex is switched off.
    """
    fwd, bwd = {}, {}
    for eps in graph.edges:
        fwd.setdefault((eps.source, eps.p1), []).append(((eps.target, eps.p2), eps.tau_min))
        bwd.setdefault((eps.target, eps.p2), []).append(((eps.source, eps.p1), eps.tau_min))
    early = _dijkstra([graph.entry], fwd)
    exits = [(graph.exit, p) for p in graph.speed_sets[graph.exit].speeds]
    late = _dijkstra(exits, bwd)
    t_in, t_out = demand.entry_window[0], demand.exit_window[1]
    best_in: dict[str, float] = {}
    best_out: dict[str, float] = {}
    for (v, _), t in early.items():
        best_in[v] = min(best_in.get(v, math.inf), t)
    for (v, _), t in late.items():
        best_out[v] = min(best_out.get(v, math.inf), t)
    out = {}
    for v in graph.vertices:
        lo, hi = t_in + best_in.get(v, 0.0), t_out - best_out.get(v, 0.0)
        out[v] = (lo, hi) if lo <= hi else (0.0, t_out)
    return out


def passage_rows(ctx: ModelContext, tr: str, point: FrontPoint, target: Key, guards: Sequence[Guard],
                 tag: str) -> list[LinearConstraint]:
    """Rows forcing ``target >=`` the time train ``tr``'s front passes ``point``.

    Active only if the train uses every edge leading to the point.
    """
    guards = list(guards) + [var_guard(("x", tr, e)) for e in point.edges]
    if point.at_exit:
        body = [(target, 1.0), (("d", tr, ctx.graphs[tr].exit), -1.0)]
        return [implication(body, ">=", 0.0, guards, ctx.bounds, f"{tag}:exit")]
    edge = ctx.instance.network.edge[point.edges[-1]]
    ks = ctx.graphs[tr].by_base[edge.id]
    tmin, tmax = ctx.partial_times(tr, edge.id, point.offset)
    rows = []
    body = [(target, 1.0), (("d", tr, edge.source), -1.0)]
    body += [(("y", tr, k), -float(t)) for k, t in zip(ks, tmin)]
    rows.append(implication(body, ">=", 0.0, guards, ctx.bounds, f"{tag}:lb1"))
    if np.all(np.isfinite(tmax)):
        body = [(target, 1.0), (("a", tr, edge.target), -1.0)]
        body += [(("y", tr, k), float(t)) for k, t in zip(ks, tmax)]
        rows.append(implication(body, ">=", 0.0, guards, ctx.bounds, f"{tag}:lb2"))
    return rows


def path_tag(edges: Sequence[str]) -> str:
    return "/".join(edges) if edges else "-"


# -- model handle ---------------------------------------------------------------

class ModelHandle:
    """Backend model plus the bookkeeping needed to add tagged rows incrementally."""

    def __init__(self, ctx: ModelContext, backend: SolverBackend):
        self.ctx = ctx
        self.backend = backend
        self.vars = VariableIndex()
        self.constraints: list[LinearConstraint] = []
        self.tags: set[str] = set()
        self.objective: dict[Key, float] = {}
        self.objective_offset = 0.0

    def add_variable(self, key: Key) -> int:
        lb, ub = self.ctx.bounds(key)
        col = self.backend.add_variable(lb, ub, binary=key[0] in BINARY_KINDS, name=key_name(key))
        self.vars.register(key, col)
        return col

    def ensure_variable(self, key: Key) -> bool:
        """Create ``key`` if missing; True if it was created."""
        if key in self.vars:
            return False
        self.add_variable(key)
        return True

    def add(self, con: LinearConstraint) -> bool:
        """Add ``con`` unless a row with its tag exists."""
        if con.tag in self.tags:
            return False
        idx = [self.vars.column(k) for k, _ in con.terms]
        coefs = [c for _, c in con.terms]
        lb = con.rhs if con.sense in (">=", "=") else -np.inf
        ub = con.rhs if con.sense in ("<=", "=") else np.inf
        self.backend.add_row(idx, coefs, lb, ub)
        self.tags.add(con.tag)
        self.constraints.append(con)
        return True

    def add_all(self, cons: Iterable[LinearConstraint]) -> int:
        return sum(self.add(c) for c in cons)

    def set_objective(self, coefs: Mapping[Key, float], offset: float) -> None:
        self.objective = dict(coefs)
        self.objective_offset = float(offset)
        self.backend.set_objective({self.vars.column(k): c for k, c in coefs.items()}, offset)

    def solve(self, gap_abs: float, time_limit: float | None) -> BackendSolution:
        sol = self.backend.solve(gap_abs=gap_abs, time_limit=time_limit)
        if sol.values is not None:
            sol = self.backend.polish(sol)
        return sol

    def values(self, sol: BackendSolution) -> dict[Key, float]:
        return {k: float(sol.values[i]) for i, k in enumerate(self.vars.keys)}

    def dump(self) -> str:
        """One line per constraint: ``tag | terms | sense | rhs``."""
        return "\n".join(c.format() for c in self.constraints) + ("\n" if self.constraints else "")

    def write_lp(self, path: str) -> None:
        self.backend.write_lp(path)

    def count_by_family(self) -> dict[str, int]:
        out: dict[str, int] = {}
        for c in self.constraints:
            out[c.family] = out.get(c.family, 0) + 1
        return out


# -- base model -------------------------------------------------------------------

def big_M(instance: Instance, train: str) -> float:
    """The horizon constant t_out_max of ``train``'s demand."""
    return float(instance.demand[train].exit_window[1])


def build_graphs(instance: Instance, config: SolveConfig) -> dict[str, ExtendedGraph]:
    graphs = {}
    for tr in instance.train_ids:
        d = instance.demand[tr]
        extra = {d.entry_vertex: d.entry_speed} if d.entry_speed > 0 else None
        g = build_extended_graph(instance.train[tr], instance.network, config.delta_v,
                                 v_floor=config.v_floor, extra_speeds=extra, stations=instance.stations)
        try:
            graphs[tr] = restrict_to_demand(g, d)
        except EmptyGraph as exc:
            raise NoRoute(f"train {tr} has no entry->exit path: {exc}") from exc
    return graphs


def _train_variables(h: ModelHandle, tr: str) -> None:
    g = h.ctx.graphs[tr]
    for e in sorted(g.base_edges):
        h.add_variable(("x", tr, e))
    for k in range(len(g.edges)):
        h.add_variable(("y", tr, k))
    for v in sorted(g.vertices):
        for kind in ("a", "d", "r"):
            h.add_variable((kind, tr, v))


def routing_rows(ctx: ModelContext, tr: str) -> list[LinearConstraint]:
    g = ctx.graphs[tr]
    net = ctx.instance.network
    v_in, v_out = g.entry[0], g.exit
    rows = []
    for e in sorted(g.base_edges):
        body = [(("x", tr, e), 1.0)] + [(("y", tr, k), -1.0) for k in g.by_base[e]]
        rows.append(make_constraint(body, "=", 0.0, f"link:{tr}:{e}"))
    out_in = [e for e in sorted(g.base_edges) if net.edge[e].source == v_in]
    in_out = [e for e in sorted(g.base_edges) if net.edge[e].target == v_out]
    rows.append(make_constraint([(("x", tr, e), 1.0) for e in out_in], "=", 1.0, f"boundary_flow:{tr}:entry"))
    rows.append(make_constraint([(("x", tr, e), 1.0) for e in in_out], "=", 1.0, f"boundary_flow:{tr}:exit"))
    for v in sorted(g.vertices):
        if v in (v_in, v_out):
            continue
        for p in g.speed_sets[v].speeds:
            inc = g.into.get((v, p), [])
            out = g.out_of.get((v, p), [])
            body = [(("y", tr, k), 1.0) for k in inc] + [(("y", tr, k), -1.0) for k in out]
            if body:
                rows.append(make_constraint(body, "=", 0.0, f"flow:{tr}:{v}:{p:.6f}"))
    for v in sorted(g.vertices):
        ins = [e for e in sorted(g.base_edges) if net.edge[e].target == v]
        outs = [e for e in sorted(g.base_edges) if net.edge[e].source == v]
        if len(ins) > 1:
            rows.append(make_constraint([(("x", tr, e), 1.0) for e in ins], "<=", 1.0, f"degree:{tr}:{v}:in"))
        if len(outs) > 1:
            rows.append(make_constraint([(("x", tr, e), 1.0) for e in outs], "<=", 1.0, f"degree:{tr}:{v}:out"))
    return rows


def travel_time_rows(ctx: ModelContext, tr: str) -> list[LinearConstraint]:
    g = ctx.graphs[tr]
    net = ctx.instance.network
    t_out = ctx.t_out[tr]
    rows = []
    for e in sorted(g.base_edges):
        edge = net.edge[e]
        ks = g.by_base[e]
        head = [(("a", tr, edge.target), 1.0), (("d", tr, edge.source), -1.0)]
        guard = [var_guard(("x", tr, e))]
        body = head + [(("y", tr, k), -g.edges[k].tau_min) for k in ks]
        rows.append(implication(body, ">=", 0.0, guard, ctx.bounds, f"travel_min:{tr}:{e}"))
        taus = [g.edges[k].tau_max for k in ks]
        # an upper bound at or beyond the horizon can never bind
        if any(t < t_out for t in taus):
            body = head + [(("y", tr, k), -min(t, t_out)) for k, t in zip(ks, taus)]
            rows.append(implication(body, "<=", 0.0, guard, ctx.bounds, f"travel_max:{tr}:{e}"))
    d = ctx.instance.demand[tr]
    for v in sorted(g.vertices):
        a, dep = ("a", tr, v), ("d", tr, v)
        rows.append(make_constraint([(dep, 1.0), (a, -1.0)], ">=", 0.0, f"dwell_order:{tr}:{v}"))
        if v == g.entry[0]:
            if d.entry_speed > 0:
                rows.append(make_constraint([(dep, 1.0), (a, -1.0)], "<=", 0.0, f"standstill:{tr}:{v}"))
            continue
        stand = g.into.get((v, 0.0), []) if 0.0 in g.speed_sets[v].speeds else []
        body = [(dep, 1.0), (a, -1.0)] + [(("y", tr, k), -t_out) for k in stand]
        rows.append(make_constraint(body, "<=", 0.0, f"standstill:{tr}:{v}"))
    return rows


def window_rows(ctx: ModelContext, tr: str) -> list[LinearConstraint]:
    d = ctx.instance.demand[tr]
    g = ctx.graphs[tr]
    a_in, r_out = ("a", tr, g.entry[0]), ("r", tr, g.exit)
    return [
        make_constraint([(a_in, 1.0)], ">=", d.entry_window[0], f"entry_window:{tr}:lo"),
        make_constraint([(a_in, 1.0)], "<=", d.entry_window[1], f"entry_window:{tr}:hi"),
        make_constraint([(r_out, 1.0)], ">=", d.exit_window[0], f"exit_window:{tr}:lo"),
        make_constraint([(r_out, 1.0)], "<=", d.exit_window[1], f"exit_window:{tr}:hi"),
    ]


def track_release_rows(ctx: ModelContext, tr: str) -> list[LinearConstraint]:
    g = ctx.graphs[tr]
    length = ctx.instance.train[tr].length
    rows = []
    for u in sorted(g.vertices):
        for pt in ctx.front_points(tr, u, length):
            rows += passage_rows(ctx, tr, pt, ("r", tr, u), [], f"track_release:{tr}:{u}:{path_tag(pt.edges)}")
    return rows


def stop_layout(ctx: ModelContext, tr: str) -> list[dict[str, list[tuple[str, ...]]]]:
    """Per stop request: candidate vertex -> station chains usable by this train."""
    g = ctx.graphs[tr]
    inst = ctx.instance
    train = inst.train[tr]
    layout = []
    for i, req in enumerate(inst.demand[tr].stops):
        station = inst.station[req.station]
        cands = {}
        for v in sorted(g.stop_vertices.get(req.station, ())):
            if not g.into.get((v, 0.0)):
                continue
            chains = [c for c in station_chains(inst.network, station, v, train.length)
                      if all(e in g.base_edges for e in c)]
            if chains:
                cands[v] = chains
        if not cands:
            raise UnsatisfiableStop(f"train {tr}: no usable stop position for stop {i} at {req.station}")
        layout.append(cands)
    return layout


def timetable_rows(h: ModelHandle, tr: str) -> list[LinearConstraint]:
    ctx = h.ctx
    g = ctx.graphs[tr]
    reqs = ctx.instance.demand[tr].stops
    layout = stop_layout(ctx, tr)
    rows = []
    for i, (req, cands) in enumerate(zip(reqs, layout)):
        for v in cands:
            h.add_variable(("stop", tr, i, v))
        rows.append(make_constraint([(("stop", tr, i, v), 1.0) for v in cands], "=", 1.0, f"stop_choice:{tr}:{i}"))
        for v, chains in cands.items():
            s = ("stop", tr, i, v)
            body = [(s, 1.0)] + [(("y", tr, k), -1.0) for k in g.into[(v, 0.0)]]
            rows.append(make_constraint(body, "<=", 0.0, f"stop_on_route:{tr}:{i}:{v}"))
            if len(chains) == 1:
                for e in chains[0]:
                    rows.append(make_constraint([(s, 1.0), (("x", tr, e), -1.0)], "<=", 0.0,
                                                f"stop_chain:{tr}:{i}:{v}:{e}"))
            else:
                for j, chain in enumerate(chains):
                    c = ("c", tr, i, v, j)
                    h.add_variable(c)
                    for e in chain:
                        rows.append(make_constraint([(c, 1.0), (("x", tr, e), -1.0)], "<=", 0.0,
                                                    f"stop_chain:{tr}:{i}:{v}:{j}:{e}"))
                body = [(s, 1.0)] + [(("c", tr, i, v, j), -1.0) for j in range(len(chains))]
                rows.append(make_constraint(body, "<=", 0.0, f"stop_chain:{tr}:{i}:{v}"))
            a, dep = ("a", tr, v), ("d", tr, v)
            guard = [var_guard(s)]
            pre = f"stop_time:{tr}:{i}:{v}"
            rows.append(implication([(a, 1.0)], ">=", req.arrival_window[0], guard, ctx.bounds, f"{pre}:arr_lo"))
            rows.append(implication([(a, 1.0)], "<=", req.arrival_window[1], guard, ctx.bounds, f"{pre}:arr_hi"))
            rows.append(implication([(dep, 1.0)], ">=", req.departure_window[0], guard, ctx.bounds, f"{pre}:dep_lo"))
            rows.append(implication([(dep, 1.0)], "<=", req.departure_window[1], guard, ctx.bounds, f"{pre}:dep_hi"))
            rows.append(implication([(dep, 1.0), (a, -1.0)], ">=", req.min_dwell, guard, ctx.bounds, f"{pre}:dwell"))
        if i > 0:
            for v in layout[i - 1]:
                for w in cands:
                    body = [(("a", tr, w), 1.0), (("d", tr, v), -1.0)]
                    guards = [var_guard(("stop", tr, i - 1, v)), var_guard(("stop", tr, i, w))]
                    rows.append(implication(body, ">=", 0.0, guards, ctx.bounds, f"stop_sequence:{tr}:{i}:{v}:{w}"))
    return rows


def objective_terms(ctx: ModelContext) -> tuple[dict[Key, float], float]:
    """Weighted mean exit delay; plain mean when all weights are zero."""
    trains = ctx.trains
    if not trains:
        return {}, 0.0
    weights = {tr: ctx.instance.demand[tr].weight for tr in trains}
    total = sum(weights.values())
    if total == 0:
        weights = {tr: 1.0 for tr in trains}
        total = float(len(trains))
    coefs, offset = {}, 0.0
    for tr in trains:
        w = weights[tr] / total
        if w:
            coefs[("r", tr, ctx.graphs[tr].exit)] = w
            offset -= w * ctx.instance.demand[tr].exit_window[0]
    return coefs, offset


def add_track_release(h: ModelHandle) -> int:
    return sum(h.add_all(track_release_rows(h.ctx, tr)) for tr in h.ctx.trains)


def add_timetable(h: ModelHandle) -> int:
    return sum(h.add_all(timetable_rows(h, tr)) for tr in h.ctx.trains)


def build_base_model(instance: Instance, graphs: Mapping[str, ExtendedGraph] | None, config: SolveConfig,
                     backend: SolverBackend | None = None) -> tuple[ModelHandle, VariableIndex]:
    """Everything except headway rows. ``graphs=None`` builds them from ``config``."""
    if graphs is None:
        graphs = build_graphs(instance, config)
    ctx = ModelContext(instance, graphs, config)
    h = ModelHandle(ctx, backend if backend is not None else make_backend(config.backend))
    for tr in ctx.trains:
        _train_variables(h, tr)
    for tr in ctx.trains:
        h.add_all(routing_rows(ctx, tr))
        h.add_all(travel_time_rows(ctx, tr))
        h.add_all(window_rows(ctx, tr))
    add_track_release(h)
    add_timetable(h)
    coefs, offset = objective_terms(ctx)
    h.set_objective(coefs, offset)
    log.debug("base model: %d vars, %d rows", len(h.vars), len(h.constraints))
    return h, h.vars
