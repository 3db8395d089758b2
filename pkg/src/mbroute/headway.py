"""Moving-block separation rows between pairs of trains.

Same direction: when ``f`` follows ``l`` over edge (u, v) and reaches u at
speed p, the rear of ``l`` must already be ``brake(p) + buffer`` metres past u.
Equivalently the front of ``l`` has passed the point that much plus its own
length further along its route, which reuses the front-passage rows of track
release. Opposite direction: one order binary per pair and track segment.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from mbroute.kinematics import braking_distance
from mbroute.model import (FrontPoint, LinearConstraint, ModelContext, ModelHandle, implication, make_constraint,
                           not_guard, passage_rows, path_tag, sum_guard, var_guard)
from mbroute.segments import TrackSegment

_ZERO = 1e-12


@dataclass(frozen=True)
class OrderedPairContext:
    follower: str
    leader: str
    edge: str

    def __post_init__(self):
        if self.follower == self.leader:
            raise ValueError("a train cannot follow itself")

    @property
    def order_key(self) -> tuple:
        return ("o", self.follower, self.leader, self.edge)


def clearance(ctx: ModelContext, follower: str, p: float) -> float:
    return braking_distance(p, ctx.instance.train[follower].deceleration) + ctx.config.buffer


def cover(lengths: Sequence[float], distance: float) -> tuple[int, float]:
    """Edges needed to cover ``distance`` and the offset into the last one.

    Returns ``(k, s)`` with k counted from 1; k = len(lengths) + 1 if the
    lengths run out first.
    """
    done = 0.0
    for k, length in enumerate(lengths, start=1):
        if done + length >= distance - 1e-9:
            return k, distance - done
        done += length
    return len(lengths) + 1, distance - done


def route_point(ctx: ModelContext, route: Sequence[str], start: int, distance: float) -> FrontPoint:
    """Where a front moving along ``route[start:]`` is after ``distance`` metres."""
    edge = ctx.instance.network.edge
    rest = list(route[start:])
    k, s = cover([edge[e].length for e in rest], distance)
    if k > len(rest):
        return FrontPoint(tuple(rest), 0.0, True)
    return FrontPoint(tuple(rest[:k]), min(s, edge[rest[k - 1]].length))


def same_direction_headway_constraints(ctx: ModelContext, follower: str, leader: str, edge: str, *,
                                       speeds: Sequence[float] | None = None,
                                       leader_route: Sequence[str] | None = None) -> list[LinearConstraint]:
    """Rows keeping ``follower`` behind ``leader`` on ``edge``.

    By default every follower speed at the tail and every onward path of the
    leader is covered; the lazy engine narrows both to the candidate's values.
    """
    pair = OrderedPairContext(follower, leader, edge)
    gf, gl = ctx.graphs[follower], ctx.graphs[leader]
    if edge not in gf.base_edges or edge not in gl.base_edges:
        return []
    e = ctx.instance.network.edge[edge]
    u, v = e.source, e.target
    o = var_guard(pair.order_key)
    leader_len = ctx.instance.train[leader].length
    target = ("a", follower, u)
    rows = []
    for p in (ctx.tail_speeds(follower, edge) if speeds is None else speeds):
        ind = ctx.speed_indicator(follower, edge, p)
        if not ind:
            continue
        tag = f"headway:{follower}:{leader}:{edge}:{p:.6f}"
        dist = clearance(ctx, follower, p)
        guards = [o, sum_guard(ind)]
        if dist <= _ZERO:
            body = [(target, 1.0), (("r", leader, u), -1.0)]
            rows.append(implication(body, ">=", 0.0, guards + [var_guard(("x", leader, edge))],
                                    ctx.bounds, f"{tag}:rear"))
            continue
        if leader_route is None:
            points = ctx.front_points(leader, u, dist + leader_len, first_edge=edge)
        else:
            points = [route_point(ctx, leader_route, list(leader_route).index(edge), dist + leader_len)]
        for pt in points:
            rows += passage_rows(ctx, leader, pt, target, guards, f"{tag}:{path_tag(pt.edges)}")
    body = [(("a", follower, v), 1.0), (("r", leader, v), -1.0)]
    guards = [o, var_guard(("x", follower, edge)), var_guard(("x", leader, edge))]
    rows.append(implication(body, ">=", 0.0, guards, ctx.bounds, f"headway_head:{follower}:{leader}:{edge}"))
    return rows


def ordering_rows(ctx: ModelContext, handle: ModelHandle, a: str, b: str, edge: str) -> list[LinearConstraint]:
    """Exactly one order when both trains use ``edge``; same order on consecutive shared edges."""
    a, b = sorted((a, b))
    oab, oba = ("o", a, b, edge), ("o", b, a, edge)
    xa, xb = ("x", a, edge), ("x", b, edge)
    rows = [
        make_constraint([(oab, 1.0), (oba, 1.0), (xa, -1.0), (xb, -1.0)], ">=", -1.0, f"order_pair:{a}:{b}:{edge}:lo"),
        make_constraint([(oab, 1.0), (oba, 1.0)], "<=", 1.0, f"order_pair:{a}:{b}:{edge}:hi"),
    ]
    net = ctx.instance.network
    e = net.edge[edge]
    shared = ctx.graphs[a].base_edges & ctx.graphs[b].base_edges
    links = [(edge, n.id) for n in net.out_edges[e.target] if n.id in shared]
    links += [(p.id, edge) for p in net.in_edges[e.source] if p.id in shared]
    for e1, e2 in sorted(links):
        other = e2 if e1 == edge else e1
        if ("o", a, b, other) not in handle.vars:
            continue
        xs = [(("x", t, ee), -1.0) for t in (a, b) for ee in (e1, e2)]
        for f, l in ((a, b), (b, a)):
            body = [(("o", f, l, e2), 1.0), (("o", f, l, e1), -1.0)] + xs
            rows.append(make_constraint(body, ">=", -4.0, f"order_chain:{f}:{l}:{e1}:{e2}"))
    return rows


def _segment_edges(ctx, tr, seg, direction):
    g = ctx.graphs[tr]
    edges = seg.edges if direction > 0 else seg.reverse
    return [e for e in edges if e in g.base_edges]


def _entries(ctx, tr, seg, edges):
    net = ctx.instance.network
    starts = set(seg.ends) | {ctx.graphs[tr].entry[0]}
    return [e for e in edges if net.edge[e].source in starts]


def _exits(ctx, tr, seg, edges):
    net = ctx.instance.network
    ends = set(seg.ends) | {ctx.graphs[tr].exit}
    return [e for e in edges if net.edge[e].target in ends]


def segment_order_key(t1: str, t2: str, seg: TrackSegment) -> tuple:
    a, b = sorted((t1, t2))
    return ("q", a, b, seg.id)


def opposite_direction_constraints(ctx: ModelContext, t1: str, t2: str, segment: TrackSegment, *,
                                   used: dict | None = None) -> list[LinearConstraint]:
    """Either t1 has fully left ``segment`` before t2 enters it, or the reverse.

    ``used`` maps each train to its (entry edge, exit edge) in the segment and
    restricts the rows to those edges.
    """
    t1, t2 = sorted((t1, t2))
    q = segment_order_key(t1, t2, segment)
    net = ctx.instance.network
    rows = []
    for direction in (1, -1):
        e1s = _segment_edges(ctx, t1, segment, direction)
        e2s = _segment_edges(ctx, t2, segment, -direction)
        if not e1s or not e2s:
            continue
        in1, out1 = _entries(ctx, t1, segment, e1s), _exits(ctx, t1, segment, e1s)
        in2, out2 = _entries(ctx, t2, segment, e2s), _exits(ctx, t2, segment, e2s)
        if used is not None:
            if segment.direction(used[t1][0]) != direction:
                continue
            in1, out1 = [used[t1][0]], [used[t1][1]]
            in2, out2 = [used[t2][0]], [used[t2][1]]
        for first, second, exits, entries, guard in ((t1, t2, out1, in2, var_guard(q)),
                                                    (t2, t1, out2, in1, not_guard(q))):
            for ex in exits:
                for en in entries:
                    body = [(("a", second, net.edge[en].source), 1.0), (("r", first, net.edge[ex].target), -1.0)]
                    guards = [guard, var_guard(("x", first, ex)), var_guard(("x", second, en))]
                    tag = f"opposite:{t1}:{t2}:{segment.id}:{first}:{ex}:{en}"
                    rows.append(implication(body, ">=", 0.0, guards, ctx.bounds, tag))
    return rows


def enumerate_all_headway_constraints(ctx: ModelContext) -> list[LinearConstraint]:
    """The eager row set: every ordered pair, shared edge and follower speed, plus every segment."""
    trains = ctx.trains
    rows = []
    for i, a in enumerate(trains):
        for b in trains[i + 1:]:
            shared = sorted(ctx.graphs[a].base_edges & ctx.graphs[b].base_edges)
            for e in shared:
                rows += same_direction_headway_constraints(ctx, a, b, e)
                rows += same_direction_headway_constraints(ctx, b, a, e)
            for seg in ctx.segments:
                rows += opposite_direction_constraints(ctx, a, b, seg)
    return rows


def ensure_order_variables(handle: ModelHandle, a: str, b: str, edge: str) -> int:
    """Create both order binaries for (a, b, edge) and their side rows; returns rows added."""
    a, b = sorted((a, b))
    if ("o", a, b, edge) in handle.vars:
        return 0
    handle.add_variable(("o", a, b, edge))
    handle.add_variable(("o", b, a, edge))
    return handle.add_all(ordering_rows(handle.ctx, handle, a, b, edge))


def add_headway_rows(handle: ModelHandle, rows: Sequence[LinearConstraint]) -> tuple[int, int]:
    """Add separation rows, creating order variables on first use.

    Returns (headway rows added, ordering side rows added).
    """
    added = support = 0
    for row in rows:
        if row.tag in handle.tags:
            continue
        for key, _ in row.terms:
            if key[0] == "o":
                support += ensure_order_variables(handle, key[1], key[2], key[3])
            elif key[0] == "q":
                handle.ensure_variable(key)
        added += handle.add(row)
    return added, support
