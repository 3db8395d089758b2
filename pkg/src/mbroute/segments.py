"""Bidirectional track segments: maximal chains of paired edges.

Opposing traffic is serialised per segment, so a chain only continues through
vertices where exactly two tracks meet and both are paired.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

from mbroute.instance import Network


@dataclass(frozen=True)
class TrackSegment:
    id: str
    edges: tuple[str, ...]
    reverse: tuple[str, ...]
    ends: tuple[str, str]

    @cached_property
    def forward_set(self) -> frozenset:
        return frozenset(self.edges)

    @cached_property
    def backward_set(self) -> frozenset:
        return frozenset(self.reverse)

    def direction(self, edge_id: str) -> int:
        """+1 for the forward chain, -1 for the reverse one, 0 if not in the segment."""
        if edge_id in self.forward_set:
            return 1
        if edge_id in self.backward_set:
            return -1
        return 0


def track_segments(network: Network) -> list[TrackSegment]:
    edge = network.edge
    paired = {e.id for e in network.edges if e.reverse_of is not None and e.reverse_of in edge}
    tracks: dict[str, set] = {v: set() for v in network.vertices}
    for e in network.edges:
        key = frozenset((e.id, e.reverse_of)) if e.id in paired else frozenset((e.id,))
        tracks[e.source].add(key)
        tracks[e.target].add(key)

    def passable(v):
        ts = tracks[v]
        return len(ts) == 2 and all(len(t) == 2 for t in ts)

    seen: set[str] = set()
    segments = []
    for start in sorted(paired):
        if start in seen:
            continue
        chain = [start]
        seen.update((start, edge[start].reverse_of))
        # extend forwards from the head, then backwards from the tail
        for forward in (True, False):
            while True:
                cur = chain[-1] if forward else chain[0]
                v = edge[cur].target if forward else edge[cur].source
                if not passable(v):
                    break
                nxt = None
                for e in (network.out_edges[v] if forward else network.in_edges[v]):
                    if e.id in paired and e.id not in seen:
                        nxt = e.id
                if nxt is None:
                    break
                seen.update((nxt, edge[nxt].reverse_of))
                if forward:
                    chain.append(nxt)
                else:
                    chain.insert(0, nxt)
        reverse = tuple(edge[e].reverse_of for e in reversed(chain))
        ends = (edge[chain[0]].source, edge[chain[-1]].target)
        segments.append(TrackSegment(f"seg_{min(chain + list(reverse))}", tuple(chain), reverse, ends))
    return sorted(segments, key=lambda s: s.id)
