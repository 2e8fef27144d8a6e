"""Shortest paths and iterative link-disjoint shortest paths on the substrate.

Ties are broken deterministically: among equal-metric paths prefer fewer hops,
then the lexicographically smallest node-id sequence.  Disjoint paths are
computed greedily by removing the links of every previously returned path,
which matches a sequential k-th-disjoint-path loop (a flow-based method could
find disjoint sets the greedy loop misses; that is accepted by design).
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass
from typing import TYPE_CHECKING, Callable, Literal

if TYPE_CHECKING:
    from .topology import SubstrateLink, SubstrateNetwork

Metric = Literal["km", "hops"]
LinkFilter = Callable[["SubstrateLink"], bool]


@dataclass(frozen=True)
class SubstratePath:
    """A simple path: node sequence plus the link ids joining it."""

    nodes: tuple[int, ...]
    links: tuple[int, ...]
    length_km: float

    @property
    def hops(self) -> int:
        return len(self.links)

    def __post_init__(self) -> None:
        if len(self.nodes) != len(self.links) + 1:
            raise ValueError("node/link sequence lengths are inconsistent")
        if len(set(self.nodes)) != len(self.nodes):
            raise ValueError("path repeats a node")
        if len(set(self.links)) != len(self.links):
            raise ValueError("path repeats a link")


def shortest_path(
    net: "SubstrateNetwork",
    s: int,
    t: int,
    metric: Metric = "km",
    link_filter: LinkFilter | None = None,
) -> SubstratePath | None:
    """Minimum-metric simple path from s to t over links passing the filter.

    Returns None when t is unreachable under the filter.
    """
    if s == t:
        raise ValueError("endpoints must differ")
    use_km = metric == "km"
    if not use_km and metric != "hops":
        raise ValueError(f"unknown metric {metric!r}")
    # Heap keys are (cost, hops, node sequence): the first time a node is
    # settled its label is minimal in that order, and prefixes of optimal
    # paths are optimal, so plain label-setting stays exact.
    heap: list[tuple[float, int, tuple[int, ...], tuple[int, ...]]] = [(0.0, 0, (s,), ())]
    settled: set[int] = set()
    while heap:
        cost, hops, nseq, lseq = heapq.heappop(heap)
        node = nseq[-1]
        if node in settled:
            continue
        settled.add(node)
        if node == t:
            length = cost if use_km else sum(net.links[lid].length_km for lid in lseq)
            return SubstratePath(nseq, lseq, length)
        for link in net.incident(node):
            if link_filter is not None and not link_filter(link):
                continue
            nb = link.other(node)
            if nb in settled or nb in nseq:
                continue
            step = link.length_km if use_km else 1
            heapq.heappush(heap, (cost + step, hops + 1, nseq + (nb,), lseq + (link.id,)))
    return None


def k_disjoint_shortest_paths(
    net: "SubstrateNetwork",
    s: int,
    t: int,
    k: int,
    metric: Metric = "km",
    link_filter: LinkFilter | None = None,
) -> list[SubstratePath]:
    """Up to k pairwise link-disjoint paths, each shortest in its residual graph."""
    if k < 1:
        raise ValueError("k must be at least 1")
    paths: list[SubstratePath] = []
    used: set[int] = set()

    def residual_filter(link: "SubstrateLink") -> bool:
        if link.id in used:
            return False
        return link_filter(link) if link_filter is not None else True

    for _ in range(k):
        path = shortest_path(net, s, t, metric, residual_filter)
        if path is None:
            break
        paths.append(path)
        used.update(path.links)
    return paths
