"""Virtual network requests and the stochastic workload for dynamic campaigns.

Request graphs are Erdos-Renyi samples repaired to connectivity; an embedding
of a disconnected request is ill-posed, so components are joined with extra
links carrying the minimum bandwidth of the configured range.  All draws come
from named, purpose-specific RNG streams so different schemes can replay the
exact same workload.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Iterable

import numpy as np

_STREAM_IDS = {"structure": 0, "demands": 1, "arrivals": 2, "holding": 3}


@dataclass(frozen=True)
class VirtualNode:
    id: int
    cpu: int

    def __post_init__(self) -> None:
        if self.cpu <= 0:
            raise ValueError("virtual node demand must be positive")


@dataclass(frozen=True)
class VirtualLink:
    id: int
    u: int
    v: int
    bandwidth_gbps: float

    def __post_init__(self) -> None:
        if self.u == self.v:
            raise ValueError("virtual link endpoints must differ")
        if self.bandwidth_gbps <= 0:
            raise ValueError("virtual link demand must be positive")


@dataclass(frozen=True)
class VirtualNetworkRequest:
    id: int
    nodes: tuple[VirtualNode, ...]
    links: tuple[VirtualLink, ...]
    arrival_time: float = 0.0
    holding_time: float = 0.0

    def __post_init__(self) -> None:
        if not self.nodes:
            raise ValueError("request needs at least one virtual node")
        ids = {n.id for n in self.nodes}
        if len(ids) != len(self.nodes):
            raise ValueError("duplicate virtual node ids")
        pairs = set()
        for link in self.links:
            if link.u not in ids or link.v not in ids:
                raise ValueError("virtual link references an unknown node")
            pair = (min(link.u, link.v), max(link.u, link.v))
            if pair in pairs:
                raise ValueError("duplicate virtual link")
            pairs.add(pair)

    @property
    def departure_time(self) -> float:
        return self.arrival_time + self.holding_time


@dataclass(frozen=True)
class WorkloadConfig:
    node_range: tuple[int, int] = (2, 5)
    link_prob: float = 0.5
    cpu_range: tuple[int, int] = (7, 10)
    bandwidth_range: tuple[int, int] = (25, 250)
    arrival_rate: float = 1.0       # requests per second
    mean_holding: float = 60.0      # seconds
    request_count: int = 11000
    warmup_count: int = 1000
    seed: int = 0

    def __post_init__(self) -> None:
        for lo, hi in (self.node_range, self.cpu_range, self.bandwidth_range):
            if lo > hi or lo <= 0:
                raise ValueError("ranges must be non-empty and positive")
        if self.node_range[0] < 1:
            raise ValueError("requests need at least one node")
        if self.arrival_rate <= 0 or self.mean_holding <= 0:
            raise ValueError("arrival rate and mean holding must be positive")
        if not 0 <= self.link_prob <= 1:
            raise ValueError("link probability must be in [0, 1]")
        if not 0 <= self.warmup_count < self.request_count:
            raise ValueError("warm-up must be smaller than the request count")

    @property
    def load_erlang(self) -> float:
        return self.arrival_rate * self.mean_holding


@dataclass
class RngStreams:
    """One independent generator per draw purpose."""

    structure: np.random.Generator
    demands: np.random.Generator
    arrivals: np.random.Generator
    holding: np.random.Generator

    @classmethod
    def from_seed(cls, seed: int) -> "RngStreams":
        gens = {
            name: np.random.default_rng(np.random.SeedSequence([seed, idx]))
            for name, idx in _STREAM_IDS.items()
        }
        return cls(**gens)


def connected_pairs(rng: np.random.Generator, n: int, link_prob: float) -> list[tuple[int, int]]:
    """Erdos-Renyi edge sample on n nodes, repaired to a connected graph.

    Repair links join components in ascending order of their smallest member,
    each attaching to the first component's representative.
    """
    pairs = [
        (i, j)
        for i in range(n)
        for j in range(i + 1, n)
        if rng.random() < link_prob
    ]
    parent = list(range(n))

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for u, v in pairs:
        parent[find(u)] = find(v)
    components: dict[int, int] = {}
    for node in range(n):
        root = find(node)
        components.setdefault(root, node)
    reps = sorted(components.values())
    for rep in reps[1:]:
        pairs.append((reps[0], rep))
    return pairs


def generate_vnr(
    streams: RngStreams,
    config: WorkloadConfig,
    vnr_id: int = 0,
    arrival_time: float = 0.0,
    holding_time: float = 0.0,
) -> VirtualNetworkRequest:
    """Sample one request; repair links carry the minimum bandwidth demand."""
    lo, hi = config.node_range
    n = int(streams.structure.integers(lo, hi + 1))
    pairs = connected_pairs(streams.structure, n, config.link_prob)
    n_sampled = len(pairs)  # includes repair links appended at the tail
    cpu = streams.demands.integers(config.cpu_range[0], config.cpu_range[1] + 1, size=n)
    nodes = tuple(VirtualNode(i, int(cpu[i])) for i in range(n))

    # Count how many pairs came from the coin flips (repair links follow them
    # and take the minimum demand instead of a drawn one).
    n_repair = 0
    seen: set[int] = set()
    comps = _component_count(n, pairs)
    # pairs list = coins first, then repairs; recompute split point directly:
    # repairs are exactly the links appended beyond the coin-flip prefix.
    del seen, comps
    coin_links = _coin_prefix_length(n, pairs)
    n_repair = n_sampled - coin_links
    blo, bhi = config.bandwidth_range
    drawn = streams.demands.integers(blo, bhi + 1, size=coin_links)
    links = []
    for idx, (u, v) in enumerate(pairs):
        bw = int(drawn[idx]) if idx < coin_links else blo
        links.append(VirtualLink(idx, u, v, float(bw)))
    return VirtualNetworkRequest(vnr_id, nodes, tuple(links), arrival_time, holding_time)


def _component_count(n: int, pairs: list[tuple[int, int]]) -> int:
    parent = list(range(n))

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for u, v in pairs:
        parent[find(u)] = find(v)
    return len({find(i) for i in range(n)})


def _coin_prefix_length(n: int, pairs: list[tuple[int, int]]) -> int:
    """Length of the prefix of ``pairs`` generated by coin flips.

    connected_pairs appends exactly (components - 1) repair links, where the
    component count is taken over the coin-flip prefix alone; recover the
    split by peeling repairs off the tail until the prefix needs them all.
    """
    total = len(pairs)
    for coin in range(total, -1, -1):
        repairs = total - coin
        if _component_count(n, pairs[:coin]) - 1 == repairs:
            return coin
    return total


@dataclass(frozen=True)
class WorkloadEvent:
    time: float
    kind: str  # "arrival" or "departure"
    vnr_id: int


@dataclass(frozen=True)
class Workload:
    config: WorkloadConfig
    vnrs: tuple[VirtualNetworkRequest, ...]
    events: tuple[WorkloadEvent, ...]

    @property
    def load_erlang(self) -> float:
        return self.config.load_erlang


def generate_workload(config: WorkloadConfig) -> Workload:
    """Poisson arrivals with exponential holding, plus per-request graphs."""
    streams = RngStreams.from_seed(config.seed)
    count = config.request_count
    inter = streams.arrivals.exponential(scale=1.0 / config.arrival_rate, size=count)
    arrivals = np.cumsum(inter)
    holdings = streams.holding.exponential(scale=config.mean_holding, size=count)
    vnrs = tuple(
        generate_vnr(streams, config, i, float(arrivals[i]), float(holdings[i]))
        for i in range(count)
    )
    events = []
    for vnr in vnrs:
        events.append(WorkloadEvent(vnr.arrival_time, "arrival", vnr.id))
        events.append(WorkloadEvent(vnr.departure_time, "departure", vnr.id))
    # Departures sort ahead of arrivals at (measure-zero) exact time ties.
    events.sort(key=lambda e: (e.time, e.kind != "departure", e.vnr_id))
    return Workload(config, vnrs, tuple(events))


def dump_workload(workload: Workload) -> str:
    """Line-oriented text form for cross-run comparisons; floats keep full precision."""
    lines = [f"workload {len(workload.vnrs)} {workload.load_erlang!r}"]
    for vnr in workload.vnrs:
        lines.append(f"vnr {vnr.id} {vnr.arrival_time!r} {vnr.holding_time!r}")
        for node in vnr.nodes:
            lines.append(f"node {node.id} {node.cpu}")
        for link in vnr.links:
            lines.append(f"link {link.id} {link.u} {link.v} {link.bandwidth_gbps!r}")
    return "\n".join(lines) + "\n"


def load_workload(text: str, config: WorkloadConfig | None = None) -> Workload:
    """Inverse of dump_workload; the config is advisory metadata when given."""
    vnrs: list[VirtualNetworkRequest] = []
    cur_id = None
    cur_arrival = cur_holding = 0.0
    nodes: list[VirtualNode] = []
    links: list[VirtualLink] = []

    def flush() -> None:
        if cur_id is not None:
            vnrs.append(
                VirtualNetworkRequest(cur_id, tuple(nodes), tuple(links), cur_arrival, cur_holding)
            )

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        try:
            if parts[0] == "workload":
                continue
            if parts[0] == "vnr":
                flush()
                cur_id = int(parts[1])
                cur_arrival = float(parts[2])
                cur_holding = float(parts[3])
                nodes, links = [], []
            elif parts[0] == "node":
                nodes.append(VirtualNode(int(parts[1]), int(parts[2])))
            elif parts[0] == "link":
                links.append(
                    VirtualLink(int(parts[1]), int(parts[2]), int(parts[3]), float(parts[4]))
                )
            else:
                raise ValueError(f"unknown record {parts[0]!r}")
        except (IndexError, ValueError) as exc:
            raise ValueError(f"workload line {lineno}: {exc}") from None
    flush()
    cfg = config if config is not None else WorkloadConfig(request_count=max(len(vnrs), 1))
    events = []
    for vnr in vnrs:
        events.append(WorkloadEvent(vnr.arrival_time, "arrival", vnr.id))
        events.append(WorkloadEvent(vnr.departure_time, "departure", vnr.id))
    events.sort(key=lambda e: (e.time, e.kind != "departure", e.vnr_id))
    return Workload(cfg, tuple(vnrs), tuple(events))
