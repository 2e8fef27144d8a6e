"""Frequency-slot bookkeeping for elastic optical links.

A link's spectrum is a fixed-width availability bitmap; a channel occupies the
same contiguous run of slot indices on every link of its path (continuity and
contiguity).  Candidate windows are scored by how many free boundary slots
they would strand, so a least-cost choice packs new channels against already
busy spectrum and keeps large free runs intact for later requests.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Iterator, Literal

if TYPE_CHECKING:
    from .routing import SubstratePath
    from .topology import SubstrateNetwork


class SpectrumError(Exception):
    """Base class for slot-grid errors."""


class NoFeasibleModulation(SpectrumError):
    """Path is longer than the reach of every modulation format."""


class NotACandidate(SpectrumError):
    """Window is not free on every link of the path."""


class OverlapError(SpectrumError):
    """Allocation would double-book at least one slot."""


class DoubleReleaseError(SpectrumError):
    """Allocation handle was already released."""


@dataclass(frozen=True)
class Modulation:
    name: str
    bits_per_hz: float
    reach_km: float


@dataclass(frozen=True)
class ModulationTable:
    """Ordered modulation formats plus grid parameters.

    Entries must be strictly increasing in spectral efficiency and strictly
    decreasing in reach, so "highest efficiency whose reach covers the path"
    is well defined.
    """

    entries: tuple[Modulation, ...]
    slot_width_ghz: float = 12.5
    guard_slots: int = 1

    def __post_init__(self) -> None:
        if not self.entries:
            raise ValueError("modulation table is empty")
        effs = [m.bits_per_hz for m in self.entries]
        reaches = [m.reach_km for m in self.entries]
        if any(b <= a for a, b in zip(effs, effs[1:])):
            raise ValueError("spectral efficiencies must be strictly increasing")
        if any(b >= a for a, b in zip(reaches, reaches[1:])):
            raise ValueError("reaches must be strictly decreasing")
        if self.slot_width_ghz <= 0:
            raise ValueError("slot width must be positive")
        if self.guard_slots < 0:
            raise ValueError("guard slots must be non-negative")

    def slot_capacity_gbps(self, mod: Modulation) -> float:
        return self.slot_width_ghz * mod.bits_per_hz


def default_modulation_table() -> ModulationTable:
    """BPSK/QPSK/8QAM/16QAM over a 12.5 GHz grid with a one-slot guard band."""
    return ModulationTable(
        entries=(
            Modulation("BPSK", 1.0, 4000.0),
            Modulation("QPSK", 2.0, 2000.0),
            Modulation("8QAM", 3.0, 1000.0),
            Modulation("16QAM", 4.0, 500.0),
        )
    )


def window_mask(start: int, width: int) -> int:
    """Bitmask covering slot indices [start, start + width)."""
    return ((1 << width) - 1) << start


def iter_bits(mask: int) -> Iterator[int]:
    """Yield set-bit indices of ``mask`` in ascending order."""
    while mask:
        lsb = mask & -mask
        yield lsb.bit_length() - 1
        mask ^= lsb


def contiguous_starts(mask: int, width: int) -> int:
    """Mask of start indices i such that bits i..i+width-1 are all set."""
    out = mask
    for _ in range(width - 1):
        out &= out >> 1
    return out


class SlotGrid:
    """Availability bitmap of ``size`` slots; bit i set means slot i is free."""

    __slots__ = ("size", "_free")

    def __init__(self, size: int, free_mask: int | None = None):
        if size <= 0:
            raise ValueError("grid size must be positive")
        full = (1 << size) - 1
        if free_mask is None:
            free_mask = full
        elif free_mask & ~full:
            raise ValueError("free mask has bits outside the grid")
        self.size = size
        self._free = free_mask

    @property
    def free_mask(self) -> int:
        return self._free

    @property
    def free_count(self) -> int:
        return self._free.bit_count()

    def is_free(self, index: int) -> bool:
        if not 0 <= index < self.size:
            raise IndexError(f"slot index {index} out of range")
        return bool(self._free >> index & 1)

    def occupy(self, mask: int) -> None:
        if mask & ~((1 << self.size) - 1):
            raise ValueError("mask has bits outside the grid")
        if self._free & mask != mask:
            raise OverlapError("slot(s) already busy")
        self._free &= ~mask

    def vacate(self, mask: int) -> None:
        if self._free & mask:
            raise DoubleReleaseError("slot(s) already free")
        self._free |= mask

    def clone(self) -> "SlotGrid":
        return SlotGrid(self.size, self._free)


def select_modulation(table: ModulationTable, distance_km: float) -> Modulation:
    """Highest-efficiency format whose reach covers ``distance_km`` (inclusive)."""
    if distance_km <= 0:
        raise ValueError("distance must be positive")
    for mod in reversed(table.entries):
        if distance_km <= mod.reach_km:
            return mod
    raise NoFeasibleModulation(
        f"{distance_km} km exceeds the {table.entries[0].reach_km} km maximum reach"
    )


def slots_required(
    table: ModulationTable, bandwidth_gbps: float, distance_km: float
) -> tuple[Modulation, int, float]:
    """Slot count for carrying ``bandwidth_gbps`` over ``distance_km``.

    Returns (modulation, slot count including guard band, per-slot Gbps).
    """
    if bandwidth_gbps <= 0:
        raise ValueError("bandwidth must be positive")
    mod = select_modulation(table, distance_km)
    per_slot = table.slot_capacity_gbps(mod)
    width = math.ceil(bandwidth_gbps / per_slot) + table.guard_slots
    return mod, width, per_slot


@dataclass(frozen=True)
class SlotWindow:
    """A contiguous slot window reserved along one substrate path."""

    path: "SubstratePath"
    start: int
    width: int
    modulation: Modulation
    guard_slots: int
    carried_gbps: float


def build_window(
    table: ModulationTable,
    path: "SubstratePath",
    start: int,
    width: int,
    modulation: Modulation | None = None,
) -> SlotWindow:
    """Construct a validated window; carried bandwidth excludes the guard band."""
    mod = modulation if modulation is not None else select_modulation(table, path.length_km)
    if path.length_km > mod.reach_km:
        raise NoFeasibleModulation(
            f"{path.length_km} km path exceeds {mod.name} reach {mod.reach_km} km"
        )
    if width <= table.guard_slots:
        raise ValueError("window carries no payload slots")
    carried = table.slot_capacity_gbps(mod) * (width - table.guard_slots)
    return SlotWindow(path, start, width, mod, table.guard_slots, carried)


def _path_grids(net: "SubstrateNetwork", path: "SubstratePath") -> list[SlotGrid]:
    grids = [net.links[lid].grid for lid in path.links]
    if any(g is None for g in grids):
        raise SpectrumError("path traverses a link without a slot grid")
    return grids


def path_free_mask(net: "SubstrateNetwork", path: "SubstratePath") -> int:
    """Conjunction of free masks over every link of the path."""
    grids = _path_grids(net, path)
    mask = grids[0].free_mask
    for g in grids[1:]:
        mask &= g.free_mask
    return mask


def max_window(net: "SubstrateNetwork", path: "SubstratePath") -> int:
    """Longest run of slot indices simultaneously free on every path link."""
    mask = path_free_mask(net, path)
    width = 0
    while mask:
        mask &= mask >> 1
        width += 1
    return width


def _boundary_cost(grids: list[SlotGrid], size: int, start: int, width: int) -> int:
    cost = 0
    right = start + width
    for g in grids:
        if start > 0:
            cost += g.free_mask >> (start - 1) & 1
        if right < size:
            cost += g.free_mask >> right & 1
    return cost


def fsw_cost(net: "SubstrateNetwork", path: "SubstratePath", start: int, width: int) -> int:
    """Number of free slots bordering the candidate window across all path links.

    Both boundary sums are one-sided at the grid edges.  Raises NotACandidate
    when the window is not free on every link.
    """
    grids = _path_grids(net, path)
    size = grids[0].size
    if start < 0 or start + width > size:
        raise NotACandidate(f"window [{start}, {start + width}) outside the grid")
    wmask = window_mask(start, width)
    for g in grids:
        if g.free_mask & wmask != wmask:
            raise NotACandidate(f"window [{start}, {start + width}) not free on all links")
    return _boundary_cost(grids, size, start, width)


FitPolicy = Literal["least_cost", "first_fit"]


def choose_fsw(
    net: "SubstrateNetwork",
    path: "SubstratePath",
    width: int,
    policy: FitPolicy = "least_cost",
) -> int | None:
    """Pick a start index for a ``width``-slot window on ``path``, or None.

    ``least_cost`` minimises the boundary cost with ties broken toward the
    smallest start index; ``first_fit`` takes the smallest candidate start.
    """
    if width < 1:
        raise ValueError("window width must be at least 1")
    grids = _path_grids(net, path)
    size = grids[0].size
    candidates = contiguous_starts(path_free_mask(net, path), width)
    if candidates == 0:
        return None
    if policy == "first_fit":
        return (candidates & -candidates).bit_length() - 1
    best_start = None
    best_cost = None
    for start in iter_bits(candidates):
        cost = _boundary_cost(grids, size, start, width)
        if best_cost is None or cost < best_cost:
            best_cost, best_start = cost, start
            if cost == 0:
                break
    return best_start


@dataclass
class AllocationHandle:
    """Enough state to undo one window allocation exactly."""

    link_ids: tuple[int, ...]
    mask: int
    window: SlotWindow
    released: bool = field(default=False, compare=False)


def allocate_window(net: "SubstrateNetwork", window: SlotWindow) -> AllocationHandle:
    """Mark the window busy on every link of its path."""
    grids = _path_grids(net, window.path)
    mask = window_mask(window.start, window.width)
    for g in grids:
        if g.free_mask & mask != mask:
            raise OverlapError(
                f"window [{window.start}, {window.start + window.width}) not free"
            )
    for g in grids:
        g.occupy(mask)
    return AllocationHandle(tuple(window.path.links), mask, window)


def release_window(net: "SubstrateNetwork", handle: AllocationHandle) -> None:
    """Free exactly the slots recorded in ``handle``."""
    if handle.released:
        raise DoubleReleaseError("allocation handle already released")
    for lid in handle.link_ids:
        net.links[lid].grid.vacate(handle.mask)
    handle.released = True
