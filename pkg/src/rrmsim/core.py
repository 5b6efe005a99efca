"""Physical-resource domain model: carrier grids, exclusive PRB grants,
cells, user equipment, traffic classes, and the Jain fairness metric.

Everything downstream (MAC coordinators, flow control, steering) is built on
these types; they deliberately know nothing about scheduling policy.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Sequence

# Carrier frequencies the model accepts, in Hz (sub-GHz through mmWave).
CARRIER_HZ_MIN = 450e6
CARRIER_HZ_MAX = 52.6e9

NUMEROLOGY_MIN = 0
NUMEROLOGY_MAX = 4

FRAME_SECONDS = 10e-3


class TrafficClass(str, Enum):
    """Service categories a flow may belong to."""

    EMBB = "eMBB"
    MMTC = "mMTC"
    URLLC = "URLLC"
    LEGACY_MBB = "legacy_MBB"


#: Canonical ordering used whenever traffic classes key a partition. The
#: deadline class comes first so its reserved columns sit at the low PRB
#: indices and stay put while queue-driven partitions grow and shrink.
CLASS_ORDER: tuple[TrafficClass, ...] = (
    TrafficClass.URLLC,
    TrafficClass.EMBB,
    TrafficClass.LEGACY_MBB,
    TrafficClass.MMTC,
)


class CellClass(str, Enum):
    MACRO = "macro"
    SMALL = "small"
    AP = "ap"


class OverlapError(Exception):
    """Raised when a grant would reuse a PRB already granted in the slot."""

    def __init__(self, prb: int, holder: str, claimant: str):
        super().__init__(
            f"PRB {prb} already granted to {holder!r}; refused for {claimant!r}"
        )
        self.prb = prb
        self.holder = holder
        self.claimant = claimant


class OutOfRangeError(Exception):
    """Raised when a grant references a PRB index outside the grid."""

    def __init__(self, prb: int, n_prbs: int):
        super().__init__(f"PRB {prb} outside grid of {n_prbs} PRBs")
        self.prb = prb
        self.n_prbs = n_prbs


class DegenerateInputError(ValueError):
    """Raised by metrics when the input carries no information (empty/all-zero)."""


@dataclass(frozen=True)
class CarrierGrid:
    """One carrier's resource plane: PRBs across frequency, slots along time.

    ``numerology`` follows the usual scalable-slot convention: slot duration is
    1 ms / 2**numerology, so a 10 ms frame always holds a whole number of slots.
    """

    carrier_hz: float
    prbs_per_slot: int
    numerology: int
    prb_bandwidth_hz: float

    def __post_init__(self):
        if not (CARRIER_HZ_MIN <= self.carrier_hz <= CARRIER_HZ_MAX):
            raise ValueError(
                f"carrier_hz {self.carrier_hz:g} outside "
                f"[{CARRIER_HZ_MIN:g}, {CARRIER_HZ_MAX:g}]"
            )
        if self.prbs_per_slot < 1:
            raise ValueError(f"prbs_per_slot must be >= 1, got {self.prbs_per_slot}")
        if not (NUMEROLOGY_MIN <= self.numerology <= NUMEROLOGY_MAX):
            raise ValueError(
                f"numerology must be in [{NUMEROLOGY_MIN}, {NUMEROLOGY_MAX}], "
                f"got {self.numerology}"
            )
        if self.prb_bandwidth_hz <= 0:
            raise ValueError("prb_bandwidth_hz must be positive")

    @property
    def slot_seconds(self) -> float:
        return 1e-3 / (2 ** self.numerology)

    @property
    def slots_per_frame(self) -> int:
        return 10 * (2 ** self.numerology)


@dataclass(frozen=True)
class Grant:
    """Exclusive use of one PRB in one slot by one owner, for one purpose."""

    prb: int
    owner: str
    purpose: str


class AllocationMap:
    """Grants for a single slot on a single grid; at most one owner per PRB."""

    def __init__(self, grid: CarrierGrid, slot: int):
        self.grid = grid
        self.slot = slot
        self._by_prb: dict[int, Grant] = {}

    def add(self, grant: Grant) -> None:
        if not (0 <= grant.prb < self.grid.prbs_per_slot):
            raise OutOfRangeError(grant.prb, self.grid.prbs_per_slot)
        held = self._by_prb.get(grant.prb)
        if held is not None:
            raise OverlapError(grant.prb, held.owner, grant.owner)
        self._by_prb[grant.prb] = grant

    def grants(self) -> list[Grant]:
        return [self._by_prb[p] for p in sorted(self._by_prb)]

    def owner_of(self, prb: int) -> str | None:
        g = self._by_prb.get(prb)
        return g.owner if g else None

    def occupied(self) -> set[int]:
        return set(self._by_prb)

    def __len__(self) -> int:
        return len(self._by_prb)

    def __contains__(self, prb: int) -> bool:
        return prb in self._by_prb


def allocate_block(
    amap: AllocationMap, start_prb: int, end_prb: int, owner: str, purpose: str
) -> list[Grant]:
    """Grant the inclusive PRB range [start_prb, end_prb] to one owner.

    All-or-nothing: the whole block is checked before any grant lands, so a
    failed call leaves the map untouched.
    """
    if end_prb < start_prb:
        raise ValueError(f"end_prb {end_prb} < start_prb {start_prb}")
    for prb in (start_prb, end_prb):
        if not (0 <= prb < amap.grid.prbs_per_slot):
            raise OutOfRangeError(prb, amap.grid.prbs_per_slot)
    for prb in range(start_prb, end_prb + 1):
        held = amap._by_prb.get(prb)
        if held is not None:
            raise OverlapError(prb, held.owner, owner)
    made = []
    for prb in range(start_prb, end_prb + 1):
        g = Grant(prb=prb, owner=owner, purpose=purpose)
        amap.add(g)
        made.append(g)
    return made


@dataclass(frozen=True)
class Violation:
    """One broken exclusivity/bounds rule found by validate_allocation_map."""

    prb: int
    kind: str  # "overlap" | "out_of_range"
    detail: str


def validate_allocation_map(
    grid: CarrierGrid, grants: Iterable[Grant]
) -> list[Violation]:
    """Check a raw grant list against a grid; returns [] when clean.

    Unlike AllocationMap.add this never raises: it is the audit path used by
    tests and by the engine's per-slot self-check.
    """
    violations: list[Violation] = []
    seen: dict[int, str] = {}
    for g in grants:
        if not (0 <= g.prb < grid.prbs_per_slot):
            violations.append(
                Violation(g.prb, "out_of_range", f"prb {g.prb} outside 0..{grid.prbs_per_slot - 1}")
            )
            continue
        if g.prb in seen:
            violations.append(
                Violation(g.prb, "overlap", f"prb {g.prb} held by {seen[g.prb]!r} and {g.owner!r}")
            )
        else:
            seen[g.prb] = g.owner
    return violations


@dataclass(frozen=True)
class Cell:
    """A transmission point: macro, small cell, or access point.

    ``rat_tag`` is a label carried for reporting only; no scheduling or
    steering decision in this package reads it.
    """

    cell_id: str
    cell_class: CellClass
    grid: CarrierGrid
    position: tuple[float, float]
    tx_power_dbm: float
    rat_tag: str = ""
    supports_duplication: bool = True
    supports_secondary: bool = True

    def __post_init__(self):
        if not self.cell_id:
            raise ValueError("cell_id must be non-empty")
        if not math.isfinite(self.tx_power_dbm):
            raise ValueError("tx_power_dbm must be finite")


@dataclass(frozen=True)
class UserEquipment:
    """A terminal with a position and a set of capability flags.

    Capability flags are opaque strings matched against cell/portion
    requirements (e.g. "nr", "lte", "dual_connectivity").
    """

    ue_id: str
    position: tuple[float, float]
    capabilities: frozenset[str]
    velocity: tuple[float, float] = (0.0, 0.0)

    def __post_init__(self):
        if not self.ue_id:
            raise ValueError("ue_id must be non-empty")
        if not self.capabilities:
            raise ValueError(f"UE {self.ue_id!r} must declare at least one capability")


def compute_fairness(values: Sequence[float]) -> float:
    """Jain's fairness index: (sum x)^2 / (n * sum x^2), in (0, 1].

    Raises DegenerateInputError for empty or all-zero input.
    """
    vals = list(values)
    if not vals:
        raise DegenerateInputError("fairness undefined for empty input")
    if any(v < 0 for v in vals):
        raise ValueError("fairness inputs must be non-negative")
    total = math.fsum(vals)
    sq = math.fsum(v * v for v in vals)
    if sq == 0.0:
        raise DegenerateInputError("fairness undefined when all values are zero")
    return (total * total) / (len(vals) * sq)


def _fmt_value(v) -> str:
    if isinstance(v, float):
        return format(v, ".6g")
    if isinstance(v, Enum):
        return str(v.value)
    return str(v)


@dataclass(frozen=True)
class Event:
    """One line in the run's event log.

    Rendering is fully deterministic: fields keep insertion order and floats
    are formatted with a fixed precision.
    """

    slot: int
    subsystem: str
    kind: str
    fields: tuple[tuple[str, str], ...] = ()

    @classmethod
    def make(cls, slot: int, subsystem: str, kind: str, **fields) -> "Event":
        return cls(
            slot=slot,
            subsystem=subsystem,
            kind=kind,
            fields=tuple((k, _fmt_value(v)) for k, v in fields.items()),
        )

    def format(self) -> str:
        parts = [str(self.slot), self.subsystem, self.kind]
        parts.extend(f"{k}={v}" for k, v in self.fields)
        return " ".join(parts)

    def get(self, key: str) -> str | None:
        for k, v in self.fields:
            if k == key:
                return v
        return None
