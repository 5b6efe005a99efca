"""Technology abstraction layer: capability descriptors, common measurement
units, the rate model, and the feature-plugin registry.

Coordinators above this layer never see technology names. A cell is reduced to
a CapabilityDescriptor (what it can do, in numbers and flags) and raw
measurements are converted into two common units: a dB-domain signal quality
and a dimensionless load fraction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Iterable, Mapping

from .core import Cell, CellClass, CarrierGrid

#: Post-conversion floor for signal quality: raw RSRP is offset by this so the
#: common signal axis starts near 0 for the weakest usable signal.
RSRP_FLOOR_DBM = -140.0

#: SINR above this contributes no additional rate (hardware/MCS ceiling).
SINR_CAP_DB = 30.0


class MeasureKind(str, Enum):
    SIGNAL_DB = "signal_db"
    LOAD_FRACTION = "load_fraction"


class UnknownKindError(ValueError):
    """Raised for a raw measurement kind with no registered conversion."""


class DuplicateIdError(ValueError):
    """Raised when a feature id is registered twice."""


@dataclass(frozen=True)
class CommonMeasure:
    """A measurement after conversion to one of the two common units."""

    kind: MeasureKind
    value: float

    def __post_init__(self):
        if not math.isfinite(self.value):
            raise ValueError(f"common measure must be finite, got {self.value}")
        if self.kind is MeasureKind.LOAD_FRACTION and not (0.0 <= self.value <= 1.0):
            raise ValueError(f"load fraction outside [0, 1]: {self.value}")


@dataclass(frozen=True)
class RawMeasure:
    """A technology-specific measurement before conversion.

    ``capacity`` only applies to occupancy-style kinds (queue depth relative
    to a capacity).
    """

    kind: str
    value: float
    capacity: float | None = None


def to_common_unit(raw: RawMeasure) -> CommonMeasure:
    """Convert a raw measurement into a common unit.

    Supported kinds:
      - "rsrp_dbm": received power in dBm -> signal_db above the -140 dBm floor
      - "sinr_linear": linear SINR ratio -> signal_db via 10*log10
      - "queue_occupancy": queued amount vs capacity -> load_fraction in [0, 1]
    """
    if raw.kind == "rsrp_dbm":
        return CommonMeasure(MeasureKind.SIGNAL_DB, raw.value - RSRP_FLOOR_DBM)
    if raw.kind == "sinr_linear":
        if raw.value <= 0:
            raise ValueError(f"sinr_linear must be positive, got {raw.value}")
        return CommonMeasure(MeasureKind.SIGNAL_DB, 10.0 * math.log10(raw.value))
    if raw.kind == "queue_occupancy":
        if raw.capacity is None or raw.capacity <= 0:
            raise ValueError("queue_occupancy requires a positive capacity")
        if raw.value < 0:
            raise ValueError(f"queue_occupancy value must be >= 0, got {raw.value}")
        return CommonMeasure(MeasureKind.LOAD_FRACTION, min(1.0, raw.value / raw.capacity))
    raise UnknownKindError(f"no conversion for raw kind {raw.kind!r}")


@dataclass(frozen=True)
class CapabilityDescriptor:
    """What a cell offers, with the technology name scrubbed out.

    Coordinators and steering features read only this. ``latency_class`` is
    "low" when the slot is at most half a millisecond, else "normal";
    ``coverage_class`` is "wide" for macro cells, "local" otherwise.
    """

    cell_id: str
    capacity_score: float
    latency_class: str
    coverage_class: str
    supports_duplication: bool
    supports_secondary_attach: bool
    current_load: float

    def __post_init__(self):
        if self.capacity_score < 0:
            raise ValueError("capacity_score must be >= 0")
        if self.latency_class not in ("low", "normal"):
            raise ValueError(f"unknown latency_class {self.latency_class!r}")
        if self.coverage_class not in ("wide", "local"):
            raise ValueError(f"unknown coverage_class {self.coverage_class!r}")
        if not (0.0 <= self.current_load <= 1.0):
            raise ValueError(f"current_load outside [0, 1]: {self.current_load}")


def link_rate(
    sinr_db: float, n_prbs: int, waveform_efficiency: float, grid: CarrierGrid
) -> float:
    """Deliverable bits for ``n_prbs`` PRBs in one slot at the given SINR.

    Shannon-style with an efficiency knob: bandwidth * slot * efficiency *
    log2(1 + min(sinr, cap)). The per-PRB amount is floored to whole bits, so
    the result is exactly linear in n_prbs and monotone in SINR.
    """
    if n_prbs < 0:
        raise ValueError("n_prbs must be >= 0")
    if not (0.0 < waveform_efficiency <= 1.0):
        raise ValueError(f"waveform_efficiency must be in (0, 1], got {waveform_efficiency}")
    lin = 10.0 ** (min(sinr_db, SINR_CAP_DB) / 10.0)
    per_prb = math.floor(
        grid.prb_bandwidth_hz * grid.slot_seconds * waveform_efficiency * math.log2(1.0 + lin)
    )
    return float(n_prbs * per_prb)


#: Reference SINR used when scoring a cell's standing capacity.
CAPACITY_REF_SINR_DB = 10.0


def capacity_score(grid: CarrierGrid, waveform_efficiency: float = 1.0) -> float:
    """Bits per slot the whole grid could carry at the reference SINR."""
    return grid.prbs_per_slot * link_rate(CAPACITY_REF_SINR_DB, 1, waveform_efficiency, grid)


def describe_cell(
    cell: Cell, current_load: float, waveform_efficiency: float = 1.0
) -> CapabilityDescriptor:
    """Reduce a cell to its technology-neutral descriptor.

    Deterministic in its inputs; reads the grid geometry and structural flags
    but never the cell's rat_tag.
    """
    return CapabilityDescriptor(
        cell_id=cell.cell_id,
        capacity_score=capacity_score(cell.grid, waveform_efficiency),
        latency_class="low" if cell.grid.slot_seconds <= 0.5e-3 else "normal",
        coverage_class="wide" if cell.cell_class is CellClass.MACRO else "local",
        supports_duplication=cell.supports_duplication,
        supports_secondary_attach=cell.supports_secondary,
        current_load=current_load,
    )


class PluginLocation(str, Enum):
    BELOW_UTS = "below_uts"
    ABOVE_UTS = "above_uts"


@dataclass(frozen=True)
class FeatureRecord:
    """Registration card for a pluggable feature.

    A feature must answer four questions to join the registry: what data it
    consumes and produces, where it sits relative to the steering layer, which
    other features it interacts with, and which scenarios it applies to.
    """

    feature_id: str
    inputs: tuple[str, ...]
    outputs: tuple[str, ...]
    location: PluginLocation
    interacts_with: tuple[str, ...]
    scenarios: tuple[str, ...]

    def __post_init__(self):
        if not self.feature_id:
            raise ValueError("feature_id must be non-empty")
        for name, val in (
            ("inputs", self.inputs),
            ("outputs", self.outputs),
            ("interacts_with", self.interacts_with),
            ("scenarios", self.scenarios),
        ):
            if not val or any(not x for x in val):
                raise ValueError(f"{name} must be a non-empty tuple of non-empty strings")


class PluginRegistry:
    """Feature records plus optional evaluator callables, keyed by id."""

    def __init__(self):
        self._records: dict[str, FeatureRecord] = {}
        self._evaluators: dict[str, Callable] = {}

    def register(self, record: FeatureRecord, evaluator: Callable | None = None) -> "PluginRegistry":
        if record.feature_id in self._records:
            raise DuplicateIdError(f"feature {record.feature_id!r} already registered")
        self._records[record.feature_id] = record
        if evaluator is not None:
            self._evaluators[record.feature_id] = evaluator
        return self

    def get(self, feature_id: str) -> FeatureRecord:
        try:
            return self._records[feature_id]
        except KeyError:
            raise KeyError(f"unknown feature {feature_id!r}") from None

    def evaluator_for(self, feature_id: str) -> Callable | None:
        self.get(feature_id)  # raise on unknown id
        return self._evaluators.get(feature_id)

    def ids(self) -> list[str]:
        return list(self._records)  # registration order

    def records(self) -> list[FeatureRecord]:
        return [self._records[i] for i in self._records]

    def by_location(self, location: PluginLocation) -> list[FeatureRecord]:
        return [r for r in self._records.values() if r.location is location]

    def by_scenario(self, tag: str) -> list[FeatureRecord]:
        return [r for r in self._records.values() if tag in r.scenarios or "any" in r.scenarios]

    def interactions(self, feature_id: str) -> list[FeatureRecord]:
        """Resolve a feature's declared interaction partners.

        Resolution happens here, at lookup time, so records may be registered
        in any order; "none" marks a deliberately standalone feature.
        """
        rec = self.get(feature_id)
        out = []
        for other in rec.interacts_with:
            if other == "none":
                continue
            out.append(self.get(other))
        return out

    def __contains__(self, feature_id: str) -> bool:
        return feature_id in self._records

    def __len__(self) -> int:
        return len(self._records)


def register_plugin(
    registry: PluginRegistry, record: FeatureRecord, evaluator: Callable | None = None
) -> PluginRegistry:
    """Register a feature; errors on duplicate ids. Returns the registry."""
    return registry.register(record, evaluator)
