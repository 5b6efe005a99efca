"""Traffic steering above the per-cell coordinators.

All steering features — built-in or plugged in — see the same technology-blind
context (common-unit measurements plus capability descriptors) and propose
actions from one closed set. An operator strategy ranks features totally;
conflicts resolve to at most one action per UE per epoch, with hysteresis
against reversals and time-to-trigger maturation before anything is emitted.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Mapping, Sequence

from .abstraction import (
    CapabilityDescriptor,
    CommonMeasure,
    FeatureRecord,
    MeasureKind,
    PluginLocation,
    PluginRegistry,
    RawMeasure,
    register_plugin,
    to_common_unit,
)
from .core import Event, TrafficClass
from .pdcp import Mode

DEFAULT_HYSTERESIS_EPOCHS = 10
DEFAULT_TIME_TO_TRIGGER_EPOCHS = 2

#: Capability flag a UE must carry to hold two simultaneous legs.
DC_CAPABILITY = "dual_connectivity"

#: Flow-control mode applied when a second leg is configured, by service.
DEFAULT_SERVICE_MODES: dict[TrafficClass, Mode] = {
    TrafficClass.URLLC: Mode.DUPLICATE,
    TrafficClass.EMBB: Mode.AGGREGATE,
    TrafficClass.LEGACY_MBB: Mode.LOAD_BALANCE,
    TrafficClass.MMTC: Mode.AGGREGATE,
}


class ActionKind(str, Enum):
    """The closed set of steering actions, in canonical tie-break order."""

    HANDOVER = "handover"
    ADD_SECONDARY_CELL = "add_secondary_cell"
    RELEASE_SECONDARY_CELL = "release_secondary_cell"
    CONFIGURE_DC = "configure_dc"
    RELEASE_LEG = "release_leg"
    OFFLOAD = "offload"


KIND_ORDER: dict[ActionKind, int] = {k: i for i, k in enumerate(ActionKind)}


class UndeclaredActionError(ValueError):
    """A feature proposed an action kind absent from its registered outputs."""


class UnrankedFeatureError(ValueError):
    """A candidate came from a feature missing from the strategy ranking."""


@dataclass(frozen=True)
class SteeringAction:
    kind: ActionKind
    ue_id: str
    targets: tuple[str, ...]
    feature_id: str

    def __post_init__(self):
        if not isinstance(self.kind, ActionKind):
            raise ValueError(f"kind must be an ActionKind, got {self.kind!r}")
        if not self.targets:
            raise ValueError("targets must be non-empty")


# ---------------------------------------------------------------------------
# context assembly
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CellState:
    """Raw per-cell numbers straight from a coordinator."""

    cell_id: str
    demand_prbs: float
    capacity_prbs: float
    descriptor: CapabilityDescriptor


@dataclass(frozen=True)
class UeState:
    """Raw per-UE numbers straight from the world."""

    ue_id: str
    serving_cell: str
    secondary_cells: tuple[str, ...]
    rsrp_dbm_by_cell: Mapping[str, float]
    services: tuple[TrafficClass, ...]
    capabilities: frozenset[str]
    eligible_cells: tuple[str, ...]
    rate_bps: float


@dataclass(frozen=True)
class NetworkSnapshot:
    epoch_index: int
    scenario_tag: str
    cells: tuple[CellState, ...]
    ues: tuple[UeState, ...]


@dataclass(frozen=True)
class UtsContext:
    """What steering features are allowed to see: common units only.

    Loads are load fractions, signals are dB above the common floor, and
    cells appear solely through their capability descriptors.
    """

    epoch_index: int
    scenario_tag: str
    cell_load: Mapping[str, CommonMeasure]
    cell_descriptors: Mapping[str, CapabilityDescriptor]
    ue_signal: Mapping[str, Mapping[str, CommonMeasure]]
    ue_serving: Mapping[str, str]
    ue_secondary: Mapping[str, tuple[str, ...]]
    ue_services: Mapping[str, tuple[TrafficClass, ...]]
    ue_capabilities: Mapping[str, frozenset[str]]
    ue_eligible: Mapping[str, tuple[str, ...]]
    ue_rate_bps: Mapping[str, float]


def collect_context(snapshot: NetworkSnapshot) -> UtsContext:
    """Convert a raw snapshot into the common-unit steering context."""
    cell_load = {}
    cell_desc = {}
    for c in snapshot.cells:
        cell_load[c.cell_id] = to_common_unit(
            RawMeasure("queue_occupancy", c.demand_prbs, capacity=c.capacity_prbs)
        )
        cell_desc[c.cell_id] = c.descriptor
    ue_signal = {}
    for u in snapshot.ues:
        ue_signal[u.ue_id] = {
            cid: to_common_unit(RawMeasure("rsrp_dbm", v))
            for cid, v in sorted(u.rsrp_dbm_by_cell.items())
        }
    return UtsContext(
        epoch_index=snapshot.epoch_index,
        scenario_tag=snapshot.scenario_tag,
        cell_load=cell_load,
        cell_descriptors=cell_desc,
        ue_signal=ue_signal,
        ue_serving={u.ue_id: u.serving_cell for u in snapshot.ues},
        ue_secondary={u.ue_id: u.secondary_cells for u in snapshot.ues},
        ue_services={u.ue_id: u.services for u in snapshot.ues},
        ue_capabilities={u.ue_id: u.capabilities for u in snapshot.ues},
        ue_eligible={u.ue_id: u.eligible_cells for u in snapshot.ues},
        ue_rate_bps={u.ue_id: u.rate_bps for u in snapshot.ues},
    )


# ---------------------------------------------------------------------------
# operator strategy
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MnoStrategy:
    """Operator policy: a total order over features plus their thresholds."""

    name: str = "default"
    scenario_tag: str = "any"
    ranking: tuple[str, ...] = ()
    thresholds: Mapping[str, Mapping[str, float]] = field(default_factory=dict)
    hysteresis_epochs: int = DEFAULT_HYSTERESIS_EPOCHS
    time_to_trigger_epochs: int = DEFAULT_TIME_TO_TRIGGER_EPOCHS

    def __post_init__(self):
        if len(set(self.ranking)) != len(self.ranking):
            raise ValueError("ranking must not repeat features")
        if self.hysteresis_epochs < 0 or self.time_to_trigger_epochs < 1:
            raise ValueError("hysteresis >= 0 and time_to_trigger >= 1 required")

    def rank_of(self, feature_id: str) -> int:
        try:
            return self.ranking.index(feature_id)
        except ValueError:
            raise UnrankedFeatureError(
                f"feature {feature_id!r} missing from strategy ranking"
            ) from None


def select_strategy(strategies: Sequence[MnoStrategy], scenario_tag: str) -> MnoStrategy:
    """Pick the strategy whose tag matches, falling back to an "any" entry."""
    for s in strategies:
        if s.scenario_tag == scenario_tag:
            return s
    for s in strategies:
        if s.scenario_tag == "any":
            return s
    raise KeyError(f"no strategy for scenario tag {scenario_tag!r}")


# ---------------------------------------------------------------------------
# built-in features
# ---------------------------------------------------------------------------

LOAD_BALANCE_ID = "load_balance_handover"
CARRIER_AGG_ID = "carrier_aggregation"
DUAL_CONN_ID = "dual_connectivity_offload"

DEFAULT_THRESHOLDS: dict[str, dict[str, float]] = {
    LOAD_BALANCE_ID: {"high_load": 0.8, "low_load": 0.5, "min_signal_db": 20.0},
    CARRIER_AGG_ID: {
        "target_rate_bps": 10e6,
        "max_secondary_load": 0.7,
        "min_signal_db": 25.0,
        "release_load": 0.95,
    },
    DUAL_CONN_ID: {
        "max_secondary_load": 0.8,
        "min_signal_db": 20.0,
        "release_load": 0.95,
    },
}


def _signal_ok(ctx: UtsContext, ue: str, cell: str, floor_db: float) -> bool:
    m = ctx.ue_signal.get(ue, {}).get(cell)
    return m is not None and m.value >= floor_db


def evaluate_load_balance(
    ctx: UtsContext, record: FeatureRecord, thr: Mapping[str, float]
) -> list[SteeringAction]:
    """Move one UE off each overloaded cell toward an underloaded neighbor."""
    actions = []
    for cell_id in sorted(ctx.cell_load):
        if ctx.cell_load[cell_id].value <= thr["high_load"]:
            continue
        best: tuple | None = None
        for ue in sorted(u for u, c in ctx.ue_serving.items() if c == cell_id):
            for target in sorted(ctx.ue_eligible.get(ue, ())):
                if target == cell_id:
                    continue
                if ctx.cell_load[target].value >= thr["low_load"]:
                    continue
                if not _signal_ok(ctx, ue, target, thr["min_signal_db"]):
                    continue
                sig = ctx.ue_signal[ue][target].value
                key = (ctx.cell_load[target].value, -sig, ue, target)
                if best is None or key < best[0]:
                    best = (key, ue, target)
        if best is not None:
            actions.append(
                SteeringAction(ActionKind.HANDOVER, best[1], (best[2],), record.feature_id)
            )
    return actions


def evaluate_carrier_aggregation(
    ctx: UtsContext, record: FeatureRecord, thr: Mapping[str, float]
) -> list[SteeringAction]:
    """Add a secondary carrier to rate-starved broadband UEs; shed hot ones."""
    actions = []
    for ue in sorted(ctx.ue_serving):
        if TrafficClass.EMBB not in ctx.ue_services.get(ue, ()):
            continue
        released = False
        for sec in ctx.ue_secondary.get(ue, ()):
            if ctx.cell_load[sec].value > thr["release_load"]:
                actions.append(
                    SteeringAction(
                        ActionKind.RELEASE_SECONDARY_CELL, ue, (sec,), record.feature_id
                    )
                )
                released = True
                break
        if released or ctx.ue_secondary.get(ue, ()):
            continue
        if ctx.ue_rate_bps.get(ue, 0.0) >= thr["target_rate_bps"]:
            continue
        serving = ctx.ue_serving[ue]
        best = None
        for cand in sorted(ctx.ue_eligible.get(ue, ())):
            if cand == serving:
                continue
            desc = ctx.cell_descriptors[cand]
            if not desc.supports_secondary_attach:
                continue
            if ctx.cell_load[cand].value >= thr["max_secondary_load"]:
                continue
            if not _signal_ok(ctx, ue, cand, thr["min_signal_db"]):
                continue
            key = (ctx.cell_load[cand].value, -ctx.ue_signal[ue][cand].value, cand)
            if best is None or key < best[0]:
                best = (key, cand)
        if best is not None:
            actions.append(
                SteeringAction(ActionKind.ADD_SECONDARY_CELL, ue, (best[1],), record.feature_id)
            )
    return actions


def evaluate_dual_connectivity(
    ctx: UtsContext, record: FeatureRecord, thr: Mapping[str, float]
) -> list[SteeringAction]:
    """Give two-leg service to capable UEs with a viable second cell.

    Capable UEs get configure_dc (master = current serving); UEs without the
    capability get their traffic offloaded to the viable cell instead. Hot
    secondary legs are released.
    """
    actions = []
    for ue in sorted(ctx.ue_serving):
        services = ctx.ue_services.get(ue, ())
        if not any(s in (TrafficClass.EMBB, TrafficClass.URLLC) for s in services):
            continue
        for sec in ctx.ue_secondary.get(ue, ()):
            if ctx.cell_load[sec].value > thr["release_load"]:
                actions.append(
                    SteeringAction(ActionKind.RELEASE_LEG, ue, (sec,), record.feature_id)
                )
                break
        if ctx.ue_secondary.get(ue, ()):
            continue
        serving = ctx.ue_serving[ue]
        needs_dup = TrafficClass.URLLC in services
        if needs_dup and not ctx.cell_descriptors[serving].supports_duplication:
            continue
        best = None
        for cand in sorted(ctx.ue_eligible.get(ue, ())):
            if cand == serving:
                continue
            desc = ctx.cell_descriptors[cand]
            if not desc.supports_secondary_attach:
                continue
            if needs_dup and not desc.supports_duplication:
                continue
            if ctx.cell_load[cand].value >= thr["max_secondary_load"]:
                continue
            if not _signal_ok(ctx, ue, cand, thr["min_signal_db"]):
                continue
            key = (ctx.cell_load[cand].value, -ctx.ue_signal[ue][cand].value, cand)
            if best is None or key < best[0]:
                best = (key, cand)
        if best is None:
            continue
        if DC_CAPABILITY in ctx.ue_capabilities.get(ue, frozenset()):
            actions.append(
                SteeringAction(
                    ActionKind.CONFIGURE_DC, ue, (serving, best[1]), record.feature_id
                )
            )
        else:
            actions.append(
                SteeringAction(ActionKind.OFFLOAD, ue, (best[1],), record.feature_id)
            )
    return actions


def builtin_features() -> list[tuple[FeatureRecord, Callable]]:
    lb = FeatureRecord(
        feature_id=LOAD_BALANCE_ID,
        inputs=("cell_load", "ue_signal", "ue_serving"),
        outputs=(ActionKind.HANDOVER.value,),
        location=PluginLocation.BELOW_UTS,
        interacts_with=(CARRIER_AGG_ID, DUAL_CONN_ID),
        scenarios=("any",),
    )
    ca = FeatureRecord(
        feature_id=CARRIER_AGG_ID,
        inputs=("cell_load", "ue_signal", "ue_rate_bps", "cell_descriptors"),
        outputs=(
            ActionKind.ADD_SECONDARY_CELL.value,
            ActionKind.RELEASE_SECONDARY_CELL.value,
        ),
        location=PluginLocation.BELOW_UTS,
        interacts_with=(LOAD_BALANCE_ID, DUAL_CONN_ID),
        scenarios=("any",),
    )
    dc = FeatureRecord(
        feature_id=DUAL_CONN_ID,
        inputs=("cell_load", "ue_signal", "ue_capabilities", "cell_descriptors"),
        outputs=(
            ActionKind.CONFIGURE_DC.value,
            ActionKind.OFFLOAD.value,
            ActionKind.RELEASE_LEG.value,
        ),
        location=PluginLocation.BELOW_UTS,
        interacts_with=(LOAD_BALANCE_ID, CARRIER_AGG_ID),
        scenarios=("any",),
    )
    return [
        (lb, evaluate_load_balance),
        (ca, evaluate_carrier_aggregation),
        (dc, evaluate_dual_connectivity),
    ]


def register_builtins(registry: PluginRegistry) -> PluginRegistry:
    for record, evaluator in builtin_features():
        register_plugin(registry, record, evaluator)
    return registry


# ---------------------------------------------------------------------------
# evaluation, maturation, conflict resolution
# ---------------------------------------------------------------------------

def evaluate_features(
    ctx: UtsContext, registry: PluginRegistry, strategy: MnoStrategy
) -> list[SteeringAction]:
    """Run every applicable feature evaluator and validate its proposals.

    A feature applies when it sits below the steering layer and its scenario
    list covers the context's tag. Every proposed action must use a kind the
    feature declared in its outputs, for a UE the context knows.
    """
    candidates: list[SteeringAction] = []
    for rec in registry.records():
        if rec.location is not PluginLocation.BELOW_UTS:
            continue
        if ctx.scenario_tag not in rec.scenarios and "any" not in rec.scenarios:
            continue
        evaluator = registry.evaluator_for(rec.feature_id)
        if evaluator is None:
            continue
        thr = dict(DEFAULT_THRESHOLDS.get(rec.feature_id, {}))
        thr.update(strategy.thresholds.get(rec.feature_id, {}))
        for action in evaluator(ctx, rec, thr):
            if action.feature_id != rec.feature_id:
                raise UndeclaredActionError(
                    f"feature {rec.feature_id!r} proposed action tagged {action.feature_id!r}"
                )
            if action.kind.value not in rec.outputs:
                raise UndeclaredActionError(
                    f"feature {rec.feature_id!r} proposed undeclared kind {action.kind.value!r}"
                )
            if action.ue_id not in ctx.ue_serving:
                raise ValueError(f"action for unknown UE {action.ue_id!r}")
            candidates.append(action)
    return candidates


@dataclass(frozen=True)
class HistoryEntry:
    epoch_index: int
    action: SteeringAction
    prev_serving: str | None = None


def _reverses(candidate: SteeringAction, entry: HistoryEntry) -> bool:
    if entry.action.ue_id != candidate.ue_id:
        return False
    k, pk = candidate.kind, entry.action.kind
    if k in (ActionKind.HANDOVER, ActionKind.OFFLOAD):
        return (
            pk in (ActionKind.HANDOVER, ActionKind.OFFLOAD)
            and entry.prev_serving is not None
            and candidate.targets[-1] == entry.prev_serving
        )
    if k is ActionKind.ADD_SECONDARY_CELL:
        return pk in (ActionKind.RELEASE_SECONDARY_CELL, ActionKind.RELEASE_LEG) and (
            candidate.targets[0] in entry.action.targets
        )
    if k is ActionKind.CONFIGURE_DC:
        return pk in (ActionKind.RELEASE_SECONDARY_CELL, ActionKind.RELEASE_LEG) and (
            candidate.targets[-1] in entry.action.targets
        )
    if k in (ActionKind.RELEASE_SECONDARY_CELL, ActionKind.RELEASE_LEG):
        return pk in (ActionKind.ADD_SECONDARY_CELL, ActionKind.CONFIGURE_DC) and (
            candidate.targets[0] in entry.action.targets
        )
    return False


def resolve_conflicts(
    candidates: Sequence[SteeringAction],
    strategy: MnoStrategy,
    history: Sequence[HistoryEntry],
    epoch_index: int,
) -> list[SteeringAction]:
    """Reduce candidates to at most one action per UE, reversal-free.

    Per UE the winner is the candidate from the best-ranked feature (ties:
    action kind order, then targets). A winner that would reverse an action
    applied within the hysteresis window is suppressed outright. Output is
    sorted by (ue_id, kind order, targets).
    """
    by_ue: dict[str, list[SteeringAction]] = {}
    for c in candidates:
        strategy.rank_of(c.feature_id)  # validate early, even for losers
        by_ue.setdefault(c.ue_id, []).append(c)
    window_start = epoch_index - strategy.hysteresis_epochs
    recent = [h for h in history if h.epoch_index > window_start]
    final = []
    for ue in sorted(by_ue):
        winner = min(
            by_ue[ue],
            key=lambda c: (strategy.rank_of(c.feature_id), KIND_ORDER[c.kind], c.targets),
        )
        if any(_reverses(winner, h) for h in recent):
            continue
        final.append(winner)
    final.sort(key=lambda c: (c.ue_id, KIND_ORDER[c.kind], c.targets))
    return final


# ---------------------------------------------------------------------------
# application
# ---------------------------------------------------------------------------

class SteerableNetwork:
    """Interface apply_actions drives; the sim world implements it.

    Kept as a plain duck-typed protocol so tests can stand in a fake.
    """

    def has_cell(self, cell_id: str) -> bool: ...
    def has_ue(self, ue_id: str) -> bool: ...
    def serving_cell(self, ue_id: str) -> str: ...
    def secondary_cells(self, ue_id: str) -> tuple: ...
    def can_attach(self, ue_id: str, cell_id: str) -> bool: ...
    def apply_handover(self, ue_id: str, target: str) -> str: ...
    def apply_offload(self, ue_id: str, target: str) -> str: ...
    def apply_add_secondary(self, ue_id: str, target: str) -> None: ...
    def apply_release_secondary(self, ue_id: str, target: str) -> None: ...
    def apply_configure_dc(self, ue_id: str, master: str, secondary: str) -> None: ...
    def apply_release_leg(self, ue_id: str, target: str) -> None: ...


def apply_actions(
    network, actions: Sequence[SteeringAction], slot: int, epoch_index: int
) -> tuple[list[HistoryEntry], list[Event]]:
    """Apply resolved actions atomically, one by one.

    Each action is fully validated against the live network before any of its
    mutations run; a failed check emits a steer_error event and skips the
    action, leaving the network untouched by it. Unknown targets never raise.
    """
    applied: list[HistoryEntry] = []
    events: list[Event] = []

    def err(action: SteeringAction, reason: str):
        events.append(
            Event.make(
                slot,
                "uts",
                "steer_error",
                ue=action.ue_id,
                action=action.kind.value,
                targets="|".join(action.targets),
                reason=reason,
            )
        )

    def leg_event(kind: str, action: SteeringAction, cell: str):
        events.append(
            Event.make(
                slot,
                "uts",
                kind,
                ue=action.ue_id,
                cell=cell,
                action=action.kind.value,
                feature=action.feature_id,
            )
        )

    for action in actions:
        if not network.has_ue(action.ue_id):
            err(action, "unknown_ue")
            continue
        if any(not network.has_cell(t) for t in action.targets):
            err(action, "unknown_target")
            continue
        k = action.kind
        serving = network.serving_cell(action.ue_id)
        secondary = tuple(network.secondary_cells(action.ue_id))
        if k is ActionKind.HANDOVER:
            target = action.targets[0]
            if target == serving:
                err(action, "already_serving")
                continue
            if not network.can_attach(action.ue_id, target):
                err(action, "not_eligible")
                continue
            prev = network.apply_handover(action.ue_id, target)
            leg_event("release_leg", action, prev)
            leg_event("add_leg", action, target)
            applied.append(HistoryEntry(epoch_index, action, prev_serving=prev))
        elif k is ActionKind.OFFLOAD:
            target = action.targets[0]
            if target == serving:
                err(action, "already_serving")
                continue
            if not network.can_attach(action.ue_id, target):
                err(action, "not_eligible")
                continue
            prev = network.apply_offload(action.ue_id, target)
            leg_event("release_leg", action, prev)
            leg_event("add_leg", action, target)
            applied.append(HistoryEntry(epoch_index, action, prev_serving=prev))
        elif k is ActionKind.ADD_SECONDARY_CELL:
            target = action.targets[0]
            if target == serving or target in secondary:
                err(action, "already_attached")
                continue
            if not network.can_attach(action.ue_id, target):
                err(action, "not_eligible")
                continue
            network.apply_add_secondary(action.ue_id, target)
            leg_event("add_leg", action, target)
            applied.append(HistoryEntry(epoch_index, action))
        elif k is ActionKind.RELEASE_SECONDARY_CELL:
            target = action.targets[0]
            if target not in secondary:
                err(action, "not_attached")
                continue
            network.apply_release_secondary(action.ue_id, target)
            leg_event("release_leg", action, target)
            applied.append(HistoryEntry(epoch_index, action))
        elif k is ActionKind.CONFIGURE_DC:
            master, second = action.targets[0], action.targets[-1]
            if master != serving:
                err(action, "master_not_serving")
                continue
            if second == serving or second in secondary:
                err(action, "already_attached")
                continue
            if not network.can_attach(action.ue_id, second):
                err(action, "not_eligible")
                continue
            network.apply_configure_dc(action.ue_id, master, second)
            leg_event("reconfigure", action, master)
            leg_event("add_leg", action, second)
            applied.append(HistoryEntry(epoch_index, action))
        elif k is ActionKind.RELEASE_LEG:
            target = action.targets[0]
            if target not in secondary:
                err(action, "not_attached")
                continue
            network.apply_release_leg(action.ue_id, target)
            leg_event("release_leg", action, target)
            applied.append(HistoryEntry(epoch_index, action))
        else:  # pragma: no cover - enum is closed
            err(action, "unknown_kind")
    return applied, events


# ---------------------------------------------------------------------------
# controller
# ---------------------------------------------------------------------------

class UtsController:
    """Drives one steering epoch: evaluate, mature, resolve, apply."""

    def __init__(self, registry: PluginRegistry, strategy: MnoStrategy):
        self.registry = registry
        self.strategy = strategy
        self.history: list[HistoryEntry] = []
        self._streaks: dict[tuple, tuple[int, int]] = {}

    def _mature(self, candidates: Sequence[SteeringAction], epoch: int) -> list[SteeringAction]:
        """Keep candidates proposed in ``time_to_trigger`` consecutive epochs."""
        ttt = self.strategy.time_to_trigger_epochs
        fresh: dict[tuple, tuple[int, int]] = {}
        out = []
        for c in candidates:
            key = (c.feature_id, c.ue_id, c.kind, c.targets)
            last, run = self._streaks.get(key, (None, 0))
            run = run + 1 if last == epoch - 1 else 1
            fresh[key] = (epoch, run)
            if run >= ttt:
                out.append(c)
        self._streaks = fresh
        return out

    def step(self, snapshot: NetworkSnapshot, network, slot: int):
        """One steering epoch; returns (applied history entries, events)."""
        ctx = collect_context(snapshot)
        candidates = evaluate_features(ctx, self.registry, self.strategy)
        matured = self._mature(candidates, snapshot.epoch_index)
        final = resolve_conflicts(matured, self.strategy, self.history, snapshot.epoch_index)
        applied, events = apply_actions(network, final, slot, snapshot.epoch_index)
        self.history.extend(applied)
        return applied, events
