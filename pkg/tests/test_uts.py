"""Traffic steering: context collection, feature evaluation, conflict resolution,
and atomic application against a fake network."""

import dataclasses

import pytest

from rrmsim.abstraction import FeatureRecord, PluginLocation, PluginRegistry, describe_cell
from rrmsim.core import CellClass, TrafficClass
from rrmsim.uts import (
    ActionKind,
    CellState,
    DUAL_CONN_ID,
    HistoryEntry,
    LOAD_BALANCE_ID,
    MnoStrategy,
    NetworkSnapshot,
    SteeringAction,
    UeState,
    UndeclaredActionError,
    UnrankedFeatureError,
    UtsController,
    apply_actions,
    collect_context,
    evaluate_features,
    register_builtins,
    resolve_conflicts,
    select_strategy,
)

from conftest import mk_cell, mk_grid


# ---------------------------------------------------------------------------
# snapshot / context plumbing
# ---------------------------------------------------------------------------

def _cell_state(cell_id, demand, capacity=50.0, cell_class=CellClass.MACRO, **cell_kw):
    cell = mk_cell(cell_id, cell_class=cell_class, grid=mk_grid(prbs=int(capacity)), **cell_kw)
    load = min(1.0, demand / capacity)
    return CellState(cell_id, demand, capacity, describe_cell(cell, load))


def _ue_state(ue_id, serving, rsrp, secondary=(), services=(TrafficClass.EMBB,),
              caps=("nr",), eligible=None, rate=0.0):
    return UeState(
        ue_id=ue_id,
        serving_cell=serving,
        secondary_cells=tuple(secondary),
        rsrp_dbm_by_cell=dict(rsrp),
        services=tuple(services),
        capabilities=frozenset(caps),
        eligible_cells=tuple(eligible if eligible is not None else rsrp),
        rate_bps=rate,
    )


def _snapshot(cells, ues, epoch=0, tag="default"):
    return NetworkSnapshot(epoch_index=epoch, scenario_tag=tag, cells=tuple(cells), ues=tuple(ues))


def two_cell_snapshot(load_a=0.9, load_b=0.2, epoch=0, n_ues=3):
    """Hot cell / cold cell pair with mMTC-only UEs, so of the built-in
    features only load balancing has anything to say."""
    cells = [_cell_state("ca", load_a * 50), _cell_state("cb", load_b * 50)]
    ues = [
        _ue_state(f"u{i}", "ca", {"ca": -80.0, "cb": -90.0}, services=(TrafficClass.MMTC,))
        for i in range(n_ues)
    ]
    return _snapshot(cells, ues, epoch=epoch)


def test_collect_context_uses_common_units_only():
    snap = two_cell_snapshot(load_a=0.5, load_b=1.4)
    ctx = collect_context(snap)
    assert ctx.cell_load["ca"].value == pytest.approx(0.5)
    assert ctx.cell_load["cb"].value == 1.0  # clamped, not raw PRBs
    # -90 dBm over the -140 dBm floor
    assert ctx.ue_signal["u0"]["cb"].value == pytest.approx(50.0)
    assert ctx.ue_serving["u0"] == "ca"
    assert ctx.cell_descriptors["ca"].coverage_class == "wide"


# ---------------------------------------------------------------------------
# feature evaluation
# ---------------------------------------------------------------------------

def _registry():
    return register_builtins(PluginRegistry())


def _strategy(**kw):
    defaults = dict(
        name="t",
        scenario_tag="any",
        ranking=(LOAD_BALANCE_ID, "carrier_aggregation", DUAL_CONN_ID),
        hysteresis_epochs=4,
        time_to_trigger_epochs=1,
    )
    defaults.update(kw)
    return MnoStrategy(**defaults)


def test_load_balance_feature_proposes_handover():
    ctx = collect_context(two_cell_snapshot(load_a=0.9, load_b=0.2))
    actions = evaluate_features(ctx, _registry(), _strategy())
    handovers = [a for a in actions if a.kind is ActionKind.HANDOVER]
    assert len(handovers) == 1
    assert handovers[0].ue_id == "u0" and handovers[0].targets == ("cb",)
    assert handovers[0].feature_id == LOAD_BALANCE_ID


def test_thresholds_come_from_strategy_over_defaults():
    ctx = collect_context(two_cell_snapshot(load_a=0.7, load_b=0.2))
    none = evaluate_features(ctx, _registry(), _strategy())
    assert not any(a.kind is ActionKind.HANDOVER for a in none)  # 0.7 < default 0.8
    eager = _strategy(thresholds={LOAD_BALANCE_ID: {"high_load": 0.6}})
    some = evaluate_features(ctx, _registry(), eager)
    assert any(a.kind is ActionKind.HANDOVER for a in some)


def test_dual_connectivity_splits_by_capability():
    cells = [_cell_state("ca", 10.0), _cell_state("cb", 10.0)]
    ues = [
        _ue_state("u-dc", "ca", {"ca": -80.0, "cb": -85.0}, caps=("nr", "dual_connectivity")),
        _ue_state("u-plain", "ca", {"ca": -80.0, "cb": -85.0}),
    ]
    ctx = collect_context(_snapshot(cells, ues))
    actions = evaluate_features(ctx, _registry(), _strategy())
    by_ue = {a.ue_id: a for a in actions if a.feature_id == DUAL_CONN_ID}
    assert by_ue["u-dc"].kind is ActionKind.CONFIGURE_DC
    assert by_ue["u-dc"].targets == ("ca", "cb")  # master stays the serving cell
    assert by_ue["u-plain"].kind is ActionKind.OFFLOAD
    assert by_ue["u-plain"].targets == ("cb",)


def test_feature_cannot_propose_undeclared_action_kind():
    reg = PluginRegistry()
    rec = FeatureRecord(
        feature_id="rogue",
        inputs=("cell_load",),
        outputs=(ActionKind.HANDOVER.value,),  # declares handover only
        location=PluginLocation.BELOW_UTS,
        interacts_with=("none",),
        scenarios=("any",),
    )
    reg.register(rec, lambda ctx, r, thr: [
        SteeringAction(ActionKind.OFFLOAD, "u0", ("cb",), "rogue")
    ])
    ctx = collect_context(two_cell_snapshot())
    with pytest.raises(UndeclaredActionError):
        evaluate_features(ctx, reg, _strategy(ranking=("rogue",)))


def test_feature_cannot_impersonate_another():
    reg = PluginRegistry()
    rec = FeatureRecord("honest", ("cell_load",), (ActionKind.HANDOVER.value,),
                        PluginLocation.BELOW_UTS, ("none",), ("any",))
    reg.register(rec, lambda ctx, r, thr: [
        SteeringAction(ActionKind.HANDOVER, "u0", ("cb",), "somebody_else")
    ])
    with pytest.raises(UndeclaredActionError):
        evaluate_features(collect_context(two_cell_snapshot()), reg, _strategy())


def test_scenario_scoping_filters_features():
    reg = PluginRegistry()
    rec = FeatureRecord("niche", ("cell_load",), (ActionKind.HANDOVER.value,),
                        PluginLocation.BELOW_UTS, ("none",), ("factory-floor",))
    calls = []
    reg.register(rec, lambda ctx, r, thr: calls.append(1) or [])
    evaluate_features(collect_context(two_cell_snapshot()), reg, _strategy())
    assert calls == []  # tag "default" not covered
    snap = dataclasses.replace(two_cell_snapshot(), scenario_tag="factory-floor")
    evaluate_features(collect_context(snap), reg, _strategy())
    assert calls == [1]


def test_evaluation_is_pure_and_repeatable():
    ctx = collect_context(two_cell_snapshot())
    reg, strat = _registry(), _strategy()
    assert evaluate_features(ctx, reg, strat) == evaluate_features(ctx, reg, strat)


# ---------------------------------------------------------------------------
# conflict resolution
# ---------------------------------------------------------------------------

def _act(kind, ue, targets, fid):
    return SteeringAction(kind, ue, tuple(targets), fid)


def test_resolution_keeps_one_action_per_ue_by_ranking():
    cands = [
        _act(ActionKind.CONFIGURE_DC, "u1", ("ca", "cb"), DUAL_CONN_ID),
        _act(ActionKind.HANDOVER, "u1", ("cb",), LOAD_BALANCE_ID),
        _act(ActionKind.HANDOVER, "u2", ("cb",), LOAD_BALANCE_ID),
    ]
    out = resolve_conflicts(cands, _strategy(), history=[], epoch_index=0)
    assert [(a.ue_id, a.kind) for a in out] == [
        ("u1", ActionKind.HANDOVER),  # load balance outranks DC in this strategy
        ("u2", ActionKind.HANDOVER),
    ]
    flipped = _strategy(ranking=(DUAL_CONN_ID, LOAD_BALANCE_ID, "carrier_aggregation"))
    out = resolve_conflicts(cands, flipped, history=[], epoch_index=0)
    assert out[0].kind is ActionKind.CONFIGURE_DC


def test_resolution_rejects_unranked_features():
    cands = [_act(ActionKind.HANDOVER, "u1", ("cb",), "mystery")]
    with pytest.raises(UnrankedFeatureError):
        resolve_conflicts(cands, _strategy(), history=[], epoch_index=0)


def test_resolution_suppresses_reversals_inside_hysteresis():
    applied = HistoryEntry(
        epoch_index=10,
        action=_act(ActionKind.HANDOVER, "u1", ("cb",), LOAD_BALANCE_ID),
        prev_serving="ca",
    )
    back = _act(ActionKind.HANDOVER, "u1", ("ca",), LOAD_BALANCE_ID)
    strat = _strategy(hysteresis_epochs=4)
    assert resolve_conflicts([back], strat, [applied], epoch_index=12) == []
    # outside the window the reversal is allowed again
    assert resolve_conflicts([back], strat, [applied], epoch_index=15) == [back]
    # an unrelated move is never suppressed
    elsewhere = _act(ActionKind.HANDOVER, "u1", ("cc",), LOAD_BALANCE_ID)
    assert resolve_conflicts([elsewhere], strat, [applied], epoch_index=12) == [elsewhere]


def test_resolution_suppresses_leg_flapping():
    grew = HistoryEntry(
        epoch_index=5, action=_act(ActionKind.CONFIGURE_DC, "u1", ("ca", "cb"), DUAL_CONN_ID)
    )
    drop = _act(ActionKind.RELEASE_LEG, "u1", ("cb",), DUAL_CONN_ID)
    strat = _strategy(hysteresis_epochs=6)
    assert resolve_conflicts([drop], strat, [grew], epoch_index=8) == []
    assert resolve_conflicts([drop], strat, [grew], epoch_index=20) == [drop]


def test_resolution_output_is_sorted_and_deterministic():
    cands = [
        _act(ActionKind.HANDOVER, "u2", ("cb",), LOAD_BALANCE_ID),
        _act(ActionKind.HANDOVER, "u1", ("cb",), LOAD_BALANCE_ID),
    ]
    out = resolve_conflicts(cands, _strategy(), [], 0)
    assert [a.ue_id for a in out] == ["u1", "u2"]


def test_select_strategy_prefers_exact_tag():
    a = MnoStrategy(name="generic", scenario_tag="any")
    b = MnoStrategy(name="dense", scenario_tag="dense-urban")
    assert select_strategy([a, b], "dense-urban").name == "dense"
    assert select_strategy([a, b], "rural").name == "generic"
    with pytest.raises(KeyError):
        select_strategy([b], "rural")


# ---------------------------------------------------------------------------
# application
# ---------------------------------------------------------------------------

class FakeNetwork:
    """Minimal steerable network: serving/secondary maps plus a mutation log."""

    def __init__(self, cells, serving, eligible=None):
        self.cells = set(cells)
        self.serving = dict(serving)
        self.secondary = {u: [] for u in serving}
        self.eligible = eligible or {u: set(cells) for u in serving}
        self.log = []

    def has_cell(self, cell_id):
        return cell_id in self.cells

    def has_ue(self, ue_id):
        return ue_id in self.serving

    def serving_cell(self, ue_id):
        return self.serving[ue_id]

    def secondary_cells(self, ue_id):
        return tuple(self.secondary[ue_id])

    def can_attach(self, ue_id, cell_id):
        return cell_id in self.eligible[ue_id]

    def apply_handover(self, ue_id, target):
        prev, self.serving[ue_id] = self.serving[ue_id], target
        self.log.append(("handover", ue_id, target))
        return prev

    apply_offload = apply_handover

    def apply_add_secondary(self, ue_id, target):
        self.secondary[ue_id].append(target)
        self.log.append(("add_secondary", ue_id, target))

    def apply_release_secondary(self, ue_id, target):
        self.secondary[ue_id].remove(target)
        self.log.append(("release_secondary", ue_id, target))

    def apply_configure_dc(self, ue_id, master, second):
        self.secondary[ue_id].append(second)
        self.log.append(("configure_dc", ue_id, master, second))

    def apply_release_leg(self, ue_id, target):
        self.secondary[ue_id].remove(target)
        self.log.append(("release_leg", ue_id, target))


def test_apply_handover_records_history_and_leg_events():
    net = FakeNetwork({"ca", "cb"}, {"u1": "ca"})
    act = _act(ActionKind.HANDOVER, "u1", ("cb",), LOAD_BALANCE_ID)
    hist, events = apply_actions(net, [act], slot=100, epoch_index=1)
    assert net.serving["u1"] == "cb"
    assert [h.prev_serving for h in hist] == ["ca"]
    assert [e.kind for e in events] == ["release_leg", "add_leg"]
    assert events[1].get("cell") == "cb"


def test_apply_skips_invalid_actions_without_mutating():
    net = FakeNetwork({"ca", "cb"}, {"u1": "ca"})
    bad = [
        _act(ActionKind.HANDOVER, "ghost", ("cb",), LOAD_BALANCE_ID),
        _act(ActionKind.HANDOVER, "u1", ("nowhere",), LOAD_BALANCE_ID),
        _act(ActionKind.HANDOVER, "u1", ("ca",), LOAD_BALANCE_ID),  # already serving
        _act(ActionKind.RELEASE_LEG, "u1", ("cb",), DUAL_CONN_ID),  # not attached
    ]
    hist, events = apply_actions(net, bad, slot=0, epoch_index=0)
    assert hist == []
    assert net.log == []
    assert [e.kind for e in events] == ["steer_error"] * 4
    reasons = [e.get("reason") for e in events]
    assert reasons == ["unknown_ue", "unknown_target", "already_serving", "not_attached"]


def test_apply_configure_dc_requires_master_to_serve():
    net = FakeNetwork({"ca", "cb"}, {"u1": "ca"})
    wrong = _act(ActionKind.CONFIGURE_DC, "u1", ("cb", "ca"), DUAL_CONN_ID)
    hist, events = apply_actions(net, [wrong], slot=0, epoch_index=0)
    assert hist == [] and events[0].get("reason") == "master_not_serving"
    right = _act(ActionKind.CONFIGURE_DC, "u1", ("ca", "cb"), DUAL_CONN_ID)
    hist, events = apply_actions(net, [right], slot=0, epoch_index=0)
    assert net.secondary["u1"] == ["cb"]
    assert [e.kind for e in events] == ["reconfigure", "add_leg"]


def test_apply_respects_eligibility():
    net = FakeNetwork({"ca", "cb"}, {"u1": "ca"}, eligible={"u1": {"ca"}})
    act = _act(ActionKind.HANDOVER, "u1", ("cb",), LOAD_BALANCE_ID)
    hist, events = apply_actions(net, [act], slot=0, epoch_index=0)
    assert hist == [] and events[0].get("reason") == "not_eligible"


# ---------------------------------------------------------------------------
# closed-loop controller
# ---------------------------------------------------------------------------

def test_controller_waits_for_time_to_trigger():
    reg = _registry()
    strat = _strategy(time_to_trigger_epochs=2)
    ctrl = UtsController(reg, strat)
    net = FakeNetwork({"ca", "cb"}, {f"u{i}": "ca" for i in range(3)})
    applied, _ = ctrl.step(two_cell_snapshot(epoch=0), net, slot=0)
    assert applied == []  # first sighting is not enough
    applied, _ = ctrl.step(two_cell_snapshot(epoch=1), net, slot=100)
    assert [a.action.kind for a in applied] == [ActionKind.HANDOVER]
    assert ctrl.history == applied


def test_controller_streak_resets_on_gap():
    reg = _registry()
    ctrl = UtsController(reg, _strategy(time_to_trigger_epochs=2))
    net = FakeNetwork({"ca", "cb"}, {f"u{i}": "ca" for i in range(3)})
    ctrl.step(two_cell_snapshot(epoch=0), net, slot=0)
    # epoch 1: condition clears, streak dies
    ctrl.step(two_cell_snapshot(load_a=0.1, epoch=1), net, slot=100)
    applied, _ = ctrl.step(two_cell_snapshot(epoch=2), net, slot=200)
    assert applied == []  # must re-earn the trigger


def test_controller_never_reverses_within_hysteresis():
    """Drive an oscillating load pattern; the history gate must hold the line."""
    reg = _registry()
    strat = _strategy(time_to_trigger_epochs=1, hysteresis_epochs=8)
    ctrl = UtsController(reg, strat)
    net = FakeNetwork({"ca", "cb"}, {"u0": "ca", "u1": "ca", "u2": "ca"})
    moves = []
    for epoch in range(12):
        hot, cold = ("ca", "cb") if epoch % 2 == 0 else ("cb", "ca")
        cells = [_cell_state(hot, 45.0), _cell_state(cold, 5.0)]
        ues = [
            _ue_state(u, net.serving[u], {"ca": -80.0, "cb": -82.0})
            for u in sorted(net.serving)
        ]
        applied, _ = ctrl.step(_snapshot(cells, ues, epoch=epoch), net, slot=epoch * 100)
        moves.extend(
            (epoch, h.action.ue_id, h.action.targets[-1], h.prev_serving)
            for h in applied
            if h.action.kind in (ActionKind.HANDOVER, ActionKind.OFFLOAD)
        )
    assert moves  # the oscillation must generate some serving changes
    # no UE ever moves back to a cell it left within the previous 8 epochs
    for i, (ep, ue, tgt, prev) in enumerate(moves):
        for ep2, ue2, tgt2, prev2 in moves[:i]:
            if ue2 == ue and ep - ep2 <= 8:
                assert tgt != prev2, f"ping-pong: {ue} returned to {tgt} at epoch {ep}"
