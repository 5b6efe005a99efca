"""Middleware: common units, rate mapping, descriptors, plugin registry."""

import math

import pytest

from rrmsim.abstraction import (
    CAPACITY_REF_SINR_DB,
    CapabilityDescriptor,
    DuplicateIdError,
    FeatureRecord,
    MeasureKind,
    PluginLocation,
    PluginRegistry,
    RawMeasure,
    SINR_CAP_DB,
    UnknownKindError,
    capacity_score,
    describe_cell,
    link_rate,
    register_plugin,
    to_common_unit,
)
from rrmsim.core import CellClass

from conftest import mk_cell, mk_grid


# ---------------------------------------------------------------------------
# unit conversion
# ---------------------------------------------------------------------------

def test_rsrp_converts_to_db_above_floor():
    m = to_common_unit(RawMeasure("rsrp_dbm", -100.0))
    assert m.kind is MeasureKind.SIGNAL_DB
    assert m.value == pytest.approx(40.0)


def test_linear_sinr_converts_to_db():
    m = to_common_unit(RawMeasure("sinr_linear", 100.0))
    assert m.kind is MeasureKind.SIGNAL_DB
    assert m.value == pytest.approx(20.0)
    with pytest.raises(ValueError):
        to_common_unit(RawMeasure("sinr_linear", 0.0))


def test_queue_occupancy_converts_to_load_fraction():
    m = to_common_unit(RawMeasure("queue_occupancy", 30.0, capacity=60.0))
    assert m.kind is MeasureKind.LOAD_FRACTION
    assert m.value == pytest.approx(0.5)
    # overload clamps at 1 instead of leaking raw units upward
    assert to_common_unit(RawMeasure("queue_occupancy", 90.0, capacity=60.0)).value == 1.0
    with pytest.raises(ValueError):
        to_common_unit(RawMeasure("queue_occupancy", 5.0))


def test_unknown_measurement_kind_is_rejected():
    with pytest.raises(UnknownKindError):
        to_common_unit(RawMeasure("rssi_vendor_units", 17.0))


def test_conversions_preserve_order():
    """Better raw measurements never convert to worse common measurements."""
    last = None
    for dbm in range(-140, -40, 5):
        v = to_common_unit(RawMeasure("rsrp_dbm", float(dbm))).value
        assert last is None or v > last
        last = v
    last = None
    for q in range(0, 120, 10):
        v = to_common_unit(RawMeasure("queue_occupancy", float(q), capacity=100.0)).value
        assert last is None or v >= last
        last = v


# ---------------------------------------------------------------------------
# rate mapping
# ---------------------------------------------------------------------------

def test_link_rate_reference_point():
    # 180 kHz * 1 ms * log2(1 + 1) = 180 bits for one PRB at 0 dB
    g = mk_grid(prb_bw=180e3, numerology=0)
    assert link_rate(0.0, 1, 1.0, g) == 180.0
    assert link_rate(0.0, 0, 1.0, g) == 0.0


def test_link_rate_is_exactly_linear_in_prbs():
    g = mk_grid()
    one = link_rate(13.7, 1, 0.85, g)
    for n in (2, 3, 17, 50):
        assert link_rate(13.7, n, 0.85, g) == n * one


def test_link_rate_monotone_and_capped():
    g = mk_grid()
    rates = [link_rate(s, 4, 1.0, g) for s in range(-10, 45, 5)]
    assert all(b >= a for a, b in zip(rates, rates[1:]))
    assert link_rate(SINR_CAP_DB, 8, 1.0, g) == link_rate(SINR_CAP_DB + 25.0, 8, 1.0, g)


def test_link_rate_efficiency_knob():
    g = mk_grid(prb_bw=180e3)
    full = link_rate(0.0, 1, 1.0, g)
    assert link_rate(0.0, 1, 0.5, g) == math.floor(full * 0.5)
    with pytest.raises(ValueError):
        link_rate(0.0, 1, 0.0, g)
    with pytest.raises(ValueError):
        link_rate(0.0, 1, 1.5, g)


def test_capacity_score_is_whole_grid_at_reference_sinr():
    g = mk_grid(prbs=40)
    assert capacity_score(g) == 40 * link_rate(CAPACITY_REF_SINR_DB, 1, 1.0, g)


# ---------------------------------------------------------------------------
# capability descriptors
# ---------------------------------------------------------------------------

def test_descriptor_classes_follow_geometry():
    macro = mk_cell(cell_class=CellClass.MACRO, grid=mk_grid(numerology=0))
    small = mk_cell("s1", cell_class=CellClass.SMALL, grid=mk_grid(numerology=1, carrier_hz=3.5e9))
    d_macro = describe_cell(macro, 0.3)
    d_small = describe_cell(small, 0.3)
    assert d_macro.coverage_class == "wide" and d_macro.latency_class == "normal"
    assert d_small.coverage_class == "local" and d_small.latency_class == "low"
    assert d_macro.current_load == 0.3


def test_descriptor_ignores_technology_label():
    """Two cells that differ only in their RAT label describe identically."""
    a = mk_cell("c", rat_tag="lte")
    b = mk_cell("c", rat_tag="proprietary-mesh")
    assert describe_cell(a, 0.5) == describe_cell(b, 0.5)


def test_descriptor_field_validation():
    with pytest.raises(ValueError):
        CapabilityDescriptor("c", -1.0, "low", "wide", True, True, 0.0)
    with pytest.raises(ValueError):
        CapabilityDescriptor("c", 1.0, "tiny", "wide", True, True, 0.0)
    with pytest.raises(ValueError):
        CapabilityDescriptor("c", 1.0, "low", "wide", True, True, 1.5)


# ---------------------------------------------------------------------------
# plugin registry
# ---------------------------------------------------------------------------

def _rec(fid, interacts=("none",)):
    return FeatureRecord(
        feature_id=fid,
        inputs=("cell_load",),
        outputs=("handover",),
        location=PluginLocation.BELOW_UTS,
        interacts_with=interacts,
        scenarios=("any",),
    )


def test_registry_register_and_lookup():
    reg = PluginRegistry()
    register_plugin(reg, _rec("f1"), evaluator=lambda ctx, rec, thr: [])
    register_plugin(reg, _rec("f2"))
    assert reg.ids() == ["f1", "f2"]
    assert reg.get("f1").feature_id == "f1"
    assert callable(reg.evaluator_for("f1"))
    assert reg.evaluator_for("f2") is None
    assert "f1" in reg and len(reg) == 2
    with pytest.raises(KeyError):
        reg.get("nope")


def test_registry_refuses_duplicate_ids():
    reg = PluginRegistry()
    register_plugin(reg, _rec("f1"))
    with pytest.raises(DuplicateIdError):
        register_plugin(reg, _rec("f1"))


def test_registry_resolves_interactions_lazily():
    reg = PluginRegistry()
    # f1 names f2 before f2 exists; resolution happens at lookup time
    register_plugin(reg, _rec("f1", interacts=("f2",)))
    register_plugin(reg, _rec("f2"))
    assert [r.feature_id for r in reg.interactions("f1")] == ["f2"]
    assert reg.interactions("f2") == []


def test_feature_record_requires_all_four_declarations():
    with pytest.raises(ValueError):
        FeatureRecord("f", (), ("handover",), PluginLocation.BELOW_UTS, ("none",), ("any",))
    with pytest.raises(ValueError):
        FeatureRecord("f", ("x",), ("handover",), PluginLocation.BELOW_UTS, ("none",), ())
