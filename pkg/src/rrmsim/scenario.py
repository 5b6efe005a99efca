"""Scenario configuration: parsing, validation, defaults, serialization.

A scenario is a plain mapping (usually YAML on disk) with sections for the
network, UEs, traffic flows, and the MAC / flow-control / steering / sim
knobs. Parsing is strict: unknown keys and out-of-range values are collected
and reported together, each with its config path. ``scenario_to_dict`` emits
every field, so a serialized config re-parses to an equal one.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import yaml

from .core import (
    CarrierGrid,
    Cell,
    CellClass,
    TrafficClass,
    UserEquipment,
)
from .pdcp import Mode
from .traffic import GENERATOR_KINDS, make_generator
from .uts import (
    CARRIER_AGG_ID,
    DEFAULT_SERVICE_MODES,
    DEFAULT_THRESHOLDS,
    DUAL_CONN_ID,
    LOAD_BALANCE_ID,
)

BUILTIN_FEATURE_IDS = (LOAD_BALANCE_ID, CARRIER_AGG_ID, DUAL_CONN_ID)

DEFAULT_TX_POWER_DBM = {
    CellClass.MACRO: 43.0,
    CellClass.SMALL: 30.0,
    CellClass.AP: 23.0,
}


class ParseError(Exception):
    """The input was not a readable mapping at all."""


class ValidationError(Exception):
    """One or more config fields failed validation."""

    def __init__(self, failures: list[tuple[str, str]]):
        self.failures = failures
        lines = "; ".join(f"{p}: {r}" for p, r in failures)
        super().__init__(f"{len(failures)} config error(s): {lines}")


@dataclass(frozen=True)
class PortionConfig:
    key: str
    required_capability: str | None = None
    waveform_efficiency: float = 1.0


@dataclass(frozen=True)
class CellConfig:
    cell_id: str
    cell_class: CellClass = CellClass.MACRO
    rat_tag: str = "nr"
    carrier_hz: float = 2.0e9
    prbs_per_slot: int = 50
    numerology: int = 0
    prb_bandwidth_hz: float = 180e3
    position: tuple[float, float] = (0.0, 0.0)
    tx_power_dbm: float | None = None
    supports_duplication: bool = True
    supports_secondary: bool = True
    drop_prob: float = 0.0
    portions: tuple[PortionConfig, ...] = (PortionConfig(key="main"),)

    def effective_tx_power_dbm(self) -> float:
        if self.tx_power_dbm is not None:
            return self.tx_power_dbm
        return DEFAULT_TX_POWER_DBM[self.cell_class]


@dataclass(frozen=True)
class UeConfig:
    ue_id: str
    position: tuple[float, float] = (0.0, 0.0)
    velocity: tuple[float, float] = (0.0, 0.0)
    capabilities: tuple[str, ...] = ("nr",)
    serving_cell: str | None = None


@dataclass(frozen=True)
class FlowConfig:
    flow_id: str
    ue_id: str
    service: TrafficClass
    generator_kind: str = "full_buffer"
    generator_params: dict = field(default_factory=dict)
    slice_id: str | None = None
    sps_period_slots: int | None = None
    sps_prbs: int | None = None
    sps_offset_slots: int = 0


@dataclass(frozen=True)
class MacSection:
    epoch_slots: int = 10
    min_guarantee_prbs: int = 1
    access_cost_prbs: int = 1
    pf_ewma: float = 0.01
    pf_initial_avg_bits: float = 1.0
    demand_sinr_db: float = 10.0
    backoff_min_epochs: int = 1
    backoff_max_epochs: int = 8


@dataclass(frozen=True)
class PdcpSection:
    t_reorder_slots: int = 50
    leave_load: float = 0.8
    enter_load: float = 0.5
    service_modes: tuple[tuple[TrafficClass, Mode], ...] = tuple(
        sorted(DEFAULT_SERVICE_MODES.items(), key=lambda kv: kv[0].value)
    )

    def mode_for(self, service: TrafficClass) -> Mode:
        for svc, mode in self.service_modes:
            if svc is service:
                return mode
        return Mode.AGGREGATE


@dataclass(frozen=True)
class UtsSection:
    enabled: bool = True
    epoch_slots: int = 100
    scenario_tag: str = "default"
    features: tuple[str, ...] = BUILTIN_FEATURE_IDS
    ranking: tuple[str, ...] = ()
    thresholds: tuple[tuple[str, tuple[tuple[str, float], ...]], ...] = ()
    hysteresis_epochs: int = 10
    time_to_trigger_epochs: int = 2

    def effective_ranking(self) -> tuple[str, ...]:
        return self.ranking if self.ranking else self.features

    def thresholds_dict(self) -> dict[str, dict[str, float]]:
        return {fid: dict(kv) for fid, kv in self.thresholds}


@dataclass(frozen=True)
class ChannelSection:
    fading_scale: float = 1.0
    fading_seed: int | None = None
    noise_psd_dbm_hz: float = -174.0
    interference_margin_db: float = 3.0
    min_distance_m: float = 1.0


@dataclass(frozen=True)
class SimSection:
    horizon_slots: int = 1000
    seed: int = 0


@dataclass(frozen=True)
class ScenarioConfig:
    name: str = "scenario"
    sim: SimSection = SimSection()
    channel: ChannelSection = ChannelSection()
    cells: tuple[CellConfig, ...] = ()
    ues: tuple[UeConfig, ...] = ()
    flows: tuple[FlowConfig, ...] = ()
    mac: MacSection = MacSection()
    pdcp: PdcpSection = PdcpSection()
    uts: UtsSection = UtsSection()


class _Reader:
    """Walks a raw mapping, collecting (path, reason) failures as it goes."""

    def __init__(self):
        self.failures: list[tuple[str, str]] = []

    def fail(self, path: str, reason: str):
        self.failures.append((path, reason))

    def mapping(self, raw, path: str) -> dict:
        if raw is None:
            return {}
        if not isinstance(raw, dict):
            self.fail(path, f"expected a mapping, got {type(raw).__name__}")
            return {}
        return raw

    def seq(self, raw, path: str) -> list:
        if raw is None:
            return []
        if not isinstance(raw, list):
            self.fail(path, f"expected a list, got {type(raw).__name__}")
            return []
        return raw

    def reject_unknown(self, raw: dict, known: set[str], path: str):
        for key in raw:
            if key not in known:
                self.fail(f"{path}.{key}" if path else str(key), "unknown key")

    def get(self, raw: dict, key: str, kind, default, path: str):
        if key not in raw or raw[key] is None:
            return default
        val = raw[key]
        where = f"{path}.{key}" if path else key
        if kind is float:
            if isinstance(val, bool) or not isinstance(val, (int, float)):
                self.fail(where, f"expected a number, got {val!r}")
                return default
            return float(val)
        if kind is int:
            if isinstance(val, bool) or not isinstance(val, int):
                self.fail(where, f"expected an integer, got {val!r}")
                return default
            return val
        if kind is bool:
            if not isinstance(val, bool):
                self.fail(where, f"expected a boolean, got {val!r}")
                return default
            return val
        if kind is str:
            if not isinstance(val, str) or not val:
                self.fail(where, f"expected a non-empty string, got {val!r}")
                return default
            return val
        raise TypeError(kind)

    def pair(self, raw: dict, key: str, default, path: str) -> tuple[float, float]:
        if key not in raw or raw[key] is None:
            return default
        val = raw[key]
        where = f"{path}.{key}"
        if (
            not isinstance(val, list)
            or len(val) != 2
            or any(isinstance(v, bool) or not isinstance(v, (int, float)) for v in val)
        ):
            self.fail(where, f"expected [x, y] numbers, got {val!r}")
            return default
        return (float(val[0]), float(val[1]))

    def enum(self, raw: dict, key: str, enum_cls, default, path: str):
        if key not in raw or raw[key] is None:
            return default
        val = raw[key]
        where = f"{path}.{key}"
        try:
            return enum_cls(val)
        except ValueError:
            ok = ", ".join(e.value for e in enum_cls)
            self.fail(where, f"expected one of ({ok}), got {val!r}")
            return default


def _read_portion(r: _Reader, raw, path: str, index: int) -> PortionConfig:
    m = r.mapping(raw, path)
    r.reject_unknown(m, {"key", "required_capability", "waveform_efficiency"}, path)
    key = r.get(m, "key", str, f"portion{index}", path)
    cap = r.get(m, "required_capability", str, None, path)
    eff = r.get(m, "waveform_efficiency", float, 1.0, path)
    if not (0.0 < eff <= 1.0):
        r.fail(f"{path}.waveform_efficiency", f"must be in (0, 1], got {eff}")
        eff = 1.0
    return PortionConfig(key=key, required_capability=cap, waveform_efficiency=eff)


def _read_cell(r: _Reader, raw, path: str, index: int) -> CellConfig:
    m = r.mapping(raw, path)
    known = {
        "id", "class", "rat", "carrier_hz", "prbs_per_slot", "numerology",
        "prb_bandwidth_hz", "position", "tx_power_dbm", "supports_duplication",
        "supports_secondary", "drop_prob", "portions",
    }
    r.reject_unknown(m, known, path)
    cid = r.get(m, "id", str, f"cell{index}", path)
    cls = r.enum(m, "class", CellClass, CellClass.MACRO, path)
    portions_raw = r.seq(m.get("portions"), f"{path}.portions")
    portions = tuple(
        _read_portion(r, p, f"{path}.portions[{i}]", i) for i, p in enumerate(portions_raw)
    ) or (PortionConfig(key="main"),)
    if len(portions) > 2:
        r.fail(f"{path}.portions", f"at most 2 portions may share a carrier, got {len(portions)}")
        portions = portions[:2]
    keys = [p.key for p in portions]
    if len(set(keys)) != len(keys):
        r.fail(f"{path}.portions", f"portion keys must be unique, got {keys}")
    drop = r.get(m, "drop_prob", float, 0.0, path)
    if not (0.0 <= drop < 1.0):
        r.fail(f"{path}.drop_prob", f"must be in [0, 1), got {drop}")
        drop = 0.0
    cfg = CellConfig(
        cell_id=cid,
        cell_class=cls,
        rat_tag=r.get(m, "rat", str, "nr", path),
        carrier_hz=r.get(m, "carrier_hz", float, 2.0e9, path),
        prbs_per_slot=r.get(m, "prbs_per_slot", int, 50, path),
        numerology=r.get(m, "numerology", int, 0, path),
        prb_bandwidth_hz=r.get(m, "prb_bandwidth_hz", float, 180e3, path),
        position=r.pair(m, "position", (0.0, 0.0), path),
        tx_power_dbm=(
            r.get(m, "tx_power_dbm", float, None, path) if "tx_power_dbm" in m else None
        ),
        supports_duplication=r.get(m, "supports_duplication", bool, True, path),
        supports_secondary=r.get(m, "supports_secondary", bool, True, path),
        drop_prob=drop,
        portions=portions,
    )
    try:
        CarrierGrid(cfg.carrier_hz, cfg.prbs_per_slot, cfg.numerology, cfg.prb_bandwidth_hz)
    except ValueError as e:
        r.fail(path, str(e))
    return cfg


def _read_ue(r: _Reader, raw, path: str, index: int) -> UeConfig:
    m = r.mapping(raw, path)
    r.reject_unknown(m, {"id", "position", "velocity", "capabilities", "serving_cell"}, path)
    caps_raw = r.seq(m.get("capabilities"), f"{path}.capabilities")
    caps = tuple(c for c in caps_raw if isinstance(c, str) and c)
    if caps_raw and len(caps) != len(caps_raw):
        r.fail(f"{path}.capabilities", "capabilities must be non-empty strings")
    if not caps:
        caps = ("nr",)
    return UeConfig(
        ue_id=r.get(m, "id", str, f"ue{index}", path),
        position=r.pair(m, "position", (0.0, 0.0), path),
        velocity=r.pair(m, "velocity", (0.0, 0.0), path),
        capabilities=caps,
        serving_cell=r.get(m, "serving_cell", str, None, path),
    )


def _read_flow(r: _Reader, raw, path: str, index: int) -> FlowConfig:
    m = r.mapping(raw, path)
    known = {
        "id", "ue", "service", "slice", "generator",
        "sps_period_slots", "sps_prbs", "sps_offset_slots",
    }
    r.reject_unknown(m, known, path)
    gen = r.mapping(m.get("generator"), f"{path}.generator")
    kind = r.get(gen, "kind", str, "full_buffer", f"{path}.generator")
    params = {k: v for k, v in gen.items() if k != "kind"}
    if kind not in GENERATOR_KINDS:
        r.fail(f"{path}.generator.kind", f"unknown kind {kind!r}")
        kind, params = "full_buffer", {}
    else:
        try:
            make_generator(kind, params)
        except TypeError:
            ok = ", ".join(GENERATOR_KINDS[kind]().__dataclass_fields__)
            r.fail(f"{path}.generator", f"bad params for {kind!r} (accepts: {ok})")
            params = {}
    service = r.enum(m, "service", TrafficClass, TrafficClass.EMBB, path)
    flow = FlowConfig(
        flow_id=r.get(m, "id", str, f"flow{index}", path),
        ue_id=r.get(m, "ue", str, "", path),
        service=service,
        generator_kind=kind,
        generator_params=params,
        slice_id=r.get(m, "slice", str, None, path),
        sps_period_slots=r.get(m, "sps_period_slots", int, None, path),
        sps_prbs=r.get(m, "sps_prbs", int, None, path),
        sps_offset_slots=r.get(m, "sps_offset_slots", int, 0, path),
    )
    if not flow.ue_id:
        r.fail(f"{path}.ue", "flow must name its UE")
    if service is TrafficClass.URLLC:
        if flow.sps_period_slots is None and kind != "periodic_deadline":
            r.fail(
                f"{path}",
                "URLLC flows need a periodic_deadline generator or explicit sps_period_slots",
            )
    return flow


def scenario_from_dict(data: dict) -> ScenarioConfig:
    """Build and validate a ScenarioConfig from a plain mapping.

    Raises ValidationError carrying every (config path, reason) pair found.
    """
    if not isinstance(data, dict):
        raise ParseError(f"scenario must be a mapping, got {type(data).__name__}")
    r = _Reader()
    r.reject_unknown(
        data,
        {"name", "sim", "channel", "network", "ues", "traffic", "mac", "pdcp", "uts"},
        "",
    )
    name = r.get(data, "name", str, "scenario", "")

    sim_m = r.mapping(data.get("sim"), "sim")
    r.reject_unknown(sim_m, {"horizon_slots", "seed"}, "sim")
    sim = SimSection(
        horizon_slots=r.get(sim_m, "horizon_slots", int, 1000, "sim"),
        seed=r.get(sim_m, "seed", int, 0, "sim"),
    )
    if sim.horizon_slots < 1:
        r.fail("sim.horizon_slots", f"must be >= 1, got {sim.horizon_slots}")
    if sim.seed < 0:
        r.fail("sim.seed", f"must be >= 0, got {sim.seed}")

    ch_m = r.mapping(data.get("channel"), "channel")
    r.reject_unknown(
        ch_m,
        {"fading_scale", "fading_seed", "noise_psd_dbm_hz", "interference_margin_db", "min_distance_m"},
        "channel",
    )
    channel = ChannelSection(
        fading_scale=r.get(ch_m, "fading_scale", float, 1.0, "channel"),
        fading_seed=r.get(ch_m, "fading_seed", int, None, "channel"),
        noise_psd_dbm_hz=r.get(ch_m, "noise_psd_dbm_hz", float, -174.0, "channel"),
        interference_margin_db=r.get(ch_m, "interference_margin_db", float, 3.0, "channel"),
        min_distance_m=r.get(ch_m, "min_distance_m", float, 1.0, "channel"),
    )
    if channel.fading_scale < 0:
        r.fail("channel.fading_scale", "must be >= 0")
    if channel.min_distance_m <= 0:
        r.fail("channel.min_distance_m", "must be positive")

    net_m = r.mapping(data.get("network"), "network")
    r.reject_unknown(net_m, {"cells"}, "network")
    cells = tuple(
        _read_cell(r, c, f"network.cells[{i}]", i)
        for i, c in enumerate(r.seq(net_m.get("cells"), "network.cells"))
    )
    if not cells:
        r.fail("network.cells", "at least one cell is required")
    ids = [c.cell_id for c in cells]
    if len(set(ids)) != len(ids):
        r.fail("network.cells", f"cell ids must be unique, got {ids}")
    if len({c.numerology for c in cells}) > 1:
        r.fail("network.cells", "all cells must share one numerology (one slot clock)")

    ues = tuple(
        _read_ue(r, u, f"ues[{i}]", i) for i, u in enumerate(r.seq(data.get("ues"), "ues"))
    )
    uids = [u.ue_id for u in ues]
    if len(set(uids)) != len(uids):
        r.fail("ues", f"ue ids must be unique, got {uids}")

    cell_by_id = {c.cell_id: c for c in cells}

    def eligible(ue: UeConfig, cell: CellConfig) -> bool:
        return any(
            p.required_capability is None or p.required_capability in ue.capabilities
            for p in cell.portions
        )

    for i, u in enumerate(ues):
        if u.serving_cell is not None:
            if u.serving_cell not in cell_by_id:
                r.fail(f"ues[{i}].serving_cell", f"unknown cell {u.serving_cell!r}")
            elif not eligible(u, cell_by_id[u.serving_cell]):
                r.fail(f"ues[{i}].serving_cell", f"{u.ue_id!r} lacks a usable portion there")
        elif cells and not any(eligible(u, c) for c in cells):
            r.fail(f"ues[{i}]", f"{u.ue_id!r} is eligible for no cell")

    tr_m = r.mapping(data.get("traffic"), "traffic")
    r.reject_unknown(tr_m, {"flows"}, "traffic")
    flows = tuple(
        _read_flow(r, f, f"traffic.flows[{i}]", i)
        for i, f in enumerate(r.seq(tr_m.get("flows"), "traffic.flows"))
    )
    fids = [f.flow_id for f in flows]
    if len(set(fids)) != len(fids):
        r.fail("traffic.flows", f"flow ids must be unique, got {fids}")
    known_ues = {u.ue_id for u in ues}
    for i, f in enumerate(flows):
        if f.ue_id and f.ue_id not in known_ues:
            r.fail(f"traffic.flows[{i}].ue", f"unknown UE {f.ue_id!r}")

    mac_m = r.mapping(data.get("mac"), "mac")
    r.reject_unknown(
        mac_m,
        {
            "epoch_slots", "min_guarantee_prbs", "access_cost_prbs", "pf_ewma",
            "pf_initial_avg_bits", "demand_sinr_db", "backoff_min_epochs", "backoff_max_epochs",
        },
        "mac",
    )
    mac = MacSection(
        epoch_slots=r.get(mac_m, "epoch_slots", int, 10, "mac"),
        min_guarantee_prbs=r.get(mac_m, "min_guarantee_prbs", int, 1, "mac"),
        access_cost_prbs=r.get(mac_m, "access_cost_prbs", int, 1, "mac"),
        pf_ewma=r.get(mac_m, "pf_ewma", float, 0.01, "mac"),
        pf_initial_avg_bits=r.get(mac_m, "pf_initial_avg_bits", float, 1.0, "mac"),
        demand_sinr_db=r.get(mac_m, "demand_sinr_db", float, 10.0, "mac"),
        backoff_min_epochs=r.get(mac_m, "backoff_min_epochs", int, 1, "mac"),
        backoff_max_epochs=r.get(mac_m, "backoff_max_epochs", int, 8, "mac"),
    )
    if mac.epoch_slots < 1:
        r.fail("mac.epoch_slots", "must be >= 1")
    if mac.min_guarantee_prbs < 0:
        r.fail("mac.min_guarantee_prbs", "must be >= 0")
    if mac.access_cost_prbs < 1:
        r.fail("mac.access_cost_prbs", "must be >= 1")
    if not (0.0 < mac.pf_ewma <= 1.0):
        r.fail("mac.pf_ewma", "must be in (0, 1]")
    if mac.pf_initial_avg_bits <= 0:
        r.fail("mac.pf_initial_avg_bits", "must be positive")
    if not (1 <= mac.backoff_min_epochs <= mac.backoff_max_epochs):
        r.fail("mac", "backoff window must satisfy 1 <= min <= max")

    pd_m = r.mapping(data.get("pdcp"), "pdcp")
    r.reject_unknown(
        pd_m, {"t_reorder_slots", "leave_load", "enter_load", "service_modes"}, "pdcp"
    )
    modes_m = r.mapping(pd_m.get("service_modes"), "pdcp.service_modes")
    modes = dict(DEFAULT_SERVICE_MODES)
    for key, val in modes_m.items():
        try:
            svc = TrafficClass(key)
        except ValueError:
            r.fail(f"pdcp.service_modes.{key}", "unknown traffic class")
            continue
        try:
            modes[svc] = Mode(val)
        except ValueError:
            r.fail(f"pdcp.service_modes.{key}", f"unknown mode {val!r}")
    pdcp = PdcpSection(
        t_reorder_slots=r.get(pd_m, "t_reorder_slots", int, 50, "pdcp"),
        leave_load=r.get(pd_m, "leave_load", float, 0.8, "pdcp"),
        enter_load=r.get(pd_m, "enter_load", float, 0.5, "pdcp"),
        service_modes=tuple(sorted(modes.items(), key=lambda kv: kv[0].value)),
    )
    if pdcp.t_reorder_slots < 1:
        r.fail("pdcp.t_reorder_slots", "must be >= 1")
    if not (0.0 <= pdcp.enter_load <= pdcp.leave_load <= 1.0):
        r.fail("pdcp", "need 0 <= enter_load <= leave_load <= 1")

    uts_m = r.mapping(data.get("uts"), "uts")
    r.reject_unknown(
        uts_m,
        {
            "enabled", "epoch_slots", "scenario_tag", "features", "ranking",
            "thresholds", "hysteresis_epochs", "time_to_trigger_epochs",
        },
        "uts",
    )
    feats_raw = r.seq(uts_m.get("features"), "uts.features")
    feats = tuple(f for f in feats_raw if isinstance(f, str))
    if "features" not in uts_m or uts_m.get("features") is None:
        feats = BUILTIN_FEATURE_IDS
    for f in feats:
        if f not in BUILTIN_FEATURE_IDS:
            r.fail("uts.features", f"unknown feature {f!r}")
    ranking = tuple(f for f in r.seq(uts_m.get("ranking"), "uts.ranking") if isinstance(f, str))
    for f in ranking:
        if f not in feats:
            r.fail("uts.ranking", f"ranked feature {f!r} not in features")
    if ranking and len(set(ranking)) != len(ranking):
        r.fail("uts.ranking", "ranking must not repeat features")
    if ranking and set(ranking) != set(feats):
        r.fail("uts.ranking", "ranking must cover every enabled feature")
    thr_m = r.mapping(uts_m.get("thresholds"), "uts.thresholds")
    thr_entries = []
    for fid, kv in thr_m.items():
        if fid not in feats:
            r.fail(f"uts.thresholds.{fid}", "thresholds for a feature not enabled")
            continue
        kv_m = r.mapping(kv, f"uts.thresholds.{fid}")
        pairs = []
        for k, v in kv_m.items():
            if isinstance(v, bool) or not isinstance(v, (int, float)):
                r.fail(f"uts.thresholds.{fid}.{k}", f"expected a number, got {v!r}")
                continue
            if fid in DEFAULT_THRESHOLDS and k not in DEFAULT_THRESHOLDS[fid]:
                r.fail(f"uts.thresholds.{fid}.{k}", "unknown threshold")
                continue
            pairs.append((k, float(v)))
        thr_entries.append((fid, tuple(sorted(pairs))))
    uts = UtsSection(
        enabled=r.get(uts_m, "enabled", bool, True, "uts"),
        epoch_slots=r.get(uts_m, "epoch_slots", int, 100, "uts"),
        scenario_tag=r.get(uts_m, "scenario_tag", str, "default", "uts"),
        features=feats,
        ranking=ranking,
        thresholds=tuple(sorted(thr_entries)),
        hysteresis_epochs=r.get(uts_m, "hysteresis_epochs", int, 10, "uts"),
        time_to_trigger_epochs=r.get(uts_m, "time_to_trigger_epochs", int, 2, "uts"),
    )
    if uts.epoch_slots < 1:
        r.fail("uts.epoch_slots", "must be >= 1")
    if uts.hysteresis_epochs < 0:
        r.fail("uts.hysteresis_epochs", "must be >= 0")
    if uts.time_to_trigger_epochs < 1:
        r.fail("uts.time_to_trigger_epochs", "must be >= 1")

    if r.failures:
        raise ValidationError(r.failures)
    return ScenarioConfig(
        name=name, sim=sim, channel=channel, cells=cells, ues=ues,
        flows=flows, mac=mac, pdcp=pdcp, uts=uts,
    )


def scenario_to_dict(cfg: ScenarioConfig) -> dict:
    """Serialize a config with every field explicit (round-trip stable)."""
    return {
        "name": cfg.name,
        "sim": {"horizon_slots": cfg.sim.horizon_slots, "seed": cfg.sim.seed},
        "channel": {
            "fading_scale": cfg.channel.fading_scale,
            "fading_seed": cfg.channel.fading_seed,
            "noise_psd_dbm_hz": cfg.channel.noise_psd_dbm_hz,
            "interference_margin_db": cfg.channel.interference_margin_db,
            "min_distance_m": cfg.channel.min_distance_m,
        },
        "network": {
            "cells": [
                {
                    "id": c.cell_id,
                    "class": c.cell_class.value,
                    "rat": c.rat_tag,
                    "carrier_hz": c.carrier_hz,
                    "prbs_per_slot": c.prbs_per_slot,
                    "numerology": c.numerology,
                    "prb_bandwidth_hz": c.prb_bandwidth_hz,
                    "position": list(c.position),
                    "tx_power_dbm": c.tx_power_dbm,
                    "supports_duplication": c.supports_duplication,
                    "supports_secondary": c.supports_secondary,
                    "drop_prob": c.drop_prob,
                    "portions": [
                        {
                            "key": p.key,
                            "required_capability": p.required_capability,
                            "waveform_efficiency": p.waveform_efficiency,
                        }
                        for p in c.portions
                    ],
                }
                for c in cfg.cells
            ]
        },
        "ues": [
            {
                "id": u.ue_id,
                "position": list(u.position),
                "velocity": list(u.velocity),
                "capabilities": list(u.capabilities),
                "serving_cell": u.serving_cell,
            }
            for u in cfg.ues
        ],
        "traffic": {
            "flows": [
                {
                    "id": f.flow_id,
                    "ue": f.ue_id,
                    "service": f.service.value,
                    "slice": f.slice_id,
                    "generator": {"kind": f.generator_kind, **f.generator_params},
                    "sps_period_slots": f.sps_period_slots,
                    "sps_prbs": f.sps_prbs,
                    "sps_offset_slots": f.sps_offset_slots,
                }
                for f in cfg.flows
            ]
        },
        "mac": {
            "epoch_slots": cfg.mac.epoch_slots,
            "min_guarantee_prbs": cfg.mac.min_guarantee_prbs,
            "access_cost_prbs": cfg.mac.access_cost_prbs,
            "pf_ewma": cfg.mac.pf_ewma,
            "pf_initial_avg_bits": cfg.mac.pf_initial_avg_bits,
            "demand_sinr_db": cfg.mac.demand_sinr_db,
            "backoff_min_epochs": cfg.mac.backoff_min_epochs,
            "backoff_max_epochs": cfg.mac.backoff_max_epochs,
        },
        "pdcp": {
            "t_reorder_slots": cfg.pdcp.t_reorder_slots,
            "leave_load": cfg.pdcp.leave_load,
            "enter_load": cfg.pdcp.enter_load,
            "service_modes": {svc.value: mode.value for svc, mode in cfg.pdcp.service_modes},
        },
        "uts": {
            "enabled": cfg.uts.enabled,
            "epoch_slots": cfg.uts.epoch_slots,
            "scenario_tag": cfg.uts.scenario_tag,
            "features": list(cfg.uts.features),
            "ranking": list(cfg.uts.ranking),
            "thresholds": {fid: dict(kv) for fid, kv in cfg.uts.thresholds},
            "hysteresis_epochs": cfg.uts.hysteresis_epochs,
            "time_to_trigger_epochs": cfg.uts.time_to_trigger_epochs,
        },
    }


def load_scenario(path: str | Path) -> ScenarioConfig:
    """Read and validate a YAML scenario file."""
    try:
        text = Path(path).read_text()
    except OSError as e:
        raise ParseError(f"cannot read {path}: {e}") from None
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as e:
        raise ParseError(f"invalid YAML in {path}: {e}") from None
    if data is None:
        data = {}
    return scenario_from_dict(data)


def build_domain(cfg: CellConfig) -> Cell:
    """Construct the domain Cell for one cell config."""
    grid = CarrierGrid(
        carrier_hz=cfg.carrier_hz,
        prbs_per_slot=cfg.prbs_per_slot,
        numerology=cfg.numerology,
        prb_bandwidth_hz=cfg.prb_bandwidth_hz,
    )
    return Cell(
        cell_id=cfg.cell_id,
        cell_class=cfg.cell_class,
        grid=grid,
        position=cfg.position,
        tx_power_dbm=cfg.effective_tx_power_dbm(),
        rat_tag=cfg.rat_tag,
        supports_duplication=cfg.supports_duplication,
        supports_secondary=cfg.supports_secondary,
    )


def build_ue(cfg: UeConfig) -> UserEquipment:
    return UserEquipment(
        ue_id=cfg.ue_id,
        position=cfg.position,
        capabilities=frozenset(cfg.capabilities),
        velocity=cfg.velocity,
    )
