"""Scenario documents: parsing, validation, canonical form, digest.

A scenario is a JSON document with four blueprint sections (``system``,
``infrastructure``, ``data``, ``chaos``) plus ``slos``, ``phases``, ``seed``
and optional ``remediator``. Durations may be written with an ``_s`` or an
``_ms`` suffix; after parsing every duration is held in milliseconds and the
canonical form (:func:`to_document`) always uses ``_ms`` keys, so
``parse_scenario(dump_scenario(cfg)) == cfg`` holds exactly.
"""
from __future__ import annotations

import copy
import hashlib
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional

from .errors import ConfigReferenceError, ConstraintError, SchemaError

SLI_KINDS = ("event_time_latency", "error_rate", "energy_per_task")
NODE_ROLES = ("edge", "cloud")
DRAIN_POLICIES = ("drop", "finish-in-flight")
CHAOS_KINDS = ("network_delay", "cpu_stress")
ARRIVALS = ("poisson", "constant")
UNTIL_TEARDOWN = "until_teardown"
WEIGHT_TOLERANCE = 1e-9

DEFAULT_SAMPLE_INTERVAL_MS = 1000.0
DEFAULT_STARTUP_DELAY_MS = 5000.0
DEFAULT_DRAIN_POLICY = "finish-in-flight"
DEFAULT_INTRA_ZONE_MS = 1.0
DEFAULT_REMEDIATOR_PERIOD_MS = 5000.0


@dataclass(frozen=True)
class ModelProfile:
    name: str
    hidden_layers: int
    base_service_time: float  # ms on one dedicated core
    accuracy: float
    energy_per_inference: float  # J, recorded only


@dataclass(frozen=True)
class WorkerSpec:
    id: str
    node: str
    model: str
    replicas: int = 1
    memory_limit_mb: Optional[float] = None
    env: tuple = ()


@dataclass(frozen=True)
class SystemDef:
    workers: tuple
    model_profiles: tuple
    broker_per_zone: bool = True
    worker_startup_delay: float = DEFAULT_STARTUP_DELAY_MS
    worker_drain_policy: str = DEFAULT_DRAIN_POLICY


@dataclass(frozen=True)
class NodeSpec:
    id: str
    zone: str
    role: str
    cpu_cores: float
    idle_power: float
    max_power: float
    memory_mb: Optional[float] = None


@dataclass(frozen=True)
class LinkSpec:
    zone_a: str
    zone_b: str
    latency: float  # ms, one-way
    bandwidth: float  # Mbit/s

    @property
    def key(self):
        return frozenset((self.zone_a, self.zone_b))


@dataclass(frozen=True)
class InfraDef:
    zones: tuple
    nodes: tuple
    links: tuple
    intra_zone_latency: float = DEFAULT_INTRA_ZONE_MS


@dataclass(frozen=True)
class ProducerSpec:
    zone: str
    rate: float  # messages per second
    message_size: float  # kilobits
    arrival: str = "poisson"  # or "constant": fixed spacing, seeded phase offset


@dataclass(frozen=True)
class DataDef:
    producers: tuple
    staleness_deadline: float  # ms


@dataclass(frozen=True)
class ChaosDef:
    kind: str
    targets: tuple  # node ids, or (zone_a, zone_b) pairs for network_delay
    start_offset: float  # ms after evaluation start
    duration: Optional[float]  # ms; None means until tear-down
    new_latency: Optional[float] = None
    threads: Optional[int] = None


@dataclass(frozen=True)
class SloSpec:
    name: str
    sli: str
    threshold: float
    weight: float
    aggregation_window: float  # ms


@dataclass(frozen=True)
class PhasePlan:
    warmup: float
    evaluation: float
    teardown: float

    @property
    def evaluation_start(self):
        return self.warmup

    @property
    def evaluation_end(self):
        return self.warmup + self.evaluation

    @property
    def total(self):
        return self.warmup + self.evaluation + self.teardown


@dataclass(frozen=True)
class RemediatorSpec:
    name: str
    params: Any = None
    period: float = DEFAULT_REMEDIATOR_PERIOD_MS


@dataclass(frozen=True)
class ScenarioConfig:
    system: SystemDef
    infrastructure: InfraDef
    data: DataDef
    chaos: tuple
    slos: tuple
    phases: PhasePlan
    seed: int
    sample_interval: float = DEFAULT_SAMPLE_INTERVAL_MS
    remediator: Optional[RemediatorSpec] = None
    notes: tuple = field(default=(), compare=True)

    def node(self, node_id):
        for n in self.infrastructure.nodes:
            if n.id == node_id:
                return n
        raise KeyError(node_id)

    def model(self, name):
        for m in self.system.model_profiles:
            if m.name == name:
                return m
        raise KeyError(name)

    def link(self, a, b):
        key = frozenset((a, b))
        for link in self.infrastructure.links:
            if link.key == key:
                return link
        raise KeyError((a, b))

    def broker_zones(self):
        return broker_zones(self.infrastructure, self.data, self.system.broker_per_zone)


def broker_zones(infra, data, per_zone):
    producer_zones = {p.zone for p in data.producers}
    if not producer_zones:
        return ()
    if per_zone:
        return tuple(z for z in infra.zones if z in producer_zones)
    return (data.producers[0].zone,)


# --------------------------------------------------------------------------- reading


class _Section:
    """Dict reader that tracks the config path and rejects unknown keys."""

    def __init__(self, doc, path):
        if not isinstance(doc, dict):
            raise SchemaError(path or "<root>", f"expected an object, got {type(doc).__name__}")
        self.doc = doc
        self.path = path
        self.seen = set()

    def at(self, key):
        return f"{self.path}.{key}" if self.path else key

    def has(self, key):
        return key in self.doc

    def req(self, key, kind):
        if key not in self.doc:
            raise SchemaError(self.at(key), "required field is missing")
        return self._get(key, kind)

    def opt(self, key, kind, default):
        if key not in self.doc:
            return default
        return self._get(key, kind)

    def _get(self, key, kind):
        self.seen.add(key)
        return _check_type(self.doc[key], kind, self.at(key))

    def duration(self, base, default=None, required=True):
        """Read ``<base>_s`` or ``<base>_ms`` and return milliseconds."""
        ks, kms = f"{base}_s", f"{base}_ms"
        if ks in self.doc and kms in self.doc:
            raise SchemaError(self.at(ks), f"give either {ks} or {kms}, not both")
        if ks in self.doc:
            return self._get(ks, "number") * 1000.0
        if kms in self.doc:
            return self._get(kms, "number")
        if required and default is None:
            raise SchemaError(self.at(ks), "required field is missing")
        return default

    def done(self):
        extra = sorted(set(self.doc) - self.seen)
        if extra:
            raise SchemaError(self.at(extra[0]), "unknown key")


def _check_type(value, kind, path):
    ok = {
        "int": lambda v: isinstance(v, int) and not isinstance(v, bool),
        "number": lambda v: isinstance(v, (int, float)) and not isinstance(v, bool),
        "str": lambda v: isinstance(v, str),
        "bool": lambda v: isinstance(v, bool),
        "list": lambda v: isinstance(v, list),
        "dict": lambda v: isinstance(v, dict),
        "any": lambda v: True,
    }[kind](value)
    if not ok:
        raise SchemaError(path, f"expected {kind}, got {type(value).__name__}")
    if kind == "number":
        if not math.isfinite(value):
            raise SchemaError(path, "expected a finite number")
        return float(value)
    return value


def _items(sec, key, required=True):
    raw = sec.req(key, "list") if required else sec.opt(key, "list", [])
    return [(f"{sec.at(key)}[{i}]", item) for i, item in enumerate(raw)]


def _positive(value, path):
    if not value > 0:
        raise ConstraintError(path, f"must be > 0, got {value}")
    return value


def _nonneg(value, path):
    if value < 0:
        raise ConstraintError(path, f"must be >= 0, got {value}")
    return value


# --------------------------------------------------------------------------- parsing


def parse_scenario(text):
    """Parse and validate a scenario document (JSON text, bytes, or an already-loaded dict)."""
    if isinstance(text, (bytes, bytearray)):
        text = text.decode("utf-8")
    if isinstance(text, str):
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise SchemaError("<root>", f"not valid JSON: {exc}") from None
    else:
        doc = copy.deepcopy(text)
    return _parse_document(doc)


def load_scenario(path):
    return parse_scenario(Path(path).read_text(encoding="utf-8"))


def _parse_document(doc):
    root = _Section(doc, "")
    seed = root.req("seed", "int")
    if seed < 0:
        raise ConstraintError("seed", "must be an unsigned integer")
    sample_interval = _positive(
        root.duration("sample_interval", default=DEFAULT_SAMPLE_INTERVAL_MS), "sample_interval_ms"
    )
    phases = _parse_phases(_Section(root.req("phases", "dict"), "phases"))
    infra = _parse_infrastructure(_Section(root.req("infrastructure", "dict"), "infrastructure"))
    system = _parse_system(_Section(root.req("system", "dict"), "system"))
    data = _parse_data(_Section(root.req("data", "dict"), "data"))
    chaos = tuple(_parse_chaos(_Section(item, path)) for path, item in _items(root, "chaos", False))
    slos = tuple(_parse_slo(_Section(item, path)) for path, item in _items(root, "slos"))
    remediator = None
    if root.has("remediator"):
        remediator = _parse_remediator(_Section(root.req("remediator", "dict"), "remediator"))
    notes = root.opt("notes", "any", [])
    if isinstance(notes, str):
        notes = [notes]
    if not isinstance(notes, list) or not all(isinstance(n, str) for n in notes):
        raise SchemaError("notes", "expected a string or a list of strings")
    root.done()

    cfg = ScenarioConfig(
        system=system,
        infrastructure=infra,
        data=data,
        chaos=chaos,
        slos=slos,
        phases=phases,
        seed=seed,
        sample_interval=sample_interval,
        remediator=remediator,
        notes=tuple(notes),
    )
    validate(cfg)
    return cfg


def _parse_phases(sec):
    plan = PhasePlan(
        warmup=_positive(sec.duration("warmup"), sec.at("warmup_s")),
        evaluation=_positive(sec.duration("evaluation"), sec.at("evaluation_s")),
        teardown=_positive(sec.duration("teardown"), sec.at("teardown_s")),
    )
    sec.done()
    return plan


def _parse_infrastructure(sec):
    zones = sec.req("zones", "list")
    for i, z in enumerate(zones):
        _check_type(z, "str", f"infrastructure.zones[{i}]")
    nodes = []
    for path, item in _items(sec, "nodes"):
        n = _Section(item, path)
        cores = _positive(n.req("cpu_cores", "number"), n.at("cpu_cores"))
        idle = _nonneg(n.req("idle_power_w", "number"), n.at("idle_power_w"))
        peak = n.req("max_power_w", "number")
        if peak < idle:
            raise ConstraintError(n.at("max_power_w"), "must be >= idle_power_w")
        role = n.req("role", "str")
        if role not in NODE_ROLES:
            raise SchemaError(n.at("role"), f"must be one of {NODE_ROLES}")
        memory = n.opt("memory_mb", "number", None)
        nodes.append(NodeSpec(n.req("id", "str"), n.req("zone", "str"), role, cores, idle, peak, memory))
        n.done()
    links = []
    for path, item in _items(sec, "links"):
        lk = _Section(item, path)
        links.append(
            LinkSpec(
                lk.req("a", "str"),
                lk.req("b", "str"),
                _nonneg(lk.req("latency_ms", "number"), lk.at("latency_ms")),
                _positive(lk.req("bandwidth_mbps", "number"), lk.at("bandwidth_mbps")),
            )
        )
        lk.done()
    intra = _nonneg(sec.duration("intra_zone_latency", default=DEFAULT_INTRA_ZONE_MS), sec.at("intra_zone_latency_ms"))
    sec.done()
    return InfraDef(tuple(zones), tuple(nodes), tuple(links), intra)


def _parse_system(sec):
    profiles = []
    for path, item in _items(sec, "model_profiles"):
        m = _Section(item, path)
        layers = m.req("hidden_layers", "int")
        if layers < 1:
            raise ConstraintError(m.at("hidden_layers"), "must be >= 1")
        acc = m.req("accuracy", "number")
        if not 0 < acc <= 1:
            raise ConstraintError(m.at("accuracy"), "must be in (0, 1]")
        profiles.append(
            ModelProfile(
                m.req("name", "str"),
                layers,
                _positive(m.req("base_service_time_ms", "number"), m.at("base_service_time_ms")),
                acc,
                _nonneg(m.req("energy_per_inference_j", "number"), m.at("energy_per_inference_j")),
            )
        )
        m.done()
    workers = []
    for path, item in _items(sec, "workers"):
        w = _Section(item, path)
        replicas = w.opt("replicas", "int", 1)
        if replicas < 1:
            raise ConstraintError(w.at("replicas"), "must be >= 1")
        env = w.opt("env", "dict", {})
        for k, v in env.items():
            _check_type(v, "str", f"{w.at('env')}.{k}")
        workers.append(
            WorkerSpec(
                w.req("id", "str"),
                w.req("node", "str"),
                w.req("model", "str"),
                replicas,
                w.opt("memory_limit_mb", "number", None),
                tuple(sorted(env.items())),
            )
        )
        w.done()
    drain = sec.opt("drain_policy", "str", DEFAULT_DRAIN_POLICY)
    if drain not in DRAIN_POLICIES:
        raise SchemaError(sec.at("drain_policy"), f"must be one of {DRAIN_POLICIES}")
    system = SystemDef(
        workers=tuple(workers),
        model_profiles=tuple(profiles),
        broker_per_zone=sec.opt("broker_per_zone", "bool", True),
        worker_startup_delay=_nonneg(
            sec.duration("worker_startup_delay", default=DEFAULT_STARTUP_DELAY_MS),
            sec.at("worker_startup_delay_s"),
        ),
        worker_drain_policy=drain,
    )
    sec.done()
    return system


def _parse_data(sec):
    producers = []
    for path, item in _items(sec, "producers"):
        p = _Section(item, path)
        producers.append(
            ProducerSpec(
                p.req("zone", "str"),
                _positive(p.req("rate_per_s", "number"), p.at("rate_per_s")),
                _positive(p.req("message_size_kb", "number"), p.at("message_size_kb")),
                p.opt("arrival", "str", "poisson"),
            )
        )
        if producers[-1].arrival not in ARRIVALS:
            raise SchemaError(p.at("arrival"), f"must be one of {ARRIVALS}")
        p.done()
    deadline = _positive(sec.duration("staleness_deadline"), sec.at("staleness_deadline_ms"))
    sec.done()
    return DataDef(tuple(producers), deadline)


def _parse_chaos(sec):
    kind = sec.req("kind", "str")
    if kind not in CHAOS_KINDS:
        raise SchemaError(sec.at("kind"), f"must be one of {CHAOS_KINDS}")
    raw_targets = sec.req("targets", "list")
    if not raw_targets:
        raise ConstraintError(sec.at("targets"), "at least one target is required")
    targets = []
    for i, t in enumerate(raw_targets):
        tpath = f"{sec.at('targets')}[{i}]"
        if kind == "network_delay":
            if not (isinstance(t, list) and len(t) == 2 and all(isinstance(z, str) for z in t)):
                raise SchemaError(tpath, "network_delay targets are [zone_a, zone_b] pairs")
            targets.append(tuple(t))
        else:
            targets.append(_check_type(t, "str", tpath))
    start = _nonneg(sec.duration("start_offset"), sec.at("start_offset_s"))
    duration = None
    for key, scale in (("duration_s", 1000.0), ("duration_ms", 1.0)):
        if sec.has(key):
            raw = sec.req(key, "any")
            if raw == UNTIL_TEARDOWN or raw is None:
                duration = None
            else:
                duration = _nonneg(_check_type(raw, "number", sec.at(key)) * scale, sec.at(key))
    new_latency = threads = None
    if kind == "network_delay":
        new_latency = _nonneg(sec.req("latency_ms", "number"), sec.at("latency_ms"))
    else:
        threads = sec.req("threads", "int")
        if threads < 1:
            raise ConstraintError(sec.at("threads"), "must be >= 1")
    sec.done()
    return ChaosDef(kind, tuple(targets), start, duration, new_latency, threads)


def parse_slo_entry(sec):
    name = sec.req("name", "str")
    sli = sec.req("sli", "str")
    threshold = sec.req("threshold", "number")
    if sli == "accuracy":
        # lower-bound SLO: stored as an error-rate upper bound so every SLI is larger-is-worse
        if not 0 < threshold < 1:
            raise ConstraintError(sec.at("threshold"), "accuracy threshold must be in (0, 1)")
        sli, threshold = "error_rate", 1.0 - threshold
    elif sli not in SLI_KINDS:
        raise SchemaError(sec.at("sli"), f"must be one of {SLI_KINDS + ('accuracy',)}")
    _positive(threshold, sec.at("threshold"))
    weight = sec.req("weight", "number")
    if not 0 <= weight <= 1:
        raise ConstraintError(sec.at("weight"), "must be in [0, 1]")
    window = _positive(sec.duration("window"), sec.at("window_s"))
    sec.done()
    return SloSpec(name, sli, threshold, weight, window)


_parse_slo = parse_slo_entry


def validate_slos(slos, path="slos"):
    if not slos:
        raise ConstraintError(path, "at least one SLO is required")
    names, kinds = set(), set()
    for i, s in enumerate(slos):
        if s.name in names:
            raise ConstraintError(f"{path}[{i}].name", f"duplicate SLO name {s.name!r}")
        if s.sli in kinds:
            raise ConstraintError(f"{path}[{i}].sli", f"SLI {s.sli!r} is already used by another SLO")
        names.add(s.name)
        kinds.add(s.sli)
    total = 0.0
    for s in slos:
        total += s.weight
    if abs(total - 1.0) > WEIGHT_TOLERANCE:
        raise ConstraintError(f"{path}.weight", f"weights must sum to 1, got {total!r}")


def parse_slo_document(text):
    """Parse either a full scenario or ``{"slos": [...], "phases": {...}}``.

    Returns ``(slos, phases)``; ``phases`` is None when the document has none.
    """
    if isinstance(text, (bytes, bytearray)):
        text = text.decode("utf-8")
    try:
        doc = json.loads(text) if isinstance(text, str) else copy.deepcopy(text)
    except json.JSONDecodeError as exc:
        raise SchemaError("<root>", f"not valid JSON: {exc}") from None
    if isinstance(doc, dict) and "infrastructure" in doc:
        cfg = _parse_document(doc)
        return cfg.slos, cfg.phases
    root = _Section(doc, "")
    slos = tuple(_parse_slo(_Section(item, path)) for path, item in _items(root, "slos"))
    phases = None
    if root.has("phases"):
        phases = _parse_phases(_Section(root.req("phases", "dict"), "phases"))
    root.opt("notes", "any", None)
    root.done()
    validate_slos(slos)
    return slos, phases


def _parse_remediator(sec):
    spec = RemediatorSpec(
        name=sec.req("name", "str"),
        params=copy.deepcopy(sec.opt("params", "any", None)),
        period=_positive(
            sec.duration("period", default=DEFAULT_REMEDIATOR_PERIOD_MS), sec.at("period_s")
        ),
    )
    sec.done()
    return spec


# --------------------------------------------------------------------------- validation


def validate(cfg):
    """Cross-field checks: references, uniqueness, routes, weights, chaos overlap."""
    infra, system, data = cfg.infrastructure, cfg.system, cfg.data
    zones = set()
    for i, z in enumerate(infra.zones):
        if z in zones:
            raise ConstraintError(f"infrastructure.zones[{i}]", f"duplicate zone {z!r}")
        zones.add(z)

    nodes = {}
    for i, n in enumerate(infra.nodes):
        if n.id in nodes:
            raise ConstraintError(f"infrastructure.nodes[{i}].id", f"duplicate node {n.id!r}")
        if n.zone not in zones:
            raise ConfigReferenceError(f"infrastructure.nodes[{i}].zone", f"unknown zone {n.zone!r}")
        nodes[n.id] = n

    links = {}
    for i, lk in enumerate(infra.links):
        for end, z in (("a", lk.zone_a), ("b", lk.zone_b)):
            if z not in zones:
                raise ConfigReferenceError(f"infrastructure.links[{i}].{end}", f"unknown zone {z!r}")
        if lk.zone_a == lk.zone_b:
            raise ConstraintError(f"infrastructure.links[{i}]", "a link must join two different zones")
        if lk.key in links:
            raise ConstraintError(f"infrastructure.links[{i}]", "duplicate link for this zone pair")
        links[lk.key] = lk

    models = {}
    for i, m in enumerate(system.model_profiles):
        if m.name in models:
            raise ConstraintError(f"system.model_profiles[{i}].name", f"duplicate model {m.name!r}")
        models[m.name] = m
    for i, deep in enumerate(system.model_profiles):
        for shallow in system.model_profiles:
            if deep.hidden_layers > shallow.hidden_layers and (
                deep.base_service_time < shallow.base_service_time or deep.accuracy < shallow.accuracy
            ):
                raise ConstraintError(
                    f"system.model_profiles[{i}]",
                    f"deeper model {deep.name!r} must be at least as slow and as accurate as {shallow.name!r}",
                )

    seen = set()
    for i, w in enumerate(system.workers):
        if w.id in seen:
            raise ConstraintError(f"system.workers[{i}].id", f"duplicate worker {w.id!r}")
        seen.add(w.id)
        if w.node not in nodes:
            raise ConfigReferenceError(f"system.workers[{i}].node", f"unknown node {w.node!r}")
        if w.model not in models:
            raise ConfigReferenceError(f"system.workers[{i}].model", f"unknown model {w.model!r}")

    for i, p in enumerate(data.producers):
        if p.zone not in zones:
            raise ConfigReferenceError(f"data.producers[{i}].zone", f"unknown zone {p.zone!r}")

    # every route a message may take needs an explicit link
    brokers = broker_zones(infra, data, system.broker_per_zone)
    for i, p in enumerate(data.producers):
        b = brokers[0] if not system.broker_per_zone else p.zone
        if b != p.zone and frozenset((p.zone, b)) not in links:
            raise ConfigReferenceError(f"data.producers[{i}].zone", f"no link between {p.zone!r} and broker zone {b!r}")
    for n in infra.nodes:
        if n.role != "cloud":
            continue
        for b in brokers:
            if b != n.zone and frozenset((b, n.zone)) not in links:
                raise ConfigReferenceError(
                    "infrastructure.links", f"no link between broker zone {b!r} and cloud zone {n.zone!r}"
                )

    windows = {}
    for i, c in enumerate(cfg.chaos):
        path = f"chaos[{i}]"
        if c.start_offset > cfg.phases.evaluation:
            raise ConstraintError(f"{path}.start_offset_s", "starts after the evaluation phase ends")
        for j, t in enumerate(c.targets):
            if c.kind == "network_delay":
                for z in t:
                    if z not in zones:
                        raise ConfigReferenceError(f"{path}.targets[{j}]", f"unknown zone {z!r}")
                key = ("link", frozenset(t))
                if key[1] not in links:
                    raise ConfigReferenceError(f"{path}.targets[{j}]", f"no link between {t[0]!r} and {t[1]!r}")
            else:
                if t not in nodes:
                    raise ConfigReferenceError(f"{path}.targets[{j}]", f"unknown node {t!r}")
                key = ("node", t)
            start, end = chaos_window(c, cfg.phases)
            for (s2, e2, i2) in windows.get(key, []):
                if start < e2 and s2 < end:
                    raise ConstraintError(f"{path}.targets[{j}]", f"overlaps chaos[{i2}] on the same target")
            windows.setdefault(key, []).append((start, end, i))

    validate_slos(cfg.slos)


def chaos_window(c, phases):
    """Absolute [start, end) in ms, clipped to the evaluation phase."""
    start = phases.evaluation_start + c.start_offset
    end = phases.evaluation_end if c.duration is None else min(start + c.duration, phases.evaluation_end)
    return start, end


# --------------------------------------------------------------------------- canonical form


def _slo_doc(s):
    return {"name": s.name, "sli": s.sli, "threshold": s.threshold, "weight": s.weight, "window_ms": s.aggregation_window}


def to_document(cfg):
    """Canonical JSON-ready document; every default explicit, every duration in ms."""
    doc = {
        "seed": cfg.seed,
        "sample_interval_ms": cfg.sample_interval,
        "phases": {
            "warmup_ms": cfg.phases.warmup,
            "evaluation_ms": cfg.phases.evaluation,
            "teardown_ms": cfg.phases.teardown,
        },
        "system": {
            "model_profiles": [
                {
                    "name": m.name,
                    "hidden_layers": m.hidden_layers,
                    "base_service_time_ms": m.base_service_time,
                    "accuracy": m.accuracy,
                    "energy_per_inference_j": m.energy_per_inference,
                }
                for m in cfg.system.model_profiles
            ],
            "workers": [_worker_doc(w) for w in cfg.system.workers],
            "broker_per_zone": cfg.system.broker_per_zone,
            "worker_startup_delay_ms": cfg.system.worker_startup_delay,
            "drain_policy": cfg.system.worker_drain_policy,
        },
        "infrastructure": {
            "zones": list(cfg.infrastructure.zones),
            "nodes": [_node_doc(n) for n in cfg.infrastructure.nodes],
            "links": [
                {"a": lk.zone_a, "b": lk.zone_b, "latency_ms": lk.latency, "bandwidth_mbps": lk.bandwidth}
                for lk in cfg.infrastructure.links
            ],
            "intra_zone_latency_ms": cfg.infrastructure.intra_zone_latency,
        },
        "data": {
            "producers": [
                {"zone": p.zone, "rate_per_s": p.rate, "message_size_kb": p.message_size, "arrival": p.arrival}
                for p in cfg.data.producers
            ],
            "staleness_deadline_ms": cfg.data.staleness_deadline,
        },
        "chaos": [_chaos_doc(c) for c in cfg.chaos],
        "slos": [_slo_doc(s) for s in cfg.slos],
    }
    if cfg.remediator is not None:
        doc["remediator"] = {
            "name": cfg.remediator.name,
            "params": copy.deepcopy(cfg.remediator.params),
            "period_ms": cfg.remediator.period,
        }
    if cfg.notes:
        doc["notes"] = list(cfg.notes)
    return doc


def _worker_doc(w):
    d = {"id": w.id, "node": w.node, "model": w.model, "replicas": w.replicas}
    if w.memory_limit_mb is not None:
        d["memory_limit_mb"] = w.memory_limit_mb
    if w.env:
        d["env"] = dict(w.env)
    return d


def _node_doc(n):
    d = {
        "id": n.id,
        "zone": n.zone,
        "role": n.role,
        "cpu_cores": n.cpu_cores,
        "idle_power_w": n.idle_power,
        "max_power_w": n.max_power,
    }
    if n.memory_mb is not None:
        d["memory_mb"] = n.memory_mb
    return d


def _chaos_doc(c):
    d = {
        "kind": c.kind,
        "targets": [list(t) if isinstance(t, tuple) else t for t in c.targets],
        "start_offset_ms": c.start_offset,
        "duration_ms": UNTIL_TEARDOWN if c.duration is None else c.duration,
    }
    if c.kind == "network_delay":
        d["latency_ms"] = c.new_latency
    else:
        d["threads"] = c.threads
    return d


def dump_scenario(cfg, indent=None):
    return json.dumps(to_document(cfg), indent=indent, sort_keys=indent is None, ensure_ascii=True)


def scenario_digest(cfg):
    """Stable sha256 over the canonical document. Object keys are sorted; list order is kept."""
    blob = json.dumps(to_document(cfg), sort_keys=True, separators=(",", ":"), ensure_ascii=True)
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()
