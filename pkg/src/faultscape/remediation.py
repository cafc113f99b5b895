"""Remediator interface, built-in strategies, and reconfiguration mechanics.

A remediator sees an :class:`Observation` (sampled SLIs and the placement
map, never raw world state) at every remediator tick and returns a list of
actions. Applying an action opens a :class:`Transition`: the replaced
replicas drain and the new ones start up; until the startup delay has elapsed
the new replicas accept nothing, and the draining ones never accept again.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Optional

from .errors import ActionRejected, UnknownStrategyError

DEFAULT_PERIOD_MS = 5000.0


# --------------------------------------------------------------------------- actions


@dataclass(frozen=True)
class Reschedule:
    worker: str
    node: str


@dataclass(frozen=True)
class SetModel:
    worker: str
    model: str


@dataclass(frozen=True)
class Scale:
    worker: str
    delta: int


@dataclass(frozen=True)
class NoOp:
    pass


def parse_action(doc):
    """Build an action from ``{"type": ..., ...}``."""
    if not isinstance(doc, dict) or "type" not in doc:
        raise ValueError(f"action must be an object with a 'type' field, got {doc!r}")
    kind = doc["type"]
    fields = {k: v for k, v in doc.items() if k != "type"}
    try:
        if kind == "reschedule":
            return Reschedule(fields.pop("worker"), fields.pop("node"))
        if kind == "set_model":
            return SetModel(fields.pop("worker"), fields.pop("model"))
        if kind == "scale":
            delta = fields.pop("delta")
            if not isinstance(delta, int) or isinstance(delta, bool):
                raise ValueError("scale delta must be an integer")
            return Scale(fields.pop("worker"), delta)
        if kind == "noop":
            return NoOp()
    except KeyError as exc:
        raise ValueError(f"{kind} action is missing field {exc.args[0]!r}") from None
    raise ValueError(f"unknown action type {kind!r}")


def describe(action):
    if isinstance(action, Reschedule):
        return {"type": "reschedule", "worker": action.worker, "node": action.node}
    if isinstance(action, SetModel):
        return {"type": "set_model", "worker": action.worker, "model": action.model}
    if isinstance(action, Scale):
        return {"type": "scale", "worker": action.worker, "delta": action.delta}
    if isinstance(action, NoOp):
        return {"type": "noop"}
    return {"type": type(action).__name__}


# --------------------------------------------------------------------------- observation


@dataclass(frozen=True)
class Placement:
    node: str
    model: str
    state: str
    replicas: int


@dataclass(frozen=True)
class Observation:
    time: float  # ms since run start
    elapsed: float  # ms since evaluation start
    latest: MappingProxyType  # SLO name -> most recent value
    recent: MappingProxyType  # SLO name -> tuple of (t_ms, value) since the previous tick
    compliant: MappingProxyType  # SLO name -> bool
    thresholds: MappingProxyType
    placement: MappingProxyType  # worker -> Placement


def build_observation(world, t):
    period = world.cfg.remediator.period if world.cfg.remediator else DEFAULT_PERIOD_MS
    recent, latest, compliant, thresholds = {}, {}, {}, {}
    for slo in world.cfg.slos:
        samples = world.sampler.series[slo.name].samples
        since = [(s.t, s.value) for s in samples if t - period < s.t <= t]
        recent[slo.name] = tuple(since)
        if samples:
            latest[slo.name] = samples[-1].value
            compliant[slo.name] = samples[-1].value <= slo.threshold
        thresholds[slo.name] = slo.threshold
    placement = {}
    for gid, group in world.state.groups.items():
        live = group.live()
        if group.transition is not None:
            state = "transitioning"
        elif live:
            state = live[0].state
        else:
            state = "stopped"
        placement[gid] = Placement(group.node, group.model.name, state, len(live))
    return Observation(
        time=t,
        elapsed=t - world.cfg.phases.evaluation_start,
        latest=MappingProxyType(latest),
        recent=MappingProxyType(recent),
        compliant=MappingProxyType(compliant),
        thresholds=MappingProxyType(thresholds),
        placement=MappingProxyType(placement),
    )


# --------------------------------------------------------------------------- transitions


@dataclass(eq=False)
class Transition:
    worker: str
    action: object
    started_at: float
    old: list = field(default_factory=list)  # draining replicas
    new: list = field(default_factory=list)  # starting replicas
    completes_at: Optional[float] = None

    def settled(self):
        return all(w.state == "stopped" for w in self.old) and all(w.state != "starting" for w in self.new)

    def summary(self):
        return {
            "worker": self.worker,
            "action": describe(self.action),
            "started_ms": self.started_at,
            "completes_ms": self.completes_at,
            "old": [w.id for w in self.old],
            "new": [w.id for w in self.new],
        }


def apply_action(world, action):
    """Apply ``action`` to the running world. Returns a Transition, or None for NoOp."""
    if isinstance(action, NoOp):
        return None
    if not isinstance(action, (Reschedule, SetModel, Scale)):
        raise ActionRejected(f"unsupported action {action!r}")
    st = world.state
    group = st.groups.get(action.worker)
    if group is None:
        raise ActionRejected(f"unknown worker {action.worker!r}")
    if group.transition is not None:
        raise ActionRejected(f"worker {action.worker!r} already has a transition in flight")
    live = group.live()
    now = st.clock

    if isinstance(action, Reschedule):
        if action.node not in st.nodes:
            raise ActionRejected(f"unknown node {action.node!r}")
        if action.node == group.node:
            raise ActionRejected(f"worker {action.worker!r} already runs on {action.node!r}")
        tr = Transition(action.worker, action, now)
        group.node = action.node
        _replace(world, group, tr, live, action.node, group.model)
    elif isinstance(action, SetModel):
        try:
            model = world.cfg.model(action.model)
        except KeyError:
            raise ActionRejected(f"unknown model {action.model!r}") from None
        if model == group.model:
            raise ActionRejected(f"worker {action.worker!r} already runs model {action.model!r}")
        tr = Transition(action.worker, action, now)
        group.model = model
        _replace(world, group, tr, live, group.node, model)
    else:
        if action.delta == 0:
            raise ActionRejected("scale by 0 is a no-op")
        if len(live) + action.delta < 1:
            raise ActionRejected(f"cannot scale {action.worker!r} below one replica")
        tr = Transition(action.worker, action, now)
        if action.delta > 0:
            for _ in range(action.delta):
                tr.new.append(world.spawn(group, group.node, group.model, "starting"))
        else:
            for w in live[action.delta:]:
                tr.old.append(w)
                world.drain(w)
    group.transition = tr
    return tr


def _replace(world, group, tr, live, node_id, model):
    for w in live:
        tr.old.append(w)
        world.drain(w)
    for _ in range(max(1, len(live))):
        tr.new.append(world.spawn(group, node_id, model, "starting"))


# --------------------------------------------------------------------------- strategies


class Remediator:
    name = "base"

    def decide(self, obs):
        return []


class NoOpRemediator(Remediator):
    name = "noop"

    def __init__(self, params=None):
        pass


class ScriptedRemediator(Remediator):
    """Emits each playbook action once, at the first tick at or after its offset."""

    name = "scripted"

    def __init__(self, params=None):
        self.playbook = []
        for i, entry in enumerate(params or []):
            if not isinstance(entry, dict) or ("at_s" not in entry and "at_ms" not in entry):
                raise ValueError(f"playbook entry {i} needs 'at_s' or 'at_ms'")
            at = entry["at_ms"] if "at_ms" in entry else entry["at_s"] * 1000.0
            doc = entry.get("action") or {k: v for k, v in entry.items() if k not in ("at_s", "at_ms")}
            self.playbook.append((float(at), parse_action(doc)))
        self._fired = [False] * len(self.playbook)

    def decide(self, obs):
        out = []
        for i, (at, action) in enumerate(self.playbook):
            if not self._fired[i] and obs.elapsed >= at:
                self._fired[i] = True
                out.append(action)
        return out


class ThresholdRemediator(Remediator):
    """Fires a rule's action once after ``consecutive`` violating samples of its SLO."""

    name = "threshold"

    def __init__(self, params=None):
        rules = params.get("rules", [params]) if isinstance(params, dict) else params
        if not rules:
            raise ValueError("threshold strategy needs at least one rule: {slo, consecutive, action}")
        self.rules = []
        for r in rules:
            if not isinstance(r, dict) or "slo" not in r or "action" not in r:
                raise ValueError(f"threshold rule needs 'slo' and 'action': {r!r}")
            k = int(r.get("consecutive", 1))
            if k < 1:
                raise ValueError("consecutive must be >= 1")
            self.rules.append((r["slo"], k, parse_action(r["action"])))
        self._streak = [0] * len(self.rules)
        self._fired = [False] * len(self.rules)
        self._last_seen = {}

    def decide(self, obs):
        out = []
        for i, (slo, k, action) in enumerate(self.rules):
            tau = obs.thresholds.get(slo)
            if tau is None:
                continue
            for t, v in obs.recent.get(slo, ()):
                if t <= self._last_seen.get((i, slo), float("-inf")):
                    continue
                self._last_seen[(i, slo)] = t
                self._streak[i] = self._streak[i] + 1 if v > tau else 0
            if not self._fired[i] and self._streak[i] >= k:
                self._fired[i] = True
                out.append(action)
        return out


_REGISTRY = {
    "noop": NoOpRemediator,
    "scripted": ScriptedRemediator,
    "threshold": ThresholdRemediator,
}


def builtin_strategies():
    """Name -> constructor(params) for every built-in strategy."""
    return dict(_REGISTRY)


def register(name, constructor):
    _REGISTRY[name] = constructor


def lookup(name):
    try:
        return _REGISTRY[name]
    except KeyError:
        raise UnknownStrategyError(name, _REGISTRY) from None


def make_remediator(name, cfg=None):
    """Instantiate ``name``, taking params from the scenario when it names the same strategy."""
    ctor = lookup(name)
    params = None
    if cfg is not None and cfg.remediator is not None and cfg.remediator.name == name:
        params = cfg.remediator.params
    return ctor(params)
