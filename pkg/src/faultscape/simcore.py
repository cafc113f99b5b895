"""Deterministic discrete-event engine for the edge-cloud inference service.

Message path: a producer emits a message in its zone; after an ingress hop it
is enqueued at the zone's broker. An idle accepting worker replica pulls the
oldest message (earliest ``produced_at``) among the brokers it subscribes to,
waits for the fetch round trip (request hop + payload hop), then runs a
non-preemptive inference whose duration depends on CPU contention at start.
Event-time latency is ``completed_at - produced_at``.

All times are milliseconds of simulated time. Events run in
``(time, insertion sequence)`` order, so a run is a pure function of the
scenario and its seed.
"""
from __future__ import annotations

import heapq
import json
import logging
import random
from array import array
from collections import Counter, deque
from dataclasses import dataclass, field
from typing import Optional

from . import chaos, remediation
from .config import ModelProfile, chaos_window
from .errors import ActionRejected, SimulationFault
from .slo import EnergyLedger, SliSampler, node_power

log = logging.getLogger(__name__)

EVENT_KINDS = (
    "produce",
    "transit_arrive",
    "service_complete",
    "sample_tick",
    "chaos_start",
    "chaos_end",
    "remediator_tick",
    "worker_state_change",
    "phase_boundary",
)

STARTING, ACCEPTING, DRAINING, STOPPED = "starting", "accepting", "draining", "stopped"


@dataclass(slots=True)
class Message:
    id: int
    produced_at: float
    origin: str
    size: float  # kilobits
    draw: float  # uniform [0, 1), fixed at production
    producer: int = 0
    broker: str = ""
    enqueued_at: float = 0.0
    dequeued_at: float = 0.0
    ingress: float = 0.0
    fetch: float = 0.0
    service_start: float = 0.0


class Broker:
    def __init__(self, zone):
        self.zone = zone
        self.queue = deque()
        self.enqueued = 0
        self.dequeued = 0

    def push(self, msg):
        self.queue.append(msg)
        self.enqueued += 1

    def pop(self):
        self.dequeued += 1
        return self.queue.popleft()


@dataclass(slots=True, eq=False)
class Worker:
    """One running replica of a logical worker."""

    id: str
    group: str
    node: str
    zone: str
    model: ModelProfile
    subscriptions: tuple
    state: str = ACCEPTING
    task: Optional[Message] = None
    phase: Optional[str] = None  # "fetch" | "service"
    token: int = 0
    created_at: float = 0.0
    accepting_at: Optional[float] = None
    stopped_at: Optional[float] = None


@dataclass(eq=False)
class WorkerGroup:
    id: str
    node: str
    model: ModelProfile
    instances: list = field(default_factory=list)
    transition: object = None
    serial: int = 0

    def live(self):
        return [w for w in self.instances if w.state != STOPPED]


@dataclass(eq=False)
class NodeState:
    spec: object
    stress_threads: int = 0
    resident: int = 0  # non-stopped replicas placed here
    busy: int = 0  # replicas in service or starting up
    fault: object = None

    @property
    def id(self):
        return self.spec.id

    @property
    def utilization(self):
        return min(1.0, (self.busy + self.stress_threads) / self.spec.cpu_cores)


@dataclass(eq=False)
class LinkState:
    spec: object
    latency: float
    fault: object = None


@dataclass(slots=True)
class ResultRecord:
    msg_id: int
    produced_ms: float
    completed_ms: float
    worker: str
    node: str
    correct: bool
    queueing: float
    transit: float
    service: float

    @property
    def latency(self):
        return self.completed_ms - self.produced_ms


@dataclass(order=True)
class SimEvent:
    time: float
    seq: int
    kind: str = field(compare=False)
    payload: dict = field(compare=False, default_factory=dict)


@dataclass(eq=False)
class ClusterState:
    clock: float
    nodes: dict
    links: dict
    brokers: dict
    groups: dict
    workers: list  # every replica ever created, in creation order
    energy: EnergyLedger
    results: list = field(default_factory=list)
    completed_ms: array = field(default_factory=lambda: array("d"))
    latency_s: array = field(default_factory=lambda: array("d"))
    incorrect: array = field(default_factory=lambda: array("d"))
    produced: int = 0
    completed: int = 0
    dropped: int = 0
    in_ingress: int = 0
    in_service: int = 0
    active_faults: dict = field(default_factory=dict)
    transitions: list = field(default_factory=list)

    @property
    def queued(self):
        return self.in_ingress + sum(len(b.queue) for b in self.brokers.values())

    def ledger(self):
        return {
            "produced": self.produced,
            "completed": self.completed,
            "dropped": self.dropped,
            "queued": self.queued,
            "in_service": self.in_service,
        }

    def conserved(self):
        return self.produced == self.completed + self.dropped + self.queued + self.in_service


# --------------------------------------------------------------------------- timing model


def service_time(worker, node, message=None):
    """Inference duration in ms for ``worker`` on ``node`` under current contention."""
    share = chaos.cpu_share(node.spec.cpu_cores, node.resident, node.stress_threads)
    return worker.model.base_service_time / share


def is_correct(draw, model, latency, deadline):
    """A result counts as correct when the model gets it right and it is not stale."""
    return draw < model.accuracy and latency <= deadline


def interarrival(producer, rng):
    """Gap in ms to the producer's next message."""
    if producer.arrival == "constant":
        return 1000.0 / producer.rate
    return rng.expovariate(producer.rate) * 1000.0


def transit_delay(link, message):
    """One hop across ``link``: current latency plus serialization (kb / Mbps == ms)."""
    size = message.size if hasattr(message, "size") else float(message)
    return link.latency + size / link.spec.bandwidth


# --------------------------------------------------------------------------- world


class World:
    """Cluster state plus the pending event queue for one run."""

    def __init__(self, cfg, remediator=None):
        self.cfg = cfg
        self.remediator = remediator
        self.queue = []
        self._seq = 0
        self._fresh = []
        self.event_log = []
        self.finished = False
        self.sampler = SliSampler(cfg.slos)
        self.last_tick_samples = {}
        self.actions_log = []
        infra = cfg.infrastructure
        nodes = {n.id: NodeState(n) for n in infra.nodes}
        links = {lk.key: LinkState(lk, lk.latency) for lk in infra.links}
        brokers = {z: Broker(z) for z in cfg.broker_zones()}
        self.state = ClusterState(
            clock=0.0,
            nodes=nodes,
            links=links,
            brokers=brokers,
            groups={},
            workers=[],
            energy=EnergyLedger(infra.nodes),
        )
        self.rngs = [random.Random(f"{cfg.seed}/producer/{i}") for i in range(len(cfg.data.producers))]
        self._next_msg_id = 0

    # ---------------------------------------------------------------- scheduling

    def schedule(self, time, kind, **payload):
        ev = SimEvent(time, self._seq, kind, payload)
        self._seq += 1
        heapq.heappush(self.queue, ev)
        self._fresh.append(ev)
        return ev

    def pending(self):
        return sorted(self.queue)

    # ---------------------------------------------------------------- placement helpers

    def subscriptions_for(self, node_spec):
        if node_spec.role == "cloud":
            return tuple(self.state.brokers)
        return tuple(z for z in self.state.brokers if z == node_spec.zone)

    def spawn(self, group, node_id, model, state):
        node = self.state.nodes[node_id]
        w = Worker(
            id=f"{group.id}#{group.serial}",
            group=group.id,
            node=node_id,
            zone=node.spec.zone,
            model=model,
            subscriptions=self.subscriptions_for(node.spec),
            state=state,
            created_at=self.state.clock,
            accepting_at=self.state.clock if state == ACCEPTING else None,
        )
        group.serial += 1
        group.instances.append(w)
        self.state.workers.append(w)
        node.resident += 1
        if state == STARTING:
            node.busy += 1
            self._power(node)
            self.schedule(
                self.state.clock + self.cfg.system.worker_startup_delay, "worker_state_change", worker=w.id, to=ACCEPTING
            )
        return w

    def drain(self, w):
        """Stop accepting; finish or drop in-flight work according to the drain policy."""
        if w.state == STOPPED:
            return
        if w.state == STARTING:
            # cancel the pending startup
            self.state.nodes[w.node].busy -= 1
            w.token += 1
            self._stop(w)
            return
        w.state = DRAINING
        if w.task is None:
            self._stop(w)
        elif self.cfg.system.worker_drain_policy == "drop":
            node = self.state.nodes[w.node]
            if w.phase == "service":
                node.busy -= 1
            self.state.in_service -= 1
            self.state.dropped += 1
            w.task = None
            w.phase = None
            w.token += 1
            self._stop(w)

    def _stop(self, w):
        w.state = STOPPED
        w.stopped_at = self.state.clock
        node = self.state.nodes[w.node]
        node.resident -= 1
        self._power(node)

    def worker(self, worker_id):
        for w in self.state.workers:
            if w.id == worker_id:
                return w
        raise KeyError(worker_id)

    def _power(self, node):
        self.state.energy.set_power(node.id, self.state.clock, node_power(node.spec, node.utilization))

    # ---------------------------------------------------------------- message flow

    def _idle_for(self, zone):
        fallback = None
        for w in self.state.workers:
            if w.state == ACCEPTING and w.task is None and zone in w.subscriptions:
                if w.zone == zone:
                    return w
                if fallback is None:
                    fallback = w
        return fallback

    def _pull(self, w):
        best = None
        for z in w.subscriptions:
            q = self.state.brokers[z].queue
            if q and (best is None or (q[0].produced_at, q[0].id) < (best[0].produced_at, best[0].id)):
                best = (q[0], z)
        if best is None:
            return False
        msg = self.state.brokers[best[1]].pop()
        now = self.state.clock
        msg.dequeued_at = now
        if w.zone == msg.broker:
            delay = 2 * self.cfg.infrastructure.intra_zone_latency
        else:
            link = self.state.links[frozenset((w.zone, msg.broker))]
            delay = link.latency + transit_delay(link, msg)
        msg.fetch = delay
        w.task = msg
        w.phase = "fetch"
        w.token += 1
        self.state.in_service += 1
        self.schedule(now + delay, "transit_arrive", msg=msg.id, dest="worker", worker=w.id, token=w.token)
        return True

    def _dispatch(self, zone):
        broker = self.state.brokers[zone]
        while broker.queue:
            w = self._idle_for(zone)
            if w is None or not self._pull(w):
                break

    # ---------------------------------------------------------------- event handlers

    def step(self, ev):
        st = self.state
        if ev.time < st.clock:
            raise SimulationFault(f"clock moved backwards: {ev.time} < {st.clock}")
        st.clock = ev.time
        handler = getattr(self, f"_on_{ev.kind}")
        self._fresh = []
        entry = handler(ev)
        self.event_log.append((ev.time, ev.kind, entry if entry is not None else ev.payload))
        return self._fresh

    def _on_produce(self, ev):
        st = self.state
        i = ev.payload["producer"]
        spec = self.cfg.data.producers[i]
        rng = self.rngs[i]
        msg = Message(self._next_msg_id, ev.time, spec.zone, spec.message_size, rng.random(), producer=i)
        self._next_msg_id += 1
        st.produced += 1
        brokers = tuple(st.brokers)
        if brokers:
            msg.broker = spec.zone if self.cfg.system.broker_per_zone else brokers[0]
            if msg.broker == spec.zone:
                delay = self.cfg.infrastructure.intra_zone_latency
            else:
                delay = transit_delay(st.links[frozenset((spec.zone, msg.broker))], msg)
            msg.ingress = delay
            st.in_ingress += 1
            self.schedule(ev.time + delay, "transit_arrive", msg=msg.id, dest="broker", obj=msg)
        nxt = ev.time + interarrival(spec, rng)
        if nxt < self.cfg.phases.evaluation_end:
            self.schedule(nxt, "produce", producer=i)
        return {"producer": i, "msg": msg.id}

    def _on_transit_arrive(self, ev):
        st = self.state
        p = ev.payload
        if p["dest"] == "broker":
            msg = p["obj"]
            st.in_ingress -= 1
            msg.enqueued_at = ev.time
            st.brokers[msg.broker].push(msg)
            self._dispatch(msg.broker)
            return {"msg": msg.id, "dest": "broker", "zone": msg.broker}
        w = self.worker(p["worker"])
        if w.token != p["token"] or w.task is None:
            return {"msg": p["msg"], "dest": "worker", "worker": w.id, "stale": True}
        node = st.nodes[w.node]
        duration = service_time(w, node, w.task)
        w.phase = "service"
        w.task.service_start = ev.time
        node.busy += 1
        self._power(node)
        self.schedule(ev.time + duration, "service_complete", worker=w.id, token=w.token)
        return {"msg": p["msg"], "dest": "worker", "worker": w.id, "service_ms": duration}

    def _on_service_complete(self, ev):
        st = self.state
        w = self.worker(ev.payload["worker"])
        if w.token != ev.payload["token"] or w.task is None:
            return {"worker": w.id, "stale": True}
        msg = w.task
        node = st.nodes[w.node]
        latency = ev.time - msg.produced_at
        correct = is_correct(msg.draw, w.model, latency, self.cfg.data.staleness_deadline)
        st.results.append(
            ResultRecord(
                msg.id,
                msg.produced_at,
                ev.time,
                w.id,
                w.node,
                correct,
                msg.dequeued_at - msg.enqueued_at,
                msg.ingress + msg.fetch,
                ev.time - msg.service_start,
            )
        )
        st.completed_ms.append(ev.time)
        st.latency_s.append(latency / 1000.0)
        st.incorrect.append(0.0 if correct else 1.0)
        st.completed += 1
        st.in_service -= 1
        node.busy -= 1
        w.task = None
        w.phase = None
        entry = {"worker": w.id, "msg": msg.id, "latency_ms": latency, "correct": correct}
        if w.state == DRAINING:
            self._stop(w)
        else:
            self._power(node)
            self._pull(w)
        done = self._check_transitions()
        if done:
            entry["transitions_complete"] = done
        return entry

    def _on_worker_state_change(self, ev):
        w = self.worker(ev.payload["worker"])
        if w.state != STARTING:
            return {"worker": w.id, "stale": True}
        node = self.state.nodes[w.node]
        node.busy -= 1
        w.state = ACCEPTING
        w.accepting_at = ev.time
        self._power(node)
        self._pull(w)
        entry = {"worker": w.id, "to": ACCEPTING}
        done = self._check_transitions()
        if done:
            entry["transitions_complete"] = done
        return entry

    def _check_transitions(self):
        done = []
        for group in self.state.groups.values():
            tr = group.transition
            if tr is not None and tr.settled():
                tr.completes_at = self.state.clock
                group.transition = None
                done.append(group.id)
        return done

    def _on_sample_tick(self, ev):
        st = self.state
        if not st.conserved():
            raise SimulationFault(f"conservation violated at t={ev.time}: {st.ledger()}")
        scoring = ev.time > self.cfg.phases.evaluation_start
        samples = self.sampler.sample(st, ev.time, scoring)
        self.last_tick_samples.update(samples)
        return {"scoring": scoring, "values": {k: s.value for k, s in samples.items()}, "ledger": st.ledger()}

    def _on_chaos_start(self, ev):
        i = ev.payload["index"]
        definition = self.cfg.chaos[i]
        self.state.active_faults[i] = chaos.apply(self.state, definition, ev.time)
        self._chaos_power(definition)
        return {"index": i, "kind": definition.kind}

    def _on_chaos_end(self, ev):
        i = ev.payload["index"]
        definition = self.cfg.chaos[i]
        chaos.revert(self.state, self.state.active_faults.pop(i))
        self._chaos_power(definition)
        return {"index": i, "kind": definition.kind}

    def _chaos_power(self, definition):
        if definition.kind == "cpu_stress":
            for node_id in definition.targets:
                self._power(self.state.nodes[node_id])

    def _on_remediator_tick(self, ev):
        entry = {"actions": [], "rejected": []}
        if self.remediator is None:
            return entry
        obs = remediation.build_observation(self, ev.time)
        try:
            actions = list(self.remediator.decide(obs) or [])
        except Exception as exc:  # a buggy strategy must not take the benchmark down
            log.warning("remediator %r raised: %s", getattr(self.remediator, "name", "?"), exc)
            entry["error"] = repr(exc)
            return entry
        for action in actions:
            desc = remediation.describe(action)
            try:
                tr = remediation.apply_action(self, action)
            except ActionRejected as exc:
                entry["rejected"].append({"action": desc, "reason": str(exc)})
                self.actions_log.append((ev.time, desc, False, str(exc)))
                continue
            entry["actions"].append(desc)
            self.actions_log.append((ev.time, desc, True, ""))
            if tr is not None:
                self.state.transitions.append(tr)
        self._check_transitions()
        self.last_tick_samples = {}
        return entry

    def _on_phase_boundary(self, ev):
        phase = ev.payload["phase"]
        st = self.state
        if phase == "end":
            # anything not completed by the end of tear-down is dropped
            for b in st.brokers.values():
                st.dropped += len(b.queue)
                b.queue.clear()
            st.dropped += st.in_ingress + st.in_service
            st.in_ingress = 0
            st.in_service = 0
            for w in st.workers:
                if w.task is not None:
                    w.task = None
                    w.phase = None
                    w.token += 1
            self.finished = True
        return {"phase": phase, "ledger": st.ledger()}

    # ---------------------------------------------------------------- driver

    def run(self):
        while self.queue and not self.finished:
            self.step(heapq.heappop(self.queue))
        if not self.state.conserved():
            raise SimulationFault(f"conservation violated at end of run: {self.state.ledger()}")
        return self


def build_world(cfg, remediator=None):
    """Place workers, seed producers, and schedule phases, samples, chaos and remediator ticks."""
    world = World(cfg, remediator)
    st = world.state
    models = {m.name: m for m in cfg.system.model_profiles}
    for spec in cfg.system.workers:
        group = WorkerGroup(spec.id, spec.node, models[spec.model])
        st.groups[spec.id] = group
        for _ in range(spec.replicas):
            world.spawn(group, spec.node, group.model, ACCEPTING)

    phases = cfg.phases
    for i, (p, rng) in enumerate(zip(cfg.data.producers, world.rngs)):
        first = rng.random() * 1000.0 / p.rate if p.arrival == "constant" else interarrival(p, rng)
        if first < phases.evaluation_end:
            world.schedule(first, "produce", producer=i)
    world.schedule(phases.evaluation_start, "phase_boundary", phase="evaluation")
    world.schedule(phases.evaluation_end, "phase_boundary", phase="teardown")
    world.schedule(phases.total, "phase_boundary", phase="end")

    k = 1
    while k * cfg.sample_interval <= phases.evaluation_end:
        world.schedule(k * cfg.sample_interval, "sample_tick")
        k += 1

    for i, c in enumerate(cfg.chaos):
        start, end = chaos_window(c, phases)
        world.schedule(start, "chaos_start", index=i)
        world.schedule(end, "chaos_end", index=i)

    period = cfg.remediator.period if cfg.remediator is not None else remediation.DEFAULT_PERIOD_MS
    k = 0
    while phases.evaluation_start + k * period < phases.evaluation_end:
        world.schedule(phases.evaluation_start + k * period, "remediator_tick")
        k += 1
    return world


def step(world, event):
    return world.step(event)


def run_to_completion(world):
    return world.run()


# --------------------------------------------------------------------------- exports


def _jsonable(payload):
    return {k: v for k, v in payload.items() if k != "obj"}


def event_log_lines(world):
    for t, kind, payload in world.event_log:
        yield json.dumps({"time_ms": t, "kind": kind, "payload": _jsonable(payload)}, sort_keys=True)


def write_event_log(world, fh):
    for line in event_log_lines(world):
        fh.write(line + "\n")


def write_result_csv(world, fh):
    fh.write("msg_id,produced_ms,completed_ms,worker,node,correct\n")
    for r in world.state.results:
        fh.write(f"{r.msg_id},{r.produced_ms!r},{r.completed_ms!r},{r.worker},{r.node},{int(r.correct)}\n")


def event_summary(world):
    counts = Counter(kind for _, kind, _ in world.event_log)
    return {kind: counts.get(kind, 0) for kind in EVENT_KINDS}
