"""Scripted fault injection on the simulated world, plus the CPU contention model.

Faults are applied and reverted by the engine at ``chaos_start`` /
``chaos_end`` events. Network delay overwrites the current latency of each
targeted link (both directions); CPU stress adds stress threads to each
targeted node. Reverting restores the saved baseline exactly.
"""
from __future__ import annotations

from dataclasses import dataclass, field

from .config import ChaosDef
from .errors import ChaosConflictError, FaultNotActiveError


def cpu_share(cores, workers, stress_threads):
    """Fraction of one core each resident worker replica gets.

    Fair share: ``min(1, cores / (workers + stress_threads))``. A node with no
    demand at all gives a full core to the next arrival.
    """
    demand = workers + stress_threads
    if demand <= 0:
        return 1.0
    return min(1.0, cores / demand)


@dataclass
class ActiveFault:
    definition: ChaosDef
    applied_at: float
    saved_baseline: dict = field(default_factory=dict)
    active: bool = True


def apply(state, definition, now=None):
    """Inject ``definition`` into ``state``; returns the :class:`ActiveFault` handle."""
    now = state.clock if now is None else now
    fault = ActiveFault(definition, now)
    if definition.kind == "network_delay":
        keys = [frozenset(t) for t in definition.targets]
        for key in keys:
            if state.links[key].fault is not None:
                raise ChaosConflictError(f"link {sorted(key)} already has an active network_delay fault")
        for key in keys:
            link = state.links[key]
            fault.saved_baseline[key] = link.latency
            link.latency = definition.new_latency
            link.fault = fault
    elif definition.kind == "cpu_stress":
        for node_id in definition.targets:
            if state.nodes[node_id].fault is not None:
                raise ChaosConflictError(f"node {node_id!r} already has an active cpu_stress fault")
        for node_id in definition.targets:
            node = state.nodes[node_id]
            fault.saved_baseline[node_id] = node.stress_threads
            node.stress_threads = node.stress_threads + definition.threads
            node.fault = fault
    else:
        raise ValueError(f"unknown chaos kind {definition.kind!r}")
    return fault


def revert(state, fault):
    if not fault.active:
        raise FaultNotActiveError(f"{fault.definition.kind} fault applied at {fault.applied_at} ms is not active")
    if fault.definition.kind == "network_delay":
        for key, latency in fault.saved_baseline.items():
            link = state.links[key]
            link.latency = latency
            link.fault = None
    else:
        for node_id, threads in fault.saved_baseline.items():
            node = state.nodes[node_id]
            node.stress_threads = threads
            node.fault = None
    fault.active = False
    return state
