import heapq

import pytest
from hypothesis import given
from hypothesis import strategies as st

from faultscape import parse_scenario
from faultscape.errors import ActionRejected, UnknownStrategyError
from faultscape.remediation import (
    NoOp,
    NoOpRemediator,
    Remediator,
    Reschedule,
    Scale,
    ScriptedRemediator,
    SetModel,
    ThresholdRemediator,
    apply_action,
    build_observation,
    builtin_strategies,
    describe,
    lookup,
    make_remediator,
    parse_action,
    register,
)
from faultscape.simcore import build_world, event_log_lines, run_to_completion

from conftest import small_doc


def world_for(doc=None, remediator=None):
    return build_world(parse_scenario(doc or small_doc()), remediator)


def advance(world, until):
    while world.queue and world.queue[0].time <= until:
        world.step(heapq.heappop(world.queue))


# ---------------------------------------------------------------- actions


@pytest.mark.parametrize(
    "doc,action",
    [
        ({"type": "reschedule", "worker": "w", "node": "n"}, Reschedule("w", "n")),
        ({"type": "set_model", "worker": "w", "model": "m"}, SetModel("w", "m")),
        ({"type": "scale", "worker": "w", "delta": -1}, Scale("w", -1)),
        ({"type": "noop"}, NoOp()),
    ],
)
def test_action_round_trip(doc, action):
    assert parse_action(doc) == action
    assert describe(action) == doc


@pytest.mark.parametrize(
    "doc",
    [{"type": "reschedule", "worker": "w"}, {"type": "scale", "worker": "w", "delta": True}, {"type": "explode"}, "noop"],
)
def test_bad_actions(doc):
    with pytest.raises(ValueError):
        parse_action(doc)


# ---------------------------------------------------------------- strategies


def test_noop_returns_nothing(cpu_cfg):
    obs = build_observation(build_world(cpu_cfg), cpu_cfg.phases.evaluation_start)
    assert NoOpRemediator().decide(obs) == []


def test_registry():
    names = builtin_strategies()
    assert {"noop", "scripted", "threshold"} <= set(names)
    with pytest.raises(UnknownStrategyError) as info:
        lookup("oracle")
    assert "noop" in str(info.value)


def test_register_custom():
    class Idle(Remediator):
        name = "idle-test"

        def __init__(self, params=None):
            pass

    register("idle-test", Idle)
    assert isinstance(make_remediator("idle-test"), Idle)


def test_scripted_fires_at_first_tick_after_offset():
    d = small_doc()
    d["phases"] = {"warmup_s": 2, "evaluation_s": 60, "teardown_s": 2}
    d["remediator"] = {
        "name": "scripted",
        "period_s": 7,
        "params": [{"at_s": 30, "action": {"type": "set_model", "worker": "ew", "model": "small"}}],
    }
    cfg = parse_scenario(d)
    w = run_to_completion(build_world(cfg, make_remediator("scripted", cfg)))
    assert [(t, ok) for t, _, ok, _ in w.actions_log] == [(cfg.phases.evaluation_start + 35000.0, True)]
    assert w.state.groups["ew"].model.name == "small"


def test_scripted_flat_entries_and_validation():
    r = ScriptedRemediator([{"at_ms": 0, "type": "noop"}])
    assert r.playbook == [(0.0, NoOp())]
    with pytest.raises(ValueError):
        ScriptedRemediator([{"type": "noop"}])


def threshold_doc(consecutive):
    d = small_doc()
    d["phases"] = {"warmup_s": 2, "evaluation_s": 30, "teardown_s": 2}
    d["chaos"] = [{"kind": "cpu_stress", "targets": ["e1"], "threads": 20, "start_offset_s": 0}]
    d["remediator"] = {
        "name": "threshold",
        "period_s": 2,
        "params": {"rules": [{"slo": "latency", "consecutive": consecutive, "action": {"type": "reschedule", "worker": "ew", "node": "c1"}}]},
    }
    return d


def test_threshold_fires_once():
    cfg = parse_scenario(threshold_doc(2))
    w = run_to_completion(build_world(cfg, make_remediator("threshold", cfg)))
    assert len(w.actions_log) == 1 and w.actions_log[0][2]
    fired_at = w.actions_log[0][0]
    lat = [s for s in w.sampler.series["latency"].samples if s.t <= fired_at]
    assert lat[-1].value > 1.0 and lat[-2].value > 1.0


def test_threshold_validation():
    with pytest.raises(ValueError):
        ThresholdRemediator({"rules": []})
    with pytest.raises(ValueError):
        ThresholdRemediator({"slo": "latency", "consecutive": 0, "action": {"type": "noop"}})
    with pytest.raises(ValueError):
        ThresholdRemediator([{"slo": "latency"}])


# ---------------------------------------------------------------- observation


def test_observation_is_read_only(cfg):
    w = world_for()
    advance(w, 5000.0)
    obs = build_observation(w, 5000.0)
    with pytest.raises(TypeError):
        obs.latest["latency"] = 0.0
    assert obs.placement["ew"].node == "e1" and obs.placement["ew"].state == "accepting"
    assert set(obs.thresholds) == {"latency", "accuracy", "energy"}
    assert all(t <= 5000.0 for t, _ in obs.recent["latency"])


# ---------------------------------------------------------------- rejections


@pytest.mark.parametrize(
    "action,reason",
    [
        (Reschedule("ghost", "c1"), "unknown worker"),
        (Reschedule("ew", "nowhere"), "unknown node"),
        (Reschedule("ew", "e1"), "already runs on"),
        (SetModel("ew", "huge"), "unknown model"),
        (SetModel("ew", "big"), "already runs model"),
        (Scale("ew", 0), "scale by 0"),
        (Scale("ew", -1), "below one replica"),
    ],
)
def test_rejections(action, reason):
    w = world_for()
    advance(w, 3000.0)
    with pytest.raises(ActionRejected, match=reason):
        apply_action(w, action)
    assert w.state.groups["ew"].transition is None


def test_second_action_during_transition_rejected():
    w = world_for()
    advance(w, 3000.0)
    apply_action(w, Reschedule("ew", "c1"))
    with pytest.raises(ActionRejected, match="in flight"):
        apply_action(w, SetModel("ew", "small"))


def test_rejected_actions_are_logged_not_fatal():
    d = small_doc()
    d["remediator"] = {"name": "scripted", "params": [{"at_s": 0, "action": {"type": "reschedule", "worker": "ew", "node": "e1"}}]}
    cfg = parse_scenario(d)
    w = run_to_completion(build_world(cfg, make_remediator("scripted", cfg)))
    (t, desc, ok, reason) = w.actions_log[0]
    assert not ok and "already runs on" in reason


def test_scale_up_and_down():
    d = small_doc()
    d["system"]["worker_startup_delay_s"] = 1
    w = world_for(d)
    advance(w, 3000.0)
    tr = apply_action(w, Scale("ew", 2))
    assert len(tr.new) == 2 and tr.old == []
    advance(w, 4500.0)
    assert tr.completes_at == 4000.0
    assert len(w.state.groups["ew"].live()) == 3
    tr = apply_action(w, Scale("ew", -2))
    assert len(tr.old) == 2
    run_to_completion(w)
    assert len(w.state.groups["ew"].live()) == 1


# ---------------------------------------------------------------- transition mechanics


def test_noop_and_disabled_logs_identical(cpu_cfg):
    a = list(event_log_lines(run_to_completion(build_world(cpu_cfg, NoOpRemediator()))))
    b = list(event_log_lines(run_to_completion(build_world(cpu_cfg, None))))
    assert a == b


@pytest.fixture(scope="module")
def rescheduled(cpu_cfg):
    return run_to_completion(build_world(cpu_cfg, make_remediator("scripted", cpu_cfg)))


def test_no_completion_outside_replica_life(rescheduled):
    by_id = {w.id: w for w in rescheduled.state.workers}
    for t, kind, p in rescheduled.event_log:
        if kind != "service_complete" or "worker" not in p:
            continue
        w = by_id[p["worker"]]
        assert w.accepting_at is not None and t > w.accepting_at
        if w.stopped_at is not None:
            assert t <= w.stopped_at


def test_acceptance_gap_at_least_startup_delay(rescheduled, cpu_cfg):
    delay = cpu_cfg.system.worker_startup_delay
    assert len(rescheduled.state.transitions) == 2
    for tr in rescheduled.state.transitions:
        for w in tr.new:
            assert w.accepting_at - tr.started_at >= delay
            assert w.node == "cloud-node-2"
        for w in tr.old:
            assert w.stopped_at <= tr.completes_at
        assert tr.completes_at is not None


def test_transition_spans_startup_delay_with_work_in_flight():
    d = small_doc()
    d["system"]["worker_startup_delay_s"] = 5
    d["system"]["model_profiles"][1]["base_service_time_ms"] = 500
    w = world_for(d)
    ew = w.state.groups["ew"].instances[0]
    while ew.phase != "service":
        w.step(heapq.heappop(w.queue))
    tr = apply_action(w, Reschedule("ew", "c1"))
    run_to_completion(w)
    assert ew.stopped_at - tr.started_at <= 500.0
    assert tr.completes_at - tr.started_at == 5000.0


def test_drained_replica_finishes_in_flight():
    d = small_doc()
    d["system"]["worker_startup_delay_s"] = 5
    w = world_for(d)
    ew = w.state.groups["ew"].instances[0]
    while ew.phase != "service":
        w.step(heapq.heappop(w.queue))
    msg = ew.task.id
    apply_action(w, Reschedule("ew", "c1"))
    assert ew.state == "draining"
    run_to_completion(w)
    done = [r for r in w.state.results if r.msg_id == msg]
    assert done and done[0].worker == ew.id


def test_buggy_remediator_does_not_crash(cfg):
    class Broken(Remediator):
        name = "broken"

        def decide(self, obs):
            raise RuntimeError("boom")

    w = run_to_completion(build_world(cfg, Broken()))
    errors = [p for _, k, p in w.event_log if k == "remediator_tick" and "error" in p]
    assert errors and "boom" in errors[0]["error"]
    assert w.state.conserved()


@given(st.integers(-3, 3))
def test_scale_replica_floor(delta):
    w = world_for()
    advance(w, 3000.0)
    if delta == 0 or 1 + delta < 1:
        with pytest.raises(ActionRejected):
            apply_action(w, Scale("ew", delta))
    else:
        tr = apply_action(w, Scale("ew", delta))
        assert len(tr.new) == delta
