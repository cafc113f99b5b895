import dataclasses
import math

import pytest

from faultscape import parse_scenario
from faultscape.errors import ConstraintError, UnknownStrategyError
from faultscape.runner import StrategyResult, compare, run
from faultscape.slo import violation_score

from conftest import small_doc


@pytest.fixture(scope="module")
def cpu_runs(cpu_cfg):
    return run(cpu_cfg, "noop"), run(cpu_cfg, "scripted")


def test_v_total_recomputes_from_scores(cpu_runs):
    for rep in cpu_runs:
        expected = math.fsum(s["weight"] * s["v_hat"] for s in rep.scores)
        assert rep.v_total == pytest.approx(expected, abs=1e-12)
        for s in rep.scores:
            vals = [p["value"] for p in rep.series[s["name"]] if p["scoring"]]
            assert s["samples"] == len(vals)
            assert violation_score(vals, s["threshold"]).v_hat == s["v_hat"]


def test_warmup_samples_excluded(cpu_runs, cpu_cfg):
    start = cpu_cfg.phases.evaluation_start
    for p in cpu_runs[0].series["latency"]:
        assert p["scoring"] == (p["t_ms"] > start)
    assert any(not p["scoring"] for p in cpu_runs[0].series["latency"])


def test_report_round_trip(cpu_runs):
    noop, scripted = cpu_runs
    assert noop.strategy == "noop" and scripted.strategy == "scripted"
    assert scripted.transitions and not noop.transitions
    text = scripted.to_text()
    assert f"V_total = {scripted.v_total:.3f}" in text
    assert "mean accuracy" in text
    assert "wall_clock" not in scripted.to_dict()


def test_machine_output_deterministic(cpu_cfg, cpu_runs):
    assert run(cpu_cfg, "noop").to_json() == cpu_runs[0].to_json()


def test_disabled_equals_noop_score(cpu_cfg, cpu_runs):
    assert run(cpu_cfg, None).scores == cpu_runs[0].scores


def test_compare_ranks_scripted_first(cpu_cfg):
    rep = compare(cpu_cfg, ["noop", "scripted"])
    assert rep.ranking() == ["scripted", "noop"]
    lines = rep.to_csv().splitlines()
    assert lines[0] == "rank,strategy,mean_v_total,min_v_total,max_v_total,repetitions"
    assert lines[1].startswith("1,scripted,")


def test_deterministic_scenario_repetitions_collapse():
    # no producers: nothing depends on the seed
    d = small_doc()
    d["data"]["producers"] = []
    d["chaos"] = [{"kind": "cpu_stress", "targets": ["e1"], "threads": 30, "start_offset_s": 1}]
    res = compare(parse_scenario(d), ["noop"], repetitions=3).results[0]
    assert res.min == res.mean == res.max


def test_fairness_same_workload_per_repetition(cpu_cfg):
    def produced(rep):
        return [(t, p["msg"]) for t, k, p in rep.world.event_log if k == "produce"]

    def windows(rep):
        return [(t, k) for t, k, _ in rep.world.event_log if k.startswith("chaos")]

    for i in range(2):
        cfg = dataclasses.replace(cpu_cfg, seed=cpu_cfg.seed + i)
        a, b = run(cfg, "noop"), run(cfg, "scripted")
        assert produced(a) == produced(b)
        assert windows(a) == windows(b)


def test_three_identical_repetitions(cpu_cfg):
    res = compare(cpu_cfg, ["scripted"], repetitions=3).results[0]
    assert res.v_totals[0] == run(cpu_cfg, "scripted").v_total
    assert res.min <= res.mean <= res.max


@pytest.mark.parametrize("v", [0.1, 0.277, 1 / 3, 0.0])
def test_mean_of_equal_runs_is_exact(v):
    r = StrategyResult("x", [v, v, v])
    assert r.min == r.mean == r.max == v


def test_mean_value():
    assert StrategyResult("x", [0.1, 0.2, 0.6]).mean == pytest.approx(0.3, abs=1e-15)


@pytest.mark.parametrize("names,reps", [([], 1), (["noop", "noop"], 1), (["noop"], 0)])
def test_compare_rejects(cfg, names, reps):
    with pytest.raises(ConstraintError):
        compare(cfg, names, reps)


def test_compare_unknown_strategy(cfg):
    with pytest.raises(UnknownStrategyError):
        compare(cfg, ["noop", "oracle"])


def test_parallel_matches_serial(cpu_cfg):
    a = compare(cpu_cfg, ["noop", "scripted"], repetitions=2, jobs=1)
    b = compare(cpu_cfg, ["noop", "scripted"], repetitions=2, jobs=2)
    assert a.to_json() == b.to_json()


def test_quiet_scenario_scores_zero():
    d = small_doc()
    d["phases"] = {"warmup_s": 2, "evaluation_s": 1, "teardown_s": 2}
    d["slos"] = [
        {"name": "latency", "sli": "event_time_latency", "threshold": 10, "weight": 0.5, "window_s": 3},
        {"name": "accuracy", "sli": "accuracy", "threshold": 0.01, "weight": 0.25, "window_s": 3},
        {"name": "energy", "sli": "energy_per_task", "threshold": 1000, "weight": 0.25, "window_s": 3},
    ]
    rep = run(parse_scenario(d))
    assert [s["samples"] for s in rep.scores] == [1, 1, 1]
    assert rep.v_total == 0.0


def test_seed_changes_outcome(cfg):
    a = run(cfg).to_json()
    b = run(dataclasses.replace(cfg, seed=cfg.seed + 1)).to_json()
    assert a != b
