import copy
import json
from importlib import resources

import pytest

from faultscape import parse_scenario

SCENARIOS = resources.files("faultscape").joinpath("scenarios")
ACCEPTANCE = {}  # criterion number -> (PASS | FAIL, title)


def bundled(name):
    return json.loads(SCENARIOS.joinpath(name).read_text(encoding="utf-8"))


def small_doc(**over):
    """One edge zone, one cloud zone, one worker each. Cheap enough for property tests."""
    doc = {
        "seed": 7,
        "sample_interval_ms": 1000,
        "phases": {"warmup_s": 2, "evaluation_s": 10, "teardown_s": 2},
        "infrastructure": {
            "zones": ["edge", "cloud"],
            "nodes": [
                {"id": "e1", "zone": "edge", "role": "edge", "cpu_cores": 2, "idle_power_w": 5, "max_power_w": 15},
                {"id": "c1", "zone": "cloud", "role": "cloud", "cpu_cores": 4, "idle_power_w": 40, "max_power_w": 120},
            ],
            "links": [{"a": "edge", "b": "cloud", "latency_ms": 50, "bandwidth_mbps": 100}],
        },
        "system": {
            "model_profiles": [
                {"name": "small", "hidden_layers": 50, "base_service_time_ms": 100, "accuracy": 0.8, "energy_per_inference_j": 1},
                {"name": "big", "hidden_layers": 152, "base_service_time_ms": 300, "accuracy": 0.9, "energy_per_inference_j": 3},
            ],
            "workers": [
                {"id": "ew", "node": "e1", "model": "big"},
                {"id": "cw", "node": "c1", "model": "big"},
            ],
        },
        "data": {"producers": [{"zone": "edge", "rate_per_s": 4, "message_size_kb": 100}], "staleness_deadline_ms": 5000},
        "slos": [
            {"name": "latency", "sli": "event_time_latency", "threshold": 1.0, "weight": 0.5, "window_s": 1},
            {"name": "accuracy", "sli": "accuracy", "threshold": 0.75, "weight": 0.25, "window_s": 1},
            {"name": "energy", "sli": "energy_per_task", "threshold": 120, "weight": 0.25, "window_s": 1},
        ],
    }
    doc = copy.deepcopy(doc)
    doc.update(over)
    return doc


@pytest.fixture
def doc():
    return small_doc()


@pytest.fixture
def cfg():
    return parse_scenario(small_doc())


@pytest.fixture(scope="session")
def cpu_doc():
    return bundled("paper-cpu-stress.json")


@pytest.fixture(scope="session")
def net_doc():
    return bundled("paper-network-latency.json")


@pytest.fixture(scope="session")
def cpu_cfg(cpu_doc):
    return parse_scenario(cpu_doc)


@pytest.fixture(scope="session")
def net_cfg(net_doc):
    return parse_scenario(net_doc)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        status, title = ACCEPTANCE[n]
        terminalreporter.write_line(f"{status} criterion {n:>2}: {title}")
