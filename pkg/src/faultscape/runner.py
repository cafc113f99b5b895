"""Run orchestration: single runs, seeded repetitions, and strategy comparisons."""
from __future__ import annotations

import csv
import dataclasses
import io
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

from . import remediation, simcore
from .config import chaos_window, scenario_digest
from .errors import ConstraintError
from .slo import total_score, violation_score


@dataclass
class RunReport:
    digest: str
    seed: int
    strategy: str
    scores: list  # one dict per SLO, in config order
    v_total: float
    series: dict  # SLO name -> list of sample dicts
    events: dict
    chaos: list
    actions: list
    transitions: list
    ledger: dict
    wall_clock: float = 0.0
    world: object = field(default=None, repr=False, compare=False)

    def to_dict(self):
        """Machine form. Wall-clock runtime is left out so reruns are byte-identical."""
        return {
            "digest": self.digest,
            "seed": self.seed,
            "strategy": self.strategy,
            "v_total": self.v_total,
            "scores": self.scores,
            "series": self.series,
            "events": self.events,
            "chaos": self.chaos,
            "actions": self.actions,
            "transitions": self.transitions,
            "ledger": self.ledger,
        }

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def score(self, name):
        for s in self.scores:
            if s["name"] == name:
                return s
        raise KeyError(name)

    def ratio(self, name, scoring_only=False):
        """``(t_ms, v/tau)`` pairs for one SLO."""
        return [(p["t_ms"], p["ratio"]) for p in self.series[name] if p["scoring"] or not scoring_only]

    def to_text(self):
        lines = [f"strategy {self.strategy}  seed {self.seed}  digest {self.digest[:12]}"]
        for s in self.scores:
            lines.append(
                f"  {s['name']:<12} {s['sli']:<20} tau={s['threshold']:<8g} w={s['weight']:<5g} "
                f"V={s['v_hat']:.3f}  compliant={s['compliant_fraction']:.3f}"
            )
            if s["sli"] == "error_rate":
                scored = [p["value"] for p in self.series[s["name"]] if p["scoring"]]
                if scored:
                    lines.append(f"  {'':<12} mean accuracy {1.0 - sum(scored) / len(scored):.3f}")
        lines.append(f"V_total = {self.v_total:.3f}")
        lines.append(f"runtime {self.wall_clock:.3f} s")
        return "\n".join(lines) + "\n"


def _resolve(cfg, remediator):
    if remediator is None:
        return "disabled", None
    if isinstance(remediator, str):
        return remediator, remediation.make_remediator(remediator, cfg)
    return getattr(remediator, "name", type(remediator).__name__), remediator


def simulate(cfg, remediator=None):
    """Build and run the world; returns it for inspection."""
    return simcore.run_to_completion(simcore.build_world(cfg, remediator))


def run(cfg, remediator="noop"):
    """Run ``cfg`` under ``remediator`` (a name, an instance, or None to disable remediation)."""
    name, strategy = _resolve(cfg, remediator)
    started = time.perf_counter()
    world = simulate(cfg, strategy)
    elapsed = time.perf_counter() - started
    return build_report(cfg, world, name, elapsed)


def build_report(cfg, world, name, wall_clock=0.0):
    scores, series = [], {}
    for slo in cfg.slos:
        s = world.sampler.series[slo.name]
        sc = violation_score(s, slo.threshold)
        scores.append(
            {
                "name": slo.name,
                "sli": slo.sli,
                "threshold": slo.threshold,
                "weight": slo.weight,
                "v_hat": sc.v_hat,
                "compliant_fraction": sc.compliant_fraction,
                "samples": len(sc.terms),
            }
        )
        series[slo.name] = [
            {
                "t_ms": p.t,
                "value": p.value,
                "ratio": p.value / slo.threshold,
                "carried_forward": p.carried_forward,
                "scoring": p.scoring,
            }
            for p in s.samples
        ]
    v_total = total_score([s["v_hat"] for s in scores], [s["weight"] for s in scores])
    chaos = []
    for c in cfg.chaos:
        start, end = chaos_window(c, cfg.phases)
        chaos.append({"kind": c.kind, "start_ms": start, "end_ms": end})
    actions = [
        {"t_ms": t, "action": desc, "applied": ok, "reason": reason} for t, desc, ok, reason in world.actions_log
    ]
    return RunReport(
        digest=scenario_digest(cfg),
        seed=cfg.seed,
        strategy=name,
        scores=scores,
        v_total=v_total,
        series=series,
        events=simcore.event_summary(world),
        chaos=chaos,
        actions=actions,
        transitions=[tr.summary() for tr in world.state.transitions],
        ledger=world.state.ledger(),
        wall_clock=wall_clock,
        world=world,
    )


# --------------------------------------------------------------------------- comparison


@dataclass
class StrategyResult:
    strategy: str
    v_totals: list

    @property
    def mean(self):
        # offset from the first value so identical repetitions average to exactly that value
        first = self.v_totals[0]
        return first + math.fsum(v - first for v in self.v_totals) / len(self.v_totals)

    @property
    def min(self):
        return min(self.v_totals)

    @property
    def max(self):
        return max(self.v_totals)


@dataclass
class ComparisonReport:
    digest: str
    base_seed: int
    repetitions: int
    results: list  # StrategyResult, ranked best first

    def ranking(self):
        return [r.strategy for r in self.results]

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(("rank", "strategy", "mean_v_total", "min_v_total", "max_v_total", "repetitions"))
        for i, r in enumerate(self.results, start=1):
            w.writerow((i, r.strategy, repr(r.mean), repr(r.min), repr(r.max), len(r.v_totals)))
        return buf.getvalue()

    def to_text(self):
        lines = [f"{'rank':<5}{'strategy':<16}{'mean':>8}{'min':>8}{'max':>8}"]
        for i, r in enumerate(self.results, start=1):
            lines.append(f"{i:<5}{r.strategy:<16}{r.mean:>8.3f}{r.min:>8.3f}{r.max:>8.3f}")
        return "\n".join(lines) + "\n"

    def to_dict(self):
        return {
            "digest": self.digest,
            "base_seed": self.base_seed,
            "repetitions": self.repetitions,
            "ranking": [
                {"strategy": r.strategy, "mean": r.mean, "min": r.min, "max": r.max, "v_totals": r.v_totals}
                for r in self.results
            ],
        }

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"


def _one(job):
    cfg, strategy, rep = job
    return strategy, rep, run(cfg, strategy).v_total


def compare(cfg, strategies, repetitions=1, jobs=1):
    """Run every strategy on seeds ``cfg.seed + i`` for ``i < repetitions`` and rank by mean V_total."""
    strategies = list(strategies)
    if not strategies:
        raise ConstraintError("strategies", "at least one strategy is required")
    if len(set(strategies)) != len(strategies):
        raise ConstraintError("strategies", "strategy names must be unique")
    if repetitions < 1:
        raise ConstraintError("repetitions", "must be >= 1")
    for name in strategies:
        remediation.lookup(name)
    work = [
        (dataclasses.replace(cfg, seed=cfg.seed + i), name, i) for name in strategies for i in range(repetitions)
    ]
    if jobs > 1 and len(work) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            done = list(pool.map(_one, work))
    else:
        done = [_one(j) for j in work]
    merged = {}
    for strategy, rep, v in done:
        merged[(strategy, rep)] = v
    results = [StrategyResult(s, [merged[(s, i)] for i in range(repetitions)]) for s in strategies]
    results.sort(key=lambda r: (r.mean, r.strategy))
    return ComparisonReport(scenario_digest(cfg), cfg.seed, repetitions, results)
