"""Command-line interface: run, compare, validate, score.

Exit codes: 0 success, 1 configuration or usage error, 2 internal simulator fault.
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import os
import sys
from importlib import resources
from pathlib import Path

from . import remediation, runner, simcore
from .config import parse_scenario, parse_slo_document, scenario_digest
from .errors import FaultscapeError, SimulationFault
from .slo import read_sli_csv, score_table, sli_csv_text

OUT_ENV = "ECOSCAPE_OUT"
RUN_FILES = ("report.json", "sli.csv", "events.ndjson")


class UsageError(FaultscapeError):
    pass


def bundled_scenarios():
    return sorted(p.name for p in resources.files("faultscape").joinpath("scenarios").iterdir() if p.name.endswith(".json"))


def _scenario_text(ref):
    """Read a scenario from a path, or from the bundled set by name (with or without ``.json``)."""
    path = Path(ref)
    if path.is_file():
        return path.read_text(encoding="utf-8")
    name = ref if ref.endswith(".json") else f"{ref}.json"
    bundled = resources.files("faultscape").joinpath("scenarios", Path(name).name)
    if bundled.is_file():
        return bundled.read_text(encoding="utf-8")
    raise UsageError(f"{ref}: no such file, and not a bundled scenario ({', '.join(bundled_scenarios())})")


def _load(ref, seed=None):
    cfg = parse_scenario(_scenario_text(ref))
    if seed is not None:
        cfg = dataclasses.replace(cfg, seed=seed)
    return cfg


def _out_dir(args):
    out = args.out or os.environ.get(OUT_ENV) or "results"
    path = Path(out)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _write(path, text, force):
    if path.exists() and not force:
        raise UsageError(f"{path} already exists; pass --force to overwrite")
    path.write_text(text, encoding="utf-8")


# --------------------------------------------------------------------------- commands


def cmd_run(args):
    cfg = _load(args.scenario, args.seed)
    strategy = args.strategy or (cfg.remediator.name if cfg.remediator else "noop")
    remediation.lookup(strategy)
    out = _out_dir(args)
    targets = [out / name for name in RUN_FILES]
    if not args.force:
        for t in targets:
            if t.exists():
                raise UsageError(f"{t} already exists; pass --force to overwrite")
    report = runner.run(cfg, strategy)
    series = [report.world.sampler.series[s.name] for s in cfg.slos]
    _write(targets[0], report.to_json(), True)
    _write(targets[1], sli_csv_text(series), True)
    _write(targets[2], "".join(line + "\n" for line in simcore.event_log_lines(report.world)), True)
    if args.format == "machine":
        sys.stdout.write(report.to_json())
    elif args.format == "csv":
        sys.stdout.write("name,sli,threshold,weight,v_hat,compliant_fraction\n")
        for s in report.scores:
            sys.stdout.write(f"{s['name']},{s['sli']},{s['threshold']!r},{s['weight']!r},{s['v_hat']!r},{s['compliant_fraction']!r}\n")
        sys.stdout.write(f"total,,,,{report.v_total!r},\n")
    else:
        sys.stdout.write(report.to_text())
        sys.stdout.write(f"wrote {', '.join(str(t) for t in targets)}\n")
    return 0


def cmd_compare(args):
    cfg = _load(args.scenario, args.seed)
    names = []
    for item in args.strategy or []:
        names.extend(n for n in item.split(",") if n)
    report = runner.compare(cfg, names, args.repetitions, args.jobs)
    text = {"csv": report.to_csv, "machine": report.to_json}.get(args.format, report.to_text)()
    sys.stdout.write(text)
    if args.out or os.environ.get(OUT_ENV):
        out = _out_dir(args)
        _write(out / "comparison.csv", report.to_csv(), args.force)
    return 0


def cmd_validate(args):
    ref = args.scenario_path or args.scenario
    if not ref:
        raise UsageError("validate needs a scenario path")
    cfg = parse_scenario(_scenario_text(ref))
    sys.stdout.write(f"ok {scenario_digest(cfg)}\n")
    return 0


def cmd_score(args):
    slos, phases = parse_slo_document(_scenario_text(args.slos))
    try:
        with open(args.sli, newline="", encoding="utf-8") as fh:
            table = read_sli_csv(fh)
    except OSError as exc:
        raise UsageError(f"{args.sli}: {exc.strerror}") from None
    window = (phases.evaluation_start, phases.evaluation_end) if phases is not None else None
    scores, v_total = score_table(table, slos, window)
    if args.format == "machine":
        doc = {"v_total": v_total, "scores": [{"name": s.name, "v_hat": s.v_hat} for s in scores]}
        sys.stdout.write(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    elif args.format == "csv":
        sys.stdout.write("name,v_hat\n")
        for s in scores:
            sys.stdout.write(f"{s.name},{s.v_hat!r}\n")
        sys.stdout.write(f"total,{v_total!r}\n")
    else:
        for s, spec in zip(scores, slos):
            sys.stdout.write(f"{s.name:<12} tau={spec.threshold:<8g} w={spec.weight:<5g} V={s.v_hat:.3f}\n")
        sys.stdout.write(f"V_total = {v_total:.3f}\n")
    return 0


# --------------------------------------------------------------------------- parser


def build_parser():
    p = argparse.ArgumentParser(prog="faultscape", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true", help="log warnings from the engine")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, scenario_required=True):
        sp.add_argument("--scenario", required=scenario_required, help="scenario file or bundled scenario name")
        sp.add_argument("--seed", type=int, help="override the scenario seed")
        sp.add_argument("--out", help=f"output directory (default ${OUT_ENV} or ./results)")
        sp.add_argument("--format", choices=("text", "csv", "machine"), default="text")
        sp.add_argument("--force", action="store_true", help="overwrite existing output files")

    sp = sub.add_parser("run", help="run one scenario under one strategy")
    common(sp)
    sp.add_argument("--strategy", help="strategy name (default: the scenario's remediator, else noop)")
    sp.set_defaults(func=cmd_run)

    sp = sub.add_parser("compare", help="rank strategies over seeded repetitions")
    common(sp)
    sp.add_argument("--strategy", action="append", required=True, help="strategy name; repeat or comma-separate")
    sp.add_argument("--repetitions", type=int, default=1)
    sp.add_argument("--jobs", type=int, default=1, help="parallel worker processes")
    sp.set_defaults(func=cmd_compare)

    sp = sub.add_parser("validate", help="check a scenario and print its digest")
    sp.add_argument("scenario_path", nargs="?")
    sp.add_argument("--scenario")
    sp.set_defaults(func=cmd_validate)

    sp = sub.add_parser("score", help="score an SLI CSV against a set of SLOs")
    sp.add_argument("--sli", required=True, help="CSV with header t_ms,sli,value,carried_forward")
    sp.add_argument("--slos", required=True, help="scenario file, or a document with 'slos' and optional 'phases'")
    sp.add_argument("--format", choices=("text", "csv", "machine"), default="text")
    sp.set_defaults(func=cmd_score)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING if args.verbose else logging.ERROR, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except SimulationFault as exc:
        print(f"internal error: {exc}", file=sys.stderr)
        return 2
    except (FaultscapeError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
