"""SLI sampling, SLO violation scoring, and energy accounting.

Every SLI is oriented larger-is-worse. For a series of samples ``v(t)`` and a
threshold ``tau`` the per-SLO violation score is the mean over samples of
``1 - tau / v(t)`` where ``v(t) > tau`` and 0 elsewhere; the run score is the
weight-averaged sum of the per-SLO scores.
"""
from __future__ import annotations

import csv
import io
import logging
import math
from array import array
from bisect import bisect_right
from dataclasses import dataclass, field

from . import kernels
from .errors import EmptySeriesError, SliInputError

log = logging.getLogger(__name__)

CSV_HEADER = ("t_ms", "sli", "value", "carried_forward")
# lower-bound indicator accepted on input and folded into error_rate
INVERTED_SLIS = {"accuracy": "error_rate"}


@dataclass(frozen=True)
class SliSample:
    t: float  # ms
    value: float
    carried_forward: bool = False
    scoring: bool = True


@dataclass
class SliSeries:
    name: str
    sli: str
    samples: list = field(default_factory=list)

    def scored(self):
        return [s for s in self.samples if s.scoring]

    def values(self, scoring_only=True):
        return [s.value for s in self.samples if s.scoring or not scoring_only]


@dataclass(frozen=True)
class SloScore:
    name: str
    terms: tuple
    v_hat: float
    compliant_fraction: float = 1.0


# --------------------------------------------------------------------------- scoring


def _clamped(values):
    vals = list(values)
    if vals and min(vals) < 0:
        log.warning("negative SLI values clamped to 0")
        vals = [v if v >= 0 else 0.0 for v in vals]
    return vals


def violation_score(series, tau, name=None):
    """Per-SLO violation score of ``series`` (an :class:`SliSeries` or plain values)."""
    if isinstance(series, SliSeries):
        name = name or series.name
        values = series.values()
    else:
        values = series
    values = _clamped(values)
    if not values:
        raise EmptySeriesError(f"cannot score an empty series{f' for {name!r}' if name else ''}")
    if not tau > 0:
        raise ValueError(f"threshold must be > 0, got {tau}")
    buf = array("d", values)
    v_hat = kernels.violation_score(buf, tau)
    terms = tuple(kernels.violation_terms(buf, tau))
    compliant = 1.0 - kernels.count_above(buf, tau) / len(buf)
    return SloScore(name or "", terms, v_hat, compliant)


def total_score(scores, weights):
    """Weighted sum of per-SLO scores."""
    scores = list(scores)
    weights = list(weights)
    if len(scores) != len(weights):
        raise ValueError(f"{len(scores)} scores but {len(weights)} weights")
    v = [s.v_hat if isinstance(s, SloScore) else float(s) for s in scores]
    return kernels.weighted_total(v, weights)


# --------------------------------------------------------------------------- energy


def node_power(node, utilization):
    """Linear power model between idle and peak draw."""
    if not -1e-12 <= utilization <= 1 + 1e-12:
        raise ValueError(f"utilization must be in [0, 1], got {utilization}")
    utilization = min(1.0, max(0.0, utilization))
    return node.idle_power + utilization * (node.max_power - node.idle_power)


class EnergyLedger:
    """Piecewise-constant power per node, integrated exactly between breakpoints."""

    def __init__(self, nodes, start=0.0):
        self.order = [n.id for n in nodes]
        self.times = {n.id: [start] for n in nodes}
        self.energy = {n.id: [0.0] for n in nodes}  # joules at each breakpoint
        self.power = {n.id: [node_power(n, 0.0)] for n in nodes}
        self.window_tasks = []  # (t_ms, window energy J, completed tasks)

    def set_power(self, node_id, t, watts):
        ts, es, ps = self.times[node_id], self.energy[node_id], self.power[node_id]
        if t < ts[-1]:
            raise ValueError("energy ledger cannot move backwards in time")
        if ps[-1] == watts:
            return
        if ts[-1] == t:
            # zero-length segment: overwrite, and fold away if it returns to the previous level
            ps[-1] = watts
            if len(ps) >= 2 and ps[-2] == watts:
                ts.pop()
                es.pop()
                ps.pop()
            return
        es.append(es[-1] + ps[-1] * (t - ts[-1]) / 1000.0)
        ts.append(t)
        ps.append(watts)

    def current_power(self, node_id):
        return self.power[node_id][-1]

    def energy_at(self, node_id, t):
        ts = self.times[node_id]
        k = bisect_right(ts, t) - 1
        if k < 0:
            return 0.0
        return self.energy[node_id][k] + self.power[node_id][k] * (t - ts[k]) / 1000.0

    def total_at(self, t):
        acc = 0.0
        for node_id in self.order:
            acc += self.energy_at(node_id, t)
        return acc

    def window(self, t0, t1):
        return self.total_at(t1) - self.total_at(t0)


# --------------------------------------------------------------------------- sampling


class SliSampler:
    """Computes one sample per configured SLO at each sample tick.

    Windows cover completions with ``completed_at`` in ``(t - window, t]``.
    A window with no completions repeats the previous value and is flagged
    ``carried_forward`` (0.0 if there is no previous value yet).
    """

    def __init__(self, slos):
        self.slos = tuple(slos)
        self.series = {s.name: SliSeries(s.name, s.sli) for s in self.slos}

    def sample(self, state, t, scoring):
        out = {}
        done = state.completed_ms
        hi = bisect_right(done, t)
        for slo in self.slos:
            lo = bisect_right(done, t - slo.aggregation_window)
            n = hi - lo
            prev = self.series[slo.name].samples
            if n == 0:
                value = prev[-1].value if prev else 0.0
                sample = SliSample(t, value, True, scoring)
            else:
                if slo.sli == "event_time_latency":
                    value = kernels.window_sum(state.latency_s, lo, hi) / n
                elif slo.sli == "error_rate":
                    value = kernels.window_sum(state.incorrect, lo, hi) / n
                else:
                    wE = state.energy.window(t - slo.aggregation_window, t)
                    state.energy.window_tasks.append((t, wE, n))
                    value = wE / n
                sample = SliSample(t, value, False, scoring)
            prev.append(sample)
            out[slo.name] = sample
        return out


def sample_slis(state, t, sampler, scoring=True):
    return sampler.sample(state, t, scoring)


# --------------------------------------------------------------------------- CSV


def _fmt(x):
    if isinstance(x, float) and x.is_integer() and abs(x) < 1e15:
        return str(int(x))
    return repr(x)


def write_sli_csv(fh, series_list):
    """Write ``t_ms,sli,value,carried_forward`` rows, time-major, SLO order within a tick."""
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(CSV_HEADER)
    rows = []
    for order, series in enumerate(series_list):
        for s in series.samples:
            rows.append((s.t, order, series.sli, s.value, s.carried_forward))
    rows.sort(key=lambda r: (r[0], r[1]))
    for t, _, sli, value, carried in rows:
        w.writerow((_fmt(t), sli, repr(float(value)), int(carried)))


def sli_csv_text(series_list):
    buf = io.StringIO()
    write_sli_csv(buf, series_list)
    return buf.getvalue()


def read_sli_csv(fh):
    """Parse an SLI CSV into ``{sli: [(t_ms, value, carried), ...]}``, sorted by time."""
    reader = csv.reader(fh)
    try:
        header = next(reader)
    except StopIteration:
        raise SliInputError("SLI CSV is empty") from None
    if tuple(h.strip() for h in header) != CSV_HEADER:
        raise SliInputError(f"SLI CSV header must be {','.join(CSV_HEADER)}, got {','.join(header)}")
    table = {}
    for lineno, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != 4:
            raise SliInputError(f"line {lineno}: expected 4 fields, got {len(row)}")
        try:
            t = float(row[0])
            value = float(row[2])
        except ValueError:
            raise SliInputError(f"line {lineno}: t_ms and value must be numbers") from None
        if not (math.isfinite(t) and math.isfinite(value)):
            raise SliInputError(f"line {lineno}: non-finite value")
        carried = row[3].strip().lower() in ("1", "true", "yes")
        sli = row[1].strip()
        if sli in INVERTED_SLIS:
            sli, value = INVERTED_SLIS[sli], 1.0 - value
        if value < 0:
            log.warning("line %d: negative SLI value %r clamped to 0", lineno, value)
            value = 0.0
        table.setdefault(sli, []).append((t, value, carried))
    for rows in table.values():
        rows.sort(key=lambda r: r[0])
    return table


def score_table(table, slos, window=None):
    """Score an SLI table against ``slos``. ``window=(start, end)`` keeps rows with start < t <= end."""
    scores = []
    for slo in slos:
        rows = table.get(slo.sli, [])
        if window is not None:
            rows = [r for r in rows if window[0] < r[0] <= window[1]]
        if not rows:
            raise SliInputError(f"no samples for SLI {slo.sli!r} (SLO {slo.name!r}) in the scoring window")
        scores.append(violation_score([r[1] for r in rows], slo.threshold, name=slo.name))
    return scores, total_score(scores, [s.weight for s in slos])
