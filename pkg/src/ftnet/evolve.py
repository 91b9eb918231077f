"""Growth of the cumulative network along the trade stream.

Snapshots are taken either every K records or at each trading-day
boundary. Densification is summarized by a two-segment fit in log-log
space with an exhaustive breakpoint search.
"""
from __future__ import annotations

import csv
import io
import json
from dataclasses import asdict, dataclass, field

import numpy as np

from . import metrics
from .ingest import RecordTable, as_table
from .netbuild import TradingNetwork, extend

DAY_MS = 86_400_000
DEFAULT_RECORD_CADENCE = 10_000
TRACE_BUDGET = 200
MIN_SEGMENT = 3
MIN_SNAPSHOTS = 7
FIELDS = ("t", "n", "e", "mean_degree", "density", "k_max", "L", "D")


@dataclass
class Snapshot:
    t: int
    n: int
    e: int
    mean_degree: float
    density: float
    k_max: int
    L: float
    D: int


@dataclass
class EvolutionTrace:
    snapshots: list = field(default_factory=list)
    cadence: str = ""

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(s, name) for s in self.snapshots], dtype=float)

    def __len__(self):
        return len(self.snapshots)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(FIELDS)
        for s in self.snapshots:
            w.writerow([s.t, s.n, s.e, repr(s.mean_degree), repr(s.density), s.k_max,
                        repr(s.L), s.D])
        return buf.getvalue()


@dataclass
class LineFit:
    slope: float
    intercept: float
    sse: float


@dataclass
class SegmentedFit:
    breakpoint: int
    slope1: float
    slope2: float
    intercept1: float
    intercept2: float
    sse_total: float
    single: LineFit
    sse_ratio: float
    x_field: str = "n"
    y_field: str = "e"

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def day_boundaries(timestamps: np.ndarray) -> np.ndarray:
    """Record positions where a new calendar day (UTC) starts."""
    day = np.asarray(timestamps, dtype=np.int64) // DAY_MS
    return np.flatnonzero(np.diff(day) != 0) + 1


def _cut_points(table: RecordTable, cadence) -> tuple[np.ndarray, str]:
    n = len(table)
    if cadence is None:
        cuts = day_boundaries(table.timestamp)
        if len(cuts):
            cadence = "day"
        else:
            cadence = DEFAULT_RECORD_CADENCE
    if cadence == "day":
        cuts = np.append(day_boundaries(table.timestamp), n)
        return cuts, "day"
    k = int(cadence)
    if k < 1:
        raise ValueError("cadence must be >= 1")
    cuts = np.arange(k, n + k, k)
    cuts[-1] = min(cuts[-1], n)
    return np.unique(cuts), f"records:{k}"


def measure(net: TradingNetwork, t: int, budget=TRACE_BUDGET, seed: int = 0,
            paths: bool = True) -> Snapshot:
    n, e = net.N, net.E
    if paths and n >= 2:
        ps = metrics.path_stats(net, budget, seed)
        L, D = ps.L, ps.D
    else:
        L, D = float("nan"), 0
    return Snapshot(
        t=int(t), n=n, e=e,
        mean_degree=2.0 * e / n if n else 0.0,
        density=2.0 * e / (n * (n - 1)) if n > 1 else 0.0,
        k_max=int(net.degrees.max()) if n else 0,
        L=L, D=D,
    )


def trace(records, cadence=None, budget=TRACE_BUDGET, final_budget=None,
          seed: int = 0, paths: bool = True) -> EvolutionTrace:
    """Grow the network record batch by record batch and snapshot it.

    ``cadence`` is ``"day"``, an integer record count, or None (day mode
    for multi-day streams, else every 10^4 records). Path statistics use
    ``budget`` sampled sources, except the last snapshot which is measured
    with ``final_budget`` (default: the metrics module's default budget).
    """
    table = as_table(records)
    cuts, label = _cut_points(table, cadence)
    net = TradingNetwork.empty()
    out = EvolutionTrace(cadence=label)
    start = 0
    for i, stop in enumerate(cuts):
        net, _ = extend(net, table[start:stop])
        start = stop
        last = i == len(cuts) - 1
        snap = measure(net, stop, final_budget if last else budget, seed, paths)
        out.snapshots.append(snap)
    return out


def _line(x, y) -> LineFit:
    xm, ym = x.mean(), y.mean()
    sxx = np.sum((x - xm) ** 2)
    slope = float(np.sum((x - xm) * (y - ym)) / sxx) if sxx > 0 else 0.0
    icept = float(ym - slope * xm)
    return LineFit(slope, icept, float(np.sum((y - icept - slope * x) ** 2)))


def fit_segments(x: np.ndarray, y: np.ndarray, breakpoint: int | None = None) -> SegmentedFit:
    """Two independent least-squares lines split at a snapshot index.

    The breakpoint index is the first point of the second segment; every
    split with at least three points per side is tried unless one is given.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    m = len(x)
    if m < MIN_SNAPSHOTS:
        raise metrics.InsufficientDataError(f"{m} points, need {MIN_SNAPSHOTS}")
    single = _line(x, y)
    if breakpoint is None:
        splits = range(MIN_SEGMENT, m - MIN_SEGMENT + 1)
    else:
        if not MIN_SEGMENT <= breakpoint <= m - MIN_SEGMENT:
            raise ValueError(f"breakpoint {breakpoint} leaves a segment under {MIN_SEGMENT} points")
        splits = [breakpoint]
    best = None
    for b in splits:
        f1, f2 = _line(x[:b], y[:b]), _line(x[b:], y[b:])
        sse = f1.sse + f2.sse
        if best is None or sse < best[0]:
            best = (sse, b, f1, f2)
    sse, b, f1, f2 = best
    ratio = sse / single.sse if single.sse > 0 else 1.0
    return SegmentedFit(b, f1.slope, f2.slope, f1.intercept, f2.intercept, sse, single, ratio)


def fit_densification(tr: EvolutionTrace, y_field: str = "e", x_field: str = "n",
                      breakpoint: int | None = None) -> SegmentedFit:
    """Two-segment fit of log(y) against log(n) over the trace."""
    x, y = tr.column(x_field), tr.column(y_field)
    keep = (x > 0) & (y > 0) & np.isfinite(y)
    if breakpoint is not None:
        breakpoint = int(breakpoint - np.count_nonzero(~keep[:breakpoint]))
    fit = fit_segments(np.log(x[keep]), np.log(y[keep]), breakpoint)
    fit.x_field, fit.y_field = x_field, y_field
    return fit


def day_end_index(tr: EvolutionTrace, timestamps: np.ndarray, day: int = 0) -> int:
    """Index of the first snapshot taken after trading day ``day`` closes."""
    cuts = day_boundaries(timestamps)
    if day >= len(cuts):
        raise ValueError(f"stream has no boundary after day {day}")
    t = tr.column("t")
    return int(np.searchsorted(t, cuts[day], side="left") + 1)
