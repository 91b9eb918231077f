import numpy as np
import pytest

from ftnet import evolve
from ftnet.evolve import (
    MIN_SNAPSHOTS, EvolutionTrace, Snapshot, day_boundaries, day_end_index, fit_densification,
    fit_segments, trace,
)
from ftnet.ingest import TradeRecord
from ftnet.metrics import InsufficientDataError, path_stats
from ftnet.netbuild import build

DAY = evolve.DAY_MS


def stream(n_rec, n_agents, seed=0, t0=0, step=1000):
    rng = np.random.default_rng(seed)
    out = []
    for i in range(n_rec):
        b, s = rng.choice(n_agents, 2, replace=False)
        out.append(TradeRecord(i, t0 + i * step, "cu", f"A{b}", f"A{s}", 1, 100))
    return out


def test_cadence_one_matches_prefix_builds():
    recs = stream(40, 12, seed=1)
    tr = trace(recs, cadence=1, budget=None, final_budget=None)
    assert len(tr) == 40 and tr.cadence == "records:1"
    for i in (0, 5, 17, 39):
        net = build(recs[: i + 1])
        s = tr.snapshots[i]
        assert (s.t, s.n, s.e) == (i + 1, net.N, net.E)
        assert s.k_max == net.degrees.max()
        assert s.mean_degree == pytest.approx(2 * net.E / net.N)
        assert s.L == pytest.approx(path_stats(net).L)


def test_record_cadence_keeps_last_partial_batch():
    tr = trace(stream(25, 10), cadence=10, paths=False)
    assert [s.t for s in tr.snapshots] == [10, 20, 25]
    assert all(np.isnan(s.L) for s in tr.snapshots)


def test_day_cadence_and_default():
    recs = stream(30, 10, step=DAY // 10)
    tr = trace(recs, paths=False)
    assert tr.cadence == "day"
    assert [s.t for s in tr.snapshots] == [10, 20, 30]
    assert list(day_boundaries([r.timestamp for r in recs])) == [10, 20]


def test_day_end_index():
    recs = stream(30, 10, step=DAY // 10)
    ts = np.array([r.timestamp for r in recs])
    tr = trace(recs, cadence=5, paths=False)
    # snapshots at 5, 10, 15...; day 0 closes after record 10 (snapshot index 1)
    assert day_end_index(tr, ts, 0) == 2
    assert day_end_index(tr, ts, 1) == 4
    with pytest.raises(ValueError):
        day_end_index(tr, ts, 2)


def test_bad_cadence():
    with pytest.raises(ValueError):
        trace(stream(5, 4), cadence=0)


def test_linear_growth_has_unit_exponent():
    # e = n / 2 exactly
    n = np.arange(10, 200, 10, dtype=float)
    fit = fit_segments(np.log(n), np.log(n / 2))
    assert fit.slope1 == pytest.approx(1.0) and fit.slope2 == pytest.approx(1.0)
    assert fit.single.slope == pytest.approx(1.0)


def test_piecewise_recovery():
    x = np.linspace(0, 5, 30)
    y = np.where(x < x[12], 1.3 * x, 1.3 * x[12] + 2.4 * (x - x[12]))
    fit = fit_segments(x, y)
    assert fit.breakpoint in (12, 13)
    assert abs(fit.slope1 - 1.3) < 0.02 and abs(fit.slope2 - 2.4) < 0.02
    assert fit.sse_ratio < 0.01


def test_straight_line_gains_nothing():
    rng = np.random.default_rng(2)
    x = np.linspace(0, 5, 40)
    y = 1.7 * x + rng.normal(0, 0.05, 40)
    assert fit_segments(x, y).sse_ratio > 0.5


def test_fixed_breakpoint():
    x = np.arange(10, dtype=float)
    fit = fit_segments(x, 2 * x, breakpoint=4)
    assert fit.breakpoint == 4
    with pytest.raises(ValueError):
        fit_segments(x, x, breakpoint=2)
    with pytest.raises(InsufficientDataError):
        fit_segments(x[: MIN_SNAPSHOTS - 1], x[: MIN_SNAPSHOTS - 1])


def synthetic_trace(a, ns):
    snaps = []
    for i, n in enumerate(np.round(ns)):
        e = 0.5 * n ** a
        snaps.append(Snapshot(i, int(n), e, 2 * e / n, 2 * e / (n * (n - 1)), 1, float("nan"), 0))
    return EvolutionTrace(snaps, "records:1")


def test_derived_slopes_follow_edge_exponent():
    tr = synthetic_trace(1.4, np.geomspace(1e3, 1e6, 12))
    fe = fit_densification(tr)
    fk = fit_densification(tr, "mean_degree")
    fd = fit_densification(tr, "density")
    assert fe.slope1 == pytest.approx(1.4, abs=1e-9)
    assert fk.slope1 == pytest.approx(fe.slope1 - 1, abs=1e-9)
    # density carries an extra n/(n-1) factor that vanishes for large n
    assert fd.slope1 == pytest.approx(fe.slope1 - 2, abs=1e-3)


def test_nan_points_dropped_and_breakpoint_shifted():
    tr = synthetic_trace(1.2, np.geomspace(10, 1e4, 10))
    tr.snapshots[0].L = float("nan")
    for s in tr.snapshots[1:]:
        s.L = 1.0 / s.n
    fit = fit_densification(tr, "L", breakpoint=5)
    assert fit.breakpoint == 4
    assert fit.slope1 == pytest.approx(-1.0)


def test_trace_csv():
    tr = trace(stream(12, 6), cadence=6, budget=None)
    lines = tr.to_csv().splitlines()
    assert lines[0] == ",".join(evolve.FIELDS)
    assert len(lines) == 3
