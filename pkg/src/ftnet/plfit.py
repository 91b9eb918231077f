"""Power-law tail fitting with KS-optimal lower bounds and bootstrap p-values.

Degree samples are integer valued and fitted with the discrete (Hurwitz
zeta normalized) likelihood; betweenness samples are real valued and use
the continuous closed form. The lower bound is the candidate minimizing
the KS distance between the empirical tail and the fitted model; the
p-value comes from a semi-parametric bootstrap that repeats the whole
selection on every synthetic replicate.
"""
from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass

import numpy as np

from .kernels import powerlaw as pk

DISCRETE = "discrete"
CONTINUOUS = "continuous"

MIN_DISTINCT = 10
TAIL_FLOOR = 50
SMALL_TAIL_FLOOR = 10
SMALL_SAMPLE = 200
MAX_CANDIDATES = 400
MIN_BOOT = 100


class InsufficientTailError(ValueError):
    pass


class DivergentEstimateError(ValueError):
    pass


@dataclass
class TailSample:
    values: np.ndarray
    kind: str = DISCRETE

    def __post_init__(self):
        if self.kind not in (DISCRETE, CONTINUOUS):
            raise ValueError(f"kind must be discrete or continuous, not {self.kind!r}")
        v = np.asarray(self.values, dtype=np.float64).ravel()
        if v.size == 0:
            raise ValueError("empty sample")
        if not np.all(v > 0):
            raise ValueError("sample values must be positive")
        if self.kind == DISCRETE and not np.all(v == np.round(v)):
            raise ValueError("discrete sample has non-integer values")
        self.values = v

    def __len__(self):
        return len(self.values)


@dataclass
class PowerLawFit:
    kind: str
    x_min: float
    exponent: float
    ks: float
    n_tail: int
    p_value: float | None = None
    n_boot: int | None = None
    seed: int | None = None

    def to_dict(self) -> dict:
        d = asdict(self)
        if self.kind == DISCRETE:
            d["x_min"] = int(self.x_min)
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def fit_exponent(sample: TailSample, x_min: float) -> float:
    """Maximum-likelihood exponent of the values at or above ``x_min``."""
    tail = sample.values[sample.values >= x_min]
    n = len(tail)
    if n < 2:
        raise InsufficientTailError(f"only {n} values >= x_min={x_min}")
    if np.all(tail == x_min):
        raise DivergentEstimateError("every tail value equals x_min")
    if sample.kind == CONTINUOUS:
        return 1.0 + n / float(np.sum(np.log(tail / x_min)))
    return float(pk.mle_discrete(np.sum(np.log(tail)), n, x_min))


def _candidates(counts: np.ndarray, n: int, max_candidates: int | None) -> np.ndarray:
    floor = TAIL_FLOOR if n >= SMALL_SAMPLE else SMALL_TAIL_FLOOR
    tail_sizes = n - np.concatenate([[0], np.cumsum(counts)[:-1]])
    # at least two distinct values above each candidate
    ok = np.flatnonzero(tail_sizes[:-1] >= floor)
    if max_candidates is not None and len(ok) > max_candidates:
        pick = np.unique(np.linspace(0, len(ok) - 1, max_candidates).round().astype(np.int64))
        ok = ok[pick]
    return ok


def select_xmin(sample: TailSample, max_candidates: int | None = MAX_CANDIDATES) -> PowerLawFit:
    """Scan candidate lower bounds and keep the one with the smallest KS.

    Candidates are the distinct sample values whose tail holds at least 50
    points (10 for samples under 200). When there are more than
    ``max_candidates`` of them an evenly rank-spaced subset is scanned.
    Ties go to the smaller bound.
    """
    x = np.sort(sample.values)
    n = len(x)
    uvals, counts = np.unique(x, return_counts=True)
    if len(uvals) < MIN_DISTINCT:
        raise InsufficientTailError(f"{len(uvals)} distinct values, need {MIN_DISTINCT}")
    cand = _candidates(counts, n, max_candidates)
    if len(cand) == 0:
        raise InsufficientTailError("no candidate x_min leaves a large enough tail")
    if sample.kind == DISCRETE:
        alphas, kss = pk.discrete_scan(uvals, counts, cand)
    else:
        starts = np.concatenate([[0], np.cumsum(counts)[:-1]])
        alphas, kss = pk.continuous_scan(x, starts[cand])
    best = int(np.argmin(kss))
    j = cand[best]
    n_tail = int(n - counts[:j].sum())
    return PowerLawFit(sample.kind, float(uvals[j]), float(alphas[best]), float(kss[best]), n_tail)


def sample_power_law(n: int, exponent: float, x_min: float, kind: str, rng) -> np.ndarray:
    """Draw ``n`` values from a pure power law above ``x_min``."""
    u = rng.random(n)
    if kind == CONTINUOUS:
        return x_min * (1.0 - u) ** (-1.0 / (exponent - 1.0))
    return pk.sample_discrete(u, exponent, x_min).astype(np.float64)


def replicate_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(index)]))


def _replicate_ks(values, below, fit, seed, r, max_candidates):
    rng = replicate_rng(seed, r)
    n = len(values)
    n_tail = rng.binomial(n, 1.0 - len(below) / n)
    parts = [sample_power_law(n_tail, fit.exponent, fit.x_min, fit.kind, rng)]
    if n - n_tail:
        parts.append(rng.choice(below, n - n_tail))
    rep = TailSample(np.concatenate(parts), fit.kind)
    try:
        return select_xmin(rep, max_candidates).ks
    except (InsufficientTailError, DivergentEstimateError):
        return math.nan


def gof_pvalue(sample: TailSample, fit: PowerLawFit, n_boot: int = 1000, seed: int = 0,
               max_candidates: int | None = MAX_CANDIDATES, n_jobs: int = 1) -> float:
    """Fraction of bootstrap replicates whose refitted KS is at least ``fit.ks``.

    Replicate ``r`` uses its own generator seeded from ``(seed, r)``, so
    the value is identical for any ``n_jobs``. Replicates too degenerate to
    refit are left out of the denominator.
    """
    if n_boot < MIN_BOOT:
        raise ValueError(f"n_boot={n_boot} is below {MIN_BOOT}")
    values = sample.values
    below = values[values < fit.x_min]

    def run(r):
        return _replicate_ks(values, below, fit, seed, r, max_candidates)

    if n_jobs > 1:
        with ThreadPoolExecutor(n_jobs) as pool:
            ks = np.fromiter(pool.map(run, range(n_boot)), float, n_boot)
    else:
        ks = np.fromiter(map(run, range(n_boot)), float, n_boot)
    ks = ks[~np.isnan(ks)]
    if ks.size == 0:
        return math.nan
    return float(np.mean(ks >= fit.ks))


def fit_power_law(sample: TailSample, n_boot: int = 1000, seed: int = 0,
                  max_candidates: int | None = MAX_CANDIDATES, n_jobs: int = 1) -> PowerLawFit:
    """``select_xmin`` followed by ``gof_pvalue``; ``n_boot=0`` skips the test."""
    fit = select_xmin(sample, max_candidates)
    if n_boot:
        fit.p_value = gof_pvalue(sample, fit, n_boot, seed, max_candidates, n_jobs)
        fit.n_boot = n_boot
        fit.seed = seed
    return fit


def cumulative_curve(sample: TailSample) -> tuple[np.ndarray, np.ndarray]:
    """Distinct values ascending and P(X >= x) at each."""
    uvals, counts = np.unique(sample.values, return_counts=True)
    n = counts.sum()
    at_least = n - np.concatenate([[0], np.cumsum(counts)[:-1]])
    return uvals, at_least / n


def tail_slope(sample: TailSample, fit: PowerLawFit, min_count: int = 30,
               points: int = 40) -> float:
    """Least-squares log-log slope of P(X >= x) over the fitted tail.

    The curve is read at ``points`` log-spaced positions between x_min and
    the last value still backed by ``min_count`` samples, so each decade
    weighs the same. Discrete samples are placed at ``x - 1/2``, where the
    zeta tail is closest to a pure power.
    """
    vals = np.sort(sample.values)
    n = len(vals)
    lo = fit.x_min
    if sample.kind == DISCRETE:
        lo = max(lo, 2.0)  # the half-step shift is poor at x = 1
    if n < min_count or vals[n - min_count] <= lo:
        raise InsufficientTailError("too few tail points for a slope")
    grid = np.geomspace(lo, vals[n - min_count], points)
    if sample.kind == DISCRETE:
        grid = np.unique(np.ceil(grid - 1e-9))
        pos = grid - 0.5
    else:
        pos = grid
    if len(grid) < 2:
        raise InsufficientTailError("too few tail points for a slope")
    p = (n - np.searchsorted(vals, grid, side="left")) / n
    return float(np.polyfit(np.log(pos), np.log(p), 1)[0])
