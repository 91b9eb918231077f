"""Static topology statistics of a trading network.

All path quantities count hops; edge weights only enter through node
strength. Path metrics run on the largest connected component, and large
components are handled by uniformly sampling BFS sources.
"""
from __future__ import annotations

import csv
import io
from dataclasses import asdict, dataclass

import numpy as np

from .kernels import graph as gk
from .netbuild import TradingNetwork, component_labels, largest_component

EXACT_LIMIT = 5000
PATH_BUDGET = 2000
BETWEENNESS_BUDGET = 1000
EXACT_BIN_MAX = 64
SLOPE_MIN_COUNT = 5
HIERARCHY_MIN_BETA = 0.05


class InsufficientDataError(ValueError):
    pass


class UndefinedAssortativityError(ValueError):
    pass


# --------------------------------------------------------------------------- #
# result types
# --------------------------------------------------------------------------- #
@dataclass
class BinnedCurve:
    k: np.ndarray
    y: np.ndarray
    count: np.ndarray
    binning: str = "exact-degree"

    def __len__(self):
        return len(self.k)

    def points(self):
        return list(zip(self.k.tolist(), self.y.tolist(), self.count.tolist()))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["k", "y", "count"])
        for k, y, c in self.points():
            w.writerow([_fmt(k), _fmt(y), c])
        return buf.getvalue()


def _fmt(x) -> str:
    if isinstance(x, (int, np.integer)) or float(x).is_integer():
        return str(int(x))
    return repr(float(x))


@dataclass
class DegreeDistribution:
    pk: dict
    odd_even: dict

    def curve(self) -> BinnedCurve:
        ks = np.array(sorted(self.pk))
        return BinnedCurve(ks, np.array([self.pk[k] for k in ks]), np.ones(len(ks), np.int64))


@dataclass
class ShiftedPowerFit:
    beta: float
    b: float
    c: float
    sse: float
    hierarchical: bool = True


@dataclass
class PathStats:
    L: float
    D: int
    hist: dict
    estimate: bool
    n_sources: int
    coverage: float


@dataclass
class BetweennessResult:
    values: np.ndarray
    estimate: bool
    n_sources: int
    convention: str = "unordered pairs, endpoints excluded"


@dataclass
class NetworkSummary:
    N: int
    E: int
    mean_degree: float
    k_max: int
    C: float
    L: float
    D: int
    lcc_coverage: float
    estimate: bool = False
    n_sources: int = 0

    def to_dict(self) -> dict:
        return asdict(self)


# --------------------------------------------------------------------------- #
# degree and strength
# --------------------------------------------------------------------------- #
def degree_distribution(net: TradingNetwork, kmax_odd_even: int = 20) -> DegreeDistribution:
    if net.N == 0:
        raise InsufficientDataError("empty network")
    ks, counts = np.unique(net.degrees, return_counts=True)
    pk = {int(k): c / net.N for k, c in zip(ks, counts)}
    odd_even = {}
    for k in range(2, kmax_odd_even + 1, 2):
        nbr = 0.5 * (pk.get(k - 1, 0.0) + pk.get(k + 1, 0.0))
        if nbr > 0:
            odd_even[k] = pk.get(k, 0.0) / nbr
    return DegreeDistribution(pk, odd_even)


def degree_bins(deg: np.ndarray) -> np.ndarray:
    """Bin id per node: the degree itself up to 64, then doubling bins.

    Degrees 65..128 share a bin, then 129..256, and so on. Log bins get ids
    above 64 so ids stay ascending with degree.
    """
    deg = np.asarray(deg, dtype=np.int64)
    ids = deg.copy()
    big = deg > EXACT_BIN_MAX
    if big.any():
        octave = np.floor(np.log2((deg[big] - 1) // EXACT_BIN_MAX)).astype(np.int64) + 1
        ids[big] = EXACT_BIN_MAX + octave
    return ids


def binned_mean(deg: np.ndarray, values: np.ndarray) -> BinnedCurve:
    deg = np.asarray(deg)
    ids = degree_bins(deg)
    uid, inv, count = np.unique(ids, return_inverse=True, return_counts=True)
    ysum = np.bincount(inv, weights=values)
    ksum = np.bincount(inv, weights=deg)
    k = np.where(uid <= EXACT_BIN_MAX, uid, ksum / count)
    binning = "log-ratio-2" if (uid > EXACT_BIN_MAX).any() else "exact-degree"
    return BinnedCurve(k.astype(np.float64), ysum / count, count.astype(np.int64), binning)


def strength_curve(net: TradingNetwork) -> BinnedCurve:
    """Mean node strength per degree bin."""
    if net.N == 0:
        raise InsufficientDataError("empty network")
    return binned_mean(net.degrees, net.strengths.astype(np.float64))


def loglog_slope(curve: BinnedCurve, min_count: int = SLOPE_MIN_COUNT):
    """Least-squares slope of log y on log k over bins with enough nodes.

    Returns None when fewer than two usable bins remain.
    """
    keep = (curve.count >= min_count) & (curve.y > 0) & (curve.k > 0)
    if keep.sum() < 2:
        return None
    return float(np.polyfit(np.log(curve.k[keep]), np.log(curve.y[keep]), 1)[0])


# --------------------------------------------------------------------------- #
# clustering
# --------------------------------------------------------------------------- #
def clustering_all(net: TradingNetwork) -> np.ndarray:
    """Local clustering of every node; degree < 2 gives 0."""
    if net.N == 0:
        return np.zeros(0)
    tri = gk.triangle_counts(net.indptr, net.indices).astype(np.float64)
    k = net.degrees.astype(np.float64)
    pairs = k * (k - 1) / 2
    out = np.zeros(net.N)
    ok = pairs > 0
    out[ok] = tri[ok] / pairs[ok]
    return out


def clustering_local(net: TradingNetwork, v: int) -> float:
    if not 0 <= v < net.N:
        raise IndexError(f"node {v} outside [0, {net.N})")
    nbrs = net.neighbors(v)
    k = len(nbrs)
    if k < 2:
        return 0.0
    nset = set(nbrs.tolist())
    links = sum(1 for u in nbrs for w in net.neighbors(u) if w in nset)
    return links / (k * (k - 1))


def clustering_global(net: TradingNetwork) -> float:
    """Unweighted mean of local clustering over all nodes."""
    if net.N == 0:
        return 0.0
    return float(clustering_all(net).mean())


def ck_curve(net: TradingNetwork, local: np.ndarray | None = None) -> BinnedCurve:
    if local is None:
        local = clustering_all(net)
    return binned_mean(net.degrees, local)


def _grid_125(kmax: float) -> np.ndarray:
    grid = [0.0]
    step = 1.0
    while step <= max(kmax, 1.0):
        for m in (1.0, 2.0, 5.0):
            if m * step <= max(kmax, 1.0):
                grid.append(m * step)
        step *= 10.0
    return np.array(grid)


def fit_shifted_power(curve: BinnedCurve, b_grid=None) -> ShiftedPowerFit:
    """Fit y ~ exp(c) (k + b)^-beta by grid over b and linear regression per b."""
    keep = (curve.count >= 1) & (curve.y > 0) & (curve.k > 0)
    if keep.sum() < 3:
        raise InsufficientDataError("need at least 3 bins with positive clustering")
    k, logy = curve.k[keep], np.log(curve.y[keep])
    grid = _grid_125(k.max()) if b_grid is None else np.asarray(b_grid, dtype=float)
    best = None
    for b in grid:
        x = np.log(k + b)
        xm, ym = x.mean(), logy.mean()
        sxx = np.sum((x - xm) ** 2)
        slope = np.sum((x - xm) * (logy - ym)) / sxx if sxx > 0 else 0.0
        c = ym - slope * xm
        sse = float(np.sum((logy - (c + slope * x)) ** 2))
        if best is None or sse < best[3] - 1e-12 * max(1.0, best[3]):
            best = (-slope, float(b), float(c), sse)
    beta, b, c, sse = best
    return ShiftedPowerFit(float(beta), b, c, sse, hierarchical=beta >= HIERARCHY_MIN_BETA)


# --------------------------------------------------------------------------- #
# shortest paths
# --------------------------------------------------------------------------- #
def _choose_sources(n: int, budget, default: int, seed: int):
    if budget is None:
        budget = n if n <= EXACT_LIMIT else min(n, default)
    budget = int(budget)
    if not 1 <= budget:
        raise ValueError("source budget must be >= 1")
    if budget >= n:
        return np.arange(n, dtype=np.int64), False
    rng = np.random.default_rng(np.random.SeedSequence([int(seed), n, budget]))
    return np.sort(rng.choice(n, size=budget, replace=False)).astype(np.int64), True


def path_stats(net: TradingNetwork, source_budget=None, seed: int = 0) -> PathStats:
    """Mean hop distance, diameter and path-length histogram on the LCC.

    With more nodes than ``source_budget`` BFS runs from a uniform sample of
    sources; D is then the largest eccentricity seen and only a lower bound.
    """
    if net.N < 2:
        raise InsufficientDataError("path length undefined for fewer than 2 nodes")
    lcc, coverage = largest_component(net)
    if lcc.N < 2:
        raise InsufficientDataError("largest component has a single node")
    sources, sampled = _choose_sources(lcc.N, source_budget, PATH_BUDGET, seed)
    hist, ecc = gk.bfs_histogram(lcc.indptr, lcc.indices, sources)
    d = np.flatnonzero(hist)
    total = hist[d].sum()
    L = float(np.dot(d, hist[d]) / total)
    return PathStats(
        L=L,
        D=int(ecc.max()),
        hist={int(x): float(hist[x] / total) for x in d},
        estimate=sampled,
        n_sources=len(sources),
        coverage=coverage,
    )


def _first_hop_control(net: TradingNetwork) -> tuple[np.ndarray, np.ndarray]:
    """Per-arc guess of the dependency a source puts on each neighbour.

    A source s reaches ``size(s) - 1 - k_s`` nodes beyond its neighbours;
    the guess splits them over the neighbours in proportion to degree.
    Returns the source of each CSR arc and the guess carried by that arc.
    """
    deg = net.degrees.astype(np.float64)
    labels = component_labels(net)
    size = np.bincount(labels)[labels].astype(np.float64)
    src = np.repeat(np.arange(net.N), np.diff(net.indptr))
    reach = np.bincount(src, weights=deg[net.indices], minlength=net.N)
    beyond = size - 1.0 - deg
    guess = beyond[src] * deg[net.indices] / reach[src]
    return src, guess


def betweenness_all(net: TradingNetwork, source_budget=None, seed: int = 0) -> BetweennessResult:
    """Unnormalized betweenness, each unordered pair counted once.

    Sampled runs use a control variate. A cheap first-hop guess of each
    source's dependencies is known in closed form for every source, so
    only the gap between the sampled Brandes sums and that guess is scaled
    by N / budget. The estimate stays unbiased. In hub-dominated graphs it
    cuts the error on the largest values several-fold, since hubs collect
    most of their dependency from adjacent sources. Negative estimates
    (possible only for nodes near zero) are clipped to 0.
    """
    if net.N == 0:
        return BetweennessResult(np.zeros(0), False, 0)
    sources, sampled = _choose_sources(net.N, source_budget, BETWEENNESS_BUDGET, seed)
    dep = gk.brandes_dependencies(net.indptr, net.indices, sources)
    if not sampled:
        return BetweennessResult(0.5 * dep, False, len(sources))
    src, guess = _first_hop_control(net)
    total = np.bincount(net.indices, weights=guess, minlength=net.N)
    picked = np.zeros(net.N, dtype=bool)
    picked[sources] = True
    arcs = picked[src]
    seen = np.bincount(net.indices[arcs], weights=guess[arcs], minlength=net.N)
    est = 0.5 * (net.N / len(sources) * (dep - seen) + total)
    return BetweennessResult(np.maximum(est, 0.0), True, len(sources))


# --------------------------------------------------------------------------- #
# degree correlations
# --------------------------------------------------------------------------- #
def assortativity_r(net: TradingNetwork) -> float:
    """Degree assortativity from the per-edge endpoint-degree sums."""
    if net.E == 0:
        raise UndefinedAssortativityError("no edges")
    deg = net.degrees.astype(np.float64)
    j, k = deg[net.edge_u], deg[net.edge_v]
    m = float(net.E)
    mean_half = np.sum(0.5 * (j + k)) / m
    num = np.sum(j * k) / m - mean_half ** 2
    den = np.sum(0.5 * (j * j + k * k)) / m - mean_half ** 2
    if den <= 1e-12 * max(1.0, mean_half ** 2):
        raise UndefinedAssortativityError("all edge endpoints have equal degree")
    return float(num / den)


def knn_values(net: TradingNetwork) -> np.ndarray:
    """Mean neighbor degree of each node (0 for isolated nodes)."""
    deg = net.degrees
    rows = np.repeat(np.arange(net.N), deg)
    total = np.bincount(rows, weights=deg[net.indices].astype(np.float64), minlength=net.N)
    out = np.zeros(net.N)
    ok = deg > 0
    out[ok] = total[ok] / deg[ok]
    return out


def knn_curve(net: TradingNetwork):
    """Binned mean neighbor degree and its log-log slope (None when flat)."""
    if net.N < 2:
        raise InsufficientDataError("need at least two nodes")
    curve = binned_mean(net.degrees, knn_values(net))
    return curve, loglog_slope(curve)


# --------------------------------------------------------------------------- #
# summary
# --------------------------------------------------------------------------- #
def summarize(net: TradingNetwork, source_budget=None, seed: int = 0) -> NetworkSummary:
    ps = path_stats(net, source_budget, seed)
    return NetworkSummary(
        N=net.N,
        E=net.E,
        mean_degree=2.0 * net.E / net.N,
        k_max=int(net.degrees.max()),
        C=clustering_global(net),
        L=ps.L,
        D=ps.D,
        lcc_coverage=ps.coverage,
        estimate=ps.estimate,
        n_sources=ps.n_sources,
    )
