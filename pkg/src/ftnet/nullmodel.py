"""Erdos-Renyi G(N, M) baselines with matched node and edge counts."""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from . import metrics
from .netbuild import TradingNetwork

DENSE_FRACTION = 0.3


@dataclass(frozen=True)
class NullSpec:
    N: int
    E: int
    replicates: int = 5
    seed: int = 0

    def __post_init__(self):
        if self.N < 0 or self.E < 0:
            raise ValueError("N and E must be non-negative")
        if self.E > self.N * (self.N - 1) // 2:
            raise ValueError(f"E={self.E} exceeds the {self.N * (self.N - 1) // 2} possible edges")
        if self.replicates < 1:
            raise ValueError("need at least one replicate")

    @classmethod
    def matching(cls, net: TradingNetwork, replicates: int = 5, seed: int = 0) -> "NullSpec":
        return cls(net.N, net.E, replicates, seed)


def _decode_pairs(codes: np.ndarray, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Map linear indices over the upper triangle back to (u, v), u < v."""
    # row u starts at offset u*n - u*(u+1)/2 - ... solve the quadratic, then fix rounding
    codes = codes.astype(np.int64)
    b = 2 * n - 1
    u = np.floor((b - np.sqrt(b * b - 8.0 * codes)) / 2).astype(np.int64)
    start = u * (2 * n - u - 1) // 2
    over = codes < start
    u[over] -= 1
    start = u * (2 * n - u - 1) // 2
    under = codes >= start + (n - 1 - u)
    u[under] += 1
    start = u * (2 * n - u - 1) // 2
    v = codes - start + u + 1
    return u, v


def gen_er(spec: NullSpec, r: int = 0) -> TradingNetwork:
    """Uniform simple graph with exactly ``spec.E`` edges, reproducible from (seed, r).

    Sparse requests draw candidate pairs with rejection of duplicates; when
    more than 30% of all pairs are wanted a random subset of pair codes is
    taken directly instead.
    """
    n, m = spec.N, spec.E
    rng = np.random.default_rng(np.random.SeedSequence([int(spec.seed), int(r)]))
    total = n * (n - 1) // 2
    if m == 0:
        codes = np.empty(0, dtype=np.int64)
    elif m > DENSE_FRACTION * total:
        codes = np.sort(rng.choice(total, size=m, replace=False))
    else:
        codes = np.empty(0, dtype=np.int64)
        while len(codes) < m:
            need = m - len(codes)
            draw = rng.integers(0, total, size=int(need * 1.1) + 16)
            codes = np.unique(np.concatenate([codes, draw]))
            if len(codes) > m:
                # drop a uniform random surplus so the kept set stays uniform
                codes = np.sort(rng.choice(codes, size=m, replace=False))
    u, v = _decode_pairs(codes, n)
    ids = np.array([f"r{i}" for i in range(n)], dtype=object)
    keys = (u << np.int64(32)) | v
    order = np.argsort(keys)
    return TradingNetwork(ids, keys[order], np.ones(m, dtype=np.int64))


@dataclass
class ComparisonReport:
    metrics: dict = field(default_factory=dict)
    replicates: int = 0
    seed: int = 0
    estimate: bool = False

    def to_dict(self) -> dict:
        return {"replicates": self.replicates, "seed": self.seed,
                "estimate": self.estimate, "metrics": self.metrics}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def _entry(real: float, rand: list) -> dict:
    arr = np.asarray(rand, dtype=float)
    mean = float(arr.mean())
    sd = float(arr.std(ddof=1)) if len(arr) > 1 else 0.0
    ratio = float(real / mean) if mean != 0 else None
    return {"real": float(real), "rand_mean": mean, "rand_sd": sd, "ratio": ratio}


def compare(net: TradingNetwork, spec: NullSpec | None = None, source_budget=None,
            seed: int = 0) -> ComparisonReport:
    """Real-versus-random table for C, L, D and k_max."""
    if spec is None:
        spec = NullSpec.matching(net)
    real = metrics.summarize(net, source_budget, seed)
    rand = {"C": [], "L": [], "D": [], "k_max": []}
    estimate = real.estimate
    for r in range(spec.replicates):
        g = gen_er(spec, r)
        s = metrics.summarize(g, source_budget, seed)
        estimate = estimate or s.estimate
        rand["C"].append(s.C)
        rand["L"].append(s.L)
        rand["D"].append(s.D)
        rand["k_max"].append(s.k_max)
    out = {name: _entry(getattr(real, name), vals) for name, vals in rand.items()}
    return ComparisonReport(out, spec.replicates, spec.seed, estimate)
