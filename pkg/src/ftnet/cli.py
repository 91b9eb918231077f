"""``ftnet`` command line: build, stats, fit, evolve, simulate, compare-random.

Every command writes into ``--out-dir``: JSON for scalar reports, CSV for
curves, and ``<command>.manifest.json`` recording inputs, the argument
hash, seed and library versions. Report JSONs name their manifest. Exit
status is 0 on success, 1 when the data cannot support the analysis and
2 for unreadable or malformed inputs.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import json
import logging
import math
import platform
import sys
import time
from pathlib import Path

import numpy as np
import scipy

from . import __version__, evolve, metrics, netbuild, nullmodel, plfit
from ._accel import USE_NUMBA, backend
from .ingest import CommodityFilter, IngestError, IngestReport, read_table, write_table
from .simx.market import ConfigError, SimConfig, run_sim

log = logging.getLogger("ftnet")

EXIT_OK, EXIT_ANALYSIS, EXIT_IO = 0, 1, 2
ANALYSIS_ERRORS = (plfit.InsufficientTailError, plfit.DivergentEstimateError,
                   metrics.InsufficientDataError, metrics.UndefinedAssortativityError)
IO_ERRORS = (IngestError, netbuild.NetworkFormatError, ConfigError, OSError)
NETWORK_FILE = "network.txt"


# --------------------------------------------------------------------------- #
# output helpers
# --------------------------------------------------------------------------- #
def _clean(x):
    """JSON-safe copy: numpy scalars to Python, non-finite floats to None."""
    if isinstance(x, dict):
        return {str(k): _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if isinstance(x, np.ndarray):
        return _clean(x.tolist())
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        return float(x) if math.isfinite(x) else None
    if isinstance(x, np.bool_):
        return bool(x)
    return x


def _sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest()


class Run:
    """Collects outputs of one command and writes its manifest."""

    def __init__(self, args: argparse.Namespace):
        self.args = args
        self.command = args.command
        self.out = Path(args.out_dir)
        self.out.mkdir(parents=True, exist_ok=True)
        self.outputs: list[str] = []
        self.started = time.time()

    @property
    def manifest_name(self) -> str:
        return f"{self.command}.manifest.json"

    def path(self, name: str) -> Path:
        self.outputs.append(name)
        return self.out / name

    def write_json(self, name: str, payload: dict) -> None:
        payload = {**_clean(payload), "manifest": self.manifest_name}
        self.path(name).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")

    def write_csv(self, name: str, header, rows) -> None:
        with open(self.path(name), "w", encoding="utf-8", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            w.writerows(rows)

    def write_text(self, name: str, text: str) -> None:
        with open(self.path(name), "w", encoding="utf-8", newline="") as fh:
            fh.write(text)

    def finish(self, inputs=(), seed=None) -> None:
        opts = {k: v for k, v in sorted(vars(self.args).items())
                if k not in ("func", "out_dir", "verbose")}
        manifest = {
            "command": self.command,
            "inputs": [{"path": str(p), "sha256": _sha256(p)} for p in inputs],
            "outputs": sorted(self.outputs),
            "options": _clean(opts),
            "config_hash": hashlib.sha256(
                json.dumps(_clean(opts), sort_keys=True).encode()).hexdigest(),
            "seed": seed,
            "versions": {
                "ftnet": __version__, "python": platform.python_version(),
                "numpy": np.__version__, "scipy": scipy.__version__,
                "numba": _numba_version(), "backend": backend(),
            },
            "started": _iso(self.started),
            "finished": _iso(time.time()),
        }
        (self.out / self.manifest_name).write_text(json.dumps(manifest, indent=2) + "\n")


def _numba_version():
    if not USE_NUMBA:
        return None
    import numba
    return numba.__version__


def _iso(t: float) -> str:
    return time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime(t))


def _curve_rows(curve: metrics.BinnedCurve):
    return [(metrics._fmt(k), metrics._fmt(y), c) for k, y, c in curve.points()]


def _budget(args, n):
    """Source budget: every node with --exact, else --budget (None = module default)."""
    return n if args.exact else args.budget


# --------------------------------------------------------------------------- #
# commands
# --------------------------------------------------------------------------- #
def cmd_build(args) -> int:
    run = Run(args)
    report = IngestReport()
    table = read_table(args.input, CommodityFilter.parse(args.filter), report)
    net = netbuild.build(table)
    netbuild.write_network(net, run.path(NETWORK_FILE))
    summary = {"N": net.N, "E": net.E, "W": net.W, "filter": args.filter,
               "ingest": {"accepted": report.accepted, "malformed": report.malformed,
                          "self_match_dropped": report.self_match_dropped,
                          "kept_by_filter": len(table)}}
    if net.N:
        _, coverage = netbuild.largest_component(net)
        summary.update(mean_degree=2.0 * net.E / net.N, k_max=int(net.degrees.max()),
                       lcc_coverage=coverage)
    run.write_json("build.json", summary)
    run.finish([args.input])
    log.info("built N=%d E=%d W=%d", net.N, net.E, net.W)
    return EXIT_OK


def cmd_stats(args) -> int:
    run = Run(args)
    net = netbuild.read_network(args.network)
    budget = _budget(args, net.N)
    local = metrics.clustering_all(net)
    ps = metrics.path_stats(net, budget, args.seed)
    summary = metrics.NetworkSummary(
        N=net.N, E=net.E, mean_degree=2.0 * net.E / net.N, k_max=int(net.degrees.max()),
        C=float(local.mean()), L=ps.L, D=ps.D, lcc_coverage=ps.coverage,
        estimate=ps.estimate, n_sources=ps.n_sources)
    report = {"summary": summary.to_dict(), "seed": args.seed}

    dd = metrics.degree_distribution(net)
    report["odd_even"] = dd.odd_even
    try:
        report["assortativity_r"] = metrics.assortativity_r(net)
    except metrics.UndefinedAssortativityError:
        report["assortativity_r"] = None
    knn, knn_slope = metrics.knn_curve(net)
    report["knn_slope"] = knn_slope
    strength = metrics.strength_curve(net)
    report["strength_slope"] = metrics.loglog_slope(strength)
    ck = metrics.ck_curve(net, local)
    try:
        report["ck_fit"] = vars(metrics.fit_shifted_power(ck))
    except metrics.InsufficientDataError:
        report["ck_fit"] = None

    bt = metrics.betweenness_all(net, budget, args.seed)
    report["betweenness"] = {"estimate": bt.estimate, "n_sources": bt.n_sources,
                             "convention": bt.convention}
    run.write_json("stats.json", report)

    run.write_csv("pk.csv", ["k", "y", "count"], _curve_rows(dd.curve()))
    if net.E:
        x, pc = plfit.cumulative_curve(
            plfit.TailSample(net.degrees[net.degrees > 0], plfit.DISCRETE))
        run.write_csv("pcum.csv", ["k", "p_cum"],
                      [(metrics._fmt(a), metrics._fmt(b)) for a, b in zip(x, pc)])
    run.write_csv("strength.csv", ["k", "y", "count"], _curve_rows(strength))
    run.write_csv("ck.csv", ["k", "y", "count"], _curve_rows(ck))
    run.write_csv("knn.csv", ["k", "y", "count"], _curve_rows(knn))
    run.write_csv("paths.csv", ["l", "p"], [(l, repr(p)) for l, p in sorted(ps.hist.items())])
    run.write_csv("betweenness.csv", ["node", "betweenness"],
                  [(nid, repr(float(b))) for nid, b in zip(net.node_ids, bt.values)])
    run.finish([args.network], args.seed)
    return EXIT_OK


def _fit_sample(args) -> plfit.TailSample:
    if args.values:
        vals = np.loadtxt(args.values, dtype=np.float64, ndmin=1, comments="#",
                          delimiter=",", usecols=0) if args.values.endswith(".csv") \
            else np.loadtxt(args.values, dtype=np.float64, ndmin=1)
        kind = args.kind or (plfit.DISCRETE if np.all(vals == np.round(vals)) else plfit.CONTINUOUS)
        return plfit.TailSample(vals[vals > 0], kind)
    net = netbuild.read_network(args.network)
    if args.target == "degree":
        deg = net.degrees
        return plfit.TailSample(deg[deg > 0], args.kind or plfit.DISCRETE)
    bt = metrics.betweenness_all(net, _budget(args, net.N), args.seed)
    vals = bt.values[bt.values > 0]
    return plfit.TailSample(vals, args.kind or plfit.CONTINUOUS)


def cmd_fit(args) -> int:
    if bool(args.values) == bool(args.network):
        raise SystemExit("fit: give exactly one of a network file or --values")
    run = Run(args)
    sample = _fit_sample(args)
    fit = plfit.fit_power_law(sample, args.nboot, args.seed, n_jobs=args.threads)
    out = fit.to_dict()
    out["target"] = "values" if args.values else args.target
    try:
        out["cumulative_slope"] = plfit.tail_slope(sample, fit)
    except plfit.InsufficientTailError:
        out["cumulative_slope"] = None
    run.write_json(f"fit_{out['target']}.json", out)
    run.finish([args.values or args.network], args.seed)
    return EXIT_OK


def _breakpoint(args, tr, table):
    if args.breakpoint is None:
        return None
    if args.breakpoint.startswith("day"):
        return evolve.day_end_index(tr, table.timestamp, int(args.breakpoint[3:]) - 1)
    return int(args.breakpoint)


def cmd_evolve(args) -> int:
    run = Run(args)
    table = read_table(args.input, CommodityFilter.parse(args.filter))
    cadence = None if args.cadence is None else (
        "day" if args.cadence == "day" else int(args.cadence))
    tr = evolve.trace(table, cadence, budget=args.budget, seed=args.seed, paths=not args.no_paths)
    run.write_text("trace.csv", tr.to_csv())
    bp = _breakpoint(args, tr, table)
    fields = ["e", "mean_degree", "density", "k_max"] + ([] if args.no_paths else ["L", "D"])
    for name in fields:
        fit = evolve.fit_densification(tr, name, breakpoint=bp)
        run.write_json(f"fit_{name}.json", {**fit.to_dict(), "cadence": tr.cadence})
    run.finish([args.input], args.seed)
    return EXIT_OK


def cmd_simulate(args) -> int:
    run = Run(args)
    cfg = SimConfig.parse(Path(args.config).read_text()) if args.config else SimConfig()
    if args.seed is not None:
        cfg = SimConfig(**{**cfg.to_dict(), "seed": args.seed})
    table = run_sim(cfg)
    write_table(table, run.path("trades.csv"))
    run.write_json("simulate.json", {"config": cfg.to_dict(), "records": len(table),
                                     "participants": len(np.unique(
                                         np.concatenate([table.buyer, table.seller])))})
    run.finish([args.config] if args.config else [], cfg.seed)
    return EXIT_OK


def cmd_compare_random(args) -> int:
    run = Run(args)
    net = netbuild.read_network(args.network)
    spec = nullmodel.NullSpec.matching(net, args.replicates, args.seed)
    rep = nullmodel.compare(net, spec, _budget(args, net.N), args.seed)
    run.write_json("compare.json", rep.to_dict())
    run.finish([args.network], args.seed)
    return EXIT_OK


# --------------------------------------------------------------------------- #
# argument parsing
# --------------------------------------------------------------------------- #
def _positive(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ftnet", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"ftnet {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("-o", "--out-dir", default=".", help="directory for reports (default .)")
    common.add_argument("--threads", type=_positive, default=1,
                        help="worker threads for parallel kernels and bootstraps")
    common.add_argument("-v", "--verbose", action="store_true")
    sampling = argparse.ArgumentParser(add_help=False)
    sampling.add_argument("--seed", type=int, default=0)
    g = sampling.add_mutually_exclusive_group()
    g.add_argument("--exact", action="store_true", help="use every node as a BFS source")
    g.add_argument("--budget", type=_positive, default=None,
                   help="number of sampled BFS sources (default: exact up to 5000 nodes)")
    sub = p.add_subparsers(dest="command", required=True)

    b = sub.add_parser("build", parents=[common], help="trade CSV to network file + summary")
    b.add_argument("input")
    b.add_argument("--filter", default="all", help="all, metal, rubber, oil or a comma list")
    b.set_defaults(func=cmd_build)

    s = sub.add_parser("stats", parents=[common, sampling], help="topology report and curves")
    s.add_argument("network")
    s.set_defaults(func=cmd_stats)

    f = sub.add_parser("fit", parents=[common, sampling], help="power-law tail fit")
    f.add_argument("network", nargs="?")
    f.add_argument("--values", help="file of sample values instead of a network")
    f.add_argument("--target", choices=["degree", "betweenness"], default="degree")
    f.add_argument("--kind", choices=[plfit.DISCRETE, plfit.CONTINUOUS])
    f.add_argument("--nboot", type=int, default=1000)
    f.set_defaults(func=cmd_fit)

    e = sub.add_parser("evolve", parents=[common], help="growth trace and segmented fits")
    e.add_argument("input")
    e.add_argument("--filter", default="all")
    e.add_argument("--cadence", help="'day' or a record count (default: day if multi-day)")
    e.add_argument("--budget", type=_positive, default=evolve.TRACE_BUDGET)
    e.add_argument("--seed", type=int, default=0)
    e.add_argument("--breakpoint", help="snapshot index or dayN for the end of day N")
    e.add_argument("--no-paths", action="store_true", help="skip L and D per snapshot")
    e.set_defaults(func=cmd_evolve)

    m = sub.add_parser("simulate", parents=[common], help="synthetic trade stream")
    m.add_argument("config", nargs="?", help="key = value config file (default settings if omitted)")
    m.add_argument("--seed", type=int, default=None, help="override the config seed")
    m.set_defaults(func=cmd_simulate)

    c = sub.add_parser("compare-random", parents=[common, sampling],
                       help="real versus G(N, M) random graphs")
    c.add_argument("network")
    c.add_argument("--replicates", type=_positive, default=5)
    c.set_defaults(func=cmd_compare_random)
    return p


def _set_threads(n: int) -> None:
    if USE_NUMBA:
        import numba
        numba.set_num_threads(min(n, numba.config.NUMBA_NUM_THREADS))


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    _set_threads(args.threads)
    try:
        return args.func(args)
    except ANALYSIS_ERRORS as exc:
        print(f"ftnet {args.command}: analysis error: {exc}", file=sys.stderr)
        return EXIT_ANALYSIS
    except (ValueError, *IO_ERRORS) as exc:
        code = EXIT_IO if isinstance(exc, IO_ERRORS) else EXIT_ANALYSIS
        kind = "input error" if code == EXIT_IO else "error"
        print(f"ftnet {args.command}: {kind}: {exc}", file=sys.stderr)
        return code


if __name__ == "__main__":
    sys.exit(main())
