"""Undirected weighted trading networks built from trade records.

Nodes are participants, indexed densely in order of first appearance
(buyer before seller within a record). An edge joins a buyer and seller
who co-occur in at least one record; its weight counts those records.
Because indices follow first appearance, ``extend`` reproduces ``build``
on the concatenated stream exactly, not just up to isomorphism.
"""
from __future__ import annotations

import json
import os
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from .ingest import RecordTable, as_table

_SHIFT = np.int64(32)
_MASK = np.int64((1 << 32) - 1)


@dataclass(frozen=True)
class GraphDelta:
    new_nodes: int = 0
    new_edges: int = 0
    strengthened_edges: int = 0


class TradingNetwork:
    """Simple undirected graph with integer co-trade weights.

    The canonical state is the sorted array of packed edge keys
    ``u << 32 | v`` (``u < v``) with parallel weights. The CSR form used by
    the traversal kernels is derived lazily and cached; instances are
    treated as immutable once built.
    """

    def __init__(self, node_ids, keys, weights):
        self.node_ids = np.asarray(node_ids, dtype=object)
        self.keys = np.asarray(keys, dtype=np.int64)
        self.edge_weights = np.asarray(weights, dtype=np.int64)
        self._index = None

    @classmethod
    def empty(cls) -> "TradingNetwork":
        return cls(np.empty(0, dtype=object), np.empty(0, np.int64), np.empty(0, np.int64))

    # ------------------------------------------------------------------ sizes
    @property
    def N(self) -> int:
        return len(self.node_ids)

    @property
    def E(self) -> int:
        return len(self.keys)

    @property
    def W(self) -> int:
        return int(self.edge_weights.sum())

    @property
    def index(self) -> dict:
        if self._index is None:
            self._index = {nid: i for i, nid in enumerate(self.node_ids)}
        return self._index

    @property
    def edge_u(self) -> np.ndarray:
        return self.keys >> _SHIFT

    @property
    def edge_v(self) -> np.ndarray:
        return self.keys & _MASK

    # -------------------------------------------------------------------- CSR
    @cached_property
    def _csr(self):
        n = self.N
        u, v = self.edge_u, self.edge_v
        src = np.concatenate([u, v])
        dst = np.concatenate([v, u])
        w = np.concatenate([self.edge_weights, self.edge_weights])
        order = np.argsort((src << _SHIFT) | dst, kind="stable")
        indptr = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(np.bincount(src, minlength=n), out=indptr[1:])
        return indptr, dst[order], w[order]

    @property
    def indptr(self) -> np.ndarray:
        return self._csr[0]

    @property
    def indices(self) -> np.ndarray:
        return self._csr[1]

    @property
    def weights(self) -> np.ndarray:
        return self._csr[2]

    @cached_property
    def degrees(self) -> np.ndarray:
        return np.diff(self.indptr)

    @cached_property
    def strengths(self) -> np.ndarray:
        n = self.N
        return (np.bincount(self.edge_u, self.edge_weights, minlength=n)
                + np.bincount(self.edge_v, self.edge_weights, minlength=n)).astype(np.int64)

    def neighbors(self, v: int) -> np.ndarray:
        return self.indices[self.indptr[v]:self.indptr[v + 1]]

    def to_scipy(self) -> csr_matrix:
        data = np.ones(len(self.indices), dtype=np.int8)
        return csr_matrix((data, self.indices, self.indptr), shape=(self.N, self.N))

    def edge_dict(self) -> dict:
        """``{(id_a, id_b): weight}`` with ``id_a < id_b``; index-free view."""
        ids = self.node_ids
        out = {}
        for a, b, w in zip(ids[self.edge_u], ids[self.edge_v], self.edge_weights):
            out[(a, b) if a < b else (b, a)] = int(w)
        return out

    def __repr__(self) -> str:
        return f"TradingNetwork(N={self.N}, E={self.E}, W={self.W})"


# ---------------------------------------------------------------------------
# construction
# ---------------------------------------------------------------------------
def _interleave(table: RecordTable) -> np.ndarray:
    buyer = np.asarray(table.buyer, dtype=np.int64)
    both = np.empty(2 * len(buyer), dtype=np.int64)
    both[0::2] = buyer
    both[1::2] = table.seller
    return both


def extend(net: TradingNetwork, records) -> tuple[TradingNetwork, GraphDelta]:
    """Add a batch of records to ``net``, returning the grown network and delta."""
    table = as_table(records)
    if len(table) == 0:
        return net, GraphDelta()
    uniq, first, inv = np.unique(_interleave(table), return_index=True, return_inverse=True)
    uniq_str = table.name_of(uniq)

    index = net.index
    mapped = np.empty(len(uniq), dtype=np.int64)
    known = np.fromiter((s in index for s in uniq_str), bool, len(uniq))
    mapped[known] = [index[s] for s in uniq_str[known]]
    fresh = np.flatnonzero(~known)
    fresh = fresh[np.argsort(first[fresh], kind="stable")]
    n_old = net.N
    mapped[fresh] = n_old + np.arange(len(fresh))
    node_ids = np.concatenate([net.node_ids, uniq_str[fresh]])

    ends = mapped[inv.ravel()]
    a, b = ends[0::2], ends[1::2]
    if np.any(a == b):
        raise ValueError("self-match record reached network construction")
    u, v = np.minimum(a, b), np.maximum(a, b)
    batch_keys, batch_w = np.unique((u << _SHIFT) | v, return_counts=True)

    strengthened = int(np.isin(batch_keys, net.keys, assume_unique=True).sum()) if net.E else 0
    keys = np.concatenate([net.keys, batch_keys])
    weights = np.concatenate([net.edge_weights, batch_w])
    keys, kinv = np.unique(keys, return_inverse=True)
    weights = np.bincount(kinv.ravel(), weights=weights).astype(np.int64)

    grown = TradingNetwork(node_ids, keys, weights)
    delta = GraphDelta(
        new_nodes=len(fresh),
        new_edges=grown.E - net.E,
        strengthened_edges=strengthened,
    )
    return grown, delta


def build(records) -> TradingNetwork:
    """Network over ``records``; an empty stream gives an empty network."""
    return extend(TradingNetwork.empty(), records)[0]


def degree(net: TradingNetwork, v: int) -> int:
    _check_node(net, v)
    return int(net.degrees[v])


def strength(net: TradingNetwork, v: int) -> int:
    _check_node(net, v)
    return int(net.strengths[v])


def _check_node(net, v):
    if not 0 <= v < net.N:
        raise IndexError(f"node {v} outside [0, {net.N})")


def subgraph(net: TradingNetwork, nodes: np.ndarray) -> TradingNetwork:
    """Induced subgraph on ``nodes`` (kept in ascending index order)."""
    nodes = np.sort(np.asarray(nodes, dtype=np.int64))
    remap = np.full(net.N, -1, dtype=np.int64)
    remap[nodes] = np.arange(len(nodes))
    u, v = remap[net.edge_u], remap[net.edge_v]
    keep = (u >= 0) & (v >= 0)
    keys = (u[keep] << _SHIFT) | v[keep]
    return TradingNetwork(net.node_ids[nodes], keys, net.edge_weights[keep])


def component_labels(net: TradingNetwork) -> np.ndarray:
    if net.N == 0:
        return np.empty(0, dtype=np.int64)
    _, labels = connected_components(net.to_scipy(), directed=False)
    return labels


def largest_component(net: TradingNetwork) -> tuple[TradingNetwork, float]:
    """Largest connected component and the fraction of nodes it covers.

    Size ties go to the component holding the smallest node index.
    """
    if net.N == 0:
        raise ValueError("largest component of an empty network")
    labels = component_labels(net)
    lab, first, sizes = np.unique(labels, return_index=True, return_counts=True)
    best = np.lexsort((first, -sizes))[0]
    nodes = np.flatnonzero(labels == lab[best])
    if len(nodes) == net.N:
        return net, 1.0
    return subgraph(net, nodes), len(nodes) / net.N


# ---------------------------------------------------------------------------
# edge-list files
# ---------------------------------------------------------------------------
def write_network(net: TradingNetwork, path) -> None:
    """Edge list ``u_id v_id weight`` after a one-line JSON header {N, E, W}.

    Each edge appears once with ``u_id < v_id`` and lines are sorted, so the
    bytes depend only on the graph, not on node indexing.
    """
    rows = sorted(
        (a, b, w) if a < b else (b, a, w)
        for a, b, w in zip(net.node_ids[net.edge_u], net.node_ids[net.edge_v],
                           net.edge_weights.tolist())
    )
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(json.dumps({"N": net.N, "E": net.E, "W": net.W}) + "\n")
        fh.writelines(f"{a} {b} {w}\n" for a, b, w in rows)


class NetworkFormatError(ValueError):
    pass


def read_network(path) -> TradingNetwork:
    if not os.path.exists(path):
        raise NetworkFormatError(f"no such network file: {path}")
    with open(path, "r", encoding="utf-8") as fh:
        try:
            header = json.loads(fh.readline())
            n, e, w = int(header["N"]), int(header["E"]), int(header["W"])
        except (ValueError, KeyError, TypeError) as exc:
            raise NetworkFormatError(f"bad network header in {path}") from exc
        us, vs, ws = [], [], []
        for lineno, line in enumerate(fh, start=2):
            parts = line.split()
            if len(parts) != 3:
                raise NetworkFormatError(f"{path}:{lineno}: expected 'u v weight'")
            us.append(parts[0])
            vs.append(parts[1])
            ws.append(int(parts[2]))
    ids = np.empty(2 * len(us), dtype=object)
    ids[0::2], ids[1::2] = us, vs
    if len(ids):
        uniq, first, inv = np.unique(ids.astype(str), return_index=True, return_inverse=True)
        order = np.argsort(first, kind="stable")
        remap = np.empty(len(uniq), dtype=np.int64)
        remap[order] = np.arange(len(uniq))
        ends = remap[inv.ravel()]
        a, b = ends[0::2], ends[1::2]
        lo, hi = np.minimum(a, b), np.maximum(a, b)
        keys = (lo << _SHIFT) | hi
        srt = np.argsort(keys)
        net = TradingNetwork(uniq[order].astype(object), keys[srt], np.asarray(ws, np.int64)[srt])
    else:
        net = TradingNetwork.empty()
    if len(np.unique(net.keys)) != net.E or np.any(net.edge_u == net.edge_v):
        raise NetworkFormatError(f"{path}: repeated edge or self-loop")
    if (net.N, net.E, net.W) != (n, e, w):
        raise NetworkFormatError(f"{path}: header {n, e, w} disagrees with body {net.N, net.E, net.W}")
    return net
