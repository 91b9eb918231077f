"""Traversal kernels over a symmetric CSR adjacency (``indptr``, ``indices``).

Every public function dispatches to a numba implementation or a
level-synchronous numpy one depending on :data:`ftnet._accel.USE_NUMBA`.
Both variants are importable directly (``*_nb`` / ``*_np``) so tests and
the benchmark can compare them in one process.

Sources are processed in a fixed number of chunks whose partial sums are
added in chunk order, so the result does not depend on the thread count.
"""
import numpy as np
import scipy.sparse as sp

from .._accel import USE_NUMBA, njit

N_CHUNKS = 16

if USE_NUMBA:
    from numba import prange
else:
    prange = range


# --------------------------------------------------------------------------- #
# numba kernels
# --------------------------------------------------------------------------- #
@njit(parallel=True)
def _bfs_hist_nb(indptr, indices, sources, n_chunks):
    n = indptr.shape[0] - 1
    m = sources.shape[0]
    hists = np.zeros((n_chunks, n + 1), dtype=np.int64)
    eccs = np.zeros(m, dtype=np.int64)
    for c in prange(n_chunks):
        dist = np.full(n, -1, dtype=np.int64)
        queue = np.empty(n, dtype=np.int64)
        for s_i in range(c, m, n_chunks):
            s = sources[s_i]
            dist[s] = 0
            queue[0] = s
            head = 0
            tail = 1
            while head < tail:
                v = queue[head]
                head += 1
                dv = dist[v] + 1
                for p in range(indptr[v], indptr[v + 1]):
                    w = indices[p]
                    if dist[w] < 0:
                        dist[w] = dv
                        queue[tail] = w
                        tail += 1
                        hists[c, dv] += 1
            eccs[s_i] = dist[queue[tail - 1]]
            for i in range(tail):
                dist[queue[i]] = -1
    return hists.sum(axis=0), eccs


@njit(parallel=True)
def _brandes_nb(indptr, indices, sources, n_chunks):
    n = indptr.shape[0] - 1
    m = sources.shape[0]
    partial = np.zeros((n_chunks, n), dtype=np.float64)
    for c in prange(n_chunks):
        dist = np.full(n, -1, dtype=np.int64)
        sigma = np.zeros(n, dtype=np.float64)
        delta = np.zeros(n, dtype=np.float64)
        order = np.empty(n, dtype=np.int64)
        for s_i in range(c, m, n_chunks):
            s = sources[s_i]
            dist[s] = 0
            sigma[s] = 1.0
            order[0] = s
            head = 0
            tail = 1
            while head < tail:
                v = order[head]
                head += 1
                dv = dist[v] + 1
                for p in range(indptr[v], indptr[v + 1]):
                    w = indices[p]
                    if dist[w] < 0:
                        dist[w] = dv
                        order[tail] = w
                        tail += 1
                    if dist[w] == dv:
                        sigma[w] += sigma[v]
            for i in range(tail - 1, 0, -1):
                w = order[i]
                coeff = (1.0 + delta[w]) / sigma[w]
                dw = dist[w] - 1
                for p in range(indptr[w], indptr[w + 1]):
                    v = indices[p]
                    if dist[v] == dw:
                        delta[v] += sigma[v] * coeff
                partial[c, w] += delta[w]
            for i in range(tail):
                w = order[i]
                dist[w] = -1
                sigma[w] = 0.0
                delta[w] = 0.0
    out = np.zeros(n, dtype=np.float64)
    for c in range(n_chunks):
        out += partial[c]
    return out


@njit
def _triangles_nb(indptr, indices):
    n = indptr.shape[0] - 1
    deg = indptr[1:] - indptr[:-1]
    order = np.argsort(deg, kind="mergesort")
    rank = np.empty(n, dtype=np.int64)
    for i in range(n):
        rank[order[i]] = i
    # orient every edge toward the higher-ranked endpoint
    out_ptr = np.zeros(n + 1, dtype=np.int64)
    for u in range(n):
        cnt = 0
        for p in range(indptr[u], indptr[u + 1]):
            if rank[indices[p]] > rank[u]:
                cnt += 1
        out_ptr[u + 1] = out_ptr[u] + cnt
    out_idx = np.empty(out_ptr[n], dtype=np.int64)
    for u in range(n):
        q = out_ptr[u]
        for p in range(indptr[u], indptr[u + 1]):
            if rank[indices[p]] > rank[u]:
                out_idx[q] = indices[p]
                q += 1
    tri = np.zeros(n, dtype=np.int64)
    mark = np.full(n, -1, dtype=np.int64)
    for u in range(n):
        for p in range(out_ptr[u], out_ptr[u + 1]):
            mark[out_idx[p]] = u
        for p in range(out_ptr[u], out_ptr[u + 1]):
            v = out_idx[p]
            for q in range(out_ptr[v], out_ptr[v + 1]):
                w = out_idx[q]
                if mark[w] == u:
                    tri[u] += 1
                    tri[v] += 1
                    tri[w] += 1
    return tri


# --------------------------------------------------------------------------- #
# numpy fallbacks
# --------------------------------------------------------------------------- #
def _expand(indptr, indices, frontier):
    """Return (source, neighbor) arrays for all edges leaving ``frontier``."""
    starts = indptr[frontier]
    lens = indptr[frontier + 1] - starts
    total = int(lens.sum())
    if total == 0:
        empty = np.empty(0, dtype=np.int64)
        return empty, empty
    offsets = np.cumsum(lens) - lens
    pos = np.repeat(starts - offsets, lens) + np.arange(total)
    return np.repeat(frontier, lens), indices[pos].astype(np.int64)


def _bfs_hist_np(indptr, indices, sources, n_chunks=N_CHUNKS):
    n = len(indptr) - 1
    hist = np.zeros(n + 1, dtype=np.int64)
    eccs = np.zeros(len(sources), dtype=np.int64)
    dist = np.full(n, -1, dtype=np.int64)
    for s_i, s in enumerate(sources):
        dist[:] = -1
        dist[s] = 0
        frontier = np.array([s], dtype=np.int64)
        d = 0
        while frontier.size:
            _, nbr = _expand(indptr, indices, frontier)
            nbr = np.unique(nbr[dist[nbr] < 0])
            if nbr.size == 0:
                break
            d += 1
            dist[nbr] = d
            hist[d] += nbr.size
            frontier = nbr
        eccs[s_i] = d
    return hist, eccs


def _brandes_np(indptr, indices, sources, n_chunks=N_CHUNKS):
    n = len(indptr) - 1
    out = np.zeros(n, dtype=np.float64)
    dist = np.full(n, -1, dtype=np.int64)
    for s in sources:
        dist[:] = -1
        sigma = np.zeros(n)
        dist[s] = 0
        sigma[s] = 1.0
        frontier = np.array([s], dtype=np.int64)
        levels = []
        d = 0
        while frontier.size:
            src, nbr = _expand(indptr, indices, frontier)
            new = np.unique(nbr[dist[nbr] < 0])
            dist[new] = d + 1
            keep = dist[nbr] == d + 1
            src, nbr = src[keep], nbr[keep]
            sigma += np.bincount(nbr, weights=sigma[src], minlength=n)
            levels.append((src, nbr))
            frontier = new
            d += 1
        delta = np.zeros(n)
        for src, nbr in reversed(levels):
            contrib = sigma[src] / sigma[nbr] * (1.0 + delta[nbr])
            delta += np.bincount(src, weights=contrib, minlength=n)
        delta[s] = 0.0
        out += delta
    return out


def _triangles_np(indptr, indices):
    n = len(indptr) - 1
    data = np.ones(len(indices), dtype=np.float64)
    adj = sp.csr_matrix((data, indices, indptr), shape=(n, n))
    paths2 = adj @ adj
    closed = np.asarray(paths2.multiply(adj).sum(axis=1)).ravel()
    return np.rint(closed / 2).astype(np.int64)


# --------------------------------------------------------------------------- #
# dispatch
# --------------------------------------------------------------------------- #
def _prep(indptr, indices, sources=None):
    indptr = np.ascontiguousarray(indptr, dtype=np.int64)
    indices = np.ascontiguousarray(indices, dtype=np.int64)
    if sources is None:
        return indptr, indices
    return indptr, indices, np.ascontiguousarray(sources, dtype=np.int64)


def bfs_histogram(indptr, indices, sources):
    """Hop-distance counts and eccentricities from each source.

    Returns
    -------
    hist : int64 array of length N+1
        ``hist[d]`` is the number of (source, target) pairs at distance ``d``
        for ``d >= 1``; unreachable targets are not counted.
    ecc : int64 array
        Eccentricity of each source within its component.
    """
    args = _prep(indptr, indices, sources)
    if USE_NUMBA:
        return _bfs_hist_nb(*args, N_CHUNKS)
    return _bfs_hist_np(*args)


def brandes_dependencies(indptr, indices, sources):
    """Sum over ``sources`` of single-source dependencies.

    Summed over all sources this is betweenness over ordered pairs, i.e.
    twice the unordered-pair value. Endpoints never receive credit.
    """
    args = _prep(indptr, indices, sources)
    if USE_NUMBA:
        return _brandes_nb(*args, N_CHUNKS)
    return _brandes_np(*args)


def triangle_counts(indptr, indices):
    """Number of triangles through each node."""
    args = _prep(indptr, indices)
    if USE_NUMBA:
        return _triangles_nb(*args)
    return _triangles_np(*args)
