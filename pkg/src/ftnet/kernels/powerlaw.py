"""Hurwitz zeta and the per-candidate power-law scans used by x_min search.

Scans return, for every candidate lower bound, the maximum-likelihood
exponent and the KS distance of the tail above it. The selection logic
(tail-size floor, tie rules) lives in :mod:`ftnet.plfit`.
"""
import math

import numpy as np

from .._accel import USE_NUMBA, njit

ALPHA_LO = 1.01
ALPHA_HI = 6.0
GOLDEN_TOL = 1e-6

# B_{2j} / (2j)!  for j = 1..8
_EM_COEF = np.array([
    1.0 / 6.0 / 2.0,
    -1.0 / 30.0 / 24.0,
    1.0 / 42.0 / 720.0,
    -1.0 / 30.0 / 40320.0,
    5.0 / 66.0 / 3628800.0,
    -691.0 / 2730.0 / 479001600.0,
    7.0 / 6.0 / 87178291200.0,
    -3617.0 / 510.0 / 20922789888000.0,
])
_EM_SHIFT = 10.0
_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


# --------------------------------------------------------------------------- #
# Hurwitz zeta, Euler-Maclaurin
# --------------------------------------------------------------------------- #
@njit
def hurwitz_zeta(s, q):
    """zeta(s, q) = sum_{k>=0} (q + k)^-s for s > 1, q > 0."""
    total = 0.0
    a = q
    while a < _EM_SHIFT:
        total += a ** (-s)
        a += 1.0
    total += a ** (1.0 - s) / (s - 1.0) + 0.5 * a ** (-s)
    # rising factorial s (s+1) ... (s+2j-2) times a^(-s-2j+1)
    term = s * a ** (-s - 1.0)
    inv_a2 = 1.0 / (a * a)
    for j in range(_EM_COEF.shape[0]):
        total += _EM_COEF[j] * term
        term *= (s + 2 * j + 1.0) * (s + 2 * j + 2.0) * inv_a2
    return total


def hurwitz_zeta_np(s, q):
    """Vectorized :func:`hurwitz_zeta` over ``q``."""
    q = np.asarray(q, dtype=np.float64)
    shift = np.maximum(0.0, np.ceil(_EM_SHIFT - q))
    total = np.zeros_like(q)
    for k in range(int(shift.max()) if q.size else 0):
        total += np.where(k < shift, (q + k) ** (-s), 0.0)
    a = q + shift
    total += a ** (1.0 - s) / (s - 1.0) + 0.5 * a ** (-s)
    term = s * a ** (-s - 1.0)
    inv_a2 = 1.0 / (a * a)
    for j, c in enumerate(_EM_COEF):
        total += c * term
        term = term * (s + 2 * j + 1.0) * (s + 2 * j + 2.0) * inv_a2
    return total


# --------------------------------------------------------------------------- #
# discrete MLE
# --------------------------------------------------------------------------- #
@njit
def _neg_loglik(alpha, sum_log, n, xmin):
    return alpha * sum_log + n * math.log(hurwitz_zeta(alpha, xmin))


@njit
def _golden(sum_log, n, xmin, lo, hi):
    c = hi - _INV_PHI * (hi - lo)
    d = lo + _INV_PHI * (hi - lo)
    fc = _neg_loglik(c, sum_log, n, xmin)
    fd = _neg_loglik(d, sum_log, n, xmin)
    while hi - lo > GOLDEN_TOL:
        if fc < fd:
            hi = d
            d = c
            fd = fc
            c = hi - _INV_PHI * (hi - lo)
            fc = _neg_loglik(c, sum_log, n, xmin)
        else:
            lo = c
            c = d
            fc = fd
            d = lo + _INV_PHI * (hi - lo)
            fd = _neg_loglik(d, sum_log, n, xmin)
    return 0.5 * (lo + hi)


@njit
def discrete_mle(sum_log, n, xmin):
    """Exponent maximizing the zeta-normalized likelihood of a tail.

    ``sum_log`` is the sum of ln(x) over the ``n`` tail values. The
    shifted-continuous estimate seeds a narrow bracket; the full interval
    is searched whenever the optimum would sit on that bracket's edge.
    """
    denom = sum_log - n * math.log(xmin - 0.5)
    guess = 1.0 + n / denom if denom > 0 else ALPHA_HI
    lo = max(ALPHA_LO, guess - 0.5)
    hi = min(ALPHA_HI, guess + 0.5)
    if lo < hi:
        a = _golden(sum_log, n, xmin, lo, hi)
        edge = 10.0 * GOLDEN_TOL
        inside_lo = a - lo > edge or lo == ALPHA_LO
        inside_hi = hi - a > edge or hi == ALPHA_HI
        if inside_lo and inside_hi:
            return a
    return _golden(sum_log, n, xmin, ALPHA_LO, ALPHA_HI)


# --------------------------------------------------------------------------- #
# scans
# --------------------------------------------------------------------------- #
@njit
def _discrete_ks(alpha, uvals, cum, j0, n_tail, before):
    """Sup over integers x >= xmin of |F_emp(x) - F_model(x)|.

    ``cum[j]`` counts sample values <= uvals[j]; ``before`` counts values
    below the candidate.
    """
    z0 = hurwitz_zeta(alpha, uvals[j0])
    m = uvals.shape[0]
    ks = 0.0
    z_here = z0
    for j in range(j0, m):
        u = uvals[j]
        emp = (cum[j] - before) / n_tail
        z_next = z_here - u ** (-alpha)
        d = abs(emp - (1.0 - z_next / z0))
        if d > ks:
            ks = d
        if j + 1 < m:
            z_here = hurwitz_zeta(alpha, uvals[j + 1])
            if uvals[j + 1] > u + 1.0:
                d = abs(emp - (1.0 - z_here / z0))
                if d > ks:
                    ks = d
    return ks


@njit
def _discrete_scan_nb(uvals, counts, cand):
    m = uvals.shape[0]
    cum = np.cumsum(counts)
    total = cum[m - 1]
    logs = np.log(uvals) * counts
    suffix_log = np.zeros(m + 1)
    for j in range(m - 1, -1, -1):
        suffix_log[j] = suffix_log[j + 1] + logs[j]
    alphas = np.empty(cand.shape[0])
    kss = np.empty(cand.shape[0])
    for i in range(cand.shape[0]):
        j0 = cand[i]
        before = cum[j0 - 1] if j0 > 0 else 0
        n_tail = total - before
        a = discrete_mle(suffix_log[j0], float(n_tail), uvals[j0])
        alphas[i] = a
        kss[i] = _discrete_ks(a, uvals, cum, j0, float(n_tail), before)
    return alphas, kss


@njit
def _continuous_scan_nb(x, logx, cand):
    n = x.shape[0]
    suffix_log = np.zeros(n + 1)
    for i in range(n - 1, -1, -1):
        suffix_log[i] = suffix_log[i + 1] + logx[i]
    alphas = np.empty(cand.shape[0])
    kss = np.empty(cand.shape[0])
    for c in range(cand.shape[0]):
        i0 = cand[c]
        nt = n - i0
        lxmin = logx[i0]
        denom = suffix_log[i0] - nt * lxmin
        if denom <= 0.0:
            alphas[c] = np.inf
            kss[c] = 1.0
            continue
        a = 1.0 + nt / denom
        alphas[c] = a
        ks = 0.0
        for i in range(i0, n):
            model = 1.0 - math.exp((a - 1.0) * (lxmin - logx[i]))
            k = i - i0
            hi = (k + 1) / nt - model
            lo = model - k / nt
            if hi > ks:
                ks = hi
            if lo > ks:
                ks = lo
        kss[c] = ks
    return alphas, kss


def _discrete_scan_np(uvals, counts, cand):
    cum = np.cumsum(counts)
    total = cum[-1]
    logs = np.log(uvals) * counts
    suffix_log = np.concatenate([np.cumsum(logs[::-1])[::-1], [0.0]])
    alphas = np.empty(len(cand))
    kss = np.empty(len(cand))
    for i, j0 in enumerate(cand):
        before = cum[j0 - 1] if j0 > 0 else 0
        n_tail = total - before
        a = _discrete_mle_np(suffix_log[j0], float(n_tail), float(uvals[j0]))
        u = uvals[j0:]
        z = hurwitz_zeta_np(a, u)
        z0 = z[0]
        emp = (cum[j0:] - before) / n_tail
        at_value = np.abs(emp - (1.0 - (z - u ** (-a)) / z0))
        gap = u[1:] > u[:-1] + 1.0
        before_next = np.abs(emp[:-1] - (1.0 - z[1:] / z0))[gap]
        alphas[i] = a
        kss[i] = max(at_value.max(), before_next.max(initial=0.0))
    return alphas, kss


def _discrete_mle_np(sum_log, n, xmin):
    def f(a):
        return a * sum_log + n * math.log(hurwitz_zeta_np(a, np.array([xmin]))[0])

    def golden(lo, hi):
        c = hi - _INV_PHI * (hi - lo)
        d = lo + _INV_PHI * (hi - lo)
        fc, fd = f(c), f(d)
        while hi - lo > GOLDEN_TOL:
            if fc < fd:
                hi, d, fd = d, c, fc
                c = hi - _INV_PHI * (hi - lo)
                fc = f(c)
            else:
                lo, c, fc = c, d, fd
                d = lo + _INV_PHI * (hi - lo)
                fd = f(d)
        return 0.5 * (lo + hi)

    denom = sum_log - n * math.log(xmin - 0.5)
    guess = 1.0 + n / denom if denom > 0 else ALPHA_HI
    lo, hi = max(ALPHA_LO, guess - 0.5), min(ALPHA_HI, guess + 0.5)
    if lo < hi:
        a = golden(lo, hi)
        edge = 10.0 * GOLDEN_TOL
        if (a - lo > edge or lo == ALPHA_LO) and (hi - a > edge or hi == ALPHA_HI):
            return a
    return golden(ALPHA_LO, ALPHA_HI)


def _continuous_scan_np(x, logx, cand):
    n = len(x)
    suffix_log = np.concatenate([np.cumsum(logx[::-1])[::-1], [0.0]])
    alphas = np.empty(len(cand))
    kss = np.empty(len(cand))
    for c, i0 in enumerate(cand):
        nt = n - i0
        denom = suffix_log[i0] - nt * logx[i0]
        if denom <= 0.0:
            alphas[c], kss[c] = np.inf, 1.0
            continue
        a = 1.0 + nt / denom
        model = 1.0 - np.exp((a - 1.0) * (logx[i0] - logx[i0:]))
        k = np.arange(nt)
        alphas[c] = a
        kss[c] = max(((k + 1) / nt - model).max(), (model - k / nt).max())
    return alphas, kss


def discrete_scan(uvals, counts, cand):
    """Fit and KS for each candidate index into the distinct values ``uvals``."""
    uvals = np.ascontiguousarray(uvals, dtype=np.float64)
    counts = np.ascontiguousarray(counts, dtype=np.int64)
    cand = np.ascontiguousarray(cand, dtype=np.int64)
    if USE_NUMBA:
        return _discrete_scan_nb(uvals, counts, cand)
    return _discrete_scan_np(uvals, counts, cand)


def continuous_scan(x_sorted, cand):
    """Fit and KS for each candidate start position in sorted data."""
    x = np.ascontiguousarray(x_sorted, dtype=np.float64)
    cand = np.ascontiguousarray(cand, dtype=np.int64)
    logx = np.log(x)
    if USE_NUMBA:
        return _continuous_scan_nb(x, logx, cand)
    return _continuous_scan_np(x, logx, cand)


def zeta(s, q):
    """Hurwitz zeta for scalar or array ``q`` on the active backend."""
    if np.ndim(q) == 0:
        if USE_NUMBA:
            return hurwitz_zeta(float(s), float(q))
        return float(hurwitz_zeta_np(float(s), np.array([float(q)]))[0])
    return hurwitz_zeta_np(float(s), q)


def mle_discrete(sum_log, n, xmin):
    if USE_NUMBA:
        return discrete_mle(float(sum_log), float(n), float(xmin))
    return _discrete_mle_np(float(sum_log), float(n), float(xmin))


# --------------------------------------------------------------------------- #
# discrete sampler
# --------------------------------------------------------------------------- #
# beyond this the continuous approximation is exact to float precision and
# unit steps no longer change x
_EXACT_INT = 2.0 ** 40
_CLIP = 2.0 ** 62


@njit
def _sample_discrete_nb(u, alpha, xmin):
    z0 = hurwitz_zeta(alpha, xmin)
    out = np.empty(u.shape[0], dtype=np.int64)
    for i in range(u.shape[0]):
        # zeta(a, x) ~ (x - 1/2)^(1-a) / (a-1) makes the guess exact up to O(x^-2)
        x = np.floor(0.5 + ((alpha - 1.0) * z0 * (1.0 - u[i])) ** (-1.0 / (alpha - 1.0)))
        if x < xmin:
            x = xmin
        if x >= _EXACT_INT:
            out[i] = np.int64(min(x, _CLIP))
            continue
        # P(X >= x) >= 1 - u > P(X >= x + 1)
        target = 1.0 - u[i]
        while hurwitz_zeta(alpha, x + 1.0) / z0 >= target:
            x += 1.0
        while x > xmin and hurwitz_zeta(alpha, x) / z0 < target:
            x -= 1.0
        out[i] = np.int64(x)
    return out


def _sample_discrete_np(u, alpha, xmin):
    z0 = hurwitz_zeta_np(alpha, np.array([xmin]))[0]
    target = 1.0 - u
    with np.errstate(over="ignore"):
        x = np.floor(0.5 + ((alpha - 1.0) * z0 * target) ** (-1.0 / (alpha - 1.0)))
    x = np.maximum(x, xmin)
    huge = x >= _EXACT_INT
    x[huge] = np.minimum(x[huge], _CLIP)
    while True:
        up = ~huge & (hurwitz_zeta_np(alpha, x + 1.0) / z0 >= target)
        if not up.any():
            break
        x = np.where(up, x + 1.0, x)
    while True:
        down = ~huge & (x > xmin) & (hurwitz_zeta_np(alpha, x) / z0 < target)
        if not down.any():
            break
        x = np.where(down, x - 1.0, x)
    return x.astype(np.int64)


def sample_discrete(u, alpha, xmin):
    """Map uniforms ``u`` in [0, 1) to discrete power-law draws by inverse CDF."""
    u = np.ascontiguousarray(u, dtype=np.float64)
    if USE_NUMBA:
        return _sample_discrete_nb(u, float(alpha), float(xmin))
    return _sample_discrete_np(u, float(alpha), float(xmin))
