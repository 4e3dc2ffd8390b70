"""Hot numeric loops, compiled with numba when it is usable.

Every kernel exists twice: a scalar-loop version that numba compiles and a
vectorized numpy version. The module-level names (``lambert_w0_array``,
``lattice_argmax``) point at the numba build unless numba is missing or the
environment variable ``SWIPTMAC_DISABLE_NUMBA`` is set to a truthy value.
Both builds are always importable for benchmarking and cross-checks.
"""

import math
import os

import numpy as np

DISABLE_ENV = "SWIPTMAC_DISABLE_NUMBA"

E = math.e
# 1/e split into a double and its rounding error, so x + 1/e keeps its
# significant digits right next to the branch point.
INV_E_HI = 0.36787944117144233
INV_E_LO = -1.2428753672788363e-17
MAX_ITER = 100
STEP_TOL = 1e-15
# Below this distance from the branch point the series is exact to double precision.
SERIES_ONLY = 1e-3

DENOMINATOR_GUARD = 1e-12


def _disabled_by_env():
    return os.environ.get(DISABLE_ENV, "").strip().lower() in {"1", "true", "yes", "on"}


try:
    import numba

    HAVE_NUMBA = True
    if "NUMBA_THREADING_LAYER_PRIORITY" not in os.environ:
        # skip the TBB probe, which warns on older system TBB builds
        numba.config.THREADING_LAYER_PRIORITY = ["omp", "workqueue", "tbb"]
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None
    HAVE_NUMBA = False

USE_NUMBA = HAVE_NUMBA and not _disabled_by_env()
BACKEND = "numba" if USE_NUMBA else "numpy"


# --------------------------------------------------------------------------
# Lambert W, principal branch
# --------------------------------------------------------------------------


def w0_scalar(x):
    """Return ``(w, iterations)`` with ``w * exp(w) == x`` on the principal branch.

    The caller guarantees ``x >= -1/e`` (after clamping).
    """
    q = (x + INV_E_HI) + INV_E_LO
    if q <= 0.0:
        return -1.0, 0
    if x == 0.0:
        return 0.0, 0
    if x <= -0.25:
        p = math.sqrt(2.0 * E * q)
        w = -1.0 + p * (
            1.0
            + p * (-1.0 / 3.0 + p * (11.0 / 72.0 + p * (-43.0 / 540.0 + p * (769.0 / 17280.0 + p * (-221.0 / 8505.0)))))
        )
        if p < SERIES_ONLY:
            return w, 0
    elif x > E:
        l1 = math.log(x)
        l2 = math.log(l1)
        w = l1 - l2 + l2 / l1
    elif x < 0.5:
        w = x * (1.0 - x)
    else:
        w = math.log1p(x)
        w = w * (1.0 - math.log1p(w) / (2.0 + w))
    for it in range(1, MAX_ITER + 1):
        ew = math.exp(w)
        f = w * ew - x
        wp1 = w + 1.0
        step = f / (ew * wp1 - (w + 2.0) * f / (2.0 * wp1))
        w -= step
        if abs(step) < STEP_TOL * (1.0 + abs(w)):
            return w, it
    return w, MAX_ITER


def _lambert_w0_loop(x, out):
    for k in range(x.shape[0]):
        out[k] = w0_scalar(x[k])[0]
    return out


def lambert_w0_numpy(x):
    """Vectorized principal-branch W for an array already clamped to ``>= -1/e``."""
    x = np.asarray(x, dtype=np.float64)
    q = (x + INV_E_HI) + INV_E_LO
    w = np.empty_like(x)
    branch = x <= -0.25
    big = x > E
    small = ~branch & ~big & (x < 0.5)
    mid = ~branch & ~big & ~small
    p = np.sqrt(2.0 * E * np.maximum(q[branch], 0.0))
    w[branch] = -1.0 + p * (
        1.0 + p * (-1.0 / 3.0 + p * (11.0 / 72.0 + p * (-43.0 / 540.0 + p * (769.0 / 17280.0 + p * (-221.0 / 8505.0)))))
    )
    l1 = np.log(x[big])
    l2 = np.log(l1)
    w[big] = l1 - l2 + l2 / l1
    w[small] = x[small] * (1.0 - x[small])
    lm = np.log1p(x[mid])
    w[mid] = lm * (1.0 - np.log1p(lm) / (2.0 + lm))

    done = (q <= 0.0) | (x == 0.0)
    w[q <= 0.0] = -1.0
    w[x == 0.0] = 0.0
    near = np.zeros_like(done)
    near[branch] = p < SERIES_ONLY
    done |= near
    active = np.flatnonzero(~done)
    for _ in range(MAX_ITER):
        if active.size == 0:
            break
        wa = w[active]
        xa = x[active]
        ew = np.exp(wa)
        f = wa * ew - xa
        wp1 = wa + 1.0
        step = f / (ew * wp1 - (wa + 2.0) * f / (2.0 * wp1))
        wa = wa - step
        w[active] = wa
        active = active[~(np.abs(step) < STEP_TOL * (1.0 + np.abs(wa)))]
    return w


# --------------------------------------------------------------------------
# Lattice search for the brute-force oracle
# --------------------------------------------------------------------------
#
# The candidate set is the lattice axes0 x axes1 plus, for every lattice row
# and column, the point where that row/column crosses the harvest boundary
# T (g0 p0 + g1 p1) + sigma = chi. Without those boundary points a lattice
# cannot resolve optima that sit on the sloped constraint line.


def _better(eta, x0, x1, best, b0, b1):
    if eta > best:
        return True
    return eta == best and (x0 < b0 or (x0 == b0 and x1 < b1))


def _boundary_partner(x, g_fixed, g_free, lo, hi, t, chi, sigma):
    """Free coordinate placing (fixed=x, free) on the harvest boundary, or -1."""
    if g_free <= 0.0:
        return -1.0
    y = (chi - sigma - t * g_fixed * x) / (t * g_free)
    if y < lo:
        return -1.0
    for _ in range(4):
        if t * (g_fixed * x + g_free * y) + sigma >= chi:
            break
        y = np.nextafter(y, np.inf)
    if y > hi:
        return -1.0
    return y


def _lattice_loop(p0, p1, h0, h1, g0, g1, pc, chi, t, sigma):
    """Feasible argmax of the deduct-demand efficiency over the candidate set.

    Returns ``(x0, x1, eta, n_feasible)``; ``eta == -inf`` when nothing is
    feasible. Rows and columns run in parallel; the reduction walks them in
    index order so the answer does not depend on the thread count. Ties keep
    the lexicographically smaller allocation.
    """
    n0 = p0.shape[0]
    n1 = p1.shape[0]
    lo0 = p0[0]
    hi0 = p0[n0 - 1]
    lo1 = p1[0]
    hi1 = p1[n1 - 1]
    row_eta = np.full(n0, -np.inf)
    row_x1 = np.zeros(n0)
    row_cnt = np.zeros(n0, dtype=np.int64)
    for a in _prange(n0):
        best = -np.inf
        b1 = 0.0
        cnt = 0
        x0 = p0[a]
        for b in range(n1 + 1):
            if b < n1:
                x1 = p1[b]
            else:
                x1 = _boundary_partner(x0, g0, g1, lo1, hi1, t, chi, sigma)
                if x1 < 0.0:
                    continue
            if t * (g0 * x0 + g1 * x1) + sigma < chi:
                continue
            den = t * (pc + x0 + x1) - chi
            if den <= DENOMINATOR_GUARD:
                continue
            cnt += 1
            eta = t * math.log2(1.0 + h0 * x0 + h1 * x1) / den
            if _better(eta, x0, x1, best, x0, b1):
                best = eta
                b1 = x1
        row_eta[a] = best
        row_x1[a] = b1
        row_cnt[a] = cnt
    col_eta = np.full(n1, -np.inf)
    col_x0 = np.zeros(n1)
    col_cnt = np.zeros(n1, dtype=np.int64)
    for b in _prange(n1):
        x1 = p1[b]
        x0 = _boundary_partner(x1, g1, g0, lo0, hi0, t, chi, sigma)
        if x0 < 0.0:
            continue
        if t * (g0 * x0 + g1 * x1) + sigma < chi:
            continue
        den = t * (pc + x0 + x1) - chi
        if den <= DENOMINATOR_GUARD:
            continue
        col_cnt[b] = 1
        col_eta[b] = t * math.log2(1.0 + h0 * x0 + h1 * x1) / den
        col_x0[b] = x0
    best = -np.inf
    b0 = 0.0
    b1 = 0.0
    total = 0
    for a in range(n0):
        total += row_cnt[a]
        if row_cnt[a] > 0 and _better(row_eta[a], p0[a], row_x1[a], best, b0, b1):
            best = row_eta[a]
            b0 = p0[a]
            b1 = row_x1[a]
    for b in range(n1):
        total += col_cnt[b]
        if col_cnt[b] > 0 and _better(col_eta[b], col_x0[b], p1[b], best, b0, b1):
            best = col_eta[b]
            b0 = col_x0[b]
            b1 = p1[b]
    return b0, b1, best, total


def _boundary_partner_numpy(x, g_fixed, g_free, lo, hi, t, chi, sigma):
    if g_free <= 0.0:
        return np.full(x.shape, -1.0)
    y = (chi - sigma - t * g_fixed * x) / (t * g_free)
    for _ in range(4):
        short = t * (g_fixed * x + g_free * y) + sigma < chi
        if not short.any():
            break
        y = np.where(short, np.nextafter(y, np.inf), y)
    return np.where((y >= lo) & (y <= hi), y, -1.0)


def lattice_argmax_numpy(p0, p1, h0, h1, g0, g1, pc, chi, t, sigma):
    """Numpy twin of the compiled lattice kernel (same contract)."""
    p0 = np.asarray(p0, dtype=np.float64)
    p1 = np.asarray(p1, dtype=np.float64)
    y1 = _boundary_partner_numpy(p0, g0, g1, p1[0], p1[-1], t, chi, sigma)
    y0 = _boundary_partner_numpy(p1, g1, g0, p0[0], p0[-1], t, chi, sigma)
    grid0, grid1 = np.meshgrid(p0, p1, indexing="ij")
    keep0 = y1 >= 0.0
    keep1 = y0 >= 0.0
    x0 = np.concatenate([grid0.ravel(), p0[keep0], y0[keep1]])
    x1 = np.concatenate([grid1.ravel(), y1[keep0], p1[keep1]])
    feasible = t * (g0 * x0 + g1 * x1) + sigma >= chi
    den = t * (pc + x0 + x1) - chi
    feasible &= den > DENOMINATOR_GUARD
    count = int(np.count_nonzero(feasible))
    if count == 0:
        return 0.0, 0.0, -np.inf, 0
    x0, x1, den = x0[feasible], x1[feasible], den[feasible]
    eta = t * np.log2(1.0 + h0 * x0 + h1 * x1) / den
    best = eta.max()
    tied = np.flatnonzero(eta == best)
    k = tied[np.lexsort((x1[tied], x0[tied]))[0]]
    return float(x0[k]), float(x1[k]), float(best), count


if HAVE_NUMBA:
    _prange = numba.prange
    _w0_jit = numba.njit(cache=True)(w0_scalar)
    w0_scalar_numba = _w0_jit

    @numba.njit(cache=True)
    def _lambert_w0_loop_numba(x, out):
        for k in range(x.shape[0]):
            out[k] = _w0_jit(x[k])[0]
        return out

    def lambert_w0_numba(x):
        x = np.ascontiguousarray(x, dtype=np.float64)
        return _lambert_w0_loop_numba(x, np.empty_like(x))

    _better = numba.njit(cache=True)(_better)
    _boundary_partner = numba.njit(cache=True)(_boundary_partner)
    _lattice_jit = numba.njit(parallel=True, cache=True)(_lattice_loop)

    def lattice_argmax_numba(p0, p1, h0, h1, g0, g1, pc, chi, t, sigma):
        x0, x1, eta, cnt = _lattice_jit(
            np.ascontiguousarray(p0, dtype=np.float64),
            np.ascontiguousarray(p1, dtype=np.float64),
            float(h0), float(h1), float(g0), float(g1),
            float(pc), float(chi), float(t), float(sigma),
        )
        return float(x0), float(x1), float(eta), int(cnt)

else:  # pragma: no cover
    _prange = range
    lambert_w0_numba = None
    lattice_argmax_numba = None


if USE_NUMBA:
    lambert_w0_array = lambert_w0_numba
    lattice_argmax = lattice_argmax_numba
else:
    lambert_w0_array = lambert_w0_numpy
    lattice_argmax = lattice_argmax_numpy


def set_threads(n):
    """Limit the numba worker pool; a no-op on the numpy backend."""
    if USE_NUMBA and n:
        numba.set_num_threads(max(1, min(int(n), numba.config.NUMBA_NUM_THREADS)))
