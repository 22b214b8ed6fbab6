"""Hot numeric kernels: numba-jitted loops with pure-numpy fallbacks.

The active path is picked by THO_BACKEND (see backend module).  Both paths
evaluate the same arithmetic in the same order, so they agree bitwise; the
test suite asserts that.  fastmath stays off for exactly that reason.

Kernels:

* nearest-neighbor squared distances, brute force and uniform-grid
  accelerated (grid is used for reference sets of >= 2000 points),
* batched bilinear sampling from a feature grid.
"""

import numpy as np

from .backend import HAVE_NUMBA, USE_NUMBA

GRID_MIN_REF = 2000  # switch to the grid path at this reference-set size
_GRID_MAX_DIM = 96

if HAVE_NUMBA:
    from numba import njit, prange
else:  # pragma: no cover - numba is a declared dependency
    njit = None
    prange = range


# ---------------------------------------------------------------------------
# nearest neighbor, brute force
# ---------------------------------------------------------------------------

def _nearest_sqdist_brute_numpy(query: np.ndarray, ref: np.ndarray) -> np.ndarray:
    """Per-query min squared distance to ref, chunked to bound memory."""
    n = query.shape[0]
    out = np.empty(n, dtype=np.float64)
    chunk = max(1, int(4_000_000 // max(ref.shape[0], 1)))
    for i0 in range(0, n, chunk):
        d = query[i0:i0 + chunk, None, :] - ref[None, :, :]
        out[i0:i0 + chunk] = (d * d).sum(axis=2).min(axis=1)
    return out


if HAVE_NUMBA:

    @njit(cache=True, parallel=True)
    def _nearest_sqdist_brute_numba(query, ref):  # pragma: no cover - jitted
        n = query.shape[0]
        m = ref.shape[0]
        out = np.empty(n, dtype=np.float64)
        for i in prange(n):
            qx = query[i, 0]
            qy = query[i, 1]
            qz = query[i, 2]
            best = np.inf
            for j in range(m):
                dx = qx - ref[j, 0]
                dy = qy - ref[j, 1]
                dz = qz - ref[j, 2]
                d2 = dx * dx + dy * dy + dz * dz
                if d2 < best:
                    best = d2
            out[i] = best
        return out


# ---------------------------------------------------------------------------
# nearest neighbor, uniform grid
# ---------------------------------------------------------------------------

def _build_grid(ref: np.ndarray):
    """Bucket ref points into a uniform grid (counting sort)."""
    lo = ref.min(axis=0)
    hi = ref.max(axis=0)
    span = np.maximum(hi - lo, 1e-12)
    target = float(np.prod(span) / max(ref.shape[0], 1)) ** (1.0 / 3.0)
    if target <= 0.0:
        target = 1.0
    dims = np.clip((span / target).astype(np.int64) + 1, 1, _GRID_MAX_DIM)
    cell = span / dims
    idx = np.minimum(((ref - lo) / cell).astype(np.int64), dims - 1)
    idx = np.maximum(idx, 0)
    flat = (idx[:, 0] * dims[1] + idx[:, 1]) * dims[2] + idx[:, 2]
    ncells = int(dims[0] * dims[1] * dims[2])
    counts = np.bincount(flat, minlength=ncells)
    start = np.zeros(ncells + 1, dtype=np.int64)
    np.cumsum(counts, out=start[1:])
    items = np.argsort(flat, kind="stable").astype(np.int64)
    return lo, cell, dims.astype(np.int64), start, items


if HAVE_NUMBA:

    @njit(cache=True, parallel=True)
    def _nearest_sqdist_grid_numba(query, ref, lo, cell, dims, start, items):  # pragma: no cover - jitted
        n = query.shape[0]
        out = np.empty(n, dtype=np.float64)
        hmin = min(cell[0], min(cell[1], cell[2]))
        for i in prange(n):
            qx = query[i, 0]
            qy = query[i, 1]
            qz = query[i, 2]
            # clamped grid cell of the query
            cx = int((qx - lo[0]) / cell[0])
            cy = int((qy - lo[1]) / cell[1])
            cz = int((qz - lo[2]) / cell[2])
            cx = min(max(cx, 0), dims[0] - 1)
            cy = min(max(cy, 0), dims[1] - 1)
            cz = min(max(cz, 0), dims[2] - 1)
            # distance from the query to its clamped cell box (0 inside)
            d0 = 0.0
            bx0 = lo[0] + cx * cell[0]
            by0 = lo[1] + cy * cell[1]
            bz0 = lo[2] + cz * cell[2]
            ex = max(max(bx0 - qx, qx - (bx0 + cell[0])), 0.0)
            ey = max(max(by0 - qy, qy - (by0 + cell[1])), 0.0)
            ez = max(max(bz0 - qz, qz - (bz0 + cell[2])), 0.0)
            d0 = np.sqrt(ex * ex + ey * ey + ez * ez)
            best = np.inf
            kmax = 0
            for a in range(3):
                c = cx if a == 0 else (cy if a == 1 else cz)
                reach = max(c, dims[a] - 1 - c)
                if reach > kmax:
                    kmax = reach
            for k in range(kmax + 1):
                # points in rings >= k sit at distance >= (k-1)*hmin - d0
                if best < np.inf:
                    bound = (k - 1) * hmin - d0
                    if bound > 0.0 and bound * bound >= best:
                        break
                for dx in range(-k, k + 1):
                    gx = cx + dx
                    if gx < 0 or gx >= dims[0]:
                        continue
                    for dy in range(-k, k + 1):
                        gy = cy + dy
                        if gy < 0 or gy >= dims[1]:
                            continue
                        for dz in range(-k, k + 1):
                            if max(abs(dx), max(abs(dy), abs(dz))) != k:
                                continue
                            gz = cz + dz
                            if gz < 0 or gz >= dims[2]:
                                continue
                            cid = (gx * dims[1] + gy) * dims[2] + gz
                            for t in range(start[cid], start[cid + 1]):
                                j = items[t]
                                ddx = qx - ref[j, 0]
                                ddy = qy - ref[j, 1]
                                ddz = qz - ref[j, 2]
                                d2 = ddx * ddx + ddy * ddy + ddz * ddz
                                if d2 < best:
                                    best = d2
            out[i] = best
        return out


def _nearest_sqdist_grid(query: np.ndarray, ref: np.ndarray) -> np.ndarray:
    lo, cell, dims, start, items = _build_grid(ref)
    return _nearest_sqdist_grid_numba(query, ref, lo, cell, dims, start, items)


# ---------------------------------------------------------------------------
# bilinear gather
# ---------------------------------------------------------------------------

def _bilinear_many_numpy(grid: np.ndarray, us: np.ndarray, vs: np.ndarray) -> np.ndarray:
    h, w, _ = grid.shape
    u = np.clip(us, 0.0, w - 1.0)
    v = np.clip(vs, 0.0, h - 1.0)
    u0 = np.floor(u).astype(np.int64)
    v0 = np.floor(v).astype(np.int64)
    u1 = np.minimum(u0 + 1, w - 1)
    v1 = np.minimum(v0 + 1, h - 1)
    fu = u - u0
    fv = v - v0
    wa = ((1.0 - fu) * (1.0 - fv))[:, None]
    wb = (fu * (1.0 - fv))[:, None]
    wc = ((1.0 - fu) * fv)[:, None]
    wd = (fu * fv)[:, None]
    g = grid.astype(np.float64)
    out = wa * g[v0, u0] + wb * g[v0, u1] + wc * g[v1, u0] + wd * g[v1, u1]
    return out.astype(np.float32)


if HAVE_NUMBA:

    @njit(cache=True)
    def _bilinear_many_numba(grid, us, vs):  # pragma: no cover - jitted
        h, w, nc = grid.shape
        n = us.shape[0]
        out = np.empty((n, nc), dtype=np.float32)
        for i in range(n):
            u = min(max(us[i], 0.0), w - 1.0)
            v = min(max(vs[i], 0.0), h - 1.0)
            u0 = int(np.floor(u))
            v0 = int(np.floor(v))
            u1 = min(u0 + 1, w - 1)
            v1 = min(v0 + 1, h - 1)
            fu = u - u0
            fv = v - v0
            wa = (1.0 - fu) * (1.0 - fv)
            wb = fu * (1.0 - fv)
            wc = (1.0 - fu) * fv
            wd = fu * fv
            for c in range(nc):
                val = (wa * grid[v0, u0, c] + wb * grid[v0, u1, c]
                       + wc * grid[v1, u0, c] + wd * grid[v1, u1, c])
                out[i, c] = np.float32(val)
        return out


# ---------------------------------------------------------------------------
# public dispatchers
# ---------------------------------------------------------------------------

def nearest_sqdist_brute(query: np.ndarray, ref: np.ndarray) -> np.ndarray:
    """Min squared distance from each query point to the ref set (brute)."""
    query = np.ascontiguousarray(query, dtype=np.float64)
    ref = np.ascontiguousarray(ref, dtype=np.float64)
    if USE_NUMBA:
        return _nearest_sqdist_brute_numba(query, ref)
    return _nearest_sqdist_brute_numpy(query, ref)


def nearest_sqdist(query: np.ndarray, ref: np.ndarray) -> np.ndarray:
    """Min squared distances; grid-accelerated for large reference sets.

    The grid path is exact (ring search with a conservative stop bound) and
    agrees bitwise with brute force.  Without numba the large-set path falls
    back to chunked brute force, which computes the same values.
    """
    query = np.ascontiguousarray(query, dtype=np.float64)
    ref = np.ascontiguousarray(ref, dtype=np.float64)
    if ref.shape[0] >= GRID_MIN_REF and USE_NUMBA:
        return _nearest_sqdist_grid(query, ref)
    return nearest_sqdist_brute(query, ref)


def bilinear_many(grid: np.ndarray, us: np.ndarray, vs: np.ndarray) -> np.ndarray:
    """Bilinear samples of an (h, w, C) float32 grid at N (u, v) positions.

    Coordinates address cell centers; out-of-range positions clamp to the
    border. Interpolation runs in float64, the result is float32 (N, C).
    """
    grid = np.ascontiguousarray(grid, dtype=np.float32)
    us = np.ascontiguousarray(us, dtype=np.float64)
    vs = np.ascontiguousarray(vs, dtype=np.float64)
    if USE_NUMBA:
        return _bilinear_many_numba(grid, us, vs)
    return _bilinear_many_numpy(grid, us, vs)
