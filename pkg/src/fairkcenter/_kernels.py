"""Hot numeric kernels: farthest-first traversal and max-min evaluation.

Two interchangeable backends compute identical results: numba-jitted loops
(default whenever numba imports) and pure numpy. Select explicitly with
FAIRKCENTER_BACKEND=numba|numpy. Both backends accumulate squared coordinate
differences in index order, so outputs match bitwise for small dimension
(numpy switches to blocked pairwise summation only beyond 8 elements).
"""

from __future__ import annotations

import os

import numpy as np

_REQUESTED = os.environ.get("FAIRKCENTER_BACKEND", "").strip().lower()
if _REQUESTED not in ("", "numba", "numpy"):
    raise ValueError(
        "FAIRKCENTER_BACKEND must be 'numba' or 'numpy', got %r" % _REQUESTED
    )

try:
    from numba import njit

    HAS_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba installed
    HAS_NUMBA = False

if _REQUESTED == "numba" and not HAS_NUMBA:
    raise ImportError("FAIRKCENTER_BACKEND=numba but numba is not importable")

USE_NUMBA = HAS_NUMBA if _REQUESTED == "" else _REQUESTED == "numba"


def backend() -> str:
    """Name of the backend the public aliases dispatch to."""
    return "numba" if USE_NUMBA else "numpy"


def traversal_numpy(coords, k, start):
    """Farthest-first traversal, numpy backend.

    Args:
        coords: (n, d) float64 array.
        k: number of centers to select, 1 <= k <= n.
        start: row index of the first center.

    Returns:
        order: (k,) row indices of the selected centers, in selection order.
        sel_dist: (k,) distance of each selected center to the ones before it;
            sel_dist[0] is +inf as a sentinel.
        next_dist: max-min distance once all k centers are placed (the gap the
            (k+1)-th selection would have).
        events: (point, iteration, dist) int64/int64/float64 arrays recording,
            in chronological order, every time a point's nearest center
            changed. Iteration i means "while center i was being placed", so
            the new nearest center is order[i].

    Ties in the farthest-point choice break toward the lowest row index.
    """
    n = coords.shape[0]
    order = np.empty(k, dtype=np.int64)
    sel_dist = np.empty(k, dtype=np.float64)
    sel_dist[0] = np.inf
    mind = np.full(n, np.inf)
    ev_p, ev_i, ev_d = [], [], []
    cur = int(start)
    best = 0.0
    for it in range(k):
        order[it] = cur
        diff = coords - coords[cur]
        dist = np.sqrt((diff * diff).sum(axis=1))
        upd = dist < mind
        mind[upd] = dist[upd]
        rows = np.nonzero(upd)[0]
        ev_p.append(rows)
        ev_i.append(np.full(rows.shape[0], it, dtype=np.int64))
        ev_d.append(dist[rows])
        arg = int(np.argmax(mind))
        best = float(mind[arg])
        if it + 1 < k:
            sel_dist[it + 1] = best
            cur = arg
    events = (
        np.concatenate(ev_p),
        np.concatenate(ev_i),
        np.concatenate(ev_d),
    )
    return order, sel_dist, best, events


if HAS_NUMBA:

    @njit(cache=True)
    def _traversal_jit(coords, k, start):
        n, d = coords.shape
        order = np.empty(k, dtype=np.int64)
        sel_dist = np.empty(k, dtype=np.float64)
        sel_dist[0] = np.inf
        mind = np.full(n, np.inf)
        cap = 2 * n + 16
        ev_p = np.empty(cap, dtype=np.int64)
        ev_i = np.empty(cap, dtype=np.int64)
        ev_d = np.empty(cap, dtype=np.float64)
        ne = 0
        cur = start
        best = 0.0
        for it in range(k):
            order[it] = cur
            best = -1.0
            arg = -1
            for p in range(n):
                dist = 0.0
                for j in range(d):
                    diff = coords[p, j] - coords[cur, j]
                    dist += diff * diff
                dist = np.sqrt(dist)
                if dist < mind[p]:
                    mind[p] = dist
                    if ne == cap:
                        cap *= 2
                        tmp_p = np.empty(cap, dtype=np.int64)
                        tmp_i = np.empty(cap, dtype=np.int64)
                        tmp_d = np.empty(cap, dtype=np.float64)
                        tmp_p[:ne] = ev_p
                        tmp_i[:ne] = ev_i
                        tmp_d[:ne] = ev_d
                        ev_p, ev_i, ev_d = tmp_p, tmp_i, tmp_d
                    ev_p[ne] = p
                    ev_i[ne] = it
                    ev_d[ne] = dist
                    ne += 1
                if mind[p] > best:
                    best = mind[p]
                    arg = p
            if it + 1 < k:
                sel_dist[it + 1] = best
                cur = arg
        return order, sel_dist, best, ev_p[:ne].copy(), ev_i[:ne].copy(), ev_d[:ne].copy()

    def traversal_numba(coords, k, start):
        """Farthest-first traversal, numba backend. Same contract as traversal_numpy."""
        order, sel_dist, best, ev_p, ev_i, ev_d = _traversal_jit(
            np.ascontiguousarray(coords), k, int(start)
        )
        return order, sel_dist, float(best), (ev_p, ev_i, ev_d)

else:  # pragma: no cover
    traversal_numba = None


def max_min_dist_numpy(coords, center_coords, chunk=1024):
    """max over rows of coords of the min distance to any center row (numpy)."""
    best = 0.0
    n = coords.shape[0]
    for lo in range(0, n, chunk):
        block = coords[lo : lo + chunk]
        diff = block[:, None, :] - center_coords[None, :, :]
        dist = np.sqrt((diff * diff).sum(axis=2))
        val = float(dist.min(axis=1).max())
        if val > best:
            best = val
    return best


if HAS_NUMBA:

    @njit(cache=True)
    def _max_min_jit(coords, center_coords):
        n, d = coords.shape
        c = center_coords.shape[0]
        best = 0.0
        for p in range(n):
            mind = np.inf
            for i in range(c):
                dist = 0.0
                for j in range(d):
                    diff = coords[p, j] - center_coords[i, j]
                    dist += diff * diff
                dist = np.sqrt(dist)
                if dist < mind:
                    mind = dist
            if mind > best:
                best = mind
        return best

    def max_min_dist_numba(coords, center_coords):
        """max over rows of coords of the min distance to any center row (numba)."""
        return float(
            _max_min_jit(
                np.ascontiguousarray(coords), np.ascontiguousarray(center_coords)
            )
        )

else:  # pragma: no cover
    max_min_dist_numba = None


if USE_NUMBA:
    traversal = traversal_numba
    max_min_dist = max_min_dist_numba
else:
    traversal = traversal_numpy
    max_min_dist = max_min_dist_numpy
