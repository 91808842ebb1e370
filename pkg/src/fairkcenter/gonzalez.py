"""Farthest-first traversal with per-prefix assignment history.

The traversal picks centers greedily: each new center is the point farthest
from the ones already chosen (ties to the lowest id). Selection gaps are
non-increasing, and the first i centers are a 2-approximation for the
unconstrained i-center problem. Every nearest-center change is recorded as an
event so the assignment under any prefix of centers can be answered later by
binary search instead of a rescan.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .core import Dataset


@dataclass(frozen=True)
class GonzalezTrace:
    """Result of a traversal over a point set (possibly a subset of a dataset).

    ids maps local rows to dataset point ids; order/order_rows give the chosen
    centers in selection order (global ids / local rows). sel_dist[i] is the
    distance of the i-th chosen center to its predecessors (+inf for i = 0),
    next_dist the max-min distance after all k selections. Events are stored
    once, CSR-indexed by local row; full_order covers every row of the subset
    even when the trace itself is truncated to k centers.
    """

    ids: np.ndarray
    order: np.ndarray
    order_rows: np.ndarray
    sel_dist: np.ndarray
    next_dist: float
    ev_key: np.ndarray
    ev_dist: np.ndarray
    ev_offsets: np.ndarray
    k: int
    n: int
    full_order: np.ndarray

    @property
    def gaps(self) -> np.ndarray:
        """Selection gaps d_2..d_k (paper-style 1-based naming), non-increasing."""
        return self.sel_dist[1:]

    def events_for(self, row: int):
        """(iteration, dist) pairs for one local row, iterations increasing."""
        lo, hi = self.ev_offsets[row], self.ev_offsets[row + 1]
        iters = self.ev_key[lo:hi] - row * (self.k + 1)
        return list(zip(iters.tolist(), self.ev_dist[lo:hi].tolist()))

    def assignment_at_prefix(self, h: int):
        """Nearest-center assignment if only the first h centers existed.

        Returns (center_pos, dist): per local row, the index into `order` of
        its nearest center among the first h, and the distance to it. Runs one
        vectorized binary search over the event log, O(n log nk).
        """
        if not 1 <= h <= self.k:
            raise ValueError("prefix length out of range")
        queries = np.arange(self.n, dtype=np.int64) * (self.k + 1) + (h - 1)
        idx = np.searchsorted(self.ev_key, queries, side="right") - 1
        center_pos = self.ev_key[idx] % (self.k + 1)
        return center_pos.astype(np.int64), self.ev_dist[idx]


def _build_trace(coords, k, start_row, ids, run_full=False) -> GonzalezTrace:
    n = coords.shape[0]
    run_k = n if run_full else k
    order_rows, sel_dist, next_dist, (ev_p, ev_i, ev_d) = _kernels.traversal(
        coords, run_k, start_row
    )
    full_order = ids[order_rows]
    if run_full and k < n:
        next_dist = float(sel_dist[k])
        keep = ev_i < k
        ev_p, ev_i, ev_d = ev_p[keep], ev_i[keep], ev_d[keep]
        order_rows = order_rows[:k]
        sel_dist = sel_dist[:k]
    if k > 1 and np.any(np.diff(sel_dist[1:]) > 0):
        raise AssertionError("selection gaps must be non-increasing")
    # CSR by row; events are already iteration-ordered, stable sort keeps that.
    perm = np.argsort(ev_p, kind="stable")
    ev_key = ev_p[perm] * (k + 1) + ev_i[perm]
    ev_dist = ev_d[perm]
    counts = np.bincount(ev_p, minlength=n)
    ev_offsets = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(counts, out=ev_offsets[1:])
    return GonzalezTrace(
        ids=ids,
        order=ids[order_rows],
        order_rows=order_rows,
        sel_dist=sel_dist,
        next_dist=float(next_dist),
        ev_key=ev_key,
        ev_dist=ev_dist,
        ev_offsets=ev_offsets,
        k=k,
        n=n,
        full_order=full_order,
    )


def gonzalez(dataset: Dataset, k: int, start: int = 0) -> GonzalezTrace:
    """Traversal over a whole dataset; `start` is the first center's point id."""
    if not 1 <= k <= dataset.n:
        raise ValueError("k must lie in [1, n]")
    if not 0 <= start < dataset.n:
        raise ValueError("start id out of range")
    ids = np.arange(dataset.n, dtype=np.int64)
    return _build_trace(dataset.coords, k, int(start), ids)


def gonzalez_on_subset(dataset: Dataset, subset_ids, limit: int) -> GonzalezTrace:
    """Traversal restricted to `subset_ids`, truncated to min(limit, |subset|) centers.

    The trace's full_order still lists every subset point in selection order,
    which the streaming respawn needs. The first subset id seeds the run.
    """
    ids = np.asarray(subset_ids, dtype=np.int64)
    if ids.size == 0:
        raise ValueError("empty subset")
    k = min(int(limit), ids.size)
    if k < 1:
        raise ValueError("limit must be positive")
    return _build_trace(dataset.coords[ids], k, 0, ids, run_full=True)


def traversal_on_coords(coords: np.ndarray, k: int, ids=None, run_full=True) -> GonzalezTrace:
    """Traversal over a bare coordinate array (streaming pivots have no Dataset)."""
    coords = np.ascontiguousarray(coords, dtype=np.float64)
    n = coords.shape[0]
    if ids is None:
        ids = np.arange(n, dtype=np.int64)
    else:
        ids = np.asarray(ids, dtype=np.int64)
    k = min(int(k), n)
    return _build_trace(coords, k, 0, ids, run_full=run_full)
