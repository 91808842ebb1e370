"""Offline 3-approximation for range-fair k-center.

Pipeline: run the farthest-first traversal, binary-search the longest center
prefix that admits a quota-respecting replacement at half its selection gap,
then binary-search the smallest replacement radius for that prefix, and
finally top the replaced prefix up to k centers (curing lower-bound deficits
first). Output radius is at most 3x the fair optimum.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .core import (
    CenterSet,
    FairnessBounds,
    InfeasibleInstanceError,
    ProblemInstance,
    validate_instance,
)
from .fairshift import ShiftResult, collect_candidates, fair_shift, probe_candidates
from .gonzalez import GonzalezTrace, gonzalez

log = logging.getLogger(__name__)


@dataclass
class SolveStats:
    """Probe accounting and the shape of the accepted solution."""

    probes: int = 0
    prefix: int = -1
    shift_threshold: float = math.nan
    probe_log: list[tuple[int, bool]] = field(default_factory=list)


@dataclass
class HeuristicAllocation:
    """Equality allocation produced by the size-ordered greedy rule."""

    mode: str
    counts: np.ndarray


def prefix_radius(trace: GonzalezTrace, h: int) -> float:
    """Replacement radius for the first h centers: half the h-th selection gap.

    For h = 1 there is no gap yet; the probe radius falls back to the second
    selection's gap itself (so strictly-closer points than the farthest are
    all admitted), and to +inf when k = 1.
    """
    if h >= 2:
        return float(trace.sel_dist[h - 1]) / 2.0
    if trace.k >= 2:
        return float(trace.sel_dist[1])
    return math.inf


def _probe_prefix(
    trace: GonzalezTrace,
    instance: ProblemInstance,
    h: int,
    stats: SolveStats,
    sink=None,
) -> ShiftResult:
    pos, dist = trace.assignment_at_prefix(h)
    stats.probes += 1
    result = fair_shift(
        instance.dataset,
        trace.order[:h],
        pos,
        dist,
        prefix_radius(trace, h),
        instance.bounds,
        sink=sink,
    )
    stats.probe_log.append((h, result.feasible))
    return result


def find_max_prefix(
    trace: GonzalezTrace,
    instance: ProblemInstance,
    stats: SolveStats | None = None,
    sink=None,
) -> int:
    """Largest h such that the first h centers pass the replacement probe.

    Binary search over h; the returned h passed its probe and h+1 failed its
    own (when h < k). Returns 0 when even the single-center prefix fails.
    """
    stats = stats if stats is not None else SolveStats()
    k = trace.k
    if _probe_prefix(trace, instance, k, stats, sink).feasible:
        return k
    if not _probe_prefix(trace, instance, 1, stats, sink).feasible:
        return 0
    lo, hi = 1, k  # feasible at lo, infeasible at hi
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if _probe_prefix(trace, instance, mid, stats, sink).feasible:
            lo = mid
        else:
            hi = mid
    return lo


def scan_all_prefixes(trace: GonzalezTrace, instance: ProblemInstance) -> list[bool]:
    """Probe every prefix length (debug helper for monotonicity checks)."""
    stats = SolveStats()
    return [
        _probe_prefix(trace, instance, h, stats).feasible
        for h in range(1, trace.k + 1)
    ]


def minimize_shift_distance(
    trace: GonzalezTrace,
    instance: ProblemInstance,
    h: int,
    stats: SolveStats | None = None,
    sink=None,
) -> tuple[ShiftResult, float]:
    """Smallest replacement radius that still succeeds for the h-prefix.

    Candidates are collected once at the prefix radius; the search then runs
    over the sorted distinct witness distances (plus 0) with <= semantics.
    Feasibility at the largest threshold is guaranteed by the prefix search.
    """
    stats = stats if stats is not None else SolveStats()
    bounds = instance.bounds
    center_ids = trace.order[:h]
    pos, dist = trace.assignment_at_prefix(h)
    cands = collect_candidates(
        instance.dataset, center_ids, pos, dist, prefix_radius(trace, h)
    )
    thresholds = sorted({0.0} | {c.dist for c in cands})

    def probe(t: float) -> ShiftResult:
        stats.probes += 1
        subset = [c for c in cands if c.dist <= t]
        return probe_candidates(subset, bounds, center_ids, sink=sink)

    lo, hi = -1, len(thresholds) - 1  # infeasible below lo+1, feasible at hi
    best = probe(thresholds[hi])
    if not best.feasible:
        raise AssertionError("prefix accepted by search but infeasible at full radius")
    while hi - lo > 1:
        mid = (lo + hi) // 2
        result = probe(thresholds[mid])
        if result.feasible:
            hi = mid
            best = result
        else:
            lo = mid
    stats.shift_threshold = thresholds[hi]
    return best, thresholds[hi]


def complete_centers(
    chosen_ids,
    instance: ProblemInstance,
) -> CenterSet:
    """Grow a partial fair-feasible center set to a full fair one.

    First cures every lower-bound deficit with unused points of the deficient
    group, then pads to k wherever upper quotas leave room; both passes walk
    point ids in ascending order for determinism.
    """
    d, b = instance.dataset, instance.bounds
    chosen = sorted(int(c) for c in chosen_ids)
    used = set(chosen)
    if len(used) != len(chosen):
        raise ValueError("duplicate ids in partial center set")
    counts = np.bincount(d.groups[chosen], minlength=d.m) if chosen else np.zeros(d.m, dtype=np.int64)
    for g in range(d.m):
        need = int(b.lower[g] - counts[g])
        if need <= 0:
            continue
        for p in np.nonzero(d.groups == g)[0]:
            if need == 0:
                break
            p = int(p)
            if p in used:
                continue
            used.add(p)
            counts[g] += 1
            need -= 1
        if need:
            raise InfeasibleInstanceError("group %d too small to cure deficit" % g)
    for p in range(d.n):
        if len(used) == b.k:
            break
        g = int(d.groups[p])
        if p in used or counts[g] >= b.upper[g]:
            continue
        used.add(p)
        counts[g] += 1
    if len(used) != b.k:
        raise InfeasibleInstanceError("could not pad to k within upper bounds")
    return CenterSet.from_ids(d, used)


def solve_offline(
    instance: ProblemInstance,
    start: int = 0,
    stats: SolveStats | None = None,
    sink=None,
) -> CenterSet:
    """Range-fair k-center, offline. Deterministic given `start`."""
    validate_instance(instance)
    stats = stats if stats is not None else SolveStats()
    trace = gonzalez(instance.dataset, instance.bounds.k, start)
    h = find_max_prefix(trace, instance, stats, sink)
    stats.prefix = h
    if h == 0:
        log.warning("no prefix admits a replacement; building centers from quotas alone")
        chosen: list[int] = []
    else:
        shift, _ = minimize_shift_distance(trace, instance, h, stats, sink)
        chosen = [shift.replacement[int(c)] for c in trace.order[:h]]
    return complete_centers(chosen, instance)


def heuristic_allocation(instance: ProblemInstance, mode: str) -> HeuristicAllocation:
    """Greedy equality allocation: visit groups by size and max out each quota.

    mode "major" visits larger groups first, "minor" smaller groups first
    (ties on size toward the lower group id). Starting from the lower bounds,
    each visited group receives its full upper quota if the remaining budget
    allows, otherwise whatever budget is left.
    """
    if mode not in ("major", "minor"):
        raise ValueError("mode must be 'major' or 'minor'")
    b = instance.bounds
    sizes = instance.dataset.group_sizes
    counts = b.lower.astype(np.int64).copy()
    order = sorted(
        range(b.m), key=lambda g: (-sizes[g], g) if mode == "major" else (sizes[g], g)
    )
    for g in order:
        budget = b.k - int(counts.sum())
        if budget <= 0:
            break
        room = int(b.upper[g] - counts[g])
        counts[g] += room if room <= budget else budget
    if int(counts.sum()) != b.k:
        raise InfeasibleInstanceError("allocation cannot reach k within bounds")
    return HeuristicAllocation(mode=mode, counts=counts)


def solve_equality(
    instance: ProblemInstance,
    counts,
    start: int = 0,
    stats: SolveStats | None = None,
) -> CenterSet:
    """Solve with exact per-group center counts (the l = u special case)."""
    counts = np.asarray(counts, dtype=np.int64)
    pinned = ProblemInstance(
        dataset=instance.dataset,
        bounds=FairnessBounds(lower=counts, upper=counts, k=instance.bounds.k),
    )
    return solve_offline(pinned, start=start, stats=stats)
