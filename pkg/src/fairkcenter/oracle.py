"""Brute-force reference implementations.

These are deliberately independent of the solver code paths: distances come
from plain double loops, search is exhaustive enumeration, and the flow
reference is a shortest-augmenting-path routine on a dict-of-dicts residual.
Each oracle guards its input size and raises OracleScaleError beyond it.
They ship in the library (not only in tests) so the CLI can expose them.
"""

from __future__ import annotations

import collections
import itertools
import math
from dataclasses import dataclass

import numpy as np

from .core import Dataset, FairnessBounds, OracleScaleError, ProblemInstance

MAX_SUBSETS = 10**7
MAX_SHIFT_CENTERS = 8
MAX_REF_EDGES = 10**4


def scan_objective(dataset: Dataset, ids) -> float:
    """k-center radius by exhaustive double loop (no shared kernel code)."""
    ids = [int(i) for i in ids]
    if not ids:
        raise ValueError("empty center set")
    coords = dataset.coords
    worst = 0.0
    for p in range(dataset.n):
        best = math.inf
        for c in ids:
            d = math.sqrt(float(((coords[p] - coords[c]) ** 2).sum()))
            if d < best:
                best = d
        if best > worst:
            worst = best
    return worst


@dataclass(frozen=True)
class ExactSolution:
    ids: tuple[int, ...]
    objective: float


def brute_force_optimal(instance: ProblemInstance) -> ExactSolution:
    """Exact optimum by enumerating every fair k-subset.

    Ties on the objective break toward the lexicographically smallest id
    tuple, which enumeration order provides for free. Guarded at C(n, k)
    <= 10^7 subsets.
    """
    d, b = instance.dataset, instance.bounds
    n, k = d.n, b.k
    if math.comb(n, k) > MAX_SUBSETS:
        raise OracleScaleError("oracle scale exceeded: C(%d, %d) subsets" % (n, k))
    # Distance matrix once; subsets then reduce over columns.
    diff = d.coords[:, None, :] - d.coords[None, :, :]
    dmat = np.sqrt((diff * diff).sum(axis=2))
    best_ids: tuple[int, ...] | None = None
    best_val = math.inf
    groups = d.groups
    lower, upper = b.lower, b.upper
    for subset in itertools.combinations(range(n), k):
        counts = np.bincount(groups[list(subset)], minlength=d.m)
        if np.any(counts < lower) or np.any(counts > upper):
            continue
        val = float(dmat[:, subset].min(axis=1).max())
        if val < best_val:
            best_val = val
            best_ids = subset
    if best_ids is None:
        raise OracleScaleError("no fair subset exists")
    return ExactSolution(ids=best_ids, objective=best_val)


def brute_force_fair_shift(
    dataset: Dataset,
    center_ids,
    d_prime: float,
    bounds: FairnessBounds,
) -> bool:
    """Does an injective witness assignment exist? Checked by enumeration.

    Each center may take any point strictly within d' of it (not just points
    assigned to it); the closed-form requirements are then checked directly:
    injectivity, per-group upper quotas, and deficit sum <= k - |A|.
    """
    center_ids = [int(c) for c in center_ids]
    if len(center_ids) > MAX_SHIFT_CENTERS:
        raise OracleScaleError("fair-shift oracle limited to %d centers" % MAX_SHIFT_CENTERS)
    if len(center_ids) > bounds.k:
        return False
    coords = dataset.coords
    options = []
    for c in center_ids:
        near = []
        for p in range(dataset.n):
            d = math.sqrt(float(((coords[p] - coords[c]) ** 2).sum()))
            if d < d_prime:
                near.append(p)
        if not near:
            return False
        options.append(near)
    budget = bounds.k - len(center_ids)
    for pick in itertools.product(*options):
        if len(set(pick)) != len(pick):
            continue
        counts = np.bincount(dataset.groups[list(pick)], minlength=bounds.m)
        if np.any(counts > bounds.upper):
            continue
        deficit = int(np.maximum(bounds.lower - counts, 0).sum())
        if deficit <= budget:
            return True
    return False


def brute_force_lower_bounded_flow(
    candidate_groups: list[list[int]],
    bounds: FairnessBounds,
) -> bool:
    """Feasibility of the replacement problem stated with true lower bounds.

    candidate_groups[i] lists the group labels center i can draw a witness
    from. Enumerates every group assignment together with every split of the
    k - |A| free picks, requiring each group's total to land inside
    [l_f, u_f]. This is the integral-flow formulation the folded network is
    supposed to be equivalent to.
    """
    a = len(candidate_groups)
    if a > bounds.k:
        return False
    m = bounds.m
    free = bounds.k - a

    def splits(remaining, parts):
        if parts == 1:
            yield (remaining,)
            return
        for x in range(remaining + 1):
            for rest in splits(remaining - x, parts - 1):
                yield (x,) + rest

    for assign in itertools.product(*candidate_groups) if a else [()]:
        counts = np.bincount(np.asarray(assign, dtype=np.int64), minlength=m) if a else np.zeros(m, dtype=np.int64)
        for slack in splits(free, m):
            total = counts + np.asarray(slack, dtype=np.int64)
            if np.all(total >= bounds.lower) and np.all(total <= bounds.upper):
                return True
    return False


def reference_max_flow(net) -> int:
    """Edmonds-Karp max flow on a residual copy; the network is not mutated."""
    if len(net.to) // 2 > MAX_REF_EDGES:
        raise OracleScaleError("reference flow limited to %d edges" % MAX_REF_EDGES)
    residual: dict[int, dict[int, int]] = collections.defaultdict(lambda: collections.defaultdict(int))
    for ei in net.forward_edges():
        residual[net.frm[ei]][net.to[ei]] += net.orig[ei]
    source, sink = 0, 3
    total = 0
    while True:
        parent = {source: None}
        queue = collections.deque([source])
        while queue and sink not in parent:
            u = queue.popleft()
            for v, c in residual[u].items():
                if c > 0 and v not in parent:
                    parent[v] = u
                    queue.append(v)
        if sink not in parent:
            return total
        push = math.inf
        v = sink
        while parent[v] is not None:
            u = parent[v]
            push = min(push, residual[u][v])
            v = u
        v = sink
        while parent[v] is not None:
            u = parent[v]
            residual[u][v] -= push
            residual[v][u] += push
            v = u
        total += push
