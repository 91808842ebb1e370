"""One-pass streaming solver for range-fair k-center.

A ladder of geometric radius guesses is kept live. Each rung maintains a set
of pivots more than twice its guess apart; every arriving point is absorbed
by the first pivot within range (donating its group to the pivot's small
per-group witness stash) or becomes a new pivot. A per-rung reserve keeps up
to u_i points of each group for quota repair. When a rung accumulates more
than k pivots, the base guess provably grew: the ladder is re-anchored and
fresh rungs are respawned from the smallest rung's pivots. At stream end, the
smallest rung whose pivots can be consolidated and quota-shifted yields the
answer; if all fail, the offline solver runs on the smallest rung's stored
points. Memory stays at O((km + sum u_i) * ladder length) points.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .core import (
    CenterSet,
    Dataset,
    DegenerateStreamError,
    FairnessBounds,
    InfeasibleInstanceError,
    ProblemInstance,
)
from .fairshift import ShiftCandidate, ShiftResult, min_pairwise_distance, probe_candidates
from .gonzalez import traversal_on_coords
from .offline import solve_offline

log = logging.getLogger(__name__)


def guess_ladder_length(eps: float) -> int:
    """Number of extra rungs above the base guess: least b with (1+eps)^b
    covering the (2+eps)/eps span of useful guesses."""
    target = (2.0 + eps) / eps
    b = max(0, math.ceil(math.log(target) / math.log(1.0 + eps)))
    while (1.0 + eps) ** b < target:
        b += 1
    while b > 0 and (1.0 + eps) ** (b - 1) >= target:
        b -= 1
    return b


def least_exponent(value: float, eps: float) -> int:
    """Smallest integer e with (1+eps)^e >= value."""
    if value <= 0:
        raise ValueError("value must be positive")
    e = math.ceil(math.log(value) / math.log(1.0 + eps))
    while (1.0 + eps) ** e < value:
        e += 1
    while (1.0 + eps) ** (e - 1) >= value:
        e -= 1
    return e


@dataclass
class StreamStats:
    points_read: int = 0
    peak_stored: int = 0
    maintains: int = 0
    respawns: int = 0
    beta: int = 0
    fallback_used: bool = False
    winning_exponent: int | None = None
    short_stream: bool = False


class GuessInstance:
    """State of one radius guess: pivots, per-pivot witness stashes, reserve.

    Point payloads (coords row, group) are held once per instance in `store`
    with reference counts; stored_refs equals |pivots| + sum |stash| +
    |reserve| at all times, the quantity the memory bound speaks about.
    """

    __slots__ = (
        "delta",
        "exponent",
        "dim",
        "upper",
        "pivots",
        "pivot_coords",
        "repl",
        "reserve",
        "store",
        "refs",
        "stored_refs",
    )

    def __init__(self, delta: float, exponent: int, dim: int, upper: np.ndarray):
        self.delta = delta
        self.exponent = exponent
        self.dim = dim
        self.upper = upper
        self.pivots: list[int] = []
        self.pivot_coords = np.empty((8, dim), dtype=np.float64)
        self.repl: dict[int, dict[int, int]] = {}
        self.reserve: list[set[int]] = [set() for _ in range(upper.shape[0])]
        self.store: dict[int, tuple[np.ndarray, int]] = {}
        self.refs: dict[int, int] = {}
        self.stored_refs = 0

    def _add_ref(self, pid: int, coords: np.ndarray, group: int) -> None:
        if pid in self.refs:
            self.refs[pid] += 1
        else:
            self.refs[pid] = 1
            self.store[pid] = (coords, group)
        self.stored_refs += 1

    def _drop_ref(self, pid: int) -> None:
        left = self.refs[pid] - 1
        if left == 0:
            del self.refs[pid]
            del self.store[pid]
        else:
            self.refs[pid] = left
        self.stored_refs -= 1

    def group_of(self, pid: int) -> int:
        return self.store[pid][1]

    def coords_of(self, pid: int) -> np.ndarray:
        return self.store[pid][0]

    def seed_reserve(self, old: "GuessInstance") -> None:
        for g, members in enumerate(old.reserve):
            for pid in members:
                coords, group = old.store[pid]
                self.reserve[g].add(pid)
                self._add_ref(pid, coords, group)

    def process(self, pid: int, coords: np.ndarray, group: int, incoming) -> None:
        """Absorb one arrival (a stream point or a respawned pivot).

        incoming lists (id, coords, group) payloads, at most one per group;
        for a plain stream point it is just the point itself. The first pivot
        within twice the guess absorbs them (existing stash entries win group
        collisions); otherwise the arrival becomes a pivot carrying them.
        Afterwards every payload is offered to the reserve, capped per group.
        """
        npiv = len(self.pivots)
        target = None
        if npiv:
            diff = self.pivot_coords[:npiv] - coords
            dists = np.sqrt((diff * diff).sum(axis=1))
            hits = np.nonzero(dists <= 2.0 * self.delta)[0]
            if hits.size:
                target = self.pivots[int(hits[0])]
        if target is not None:
            stash = self.repl[target]
            for qid, qcoords, qgroup in incoming:
                if qgroup not in stash:
                    stash[qgroup] = qid
                    self._add_ref(qid, qcoords, qgroup)
        else:
            if npiv == self.pivot_coords.shape[0]:
                grown = np.empty((2 * npiv, self.dim), dtype=np.float64)
                grown[:npiv] = self.pivot_coords
                self.pivot_coords = grown
            self.pivot_coords[npiv] = coords
            self.pivots.append(pid)
            self._add_ref(pid, coords, group)
            stash = {}
            for qid, qcoords, qgroup in incoming:
                if qgroup not in stash:
                    stash[qgroup] = qid
                    self._add_ref(qid, qcoords, qgroup)
            self.repl[pid] = stash
        for qid, qcoords, qgroup in incoming:
            pool = self.reserve[qgroup]
            if qid not in pool and len(pool) < int(self.upper[qgroup]):
                pool.add(qid)
                self._add_ref(qid, qcoords, qgroup)

    def stash_payload(self, pivot: int):
        """Materialize a pivot's stash as (id, coords, group) rows, group order."""
        return [
            (qid, self.store[qid][0], g)
            for g, qid in sorted(self.repl[pivot].items())
        ]

    def check_invariants(self, k: int, eps: float) -> None:
        npiv = len(self.pivots)
        if npiv > 2 * k:
            raise AssertionError("pivot count exceeded 2k between maintenance points")
        coords = self.pivot_coords[:npiv]
        if npiv >= 2 and min_pairwise_distance(coords) <= 2.0 * self.delta:
            raise AssertionError("pivots closer than twice the guess")
        radius = (2.0 + eps) * self.delta * (1.0 + 1e-9)
        refs = 0
        for i, pivot in enumerate(self.pivots):
            stash = self.repl[pivot]
            refs += 1 + len(stash)
            for g, qid in stash.items():
                if self.store[qid][1] != g:
                    raise AssertionError("stash entry filed under the wrong group")
                d = math.sqrt(float(((self.store[qid][0] - coords[i]) ** 2).sum()))
                if d > radius:
                    raise AssertionError("stash member outside the pivot radius")
        for g, pool in enumerate(self.reserve):
            if len(pool) > int(self.upper[g]):
                raise AssertionError("reserve exceeds the group quota")
            refs += len(pool)
        if refs != self.stored_refs:
            raise AssertionError("stored-point accounting drifted")


class GuessLadder:
    """The live set of guess instances plus the base-distance bookkeeping."""

    def __init__(self, bounds: FairnessBounds, eps: float, dim: int, base: float):
        if not 0.0 < eps <= 1.0:
            raise ValueError("eps must lie in (0, 1]")
        if base <= 0.0:
            raise DegenerateStreamError("degenerate prefix")
        self.bounds = bounds
        self.eps = eps
        self.dim = dim
        self.k = bounds.k
        self.tau = base
        self.beta = guess_ladder_length(eps)
        self.e_min = least_exponent(base, eps)
        self.instances: dict[int, GuessInstance] = {}
        for e in range(self.e_min, self.e_min + self.beta + 1):
            self.instances[e] = GuessInstance(
                (1.0 + eps) ** e, e, dim, bounds.upper
            )
        self.stats = StreamStats(beta=self.beta)

    def total_refs(self) -> int:
        return sum(inst.stored_refs for inst in self.instances.values())

    def _note_peak(self) -> None:
        refs = self.total_refs()
        if refs > self.stats.peak_stored:
            self.stats.peak_stored = refs

    def process(self, pid: int, coords: np.ndarray, group: int) -> None:
        payload = [(pid, coords, group)]
        for inst in self.instances.values():
            inst.process(pid, coords, group, payload)
        self._note_peak()

    def oversized(self) -> bool:
        return any(len(inst.pivots) > self.k for inst in self.instances.values())

    def maintain(self) -> bool:
        """Re-anchor the ladder if any rung holds more than k pivots.

        The new base is half the (k+1)-th selection gap of a traversal over
        each oversized rung's pivots (the largest such value, never below the
        current base). Rungs below the new base are dropped; new rungs are
        respawned from the old smallest rung by replaying its pivots, first
        k+1 in traversal selection order, the rest in creation order.
        """
        oversized = [inst for inst in self.instances.values() if len(inst.pivots) > self.k]
        if not oversized:
            return False
        self.stats.maintains += 1
        tau_r = self.tau
        for inst in oversized:
            npiv = len(inst.pivots)
            trace = traversal_on_coords(
                inst.pivot_coords[:npiv], self.k + 1, ids=np.asarray(inst.pivots)
            )
            half_gap = float(trace.sel_dist[self.k]) / 2.0
            if half_gap <= inst.delta:
                raise AssertionError("pivot separation must force the base upward")
            if half_gap > tau_r:
                tau_r = half_gap
        self.tau = tau_r
        old_e_min = self.e_min
        seed = self.instances[old_e_min]
        self.e_min = least_exponent(tau_r, self.eps)
        if self.e_min <= old_e_min:
            raise AssertionError("maintenance must raise the base exponent")
        wanted = range(self.e_min, self.e_min + self.beta + 1)
        order = self._respawn_order(seed)
        fresh: dict[int, GuessInstance] = {}
        for e in wanted:
            if e in self.instances:
                fresh[e] = self.instances[e]
                continue
            inst = GuessInstance((1.0 + self.eps) ** e, e, self.dim, self.bounds.upper)
            inst.seed_reserve(seed)
            for pivot in order:
                coords, group = seed.store[pivot]
                inst.process(pivot, coords, group, seed.stash_payload(pivot))
            if len(inst.pivots) > self.k:
                raise AssertionError("respawned rung exceeds k pivots")
            self.stats.respawns += 1
            fresh[e] = inst
        self.instances = fresh
        self._note_peak()
        return True

    def _respawn_order(self, seed: GuessInstance) -> list[int]:
        npiv = len(seed.pivots)
        trace = traversal_on_coords(
            seed.pivot_coords[:npiv], min(self.k + 1, npiv), ids=np.asarray(seed.pivots)
        )
        first = [int(x) for x in trace.full_order[: self.k + 1]]
        lead = set(first)
        return first + [p for p in seed.pivots if p not in lead]

    def merge_centers(self, inst: GuessInstance) -> tuple[ShiftResult, list[ShiftCandidate]]:
        """Consolidate one rung's pivots and probe the quota shift.

        Greedy farthest-first keeps pivots while they are more than
        (6+2eps)*delta apart; every pivot donates its stash to the one kept
        pivot within (3+eps)*delta (witness distances are measured to the
        donating pivot, not the stored point). The probe radius is half the
        minimum pairwise distance of the kept set.
        """
        eps, k, bounds = self.eps, self.k, self.bounds
        npiv = len(inst.pivots)
        coords = inst.pivot_coords[:npiv]
        trace = traversal_on_coords(coords, npiv, ids=np.asarray(inst.pivots))
        threshold = (6.0 + 2.0 * eps) * inst.delta
        q = 1
        while q < npiv and float(trace.sel_dist[q]) > threshold:
            q += 1
        if q > k:
            return (
                ShiftResult(False, {}, np.zeros(bounds.m, dtype=np.int64), 0),
                [],
            )
        kept_rows = trace.order_rows[:q]
        kept_ids = [int(x) for x in trace.order[:q]]
        kept_coords = coords[kept_rows]
        diff = coords[:, None, :] - kept_coords[None, :, :]
        dists = np.sqrt((diff * diff).sum(axis=2))
        donate_limit = (3.0 + eps) * inst.delta
        contributions: list[list[tuple[float, int, int]]] = [[] for _ in range(q)]
        for row in range(npiv):
            eligible = np.nonzero(dists[row] <= donate_limit)[0]
            if eligible.size == 0:
                continue
            pos = int(eligible[np.argmin(dists[row][eligible])])
            contributions[pos].append((float(dists[row][pos]), row, inst.pivots[row]))
        candidates: list[ShiftCandidate] = []
        for pos in range(q):
            taken: set[int] = set()
            for dist, _, pivot in sorted(contributions[pos], key=lambda t: (t[0], t[1])):
                for group, member in sorted(inst.repl[pivot].items()):
                    if group not in taken:
                        taken.add(group)
                        candidates.append(
                            ShiftCandidate(
                                center=kept_ids[pos],
                                group=group,
                                witness=member,
                                dist=dist,
                            )
                        )
        result = probe_candidates(candidates, bounds, kept_ids)
        return result, candidates

    def _complete_from_reserve(self, inst: GuessInstance, witnesses: list[int]) -> CenterSet:
        bounds = self.bounds
        chosen = set(witnesses)
        if len(chosen) != len(witnesses):
            raise AssertionError("replacement produced duplicate witnesses")
        counts = np.zeros(bounds.m, dtype=np.int64)
        for pid in chosen:
            counts[inst.group_of(pid)] += 1
        for g in range(bounds.m):
            need = int(bounds.lower[g]) - int(counts[g])
            for pid in sorted(inst.reserve[g]):
                if need <= 0:
                    break
                if pid in chosen:
                    continue
                chosen.add(pid)
                counts[g] += 1
                need -= 1
            if need > 0:
                raise InfeasibleInstanceError("reserve cannot cure group %d" % g)
        if len(chosen) < bounds.k:
            pool = sorted(set().union(*inst.reserve) - chosen)
            for pid in pool:
                if len(chosen) == bounds.k:
                    break
                g = inst.group_of(pid)
                if counts[g] < bounds.upper[g]:
                    chosen.add(pid)
                    counts[g] += 1
        if len(chosen) != bounds.k:
            raise InfeasibleInstanceError("reserve cannot pad the center set to k")
        return CenterSet(ids=np.asarray(sorted(chosen), dtype=np.int64), per_group=counts)

    def finalize(self) -> CenterSet:
        """Answer at stream end: smallest rung whose merge succeeds, else the
        offline solver over the smallest rung's stored points."""
        for e in sorted(self.instances):
            inst = self.instances[e]
            result, _ = self.merge_centers(inst)
            if result.feasible:
                self.stats.winning_exponent = e
                witnesses = [result.replacement[c] for c in sorted(result.replacement)]
                return self._complete_from_reserve(inst, witnesses)
        self.stats.fallback_used = True
        log.info("all rungs failed the quota shift; solving offline on stored points")
        inst = self.instances[self.e_min]
        ids = sorted(inst.store)
        coords = np.stack([inst.store[pid][0] for pid in ids])
        groups = np.asarray([inst.store[pid][1] for pid in ids], dtype=np.int64)
        sub = Dataset(coords=coords, groups=groups, m=self.bounds.m)
        solution = solve_offline(ProblemInstance(dataset=sub, bounds=self.bounds), start=0)
        id_map = np.asarray(ids, dtype=np.int64)
        global_ids = id_map[solution.ids]
        return CenterSet(ids=global_ids, per_group=solution.per_group)

    def check_invariants(self) -> None:
        for inst in self.instances.values():
            inst.check_invariants(self.k, self.eps)


def _normalize_point(item):
    if hasattr(item, "coords"):
        return int(item.id), np.array(item.coords, dtype=np.float64), int(item.group)
    pid, coords, group = item
    return int(pid), np.array(coords, dtype=np.float64), int(group)


def _short_stream_solution(points, bounds: FairnessBounds) -> CenterSet:
    if len(points) != bounds.k:
        raise InfeasibleInstanceError(
            "stream ended with %d points, need k=%d" % (len(points), bounds.k)
        )
    counts = np.zeros(bounds.m, dtype=np.int64)
    for _, _, g in points:
        counts[g] += 1
    if np.any(counts < bounds.lower) or np.any(counts > bounds.upper):
        raise InfeasibleInstanceError("short stream violates the quotas")
    ids = np.asarray(sorted(p for p, _, _ in points), dtype=np.int64)
    return CenterSet(ids=ids, per_group=counts)


def stream_solve(
    points,
    bounds: FairnessBounds,
    eps: float = 0.1,
    dedup: bool = False,
) -> tuple[CenterSet, StreamStats]:
    """One-pass solve over an iterator of (id, coords, group) or PointRecord.

    The iterator is consumed exactly once. With dedup=True, arrivals during
    the initial prefix whose coordinates and group match an already-seen
    prefix point are coalesced (the prefix keeps filling from the stream);
    otherwise a zero base distance raises DegenerateStreamError.
    """
    if not 0.0 < eps <= 1.0:
        raise ValueError("eps must lie in (0, 1]")
    if bounds.k < 1:
        raise InfeasibleInstanceError("k must be positive")
    if np.any(bounds.lower < 0) or np.any(bounds.lower > bounds.upper):
        raise InfeasibleInstanceError("malformed quota ranges")
    if int(bounds.lower.sum()) > bounds.k or int(bounds.upper.sum()) < bounds.k:
        raise InfeasibleInstanceError("quota ranges cannot reach k")
    it = iter(points)
    k = bounds.k
    prefix: list[tuple[int, np.ndarray, int]] = []
    read = 0
    for item in it:
        pid, coords, group = _normalize_point(item)
        read += 1
        if dedup and any(
            g == group and np.array_equal(c, coords) for _, c, g in prefix
        ):
            continue
        prefix.append((pid, coords, group))
        if len(prefix) == k + 1:
            break
    if len(prefix) < k + 1:
        stats = StreamStats(points_read=read, short_stream=True)
        return _short_stream_solution(prefix, bounds), stats
    base = min_pairwise_distance(np.stack([c for _, c, _ in prefix])) / 2.0
    if base == 0.0:
        raise DegenerateStreamError("degenerate prefix")
    ladder = GuessLadder(bounds, eps, prefix[0][1].shape[0], base)
    for pid, coords, group in prefix:
        ladder.process(pid, coords, group)
    since_prefix = 0
    for item in it:
        pid, coords, group = _normalize_point(item)
        read += 1
        since_prefix += 1
        ladder.process(pid, coords, group)
        if since_prefix % k == 0:
            ladder.maintain()
    ladder.maintain()
    solution = ladder.finalize()
    ladder.stats.points_read = read
    stats = ladder.stats
    return solution, stats
