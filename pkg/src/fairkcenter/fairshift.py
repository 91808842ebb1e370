"""Quota-respecting center replacement via max flow.

Given tentative centers A whose radius-d' balls are pairwise disjoint, decide
whether each a in A can be swapped for a witness point within distance d' such
that the witness multiset respects the per-group upper quotas and leaves
enough slack (k - |A| free picks) to cure every lower-quota deficit. The
decision is a max-flow computation on a small four-layer network; the
construction folds the lower bounds away so a plain max flow suffices:
feasible iff the max flow reaches k + sum(l).

Vertex layout: source s, slack node for free picks, a relay collecting the
optional part of each group quota, sink t, one vertex per center, one per
group. Candidate edges (center -> group) are labeled with the witness point.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import Dataset, FairnessBounds

#: fixed vertex ids
S, VC, TP, T = 0, 1, 2, 3


@dataclass(frozen=True)
class ShiftCandidate:
    """A witness offer: point `witness` (of `group`) can stand in for `center`."""

    center: int
    group: int
    witness: int
    dist: float


@dataclass
class ShiftResult:
    """Outcome of one replacement probe.

    feasible is True iff the flow reached k + sum(l); then replacement maps
    each center id to its witness id and slack[i] counts the free picks the
    flow reserved for group i (used later to cure lower-bound deficits).
    """

    feasible: bool
    replacement: dict[int, int]
    slack: np.ndarray
    max_flow: int


class FlowNetwork:
    """Adjacency-list flow network over the fixed four-layer vertex layout."""

    def __init__(self, num_centers: int, num_groups: int, center_ids=None):
        self.num_centers = num_centers
        self.num_groups = num_groups
        self.center_ids = list(center_ids) if center_ids is not None else None
        self.n_vertices = 4 + num_centers + num_groups
        self.adj: list[list[int]] = [[] for _ in range(self.n_vertices)]
        self.frm: list[int] = []
        self.to: list[int] = []
        self.cap: list[int] = []
        self.orig: list[int] = []
        self.label: list[int | None] = []

    def center_vertex(self, i: int) -> int:
        return 4 + i

    def group_vertex(self, f: int) -> int:
        return 4 + self.num_centers + f

    def add_edge(self, u: int, v: int, cap: int, label=None) -> int:
        """Add a forward edge and its residual twin; returns the forward index."""
        ei = len(self.to)
        self.frm.extend((u, v))
        self.to.extend((v, u))
        self.cap.extend((cap, 0))
        self.orig.extend((cap, 0))
        self.label.extend((label, None))
        self.adj[u].append(ei)
        self.adj[v].append(ei + 1)
        return ei

    def edge_flow(self, ei: int) -> int:
        return self.orig[ei] - self.cap[ei]

    def forward_edges(self):
        return range(0, len(self.to), 2)

    def vertex_name(self, v: int) -> str:
        if v == S:
            return "s"
        if v == VC:
            return "slack"
        if v == TP:
            return "relay"
        if v == T:
            return "t"
        if v < 4 + self.num_centers:
            if self.center_ids is not None:
                return "center:%d" % self.center_ids[v - 4]
            return "center#%d" % (v - 4)
        return "group:%d" % (v - 4 - self.num_centers)

    def dump(self, fh) -> None:
        """One forward edge per line: from, to, capacity, flow, label."""
        for ei in self.forward_edges():
            label = self.label[ei]
            fh.write(
                "%s %s %d %d %s\n"
                % (
                    self.vertex_name(self.frm[ei]),
                    self.vertex_name(self.to[ei]),
                    self.orig[ei],
                    self.edge_flow(ei),
                    "-" if label is None else str(label),
                )
            )


def build_shift_graph(
    candidates: list[ShiftCandidate],
    bounds: FairnessBounds,
    center_ids,
) -> FlowNetwork:
    """Assemble the replacement network; zero-capacity edges are omitted.

    Layout (cap in parentheses): s->slack (k-|A|), s->relay (sum l),
    relay->t (k), per group f: group->t (l_f), group->relay (u_f - l_f),
    slack->group (u_f); s->center (1) per center; center->group (1) per
    candidate, labeled with the witness id.
    """
    center_ids = [int(c) for c in center_ids]
    a = len(center_ids)
    k, l, u = bounds.k, bounds.lower, bounds.upper
    if a > k:
        raise ValueError("more centers than the budget k")
    net = FlowNetwork(a, bounds.m, center_ids)
    pos = {c: i for i, c in enumerate(center_ids)}
    total_l = int(l.sum())

    def edge(uv, vv, cap, label=None):
        if cap > 0:
            net.add_edge(uv, vv, cap, label)

    edge(S, VC, k - a)
    edge(S, TP, total_l)
    edge(TP, T, k)
    for f in range(bounds.m):
        edge(net.group_vertex(f), T, int(l[f]))
        edge(net.group_vertex(f), TP, int(u[f] - l[f]))
        edge(VC, net.group_vertex(f), int(u[f]))
    for c in center_ids:
        edge(S, net.center_vertex(pos[c]), 1)
    for cand in candidates:
        edge(
            net.center_vertex(pos[cand.center]),
            net.group_vertex(cand.group),
            1,
            label=cand.witness,
        )
    return net


def dinic_max_flow(net: FlowNetwork) -> int:
    """Blocking-flow max flow. Levels from BFS; the DFS advances along level
    edges, retreats by exhausting per-vertex edge cursors, and augments on
    reaching t. Paths here have length <= 4, so phases are few and the DFS
    recursion is shallow."""
    total = 0
    n = net.n_vertices
    adj, to, cap = net.adj, net.to, net.cap
    while True:
        level = [-1] * n
        level[S] = 0
        queue = [S]
        for u in queue:
            for ei in adj[u]:
                v = to[ei]
                if cap[ei] > 0 and level[v] < 0:
                    level[v] = level[u] + 1
                    queue.append(v)
        if level[T] < 0:
            return total
        cursor = [0] * n

        def dfs(u: int, pushed: int) -> int:
            if u == T:
                return pushed
            while cursor[u] < len(adj[u]):
                ei = adj[u][cursor[u]]
                v = to[ei]
                if cap[ei] > 0 and level[v] == level[u] + 1:
                    got = dfs(v, min(pushed, cap[ei]))
                    if got > 0:
                        cap[ei] -= got
                        cap[ei ^ 1] += got
                        return got
                cursor[u] += 1
            return 0

        while True:
            pushed = dfs(S, 1 << 60)
            if pushed == 0:
                break
            total += pushed


def collect_candidates(
    dataset: Dataset,
    center_ids,
    assigned_pos: np.ndarray,
    assigned_dist: np.ndarray,
    d_prime: float,
) -> list[ShiftCandidate]:
    """Best witness offer per (center, group).

    assigned_pos/assigned_dist give each point's nearest center (as an index
    into center_ids) and the distance to it. A point is an offer for its own
    nearest center only; with disjoint balls that loses nothing. Keeps the
    minimum-distance witness per (center, group), ties to the lowest point id.
    """
    center_ids = np.asarray(center_ids, dtype=np.int64)
    mask = assigned_dist < d_prime
    rows = np.nonzero(mask)[0]
    if rows.size == 0:
        return []
    groups = dataset.groups[rows]
    key = assigned_pos[rows] * dataset.m + groups
    order = np.lexsort((rows, assigned_dist[rows], key))
    key_sorted = key[order]
    first = np.ones(order.size, dtype=bool)
    first[1:] = key_sorted[1:] != key_sorted[:-1]
    picks = order[first]
    return [
        ShiftCandidate(
            center=int(center_ids[assigned_pos[rows[i]]]),
            group=int(groups[i]),
            witness=int(rows[i]),
            dist=float(assigned_dist[rows[i]]),
        )
        for i in picks
    ]


def probe_candidates(
    candidates: list[ShiftCandidate],
    bounds: FairnessBounds,
    center_ids,
    sink=None,
) -> ShiftResult:
    """Build the network for one candidate set, run max flow, read the answer."""
    net = build_shift_graph(candidates, bounds, center_ids)
    target = bounds.k + int(bounds.lower.sum())
    flow = dinic_max_flow(net)
    if sink is not None:
        sink.write("# probe |A|=%d flow=%d target=%d\n" % (len(center_ids), flow, target))
        net.dump(sink)
    if flow != target:
        return ShiftResult(
            feasible=False,
            replacement={},
            slack=np.zeros(bounds.m, dtype=np.int64),
            max_flow=flow,
        )
    replacement: dict[int, int] = {}
    slack = np.zeros(bounds.m, dtype=np.int64)
    for ei in net.forward_edges():
        if net.edge_flow(ei) <= 0:
            continue
        u, v = net.frm[ei], net.to[ei]
        if net.label[ei] is not None:
            replacement[net.center_ids[u - 4]] = net.label[ei]
        elif u == VC and v >= 4 + net.num_centers:
            slack[v - 4 - net.num_centers] = net.edge_flow(ei)
    return ShiftResult(feasible=True, replacement=replacement, slack=slack, max_flow=flow)


def min_pairwise_distance(coords: np.ndarray) -> float:
    """Smallest pairwise distance among rows (inf for fewer than two rows)."""
    n = coords.shape[0]
    if n < 2:
        return float("inf")
    diff = coords[:, None, :] - coords[None, :, :]
    dist = np.sqrt((diff * diff).sum(axis=2))
    dist[np.arange(n), np.arange(n)] = np.inf
    return float(dist.min())


def fair_shift(
    dataset: Dataset,
    center_ids,
    assigned_pos: np.ndarray,
    assigned_dist: np.ndarray,
    d_prime: float,
    bounds: FairnessBounds,
    sink=None,
) -> ShiftResult:
    """Full replacement probe at radius d' (strict) for centers A = center_ids.

    Requires the open radius-d' balls around A to be disjoint, i.e. min
    pairwise distance >= 2 d'; raises ValueError("radius too large") otherwise.
    """
    center_ids = np.asarray(center_ids, dtype=np.int64)
    if np.isfinite(d_prime) and center_ids.size > 1:
        if min_pairwise_distance(dataset.coords[center_ids]) < 2.0 * d_prime:
            raise ValueError("radius too large")
    candidates = collect_candidates(dataset, center_ids, assigned_pos, assigned_dist, d_prime)
    return probe_candidates(candidates, bounds, center_ids, sink=sink)
