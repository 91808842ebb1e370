"""Problem model: datasets, fairness bounds, objective, validation.

A problem instance is a point set with one demographic group per point, plus
per-group lower/upper quotas (l_i, u_i) and a center budget k. A center set C
is fair when |C| = k and l_i <= |C intersect S_i| <= u_i for every group i.
The objective is the k-center radius max_s min_{c in C} d(s, c).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels


class FairKCenterError(Exception):
    """Base class for library errors."""


class InfeasibleInstanceError(FairKCenterError):
    """The quota structure admits no fair center set."""


class DegenerateStreamError(FairKCenterError):
    """The stream prefix cannot seed the guess ladder (zero base distance)."""


class OracleScaleError(FairKCenterError):
    """A brute-force oracle was asked to enumerate beyond its guard."""


class ParseError(FairKCenterError):
    """Malformed input file."""


#: Supported metric descriptors. Only Euclidean distance is implemented; the
#: indirection keeps the door open for L1/Linf without changing call sites.
METRICS = ("l2",)


@dataclass(frozen=True)
class PointRecord:
    """One point: integer id (its dataset row), coordinates, group id."""

    id: int
    coords: np.ndarray
    group: int


@dataclass(frozen=True)
class Dataset:
    """Immutable point collection with per-point group labels.

    coords is (n, dim) float64, groups is (n,) int64 with values in [0, m).
    Point ids are row indices. group_names records an optional string label
    per group id (set by CSV ingestion, in first-appearance order).
    """

    coords: np.ndarray
    groups: np.ndarray
    m: int
    group_names: tuple[str, ...] | None = None
    metric: str = "l2"

    def __post_init__(self):
        coords = np.ascontiguousarray(self.coords, dtype=np.float64)
        groups = np.ascontiguousarray(self.groups, dtype=np.int64)
        if coords.ndim != 2 or coords.shape[0] == 0:
            raise ValueError("coords must be a nonempty (n, dim) array")
        if groups.shape != (coords.shape[0],):
            raise ValueError("groups must be one label per point")
        if self.m < 1:
            raise ValueError("need at least one group")
        if groups.min() < 0 or groups.max() >= self.m:
            raise ValueError("group labels must lie in [0, m)")
        if self.metric not in METRICS:
            raise ValueError("unknown metric %r" % self.metric)
        if self.group_names is not None and len(self.group_names) != self.m:
            raise ValueError("group_names must have one entry per group")
        coords.setflags(write=False)
        groups.setflags(write=False)
        object.__setattr__(self, "coords", coords)
        object.__setattr__(self, "groups", groups)

    @property
    def n(self) -> int:
        return self.coords.shape[0]

    @property
    def dim(self) -> int:
        return self.coords.shape[1]

    @property
    def group_sizes(self) -> np.ndarray:
        return np.bincount(self.groups, minlength=self.m)

    def point(self, i: int) -> PointRecord:
        return PointRecord(id=int(i), coords=self.coords[i], group=int(self.groups[i]))


@dataclass(frozen=True)
class FairnessBounds:
    """Per-group quota ranges and the center budget k."""

    lower: np.ndarray
    upper: np.ndarray
    k: int

    def __post_init__(self):
        lower = np.ascontiguousarray(self.lower, dtype=np.int64)
        upper = np.ascontiguousarray(self.upper, dtype=np.int64)
        if lower.ndim != 1 or lower.shape != upper.shape:
            raise ValueError("lower/upper must be equal-length vectors")
        lower.setflags(write=False)
        upper.setflags(write=False)
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)

    @property
    def m(self) -> int:
        return self.lower.shape[0]


@dataclass(frozen=True)
class ProblemInstance:
    dataset: Dataset
    bounds: FairnessBounds

    @property
    def k(self) -> int:
        return self.bounds.k


@dataclass(frozen=True)
class CenterSet:
    """A chosen center set: sorted point ids plus per-group counts."""

    ids: np.ndarray
    per_group: np.ndarray

    def __post_init__(self):
        ids = np.sort(np.ascontiguousarray(self.ids, dtype=np.int64))
        per_group = np.ascontiguousarray(self.per_group, dtype=np.int64)
        ids.setflags(write=False)
        per_group.setflags(write=False)
        object.__setattr__(self, "ids", ids)
        object.__setattr__(self, "per_group", per_group)

    @classmethod
    def from_ids(cls, dataset: Dataset, ids) -> "CenterSet":
        ids = np.asarray(sorted(int(i) for i in ids), dtype=np.int64)
        if ids.size and (ids[0] < 0 or ids[-1] >= dataset.n):
            raise ValueError("center id out of range")
        if np.unique(ids).size != ids.size:
            raise ValueError("duplicate center id")
        per_group = np.bincount(dataset.groups[ids], minlength=dataset.m)
        return cls(ids=ids, per_group=per_group)

    def __len__(self) -> int:
        return int(self.ids.size)


def objective(instance_or_dataset, centers) -> float:
    """k-center radius of `centers` (a CenterSet or id iterable).

    Evaluation order is fixed (points in id order, centers in id order) and
    identical across backends, so results are deterministic bit for bit.
    """
    dataset = getattr(instance_or_dataset, "dataset", instance_or_dataset)
    ids = centers.ids if isinstance(centers, CenterSet) else np.asarray(
        sorted(int(i) for i in centers), dtype=np.int64
    )
    if ids.size == 0:
        raise ValueError("objective of an empty center set is undefined")
    return _kernels.max_min_dist(dataset.coords, dataset.coords[ids])


def check_fairness(instance: ProblemInstance, centers: CenterSet) -> bool:
    """True iff |centers| = k and every group count sits inside its quota range."""
    b = instance.bounds
    if len(centers) != b.k:
        return False
    counts = centers.per_group
    if counts.shape[0] != b.m:
        return False
    return bool(np.all(counts >= b.lower) and np.all(counts <= b.upper))


def derive_bounds_from_factors(dataset: Dataset, k: int, alpha, beta) -> FairnessBounds:
    """Quotas from per-group scale factors on the proportional share.

    l_i = floor(alpha_i * |S_i| * k / n), u_i = min(|S_i|, ceil(beta_i * |S_i| * k / n)).
    """
    sizes = dataset.group_sizes
    if np.any(sizes == 0):
        raise InfeasibleInstanceError("every group must be nonempty")
    if not 1 <= k <= dataset.n:
        raise InfeasibleInstanceError("k must lie in [1, n]")
    alpha = np.asarray(alpha, dtype=np.float64)
    beta = np.asarray(beta, dtype=np.float64)
    share = sizes * (k / dataset.n)
    lower = np.floor(alpha * share).astype(np.int64)
    upper = np.minimum(sizes, np.ceil(beta * share).astype(np.int64))
    if np.any(lower > upper):
        raise InfeasibleInstanceError("derived lower bound exceeds upper bound")
    # Float round-off can in principle push sums past k; trim the largest
    # lower bounds until they fit.
    excess = int(lower.sum()) - k
    while excess > 0:
        i = int(np.argmax(lower))
        lower[i] -= 1
        excess -= 1
    if int(upper.sum()) < k:
        raise InfeasibleInstanceError("infeasible proportional bounds")
    return FairnessBounds(lower=lower, upper=upper, k=k)


def derive_proportional_bounds(dataset: Dataset, k: int, eps: float) -> FairnessBounds:
    """Quotas within a (1 +- eps) band around each group's proportional share."""
    if not 0.0 <= eps < 1.0:
        raise ValueError("eps must lie in [0, 1)")
    ones = np.ones(dataset.m)
    return derive_bounds_from_factors(dataset, k, (1.0 - eps) * ones, (1.0 + eps) * ones)


def equality_allocation(dataset: Dataset, k: int) -> np.ndarray:
    """Largest-remainder apportionment of k centers over group sizes.

    The exact-proportional baseline: m_i ~ |S_i| * k / n, rounded to integers
    summing to k with m_i <= |S_i|. Ties on the fractional part break toward
    the lower group id.
    """
    sizes = dataset.group_sizes
    if np.any(sizes == 0):
        raise InfeasibleInstanceError("every group must be nonempty")
    share = sizes * (k / dataset.n)
    alloc = np.floor(share).astype(np.int64)
    rem = k - int(alloc.sum())
    frac = share - alloc
    for i in sorted(range(dataset.m), key=lambda i: (-frac[i], i)):
        if rem == 0:
            break
        if alloc[i] < sizes[i]:
            alloc[i] += 1
            rem -= 1
    # Caps may leave a remainder; place it wherever room is left.
    for i in range(dataset.m):
        if rem == 0:
            break
        take = min(rem, int(sizes[i] - alloc[i]))
        alloc[i] += take
        rem -= take
    if rem != 0:
        raise InfeasibleInstanceError("k exceeds the number of points")
    return alloc


def validate_instance(instance: ProblemInstance) -> None:
    """Raise InfeasibleInstanceError with a specific diagnostic on violation.

    Feasibility is implied by: 0 <= l_i <= u_i <= |S_i| for all i and
    sum(l) <= k <= sum(u), with 1 <= k <= n.
    """
    d, b = instance.dataset, instance.bounds
    if b.m != d.m:
        raise InfeasibleInstanceError(
            "bounds cover %d groups, dataset has %d" % (b.m, d.m)
        )
    if not 1 <= b.k <= d.n:
        raise InfeasibleInstanceError("k=%d outside [1, n=%d]" % (b.k, d.n))
    sizes = d.group_sizes
    for i in range(b.m):
        if b.lower[i] < 0:
            raise InfeasibleInstanceError("l_%d < 0" % i)
        if b.lower[i] > b.upper[i]:
            raise InfeasibleInstanceError("l_%d > u_%d" % (i, i))
        if b.upper[i] > sizes[i]:
            raise InfeasibleInstanceError(
                "u_%d = %d exceeds group size %d" % (i, b.upper[i], sizes[i])
            )
    if int(b.lower.sum()) > b.k:
        raise InfeasibleInstanceError("sum of lower bounds exceeds k")
    if int(b.upper.sum()) < b.k:
        raise InfeasibleInstanceError("sum of upper bounds is below k")


def minmax_normalize(coords: np.ndarray) -> np.ndarray:
    """Scale each feature to [0, 1]; constant features map to 0."""
    coords = np.asarray(coords, dtype=np.float64)
    lo = coords.min(axis=0)
    span = coords.max(axis=0) - lo
    span[span == 0] = 1.0
    return (coords - lo) / span
