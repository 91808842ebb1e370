"""Experiment harness: data generation, ingestion, sweeps, reports.

Synthetic data is a Gaussian-blob mixture with groups cut out by random
hyperplanes (group count must be a power of two). Real data arrives as CSV
with a group column, or as a binary replay file for streaming runs. The
experiment runner sweeps quota widths and algorithms over seeded repetitions
and emits a flat report (JSON schema 1 or CSV).
"""

from __future__ import annotations

import csv
import json
import math
import struct
import time
from dataclasses import dataclass, field

import numpy as np

from .core import (
    CenterSet,
    Dataset,
    FairnessBounds,
    InfeasibleInstanceError,
    ParseError,
    ProblemInstance,
    check_fairness,
    derive_proportional_bounds,
    equality_allocation,
    minmax_normalize,
    objective,
)
from .offline import heuristic_allocation, solve_equality, solve_offline
from .oracle import brute_force_optimal
from .streaming import stream_solve

REPORT_SCHEMA = 1
CSV_HEADER = ("algorithm", "eps", "run", "objective", "runtime_ms", "stored_points", "fair")
ALGORITHMS = ("ours", "major", "minor", "equality", "stream", "oracle")


@dataclass
class SyntheticSpec:
    """Blob-mixture generator settings (desk scale by default)."""

    blobs: int = 20
    points_per_blob: int = 250
    dim: int = 4
    box_edge: float = 20.0
    m: int = 2
    seed: int = 0

    @classmethod
    def from_dict(cls, raw: dict) -> "SyntheticSpec":
        known = {f for f in cls.__dataclass_fields__}
        bad = set(raw) - known
        if bad:
            raise ParseError("unknown synthetic spec fields: %s" % ", ".join(sorted(bad)))
        return cls(**raw)


def generate_blobs(spec: SyntheticSpec) -> Dataset:
    """Gaussian blobs in a box; groups are sign patterns of random hyperplanes.

    Blob centers are uniform in [0, box_edge]^dim, points are unit-variance
    Gaussians around them. log2(m) hyperplanes (random unit normal, offset
    through a random point of the data's bounding box) assign each point a bit
    vector; hyperplanes are redrawn until every group is nonempty.
    """
    bits = math.log2(spec.m)
    if bits != int(bits) or spec.m < 1:
        raise ValueError("group count must be a power of two")
    bits = int(bits)
    rng = np.random.default_rng(spec.seed)
    centers = rng.uniform(0.0, spec.box_edge, size=(spec.blobs, spec.dim))
    pts = np.repeat(centers, spec.points_per_blob, axis=0) + rng.standard_normal(
        (spec.blobs * spec.points_per_blob, spec.dim)
    )
    if bits == 0:
        groups = np.zeros(pts.shape[0], dtype=np.int64)
    else:
        lo, hi = pts.min(axis=0), pts.max(axis=0)
        for _ in range(200):
            normals = rng.standard_normal((bits, spec.dim))
            normals /= np.linalg.norm(normals, axis=1, keepdims=True)
            anchors = rng.uniform(lo, hi, size=(bits, spec.dim))
            side = (pts @ normals.T - (anchors * normals).sum(axis=1)) > 0
            groups = (side @ (1 << np.arange(bits))).astype(np.int64)
            if np.bincount(groups, minlength=spec.m).min() > 0:
                break
        else:
            raise InfeasibleInstanceError("could not split points into nonempty groups")
    return Dataset(coords=pts, groups=groups, m=spec.m)


def ingest_csv(path, group_col: str, normalize: bool = True) -> Dataset:
    """Load a header CSV: numeric feature columns plus one group column.

    Group values may be arbitrary strings; ids are assigned in first-appearance
    order and recorded on the dataset. Features are min-max scaled to [0, 1]
    unless normalize is False.
    """
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError("%s: empty file" % path) from None
        if group_col not in header:
            raise ParseError("%s: no column named %r" % (path, group_col))
        gidx = header.index(group_col)
        fidx = [i for i in range(len(header)) if i != gidx]
        if not fidx:
            raise ParseError("%s: no feature columns" % path)
        rows, labels = [], []
        gmap: dict[str, int] = {}
        for lineno, row in enumerate(reader, start=2):
            if len(row) != len(header):
                raise ParseError("%s: row %d has %d cells, expected %d" % (path, lineno, len(row), len(header)))
            feats = []
            for i in fidx:
                try:
                    feats.append(float(row[i]))
                except ValueError:
                    raise ParseError(
                        "%s: row %d column %r: non-numeric value %r"
                        % (path, lineno, header[i], row[i])
                    ) from None
            rows.append(feats)
            name = row[gidx]
            if name not in gmap:
                gmap[name] = len(gmap)
            labels.append(gmap[name])
    if not rows:
        raise ParseError("%s: no data rows" % path)
    coords = np.asarray(rows, dtype=np.float64)
    if normalize:
        coords = minmax_normalize(coords)
    return Dataset(
        coords=coords,
        groups=np.asarray(labels, dtype=np.int64),
        m=len(gmap),
        group_names=tuple(sorted(gmap, key=gmap.get)),
    )


def write_replay(dataset: Dataset, path) -> None:
    """Binary replay: little-endian u32 n, u32 dim, u32 m, then per point
    dim float64 coords followed by u32 group."""
    with open(path, "wb") as fh:
        fh.write(struct.pack("<III", dataset.n, dataset.dim, dataset.m))
        rec = struct.Struct("<%ddI" % dataset.dim)
        for i in range(dataset.n):
            fh.write(rec.pack(*dataset.coords[i], int(dataset.groups[i])))


def read_replay_header(path) -> tuple[int, int, int]:
    with open(path, "rb") as fh:
        head = fh.read(12)
    if len(head) != 12:
        raise ParseError("%s: truncated replay header" % path)
    return struct.unpack("<III", head)


def iter_replay(path):
    """Stream (id, coords, group) records from a replay file, one pass."""
    n, dim, m = read_replay_header(path)
    rec = struct.Struct("<%ddI" % dim)
    with open(path, "rb") as fh:
        fh.seek(12)
        for i in range(n):
            blob = fh.read(rec.size)
            if len(blob) != rec.size:
                raise ParseError("%s: truncated record %d" % (path, i))
            *coords, group = rec.unpack(blob)
            if group >= m:
                raise ParseError("%s: record %d group %d out of range" % (path, i, group))
            yield i, np.asarray(coords, dtype=np.float64), int(group)


def read_replay(path) -> Dataset:
    n, dim, m = read_replay_header(path)
    coords = np.empty((n, dim), dtype=np.float64)
    groups = np.empty(n, dtype=np.int64)
    for i, c, g in iter_replay(path):
        coords[i] = c
        groups[i] = g
    return Dataset(coords=coords, groups=groups, m=m)


@dataclass
class ExperimentConfig:
    """One sweep: a data source, quota widths, algorithms, repetitions."""

    synthetic: SyntheticSpec | None = None
    csv_path: str | None = None
    group_col: str | None = None
    normalize: bool = True
    k: int | None = None
    k_fraction: float = 0.05
    eps_list: tuple[float, ...] = (0.1, 0.2, 0.3, 0.4)
    algorithms: tuple[str, ...] = ("ours", "major", "minor")
    runs: int = 20
    seed: int = 0
    stream_eps: float = 0.1

    def __post_init__(self):
        if (self.synthetic is None) == (self.csv_path is None):
            raise ValueError("exactly one of synthetic/csv_path must be set")
        bad = set(self.algorithms) - set(ALGORITHMS)
        if bad:
            raise ValueError("unknown algorithms: %s" % ", ".join(sorted(bad)))

    @classmethod
    def from_dict(cls, raw: dict) -> "ExperimentConfig":
        raw = dict(raw)
        if "synthetic" in raw and raw["synthetic"] is not None:
            raw["synthetic"] = SyntheticSpec.from_dict(raw["synthetic"])
        for key in ("eps_list", "algorithms"):
            if key in raw and raw[key] is not None:
                raw[key] = tuple(raw[key])
        known = {f for f in cls.__dataclass_fields__}
        bad = set(raw) - known
        if bad:
            raise ParseError("unknown experiment config fields: %s" % ", ".join(sorted(bad)))
        return cls(**raw)


@dataclass
class RunRecord:
    algorithm: str
    eps: float
    run: int
    objective: float | None
    runtime_ms: float | None
    stored_points: int | None
    fair: bool | None
    error: str | None = None


@dataclass
class Report:
    schema: int
    metadata: dict
    rows: list[RunRecord] = field(default_factory=list)

    def aggregates(self) -> list[dict]:
        """Mean/std objective per (algorithm, eps) over non-failed runs."""
        cells: dict[tuple[str, float], list[float]] = {}
        failures: dict[tuple[str, float], int] = {}
        for row in self.rows:
            key = (row.algorithm, row.eps)
            failures.setdefault(key, 0)
            if row.error is None and row.objective is not None:
                cells.setdefault(key, []).append(row.objective)
            else:
                failures[key] += 1
        out = []
        for key in sorted(set(cells) | set(failures)):
            vals = cells.get(key, [])
            out.append(
                {
                    "algorithm": key[0],
                    "eps": key[1],
                    "runs": len(vals),
                    "failures": failures.get(key, 0),
                    "mean_objective": float(np.mean(vals)) if vals else None,
                    "std_objective": float(np.std(vals)) if vals else None,
                }
            )
        return out


def _solve_one(algorithm, instance, dataset, start, stream_eps):
    """Returns (center_set, stored_points)."""
    if algorithm == "ours":
        return solve_offline(instance, start=start), None
    if algorithm in ("major", "minor"):
        alloc = heuristic_allocation(instance, algorithm)
        return solve_equality(instance, alloc.counts, start=start), None
    if algorithm == "equality":
        alloc = equality_allocation(dataset, instance.bounds.k)
        return solve_equality(instance, alloc, start=start), None
    if algorithm == "stream":
        rows = ((i, dataset.coords[i], int(dataset.groups[i])) for i in range(dataset.n))
        centers, stats = stream_solve(rows, instance.bounds, eps=stream_eps)
        return centers, stats.peak_stored
    if algorithm == "oracle":
        exact = brute_force_optimal(instance)
        return CenterSet.from_ids(dataset, exact.ids), None
    raise ValueError("unknown algorithm %r" % algorithm)


def run_experiment(config: ExperimentConfig) -> Report:
    """Sweep eps x algorithm x run. Per run, every algorithm sees the same
    dataset and start point; synthetic sources redraw the dataset per run.
    A failing cell records its error and the sweep continues."""
    base_csv = (
        ingest_csv(config.csv_path, config.group_col, config.normalize)
        if config.csv_path is not None
        else None
    )
    rows: list[RunRecord] = []
    n = m = k = None
    for run in range(config.runs):
        rng = np.random.default_rng([config.seed, run])
        if base_csv is not None:
            dataset = base_csv
        else:
            spec = SyntheticSpec(**{**config.synthetic.__dict__, "seed": int(rng.integers(2**31))})
            dataset = generate_blobs(spec)
        start = int(rng.integers(dataset.n))
        n, m = dataset.n, dataset.m
        k = config.k if config.k is not None else max(1, int(config.k_fraction * dataset.n))
        for eps in config.eps_list:
            try:
                bounds = derive_proportional_bounds(dataset, k, eps)
                instance = ProblemInstance(dataset=dataset, bounds=bounds)
            except InfeasibleInstanceError as exc:
                for algorithm in config.algorithms:
                    rows.append(RunRecord(algorithm, eps, run, None, None, None, None, str(exc)))
                continue
            for algorithm in config.algorithms:
                t0 = time.perf_counter()
                try:
                    centers, stored = _solve_one(
                        algorithm, instance, dataset, start, config.stream_eps
                    )
                except Exception as exc:  # noqa: BLE001 - cell-level isolation
                    rows.append(
                        RunRecord(algorithm, eps, run, None, None, None, None, "%s: %s" % (type(exc).__name__, exc))
                    )
                    continue
                ms = (time.perf_counter() - t0) * 1000.0
                rows.append(
                    RunRecord(
                        algorithm,
                        eps,
                        run,
                        objective(dataset, centers),
                        ms,
                        stored,
                        check_fairness(instance, centers),
                    )
                )
    metadata = {
        "n": n,
        "m": m,
        "k": k,
        "runs": config.runs,
        "seed": config.seed,
        "eps_list": list(config.eps_list),
        "algorithms": list(config.algorithms),
        "source": "csv:%s" % config.csv_path if config.csv_path else "synthetic",
    }
    return Report(schema=REPORT_SCHEMA, metadata=metadata, rows=rows)


def emit_report(report: Report, fmt: str = "json", path=None) -> str:
    """Serialize a report; returns the text and optionally writes it."""
    if fmt == "json":
        payload = {
            "schema": report.schema,
            "metadata": report.metadata,
            "rows": [row.__dict__ for row in report.rows],
            "aggregates": report.aggregates(),
        }
        text = json.dumps(payload, indent=2) + "\n"
    elif fmt == "csv":
        lines = [",".join(CSV_HEADER)]
        for r in report.rows:
            lines.append(
                "%s,%s,%d,%s,%s,%s,%s"
                % (
                    r.algorithm,
                    _num(r.eps),
                    r.run,
                    "" if r.objective is None else repr(r.objective),
                    "" if r.runtime_ms is None else repr(r.runtime_ms),
                    "" if r.stored_points is None else r.stored_points,
                    "" if r.fair is None else str(r.fair).lower(),
                )
            )
        text = "\n".join(lines) + "\n"
    else:
        raise ValueError("format must be json or csv")
    if path is not None:
        with open(path, "w") as fh:
            fh.write(text)
    return text


def _num(x: float) -> str:
    return repr(float(x))


def load_report(path) -> Report:
    """Parse a JSON report back into a Report (inverse of emit_report)."""
    with open(path) as fh:
        try:
            payload = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ParseError("%s: %s" % (path, exc)) from None
    if payload.get("schema") != REPORT_SCHEMA:
        raise ParseError("%s: unsupported report schema %r" % (path, payload.get("schema")))
    rows = [RunRecord(**row) for row in payload.get("rows", [])]
    return Report(schema=payload["schema"], metadata=payload.get("metadata", {}), rows=rows)
