"""Cluster purity and the multi-trial center-count sweep."""

from __future__ import annotations

import csv
import hashlib
import time
from dataclasses import dataclass, field, replace
from typing import List, NamedTuple, Optional, Sequence

import numpy as np

from .data import SubspaceDataset
from .errors import LengthMismatch, MissingClassLabels
from .lbg import LbgConfig, Method, _pmap, lbg_cluster

RECORD_HEADER = ["method", "num_centers", "trial", "seed", "purity", "distortion", "iters", "seconds"]
MEDIAN_HEADER = ["method", "num_centers", "median_purity", "median_distortion"]


def purity(labels, classes) -> float:
    """(1/N) * sum over clusters of the cluster's majority-class count."""
    labels = np.asarray(labels)
    classes = np.asarray(classes)
    if labels.shape != classes.shape or labels.ndim != 1:
        raise LengthMismatch(f"{labels.shape} labels vs {classes.shape} classes")
    if labels.size == 0:
        raise LengthMismatch("purity of an empty labeling is undefined")
    total = 0
    for c in np.unique(labels):
        _, counts = np.unique(classes[labels == c], return_counts=True)
        total += counts.max()
    return float(total / labels.size)


def lower_median(values) -> float:
    """Median; even counts take the lower of the two middle elements."""
    v = sorted(values)
    return v[(len(v) - 1) // 2]


def cell_seed(base_seed: int, method, num_centers: int, trial: int) -> int:
    """Stable 64-bit seed for one (method, center count, trial) cell."""
    method = Method(method).value
    key = f"{base_seed}:{method}:{num_centers}:{trial}".encode()
    return int.from_bytes(hashlib.blake2b(key, digest_size=8).digest(), "little")


class SweepRecord(NamedTuple):
    method: str
    num_centers: int
    trial_index: int
    seed: int
    purity: float
    final_distortion: float
    outer_iters_used: int
    wall_time_seconds: float
    distortion_history: tuple = ()


class SweepMedian(NamedTuple):
    method: str
    num_centers: int
    median_purity: float
    median_distortion: float


@dataclass
class SweepReport:
    records: List[SweepRecord] = field(default_factory=list)
    medians: List[SweepMedian] = field(default_factory=list)

    @classmethod
    def from_records(cls, records: Sequence[SweepRecord]) -> "SweepReport":
        cells = {}
        for r in records:
            cells.setdefault((r.method, r.num_centers), []).append(r)
        medians = [
            SweepMedian(
                m, c,
                lower_median([r.purity for r in rs]),
                lower_median([r.final_distortion for r in rs]),
            )
            for (m, c), rs in cells.items()
        ]
        return cls(list(records), medians)

    def median_purity(self, method, num_centers) -> float:
        method = Method(method).value
        for m in self.medians:
            if m.method == method and m.num_centers == num_centers:
                return m.median_purity
        raise KeyError((method, num_centers))

    def write_csv(self, records_path, medians_path, timing: bool = True):
        """Write the per-run and per-cell CSVs; ``timing=False`` leaves the seconds column empty."""
        with open(records_path, "w", newline="", encoding="utf-8") as f:
            w = csv.writer(f, lineterminator="\n")
            w.writerow(RECORD_HEADER)
            for r in self.records:
                w.writerow([
                    r.method, r.num_centers, r.trial_index, r.seed, repr(float(r.purity)),
                    repr(float(r.final_distortion)), r.outer_iters_used,
                    f"{r.wall_time_seconds:.6f}" if timing else "",
                ])
        with open(medians_path, "w", newline="", encoding="utf-8") as f:
            w = csv.writer(f, lineterminator="\n")
            w.writerow(MEDIAN_HEADER)
            for m in self.medians:
                w.writerow([m.method, m.num_centers, repr(float(m.median_purity)),
                            repr(float(m.median_distortion))])


class SweepFailed(RuntimeError):
    """A sweep cell raised; ``report`` holds the records that did complete."""

    def __init__(self, cause, report: SweepReport):
        self.report = report
        super().__init__(f"sweep failed: {cause}")


def _run_cell(dataset, base_cfg, method, m, trial):
    seed = cell_seed(base_cfg.seed, method, m, trial)
    cfg = replace(
        base_cfg, prototype_method=method, num_centers=m, seed=seed,
        svbf=replace(base_cfg.svbf, seed=seed),
    )
    t0 = time.perf_counter()
    model = lbg_cluster(dataset, cfg, threads=1)
    dt = time.perf_counter() - t0
    return SweepRecord(
        Method(method).value, m, trial, seed, purity(model.labels, dataset.class_labels),
        model.distortion, model.iterations_used, dt, tuple(model.distortion_history),
    )


def sweep(
    dataset: SubspaceDataset,
    methods: Sequence,
    center_counts: Sequence[int],
    trials: int,
    base_cfg: LbgConfig,
    threads: Optional[int] = 1,
) -> SweepReport:
    """Run LBG over every (method, center count, trial) and collect purity/distortion.

    Each cell gets its own seed from ``cell_seed`` so cells are reproducible in
    isolation. Cells run concurrently when ``threads > 1``; record order is the
    nested loop order regardless.
    """
    if dataset.class_labels is None:
        raise MissingClassLabels("sweep needs class labels to score purity")
    if trials < 1:
        raise ValueError("trials must be >= 1")
    cells = [(Method(meth), m, t) for meth in methods for m in center_counts for t in range(trials)]

    def work(cell):
        try:
            return _run_cell(dataset, base_cfg, *cell)
        except Exception as e:  # noqa: BLE001 - re-raised below with partial results
            return e

    out = _pmap(work, cells, threads)
    done = [r for r in out if isinstance(r, SweepRecord)]
    errors = [r for r in out if isinstance(r, Exception)]
    if errors:
        raise SweepFailed(errors[0], SweepReport.from_records(done)) from errors[0]
    return SweepReport.from_records(done)
