"""LBG clustering of subspace samples with first-angle labeling."""

from __future__ import annotations

import enum
import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import List, Optional, Sequence

import numpy as np

from .data import SubspaceDataset
from .errors import AmbientMismatch, DegenerateSpectrum, EmptyInput, TooManyCenters
from .linalg import Subspace, orthonormalize, random_subspace, sin2_theta1_batch
from .prototypes import (
    SvbfConfig,
    SvbfInit,
    flag_mean,
    flag_median,
    svbf_fit,
    svbf_objective,
)

# fixed chunking keeps floating-point results independent of the worker count
CHUNK = 64


class Method(str, enum.Enum):
    SVBF = "svbf"
    FLAG_MEAN = "flagmean"
    FLAG_MEDIAN = "flagmedian"


class InitStrategy(str, enum.Enum):
    SAMPLE_SEEDED = "sample"
    RANDOM_ORTHONORMAL = "random"


@dataclass(frozen=True)
class LbgConfig:
    num_centers: int
    prototype_dim: int = 1
    prototype_method: Method = Method.SVBF
    max_outer_iters: int = 7
    distortion_rel_tol: float = 1e-4
    init_strategy: InitStrategy = InitStrategy.SAMPLE_SEEDED
    seed: int = 0
    svbf: SvbfConfig = field(default_factory=SvbfConfig)
    # keep the previous prototype when a refit would raise its cluster's
    # summed first-angle distance
    monotone_guard: bool = True

    def __post_init__(self):
        if self.num_centers < 1:
            raise ValueError("num_centers must be >= 1")
        if self.prototype_dim < 1:
            raise ValueError("prototype_dim must be >= 1")
        if self.max_outer_iters < 1:
            raise ValueError("max_outer_iters must be >= 1")
        object.__setattr__(self, "prototype_method", Method(self.prototype_method))
        object.__setattr__(self, "init_strategy", InitStrategy(self.init_strategy))


@dataclass
class ClusterModel:
    prototypes: List[Subspace]
    labels: np.ndarray
    distances: np.ndarray
    distortion_history: List[float]
    config: LbgConfig
    iterations_used: int

    @property
    def distortion(self) -> float:
        return self.distortion_history[-1]


def default_threads() -> int:
    env = os.environ.get("SUBCLUST_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def _pmap(fn, items, threads):
    items = list(items)
    if threads is None or threads <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as ex:
        return list(ex.map(fn, items))


def _to_prototype(X: Subspace, k: int, rng: np.random.Generator) -> Subspace:
    """Turn a sample into a k-dim prototype: truncate, or pad with random complement."""
    B = X.basis
    l = B.shape[1]
    if k <= l:
        return Subspace(B[:, :k])
    G = rng.standard_normal((B.shape[0], k - l))
    G = G - B @ (B.T @ G)
    return orthonormalize(np.hstack([B, G]))


def _check_dataset(dataset: SubspaceDataset, k: int):
    if len(dataset) == 0:
        raise EmptyInput("dataset is empty")
    if k > dataset.ambient_dim:
        raise ValueError(f"prototype_dim {k} exceeds ambient dimension {dataset.ambient_dim}")


def init_prototypes(dataset: SubspaceDataset, cfg: LbgConfig) -> List[Subspace]:
    _check_dataset(dataset, cfg.prototype_dim)
    rng = np.random.default_rng(cfg.seed)
    m, k = cfg.num_centers, cfg.prototype_dim
    if cfg.init_strategy is InitStrategy.RANDOM_ORTHONORMAL:
        return [random_subspace(rng, dataset.ambient_dim, k) for _ in range(m)]
    if m > len(dataset):
        raise TooManyCenters(f"{m} centers requested but only {len(dataset)} samples")
    idx = rng.choice(len(dataset), size=m, replace=False)
    return [_to_prototype(dataset.samples[i], k, rng) for i in idx]


def distance_matrix(
    dataset: SubspaceDataset, prototypes: Sequence[Subspace], threads: Optional[int] = 1
) -> np.ndarray:
    """N x m matrix of sin^2 theta_1(prototype_i, sample_j)."""
    if len(prototypes) == 0:
        raise EmptyInput("no prototypes")
    for P in prototypes:
        if P.ambient_dim != dataset.ambient_dim:
            raise AmbientMismatch(
                f"prototype ambient dim {P.ambient_dim} != data ambient dim {dataset.ambient_dim}"
            )
    chunks = dataset.chunks(CHUNK)

    def work(stacks):
        return np.hstack(
            [np.concatenate([sin2_theta1_batch(P, s) for s in stacks])[:, None] for P in prototypes]
        )

    return np.vstack(_pmap(work, chunks, threads))


def assign(dataset: SubspaceDataset, prototypes: Sequence[Subspace], threads: Optional[int] = 1):
    """Nearest-prototype labels (lowest index on ties) and mean first-angle distortion."""
    if len(dataset) == 0:
        raise EmptyInput("dataset is empty")
    D = distance_matrix(dataset, prototypes, threads)
    labels = np.argmin(D, axis=1)
    dist = D[np.arange(len(labels)), labels]
    return labels, float(np.mean(dist))


def _fit_cluster(members, current: Subspace, cfg: LbgConfig) -> Subspace:
    k = cfg.prototype_dim
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", DegenerateSpectrum)
        if cfg.prototype_method is Method.SVBF:
            scfg = replace(cfg.svbf, prototype_dim=k, init=SvbfInit.FROM_GIVEN_SUBSPACE)
            new = svbf_fit(members, scfg, initial=current).prototype
        elif cfg.prototype_method is Method.FLAG_MEAN:
            new = flag_mean(members, k)
        else:
            new = flag_median(members, k)
    if cfg.monotone_guard and svbf_objective(members, new) > svbf_objective(members, current):
        return current
    return new


def update_prototypes(
    dataset: SubspaceDataset,
    labels,
    current: Sequence[Subspace],
    cfg: LbgConfig,
    threads: Optional[int] = 1,
) -> List[Subspace]:
    """Refit every non-empty cluster; re-seed empty ones from the worst-fit samples."""
    labels = np.asarray(labels)
    m = len(current)
    if labels.shape != (len(dataset),) or (labels.size and (labels.min() < 0 or labels.max() >= m)):
        raise ValueError("labels do not match dataset and prototypes")
    members = [np.flatnonzero(labels == i) for i in range(m)]

    def work(i):
        if members[i].size == 0:
            return None
        return _fit_cluster([dataset.samples[j] for j in members[i]], current[i], cfg)

    out = _pmap(work, range(m), threads)
    empty = [i for i in range(m) if out[i] is None]
    if empty:
        own = own_distances(dataset, labels, current)
        # stable sort: equal distances resolved by lowest sample index
        order = np.argsort(-own, kind="stable")
        for i, j in zip(empty, order):
            rng = np.random.default_rng([cfg.seed, int(j)])
            out[i] = _to_prototype(dataset.samples[j], cfg.prototype_dim, rng)
    return out


def own_distances(dataset: SubspaceDataset, labels, prototypes: Sequence[Subspace]) -> np.ndarray:
    """Distance of each sample to the prototype it is labeled with."""
    labels = np.asarray(labels)
    out = np.empty(len(dataset))
    for i, P in enumerate(prototypes):
        idx = np.flatnonzero(labels == i)
        if idx.size:
            sub = dataset.subset(idx)
            out[idx] = np.concatenate([sin2_theta1_batch(P, s) for ch in sub.chunks(CHUNK) for s in ch])
    return out


def lbg_cluster(
    dataset: SubspaceDataset,
    cfg: LbgConfig,
    threads: Optional[int] = 1,
    initial_prototypes: Optional[Sequence[Subspace]] = None,
) -> ClusterModel:
    """Run init -> (assign -> update) until distortion flattens or the cap is hit.

    One outer iteration is one update followed by one assign, so the returned
    labels always belong to the returned prototypes.
    """
    _check_dataset(dataset, cfg.prototype_dim)
    if initial_prototypes is None:
        prototypes = init_prototypes(dataset, cfg)
    else:
        prototypes = list(initial_prototypes)
        if len(prototypes) != cfg.num_centers:
            raise ValueError(f"{len(prototypes)} initial prototypes for {cfg.num_centers} centers")
    D = distance_matrix(dataset, prototypes, threads)
    labels = np.argmin(D, axis=1)
    history = [float(np.mean(D[np.arange(len(labels)), labels]))]
    it = 0
    while it < cfg.max_outer_iters:
        it += 1
        prototypes = update_prototypes(dataset, labels, prototypes, cfg, threads)
        D = distance_matrix(dataset, prototypes, threads)
        labels = np.argmin(D, axis=1)
        history.append(float(np.mean(D[np.arange(len(labels)), labels])))
        prev, cur = history[-2], history[-1]
        if prev <= 0.0 or (prev - cur) < cfg.distortion_rel_tol * prev:
            break
    dist = D[np.arange(len(labels)), labels]
    return ClusterModel(list(prototypes), labels, dist, history, cfg, it)
