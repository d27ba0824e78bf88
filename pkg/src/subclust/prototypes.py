"""Cluster representatives: Schubert-variety-of-best-fit, flag mean, flag median."""

from __future__ import annotations

import enum
import warnings
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import (
    AmbientMismatch,
    DegenerateSpectrum,
    DimensionTooLarge,
    EmptyInput,
    RankDeficient,
)
from .linalg import (
    RANK_TOL,
    Subspace,
    canonical_signs,
    principal_angles,
    random_subspace,
    sin_theta_vector,
)

GAP_TOL = 1e-10


class SvbfInit(str, enum.Enum):
    FROM_FLAG_MEAN = "flagmean"
    FROM_GIVEN_SUBSPACE = "given"
    RANDOM_ORTHONORMAL = "random"


@dataclass(frozen=True)
class SvbfConfig:
    prototype_dim: int = 1
    max_inner_iters: int = 100
    objective_tol: float = 1e-9
    init: SvbfInit = SvbfInit.FROM_FLAG_MEAN
    seed: int = 0

    def __post_init__(self):
        if self.prototype_dim < 1:
            raise ValueError("prototype_dim must be positive")
        if self.max_inner_iters < 1:
            raise ValueError("max_inner_iters must be positive")
        object.__setattr__(self, "init", SvbfInit(self.init))


@dataclass
class FitResult:
    prototype: Subspace
    objective: float
    objective_history: list = field(default_factory=list)
    iterations_used: int = 0


def _validate(samples: Sequence[Subspace], k: int) -> int:
    if len(samples) == 0:
        raise EmptyInput("no samples")
    n = samples[0].ambient_dim
    for s in samples:
        if s.ambient_dim != n:
            raise AmbientMismatch(f"ambient dimensions differ: {n} vs {s.ambient_dim}")
    if k < 1:
        raise ValueError("prototype dimension must be positive")
    if k > n:
        raise DimensionTooLarge(f"prototype dimension {k} exceeds ambient dimension {n}")
    return n


def _stack(samples: Sequence[Subspace]) -> Optional[np.ndarray]:
    dims = {s.subspace_dim for s in samples}
    if len(dims) != 1:
        return None
    return np.stack([s.basis for s in samples])


def _top_left_vectors(A: np.ndarray, k: int, warn: bool = True, gram: bool = False):
    """Top-k left singular vectors of A (n x c) plus the singular values.

    Wide matrices are first reduced to the n x n factor R^T of A^T = QR, which
    has the same left singular vectors and values. With ``gram=True`` they go
    through eigh of A A^T instead: faster, but small singular values lose half
    their digits, so only callers that never test rank use it.
    """
    n, c = A.shape
    if gram and c > n:
        lam, V = np.linalg.eigh(A @ A.T)
        U, s = V[:, ::-1], np.sqrt(np.clip(lam[::-1], 0.0, None))
    elif gram and k <= c:
        # narrow: eigh of the small c x c Gram, then U = A V / s
        lam, V = np.linalg.eigh(A.T @ A)
        s = np.sqrt(np.clip(lam[::-1], 0.0, None))
        if s[k - 1] > RANK_TOL * s[0]:
            U = (A @ V[:, ::-1][:, :k]) / s[:k]
            U, _ = np.linalg.qr(U)
        else:
            U, s, _ = np.linalg.svd(A, full_matrices=False)
    else:
        if c > n:
            A = np.linalg.qr(A.T, mode="r").T
        U, s, _ = np.linalg.svd(A, full_matrices=(A.shape[1] < k))
    if warn and s.size > k and s[0] > 0 and (s[k - 1] - s[k]) < GAP_TOL * s[0]:
        warnings.warn(
            f"singular values {k} and {k + 1} tie ({s[k - 1]:.6g}); prototype not unique",
            DegenerateSpectrum,
            stacklevel=3,
        )
    return canonical_signs(U[:, :k]), s


def flag_mean(samples: Sequence[Subspace], k: int) -> Subspace:
    """Chordal flag mean: top-k left singular vectors of [X_1 | ... | X_p].

    Emits a DegenerateSpectrum warning when the k-th singular value is not
    separated from the next one.
    """
    _validate(samples, k)
    A = np.hstack([s.basis for s in samples])
    U, s = _top_left_vectors(A, k)
    if s.size < k or s[k - 1] <= RANK_TOL * s[0]:
        raise RankDeficient(int(np.sum(s > RANK_TOL * s[0])), k)
    return Subspace(U)


def _weighted_flag_mean(samples, weights, k):
    A = np.hstack([np.sqrt(w) * s.basis for s, w in zip(samples, weights)])
    U, _ = _top_left_vectors(A, k, warn=False, gram=True)
    return Subspace(U)


def _sine_norms(K: Subspace, samples) -> np.ndarray:
    """||sin theta(X_i, K)||_2 for every sample."""
    stack = _stack(samples)
    if stack is None or min(K.subspace_dim, stack.shape[2]) > 1:
        return np.array([np.linalg.norm(sin_theta_vector(X, K)) for X in samples])
    # a single angle: its sine is the residual of the 1-dim side projected on the other
    B = K.basis
    if stack.shape[2] == 1:
        R = stack - np.einsum("nk,jk->jn", B, np.einsum("nk,jnl->jk", B, stack))[:, :, None]
    else:
        R = B[None] - np.einsum("jnl,jl->jn", stack, np.einsum("jnl,nk->jl", stack, B))[:, :, None]
    return np.minimum(np.sqrt(np.einsum("jnl,jnl->j", R, R)), 1.0)


def flag_median(
    samples: Sequence[Subspace],
    k: int,
    max_irls_iters: int = 50,
    eps: float = 1e-8,
    tol: float = 1e-8,
) -> Subspace:
    """Flag median by IRLS-weighted flag means.

    Each sample is weighted by 1 / max(||sin theta(X_i, K)||_2, eps) and the
    weighted flag mean recomputed until the largest principal angle between
    successive iterates drops below ``tol``.
    """
    _validate(samples, k)
    # unit weights: the plain flag mean
    K = _weighted_flag_mean(samples, np.ones(len(samples)), k)
    for _ in range(max_irls_iters):
        d = _sine_norms(K, samples)
        w = 1.0 / np.maximum(d, eps)
        K_new = _weighted_flag_mean(samples, w, k)
        move = principal_angles(K, K_new)[-1]
        K = K_new
        if move < tol:
            break
    return K


def svbf_objective(samples: Sequence[Subspace], K: Subspace) -> float:
    """Sum over samples of sin^2 of the first principal angle to K."""
    stack = _stack(samples)
    if stack is not None:
        return float(np.sum(_first_angle(K.basis, stack)[0]))
    total = 0.0
    for X in samples:
        total += _first_angle(K.basis, X.basis[None])[0][0]
    return float(total)


def _first_angle(K: np.ndarray, stack: np.ndarray):
    """(sin^2 theta_1, nearest unit vectors w_i) for every basis in the stack."""
    prod = np.einsum("nk,jnl->jkl", K, stack)
    _, s, vt = np.linalg.svd(prod)
    smax = np.clip(s[:, 0], 0.0, 1.0)
    w = np.einsum("jnl,jl->jn", stack, vt[:, 0, :])
    return 1.0 - smax * smax, w


def _nearest_directions(K: np.ndarray, samples, stack):
    if stack is not None:
        return _first_angle(K, stack)
    d2, W = [], []
    for X in samples:
        a, b = _first_angle(K, X.basis[None])
        d2.append(a[0])
        W.append(b[0])
    return np.array(d2), np.array(W)


def _complete(top: np.ndarray, candidates: np.ndarray, need: int) -> np.ndarray:
    """Up to ``need`` orthonormal directions of span(candidates) orthogonal to ``top``."""
    R = candidates - top @ (top.T @ candidates)
    U, s, _ = np.linalg.svd(R, full_matrices=False)
    r = int(np.sum(s > RANK_TOL))
    return U[:, : min(need, r)]


def _eigen_step(W: np.ndarray, K: np.ndarray, k: int, samples) -> np.ndarray:
    """Top-k eigenvectors of W W^T.

    When W W^T has rank r < k every completion of the top r eigenvectors is
    equally optimal. The missing directions come from the samples' spans first
    and from the current iterate after that, so the prototype stays inside the
    data instead of drifting through the null space.
    """
    U, s = _top_left_vectors(W, k, warn=False)
    r = int(np.sum(s > RANK_TOL * s[0])) if s.size and s[0] > 0 else 0
    if r >= k:
        return U
    Q = U[:, :r]
    Q = np.hstack([Q, _complete(Q, np.hstack([x.basis for x in samples]), k - Q.shape[1])])
    if Q.shape[1] < k:
        Q = np.hstack([Q, _complete(Q, K, k - Q.shape[1])])
    return canonical_signs(Q)


def svbf_fit(
    samples: Sequence[Subspace],
    cfg: SvbfConfig,
    initial: Optional[Subspace] = None,
) -> FitResult:
    """Fit a k-dimensional subspace minimizing sum_i sin^2 theta_1(X_i, K).

    Block-coordinate ascent on sum_i cos^2 theta_1: pick the unit vector w_i in
    each span(X_i) closest to K, then replace K by the top-k eigenvectors of
    sum_i w_i w_i^T (the top-k left singular vectors of [w_1 ... w_p]). Neither
    half-step can lower the summed cosines, so the history is non-increasing.
    """
    k = cfg.prototype_dim
    n = _validate(samples, k)
    stack = _stack(samples)

    if cfg.init is SvbfInit.FROM_GIVEN_SUBSPACE:
        if initial is None:
            raise ValueError("init=given requires an initial subspace")
        if initial.ambient_dim != n:
            raise AmbientMismatch(f"initial subspace has ambient dim {initial.ambient_dim}, data {n}")
        if initial.subspace_dim != k:
            raise ValueError(f"initial subspace has dim {initial.subspace_dim}, expected {k}")
        K = initial.basis
    elif cfg.init is SvbfInit.RANDOM_ORTHONORMAL:
        K = random_subspace(np.random.default_rng(cfg.seed), n, k).basis
    else:
        A = np.hstack([s.basis for s in samples])
        K, _ = _top_left_vectors(A, k, warn=False)

    d2, W = _nearest_directions(K, samples, stack)
    obj = float(np.sum(d2))
    history = [obj]
    it = 0
    while it < cfg.max_inner_iters and obj > 0.0:
        it += 1
        K_new = _eigen_step(W.T, K, k, samples)
        d2_new, W_new = _nearest_directions(K_new, samples, stack)
        obj_new = float(np.sum(d2_new))
        if obj_new > obj:
            # rounding-level increase; keep the better iterate and stop
            break
        K, W, prev, obj = K_new, W_new, obj, obj_new
        history.append(obj)
        if prev - obj <= cfg.objective_tol * max(prev, np.finfo(float).tiny):
            break
    return FitResult(Subspace(K), obj, history, it)
