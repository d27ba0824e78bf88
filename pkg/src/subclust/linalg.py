"""Orthonormal bases and principal-angle geometry on the Grassmannian."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import AmbientMismatch, RankDeficient

ORTHO_TOL = 1e-10
RANK_TOL = 1e-8

# below this cosine**2 threshold the arccos of the cosine is well conditioned;
# above it the angle is recovered from the sine instead
_SINE_SWITCH = 0.5


@dataclass(frozen=True, eq=False)
class Subspace:
    """A point on Gr(l, n) stored as an n x l column-orthonormal basis."""

    basis: np.ndarray

    def __post_init__(self):
        b = np.array(self.basis, dtype=np.float64, copy=True)
        if b.ndim == 1:
            b = b[:, None]
        if b.ndim != 2 or b.shape[1] < 1 or b.shape[0] < b.shape[1]:
            raise ValueError(f"basis must be n x l with n >= l >= 1, got shape {b.shape}")
        if not np.all(np.isfinite(b)):
            raise ValueError("basis has non-finite entries")
        err = np.max(np.abs(b.T @ b - np.eye(b.shape[1])))
        if err > ORTHO_TOL:
            raise ValueError(f"basis is not column-orthonormal (max deviation {err:.3g})")
        b.flags.writeable = False
        object.__setattr__(self, "basis", b)

    @property
    def ambient_dim(self) -> int:
        return self.basis.shape[0]

    @property
    def subspace_dim(self) -> int:
        return self.basis.shape[1]

    def __repr__(self):
        return f"Subspace(n={self.ambient_dim}, l={self.subspace_dim})"


def canonical_signs(q: np.ndarray) -> np.ndarray:
    """Flip columns so the largest-magnitude entry of each is positive."""
    idx = np.argmax(np.abs(q), axis=0)
    s = np.sign(q[idx, np.arange(q.shape[1])])
    s[s == 0] = 1.0
    return q * s


def numerical_rank(raw: np.ndarray, tol: float = RANK_TOL) -> int:
    s = np.linalg.svd(raw, compute_uv=False)
    if s.size == 0 or s[0] == 0:
        return 0
    return int(np.sum(s > tol * s[0]))


def orthonormalize(raw, tol: float = RANK_TOL) -> Subspace:
    """Orthonormal basis for the column space of ``raw``.

    Householder QR is used so the span of the leading j columns is kept for
    every j (the first output column is parallel to the first input column).
    Raises RankDeficient when the singular-value ratio test fails.
    """
    raw = np.asarray(raw, dtype=np.float64)
    if raw.ndim == 1:
        raw = raw[:, None]
    n, l = raw.shape
    if not (n >= l >= 1):
        raise ValueError(f"need n >= l >= 1, got {raw.shape}")
    rank = numerical_rank(raw, tol)
    if rank < l:
        raise RankDeficient(rank, l)
    q, r = np.linalg.qr(raw)
    d = np.sign(np.diag(r))
    d[d == 0] = 1.0
    return Subspace(q * d)


def random_subspace(rng: np.random.Generator, n: int, l: int) -> Subspace:
    """Orthonormalized Gaussian n x l matrix."""
    return orthonormalize(rng.standard_normal((n, l)))


def _check_ambient(U: Subspace, V: Subspace):
    if U.ambient_dim != V.ambient_dim:
        raise AmbientMismatch(f"ambient dimensions differ: {U.ambient_dim} vs {V.ambient_dim}")


def principal_angles(U: Subspace, V: Subspace) -> np.ndarray:
    """Principal angles between span(U) and span(V), non-decreasing, in [0, pi/2].

    Cosines are the singular values of U^T V clamped to [0, 1]. Angles whose
    cosine is close to 1 are taken from the singular values of the residual
    V - U U^T V instead, since arccos loses about half the digits there.
    """
    _check_ambient(U, V)
    A, B = U.basis, V.basis
    if A.shape[1] < B.shape[1]:
        A, B = B, A
    M = A.T @ B
    cos = np.clip(np.linalg.svd(M, compute_uv=False), 0.0, 1.0)
    r = B.shape[1]
    cos = cos[:r]
    angles = np.arccos(cos)
    small = cos**2 >= _SINE_SWITCH
    if np.any(small):
        sin = np.linalg.svd(B - A @ M, compute_uv=False)
        sin = np.clip(np.sort(sin)[:r], 0.0, 1.0)
        angles = np.where(small, np.arcsin(sin), angles)
    return angles


def sin_theta_vector(U: Subspace, V: Subspace) -> np.ndarray:
    """Sines of the principal angles, in non-decreasing angle order."""
    return np.sin(principal_angles(U, V))


def sin2_theta1(U: Subspace, V: Subspace) -> float:
    """sin^2 of the smallest principal angle, 1 - sigma_max(U^T V)^2."""
    _check_ambient(U, V)
    s = np.linalg.svd(U.basis.T @ V.basis, compute_uv=False)[0]
    s = min(max(s, 0.0), 1.0)
    return 1.0 - s * s


def sin2_theta1_batch(K: Subspace, stack: np.ndarray) -> np.ndarray:
    """sin2_theta1 of K against every basis in a (N, n, l) stack."""
    if stack.shape[1] != K.ambient_dim:
        raise AmbientMismatch(f"ambient dimensions differ: {K.ambient_dim} vs {stack.shape[1]}")
    prod = np.einsum("nk,jnl->jkl", K.basis, stack, optimize=True)
    if prod.shape[1] == 1 or prod.shape[2] == 1:
        smax = np.sqrt(np.einsum("jkl,jkl->j", prod, prod))
    else:
        smax = np.linalg.svd(prod, compute_uv=False)[:, 0]
    smax = np.clip(smax, 0.0, 1.0)
    return 1.0 - smax * smax
