"""Scatter matrix estimators feeding MUSIC.

Five estimators with very different robustness/efficiency trade-offs: the
sample covariance, two nonparametric sign-based estimators (NSCM and
Kendall's tau), and the Tyler and Huber M-estimators computed as fixed
points of a weighted sample covariance iteration started at the identity.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable

import numpy as np
from scipy.stats import chi2

from .bounds import IllConditionedError
from .ces import SnapshotSet

__all__ = [
    "ScatterEstimate",
    "HuberTuning",
    "scm",
    "spatial_sign",
    "nscm",
    "kendall_tau_scm",
    "m_fixed_point",
    "tyler",
    "huber_tuning",
    "huber",
]

_COND_LIMIT = 1e12


@dataclass(frozen=True, eq=False)
class ScatterEstimate:
    """Hermitian PSD estimate of the snapshot scatter matrix."""

    matrix: np.ndarray
    estimator: str
    iterations_used: int = 0
    converged: bool = True


def _hermitize(mat: np.ndarray) -> np.ndarray:
    return (mat + mat.conj().T) / 2


def scm(snapshots: SnapshotSet) -> ScatterEstimate:
    """Sample covariance matrix (1/L) sum z z^H."""
    z = snapshots.data
    mat = _hermitize(z.T @ z.conj() / snapshots.n_snapshots)
    return ScatterEstimate(mat, "SCM")


def spatial_sign(z: np.ndarray) -> np.ndarray:
    """z/||z|| for nonzero z, the zero vector otherwise."""
    z = np.asarray(z, dtype=complex)
    norm = np.linalg.norm(z)
    return z / norm if norm > 0 else np.zeros_like(z)


def _sign_rows(z: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(z, axis=1, keepdims=True)
    out = np.zeros_like(z)
    nz = norms[:, 0] > 0
    out[nz] = z[nz] / norms[nz]
    return out


def nscm(snapshots: SnapshotSet) -> ScatterEstimate:
    """Normalized (sign) SCM: the SCM of the spatial signs z/||z||.

    Invariant to per-snapshot positive scalings; trace equals the fraction
    of nonzero snapshots.
    """
    v = _sign_rows(snapshots.data)
    mat = _hermitize(v.T @ v.conj() / snapshots.n_snapshots)
    return ScatterEstimate(mat, "NSCM")


def kendall_tau_scm(snapshots: SnapshotSet) -> ScatterEstimate:
    """Kendall's tau SCM: sign covariance of all pairwise snapshot differences.

    Translation invariant by construction; the i = j terms vanish through
    the sign-function convention v(0) = 0.
    """
    z = snapshots.data
    n_snap = snapshots.n_snapshots
    if n_snap < 2:
        raise ValueError("Kendall's tau SCM needs at least 2 snapshots")
    diffs = z[:, None, :] - z[None, :, :]
    v = _sign_rows(diffs.reshape(n_snap * n_snap, -1))
    mat = _hermitize(v.T @ v.conj() / (n_snap * (n_snap - 1)))
    return ScatterEstimate(mat, "KT")


def m_fixed_point(
    snapshots: SnapshotSet,
    weight: Callable[[np.ndarray], np.ndarray],
    tol: float = 1e-9,
    max_iter: int = 100,
    estimator: str = "M",
) -> ScatterEstimate:
    """Weighted-SCM fixed point Sigma = (1/L) sum w(z^H Sigma^-1 z) z z^H.

    Starts at the identity and stops when the relative Frobenius change
    drops below tol; a singular or near-singular iterate aborts loudly.
    """
    z = snapshots.data
    n_snap, n = z.shape
    if n_snap < n:
        raise ValueError(
            f"M-estimator fixed point needs L >= N to keep iterates invertible, got L={n_snap}, N={n}"
        )
    sigma = np.eye(n, dtype=complex)
    zt = z.T  # N x L, columns are snapshots
    for iteration in range(1, max_iter + 1):
        forms = np.real(np.sum(zt.conj() * np.linalg.solve(sigma, zt), axis=0))
        w = np.asarray(weight(forms), dtype=float)
        new = _hermitize((zt * w) @ z.conj() / n_snap)
        eigs = np.linalg.eigvalsh(new)
        if eigs.min() <= 0 or eigs.max() / eigs.min() > _COND_LIMIT:
            cond = np.inf if eigs.min() <= 0 else eigs.max() / eigs.min()
            raise IllConditionedError(
                f"{estimator} fixed-point iterate became singular at iteration "
                f"{iteration} (condition number {cond:.3e})"
            )
        delta = np.linalg.norm(new - sigma) / np.linalg.norm(sigma)
        sigma = new
        if delta < tol:
            return ScatterEstimate(sigma, estimator, iteration, True)
    return ScatterEstimate(sigma, estimator, max_iter, False)


def tyler(snapshots: SnapshotSet, tol: float = 1e-9, max_iter: int = 100) -> ScatterEstimate:
    """Tyler's M-estimator (weight N/t), trace-normalized to N.

    The fixed-point equation pins the scale only through the starting
    point, so the output is renormalized to trace N; MUSIC consumes
    eigenvectors only, making the normalization subspace-neutral.
    """
    z = snapshots.data
    n = snapshots.n_sensors
    if np.any(np.linalg.norm(z, axis=1) == 0):
        raise ValueError("Tyler's estimator rejects zero snapshots (weight singular at t=0)")
    est = m_fixed_point(snapshots, lambda t: n / t, tol, max_iter, "Tyler")
    mat = est.matrix * (n / np.trace(est.matrix).real)
    return replace(est, matrix=mat)


@dataclass(frozen=True)
class HuberTuning:
    """Huber threshold delta^2 and consistency constant b derived from q."""

    q: float
    delta_sq: float
    b: float

    def __post_init__(self) -> None:
        if not (0 < self.q <= 1):
            raise ValueError(f"Huber q must lie in (0, 1], got {self.q}")
        if not (self.delta_sq > 0 and self.b > 0):
            raise ValueError("Huber constants must be positive")


def huber_tuning(q: float, n: int) -> HuberTuning:
    """Solve the Huber constants from the tuning fraction q in (0, 1).

    For complex data 2Q is chi-squared with 2N degrees of freedom at
    Gaussianity, so 2 delta^2 is the chi2_{2N} quantile of q and
    b = F_{chi2_{2N+2}}(2 delta^2) + delta^2 (1-q)/N.  q near 1 recovers
    the SCM (b -> 1, threshold -> inf); small q approaches Tyler.
    """
    if not (0 < q < 1):
        raise ValueError(f"Huber tuning fraction must lie in (0, 1), got q={q}")
    if n < 1:
        raise ValueError(f"sensor count must be >= 1, got {n}")
    delta_sq = 0.5 * chi2.ppf(q, 2 * n)
    b = chi2.cdf(2 * delta_sq, 2 * n + 2) + delta_sq * (1 - q) / n
    return HuberTuning(q, float(delta_sq), float(b))


def _huber_weight(forms: np.ndarray, tuning: HuberTuning) -> np.ndarray:
    w = np.full_like(forms, 1.0 / tuning.b)
    clipped = forms > tuning.delta_sq
    w[clipped] = tuning.delta_sq / (forms[clipped] * tuning.b)
    return w


def huber(
    snapshots: SnapshotSet,
    tuning: HuberTuning,
    tol: float = 1e-9,
    max_iter: int = 100,
) -> ScatterEstimate:
    """Huber's M-estimator: constant weight below delta^2, Tyler-like above.

    A proper scatter estimator, so no trace renormalization is applied.
    """
    return m_fixed_point(snapshots, lambda t: _huber_weight(t, tuning), tol, max_iter, "Huber")
