"""Uniform linear array geometry and the structured scatter matrix.

Spatial frequencies live on the principal interval (-0.5, 0.5]; steering
vectors are 1-periodic in nu so this covers one full spatial period.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "SourceScenario",
    "steering_vector",
    "steering_derivative",
    "steering_matrix",
    "build_scatter",
    "orthogonal_projector",
]

_HERM_TOL = 1e-10
_COND_LIMIT = 1e12


@dataclass(frozen=True, eq=False)
class SourceScenario:
    """K narrowband sources observed by an N-sensor ULA.

    Holds the true spatial frequencies, the source covariance Gamma and the
    noise power; the induced scatter matrix is A Gamma A^H + sigma^2 I.
    """

    n_sensors: int
    frequencies: np.ndarray
    source_cov: np.ndarray
    noise_power: float

    def __post_init__(self) -> None:
        freqs = np.atleast_1d(np.asarray(self.frequencies, dtype=float))
        cov = np.atleast_2d(np.asarray(self.source_cov, dtype=complex))
        n, k = self.n_sensors, freqs.size
        if n < 2:
            raise ValueError(f"ULA needs at least 2 sensors, got N={n}")
        if k < 1 or k >= n:
            raise ValueError(f"need 1 <= K < N for subspace identifiability, got K={k}, N={n}")
        if np.any(freqs <= -0.5) or np.any(freqs > 0.5):
            raise ValueError(f"spatial frequencies must lie in (-0.5, 0.5], got {freqs}")
        if len(set(freqs.tolist())) != k:
            raise ValueError(f"spatial frequencies must be pairwise distinct, got {freqs}")
        if cov.shape != (k, k):
            raise ValueError(f"source covariance must be {k}x{k}, got {cov.shape}")
        scale = max(np.abs(cov).max(), 1.0)
        if np.abs(cov - cov.conj().T).max() > _HERM_TOL * scale:
            raise ValueError("source covariance must be Hermitian")
        eigs = np.linalg.eigvalsh((cov + cov.conj().T) / 2)
        if eigs.min() < -_HERM_TOL * scale:
            raise ValueError(f"source covariance must be positive-semidefinite, eigenvalues {eigs}")
        if not self.noise_power > 0:
            raise ValueError(f"noise power must be positive, got {self.noise_power}")
        object.__setattr__(self, "frequencies", freqs)
        object.__setattr__(self, "source_cov", cov)

    @property
    def n_sources(self) -> int:
        return self.frequencies.size


def steering_vector(nu: float, n: int) -> np.ndarray:
    """ULA steering vector (1, e^{j2 pi nu}, ..., e^{j2 pi (N-1) nu})."""
    return np.exp(2j * np.pi * nu * np.arange(n))


def steering_derivative(nu: float, n: int) -> np.ndarray:
    """Derivative of the steering vector w.r.t. nu, element m: j 2 pi m e^{j2 pi m nu}."""
    m = np.arange(n)
    return 2j * np.pi * m * np.exp(2j * np.pi * nu * m)


def steering_matrix(nus, n: int) -> np.ndarray:
    """N x K matrix whose k-th column is the steering vector of nu_k."""
    nus = np.atleast_1d(np.asarray(nus, dtype=float))
    return np.exp(2j * np.pi * np.outer(np.arange(n), nus))


def build_scatter(scenario: SourceScenario) -> np.ndarray:
    """Scatter matrix A Gamma A^H + sigma^2 I of the snapshot model."""
    a = steering_matrix(scenario.frequencies, scenario.n_sensors)
    sig = a @ scenario.source_cov @ a.conj().T
    sig = (sig + sig.conj().T) / 2
    return sig + scenario.noise_power * np.eye(scenario.n_sensors)


def orthogonal_projector(a_mat: np.ndarray) -> np.ndarray:
    """Projector onto the orthogonal complement of the columns of A."""
    a_mat = np.asarray(a_mat, dtype=complex)
    n = a_mat.shape[0]
    gram = a_mat.conj().T @ a_mat
    gram = (gram + gram.conj().T) / 2
    eigs = np.linalg.eigvalsh(gram)
    if eigs.min() <= 0 or eigs.max() / eigs.min() > _COND_LIMIT:
        cond = np.inf if eigs.min() <= 0 else eigs.max() / eigs.min()
        raise ValueError(f"steering matrix is rank deficient (Gram condition number {cond:.3e})")
    proj = np.eye(n) - a_mat @ np.linalg.solve(gram, a_mat.conj().T)
    return (proj + proj.conj().T) / 2
