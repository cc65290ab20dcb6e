"""Stochastic and semiparametric stochastic CRBs on the spatial frequencies.

Both bounds share the real symmetric matrix
C = Re[(D^H P D) hadamard (Gamma A^H Sigma^-1 A Gamma)^T], with P the
projector orthogonal to the steering columns. The SCRB is sigma^2/(2L) C^-1;
the SSCRB rescales it by N(N+1)/E{Q^2 psi^2}, which is 1 at Gaussianity.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .ces import DensityGenerator, expected_q2psi2
from .geometry import (
    SourceScenario,
    build_scatter,
    orthogonal_projector,
    steering_derivative,
    steering_matrix,
)

__all__ = ["BoundResult", "IllConditionedError", "c_matrix", "scrb", "sscrb", "bound_index"]

_COND_LIMIT = 1e12


class IllConditionedError(RuntimeError):
    """A matrix needed in invertible form is singular or near-singular."""


@dataclass(frozen=True, eq=False)
class BoundResult:
    """A K x K lower bound on the covariance of the frequency estimates."""

    matrix: np.ndarray
    frobenius_index: float
    kind: str  # "SCRB" | "SSCRB"


def c_matrix(scenario: SourceScenario) -> np.ndarray:
    """Curvature matrix C entering both bounds; real symmetric positive-definite.

    The real part is taken of the whole Hadamard product: both factors are
    Hermitian, and only that reading yields the real symmetric matrix that
    matches the Gaussian Fisher information (checked against a numerical
    Slepian-Bangs evaluation in the tests).
    """
    n = scenario.n_sensors
    a = steering_matrix(scenario.frequencies, n)
    d = np.column_stack([steering_derivative(nu, n) for nu in scenario.frequencies])
    proj = orthogonal_projector(a)
    sigma = build_scatter(scenario)
    gamma = scenario.source_cov
    geo = d.conj().T @ proj @ d
    pow_ = gamma @ a.conj().T @ np.linalg.solve(sigma, a) @ gamma
    c = np.real(geo * pow_.T)
    return (c + c.T) / 2


def _spd_inverse(mat: np.ndarray, what: str) -> np.ndarray:
    w, v = np.linalg.eigh(mat)
    if w.min() <= 0 or w.max() / w.min() > _COND_LIMIT:
        cond = np.inf if w.min() <= 0 else w.max() / w.min()
        raise IllConditionedError(f"{what} is singular or near-singular (condition number {cond:.3e})")
    inv = (v / w) @ v.T
    return (inv + inv.T) / 2


def scrb(scenario: SourceScenario, n_snapshots: int) -> BoundResult:
    """Stochastic CRB sigma^2/(2L) C^-1 (Gaussian snapshot model)."""
    if n_snapshots < 1:
        raise ValueError(f"snapshot count must be >= 1, got {n_snapshots}")
    c_inv = _spd_inverse(c_matrix(scenario), "bound curvature matrix")
    mat = (scenario.noise_power / (2.0 * n_snapshots)) * c_inv
    return BoundResult(mat, float(np.linalg.norm(mat)), "SCRB")


def sscrb(scenario: SourceScenario, n_snapshots: int, dg: DensityGenerator) -> BoundResult:
    """Semiparametric stochastic CRB: the SCRB scaled by N(N+1)/E{Q^2 psi^2}.

    The density generator is treated as an unknown nuisance function; the
    scale factor is >= 1 for heavy-tailed families and exactly 1 at
    Gaussianity.
    """
    base = scrb(scenario, n_snapshots)
    n = scenario.n_sensors
    factor = n * (n + 1.0) / expected_q2psi2(dg, n)
    mat = base.matrix * factor
    return BoundResult(mat, float(np.linalg.norm(mat)), "SSCRB")


def bound_index(bound: BoundResult) -> float:
    """Scalar index plotted against the MSE curves: Frobenius norm of the bound."""
    return float(np.linalg.norm(bound.matrix))
