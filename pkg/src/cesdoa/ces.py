"""Zero-mean complex elliptically symmetric (CES) snapshot model.

Density generators for the Gaussian, complex t- and generalized Gaussian
families, each calibrated so that the second-order modular variate
Q = z^H Sigma^-1 z has mean N.  Under that constraint the scatter matrix
coincides with the snapshot covariance, which is what every estimator
downstream assumes.

Snapshots are drawn through the stochastic representation
z = sqrt(Q) * Sigma^(1/2) * u with u uniform on the complex unit sphere.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np
from numpy.random import Generator
from scipy import integrate
from scipy.special import gammaln

__all__ = [
    "Gaussian",
    "StudentT",
    "GeneralizedGaussian",
    "DensityGenerator",
    "SnapshotSet",
    "QuadratureError",
    "density_h",
    "psi",
    "modular_pdf",
    "modular_moment",
    "sample_modular_variate",
    "sample_uniform_sphere",
    "sample_snapshots",
    "expected_q2psi2",
    "expected_q2psi2_numeric",
    "hermitian_sqrt",
]

_LOG_PI = float(np.log(np.pi))


class QuadratureError(RuntimeError):
    """Adaptive quadrature did not reach the requested tolerance."""


@dataclass(frozen=True)
class Gaussian:
    """h(t) = pi^-N exp(-t): the circular complex Gaussian generator."""


@dataclass(frozen=True)
class StudentT:
    """Complex t density generator with tail parameter lam > 1.

    The scale eta = lam/(lam-1) enforces E{Q} = N, so the combination
    lam/eta that appears throughout the pdf reduces to lam - 1.  Small lam
    means heavy tails; lam -> inf recovers the Gaussian.
    """

    lam: float

    def __post_init__(self) -> None:
        if not self.lam > 1.0:
            raise ValueError(
                f"t-distribution shape must satisfy lam > 1 (E{{Q}} diverges "
                f"otherwise), got lam={self.lam}"
            )

    @property
    def eta(self) -> float:
        return self.lam / (self.lam - 1.0)


@dataclass(frozen=True)
class GeneralizedGaussian:
    """Generalized Gaussian density generator with shape s > 0.

    Tails are heavier than Gaussian for s < 1 and lighter for s > 1; s = 1
    is exactly Gaussian.  The scale b enforcing E{Q} = N depends on the
    dimension, so it is computed on demand per N.
    """

    s: float

    def __post_init__(self) -> None:
        if not self.s > 0.0:
            raise ValueError(f"GG shape must be positive, got s={self.s}")

    def log_b(self, n: int) -> float:
        """log of the scale constant b = [N Gamma(N/s)/Gamma((N+1)/s)]^s."""
        s = self.s
        return s * (np.log(n) + gammaln(n / s) - gammaln((n + 1) / s))

    def b(self, n: int) -> float:
        return float(np.exp(self.log_b(n)))


DensityGenerator = Union[Gaussian, StudentT, GeneralizedGaussian]


@dataclass(frozen=True, eq=False)
class SnapshotSet:
    """L i.i.d. CES snapshots, one complex N-vector per row."""

    data: np.ndarray

    def __post_init__(self) -> None:
        data = np.asarray(self.data, dtype=complex)
        if data.ndim != 2 or data.shape[0] < 1 or data.shape[1] < 1:
            raise ValueError(f"snapshot array must be L x N with L,N >= 1, got shape {data.shape}")
        if not np.all(np.isfinite(data)):
            raise ValueError("snapshot array contains non-finite entries")
        object.__setattr__(self, "data", data)

    @property
    def n_snapshots(self) -> int:
        return self.data.shape[0]

    @property
    def n_sensors(self) -> int:
        return self.data.shape[1]


def _check_n(n: int) -> None:
    if n < 1:
        raise ValueError(f"sensor count must be >= 1, got {n}")


def density_h(dg: DensityGenerator, n: int, t):
    """Density generator h(t) with the E{Q}=N scale constants baked in.

    Accepts a scalar or array of nonnegative t and returns the same shape.
    """
    _check_n(n)
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr < 0):
        raise ValueError("density generator argument must be nonnegative")
    if isinstance(dg, Gaussian):
        log_h = -t_arr - n * _LOG_PI
    elif isinstance(dg, StudentT):
        lam = dg.lam
        c = lam - 1.0  # lam/eta under the E{Q}=N constraint
        log_h = (
            gammaln(lam + n)
            - gammaln(lam)
            - n * _LOG_PI
            + lam * np.log(c)
            - (lam + n) * np.log(c + t_arr)
        )
    elif isinstance(dg, GeneralizedGaussian):
        s = dg.s
        log_b = dg.log_b(n)
        log_h = (
            np.log(s)
            + gammaln(n)
            - n * _LOG_PI
            - (n / s) * log_b
            - gammaln(n / s)
            - t_arr**s / np.exp(log_b)
        )
    else:
        raise TypeError(f"unknown density generator {dg!r}")
    out = np.exp(log_h)
    return float(out) if np.isscalar(t) or t_arr.ndim == 0 else out


def psi(dg: DensityGenerator, n: int, t):
    """Log-derivative psi(t) = d ln h(t)/dt, defined for t > 0 only.

    Always negative; the t=0 endpoint is excluded because the GG variant
    with s < 1 diverges there (the modular variate is a.s. positive, so the
    harness never needs it).
    """
    _check_n(n)
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr <= 0):
        raise ValueError("psi is defined on t > 0 only")
    if isinstance(dg, Gaussian):
        out = np.full_like(t_arr, -1.0)
    elif isinstance(dg, StudentT):
        out = -(dg.lam + n) / ((dg.lam - 1.0) + t_arr)
    elif isinstance(dg, GeneralizedGaussian):
        s = dg.s
        out = -s * t_arr ** (s - 1.0) / dg.b(n)
    else:
        raise TypeError(f"unknown density generator {dg!r}")
    return float(out) if np.isscalar(t) or t_arr.ndim == 0 else out


def modular_pdf(dg: DensityGenerator, n: int, q):
    """pdf of the second-order modular variate, pi^N/Gamma(N) q^(N-1) h(q).

    Defined for q > 0; integrates to 1 and has first moment N.
    """
    _check_n(n)
    q_arr = np.asarray(q, dtype=float)
    if np.any(q_arr <= 0):
        raise ValueError("modular pdf argument must be positive")
    if isinstance(dg, Gaussian):
        log_p = (n - 1) * np.log(q_arr) - q_arr - gammaln(n)
    elif isinstance(dg, StudentT):
        lam = dg.lam
        c = lam - 1.0
        log_p = (
            gammaln(lam + n)
            - gammaln(n)
            - gammaln(lam)
            + lam * np.log(c)
            + (n - 1) * np.log(q_arr)
            - (lam + n) * np.log(c + q_arr)
        )
    elif isinstance(dg, GeneralizedGaussian):
        s = dg.s
        log_b = dg.log_b(n)
        log_p = (
            np.log(s)
            - (n / s) * log_b
            - gammaln(n / s)
            + (n - 1) * np.log(q_arr)
            - q_arr**s / np.exp(log_b)
        )
    else:
        raise TypeError(f"unknown density generator {dg!r}")
    out = np.exp(log_p)
    return float(out) if np.isscalar(q) or q_arr.ndim == 0 else out


def _quad(f, rel_tol: float, what: str) -> float:
    out = integrate.quad(f, 0.0, np.inf, epsabs=0.0, epsrel=rel_tol, limit=200, full_output=1)
    if len(out) > 3:
        raise QuadratureError(f"quadrature of {what} did not converge: {out[3]}")
    value, abserr = out[0], out[1]
    if abs(value) > 0 and abserr / abs(value) > 100 * rel_tol:
        raise QuadratureError(
            f"quadrature of {what} reached only {abserr / abs(value):.2e} relative error"
        )
    return value


def modular_moment(dg: DensityGenerator, n: int, order: int = 1, rel_tol: float = 1e-10) -> float:
    """E{Q^order} by adaptive quadrature (order 0 checks normalization)."""
    return _quad(
        lambda q: q**order * modular_pdf(dg, n, q),
        rel_tol,
        f"E{{Q^{order}}} for {dg!r}, N={n}",
    )


def sample_modular_variate(dg: DensityGenerator, n: int, rng: Generator, size=None):
    """Draw Q with pdf modular_pdf.

    Exact transforms of Gamma draws: Gaussian Q ~ Gamma(N, 1); t-variant
    Q = (lam-1) X/Y with X ~ Gamma(N,1), Y ~ Gamma(lam,1); GG
    Q = (b G)^(1/s) with G ~ Gamma(N/s, 1), evaluated in log space so
    extreme shapes stay finite.
    """
    _check_n(n)
    if isinstance(dg, Gaussian):
        return rng.gamma(n, 1.0, size)
    if isinstance(dg, StudentT):
        return (dg.lam - 1.0) * rng.gamma(n, 1.0, size) / rng.gamma(dg.lam, 1.0, size)
    if isinstance(dg, GeneralizedGaussian):
        g = rng.gamma(n / dg.s, 1.0, size)
        return np.exp((dg.log_b(n) + np.log(g)) / dg.s)
    raise TypeError(f"unknown density generator {dg!r}")


def sample_uniform_sphere(n: int, rng: Generator, size=None) -> np.ndarray:
    """Draw vectors uniform on the complex unit N-sphere (rows if size given)."""
    _check_n(n)
    shape = (n,) if size is None else (size, n)
    w = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    return w / np.linalg.norm(w, axis=-1, keepdims=True)


def hermitian_sqrt(mat: np.ndarray) -> np.ndarray:
    """Hermitian principal square root; rejects non-positive-definite input."""
    mat = np.asarray(mat, dtype=complex)
    herm = (mat + mat.conj().T) / 2
    w, v = np.linalg.eigh(herm)
    if w.min() <= 0:
        raise ValueError(
            f"matrix is not positive-definite (smallest eigenvalue {w.min():.3e})"
        )
    root = (v * np.sqrt(w)) @ v.conj().T
    return (root + root.conj().T) / 2


def sample_snapshots(
    scatter: np.ndarray, dg: DensityGenerator, n_snapshots: int, rng: Generator
) -> SnapshotSet:
    """Draw L i.i.d. snapshots z = sqrt(Q) Sigma^(1/2) u (zero mean)."""
    if n_snapshots < 1:
        raise ValueError(f"snapshot count must be >= 1, got {n_snapshots}")
    root = hermitian_sqrt(scatter)
    n = root.shape[0]
    q = sample_modular_variate(dg, n, rng, size=n_snapshots)
    u = sample_uniform_sphere(n, rng, size=n_snapshots)
    data = np.sqrt(q)[:, None] * (u @ root.T)
    return SnapshotSet(data)


def expected_q2psi2(dg: DensityGenerator, n: int) -> float:
    """Closed form of E{Q^2 psi(Q)^2}, the SSCRB scaling moment."""
    _check_n(n)
    if isinstance(dg, Gaussian):
        return float(n * (n + 1.0))
    if isinstance(dg, StudentT):
        lam = dg.lam
        return float(n * (n + 1.0) * (lam + n) / (n + lam + 1.0))
    if isinstance(dg, GeneralizedGaussian):
        return float(n * (n + dg.s))
    raise TypeError(f"unknown density generator {dg!r}")


def expected_q2psi2_numeric(dg: DensityGenerator, n: int, rel_tol: float = 1e-10) -> float:
    """E{Q^2 psi(Q)^2} by adaptive quadrature; oracle for the closed forms."""
    _check_n(n)
    return _quad(
        lambda q: q * q * psi(dg, n, q) ** 2 * modular_pdf(dg, n, q),
        rel_tol,
        f"E{{Q^2 psi^2}} for {dg!r}, N={n}",
    )
