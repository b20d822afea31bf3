"""Gaussian normal-means data model and coupled bootstrap draws."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

import numpy as np

from .rng import BOOT, DATA, as_generator


class FactorizationError(ValueError):
    """Raised when a covariance matrix is not numerically positive definite."""


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class NormalModel:
    """Y ~ N(theta, sigma2 * I_n)."""

    theta: np.ndarray
    sigma2: float

    def __post_init__(self):
        theta = _frozen(self.theta)
        if theta.ndim != 1 or theta.size == 0:
            raise ValueError("theta must be a non-empty vector")
        if not np.all(np.isfinite(theta)):
            raise ValueError("theta must be finite")
        if not (np.isfinite(self.sigma2) and self.sigma2 > 0):
            raise ValueError(f"sigma2 must be positive, got {self.sigma2}")
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "sigma2", float(self.sigma2))

    @property
    def n(self) -> int:
        return self.theta.size

    @property
    def sigma(self) -> float:
        return float(np.sqrt(self.sigma2))


def cholesky_factor(Sigma, name="Sigma") -> np.ndarray:
    """Lower Cholesky factor of an SPD matrix.

    Near-singular input (smallest pivot below 1e-12 times the largest diagonal
    entry) is rejected, never regularized.
    """
    S = np.asarray(Sigma, dtype=float)
    if S.ndim != 2 or S.shape[0] != S.shape[1]:
        raise FactorizationError(f"{name} must be square, got shape {S.shape}")
    if not np.allclose(S, S.T, rtol=0, atol=1e-10):
        raise FactorizationError(f"{name} is not symmetric")
    try:
        L = np.linalg.cholesky(S)
    except np.linalg.LinAlgError as exc:
        raise FactorizationError(f"{name} is not positive definite") from exc
    pivots = np.diag(L) ** 2
    if pivots.min() < 1e-12 * np.diag(S).max():
        raise FactorizationError(f"{name} is numerically singular")
    return L


@dataclass(frozen=True)
class StructuredNormalModel:
    """Y ~ N(theta, Sigma) with Sigma symmetric positive definite."""

    theta: np.ndarray
    Sigma: np.ndarray
    chol: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        theta = _frozen(self.theta)
        Sigma = _frozen(self.Sigma)
        if Sigma.shape != (theta.size, theta.size):
            raise ValueError(f"Sigma must be {theta.size}x{theta.size}, got {Sigma.shape}")
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "Sigma", Sigma)
        object.__setattr__(self, "chol", _frozen(cholesky_factor(Sigma)))

    @property
    def n(self) -> int:
        return self.theta.size


@dataclass(frozen=True, eq=False)
class CoupledDrawSet:
    """B coupled triplets (omega, Y*, Y-dagger) built from one data vector.

    ``ystar = y + sqrt(alpha) * omega`` and ``ydagger = y - omega / sqrt(alpha)``.
    Arrays are read-only so a draw set can be shared between estimators.
    """

    y: np.ndarray
    alpha: float
    omega: np.ndarray
    ystar: np.ndarray
    ydagger: np.ndarray

    @property
    def B(self) -> int:
        return self.omega.shape[0]

    @property
    def n(self) -> int:
        return self.y.size

    def checksum(self) -> str:
        """Short digest of (y, alpha, omega); equal digests mean shared draws."""
        h = hashlib.sha256()
        h.update(np.ascontiguousarray(self.y).tobytes())
        h.update(np.float64(self.alpha).tobytes())
        h.update(np.ascontiguousarray(self.omega).tobytes())
        return h.hexdigest()[:16]

    @classmethod
    def from_omega(cls, y, alpha, omega) -> "CoupledDrawSet":
        y = np.asarray(y, dtype=float)
        omega = np.atleast_2d(np.asarray(omega, dtype=float))
        if y.ndim != 1:
            raise ValueError("y must be a vector")
        if omega.shape[1] != y.size:
            raise ValueError(f"omega has {omega.shape[1]} columns, expected {y.size}")
        if not alpha > 0:
            raise ValueError(f"alpha must be positive, got {alpha}")
        ra = np.sqrt(alpha)
        return cls(
            y=_frozen(y),
            alpha=float(alpha),
            omega=_frozen(omega),
            ystar=_frozen(y + ra * omega),
            ydagger=_frozen(y - omega / ra),
        )


def sample_data(model: NormalModel, rng=None, size: int | None = None) -> np.ndarray:
    """Draw y ~ N(theta, sigma2 I); ``size`` stacks that many independent rows."""
    return sample_elevated(model, 0.0, rng, size=size)


def sample_elevated(model: NormalModel, alpha: float, rng=None, size: int | None = None) -> np.ndarray:
    """Draw Y_alpha ~ N(theta, (1 + alpha) sigma2 I).

    The underlying standard normals do not depend on ``alpha``, so calls that
    share ``rng`` give common random numbers across noise levels.
    """
    if alpha < 0:
        raise ValueError(f"alpha must be nonnegative, got {alpha}")
    gen = as_generator(rng, DATA)
    shape = (model.n,) if size is None else (size, model.n)
    z = gen.standard_normal(shape)
    return model.theta + np.sqrt((1.0 + alpha) * model.sigma2) * z


def make_coupled_draws(y, sigma2: float, alpha: float, B: int, rng=None) -> CoupledDrawSet:
    """Generate omega^b ~ N(0, sigma2 I) and the coupled pair for b = 1..B."""
    if not alpha > 0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    if int(B) < 1:
        raise ValueError(f"B must be at least 1, got {B}")
    if not sigma2 > 0:
        raise ValueError(f"sigma2 must be positive, got {sigma2}")
    y = np.asarray(y, dtype=float)
    gen = as_generator(rng, BOOT)
    omega = np.sqrt(sigma2) * gen.standard_normal((int(B), y.size))
    return CoupledDrawSet.from_omega(y, alpha, omega)


def make_structured_coupled_draws(y, Sigma, alpha: float, B: int, rng=None) -> CoupledDrawSet:
    """Coupled draws with omega^b ~ N(0, Sigma), via the lower Cholesky factor."""
    if not alpha > 0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    if int(B) < 1:
        raise ValueError(f"B must be at least 1, got {B}")
    y = np.asarray(y, dtype=float)
    L = cholesky_factor(Sigma)
    if L.shape[0] != y.size:
        raise ValueError(f"Sigma is {L.shape[0]}x{L.shape[0]} but y has length {y.size}")
    gen = as_generator(rng, BOOT)
    z = gen.standard_normal((int(B), y.size))
    return CoupledDrawSet.from_omega(y, alpha, z @ L.T)
