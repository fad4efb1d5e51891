"""Gaussian parametric families.

Two families are provided:

* :class:`CoupledGaussian1D` -- ``N(theta, exp(alpha * theta)**2)``, where the
  location parameter also drives the scale.  ``alpha`` controls how strongly.
* :class:`DiagGaussian` -- a ``d``-dimensional Gaussian parameterised by mean
  and log-variance.

Every function accepts scalars or numpy arrays for the noise / sample argument
and broadcasts, so a whole batch can be evaluated in one call.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from mhgrad.errors import InvalidInputError, require_finite

LOG_2PI = math.log(2.0 * math.pi)


@dataclass(frozen=True)
class CoupledGaussian1D:
    theta: float
    alpha: float

    def __post_init__(self):
        if not (math.isfinite(self.theta) and math.isfinite(self.alpha)):
            raise InvalidInputError("theta and alpha must be finite")
        if self.alpha < 0:
            raise InvalidInputError(f"alpha must be >= 0, got {self.alpha}")

    @property
    def sigma(self) -> float:
        return math.exp(self.alpha * self.theta)

    @property
    def dsigma_dtheta(self) -> float:
        return self.alpha * self.sigma

    def with_theta(self, theta: float) -> "CoupledGaussian1D":
        return CoupledGaussian1D(theta, self.alpha)


@dataclass(frozen=True)
class Sample1D:
    eps: float | np.ndarray
    z: float | np.ndarray


def sample_1d(model: CoupledGaussian1D, eps) -> Sample1D:
    """Reparameterised draw ``z = theta + sigma(theta) * eps``."""
    require_finite(eps, "eps")
    return Sample1D(eps=eps, z=model.theta + model.sigma * eps)


def path_jacobian_1d(model: CoupledGaussian1D, eps):
    """dz/dtheta along a fixed noise draw: ``1 + alpha * sigma * eps``."""
    require_finite(eps, "eps")
    return 1.0 + model.dsigma_dtheta * eps


def log_density_1d(model: CoupledGaussian1D, z):
    u = (np.asarray(z, dtype=float) - model.theta) / model.sigma
    out = -0.5 * LOG_2PI - model.alpha * model.theta - 0.5 * u * u
    return out if np.ndim(out) else float(out)


def score_1d(model: CoupledGaussian1D, z):
    """d/dtheta log p_theta(z), counting both the mean and the scale path.

    This is the raw Malliavin weight of the coupled family.  It has zero mean
    under the model, so ``f(z) * score_1d(model, z)`` is unbiased for the
    gradient of ``E[f]``.
    """
    require_finite(z, "z")
    r = np.asarray(z, dtype=float) - model.theta
    s2 = model.sigma**2
    out = r / s2 + model.alpha * (r * r / s2 - 1.0)
    return out if np.ndim(out) else float(out)


def normalized_weight_1d(model: CoupledGaussian1D, z):
    """Score divided by ``sqrt(1 + alpha**2)``.

    Tames the variance growth at large ``alpha`` but shrinks the expectation by
    the same factor, so estimators built on it are biased.
    """
    return score_1d(model, z) / math.sqrt(1.0 + model.alpha**2)


@dataclass(frozen=True)
class DiagGaussian:
    mu: np.ndarray
    log_var: np.ndarray

    def __post_init__(self):
        mu = np.atleast_1d(np.asarray(self.mu, dtype=float))
        log_var = np.atleast_1d(np.asarray(self.log_var, dtype=float))
        if mu.ndim != 1 or mu.shape != log_var.shape or mu.size < 1:
            raise InvalidInputError(
                f"mu and log_var must be 1-d with equal length, got {mu.shape} and {log_var.shape}"
            )
        var = np.exp(log_var)
        if not (np.all(np.isfinite(mu)) and np.all(np.isfinite(var)) and np.all(var > 0)):
            raise InvalidInputError("DiagGaussian needs finite mu and finite positive variances")
        mu.setflags(write=False)
        log_var.setflags(write=False)
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "log_var", log_var)

    @property
    def dim(self) -> int:
        return self.mu.size

    @property
    def var(self) -> np.ndarray:
        return np.exp(self.log_var)

    def sample(self, eps):
        eps = np.asarray(eps, dtype=float)
        if eps.shape[-1:] != (self.dim,):
            raise InvalidInputError(f"eps last axis must have length {self.dim}")
        return self.mu + np.exp(0.5 * self.log_var) * eps


def _check_diag_point(model: DiagGaussian, z) -> np.ndarray:
    z = np.asarray(z, dtype=float)
    if z.shape[-1:] != (model.dim,):
        raise InvalidInputError(f"z has shape {z.shape}, expected trailing dimension {model.dim}")
    return z


def log_density_diag(model: DiagGaussian, z):
    z = _check_diag_point(model, z)
    r = z - model.mu
    return -0.5 * np.sum(LOG_2PI + model.log_var + r * r / model.var, axis=-1)


def malliavin_weight_diag(model: DiagGaussian, z):
    """Gradient of the diagonal log-density w.r.t. ``(mu, log_var)``.

    Returns ``((z - mu) / var, 0.5 * ((z - mu)**2 / var - 1))``.  Works on a
    single point of shape ``(d,)`` or a batch of shape ``(..., d)``.
    """
    z = _check_diag_point(model, z)
    r = z - model.mu
    w_mu = r / model.var
    w_log_var = 0.5 * (r * w_mu - 1.0)
    return w_mu, w_log_var
