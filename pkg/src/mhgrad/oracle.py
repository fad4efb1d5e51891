"""Deterministic ground truth for Gaussian expectations and their gradients.

Smooth integrands use Gauss-Hermite quadrature.  Integrands with known kinks
are split at the kinks and each piece is integrated against the normal density
with Gauss-Legendre, which restores spectral convergence; plain Gauss-Hermite
on a kinked integrand converges only algebraically.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import roots_hermitenorm

from mhgrad.errors import InvalidInputError, OracleConsistencyError
from mhgrad.losses import LossFn
from mhgrad.models import CoupledGaussian1D, DiagGaussian, path_jacobian_1d, score_1d

DEFAULT_NODES = 256
DEFAULT_FD_STEP = 1e-5
# Standard-normal truncation for split integration; the mass beyond is ~1e-33.
TAIL = 12.0
_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


@dataclass(frozen=True)
class QuadratureRule:
    """Nodes and weights with ``sum(w * g(x)) ~= E[g(X)]`` for ``X ~ N(0, 1)``."""

    nodes: np.ndarray
    weights: np.ndarray

    @property
    def n(self) -> int:
        return self.nodes.size

    @classmethod
    def gauss_hermite(cls, n: int = DEFAULT_NODES) -> "QuadratureRule":
        return _gauss_hermite(int(n))

    def expect(self, g, loc=0.0, scale=1.0, breaks=()):
        """``E[g(loc + scale * X)]``.

        ``breaks`` lists points (in the same space as ``g``'s argument) where
        ``g`` is not smooth; when given, the integral is split there.
        """
        if not breaks:
            return float(np.dot(self.weights, g(loc + scale * self.nodes)))
        cuts = sorted((b - loc) / scale for b in breaks)
        edges = [-TAIL] + [c for c in cuts if -TAIL < c < TAIL] + [TAIL]
        x_ref, w_ref = _gauss_legendre(self.n)
        total = 0.0
        for a, b in zip(edges[:-1], edges[1:]):
            half = 0.5 * (b - a)
            x = a + half * (x_ref + 1.0)
            w = half * w_ref * _INV_SQRT_2PI * np.exp(-0.5 * x * x)
            total += float(np.dot(w, g(loc + scale * x)))
        return total


@lru_cache(maxsize=16)
def _gauss_hermite(n: int) -> QuadratureRule:
    if n < 1:
        raise InvalidInputError("quadrature needs at least one node")
    x, w = roots_hermitenorm(n)
    w = w / math.sqrt(2.0 * math.pi)
    x.setflags(write=False)
    w.setflags(write=False)
    return QuadratureRule(x, w)


@lru_cache(maxsize=16)
def _gauss_legendre(n: int):
    return np.polynomial.legendre.leggauss(n)


def default_rule() -> QuadratureRule:
    return QuadratureRule.gauss_hermite(DEFAULT_NODES)


def true_objective(model: CoupledGaussian1D, f: LossFn, rule: QuadratureRule | None = None) -> float:
    """``E[f(z)]`` for ``z ~ N(theta, sigma(theta)^2)``."""
    rule = rule or default_rule()
    if rule.n < 32:
        raise InvalidInputError("need at least 32 quadrature nodes")
    return rule.expect(f, model.theta, model.sigma, f.kinks)


def pathwise_form_gradient(model: CoupledGaussian1D, f: LossFn, rule: QuadratureRule | None = None) -> float:
    """``E[f'(z) * dz/dtheta]``; valid wherever f is differentiable a.e."""
    rule = rule or default_rule()
    # integrate in noise space so the Jacobian is evaluated exactly
    kinks = tuple((k - model.theta) / model.sigma for k in f.kinks)
    return rule.expect(
        lambda eps: f.grad(model.theta + model.sigma * eps) * path_jacobian_1d(model, eps),
        breaks=kinks,
    )


def score_form_gradient(model: CoupledGaussian1D, f: LossFn, rule: QuadratureRule | None = None) -> float:
    """``E[f(z) * d/dtheta log p(z)]``; never touches f'."""
    rule = rule or default_rule()
    return rule.expect(lambda z: f(z) * score_1d(model, z), model.theta, model.sigma, f.kinks)


def true_gradient(
    model: CoupledGaussian1D,
    f: LossFn,
    rule: QuadratureRule | None = None,
    h: float = DEFAULT_FD_STEP,
    rtol: float = 1e-4,
    atol: float = 1e-9,
) -> float:
    """Reference ``d/dtheta E[f(z)]`` by central differences of the objective.

    Cross-checked against the score-form quadrature; an
    :class:`OracleConsistencyError` is raised if they disagree by more than
    ``rtol`` (relative) plus ``atol``.
    """
    if h <= 0:
        raise InvalidInputError("finite-difference step must be positive")
    rule = rule or default_rule()
    up = true_objective(model.with_theta(model.theta + h), f, rule)
    down = true_objective(model.with_theta(model.theta - h), f, rule)
    fd = (up - down) / (2.0 * h)
    score = score_form_gradient(model, f, rule)
    if abs(fd - score) > rtol * max(abs(fd), abs(score)) + atol:
        raise OracleConsistencyError(
            f"gradient forms disagree for {f.name} at theta={model.theta}, alpha={model.alpha}: "
            f"finite-difference {fd!r} vs score-form {score!r}"
        )
    return fd


def mc_objective(model: CoupledGaussian1D, f: LossFn, n: int, rng: np.random.Generator, chunk: int = 1 << 22):
    """Slow Monte Carlo cross-check of :func:`true_objective`; returns ``(mean, sem)``."""
    from mhgrad.stats import RunningMoments

    acc = RunningMoments()
    left = n
    while left > 0:
        m = min(chunk, left)
        z = model.theta + model.sigma * rng.standard_normal(m)
        acc = acc.merge(RunningMoments.from_array(f(z)))
        left -= m
    return acc.mean, acc.sem


class SteinFn(enum.Enum):
    LINEAR = "linear"
    QUADRATIC = "quadratic"
    CUBIC = "cubic"


_STEIN = {
    SteinFn.LINEAR: (lambda z: z, lambda z: np.ones_like(z)),
    SteinFn.QUADRATIC: (lambda z: z * z, lambda z: 2.0 * z),
    SteinFn.CUBIC: (lambda z: z**3, lambda z: 3.0 * z * z),
}


def stein_check(g_id, mu: float, sigma2: float, rule: QuadratureRule | None = None) -> float:
    """Residual ``|E[(z - mu) g(z)] - sigma2 * E[g'(z)]|`` for ``z ~ N(mu, sigma2)``."""
    if sigma2 <= 0:
        raise InvalidInputError("sigma2 must be positive")
    rule = rule or default_rule()
    g, dg = _STEIN[SteinFn(g_id)]
    s = math.sqrt(sigma2)
    lhs = rule.expect(lambda z: (z - mu) * g(z), mu, s)
    rhs = sigma2 * rule.expect(dg, mu, s)
    return abs(lhs - rhs)


def diag_expectation(g, model: DiagGaussian, rule: QuadratureRule | None = None):
    """Tensor-product quadrature of ``E[g(z)]`` under a diagonal Gaussian (d <= 3).

    ``g`` maps an ``(m, d)`` array of points to an array with leading axis ``m``.
    """
    if model.dim > 3:
        raise InvalidInputError("tensor-product quadrature is limited to d <= 3")
    rule = rule or QuadratureRule.gauss_hermite(32)
    grids = np.meshgrid(*([rule.nodes] * model.dim), indexing="ij")
    x = np.stack([gr.ravel() for gr in grids], axis=-1)
    wgrids = np.meshgrid(*([rule.weights] * model.dim), indexing="ij")
    w = np.prod(np.stack([gr.ravel() for gr in wgrids], axis=-1), axis=-1)
    vals = np.asarray(g(model.sample(x)))
    return np.tensordot(w, vals, axes=(0, 0))


REFERENCE_COLUMNS = ("theta", "alpha", "loss_id", "grad_ref", "method", "n_nodes")


def reference_rows(thetas, alphas, losses, n_nodes: int = DEFAULT_NODES):
    """Oracle gradients on a parameter grid, as dicts keyed by ``REFERENCE_COLUMNS``."""
    rule = QuadratureRule.gauss_hermite(n_nodes)
    rows = []
    for theta in thetas:
        for alpha in alphas:
            for name in losses:
                g = true_gradient(CoupledGaussian1D(theta, alpha), LossFn.from_name(name), rule)
                rows.append(dict(theta=theta, alpha=alpha, loss_id=name, grad_ref=g,
                                 method="fd_quadrature", n_nodes=n_nodes))
    return rows
