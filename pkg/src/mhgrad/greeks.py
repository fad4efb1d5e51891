"""European call Delta under geometric Brownian motion.

The option value is the undiscounted ``V = E[max(S_T - K, 0)]`` with physical
drift ``mu``.  Three per-sample Delta estimators are provided (pathwise,
Malliavin weight, bump-and-revalue with common random numbers), plus a
deterministic quadrature oracle and hybrid mixing of the first two.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from mhgrad.errors import InvalidInputError, require_finite
from mhgrad.estimators import BatchEstimate, GradPair, Mode, estimate_batch
from mhgrad.oracle import QuadratureRule, default_rule


@dataclass(frozen=True)
class GbmSpec:
    s0: float
    mu: float
    sigma: float
    T: float
    K: float

    def __post_init__(self):
        for name in ("s0", "sigma", "T", "K"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise InvalidInputError(f"{name} must be finite and positive, got {v}")
        if not math.isfinite(self.mu):
            raise InvalidInputError("mu must be finite")

    def with_s0(self, s0: float) -> "GbmSpec":
        return GbmSpec(s0, self.mu, self.sigma, self.T, self.K)

    @property
    def drift(self) -> float:
        return (self.mu - 0.5 * self.sigma**2) * self.T


def terminal_price(spec: GbmSpec, w):
    """``S_T = s0 * exp((mu - sigma^2/2) T + sigma W_T)`` with ``w = W_T``."""
    require_finite(w, "w")
    return spec.s0 * np.exp(spec.drift + spec.sigma * np.asarray(w, dtype=float))


def call_payoff(spec: GbmSpec, s_T):
    return np.maximum(s_T - spec.K, 0.0)


def delta_pathwise_sample(spec: GbmSpec, w):
    s_T = terminal_price(spec, w)
    return np.where(s_T > spec.K, s_T / spec.s0, 0.0)


def delta_malliavin_sample(spec: GbmSpec, w):
    s_T = terminal_price(spec, w)
    return call_payoff(spec, s_T) * np.asarray(w, dtype=float) / (spec.sigma * spec.T * spec.s0)


def delta_bump_sample(spec: GbmSpec, w, h=None):
    """Forward bump-and-revalue on a shared ``w``; ``h`` defaults to ``1e-4 * s0``."""
    h = 1e-4 * spec.s0 if h is None else h
    up = call_payoff(spec, terminal_price(spec.with_s0(spec.s0 + h), w))
    base = call_payoff(spec, terminal_price(spec, w))
    return (up - base) / h


def delta_pair(spec: GbmSpec, w) -> GradPair:
    return GradPair(delta_pathwise_sample(spec, w), delta_malliavin_sample(spec, w), w)


def call_value(spec: GbmSpec, rule: QuadratureRule | None = None) -> float:
    """Quadrature value of ``E[max(S_T - K, 0)]``, split at the strike."""
    rule = rule or default_rule()
    vol = spec.sigma * math.sqrt(spec.T)
    # strike in standard-normal coordinates
    x_k = (math.log(spec.K / spec.s0) - spec.drift) / vol
    return rule.expect(
        lambda x: np.maximum(spec.s0 * np.exp(spec.drift + vol * x) - spec.K, 0.0),
        breaks=(x_k,),
    )


def delta_oracle(spec: GbmSpec, rule: QuadratureRule | None = None, h: float | None = None) -> float:
    """Deterministic Delta: central difference in ``s0`` of :func:`call_value`."""
    h = 1e-4 * spec.s0 if h is None else h
    if not (1e-7 <= h / spec.s0 <= 1e-3):
        raise InvalidInputError("bump h must satisfy 1e-7 <= h/s0 <= 1e-3")
    rule = rule or default_rule()
    up = call_value(spec.with_s0(spec.s0 + h), rule)
    down = call_value(spec.with_s0(spec.s0 - h), rule)
    return (up - down) / (2.0 * h)


def delta_hybrid(spec: GbmSpec, pairs, ridge=None, split_batch=False) -> BatchEstimate:
    """Mix the pathwise and Malliavin Delta streams with the estimated optimal weight."""
    return estimate_batch(pairs, Mode.HYBRID, ridge=ridge, split_batch=split_batch)


def strike_crossing_w(spec: GbmSpec) -> float:
    """Value of ``W_T`` at which ``S_T == K``."""
    return (math.log(spec.K / spec.s0) - spec.drift) / spec.sigma


def max_jumps(spec: GbmSpec, half_width: float = 1e-6, points: int = 2001):
    """Largest jump of each Delta integrand on a fine grid straddling the strike.

    Returns ``(pathwise_jump, malliavin_jump)``.  The pathwise integrand
    jumps by about ``K / s0`` where ``S_T`` crosses ``K``; the Malliavin
    integrand is continuous there.
    """
    w = strike_crossing_w(spec) + np.linspace(-half_width, half_width, points)
    jp = np.abs(np.diff(delta_pathwise_sample(spec, w))).max()
    jm = np.abs(np.diff(delta_malliavin_sample(spec, w))).max()
    return float(jp), float(jm)
