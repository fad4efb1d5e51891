"""Batch moments, the variance-optimal mixing weight, and its finite-sample bound."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from mhgrad.errors import InvalidInputError

# Scale-relative default ridge: eps = RIDGE_REL * (v_path + v_mall + RIDGE_FLOOR).
RIDGE_REL = 1e-8
RIDGE_FLOOR = 1e-30


def pair_arrays(pairs) -> tuple[np.ndarray, np.ndarray]:
    """Extract ``(g_path, g_mall)`` arrays from a batched pair or a sequence of pairs."""
    if hasattr(pairs, "g_path"):
        return np.atleast_1d(np.asarray(pairs.g_path, float)), np.atleast_1d(np.asarray(pairs.g_mall, float))
    pairs = list(pairs)
    return (
        np.array([p.g_path for p in pairs], dtype=float),
        np.array([p.g_mall for p in pairs], dtype=float),
    )


def moments_from_arrays(g_path, g_mall, axis=-1):
    """Sample variances and covariance along ``axis`` with ``B - 1`` denominators."""
    g_path = np.asarray(g_path, dtype=float)
    g_mall = np.asarray(g_mall, dtype=float)
    b = g_path.shape[axis]
    if b < 2:
        raise InvalidInputError(f"need at least 2 pairs for moments, got {b}")
    dp = g_path - g_path.mean(axis=axis, keepdims=True)
    dm = g_mall - g_mall.mean(axis=axis, keepdims=True)
    v_path = np.sum(dp * dp, axis=axis) / (b - 1)
    v_mall = np.sum(dm * dm, axis=axis) / (b - 1)
    c = np.sum(dp * dm, axis=axis) / (b - 1)
    return v_path, v_mall, c


def empirical_moments(pairs) -> tuple[float, float, float]:
    g_path, g_mall = pair_arrays(pairs)
    v_path, v_mall, c = moments_from_arrays(g_path, g_mall)
    return float(v_path), float(v_mall), float(c)


def default_ridge(v_path, v_mall):
    return RIDGE_REL * (np.asarray(v_path) + np.asarray(v_mall) + RIDGE_FLOOR)


def lambda_star(v_path, v_mall, c, ridge=None):
    """Variance-minimising weight on the pathwise stream, clipped to [0, 1].

    ``(v_mall - c) / (v_path + v_mall - 2c + ridge)``.  When the two streams
    differ by a constant (``v_path + v_mall - 2c <= 0``) every weight gives
    the same variance and 1 (pure pathwise) is returned.  Broadcasts over
    array inputs.
    """
    v_path = np.asarray(v_path, dtype=float)
    v_mall = np.asarray(v_mall, dtype=float)
    c = np.asarray(c, dtype=float)
    if ridge is None:
        ridge = default_ridge(v_path, v_mall)
    elif np.any(np.asarray(ridge) <= 0):
        raise InvalidInputError("ridge must be positive")
    gap = v_path + v_mall - 2.0 * c
    with np.errstate(divide="ignore", invalid="ignore"):
        lam = (v_mall - c) / (gap + ridge)
    lam = np.where(gap > 0, np.clip(lam, 0.0, 1.0), 1.0)
    return lam if lam.ndim else float(lam)


def hybrid_variance(v_path, v_mall, c, lam):
    lam_arr = np.asarray(lam, dtype=float)
    if np.any((lam_arr < 0) | (lam_arr > 1)):
        raise InvalidInputError("lambda must lie in [0, 1]")
    out = lam_arr**2 * v_path + (1 - lam_arr) ** 2 * v_mall + 2 * lam_arr * (1 - lam_arr) * c
    return out if np.ndim(out) else float(out)


@dataclass(frozen=True)
class MixingStats:
    v_path: float
    v_mall: float
    c: float
    lambda_hat: float
    ridge: float
    n: int

    @property
    def hybrid_variance(self) -> float:
        return hybrid_variance(self.v_path, self.v_mall, self.c, self.lambda_hat)


def mixing_stats(pairs, ridge=None) -> MixingStats:
    g_path, g_mall = pair_arrays(pairs)
    v_path, v_mall, c = (float(v) for v in moments_from_arrays(g_path, g_mall))
    if ridge is None:
        ridge = float(default_ridge(v_path, v_mall))
    return MixingStats(v_path, v_mall, c, lambda_star(v_path, v_mall, c, ridge), ridge, g_path.size)


@dataclass(frozen=True)
class LambdaBound:
    M: float
    delta: float
    B: int
    ridge: float
    bound: float


def lambda_bound(M: float, ridge: float, B: int, delta: float) -> LambdaBound:
    """High-probability deviation bound on the estimated mixing weight.

    ``(3 M^2 / ridge) * sqrt(3/2) * sqrt(log(6 / delta) / (2 B))``, from
    Hoeffding on each of the three moments plus a union bound, with ``M``
    bounding ``|g_path|`` and ``|g_mall|``.
    """
    if M <= 0 or ridge <= 0 or B < 1 or not (0 < delta <= 1):
        raise InvalidInputError("need M > 0, ridge > 0, B >= 1, 0 < delta <= 1")
    bound = (3.0 * M * M / ridge) * math.sqrt(1.5) * math.sqrt(math.log(6.0 / delta) / (2.0 * B))
    return LambdaBound(M, delta, B, ridge, bound)
