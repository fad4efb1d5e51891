"""Per-sample gradient estimates and batch combination under three schemes.

Pathwise and Malliavin samples are always formed from the same draw ``z``
(common random numbers) so that their covariance, which drives the hybrid
weight, can be estimated from a single batch.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from mhgrad.errors import InvalidInputError
from mhgrad.losses import LossFn
from mhgrad.mixing import hybrid_variance, lambda_star, pair_arrays
from mhgrad.models import (
    CoupledGaussian1D,
    normalized_weight_1d,
    path_jacobian_1d,
    sample_1d,
    score_1d,
)
from mhgrad.stats import PairedMoments


class Mode(enum.Enum):
    PATHWISE = "pathwise"
    MALLIAVIN = "malliavin"
    HYBRID = "hybrid"


@dataclass(frozen=True)
class GradPair:
    """Pathwise and Malliavin gradient samples sharing one draw ``z``.

    Fields may be scalars (one pair) or equal-length arrays (a batch).
    """

    g_path: float | np.ndarray
    g_mall: float | np.ndarray
    z: float | np.ndarray

    def __len__(self):
        return int(np.size(self.g_path))


@dataclass(frozen=True)
class BatchEstimate:
    mean: float
    variance: float  # per-sample variance of the combined stream, B - 1 denominator
    n: int
    lambda_hat: float | None = None

    @property
    def sem(self) -> float:
        return float(np.sqrt(self.variance / self.n))


def pathwise_sample(model: CoupledGaussian1D, f: LossFn, eps):
    s = sample_1d(model, eps)
    return f.grad(s.z) * path_jacobian_1d(model, eps)


def malliavin_sample(model: CoupledGaussian1D, f: LossFn, eps, normalized=False):
    z = sample_1d(model, eps).z
    weight = normalized_weight_1d if normalized else score_1d
    return f(z) * weight(model, z)


def sample_grad_pair(model: CoupledGaussian1D, f: LossFn, eps, normalized=False) -> GradPair:
    z = sample_1d(model, eps).z
    g_path = f.grad(z) * path_jacobian_1d(model, eps)
    weight = normalized_weight_1d if normalized else score_1d
    g_mall = f(z) * weight(model, z)
    return GradPair(g_path, g_mall, z)


def estimate_from_moments(pm: PairedMoments, mode: Mode, ridge=None, lam=None) -> BatchEstimate:
    """Combine merged pair moments into a batch estimate.

    ``lam`` overrides the weight for hybrid mode; otherwise it is estimated
    from ``pm`` itself.
    """
    mode = Mode(mode)
    if pm.n < 1:
        raise InvalidInputError("empty batch")
    if pm.n < 2:
        if mode is Mode.HYBRID:
            raise InvalidInputError("hybrid mode needs at least 2 pairs")
        mean = pm.mean_x if mode is Mode.PATHWISE else pm.mean_y
        return BatchEstimate(mean, float("nan"), pm.n)
    v_path, v_mall, c = pm.moments()
    if mode is Mode.PATHWISE:
        return BatchEstimate(pm.mean_x, v_path, pm.n)
    if mode is Mode.MALLIAVIN:
        return BatchEstimate(pm.mean_y, v_mall, pm.n)
    if lam is None:
        lam = lambda_star(v_path, v_mall, c, ridge)
    mean = lam * pm.mean_x + (1 - lam) * pm.mean_y
    var = max(hybrid_variance(v_path, v_mall, c, lam), 0.0)
    return BatchEstimate(mean, var, pm.n, lam)


def estimate_batch(pairs, mode: Mode, ridge=None, split_batch=False) -> BatchEstimate:
    """Batch gradient estimate.

    Hybrid mode estimates the mixing weight from the batch moments and
    applies it to the same batch means.  With ``split_batch`` the weight is
    estimated on the first half and applied to the second half only, which
    removes the O(1/B) bias of reusing the batch.
    """
    mode = Mode(mode)
    g_path, g_mall = pair_arrays(pairs)
    if g_path.size < (2 if mode is Mode.HYBRID else 1):
        raise InvalidInputError(f"batch of {g_path.size} is too small for {mode.value} mode")
    if mode is Mode.HYBRID and split_batch:
        half = g_path.size // 2
        if half < 2:
            raise InvalidInputError("split-batch hybrid needs at least 4 pairs")
        first = PairedMoments.from_arrays(g_path[:half], g_mall[:half])
        v_path, v_mall, c = first.moments()
        lam = lambda_star(v_path, v_mall, c, ridge)
        second = PairedMoments.from_arrays(g_path[half:], g_mall[half:])
        return estimate_from_moments(second, mode, lam=lam)
    return estimate_from_moments(PairedMoments.from_arrays(g_path, g_mall), mode, ridge)


__all__ = [
    "BatchEstimate",
    "GradPair",
    "Mode",
    "estimate_batch",
    "estimate_from_moments",
    "malliavin_sample",
    "pathwise_sample",
    "sample_grad_pair",
]
