"""Mergeable running moments (Welford updates, Chan et al. pairwise merge)."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class RunningMoments:
    n: int = 0
    mean: float = 0.0
    m2: float = 0.0  # sum of squared deviations from the mean

    @classmethod
    def from_array(cls, x) -> "RunningMoments":
        x = np.asarray(x, dtype=float).ravel()
        if x.size == 0:
            return cls()
        mean = float(x.mean())
        d = x - mean
        return cls(x.size, mean, float(d @ d))

    def push(self, x: float) -> "RunningMoments":
        n = self.n + 1
        delta = x - self.mean
        mean = self.mean + delta / n
        return RunningMoments(n, mean, self.m2 + delta * (x - mean))

    def merge(self, other: "RunningMoments") -> "RunningMoments":
        if other.n == 0:
            return self
        if self.n == 0:
            return other
        n = self.n + other.n
        delta = other.mean - self.mean
        mean = self.mean + delta * other.n / n
        m2 = self.m2 + other.m2 + delta * delta * self.n * other.n / n
        return RunningMoments(n, mean, m2)

    @property
    def variance(self) -> float:
        if self.n < 2:
            return float("nan")
        return self.m2 / (self.n - 1)

    @property
    def sem(self) -> float:
        return float(np.sqrt(self.variance / self.n))


@dataclass(frozen=True)
class PairedMoments:
    """Joint first and second moments of two streams sampled in lockstep."""

    n: int = 0
    mean_x: float = 0.0
    mean_y: float = 0.0
    m2_x: float = 0.0
    m2_y: float = 0.0
    c_xy: float = 0.0  # sum of cross deviations

    @classmethod
    def from_arrays(cls, x, y) -> "PairedMoments":
        x = np.asarray(x, dtype=float).ravel()
        y = np.asarray(y, dtype=float).ravel()
        if x.shape != y.shape:
            raise ValueError("paired streams must have equal length")
        if x.size == 0:
            return cls()
        mx, my = float(x.mean()), float(y.mean())
        dx, dy = x - mx, y - my
        return cls(x.size, mx, my, float(dx @ dx), float(dy @ dy), float(dx @ dy))

    def merge(self, other: "PairedMoments") -> "PairedMoments":
        if other.n == 0:
            return self
        if self.n == 0:
            return other
        n = self.n + other.n
        f = self.n * other.n / n
        dx = other.mean_x - self.mean_x
        dy = other.mean_y - self.mean_y
        return PairedMoments(
            n,
            self.mean_x + dx * other.n / n,
            self.mean_y + dy * other.n / n,
            self.m2_x + other.m2_x + dx * dx * f,
            self.m2_y + other.m2_y + dy * dy * f,
            self.c_xy + other.c_xy + dx * dy * f,
        )

    def moments(self) -> tuple[float, float, float]:
        """Unbiased ``(var_x, var_y, cov_xy)``."""
        d = self.n - 1
        return self.m2_x / d, self.m2_y / d, self.c_xy / d


def merge_all(parts):
    """Left fold of ``merge`` in the given order."""
    it = iter(parts)
    acc = next(it)
    for p in it:
        acc = acc.merge(p)
    return acc
