"""Scalar test objectives f(z) with values and (sub)gradients."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from mhgrad.errors import InvalidInputError


class LossId(enum.Enum):
    HINGE = "hinge"
    CLIPPED_QUADRATIC = "clipquad"
    QUADRATIC = "quad"


_DEFAULT_PARAMS = {
    LossId.HINGE: (1.0,),  # margin: f = max(0, margin - z)
    LossId.CLIPPED_QUADRATIC: (2.0,),  # ceiling: f = min(z^2/2, ceiling)
    LossId.QUADRATIC: (),
}


@dataclass(frozen=True)
class LossFn:
    id: LossId
    params: tuple = ()

    def __post_init__(self):
        if not self.params:
            object.__setattr__(self, "params", _DEFAULT_PARAMS[self.id])
        if self.id is LossId.CLIPPED_QUADRATIC and self.params[0] <= 0:
            raise InvalidInputError("clip level must be positive")

    @classmethod
    def from_name(cls, name: str) -> "LossFn":
        try:
            return cls(LossId(name))
        except ValueError:
            valid = ", ".join(m.value for m in LossId)
            raise InvalidInputError(f"unknown loss {name!r}; expected one of {valid}") from None

    @property
    def name(self) -> str:
        return self.id.value

    @property
    def kinks(self) -> tuple[float, ...]:
        """Points where f is not differentiable."""
        if self.id is LossId.HINGE:
            return (self.params[0],)
        if self.id is LossId.CLIPPED_QUADRATIC:
            edge = math.sqrt(2.0 * self.params[0])
            return (-edge, edge)
        return ()

    def __call__(self, z):
        return loss_value(self, z)

    def grad(self, z):
        return loss_grad(self, z)


def loss_value(f: LossFn, z):
    z = np.asarray(z, dtype=float)
    if f.id is LossId.HINGE:
        out = np.maximum(0.0, f.params[0] - z)
    elif f.id is LossId.CLIPPED_QUADRATIC:
        out = np.minimum(0.5 * z * z, f.params[0])
    else:
        out = 0.5 * z * z
    return out if out.ndim else float(out)


def loss_grad(f: LossFn, z):
    """Derivative of ``f``; at a kink the flat side's value (0) is returned."""
    z = np.asarray(z, dtype=float)
    if f.id is LossId.HINGE:
        out = np.where(z < f.params[0], -1.0, 0.0)
    elif f.id is LossId.CLIPPED_QUADRATIC:
        out = np.where(np.abs(z) < f.kinks[1], z, 0.0)
    else:
        out = z.copy()
    return out if out.ndim else float(out)
