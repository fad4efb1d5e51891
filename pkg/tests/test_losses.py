import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from mhgrad.errors import InvalidInputError
from mhgrad.losses import LossFn, LossId, loss_grad, loss_value

HINGE = LossFn(LossId.HINGE)
CLIP = LossFn(LossId.CLIPPED_QUADRATIC)
QUAD = LossFn(LossId.QUADRATIC)


@pytest.mark.parametrize(
    "f,z,value",
    [(HINGE, 2.0, 0.0), (CLIP, 10.0, 2.0), (QUAD, 3.0, 4.5), (HINGE, -1.0, 2.0), (CLIP, 1.0, 0.5)],
)
def test_values(f, z, value):
    assert loss_value(f, z) == value


@pytest.mark.parametrize(
    "f,z,grad",
    [(HINGE, 0.0, -1.0), (HINGE, 1.0, 0.0), (HINGE, 3.0, 0.0), (CLIP, 1.0, 1.0), (CLIP, 2.0, 0.0),
     (CLIP, -2.0, 0.0), (CLIP, -1.5, -1.5), (QUAD, -0.7, -0.7)],
)
def test_grads(f, z, grad):
    assert loss_grad(f, z) == grad


def test_from_name():
    assert LossFn.from_name("clipquad") == CLIP
    assert LossFn.from_name("hinge").kinks == (1.0,)
    assert CLIP.kinks == (-2.0, 2.0)
    with pytest.raises(InvalidInputError):
        LossFn.from_name("huber")


def test_vectorised():
    z = np.array([-3.0, 0.5, 1.5, 3.0])
    np.testing.assert_array_equal(loss_value(CLIP, z), [2.0, 0.125, 1.125, 2.0])
    np.testing.assert_array_equal(loss_grad(HINGE, z), [-1.0, -1.0, 0.0, 0.0])


@pytest.mark.parametrize("f", [HINGE, CLIP, QUAD], ids=lambda f: f.name)
@given(z=st.floats(-10, 10))
def test_grad_matches_fd_away_from_kinks(f, z):
    if any(abs(z - k) <= 1e-6 for k in f.kinks):
        return
    h = 1e-7
    fd = (loss_value(f, z + h) - loss_value(f, z - h)) / (2 * h)
    assert loss_grad(f, z) == pytest.approx(fd, rel=1e-6, abs=1e-6)


@given(st.floats(-1e6, 1e6))
def test_ranges(z):
    assert loss_value(HINGE, z) >= 0
    assert 0 <= loss_value(CLIP, z) <= 2
