"""Extended-real arithmetic: the guard rails around infinity."""

import math

import numpy as np
import pytest

from incdual import ExtReal, MINUS_INF, PLUS_INF


def test_finite_values_behave_like_floats():
    a = ExtReal(1.5)
    b = ExtReal(-0.25)
    assert float(a + b) == 1.25
    assert float(a - b) == 1.75
    assert float(a * b) == -0.375
    assert float(-a) == -1.5
    assert a > b
    assert a.is_finite


def test_nan_is_rejected():
    with pytest.raises(ValueError):
        ExtReal(float("nan"))


def test_infinity_dominates_finite_addition():
    assert float(PLUS_INF + 5.0) == math.inf
    assert float(MINUS_INF + 5.0) == -math.inf
    assert float(PLUS_INF - 5.0) == math.inf
    assert not PLUS_INF.is_finite
    assert not MINUS_INF.is_finite


def test_opposite_infinities_raise():
    with pytest.raises(ValueError):
        PLUS_INF + MINUS_INF
    with pytest.raises(ValueError):
        PLUS_INF - PLUS_INF
    with pytest.raises(ValueError):
        MINUS_INF - MINUS_INF


def test_zero_times_infinity_raises():
    with pytest.raises(ValueError):
        PLUS_INF * 0.0
    with pytest.raises(ValueError):
        ExtReal(0.0) * MINUS_INF


def test_scaling_infinity_by_nonzero_is_fine():
    assert float(ExtReal(2.0) * PLUS_INF) == math.inf
    assert float(ExtReal(-1.0) * PLUS_INF) == -math.inf


def test_coercion_from_numpy_scalars():
    v = ExtReal(1.0) + np.float64(2.0)
    assert isinstance(v, ExtReal)
    assert float(v) == 3.0


def test_negation_of_infinities():
    assert float(-PLUS_INF) == -math.inf
    assert float(-MINUS_INF) == math.inf


def test_ordering_with_infinities():
    vals = [PLUS_INF, ExtReal(0.0), MINUS_INF, ExtReal(-3.0)]
    assert sorted(vals) == [MINUS_INF, ExtReal(-3.0), ExtReal(0.0), PLUS_INF]
