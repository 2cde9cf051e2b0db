import math

import numpy as np
import pytest

from polyhgm.errors import MaxStepsExceeded, SingularGram, StepUnderflow
from polyhgm.integrators import SolverConfig, integrate_ode, rk4_fixed


def rotation_rhs(t, y):
    return np.array([-y[1], y[0]]) * (1 + t)


def rotation_exact():
    ang = 1.5  # integral of (1 + t) over [0, 1]
    return np.array([math.cos(ang), math.sin(ang)])


def test_dopri5_meets_tolerance():
    out = integrate_ode(rotation_rhs, [1.0, 0.0], SolverConfig(rel_tol=1e-10, abs_tol=1e-12))
    np.testing.assert_allclose(out.y, rotation_exact(), atol=1e-9)
    assert out.steps > 3


def test_rk4_step_doubling_meets_tolerance():
    cfg = SolverConfig(scheme="rk4", h_init=0.25, rel_tol=1e-9, abs_tol=1e-12)
    out = integrate_ode(rotation_rhs, [1.0, 0.0], cfg)
    np.testing.assert_allclose(out.y, rotation_exact(), atol=1e-7)
    assert out.rejections > 0


@pytest.mark.parametrize("n", [8, 16])
def test_rk4_fixed_is_fourth_order(n):
    exact = rotation_exact()
    e1 = np.linalg.norm(rk4_fixed(rotation_rhs, [1.0, 0.0], n) - exact)
    e2 = np.linalg.norm(rk4_fixed(rotation_rhs, [1.0, 0.0], 2 * n) - exact)
    assert math.log2(e1 / e2) == pytest.approx(4.0, abs=0.3)


def test_zero_rhs_keeps_state():
    y0 = np.array([1.0, -2.0, 3.0])
    out = integrate_ode(lambda t, y: np.zeros_like(y), y0, SolverConfig())
    np.testing.assert_array_equal(out.y, y0)


def test_singular_locus_rejects_then_underflows():
    def rhs(t, y):
        if t > 0.5:
            raise SingularGram((0, 1))
        return y

    with pytest.raises(StepUnderflow):
        integrate_ode(rhs, [1.0], SolverConfig(h_min=1e-6))


def test_max_steps():
    with pytest.raises(MaxStepsExceeded):
        integrate_ode(rotation_rhs, [1.0, 0.0], SolverConfig(max_steps=3, h_max=0.01, h_init=0.01))


@pytest.mark.parametrize(
    "kwargs",
    [dict(rel_tol=0), dict(abs_tol=-1), dict(h_min=0.5, h_init=0.1), dict(scheme="euler")],
)
def test_config_validation(kwargs):
    with pytest.raises(ValueError):
        SolverConfig(**kwargs)
