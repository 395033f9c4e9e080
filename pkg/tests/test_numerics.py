import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hamjac.errors import DomainError, GridError, GuardViolation, NonFiniteError, QuadratureError
from hamjac.numerics import (
    IntegratorConfig,
    fd_derivative,
    integrate_ode,
    quad_adaptive,
    quad_cumulative,
)

# closed form of the conservative profile integral, (2/3) sqrt(2) (2^1.5 - 1)
PROFILE_INTEGRAL = 1.7238576250846033


def harmonic(x, v):
    return v, -x


def test_harmonic_half_period():
    traj = integrate_ode(harmonic, 1.0, 0.0, IntegratorConfig(t_end=math.pi, step=1e-3))
    assert abs(traj.x[-1] + 1.0) < 1e-8
    assert traj.t[-1] == pytest.approx(math.pi, abs=1e-15)
    assert traj.monotone and not traj.truncated


def test_free_fall_exact():
    traj = integrate_ode(lambda x, v: (v, 2.0), 0.0, 0.0, IntegratorConfig(t_end=1.0))
    assert abs(traj.x[-1] - 1.0) < 1e-10
    assert abs(traj.v[-1] - 2.0) < 1e-10


def test_tangent_solution():
    traj = integrate_ode(lambda x, v: (v, 1.0 + v * v), 0.0, 0.0, IntegratorConfig(t_end=0.5))
    assert abs(traj.v[-1] - 0.54630248984379051) < 1e-8


def test_fixed_step_gaps():
    step = 3e-3
    traj = integrate_ode(harmonic, 1.0, 0.0, IntegratorConfig(t_end=1.0, step=step))
    gaps = np.diff(traj.t)
    assert np.all(gaps > 0) and np.all(gaps <= 2 * step)


def test_rk4_order():
    def max_err(step):
        traj = integrate_ode(harmonic, 1.0, 0.0, IntegratorConfig(t_end=2 * math.pi, step=step))
        return np.max(np.abs(traj.x - np.cos(traj.t)))

    ratio = max_err(2 * math.pi / 100) / max_err(2 * math.pi / 200)
    assert 12 <= ratio <= 20


def test_rk45_matches_closed_form():
    cfg = IntegratorConfig(t_end=2 * math.pi, step=1e-2, method="rk45_adaptive", abs_tol=1e-12, rel_tol=1e-12)
    traj = integrate_ode(harmonic, 1.0, 0.0, cfg)
    assert traj.t[-1] == pytest.approx(2 * math.pi, abs=1e-12)
    assert np.max(np.abs(traj.x - np.cos(traj.t))) < 1e-9
    assert traj.monotone


def test_hermite_interpolation():
    traj = integrate_ode(harmonic, 1.0, 0.0, IntegratorConfig(t_end=1.0, step=1e-2))
    tq = np.linspace(0.0, 1.0, 37)
    x, v = traj.interpolate(tq)
    assert np.max(np.abs(x - np.cos(tq))) < 1e-8
    assert np.max(np.abs(v + np.sin(tq))) < 1e-7
    with pytest.raises(DomainError):
        traj.interpolate([1.5])


@pytest.mark.parametrize("method", ["rk4_fixed", "rk45_adaptive"])
def test_guard_bisection_lands_on_boundary(method):
    # x = t under unit velocity, guard x < 0.5
    cfg = IntegratorConfig(t_end=1.0, step=1e-2, method=method)
    traj = integrate_ode(lambda x, v: (1.0, 0.0), 0.0, 1.0, cfg, guard=lambda x, v: x < 0.5)
    assert traj.truncated
    assert 0.5 - traj.t[-1] <= 2e-12
    assert traj.x[-1] < 0.5
    with pytest.raises(GuardViolation) as info:
        integrate_ode(lambda x, v: (1.0, 0.0), 0.0, 1.0, cfg, guard=lambda x, v: x < 0.5, strict=True)
    assert info.value.trajectory.truncated


def test_guard_false_at_start():
    with pytest.raises(GuardViolation):
        integrate_ode(harmonic, 1.0, 0.0, IntegratorConfig(t_end=1.0), guard=lambda x, v: x < 0)


def test_non_finite_rhs():
    with pytest.raises(NonFiniteError):
        integrate_ode(lambda x, v: (v, math.inf), 0.0, 0.0, IntegratorConfig(t_end=1.0))


@pytest.mark.parametrize("kwargs", [{"step": 0.0}, {"t_end": -1.0}, {"abs_tol": 0.0}, {"method": "euler"}])
def test_integrator_config_validation(kwargs):
    base = {"t_end": 1.0}
    base.update(kwargs)
    with pytest.raises(ValueError):
        IntegratorConfig(**base)


QUAD_CASES = [
    (lambda x: 1.0, 0.0, 3.0, 3.0),
    (lambda x: math.sqrt(2 * (1 + x)), 0.0, 1.0, PROFILE_INTEGRAL),
    (math.sin, 0.0, math.pi, 2.0),
]


def test_quad_constant_exact():
    assert quad_adaptive(lambda x: 1.0, 0.0, 3.0).value == 3.0


@pytest.mark.parametrize("f, a, b, exact", QUAD_CASES)
def test_quad_examples(f, a, b, exact):
    res = quad_adaptive(f, a, b, abs_tol=1e-12, rel_tol=1e-12)
    assert abs(res.value - exact) <= max(1e-12, 1e-12 * abs(res.value))
    assert res.err_estimate >= 0
    assert res.evaluations > 0


@pytest.mark.parametrize("f, a, b, exact", QUAD_CASES)
def test_quad_error_estimate_conservative(f, a, b, exact):
    res = quad_adaptive(f, a, b, abs_tol=1e-6, rel_tol=1e-6)
    assert abs(res.value - exact) <= 2 * res.err_estimate + 1e-15


def test_quad_errors():
    with pytest.raises(ValueError):
        quad_adaptive(math.sin, 1.0, 0.0)
    assert quad_adaptive(math.sin, 1.0, 1.0).value == 0.0
    with pytest.raises(NonFiniteError) as info:
        quad_adaptive(lambda x: math.inf if x == 0.5 else 1.0, 0.0, 1.0)
    assert info.value.where == 0.5
    with pytest.raises(QuadratureError):
        quad_adaptive(lambda x: math.sin(1.0 / x) if x else 0.0, 0.0, 1.0, 1e-14, 1e-14, max_depth=8)


def test_cumulative_examples():
    assert quad_cumulative(lambda x: 1.0, [0.0, 1.0, 2.0]) == pytest.approx([0.0, 1.0, 2.0], abs=1e-15)
    assert quad_cumulative(lambda x: 2 * x, [0.0, 1.0, 2.0]) == pytest.approx([0.0, 1.0, 4.0], abs=1e-14)
    out = quad_cumulative(math.exp, np.linspace(0.0, 1.0, 11))
    assert out[0] == 0.0
    assert abs(out[-1] - (math.e - 1)) < 1e-12


def test_cumulative_exact_for_degree_nine():
    coeffs = np.arange(1.0, 11.0)
    poly = np.polynomial.Polynomial(coeffs)
    out = quad_cumulative(lambda x: float(poly(x)), [-1.0, 0.3, 2.0])
    anti = poly.integ()
    assert out[-1] == pytest.approx(anti(2.0) - anti(-1.0), rel=1e-13)


def test_cumulative_agrees_with_adaptive():
    f = lambda x: math.sqrt(2 * (1 + x))
    out = quad_cumulative(f, np.linspace(0.0, 1.0, 21))
    adaptive = quad_adaptive(f, 0.0, 1.0)
    assert abs(out[-1] - adaptive.value) <= 2e-12 + adaptive.err_estimate


@pytest.mark.parametrize("grid", [[0.0, 2.0, 1.0], [0.0, 0.0, 1.0], [1.0]])
def test_cumulative_bad_grid(grid):
    with pytest.raises(GridError):
        quad_cumulative(math.exp, grid)


@settings(max_examples=50)
@given(st.lists(st.floats(min_value=-1, max_value=1), min_size=2, max_size=8, unique=True))
def test_cumulative_increments_are_cell_integrals(points):
    grid = sorted(points)
    if min(np.diff(grid)) < 1e-6:
        return
    out = quad_cumulative(math.cos, grid)
    assert np.diff(out) == pytest.approx(np.diff(np.sin(grid)), abs=1e-10)


def test_fd_examples():
    assert abs(fd_derivative(lambda x: x * x, 3.0, 1e-5) - 6.0) < 1e-9
    assert abs(fd_derivative(lambda x: x * x, 1.0, 1e-4, "second") - 2.0) < 1e-5
    h = 1e-3
    assert abs(fd_derivative(math.exp, 0.0, h) - 1.0) < h * h


def test_fd_errors():
    with pytest.raises(ValueError):
        fd_derivative(math.exp, 0.0, 0.0)
    with pytest.raises(ValueError):
        fd_derivative(math.exp, 0.0, 1e-3, "third")
    with pytest.raises(NonFiniteError):
        fd_derivative(lambda x: math.inf, 0.0)
