import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from hamjac.dynsys import FirstOrderRelativistic, SystemParams, TransformedSystem
from hamjac.errors import DomainError, SeriesDivergenceError
from hamjac.numerics import IntegratorConfig, Trajectory, quad_adaptive
from hamjac.specfun import SeriesTolerance
from hamjac.transform import (
    ParamTransform,
    compare_pictures,
    energy_invariance,
    identity_transform,
    momentum_map,
    momentum_map_inverse,
    momentum_map_series,
    relativistic_transform,
    round_trip_error,
    scaled_time_transform,
    tau_of_t,
    certify_energy_invariance,
    velocity_map,
    velocity_unmap,
)


def _constant_velocity(v, t_end=1.0, n=11):
    t = np.linspace(0.0, t_end, n)
    return Trajectory(t, v * t, np.full(n, v), np.zeros(n))


def test_tau_identity_when_alpha_zero():
    traj = _constant_velocity(3.0)
    t, tau = tau_of_t(traj, relativistic_transform(0.0))
    assert tau == pytest.approx(t, abs=1e-15)


def test_tau_constant_velocity():
    _, tau = tau_of_t(_constant_velocity(1.2), relativistic_transform(0.5))
    assert tau == pytest.approx(0.8 * np.linspace(0.0, 1.0, 11), abs=1e-15)


def test_tau_two_ways(drag_params, drag_trajectory):
    xf = relativistic_transform(drag_params.alpha)
    t, tau = tau_of_t(drag_trajectory, xf)
    assert np.all(np.diff(tau) > 0)
    assert np.all(tau <= t + 1e-15)

    def g_of_t(s):
        x, v = drag_trajectory.interpolate([s])
        return xf.tau_integrand(float(x[0]), float(v[0]))

    direct = quad_adaptive(g_of_t, 0.0, 2.0, 1e-11, 1e-11).value
    assert abs(tau[-1] - direct) <= 1e-8


def test_tau_rejects_nonpositive_integrand():
    bad = ParamTransform(lambda x, v: -1.0, lambda v: v, lambda v: v)
    with pytest.raises(DomainError):
        tau_of_t(_constant_velocity(1.0), bad)


def test_velocity_map_examples():
    xf = relativistic_transform(0.5)
    assert velocity_map(xf, 0.0) == 0.0
    assert velocity_map(xf, 1.0) == pytest.approx(1.1547005383792515, rel=1e-15)
    assert velocity_unmap(xf, 1.1547005383792515) == pytest.approx(1.0, rel=1e-15)
    with pytest.raises(DomainError):
        velocity_map(xf, 2.0)


def test_round_trip_grid():
    alpha = 0.3
    vs = np.linspace(-0.99, 0.99, 199) / alpha
    assert round_trip_error(relativistic_transform(alpha), vs.tolist()) <= 1e-12


@given(st.floats(min_value=-1e6, max_value=1e6))
def test_unmap_stays_in_domain(vt):
    alpha = 0.7
    assert abs(alpha * velocity_unmap(relativistic_transform(alpha), vt)) < 1


@given(st.floats(min_value=-0.98, max_value=0.98), st.floats(min_value=-0.98, max_value=0.98))
def test_forward_map_increasing(u1, u2):
    xf = relativistic_transform(1.0)
    if u1 < u2:
        assert velocity_map(xf, u1) < velocity_map(xf, u2)


def test_jacobian_matches_differences():
    xf = relativistic_transform(0.4)
    fd_only = ParamTransform(xf.tau_integrand, xf.velocity_forward, xf.velocity_inverse)
    for v in (-1.5, 0.0, 0.7, 2.0):
        assert fd_only.jacobian(v) == pytest.approx(xf.jacobian(v), rel=1e-7)


def test_scaled_time_validation():
    with pytest.raises(DomainError):
        scaled_time_transform(0.0)


def test_momentum_map_examples():
    p = SystemParams(m=1.0, lam=1.0, gamma=0.0, alpha=1.0)
    assert momentum_map(p, 0.0, 2.5) == 2.5
    assert momentum_map(SystemParams(gamma=0.3), 4.0, 2.5) == 2.5
    assert momentum_map(p, 1.0, 1.0) == pytest.approx(0.67367002294334888, rel=1e-15)
    assert momentum_map_inverse(p, 1.0, momentum_map(p, 1.0, 1.7)) == pytest.approx(1.7, rel=1e-15)
    with pytest.raises(DomainError):
        momentum_map(p, -0.1, 1.0)


def test_momentum_map_series_examples():
    p = SystemParams(m=1.0, lam=1.0, gamma=0.25, alpha=0.5)
    assert p.gamma_tilde == 0.0
    assert momentum_map_series(p, 0.3, 0.0) == 0.0
    assert momentum_map_series(p, 7.0, 1.0) == pytest.approx(1.1547005383792515, rel=1e-14)
    drag = SystemParams(m=1.5, gamma=0.4)
    assert momentum_map_series(drag, 0.5, 2.0) == pytest.approx(1.5 * 2.0 * math.exp(2 * 0.4 * 0.5 / 1.5), rel=1e-15)
    with pytest.raises(DomainError):
        momentum_map_series(p, 0.0, 2.0)


@given(st.floats(min_value=-1.0, max_value=2.0), st.floats(min_value=-0.9, max_value=0.9))
def test_momentum_series_closed_form(x, u):
    p = SystemParams(m=1.3, lam=0.8, gamma=0.2, alpha=0.6)
    v = u / p.alpha
    vt = velocity_map(relativistic_transform(p.alpha), v)
    assert momentum_map_series(p, x, v) == pytest.approx(p.m * vt * p.exp_factor(x), rel=1e-13, abs=1e-300)


def test_momentum_series_near_domain_edge():
    p = SystemParams(alpha=1.0)
    with pytest.raises(SeriesDivergenceError):
        momentum_map_series(p, 0.0, 0.99)
    long_sum = momentum_map_series(p, 0.0, 0.99, SeriesTolerance(rel_tol=1e-14, max_terms=5000))
    assert long_sum == pytest.approx(0.99 / math.sqrt(1 - 0.99**2), rel=1e-12)


def test_certify_identity(drag_systems, drag_trajectory):
    first_order, _, _ = drag_systems
    rep = certify_energy_invariance(first_order, first_order, identity_transform(), drag_trajectory)
    assert rep.verdict
    assert rep.max_condition_residual <= 1e-14
    assert rep.max_energy_mismatch <= 1e-14
    assert rep.max_dKdx_mismatch <= 1e-14
    assert rep.samples == len(drag_trajectory)


def test_certify_drag_example(drag_systems, drag_trajectory):
    rep = certify_energy_invariance(*drag_systems, drag_trajectory)
    assert rep.verdict
    assert rep.max_condition_residual <= 1e-10
    assert rep.max_energy_mismatch <= 1e-9
    assert rep.max_dKdx_mismatch <= 1e-8
    assert rep.max_dynamics_mismatch <= 1e-10


def test_certify_common_value(drag_params, drag_systems, drag_trajectory):
    # both sides of the condition reduce to exp(-2 gt x/m)(lam - gamma v^2)/(1 - alpha^2 v^2)
    first_order, _, _ = drag_systems
    p = drag_params
    for x, v in zip(drag_trajectory.x[::997].tolist(), drag_trajectory.v[::997].tolist()):
        expected = p.exp_factor(x) * (p.lam - p.gamma * v * v) / (1 - (p.alpha * v) ** 2)
        assert first_order.d2L_dv2(x, v) * first_order.force(x, v) == pytest.approx(expected, rel=1e-13)


def test_certify_negative_control(drag_systems, drag_trajectory):
    first_order, transformed, _ = drag_systems
    rep = certify_energy_invariance(first_order, transformed, scaled_time_transform(2.0), drag_trajectory)
    assert not rep.verdict
    assert rep.max_condition_residual > 0.1


def test_certify_reports_sample_index(drag_systems):
    first_order, transformed, xf = drag_systems
    traj = _constant_velocity(5.0, n=3)
    with pytest.raises(DomainError, match="sample 0"):
        certify_energy_invariance(first_order, transformed, xf, traj)


def test_energy_invariance_random_states(drag_systems):
    first_order, transformed, xf = drag_systems
    rng = np.random.default_rng(0)
    states = list(zip(rng.uniform(0, 1, 20).tolist(), rng.uniform(-2, 2, 20).tolist()))
    assert energy_invariance(first_order, transformed, xf, states) <= 1e-9


def test_energy_invariance_fails_for_scaled_time(drag_systems):
    first_order, transformed, _ = drag_systems
    states = [(0.2, 1.0), (0.5, -0.7)]
    assert energy_invariance(first_order, transformed, scaled_time_transform(2.0), states) > 0.1


def test_dynamics_commute(drag_systems):
    first_order, transformed, xf = drag_systems
    err = compare_pictures(first_order, transformed, xf, 0.0, 0.0, IntegratorConfig(t_end=2.0, step=1e-4))
    assert err <= 1e-7


def test_dynamics_commute_other_start():
    p = SystemParams(m=1.0, lam=1.0, gamma=0.5, alpha=0.4)
    err = compare_pictures(
        FirstOrderRelativistic(p), TransformedSystem(p), relativistic_transform(p.alpha),
        0.3, -1.0, IntegratorConfig(t_end=1.5, step=1e-4),
    )
    assert err <= 1e-7
