"""Time reparametrizations ``dtau = g(x, v) dt`` that leave position unchanged.

Under such a map the new velocity is ``v_tilde = dx/dtau = v / g``. The
relativistic example uses ``g = sqrt(1 - alpha^2 v^2)``, which turns the
first-order drag law into ``m dv/dtau = lam + gt v^2``.

:func:`certify_energy_invariance` checks on-shell that ``L_vv dv/dt`` equals
``L~_vv dv~/dtau`` for a pair of systems and that their energies agree.
"""

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .dynsys import FirstOrderRelativistic, TransformedSystem
from .errors import DomainError, SeriesDivergenceError
from .numerics import IntegratorConfig, fd_derivative, integrate_ode
from .specfun import DEFAULT_TOL, bessel_combo


@dataclass(frozen=True)
class ParamTransform:
    """A reparametrization with its velocity maps.

    Attributes:
        tau_integrand: ``g(x, v) = dtau/dt``; must be positive.
        velocity_forward: ``v -> v_tilde``.
        velocity_inverse: ``v_tilde -> v``.
        velocity_jacobian: ``d v_tilde / d v``; finite differences of
            ``velocity_forward`` are used when omitted.
        name: Label used in reports.
    """

    tau_integrand: Callable[[float, float], float]
    velocity_forward: Callable[[float], float]
    velocity_inverse: Callable[[float], float]
    velocity_jacobian: Optional[Callable[[float], float]] = None
    name: str = "custom"

    def jacobian(self, v):
        if self.velocity_jacobian is not None:
            return self.velocity_jacobian(v)
        return fd_derivative(self.velocity_forward, v, 1e-6)


def relativistic_transform(alpha):
    """``dtau = sqrt(1 - alpha^2 v^2) dt``, ``v_tilde = v / sqrt(1 - alpha^2 v^2)``."""
    a2 = alpha * alpha

    def g(x, v):
        u2 = a2 * v * v
        if not u2 < 1.0:
            raise DomainError(f"|alpha v| must be below 1, got {math.sqrt(u2)!r}")
        return math.sqrt(1.0 - u2)

    def forward(v):
        return v / g(0.0, v)

    def inverse(vt):
        return vt / math.sqrt(1.0 + a2 * vt * vt)

    def jac(v):
        return g(0.0, v) ** -3

    return ParamTransform(g, forward, inverse, jac, name="relativistic")


def identity_transform():
    return ParamTransform(
        lambda x, v: 1.0, lambda v: v, lambda vt: vt, lambda v: 1.0, name="identity"
    )


def scaled_time_transform(factor):
    """``tau = factor * t``; with ``factor != 1`` this does not preserve energy."""
    if not factor > 0:
        raise DomainError(f"time scale factor must be positive, got {factor!r}")
    return ParamTransform(
        lambda x, v: factor,
        lambda v: v / factor,
        lambda vt: vt * factor,
        lambda v: 1.0 / factor,
        name=f"scaled_time({factor!r})",
    )


def velocity_map(xf, v):
    return xf.velocity_forward(v)


def velocity_unmap(xf, v_tilde):
    return xf.velocity_inverse(v_tilde)


def tau_of_t(traj, xf):
    """Accumulate ``tau(t) = integral_0^t g dt`` along a trajectory.

    Each interval is integrated by Simpson's rule; the midpoint state comes
    from the trajectory's cubic Hermite interpolant.

    Returns:
        ``(t, tau)`` arrays with ``tau[0] = 0``.
    """
    g = np.array([xf.tau_integrand(x, v) for x, v in zip(traj.x.tolist(), traj.v.tolist())])
    xm, vm = traj.midpoints()
    gm = np.array([xf.tau_integrand(x, v) for x, v in zip(xm.tolist(), vm.tolist())])
    if np.any(g <= 0) or np.any(gm <= 0):
        bad = int(np.argmax(g <= 0)) if np.any(g <= 0) else int(np.argmax(gm <= 0))
        raise DomainError(f"tau integrand is not positive near sample {bad}")
    h = np.diff(traj.t)
    cells = h * (g[:-1] + 4.0 * gm + g[1:]) / 6.0
    return traj.t.copy(), np.concatenate(([0.0], np.cumsum(cells)))


def momentum_map(params, x, p, tol=DEFAULT_TOL):
    """``p_tilde = p exp(-y)(I0(y) + I1(y))`` with ``y = lam alpha^2 x / m``."""
    if x < 0:
        raise DomainError(f"momentum map needs x >= 0, got {x!r}")
    return p * bessel_combo(params.lam * params.alpha**2 * x / params.m, tol)


def momentum_map_inverse(params, x, p_tilde, tol=DEFAULT_TOL):
    if x < 0:
        raise DomainError(f"momentum map needs x >= 0, got {x!r}")
    return p_tilde / bessel_combo(params.lam * params.alpha**2 * x / params.m, tol)


def momentum_map_series(params, x, v, tol=DEFAULT_TOL):
    """``m exp(-2 gt x/m) sum_n (2n)! alpha^{2n} v^{2n+1} / (4^n (n!)^2)``.

    The binomial series of ``m v exp(-2 gt x/m) / sqrt(1 - alpha^2 v^2)``.
    """
    u2 = (params.alpha * v) ** 2
    if not u2 < 1.0:
        raise DomainError(f"|alpha v| must be below 1, got {math.sqrt(u2)!r}")
    total = term = v
    if v != 0.0 and u2 > 0.0:
        for n in range(1, tol.max_terms):
            term *= u2 * (2 * n - 1) / (2 * n)
            total += term
            if abs(term) <= tol.rel_tol * abs(total):
                break
        else:
            raise SeriesDivergenceError(
                f"binomial momentum series not converged after {tol.max_terms} terms"
            )
    return params.m * params.exp_factor(x) * total


@dataclass(frozen=True)
class InvarianceReport:
    """Maxima over a trajectory of the invariance-condition checks.

    ``max_dynamics_mismatch`` compares the kinematic ``dv~/dtau`` with the
    second system's own force; it stays small only when that force really
    describes the mapped motion.
    """

    max_condition_residual: float
    max_energy_mismatch: float
    max_dKdx_mismatch: float
    max_dynamics_mismatch: float
    verdict: bool
    samples: int
    worst_sample: int = 0


def certify_energy_invariance(system_a, system_b, xf, traj, tol=1e-10):
    """Check the energy-invariance condition along ``traj``.

    ``traj`` must be a solution of ``system_a`` in the original time. At every
    sample with ``v_tilde = xf.velocity_forward(v)`` this evaluates

    * ``|L_vv F_a - L~_vv dv~/dtau| / (1 + max(|L_vv F_a|, |L~_vv dv~/dtau|))``,
      where ``dv~/dtau = (dv~/dv) F_a / g`` is the derivative of the mapped
      motion;
    * ``|K_a(x, v) - K_b(x, v_tilde)|``;
    * ``|dK_a/dx - dK_b/dx|``.

    The verdict compares only the condition residual with ``tol``.
    """
    cond = energy = dkdx = dyn = 0.0
    worst = 0
    for k, (x, v) in enumerate(zip(traj.x.tolist(), traj.v.tolist())):
        try:
            vt = xf.velocity_forward(v)
            acc = system_a.force(x, v)
            acc_t = xf.jacobian(v) * acc / xf.tau_integrand(x, v)
            lhs = system_a.d2L_dv2(x, v) * acc
            rhs = system_b.d2L_dv2(x, vt) * acc_t
            e = abs(system_a.energy(x, v) - system_b.energy(x, vt))
            d = abs(system_a.dK_dx(x, v) - system_b.dK_dx(x, vt))
            f = abs(acc_t - system_b.force(x, vt))
        except DomainError as exc:
            raise DomainError(f"sample {k}: {exc}") from exc
        r = abs(lhs - rhs) / (1.0 + max(abs(lhs), abs(rhs)))
        if r > cond:
            cond, worst = r, k
        energy = max(energy, e)
        dkdx = max(dkdx, d)
        dyn = max(dyn, f)
    return InvarianceReport(cond, energy, dkdx, dyn, cond <= tol, len(traj), worst)


def energy_invariance(system_a, system_b, xf, states):
    """Largest ``|K_a(x, v) - K_b(x, v_tilde)|`` over the given initial states."""
    return max(abs(system_a.energy(x, v) - system_b.energy(x, xf.velocity_forward(v))) for x, v in states)


def round_trip_error(xf, velocities):
    return max(abs(xf.velocity_inverse(xf.velocity_forward(v)) - v) for v in velocities)


def compare_pictures(system_a, system_b, xf, x0, v0, cfg):
    """Integrate both pictures and compare positions on a common clock.

    ``system_a`` is solved in ``t``; its samples are mapped to ``tau`` with
    :func:`tau_of_t`. ``system_b`` is solved in ``tau`` from the mapped initial
    state with the same step, and its Hermite interpolant is read off at the
    mapped times.

    Returns:
        The largest position discrepancy.
    """
    traj_a = integrate_ode(system_a.rhs, x0, v0, cfg, guard=system_a.in_domain, strict=True)
    _, tau = tau_of_t(traj_a, xf)
    cfg_b = IntegratorConfig(
        t_end=float(tau[-1]), step=cfg.step, method=cfg.method, abs_tol=cfg.abs_tol, rel_tol=cfg.rel_tol
    )
    traj_b = integrate_ode(system_b.rhs, x0, xf.velocity_forward(v0), cfg_b)
    xb, _ = traj_b.interpolate(np.minimum(tau, traj_b.t[-1]))
    return float(np.max(np.abs(xb - traj_a.x)))


def drag_example_systems(params):
    """The first-order system, its transformed partner and the connecting transform."""
    return FirstOrderRelativistic(params), TransformedSystem(params), relativistic_transform(params.alpha)

