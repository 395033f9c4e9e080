"""Numerical kernels: ODE integration, quadrature and finite differences.

Everything here works on plain floats for the scalar paths (the systems are
one dimensional, so Python floats beat tiny numpy arrays) and returns numpy
arrays where a whole table is produced.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, GridError, GuardViolation, NonFiniteError, QuadratureError

RK4_FIXED = "rk4_fixed"
RK45_ADAPTIVE = "rk45_adaptive"
METHODS = (RK4_FIXED, RK45_ADAPTIVE)

GUARD_BISECTION_TOL = 1e-12

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(5)


@dataclass(frozen=True)
class IntegratorConfig:
    t_end: float
    step: float = 1e-4
    method: str = RK4_FIXED
    abs_tol: float = 1e-10
    rel_tol: float = 1e-10

    def __post_init__(self):
        if not self.step > 0:
            raise ValueError(f"step must be positive, got {self.step!r}")
        if not self.t_end > 0:
            raise ValueError(f"t_end must be positive, got {self.t_end!r}")
        if not (self.abs_tol > 0 and self.rel_tol > 0):
            raise ValueError("integration tolerances must be positive")
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}; expected one of {METHODS}")


@dataclass(frozen=True)
class Trajectory:
    """Samples ``(t, x, v)`` of a solution with the accelerations ``a = dv/dt``.

    The stored accelerations come from the right-hand side, which makes
    :meth:`interpolate` a cubic Hermite interpolant without any differencing.
    """

    t: np.ndarray
    x: np.ndarray
    v: np.ndarray
    a: np.ndarray
    truncated: bool = False

    def __len__(self):
        return len(self.t)

    @property
    def monotone(self):
        return bool(np.all(np.diff(self.t) > 0))

    def interpolate(self, tq):
        """Cubic Hermite interpolation of ``x`` and ``v`` at times ``tq``."""
        tq = np.asarray(tq, dtype=float)
        if np.any(tq < self.t[0] - 1e-12) or np.any(tq > self.t[-1] + 1e-12):
            raise DomainError("interpolation time outside the trajectory span")
        k = np.clip(np.searchsorted(self.t, tq, side="right") - 1, 0, len(self.t) - 2)
        t0, t1 = self.t[k], self.t[k + 1]
        h = t1 - t0
        s = (tq - t0) / h
        h00 = (1 + 2 * s) * (1 - s) ** 2
        h10 = s * (1 - s) ** 2
        h01 = s * s * (3 - 2 * s)
        h11 = s * s * (s - 1)
        x = h00 * self.x[k] + h10 * h * self.v[k] + h01 * self.x[k + 1] + h11 * h * self.v[k + 1]
        v = h00 * self.v[k] + h10 * h * self.a[k] + h01 * self.v[k + 1] + h11 * h * self.a[k + 1]
        return x, v

    def midpoints(self):
        """Hermite-interpolated ``(x, v)`` at the midpoint of every interval."""
        h = np.diff(self.t)
        xm = 0.5 * (self.x[:-1] + self.x[1:]) + h * (self.v[:-1] - self.v[1:]) / 8.0
        vm = 0.5 * (self.v[:-1] + self.v[1:]) + h * (self.a[:-1] - self.a[1:]) / 8.0
        return xm, vm


@dataclass(frozen=True)
class QuadratureResult:
    value: float
    err_estimate: float
    evaluations: int = 0


def _finite_rhs(rhs, x, v):
    dx, dv = rhs(x, v)
    if not (math.isfinite(dx) and math.isfinite(dv)):
        raise NonFiniteError(f"non-finite right-hand side at x={x!r}, v={v!r}", where=(x, v))
    return dx, dv


def _rk4_step(rhs, x, v, h, k1=None):
    if k1 is None:
        k1 = _finite_rhs(rhs, x, v)
    k2 = _finite_rhs(rhs, x + 0.5 * h * k1[0], v + 0.5 * h * k1[1])
    k3 = _finite_rhs(rhs, x + 0.5 * h * k2[0], v + 0.5 * h * k2[1])
    k4 = _finite_rhs(rhs, x + h * k3[0], v + h * k3[1])
    return (
        x + h * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0]) / 6.0,
        v + h * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1]) / 6.0,
    )


# Dormand-Prince 5(4) tableau.
_DP_A = (
    (),
    (1 / 5,),
    (3 / 40, 9 / 40),
    (44 / 45, -56 / 15, 32 / 9),
    (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729),
    (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656),
    (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84),
)
_DP_B5 = (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0)
_DP_B4 = (5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40)


def _dp_step(rhs, x, v, h, k1=None):
    ks = [k1 if k1 is not None else _finite_rhs(rhs, x, v)]
    for row in _DP_A[1:]:
        xs = x + h * sum(a * k[0] for a, k in zip(row, ks))
        vs = v + h * sum(a * k[1] for a, k in zip(row, ks))
        ks.append(_finite_rhs(rhs, xs, vs))
    x5 = x + h * sum(b * k[0] for b, k in zip(_DP_B5, ks))
    v5 = v + h * sum(b * k[1] for b, k in zip(_DP_B5, ks))
    x4 = x + h * sum(b * k[0] for b, k in zip(_DP_B4, ks))
    v4 = v + h * sum(b * k[1] for b, k in zip(_DP_B4, ks))
    return (x5, v5), (abs(x5 - x4), abs(v5 - v4)), ks[-1]


def _bisect_guard(step_fn, rhs, x, v, h, guard):
    """Largest sub-step in ``[0, h]`` keeping the guard true, to 1e-12."""
    lo, hi = 0.0, h
    best = (x, v)
    while hi - lo > GUARD_BISECTION_TOL:
        mid = 0.5 * (lo + hi)
        try:
            state = step_fn(rhs, x, v, mid)
            ok = guard(*state)
        except (DomainError, NonFiniteError):
            ok = False
        if ok:
            lo, best = mid, state
        else:
            hi = mid
    return lo, best


def _make_trajectory(ts, xs, vs, rhs, truncated):
    acc = [_finite_rhs(rhs, x, v)[1] for x, v in zip(xs, vs)]
    return Trajectory(np.array(ts), np.array(xs), np.array(vs), np.array(acc), truncated)


def integrate_ode(rhs, x0, v0, cfg, guard=None, strict=False):
    """Integrate ``dx/dt, dv/dt = rhs(x, v)`` from ``t = 0`` to ``cfg.t_end``.

    Args:
        rhs: Callable ``(x, v) -> (dx/dt, dv/dt)``.
        x0, v0: Initial state.
        cfg: :class:`IntegratorConfig`.
        guard: Optional predicate ``(x, v) -> bool``. When a step would leave
            the region where it holds, the step is bisected so the last sample
            lands within 1e-12 (in time) of the boundary and integration stops.
        strict: Raise :class:`GuardViolation` instead of returning a
            truncated trajectory.

    Returns:
        A :class:`Trajectory`; ``truncated`` is set if the guard stopped it.
    """
    if guard is not None and not guard(x0, v0):
        raise GuardViolation("guard is false at the initial state")
    _finite_rhs(rhs, x0, v0)
    if cfg.method == RK4_FIXED:
        ts, xs, vs, truncated = _run_rk4(rhs, x0, v0, cfg, guard)
    else:
        ts, xs, vs, truncated = _run_dp45(rhs, x0, v0, cfg, guard)
    traj = _make_trajectory(ts, xs, vs, rhs, truncated)
    if truncated and strict:
        raise GuardViolation(f"guard violated at t={ts[-1]!r}", trajectory=traj)
    return traj


def _step_ok(state, guard):
    return guard is None or guard(*state)


def _run_rk4(rhs, x0, v0, cfg, guard):
    n = max(1, math.ceil(cfg.t_end / cfg.step - 1e-9))
    h = cfg.t_end / n
    ts, xs, vs = [0.0], [x0], [v0]
    x, v = x0, v0
    for i in range(1, n + 1):
        try:
            state = _rk4_step(rhs, x, v, h)
            ok = _step_ok(state, guard)
        except DomainError:
            if guard is None:
                raise
            ok = False
        if not ok:
            dt, state = _bisect_guard(_rk4_step, rhs, x, v, h, guard)
            if dt > 0:
                ts.append(ts[-1] + dt)
                xs.append(state[0])
                vs.append(state[1])
            return ts, xs, vs, True
        x, v = state
        ts.append(i * h)
        xs.append(x)
        vs.append(v)
    return ts, xs, vs, False


def _run_dp45(rhs, x0, v0, cfg, guard):
    ts, xs, vs = [0.0], [x0], [v0]
    t, x, v = 0.0, x0, v0
    h = cfg.step
    k1 = _finite_rhs(rhs, x, v)
    while t < cfg.t_end:
        h = min(h, cfg.t_end - t)
        try:
            state, err, k_last = _dp_step(rhs, x, v, h, k1)
            ok = _step_ok(state, guard)
        except DomainError:
            if guard is None:
                raise
            ok = False
        if not ok:
            if h > cfg.step:
                h *= 0.5
                continue
            dt, state = _bisect_guard(lambda r, a, b, s: _dp_step(r, a, b, s)[0], rhs, x, v, h, guard)
            if dt > 0:
                ts.append(t + dt)
                xs.append(state[0])
                vs.append(state[1])
            return ts, xs, vs, True
        scale_x = cfg.abs_tol + cfg.rel_tol * max(abs(x), abs(state[0]))
        scale_v = cfg.abs_tol + cfg.rel_tol * max(abs(v), abs(state[1]))
        ratio = max(err[0] / scale_x, err[1] / scale_v)
        if ratio <= 1.0:
            t = cfg.t_end if cfg.t_end - (t + h) < 1e-14 * cfg.t_end else t + h
            x, v = state
            k1 = k_last
            ts.append(t)
            xs.append(x)
            vs.append(v)
        factor = 5.0 if ratio == 0 else min(5.0, max(0.2, 0.9 * ratio ** -0.2))
        h *= factor
    return ts, xs, vs, False


def _finite(f, x):
    y = f(x)
    if not math.isfinite(y):
        raise NonFiniteError(f"non-finite integrand at x={x!r}", where=x)
    return y


def quad_adaptive(f, a, b, abs_tol=1e-12, rel_tol=1e-12, max_depth=40):
    """Adaptive Simpson quadrature of ``f`` over ``[a, b]``.

    Cells are bisected until the Richardson error estimate of each meets its
    share of ``max(abs_tol, rel_tol * |I|)``; the extrapolated value is
    returned.

    Raises:
        QuadratureError: a cell reached ``max_depth`` without converging.
        NonFiniteError: ``f`` returned NaN/inf (``where`` holds the abscissa).
    """
    if a > b:
        raise ValueError(f"quadrature bounds must satisfy a <= b, got [{a!r}, {b!r}]")
    if a == b:
        return QuadratureResult(0.0, 0.0, 0)
    evals = 3
    fa, fm, fb = _finite(f, a), _finite(f, 0.5 * (a + b)), _finite(f, b)
    whole = (b - a) * (fa + 4 * fm + fb) / 6.0
    tol = max(abs_tol, rel_tol * abs(whole))

    # explicit stack; each entry is one cell awaiting refinement
    stack = [(a, b, fa, fm, fb, whole, tol, 0)]
    value = 0.0
    err_total = 0.0
    while stack:
        lo, hi, flo, fmid, fhi, s, cell_tol, depth = stack.pop()
        mid = 0.5 * (lo + hi)
        fl = _finite(f, 0.5 * (lo + mid))
        fr = _finite(f, 0.5 * (mid + hi))
        evals += 2
        left = (mid - lo) * (flo + 4 * fl + fmid) / 6.0
        right = (hi - mid) * (fmid + 4 * fr + fhi) / 6.0
        delta = left + right - s
        if abs(delta) <= 15.0 * cell_tol:
            value += left + right + delta / 15.0
            err_total += abs(delta) / 15.0
            continue
        if depth >= max_depth:
            raise QuadratureError(f"adaptive Simpson reached depth {max_depth} on [{lo!r}, {hi!r}]")
        stack.append((mid, hi, fmid, fr, fhi, right, 0.5 * cell_tol, depth + 1))
        stack.append((lo, mid, flo, fl, fmid, left, 0.5 * cell_tol, depth + 1))
    return QuadratureResult(value, err_total, evals)


def check_grid(grid):
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or len(grid) < 2:
        raise GridError("grid needs at least two abscissae")
    if np.any(np.diff(grid) <= 0):
        raise GridError("grid must be strictly increasing")
    return grid


def gauss_legendre_cells(grid):
    """Abscissae and weights of the 5-point Gauss-Legendre rule on each cell.

    Returns arrays of shape ``(n_cells, 5)``.
    """
    grid = check_grid(grid)
    half = 0.5 * np.diff(grid)[:, None]
    centre = 0.5 * (grid[:-1] + grid[1:])[:, None]
    return centre + half * _GL_NODES[None, :], half * _GL_WEIGHTS[None, :]


def quad_cumulative(f, grid):
    """Running integral of ``f`` over a sorted grid, ``out[0] = 0``.

    Each cell is integrated by 5-point Gauss-Legendre, exact for polynomials
    of degree 9.
    """
    nodes, weights = gauss_legendre_cells(grid)
    values = np.array([[_finite(f, xi) for xi in row] for row in nodes])
    cells = np.sum(values * weights, axis=1)
    return np.concatenate(([0.0], np.cumsum(cells)))


def fd_derivative(f, x0, h=1e-5, order="first"):
    """Central finite difference of ``f`` at ``x0``.

    ``order`` is ``"first"`` (error O(h^2)) or ``"second"``.
    """
    if not h > 0:
        raise ValueError(f"step must be positive, got {h!r}")
    fp, fm = _finite(f, x0 + h), _finite(f, x0 - h)
    if order == "first":
        return (fp - fm) / (2 * h)
    if order == "second":
        return (fp - 2 * _finite(f, x0) + fm) / (h * h)
    raise ValueError(f"order must be 'first' or 'second', got {order!r}")
