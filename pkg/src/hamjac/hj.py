"""Hamilton-Jacobi solutions obtained by quadrature.

For the autonomous systems here the principal function separates as
``S = W(x) - E t``, and ``W`` is the integral of the momentum at fixed
energy. Two pictures are supported:

* ``"transformed"``: ``p~(x, E) = exp(-gt x/m) sqrt(2m(E - U(x)))``, which
  satisfies ``H~(x, p~) = E`` exactly;
* ``"original"``: ``p(x, E) = p~(x, E) / (exp(-y)(I0(y) + I1(y)))`` with
  ``y = lam alpha^2 x / m``, i.e. the transformed momentum pulled back through
  the Bessel momentum map.

``U(x) = (m lam / 2 gt)(exp(-2 gt x/m) - 1)`` is strictly decreasing, so the
radicand ``2m(E - U)`` is strictly increasing in ``x`` and the allowed region
is always a half-line ``x >= x_turn``.
"""

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .dynsys import FirstOrderRelativistic, TransformedSystem, hamiltonian_transformed
from .errors import DomainError, TurningPointError
from .numerics import (
    IntegratorConfig,
    check_grid,
    gauss_legendre_cells,
    integrate_ode,
    quad_adaptive,
)
from .specfun import DEFAULT_TOL, bessel_i0, bessel_i1
from .transform import momentum_map_inverse

TRANSFORMED = "transformed"
ORIGINAL = "original"
PICTURES = (TRANSFORMED, ORIGINAL)

TURNING_POINT_TOL = 1e-12

_GL5 = np.polynomial.legendre.leggauss(5)
_GL3 = np.polynomial.legendre.leggauss(3)
# Legendre coefficients of the degree-4 interpolant through the 5 nodes
_GL5_VINV = np.linalg.inv(np.polynomial.legendre.legvander(_GL5[0], 4))


def radicand(params, E, x):
    """``2mE - (m^2 lam / gt)(exp(-2 gt x/m) - 1)``."""
    return 2.0 * params.m * (E - params.potential(x))


def turning_point(params, E, x_hint=0.0):
    """Abscissa where the radicand vanishes, by bisection to 1e-12.

    Returns ``None`` when the radicand is negative on the whole real line to
    the right of ``x_hint`` (possible for ``gt > 0`` and very negative ``E``).
    """
    limit = 1e6 * max(1.0, params.m)
    width = 1.0
    try:
        if radicand(params, E, x_hint) >= 0:
            hi = x_hint
            lo = hi - width
            while radicand(params, E, lo) >= 0:
                width *= 2.0
                lo = hi - width
                if width > limit:
                    return None
        else:
            lo = x_hint
            hi = lo + width
            while radicand(params, E, hi) < 0:
                width *= 2.0
                hi = lo + width
                if width > limit:
                    return None
    except OverflowError:
        return None
    while hi - lo > TURNING_POINT_TOL * max(1.0, abs(hi)):
        mid = 0.5 * (lo + hi)
        if radicand(params, E, mid) < 0:
            lo = mid
        else:
            hi = mid
    return hi


def _checked_radicand(params, E, x):
    r = radicand(params, E, x)
    if r < 0:
        x_turn = turning_point(params, E, x)
        raise TurningPointError(
            f"energy E={E!r} is below the potential at x={x!r}; turning point at x={x_turn!r}",
            boundary=x_turn,
        )
    return r


def p_tilde_profile(params, E, x):
    """Transformed-picture momentum at energy ``E``."""
    return math.exp(-params.gamma_tilde * x / params.m) * math.sqrt(_checked_radicand(params, E, x))


def dp_tilde_dE(params, E, x):
    """``d p~ / dE = m exp(-2 gt x/m) / p~``."""
    return params.m * params.exp_factor(x) / p_tilde_profile(params, E, x)


def p_profile(params, E, x, tol=DEFAULT_TOL):
    """Original-picture momentum: :func:`p_tilde_profile` through the inverse momentum map."""
    if x < 0:
        raise DomainError(f"original-picture momentum needs x >= 0, got {x!r}")
    return momentum_map_inverse(params, x, p_tilde_profile(params, E, x), tol)


def p_profile_explicit(params, E, x, tol=DEFAULT_TOL):
    """The same momentum written out: ``exp(gamma x/m) sqrt(...) / (I0(y) + I1(y))``."""
    y = params.lam * params.alpha**2 * x / params.m
    root = math.sqrt(_checked_radicand(params, E, x))
    return math.exp(params.gamma * x / params.m) * root / (bessel_i0(y, tol) + bessel_i1(y, tol))


def conservative_momentum(m, lam, E, x):
    """``sqrt(2m(E + lam x))``: constant force, no drag, no relativistic correction."""
    return math.sqrt(2.0 * m * (E + lam * x))


def conservative_W(m, lam, E, x, x_lo=0.0):
    """Closed-form integral of :func:`conservative_momentum` from ``x_lo`` to ``x``."""
    c = 2.0 * math.sqrt(2.0 * m) / (3.0 * lam)
    return c * ((E + lam * x) ** 1.5 - (E + lam * x_lo) ** 1.5)


@dataclass(frozen=True)
class MomentumProfile:
    """Momentum as a function of position at fixed energy.

    Construction checks the radicand on a scan of ``[x_lo, x_hi]`` and raises
    :class:`TurningPointError` if the energy is not accessible everywhere.
    """

    params: object
    energy: float
    picture: str = TRANSFORMED
    x_lo: float = 0.0
    x_hi: float = 1.0
    tol: object = DEFAULT_TOL

    def __post_init__(self):
        if self.picture not in PICTURES:
            raise ValueError(f"picture must be one of {PICTURES}, got {self.picture!r}")
        if self.x_lo > self.x_hi:
            raise DomainError(f"profile domain is empty: [{self.x_lo!r}, {self.x_hi!r}]")
        if self.picture == ORIGINAL and self.x_lo < 0:
            raise DomainError("the original picture is restricted to x >= 0")
        for x in np.linspace(self.x_lo, self.x_hi, 65):
            _checked_radicand(self.params, self.energy, float(x))

    def __call__(self, x):
        if self.picture == TRANSFORMED:
            return p_tilde_profile(self.params, self.energy, x)
        return p_profile(self.params, self.energy, x, self.tol)

    def d_dE(self, x):
        """Energy derivative of the momentum, the integrand of the time recovery."""
        slope = dp_tilde_dE(self.params, self.energy, x)
        if self.picture == TRANSFORMED:
            return slope
        return momentum_map_inverse(self.params, x, slope, self.tol)


@dataclass(frozen=True)
class HJSolution:
    """Characteristic function ``W`` tabulated on a grid, ``W(grid[0]) = 0``.

    Between nodes ``W`` is the exact antiderivative of the degree-4 polynomial
    interpolating the momentum at each cell's Gauss-Legendre nodes, so it
    matches the tabulated values at every node.
    """

    grid: np.ndarray
    W: np.ndarray
    energy: float
    picture: str
    err_estimate: float
    profile: object = None
    _cell_coeffs: np.ndarray = field(default=None, repr=False)

    def _cell(self, x):
        x = float(x)
        if not self.grid[0] <= x <= self.grid[-1]:
            raise DomainError(f"x={x!r} outside the tabulated range [{self.grid[0]!r}, {self.grid[-1]!r}]")
        k = int(np.clip(np.searchsorted(self.grid, x, side="right") - 1, 0, len(self.grid) - 2))
        a, b = self.grid[k], self.grid[k + 1]
        return k, 0.5 * (b - a), (2.0 * x - a - b) / (b - a)

    def W_at(self, x):
        k, half, s = self._cell(x)
        antider = np.polynomial.legendre.legint(self._cell_coeffs[k], lbnd=-1.0)
        return float(self.W[k] + half * np.polynomial.legendre.legval(s, antider))

    def dW_dx(self, x):
        k, _, s = self._cell(x)
        return float(np.polynomial.legendre.legval(s, self._cell_coeffs[k]))


def characteristic_function(profile, grid, energy=None):
    """Tabulate ``W(x) = integral p dx`` by 5-point Gauss-Legendre per cell.

    Args:
        profile: A :class:`MomentumProfile`, or any callable ``x -> p``.
        grid: Strictly increasing abscissae within the profile's domain.
        energy: Needed only when ``profile`` carries no ``energy`` attribute.
    """
    grid = check_grid(grid)
    if isinstance(profile, MomentumProfile):
        if grid[0] < profile.x_lo - 1e-12 or grid[-1] > profile.x_hi + 1e-12:
            raise DomainError("grid extends outside the momentum profile's domain")
        energy, picture = profile.energy, profile.picture
    else:
        energy = 0.0 if energy is None else energy
        picture = getattr(profile, "picture", None)
    nodes, weights = gauss_legendre_cells(grid)
    values = np.array([[profile(float(x)) for x in row] for row in nodes])
    cells = np.sum(values * weights, axis=1)
    W = np.concatenate(([0.0], np.cumsum(cells)))

    half = 0.5 * np.diff(grid)
    centre = 0.5 * (grid[:-1] + grid[1:])
    low = np.array([[profile(float(c + h * t)) for t in _GL3[0]] for c, h in zip(centre, half)])
    err = float(np.sum(np.abs(cells - half * (low @ _GL3[1]))))

    coeffs = values @ _GL5_VINV.T
    return HJSolution(grid, W, energy, picture, err, profile, coeffs)


def principal_function(sol, x, t):
    """``S = W(x) - E t``; pass ``tau`` as ``t`` in the transformed picture."""
    return sol.W_at(x) - sol.energy * t


def hj_residual(picture, params, E, grid, tol=DEFAULT_TOL):
    """Largest ``|H(x, p(x, E)) - E|`` on ``grid``.

    The transformed picture uses the closed-form Hamiltonian and should vanish
    to rounding. The original picture evaluates the series Hamiltonian of the
    first-order system, defined only for ``x > 0``, so ``x = 0`` is skipped.
    """
    grid = check_grid(grid)
    if picture == TRANSFORMED:
        return max(
            abs(hamiltonian_transformed(params, float(x), p_tilde_profile(params, E, float(x))) - E)
            for x in grid
        )
    if picture == ORIGINAL:
        system = FirstOrderRelativistic(params)
        return max(
            abs(system.hamiltonian(float(x), p_profile(params, E, float(x), tol), tol) - E)
            for x in grid
            if x > 0
        )
    raise ValueError(f"picture must be one of {PICTURES}, got {picture!r}")


def residual_scaling(params, E, grid, alphas, tol=DEFAULT_TOL):
    """Original-picture residuals for several ``alpha`` and their log-log slope.

    Returns:
        ``(residuals, exponent)``; ``exponent`` is the least-squares slope of
        ``log(residual)`` against ``log(alpha)`` over the positive entries, or
        NaN if fewer than two are positive.
    """
    residuals = [hj_residual(ORIGINAL, replace(params, alpha=a, c=None), E, grid, tol) for a in alphas]
    pts = [(math.log(a), math.log(r)) for a, r in zip(alphas, residuals) if a > 0 and r > 0]
    if len(pts) < 2:
        return residuals, math.nan
    slope = np.polyfit([p[0] for p in pts], [p[1] for p in pts], 1)[0]
    return residuals, float(slope)


def recover_trajectory(sol, E=None, x0=None, experimental=False, abs_tol=1e-13, rel_tol=1e-13):
    """Time along the orbit from Jacobi's theorem, ``tau(x) = dW/dE``.

    ``tau(x) = integral_{x0}^{x} dp/dE dx'`` at each grid node ``x >= x0``,
    each cell by adaptive Simpson quadrature of the analytic integrand.
    The original picture relies on the series Hamiltonian chain and is only
    available with ``experimental=True``.

    Returns:
        ``(tau, x)`` arrays.
    """
    profile = sol.profile
    if not isinstance(profile, MomentumProfile):
        raise TypeError("trajectory recovery needs an HJSolution built from a MomentumProfile")
    if profile.picture == ORIGINAL and not experimental:
        raise DomainError("original-picture time recovery is experimental; pass experimental=True")
    if E is not None and E != profile.energy:
        profile = replace(profile, energy=E)
    x0 = float(sol.grid[0]) if x0 is None else float(x0)
    xs = [x0] + [float(x) for x in sol.grid if x > x0]
    tau = [0.0]
    for a, b in zip(xs[:-1], xs[1:]):
        tau.append(tau[-1] + quad_adaptive(profile.d_dE, a, b, abs_tol, rel_tol).value)
    return np.array(tau), np.array(xs)


@dataclass(frozen=True)
class RecoveryComparison:
    tau: np.ndarray
    x_ode: np.ndarray
    x_hj: np.ndarray

    @property
    def abs_err(self):
        return np.abs(self.x_ode - self.x_hj)

    @property
    def max_abs_err(self):
        return float(np.max(self.abs_err)) if len(self.tau) else 0.0


def compare_recovery(params, E, grid, step=1e-4):
    """Jacobi recovery against direct integration of the transformed system.

    The ODE starts at ``grid[0]`` on the outgoing branch with the velocity
    fixed by ``E`` and is read off by Hermite interpolation at the recovered
    times.
    """
    grid = np.asarray(grid, dtype=float)
    x0 = float(grid[0])
    if len(grid) < 2 or grid[-1] == x0:
        return RecoveryComparison(np.zeros(1), np.array([x0]), np.array([x0]))
    profile = MomentumProfile(params, E, TRANSFORMED, x0, float(grid[-1]))
    sol = characteristic_function(profile, grid)
    tau, x_hj = recover_trajectory(sol)
    system = TransformedSystem(params)
    v0 = profile(x0) / (params.m * params.exp_factor(x0))
    traj = integrate_ode(system.rhs, x0, v0, IntegratorConfig(t_end=float(tau[-1]), step=step))
    x_ode, _ = traj.interpolate(tau)
    return RecoveryComparison(tau, x_ode, x_hj)


@dataclass(frozen=True)
class LimitRow:
    gamma: float
    alpha: float
    p_err: float
    W_err: float


def limit_sweep(param_seq, E, grid):
    """Distance of the original-picture solution from the conservative closed forms.

    For each parameter set returns the largest deviation of ``p`` from
    ``sqrt(2m(E + lam x))`` and of ``W`` from its closed-form antiderivative.
    """
    grid = check_grid(grid)
    rows = []
    for params in param_seq:
        profile = MomentumProfile(params, E, ORIGINAL, float(grid[0]), float(grid[-1]))
        sol = characteristic_function(profile, grid)
        p_err = max(
            abs(profile(float(x)) - conservative_momentum(params.m, params.lam, E, float(x))) for x in grid
        )
        W_ref = np.array([conservative_W(params.m, params.lam, E, float(x), float(grid[0])) for x in grid])
        rows.append(LimitRow(params.gamma, params.alpha, p_err, float(np.max(np.abs(sol.W - W_ref)))))
    return rows


def default_limit_sequence(floor=1e-8, start=0.1):
    """``start, start/2, start/4, ...`` while above ``floor``, then ``floor``."""
    values = []
    v = start
    while v > floor:
        values.append(v)
        v *= 0.5
    values.append(floor)
    return values


def is_strictly_decreasing(values):
    return all(b < a for a, b in zip(values[:-1], values[1:]))


def momentum_chain_discrepancy(params, traj, E=None, tol=DEFAULT_TOL):
    """Largest ``|dL/dv(x, v) - p(x, E)|`` along a first-order trajectory.

    ``dL/dv`` is the canonical momentum of the first-order Lagrangian and
    ``p(x, E)`` the original-picture profile at the trajectory's energy.
    Samples at ``x <= 0`` are skipped.
    """
    system = FirstOrderRelativistic(params)
    xs, vs = traj.x.tolist(), traj.v.tolist()
    if E is None:
        E = system.energy(xs[0], vs[0])
    worst = 0.0
    for x, v in zip(xs, vs):
        if x > 0:
            worst = max(worst, abs(system.momentum(x, v) - p_profile(params, E, x, tol)))
    return worst
