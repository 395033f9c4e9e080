"""One-dimensional autonomous systems ``dx/dt = v, dv/dt = F(x, v)``.

Each system knows its force and, where one is available, a Lagrangian with
analytic partial derivatives. The energy is the Legendre constant of motion
``K = v dL/dv - L``.

The relativistic-drag family shares one exponential factor
``exp(-2 * gamma_tilde * x / m)`` with ``gamma_tilde = lam * alpha**2 - gamma``.
Its potential part ``(m lam / 2 gamma_tilde) (exp(-2 gamma_tilde x / m) - 1)``
is always evaluated as ``-lam * x * expm1_ratio(-2 gamma_tilde x / m)`` so
``gamma_tilde = 0`` needs no special case.
"""

import math
from dataclasses import dataclass, replace

from .errors import DomainError, SeriesDivergenceError
from .numerics import fd_derivative
from .specfun import DEFAULT_TOL, expm1_ratio

ATANH_TAYLOR_THRESHOLD = 1e-6

EXACT_RELATIVISTIC = "exact_relativistic"
FIRST_ORDER = "first_order"
TRANSFORMED = "transformed"
QUADRATIC_DRAG = "quadratic_drag"
FREE_CONSTANT_FORCE = "free_constant_force"
HARMONIC_REFERENCE = "harmonic_reference"
KINDS = (
    EXACT_RELATIVISTIC,
    FIRST_ORDER,
    TRANSFORMED,
    QUADRATIC_DRAG,
    FREE_CONSTANT_FORCE,
    HARMONIC_REFERENCE,
)


@dataclass(frozen=True)
class SystemParams:
    """Physical parameters of the relativistic quadratic-drag family.

    ``alpha`` is the first-order relativistic coefficient, ``alpha**2 = 3/(2 c**2)``.
    ``c`` is only needed by the exact relativistic force; when omitted it is
    derived from ``alpha``.
    """

    m: float = 1.0
    lam: float = 1.0
    gamma: float = 0.0
    alpha: float = 0.0
    c: float = None

    def __post_init__(self):
        if not self.m > 0:
            raise DomainError(f"mass must be positive, got {self.m!r}")
        if not self.lam > 0:
            raise DomainError(f"lambda must be positive, got {self.lam!r}")
        if not self.gamma >= 0:
            raise DomainError(f"gamma must be non-negative, got {self.gamma!r}")
        if not self.alpha >= 0:
            raise DomainError(f"alpha must be non-negative, got {self.alpha!r}")
        if self.c is not None and not self.c > 0:
            raise DomainError(f"c must be positive, got {self.c!r}")

    @classmethod
    def from_c(cls, m, lam, gamma, c):
        """Parameters with ``alpha`` fixed by the speed of light ``c``."""
        return cls(m=m, lam=lam, gamma=gamma, alpha=math.sqrt(1.5) / c, c=c)

    @property
    def gamma_tilde(self):
        return self.lam * self.alpha**2 - self.gamma

    @property
    def speed_of_light(self):
        if self.c is not None:
            return self.c
        if self.alpha == 0:
            return math.inf
        return math.sqrt(1.5) / self.alpha

    def exp_factor(self, x):
        """``exp(-2 gamma_tilde x / m)``."""
        return math.exp(-2.0 * self.gamma_tilde * x / self.m)

    def potential(self, x):
        """``(m lam / 2 gamma_tilde)(exp(-2 gamma_tilde x / m) - 1)``, stable at gamma_tilde = 0."""
        return -self.lam * x * expm1_ratio(-2.0 * self.gamma_tilde * x / self.m)


@dataclass(frozen=True)
class CanonicalPoint:
    x: float
    p: float


def _atanh_ratio(u):
    """``atanh(u) / u``, with a Taylor branch near 0."""
    if abs(u) < ATANH_TAYLOR_THRESHOLD:
        u2 = u * u
        return 1.0 + u2 / 3.0 + u2 * u2 / 5.0
    return math.atanh(u) / u


class System:
    """Base class for a 1D autonomous system.

    Subclasses must provide :meth:`force`. Supplying :meth:`lagrangian`
    unlocks the energy machinery; the partial derivatives default to central
    differences and the shipped systems override them analytically.
    """

    kind = None
    fd_step = 1e-5

    def __init__(self, params=None):
        self.params = params if params is not None else SystemParams()

    def __repr__(self):
        return f"{type(self).__name__}({self.params!r})"

    @property
    def has_lagrangian(self):
        return type(self).lagrangian is not System.lagrangian

    def check_state(self, x, v):
        """Raise :class:`DomainError` if ``(x, v)`` is outside the validity region."""

    def in_domain(self, x, v):
        try:
            self.check_state(x, v)
        except DomainError:
            return False
        return True

    def force(self, x, v):
        raise NotImplementedError

    def rhs(self, x, v):
        return v, self.force(x, v)

    def lagrangian(self, x, v):
        raise NotImplementedError(f"{type(self).__name__} does not define a Lagrangian")

    def dL_dv(self, x, v):
        return fd_derivative(lambda w: self.lagrangian(x, w), v, self.fd_step)

    def d2L_dv2(self, x, v):
        return fd_derivative(lambda w: self.dL_dv(x, w), v, self.fd_step)

    def dL_dx(self, x, v):
        return fd_derivative(lambda y: self.lagrangian(y, v), x, self.fd_step)

    def d2L_dxdv(self, x, v):
        return fd_derivative(lambda y: self.dL_dv(y, v), x, self.fd_step)

    def momentum(self, x, v):
        """Canonical momentum ``p = dL/dv``."""
        return self.dL_dv(x, v)

    def energy(self, x, v):
        """Legendre constant of motion ``K = v dL/dv - L``."""
        return v * self.dL_dv(x, v) - self.lagrangian(x, v)

    def dK_dx(self, x, v):
        return v * self.d2L_dxdv(x, v) - self.dL_dx(x, v)

    def hamiltonian(self, x, p):
        raise NotImplementedError(f"{type(self).__name__} does not define a Hamiltonian")

    def euler_lagrange_residual(self, x, v):
        """``d/dt(dL/dv) - dL/dx`` at a state, with d/dt expanded on-shell."""
        return self.d2L_dxdv(x, v) * v + self.d2L_dv2(x, v) * self.force(x, v) - self.dL_dx(x, v)


class ExactRelativistic(System):
    """``m dv/dt = (lam - gamma v^2)(1 - v^2/c^2)^{3/2}``; force only."""

    kind = EXACT_RELATIVISTIC

    def check_state(self, x, v):
        c = self.params.speed_of_light
        if not abs(v) < c:
            raise DomainError(f"|v| must be below c={c!r}, got v={v!r}")

    def force(self, x, v):
        self.check_state(x, v)
        p = self.params
        beta2 = (v / p.speed_of_light) ** 2
        return (p.lam - p.gamma * v * v) * (1.0 - beta2) ** 1.5 / p.m


class FirstOrderRelativistic(System):
    """``m dv/dt = (lam - gamma v^2)(1 - alpha^2 v^2)``, valid for ``|alpha v| < 1``.

    Lagrangian::

        L = (m v atanh(alpha v) / 2 alpha) exp(-2 gt x / m) - (m lam / 2 gt)(exp(-2 gt x / m) - 1)

    with ``gt = lam alpha^2 - gamma``.
    """

    kind = FIRST_ORDER

    def check_state(self, x, v):
        u = self.params.alpha * v
        if not abs(u) < 1.0:
            raise DomainError(f"|alpha v| must be below 1, got {abs(u)!r}")

    def force(self, x, v):
        self.check_state(x, v)
        p = self.params
        return (p.lam - p.gamma * v * v) * (1.0 - (p.alpha * v) ** 2) / p.m

    def _kinetic(self, v):
        # the velocity-dependent factor m v atanh(alpha v) / (2 alpha)
        return 0.5 * self.params.m * v * v * _atanh_ratio(self.params.alpha * v)

    def _kinetic_dv(self, v):
        u = self.params.alpha * v
        return 0.5 * self.params.m * v * (_atanh_ratio(u) + 1.0 / (1.0 - u * u))

    def lagrangian(self, x, v):
        self.check_state(x, v)
        p = self.params
        return self._kinetic(v) * p.exp_factor(x) - p.potential(x)

    def dL_dv(self, x, v):
        self.check_state(x, v)
        return self._kinetic_dv(v) * self.params.exp_factor(x)

    def d2L_dv2(self, x, v):
        self.check_state(x, v)
        p = self.params
        u = p.alpha * v
        return p.m * p.exp_factor(x) / (1.0 - u * u) ** 2

    def dL_dx(self, x, v):
        self.check_state(x, v)
        p = self.params
        return (p.lam - 2.0 * p.gamma_tilde * self._kinetic(v) / p.m) * p.exp_factor(x)

    def d2L_dxdv(self, x, v):
        self.check_state(x, v)
        p = self.params
        return -2.0 * p.gamma_tilde / p.m * self._kinetic_dv(v) * p.exp_factor(x)

    def energy(self, x, v):
        self.check_state(x, v)
        p = self.params
        u = p.alpha * v
        return 0.5 * p.m * v * v / (1.0 - u * u) * p.exp_factor(x) + p.potential(x)

    def dK_dx(self, x, v):
        self.check_state(x, v)
        p = self.params
        u = p.alpha * v
        return -(p.gamma_tilde * v * v / (1.0 - u * u) + p.lam) * p.exp_factor(x)

    def hamiltonian(self, x, p_mom, tol=DEFAULT_TOL):
        return hamiltonian_series(self, CanonicalPoint(x, p_mom), tol)


class QuadraticDrag(FirstOrderRelativistic):
    """``m dv/dt = lam - gamma v^2``: the first-order system with ``alpha = 0``."""

    kind = QUADRATIC_DRAG

    def __init__(self, params=None):
        params = params if params is not None else SystemParams()
        super().__init__(replace(params, alpha=0.0, c=None))


class TransformedSystem(System):
    """``m dv/dtau = lam + gt v^2`` in the reparametrized time.

    Lagrangian ``L = (m/2) v^2 exp(-2 gt x / m) - (m lam / 2 gt)(exp(-2 gt x / m) - 1)``.
    Here ``v`` stands for the transformed velocity ``dx/dtau``.
    """

    kind = TRANSFORMED

    def force(self, x, v):
        p = self.params
        return (p.lam + p.gamma_tilde * v * v) / p.m

    def lagrangian(self, x, v):
        p = self.params
        return 0.5 * p.m * v * v * p.exp_factor(x) - p.potential(x)

    def dL_dv(self, x, v):
        return self.params.m * v * self.params.exp_factor(x)

    def d2L_dv2(self, x, v):
        return self.params.m * self.params.exp_factor(x)

    def dL_dx(self, x, v):
        p = self.params
        return (p.lam - p.gamma_tilde * v * v) * p.exp_factor(x)

    def d2L_dxdv(self, x, v):
        p = self.params
        return -2.0 * p.gamma_tilde * v * p.exp_factor(x)

    def energy(self, x, v):
        p = self.params
        return 0.5 * p.m * v * v * p.exp_factor(x) + p.potential(x)

    def dK_dx(self, x, v):
        p = self.params
        return -(p.gamma_tilde * v * v + p.lam) * p.exp_factor(x)

    def hamiltonian(self, x, p_mom):
        return hamiltonian_transformed(self.params, x, p_mom)


class FreeConstantForce(System):
    """``m dv/dt = lam`` with ``L = m v^2/2 + lam x``."""

    kind = FREE_CONSTANT_FORCE

    def force(self, x, v):
        return self.params.lam / self.params.m

    def lagrangian(self, x, v):
        return 0.5 * self.params.m * v * v + self.params.lam * x

    def dL_dv(self, x, v):
        return self.params.m * v

    def d2L_dv2(self, x, v):
        return self.params.m

    def dL_dx(self, x, v):
        return self.params.lam

    def d2L_dxdv(self, x, v):
        return 0.0

    def hamiltonian(self, x, p_mom):
        return p_mom * p_mom / (2.0 * self.params.m) - self.params.lam * x


class HarmonicReference(System):
    """Unit-frequency oscillator, ``L = (m/2)(v^2 - x^2)``."""

    kind = HARMONIC_REFERENCE

    def force(self, x, v):
        return -x

    def lagrangian(self, x, v):
        return 0.5 * self.params.m * (v * v - x * x)

    def dL_dv(self, x, v):
        return self.params.m * v

    def d2L_dv2(self, x, v):
        return self.params.m

    def dL_dx(self, x, v):
        return -self.params.m * x

    def d2L_dxdv(self, x, v):
        return 0.0

    def hamiltonian(self, x, p_mom):
        return p_mom * p_mom / (2.0 * self.params.m) + 0.5 * self.params.m * x * x


_KIND_CLASSES = {
    cls.kind: cls
    for cls in (
        ExactRelativistic,
        FirstOrderRelativistic,
        TransformedSystem,
        QuadraticDrag,
        FreeConstantForce,
        HarmonicReference,
    )
}


def make_system(kind, params=None):
    """Build the system of the given ``kind`` (one of :data:`KINDS`)."""
    try:
        cls = _KIND_CLASSES[kind]
    except KeyError:
        raise ValueError(f"unknown system kind {kind!r}; expected one of {KINDS}") from None
    return cls(params)


def force(system, x, v):
    return system.force(x, v)


def lagrangian(system, x, v):
    return system.lagrangian(x, v)


def legendre_energy(system, x, v):
    return system.energy(x, v)


def momentum_from_velocity(system, x, v):
    return system.momentum(x, v)


def euler_lagrange_residual(system, traj):
    """Largest ``|d/dt(dL/dv) - dL/dx|`` over the samples of ``traj``."""
    return max(abs(system.euler_lagrange_residual(x, v)) for x, v in zip(traj.x.tolist(), traj.v.tolist()))


def hamiltonian_transformed(params, x, p_tilde):
    """``(p^2 / 2m) exp(2 gt x / m) + (m lam / 2 gt)(exp(-2 gt x / m) - 1)``."""
    return p_tilde * p_tilde / (2.0 * params.m) / params.exp_factor(x) + params.potential(x)


def series_velocity_power(params, x, p, n):
    """The ``n``-th power term ``v^{2n+2}(x, p)`` of the series Hamiltonian."""
    m = params.m
    base = (p / m) * math.exp(-2.0 * params.gamma * x / m) * (2 * n + 1)
    base /= math.factorial(n + 1)
    base *= (2.0 * params.lam * x / m) ** n
    return base ** ((2 * n + 2) / (2 * n + 1))


def hamiltonian_series(system, pt, tol=DEFAULT_TOL):
    """Series Hamiltonian of the first-order relativistic-drag system.

    ``H = (m/2) exp(-2 gt x/m) sum_n alpha^{2n} v^{2n+2}(x, p) + (m lam/2 gt)(exp(-2 gt x/m) - 1)``
    with ``v^{2n+2}(x, p) = [(p/m) exp(-2 gamma x/m) (2n+1)/(n+1)! (2 lam x/m)^n]^{(2n+2)/(2n+1)}``.

    Only defined for ``x > 0`` and ``p > 0``. The sum stops once a term drops
    below ``tol.rel_tol`` of the running total.
    """
    params = system.params
    x, p = pt.x, pt.p
    if not x > 0:
        raise DomainError(f"series Hamiltonian needs x > 0, got {x!r}")
    if not p > 0:
        raise DomainError(f"series Hamiltonian needs p > 0, got {p!r}")
    a2 = params.alpha**2
    total = series_velocity_power(params, x, p, 0)
    if a2 > 0:
        # log-space terms avoid overflow in (n+1)! and (2 lam x / m)^n
        log_a = math.log(a2)
        log_base0 = math.log(p / params.m) - 2.0 * params.gamma * x / params.m
        log_q = math.log(2.0 * params.lam * x / params.m)
        growing = 0
        prev = total
        for n in range(1, tol.max_terms):
            log_base = log_base0 + math.log(2 * n + 1) - math.lgamma(n + 2) + n * log_q
            term = math.exp(n * log_a + log_base * (2 * n + 2) / (2 * n + 1))
            total += term
            if term <= tol.rel_tol * total:
                break
            growing = growing + 1 if term > prev else 0
            prev = term
        else:
            raise SeriesDivergenceError(
                f"series Hamiltonian not converged after {tol.max_terms} terms (growing for {growing})"
            )
    return 0.5 * params.m * params.exp_factor(x) * total + params.potential(x)
