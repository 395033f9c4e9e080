"""Special functions and series kernels.

Modified Bessel functions of order 0 and 1 are summed from their power
series, which is adequate (all terms positive, no cancellation) on the
supported range ``0 <= y <= 30``.
"""

import math
from dataclasses import dataclass

from .errors import DomainError, SeriesDivergenceError

BESSEL_MAX_ARG = 30.0
EXPM1_TAYLOR_THRESHOLD = 1e-8


@dataclass(frozen=True)
class SeriesTolerance:
    """Truncation policy for infinite sums.

    A sum stops once a term's contribution relative to the running total
    falls below ``rel_tol``.
    """

    rel_tol: float = 1e-14
    max_terms: int = 200

    def __post_init__(self):
        if not self.rel_tol > 0:
            raise ValueError(f"rel_tol must be positive, got {self.rel_tol!r}")
        if self.max_terms < 1:
            raise ValueError(f"max_terms must be >= 1, got {self.max_terms!r}")


DEFAULT_TOL = SeriesTolerance()


def _check_bessel_arg(y):
    if not 0.0 <= y <= BESSEL_MAX_ARG:
        raise DomainError(f"Bessel argument must lie in [0, {BESSEL_MAX_ARG}], got {y!r}")


def _power_series(first_term, ratio, tol):
    # ratio(k) gives term[k] / term[k-1]
    total = term = first_term
    for k in range(1, tol.max_terms):
        term *= ratio(k)
        total += term
        if term <= tol.rel_tol * total:
            return total
    if term == 0.0:
        return total
    raise SeriesDivergenceError(f"series not converged after {tol.max_terms} terms")


def bessel_i0(y, tol=DEFAULT_TOL):
    """Modified Bessel function of the first kind, order 0."""
    _check_bessel_arg(y)
    if y == 0.0:
        return 1.0
    q = 0.25 * y * y
    return _power_series(1.0, lambda k: q / (k * k), tol)


def bessel_i1(y, tol=DEFAULT_TOL):
    """Modified Bessel function of the first kind, order 1."""
    _check_bessel_arg(y)
    if y == 0.0:
        return 0.0
    q = 0.25 * y * y
    return _power_series(0.5 * y, lambda k: q / (k * (k + 1)), tol)


def bessel_combo(y, tol=DEFAULT_TOL):
    """Return ``exp(-y) * (I0(y) + I1(y))``.

    This is the factor by which the canonical momentum is rescaled when
    passing to the reparametrized picture. It equals 1 at ``y = 0`` and
    decreases monotonically.
    """
    return math.exp(-y) * (bessel_i0(y, tol) + bessel_i1(y, tol))


def series_coeff_c(n):
    """Coefficient ``(2n+1)(2n)! / (2**n (n+1)! (n!)**2)`` of the momentum-map series.

    Built by the ratio ``c[n+1]/c[n] = (2n+3) / ((n+2)(n+1))`` so no factorial
    is ever formed.
    """
    if n < 0:
        raise DomainError(f"coefficient index must be non-negative, got {n!r}")
    c = 1.0
    for k in range(n):
        c *= (2 * k + 3) / ((k + 2) * (k + 1))
    return c


def series_coeffs(n_terms):
    """List of the first ``n_terms`` coefficients ``c[0], ..., c[n_terms-1]``."""
    out = [1.0]
    for k in range(n_terms - 1):
        out.append(out[-1] * (2 * k + 3) / ((k + 2) * (k + 1)))
    return out[:n_terms]


def momentum_series_sum(y, tol=DEFAULT_TOL):
    """Sum ``sum_n c[n] * y**n``, which equals ``exp(y) * (I0(y) + I1(y))``."""
    if y < 0:
        raise DomainError(f"series argument must be non-negative, got {y!r}")
    if y == 0.0:
        return 1.0
    return _power_series(1.0, lambda k: y * (2 * k + 1) / ((k + 1) * k), tol)


def expm1_ratio(z):
    """Stable ``(exp(z) - 1) / z`` with the removable singularity at 0 filled in."""
    if abs(z) < EXPM1_TAYLOR_THRESHOLD:
        return 1.0 + z / 2.0 + z * z / 6.0 + z * z * z / 24.0
    return math.expm1(z) / z
