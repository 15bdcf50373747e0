"""Shared quadrature helpers.

All densities handled by this package live on [0, inf) and decay at least
like exp(-x) times a polynomial, so adaptive integrals are truncated at
``UPPER_CAP`` where the remaining mass is far below every tolerance used
anywhere in the package.
"""

from functools import lru_cache

import numpy as np
from scipy import integrate

from .errors import QuadratureAccuracyError

# Truncation point for integrals over [0, inf); exp(-200) ~ 1.4e-87 dwarfs
# any polynomial factor that a degree-60 expansion can produce.
UPPER_CAP = 200.0

DEFAULT_TOL = 1e-10


def integrate_adaptive(f, a, b, tol=DEFAULT_TOL):
    """Adaptive integral of ``f`` on [a, b] with absolute tolerance ``tol``.

    Raises QuadratureAccuracyError (carrying the achieved estimate) when the
    error bound reported by the adaptive rule exceeds ``tol`` by more than a
    factor of 100.
    """
    value, abserr, info, *rest = integrate.quad(
        f, a, b, epsabs=tol, epsrel=tol, limit=500, full_output=True
    )
    if rest and abserr > 100.0 * tol:
        raise QuadratureAccuracyError(
            f"adaptive quadrature on [{a}, {b}] did not converge", value, abserr
        )
    return value


@lru_cache(maxsize=32)
def gauss_legendre(n):
    """Cached Gauss-Legendre nodes and weights on [-1, 1]."""
    x, w = np.polynomial.legendre.leggauss(int(n))
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


@lru_cache(maxsize=8)
def gauss_laguerre(n):
    """Cached Gauss-Laguerre nodes and weights (weight exp(-x) on [0, inf))."""
    x, w = np.polynomial.laguerre.laggauss(int(n))
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w
