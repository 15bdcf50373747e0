"""Generic densities on [0, inf) and the named parametric families.

A :class:`GenericDensity` wraps a vectorized pdf together with optional cdf,
quantile, and sampling callables.  The named constructors (exponential,
log-normal, Weibull) are built on frozen scipy distributions, so every
callable they carry is picklable and parallel workers can receive them.
"""

from dataclasses import dataclass
from functools import partial
from typing import Callable, Optional

import numpy as np
from scipy import optimize, stats

from .errors import DomainError, ValidationError
from .quadrature import UPPER_CAP, integrate_adaptive


def _rvs_from_frozen(frozen, rng, size):
    return np.asarray(frozen.rvs(size=size, random_state=rng), dtype=float)


@dataclass(frozen=True, eq=False)
class GenericDensity:
    """A probability density on [0, inf) given by callables.

    ``pdf`` must accept numpy arrays and return 0 for x < 0.  ``descriptor``
    is a human-readable label of the form ``name:param,param`` used in config
    files and report echoes.
    """

    pdf: Callable[[np.ndarray], np.ndarray]
    descriptor: str
    cdf: Optional[Callable[[np.ndarray], np.ndarray]] = None
    ppf: Optional[Callable[[np.ndarray], np.ndarray]] = None
    sampler: Optional[Callable[[np.random.Generator, int], np.ndarray]] = None

    def rvs(self, rng, size):
        if self.sampler is None:
            raise ValidationError(f"density {self.descriptor!r} has no sampler")
        return self.sampler(rng, size)

    def upper_cutoff(self, eps=1e-10):
        """Smallest convenient Q with tail mass beyond Q below ``eps``."""
        if self.ppf is not None:
            return float(self.ppf(1.0 - eps))
        if self.cdf is not None:
            hi = 1.0
            while self.cdf(hi) < 1.0 - eps:
                hi *= 2.0
                if hi > 1e6:
                    raise DomainError(
                        f"density {self.descriptor!r} has too heavy a tail"
                    )
            return float(optimize.brentq(lambda x: self.cdf(x) - (1.0 - eps), 0.0, hi))
        # No distribution function available: probe by halving the tail mass.
        hi = 50.0
        while integrate_adaptive(self.pdf, hi, 4.0 * hi, tol=eps / 10.0) > eps / 2.0:
            hi *= 2.0
            if hi > 1e6:
                raise DomainError(f"density {self.descriptor!r} has too heavy a tail")
        return hi

    def total_mass(self):
        """Integral of the pdf over [0, inf); should be 1 within 1e-6."""
        return integrate_adaptive(self.pdf, 0.0, max(UPPER_CAP, self.upper_cutoff(1e-12)))


def _from_frozen(frozen, descriptor):
    return GenericDensity(
        pdf=frozen.pdf,
        descriptor=descriptor,
        cdf=frozen.cdf,
        ppf=frozen.ppf,
        sampler=partial(_rvs_from_frozen, frozen),
    )


def exponential_density(rate):
    """Exponential density with the given rate (per day)."""
    if rate <= 0:
        raise DomainError(f"exponential rate must be positive, got {rate}")
    return _from_frozen(stats.expon(scale=1.0 / rate), f"exponential:{rate!r}")


def lognormal_density(meanlog, sdlog):
    """Log-normal density: log of the variable is N(meanlog, sdlog^2)."""
    if sdlog <= 0:
        raise DomainError(f"lognormal sdlog must be positive, got {sdlog}")
    frozen = stats.lognorm(s=sdlog, scale=float(np.exp(meanlog)))
    return _from_frozen(frozen, f"lognormal:{meanlog!r},{sdlog!r}")


def weibull_density(shape, scale):
    """Weibull density with the usual shape/scale parameterization."""
    if shape <= 0 or scale <= 0:
        raise DomainError(f"weibull shape and scale must be positive, got {shape}, {scale}")
    frozen = stats.weibull_min(c=shape, scale=scale)
    return _from_frozen(frozen, f"weibull:{shape!r},{scale!r}")


_FAMILIES = {
    "exponential": (exponential_density, 1),
    "lognormal": (lognormal_density, 2),
    "weibull": (weibull_density, 2),
}


def parse_density(text):
    """Parse a ``name:param,param`` descriptor into a density.

    Supported names: exponential (rate), lognormal (meanlog, sdlog),
    weibull (shape, scale), and ``laguerre-file:<path>`` which loads a
    serialized coefficient vector and returns a LaguerreDensity.
    """
    name, sep, rest = text.partition(":")
    name = name.strip().lower()
    if name == "laguerre-file":
        if not sep or not rest.strip():
            raise ValidationError("laguerre-file descriptor needs a path")
        from .dataio import read_laguerre_density

        return read_laguerre_density(rest.strip())
    if name not in _FAMILIES:
        raise ValidationError(
            f"unknown density family {name!r}; expected one of "
            f"{sorted(_FAMILIES)} or laguerre-file"
        )
    builder, n_params = _FAMILIES[name]
    try:
        params = [float(p) for p in rest.split(",")] if rest.strip() else []
    except ValueError as exc:
        raise ValidationError(f"bad density parameters in {text!r}: {exc}") from None
    if len(params) != n_params:
        raise ValidationError(
            f"density family {name!r} takes {n_params} parameter(s), got {len(params)}"
        )
    return builder(*params)
