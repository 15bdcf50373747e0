"""Plug-in features of fitted delay densities.

The reproduction number comes from the renewal identity
1 / R0 = int exp(-r t) g(t) dt, where r is the exponential growth rate of
the expected incidence and g the generation-time density.  The growth rate
is an input here; estimating it from incidence data is out of scope.
"""

from dataclasses import dataclass
from typing import Mapping

from .errors import DomainError
from .laguerre import LaguerreDensity
from .quadrature import UPPER_CAP, integrate_adaptive

DEFAULT_QUANTILE_LEVELS = (0.3, 0.5, 0.7, 0.9)


def reproduction_number(generation, growth_rate):
    """R0 = 1 / int exp(-growth_rate * t) g(t) dt; equals 1 at rate 0."""
    return 1.0 / generation.laplace_transform(growth_rate)


def presymptomatic_probability(incubation, generation):
    """P(G <= I) for independent draws: int F_G(x) f_I(x) dx, in [0, 1]."""

    def integrand(x):
        return generation.cdf(x) * incubation.pdf(x)

    value = integrate_adaptive(integrand, 0.0, UPPER_CAP, tol=1e-9)
    return min(max(value, 0.0), 1.0)


@dataclass(frozen=True)
class FeatureReport:
    reproduction_number: float
    growth_rate: float
    incubation_quantiles: Mapping[float, float]
    generation_quantiles: Mapping[float, float]
    presymptomatic_probability: float

    def to_dict(self):
        return {
            "reproduction_number": self.reproduction_number,
            "growth_rate": self.growth_rate,
            "incubation_quantiles": {str(p): v for p, v in self.incubation_quantiles.items()},
            "generation_quantiles": {str(p): v for p, v in self.generation_quantiles.items()},
            "presymptomatic_probability": self.presymptomatic_probability,
        }


def feature_report(fit_result, growth_rate, probs=DEFAULT_QUANTILE_LEVELS):
    """Bundle R0, quantiles of both delay densities, and P(G <= I)."""
    probs = tuple(float(p) for p in probs)
    for p in probs:
        if not 0.0 < p < 1.0:
            raise DomainError(f"quantile levels must lie in (0, 1), got {p!r}")
    incubation: LaguerreDensity = fit_result.incubation
    generation: LaguerreDensity = fit_result.generation
    return FeatureReport(
        reproduction_number=reproduction_number(generation, growth_rate),
        growth_rate=float(growth_rate),
        incubation_quantiles={p: incubation.quantile(p) for p in probs},
        generation_quantiles={p: generation.quantile(p) for p in probs},
        presymptomatic_probability=presymptomatic_probability(incubation, generation),
    )
