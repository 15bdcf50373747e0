"""Transmission-pair observations and the window-truncated log-likelihood.

One observation records the symptom onsets of an infector/infectee pair
together with the truncated exposure window w_tilde = min(W, S1) and a
location label.  Conditionally on the exposure model (an exponential-growth
kernel per location, rate 0 meaning a uniform infection time), the
contribution of one pair to the log-likelihood is

    log int_0^{S2} g(y) int_0^{w_tilde} exp(r t) f(S1 - t) f(S2 - t - y) dt dy

up to an additive constant that does not depend on the candidate incubation
density f or generation density g.  The double integral is evaluated by
iterated Gauss-Legendre quadrature with the inner range truncated to
[0, S2 - t], where the support of f ends.
"""

import math
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .errors import DegenerateNormalizerError, ValidationError
from .laguerre import laguerre_design
from .quadrature import gauss_legendre


@dataclass(frozen=True)
class Observation:
    """One transmission pair, all times in days from the window start."""

    s1: float
    s2: float
    w_tilde: float
    location: int = 0

    def __post_init__(self):
        for name in ("s1", "s2", "w_tilde"):
            value = getattr(self, name)
            if not (np.isfinite(value) and value >= 0.0):
                raise ValidationError(f"{name} must be finite and >= 0, got {value!r}")
        if self.w_tilde > self.s1:
            raise ValidationError(
                f"w_tilde={self.w_tilde!r} exceeds s1={self.s1!r}; the truncated "
                "window cannot extend past the infector's symptom onset"
            )


@dataclass(frozen=True)
class ExposureModel:
    """Per-location exponential growth rates of the infection-time kernel.

    The kernel density over the window [0, w] is proportional to
    exp(-rate * (w - t)); rate 0 encodes a uniform infection time.
    Subclass and override :meth:`kernel` for other integrable kernels.
    """

    rates: Mapping[int, float]

    def rate(self, location):
        try:
            return float(self.rates[location])
        except KeyError:
            raise ValidationError(
                f"no growth rate configured for location {location!r}"
            ) from None

    def kernel(self, u, location):
        """Kernel value h(u | location) for elapsed distance u from the window end."""
        return np.exp(-self.rate(location) * np.asarray(u, dtype=float))

    def normalizer(self, w, location):
        """1 / int_0^w h(u | location) du; requires a window of positive length."""
        if not (np.isfinite(w) and w > 0.0):
            raise DegenerateNormalizerError(
                f"window length {w!r} admits no normalizable infection-time kernel"
            )
        r = self.rate(location)
        if r == 0.0:
            return 1.0 / w
        return r / -math.expm1(-r * w)


@dataclass(frozen=True)
class QuadratureConfig:
    """Node counts for the iterated Gauss-Legendre likelihood quadrature."""

    nodes_t: int = 64
    nodes_y: int = 64
    log_floor: float = 1e-300

    def __post_init__(self):
        if self.nodes_t < 8 or self.nodes_y < 8:
            raise ValidationError("quadrature node counts must be >= 8")
        if not (0.0 < self.log_floor < 1.0):
            raise ValidationError("log_floor must lie in (0, 1)")


DEFAULT_QUADRATURE = QuadratureConfig()


class LogLikEvaluator:
    """Precomputed quadrature grids and basis matrices for one dataset.

    Everything that depends only on the observations (node positions,
    quadrature weights, kernel factors, Laguerre design matrices) is built
    once; evaluating the log-likelihood at candidate coefficient vectors then
    reduces to two matrix-vector products and an elementwise reduction.  The
    per-observation constant exp(-s1 - s2) is kept in log space so very long
    delays cannot underflow before the logarithm is taken.
    """

    def __init__(self, data, exposure, m_incubation, m_generation, quadrature=DEFAULT_QUADRATURE):
        data = list(data)
        for obs in data:
            if not isinstance(obs, Observation):
                raise ValidationError(f"expected Observation, got {obs!r}")
        self.n_obs = len(data)
        self.m_incubation = int(m_incubation)
        self.m_generation = int(m_generation)
        self.quadrature = quadrature
        self.log_floor = math.log(quadrature.log_floor)
        if not data:
            return

        s1 = np.array([o.s1 for o in data])
        s2 = np.array([o.s2 for o in data])
        w_tilde = np.array([o.w_tilde for o in data])
        rates = np.array([exposure.rate(o.location) for o in data])

        xt, wt = gauss_legendre(quadrature.nodes_t)
        xy, wy = gauss_legendre(quadrature.nodes_y)

        # Outer nodes t in [0, w_tilde]; inner nodes y in [0, max(s2 - t, 0)].
        t = 0.5 * w_tilde[:, None] * (xt + 1.0)
        t_weight = 0.5 * w_tilde[:, None] * wt
        y_len = np.maximum(s2[:, None] - t, 0.0)
        y = 0.5 * y_len[:, :, None] * (xy + 1.0)
        y_weight = 0.5 * y_len[:, :, None] * wy

        with np.errstate(divide="ignore"):
            log_weight = (
                np.log(t_weight)[:, :, None]
                + np.log(y_weight)
                + ((2.0 + rates)[:, None] * t - (s1 + s2)[:, None])[:, :, None]
            )
        shift = np.max(log_weight, axis=(1, 2))
        shift = np.where(np.isfinite(shift), shift, 0.0)
        self._shift = shift
        self._weight = np.exp(log_weight - shift[:, None, None]).reshape(self.n_obs, -1)

        a = np.maximum(s1[:, None] - t, 0.0)
        b = np.maximum(s2[:, None, None] - t[:, :, None] - y, 0.0)
        # Flat 2-d layouts keep the matrix-vector products in BLAS.
        self._basis_inc_a = laguerre_design(a, self.m_incubation).reshape(-1, self.m_incubation + 1)
        self._basis_inc_b = laguerre_design(b, self.m_incubation).reshape(-1, self.m_incubation + 1)
        self._basis_gen = laguerre_design(y, self.m_generation).reshape(-1, self.m_generation + 1)

    def per_observation(self, theta_incubation, theta_generation):
        """Per-observation log integrals, floored at log(log_floor)."""
        if self.n_obs == 0:
            return np.empty(0)
        nodes_y = self.quadrature.nodes_y
        p_inc_a = self._basis_inc_a @ np.asarray(theta_incubation)
        p_inc_b = self._basis_inc_b @ np.asarray(theta_incubation)
        p_gen = self._basis_gen @ np.asarray(theta_generation)
        np.multiply(p_inc_b, p_inc_b, out=p_inc_b)
        np.multiply(p_gen, p_gen, out=p_gen)
        np.multiply(p_inc_b, p_gen, out=p_inc_b)
        inner = (self._weight * p_inc_b.reshape(self.n_obs, -1)).reshape(
            self.n_obs, -1, nodes_y
        ).sum(axis=2)
        np.multiply(p_inc_a, p_inc_a, out=p_inc_a)
        integrals = (inner * p_inc_a.reshape(self.n_obs, -1)).sum(axis=1)
        with np.errstate(divide="ignore"):
            logs = self._shift + np.log(integrals)
        return np.maximum(logs, self.log_floor)

    def loglik(self, theta_incubation, theta_generation):
        """Sum of per-observation terms; exactly order-independent (fsum)."""
        if self.n_obs == 0:
            return 0.0
        return math.fsum(self.per_observation(theta_incubation, theta_generation))


def obs_loglik(obs, exposure, incubation, generation, quadrature=DEFAULT_QUADRATURE):
    """Log-likelihood contribution of a single observation."""
    evaluator = LogLikEvaluator(
        [obs], exposure, incubation.m, generation.m, quadrature
    )
    return float(evaluator.per_observation(incubation.theta, generation.theta)[0])


def dataset_loglik(data, exposure, incubation, generation, quadrature=DEFAULT_QUADRATURE):
    """Log-likelihood of a dataset; the empty dataset scores 0."""
    evaluator = LogLikEvaluator(
        data, exposure, incubation.m, generation.m, quadrature
    )
    return evaluator.loglik(incubation.theta, generation.theta)


def joint_density(x1, x2, w, location, exposure, window_density, incubation, generation, nodes=64):
    """Conditional joint density of (S1, S2, W) given the location.

    n(w, c) * phi_W(w) * int_0^{x2} g(y) int_0^{min(x1, w)} h(w - t | c)
    f(x1 - t) f(x2 - t - y) dt dy, zero whenever any coordinate is negative.
    Used for diagnostics and Monte-Carlo cross-checks, not in the fitting
    path (the likelihood drops the pieces that do not depend on f and g).
    """
    if min(x1, x2, w) < 0.0:
        return 0.0
    norm = exposure.normalizer(w, location)
    f_inc = incubation.pdf
    f_gen = generation.pdf

    xt, wt = gauss_legendre(nodes)
    xy, wy = gauss_legendre(nodes)
    t_hi = min(x1, w)
    t = 0.5 * t_hi * (xt + 1.0)
    t_weight = 0.5 * t_hi * wt
    y_len = np.maximum(x2 - t, 0.0)
    y = 0.5 * y_len[:, None] * (xy + 1.0)
    y_weight = 0.5 * y_len[:, None] * wy

    inner = np.sum(y_weight * f_gen(y) * f_inc(np.maximum(x2 - t[:, None] - y, 0.0)), axis=1)
    kernel = np.asarray(exposure.kernel(w - t, location))
    value = np.sum(t_weight * kernel * f_inc(np.maximum(x1 - t, 0.0)) * inner)
    return float(norm * window_density.pdf(w) * value)
