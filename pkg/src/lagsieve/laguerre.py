"""Laguerre-type densities on [0, inf).

The family consists of densities exp(-x) * P(x)^2 where P is a linear
combination of the first m+1 Laguerre polynomials with a unit-norm
coefficient vector theta.  Orthonormality of the polynomials under the
exp(-x) weight makes every such function integrate to one.  This module
provides polynomial evaluation, closed-form distribution functions and
exp-tilted moments (through the Laguerre expansion of P^2), quantiles,
density distances (squared Hellinger and the power-divergence family
rho_alpha), the hyperspherical angle parameterization of theta, and the
Hellinger projection of an arbitrary density onto the family.
"""

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy import optimize

from .densities import GenericDensity
from .errors import (
    DegenerateProjectionError,
    DomainError,
    UnsupportedDegreeError,
)
from .quadrature import UPPER_CAP, gauss_laguerre, gauss_legendre, integrate_adaptive

# Above this degree the three-term recurrence for L_k starts losing accuracy
# in double precision for the argument ranges we care about.
DEGREE_CEILING = 60

# The closed-form CDF and tilted moments expand P(x)^2 in the Laguerre basis;
# the expansion coefficients become ill-conditioned for very high degrees, so
# beyond this the integrals fall back to adaptive quadrature.
CLOSED_FORM_MAX_DEGREE = 16

_NORM_TOL = 1e-12


def _check_degree(k):
    if k < 0 or int(k) != k:
        raise DomainError(f"polynomial degree must be a non-negative integer, got {k}")
    if k > DEGREE_CEILING:
        raise UnsupportedDegreeError(
            f"degree {k} exceeds the supported ceiling {DEGREE_CEILING}"
        )


def laguerre_eval(k, x):
    """Evaluate the k-th Laguerre polynomial via the three-term recurrence.

    (k+1) L_{k+1}(x) = (2k+1-x) L_k(x) - k L_{k-1}(x), L_0 = 1, L_1 = 1-x.
    """
    _check_degree(k)
    x = np.asarray(x, dtype=float)
    prev = np.ones_like(x)
    if k == 0:
        return prev if prev.ndim else float(prev)
    cur = 1.0 - x
    for j in range(2, k + 1):
        prev, cur = cur, ((2.0 * j - 1.0 - x) * cur - (j - 1.0) * prev) / j
    return cur if cur.ndim else float(cur)


def laguerre_design(x, m):
    """Stack L_0..L_m evaluated at ``x`` into an array of shape x.shape + (m+1,)."""
    _check_degree(m)
    x = np.asarray(x, dtype=float)
    out = np.empty(x.shape + (m + 1,), dtype=float)
    out[..., 0] = 1.0
    if m >= 1:
        out[..., 1] = 1.0 - x
    for j in range(2, m + 1):
        out[..., j] = ((2.0 * j - 1.0 - x) * out[..., j - 1] - (j - 1.0) * out[..., j - 2]) / j
    return out


def laguerre_series(theta, x):
    """Evaluate sum_k theta_k L_k(x) without materializing the design matrix."""
    theta = np.asarray(theta, dtype=float)
    x = np.asarray(x, dtype=float)
    acc = np.full(x.shape, theta[0], dtype=float)
    if theta.size == 1:
        return acc
    prev = np.ones_like(x)
    cur = 1.0 - x
    acc += theta[1] * cur
    for j in range(2, theta.size):
        prev, cur = cur, ((2.0 * j - 1.0 - x) * cur - (j - 1.0) * prev) / j
        acc += theta[j] * cur
    return acc


def canonical_sign(theta):
    """Flip ``theta`` so its first nonzero coordinate is >= 0.

    theta and -theta describe the same density; this picks one representative.
    """
    theta = np.asarray(theta, dtype=float)
    for value in theta:
        if value != 0.0:
            return -theta if value < 0.0 else theta
    return theta


def angles_to_theta(angles):
    """Map hyperspherical angles in [0, pi]^m to a unit vector in R^(m+1).

    Uses the standard polar map with radius one (first coordinate cos(a_1),
    then products of sines), followed by sign canonicalization.
    """
    angles = np.atleast_1d(np.asarray(angles, dtype=float))
    if angles.ndim != 1:
        raise DomainError("angles must be a 1-d vector")
    if angles.size and (angles.min() < -1e-12 or angles.max() > np.pi + 1e-12):
        raise DomainError("angles must lie in [0, pi]")
    angles = np.clip(angles, 0.0, np.pi)
    theta = np.empty(angles.size + 1, dtype=float)
    sin_prod = 1.0
    for i, a in enumerate(angles):
        theta[i] = sin_prod * math.cos(a)
        sin_prod *= math.sin(a)
    theta[-1] = sin_prod
    return canonical_sign(theta)


def theta_to_angles(theta):
    """Invert the polar map; returns angles in [0, pi]^m.

    Of the two representatives theta/-theta, the one reachable from the
    angle box (non-negative last coordinate) is inverted, so a round trip
    through :func:`angles_to_theta` reproduces theta up to a global sign.
    """
    theta = np.asarray(theta, dtype=float)
    if theta.ndim != 1 or theta.size == 0:
        raise DomainError("theta must be a non-empty 1-d vector")
    norm = float(np.linalg.norm(theta))
    if norm == 0.0:
        raise DomainError("theta must be nonzero")
    if abs(norm - 1.0) > _NORM_TOL:
        raise DomainError(f"theta must have unit norm, got {norm!r}")
    t = -theta if theta[-1] < 0.0 else theta
    angles = np.zeros(theta.size - 1, dtype=float)
    tail = norm
    for i in range(theta.size - 1):
        if tail <= 0.0:
            break  # remaining coordinates are all zero; angles stay 0
        angles[i] = math.acos(min(1.0, max(-1.0, t[i] / tail)))
        tail = math.sqrt(max(tail * tail - t[i] * t[i], 0.0))
    return angles


def fold_angles(angles):
    """Reflect arbitrary angles into the box [0, pi].

    The polar map is 2*pi-periodic in every angle, so folding is a
    continuous, surjective reparameterization; optimizers can roam all of
    R^m while candidate vectors stay on the sphere.
    """
    angles = np.asarray(angles, dtype=float)
    reduced = np.mod(angles, 2.0 * np.pi)
    return np.pi - np.abs(reduced - np.pi)


@dataclass(frozen=True, eq=False)
class LaguerreDensity:
    """Density exp(-x) * (sum_k theta_k L_k(x))^2 with unit-norm theta."""

    theta: np.ndarray

    def __post_init__(self):
        theta = np.array(self.theta, dtype=float)
        if theta.ndim != 1 or theta.size == 0:
            raise DomainError("theta must be a non-empty 1-d vector")
        if theta.size - 1 > DEGREE_CEILING:
            raise UnsupportedDegreeError(
                f"degree {theta.size - 1} exceeds the supported ceiling {DEGREE_CEILING}"
            )
        if not np.all(np.isfinite(theta)):
            raise DomainError("theta must be finite")
        norm = float(np.linalg.norm(theta))
        if abs(norm - 1.0) > _NORM_TOL:
            raise DomainError(f"theta must have unit norm within {_NORM_TOL}, got {norm!r}")
        theta /= norm
        theta.setflags(write=False)
        object.__setattr__(self, "theta", theta)

    @property
    def m(self):
        return self.theta.size - 1

    @property
    def descriptor(self):
        return f"laguerre:m={self.m}"

    @cached_property
    def _sq_coefficients(self):
        """Laguerre-basis coefficients of P(x)^2: P^2 = sum_k beta_k L_k.

        Computed by Gauss-Laguerre quadrature with enough nodes to integrate
        the degree-4m integrand P^2 L_k exactly.  Unlike a monomial
        expansion, these coefficients keep the closed-form CDF stable: each
        CDF term is bounded by 2 |beta_k| because |L_k(x)| <= exp(x/2).
        """
        nodes, weights = gauss_laguerre(2 * self.m + 2)
        design = laguerre_design(nodes, 2 * self.m)
        squared = (design[:, : self.m + 1] @ self.theta) ** 2
        beta = design.T @ (weights * squared)
        beta.setflags(write=False)
        return beta

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        values = np.exp(-x) * laguerre_series(self.theta, x) ** 2
        values = np.where(x >= 0.0, values, 0.0)
        return values if values.ndim else float(values)

    def cdf(self, x):
        """Distribution function, in closed form for moderate degrees.

        Uses int_0^x exp(-t) L_k(t) dt = exp(-x) (L_{k-1}(x) - L_k(x)) for
        k >= 1 applied to the Laguerre expansion of P^2.
        """
        scalar = np.ndim(x) == 0
        x = np.atleast_1d(np.asarray(x, dtype=float))
        if self.m > CLOSED_FORM_MAX_DEGREE:
            values = np.array([
                integrate_adaptive(self.pdf, 0.0, min(v, UPPER_CAP)) if v > 0.0 else 0.0
                for v in x
            ])
            return float(values[0]) if scalar else values
        beta = self._sq_coefficients
        finite = np.where(np.isfinite(x), x, 0.0)
        design = laguerre_design(finite, 2 * self.m)
        diffs = design[..., :-1] - design[..., 1:]
        inner = beta[0] * np.expm1(-finite) * -1.0 + np.exp(-finite) * (diffs @ beta[1:])
        values = np.where(x <= 0.0, 0.0, np.where(np.isfinite(x), inner, beta[0]))
        return float(values[0]) if scalar else values

    def quantile(self, p):
        """Smallest x with cdf(x) >= p, located to |cdf(x) - p| <= 1e-10."""
        if not (np.isfinite(p) and 0.0 < p < 1.0):
            raise DomainError(f"quantile level must lie in (0, 1), got {p!r}")
        hi = 1.0
        while self.cdf(hi) < p:
            hi *= 2.0
            if hi > 1e4:
                raise DomainError(f"quantile bracket failed for p={p!r}")
        root = optimize.brentq(lambda x: self.cdf(x) - p, 0.0, hi, xtol=1e-14, rtol=1e-15)
        return float(root)

    def laplace_transform(self, rate):
        """int_0^inf exp(-rate * t) pdf(t) dt; equals 1 at rate 0.

        Uses int_0^inf exp(-(1+rate) t) L_k(t) dt = rate^k / (1+rate)^(k+1)
        applied to the Laguerre expansion of P^2; requires rate > -1.
        """
        rate = float(rate)
        if not np.isfinite(rate) or rate <= -1.0:
            from .errors import DivergentIntegralError

            raise DivergentIntegralError(
                f"exp-tilted integral diverges for rate {rate!r} <= -1"
            )
        if self.m > CLOSED_FORM_MAX_DEGREE:
            return integrate_adaptive(lambda t: np.exp(-rate * t) * self.pdf(t), 0.0, UPPER_CAP)
        base = 1.0 + rate
        terms = [
            beta * rate**k / base ** (k + 1)
            for k, beta in enumerate(self._sq_coefficients)
        ]
        return math.fsum(terms)

    def rvs(self, rng, size):
        """Inverse-CDF sampling; intended for modest sample sizes."""
        u = rng.random(size)
        return np.array([self.quantile(v) for v in np.atleast_1d(u)])

    def to_dict(self):
        return {"m": self.m, "theta": [float(v) for v in self.theta]}

    @classmethod
    def from_dict(cls, payload):
        from .errors import ValidationError

        theta = np.asarray(payload["theta"], dtype=float)
        if int(payload.get("m", theta.size - 1)) != theta.size - 1:
            raise ValidationError("inconsistent degree and coefficient length")
        return cls(theta)


def _pdf_of(density):
    if isinstance(density, (LaguerreDensity, GenericDensity)):
        return density.pdf
    if callable(getattr(density, "pdf", None)):
        return density.pdf
    raise DomainError(f"expected a density object with a pdf, got {density!r}")


def hellinger_sq(f, g):
    """Squared Hellinger distance: int (sqrt(f) - sqrt(g))^2 = 2 - 2 int sqrt(f g)."""
    fp, gp = _pdf_of(f), _pdf_of(g)

    def integrand(x):
        return math.sqrt(max(fp(x), 0.0) * max(gp(x), 0.0))

    affinity = integrate_adaptive(integrand, 0.0, UPPER_CAP)
    return min(max(2.0 - 2.0 * affinity, 0.0), 2.0)


def rho_alpha(f, g, alpha):
    """Power divergence (1/alpha) int f ((f/g)^alpha - 1); rho_{-1/2} = hellinger_sq.

    Non-negative for alpha >= -1 by convexity.
    """
    alpha = float(alpha)
    if alpha == 0.0 or alpha < -1.0 or not np.isfinite(alpha):
        raise DomainError(f"alpha must be nonzero and >= -1, got {alpha!r}")
    fp, gp = _pdf_of(f), _pdf_of(g)

    def integrand(x):
        fx = max(fp(x), 0.0)
        if fx == 0.0:
            return 0.0
        gx = max(gp(x), 0.0)
        ratio = fx / gx if gx > 0.0 else math.inf
        return fx * (ratio**alpha - 1.0) / alpha

    return integrate_adaptive(integrand, 0.0, UPPER_CAP, tol=1e-9)


def best_approx(phi, m, refine=False, n_starts=5, seed=0):
    """Project a density onto the degree-m family, minimizing Hellinger distance.

    Computes coefficients c_k = int sqrt(phi(x)) L_k(x) exp(-x/2) dx by
    256-node Gauss-Legendre quadrature on [0, Q] (Q cut off where phi's tail
    mass drops below 1e-10) and returns theta = c / ||c||.  With
    ``refine=True`` the projection is polished by direct Hellinger
    minimization over the angle parameterization, which can only help when
    the projected polynomial changes sign inside the support of phi.
    """
    _check_degree(m)
    if isinstance(phi, LaguerreDensity):
        cutoff = phi.quantile(1.0 - 1e-10)
        pdf = phi.pdf
    else:
        cutoff = phi.upper_cutoff(1e-10)
        pdf = _pdf_of(phi)
    nodes, weights = gauss_legendre(256)
    x = 0.5 * cutoff * (nodes + 1.0)
    w = 0.5 * cutoff * weights
    root_phi = np.sqrt(np.maximum(pdf(x), 0.0))
    coeffs = laguerre_design(x, m).T @ (w * root_phi * np.exp(-0.5 * x))
    norm = float(np.linalg.norm(coeffs))
    if norm < 1e-10:
        raise DegenerateProjectionError(
            f"projection of {getattr(phi, 'descriptor', phi)!r} onto degree {m} is degenerate"
        )
    projected = LaguerreDensity(coeffs / norm)
    if not refine or m == 0:
        return projected

    from .fitting import minimize_over_angles

    def objective(angles):
        return hellinger_sq(phi, LaguerreDensity(angles_to_theta(angles)))

    initial = theta_to_angles(projected.theta)
    angles, value, _ = minimize_over_angles(
        objective, m, n_starts=n_starts, seed=seed, extra_starts=[initial]
    )
    refined = LaguerreDensity(angles_to_theta(angles))
    return refined if value < hellinger_sq(phi, projected) else projected
