"""Maximum-likelihood fitting over unit coefficient vectors and BIC selection.

The unit-norm constraint is enforced by optimizing hyperspherical angles
with the radius fixed to one.  The likelihood surface has kinks where a
candidate polynomial crosses zero, so the optimizer is Nelder-Mead
(derivative-free) with several random starts; the box [0, pi] is handled by
reflecting angles back into the box, which is exact because the polar map
is 2*pi-periodic.
"""

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from joblib import Parallel, delayed
from scipy import optimize

from .errors import DegenerateFitError, LagsieveError, ValidationError
from .laguerre import LaguerreDensity, angles_to_theta, fold_angles
from .likelihood import LogLikEvaluator, QuadratureConfig

def child_seed(master, *key):
    """Deterministic 63-bit substream seed derived from a master seed."""
    ss = np.random.SeedSequence(int(master), spawn_key=tuple(int(k) for k in key))
    return int(ss.generate_state(1, np.uint64)[0] >> 1)


@dataclass(frozen=True)
class FitOptions:
    n_starts: int = 5
    max_iters: int = 2000
    simplex_tol: float = 1e-8
    seed: int = 0
    quadrature: QuadratureConfig = field(default_factory=QuadratureConfig)

    def __post_init__(self):
        if self.n_starts < 1:
            raise ValidationError("n_starts must be >= 1")
        if self.max_iters < 1:
            raise ValidationError("max_iters must be >= 1")


@dataclass(frozen=True)
class StartDiagnostics:
    start: int
    loglik: float
    iterations: int
    converged: bool


@dataclass(frozen=True)
class FitResult:
    incubation: LaguerreDensity
    generation: LaguerreDensity
    loglik: float
    bic: float
    starts: tuple
    seed: int
    n_obs: int

    @property
    def m_incubation(self):
        return self.incubation.m

    @property
    def m_generation(self):
        return self.generation.m


def minimize_over_angles(objective, n_angles, n_starts=5, seed=0,
                         max_iters=2000, tol=1e-8, extra_starts=()):
    """Multi-start Nelder-Mead over folded angles; returns (angles, value, starts).

    Start k draws its initial point from a dedicated substream of ``seed``
    so individual starts can be reproduced in isolation.  Ties between
    starts go to the lowest start index.
    """
    starts = [np.asarray(s, dtype=float) for s in extra_starts]
    for k in range(n_starts):
        rng = np.random.default_rng(
            np.random.SeedSequence(int(seed), spawn_key=(k,))
        )
        starts.append(rng.uniform(0.0, np.pi, n_angles))

    def folded(x):
        return objective(fold_angles(x))

    best = None
    diagnostics = []
    for index, x0 in enumerate(starts):
        simplex = np.vstack([x0, x0 + 0.5 * np.eye(n_angles)])
        result = optimize.minimize(
            folded,
            x0,
            method="Nelder-Mead",
            options={
                "maxiter": max_iters,
                "maxfev": 4 * max_iters,
                "xatol": tol,
                "fatol": tol,
                "initial_simplex": simplex,
            },
        )
        diagnostics.append((index, float(result.fun), int(result.nit), bool(result.success)))
        if best is None or result.fun < best[1]:
            best = (fold_angles(result.x), float(result.fun))
    return best[0], best[1], diagnostics


def fit(data, exposure, m_incubation, m_generation, options=None):
    """Maximize the dataset log-likelihood over both coefficient vectors.

    Deterministic given ``options.seed``.  For degrees (0, 0) the parameter
    space is a single point and no optimization is run.
    """
    options = options or FitOptions()
    data = list(data)
    if not data:
        raise ValidationError("cannot fit an empty dataset")
    if m_incubation < 0 or m_generation < 0:
        raise ValidationError("degrees must be >= 0")

    evaluator = LogLikEvaluator(
        data, exposure, m_incubation, m_generation, options.quadrature
    )
    n = len(data)
    n_angles = m_incubation + m_generation

    def assemble(theta_inc, theta_gen, starts):
        incubation = LaguerreDensity(theta_inc)
        generation = LaguerreDensity(theta_gen)
        loglik = evaluator.loglik(incubation.theta, generation.theta)
        return FitResult(
            incubation=incubation,
            generation=generation,
            loglik=loglik,
            bic=bic(loglik, m_incubation, m_generation, n),
            starts=tuple(starts),
            seed=options.seed,
            n_obs=n,
        )

    if n_angles == 0:
        return assemble(np.array([1.0]), np.array([1.0]), [])

    def negative(angles):
        theta_inc = angles_to_theta(angles[:m_incubation])
        theta_gen = angles_to_theta(angles[m_incubation:])
        return -evaluator.loglik(theta_inc, theta_gen)

    angles, value, raw = minimize_over_angles(
        negative,
        n_angles,
        n_starts=options.n_starts,
        seed=options.seed,
        max_iters=options.max_iters,
        tol=options.simplex_tol,
    )
    floor_total = n * evaluator.log_floor
    if -value <= floor_total + 1e-6:
        raise DegenerateFitError(
            "likelihood is at the floor for every start; the data admit no "
            "non-degenerate fit at these degrees"
        )
    starts = [
        StartDiagnostics(start=i, loglik=-fun, iterations=nit, converged=ok)
        for i, fun, nit, ok in raw
    ]
    return assemble(
        angles_to_theta(angles[:m_incubation]),
        angles_to_theta(angles[m_incubation:]),
        starts,
    )


def bic(loglik, m_incubation, m_generation, n, param_count=None):
    """-2 loglik + k log(n); k defaults to the free angle count m1 + m2.

    Each unit-norm coefficient vector of length m+1 carries m free
    parameters because the norm constraint removes one.
    """
    if n < 1:
        raise ValidationError("sample size must be >= 1")
    k = (m_incubation + m_generation) if param_count is None else param_count
    return -2.0 * loglik + k * math.log(n)


@dataclass(frozen=True)
class CellFit:
    loglik: Optional[float]
    bic: Optional[float]
    error: Optional[str] = None
    result: Optional[FitResult] = None


@dataclass(frozen=True)
class SelectionResult:
    best: tuple
    table: dict

    def best_fit(self):
        return self.table[self.best].result


def _fit_cell(data, exposure, cell, options):
    try:
        result = fit(data, exposure, cell[0], cell[1], options)
        return cell, CellFit(result.loglik, result.bic, None, result)
    except LagsieveError as exc:
        return cell, CellFit(None, None, str(exc), None)


def select_model(data, exposure, grid, options=None, threads=1):
    """Fit every (m1, m2) cell of the grid and pick the BIC minimizer.

    Ties break toward fewer total parameters, then the smaller incubation
    degree.  Cells whose fit fails keep the error message in the table and
    are excluded from the argmin.
    """
    options = options or FitOptions()
    grid = [tuple(int(v) for v in cell) for cell in grid]
    if not grid:
        raise ValidationError("model grid must be non-empty")
    data = list(data)
    outcomes = Parallel(n_jobs=threads)(
        delayed(_fit_cell)(data, exposure, cell, options) for cell in grid
    )
    table = dict(outcomes)
    scored = [
        (cell_fit.bic, cell[0] + cell[1], cell[0], cell)
        for cell, cell_fit in table.items()
        if cell_fit.error is None
    ]
    if not scored:
        raise DegenerateFitError("every grid cell failed to fit")
    best = min(scored)[-1]
    return SelectionResult(best=best, table=table)
