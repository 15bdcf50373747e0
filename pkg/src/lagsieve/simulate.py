"""Data generation, Monte-Carlo study harness, and the parametric bootstrap test.

The generating process draws, per transmission pair, a window length W, a
location C, the infector's infection time T1 inside [0, W] (uniform where the
location's growth rate is zero, otherwise tilted by exp(rate * t)), then
independent incubation periods I1, I2 and a generation time G, and reports
S1 = T1 + I1, S2 = T1 + I2 + G, w_tilde = min(W, S1).
"""

import math
from dataclasses import dataclass, field, replace
from typing import Mapping

import numpy as np
from joblib import Parallel, delayed

from .densities import (
    GenericDensity,
    exponential_density,
    lognormal_density,
    weibull_density,
)
from .errors import LagsieveError, ValidationError
from .features import DEFAULT_QUANTILE_LEVELS, feature_report
from .fitting import FitOptions, FitResult, child_seed, fit
from .laguerre import hellinger_sq, best_approx
from .likelihood import ExposureModel, Observation

# Defaults shaped like early-pandemic transmission-pair data: short
# exponential windows, two location regimes (no growth / doubling every five
# days), log-normal incubation and Weibull generation-time truths.
DEFAULT_WINDOW_RATE = 0.3820225
DEFAULT_GROWTH_RATE = math.log(2.0) / 5.0
DEFAULT_LOCATION_PROBS = {0: 0.65, 1: 0.35}
DEFAULT_LOCATION_RATES = {0: 0.0, 1: DEFAULT_GROWTH_RATE}
DEFAULT_INCUBATION = ("lognormal", 1.644, 0.363)
DEFAULT_GENERATION = ("weibull", 2.826, 5.665)


def _default_window():
    return exponential_density(DEFAULT_WINDOW_RATE)


def _default_incubation():
    return lognormal_density(DEFAULT_INCUBATION[1], DEFAULT_INCUBATION[2])


def _default_generation():
    return weibull_density(DEFAULT_GENERATION[1], DEFAULT_GENERATION[2])


@dataclass(frozen=True)
class GeneratorConfig:
    n: int
    seed: int
    window: GenericDensity = field(default_factory=_default_window)
    location_probs: Mapping[int, float] = field(
        default_factory=lambda: dict(DEFAULT_LOCATION_PROBS)
    )
    rates: Mapping[int, float] = field(
        default_factory=lambda: dict(DEFAULT_LOCATION_RATES)
    )
    incubation: GenericDensity = field(default_factory=_default_incubation)
    generation: GenericDensity = field(default_factory=_default_generation)

    def __post_init__(self):
        if self.n < 1:
            raise ValidationError("sample size must be >= 1")
        total = math.fsum(self.location_probs.values())
        if abs(total - 1.0) > 1e-12:
            raise ValidationError(f"location probabilities sum to {total!r}, not 1")
        if any(p < 0.0 for p in self.location_probs.values()):
            raise ValidationError("location probabilities must be >= 0")
        missing = set(self.location_probs) - set(self.rates)
        if missing:
            raise ValidationError(f"locations without a growth rate: {sorted(missing)}")

    def exposure_model(self):
        return ExposureModel(dict(self.rates))

    def echo(self):
        """Serializable summary for report provenance."""
        return {
            "n": self.n,
            "seed": self.seed,
            "window": self.window.descriptor,
            "location_probs": {str(k): v for k, v in self.location_probs.items()},
            "rates": {str(k): v for k, v in self.rates.items()},
            "incubation": self.incubation.descriptor,
            "generation": self.generation.descriptor,
        }


def default_generator_config(n, seed):
    return GeneratorConfig(n=n, seed=seed)


def infection_offset_cdf(s, w, rate):
    """Distribution function of T1 on [0, w] under the exp(rate * t) kernel."""
    s = np.clip(np.asarray(s, dtype=float), 0.0, w)
    if rate == 0.0:
        return s / w
    return (np.exp(-rate * (w - s)) - np.exp(-rate * w)) / -math.expm1(-rate * w)


def sample_infection_offset(rng, w, rate, size=None):
    """Draw T1 in [0, w]; inverse CDF of the exp(rate * t) kernel."""
    u = rng.random(size)
    return _offset_from_uniform(u, np.asarray(w, dtype=float), rate)


def _offset_from_uniform(u, w, rate):
    if rate == 0.0:
        return u * w
    return w + np.log(np.exp(-rate * w) + u * -np.expm1(-rate * w)) / rate


@dataclass(frozen=True)
class TransmissionSample:
    """Latent and observed variables of one simulated batch."""

    w: np.ndarray
    location: np.ndarray
    t1: np.ndarray
    i1: np.ndarray
    i2: np.ndarray
    g: np.ndarray

    @property
    def s1(self):
        return self.t1 + self.i1

    @property
    def s2(self):
        return self.t1 + self.i2 + self.g

    @property
    def w_tilde(self):
        return np.minimum(self.w, self.s1)

    def observations(self):
        return [
            Observation(s1=float(a), s2=float(b), w_tilde=float(c), location=int(d))
            for a, b, c, d in zip(self.s1, self.s2, self.w_tilde, self.location)
        ]


def sample_batch(config):
    """Simulate all variables of ``config.n`` pairs; deterministic given the seed."""
    rng = np.random.default_rng(np.random.SeedSequence(int(config.seed)))
    n = config.n
    w = config.window.rvs(rng, n)
    labels = sorted(config.location_probs)
    probs = np.array([config.location_probs[c] for c in labels])
    location = np.asarray(labels)[rng.choice(len(labels), size=n, p=probs / probs.sum())]
    u = rng.random(n)
    t1 = np.empty(n)
    for label in labels:
        mask = location == label
        t1[mask] = _offset_from_uniform(u[mask], w[mask], float(config.rates[label]))
    i1 = config.incubation.rvs(rng, n)
    i2 = config.incubation.rvs(rng, n)
    g = config.generation.rvs(rng, n)
    return TransmissionSample(w=w, location=location, t1=t1, i1=i1, i2=i2, g=g)


def sample_dataset(config):
    """Simulated observations only (onsets, truncated window, location)."""
    return sample_batch(config).observations()


@dataclass(frozen=True)
class StudyRow:
    replication: int
    data_seed: int
    fit_seed: int
    loglik: float
    bic: float
    hellinger_sq_incubation: float
    hellinger_sq_generation: float
    hellinger_sq_incubation_target: float
    hellinger_sq_generation_target: float
    r0: float
    presymptomatic_probability: float
    incubation_quantiles: Mapping[float, float]
    generation_quantiles: Mapping[float, float]


@dataclass(frozen=True)
class StudyReport:
    rows: tuple
    failures: tuple
    m_incubation: int
    m_generation: int
    growth_rate: float
    n_replications: int
    config_echo: Mapping
    fit_seed: int
    quantile_levels: tuple

    def column(self, name):
        return np.array([getattr(row, name) for row in self.rows])

    def quantile_column(self, which, level):
        attr = f"{which}_quantiles"
        return np.array([getattr(row, attr)[level] for row in self.rows])

    def summaries(self, levels=(0.1, 0.25, 0.5, 0.75, 0.9)):
        names = (
            "hellinger_sq_incubation",
            "hellinger_sq_generation",
            "hellinger_sq_incubation_target",
            "hellinger_sq_generation_target",
            "r0",
            "presymptomatic_probability",
        )
        out = {}
        for name in names:
            values = self.column(name)
            out[name] = {
                "mean": float(values.mean()),
                **{f"q{int(100 * q)}": float(np.quantile(values, q)) for q in levels},
            }
        return out


def _study_replication(config, exposure, m_inc, m_gen, options, growth_rate,
                       targets, probs, replication, retries):
    data_seed = child_seed(config.seed, replication, 0)
    data = sample_dataset(replace(config, seed=data_seed))
    last_error = None
    fit_seed = None
    for attempt in range(retries + 1):
        fit_seed = child_seed(options.seed, replication, attempt + 1)
        try:
            result = fit(data, exposure, m_inc, m_gen, replace(options, seed=fit_seed))
            break
        except LagsieveError as exc:
            last_error = exc
            result = None
    if result is None:
        return replication, None, f"{type(last_error).__name__}: {last_error}"
    report = feature_report(result, growth_rate, probs)
    target_inc, target_gen = targets
    row = StudyRow(
        replication=replication,
        data_seed=data_seed,
        fit_seed=fit_seed,
        loglik=result.loglik,
        bic=result.bic,
        hellinger_sq_incubation=hellinger_sq(result.incubation, config.incubation),
        hellinger_sq_generation=hellinger_sq(result.generation, config.generation),
        hellinger_sq_incubation_target=hellinger_sq(result.incubation, target_inc),
        hellinger_sq_generation_target=hellinger_sq(result.generation, target_gen),
        r0=report.reproduction_number,
        presymptomatic_probability=report.presymptomatic_probability,
        incubation_quantiles=report.incubation_quantiles,
        generation_quantiles=report.generation_quantiles,
    )
    return replication, row, None


def run_study(config, m_incubation, m_generation, n_replications, growth_rate,
              options=None, threads=1, retries=2, probs=DEFAULT_QUANTILE_LEVELS):
    """Monte-Carlo study: simulate, fit, and score ``n_replications`` datasets.

    Replication k draws its data and fit seeds from substreams k of the
    config and option seeds, so replications are independent and individually
    reproducible.  Fit failures are retried with fresh random starts
    (``retries`` times) and recorded, not fatal.
    """
    if n_replications < 1:
        raise ValidationError("n_replications must be >= 1")
    options = options or FitOptions()
    exposure = config.exposure_model()
    targets = (
        best_approx(config.incubation, m_incubation),
        best_approx(config.generation, m_generation),
    )
    outcomes = Parallel(n_jobs=threads)(
        delayed(_study_replication)(
            config, exposure, m_incubation, m_generation, options,
            growth_rate, targets, probs, k, retries,
        )
        for k in range(n_replications)
    )
    rows = tuple(row for _, row, _ in outcomes if row is not None)
    failures = tuple((k, msg) for k, _, msg in outcomes if msg is not None)
    return StudyReport(
        rows=rows,
        failures=failures,
        m_incubation=m_incubation,
        m_generation=m_generation,
        growth_rate=float(growth_rate),
        n_replications=n_replications,
        config_echo=config.echo(),
        fit_seed=options.seed,
        quantile_levels=tuple(probs),
    )


def _bootstrap_sim(config, exposure, m_inc, m_gen, options, targets, index, retries):
    data_seed = child_seed(config.seed, index, 0)
    data = sample_dataset(replace(config, seed=data_seed))
    last_error = None
    for attempt in range(retries + 1):
        fit_seed = child_seed(options.seed, index, attempt + 1)
        try:
            result = fit(data, exposure, m_inc, m_gen, replace(options, seed=fit_seed))
            target_inc, target_gen = targets
            return (
                hellinger_sq(result.incubation, target_inc),
                hellinger_sq(result.generation, target_gen),
                None,
            )
        except LagsieveError as exc:
            last_error = exc
    return None, None, f"{type(last_error).__name__}: {last_error}"


def simulate_null_statistics(h0_incubation, h0_generation, m_incubation,
                             m_generation, config, n_sims, options=None,
                             threads=1, retries=2):
    """Distances of refitted simulations to the projected null densities.

    Simulates ``n_sims`` datasets with the hypothesized truths plugged into
    ``config``, fits each, and returns the squared Hellinger distances of the
    fits to the best degree-(m1, m2) approximations of the null densities,
    plus the count of simulations whose fit failed.
    """
    options = options or FitOptions()
    null_config = replace(config, incubation=h0_incubation, generation=h0_generation)
    exposure = null_config.exposure_model()
    targets = (
        best_approx(h0_incubation, m_incubation),
        best_approx(h0_generation, m_generation),
    )
    outcomes = Parallel(n_jobs=threads)(
        delayed(_bootstrap_sim)(
            null_config, exposure, m_incubation, m_generation, options, targets, k, retries
        )
        for k in range(n_sims)
    )
    sim_inc = np.array([a for a, _, msg in outcomes if msg is None])
    sim_gen = np.array([b for _, b, msg in outcomes if msg is None])
    n_failed = sum(1 for _, _, msg in outcomes if msg is not None)
    return sim_inc, sim_gen, n_failed


@dataclass(frozen=True)
class BootstrapResult:
    observed_incubation: float
    observed_generation: float
    sim_incubation: np.ndarray
    sim_generation: np.ndarray
    p_incubation: float
    p_generation: float
    p_joint: float
    n_failed: int
    m_incubation: int
    m_generation: int

    def to_dict(self):
        return {
            "observed_incubation": self.observed_incubation,
            "observed_generation": self.observed_generation,
            "sim_incubation": [float(v) for v in self.sim_incubation],
            "sim_generation": [float(v) for v in self.sim_generation],
            "p_incubation": self.p_incubation,
            "p_generation": self.p_generation,
            "p_joint": self.p_joint,
            "n_failed": self.n_failed,
            "m_incubation": self.m_incubation,
            "m_generation": self.m_generation,
        }


def add_one_pvalue(simulated, observed):
    """(1 + #{sim >= observed}) / (N + 1); never exactly zero."""
    simulated = np.asarray(simulated, dtype=float)
    return float((1 + int(np.sum(simulated >= observed))) / (simulated.size + 1))


def bootstrap_test(observed, h0_incubation, h0_generation, m_incubation,
                   m_generation, config, n_sims, options=None, threads=1,
                   retries=2):
    """Parametric bootstrap goodness-of-fit test for hypothesized truths.

    ``observed`` is either a FitResult or a dataset (which is fitted first).
    The test statistics are the squared Hellinger distances between the
    observed fit and the best degree-(m1, m2) approximations of the null
    densities; the null distribution comes from refitting ``n_sims``
    simulated datasets.  P-values use the add-one convention.
    """
    if n_sims < 1:
        raise ValidationError("n_sims must be >= 1")
    options = options or FitOptions()
    if isinstance(observed, FitResult):
        observed_fit = observed
        if (observed_fit.m_incubation, observed_fit.m_generation) != (
            m_incubation,
            m_generation,
        ):
            raise ValidationError(
                "degrees of the observed fit do not match the requested test degrees"
            )
    else:
        exposure = config.exposure_model()
        observed_fit = fit(
            list(observed), exposure, m_incubation, m_generation,
            replace(options, seed=child_seed(options.seed, 1, 0)),
        )
    target_inc = best_approx(h0_incubation, m_incubation)
    target_gen = best_approx(h0_generation, m_generation)
    observed_inc = hellinger_sq(observed_fit.incubation, target_inc)
    observed_gen = hellinger_sq(observed_fit.generation, target_gen)
    sim_inc, sim_gen, n_failed = simulate_null_statistics(
        h0_incubation, h0_generation, m_incubation, m_generation,
        config, n_sims, options, threads=threads, retries=retries,
    )
    both = np.sum((sim_inc >= observed_inc) & (sim_gen >= observed_gen))
    n_valid = sim_inc.size
    return BootstrapResult(
        observed_incubation=observed_inc,
        observed_generation=observed_gen,
        sim_incubation=sim_inc,
        sim_generation=sim_gen,
        p_incubation=add_one_pvalue(sim_inc, observed_inc),
        p_generation=add_one_pvalue(sim_gen, observed_gen),
        p_joint=float((1 + int(both)) / (n_valid + 1)),
        n_failed=n_failed,
        m_incubation=m_incubation,
        m_generation=m_generation,
    )


# Exposure windows missing from field records are imputed conservatively: the
# window opens no earlier than this many days before the infector's onset.
IMPUTE_LOOKBACK_DAYS = 60.0


@dataclass(frozen=True)
class RecordError:
    index: int
    reason: str


@dataclass(frozen=True)
class ImputeResult:
    observations: tuple
    errors: tuple


def impute_windows(records):
    """Normalize partially specified field records into observations.

    Each record is a mapping with required keys ``s1`` and ``s2`` (absolute
    onset times), optional ``window_start``/``window_end`` for the infector's
    exposure window, optional ``infectee_window_end``, and an optional
    ``location``.  A missing window start is set 60 days before the
    infector's onset; a missing window end is capped by both onsets and, when
    reported, the infectee's window end.  Times are shifted so the window
    start becomes the origin.  Bad records are returned as per-index errors,
    not raised.
    """
    observations = []
    errors = []
    for index, record in enumerate(records):
        try:
            s1 = float(record["s1"])
            s2 = float(record["s2"])
        except (KeyError, TypeError, ValueError) as exc:
            errors.append(RecordError(index, f"unparseable onsets: {exc}"))
            continue
        if not (math.isfinite(s1) and math.isfinite(s2)):
            errors.append(RecordError(index, "onsets must be finite"))
            continue
        try:
            start = record.get("window_start")
            end = record.get("window_end")
            infectee_end = record.get("infectee_window_end")
            location = int(record.get("location", 0) or 0)
            start = float(start) if start is not None else s1 - IMPUTE_LOOKBACK_DAYS
            if end is None:
                candidates = [s1, s2]
                if infectee_end is not None:
                    candidates.append(float(infectee_end))
                end = min(candidates)
            else:
                end = float(end)
        except (TypeError, ValueError) as exc:
            errors.append(RecordError(index, f"unparseable window: {exc}"))
            continue
        if s1 < start:
            errors.append(
                RecordError(index, "infector onset precedes the exposure window")
            )
            continue
        if s2 < start:
            errors.append(
                RecordError(index, "infectee onset precedes the exposure window")
            )
            continue
        if end < start:
            errors.append(RecordError(index, "window ends before it starts"))
            continue
        observations.append(
            Observation(
                s1=s1 - start,
                s2=s2 - start,
                w_tilde=min(end, s1) - start,
                location=location,
            )
        )
    return ImputeResult(tuple(observations), tuple(errors))
