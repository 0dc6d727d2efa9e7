"""Swerling 1/3 amplitude likelihoods, detection probability and samplers.

Amplitude a is the matched-filter envelope output; only returns exceeding
the detection threshold tau are observed, so the likelihoods are the raw
Swerling densities renormalized to (tau, inf). Clutter amplitude follows
the same law with SNR d = 0. The dB convention is SNR(dB) = 10 log10(1+d);
every conversion in the package goes through the two helpers below.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

SWERLING_KINDS = (1, 3)


def snr_db_from_linear(d):
    """Linear SNR d -> dB, as 10 log10(1 + d)."""
    return 10.0 * np.log10(1.0 + np.asarray(d, dtype=float))


def snr_linear_from_db(db):
    """dB -> linear SNR d, inverse of snr_db_from_linear."""
    return np.power(10.0, np.asarray(db, dtype=float) / 10.0) - 1.0


@dataclass(frozen=True)
class SwerlingModel:
    """Fluctuation model kind (1 or 3) and detection threshold tau."""

    kind: int
    threshold: float

    def __post_init__(self):
        if self.kind not in SWERLING_KINDS:
            raise ValueError(f"kind must be one of {SWERLING_KINDS}, got {self.kind}")
        if self.threshold < 0:
            raise ValueError("threshold must be nonnegative")


def detection_probability(d, model: SwerlingModel):
    """Probability that the return amplitude exceeds the threshold.

    Swerling 1: exp(-tau^2 / (2 (1+d)))
    Swerling 3: (1 + 3 tau^2 / (2 (1+d))) exp(-3 tau^2 / (2 (1+d)))
    Both equal the integral of the raw amplitude density over (tau, inf).
    """
    d = np.asarray(d, dtype=float)
    if np.any(d < 0):
        raise ValueError("SNR must be nonnegative")
    tau = model.threshold
    x = 1.0 + d
    if model.kind == 1:
        out = np.exp(-(tau**2) / (2.0 * x))
    else:
        bt2 = 3.0 * tau**2 / (2.0 * x)
        out = (1.0 + bt2) * np.exp(-bt2)
    return out if out.ndim else float(out)


def log_amplitude_likelihood(a: float, d, model: SwerlingModel):
    """Log of the renormalized amplitude density, vectorized over d."""
    tau = model.threshold
    if a <= tau:
        raise ValueError(f"amplitude {a} is censored (threshold {tau})")
    d = np.asarray(d, dtype=float)
    if np.any(d < 0):
        raise ValueError("SNR must be nonnegative")
    x = 1.0 + d
    if model.kind == 1:
        out = np.log(a / x) + (tau**2 - a**2) / (2.0 * x)
    else:
        out = (
            math.log(9.0 * a**3)
            - np.log(3.0 * tau**2 * x + 2.0 * x**2)
            + 3.0 * (tau**2 - a**2) / (2.0 * x)
        )
    return out if out.ndim else float(out)


def amplitude_likelihood(a: float, d, model: SwerlingModel):
    """Renormalized amplitude density p_tau(a | d); defined for a > tau."""
    out = np.exp(log_amplitude_likelihood(a, d, model))
    return out if np.ndim(out) else float(out)


def clutter_amplitude_pdf(a: float, model: SwerlingModel) -> float:
    """Clutter amplitude density: the target density at d = 0."""
    return amplitude_likelihood(a, 0.0, model)


def log_clutter_amplitude_pdf(a: float, model: SwerlingModel) -> float:
    return log_amplitude_likelihood(a, 0.0, model)


def sample_raw_amplitude(d, model: SwerlingModel, rng: np.random.Generator, size=None):
    """Unthresholded amplitude draw(s) from the raw Swerling density.

    Swerling 1: a^2 ~ Exponential(mean 2(1+d)); Swerling 3: a^2 ~ Gamma(2,
    scale 2(1+d)/3). Used by the simulator, where detection is decided by
    comparing the raw draw against the threshold.
    """
    d = np.asarray(d, dtype=float)
    x = 1.0 + d
    if model.kind == 1:
        sq = rng.exponential(2.0 * x, size=size)
    else:
        sq = rng.gamma(2.0, 2.0 * x / 3.0, size=size)
    return np.sqrt(sq)


def sample_amplitude(d: float, model: SwerlingModel, rng: np.random.Generator, size=None):
    """Draw thresholded amplitudes distributed per p_tau(. | d).

    Swerling 1 uses the inverse CDF a = sqrt(tau^2 - 2 (1+d) ln u). Swerling 3
    uses acceptance-rejection with a mean-square-matched Swerling 1 envelope
    (1 + d_env = 2 (1+d) / 3); the envelope bound is evaluated numerically at
    the stationary point of the density ratio.
    """
    if d < 0:
        raise ValueError("SNR must be nonnegative")
    tau = model.threshold
    x = 1.0 + d
    scalar = size is None
    n = 1 if scalar else int(size)

    if model.kind == 1:
        u = rng.uniform(size=n)
        out = np.sqrt(tau**2 - 2.0 * x * np.log(u))
        return float(out[0]) if scalar else out

    x_env = max(2.0 * x / 3.0, 1.0)
    d_env = x_env - 1.0
    env = SwerlingModel(1, tau)
    # ratio p3_tau/p1_tau is proportional to a^2 exp(-(b3 - b1) a^2); its
    # stationary point sits at a^2 = 4(1+d)/3
    a_star = max(tau * (1.0 + 1e-12), math.sqrt(4.0 * x / 3.0))
    log_bound = (
        log_amplitude_likelihood(a_star, d, model)
        - log_amplitude_likelihood(a_star, d_env, env)
        + 1e-12
    )

    out = np.empty(n)
    filled = 0
    while filled < n:
        m = 2 * (n - filled) + 16
        u = rng.uniform(size=m)
        cand = np.sqrt(tau**2 - 2.0 * x_env * np.log(u))
        log_target = (
            math.log(9.0)
            + 3.0 * np.log(cand)
            - math.log(3.0 * tau**2 * x + 2.0 * x**2)
            + 3.0 * (tau**2 - cand**2) / (2.0 * x)
        )
        log_env = np.log(cand / x_env) + (tau**2 - cand**2) / (2.0 * x_env)
        accept = np.log(rng.uniform(size=m)) < log_target - log_env - log_bound
        take = cand[accept][: n - filled]
        out[filled : filled + take.size] = take
        filled += take.size
    return float(out[0]) if scalar else out


class MarginalizedAmplitudeRatio:
    """Amplitude likelihood ratio marginalized uniformly (in dB) over an SNR interval.

    Precomputes the dB grid once; ``log_ratio`` evaluates
    log[(1/|I|) int p_tau(a | d(u)) du / c_tau(a)] by composite Simpson
    quadrature at the given step (the positive weights sum in log space).
    """

    def __init__(self, model: SwerlingModel, interval_db: tuple[float, float], step_db: float = 0.1):
        low, high = float(interval_db[0]), float(interval_db[1])
        if high < low:
            raise ValueError("interval upper bound below lower bound")
        self.model = model
        self.interval_db = (low, high)
        if high == low:
            self._d_grid = snr_linear_from_db(np.array([low]))
            self._log_weights = np.array([0.0])
            return
        intervals = max(int(round((high - low) / step_db)), 2)
        intervals += intervals % 2
        grid_db = np.linspace(low, high, intervals + 1)
        self._d_grid = snr_linear_from_db(grid_db)
        w = np.ones(intervals + 1)
        w[1:-1:2] = 4.0
        w[2:-1:2] = 2.0
        w *= (high - low) / intervals / 3.0
        self._log_weights = np.log(w / (high - low))

    def log_ratio(self, a: float) -> float:
        log_p = log_amplitude_likelihood(a, self._d_grid, self.model)
        log_marg = float(special.logsumexp(log_p + self._log_weights))
        return log_marg - log_clutter_amplitude_pdf(a, self.model)


def marginalized_likelihood_ratio(
    a: float,
    model: SwerlingModel,
    interval_db: tuple[float, float],
    step_db: float = 0.1,
) -> float:
    """SNR-marginalized likelihood over clutter density; see MarginalizedAmplitudeRatio."""
    return math.exp(MarginalizedAmplitudeRatio(model, interval_db, step_db).log_ratio(a))
