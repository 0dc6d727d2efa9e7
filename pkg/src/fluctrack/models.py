"""Kinematic motion/measurement models and the SNR fluctuation process.

The SNR of a fluctuating target evolves as an autoregressive Gamma (ARG)
process whose one-step transition is a noncentral Gamma density: a Poisson
mixture of Gamma(delta + i, scale c) components with Poisson rate
rho * d_prev / c. For rho < 1 the process is stationary with marginal
Gamma(delta, scale c / (1 - rho)).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from .rfs import GaussianComponent, GaussianMixture

# Series terms are dropped once they fall below this fraction of the
# running sum (past the Poisson mode the terms decay super-geometrically).
_SERIES_RTOL = 1e-12
_SERIES_CHUNK = 64

# Samplers never report a nonpositive SNR; exact zeros from underflow are
# nudged to this floor.
_SNR_FLOOR = 1e-300


@dataclass(frozen=True)
class LinearGaussianModel:
    """Linear-Gaussian kinematics: x' = F x + w, z = H x + v."""

    transition: np.ndarray
    process_noise: np.ndarray
    observation: np.ndarray
    obs_noise: np.ndarray
    dt: float
    sigma_v: float
    sigma_eps: float

    def __post_init__(self):
        for name in ("transition", "process_noise", "observation", "obs_noise"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=float))
        n = self.transition.shape[0]
        if self.transition.shape != (n, n) or self.process_noise.shape != (n, n):
            raise ValueError("transition and process noise must be square and matching")
        m = self.observation.shape[0]
        if self.observation.shape[1] != n or self.obs_noise.shape != (m, m):
            raise ValueError("observation matrices have inconsistent shapes")

    @classmethod
    def constant_velocity(cls, dt: float, sigma_v: float, sigma_eps: float) -> "LinearGaussianModel":
        """Planar constant-velocity model over [p1, v1, p2, v2].

        F = I2 (x) [[1, dt], [0, 1]], Q = I2 (x) [[dt^4/4, dt^3/2], [dt^3/2, dt^2]] sigma_v^2,
        H picks the two positions, R = sigma_eps^2 I2.
        """
        f_block = np.array([[1.0, dt], [0.0, 1.0]])
        q_block = np.array([[dt**4 / 4.0, dt**3 / 2.0], [dt**3 / 2.0, dt**2]]) * sigma_v**2
        transition = np.kron(np.eye(2), f_block)
        process_noise = np.kron(np.eye(2), q_block)
        observation = np.array([[1.0, 0.0, 0.0, 0.0], [0.0, 0.0, 1.0, 0.0]])
        obs_noise = sigma_eps**2 * np.eye(2)
        return cls(transition, process_noise, observation, obs_noise, dt, sigma_v, sigma_eps)


@dataclass(frozen=True)
class ArgParams:
    """Autoregressive Gamma process parameters (dof, AR coefficient, scale)."""

    delta: float
    rho: float
    c: float

    def __post_init__(self):
        if not self.delta > 0:
            raise ValueError("delta must be positive")
        if not self.c > 0:
            raise ValueError("c must be positive")
        if not (0.0 <= self.rho <= 1.0):
            raise ValueError("rho must lie in [0, 1]")

    def conditional_mean(self, d_prev: float) -> float:
        return self.c * self.delta + self.rho * d_prev

    def conditional_variance(self, d_prev: float) -> float:
        return self.c**2 * self.delta + 2.0 * self.rho * self.c * d_prev

    def stationary_mean(self) -> float:
        if self.rho >= 1.0:
            raise ValueError("no stationary law for rho >= 1")
        return self.c * self.delta / (1.0 - self.rho)


def predict_kinematic(gm: GaussianMixture, model: LinearGaussianModel) -> GaussianMixture:
    """Propagate each component through the motion model; weights unchanged."""
    f = model.transition
    q = model.process_noise
    return GaussianMixture(
        tuple(
            GaussianComponent(c.weight, f @ c.mean, f @ c.covariance @ f.T + q)
            for c in gm.components
        )
    )


def ncg_transition_pdf(d: float, d_prev: float, params: ArgParams) -> float:
    """One-step SNR transition density f(d | d_prev).

    Evaluated as the Poisson-Gamma mixture series in log space, summing in
    chunks until a chunk past the Poisson rate falls below _SERIES_RTOL of
    the running total. Returns 0 for d <= 0.
    """
    if d <= 0.0:
        return 0.0
    if d_prev < 0.0:
        raise ValueError("d_prev must be nonnegative")
    lam = params.rho * d_prev / params.c
    log_d, log_c = math.log(d), math.log(params.c)
    base = -d / params.c

    if lam == 0.0:
        shape = params.delta
        return math.exp(base + (shape - 1.0) * log_d - shape * log_c - math.lgamma(shape))

    log_lam = math.log(lam)
    total = -math.inf
    start = 0
    while True:
        i = np.arange(start, start + _SERIES_CHUNK)
        shape = params.delta + i
        log_terms = (
            -lam
            + i * log_lam
            - special.gammaln(i + 1.0)
            + (shape - 1.0) * log_d
            - shape * log_c
            - special.gammaln(shape)
        )
        chunk = float(special.logsumexp(log_terms))
        total = float(np.logaddexp(total, chunk))
        start += _SERIES_CHUNK
        if start > lam and chunk - total < math.log(_SERIES_RTOL):
            break
    return math.exp(base + total)


def sample_arg_step(d_prev: float, params: ArgParams, rng: np.random.Generator) -> float:
    """Draw the next SNR value of the ARG process.

    Equivalent to summing N ~ Poisson(rho d_prev / c) unit-shape Gamma(1, c)
    variables plus a Gamma(delta, c) residual; the independent same-scale
    Gammas are drawn as a single Gamma(N + delta, c) variate.
    """
    if d_prev < 0.0:
        raise ValueError("d_prev must be nonnegative")
    n = rng.poisson(params.rho * d_prev / params.c) if d_prev > 0 else 0
    value = float(rng.gamma(n + params.delta, params.c))
    return max(value, _SNR_FLOOR)


def sample_arg_steps(d_prev: np.ndarray, params: ArgParams, rng: np.random.Generator) -> np.ndarray:
    """Vectorized ARG step for a batch of states (one draw per entry)."""
    d_prev = np.asarray(d_prev, dtype=float)
    n = rng.poisson(params.rho * d_prev / params.c)
    values = rng.gamma(n + params.delta, params.c)
    return np.maximum(values, _SNR_FLOOR)
