"""Particle (bootstrap) SNR estimator: ARG-kernel prediction, amplitude
reweighting, and systematic resampling."""
from __future__ import annotations

import numpy as np

from .amplitude import SwerlingModel, log_amplitude_likelihood
from .models import ArgParams, sample_arg_steps
from .rfs import SnrParticleSet


def predict_particles(
    ps: SnrParticleSet, params: ArgParams, rng: np.random.Generator
) -> SnrParticleSet:
    """Propagate every particle through one ARG step; weights carry over."""
    return SnrParticleSet(sample_arg_steps(ps.values, params, rng), ps.weights)


def update_particles(ps: SnrParticleSet, a: float, model: SwerlingModel) -> SnrParticleSet:
    """Reweight particles by the amplitude likelihood and renormalize."""
    log_w = np.log(ps.weights, out=np.full(len(ps), -np.inf), where=ps.weights > 0)
    log_w = log_w + log_amplitude_likelihood(a, ps.values, model)
    peak = log_w.max()
    if not np.isfinite(peak):
        raise ValueError("all particle likelihoods vanished in the amplitude update")
    w = np.exp(log_w - peak)
    return SnrParticleSet(ps.values, w / w.sum())


def effective_sample_size(weights: np.ndarray) -> float:
    weights = np.asarray(weights, dtype=float)
    return 1.0 / float(np.sum(weights**2))


def systematic_resample_indices(weights: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Low-variance systematic resampling; returns the chosen particle indices."""
    weights = np.asarray(weights, dtype=float)
    n = weights.size
    positions = (rng.uniform() + np.arange(n)) / n
    return np.searchsorted(np.cumsum(weights), positions).clip(max=n - 1)


def resample_if_needed(
    ps: SnrParticleSet, ess_threshold_fraction: float, rng: np.random.Generator
) -> SnrParticleSet:
    """Systematic resample to uniform weights when ESS < fraction * N."""
    if not (0.0 < ess_threshold_fraction <= 1.0):
        raise ValueError("ESS threshold fraction must lie in (0, 1]")
    n = len(ps)
    if effective_sample_size(ps.weights) >= ess_threshold_fraction * n:
        return ps
    idx = systematic_resample_indices(ps.weights, rng)
    return SnrParticleSet(ps.values[idx], np.full(n, 1.0 / n))


def mmse_snr_particles(ps: SnrParticleSet) -> float:
    """Weighted-mean SNR estimate."""
    return ps.mean()
