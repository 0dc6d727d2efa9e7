"""Gamma-approximate SNR estimator.

Prediction pushes a Gamma prior through the ARG transition in the Laplace
domain: the transform of the predicted density is

    K(s) = (s c + 1)^(alpha - delta) / (s (rho / beta + c) + 1)^alpha,

whose first two derivatives at s = 0 give the predicted mean and second
moment; moment matching yields the Gamma approximation. The measurement
update targets likelihood x prior with a random-walk Metropolis chain and
refits a Gamma by matching the sample moments.

Note on the moment formulas: differentiating K(s) gives
M1 = -(delta c + rho alpha / beta); the rho factor is essential (the rho=0
case must collapse to the stationary one-step kernel) and the rate of the
fitted Gamma is |M1| / (M2 - M1^2).
"""
from __future__ import annotations

import math

import numpy as np

from .amplitude import SwerlingModel, log_amplitude_likelihood
from .models import ArgParams
from .rfs import GammaDensity


def predict_gamma(prior: GammaDensity, params: ArgParams) -> GammaDensity:
    """Moment-matched Gamma approximation of the predicted SNR density."""
    alpha, beta = prior.shape, prior.rate
    delta, rho, c = params.delta, params.rho, params.c
    m1 = -(delta * c + rho * alpha / beta)
    m2 = (
        delta * c**2 * (delta + 1.0)
        + rho**2 * alpha * (alpha + 1.0) / beta**2
        + 2.0 * rho * c * alpha * (delta + 1.0) / beta
    )
    var = m2 - m1**2
    if var <= 0:
        raise ArithmeticError("predicted variance is not positive; degenerate parameters")
    return GammaDensity(shape=m1**2 / var, rate=-m1 / var)


def predicted_laplace_transform(s, prior: GammaDensity, params: ArgParams):
    """K(s), the Laplace transform of the predicted SNR density (complex-safe)."""
    s = np.asarray(s)
    alpha, beta = prior.shape, prior.rate
    delta, c = params.delta, params.c
    return (s * c + 1.0) ** (alpha - delta) / (s * (params.rho / beta + c) + 1.0) ** alpha


def inverse_laplace_predicted_pdf(
    prior: GammaDensity,
    params: ArgParams,
    grid: np.ndarray,
    degree: int = 36,
) -> np.ndarray:
    """Numerically invert K(s) on the grid (validation oracle).

    Uses the fixed-Talbot contour (Abate & Valko): with M = degree nodes,
    r = 2M/(5t), s(theta) = r theta (cot theta + i),

        f(t) = (r / M) [ K(r) e^{r t} / 2
                         + sum_k Re( e^{t s(theta_k)} K(s(theta_k)) (1 + i sigma_k) ) ]

    where sigma = theta + (theta cot theta - 1) cot theta. The transform's
    singularities lie on the negative real axis, as the contour requires.
    Intended as a test oracle, not a filtering path.
    """
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size == 0 or np.any(grid <= 0) or np.any(np.diff(grid) <= 0):
        raise ValueError("grid must be strictly increasing and positive")
    m = int(degree)
    k = np.arange(1, m)
    theta = k * np.pi / m
    cot = 1.0 / np.tan(theta)
    sigma = theta + (theta * cot - 1.0) * cot

    out = np.empty_like(grid)
    for j, t in enumerate(grid):
        r = 2.0 * m / (5.0 * t)
        s = r * theta * (cot + 1j)
        k0 = predicted_laplace_transform(np.array([r + 0j]), prior, params)[0]
        acc = 0.5 * k0.real * math.exp(r * t)
        ks = predicted_laplace_transform(s, prior, params)
        acc += float(np.sum((np.exp(t * s) * ks * (1.0 + 1j * sigma)).real))
        out[j] = acc * r / m
    if not np.all(np.isfinite(out)):
        raise ArithmeticError("inverse Laplace evaluation did not converge")
    return np.maximum(out, 0.0)


def oracle_grid(prior: GammaDensity, params: ArgParams, n_low: int = 300, n_main: int = 2500) -> np.ndarray:
    """Default evaluation grid: log-spaced near the origin plus a dense body.

    The predicted density can stay bounded away from zero at the origin
    while its Gamma fit vanishes there, so the origin needs resolving for
    divergence quadrature.
    """
    approx = predict_gamma(prior, params)
    mean = approx.mean
    sd = math.sqrt(approx.variance)
    lo_end = max(mean - 6.0 * sd, 1e-3)
    low = np.geomspace(1e-8, lo_end, n_low)
    main = np.linspace(lo_end, mean + 16.0 * sd, n_main)
    return np.unique(np.concatenate([low, main]))


def kld_gamma_approximation(
    prior: GammaDensity,
    params: ArgParams,
    grid: np.ndarray | None = None,
) -> float:
    """KL divergence of the moment-matched Gamma from the true predicted density.

    Trapezoid quadrature of p log(p/q) over the oracle grid, with p from the
    numerical inverse Laplace transform and q the Gamma approximation.
    """
    if grid is None:
        grid = oracle_grid(prior, params)
    p = inverse_laplace_predicted_pdf(prior, params, grid)
    q_log = predict_gamma(prior, params).logpdf(grid)
    with np.errstate(divide="ignore", invalid="ignore"):
        integrand = np.where(p > 0.0, p * (np.log(np.maximum(p, 1e-300)) - q_log), 0.0)
    return float(np.trapezoid(integrand, grid))


def mh_sample_snr_posterior(
    predicted: GammaDensity,
    a: float,
    model: SwerlingModel,
    n_samples: int,
    proposal_std: float,
    rng: np.random.Generator,
    log_likelihood=None,
) -> np.ndarray:
    """Random-walk Metropolis chain targeting likelihood(a | d) x predicted(d).

    The initial state is drawn from the predicted density; Gaussian steps of
    the given standard deviation; nonpositive proposals are rejected outright
    (the target vanishes there). ``log_likelihood`` may override the
    amplitude likelihood (e.g. a flat likelihood for diagnostics).
    """
    if n_samples < 2:
        raise ValueError("need at least two samples")
    if proposal_std <= 0:
        raise ValueError("proposal standard deviation must be positive")
    if log_likelihood is None:
        if a <= model.threshold:
            raise ValueError("amplitude is below the detection threshold")
        def log_likelihood(d):
            return log_amplitude_likelihood(a, d, model)

    shape, rate = predicted.shape, predicted.rate
    lgam = math.lgamma(shape)
    log_rate = math.log(rate)

    def log_target(d: float) -> float:
        if d <= 0.0:
            return -math.inf
        return (
            float(log_likelihood(d))
            + shape * log_rate
            + (shape - 1.0) * math.log(d)
            - rate * d
            - lgam
        )

    x = float(rng.gamma(shape, 1.0 / rate))
    lx = log_target(x)
    steps = rng.normal(0.0, proposal_std, n_samples)
    log_u = np.log(rng.uniform(size=n_samples))
    chain = np.empty(n_samples)
    for i in range(n_samples):
        cand = x + steps[i]
        lc = log_target(cand)
        # an infeasible start (target 0 there) accepts the first feasible move
        if lc > -math.inf and (lx == -math.inf or lc - lx >= 0.0 or log_u[i] < lc - lx):
            x, lx = cand, lc
        chain[i] = x
    return chain


def fit_gamma_to_samples(samples: np.ndarray) -> GammaDensity:
    """Gamma density matching the sample mean and unbiased variance."""
    samples = np.asarray(samples, dtype=float)
    if samples.size < 2:
        raise ValueError("need at least two samples")
    mean = float(samples.mean())
    var = float(samples.var(ddof=1))
    if var <= 0.0:
        raise ValueError("sample variance is not positive; cannot fit a Gamma")
    return GammaDensity(shape=mean**2 / var, rate=mean / var)


def mmse_snr(density: GammaDensity) -> float:
    """Posterior-mean SNR of a Gamma density."""
    return density.mean
