"""Gaussian-mixture Kalman measurement update and mixture truncation."""
from __future__ import annotations

import numpy as np
from scipy.special import logsumexp

from .models import LinearGaussianModel
from .rfs import GaussianComponent, GaussianMixture

_LOG_2PI = float(np.log(2.0 * np.pi))


class KalmanPrecompute:
    """Measurement-independent Kalman quantities for one predicted mixture.

    Innovation covariances, gains and posterior covariances depend only on
    the predicted mixture, so a track facing several candidate measurements
    factors that work out once. Raises numpy.linalg.LinAlgError when an
    innovation covariance is singular.
    """

    def __init__(self, gm: GaussianMixture, model: LinearGaussianModel):
        if len(gm) == 0:
            raise ValueError("cannot update an empty mixture")
        self.gm = gm
        h = model.observation
        means = gm.means
        covs = gm.covariances
        self.weights = gm.weights
        self.log_weights = np.log(np.maximum(self.weights, 1e-300))
        self.pred_meas = means @ h.T
        self._s = np.einsum("ij,njk,lk->nil", h, covs, h) + model.obs_noise
        self.chol = np.linalg.cholesky(self._s)
        logdet = 2.0 * np.sum(np.log(np.diagonal(self.chol, axis1=1, axis2=2)), axis=1)
        self.log_norm = -0.5 * (h.shape[0] * _LOG_2PI + logdet)
        self._means = means
        self._covs = covs
        self._h = h
        self._gain = None
        self._post_cov = None

    def _gain_terms(self):
        """Gains and posterior covariances, built on first posterior() call.

        Gating and likelihood evaluation dominate call counts and need only
        the innovation statistics; most tracks never reach the update.
        """
        if self._gain is None:
            pht = np.einsum("nij,kj->nik", self._covs, self._h)  # P H^T
            self._gain = np.transpose(
                np.linalg.solve(self._s, np.transpose(pht, (0, 2, 1))), (0, 2, 1)
            )
            post = self._covs - self._gain @ np.einsum("ij,njk->nik", self._h, self._covs)
            self._post_cov = 0.5 * (post + np.transpose(post, (0, 2, 1)))
        return self._gain, self._post_cov

    def _mahalanobis_sq(self, z: np.ndarray) -> np.ndarray:
        """Squared innovation Mahalanobis distance per component."""
        innov = np.asarray(z, dtype=float) - self.pred_meas
        l = self.chol
        if innov.shape[1] == 2:
            y0 = innov[:, 0] / l[:, 0, 0]
            y1 = (innov[:, 1] - l[:, 1, 0] * y0) / l[:, 1, 1]
            return y0**2 + y1**2
        quad = np.empty(innov.shape[0])
        for i in range(quad.size):
            y = np.linalg.solve(l[i], innov[i])
            quad[i] = y @ y
        return quad

    def log_xi(self, z: np.ndarray) -> np.ndarray:
        """Per-component predicted-measurement log density at z."""
        return self.log_norm - 0.5 * self._mahalanobis_sq(z)

    def log_likelihood(self, z: np.ndarray) -> float:
        """log sum_i w_i xi_i(z), the mixture predicted-measurement likelihood."""
        return float(logsumexp(self.log_weights + self.log_xi(z)))

    def min_mahalanobis_sq(self, z: np.ndarray) -> float:
        """Smallest squared innovation Mahalanobis distance over components."""
        return float(self._mahalanobis_sq(z).min())

    def posterior(self, z: np.ndarray) -> tuple[GaussianMixture, np.ndarray]:
        """Updated normalized mixture and the raw per-component likelihoods."""
        z = np.asarray(z, dtype=float)
        gain, post_cov = self._gain_terms()
        log_xi = self.log_xi(z)
        xi = np.exp(log_xi)
        log_w = self.log_weights + log_xi
        log_w -= log_w.max()
        w = np.exp(log_w)
        total = w.sum()
        if not np.isfinite(total) or total <= 0:
            raise ValueError("all component likelihoods vanished")
        w /= total
        innov = z - self.pred_meas
        means = self._means + np.einsum("nij,nj->ni", gain, innov)
        comps = tuple(
            GaussianComponent(w[i], means[i], post_cov[i]) for i in range(w.size)
        )
        return GaussianMixture(comps), xi


def update_kinematic(
    gm: GaussianMixture, z: np.ndarray, model: LinearGaussianModel
) -> tuple[GaussianMixture, np.ndarray]:
    """Kalman-update every component against the position measurement z.

    Returns the reweighted, normalized posterior mixture and the raw
    per-component likelihoods xi_i = N(z; H m_i, S_i).
    """
    return KalmanPrecompute(gm, model).posterior(z)


def truncate_mixture(
    gm: GaussianMixture,
    prune_threshold: float,
    merge_threshold: float,
    max_components: int,
) -> GaussianMixture:
    """Prune weak components, merge close ones, cap the count, renormalize.

    Merging pools every component within squared Mahalanobis distance
    (measured in the strongest candidate's covariance) of the strongest
    remaining component, preserving the pooled mean and covariance. All
    comparisons are strict, so zero thresholds leave the mixture untouched.
    """
    if prune_threshold < 0 or merge_threshold < 0:
        raise ValueError("thresholds must be nonnegative")
    if max_components < 1:
        raise ValueError("max_components must be at least 1")
    if len(gm) == 0:
        return gm

    w = gm.weights
    keep = w > prune_threshold
    if not keep.any():
        keep = w == w.max()
    w = w[keep]
    means = gm.means[keep]
    covs = gm.covariances[keep]

    merged: list[GaussianComponent] = []
    alive = np.ones(w.size, dtype=bool)
    while alive.any():
        j = int(np.argmax(np.where(alive, w, -np.inf)))
        live = np.flatnonzero(alive)
        diff = means[live] - means[j]
        dist = np.einsum("ni,ni->n", diff @ np.linalg.inv(covs[j]), diff)
        group = live[dist < merge_threshold]
        if j not in group:
            group = np.append(group, j)
        gw = w[group].sum()
        gmean = (w[group] @ means[group]) / gw
        dev = means[group] - gmean
        gcov = (
            np.einsum("n,nij->ij", w[group], covs[group])
            + np.einsum("n,ni,nj->ij", w[group], dev, dev)
        ) / gw
        merged.append(GaussianComponent(gw, gmean, gcov))
        alive[group] = False

    merged.sort(key=lambda c: -c.weight)
    merged = merged[:max_components]
    total = sum(c.weight for c in merged)
    return GaussianMixture(
        tuple(GaussianComponent(c.weight / total, c.mean, c.covariance) for c in merged)
    )
