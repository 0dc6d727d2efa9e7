"""Domain types for labeled multi-Bernoulli densities over random finite sets.

A labeled multi-Bernoulli (LMB) density is a collection of independent
Bernoulli tracks, each carrying a unique label, an existence probability,
a Gaussian-mixture kinematic density and (optionally) an SNR density.
All types here are immutable values; filters build new instances rather
than mutating.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

# Existence probabilities are clamped away from {0, 1} before evaluating the
# subset-weight product form, which divides by (1 - r).
EXISTENCE_CLAMP = 1e-9

# MAP-like track extraction rule: report tracks with existence above this.
EXTRACTION_THRESHOLD = 0.5

_LABEL_RE = re.compile(r"^t(-?\d+)\.(\d+)$")


@dataclass(frozen=True, order=True)
class Label:
    """Unique, invariant track identity: birth scan plus ordinal within it."""

    birth_time: int
    birth_index: int

    def __str__(self) -> str:
        return f"t{self.birth_time}.{self.birth_index}"

    @classmethod
    def parse(cls, text: str) -> "Label":
        m = _LABEL_RE.match(text)
        if m is None:
            raise ValueError(f"not a track label: {text!r}")
        return cls(int(m.group(1)), int(m.group(2)))


@dataclass(frozen=True)
class GaussianComponent:
    """One weighted Gaussian over the kinematic state [p1, v1, p2, v2]."""

    weight: float
    mean: np.ndarray
    covariance: np.ndarray

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=float)
        cov = np.asarray(self.covariance, dtype=float)
        if mean.ndim != 1 or cov.shape != (mean.size, mean.size):
            raise ValueError("mean must be a vector and covariance a matching square matrix")
        if self.weight < 0:
            raise ValueError("component weight must be nonnegative")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "covariance", cov)

    def validate(self, rtol: float = 1e-9) -> None:
        """Check symmetry and positive definiteness (test support)."""
        scale = max(np.abs(self.covariance).max(), 1.0)
        if np.abs(self.covariance - self.covariance.T).max() > rtol * scale:
            raise ValueError("covariance not symmetric")
        if np.linalg.eigvalsh(self.covariance).min() <= 0:
            raise ValueError("covariance not positive definite")


@dataclass(frozen=True)
class GaussianMixture:
    """Weighted sum of Gaussian components; normalized when used as a density."""

    components: tuple[GaussianComponent, ...]

    def __post_init__(self):
        object.__setattr__(self, "components", tuple(self.components))

    def __len__(self) -> int:
        return len(self.components)

    @property
    def weights(self) -> np.ndarray:
        return np.array([c.weight for c in self.components])

    @property
    def means(self) -> np.ndarray:
        return np.array([c.mean for c in self.components])

    @property
    def covariances(self) -> np.ndarray:
        return np.array([c.covariance for c in self.components])

    def mean(self) -> np.ndarray:
        """Mixture mean (weights assumed normalized)."""
        if not self.components:
            raise ValueError("empty mixture has no mean")
        return np.einsum("i,ij->j", self.weights, self.means)

    def normalized(self) -> "GaussianMixture":
        total = float(sum(c.weight for c in self.components))
        if total <= 0:
            raise ValueError("cannot normalize mixture with zero total weight")
        return GaussianMixture(
            tuple(GaussianComponent(c.weight / total, c.mean, c.covariance) for c in self.components)
        )

    def scaled(self, factor: float) -> "GaussianMixture":
        return GaussianMixture(
            tuple(GaussianComponent(c.weight * factor, c.mean, c.covariance) for c in self.components)
        )

    def validate_normalized(self, tol: float = 1e-9) -> None:
        if abs(float(self.weights.sum()) - 1.0) > tol:
            raise ValueError("mixture weights do not sum to 1")


@dataclass(frozen=True)
class GammaDensity:
    """Gamma density over linear SNR with shape/rate parameterization."""

    shape: float
    rate: float

    def __post_init__(self):
        if not (self.shape > 0 and self.rate > 0):
            raise ValueError(f"gamma parameters must be positive, got ({self.shape}, {self.rate})")

    @property
    def mean(self) -> float:
        return self.shape / self.rate

    @property
    def variance(self) -> float:
        return self.shape / self.rate**2

    def logpdf(self, d) -> np.ndarray:
        d = np.asarray(d, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            out = (
                self.shape * math.log(self.rate)
                + (self.shape - 1.0) * np.log(d)
                - self.rate * d
                - math.lgamma(self.shape)
            )
        return np.where(d > 0, out, -np.inf)

    def pdf(self, d) -> np.ndarray:
        return np.exp(self.logpdf(d))


@dataclass(frozen=True)
class SnrParticleSet:
    """Weighted particles over linear SNR."""

    values: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        weights = np.asarray(self.weights, dtype=float)
        if values.shape != weights.shape or values.ndim != 1:
            raise ValueError("values and weights must be matching vectors")
        if values.size == 0:
            raise ValueError("particle set must be nonempty")
        if np.any(values <= 0):
            raise ValueError("particle SNR values must be positive")
        if np.any(weights < 0):
            raise ValueError("particle weights must be nonnegative")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "weights", weights)

    def __len__(self) -> int:
        return self.values.size

    def mean(self) -> float:
        return float(np.dot(self.weights, self.values))

    def validate_normalized(self, tol: float = 1e-9) -> None:
        if abs(float(self.weights.sum()) - 1.0) > tol:
            raise ValueError("particle weights do not sum to 1")


@dataclass(frozen=True)
class KnownSnr:
    """Fixed, externally supplied linear SNR (no estimation performed)."""

    value: float

    def __post_init__(self):
        if not self.value > 0:
            raise ValueError("known SNR must be positive")


# Per-track SNR density: a Gamma approximation, a particle set, a known
# constant, or absent (filters that ignore amplitude).
SnrDensity = GammaDensity | SnrParticleSet | KnownSnr | None


@dataclass(frozen=True)
class LabeledTrack:
    """One Bernoulli track of an LMB density.

    ``particle_gms`` is SMC-variant bookkeeping maintained by the filter
    engine: the kinematic mixture conditioned on each SNR particle. It is
    None for every other variant, in which case ``kinematic`` carries the
    single conditional mixture.
    """

    label: Label
    existence: float
    kinematic: GaussianMixture
    snr: SnrDensity = None
    particle_gms: tuple[GaussianMixture, ...] | None = None

    def __post_init__(self):
        if not (0.0 <= self.existence <= 1.0):
            raise ValueError(f"existence must lie in [0, 1], got {self.existence}")
        if self.particle_gms is not None:
            if not isinstance(self.snr, SnrParticleSet):
                raise ValueError("particle_gms requires a particle SNR density")
            if len(self.particle_gms) != len(self.snr):
                raise ValueError("one kinematic mixture required per SNR particle")
            object.__setattr__(self, "particle_gms", tuple(self.particle_gms))


@dataclass(frozen=True)
class LmbDensity:
    """A labeled multi-Bernoulli density: tracks with pairwise distinct labels."""

    tracks: tuple[LabeledTrack, ...]

    def __post_init__(self):
        object.__setattr__(self, "tracks", tuple(self.tracks))
        labels = [t.label for t in self.tracks]
        if len(set(labels)) != len(labels):
            raise ValueError("track labels must be pairwise distinct")

    def __len__(self) -> int:
        return len(self.tracks)

    def __iter__(self):
        return iter(self.tracks)

    @property
    def labels(self) -> tuple[Label, ...]:
        return tuple(t.label for t in self.tracks)

    @property
    def existences(self) -> np.ndarray:
        return np.array([t.existence for t in self.tracks])


def clamp_existence(r: float) -> float:
    """Keep existence probabilities inside (0, 1) for the product forms."""
    return min(max(r, EXISTENCE_CLAMP), 1.0 - EXISTENCE_CLAMP)


def lmb_subset_weight(lmb: LmbDensity, subset: Iterable[Label]) -> float:
    """Probability that exactly the tracks in ``subset`` exist.

    Computes prod_{i not in L} (1 - r_i) * prod_{l in L} r_l. Summed over
    all label subsets the weights form a probability distribution.
    """
    chosen = set(subset)
    known = set(lmb.labels)
    unknown = chosen - known
    if unknown:
        raise ValueError(f"labels not in density: {sorted(map(str, unknown))}")
    w = 1.0
    for track in lmb.tracks:
        r = clamp_existence(track.existence)
        w *= r if track.label in chosen else (1.0 - r)
    return w


def map_estimate(
    lmb: LmbDensity, threshold: float = EXTRACTION_THRESHOLD
) -> tuple[int, list[Label]]:
    """Extracted cardinality and labels: existence above threshold, best first."""
    picked = [t for t in lmb.tracks if t.existence > threshold]
    picked.sort(key=lambda t: (-t.existence, t.label))
    return len(picked), [t.label for t in picked]
