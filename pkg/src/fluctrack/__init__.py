"""Labeled multi-Bernoulli tracking with amplitude measurements."""

__version__ = "0.1.0"

from .rfs import (
    GammaDensity,
    GaussianComponent,
    GaussianMixture,
    KnownSnr,
    Label,
    LabeledTrack,
    LmbDensity,
    SnrParticleSet,
)

__all__ = [
    "GammaDensity",
    "GaussianComponent",
    "GaussianMixture",
    "KnownSnr",
    "Label",
    "LabeledTrack",
    "LmbDensity",
    "SnrParticleSet",
    "__version__",
]
