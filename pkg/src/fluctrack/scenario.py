"""Ground-truth and measurement generation for tracking experiments.

Truth kinematics are noise-free piecewise constant velocity (process noise
enters only the filter's model, as mismatch); per-target SNR follows the
ARG process from a configured starting level. Detection happens exactly
when the raw amplitude draw clears the threshold, which realizes the
thresholded Bernoulli/renormalized-density construction directly; clutter
is Poisson with uniform positions and zero-SNR amplitudes.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .amplitude import (
    SwerlingModel,
    sample_amplitude,
    sample_raw_amplitude,
    snr_db_from_linear,
    snr_linear_from_db,
)
from .hlmb import ClutterModel, MeasurementFrame
from .models import ArgParams, LinearGaussianModel, sample_arg_step


@dataclass(frozen=True)
class VelocityChange:
    """At scan k the target's velocity components are overwritten."""

    k: int
    vx: float | None = None
    vy: float | None = None


@dataclass(frozen=True)
class TargetSpec:
    """One target: lifetime, initial kinematics, initial SNR, maneuvers."""

    birth: int
    death: int  # exclusive: last live scan is death - 1
    state: tuple[float, float, float, float]
    snr_db: float
    velocity_changes: tuple[VelocityChange, ...] = ()

    def __post_init__(self):
        if self.death <= self.birth:
            raise ValueError("target must live for at least one scan")


@dataclass(frozen=True)
class ScenarioConfig:
    region: tuple[float, float, float, float] = (0.0, 12000.0, 0.0, 12000.0)
    duration: int = 100
    dt: float = 1.0
    sigma_v: float = 10.0
    sigma_eps: float = 20.0
    p_survival: float = 0.98
    clutter_mean: float = 20.0
    swerling_kind: int = 1
    threshold: float = 2.0
    arg: ArgParams = field(default_factory=lambda: ArgParams(1.0, 0.999, 0.01))
    # SNR trajectories may use their own dof (e.g. matching the Swerling kind)
    arg_truth_delta: float | None = None
    targets: tuple[TargetSpec, ...] = ()

    def __post_init__(self):
        if self.duration < 1:
            raise ValueError("duration must be at least one scan")
        xmin, xmax, ymin, ymax = self.region
        for t in self.targets:
            if not (xmin <= t.state[0] <= xmax and ymin <= t.state[2] <= ymax):
                raise ValueError("target born outside the surveillance region")

    @property
    def swerling(self) -> SwerlingModel:
        return SwerlingModel(self.swerling_kind, self.threshold)

    @property
    def truth_arg(self) -> ArgParams:
        if self.arg_truth_delta is None:
            return self.arg
        return ArgParams(self.arg_truth_delta, self.arg.rho, self.arg.c)

    def model(self) -> LinearGaussianModel:
        return LinearGaussianModel.constant_velocity(self.dt, self.sigma_v, self.sigma_eps)

    def clutter(self) -> ClutterModel:
        return ClutterModel(self.clutter_mean, self.region)


def default_scenario(swerling_kind: int = 1) -> ScenarioConfig:
    """Three crossing targets; two change heading right after the crossing."""
    return ScenarioConfig(
        swerling_kind=swerling_kind,
        targets=(
            TargetSpec(1, 101, (2000.0, 40.0, 1000.0, 100.0), 12.0,
                       (VelocityChange(50, vx=0.0),)),
            TargetSpec(1, 101, (4000.0, 0.0, 1000.0, 100.0), 25.0,
                       (VelocityChange(50, vx=40.0),)),
            TargetSpec(1, 101, (6000.0, -40.0, 1000.0, 100.0), 17.0),
        ),
    )


@dataclass(frozen=True)
class TruthRecord:
    k: int
    target: int
    state: np.ndarray  # [x, vx, y, vy]
    snr_linear: float
    snr_db: float


def generate_truth(config: ScenarioConfig, rng: np.random.Generator) -> list[TruthRecord]:
    """Noise-free trajectories plus sampled SNR paths, one record per live scan."""
    f = config.model().transition
    records: list[TruthRecord] = []
    for target_id, spec in enumerate(config.targets, start=1):
        state = np.array(spec.state, dtype=float)
        d = float(snr_linear_from_db(spec.snr_db))
        changes = {ch.k: ch for ch in spec.velocity_changes}
        for k in range(spec.birth, min(spec.death, config.duration + 1)):
            records.append(
                TruthRecord(k, target_id, state.copy(), d, float(snr_db_from_linear(d)))
            )
            change = changes.get(k)
            if change is not None:
                if change.vx is not None:
                    state[1] = change.vx
                if change.vy is not None:
                    state[3] = change.vy
            state = f @ state
            d = sample_arg_step(d, config.truth_arg, rng)
    records.sort(key=lambda r: (r.k, r.target))
    return records


def generate_measurements(
    truth: list[TruthRecord], config: ScenarioConfig, rng: np.random.Generator
) -> list[MeasurementFrame]:
    """Thresholded detections immersed in Poisson clutter, per scan.

    A target is detected exactly when its raw amplitude draw exceeds the
    threshold; the retained amplitude is then distributed per the
    renormalized likelihood. Frame order is shuffled so measurement index
    carries no information.
    """
    sw = config.swerling
    h = config.model().observation
    xmin, xmax, ymin, ymax = config.region
    by_scan: dict[int, list[TruthRecord]] = {}
    for rec in truth:
        by_scan.setdefault(rec.k, []).append(rec)

    frames = []
    for k in range(1, config.duration + 1):
        positions = []
        amplitudes = []
        for rec in by_scan.get(k, ()):
            a = float(sample_raw_amplitude(rec.snr_linear, sw, rng))
            if a > sw.threshold:
                z = h @ rec.state + rng.normal(scale=config.sigma_eps, size=2)
                positions.append(z)
                amplitudes.append(a)
        n_clutter = int(rng.poisson(config.clutter_mean))
        if n_clutter:
            cx = rng.uniform(xmin, xmax, size=n_clutter)
            cy = rng.uniform(ymin, ymax, size=n_clutter)
            ca = sample_amplitude(0.0, sw, rng, size=n_clutter)
            positions.extend(np.column_stack([cx, cy]))
            amplitudes.extend(ca)
        positions = np.array(positions).reshape(-1, 2)
        amplitudes = np.array(amplitudes)
        order = rng.permutation(len(positions))
        frames.append(MeasurementFrame(k, positions[order], amplitudes[order]))
    return frames
