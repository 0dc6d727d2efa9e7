"""Hybrid labeled multi-Bernoulli filter engine.

One filter cycle: predict surviving tracks and append pending births, build
the association cost matrix, extract the k best association hypotheses by
ranked assignment, form the hypothesis-weighted posterior (kinematics mixed
across hypotheses, SNR taken from the max-weight hypothesis), truncate,
extract state estimates, and spawn births from poorly explained
measurements for the next cycle.

Five variants share the cycle and differ only in how the measurement
factor eta(track, z) treats amplitude:

  GmLmb      fixed detection probability, amplitude ignored
  GmLmbK     detection and amplitude factors at an externally known SNR
  GmLmbM     fixed detection probability, amplitude ratio marginalized
             over an SNR interval
  GmSmcHlmb  particle SNR density; eta sums detection, amplitude and
             kinematic factors over particles (each particle carries its
             own conditional mixture)
  GmGHlmb    Gamma SNR density; eta plugs in the predicted-mean SNR, the
             measurement update refits a Gamma to a Metropolis chain

Tracks with no gated measurement interact with no other track, so their
miss-versus-death Bernoulli factor is marginalized in closed form instead
of enlarging the assignment problem; this is algebraically exact.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np
from scipy.special import logsumexp

from . import snr_gamma, snr_smc
from .amplitude import (
    MarginalizedAmplitudeRatio,
    SwerlingModel,
    detection_probability,
    log_amplitude_likelihood,
    log_clutter_amplitude_pdf,
    snr_db_from_linear,
    snr_linear_from_db,
)
from .assignment import DEATH, MISS, Assignment, CostMatrix, k_best_assignments
from .gm import KalmanPrecompute, truncate_mixture
from .models import ArgParams, LinearGaussianModel, predict_kinematic
from .rfs import (
    EXTRACTION_THRESHOLD,
    GammaDensity,
    GaussianComponent,
    GaussianMixture,
    KnownSnr,
    Label,
    LabeledTrack,
    LmbDensity,
    SnrParticleSet,
    clamp_existence,
)

_LOG_EPS = -745.0  # below exp underflow


# ---------------------------------------------------------------------------
# configuration types
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ClutterModel:
    """Poisson clutter: mean count over an axis-aligned rectangular region."""

    mean_count: float
    region: tuple[float, float, float, float]  # xmin, xmax, ymin, ymax

    def __post_init__(self):
        if self.mean_count <= 0:
            raise ValueError("clutter mean count must be positive")
        xmin, xmax, ymin, ymax = self.region
        if not (xmax > xmin and ymax > ymin):
            raise ValueError("clutter region is degenerate")

    @property
    def area(self) -> float:
        xmin, xmax, ymin, ymax = self.region
        return (xmax - xmin) * (ymax - ymin)

    @property
    def intensity(self) -> float:
        """Spatial intensity of the clutter process (uniform over the region)."""
        return self.mean_count / self.area

    @property
    def log_intensity(self) -> float:
        return math.log(self.intensity)


@dataclass(frozen=True)
class MeasurementFrame:
    """One scan: positions (M, 2) and matching amplitudes (M,), if measured."""

    k: int
    positions: np.ndarray
    amplitudes: np.ndarray | None = None

    def __post_init__(self):
        pos = np.asarray(self.positions, dtype=float).reshape(-1, 2)
        object.__setattr__(self, "positions", pos)
        if self.amplitudes is not None:
            amp = np.asarray(self.amplitudes, dtype=float)
            if amp.shape != (pos.shape[0],):
                raise ValueError("one amplitude required per position measurement")
            object.__setattr__(self, "amplitudes", amp)

    def __len__(self) -> int:
        return self.positions.shape[0]


@dataclass(frozen=True)
class GmLmb:
    """Position-only LMB; amplitude column is ignored."""

    fixed_pd: float = 0.95


@dataclass(frozen=True)
class GmLmbK:
    """Amplitude likelihood evaluated at externally known SNRs (dB).

    Birth tracks adopt whichever configured SNR best explains their first
    amplitude; no SNR estimation is performed.
    """

    known_snr_db: tuple[float, ...]
    fixed_pd: float = 0.95

    def __post_init__(self):
        if len(self.known_snr_db) == 0:
            raise ValueError("at least one known SNR is required")
        object.__setattr__(self, "known_snr_db", tuple(float(v) for v in self.known_snr_db))


@dataclass(frozen=True)
class GmLmbM:
    """Amplitude ratio marginalized uniformly (dB) over an SNR interval."""

    snr_interval_db: tuple[float, float] = (10.0, 40.0)
    fixed_pd: float = 0.95
    quadrature_step_db: float = 0.1


@dataclass(frozen=True)
class GmSmcHlmb:
    """Hybrid filter with a particle SNR density per track.

    The default resampling policy is the plain bootstrap: multinomial
    redraw after every amplitude update (ess_fraction 1.0). Systematic
    ESS-triggered resampling is available but carries visibly less Monte
    Carlo noise than the filter this variant reproduces.
    """

    birth_interval_db: tuple[float, float] = (10.0, 40.0)
    birth_step_db: float = 1.0
    ess_fraction: float = 1.0
    systematic: bool = False
    fixed_pd: float = 0.95  # used only when amplitude is disabled


@dataclass(frozen=True)
class GmGHlmb:
    """Hybrid filter with a Gamma SNR density per track.

    The Metropolis proposal deviation is scaled up to the predicted
    standard deviation when the latter is larger: a fixed step cannot
    traverse wide posteriors within the sample budget and the resulting
    variance underestimate locks the recursion. The measurement update
    conditions on the detection event (the P_D(d) factor of the joint
    update) and on SNR lying above the assumed possible-SNR interval,
    which mirrors the structural support floor of the particle variant
    and removes an absorbing state at zero SNR.
    """

    mh_samples: int = 1000
    proposal_std: float = 4.0
    burn_in_fraction: float = 0.1
    birth_interval_db: tuple[float, float] = (10.0, 40.0)
    birth_step_db: float = 1.0
    snr_floor_db: float = 10.0
    fixed_pd: float = 0.95  # used only when amplitude is disabled


FilterVariant = GmLmb | GmLmbK | GmLmbM | GmSmcHlmb | GmGHlmb


@dataclass(frozen=True)
class BirthConfig:
    """Measurement-driven birth: existence budget and density shape."""

    r_max: float = 0.04
    r_total: float = 1.0
    position_std: float = 40.0
    velocity_std: float = 30.0
    n_components: int = 5
    min_existence: float = 1e-3


@dataclass(frozen=True)
class FilterParams:
    """Everything the cycle needs besides the variant itself."""

    model: LinearGaussianModel
    clutter: ClutterModel
    arg: ArgParams
    swerling: SwerlingModel | None = None
    p_survival: float = 0.98
    k_best: int = 100
    # hypotheses costing more than best + gap carry weight < e^-gap; dropped
    cost_gap: float | None = 30.0
    gate_mahalanobis_sq: float | None = 25.0
    prune_threshold: float = 1e-5
    merge_threshold: float = 4.0
    max_components: int = 100
    track_prune: float = 1e-3
    birth: BirthConfig = field(default_factory=BirthConfig)


@dataclass(frozen=True)
class TrackEstimate:
    k: int
    label: Label
    state: np.ndarray
    snr_db: float
    existence: float


@dataclass
class StepResult:
    posterior: LmbDensity
    estimates: list[TrackEstimate]
    measurement_mass: np.ndarray
    n_hypotheses: int


# ---------------------------------------------------------------------------
# prediction
# ---------------------------------------------------------------------------


def _predict_snr(snr, arg: ArgParams, rng: np.random.Generator):
    if isinstance(snr, GammaDensity):
        return snr_gamma.predict_gamma(snr, arg)
    if isinstance(snr, SnrParticleSet):
        return snr_smc.predict_particles(snr, arg, rng)
    return snr  # KnownSnr and None are time-invariant


def predict(
    tracks: LmbDensity,
    births: LmbDensity,
    params: FilterParams,
    rng: np.random.Generator,
) -> LmbDensity:
    """Survival-discount and propagate existing tracks, then append births."""
    collisions = set(tracks.labels) & set(births.labels)
    if collisions:
        raise ValueError(f"birth labels collide with existing tracks: {sorted(map(str, collisions))}")
    out = []
    for track in tracks:
        predicted_gms = None
        if track.particle_gms is not None:
            predicted_gms = tuple(
                predict_kinematic(g, params.model) for g in track.particle_gms
            )
        out.append(
            LabeledTrack(
                label=track.label,
                existence=min(track.existence * params.p_survival, 1.0),
                kinematic=predict_kinematic(track.kinematic, params.model),
                snr=_predict_snr(track.snr, params.arg, rng),
                particle_gms=predicted_gms,
            )
        )
    out.extend(births.tracks)
    return LmbDensity(tuple(out))


# ---------------------------------------------------------------------------
# per-track association factors
# ---------------------------------------------------------------------------


def _amplitude_active(variant: FilterVariant, params: FilterParams) -> bool:
    return params.swerling is not None and not isinstance(variant, GmLmb)


def _log1m(p: float) -> float:
    return math.log1p(-p) if p < 1.0 else _LOG_EPS


class _TrackWork:
    """Association factors and posterior builders for one predicted track."""

    def __init__(self, track, frame, variant, params, marg_ratio):
        self.track = track
        self.existence = clamp_existence(track.existence)
        self.smc = isinstance(variant, GmSmcHlmb) and isinstance(track.snr, SnrParticleSet)
        model = params.model
        swerling = params.swerling
        self.swerling = swerling
        amplitude_on = _amplitude_active(variant, params)

        # gating runs on the marginal mixture; per-particle statistics are
        # only materialized for tracks that actually face a measurement
        self.pre = KalmanPrecompute(track.kinematic, model)

        m = len(frame)
        gate = params.gate_mahalanobis_sq
        self.candidates: list[int] = []
        for j in range(m):
            if gate is None or self.pre.min_mahalanobis_sq(frame.positions[j]) < gate:
                self.candidates.append(j)

        log_phi = params.clutter.log_intensity
        self.log_eta: dict[int, float] = {}
        self.pres: list[KalmanPrecompute] | None = None

        if self.smc and amplitude_on:
            values = track.snr.values
            log_w = np.log(np.maximum(track.snr.weights, 1e-300))
            pd = detection_probability(values, swerling)
            log_pd = np.log(np.maximum(pd, 1e-300))
            with np.errstate(divide="ignore"):
                log_1mpd = np.log1p(-np.minimum(pd, 1.0 - 1e-16))
            self.log_eta_miss = float(logsumexp(log_w + log_1mpd))
            if self.candidates:
                self.pres = [KalmanPrecompute(g, model) for g in track.particle_gms]
                for j in self.candidates:
                    a = float(frame.amplitudes[j])
                    kin = np.array(
                        [p.log_likelihood(frame.positions[j]) for p in self.pres]
                    )
                    per = log_w + log_pd + log_amplitude_likelihood(a, values, swerling) + kin
                    self.log_eta[j] = (
                        float(logsumexp(per))
                        - log_clutter_amplitude_pdf(a, swerling)
                        - log_phi
                    )
            return

        # single-mixture variants (and amplitude-off SMC, which degenerates here)
        if not amplitude_on:
            pd = variant.fixed_pd
            det_extra = lambda a: math.log(pd)
            self.log_eta_miss = _log1m(pd)
        elif isinstance(variant, GmLmbK):
            known = track.snr.value if isinstance(track.snr, KnownSnr) else None
            if known is None:
                pd = variant.fixed_pd
                det_extra = lambda a: math.log(pd)
                self.log_eta_miss = _log1m(pd)
            else:
                pd = float(detection_probability(known, swerling))
                det_extra = lambda a: (
                    math.log(pd)
                    + log_amplitude_likelihood(a, known, swerling)
                    - log_clutter_amplitude_pdf(a, swerling)
                )
                self.log_eta_miss = _log1m(pd)
        elif isinstance(variant, GmLmbM):
            pd = variant.fixed_pd
            det_extra = lambda a: math.log(pd) + marg_ratio.log_ratio(a)
            self.log_eta_miss = _log1m(pd)
        elif isinstance(variant, GmGHlmb) and isinstance(track.snr, GammaDensity):
            d_hat = track.snr.mean
            pd = float(detection_probability(d_hat, swerling))
            det_extra = lambda a: (
                math.log(pd)
                + log_amplitude_likelihood(a, d_hat, swerling)
                - log_clutter_amplitude_pdf(a, swerling)
            )
            self.log_eta_miss = _log1m(pd)
        else:
            pd = variant.fixed_pd
            det_extra = lambda a: math.log(pd)
            self.log_eta_miss = _log1m(pd)

        for j in self.candidates:
            a = float(frame.amplitudes[j]) if frame.amplitudes is not None else None
            kin = self.pre.log_likelihood(frame.positions[j])
            self.log_eta[j] = kin + det_extra(a) - log_phi

    # -- costs ------------------------------------------------------------

    def cost_det(self, j: int) -> float:
        return -(math.log(self.existence) + self.log_eta[j])

    def cost_miss(self) -> float:
        return -(math.log(self.existence) + self.log_eta_miss)

    def cost_death(self) -> float:
        return -math.log(1.0 - self.existence)

    # -- posterior pieces ---------------------------------------------------

    def posterior_mixture(self, option_mass: dict, frame, params) -> GaussianMixture:
        """Hypothesis-mixed kinematic posterior (non-SMC path)."""
        comps: list[GaussianComponent] = []
        total = sum(option_mass.values())
        for opt, mass in option_mass.items():
            gm = (
                self.track.kinematic
                if opt is MISS
                else self.pre.posterior(frame.positions[opt])[0]
            )
            comps.extend(gm.scaled(mass / total).components)
        return truncate_mixture(
            GaussianMixture(tuple(comps)),
            params.prune_threshold,
            params.merge_threshold,
            params.max_components,
        )

    def posterior_mixture_smc(self, option_mass: dict, frame, params):
        """Per-particle hypothesis-mixed posteriors (SMC path).

        For each particle the option mixture is weighted by hypothesis mass
        times that option's amplitude-updated particle weight, so particles
        that explain a measurement well lean harder toward its updated
        mixture.
        """
        if self.pres is None:  # misdetection only: predicted mixtures pass through
            return list(self.track.particle_gms)
        n = len(self.pres)
        prior_w = np.maximum(self.track.snr.weights, 1e-300)
        opt_particle_w: list[tuple[object, float, np.ndarray, list]] = []
        for opt, mass in option_mass.items():
            if opt is MISS:
                u = prior_w / prior_w.sum()
                gms = list(self.track.particle_gms)
            else:
                u = snr_smc.update_particles(
                    self.track.snr, float(frame.amplitudes[opt]), self.swerling
                ).weights
                z = frame.positions[opt]
                gms = [p.posterior(z)[0] for p in self.pres]
            opt_particle_w.append((opt, mass, u, gms))

        mixed: list[GaussianMixture] = []
        for i in range(n):
            comps: list[GaussianComponent] = []
            weight_total = sum(mass * u[i] for _, mass, u, _ in opt_particle_w)
            for _, mass, u, gms in opt_particle_w:
                share = mass * u[i] / weight_total if weight_total > 0 else 0.0
                if share > 0:
                    comps.extend(gms[i].scaled(share).components)
            mixed.append(
                truncate_mixture(
                    GaussianMixture(tuple(comps)),
                    params.prune_threshold,
                    params.merge_threshold,
                    params.max_components,
                )
            )
        return mixed


# ---------------------------------------------------------------------------
# cost matrix and update
# ---------------------------------------------------------------------------


def _build_works(predicted, frame, variant, params):
    if _amplitude_active(variant, params):
        if frame.amplitudes is None:
            raise ValueError("variant uses amplitude but the frame carries none")
        tau = params.swerling.threshold
        if len(frame) and float(frame.amplitudes.min()) <= tau:
            raise ValueError("frame contains amplitudes at or below the detection threshold")
    marg = (
        MarginalizedAmplitudeRatio(params.swerling, variant.snr_interval_db, variant.quadrature_step_db)
        if isinstance(variant, GmLmbM) and params.swerling is not None
        else None
    )
    return [_TrackWork(t, frame, variant, params, marg) for t in predicted]


def build_cost_matrix(
    predicted: LmbDensity,
    frame: MeasurementFrame,
    variant: FilterVariant,
    params: FilterParams,
) -> CostMatrix:
    """Extended association cost matrix over all predicted tracks.

    Entry (track, z) is -log of existence times the measurement factor; the
    miss column carries existence times the misdetection factor and the
    death column the complementary existence mass. Ungated pairs are +inf.
    """
    works = _build_works(predicted, frame, variant, params)
    n, m = len(works), len(frame)
    meas = np.full((n, m), np.inf)
    miss = np.empty(n)
    death = np.empty(n)
    for i, w in enumerate(works):
        for j in w.candidates:
            meas[i, j] = w.cost_det(j)
        miss[i] = w.cost_miss()
        death[i] = w.cost_death()
    return CostMatrix(tuple(t.label for t in predicted), meas, miss, death)


def update(
    predicted: LmbDensity,
    frame: MeasurementFrame,
    variant: FilterVariant,
    params: FilterParams,
    rng: np.random.Generator,
) -> tuple[LmbDensity, np.ndarray, int]:
    """One measurement update.

    Returns the posterior density, the per-measurement association mass
    (probability the measurement was claimed by some track) and the number
    of association hypotheses evaluated.
    """
    works = _build_works(predicted, frame, variant, params)
    linked = [w for w in works if w.candidates]
    mass = np.zeros(len(frame))

    assignments: list[Assignment] = []
    weights = np.zeros(0)
    if linked:
        meas = np.full((len(linked), len(frame)), np.inf)
        miss = np.empty(len(linked))
        death = np.empty(len(linked))
        for i, w in enumerate(linked):
            for j in w.candidates:
                meas[i, j] = w.cost_det(j)
            miss[i] = w.cost_miss()
            death[i] = w.cost_death()
        costs = CostMatrix(tuple(w.track.label for w in linked), meas, miss, death)
        assignments = k_best_assignments(costs, params.k_best, params.cost_gap)
        raw = np.array([-a.total_cost for a in assignments])
        weights = np.exp(raw - logsumexp(raw))
        for a, wh in zip(assignments, weights):
            for opt in a.mapping.values():
                if isinstance(opt, int):
                    mass[opt] += wh

    best = assignments[0].mapping if assignments else {}
    posterior = []
    for w in works:
        if w.candidates:
            option_mass: dict = {}
            r_post = 0.0
            for a, wh in zip(assignments, weights):
                opt = a.mapping[w.track.label]
                if opt is DEATH:
                    continue
                r_post += wh
                key = MISS if opt is MISS else opt
                option_mass[key] = option_mass.get(key, 0.0) + wh
            best_opt = best[w.track.label]
        else:
            # no gated measurement: the miss/death Bernoulli factor is exact
            num = w.existence * math.exp(max(w.log_eta_miss, _LOG_EPS))
            r_post = num / (num + (1.0 - w.existence))
            option_mass = {MISS: 1.0}
            best_opt = MISS

        posterior.append(
            _posterior_track(w, option_mass, r_post, best_opt, frame, variant, params, rng)
        )
    return LmbDensity(tuple(posterior)), mass, len(assignments)


def _posterior_track(work, option_mass, r_post, best_opt, frame, variant, params, rng):
    track = work.track
    r_post = float(min(max(r_post, 0.0), 1.0))
    if not option_mass:  # every hypothesis killed the track
        return replace(track, existence=0.0)

    if work.smc:
        mixed = work.posterior_mixture_smc(option_mass, frame, params)
        snr, gms = _smc_posterior_snr(work, mixed, best_opt, frame, variant, params, rng)
        marginal = _particle_marginal(snr, gms, params)
        return LabeledTrack(
            label=track.label,
            existence=r_post,
            kinematic=marginal,
            snr=snr,
            particle_gms=tuple(gms),
        )

    kinematic = work.posterior_mixture(option_mass, frame, params)
    snr = _single_posterior_snr(track.snr, best_opt, frame, variant, params, rng)
    return LabeledTrack(label=track.label, existence=r_post, kinematic=kinematic, snr=snr)


def _smc_posterior_snr(work, mixed, best_opt, frame, variant, params, rng):
    """Particle SNR density of the max-weight hypothesis, resampled per policy.

    Misdetections keep the predicted particles untouched. After an
    amplitude update the particles are resampled when the effective sample
    size drops below the configured fraction (1.0 resamples every update).
    Resampling reindexes the per-particle mixtures along with the
    particles; mixtures are immutable values, so duplicated indices share
    structure (equivalent to a deep copy).
    """
    ps: SnrParticleSet = work.track.snr
    if not isinstance(best_opt, int):
        return ps, mixed
    ps = snr_smc.update_particles(ps, float(frame.amplitudes[best_opt]), params.swerling)
    n = len(ps)
    if snr_smc.effective_sample_size(ps.weights) < variant.ess_fraction * n:
        if variant.systematic:
            idx = snr_smc.systematic_resample_indices(ps.weights, rng)
        else:
            idx = rng.choice(n, size=n, p=ps.weights)
        ps = SnrParticleSet(ps.values[idx], np.full(n, 1.0 / n))
        mixed = [mixed[i] for i in idx]
    return ps, mixed


def _particle_marginal(ps: SnrParticleSet, gms, params) -> GaussianMixture:
    comps: list[GaussianComponent] = []
    for wi, gm in zip(ps.weights, gms):
        if wi > 0:
            comps.extend(gm.scaled(wi).components)
    return truncate_mixture(
        GaussianMixture(tuple(comps)),
        params.prune_threshold,
        params.merge_threshold,
        params.max_components,
    )


def _single_posterior_snr(snr, best_opt, frame, variant, params, rng):
    if not isinstance(best_opt, int):
        return snr  # misdetection keeps the predicted density
    if isinstance(snr, GammaDensity) and isinstance(variant, GmGHlmb):
        a = float(frame.amplitudes[best_opt])
        swerling = params.swerling
        floor = float(snr_linear_from_db(variant.snr_floor_db))
        # detection-conditioned likelihood P_D(d) p_tau(a | d), which reduces
        # to the raw (unthresholded) amplitude density; scalar math because
        # the chain evaluates it once per sample
        if swerling.kind == 1:
            log_a, half_a2 = math.log(a), 0.5 * a * a

            def log_likelihood(d):
                if d < floor:
                    return -math.inf
                x = 1.0 + d
                return log_a - math.log(x) - half_a2 / x
        else:
            log_num = math.log(4.5 * a**3)

            def log_likelihood(d):
                if d < floor:
                    return -math.inf
                x = 1.0 + d
                return log_num - 2.0 * math.log(x) - 1.5 * a * a / x

        proposal_std = max(variant.proposal_std, math.sqrt(snr.variance))
        chain = snr_gamma.mh_sample_snr_posterior(
            snr, a, swerling, variant.mh_samples, proposal_std, rng,
            log_likelihood=log_likelihood,
        )
        chain = chain[int(len(chain) * variant.burn_in_fraction) :]
        try:
            return snr_gamma.fit_gamma_to_samples(chain)
        except ValueError:
            return snr  # chain never moved; keep the predicted density
    return snr  # KnownSnr, None, or non-estimating variants


# ---------------------------------------------------------------------------
# measurement-driven birth
# ---------------------------------------------------------------------------


def _birth_mixture(z: np.ndarray, cfg: BirthConfig) -> GaussianMixture:
    cov = np.diag(
        [cfg.position_std**2, cfg.velocity_std**2, cfg.position_std**2, cfg.velocity_std**2]
    )
    offsets = [(0.0, 0.0), (1.0, 0.0), (-1.0, 0.0), (0.0, 1.0), (0.0, -1.0)]
    comps = []
    for i in range(cfg.n_components):
        dx, dy = offsets[i % len(offsets)]
        mean = np.array([z[0] + dx * cfg.position_std, 0.0, z[1] + dy * cfg.position_std, 0.0])
        comps.append(GaussianComponent(1.0 / cfg.n_components, mean, cov))
    return GaussianMixture(tuple(comps))


def _birth_snr(a: float | None, variant: FilterVariant, params: FilterParams):
    """Initial SNR density from the first amplitude, per variant."""
    if params.swerling is None or a is None or isinstance(variant, (GmLmb, GmLmbM)):
        return None
    if isinstance(variant, GmLmbK):
        candidates = snr_linear_from_db(np.array(variant.known_snr_db))
        lls = log_amplitude_likelihood(a, candidates, params.swerling)
        return KnownSnr(float(candidates[int(np.argmax(lls))]))
    low, high = variant.birth_interval_db
    n = int(round((high - low) / variant.birth_step_db)) + 1
    values = snr_linear_from_db(np.linspace(low, high, n))
    log_w = log_amplitude_likelihood(a, values, params.swerling)
    if isinstance(variant, GmSmcHlmb):
        w = np.exp(log_w - logsumexp(log_w))
        return SnrParticleSet(values, w)
    # the Gamma variant conditions its updates on the detection event, so
    # its birth fit carries the same P_D(d) tilt
    log_w = log_w + np.log(detection_probability(values, params.swerling))
    w = np.exp(log_w - logsumexp(log_w))
    mean = float(np.dot(w, values))
    var = float(np.dot(w, (values - mean) ** 2))
    if var <= 0:
        var = 1e-6 * max(mean, 1.0) ** 2
    return GammaDensity(shape=mean**2 / var, rate=mean / var)


def adaptive_birth(
    frame: MeasurementFrame,
    measurement_mass: np.ndarray,
    variant: FilterVariant,
    params: FilterParams,
    birth_time: int,
) -> LmbDensity:
    """Spawn one tentative track per poorly associated measurement.

    Existence splits a total budget across measurements proportionally to
    how unclaimed they are, capped at r_max. Births below min_existence
    are dropped.
    """
    cfg = params.birth
    free = np.clip(1.0 - np.asarray(measurement_mass, dtype=float), 0.0, 1.0)
    total_free = float(free.sum())
    tracks = []
    index = 0
    for j in range(len(frame)):
        if total_free <= 0.0:
            break
        r = min(cfg.r_max, cfg.r_total * free[j] / total_free)
        if r < cfg.min_existence:
            continue
        a = float(frame.amplitudes[j]) if frame.amplitudes is not None else None
        gm = _birth_mixture(frame.positions[j], cfg)
        snr = _birth_snr(a, variant, params)
        particle_gms = None
        if isinstance(snr, SnrParticleSet):
            particle_gms = tuple(gm for _ in range(len(snr)))
        tracks.append(
            LabeledTrack(
                label=Label(birth_time, index),
                existence=r,
                kinematic=gm,
                snr=snr,
                particle_gms=particle_gms,
            )
        )
        index += 1
    return LmbDensity(tuple(tracks))


# ---------------------------------------------------------------------------
# estimates and the full cycle
# ---------------------------------------------------------------------------


def snr_estimate_db(snr) -> float:
    """Point SNR estimate in dB; NaN when the track carries no estimate."""
    if isinstance(snr, GammaDensity):
        return float(snr_db_from_linear(snr_gamma.mmse_snr(snr)))
    if isinstance(snr, SnrParticleSet):
        return float(snr_db_from_linear(snr_smc.mmse_snr_particles(snr)))
    return float("nan")


def extract_estimates(posterior: LmbDensity, k: int) -> list[TrackEstimate]:
    out = []
    for track in posterior:
        if track.existence > EXTRACTION_THRESHOLD:
            out.append(
                TrackEstimate(
                    k=k,
                    label=track.label,
                    state=track.kinematic.mean(),
                    snr_db=snr_estimate_db(track.snr),
                    existence=track.existence,
                )
            )
    out.sort(key=lambda e: (-e.existence, e.label))
    return out


class HlmbFilter:
    """Stateful filter: feed frames in scan order via :meth:`step`."""

    def __init__(
        self,
        variant: FilterVariant,
        params: FilterParams,
        rng: np.random.Generator,
    ):
        self.variant = variant
        self.params = params
        self.rng = rng
        self.tracks = LmbDensity(())
        self.pending_births = LmbDensity(())

    def step(self, frame: MeasurementFrame) -> StepResult:
        predicted = predict(self.tracks, self.pending_births, self.params, self.rng)
        posterior, mass, n_hyp = update(predicted, frame, self.variant, self.params, self.rng)
        posterior = LmbDensity(
            tuple(t for t in posterior if t.existence >= self.params.track_prune)
        )
        estimates = extract_estimates(posterior, frame.k)
        self.pending_births = adaptive_birth(
            frame, mass, self.variant, self.params, birth_time=frame.k + 1
        )
        self.tracks = posterior
        return StepResult(posterior, estimates, mass, n_hyp)
