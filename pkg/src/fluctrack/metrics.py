"""Labeled OSPA distance, SNR RMSE, and Monte Carlo averaging.

The labeled OSPA between a truth set and an estimate set combines three
penalties under the optimal position pairing pi*:

  localization  sum of cut-off distances min(c, ||x - y||)^p over pairs
  labeling      phi^p per pair whose labels disagree
  cardinality   c^p per unpaired element

each divided by the larger cardinality, summed, and taken to the 1/p
power. The label penalty fires on MISMATCHED labels: a track that swaps
identities keeps paying it, which is what makes track switching visible
in the error curves.

Estimated track labels live in a different namespace than truth labels,
so scoring a run first builds a correspondence: each estimated label maps
to the truth label it was paired with most often over the whole run.
"""
from __future__ import annotations

from collections import Counter, defaultdict
from typing import Hashable, NamedTuple, Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment

LabeledPoint = tuple[Hashable, np.ndarray]


class OspaResult(NamedTuple):
    total: float
    localization: float
    labeling: float
    cardinality: float


def ospa_labeled(
    truth: Sequence[LabeledPoint],
    estimate: Sequence[LabeledPoint],
    c: float = 30.0,
    phi: float = 30.0,
    p: float = 1.0,
) -> OspaResult:
    """Labeled OSPA distance and its three components.

    Symmetric in its arguments; empty-versus-empty is zero and anything
    versus empty is pure cardinality error c.
    """
    if c <= 0 or phi <= 0 or p < 1:
        raise ValueError("require c > 0, phi > 0, p >= 1")
    n, m = len(truth), len(estimate)
    if n == 0 and m == 0:
        return OspaResult(0.0, 0.0, 0.0, 0.0)
    big = max(n, m)
    if n == 0 or m == 0:
        total = (big * c**p / big) ** (1.0 / p)
        return OspaResult(total, 0.0, 0.0, total)

    tx = np.array([np.asarray(pos, dtype=float) for _, pos in truth])
    ex = np.array([np.asarray(pos, dtype=float) for _, pos in estimate])
    dists = np.linalg.norm(tx[:, None, :] - ex[None, :, :], axis=2)
    cut = np.minimum(dists, c) ** p
    rows, cols = linear_sum_assignment(cut)

    loc_sum = float(cut[rows, cols].sum())
    lab_sum = 0.0
    for i, j in zip(rows, cols):
        if truth[i][0] != estimate[j][0]:
            lab_sum += phi**p
    card_sum = c**p * (big - min(n, m))

    def component(s):
        return (s / big) ** (1.0 / p)

    total = ((loc_sum + lab_sum + card_sum) / big) ** (1.0 / p)
    return OspaResult(total, component(loc_sum), component(lab_sum), component(card_sum))


def snr_rmse(truth_db: Sequence[float], estimate_db: Sequence[float]) -> float:
    """Root-mean-square error between matched SNR sequences, in dB."""
    truth_db = np.asarray(truth_db, dtype=float)
    estimate_db = np.asarray(estimate_db, dtype=float)
    if truth_db.shape != estimate_db.shape:
        raise ValueError("matched sequences must have equal length")
    if truth_db.size == 0:
        raise ValueError("no matched SNR pairs: the metric is undefined")
    return float(np.sqrt(np.mean((truth_db - estimate_db) ** 2)))


def majority_label_map(
    truth_frames: Sequence[Sequence[LabeledPoint]],
    estimate_frames: Sequence[Sequence[LabeledPoint]],
    c: float = 30.0,
) -> dict:
    """Estimate-label -> truth-label correspondence by per-run majority vote.

    At every scan the cut-off-optimal pairing is computed; each estimated
    label then maps to the truth label it was paired with most often
    across the run (ties resolved toward the smaller truth label).
    Estimated labels never paired with any truth map to None.
    """
    if len(truth_frames) != len(estimate_frames):
        raise ValueError("truth and estimate runs must cover the same scans")
    votes: dict = defaultdict(Counter)
    for truth, estimate in zip(truth_frames, estimate_frames):
        if not truth or not estimate:
            continue
        tx = np.array([np.asarray(pos, dtype=float) for _, pos in truth])
        ex = np.array([np.asarray(pos, dtype=float) for _, pos in estimate])
        dists = np.linalg.norm(tx[:, None, :] - ex[None, :, :], axis=2)
        rows, cols = linear_sum_assignment(np.minimum(dists, c))
        for i, j in zip(rows, cols):
            if dists[i, j] < c:
                votes[estimate[j][0]][truth[i][0]] += 1
    mapping = {}
    for est_label, counter in votes.items():
        best = max(counter.items(), key=lambda kv: (kv[1], str(kv[0])))
        candidates = [t for t, n in counter.items() if n == best[1]]
        mapping[est_label] = min(candidates, key=str)
    return mapping


def relabel(frames: Sequence[Sequence[LabeledPoint]], mapping: dict):
    """Apply a label correspondence; unmapped labels pass through unchanged."""
    return [
        [(mapping.get(lbl, lbl), pos) for lbl, pos in frame] for frame in frames
    ]


def average_over_runs(tables: Sequence[np.ndarray]) -> tuple[np.ndarray, np.ndarray]:
    """Per-time mean across runs plus the time-averaged summary row.

    Every run must supply a table of identical shape (time, metrics);
    NaN cells (e.g. scans without matched SNR pairs) are averaged over
    the runs that do have values.
    """
    if not tables:
        raise ValueError("no runs to average")
    arrays = [np.asarray(t, dtype=float) for t in tables]
    shape = arrays[0].shape
    if any(a.shape != shape for a in arrays):
        raise ValueError("ragged metric tables: all runs must cover the same scans")
    stacked = np.stack(arrays)
    with np.errstate(invalid="ignore"):
        per_time = np.nanmean(stacked, axis=0)
        summary = np.nanmean(per_time, axis=0)
    return per_time, summary
