"""k-best ranked assignment over an extended track-to-measurement cost matrix.

Each row (track) must take exactly one column: a shared measurement column,
its private misdetection column, or its private death column. Entries are
negative log hypothesis factors, so the k cheapest assignments are the k
most likely association hypotheses. Solved with Murty's partitioning around
a Jonker-Volgenant-style optimal assignment core
(scipy.optimize.linear_sum_assignment).
"""
from __future__ import annotations

import heapq
from dataclasses import dataclass
from typing import Hashable, Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment

MISS = "MISS"
DEATH = "DEATH"


@dataclass(frozen=True)
class CostMatrix:
    """Extended cost matrix: columns are measurements, then per-track miss/death.

    ``measurement`` is (n_tracks, n_measurements); miss and death are
    per-track vectors realized as diagonal blocks (off-diagonal entries are
    infinite, so a track can only take its own miss/death column).
    """

    labels: tuple[Hashable, ...]
    measurement: np.ndarray
    miss: np.ndarray
    death: np.ndarray

    def __post_init__(self):
        labels = tuple(self.labels)
        meas = np.atleast_2d(np.asarray(self.measurement, dtype=float))
        if len(labels) == 0:
            meas = meas.reshape(0, meas.shape[1] if meas.size else 0)
        miss = np.asarray(self.miss, dtype=float)
        death = np.asarray(self.death, dtype=float)
        n = len(labels)
        if meas.shape[0] != n or miss.shape != (n,) or death.shape != (n,):
            raise ValueError("cost blocks do not match the number of tracks")
        if np.isnan(meas).any() or np.isnan(miss).any() or np.isnan(death).any():
            raise ValueError("cost entries must not be NaN")
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "measurement", meas)
        object.__setattr__(self, "miss", miss)
        object.__setattr__(self, "death", death)

    @property
    def n_tracks(self) -> int:
        return len(self.labels)

    @property
    def n_measurements(self) -> int:
        return self.measurement.shape[1]

    def extended(self) -> np.ndarray:
        """The full (n, m + 2n) matrix with infinite off-diagonal miss/death."""
        n, m = self.n_tracks, self.n_measurements
        ext = np.full((n, m + 2 * n), np.inf)
        ext[:, :m] = self.measurement
        ext[np.arange(n), m + np.arange(n)] = self.miss
        ext[np.arange(n), m + n + np.arange(n)] = self.death
        return ext


@dataclass(frozen=True)
class Assignment:
    """One association hypothesis: per-track option plus its total cost."""

    mapping: dict[Hashable, object]
    total_cost: float

    def key(self) -> tuple:
        """Canonical hashable form (for set comparisons in tests)."""
        return tuple(sorted(((str(k), v) for k, v in self.mapping.items())))


def _solve(ext: np.ndarray) -> tuple[np.ndarray, float] | None:
    try:
        rows, cols = linear_sum_assignment(ext)
    except ValueError:
        return None
    cost = float(ext[rows, cols].sum())
    if not np.isfinite(cost):
        return None
    order = np.empty(ext.shape[0], dtype=int)
    order[rows] = cols
    return order, cost


def k_best_assignments(
    costs: CostMatrix, k: int, max_cost_gap: float | None = None
) -> list[Assignment]:
    """Up to k distinct assignments in nondecreasing total cost.

    Murty's method: pop the best unexplored subproblem, emit its optimal
    solution, and split it into child subproblems that each forbid one of
    the solution's arcs while fixing the previous ones. ``max_cost_gap``
    optionally stops once solutions cost more than best + gap (their
    hypothesis weights are negligible).
    """
    if k < 1:
        raise ValueError("k must be at least 1")
    n, m = costs.n_tracks, costs.n_measurements
    if n == 0:
        return [Assignment({}, 0.0)]

    ext = costs.extended()
    first = _solve(ext)
    if first is None:
        raise ValueError("assignment problem is infeasible (all options excluded)")

    def to_assignment(cols: np.ndarray, cost: float) -> Assignment:
        mapping: dict[Hashable, object] = {}
        for i, label in enumerate(costs.labels):
            col = int(cols[i])
            if col < m:
                mapping[label] = col
            elif col < m + n:
                mapping[label] = MISS
            else:
                mapping[label] = DEATH
        return Assignment(mapping, cost)

    best_cost = first[1]
    counter = 0
    heap: list[tuple[float, int, np.ndarray, np.ndarray]] = []
    heapq.heappush(heap, (first[1], counter, ext, first[0]))
    out: list[Assignment] = []

    while heap and len(out) < k:
        cost, _, problem, cols = heapq.heappop(heap)
        if max_cost_gap is not None and cost - best_cost > max_cost_gap:
            break
        out.append(to_assignment(cols, cost))
        # Partition: child p forbids arc p of this solution and pins arcs < p.
        work = problem
        for i in range(n):
            child = work.copy()
            child[i, cols[i]] = np.inf
            solved = _solve(child)
            if solved is not None:
                counter += 1
                heapq.heappush(heap, (solved[1], counter, child, solved[0]))
            if i < n - 1:
                row_fix = np.full(work.shape[1], np.inf)
                row_fix[cols[i]] = work[i, cols[i]]
                work = work.copy()
                work[i] = row_fix
    return out
