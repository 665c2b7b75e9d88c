"""Sensor placement selection over a utility matrix.

Objective: coverage(S) = mean over activities of max_{l in S} F1[l, t],
with coverage of the empty set fixed at 0. greedy_select adds the
location with the largest marginal gain until coverage >= tau; when no
positive gain remains short of tau (or a sensor cap bites) it reports
feasible = False carrying the best set found instead of looping.
exhaustive_select is the small-instance oracle: minimal cardinality,
lexicographically smallest id set on ties.

All ties break toward the lowest location id.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations
from typing import Optional

import numpy as np

from .errors import AllExcluded, InvalidInput, TooManyLocations, UnknownLocation
from .utility import UtilityMatrix

EXHAUSTIVE_LIMIT = 20


@dataclass(frozen=True)
class SelectionRequest:
    tau: float
    excluded: frozenset = frozenset()
    max_sensors: Optional[int] = None

    def __post_init__(self):
        object.__setattr__(self, "excluded", frozenset(self.excluded))
        if not (0.0 <= self.tau <= 1.0):
            raise InvalidInput(f"tau must be in [0, 1], got {self.tau}")
        if self.max_sensors is not None and self.max_sensors < 0:
            raise InvalidInput(f"max_sensors must be >= 0, got {self.max_sensors}")


@dataclass(frozen=True)
class SelectionResult:
    selected: tuple           # location ids in pick order
    coverage: float
    per_activity_best: dict   # activity -> (location id, f1)
    feasible: bool


def _row_index(matrix: UtilityMatrix) -> dict:
    return {loc: i for i, loc in enumerate(matrix.locations)}

def _check_known(matrix: UtilityMatrix, ids) -> None:
    known = set(matrix.locations)
    for loc in ids:
        if loc not in known:
            raise UnknownLocation(f"unknown location {loc}")


def coverage_score(matrix: UtilityMatrix, subset) -> float:
    """Mean over activities of the subset-max F1; empty subset scores 0."""
    subset = list(subset)
    _check_known(matrix, subset)
    if not subset:
        return 0.0
    rows = [_row_index(matrix)[loc] for loc in subset]
    return float(np.mean(matrix.f1[rows].max(axis=0)))


def best_single_location(matrix: UtilityMatrix, excluded=frozenset()) -> tuple:
    """(location id, mean F1) maximizing the row mean; ties to lowest id."""
    _check_known(matrix, excluded)
    excluded = set(excluded)
    best_loc, best_mean = None, -1.0
    for i, loc in enumerate(matrix.locations):
        if loc in excluded:
            continue
        m = float(np.mean(matrix.f1[i]))
        if m > best_mean or (m == best_mean and best_loc is not None and loc < best_loc):
            best_loc, best_mean = loc, m
    if best_loc is None:
        raise AllExcluded("every location is excluded")
    return best_loc, best_mean


def _result(matrix: UtilityMatrix, selected, feasible: bool,
            excluded) -> SelectionResult:
    """Build a result with coverage and per-activity bests recomputed fresh."""
    selected = tuple(selected)
    if set(selected) & set(excluded):
        raise InvalidInput("selection overlaps exclusions")
    per_best = {}
    if selected:
        rows = [_row_index(matrix)[loc] for loc in selected]
        sub = matrix.f1[rows]
        for t, act in enumerate(matrix.activities):
            k = int(np.argmax(sub[:, t]))  # ties: earliest pick
            per_best[act] = (selected[k], float(sub[k, t]))
    return SelectionResult(selected=selected,
                           coverage=coverage_score(matrix, selected),
                           per_activity_best=per_best, feasible=feasible)


def greedy_select(matrix: UtilityMatrix, request: SelectionRequest) -> SelectionResult:
    """Marginal-gain greedy toward coverage >= tau.

    Infeasibility (stalled gain or sensor cap or exhausted candidates)
    is data, not an error: the best-found set comes back with
    feasible = False.
    """
    _check_known(matrix, request.excluded)
    index = _row_index(matrix)
    candidates = sorted(loc for loc in matrix.locations
                        if loc not in request.excluded)
    selected = []
    cur = np.zeros(len(matrix.activities))
    cap = len(candidates) if request.max_sensors is None \
        else min(request.max_sensors, len(candidates))

    while True:
        coverage = coverage_score(matrix, selected)
        if coverage >= request.tau:
            return _result(matrix, selected, True, request.excluded)
        if len(selected) >= cap or not candidates:
            return _result(matrix, selected, False, request.excluded)
        rows = matrix.f1[[index[c] for c in candidates]]
        gains = np.maximum(rows, cur).sum(axis=1) - cur.sum()
        k = int(np.argmax(gains))  # candidates ascending, so ties pick lowest id
        if gains[k] <= 0.0:
            return _result(matrix, selected, False, request.excluded)
        chosen = candidates.pop(k)
        selected.append(chosen)
        cur = np.maximum(cur, matrix.f1[index[chosen]])


def exhaustive_select(matrix: UtilityMatrix, request: SelectionRequest) -> SelectionResult:
    """Minimal-cardinality oracle by brute force over id-sorted combinations.

    Tractable only on small instances; refuses more than EXHAUSTIVE_LIMIT
    candidate locations. Infeasible instances return the best-coverage
    subset encountered (first such on ties), feasible = False.
    """
    _check_known(matrix, request.excluded)
    candidates = sorted(loc for loc in matrix.locations
                        if loc not in request.excluded)
    if len(candidates) > EXHAUSTIVE_LIMIT:
        raise TooManyLocations(
            f"{len(candidates)} candidates exceed the exhaustive limit "
            f"of {EXHAUSTIVE_LIMIT}")
    cap = len(candidates) if request.max_sensors is None \
        else min(request.max_sensors, len(candidates))

    best_subset, best_cov = (), 0.0
    for k in range(0, cap + 1):
        for combo in combinations(candidates, k):
            cov = coverage_score(matrix, combo)
            if cov >= request.tau:
                return _result(matrix, combo, True, request.excluded)
            if cov > best_cov:
                best_subset, best_cov = combo, cov
    return _result(matrix, best_subset, False, request.excluded)
