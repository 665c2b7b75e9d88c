"""Per-location activity classification quality.

Each patch gets its own classifier: windows -> 54-dim features ->
z-scored multinomial logistic regression (full-batch GD, zero init,
fixed budget) -> one-vs-rest F1 per activity, averaged over grouped
k-fold splits keyed by sequence_id. Sequences never span train and
test. Everything here is deterministic bit-for-bit given its inputs,
which is why the model is hand-rolled instead of pulled from a library.

Fold assignment: per activity (sorted), its sequence ids (sorted) go
round-robin into k folds. A fold's F1 contributes to an activity's
average only when that activity appears in the fold's test windows.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import (
    DegenerateLabels,
    EmptyTestSet,
    EmptyTrainingSet,
    InsufficientData,
    InvalidInput,
    LengthMismatch,
    UnknownActivity,
    ZeroVariance,
)
from .features import (
    DEFAULT_OVERLAP,
    DEFAULT_SPECTRAL_CUTOFF_HZ,
    DEFAULT_WINDOW_S,
    FeatureVector,
    labeled_features,
)
from .kinematics import ImuTrace
from .sampling import PatchSet

_STD_EPS = 1e-12


@dataclass(frozen=True)
class TraceEntry:
    trace: ImuTrace
    activity: str
    sequence_id: str
    subject: Optional[str] = None


@dataclass(frozen=True)
class LabeledTraceSet:
    entries: tuple

    def __post_init__(self):
        object.__setattr__(self, "entries", tuple(self.entries))
        for e in self.entries:
            if len(e.trace) == 0:
                raise InvalidInput(f"empty trace in sequence {e.sequence_id}")

    def activities(self) -> list:
        return sorted({e.activity for e in self.entries})

    def for_patch(self, patch_id: int) -> list:
        return [e for e in self.entries if e.trace.patch_id == patch_id]


@dataclass(frozen=True)
class EvalConfig:
    window_s: float = DEFAULT_WINDOW_S
    overlap_frac: float = DEFAULT_OVERLAP
    spectral_cutoff_hz: float = DEFAULT_SPECTRAL_CUTOFF_HZ
    folds: int = 3
    l2: float = 1e-3
    iterations: int = 500
    learning_rate: float = 0.1

    def __post_init__(self):
        if self.folds < 2:
            raise InvalidInput(f"folds must be >= 2, got {self.folds}")
        if self.iterations < 1 or self.learning_rate <= 0 or self.l2 < 0:
            raise InvalidInput("bad optimizer settings")


@dataclass(frozen=True)
class LogisticModel:
    classes: tuple          # sorted label strings
    mu: np.ndarray          # (d,) training means
    sigma: np.ndarray       # (d,) training stds, degenerate dims pinned to 1
    weights: np.ndarray     # (d, C)
    bias: np.ndarray        # (C,)

    def _scores(self, X: np.ndarray) -> np.ndarray:
        return ((X - self.mu) / self.sigma) @ self.weights + self.bias

    def predict(self, features: list) -> list:
        X = np.stack([f.values for f in features])
        idx = np.argmax(self._scores(X), axis=1)  # ties: first (sorted) class
        return [self.classes[i] for i in idx]


@dataclass(frozen=True)
class F1Result:
    per_class: dict   # label -> F1
    macro: float


@dataclass(frozen=True)
class UtilityMatrix:
    """f1[l, t] for location l (patch id row order) and activity column t."""

    f1: np.ndarray
    locations: tuple  # patch ids
    activities: tuple # sorted labels

    def __post_init__(self):
        f1 = np.asarray(self.f1, dtype=np.float64)
        object.__setattr__(self, "f1", f1)
        object.__setattr__(self, "locations", tuple(self.locations))
        object.__setattr__(self, "activities", tuple(self.activities))
        if f1.shape != (len(self.locations), len(self.activities)):
            raise InvalidInput("f1 shape does not match labels")
        if len(set(self.locations)) != len(self.locations):
            raise InvalidInput("duplicate location ids")
        if len(set(self.activities)) != len(self.activities):
            raise InvalidInput("duplicate activity labels")
        if f1.size and (not np.isfinite(f1).all() or f1.min() < 0 or f1.max() > 1):
            raise InvalidInput("f1 entries must lie in [0, 1]")

    def column(self, activity: str) -> np.ndarray:
        if activity not in self.activities:
            raise UnknownActivity(f"unknown activity {activity!r}")
        return self.f1[:, self.activities.index(activity)]


def train_classifier(train: list, cfg: EvalConfig = EvalConfig()) -> LogisticModel:
    """Deterministic softmax regression on z-scored features."""
    if not train:
        raise EmptyTrainingSet("no training features")
    classes = tuple(sorted({f.activity for f in train}))
    if len(classes) < 2:
        raise DegenerateLabels(f"need >= 2 classes, got {classes}")
    X = np.stack([f.values for f in train])
    mu = X.mean(axis=0)
    sigma = X.std(axis=0)
    sigma = np.where(sigma < _STD_EPS, 1.0, sigma)
    Xs = (X - mu) / sigma

    n, d = Xs.shape
    index = {c: i for i, c in enumerate(classes)}
    Y = np.zeros((n, len(classes)))
    Y[np.arange(n), [index[f.activity] for f in train]] = 1.0

    W = np.zeros((d, len(classes)))
    b = np.zeros(len(classes))
    for _ in range(cfg.iterations):
        Z = Xs @ W + b
        Z -= Z.max(axis=1, keepdims=True)
        P = np.exp(Z)
        P /= P.sum(axis=1, keepdims=True)
        G = (P - Y) / n
        W -= cfg.learning_rate * (Xs.T @ G + cfg.l2 * W)  # bias excluded from L2
        b -= cfg.learning_rate * G.sum(axis=0)
    return LogisticModel(classes=classes, mu=mu, sigma=sigma, weights=W, bias=b)


def evaluate_f1(model: LogisticModel, test: list) -> F1Result:
    """One-vs-rest F1 per class (0 when P + R = 0) and their unweighted mean."""
    if not test:
        raise EmptyTestSet("no test features")
    truth = [f.activity for f in test]
    pred = model.predict(test)
    classes = sorted(set(model.classes) | set(truth))
    per_class = {}
    for c in classes:
        tp = sum(1 for t, p in zip(truth, pred) if t == c and p == c)
        fp = sum(1 for t, p in zip(truth, pred) if t != c and p == c)
        fn = sum(1 for t, p in zip(truth, pred) if t == c and p != c)
        precision = tp / (tp + fp) if tp + fp else 0.0
        recall = tp / (tp + fn) if tp + fn else 0.0
        per_class[c] = (2 * precision * recall / (precision + recall)
                        if precision + recall else 0.0)
    return F1Result(per_class=per_class,
                    macro=float(np.mean(list(per_class.values()))))


def assign_folds(entries, k: int) -> dict:
    """sequence_id -> fold, round-robin within each sorted activity."""
    seq_act = {}
    for e in entries:
        seq_act.setdefault(e.sequence_id, e.activity)
    folds = {}
    for act in sorted(set(seq_act.values())):
        for i, seq in enumerate(sorted(s for s, a in seq_act.items() if a == act)):
            folds[seq] = i % k
    return folds


def _eval_patch(args) -> list:
    """Worker: per-activity fold-averaged F1 for one patch (ordered by activities)."""
    patch_id, entries, folds, activities, cfg = args
    tagged = []  # (fold, FeatureVector)
    for e in entries:
        fvs = labeled_features(e.trace, e.activity, cfg.window_s,
                               cfg.overlap_frac, cfg.spectral_cutoff_hz)
        tagged.extend((folds[e.sequence_id], fv) for fv in fvs)
    if not tagged:
        raise InsufficientData(f"patch {patch_id}: traces too short to window")

    sums = {a: 0.0 for a in activities}
    counts = {a: 0 for a in activities}
    for f in range(cfg.folds):
        test = [fv for fold, fv in tagged if fold == f]
        train = [fv for fold, fv in tagged if fold != f]
        if not test:
            continue
        try:
            model = train_classifier(train, cfg)
        except (DegenerateLabels, EmptyTrainingSet) as exc:
            raise InsufficientData(f"patch {patch_id}: fold {f}: {exc}") from exc
        result = evaluate_f1(model, test)
        present = {fv.activity for fv in test}
        for a in present:
            sums[a] += result.per_class.get(a, 0.0)
            counts[a] += 1

    row = []
    for a in activities:
        if counts[a] == 0:
            raise InsufficientData(f"patch {patch_id}: activity {a!r} never tested")
        row.append(sums[a] / counts[a])
    return row


def utility_matrix(data: LabeledTraceSet, patches: PatchSet,
                   cfg: EvalConfig = EvalConfig(), jobs: int = 1) -> UtilityMatrix:
    """L x T per-location, per-activity F1 matrix.

    Rows follow patch order in `patches`, columns are sorted activities.
    Patch jobs are independent; results are always reduced in row order,
    so jobs > 1 changes wall time only.
    """
    activities = data.activities()
    if len(activities) < 2:
        raise DegenerateLabels(f"need >= 2 activities, got {activities}")
    folds = assign_folds(data.entries, cfg.folds)

    tasks = []
    for patch in patches.patches:
        entries = data.for_patch(patch.id)
        acts = {e.activity for e in entries}
        if len(acts) < 2:
            raise InsufficientData(
                f"patch {patch.id}: needs >= 2 activities, has {sorted(acts)}")
        tasks.append((patch.id, entries, folds, activities, cfg))

    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_eval_patch, tasks))
    else:
        rows = [_eval_patch(t) for t in tasks]
    return UtilityMatrix(f1=np.array(rows),
                         locations=tuple(p.id for p in patches.patches),
                         activities=tuple(activities))


def _average_ranks(x: np.ndarray) -> np.ndarray:
    """Ranks 1..n with ties sharing the mean of their positions."""
    x = np.asarray(x, dtype=np.float64)
    order = np.argsort(x, kind="stable")
    ranks = np.empty(x.shape[0])
    i = 0
    xs = x[order]
    while i < x.shape[0]:
        j = i
        while j + 1 < x.shape[0] and xs[j + 1] == xs[i]:
            j += 1
        ranks[order[i:j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


def rank_locations(matrix: UtilityMatrix, activity: str) -> list:
    """Location ids by descending F1; ties listed lowest id first."""
    col = matrix.column(activity)
    ids = np.array(matrix.locations)
    order = np.lexsort((ids, -col))
    return [int(ids[i]) for i in order]


def rank_values(matrix: UtilityMatrix, activity: str) -> np.ndarray:
    """Average ranks aligned to matrix.locations, 1 = best F1."""
    return _average_ranks(-matrix.column(activity))


def spearman(a, b) -> float:
    """Tie-aware rank correlation: Pearson on average ranks."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1:
        raise LengthMismatch(f"shape mismatch: {a.shape} vs {b.shape}")
    if a.shape[0] < 3:
        raise InvalidInput(f"need >= 3 values, got {a.shape[0]}")
    ra = _average_ranks(a)
    rb = _average_ranks(b)
    sa, sb = ra.std(), rb.std()
    if sa < _STD_EPS or sb < _STD_EPS:
        raise ZeroVariance("rank variance is zero on one side")
    cov = float(np.mean((ra - ra.mean()) * (rb - rb.mean())))
    return cov / float(sa * sb)
