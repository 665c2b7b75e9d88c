import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import stats

from wearsim.errors import (DegenerateLabels, EmptyTestSet, EmptyTrainingSet,
                            InsufficientData, InvalidInput, LengthMismatch,
                            UnknownActivity, ZeroVariance)
from wearsim.features import FEATURE_DIM, FeatureVector
from wearsim.kinematics import ImuTrace
from wearsim.mesh import SurfacePatch
from wearsim.sampling import PatchSet
from wearsim.utility import (EvalConfig, LabeledTraceSet, LogisticModel,
                             TraceEntry, UtilityMatrix, assign_folds,
                             evaluate_f1, rank_locations, rank_values,
                             spearman, train_classifier, utility_matrix)


def fv(values_or_key, activity="a", start=0.0):
    """FeatureVector with a single informative dimension."""
    values = np.zeros(FEATURE_DIM)
    if isinstance(values_or_key, (int, float)):
        values[0] = values_or_key
    else:
        values[:] = values_or_key
    return FeatureVector(values=values, window_start=start, activity=activity)


def separable_set(n_per=10):
    """Two classes on disjoint supports of feature 0."""
    rng = np.random.default_rng(0)
    out = []
    for i in range(n_per):
        out.append(fv(1.0 + 0.1 * rng.normal(), "a"))
        out.append(fv(-1.0 + 0.1 * rng.normal(), "b"))
    return out


# ---------------------------------------------------------------- classifier

def test_separable_training_accuracy():
    train = separable_set()
    model = train_classifier(train)
    pred = model.predict(train)
    assert pred == [f.activity for f in train]
    assert evaluate_f1(model, train).macro == 1.0


def test_training_deterministic():
    train = separable_set()
    m1 = train_classifier(train)
    m2 = train_classifier(train)
    assert np.array_equal(m1.weights, m2.weights)
    assert np.array_equal(m1.bias, m2.bias)
    assert m1.classes == m2.classes


def test_training_errors():
    with pytest.raises(EmptyTrainingSet):
        train_classifier([])
    with pytest.raises(DegenerateLabels):
        train_classifier([fv(1.0, "solo"), fv(2.0, "solo")])


def test_eval_config_validation():
    with pytest.raises(InvalidInput):
        EvalConfig(folds=1)
    with pytest.raises(InvalidInput):
        EvalConfig(learning_rate=0.0)
    with pytest.raises(InvalidInput):
        EvalConfig(l2=-1.0)


# ------------------------------------------------------------------------ F1

def test_f1_perfect_predictions():
    model = train_classifier(separable_set())
    test = [fv(2.0, "a"), fv(-2.0, "b"), fv(1.5, "a")]
    result = evaluate_f1(model, test)
    assert result.per_class == {"a": 1.0, "b": 1.0}
    assert result.macro == 1.0


def test_f1_collapsed_predictor_arithmetic():
    # model that always answers "a" on balanced data: F1(a)=2/3, F1(b)=0
    model = LogisticModel(classes=("a", "b"), mu=np.zeros(FEATURE_DIM),
                          sigma=np.ones(FEATURE_DIM),
                          weights=np.zeros((FEATURE_DIM, 2)),
                          bias=np.array([1.0, 0.0]))
    test = [fv(0.0, "a") for _ in range(8)] + [fv(0.0, "b") for _ in range(8)]
    result = evaluate_f1(model, test)
    assert result.per_class["a"] == pytest.approx(2.0 / 3.0)
    assert result.per_class["b"] == 0.0
    assert result.macro == pytest.approx(1.0 / 3.0)


def test_f1_chance_level_on_random_features():
    rng = np.random.default_rng(42)
    train = ([fv(rng.normal(size=FEATURE_DIM), "a") for _ in range(100)]
             + [fv(rng.normal(size=FEATURE_DIM), "b") for _ in range(100)])
    test = ([fv(rng.normal(size=FEATURE_DIM), "a") for _ in range(100)]
            + [fv(rng.normal(size=FEATURE_DIM), "b") for _ in range(100)])
    model = train_classifier(train)
    result = evaluate_f1(model, test)
    assert 0.3 < result.macro < 0.7


def test_f1_empty_test_set():
    model = train_classifier(separable_set())
    with pytest.raises(EmptyTestSet):
        evaluate_f1(model, [])


# --------------------------------------------------------------------- folds

def test_fold_assignment_round_robin():
    entries = [TraceEntry(trace=_tiny_trace(), activity=a, sequence_id=f"{a}{i}")
               for a in ("x", "y") for i in range(5)]
    folds = assign_folds(entries, 3)
    # per activity, sorted sequence ids go 0,1,2,0,1
    assert [folds[f"x{i}"] for i in range(5)] == [0, 1, 2, 0, 1]
    assert [folds[f"y{i}"] for i in range(5)] == [0, 1, 2, 0, 1]


def _tiny_trace(patch_id=0, n=150, rate=50.0, kind="still", seed=0):
    rng = np.random.default_rng(seed)
    t = np.arange(n) / rate
    accel = 0.01 * rng.normal(size=(n, 3))
    gyro = 0.01 * rng.normal(size=(n, 3))
    if kind == "shake":
        accel[:, 0] += 3.0 * np.sin(2 * np.pi * 4.0 * t)
        gyro[:, 2] += 2.0 * np.sin(2 * np.pi * 4.0 * t)
    return ImuTrace(patch_id=patch_id, rate=rate, times=t, accel=accel,
                    gyro=gyro)


def _patchset(ids):
    patches = tuple(SurfacePatch(id=i, vertices=(i, 100 + i, 200 + i))
                    for i in ids)
    return PatchSet(centers=tuple(ids), patches=patches, seed=0)


def _traceset(ids, seqs=6):
    """Activity 'move' shakes the sensor, 'rest' does not: separable."""
    entries = []
    for pid in ids:
        for s in range(seqs):
            kind = "shake" if s % 2 == 0 else "still"
            act = "move" if kind == "shake" else "rest"
            entries.append(TraceEntry(
                trace=_tiny_trace(pid, kind=kind, seed=100 * pid + s),
                activity=act, sequence_id=f"s{s}"))
    return LabeledTraceSet(entries=tuple(entries))


# ------------------------------------------------------------ utility matrix

def test_utility_matrix_shape_and_bounds():
    data = _traceset([0, 1])
    m = utility_matrix(data, _patchset([0, 1]), EvalConfig(window_s=1.0))
    assert m.f1.shape == (2, 2)
    assert m.locations == (0, 1)
    assert m.activities == ("move", "rest")
    assert m.f1.min() >= 0.0 and m.f1.max() <= 1.0


def test_utility_matrix_separable_fixture_high_f1():
    data = _traceset([0])
    m = utility_matrix(data, _patchset([0]), EvalConfig(window_s=1.0))
    assert m.f1.min() > 0.95


def test_utility_matrix_deterministic():
    data = _traceset([0, 1])
    cfg = EvalConfig(window_s=1.0)
    a = utility_matrix(data, _patchset([0, 1]), cfg)
    b = utility_matrix(data, _patchset([0, 1]), cfg)
    assert np.array_equal(a.f1, b.f1)


def test_utility_matrix_insufficient_data():
    entries = tuple(TraceEntry(trace=_tiny_trace(0, seed=s), activity="only",
                               sequence_id=f"s{s}") for s in range(4))
    with pytest.raises(DegenerateLabels):
        utility_matrix(LabeledTraceSet(entries=entries), _patchset([0]))

    # global activities fine, but patch 1 sees only one of them
    mixed = list(_traceset([0]).entries)
    mixed.append(TraceEntry(trace=_tiny_trace(1), activity="rest",
                            sequence_id="s9"))
    with pytest.raises(InsufficientData, match="patch 1"):
        utility_matrix(LabeledTraceSet(entries=tuple(mixed)),
                       _patchset([0, 1]))


def test_rank_invariance_under_positive_scaling():
    data = _traceset([0, 1, 2])
    cfg = EvalConfig(window_s=1.0)
    base = utility_matrix(data, _patchset([0, 1, 2]), cfg)
    scaled_entries = tuple(
        TraceEntry(trace=ImuTrace(patch_id=e.trace.patch_id, rate=e.trace.rate,
                                  times=e.trace.times, accel=7.0 * e.trace.accel,
                                  gyro=7.0 * e.trace.gyro),
                   activity=e.activity, sequence_id=e.sequence_id)
        for e in data.entries)
    scaled = utility_matrix(LabeledTraceSet(entries=scaled_entries),
                            _patchset([0, 1, 2]), cfg)
    assert np.allclose(base.f1, scaled.f1, atol=1e-12)


def test_labeled_trace_set_rejects_empty_trace():
    empty = ImuTrace(patch_id=0, rate=50.0, times=np.zeros(0),
                     accel=np.zeros((0, 3)), gyro=np.zeros((0, 3)))
    with pytest.raises(InvalidInput):
        LabeledTraceSet(entries=(TraceEntry(trace=empty, activity="a",
                                            sequence_id="s0"),))


def test_utility_matrix_validation():
    with pytest.raises(InvalidInput):
        UtilityMatrix(f1=np.array([[0.5, 1.5]]), locations=(0,),
                      activities=("a", "b"))
    with pytest.raises(InvalidInput):
        UtilityMatrix(f1=np.zeros((2, 2)), locations=(0, 0),
                      activities=("a", "b"))
    with pytest.raises(InvalidInput):
        UtilityMatrix(f1=np.zeros((2, 2)), locations=(0, 1),
                      activities=("a", "a"))
    with pytest.raises(InvalidInput):
        UtilityMatrix(f1=np.zeros((2, 3)), locations=(0, 1),
                      activities=("a", "b"))


# ------------------------------------------------------------------- ranking

def _matrix(col, activity="act"):
    return UtilityMatrix(f1=np.array(col)[:, None],
                         locations=tuple(range(len(col))),
                         activities=(activity,))


def test_rank_locations_descending():
    m = _matrix([0.9, 0.5, 0.7])
    assert rank_locations(m, "act") == [0, 2, 1]


def test_rank_locations_tie_lowest_id_first():
    m = _matrix([0.5, 0.9, 0.5])
    assert rank_locations(m, "act") == [1, 0, 2]


def test_rank_values_full_tie():
    m = _matrix([0.4, 0.4, 0.4])
    assert list(rank_values(m, "act")) == [2.0, 2.0, 2.0]


def test_rank_values_permutation_on_distinct():
    m = _matrix([0.1, 0.9, 0.5, 0.3])
    assert sorted(rank_values(m, "act")) == [1.0, 2.0, 3.0, 4.0]


def test_rank_unknown_activity():
    with pytest.raises(UnknownActivity):
        rank_locations(_matrix([0.5, 0.6, 0.7]), "nope")


# ------------------------------------------------------------------ spearman

def test_spearman_identical_and_reversed():
    assert spearman([1, 2, 3, 4], [1, 2, 3, 4]) == pytest.approx(1.0)
    assert spearman([1, 2, 3, 4], [4, 3, 2, 1]) == pytest.approx(-1.0)


def test_spearman_classic_example():
    assert spearman([1, 2, 3, 4], [1, 2, 4, 3]) == pytest.approx(0.8)


def test_spearman_matches_scipy():
    rng = np.random.default_rng(5)
    for trial in range(20):
        a = rng.normal(size=12)
        b = rng.normal(size=12)
        if trial % 3 == 0:  # inject ties
            a = np.round(a, 0)
            b = np.round(b, 0)
        if np.std(a) < 1e-9 or np.std(b) < 1e-9 or len(set(a)) < 2 or len(set(b)) < 2:
            continue
        expect = stats.spearmanr(a, b).statistic
        assert spearman(a, b) == pytest.approx(expect, abs=1e-12)


def test_spearman_symmetry_and_self():
    rng = np.random.default_rng(6)
    a = rng.normal(size=8)
    b = rng.normal(size=8)
    assert spearman(a, b) == pytest.approx(spearman(b, a), abs=1e-15)
    assert spearman(a, a) == pytest.approx(1.0)


def test_spearman_errors():
    with pytest.raises(LengthMismatch):
        spearman([1, 2, 3], [1, 2])
    with pytest.raises(InvalidInput):
        spearman([1, 2], [2, 1])
    with pytest.raises(ZeroVariance):
        spearman([1.0, 1.0, 1.0], [1, 2, 3])


@given(st.lists(st.floats(-100, 100), min_size=3, max_size=30))
def test_spearman_bounds(values):
    a = np.asarray(values)
    rng = np.random.default_rng(0)
    b = rng.permutation(len(a)).astype(float)
    if np.std(a) < 1e-9 or len(set(values)) < 2:
        return
    rho = spearman(a, b)
    assert -1.0 - 1e-12 <= rho <= 1.0 + 1e-12
