import numpy as np
import pytest

from adlink.matchmodel import (
    Dataset,
    LogisticModel,
    auc_concordance,
    feature_importance,
    fpr_at_tpr,
    load_model,
    logistic_loss_and_grad,
    model_from_dict,
    model_to_dict,
    predict_proba,
    roc,
    save_model,
    tpr_at_fpr,
    train_forest,
    train_logistic,
    tree_seeds,
)

NAMES2 = ("f0", "f1")


def make_dataset(X, y, names=None):
    X = np.asarray(X, dtype=float)
    names = names or tuple(f"f{i}" for i in range(X.shape[1]))
    return Dataset(X=X, y=np.asarray(y), ids=[], feature_names=names,
                   schema_version="test/1")


def separable_dataset(n=200, seed=0):
    rng = np.random.default_rng(seed)
    X0 = rng.normal(loc=-2.0, size=(n // 2, 2))
    X1 = rng.normal(loc=+2.0, size=(n // 2, 2))
    X = np.vstack([X0, X1])
    y = np.array([0] * (n // 2) + [1] * (n // 2))
    return make_dataset(X, y, NAMES2)


def xor_dataset(n=400, seed=1):
    rng = np.random.default_rng(seed)
    X = rng.uniform(-1, 1, size=(n, 2))
    y = ((X[:, 0] > 0) ^ (X[:, 1] > 0)).astype(int)
    return make_dataset(X, y, NAMES2)


# --- dataset validation --------------------------------------------------------

def test_dataset_rejects_nonfinite():
    with pytest.raises(ValueError, match="non-finite"):
        make_dataset([[1.0, np.nan]], [1])


def test_dataset_rejects_mismatch():
    with pytest.raises(ValueError):
        make_dataset([[1.0, 2.0]], [1, 0])


# --- logistic -------------------------------------------------------------------

def test_logistic_separable_training_auc_one():
    ds = separable_dataset()
    model = train_logistic(ds, epochs=200)
    curve = roc(predict_proba(model, ds.X), ds.y)
    assert curve.auc == 1.0


def test_logistic_single_class_errors():
    ds = make_dataset([[0.0, 1.0], [1.0, 0.0]], [1, 1], NAMES2)
    with pytest.raises(ValueError, match="both classes"):
        train_logistic(ds)


def test_logistic_loss_history_non_increasing():
    ds = separable_dataset(seed=3)
    model = train_logistic(ds, epochs=100, lr=2.0)
    h = model.loss_history
    assert all(h[i + 1] <= h[i] + 1e-6 for i in range(len(h) - 1))


def test_untrained_zero_weights_score_half():
    model = LogisticModel(
        kind="logistic", feature_names=NAMES2, schema_version="test/1",
        weights=np.zeros(2), bias=0.0, means=np.zeros(2), scales=np.ones(2),
    )
    scores = predict_proba(model, np.array([[5.0, -3.0], [0.0, 0.0]]))
    assert np.allclose(scores, 0.5)


def test_shuffled_labels_heldout_auc_near_half():
    """Monte Carlo over 20 seeds: held-out AUC on random labels ~ 0.5."""
    aucs = []
    for seed in range(20):
        rng = np.random.default_rng(seed)
        X = rng.normal(size=(300, 2))
        y = rng.integers(0, 2, size=300)
        if y[:200].sum() in (0, 200) or y[200:].sum() in (0, 100):
            continue
        ds = make_dataset(X[:200], y[:200], NAMES2)
        model = train_logistic(ds, epochs=80)
        aucs.append(roc(predict_proba(model, X[200:]), y[200:]).auc)
    assert 0.4 <= float(np.mean(aucs)) <= 0.6


def test_logistic_gradient_matches_finite_differences():
    rng = np.random.default_rng(7)
    for _ in range(5):
        n, d = 40, 3
        X = rng.normal(size=(n, d))
        y = rng.integers(0, 2, size=n).astype(float)
        w = rng.normal(size=d)
        b = float(rng.normal())
        l2 = 0.1
        _, grad_w, grad_b = logistic_loss_and_grad(w, b, X, y, l2)
        h = 1e-5
        for k in range(d):
            wp, wm = w.copy(), w.copy()
            wp[k] += h
            wm[k] -= h
            lp, _, _ = logistic_loss_and_grad(wp, b, X, y, l2)
            lm, _, _ = logistic_loss_and_grad(wm, b, X, y, l2)
            fd = (lp - lm) / (2 * h)
            assert abs(fd - grad_w[k]) <= 1e-4 * max(1.0, abs(fd))
        lp, _, _ = logistic_loss_and_grad(w, b + h, X, y, l2)
        lm, _, _ = logistic_loss_and_grad(w, b - h, X, y, l2)
        fd_b = (lp - lm) / (2 * h)
        assert abs(fd_b - grad_b) <= 1e-4 * max(1.0, abs(fd_b))


# --- forest ----------------------------------------------------------------------

def test_forest_learns_xor():
    ds = xor_dataset()
    model = train_forest(ds, n_trees=50, max_depth=8, min_leaf=2, seed=0)
    preds = predict_proba(model, ds.X) >= 0.5
    accuracy = float(np.mean(preds == ds.y))
    assert accuracy >= 0.95


def test_forest_depth_zero_is_constant():
    ds = separable_dataset(seed=5)
    model = train_forest(ds, n_trees=1, max_depth=0, seed=2)
    scores = predict_proba(model, ds.X)
    assert len(np.unique(scores)) == 1
    # the constant is the bootstrap sample's positive fraction
    assert model.trees[0].keys() == {"p", "n"}
    assert scores[0] == model.trees[0]["p"]


def test_forest_duplicated_rows_probability_range():
    ds = separable_dataset(seed=6)
    X2 = np.vstack([ds.X, ds.X])
    y2 = np.concatenate([ds.y, ds.y])
    model = train_forest(make_dataset(X2, y2, NAMES2), n_trees=10, seed=1)
    scores = predict_proba(model, X2)
    assert np.all(scores >= 0.0) and np.all(scores <= 1.0)


def test_forest_single_class_errors():
    ds = make_dataset([[0.0, 1.0], [1.0, 0.0]], [0, 0], NAMES2)
    with pytest.raises(ValueError, match="both classes"):
        train_forest(ds)


def test_forest_deterministic_per_seed_and_thread_count():
    ds = xor_dataset(n=200, seed=2)
    m1 = train_forest(ds, n_trees=12, seed=9, threads=1)
    m2 = train_forest(ds, n_trees=12, seed=9, threads=4)
    m3 = train_forest(ds, n_trees=12, seed=10, threads=1)
    X = ds.X[:50]
    assert np.array_equal(predict_proba(m1, X), predict_proba(m2, X))
    assert not np.array_equal(predict_proba(m1, X), predict_proba(m3, X))


def test_tree_seed_sequence_stable():
    assert tree_seeds(7, 3) == tree_seeds(7, 5)[:3]
    assert tree_seeds(7, 3) != tree_seeds(8, 3)


def test_predict_schema_mismatch():
    ds = separable_dataset()
    model = train_forest(ds, n_trees=3, seed=0)
    with pytest.raises(ValueError, match="feature count"):
        predict_proba(model, np.zeros((2, 5)))


# --- roc / rates -------------------------------------------------------------------

def test_roc_perfect():
    curve = roc([0.9, 0.1], [1, 0])
    assert curve.auc == 1.0
    assert curve.fpr[0] == 0.0 and curve.tpr[0] == 0.0
    assert curve.fpr[-1] == 1.0 and curve.tpr[-1] == 1.0


def test_roc_all_ties_is_half():
    curve = roc([0.5, 0.5, 0.5, 0.5], [1, 0, 1, 0])
    assert curve.auc == 0.5


def test_roc_single_class_errors():
    with pytest.raises(ValueError):
        roc([0.5, 0.6], [1, 1])


def test_roc_monotone_endpoints_random():
    rng = np.random.default_rng(0)
    for _ in range(20):
        n = rng.integers(5, 60)
        scores = rng.choice([0.1, 0.3, 0.5, 0.9], size=n)
        labels = rng.integers(0, 2, size=n)
        if labels.sum() in (0, n):
            continue
        c = roc(scores, labels)
        assert np.all(np.diff(c.fpr) >= 0) and np.all(np.diff(c.tpr) >= 0)
        assert (c.fpr[0], c.tpr[0]) == (0.0, 0.0)
        assert (c.fpr[-1], c.tpr[-1]) == (1.0, 1.0)


def test_auc_equals_concordance_oracle():
    rng = np.random.default_rng(123)
    for _ in range(100):
        n = int(rng.integers(4, 200))
        # coarse scores force plenty of ties
        scores = rng.choice(np.linspace(0, 1, 7), size=n)
        labels = rng.integers(0, 2, size=n)
        if labels.sum() in (0, n):
            continue
        assert abs(roc(scores, labels).auc - auc_concordance(scores, labels)) < 1e-9


def test_tpr_at_fpr_perfect_and_diagonal():
    perfect = roc([0.9, 0.8, 0.2, 0.1], [1, 1, 0, 0])
    assert tpr_at_fpr(perfect, 0.01) == 1.0
    diagonal = roc([0.5, 0.5, 0.5, 0.5], [1, 0, 1, 0])
    for x in (0.0, 0.25, 0.5, 1.0):
        assert abs(tpr_at_fpr(diagonal, x) - x) < 1e-12


def test_tpr_at_fpr_hand_interpolation():
    from adlink.matchmodel import RocCurve
    curve = RocCurve(
        fpr=np.array([0.0, 0.1, 1.0]),
        tpr=np.array([0.0, 0.8, 1.0]),
        thresholds=np.array([np.inf, 0.5, 0.0]),
        auc=0.0,
    )
    assert abs(tpr_at_fpr(curve, 0.05) - 0.4) < 1e-12
    assert abs(fpr_at_tpr(curve, 0.4) - 0.05) < 1e-12


def test_rate_targets_validated():
    curve = roc([0.9, 0.1], [1, 0])
    with pytest.raises(ValueError):
        tpr_at_fpr(curve, 1.5)
    with pytest.raises(ValueError):
        fpr_at_tpr(curve, -0.1)


# --- importances ---------------------------------------------------------------------

def test_single_informative_feature_dominates():
    rng = np.random.default_rng(4)
    n = 400
    informative = rng.normal(size=n)
    X = np.column_stack([informative, rng.normal(size=n), rng.normal(size=n)])
    y = (informative > 0).astype(int)
    model = train_forest(make_dataset(X, y), n_trees=30, max_depth=6, seed=0)
    ranked = feature_importance(model)
    assert ranked[0][0] == "f0"
    assert ranked[0][1] > 0.9


def test_uninformative_features_near_uniform():
    rng = np.random.default_rng(11)
    importances = np.zeros(3)
    for seed in range(10):
        X = rng.normal(size=(200, 3))
        y = rng.integers(0, 2, size=200)
        if y.sum() in (0, 200):
            continue
        model = train_forest(make_dataset(X, y), n_trees=20, max_depth=4, seed=seed)
        importances += np.array([v for _, v in sorted(feature_importance(model))])
    importances /= 10
    assert np.all(np.abs(importances - 1 / 3) <= 0.1)


def test_importances_sum_to_one():
    ds = xor_dataset(n=200, seed=8)
    model = train_forest(ds, n_trees=10, seed=3)
    total = sum(v for _, v in feature_importance(model))
    assert abs(total - 1.0) <= 1e-9


def test_logistic_importance_requires_flag():
    ds = separable_dataset()
    model = train_logistic(ds, epochs=50)
    with pytest.raises(ValueError, match="from_weights"):
        feature_importance(model)
    ranked = feature_importance(model, from_weights=True)
    assert abs(sum(v for _, v in ranked) - 1.0) <= 1e-9


# --- serialization ---------------------------------------------------------------------

@pytest.mark.parametrize("kind", ["logistic", "forest"])
def test_serialization_roundtrip_bit_identical(tmp_path, kind):
    ds = separable_dataset(seed=12)
    if kind == "logistic":
        model = train_logistic(ds, epochs=60)
    else:
        model = train_forest(ds, n_trees=8, seed=4)
    path = tmp_path / "model.json"
    save_model(model, path)
    loaded = load_model(path)
    X = np.vstack([ds.X, ds.X * 0.37])
    assert np.array_equal(predict_proba(model, X), predict_proba(loaded, X))
    assert model_to_dict(loaded) == model_to_dict(model)


def test_model_from_dict_rejects_unknown_kind():
    with pytest.raises(ValueError, match="kind"):
        model_from_dict({"kind": "boosted"})
