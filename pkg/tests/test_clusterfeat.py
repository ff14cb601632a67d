import numpy as np
import pytest

from adlink.clusterfeat import (
    CLUSTER_FEATURE_NAMES,
    Condition,
    Rule,
    featurize_component,
    filter_components,
    image_document_frequency,
    learn_rules,
    pn_curve,
    rule_metrics,
    train_cluster_classifier,
)
from adlink.corpus import Ad
from adlink.extract import FieldSet

TS_JAN = 1452600000  # 2016-01-12
TS_JAN2 = 1452700000  # 2016-01-13 (same ISO week)
TS_FEB = 1455300000  # 2016-02-12
TS_MAR = 1457800000  # 2016-03-12


def make_ad(ad_id, posted, text="hello world", city="miami", state="FL", images=()):
    return Ad(id=ad_id, text=text, posted_at=posted, city=city, state=state,
              image_hashes=frozenset(images), source_id=None)


def fields_with_names(*names):
    fs = FieldSet()
    fs.names = set(names)
    return fs


def test_single_ad_component():
    ad = make_ad("a", TS_JAN, text="x" * 40, images=("h1",))
    feats = featurize_component(["a"], {"a": ad}, {"a": FieldSet()}, {"h1": 1})
    assert feats.n_ads == 1
    assert feats.posting_weeks == 1
    assert feats.posting_months == 1
    assert feats.std_image_freq == 0.0
    assert feats.states_norm == 1.0
    assert feats.min_chars == 40
    assert feats.max_image_freq == 1
    assert feats.edge_density == 0.0


def test_two_ads_same_week_shared_name():
    ads = {
        "a": make_ad("a", TS_JAN),
        "b": make_ad("b", TS_JAN2),
    }
    fieldsets = {"a": fields_with_names("candy"), "b": fields_with_names("candy")}
    feats = featurize_component(["a", "b"], ads, fieldsets, {}, n_edges=1)
    assert feats.posting_weeks == 1
    assert feats.names_norm == 0.5  # 1 distinct name / 2 ads
    assert feats.states_norm == 0.5
    assert feats.edge_density == 1.0


def test_three_months_one_ad_each():
    ads = {
        "a": make_ad("a", TS_JAN),
        "b": make_ad("b", TS_FEB),
        "c": make_ad("c", TS_MAR),
    }
    fieldsets = {k: FieldSet() for k in ads}
    feats = featurize_component(["a", "b", "c"], ads, fieldsets, {})
    assert feats.posting_months == 3
    assert feats.mean_ads_per_month == 1.0
    assert feats.std_ads_per_month == 0.0


def test_featurization_order_independent():
    ads = {
        "a": make_ad("a", TS_JAN, images=("h1", "h2")),
        "b": make_ad("b", TS_FEB, images=("h2",)),
        "c": make_ad("c", TS_MAR),
    }
    fieldsets = {k: fields_with_names(k) for k in ads}
    df = {"h1": 3, "h2": 7}
    f1 = featurize_component(["a", "b", "c"], ads, fieldsets, df, n_edges=2)
    f2 = featurize_component(["c", "a", "b"], ads, fieldsets, df, n_edges=2)
    assert f1 == f2
    assert f1.max_image_freq == 7
    assert np.isclose(f1.std_image_freq, np.std([3, 7]))


def test_vector_order_matches_names():
    ad = make_ad("a", TS_JAN)
    feats = featurize_component(["a"], {"a": ad}, {}, {})
    vec = feats.to_vector()
    assert len(vec) == len(CLUSTER_FEATURE_NAMES)
    assert vec[CLUSTER_FEATURE_NAMES.index("n_ads")] == 1


def test_image_document_frequency():
    ads = [
        make_ad("a", TS_JAN, images=("h1", "h2")),
        make_ad("b", TS_FEB, images=("h1",)),
    ]
    assert image_document_frequency(ads) == {"h1": 2, "h2": 1}


def test_filter_components_strict_boundary():
    comps = {"a": [str(i) for i in range(299)], "b": [str(i) for i in range(301)]}
    kept = filter_components(comps, 300)
    assert set(kept) == {"b"}
    assert filter_components(comps, 0) == comps


def test_filter_components_recount():
    comps = {f"c{i}": [str(j) for j in range(i)] for i in range(1, 30)}
    kept = filter_components(comps, 10)
    assert set(kept) == {f"c{i}" for i in range(11, 30)}


# --- cluster classifier --------------------------------------------------------

def separable_clusters(n=60, seed=0):
    rng = np.random.default_rng(seed)
    y = (rng.random(n) < 0.35).astype(int)
    X = rng.normal(size=(n, len(CLUSTER_FEATURE_NAMES)))
    X[:, 3] += y * 3.0  # one strongly informative dimension
    return X, y


def test_classifier_oof_auc_on_separable_clusters():
    X, y = separable_clusters()
    result = train_cluster_classifier(X, y, n_folds=4, n_random_baselines=30, seed=1)
    assert result.curve.auc >= 0.9


def test_baseline_auc_near_chance():
    X, y = separable_clusters(seed=2)
    result = train_cluster_classifier(X, y, n_folds=4, n_random_baselines=60, seed=2)
    assert 0.4 <= result.baseline_mean_auc <= 0.6
    assert len(result.baseline_aucs) == 60


def test_classifier_requires_both_classes_and_sane_folds():
    X = np.zeros((10, len(CLUSTER_FEATURE_NAMES)))
    with pytest.raises(ValueError, match="both classes"):
        train_cluster_classifier(X, np.zeros(10, dtype=int))
    y = np.array([1, 1, 0, 0, 0, 0, 0, 0, 0, 0])
    with pytest.raises(ValueError, match="exceeds positive count"):
        train_cluster_classifier(X + np.random.default_rng(0).random((10, X.shape[1])),
                                 y, n_folds=4)


# --- rules ------------------------------------------------------------------------

NAMES3 = ("alpha", "beta", "gamma")


def test_single_separating_feature_rule():
    rng = np.random.default_rng(3)
    n = 40
    y = np.array([1] * 12 + [0] * 28)
    X = rng.normal(size=(n, 3))
    X[:12, 0] += 10.0
    rules = learn_rules(X, y, NAMES3, max_rules=3, min_support=2, beam_width=4)
    assert len(rules) >= 1
    top = rules[0]
    assert top.ratio == 1.0
    prior = 12 / 40
    assert abs(top.lift - 1.0 / prior) < 1e-9
    assert {c.feature for c in top.conditions} == {"alpha"}


def test_rule_matching_everything_has_lift_one():
    rng = np.random.default_rng(4)
    X = rng.normal(size=(30, 3))
    y = (rng.random(30) < 0.4).astype(int)
    if y.sum() in (0, 30):
        y[0] = 1 - y[0]
    rule = Rule(conditions=())
    support, ratio, lift = rule_metrics(rule, X, y, NAMES3)
    assert support == 30
    assert abs(ratio - y.mean()) < 1e-12
    assert abs(lift - 1.0) < 1e-12


def test_reported_ratio_lift_arithmetic_consistent():
    # published-style numbers: ratio 90.9% at lift 2.67 implies prior
    # ratio/lift ~= 0.3404; the identity must hold to 1e-6 in our metrics
    prior = 0.909 / 2.67
    n = 10_000
    n_pos = round(prior * n)
    y = np.array([1] * n_pos + [0] * (n - n_pos))
    X = np.zeros((n, 1))
    X[:11, 0] = 1.0  # support-11 rule region
    y[:11] = [1] * 10 + [0]  # 10/11 = 90.9%
    rule = Rule(conditions=(Condition(feature="alpha", lower=0.5),))
    support, ratio, lift = rule_metrics(rule, X, y, ("alpha",))
    assert support == 11
    assert abs(ratio - 10 / 11) < 1e-9
    assert abs(lift * y.mean() - ratio) < 1e-6


def test_rule_metrics_hand_counted():
    X = np.array([[float(i)] for i in range(10)])
    y = np.array([0, 0, 0, 0, 0, 0, 1, 1, 1, 1])
    rule = Rule(conditions=(Condition(feature="alpha", lower=5.5),))
    support, ratio, lift = rule_metrics(rule, X, y, ("alpha",))
    assert (support, ratio) == (4, 1.0)
    assert abs(lift - 2.5) < 1e-12


def test_rule_metrics_zero_matches():
    X = np.zeros((5, 1))
    y = np.array([1, 0, 0, 0, 1])
    rule = Rule(conditions=(Condition(feature="alpha", lower=10.0),))
    assert rule_metrics(rule, X, y, ("alpha",)) == (0, None, None)


def brute_force_metrics(rule, X, y, names):
    matched = []
    for row, label in zip(X, y):
        ok = True
        for cond in rule.conditions:
            v = row[names.index(cond.feature)]
            if cond.lower is not None and not v > cond.lower:
                ok = False
            if cond.upper is not None and not v <= cond.upper:
                ok = False
        if ok:
            matched.append(label)
    support = len(matched)
    if support == 0:
        return 0, None, None
    ratio = sum(matched) / support
    prior = sum(y) / len(y)
    return support, ratio, ratio / prior


def test_rule_metrics_matches_brute_force_oracle():
    rng = np.random.default_rng(9)
    names = NAMES3
    for _ in range(50):
        n = int(rng.integers(3, 120))
        X = rng.normal(size=(n, 3)).round(1)
        y = rng.integers(0, 2, size=n)
        if y.sum() == 0:
            y[0] = 1
        conds = []
        for f in range(3):
            if rng.random() < 0.5:
                lo = float(rng.normal()) if rng.random() < 0.7 else None
                hi = float(rng.normal() + 1) if rng.random() < 0.7 else None
                if lo is not None and hi is not None and lo >= hi:
                    lo, hi = None, hi
                if lo is not None or hi is not None:
                    conds.append(Condition(feature=names[f], lower=lo, upper=hi))
        rule = Rule(conditions=tuple(conds))
        expected = brute_force_metrics(rule, X, y, names)
        got = rule_metrics(rule, X, y, names)
        assert got[0] == expected[0]
        if expected[0]:
            assert abs(got[1] - expected[1]) < 1e-12
            assert abs(got[2] - expected[2]) < 1e-12


def test_learned_rules_lift_identity_and_coverage():
    rng = np.random.default_rng(12)
    n = 80
    y = (rng.random(n) < 0.3).astype(int)
    if y.sum() < 4:
        y[:4] = 1
    X = rng.normal(size=(n, 3))
    X[y == 1, 1] += 2.0
    X[y == 1, 2] -= 1.0
    rules = learn_rules(X, y, NAMES3, max_rules=4, min_support=2, beam_width=4)
    prior = y.mean()
    covered = np.zeros(n, dtype=bool)
    for rule in rules:
        assert abs(rule.lift * prior - rule.ratio) < 1e-9
        assert rule.support >= 2
        mask = rule.matches(X, NAMES3)
        new_pos = ((mask & ~covered) & (y == 1)).sum()
        assert new_pos >= 1  # sequential covering always claims new positives
        covered |= mask


def test_no_rule_meets_min_support_warns():
    X = np.array([[0.0], [1.0], [2.0], [3.0]])
    y = np.array([1, 0, 0, 0])
    with pytest.warns(UserWarning, match="min_support"):
        rules = learn_rules(X, y, ("alpha",), max_rules=2, min_support=4)
    assert rules == []


def test_rule_serialization_roundtrip_text():
    rule = Rule(conditions=(
        Condition(feature="beta", lower=1.5, upper=None),
        Condition(feature="alpha", lower=None, upper=0.25),
    ), support=4, ratio=0.9, lift=2.1)
    d = rule.to_dict()
    assert d["support"] == 4
    assert "beta>1.5" in d["text"]
    assert "alpha<=0.25" in d["text"]


# --- PN curves ----------------------------------------------------------------------

def test_pn_curve_empty_ruleset():
    X = np.zeros((4, 1))
    y = np.array([1, 0, 1, 0])
    assert pn_curve([], X, y, ("alpha",)) == [(0, 0)]


def test_pn_curve_perfect_rule():
    X = np.array([[1.0], [1.0], [0.0], [0.0]])
    y = np.array([1, 1, 0, 0])
    rule = Rule(conditions=(Condition(feature="alpha", lower=0.5),))
    assert pn_curve([rule], X, y, ("alpha",)) == [(0, 0), (0, 2)]


def test_pn_curve_monotone_on_random_rulesets():
    rng = np.random.default_rng(17)
    names = NAMES3
    for _ in range(20):
        n = 50
        X = rng.normal(size=(n, 3))
        y = rng.integers(0, 2, size=n)
        rules = []
        for _ in range(int(rng.integers(1, 5))):
            f = names[int(rng.integers(0, 3))]
            rules.append(Rule(conditions=(Condition(feature=f, lower=float(rng.normal())),)))
        points = pn_curve(rules, X, y, names)
        assert points[0] == (0, 0)
        for (n0, p0), (n1, p1) in zip(points, points[1:]):
            assert n1 >= n0 and p1 >= p0
