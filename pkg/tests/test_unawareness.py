import numpy as np
import pytest

from fairpath import export_csv, proxy_scan, sanitize
from fairpath.unawareness import correlation_ratio, cramers_v

from conftest import make_dataset, random_dataset
from oracles import cramers_v_from_table
from test_individual import feature_dataset


class TestSanitize:
    def test_export_lacks_sensitive_column(self, small_dataset):
        clean = sanitize(small_dataset)
        header = export_csv(clean).splitlines()[0].split(",")
        assert "grp" not in header
        assert header == ["f_num", "f_cat", "label", "score"]

    def test_idempotent(self, small_dataset):
        once = sanitize(small_dataset)
        twice = sanitize(once)
        assert twice is once

    def test_row_count_scores_labels_unchanged(self, small_dataset):
        clean = sanitize(small_dataset)
        assert len(export_csv(clean).splitlines()) == len(small_dataset) + 1
        assert clean.scores.tolist() == small_dataset.scores.tolist()
        assert clean.labels.tolist() == small_dataset.labels.tolist()

    def test_metrics_still_work_internally(self, small_dataset):
        clean = sanitize(small_dataset)
        assert clean.groups == small_dataset.groups


class TestProxyScan:
    def test_feature_equal_to_sensitive_is_perfect_proxy(self):
        d = feature_dataset(
            {"mirror": ("categorical", ["A", "B", "A", "B"])},
            ["A", "B", "A", "B"],
            [1, 0, 1, 0],
            [0.9, 0.1, 0.8, 0.2],
        )
        report = proxy_scan(d, theta=0.3)
        entry = report.associations[0]
        assert entry.association == 1.0
        assert entry.flagged
        assert report.flagged == ("mirror",)

    def test_balanced_contingency_gives_zero(self):
        d = feature_dataset(
            {"indep": ("categorical", ["x", "y", "x", "y"])},
            ["A", "A", "B", "B"],
            [1, 0, 1, 0],
            [0.9, 0.1, 0.8, 0.2],
        )
        assert proxy_scan(d, theta=0.3).associations[0].association == 0.0

    def test_three_level_fixture_matches_contingency_oracle(self, rng):
        values = [["p", "q", "r"][int(rng.integers(0, 3))] for _ in range(60)]
        groups = [["A", "B"][int(rng.integers(0, 2))] for _ in range(58)] + ["A", "B"]
        d = feature_dataset(
            {"f": ("categorical", values)},
            groups,
            [int(rng.integers(0, 2)) for _ in range(60)],
            [float(s) for s in rng.random(60)],
        )
        report = proxy_scan(d, theta=0.3)
        table = np.zeros((3, 2))
        for v, g in zip(values, groups):
            table[["p", "q", "r"].index(v), ["A", "B"].index(g)] += 1
        assert report.associations[0].association == pytest.approx(
            cramers_v_from_table(table), abs=1e-12
        )

    def test_constant_feature_association_zero(self):
        d = feature_dataset(
            {"const_cat": ("categorical", ["k"] * 4), "const_num": ("numeric", [7.0] * 4)},
            ["A", "B", "A", "B"],
            [1, 0, 1, 0],
            [0.9, 0.1, 0.8, 0.2],
        )
        report = proxy_scan(d)
        assert all(a.association == 0.0 for a in report.associations)

    def test_numeric_feature_uses_correlation_ratio(self):
        d = feature_dataset(
            {"num": ("numeric", [1.0, 1.1, 9.0, 9.2])},
            ["A", "A", "B", "B"],
            [1, 0, 1, 0],
            [0.9, 0.1, 0.8, 0.2],
        )
        entry = proxy_scan(d, theta=0.3).associations[0]
        assert entry.method == "correlation_ratio"
        assert entry.association > 0.99

    def test_category_rename_invariance(self, rng):
        values = [["p", "q", "r"][int(rng.integers(0, 3))] for _ in range(30)]
        groups = ["A", "B"] + [["A", "B"][int(rng.integers(0, 2))] for _ in range(28)]
        labels = [int(rng.integers(0, 2)) for _ in range(30)]
        scores = [float(s) for s in rng.random(30)]
        d1 = feature_dataset({"f": ("categorical", values)}, groups, labels, scores)
        renamed = [{"p": "zebra", "q": "yak", "r": "xerus"}[v] for v in values]
        d2 = feature_dataset({"f": ("categorical", renamed)}, groups, labels, scores)
        a1 = proxy_scan(d1).associations[0].association
        a2 = proxy_scan(d2).associations[0].association
        assert a1 == pytest.approx(a2, abs=1e-15)

    def test_name_warnings_from_config_list(self):
        d = feature_dataset(
            {"age": ("numeric", [20.0, 30.0, 40.0, 50.0])},
            ["A", "B", "A", "B"],
            [1, 0, 1, 0],
            [0.9, 0.1, 0.8, 0.2],
        )
        report = proxy_scan(d, sensitive_attribute_names=("age", "sex"))
        assert any("age" in w for w in report.name_warnings)


class TestAssociationHelpers:
    def test_cramers_v_perfect_dependence_any_size(self):
        codes = np.array([0, 1, 2, 0, 1, 2, 0, 1, 2])
        assert cramers_v(codes, codes) == 1.0

    def test_correlation_ratio_constant_groups(self):
        values = np.array([3.0, 3.0, 9.0, 9.0])
        codes = np.array([0, 0, 1, 1])
        assert correlation_ratio(values, codes) == 1.0

    def test_correlation_ratio_identical_distributions(self):
        values = np.array([1.0, 2.0, 1.0, 2.0])
        codes = np.array([0, 0, 1, 1])
        assert correlation_ratio(values, codes) == 0.0

    def test_bounds_on_random_inputs(self, rng):
        for _ in range(20):
            n = int(rng.integers(4, 40))
            a = rng.integers(0, 4, n)
            b = rng.integers(0, 3, n)
            v = cramers_v(a.astype(np.int64), b.astype(np.int64))
            assert 0.0 <= v <= 1.0
            eta = correlation_ratio(rng.normal(size=n), b.astype(np.int64))
            assert 0.0 <= eta <= 1.0
