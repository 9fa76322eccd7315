import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fairpath import (
    DegenerateGroupError,
    detect_label_bias,
    load_dataset,
    partition_by_group,
    reweigh_labels,
    weights_csv,
)

from conftest import make_dataset, random_dataset, schema_json
from oracles import rows_of


def dataset_with_base_rates(spec: dict[str, tuple[int, int]], rng=None):
    """spec: group -> (positives, negatives)."""
    rng = rng or np.random.Generator(np.random.PCG64(5))
    groups, labels, scores = [], [], []
    for g, (pos, neg) in spec.items():
        groups.extend([g] * (pos + neg))
        labels.extend([1] * pos + [0] * neg)
        scores.extend(float(s) for s in rng.random(pos + neg))
    return make_dataset(groups, labels, scores)


class TestDetect:
    def test_direct_gap(self):
        d = dataset_with_base_rates({"A": (6, 4), "B": (4, 6)})
        report = detect_label_bias(d, delta=0.05)
        assert report.base_rates == {"A": 0.6, "B": 0.4}
        assert report.max_base_rate_gap == pytest.approx(0.2)
        assert report.flagged is True
        assert report.assumed_worldview == "WAE"

    def test_equal_base_rates_not_flagged(self):
        d = dataset_with_base_rates({"A": (5, 5), "B": (3, 3)})
        report = detect_label_bias(d, delta=0.05)
        assert report.max_base_rate_gap == 0.0
        assert report.flagged is False

    def test_gap_equal_to_delta_not_flagged(self):
        d = dataset_with_base_rates({"A": (6, 4), "B": (4, 6)})
        report = detect_label_bias(d, delta=0.2)
        assert report.flagged is False

    def test_gap_matches_partition_recount(self, rng):
        for _ in range(10):
            d = random_dataset(rng, max_rows=50)
            report = detect_label_bias(d)
            rates = {}
            for g, idx in partition_by_group(d).items():
                rates[g] = sum(int(d.labels[i]) for i in idx) / len(idx)
            assert report.base_rates == pytest.approx(rates)
            assert report.max_base_rate_gap == pytest.approx(
                max(rates.values()) - min(rates.values())
            )


class TestReweigh:
    def test_closed_form_values(self):
        # pooled p* = 0.5; group A rate 0.6 -> pos weight 0.8333..., neg 1.25
        d = dataset_with_base_rates({"A": (6, 4), "B": (4, 6)})
        w = reweigh_labels(d)
        assert w.pooled_base_rate == 0.5
        w_pos, w_neg = w.group_weights["A"]
        assert w_pos == pytest.approx(0.5 / 0.6, abs=1e-15)
        assert w_neg == pytest.approx(0.5 / 0.5 * 1.25, abs=1e-15)
        assert w_neg == pytest.approx((1 - 0.5) / (1 - 0.6), abs=1e-15)

    def test_equal_base_rates_give_unit_weights(self):
        d = dataset_with_base_rates({"A": (5, 5), "B": (3, 3)})
        w = reweigh_labels(d)
        assert np.all(w.weights == 1.0)

    def test_unit_weights_exact_for_third_rates(self):
        d = dataset_with_base_rates({"A": (2, 4), "B": (3, 6)})
        w = reweigh_labels(d)
        assert np.all(w.weights == 1.0)

    def test_weighted_base_rates_hit_pooled_exactly(self, rng):
        for _ in range(20):
            d = random_dataset(rng, max_rows=60, nondegenerate=True)
            w = reweigh_labels(d)
            pooled = float(np.count_nonzero(d.labels == 1) / len(d))
            for g, idx in partition_by_group(d).items():
                idx = np.asarray(idx)
                weights = w.weights[idx]
                labels = d.labels[idx]
                weighted_rate = float(weights[labels == 1].sum() / weights.sum())
                assert abs(weighted_rate - pooled) < 1e-12

    def test_degenerate_group_raises_with_name(self):
        d = dataset_with_base_rates({"A": (5, 0), "B": (3, 3)})
        with pytest.raises(DegenerateGroupError, match="'A'"):
            reweigh_labels(d)

    def test_weights_positive_and_shared_by_cell(self, rng):
        d = random_dataset(rng, max_rows=40, nondegenerate=True)
        w = reweigh_labels(d)
        assert np.all(w.weights > 0)
        groups = d.group_values()
        for g in d.groups:
            for label in (0, 1):
                cell = w.weights[(groups == g) & (d.labels == label)]
                assert len(set(cell.tolist())) <= 1


class TestWeightExport:
    def test_weight_column_appended(self, small_dataset):
        w = reweigh_labels(small_dataset)
        text = weights_csv(small_dataset, w)
        header = text.splitlines()[0].split(",")
        assert header[-1] == "fairpath_weight"
        assert header[:-1] == [c.name for c in small_dataset.schema]
        assert len(text.splitlines()) == len(small_dataset) + 1

    def test_exported_weights_parse_back(self, small_dataset):
        w = reweigh_labels(small_dataset)
        lines = weights_csv(small_dataset, w).splitlines()[1:]
        parsed = [float(line.rsplit(",", 1)[1]) for line in lines]
        assert parsed == [float(x) for x in w.weights]


@st.composite
def nondegenerate_tables(draw):
    n_groups = draw(st.integers(2, 4))
    names = [chr(65 + i) for i in range(n_groups)]
    groups, labels = [], []
    for g in names:
        pos = draw(st.integers(1, 6))
        neg = draw(st.integers(1, 6))
        groups.extend([g] * (pos + neg))
        labels.extend([1] * pos + [0] * neg)
    scores = draw(
        st.lists(
            st.floats(min_value=0, max_value=1, allow_nan=False),
            min_size=len(groups),
            max_size=len(groups),
        )
    )
    return groups, labels, scores


@settings(max_examples=40, deadline=None)
@given(nondegenerate_tables())
def test_property_weighted_rates_equalize(table):
    groups, labels, scores = table
    d = make_dataset(groups, labels, scores)
    w = reweigh_labels(d)
    pooled = sum(labels) / len(labels)
    arr = np.asarray(groups)
    for g in d.groups:
        mask = arr == g
        weights = w.weights[mask]
        lab = np.asarray(labels)[mask]
        assert abs(float(weights[lab == 1].sum() / weights.sum()) - pooled) < 1e-12
