"""Individual fairness: similar rows should receive similar scores.

The similarity metric is a Gower-style mean over the non-sensitive feature
columns: numeric columns are min-max scaled and compared by absolute
difference, categorical columns cost 1 per mismatch. No claim is made that
this metric is the adequate one for a given task — adequacy is a
stakeholder judgment — so the chosen spec is carried into the report.

The computable score is kNN consistency: 1 minus the mean absolute gap
between a row's score and the mean score of its k nearest neighbors. This
is a surrogate for the Lipschitz-style "similar treatment" condition, which
is not directly checkable without a task-given metric on outcomes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .dataset import KIND_NUMERIC, AuditDataset

DEFAULT_ROW_CAP = 20_000  # all-pairs O(n^2) tool, desk scale by design


@dataclass(frozen=True)
class DistanceSpec:
    """Feature columns entering the distance; None means all of them.

    The sensitive column is always excluded and may not be named here.
    """

    included_columns: tuple[str, ...] | None = None

    def resolve(self, d: AuditDataset) -> tuple[str, ...]:
        feature_names = [c.name for c in d.feature_schema]
        if self.included_columns is None:
            chosen = feature_names
        else:
            chosen = list(self.included_columns)
            for name in chosen:
                if name == d.sensitive_column:
                    raise ValueError(
                        f"sensitive column '{name}' is always excluded from the distance"
                    )
                if name not in feature_names:
                    raise ValueError(f"'{name}' is not a feature column")
        if not chosen:
            raise ValueError("distance needs at least one feature column")
        return tuple(chosen)

    def to_json_dict(self, d: AuditDataset) -> dict:
        return {
            "included_columns": list(self.resolve(d)),
            "numeric_scaling": "min-max per column (constant columns contribute 0)",
            "categorical_mismatch_cost": 1,
            "aggregation": "mean over included columns",
        }


@dataclass(frozen=True)
class WorstPair:
    i: int
    j: int
    distance: float
    score_difference: float

    def to_json_dict(self) -> dict:
        return {
            "i": self.i,
            "j": self.j,
            "distance": self.distance,
            "score_difference": self.score_difference,
        }


@dataclass(frozen=True)
class ConsistencyReport:
    k: int
    consistency: float
    worst_pairs: tuple[WorstPair, ...]

    def to_json_dict(self) -> dict:
        return {
            "k": self.k,
            "consistency": self.consistency,
            "worst_pairs": [p.to_json_dict() for p in self.worst_pairs],
        }


def design_matrices(
    d: AuditDataset, spec: DistanceSpec
) -> tuple[np.ndarray, np.ndarray, tuple[str, ...]]:
    """Scaled numeric matrix, categorical code matrix and the column order.

    Columns keep schema order within their kind; the distance accumulates
    numeric columns first, then categorical ones — the one order every
    implementation (scalar, NumPy, compiled) must share for bit-identical
    results.
    """
    names = spec.resolve(d)
    kind_of = {c.name: c.kind for c in d.feature_schema}
    numeric = [n for n in names if kind_of[n] == KIND_NUMERIC]
    categorical = [n for n in names if kind_of[n] != KIND_NUMERIC]

    n = len(d)
    num = np.zeros((n, len(numeric)), dtype=np.float64)
    for col_idx, name in enumerate(numeric):
        col = d.feature_columns[name]
        lo = float(col.min())
        hi = float(col.max())
        if hi > lo:
            num[:, col_idx] = (col - lo) / (hi - lo)
        # constant column stays all-zero: contributes 0 but still divides

    cat = np.zeros((n, len(categorical)), dtype=np.int64)
    for col_idx, name in enumerate(categorical):
        col = d.feature_columns[name]
        _, codes = np.unique(col.astype(str), return_inverse=True)
        cat[:, col_idx] = codes

    return num, cat, tuple(numeric) + tuple(categorical)


def pairwise_distance(d: AuditDataset, spec: DistanceSpec, i: int, j: int) -> float:
    """Scalar Gower distance between two rows, in [0, 1]."""
    num, cat, _ = design_matrices(d, spec)
    return _pair_from_matrices(num, cat, i, j)


def _pair_from_matrices(num: np.ndarray, cat: np.ndarray, i: int, j: int) -> float:
    total_cols = num.shape[1] + cat.shape[1]
    acc = 0.0
    for c in range(num.shape[1]):
        part = abs(num[i, c] - num[j, c])
        acc += part if part < 1.0 else 1.0
    for c in range(cat.shape[1]):
        acc += 1.0 if cat[i, c] != cat[j, c] else 0.0
    return acc / total_cols


def consistency(
    d: AuditDataset,
    spec: DistanceSpec | None = None,
    k: int = 5,
    row_cap: int = DEFAULT_ROW_CAP,
    worst_pairs_limit: int = 10,
) -> ConsistencyReport:
    """kNN score-consistency with deterministic neighbor selection.

    Neighbor ties resolve to the lower row index; rows never neighbor
    themselves. The worst pairs are the neighbor pairs with the largest
    score gaps — the concrete individuals a reviewer should look at.
    """
    spec = spec or DistanceSpec()
    n = len(d)
    if k >= n:
        raise ValueError(f"k={k} must be smaller than the number of rows ({n})")
    if n > row_cap:
        raise ValueError(
            f"{n} rows exceed the all-pairs cap of {row_cap}; "
            "raise row_cap explicitly if the quadratic cost is acceptable"
        )
    num, cat, _ = design_matrices(d, spec)
    neighbors, dists = kernels.gower_knn(num, cat, k)

    scores = d.scores
    neighbor_means = scores[neighbors].mean(axis=1)
    deviations = np.abs(scores - neighbor_means)
    value = float(1.0 - deviations.mean())

    seen: dict[tuple[int, int], tuple[float, float]] = {}
    for i in range(n):
        for slot in range(k):
            j = int(neighbors[i, slot])
            key = (min(i, j), max(i, j))
            gap = abs(float(scores[i]) - float(scores[j]))
            dist = float(dists[i, slot])
            if key not in seen:
                seen[key] = (dist, gap)
    ranked = sorted(seen.items(), key=lambda kv: (-kv[1][1], kv[1][0], kv[0]))
    worst = tuple(
        WorstPair(i=i, j=j, distance=dist, score_difference=gap)
        for (i, j), (dist, gap) in ranked[:worst_pairs_limit]
    )
    return ConsistencyReport(k=k, consistency=value, worst_pairs=worst)
