"""Shared builders: every fixture dataset goes through the public CSV loader."""

from __future__ import annotations

import io
import json
from typing import Sequence

import numpy as np
import pytest

from fairpath import AuditDataset, load_dataset, schema_from_json

BASE_SCHEMA = [
    {"name": "f_num", "role": "feature", "kind": "numeric"},
    {"name": "f_cat", "role": "feature", "kind": "categorical"},
    {"name": "grp", "role": "sensitive", "kind": "categorical"},
    {"name": "label", "role": "true-label", "kind": "categorical"},
    {"name": "score", "role": "score", "kind": "numeric"},
]


def schema_json(columns=None) -> str:
    return json.dumps(columns if columns is not None else BASE_SCHEMA)


def csv_text(rows: Sequence[Sequence], header: Sequence[str]) -> str:
    buf = io.StringIO()
    buf.write(",".join(header) + "\n")
    for row in rows:
        buf.write(",".join(str(v) for v in row) + "\n")
    return buf.getvalue()


def make_dataset(
    groups: Sequence[str],
    labels: Sequence[int],
    scores: Sequence[float],
    f_num: Sequence[float] | None = None,
    f_cat: Sequence[str] | None = None,
) -> AuditDataset:
    n = len(groups)
    assert len(labels) == n and len(scores) == n
    f_num = f_num if f_num is not None else [float(i) for i in range(n)]
    f_cat = f_cat if f_cat is not None else ["x"] * n
    rows = [
        [f_num[i], f_cat[i], groups[i], labels[i], repr(float(scores[i]))]
        for i in range(n)
    ]
    text = csv_text(rows, ["f_num", "f_cat", "grp", "label", "score"])
    return load_dataset(text, schema_from_json(schema_json()))


def random_dataset(
    rng: np.random.Generator,
    max_rows: int = 60,
    n_groups: int | None = None,
    nondegenerate: bool = False,
    score_grid: int | None = None,
) -> AuditDataset:
    """Random fixture; nondegenerate forces every group to hold both labels.

    score_grid quantizes scores to that many levels, creating threshold ties.
    """
    if n_groups is None:
        n_groups = int(rng.integers(2, 5))
    names = [chr(ord("A") + i) for i in range(n_groups)]
    seed_rows = 2 * n_groups if nondegenerate else n_groups
    n = int(rng.integers(seed_rows, max(max_rows, seed_rows) + 1))
    groups: list[str] = []
    labels: list[int] = []
    for i, g in enumerate(names):
        if nondegenerate:
            groups.extend([g, g])
            labels.extend([0, 1])
        else:
            groups.append(g)
            labels.append(int(rng.integers(0, 2)))
    while len(groups) < n:
        groups.append(names[int(rng.integers(0, n_groups))])
        labels.append(int(rng.integers(0, 2)))
    scores = rng.random(n)
    if score_grid:
        scores = np.round(scores * score_grid) / score_grid
    f_num = rng.normal(size=n).round(3).tolist()
    f_cat = [["red", "green", "blue"][int(rng.integers(0, 3))] for _ in range(n)]
    return make_dataset(groups, labels, scores.tolist(), f_num=f_num, f_cat=f_cat)


@pytest.fixture
def small_dataset() -> AuditDataset:
    return make_dataset(
        groups=["A", "B", "A", "B"],
        labels=[1, 0, 0, 1],
        scores=[0.9, 0.1, 0.4, 0.7],
        f_num=[25.0, 30.0, 22.0, 28.0],
        f_cat=["york", "york", "leeds", "leeds"],
    )


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(20260810))
