"""Per-group ROC curves over the dataset's own score thresholds.

Thresholds are the distinct score values plus two sentinels: one above
every admissible score ("select nobody") and zero ("select everybody",
since decisions use score >= threshold). Consecutive operating points with
identical counts collapse onto their largest threshold, so a group whose
scores are all equal yields exactly the two endpoints.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .dataset import AuditDataset
from .errors import DegenerateGroupError

# Strictly above any score in [0, 1]; the "predict nobody positive" sentinel.
NEVER_THRESHOLD = 1.000001


@dataclass(frozen=True)
class RocCurve:
    """One group's operating points, ordered by strictly decreasing threshold."""

    group: str
    thresholds: np.ndarray  # float64, strictly decreasing
    tp: np.ndarray  # int64
    fp: np.ndarray  # int64
    n_pos: int
    n_neg: int

    @property
    def tpr(self) -> np.ndarray:
        return self.tp / self.n_pos

    @property
    def fpr(self) -> np.ndarray:
        return self.fp / self.n_neg

    @property
    def tn(self) -> np.ndarray:
        return self.n_neg - self.fp

    @property
    def fn(self) -> np.ndarray:
        return self.n_pos - self.tp

    def __len__(self) -> int:
        return int(self.thresholds.shape[0])

    def to_json_dict(self) -> dict:
        return {
            "group": self.group,
            "points": [
                {
                    "threshold": float(t),
                    "fpr": float(x),
                    "tpr": float(y),
                }
                for t, x, y in zip(self.thresholds, self.fpr, self.tpr)
            ],
        }


def roc(d: AuditDataset, group: str) -> RocCurve:
    """Operating points of one group; raises for single-class groups."""
    mask = d.group_mask(group)
    scores = d.scores[mask]
    labels = d.labels[mask]
    n_pos = int(np.count_nonzero(labels == 1))
    n_neg = int(labels.shape[0]) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise DegenerateGroupError(
            f"group '{group}' has only one label class "
            f"({n_pos} positive, {n_neg} negative rows); its rates are undefined"
        )
    distinct = np.unique(scores)[::-1]  # descending
    thresholds = np.concatenate(([NEVER_THRESHOLD], distinct))
    if distinct[-1] != 0.0:
        thresholds = np.concatenate((thresholds, [0.0]))
    tp, fp = kernels.confusion_sweep(scores, labels, thresholds)

    # collapse identical consecutive operating points onto their largest threshold
    keep = np.ones(thresholds.shape[0], dtype=bool)
    for i in range(1, thresholds.shape[0]):
        if tp[i] == tp[i - 1] and fp[i] == fp[i - 1]:
            keep[i] = False
    return RocCurve(
        group=group,
        thresholds=thresholds[keep],
        tp=tp[keep].astype(np.int64),
        fp=fp[keep].astype(np.int64),
        n_pos=n_pos,
        n_neg=n_neg,
    )
