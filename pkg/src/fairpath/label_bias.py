"""Label-bias detection and closed-form reweighting correction.

Detection compares per-group base rates: under the "we're all equal" (WAE)
worldview, equal base rates are presumed, so an observed gap is evidence of
structural bias in the recorded labels. Under WYSIWYG the same gap is read
as a real difference, so the engine only raises this diagnostic on the WAE
branch. The tool reports the gap and leaves the worldview judgment to the
human.

The correction is the minimal concrete instantiation of a label-correction
step: a closed-form (group, label) reweighting that moves every group's
weighted base rate exactly onto the pooled base rate. Iterative correction
frameworks that re-estimate labels are documented alternatives, not
implemented here.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dataset import AuditDataset, export_csv, partition_by_group
from .errors import DegenerateGroupError


@dataclass(frozen=True)
class LabelBiasReport:
    base_rates: dict[str, float]
    max_base_rate_gap: float
    flagged: bool
    delta: float
    assumed_worldview: str = "WAE"

    def to_json_dict(self) -> dict:
        return {
            "base_rates": {g: float(r) for g, r in sorted(self.base_rates.items())},
            "max_base_rate_gap": float(self.max_base_rate_gap),
            "flagged": bool(self.flagged),
            "delta": float(self.delta),
            "assumed_worldview": self.assumed_worldview,
        }


@dataclass(frozen=True)
class WeightVector:
    """Per-row positive weights equalizing weighted base rates across groups."""

    weights: np.ndarray
    pooled_base_rate: float
    group_weights: dict[str, tuple[float, float]]  # group -> (positive w, negative w)

    def to_json_dict(self) -> dict:
        return {
            "pooled_base_rate": float(self.pooled_base_rate),
            "group_weights": {
                g: {"positive": float(p), "negative": float(n)}
                for g, (p, n) in sorted(self.group_weights.items())
            },
        }


def detect_label_bias(d: AuditDataset, delta: float = 0.05) -> LabelBiasReport:
    """Flag when the max-min spread of group base rates exceeds delta."""
    rates = {}
    for g, idx in partition_by_group(d).items():
        labels = d.labels[np.asarray(idx, dtype=np.int64)]
        rates[g] = float(np.count_nonzero(labels == 1) / len(labels))
    gap = max(rates.values()) - min(rates.values())
    return LabelBiasReport(
        base_rates=rates, max_base_rate_gap=gap, flagged=gap > delta, delta=delta
    )


def reweigh_labels(d: AuditDataset) -> WeightVector:
    """Closed-form correction: weight rows so every group hits the pooled base rate.

    A positive row of group g gets weight p*/p_g and a negative row
    (1-p*)/(1-p_g), where p_g is the group base rate and p* the pooled base
    rate. Groups with all-positive or all-negative labels make the weights
    undefined and raise.
    """
    total_pos = int(np.count_nonzero(d.labels == 1))
    pooled = total_pos / len(d)
    weights = np.empty(len(d), dtype=np.float64)
    group_weights: dict[str, tuple[float, float]] = {}
    for code, g in enumerate(d.groups):
        mask = d.group_codes == code
        n_g = int(mask.sum())
        pos_g = int(np.count_nonzero(d.labels[mask] == 1))
        if pos_g == 0 or pos_g == n_g:
            raise DegenerateGroupError(
                f"group '{g}' has base rate {pos_g / n_g:g}; reweighting needs both labels present"
            )
        p_g = pos_g / n_g
        w_pos = pooled / p_g
        w_neg = (1.0 - pooled) / (1.0 - p_g)
        group_weights[g] = (w_pos, w_neg)
        weights[mask & (d.labels == 1)] = w_pos
        weights[mask & (d.labels == 0)] = w_neg
    return WeightVector(weights=weights, pooled_base_rate=pooled, group_weights=group_weights)


WEIGHT_COLUMN = "fairpath_weight"


def weights_csv(d: AuditDataset, w: WeightVector) -> str:
    """Copy of the input table with the weight column appended."""
    return export_csv(d, extra_columns={WEIGHT_COLUMN: [float(x) for x in w.weights]})
