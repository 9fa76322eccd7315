"""Group fairness metrics: outcome-distribution and classification-rate gaps.

Conventions applied here, recorded once so reports can point at them:

- "Equal positive classification rates" is read as the true positive rate
  among actual positives (the equal-opportunity reading), not the raw
  selection rate. The selection-rate reading lives in the disparate-impact
  numbers instead.
- With more than two groups, gaps use the min/max envelope over groups,
  the strictest pairwise reading of "across all groups".
- Disparate impact is reported both ways: as the min/max selection-rate
  ratio checked against the four-fifths (0.8) rule, and as the absolute
  selection-rate difference (statistical parity difference).

A rate with a zero denominator is carried as None ("undefined"), never as a
division fault or a fake 0.
"""

from __future__ import annotations

from dataclasses import dataclass

from .dataset import AuditDataset, ConfusionTable, confusion_at


@dataclass(frozen=True)
class RateSet:
    """Per-group rates at one threshold; None marks an undefined rate."""

    selection_rate: float | None
    tpr: float | None
    fpr: float | None
    base_rate: float
    confusion: ConfusionTable

    def to_json_dict(self) -> dict:
        return {
            "selection_rate": self.selection_rate,
            "tpr": self.tpr,
            "fpr": self.fpr,
            "base_rate": self.base_rate,
            "confusion": {
                "tp": self.confusion.tp,
                "fp": self.confusion.fp,
                "tn": self.confusion.tn,
                "fn": self.confusion.fn,
            },
        }


@dataclass(frozen=True)
class GroupRates:
    threshold: float | None  # None for mixed per-group thresholds (what-if view)
    per_group: dict[str, RateSet]

    def to_json_dict(self) -> dict:
        return {
            "threshold": self.threshold,
            "per_group": {g: r.to_json_dict() for g, r in sorted(self.per_group.items())},
        }


@dataclass(frozen=True)
class GroupMetricReport:
    disparate_impact_ratio: float | None
    statistical_parity_difference: float
    equal_opportunity_gap: float | None
    equalized_odds_gap: float | None
    passes_four_fifths: bool

    def to_json_dict(self) -> dict:
        return {
            "disparate_impact_ratio": self.disparate_impact_ratio,
            "statistical_parity_difference": self.statistical_parity_difference,
            "equal_opportunity_gap": self.equal_opportunity_gap,
            "equalized_odds_gap": self.equalized_odds_gap,
            "passes_four_fifths": self.passes_four_fifths,
        }


FOUR_FIFTHS = 0.8


def group_rates(d: AuditDataset, threshold: float) -> GroupRates:
    """Selection rate, TPR, FPR and base rate per group at one threshold."""
    per_group = {}
    for g in d.groups:
        c = confusion_at(d, g, threshold)
        per_group[g] = RateSet(
            selection_rate=c.selection_rate,
            tpr=c.tpr,
            fpr=c.fpr,
            base_rate=c.positives / c.total,
            confusion=c,
        )
    return GroupRates(threshold=threshold, per_group=per_group)


def _gap(values: list[float]) -> float | None:
    if not values:
        return None
    return max(values) - min(values)


def group_metric_report(rates: GroupRates) -> GroupMetricReport:
    """Reduce per-group rates to the gap/ratio metrics.

    Gap metrics skip groups whose constituent rate is undefined; the
    disparate-impact ratio is undefined (None) when every group selects
    nobody, and an undefined ratio never passes the four-fifths rule.
    """
    if len(rates.per_group) < 2:
        raise ValueError("group metrics need at least 2 groups")
    selection = [r.selection_rate for r in rates.per_group.values() if r.selection_rate is not None]
    tprs = [r.tpr for r in rates.per_group.values() if r.tpr is not None]
    fprs = [r.fpr for r in rates.per_group.values() if r.fpr is not None]
    if len(selection) < 2:
        raise ValueError("group metrics need at least 2 groups with defined selection rates")

    max_sel = max(selection)
    di = (min(selection) / max_sel) if max_sel > 0 else None
    spd = max(selection) - min(selection)
    eo_gap = _gap(tprs)
    fpr_gap = _gap(fprs)
    if eo_gap is None and fpr_gap is None:
        odds_gap = None
    else:
        odds_gap = max(v for v in (eo_gap, fpr_gap) if v is not None)

    return GroupMetricReport(
        disparate_impact_ratio=di,
        statistical_parity_difference=spd,
        equal_opportunity_gap=eo_gap,
        equalized_odds_gap=odds_gap,
        passes_four_fifths=di is not None and di >= FOUR_FIFTHS,
    )
