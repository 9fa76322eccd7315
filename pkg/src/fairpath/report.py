"""Versioned audit report: single JSON source of truth, markdown rendered from it.

Sections that were not run appear as the literal string "not computed" so a
reader can tell "fine" apart from "never looked". Serialization is
byte-stable: parsing and re-serializing a report reproduces it exactly.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from datetime import datetime, timezone
from importlib import resources
from typing import Any

import jsonschema

from .config import AuditConfig
from .dataset import AuditDataset, schema_to_json_list
from .engine import DecisionTrace, Recommendation
from .group_metrics import GroupMetricReport, GroupRates
from .individual import ConsistencyReport, DistanceSpec
from .label_bias import LabelBiasReport, WeightVector
from .mitigation import ThresholdPolicy
from .quality import BalanceReport
from .unawareness import ProxyReport

REPORT_VERSION = "1"
NOT_COMPUTED = "not computed"


@dataclass(frozen=True)
class FairnessReport:
    data: dict

    def to_json(self) -> str:
        return serialize_report(self.data)


def _section(value: Any) -> Any:
    return NOT_COMPUTED if value is None else value


def build_report(
    dataset: AuditDataset,
    *,
    config: AuditConfig | None = None,
    balance: BalanceReport | None = None,
    proxies: ProxyReport | None = None,
    label_bias: LabelBiasReport | None = None,
    group_rates: GroupRates | None = None,
    group_metrics: GroupMetricReport | None = None,
    individual: ConsistencyReport | None = None,
    distance_spec: DistanceSpec | None = None,
    trace: DecisionTrace | None = None,
    recommendation: Recommendation | None = None,
    mitigation: ThresholdPolicy | None = None,
    reweighting: WeightVector | None = None,
    created_at: str | None = None,
) -> FairnessReport:
    """Assemble the versioned report from whatever was actually computed.

    At least one section must be present; everything else is marked
    "not computed" rather than silently dropped.
    """
    sections = (
        balance,
        proxies,
        label_bias,
        group_rates,
        group_metrics,
        individual,
        trace,
        recommendation,
        mitigation,
        reweighting,
    )
    if all(s is None for s in sections):
        raise ValueError("a report needs at least one computed section")
    config = config or AuditConfig()
    if created_at is None:
        created_at = datetime.now(timezone.utc).isoformat(timespec="seconds")

    if group_rates is not None or group_metrics is not None or individual is not None:
        metrics: Any = {
            "threshold": (
                group_rates.threshold
                if group_rates is not None and group_rates.threshold is not None
                else NOT_COMPUTED
            ),
            "group": _section(group_metrics.to_json_dict() if group_metrics else None),
            "rates": _section(group_rates.to_json_dict()["per_group"] if group_rates else None),
            "individual": _section(
                dict(
                    individual.to_json_dict(),
                    distance_spec=(distance_spec or DistanceSpec()).to_json_dict(dataset),
                )
                if individual
                else None
            ),
        }
    else:
        metrics = NOT_COMPUTED

    data = {
        "version": REPORT_VERSION,
        "created_at": created_at,
        "dataset": {
            "fingerprint": dataset.fingerprint,
            "rows": len(dataset),
            "groups": list(dataset.groups),
            "schema": schema_to_json_list(dataset.schema),
            "sanitized": dataset.sanitized,
        },
        "conventions": {
            "balance_ratio": config.balance_ratio,
            "min_cell": config.min_cell,
            "label_bias_delta": config.label_bias_delta,
            "proxy_theta": config.proxy_theta,
            "note": (
                "audited artifact is a prediction table; balance, bias and proxy "
                "thresholds are declared conventions, configurable and reported as such"
            ),
        },
        "balance": _section(balance.to_json_dict() if balance else None),
        "proxies": _section(proxies.to_json_dict() if proxies else None),
        "label_bias": _section(label_bias.to_json_dict() if label_bias else None),
        "metrics": metrics,
        "trace": _section(trace.to_json_list() if trace else None),
        "recommendation": _section(recommendation.to_json_dict() if recommendation else None),
        "mitigation": _section(mitigation.to_json_dict() if mitigation else None),
        "reweighting": _section(reweighting.to_json_dict() if reweighting else None),
    }
    return FairnessReport(data=data)


def serialize_report(data: dict) -> str:
    """Canonical serialization: insertion-ordered keys, 2-space indent, no NaN."""
    return json.dumps(data, indent=2, ensure_ascii=False, allow_nan=False) + "\n"


def parse_report(text: str) -> dict:
    return json.loads(text)


def report_schema() -> dict:
    raw = resources.files("fairpath.data").joinpath("fairness_report.schema.json").read_text(
        "utf-8"
    )
    return json.loads(raw)


def validate_report(data: dict) -> None:
    """Raises jsonschema.ValidationError when the report violates the shipped schema."""
    jsonschema.validate(instance=data, schema=report_schema())


def _fmt(value: Any) -> str:
    if value is None:
        return "undefined"
    if isinstance(value, bool):
        return "yes" if value else "no"
    if isinstance(value, float):
        return f"{value:.4f}"
    return str(value)


def render_markdown(data: dict) -> str:
    """Human-readable view generated from the JSON report (never the reverse)."""
    lines = [
        "# Fairness audit report",
        "",
        f"- version: {data['version']}",
        f"- created: {data['created_at']}",
        f"- dataset fingerprint: `{data['dataset']['fingerprint']}`",
        f"- rows: {data['dataset']['rows']}, groups: {', '.join(data['dataset']['groups'])}",
        "",
    ]

    balance = data["balance"]
    lines.append("## Data balance")
    if balance == NOT_COMPUTED:
        lines.append(NOT_COMPUTED)
    else:
        lines.append(
            f"- balanced: {_fmt(balance['balanced'])} "
            f"(imbalance ratio {_fmt(balance['imbalance_ratio'])}, "
            f"smallest cell {balance['min_cell']})"
        )
        lines.append("- group counts: " + ", ".join(
            f"{g}: {c}" for g, c in balance["group_counts"].items()
        ))
        for note in balance["notes"]:
            lines.append(f"- note: {note}")
    lines.append("")

    proxies = data["proxies"]
    lines.append("## Proxy scan")
    if proxies == NOT_COMPUTED:
        lines.append(NOT_COMPUTED)
    else:
        lines.append(f"- flag threshold: {_fmt(proxies['theta'])}")
        lines.append("")
        lines.append("| feature | association | method | flagged |")
        lines.append("|---|---|---|---|")
        for a in proxies["associations"]:
            lines.append(
                f"| {a['feature']} | {_fmt(a['association'])} | {a['method']} "
                f"| {_fmt(a['flagged'])} |"
            )
        for w in proxies["name_warnings"]:
            lines.append(f"- warning: {w}")
    lines.append("")

    bias = data["label_bias"]
    lines.append("## Label bias (equal-base-rates worldview)")
    if bias == NOT_COMPUTED:
        lines.append(NOT_COMPUTED)
    else:
        lines.append(
            f"- max base-rate gap: {_fmt(bias['max_base_rate_gap'])} "
            f"(threshold {_fmt(bias['delta'])}) → flagged: {_fmt(bias['flagged'])}"
        )
        lines.append("- base rates: " + ", ".join(
            f"{g}: {_fmt(r)}" for g, r in bias["base_rates"].items()
        ))
    lines.append("")

    metrics = data["metrics"]
    lines.append("## Metrics")
    if metrics == NOT_COMPUTED:
        lines.append(NOT_COMPUTED)
    else:
        lines.append(f"- decision threshold: {_fmt(metrics['threshold'])}")
        group = metrics["group"]
        if group != NOT_COMPUTED:
            lines.append(f"- disparate impact ratio: {_fmt(group['disparate_impact_ratio'])} "
                         f"(four-fifths rule passed: {_fmt(group['passes_four_fifths'])})")
            lines.append(
                f"- statistical parity difference: "
                f"{_fmt(group['statistical_parity_difference'])}"
            )
            lines.append(f"- equal opportunity gap: {_fmt(group['equal_opportunity_gap'])}")
            lines.append(f"- equalized odds gap: {_fmt(group['equalized_odds_gap'])}")
        individual = metrics["individual"]
        if individual != NOT_COMPUTED:
            lines.append(
                f"- consistency (k={individual['k']}): {_fmt(individual['consistency'])}"
            )
            if individual["worst_pairs"]:
                worst = individual["worst_pairs"][0]
                lines.append(
                    f"- largest neighbor score gap: rows {worst['i']}/{worst['j']} "
                    f"(distance {_fmt(worst['distance'])}, "
                    f"score gap {_fmt(worst['score_difference'])})"
                )
    lines.append("")

    trace = data["trace"]
    lines.append("## Decision trace")
    if trace == NOT_COMPUTED:
        lines.append(NOT_COMPUTED)
    else:
        for step in trace:
            lines.append(f"- {step['node']}: {step['answer']}")
    lines.append("")

    rec = data["recommendation"]
    lines.append("## Recommendation")
    if rec == NOT_COMPUTED:
        lines.append(NOT_COMPUTED)
    else:
        lines.append(f"- objective: **{rec['objective']}**")
        for action in rec["actions"]:
            lines.append(f"- action raised: {action}")
        for step in rec["next_steps"]:
            lines.append(f"- next: {step}")
        for warning in rec["warnings"]:
            lines.append(f"- warning: {warning}")
    lines.append("")

    mitigation = data["mitigation"]
    lines.append("## Mitigation")
    if mitigation == NOT_COMPUTED:
        lines.append(NOT_COMPUTED)
    else:
        lines.append(
            f"- objective: {mitigation['objective']}, expected utility "
            f"{_fmt(mitigation['utility'])}"
        )
        for g, gp in mitigation.items():
            if g in ("objective", "utility"):
                continue
            ach = gp["achieved"]
            lines.append(
                f"- {g}: achieved fpr {_fmt(ach['fpr'])}, tpr {_fmt(ach['tpr'])}, "
                f"{len(gp['components'])} threshold component(s)"
            )
    lines.append("")
    return "\n".join(lines)
