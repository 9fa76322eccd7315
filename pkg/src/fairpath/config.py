"""Audit configuration: thresholds for the diagnostics and their file/flag plumbing.

Every knob here is a declared convention, not something the underlying
methodology prescribes; reports flag them as such. Config files are JSON
objects whose keys match the CLI flag names (``balance-ratio``, ``min-cell``,
``delta``, ``proxy-theta``, ``knn``, ``threshold``, ``row-cap``,
``max-rebalance-rounds``, ``sensitive-attribute-names``).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path

from .errors import FairpathError


def default_sensitive_attribute_names() -> tuple[str, ...]:
    """Protected-attribute names shipped with the package (editable via config)."""
    raw = resources.files("fairpath.data").joinpath("sensitive_attributes.json").read_text("utf-8")
    return tuple(json.loads(raw)["names"])


_KEY_MAP = {
    "balance-ratio": "balance_ratio",
    "min-cell": "min_cell",
    "delta": "label_bias_delta",
    "proxy-theta": "proxy_theta",
    "knn": "knn",
    "threshold": "threshold",
    "row-cap": "row_cap",
    "max-rebalance-rounds": "max_rebalance_rounds",
    "sensitive-attribute-names": "sensitive_attribute_names",
}


@dataclass(frozen=True)
class AuditConfig:
    """Tunable diagnostic thresholds with their documented defaults.

    balance_ratio: minimum min/max group-count ratio to call a dataset balanced
        (0.8 mirrors the four-fifths convention).
    min_cell: minimum rows required in every (group, label) cell (30 is a
        conventional minimum cell size).
    label_bias_delta: base-rate gap above which the label-bias diagnostic flags.
    proxy_theta: association at or above which a feature is flagged as a proxy.
    knn: neighbor count for the individual-fairness consistency score.
    threshold: default decision threshold for metric snapshots.
    row_cap: refusal cap for the all-pairs distance computation.
    max_rebalance_rounds: data-quality loop bound before an explicit override
        is required.
    """

    balance_ratio: float = 0.8
    min_cell: int = 30
    label_bias_delta: float = 0.05
    proxy_theta: float = 0.3
    knn: int = 5
    threshold: float = 0.5
    row_cap: int = 20_000
    max_rebalance_rounds: int = 3
    sensitive_attribute_names: tuple[str, ...] = field(
        default_factory=default_sensitive_attribute_names
    )

    def validate(self) -> "AuditConfig":
        if not 0.0 < self.balance_ratio <= 1.0:
            raise FairpathError("balance-ratio must be in (0, 1]")
        if self.min_cell < 1:
            raise FairpathError("min-cell must be a positive integer")
        if not 0.0 <= self.label_bias_delta <= 1.0:
            raise FairpathError("delta must be in [0, 1]")
        if not 0.0 <= self.proxy_theta <= 1.0:
            raise FairpathError("proxy-theta must be in [0, 1]")
        if self.knn < 1:
            raise FairpathError("knn must be a positive integer")
        if not 0.0 <= self.threshold <= 1.0:
            raise FairpathError("threshold must be in [0, 1]")
        return self


def load_config(path: str | Path | None = None, **overrides) -> AuditConfig:
    """Build an AuditConfig from an optional JSON file plus keyword overrides.

    Overrides use the Python field names and win over file keys; None
    overrides are ignored so CLI flags can pass through unset options.
    """
    cfg = AuditConfig()
    if path is not None:
        try:
            data = json.loads(Path(path).read_text("utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise FairpathError(f"cannot read config file {path}: {exc}") from exc
        if not isinstance(data, dict):
            raise FairpathError(f"config file {path} must hold a JSON object")
        fields = {}
        for key, value in data.items():
            if key not in _KEY_MAP:
                raise FairpathError(f"unknown config key '{key}'")
            if key == "sensitive-attribute-names":
                value = tuple(str(v) for v in value)
            fields[_KEY_MAP[key]] = value
        cfg = replace(cfg, **fields)
    real = {k: v for k, v in overrides.items() if v is not None}
    if real:
        cfg = replace(cfg, **real)
    return cfg.validate()
