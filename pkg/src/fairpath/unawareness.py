"""Unawareness support: sensitive-column sanitization and proxy detection.

Dropping the sensitive column is the minimal legal-compliance move, but
correlated features can leak group membership right back. The proxy scan
quantifies, per feature, how strongly it is associated with the sensitive
attribute: Cramér's V for categorical features, the correlation ratio for
numeric ones — both in [0, 1], both invariant under renaming categories.
A threshold flags likely proxies; what suffices beyond removal stays a
human judgment, so the scan reports and defers.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import sqrt

import numpy as np

from .dataset import KIND_NUMERIC, AuditDataset


def sanitize(d: AuditDataset) -> AuditDataset:
    """Copy of the dataset whose exports omit the sensitive column.

    The column is retained internally so audit metrics keep working;
    idempotent by construction.
    """
    if d.sanitized:
        return d
    return AuditDataset(
        schema=d.schema,
        scores=d.scores,
        labels=d.labels,
        group_codes=d.group_codes,
        groups=d.groups,
        feature_columns=d.feature_columns,
        fingerprint=d.fingerprint,
        sanitized=True,
    )


def cramers_v(codes_a: np.ndarray, codes_b: np.ndarray) -> float:
    """Cramér's V between two integer-coded categorical variables.

    Defined as 0 when either variable is constant (no association to
    measure); no small-sample bias correction is applied.
    """
    n = codes_a.shape[0]
    r = int(codes_a.max()) + 1
    c = int(codes_b.max()) + 1
    if r < 2 or c < 2:
        return 0.0
    observed = np.zeros((r, c), dtype=np.float64)
    np.add.at(observed, (codes_a, codes_b), 1.0)
    row = observed.sum(axis=1, keepdims=True)
    col = observed.sum(axis=0, keepdims=True)
    expected = row * col / n
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(expected > 0, (observed - expected) ** 2 / expected, 0.0)
    chi2 = float(terms.sum())
    v2 = chi2 / (n * min(r - 1, c - 1))
    return float(min(sqrt(max(v2, 0.0)), 1.0))


def correlation_ratio(values: np.ndarray, codes: np.ndarray) -> float:
    """Correlation ratio (eta) of a numeric variable against group codes.

    sqrt of the between-group share of total variance; 0 for a constant
    variable.
    """
    grand_mean = float(values.mean())
    ss_total = float(((values - grand_mean) ** 2).sum())
    if ss_total == 0.0:
        return 0.0
    ss_between = 0.0
    for code in np.unique(codes):
        grp = values[codes == code]
        ss_between += grp.shape[0] * (float(grp.mean()) - grand_mean) ** 2
    return float(min(sqrt(max(ss_between / ss_total, 0.0)), 1.0))


@dataclass(frozen=True)
class FeatureAssociation:
    feature: str
    association: float
    method: str  # "cramers_v" | "correlation_ratio"
    flagged: bool

    def to_json_dict(self) -> dict:
        return {
            "feature": self.feature,
            "association": self.association,
            "method": self.method,
            "flagged": self.flagged,
        }


@dataclass(frozen=True)
class ProxyReport:
    theta: float
    associations: tuple[FeatureAssociation, ...]
    name_warnings: tuple[str, ...] = ()

    @property
    def flagged(self) -> tuple[str, ...]:
        return tuple(a.feature for a in self.associations if a.flagged)

    def to_json_dict(self) -> dict:
        return {
            "theta": self.theta,
            "associations": [a.to_json_dict() for a in self.associations],
            "flagged": list(self.flagged),
            "name_warnings": list(self.name_warnings),
        }


def proxy_scan(
    d: AuditDataset,
    theta: float = 0.3,
    sensitive_attribute_names: tuple[str, ...] = (),
) -> ProxyReport:
    """Associate every feature with the sensitive attribute; flag >= theta.

    Numeric features use the correlation ratio directly, avoiding binning
    choices. ``sensitive_attribute_names`` adds a warning for feature
    columns whose name matches a commonly protected attribute without being
    marked sensitive.
    """
    sensitive_codes = d.group_codes.astype(np.int64)
    associations = []
    for col in d.feature_schema:
        values = d.feature_columns[col.name]
        if col.kind == KIND_NUMERIC:
            assoc = correlation_ratio(values.astype(np.float64), sensitive_codes)
            method = "correlation_ratio"
        else:
            _, codes = np.unique(values.astype(str), return_inverse=True)
            assoc = cramers_v(codes.astype(np.int64), sensitive_codes)
            method = "cramers_v"
        associations.append(
            FeatureAssociation(
                feature=col.name, association=assoc, method=method, flagged=assoc >= theta
            )
        )
    known = {name.lower() for name in sensitive_attribute_names}
    warnings = tuple(
        f"feature column '{c.name}' matches a commonly protected attribute name; "
        "confirm it is not itself a sensitive attribute"
        for c in d.feature_schema
        if c.name.lower() in known
    )
    return ProxyReport(theta=theta, associations=tuple(associations), name_warnings=warnings)
