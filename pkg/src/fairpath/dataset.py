"""Audit-table loading, validation, partitioning and confusion counts.

The audited artifact is a prediction table: one row per scored individual
with its feature values, one categorical sensitive attribute, the observed
binary label and the model score in [0, 1]. Whether such a table comes from
training data or from model outputs is a judgment the toolbox leaves to the
auditor; everything downstream only assumes this shape.

Datasets are immutable after load, so all reads are thread-safe.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import IO, Iterable, Mapping, Sequence

import numpy as np

from .errors import DatasetValidationError, SchemaError, UnknownGroupError

ROLE_FEATURE = "feature"
ROLE_SENSITIVE = "sensitive"
ROLE_LABEL = "true-label"
ROLE_SCORE = "score"
ROLES = (ROLE_FEATURE, ROLE_SENSITIVE, ROLE_LABEL, ROLE_SCORE)

KIND_CATEGORICAL = "categorical"
KIND_NUMERIC = "numeric"
KINDS = (KIND_CATEGORICAL, KIND_NUMERIC)


@dataclass(frozen=True)
class ColumnRole:
    """Binds a CSV column name to its role and kind in the audit table."""

    name: str
    role: str
    kind: str

    def __post_init__(self):
        if self.role not in ROLES:
            raise SchemaError(f"column '{self.name}': unknown role '{self.role}'")
        if self.kind not in KINDS:
            raise SchemaError(f"column '{self.name}': unknown kind '{self.kind}'")


def validate_schema(schema: Sequence[ColumnRole]) -> tuple[ColumnRole, ...]:
    """Check the one-sensitive/one-label/one-score contract and kind constraints."""
    schema = tuple(schema)
    if not schema:
        raise SchemaError("schema has no columns")
    names = [c.name for c in schema]
    if len(set(names)) != len(names):
        dupes = sorted({n for n in names if names.count(n) > 1})
        raise SchemaError(f"duplicate column names in schema: {dupes}")
    for role in (ROLE_SENSITIVE, ROLE_LABEL, ROLE_SCORE):
        hits = [c for c in schema if c.role == role]
        if len(hits) != 1:
            raise SchemaError(f"schema must have exactly one '{role}' column, found {len(hits)}")
    sensitive = next(c for c in schema if c.role == ROLE_SENSITIVE)
    if sensitive.kind != KIND_CATEGORICAL:
        raise SchemaError(f"sensitive column '{sensitive.name}' must be categorical")
    score = next(c for c in schema if c.role == ROLE_SCORE)
    if score.kind != KIND_NUMERIC:
        raise SchemaError(f"score column '{score.name}' must be numeric")
    label = next(c for c in schema if c.role == ROLE_LABEL)
    if label.kind != KIND_CATEGORICAL:
        raise SchemaError(f"true-label column '{label.name}' must be categorical")
    return schema


def schema_from_json(source: str | bytes | Sequence[Mapping]) -> tuple[ColumnRole, ...]:
    """Parse the schema document: a JSON array of {name, role, kind}."""
    if isinstance(source, (str, bytes)):
        try:
            data = json.loads(source)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"schema is not valid JSON: {exc}") from exc
    else:
        data = source
    if not isinstance(data, list):
        raise SchemaError("schema document must be a JSON array of {name, role, kind}")
    columns = []
    for i, entry in enumerate(data):
        if not isinstance(entry, Mapping):
            raise SchemaError(f"schema entry {i} is not an object")
        missing = {"name", "role", "kind"} - set(entry)
        if missing:
            raise SchemaError(f"schema entry {i} lacks keys: {sorted(missing)}")
        columns.append(ColumnRole(str(entry["name"]), str(entry["role"]), str(entry["kind"])))
    return validate_schema(columns)


def schema_to_json_list(schema: Sequence[ColumnRole]) -> list[dict]:
    return [{"name": c.name, "role": c.role, "kind": c.kind} for c in schema]


@dataclass(frozen=True)
class ConfusionTable:
    """Counts of a binary decision against the true labels."""

    tp: int
    fp: int
    tn: int
    fn: int

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn

    @property
    def positives(self) -> int:
        return self.tp + self.fn

    @property
    def negatives(self) -> int:
        return self.fp + self.tn

    @property
    def tpr(self) -> float | None:
        """True positive rate; None when the slice has no actual positives."""
        return self.tp / self.positives if self.positives else None

    @property
    def fpr(self) -> float | None:
        """False positive rate; None when the slice has no actual negatives."""
        return self.fp / self.negatives if self.negatives else None

    @property
    def selection_rate(self) -> float | None:
        """Fraction predicted positive; None only for an empty slice."""
        return (self.tp + self.fp) / self.total if self.total else None

    @property
    def accuracy(self) -> float | None:
        return (self.tp + self.tn) / self.total if self.total else None

    def __add__(self, other: "ConfusionTable") -> "ConfusionTable":
        return ConfusionTable(
            self.tp + other.tp, self.fp + other.fp, self.tn + other.tn, self.fn + other.fn
        )


class AuditDataset:
    """Validated, immutable prediction table.

    Internally columns live as NumPy arrays; the sensitive attribute is
    integer-coded against the sorted list of distinct group names. A
    ``sanitized`` dataset keeps the sensitive column for audit metrics but
    excludes it from any export.
    """

    __slots__ = (
        "schema",
        "scores",
        "labels",
        "group_codes",
        "groups",
        "feature_columns",
        "fingerprint",
        "sanitized",
    )

    def __init__(
        self,
        schema: Sequence[ColumnRole],
        scores: np.ndarray,
        labels: np.ndarray,
        group_codes: np.ndarray,
        groups: Sequence[str],
        feature_columns: Mapping[str, np.ndarray],
        fingerprint: str,
        sanitized: bool = False,
    ):
        self.schema = validate_schema(schema)
        self.scores = scores
        self.labels = labels
        self.group_codes = group_codes
        self.groups = tuple(groups)
        self.feature_columns = dict(feature_columns)
        self.fingerprint = fingerprint
        self.sanitized = sanitized
        for arr in (self.scores, self.labels, self.group_codes):
            arr.setflags(write=False)
        for arr in self.feature_columns.values():
            arr.setflags(write=False)
        if len(self.groups) < 2:
            raise DatasetValidationError("fewer than 2 groups in sensitive column")

    def __len__(self) -> int:
        return int(self.scores.shape[0])

    @property
    def n_rows(self) -> int:
        return len(self)

    @property
    def sensitive_column(self) -> str:
        return next(c.name for c in self.schema if c.role == ROLE_SENSITIVE)

    @property
    def score_column(self) -> str:
        return next(c.name for c in self.schema if c.role == ROLE_SCORE)

    @property
    def label_column(self) -> str:
        return next(c.name for c in self.schema if c.role == ROLE_LABEL)

    @property
    def feature_schema(self) -> tuple[ColumnRole, ...]:
        return tuple(c for c in self.schema if c.role == ROLE_FEATURE)

    def group_of(self, row: int) -> str:
        return self.groups[int(self.group_codes[row])]

    def group_values(self) -> np.ndarray:
        """Sensitive attribute as an array of group-name strings."""
        return np.asarray(self.groups, dtype=object)[self.group_codes]

    def group_mask(self, group: str | None) -> np.ndarray:
        """Boolean row mask for one group, or all rows for None."""
        if group is None:
            return np.ones(len(self), dtype=bool)
        if group not in self.groups:
            raise UnknownGroupError(f"unknown group '{group}'")
        return self.group_codes == self.groups.index(group)

    def with_rows(self, indices: Sequence[int], fingerprint_note: str) -> "AuditDataset":
        """Derived dataset restricted to the given row indices (order preserved)."""
        idx = np.asarray(indices, dtype=np.int64)
        codes = self.group_codes[idx]
        present = sorted(set(int(c) for c in codes))
        new_groups = tuple(self.groups[c] for c in present)
        remap = {old: new for new, old in enumerate(present)}
        new_codes = np.array([remap[int(c)] for c in codes], dtype=np.int32)
        digest = hashlib.sha256(
            (self.fingerprint + "|" + fingerprint_note + "|" + ",".join(map(str, idx.tolist())))
            .encode("utf-8")
        ).hexdigest()
        return AuditDataset(
            schema=self.schema,
            scores=self.scores[idx].copy(),
            labels=self.labels[idx].copy(),
            group_codes=new_codes,
            groups=new_groups,
            feature_columns={n: col[idx].copy() for n, col in self.feature_columns.items()},
            fingerprint=digest,
            sanitized=self.sanitized,
        )

    def cell_value(self, row: int, column: ColumnRole):
        if column.role == ROLE_SCORE:
            return float(self.scores[row])
        if column.role == ROLE_LABEL:
            return int(self.labels[row])
        if column.role == ROLE_SENSITIVE:
            return self.group_of(row)
        value = self.feature_columns[column.name][row]
        return float(value) if column.kind == KIND_NUMERIC else str(value)


def _decode_source(csv_source) -> str:
    if isinstance(csv_source, (str, Path)) and isinstance(csv_source, Path):
        return csv_source.read_text("utf-8")
    if isinstance(csv_source, str):
        return csv_source
    if isinstance(csv_source, bytes):
        return csv_source.decode("utf-8")
    data = csv_source.read()
    if isinstance(data, bytes):
        return data.decode("utf-8")
    return data


def _render_cell(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def load_dataset(
    csv_source: bytes | str | Path | IO, schema: Sequence[ColumnRole]
) -> AuditDataset:
    """Parse and validate a CSV byte stream against the schema.

    The first CSV line must be a header covering every schema name (extra
    columns are ignored). Validation is fail-fast: the first offending cell
    raises a DatasetValidationError carrying its line number and column.
    Missing values are rejected, never imputed — silent imputation is itself
    a bias source this tool refuses to introduce.
    """
    schema = validate_schema(schema)
    text = _decode_source(csv_source)
    fingerprint = hashlib.sha256(
        text.encode("utf-8") + b"\x00" + json.dumps(schema_to_json_list(schema)).encode("utf-8")
    ).hexdigest()

    reader = csv.reader(io.StringIO(text, newline=""))
    try:
        header = next(reader)
    except StopIteration:
        raise DatasetValidationError("CSV is empty: no header row") from None
    positions = {}
    for col in schema:
        if col.name not in header:
            raise DatasetValidationError("missing column", row=1, column=col.name)
        positions[col.name] = header.index(col.name)

    sensitive_col = next(c for c in schema if c.role == ROLE_SENSITIVE)
    label_col = next(c for c in schema if c.role == ROLE_LABEL)
    score_col = next(c for c in schema if c.role == ROLE_SCORE)
    feature_cols = [c for c in schema if c.role == ROLE_FEATURE]

    scores: list[float] = []
    labels: list[int] = []
    group_names: list[str] = []
    features: dict[str, list] = {c.name: [] for c in feature_cols}

    for line_no, record in enumerate(reader, start=2):
        if len(record) != len(header):
            raise DatasetValidationError(
                f"expected {len(header)} cells, found {len(record)}", row=line_no
            )
        cells = {name: record[pos] for name, pos in positions.items()}
        for col in schema:
            if cells[col.name].strip() == "":
                raise DatasetValidationError("missing value", row=line_no, column=col.name)

        raw_score = cells[score_col.name].strip()
        try:
            score = float(raw_score)
        except ValueError:
            raise DatasetValidationError(
                f"non-numeric score '{raw_score}'", row=line_no, column=score_col.name
            ) from None
        if not math.isfinite(score) or not 0.0 <= score <= 1.0:
            raise DatasetValidationError(
                f"score out of range [0, 1]: {raw_score}", row=line_no, column=score_col.name
            )
        scores.append(score)

        raw_label = cells[label_col.name].strip()
        if raw_label not in ("0", "1"):
            raise DatasetValidationError(
                f"label not in {{0, 1}}: '{raw_label}'", row=line_no, column=label_col.name
            )
        labels.append(int(raw_label))

        group_names.append(cells[sensitive_col.name].strip())

        for col in feature_cols:
            raw = cells[col.name].strip()
            if col.kind == KIND_NUMERIC:
                try:
                    value = float(raw)
                except ValueError:
                    raise DatasetValidationError(
                        f"non-numeric value '{raw}'", row=line_no, column=col.name
                    ) from None
                if not math.isfinite(value):
                    raise DatasetValidationError(
                        f"non-finite value '{raw}'", row=line_no, column=col.name
                    )
                features[col.name].append(value)
            else:
                features[col.name].append(raw)

    if not scores:
        raise DatasetValidationError("CSV has a header but no data rows")

    groups = tuple(sorted(set(group_names)))
    if len(groups) < 2:
        raise DatasetValidationError(
            f"fewer than 2 groups in sensitive column '{sensitive_col.name}' "
            f"(found {sorted(set(group_names))})"
        )
    code_of = {g: i for i, g in enumerate(groups)}
    group_codes = np.array([code_of[g] for g in group_names], dtype=np.int32)

    feature_arrays: dict[str, np.ndarray] = {}
    for col in feature_cols:
        if col.kind == KIND_NUMERIC:
            feature_arrays[col.name] = np.array(features[col.name], dtype=np.float64)
        else:
            feature_arrays[col.name] = np.array(features[col.name], dtype=object)

    return AuditDataset(
        schema=schema,
        scores=np.array(scores, dtype=np.float64),
        labels=np.array(labels, dtype=np.int8),
        group_codes=group_codes,
        groups=groups,
        feature_columns=feature_arrays,
        fingerprint=fingerprint,
    )


def partition_by_group(d: AuditDataset) -> dict[str, list[int]]:
    """Row indices per group; lists are disjoint and cover every row."""
    out: dict[str, list[int]] = {g: [] for g in d.groups}
    for i, code in enumerate(d.group_codes):
        out[d.groups[int(code)]].append(i)
    return out


def confusion_at(d: AuditDataset, group: str | None, threshold: float) -> ConfusionTable:
    """Confusion counts for one group (or all rows) at a decision threshold.

    A row is predicted positive iff its score is >= threshold, so threshold 0
    predicts everything positive.
    """
    mask = d.group_mask(group)
    predicted = d.scores[mask] >= threshold
    actual = d.labels[mask] == 1
    tp = int(np.count_nonzero(predicted & actual))
    fp = int(np.count_nonzero(predicted & ~actual))
    fn = int(np.count_nonzero(~predicted & actual))
    tn = int(np.count_nonzero(~predicted & ~actual))
    return ConfusionTable(tp=tp, fp=fp, tn=tn, fn=fn)


def export_csv(d: AuditDataset, extra_columns: Mapping[str, Iterable] | None = None) -> str:
    """Render the dataset back to CSV text in schema column order.

    Numeric cells are re-rendered in canonical float repr. A sanitized
    dataset is exported without its sensitive column. ``extra_columns``
    appends named columns (e.g. per-row weights) after the schema columns.
    """
    columns = [c for c in d.schema if not (d.sanitized and c.role == ROLE_SENSITIVE)]
    extras = {name: list(values) for name, values in (extra_columns or {}).items()}
    for name, values in extras.items():
        if len(values) != len(d):
            raise ValueError(f"extra column '{name}' has {len(values)} values for {len(d)} rows")
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow([c.name for c in columns] + list(extras))
    for i in range(len(d)):
        row = [_render_cell(d.cell_value(i, c)) for c in columns]
        row.extend(_render_cell(extras[name][i]) for name in extras)
        writer.writerow(row)
    return buf.getvalue()
