"""fairpath: pick a fairness objective you can defend, then measure and enforce it.

The toolbox audits an existing prediction table (features, one sensitive
attribute, binary labels, scores), walks stakeholders through the decision
flowchart that selects a fairness objective, computes the matching metrics,
and offers two mitigations: label reweighting and per-group randomized
threshold post-processing. See README.md for the tour.
"""

from .config import AuditConfig, load_config
from .dataset import (
    AuditDataset,
    ColumnRole,
    ConfusionTable,
    confusion_at,
    export_csv,
    load_dataset,
    partition_by_group,
    schema_from_json,
)
from .engine import (
    ACTION_LABELS,
    ANSWER_DOMAINS,
    Action,
    DecisionTrace,
    FairnessObjective,
    Node,
    Recommendation,
    Suggestion,
    next_node,
    recommend,
    suggest_answers,
)
from .errors import (
    DatasetValidationError,
    DegenerateGroupError,
    FairpathError,
    NoFeasiblePointError,
    NonTerminalTraceError,
    RebalanceLoopError,
    SchemaError,
    UnknownGroupError,
)
from .group_metrics import GroupMetricReport, GroupRates, group_metric_report, group_rates
from .individual import ConsistencyReport, DistanceSpec, consistency, pairwise_distance
from .label_bias import (
    LabelBiasReport,
    WeightVector,
    detect_label_bias,
    reweigh_labels,
    weights_csv,
)
from .mitigation import (
    GroupPolicy,
    PolicyComponent,
    ThresholdPolicy,
    UtilitySpec,
    apply_policy,
    fit_equal_opportunity,
    fit_equalized_odds,
    two_point_policy,
)
from .quality import BalanceReport, assess_balance, rebalance_by_downsampling
from .report import (
    FairnessReport,
    build_report,
    parse_report,
    render_markdown,
    serialize_report,
    validate_report,
)
from .roc import NEVER_THRESHOLD, RocCurve, roc
from .unawareness import ProxyReport, cramers_v, correlation_ratio, proxy_scan, sanitize

__version__ = "0.1.0"

__all__ = [
    "ACTION_LABELS",
    "ANSWER_DOMAINS",
    "Action",
    "AuditConfig",
    "AuditDataset",
    "BalanceReport",
    "ColumnRole",
    "ConfusionTable",
    "ConsistencyReport",
    "DatasetValidationError",
    "DecisionTrace",
    "DegenerateGroupError",
    "DistanceSpec",
    "FairnessObjective",
    "FairnessReport",
    "FairpathError",
    "GroupMetricReport",
    "GroupPolicy",
    "GroupRates",
    "LabelBiasReport",
    "NEVER_THRESHOLD",
    "NoFeasiblePointError",
    "Node",
    "NonTerminalTraceError",
    "PolicyComponent",
    "ProxyReport",
    "RebalanceLoopError",
    "Recommendation",
    "RocCurve",
    "SchemaError",
    "Suggestion",
    "ThresholdPolicy",
    "UnknownGroupError",
    "UtilitySpec",
    "WeightVector",
    "apply_policy",
    "assess_balance",
    "build_report",
    "confusion_at",
    "consistency",
    "correlation_ratio",
    "cramers_v",
    "detect_label_bias",
    "export_csv",
    "fit_equal_opportunity",
    "fit_equalized_odds",
    "group_metric_report",
    "group_rates",
    "load_config",
    "load_dataset",
    "next_node",
    "pairwise_distance",
    "parse_report",
    "partition_by_group",
    "proxy_scan",
    "rebalance_by_downsampling",
    "recommend",
    "render_markdown",
    "reweigh_labels",
    "roc",
    "sanitize",
    "schema_from_json",
    "serialize_report",
    "suggest_answers",
    "two_point_policy",
    "validate_report",
    "weights_csv",
]
