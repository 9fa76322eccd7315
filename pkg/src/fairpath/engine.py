"""The fairness-objective decision flowchart as an auditable state machine.

Six decision points route an audit to one of five fairness objectives.
The whole edge structure lives in one declarative table (``TRANSITIONS``)
so a conformance test can compare it literally against a hand-written
truth table of every terminal path.

Two decision points are backed by diagnostics (data quality, label bias)
and get suggested answers with numeric rationales. The rest — objective
level, worldview, policy, error cost — are value judgments the tool never
suggests: committing to them is exactly the stakeholders' job.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from enum import Enum

from .config import AuditConfig
from .dataset import AuditDataset
from .errors import FairpathError, NonTerminalTraceError, RebalanceLoopError
from .label_bias import detect_label_bias
from .quality import assess_balance

logger = logging.getLogger(__name__)


class Node(str, Enum):
    DATA_QUALITY = "DataQuality"
    OBJECTIVE = "Objective"
    WORLDVIEW = "Worldview"
    LABEL_BIAS = "LabelBias"
    POLICY = "Policy"
    ERROR_COST = "ErrorCost"


class FairnessObjective(str, Enum):
    UNAWARENESS = "Unawareness"
    INDIVIDUAL_FAIRNESS = "IndividualFairness"
    DISPARATE_IMPACT = "DisparateImpact"
    EQUALIZED_ODDS = "EqualizedOdds"
    EQUALIZED_OPPORTUNITIES = "EqualizedOpportunities"


class Action(str, Enum):
    COLLECT_OR_BALANCE = "CollectOrBalanceData"
    CONSIDER_LABEL_CORRECTION = "ConsiderLabelCorrection"


ACTION_LABELS = {
    Action.COLLECT_OR_BALANCE: "Collect more data or balance data set",
    Action.CONSIDER_LABEL_CORRECTION: "Consider framework for label correction",
}


@dataclass(frozen=True)
class Transition:
    next_node: Node | None = None
    terminal: FairnessObjective | None = None
    action: Action | None = None


START_NODE = Node.DATA_QUALITY

ANSWER_DOMAINS: dict[Node, tuple[str, ...]] = {
    Node.DATA_QUALITY: ("balanced", "imbalanced"),
    Node.OBJECTIVE: ("minimal-legal-compliance", "higher-standards"),
    Node.WORLDVIEW: ("WYSIWYG", "WAE"),
    Node.LABEL_BIAS: ("yes", "no"),
    Node.POLICY: ("affirmative-action", "none"),
    Node.ERROR_COST: ("high", "low"),
}

TRANSITIONS: dict[Node, dict[str, Transition]] = {
    Node.DATA_QUALITY: {
        "imbalanced": Transition(next_node=Node.DATA_QUALITY, action=Action.COLLECT_OR_BALANCE),
        "balanced": Transition(next_node=Node.OBJECTIVE),
    },
    Node.OBJECTIVE: {
        "minimal-legal-compliance": Transition(terminal=FairnessObjective.UNAWARENESS),
        "higher-standards": Transition(next_node=Node.WORLDVIEW),
    },
    Node.WORLDVIEW: {
        "WYSIWYG": Transition(terminal=FairnessObjective.INDIVIDUAL_FAIRNESS),
        "WAE": Transition(next_node=Node.LABEL_BIAS),
    },
    Node.LABEL_BIAS: {
        "yes": Transition(next_node=Node.POLICY, action=Action.CONSIDER_LABEL_CORRECTION),
        "no": Transition(next_node=Node.POLICY),
    },
    Node.POLICY: {
        "affirmative-action": Transition(terminal=FairnessObjective.DISPARATE_IMPACT),
        "none": Transition(next_node=Node.ERROR_COST),
    },
    Node.ERROR_COST: {
        "high": Transition(terminal=FairnessObjective.EQUALIZED_ODDS),
        "low": Transition(terminal=FairnessObjective.EQUALIZED_OPPORTUNITIES),
    },
}


@dataclass(frozen=True)
class DecisionTrace:
    """Immutable sequence of (node, answer) pairs walked through the flowchart.

    ``answer`` returns a new trace; nothing is mutated, so traces can be
    shared across threads and wizard sessions freely.
    """

    steps: tuple[tuple[Node, str], ...] = ()
    max_rebalance_rounds: int = 3
    warnings: tuple[str, ...] = field(default=())

    def answer(self, node: Node, answer: str) -> "DecisionTrace":
        current = next_node(self)
        if isinstance(current, FairnessObjective):
            raise FairpathError(f"trace already terminal at {current.value}")
        if node != current:
            raise FairpathError(f"expected an answer for {current.value}, got {node.value}")
        if answer not in ANSWER_DOMAINS[node]:
            raise FairpathError(
                f"'{answer}' is not a valid answer for {node.value}; "
                f"choose one of {list(ANSWER_DOMAINS[node])}"
            )
        warnings = self.warnings
        if node == Node.DATA_QUALITY:
            rounds = sum(
                1 for n, a in self.steps if n == Node.DATA_QUALITY and a == "imbalanced"
            )
            if answer == "imbalanced" and rounds >= self.max_rebalance_rounds:
                raise RebalanceLoopError(
                    f"data-quality loop answered 'imbalanced' {rounds} times "
                    f"(limit {self.max_rebalance_rounds}); rebalance the data or "
                    "explicitly answer 'balanced' to override and proceed"
                )
            if answer == "balanced" and rounds >= self.max_rebalance_rounds:
                message = (
                    f"proceeded after {rounds} rebalance rounds on an explicit "
                    "'balanced' override"
                )
                logger.warning(message)
                warnings = warnings + (message,)
        return replace(self, steps=self.steps + ((node, answer),), warnings=warnings)

    @property
    def actions(self) -> tuple[Action, ...]:
        out = []
        for node, ans in self.steps:
            action = TRANSITIONS[node][ans].action
            if action is not None:
                out.append(action)
        return tuple(out)

    @property
    def terminal(self) -> FairnessObjective | None:
        result = next_node(self)
        return result if isinstance(result, FairnessObjective) else None

    def to_json_list(self) -> list[dict]:
        return [{"node": n.value, "answer": a} for n, a in self.steps]

    @classmethod
    def from_json_list(
        cls, data: list[dict], max_rebalance_rounds: int = 3
    ) -> "DecisionTrace":
        trace = cls(max_rebalance_rounds=max_rebalance_rounds)
        for entry in data:
            trace = trace.answer(Node(entry["node"]), entry["answer"])
        return trace


def next_node(t: DecisionTrace) -> Node | FairnessObjective:
    """Current decision point of a trace, or its terminal objective."""
    current: Node | FairnessObjective = START_NODE
    for node, ans in t.steps:
        if isinstance(current, FairnessObjective):
            raise FairpathError("trace continues past a terminal objective")
        if node != current:
            raise FairpathError(f"trace out of order: expected {current.value}, got {node.value}")
        transition = TRANSITIONS[node].get(ans)
        if transition is None:
            raise FairpathError(f"'{ans}' is not a valid answer for {node.value}")
        current = transition.terminal if transition.terminal is not None else transition.next_node
    return current


@dataclass(frozen=True)
class Suggestion:
    answer: str
    rationale: str

    def to_json_dict(self) -> dict:
        return {"answer": self.answer, "rationale": self.rationale}


def suggest_answers(d: AuditDataset, config: AuditConfig | None = None) -> dict[Node, Suggestion]:
    """Diagnostic-backed answer suggestions for the two data-driven nodes.

    Objective, Worldview, Policy and ErrorCost never appear here: the tool
    has no standing to suggest value judgments.
    """
    config = config or AuditConfig()
    balance = assess_balance(d, config.balance_ratio, config.min_cell)
    bias = detect_label_bias(d, config.label_bias_delta)
    return {
        Node.DATA_QUALITY: Suggestion(
            answer="balanced" if balance.balanced else "imbalanced",
            rationale=(
                f"imbalance ratio {balance.imbalance_ratio:.4f} "
                f"(floor {config.balance_ratio:g}), smallest (group, label) cell "
                f"{balance.min_cell} (floor {config.min_cell})"
            ),
        ),
        Node.LABEL_BIAS: Suggestion(
            answer="yes" if bias.flagged else "no",
            rationale=(
                f"max base-rate gap {bias.max_base_rate_gap:.4f} across groups "
                f"(threshold {config.label_bias_delta:g}, meaningful only under "
                "the equal-base-rates worldview)"
            ),
        ),
    }


NEXT_STEPS: dict[FairnessObjective, tuple[str, ...]] = {
    FairnessObjective.UNAWARENESS: (
        "export a sanitized copy without the sensitive column (sanitize)",
        "scan the remaining features for proxies of the sensitive attribute "
        "(proxy_scan); removal alone can be defeated by correlated features",
    ),
    FairnessObjective.INDIVIDUAL_FAIRNESS: (
        "compute the kNN consistency score and review its worst pairs (consistency)",
        "review the distance specification with stakeholders; adequacy is their call",
    ),
    FairnessObjective.DISPARATE_IMPACT: (
        "compute selection-rate metrics and the four-fifths check (group_rates, "
        "group_metric_report)",
        "explore per-group thresholds with the what-if endpoint to close the "
        "selection-rate gap",
    ),
    FairnessObjective.EQUALIZED_ODDS: (
        "fit per-group randomized thresholds equalizing TPR and FPR (fit_equalized_odds)",
        "apply the fitted policy to decisions (apply_policy)",
    ),
    FairnessObjective.EQUALIZED_OPPORTUNITIES: (
        "fit per-group randomized thresholds equalizing TPR (fit_equal_opportunity)",
        "apply the fitted policy to decisions (apply_policy)",
    ),
}


@dataclass(frozen=True)
class Recommendation:
    objective: FairnessObjective
    actions: tuple[Action, ...]
    required_next_steps: tuple[str, ...]
    warnings: tuple[str, ...]

    def to_json_dict(self) -> dict:
        return {
            "objective": self.objective.value,
            "actions": [a.value for a in self.actions],
            "next_steps": list(self.required_next_steps),
            "warnings": list(self.warnings),
        }


def recommend(t: DecisionTrace) -> Recommendation:
    """Terminal objective plus the concrete module runs it calls for."""
    terminal = t.terminal
    if terminal is None:
        pending = next_node(t)
        raise NonTerminalTraceError(
            f"trace has not reached an objective yet; next decision point is {pending.value}"
        )
    warnings = t.warnings
    if terminal is FairnessObjective.UNAWARENESS:
        warnings = warnings + (
            "omitting the sensitive column may not suffice: run the proxy scan "
            "and review flagged features",
        )
    return Recommendation(
        objective=terminal,
        actions=t.actions,
        required_next_steps=NEXT_STEPS[terminal],
        warnings=warnings,
    )
