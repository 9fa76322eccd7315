"""Command-line entry points.

Exit codes: 0 success, 2 input/validation problems (bad CSV, bad schema,
bad flags), 3 unexpected internal errors. Validation messages carry the
offending CSV line and column where known.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from . import report as report_mod
from .config import AuditConfig, load_config
from .dataset import export_csv, load_dataset, schema_from_json
from .engine import (
    ACTION_LABELS,
    ANSWER_DOMAINS,
    TRANSITIONS,
    DecisionTrace,
    FairnessObjective,
    next_node,
    recommend,
    suggest_answers,
)
from .errors import FairpathError, RebalanceLoopError
from .group_metrics import group_metric_report, group_rates
from .individual import DistanceSpec, consistency
from .label_bias import detect_label_bias, reweigh_labels, weights_csv
from .mitigation import UtilitySpec, apply_policy, fit_equal_opportunity, fit_equalized_odds
from .quality import assess_balance, rebalance_by_downsampling
from .unawareness import proxy_scan, sanitize

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_INTERNAL = 3


def _fail_validation(message: str):
    click.echo(f"error: {message}", err=True)
    sys.exit(EXIT_VALIDATION)


def _guard(func):
    """Map exceptions to the documented exit codes."""

    def wrapper(*args, **kwargs):
        try:
            return func(*args, **kwargs)
        except click.ClickException:
            raise
        except click.Abort:
            raise
        except (FairpathError, OSError, json.JSONDecodeError) as exc:
            _fail_validation(str(exc))
        except SystemExit:
            raise
        except Exception as exc:  # pragma: no cover - exercised via error-path tests
            click.echo(f"internal error: {exc!r}", err=True)
            sys.exit(EXIT_INTERNAL)

    wrapper.__name__ = func.__name__
    wrapper.__doc__ = func.__doc__
    return wrapper


def _load(data_path: str, schema_path: str):
    schema = schema_from_json(Path(schema_path).read_text("utf-8"))
    return load_dataset(Path(data_path).read_bytes(), schema)


def _config_from_flags(config_path, **flags) -> AuditConfig:
    return load_config(config_path, **flags)


shared_options = [
    click.option("--schema", "schema_path", required=True, type=click.Path(exists=True),
                 help="JSON schema document: array of {name, role, kind}."),
    click.option("--config", "config_path", type=click.Path(exists=True), default=None,
                 help="JSON config file with flag-named keys (balance-ratio, min-cell, ...)."),
    click.option("--balance-ratio", type=float, default=None,
                 help="Minimum min/max group-count ratio considered balanced (default 0.8)."),
    click.option("--min-cell", type=int, default=None,
                 help="Minimum rows per (group, label) cell (default 30)."),
    click.option("--delta", type=float, default=None,
                 help="Base-rate gap above which label bias is flagged (default 0.05)."),
    click.option("--proxy-theta", type=float, default=None,
                 help="Association at/above which a feature counts as a proxy (default 0.3)."),
]


def _apply_options(options):
    def decorate(func):
        for option in reversed(options):
            func = option(func)
        return func

    return decorate


@click.group()
@click.version_option()
def main():
    """Fairness-objective selection and audit toolbox."""


@main.command()
@click.argument("data_path", type=click.Path(exists=True))
@_apply_options(shared_options)
@click.option("--out", "-o", "out_path", required=True, type=click.Path(),
              help="Report output path.")
@click.option("--format", "fmt", type=click.Choice(["json", "markdown"]), default="json")
@click.option("--threshold", type=float, default=None,
              help="Decision threshold for the metric snapshot (default 0.5).")
@click.option("--knn", type=int, default=None,
              help="Neighbor count for the consistency score (default 5).")
@click.option("--no-individual", is_flag=True,
              help="Skip the O(n^2) individual-fairness pass.")
@_guard
def audit(data_path, schema_path, config_path, balance_ratio, min_cell, delta, proxy_theta,
          out_path, fmt, threshold, knn, no_individual):
    """Run diagnostics and metrics, write the audit report."""
    cfg = _config_from_flags(
        config_path,
        balance_ratio=balance_ratio,
        min_cell=min_cell,
        label_bias_delta=delta,
        proxy_theta=proxy_theta,
        threshold=threshold,
        knn=knn,
    )
    d = _load(data_path, schema_path)
    balance = assess_balance(d, cfg.balance_ratio, cfg.min_cell)
    proxies = proxy_scan(d, cfg.proxy_theta, cfg.sensitive_attribute_names)
    bias = detect_label_bias(d, cfg.label_bias_delta)
    rates = group_rates(d, cfg.threshold)
    metrics = group_metric_report(rates)
    individual = None
    if not no_individual and len(d) > cfg.knn:
        individual = consistency(d, DistanceSpec(), k=cfg.knn, row_cap=cfg.row_cap)
    rep = report_mod.build_report(
        d,
        config=cfg,
        balance=balance,
        proxies=proxies,
        label_bias=bias,
        group_rates=rates,
        group_metrics=metrics,
        individual=individual,
    )
    _write_report(rep, out_path, fmt)
    click.echo(f"report written to {out_path}")


def _write_report(rep, out_path, fmt):
    text = rep.to_json() if fmt == "json" else report_mod.render_markdown(rep.data)
    Path(out_path).write_text(text, encoding="utf-8")


@main.command()
@click.argument("data_path", type=click.Path(exists=True))
@_apply_options(shared_options)
@click.option("--out", "-o", "out_path", required=True, type=click.Path(),
              help="Report output path.")
@click.option("--format", "fmt", type=click.Choice(["json", "markdown"]), default="json")
@_guard
def wizard(data_path, schema_path, config_path, balance_ratio, min_cell, delta, proxy_theta,
           out_path, fmt):
    """Step through the decision flowchart interactively."""
    cfg = _config_from_flags(
        config_path,
        balance_ratio=balance_ratio,
        min_cell=min_cell,
        label_bias_delta=delta,
        proxy_theta=proxy_theta,
    )
    d = _load(data_path, schema_path)
    suggestions = suggest_answers(d, cfg)
    trace = DecisionTrace(max_rebalance_rounds=cfg.max_rebalance_rounds)
    click.echo(f"dataset: {len(d)} rows, groups {', '.join(d.groups)}")
    try:
        while True:
            current = next_node(trace)
            if isinstance(current, FairnessObjective):
                break
            suggestion = suggestions.get(current)
            if suggestion is not None:
                click.echo(
                    f"[{current.value}] suggestion: {suggestion.answer} ({suggestion.rationale})"
                )
            while True:
                answer = click.prompt(
                    f"{current.value}",
                    type=click.Choice(ANSWER_DOMAINS[current]),
                    show_choices=True,
                )
                try:
                    trace = trace.answer(current, answer)
                    break
                except RebalanceLoopError as exc:
                    click.echo(str(exc), err=True)
            node, ans = trace.steps[-1]
            action = TRANSITIONS[node][ans].action
            if action is not None:
                click.echo(f"action: {ACTION_LABELS[action]}")
    except (click.Abort, EOFError):
        click.echo("aborted: saving the partial trace", err=True)
        rep = report_mod.build_report(d, config=cfg, trace=trace)
        _write_report(rep, out_path, fmt)
        sys.exit(EXIT_VALIDATION)

    rec = recommend(trace)
    click.echo(f"suggested fairness objective: {rec.objective.value}")
    for step in rec.required_next_steps:
        click.echo(f"  next: {step}")
    balance = assess_balance(d, cfg.balance_ratio, cfg.min_cell)
    bias = detect_label_bias(d, cfg.label_bias_delta)
    rep = report_mod.build_report(
        d, config=cfg, balance=balance, label_bias=bias, trace=trace, recommendation=rec
    )
    _write_report(rep, out_path, fmt)
    click.echo(f"report written to {out_path}")


@main.command()
@click.argument("data_path", type=click.Path(exists=True))
@click.option("--schema", "schema_path", required=True, type=click.Path(exists=True))
@click.option("--objective", type=click.Choice(["equalized-odds", "equal-opportunity"]),
              required=True)
@click.option("--cost-fp", type=float, default=1.0, show_default=True)
@click.option("--cost-fn", type=float, default=1.0, show_default=True)
@click.option("--benefit-tp", type=float, default=1.0, show_default=True)
@click.option("--benefit-tn", type=float, default=1.0, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True,
              help="Seed for the randomized decision preview.")
@click.option("--out", "-o", "out_path", type=click.Path(), default=None,
              help="Policy JSON output path (stdout when omitted).")
@_guard
def mitigate(data_path, schema_path, objective, cost_fp, cost_fn, benefit_tp, benefit_tn,
             seed, out_path):
    """Fit per-group randomized thresholds for the chosen objective."""
    d = _load(data_path, schema_path)
    spec = UtilitySpec(cost_fp=cost_fp, cost_fn=cost_fn,
                       benefit_tp=benefit_tp, benefit_tn=benefit_tn)
    fit = fit_equalized_odds if objective == "equalized-odds" else fit_equal_opportunity
    policy = fit(d, spec)
    decisions = apply_policy(d, policy, seed)
    payload = policy.to_json_dict()
    payload["empirical_selection_rate"] = {
        g: float(decisions[d.group_mask(g)].mean()) for g in d.groups
    }
    payload["seed"] = seed
    text = json.dumps(payload, indent=2) + "\n"
    if out_path:
        Path(out_path).write_text(text, encoding="utf-8")
        click.echo(f"policy written to {out_path}")
    else:
        click.echo(text, nl=False)


@main.command()
@click.argument("data_path", type=click.Path(exists=True))
@click.option("--schema", "schema_path", required=True, type=click.Path(exists=True))
@click.option("--delta", type=float, default=0.05, show_default=True,
              help="Gap threshold for the accompanying detection note.")
@click.option("--out", "-o", "out_path", required=True, type=click.Path())
@_guard
def reweigh(data_path, schema_path, delta, out_path):
    """Write a copy of the input with the fairpath_weight column appended."""
    d = _load(data_path, schema_path)
    bias = detect_label_bias(d, delta)
    w = reweigh_labels(d)
    Path(out_path).write_text(weights_csv(d, w), encoding="utf-8")
    click.echo(
        f"weights written to {out_path} "
        f"(max base-rate gap {bias.max_base_rate_gap:.4f}, flagged: {bias.flagged})"
    )


@main.command(name="sanitize")
@click.argument("data_path", type=click.Path(exists=True))
@click.option("--schema", "schema_path", required=True, type=click.Path(exists=True))
@click.option("--out", "-o", "out_path", required=True, type=click.Path())
@_guard
def sanitize_cmd(data_path, schema_path, out_path):
    """Export the table without its sensitive column."""
    d = sanitize(_load(data_path, schema_path))
    Path(out_path).write_text(export_csv(d), encoding="utf-8")
    click.echo(f"sanitized copy written to {out_path}")


@main.command()
@click.argument("data_path", type=click.Path(exists=True))
@click.option("--schema", "schema_path", required=True, type=click.Path(exists=True))
@click.option("--seed", type=int, required=True)
@click.option("--out", "-o", "out_path", required=True, type=click.Path())
@_guard
def rebalance(data_path, schema_path, seed, out_path):
    """Downsample every group to the smallest group size."""
    d = _load(data_path, schema_path)
    balanced = rebalance_by_downsampling(d, seed)
    Path(out_path).write_text(export_csv(balanced), encoding="utf-8")
    click.echo(
        f"downsampled copy written to {out_path} "
        f"({len(balanced)} rows, {len(balanced.groups)} groups)"
    )


@main.command()
@click.option("--port", "-p", type=int, default=None, envvar="FAIRPATH_PORT",
              show_envvar=True, help="Port to bind (default 8714).")
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--state-dir", type=click.Path(), default=None,
              help="Directory for inspectable JSON write-through state.")
@click.option("--allow-origin", multiple=True,
              help="CORS origin for the companion UI (repeatable).")
@click.option("--ui-dir", type=click.Path(), default=None,
              help="Static directory with the built companion UI.")
@_guard
def serve(port, host, state_dir, allow_origin, ui_dir):
    """Run the HTTP API (and the companion UI when --ui-dir is given)."""
    import uvicorn

    from .service import create_app

    app = create_app(state_dir=state_dir, allow_origins=list(allow_origin), ui_dir=ui_dir)
    uvicorn.run(app, host=host, port=port if port is not None else 8714)


if __name__ == "__main__":
    main()
