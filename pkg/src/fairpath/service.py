"""HTTP API exposing the audit engine to the companion UI.

Desk-scale by design: datasets and wizard sessions live in memory, with an
optional write-through directory of plain JSON files (``--state-dir``) so
state stays inspectable. Datasets are immutable shared values; each
session's trace is only mutated under that session's lock. All errors use
the ``{"error": ..., "detail": ...}`` shape with status 400/404/422.
"""

from __future__ import annotations

import json
import threading
import uuid
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

from fastapi import Body, FastAPI, HTTPException, Query, Request
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse

from .config import AuditConfig
from .dataset import (
    AuditDataset,
    confusion_at,
    export_csv,
    load_dataset,
    schema_from_json,
    schema_to_json_list,
)
from .engine import (
    ACTION_LABELS,
    ANSWER_DOMAINS,
    DecisionTrace,
    FairnessObjective,
    Node,
    next_node,
    recommend,
    suggest_answers,
)
from .errors import FairpathError, NoFeasiblePointError, NonTerminalTraceError
from .group_metrics import GroupRates, RateSet, group_metric_report, group_rates
from .individual import DistanceSpec, consistency
from .label_bias import detect_label_bias, reweigh_labels
from .mitigation import (
    OBJECTIVE_EQUAL_OPPORTUNITY,
    OBJECTIVE_EQUALIZED_ODDS,
    UtilitySpec,
    apply_policy,
    fit_equal_opportunity,
    fit_equalized_odds,
)
from .quality import assess_balance, rebalance_by_downsampling
from .unawareness import proxy_scan

MAX_UPLOAD_BYTES = 100 * 1024 * 1024
MAX_ROWS = 1_000_000


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def _api_error(status: int, error: str, detail: str):
    raise HTTPException(status_code=status, detail={"error": error, "detail": detail})


@dataclass
class DatasetEntry:
    dataset: AuditDataset
    csv_text: str
    schema_list: list[dict]
    created_at: str


@dataclass
class SessionEntry:
    dataset_id: str
    trace: DecisionTrace
    created_at: str
    updated_at: str
    lock: threading.Lock = field(default_factory=threading.Lock)


class StateStore:
    """In-memory state with optional JSON write-through."""

    def __init__(self, state_dir: str | Path | None = None):
        self.datasets: dict[str, DatasetEntry] = {}
        self.sessions: dict[str, SessionEntry] = {}
        self._lock = threading.RLock()
        self.state_dir = Path(state_dir) if state_dir else None
        if self.state_dir:
            (self.state_dir / "datasets").mkdir(parents=True, exist_ok=True)
            (self.state_dir / "sessions").mkdir(parents=True, exist_ok=True)
            self._load()

    def _load(self):
        for path in sorted((self.state_dir / "datasets").glob("*.json")):
            raw = json.loads(path.read_text("utf-8"))
            schema = schema_from_json(raw["schema"])
            entry = DatasetEntry(
                dataset=load_dataset(raw["csv"], schema),
                csv_text=raw["csv"],
                schema_list=raw["schema"],
                created_at=raw["created_at"],
            )
            self.datasets[path.stem] = entry
        for path in sorted((self.state_dir / "sessions").glob("*.json")):
            raw = json.loads(path.read_text("utf-8"))
            if raw["dataset_id"] not in self.datasets:
                continue
            self.sessions[path.stem] = SessionEntry(
                dataset_id=raw["dataset_id"],
                trace=DecisionTrace.from_json_list(raw["steps"]),
                created_at=raw["created_at"],
                updated_at=raw["updated_at"],
            )

    def put_dataset(self, entry: DatasetEntry) -> str:
        dataset_id = uuid.uuid4().hex
        with self._lock:
            self.datasets[dataset_id] = entry
        if self.state_dir:
            payload = {
                "csv": entry.csv_text,
                "schema": entry.schema_list,
                "created_at": entry.created_at,
            }
            (self.state_dir / "datasets" / f"{dataset_id}.json").write_text(
                json.dumps(payload), encoding="utf-8"
            )
        return dataset_id

    def get_dataset(self, dataset_id: str) -> DatasetEntry:
        entry = self.datasets.get(dataset_id)
        if entry is None:
            _api_error(404, "not_found", f"unknown dataset id '{dataset_id}'")
        return entry

    def put_session(self, entry: SessionEntry) -> str:
        session_id = uuid.uuid4().hex
        with self._lock:
            self.sessions[session_id] = entry
        self.save_session(session_id)
        return session_id

    def get_session(self, session_id: str) -> SessionEntry:
        entry = self.sessions.get(session_id)
        if entry is None:
            _api_error(404, "not_found", f"unknown session id '{session_id}'")
        return entry

    def save_session(self, session_id: str):
        if not self.state_dir:
            return
        entry = self.sessions[session_id]
        payload = {
            "dataset_id": entry.dataset_id,
            "steps": entry.trace.to_json_list(),
            "created_at": entry.created_at,
            "updated_at": entry.updated_at,
        }
        (self.state_dir / "sessions" / f"{session_id}.json").write_text(
            json.dumps(payload), encoding="utf-8"
        )


def _session_payload(session_id: str, entry: SessionEntry, config: AuditConfig, store: StateStore):
    dataset = store.get_dataset(entry.dataset_id).dataset
    current = next_node(entry.trace)
    suggestions = suggest_answers(dataset, config)
    terminal = current.value if isinstance(current, FairnessObjective) else None
    current_node = current.value if isinstance(current, Node) else None
    suggestion = suggestions.get(current) if isinstance(current, Node) else None
    return {
        "session_id": session_id,
        "dataset_id": entry.dataset_id,
        "current_node": current_node,
        "terminal": terminal,
        "domain": list(ANSWER_DOMAINS[current]) if isinstance(current, Node) else [],
        "suggestion": suggestion.to_json_dict() if suggestion else None,
        "suggestions": {n.value: s.to_json_dict() for n, s in suggestions.items()},
        "trace": entry.trace.to_json_list(),
        "actions": [a.value for a in entry.trace.actions],
        "action_labels": {a.value: label for a, label in ACTION_LABELS.items()},
        "warnings": list(entry.trace.warnings),
        "created_at": entry.created_at,
        "updated_at": entry.updated_at,
    }


def _rates_at(d: AuditDataset, thresholds: dict[str, float]) -> GroupRates:
    per_group = {}
    for g in d.groups:
        c = confusion_at(d, g, thresholds[g])
        per_group[g] = RateSet(
            selection_rate=c.selection_rate,
            tpr=c.tpr,
            fpr=c.fpr,
            base_rate=c.positives / c.total,
            confusion=c,
        )
    return GroupRates(threshold=None, per_group=per_group)


def create_app(
    config: AuditConfig | None = None,
    state_dir: str | Path | None = None,
    allow_origins: list[str] | None = None,
    ui_dir: str | Path | None = None,
) -> FastAPI:
    config = config or AuditConfig()
    store = StateStore(state_dir)
    app = FastAPI(title="fairpath", version="0.1.0", docs_url="/api/docs")
    app.state.store = store
    app.state.config = config

    if allow_origins:
        app.add_middleware(
            CORSMiddleware,
            allow_origins=allow_origins,
            allow_methods=["*"],
            allow_headers=["*"],
        )

    @app.exception_handler(HTTPException)
    async def http_error(request: Request, exc: HTTPException):
        detail = exc.detail
        if not isinstance(detail, dict) or set(detail) != {"error", "detail"}:
            detail = {"error": "http_error", "detail": str(exc.detail)}
        return JSONResponse(status_code=exc.status_code, content=detail)

    @app.exception_handler(RequestValidationError)
    async def validation_error(request: Request, exc: RequestValidationError):
        return JSONResponse(
            status_code=422, content={"error": "validation", "detail": str(exc.errors())}
        )

    @app.exception_handler(FairpathError)
    async def fairpath_error(request: Request, exc: FairpathError):
        return JSONResponse(
            status_code=400, content={"error": type(exc).__name__, "detail": str(exc)}
        )

    @app.post("/api/datasets")
    def upload_dataset(payload: dict = Body(...)):
        csv_text = payload.get("csv")
        schema_raw = payload.get("schema")
        if not isinstance(csv_text, str) or schema_raw is None:
            _api_error(422, "validation", "body must carry 'csv' (string) and 'schema' (array)")
        if len(csv_text.encode("utf-8")) > MAX_UPLOAD_BYTES:
            _api_error(400, "too_large", f"CSV exceeds the {MAX_UPLOAD_BYTES} byte cap")
        try:
            schema = schema_from_json(schema_raw)
            dataset = load_dataset(csv_text, schema)
        except FairpathError as exc:
            _api_error(422, type(exc).__name__, str(exc))
        if len(dataset) > MAX_ROWS:
            _api_error(400, "too_large", f"dataset exceeds the {MAX_ROWS} row cap")
        entry = DatasetEntry(
            dataset=dataset,
            csv_text=csv_text,
            schema_list=schema_to_json_list(schema),
            created_at=_now(),
        )
        dataset_id = store.put_dataset(entry)
        return {
            "dataset_id": dataset_id,
            "fingerprint": dataset.fingerprint,
            "rows": len(dataset),
            "groups": list(dataset.groups),
        }

    @app.get("/api/datasets/{dataset_id}")
    def dataset_summary(dataset_id: str):
        entry = store.get_dataset(dataset_id)
        d = entry.dataset
        return {
            "dataset_id": dataset_id,
            "fingerprint": d.fingerprint,
            "rows": len(d),
            "groups": list(d.groups),
            "schema": schema_to_json_list(d.schema),
            "created_at": entry.created_at,
        }

    @app.get("/api/datasets/{dataset_id}/diagnostics")
    def diagnostics(dataset_id: str):
        d = store.get_dataset(dataset_id).dataset
        balance = assess_balance(d, config.balance_ratio, config.min_cell)
        bias = detect_label_bias(d, config.label_bias_delta)
        proxies = proxy_scan(d, config.proxy_theta, config.sensitive_attribute_names)
        suggestions = suggest_answers(d, config)
        return {
            "balance": balance.to_json_dict(),
            "label_bias": bias.to_json_dict(),
            "proxies": proxies.to_json_dict(),
            "suggestions": {n.value: s.to_json_dict() for n, s in suggestions.items()},
        }

    @app.get("/api/datasets/{dataset_id}/metrics")
    def metrics(
        dataset_id: str,
        threshold: float = Query(default=None),
        individual: bool = Query(default=False),
        knn: int = Query(default=None),
    ):
        d = store.get_dataset(dataset_id).dataset
        t = config.threshold if threshold is None else threshold
        if not 0.0 <= t <= 1.0:
            _api_error(422, "validation", "threshold must lie in [0, 1]")
        rates = group_rates(d, t)
        out = {
            "threshold": t,
            "rates": rates.to_json_dict()["per_group"],
            "report": group_metric_report(rates).to_json_dict(),
            "accuracy": confusion_at(d, None, t).accuracy,
        }
        if individual:
            k = config.knn if knn is None else knn
            if not 0 < k < len(d):
                _api_error(422, "validation", f"knn must lie in [1, {len(d) - 1}]")
            out["individual"] = consistency(
                d, DistanceSpec(), k=k, row_cap=config.row_cap
            ).to_json_dict()
        return out

    @app.get("/api/datasets/{dataset_id}/whatif")
    def whatif(dataset_id: str, thresholds: str = Query(...)):
        d = store.get_dataset(dataset_id).dataset
        mapping: dict[str, float] = {}
        for part in thresholds.split(","):
            if ":" not in part:
                _api_error(422, "validation", f"malformed threshold entry '{part}'")
            name, _, raw = part.rpartition(":")
            try:
                value = float(raw)
            except ValueError:
                _api_error(422, "validation", f"threshold '{raw}' is not a number")
            if not 0.0 <= value <= 1.0:
                _api_error(422, "validation", f"threshold {value} outside [0, 1]")
            if name not in d.groups:
                _api_error(422, "validation", f"unknown group '{name}'")
            mapping[name] = value
        missing = sorted(set(d.groups) - set(mapping))
        if missing:
            _api_error(422, "validation", f"missing thresholds for groups: {missing}")
        rates = _rates_at(d, mapping)
        correct = sum(
            r.confusion.tp + r.confusion.tn for r in rates.per_group.values()
        )
        return {
            "thresholds": mapping,
            "rates": rates.to_json_dict()["per_group"],
            "report": group_metric_report(rates).to_json_dict(),
            "accuracy": correct / len(d),
        }

    @app.post("/api/datasets/{dataset_id}/mitigate")
    def mitigate(dataset_id: str, payload: dict = Body(...)):
        d = store.get_dataset(dataset_id).dataset
        objective = payload.get("objective")
        if objective not in (OBJECTIVE_EQUALIZED_ODDS, OBJECTIVE_EQUAL_OPPORTUNITY):
            _api_error(
                422,
                "validation",
                "objective must be 'equalized-odds' or 'equal-opportunity'",
            )
        costs = payload.get("costs") or {}
        if not isinstance(costs, dict):
            _api_error(422, "validation", "'costs' must be an object")
        try:
            spec = UtilitySpec(
                cost_fp=float(costs.get("cost_fp", 1.0)),
                cost_fn=float(costs.get("cost_fn", 1.0)),
                benefit_tp=float(costs.get("benefit_tp", 1.0)),
                benefit_tn=float(costs.get("benefit_tn", 1.0)),
            )
        except (TypeError, ValueError) as exc:
            _api_error(422, "validation", f"bad costs: {exc}")
        seed = payload.get("seed", 0)
        if not isinstance(seed, int):
            _api_error(422, "validation", "'seed' must be an integer")
        try:
            if objective == OBJECTIVE_EQUALIZED_ODDS:
                policy = fit_equalized_odds(d, spec, allow_trivial=bool(payload.get("allow_trivial", True)))
            else:
                policy = fit_equal_opportunity(d, spec)
        except NoFeasiblePointError as exc:
            _api_error(400, "no_feasible_point", str(exc))
        except FairpathError as exc:
            _api_error(400, type(exc).__name__, str(exc))
        decisions = apply_policy(d, policy, seed)
        empirical = {}
        for g in d.groups:
            mask = d.group_mask(g)
            dec = decisions[mask]
            actual = d.labels[mask] == 1
            pos = int(actual.sum())
            neg = int((~actual).sum())
            empirical[g] = {
                "selection_rate": float(dec.mean()),
                "tpr": float(dec[actual].sum() / pos) if pos else None,
                "fpr": float(dec[~actual].sum() / neg) if neg else None,
            }
        out = policy.to_json_dict()
        out["seed"] = seed
        out["empirical"] = empirical
        return out

    @app.post("/api/datasets/{dataset_id}/rebalance")
    def rebalance(dataset_id: str, payload: dict = Body(default={})):
        entry = store.get_dataset(dataset_id)
        seed = payload.get("seed", 0)
        if not isinstance(seed, int):
            _api_error(422, "validation", "'seed' must be an integer")
        balanced = rebalance_by_downsampling(entry.dataset, seed)
        csv_text = export_csv(balanced)
        new_entry = DatasetEntry(
            dataset=load_dataset(csv_text, balanced.schema),
            csv_text=csv_text,
            schema_list=schema_to_json_list(balanced.schema),
            created_at=_now(),
        )
        new_id = store.put_dataset(new_entry)
        d = new_entry.dataset
        return {
            "dataset_id": new_id,
            "fingerprint": d.fingerprint,
            "rows": len(d),
            "groups": list(d.groups),
            "seed": seed,
        }

    @app.post("/api/datasets/{dataset_id}/reweigh")
    def reweigh(dataset_id: str, include_rows: bool = Query(default=False)):
        d = store.get_dataset(dataset_id).dataset
        try:
            w = reweigh_labels(d)
        except FairpathError as exc:
            _api_error(400, type(exc).__name__, str(exc))
        out = w.to_json_dict()
        if include_rows:
            out["weights"] = [float(x) for x in w.weights]
        return out

    @app.post("/api/sessions")
    def create_session(payload: dict = Body(...)):
        dataset_id = payload.get("dataset_id")
        if not isinstance(dataset_id, str):
            _api_error(422, "validation", "body must carry 'dataset_id'")
        store.get_dataset(dataset_id)  # 404 when unknown
        now = _now()
        entry = SessionEntry(
            dataset_id=dataset_id,
            trace=DecisionTrace(max_rebalance_rounds=config.max_rebalance_rounds),
            created_at=now,
            updated_at=now,
        )
        session_id = store.put_session(entry)
        return {"session_id": session_id, "dataset_id": dataset_id}

    @app.get("/api/sessions/{session_id}")
    def get_session(session_id: str):
        entry = store.get_session(session_id)
        return _session_payload(session_id, entry, config, store)

    @app.post("/api/sessions/{session_id}/answers")
    def post_answer(session_id: str, payload: dict = Body(...)):
        entry = store.get_session(session_id)
        node_raw = payload.get("node")
        answer = payload.get("answer")
        try:
            node = Node(node_raw)
        except ValueError:
            _api_error(422, "validation", f"unknown node '{node_raw}'")
        if not isinstance(answer, str) or answer not in ANSWER_DOMAINS[node]:
            _api_error(
                422,
                "validation",
                f"'{answer}' is not a valid answer for {node.value}; "
                f"choose one of {list(ANSWER_DOMAINS[node])}",
            )
        with entry.lock:
            trace = entry.trace
            current = next_node(trace)
            if current != node:
                # answering an earlier step truncates the trace back to it
                positions = [i for i, (n, _) in enumerate(trace.steps) if n == node]
                if not positions:
                    detail = (
                        f"node {node.value} is neither the current decision point "
                        f"({getattr(current, 'value', current)}) nor an answered step"
                    )
                    _api_error(422, "validation", detail)
                trace = DecisionTrace(
                    steps=trace.steps[: positions[0]],
                    max_rebalance_rounds=trace.max_rebalance_rounds,
                )
            try:
                entry.trace = trace.answer(node, answer)
            except FairpathError as exc:
                _api_error(422, type(exc).__name__, str(exc))
            entry.updated_at = _now()
            store.save_session(session_id)
        return _session_payload(session_id, entry, config, store)

    @app.get("/api/sessions/{session_id}/recommendation")
    def get_recommendation(session_id: str):
        entry = store.get_session(session_id)
        try:
            rec = recommend(entry.trace)
        except NonTerminalTraceError as exc:
            _api_error(400, "not_terminal", str(exc))
        return rec.to_json_dict()

    if ui_dir is not None and Path(ui_dir).is_dir():
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=str(ui_dir), html=True), name="ui")

    return app
