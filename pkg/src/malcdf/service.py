"""HTTP service: run control, server-push event streaming, live metrics,
and the human-in-the-loop response-action decision queue.

The service holds no classification logic; everything it serves is a
projection of coordinator state plus the decision queue.
"""

from __future__ import annotations

import json
import os
import threading
import time
import uuid
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterator, Optional

from fastapi import Depends, FastAPI, HTTPException, Query, Request
from fastapi.responses import JSONResponse, StreamingResponse
from pydantic import BaseModel

from . import coordinator as co
from . import evaluation as ev
from .agents import (
    APPROVAL_REQUIRED_ACTIONS,
    DelayedProvider,
    ProviderConfig,
    ProviderKind,
    ResponseAction,
    make_provider,
)
from .errors import MalcdfError, RunConfigInvalid
from .events import Dataset, DatasetSource, StreamConfig, parse_dataset
from .fixtures import load_fixture
from .scl import AuditOutcome, SecureChannelLayer

ACTION_TTL_SECONDS = 3600.0


class RunStatus(str, Enum):
    RUNNING = "RUNNING"
    PAUSED = "PAUSED"
    COMPLETED = "COMPLETED"
    FAILED = "FAILED"


class ActionState(str, Enum):
    PENDING = "PENDING"
    APPROVED = "APPROVED"
    REJECTED = "REJECTED"
    EXPIRED = "EXPIRED"


@dataclass
class PendingAction:
    action_id: str
    run_id: str
    event_id: int
    action: str
    target: str
    state: ActionState = ActionState.PENDING
    decided_by: Optional[str] = None
    decided_at_ms: Optional[int] = None
    note: Optional[str] = None

    def to_dict(self) -> dict:
        return {
            "action_id": self.action_id,
            "run_id": self.run_id,
            "event_id": self.event_id,
            "action": self.action,
            "target": self.target,
            "state": self.state.value,
            "decided_by": self.decided_by,
            "decided_at_ms": self.decided_at_ms,
            "note": self.note,
        }


@dataclass
class RunState:
    run_id: str
    mode: co.RunMode
    total: int
    truth: list[bool]
    scl: SecureChannelLayer
    status: RunStatus = RunStatus.RUNNING
    results: list[co.PipelineResult] = field(default_factory=list)
    error: Optional[str] = None
    finished_at: Optional[float] = None
    cond: threading.Condition = field(default_factory=threading.Condition)

    def handle(self) -> dict:
        return {
            "run_id": self.run_id,
            "mode": self.mode.value,
            "status": self.status.value,
            "progress": {"processed": len(self.results), "total": self.total},
            "error": self.error,
        }


class RunManager:
    def __init__(self, audit_dir: Optional[str] = None):
        self._runs: dict[str, RunState] = {}
        self._datasets: dict[str, Dataset] = {}
        self._actions: dict[str, PendingAction] = {}
        self._lock = threading.Lock()
        self._audit_dir = audit_dir

    # -- datasets ------------------------------------------------------------

    def add_dataset(self, csv_bytes: bytes) -> str:
        dataset = parse_dataset(csv_bytes, DatasetSource.UPLOAD)
        dataset_id = uuid.uuid4().hex[:12]
        with self._lock:
            self._datasets[dataset_id] = dataset
        return dataset_id

    def get_dataset(self, dataset_id: str) -> Optional[Dataset]:
        return self._datasets.get(dataset_id)

    # -- runs ----------------------------------------------------------------

    def start_run(self, request: "RunRequest") -> RunState:
        mode = co.RunMode(request.mode.upper())
        indicators: frozenset[str] = frozenset()
        scripted = None
        if request.fixture:
            bundle = load_fixture(request.fixture)
            source: Dataset | StreamConfig = bundle.dataset
            indicators = bundle.indicators
            scripted = bundle.scripted
            mode = co.RunMode.DATASET
            truth = bundle.truth
        elif mode is co.RunMode.SIMULATION:
            source = StreamConfig(
                total_records=request.records or 50,
                attack_records=request.attacks if request.attacks is not None else 17,
                seed=request.seed or 0,
                inter_event_delay_ms=request.delay_ms or 0,
            )
            source.validate()
            from .events import generate_dataset

            truth = [
                bool(r.label and r.label.is_attack)
                for r in generate_dataset(source).records
            ]
        else:
            if not request.dataset_id:
                raise RunConfigInvalid(f"{mode.value} mode requires dataset_id")
            dataset = self.get_dataset(request.dataset_id)
            if dataset is None:
                raise KeyError(request.dataset_id)
            source = dataset
            truth = [bool(r.label and r.label.is_attack) for r in dataset.records]

        config = ProviderConfig(
            kind=ProviderKind(request.provider.upper()),
            endpoint_url=request.endpoint_url,
        )
        provider = make_provider(config, scripted)
        if request.stage_delay_ms:
            provider = DelayedProvider(provider, request.stage_delay_ms)

        run_id = uuid.uuid4().hex[:12]
        audit_path = (
            os.path.join(self._audit_dir, f"audit-{run_id}.jsonl") if self._audit_dir else None
        )
        scl = SecureChannelLayer(audit_path=audit_path)
        total = (
            source.total_records if isinstance(source, StreamConfig) else len(source.records)
        )
        state = RunState(run_id=run_id, mode=mode, total=total, truth=truth, scl=scl)
        with self._lock:
            self._runs[run_id] = state

        def on_result(result: co.PipelineResult) -> None:
            with state.cond:
                state.results.append(result)
                if result.plan:
                    for action, target in result.plan.actions:
                        if result.plan.requires_approval and action in APPROVAL_REQUIRED_ACTIONS:
                            pa = PendingAction(
                                action_id=uuid.uuid4().hex[:12],
                                run_id=run_id,
                                event_id=result.event_id,
                                action=action.value,
                                target=target,
                            )
                            with self._lock:
                                self._actions[pa.action_id] = pa
                state.cond.notify_all()

        def worker() -> None:
            try:
                co.run(source, mode, provider, scl=scl, indicators=indicators,
                       on_result=on_result)
                with state.cond:
                    state.status = RunStatus.COMPLETED
                    state.finished_at = time.time()
                    state.cond.notify_all()
            except Exception as e:  # run-level failure, per-event failures don't land here
                with state.cond:
                    state.status = RunStatus.FAILED
                    state.error = str(e)
                    state.finished_at = time.time()
                    state.cond.notify_all()
            finally:
                scl.close()

        threading.Thread(target=worker, daemon=True, name=f"run-{run_id}").start()
        return state

    def get_run(self, run_id: str) -> Optional[RunState]:
        return self._runs.get(run_id)

    # -- actions ---------------------------------------------------------------

    def _maybe_expire(self, action: PendingAction) -> None:
        if action.state is not ActionState.PENDING:
            return
        run = self._runs.get(action.run_id)
        if run and run.finished_at and time.time() > run.finished_at + ACTION_TTL_SECONDS:
            action.state = ActionState.EXPIRED

    def list_actions(self, run_id: Optional[str], state: Optional[str]) -> list[PendingAction]:
        with self._lock:
            actions = list(self._actions.values())
        for a in actions:
            self._maybe_expire(a)
        if run_id:
            actions = [a for a in actions if a.run_id == run_id]
        if state:
            actions = [a for a in actions if a.state.value == state.upper()]
        return sorted(actions, key=lambda a: (a.run_id, a.event_id, a.action_id))

    def decide_action(self, action_id: str, decision: str, operator: str,
                      note: Optional[str]) -> PendingAction:
        with self._lock:
            action = self._actions.get(action_id)
            if action is None:
                raise KeyError(action_id)
            self._maybe_expire(action)
            if action.state is not ActionState.PENDING:
                raise ValueError(f"action already {action.state.value}")
            action.state = (
                ActionState.APPROVED if decision.upper() == "APPROVE" else ActionState.REJECTED
            )
            action.decided_by = operator
            action.decided_at_ms = int(time.time() * 1000)
            action.note = note
        run = self._runs.get(action.run_id)
        if run:
            run.scl.audit.append(
                "OPERATOR", "RCA", "", AuditOutcome.DECISION,
                f"{action.state.value} {action.action} {action.target} "
                f"action_id={action.action_id} event_id={action.event_id} by={operator}",
            )
        return action


# --- HTTP layer ---------------------------------------------------------------

class RunRequest(BaseModel):
    mode: str = "SIMULATION"
    provider: str = "RULES"
    fixture: Optional[str] = None
    dataset_id: Optional[str] = None
    records: Optional[int] = None
    attacks: Optional[int] = None
    seed: Optional[int] = None
    delay_ms: Optional[int] = None
    stage_delay_ms: Optional[int] = None
    endpoint_url: Optional[str] = None


class DecisionRequest(BaseModel):
    decision: str  # APPROVE | REJECT
    operator: str
    note: Optional[str] = None


def _result_event(result: co.PipelineResult, actions: list[PendingAction]) -> dict:
    return {
        "event_id": result.event_id,
        "record": result.record.to_dict(),
        "verdict": result.tda_verdict.to_payload() if result.tda_verdict else None,
        "enrichment": (
            result.tia_enrichment.to_payload() if result.tia_enrichment else None
        ),
        "consensus": result.consensus.to_payload() if result.consensus else None,
        "plan": result.plan.to_payload() if result.plan else None,
        "report": result.report.to_payload() if result.report else None,
        "latency_ms": result.latency_ms,
        "fallback_used": result.fallback_used,
        "error": result.error,
        "pending_actions": [a.to_dict() for a in actions],
    }


def create_app(manager: Optional[RunManager] = None,
               bearer_token: Optional[str] = None) -> FastAPI:
    app = FastAPI(title="malcdf", version="0.1.0")
    mgr = manager or RunManager()
    app.state.manager = mgr
    token = bearer_token if bearer_token is not None else os.environ.get("MALCDF_API_TOKEN")

    def authorize(request: Request) -> None:
        if not token:
            return
        supplied = request.headers.get("Authorization", "")
        if supplied != f"Bearer {token}":
            raise HTTPException(status_code=401, detail={"code": "UNAUTHORIZED"})

    @app.exception_handler(MalcdfError)
    async def malcdf_error(_request, exc: MalcdfError):
        status = 400
        return JSONResponse(status_code=status,
                            content={"code": exc.code, "message": exc.message})

    @app.get("/health")
    def health():
        return {"status": "ok"}

    @app.post("/datasets", status_code=201)
    async def upload_dataset(request: Request, _=Depends(authorize)):
        body = await request.body()
        dataset_id = mgr.add_dataset(body)
        dataset = mgr.get_dataset(dataset_id)
        return {"dataset_id": dataset_id, "records": len(dataset.records)}

    @app.post("/runs", status_code=201)
    def start_run(req: RunRequest, _=Depends(authorize)):
        try:
            state = mgr.start_run(req)
        except KeyError as e:
            raise HTTPException(status_code=404,
                                detail={"code": "UNKNOWN_DATASET", "message": str(e)})
        return state.handle()

    def _run_or_404(run_id: str) -> RunState:
        state = mgr.get_run(run_id)
        if state is None:
            raise HTTPException(status_code=404, detail={"code": "UNKNOWN_RUN"})
        return state

    @app.get("/runs/{run_id}")
    def get_run(run_id: str, _=Depends(authorize)):
        return _run_or_404(run_id).handle()

    @app.get("/runs/{run_id}/events")
    def get_events(run_id: str, page: int = Query(0, ge=0),
                   page_size: int = Query(50, ge=1, le=500), _=Depends(authorize)):
        state = _run_or_404(run_id)
        with state.cond:
            results = list(state.results)
        start = page * page_size
        chunk = results[start : start + page_size]
        return {
            "run_id": run_id,
            "page": page,
            "total": len(results),
            "events": [
                _result_event(r, _actions_for(mgr, run_id, r.event_id)) for r in chunk
            ],
        }

    @app.get("/runs/{run_id}/stream")
    def stream_events(run_id: str, _=Depends(authorize)):
        state = _run_or_404(run_id)

        def generate() -> Iterator[str]:
            cursor = 0
            while True:
                with state.cond:
                    while cursor >= len(state.results) and state.status is RunStatus.RUNNING:
                        state.cond.wait(timeout=0.5)
                    chunk = state.results[cursor:]
                    done = state.status is not RunStatus.RUNNING
                for result in chunk:
                    payload = _result_event(
                        result, _actions_for(mgr, run_id, result.event_id)
                    )
                    yield f"id: {result.event_id}\nevent: result\ndata: {json.dumps(payload)}\n\n"
                cursor += len(chunk)
                if done and cursor >= len(state.results):
                    yield f"event: end\ndata: {json.dumps(state.handle())}\n\n"
                    return

        return StreamingResponse(generate(), media_type="text/event-stream")

    @app.get("/runs/{run_id}/metrics")
    def get_metrics(run_id: str, _=Depends(authorize)):
        state = _run_or_404(run_id)
        with state.cond:
            results = list(state.results)
            status = state.status
        completed = [r for r in results if r.completed and r.consensus]
        n_excluded = len(results) - len(completed)
        truth = [state.truth[r.event_id - 1] for r in completed]
        predictions = [r.consensus.final_is_attack for r in completed]
        matrix = ev.confusion(predictions, truth)
        report = ev.compute_metrics(
            matrix,
            [r.consensus.final_confidence for r in completed],
            [r.latency_ms for r in completed],
            n_excluded=n_excluded,
        )
        distribution = ev.severity_distribution(completed, truth)
        return {
            "run_id": run_id,
            "partial": status is RunStatus.RUNNING or len(results) < state.total,
            "metrics": report.to_dict(),
            "severity_distribution": distribution.to_dict(),
        }

    @app.get("/runs/{run_id}/audit")
    def get_audit(run_id: str, _=Depends(authorize)):
        state = _run_or_404(run_id)
        return {"run_id": run_id,
                "entries": [e.to_dict() for e in state.scl.audit.read()]}

    @app.get("/actions")
    def list_actions(run_id: Optional[str] = None, state: Optional[str] = None,
                     _=Depends(authorize)):
        return {"actions": [a.to_dict() for a in mgr.list_actions(run_id, state)]}

    @app.post("/actions/{action_id}/decision")
    def decide(action_id: str, req: DecisionRequest, _=Depends(authorize)):
        if req.decision.upper() not in ("APPROVE", "REJECT"):
            raise HTTPException(status_code=400, detail={"code": "BAD_DECISION"})
        if not req.operator.strip():
            raise HTTPException(status_code=400, detail={"code": "MISSING_OPERATOR"})
        try:
            action = mgr.decide_action(action_id, req.decision, req.operator, req.note)
        except KeyError:
            raise HTTPException(status_code=404, detail={"code": "UNKNOWN_ACTION"})
        except ValueError as e:
            raise HTTPException(status_code=409,
                                detail={"code": "ALREADY_DECIDED", "message": str(e)})
        return action.to_dict()

    return app


def _actions_for(mgr: RunManager, run_id: str, event_id: int) -> list[PendingAction]:
    return [a for a in mgr.list_actions(run_id, None) if a.event_id == event_id]
