"""Per-event pipeline orchestration: TDA -> TIA -> consensus -> RCA -> AA
over the secure channel layer, consensus arithmetic, latency measurement,
and run lifecycle.
"""

from __future__ import annotations

import time
import uuid
from dataclasses import dataclass, field
from decimal import ROUND_HALF_UP, Decimal
from enum import Enum
from typing import Callable, Optional

from . import agents as ag
from .errors import MalcdfError, ProviderFailed, RunConfigInvalid, SclReject, StageFailed
from .events import Dataset, NetworkEventRecord, StreamConfig, generate_dataset
from .ontology import Severity, ThreatType
from .scl import AgentId, SecureChannelLayer


def round_confidence(value: Decimal | float) -> float:
    """Two-decimal half-up rounding, used for all consensus confidences."""
    return float(Decimal(str(value)).quantize(Decimal("0.01"), rounding=ROUND_HALF_UP))


@dataclass(frozen=True)
class ConsensusOutcome:
    final_is_attack: bool
    final_type: ThreatType
    final_severity: Severity
    final_confidence: float
    method_note: str

    def to_payload(self) -> dict:
        return {
            "is_attack": self.final_is_attack,
            "threat_type": self.final_type.value,
            "severity": self.final_severity.value,
            "confidence": self.final_confidence,
            "method_note": self.method_note,
        }

    def as_verdict(self) -> ag.ThreatVerdict:
        return ag.ThreatVerdict(
            is_attack=self.final_is_attack,
            threat_type=self.final_type,
            severity=self.final_severity,
            confidence=self.final_confidence,
            rationale=self.method_note,
            source_agent=AgentId.COORDINATOR,
        )


def consensus(tda: ag.ThreatVerdict, tia: ag.IntelEnrichment) -> ConsensusOutcome:
    """Combine detection and intelligence into the final classification.

    Confidence is always the 2-decimal half-up mean of the two contributing
    confidences.  Agreement keeps the detection verdict; an is_attack
    disagreement sides with the strictly higher confidence (detection wins
    ties); a type-only refinement adopts the intelligence type but keeps the
    detection is_attack.  Severity follows detection unless the outcome
    flips to benign, which forces LOW.
    """
    mean_conf = round_confidence(
        (Decimal(str(tda.confidence)) + Decimal(str(tia.revised_confidence))) / 2
    )

    revised = tia.revised_type
    if tia.agrees_with_detection:
        if revised is not None and revised is not ThreatType.BENIGN and tda.is_attack:
            return ConsensusOutcome(
                True, revised, tda.severity, mean_conf,
                f"agreement with type refinement to {revised.value}",
            )
        return ConsensusOutcome(
            tda.is_attack, tda.threat_type, tda.severity, mean_conf, "agreement",
        )

    tia_says_attack = revised is not None and revised is not ThreatType.BENIGN
    if tia_says_attack == tda.is_attack:
        # Same attack/benign call, different type: adopt the refined type.
        final_type = revised if revised is not None else tda.threat_type
        return ConsensusOutcome(
            tda.is_attack, final_type, tda.severity, mean_conf,
            f"type refinement to {final_type.value}",
        )

    if tia.revised_confidence > tda.confidence:
        final_is_attack = tia_says_attack
        final_type = revised if tia_says_attack else ThreatType.BENIGN
        note = "disagreement resolved toward intelligence (higher confidence)"
    else:
        final_is_attack = tda.is_attack
        final_type = tda.threat_type
        note = "disagreement resolved toward detection (ties go to detection)"
    severity = Severity.LOW if not final_is_attack else tda.severity
    return ConsensusOutcome(final_is_attack, final_type, severity, mean_conf, note)


class RunMode(str, Enum):
    SIMULATION = "SIMULATION"
    BATCH = "BATCH"
    DATASET = "DATASET"


@dataclass
class PipelineResult:
    event_id: int
    record: NetworkEventRecord
    tda_verdict: Optional[ag.ThreatVerdict] = None
    tia_enrichment: Optional[ag.IntelEnrichment] = None
    consensus: Optional[ConsensusOutcome] = None
    plan: Optional[ag.ResponsePlan] = None
    report: Optional[ag.IncidentReport] = None
    latency_ms: float = 0.0
    scl_time_ms: float = 0.0
    fallback_used: bool = False
    audit_indices: list[int] = field(default_factory=list)
    error: Optional[str] = None

    @property
    def completed(self) -> bool:
        return self.error is None

    def to_dict(self) -> dict:
        return {
            "event_id": self.event_id,
            "record": self.record.to_dict(),
            "tda_verdict": self.tda_verdict.to_payload() if self.tda_verdict else None,
            "tia_enrichment": self.tia_enrichment.to_payload() if self.tia_enrichment else None,
            "consensus": self.consensus.to_payload() if self.consensus else None,
            "plan": self.plan.to_payload() if self.plan else None,
            "report": self.report.to_payload() if self.report else None,
            "latency_ms": self.latency_ms,
            "scl_time_ms": self.scl_time_ms,
            "fallback_used": self.fallback_used,
            "audit_indices": self.audit_indices,
            "error": self.error,
        }


@dataclass
class RunSummary:
    run_id: str
    mode: RunMode
    results: list[PipelineResult]
    started_ms: int
    finished_ms: int

    def to_dict(self) -> dict:
        return {
            "run_id": self.run_id,
            "mode": self.mode.value,
            "started_ms": self.started_ms,
            "finished_ms": self.finished_ms,
            "results": [r.to_dict() for r in self.results],
        }


@dataclass
class RunContext:
    scl: SecureChannelLayer
    provider: ag.Provider
    indicators: frozenset[str] = frozenset()


def process_event(record: NetworkEventRecord, ctx: RunContext) -> PipelineResult:
    """Run the four stages strictly in order; every inter-stage message is
    sealed, delivered, schema-gated, and audited."""
    result = PipelineResult(event_id=record.event_id, record=record)
    scl = ctx.scl
    audit_start = len(scl.audit)
    scl_start = scl.seal_open_seconds
    t0 = time.perf_counter()
    try:
        try:
            verdict, fb = ag.detect(record, ctx.provider)
        except ProviderFailed as e:
            raise StageFailed("TDA", e.message) from e
        if fb:
            scl.note_fallback(AgentId.TDA, AgentId.TIA, "rule fallback during detection")
            result.fallback_used = True
        delivered = scl.send(AgentId.TDA, AgentId.TIA, verdict.to_payload(), "tda")
        result.tda_verdict = ag.ThreatVerdict.from_payload(delivered)

        try:
            enrichment, fb = ag.enrich(record, result.tda_verdict, ctx.provider, ctx.indicators)
        except ProviderFailed as e:
            raise StageFailed("TIA", e.message) from e
        if fb:
            scl.note_fallback(AgentId.TIA, AgentId.RCA, "rule fallback during enrichment")
            result.fallback_used = True
        delivered = scl.send(AgentId.TIA, AgentId.RCA, enrichment.to_payload(), "tia")
        result.tia_enrichment = ag.IntelEnrichment.from_payload(delivered)

        result.consensus = consensus(result.tda_verdict, result.tia_enrichment)
        consensus_verdict = result.consensus.as_verdict()

        try:
            plan, fb = ag.plan_response(record, consensus_verdict, result.tia_enrichment,
                                        ctx.provider)
        except ProviderFailed as e:
            raise StageFailed("RCA", e.message) from e
        if fb:
            scl.note_fallback(AgentId.RCA, AgentId.AA, "rule fallback during planning")
            result.fallback_used = True
        delivered = scl.send(AgentId.RCA, AgentId.AA, plan.to_payload(), "rca")
        result.plan = ag.ResponsePlan.from_payload(delivered)

        try:
            report, fb = ag.write_report(record, consensus_verdict, result.tia_enrichment,
                                         result.plan, ctx.provider)
        except ProviderFailed as e:
            raise StageFailed("AA", e.message) from e
        if fb:
            scl.note_fallback(AgentId.AA, AgentId.COORDINATOR, "rule fallback during reporting")
            result.fallback_used = True
        delivered = scl.send(AgentId.AA, AgentId.COORDINATOR, report.to_payload(), "aa")
        result.report = ag.IncidentReport.from_payload(delivered)
    except StageFailed as e:
        result.error = e.message
    except MalcdfError as e:
        result.error = SclReject(f"{e.code}: {e.message}").message
    result.latency_ms = (time.perf_counter() - t0) * 1000.0
    result.scl_time_ms = (scl.seal_open_seconds - scl_start) * 1000.0
    result.audit_indices = list(range(audit_start, len(scl.audit)))
    return result


def run(
    source: Dataset | StreamConfig,
    mode: RunMode,
    provider: ag.Provider,
    *,
    scl: Optional[SecureChannelLayer] = None,
    indicators: frozenset[str] = frozenset(),
    audit_path: Optional[str] = None,
    on_result: Optional[Callable[[PipelineResult], None]] = None,
) -> RunSummary:
    """Process every record of a dataset or synthetic stream.

    Per-event failures are recorded on the result and never abort the run.
    """
    if mode is RunMode.SIMULATION:
        if not isinstance(source, StreamConfig):
            raise RunConfigInvalid("SIMULATION mode takes a StreamConfig")
        try:
            dataset = generate_dataset(source)
        except MalcdfError as e:
            raise RunConfigInvalid(e.message) from e
        delay_ms = source.inter_event_delay_ms
    else:
        if not isinstance(source, Dataset):
            raise RunConfigInvalid(f"{mode.value} mode takes a Dataset")
        dataset = source
        delay_ms = 0

    layer = scl or SecureChannelLayer(audit_path=audit_path)
    ctx = RunContext(scl=layer, provider=provider, indicators=indicators)
    started = int(time.time() * 1000)
    results: list[PipelineResult] = []
    for i, record in enumerate(dataset.records):
        if delay_ms and i:
            time.sleep(delay_ms / 1000.0)
        pr = process_event(record, ctx)
        results.append(pr)
        if on_result:
            on_result(pr)
    summary = RunSummary(
        run_id=uuid.uuid4().hex,
        mode=mode,
        results=results,
        started_ms=started,
        finished_ms=int(time.time() * 1000),
    )
    if scl is None:
        layer.close()
    return summary
