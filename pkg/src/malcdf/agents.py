"""The four SOC-role agents (detection, intelligence, response, analyst)
and the completion-provider abstraction behind them.

Providers come in three kinds: SCRIPTED replays fixture outputs keyed by
(role, event_id); RULES evaluates the shared threshold tables from
``events.THREAT_PROFILES``; REMOTE posts a chat-completion request to an
HTTP endpoint, with one repair re-prompt on parse failure, transport
retries, and a final fall back to RULES so the pipeline keeps moving.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

import httpx

from . import ontology
from .errors import ProviderFailed, UnknownTerm
from .events import (
    COMMON_SERVICE_PORTS,
    NetworkEventRecord,
    RULE_PRECEDENCE,
    THREAT_PROFILES,
)
from .ontology import AttackTechniqueRef, Severity, ThreatType
from .scl import AgentId


# --- domain types -----------------------------------------------------------

@dataclass(frozen=True)
class ThreatVerdict:
    is_attack: bool
    threat_type: ThreatType
    severity: Severity
    confidence: float
    rationale: str
    source_agent: AgentId

    def __post_init__(self):
        violations = ontology.validate_verdict(self)
        if violations:
            raise ValueError(f"invalid verdict: {violations}")

    def to_payload(self) -> dict:
        return {
            "is_attack": self.is_attack,
            "threat_type": self.threat_type.value,
            "severity": self.severity.value,
            "confidence": self.confidence,
            "rationale": self.rationale,
            "source_agent": self.source_agent.value,
        }

    @classmethod
    def from_payload(cls, payload: dict) -> "ThreatVerdict":
        return cls(
            is_attack=bool(payload["is_attack"]),
            threat_type=ontology.normalize_term(str(payload["threat_type"]).replace("_", " ")),
            severity=Severity(str(payload["severity"]).upper()),
            confidence=float(payload["confidence"]),
            rationale=str(payload["rationale"]),
            source_agent=AgentId(payload.get("source_agent", "TDA")),
        )


@dataclass(frozen=True)
class IntelEnrichment:
    agrees_with_detection: bool
    revised_confidence: float
    context_notes: str
    indicator_matches: tuple[str, ...] = ()
    revised_type: Optional[ThreatType] = None

    def to_payload(self) -> dict:
        return {
            "agrees_with_detection": self.agrees_with_detection,
            "revised_confidence": self.revised_confidence,
            "context_notes": self.context_notes,
            "indicator_matches": list(self.indicator_matches),
            "revised_type": self.revised_type.value if self.revised_type else None,
        }

    @classmethod
    def from_payload(cls, payload: dict) -> "IntelEnrichment":
        revised = payload.get("revised_type")
        return cls(
            agrees_with_detection=bool(payload["agrees_with_detection"]),
            revised_confidence=float(payload["revised_confidence"]),
            context_notes=str(payload["context_notes"]),
            indicator_matches=tuple(payload.get("indicator_matches", ())),
            revised_type=(
                ontology.normalize_term(str(revised).replace("_", " ")) if revised else None
            ),
        )


class ResponseAction(str, Enum):
    CONTAIN_HOST = "CONTAIN_HOST"
    BLOCK_OUTBOUND = "BLOCK_OUTBOUND"
    DEEP_INSPECT = "DEEP_INSPECT"
    MONITOR = "MONITOR"


APPROVAL_REQUIRED_ACTIONS = {ResponseAction.CONTAIN_HOST, ResponseAction.BLOCK_OUTBOUND}


@dataclass(frozen=True)
class ResponsePlan:
    actions: tuple[tuple[ResponseAction, str], ...]
    requires_approval: bool

    def to_payload(self) -> dict:
        return {
            "actions": [{"action": a.value, "target": t} for a, t in self.actions],
            "requires_approval": self.requires_approval,
        }

    @classmethod
    def from_payload(cls, payload: dict) -> "ResponsePlan":
        return cls(
            actions=tuple(
                (ResponseAction(a["action"]), str(a["target"])) for a in payload["actions"]
            ),
            requires_approval=bool(payload["requires_approval"]),
        )


@dataclass(frozen=True)
class IncidentReport:
    summary: str
    technique: Optional[AttackTechniqueRef]
    event_fields: dict
    verdict_ref: ThreatVerdict

    def to_payload(self) -> dict:
        return {
            "summary": self.summary,
            "technique": (
                {"technique_id": self.technique.technique_id, "name": self.technique.name}
                if self.technique
                else None
            ),
            "event_fields": self.event_fields,
            "verdict_ref": self.verdict_ref.to_payload(),
        }

    @classmethod
    def from_payload(cls, payload: dict) -> "IncidentReport":
        tech = payload.get("technique")
        return cls(
            summary=str(payload["summary"]),
            technique=AttackTechniqueRef(tech["technique_id"], tech["name"]) if tech else None,
            event_fields=dict(payload["event_fields"]),
            verdict_ref=ThreatVerdict.from_payload(payload["verdict_ref"]),
        )


class ProviderKind(str, Enum):
    SCRIPTED = "SCRIPTED"
    RULES = "RULES"
    REMOTE = "REMOTE"


@dataclass(frozen=True)
class ProviderConfig:
    kind: ProviderKind
    endpoint_url: Optional[str] = None
    model: str = "llama-3.3-70b"
    api_key_env: str = "MALCDF_API_KEY"
    timeout_ms: int = 10_000
    max_retries: int = 2

    def __post_init__(self):
        if self.kind is ProviderKind.REMOTE and not self.endpoint_url:
            raise ValueError("REMOTE provider requires endpoint_url")


@dataclass(frozen=True)
class ProviderResult:
    payload: dict
    fallback: bool = False


# --- providers ----------------------------------------------------------------

class Provider:
    """Completion source: structured payload for a (role, record) request."""

    def complete(self, role: str, record: NetworkEventRecord, context: dict) -> ProviderResult:
        raise NotImplementedError


class RulesProvider(Provider):
    """Deterministic threshold rules over the shared threat profiles."""

    def complete(self, role, record, context):
        if role in ("tda", "single_llm"):
            return ProviderResult(self._detect(record))
        if role == "tia":
            return ProviderResult(self._enrich(record, context))
        if role == "rca":
            return ProviderResult(self._plan(record, context))
        if role == "aa":
            return ProviderResult(self._report(record, context))
        raise ProviderFailed(f"rules provider has no role {role!r}")

    @staticmethod
    def classify(record: NetworkEventRecord) -> Optional[ThreatType]:
        """First matching rule in fixed precedence order, else benign."""
        for ttype in RULE_PRECEDENCE:
            d = THREAT_PROFILES[ttype]["detect"]
            if "min_bytes" in d and record.bytes_sent < d["min_bytes"]:
                continue
            if "max_bytes" in d and record.bytes_sent > d["max_bytes"]:
                continue
            if "min_packets" in d and record.packets < d["min_packets"]:
                continue
            if "max_packets" in d and record.packets > d["max_packets"]:
                continue
            if "ports" in d and record.dst_port not in d["ports"]:
                continue
            if "min_port" in d and (
                record.dst_port < d["min_port"] or record.dst_port in COMMON_SERVICE_PORTS
            ):
                continue
            return ttype
        return None

    def _detect(self, record) -> dict:
        ttype = self.classify(record)
        if ttype is None:
            return {
                "is_attack": False,
                "threat_type": ThreatType.BENIGN.value,
                "severity": Severity.LOW.value,
                "confidence": 0.70,
                "rationale": (
                    f"{record.protocol.value} flow to port {record.dst_port} with "
                    f"{record.bytes_sent} bytes matches no attack rule"
                ),
            }
        profile = THREAT_PROFILES[ttype]
        severity = Severity(profile["severity"])
        escalate = profile.get("high_severity_when")
        if escalate and record.bytes_sent >= escalate.get("min_bytes", float("inf")):
            severity = Severity.HIGH
        return {
            "is_attack": True,
            "threat_type": ttype.value,
            "severity": severity.value,
            "confidence": profile["confidence"],
            "rationale": (
                f"{ttype.display_name} rule: {record.protocol.value} to port "
                f"{record.dst_port}, {record.bytes_sent} bytes, {record.packets} packets"
            ),
        }

    def _enrich(self, record, context) -> dict:
        verdict = context["verdict"]
        return {
            "agrees_with_detection": True,
            "revised_confidence": verdict["confidence"],
            "context_notes": f"rule pass concurs with {verdict['threat_type']}",
            "indicator_matches": [],
            "revised_type": None,
        }

    def _plan(self, record, context) -> dict:
        # Postconditions are enforced again in plan_response; this emits the
        # severity-to-action table directly.
        consensus = context["consensus"]
        if not consensus["is_attack"]:
            return {"actions": [{"action": "MONITOR", "target": record.dst_ip}],
                    "requires_approval": False}
        actions = []
        if consensus["severity"] == Severity.HIGH.value:
            actions.append({"action": "CONTAIN_HOST", "target": record.src_ip})
        actions.append({"action": "BLOCK_OUTBOUND", "target": record.dst_ip})
        actions.append({"action": "DEEP_INSPECT", "target": record.src_ip})
        return {"actions": actions, "requires_approval": True}

    def _report(self, record, context) -> dict:
        consensus = context["consensus"]
        ttype = consensus["threat_type"].replace("_", " ").title()
        if consensus["is_attack"]:
            summary = (
                f"{ttype} detected: {record.protocol.value} flow from {record.src_ip} to "
                f"{record.dst_ip}:{record.dst_port} moved {record.bytes_sent} bytes."
            )
        else:
            summary = (
                f"Benign traffic: {record.protocol.value} flow from {record.src_ip} to "
                f"{record.dst_ip}:{record.dst_port} cleared after review."
            )
        return {"summary": summary}


class ScriptedProvider(Provider):
    """Fixture replay keyed by (role, event_id); a missing key is a hard
    PROVIDER_FAILED, never a silent guess."""

    def __init__(self, fixtures: dict[str, dict]):
        # fixtures: role -> {event_id (str or int) -> payload dict}
        self._fixtures = {
            role: {int(k): v for k, v in table.items()} for role, table in fixtures.items()
        }

    def complete(self, role, record, context):
        table = self._fixtures.get(role)
        if table is None or record.event_id not in table:
            raise ProviderFailed(f"no scripted fixture for ({role}, {record.event_id})")
        return ProviderResult(dict(table[record.event_id]))


class RemoteProvider(Provider):
    """HTTP chat-completion provider with repair re-prompt, transport
    retries, and rule fallback."""

    def __init__(self, config: ProviderConfig, rules: Optional[RulesProvider] = None):
        if config.kind is not ProviderKind.REMOTE:
            raise ValueError("RemoteProvider needs a REMOTE config")
        self.config = config
        self._rules = rules or RulesProvider()

    def _request(self, client: httpx.Client, prompt: str) -> dict:
        headers = {}
        api_key = os.environ.get(self.config.api_key_env, "")
        if api_key:
            headers["Authorization"] = f"Bearer {api_key}"
        response = client.post(
            self.config.endpoint_url,
            json={
                "model": self.config.model,
                "messages": [{"role": "user", "content": prompt}],
                "response_format": {"type": "json_object"},
            },
            headers=headers,
        )
        response.raise_for_status()
        content = response.json()["choices"][0]["message"]["content"]
        payload = json.loads(content)
        if not isinstance(payload, dict):
            raise ValueError("completion is not a JSON object")
        return payload

    def complete(self, role, record, context):
        prompt = build_prompt(role, record, context)
        timeout = self.config.timeout_ms / 1000.0
        with httpx.Client(timeout=timeout) as client:
            for attempt in range(self.config.max_retries + 1):
                try:
                    return ProviderResult(self._request(client, prompt))
                except (ValueError, KeyError):
                    # Malformed structure: one repair re-prompt before this
                    # attempt counts as spent.
                    try:
                        repair = prompt + "\nReturn ONLY a single valid JSON object."
                        return ProviderResult(self._request(client, repair))
                    except Exception:
                        continue
                except httpx.HTTPError:
                    continue
        fallback = self._rules.complete(role, record, context)
        return ProviderResult(fallback.payload, fallback=True)


class DelayedProvider(Provider):
    """Wraps a provider with a fixed per-call sleep; used by the latency
    harness to emulate model inference time."""

    def __init__(self, inner: Provider, delay_ms: int):
        self.inner = inner
        self.delay_ms = delay_ms

    def complete(self, role, record, context):
        import time

        time.sleep(self.delay_ms / 1000.0)
        return self.inner.complete(role, record, context)


def build_prompt(role: str, record: NetworkEventRecord, context: dict) -> str:
    lines = [
        f"Role: {role}. Respond with one JSON object only.",
        f"Flow: {record.protocol.value} {record.src_ip} -> {record.dst_ip}:{record.dst_port}, "
        f"{record.bytes_sent} bytes, {record.packets} packets, {record.duration_ms} ms.",
    ]
    if "verdict" in context:
        lines.append(f"Detection verdict: {json.dumps(context['verdict'], sort_keys=True)}")
    if "consensus" in context:
        lines.append(f"Consensus: {json.dumps(context['consensus'], sort_keys=True)}")
    return "\n".join(lines)


def make_provider(config: ProviderConfig, scripted_fixtures: Optional[dict] = None) -> Provider:
    if config.kind is ProviderKind.RULES:
        return RulesProvider()
    if config.kind is ProviderKind.SCRIPTED:
        if scripted_fixtures is None:
            raise ProviderFailed("scripted provider requires fixture tables")
        return ScriptedProvider(scripted_fixtures)
    return RemoteProvider(config)


# --- agent operations ---------------------------------------------------------

_CONCRETE_FIELD_HINTS = ("port", "byte", "protocol", "udp", "tcp", "http", "icmp", "packet")


def detect(record: NetworkEventRecord, provider: Provider) -> tuple[ThreatVerdict, bool]:
    """Threat Detection Agent: classify one record."""
    result = provider.complete("tda", record, {})
    payload = dict(result.payload)
    rationale = str(payload.get("rationale", ""))
    if not any(h in rationale.lower() for h in _CONCRETE_FIELD_HINTS):
        rationale = (
            f"{rationale + ' ' if rationale else ''}"
            f"(fields: {record.protocol.value} port {record.dst_port}, "
            f"{record.bytes_sent} bytes)"
        )
    payload["rationale"] = rationale
    payload["source_agent"] = AgentId.TDA.value
    try:
        return ThreatVerdict.from_payload(payload), result.fallback
    except (KeyError, ValueError, UnknownTerm) as e:
        raise ProviderFailed(f"detector produced invalid verdict: {e}") from e


def enrich(
    record: NetworkEventRecord,
    verdict: ThreatVerdict,
    provider: Provider,
    indicators: frozenset[str] = frozenset(),
) -> tuple[IntelEnrichment, bool]:
    """Threat Intelligence Agent: context + indicator matching."""
    result = provider.complete("tia", record, {"verdict": verdict.to_payload()})
    payload = result.payload
    matches = [v for v in (record.dst_ip, str(record.dst_port)) if v in indicators]
    revised_raw = payload.get("revised_type")
    try:
        revised = (
            ontology.normalize_term(str(revised_raw).replace("_", " ")) if revised_raw else None
        )
        enrichment = IntelEnrichment(
            agrees_with_detection=bool(payload["agrees_with_detection"]),
            revised_confidence=float(payload["revised_confidence"]),
            context_notes=str(payload.get("context_notes", "")),
            indicator_matches=tuple(dict.fromkeys([*matches, *payload.get("indicator_matches", [])])),
            revised_type=revised,
        )
    except (KeyError, ValueError, UnknownTerm) as e:
        raise ProviderFailed(f"intelligence output invalid: {e}") from e
    return enrichment, result.fallback


def plan_response(
    record: NetworkEventRecord,
    consensus_verdict: ThreatVerdict,
    enrichment: IntelEnrichment,
    provider: Provider,
) -> tuple[ResponsePlan, bool]:
    """Response Coordination Agent: action plan for the consensus verdict.

    The severity-to-action contract is enforced here regardless of what the
    provider proposed: HIGH implies CONTAIN_HOST, any attack implies
    BLOCK_OUTBOUND toward the destination, and privileged actions require
    operator approval.
    """
    context = {"consensus": consensus_verdict.to_payload()}
    result = provider.complete("rca", record, context)
    try:
        plan = ResponsePlan.from_payload(result.payload)
    except (KeyError, ValueError) as e:
        raise ProviderFailed(f"response plan invalid: {e}") from e

    if not consensus_verdict.is_attack:
        return ResponsePlan(((ResponseAction.MONITOR, record.dst_ip),), False), result.fallback

    actions = list(plan.actions)
    present = {a for a, _ in actions}
    if consensus_verdict.severity is Severity.HIGH and ResponseAction.CONTAIN_HOST not in present:
        actions.insert(0, (ResponseAction.CONTAIN_HOST, record.src_ip))
    if ResponseAction.BLOCK_OUTBOUND not in present:
        actions.append((ResponseAction.BLOCK_OUTBOUND, record.dst_ip))
    requires_approval = any(a in APPROVAL_REQUIRED_ACTIONS for a, _ in actions)
    return ResponsePlan(tuple(actions), requires_approval), result.fallback


def write_report(
    record: NetworkEventRecord,
    consensus_verdict: ThreatVerdict,
    enrichment: IntelEnrichment,
    plan: ResponsePlan,
    provider: Provider,
) -> tuple[IncidentReport, bool]:
    """Analyst Agent: short incident write-up with ATT&CK mapping."""
    context = {
        "consensus": consensus_verdict.to_payload(),
        "plan": plan.to_payload(),
    }
    result = provider.complete("aa", record, context)
    summary = str(result.payload.get("summary", "")).strip()
    if not summary:
        raise ProviderFailed("analyst produced empty summary")
    return (
        IncidentReport(
            summary=summary,
            technique=ontology.technique_for(consensus_verdict.threat_type),
            event_fields={
                "src_ip": record.src_ip,
                "dst_ip": record.dst_ip,
                "dst_port": record.dst_port,
                "protocol": record.protocol.value,
                "bytes_sent": record.bytes_sent,
            },
            verdict_ref=consensus_verdict,
        ),
        result.fallback,
    )


def load_indicators(text: str) -> frozenset[str]:
    """Flat indicator file: one IP or port token per line, '#' comments."""
    values = set()
    for line in text.splitlines():
        line = line.split("#", 1)[0].strip()
        if line:
            values.add(line.split()[0])
    return frozenset(values)
