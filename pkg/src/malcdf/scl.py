"""Secure Communication Layer: AEAD-sealed inter-agent envelopes with
sequence-based replay protection, schema gating on delivery, and an
append-only audit log.

Envelope wire format (see docs/scl-wire.md): six length-prefixed fields in
the order version, sender, recipient, sequence, nonce, ciphertext; each
field is a 4-byte big-endian length followed by the raw bytes.  The header
fields version|sender|recipient|sequence are bound into the AEAD associated
data, so any cross-splice or bit flip fails authentication.
"""

from __future__ import annotations

import hashlib
import json
import os
import struct
import threading
import time
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Optional

from cryptography.hazmat.primitives.ciphers.aead import AESGCM
from cryptography.exceptions import InvalidTag

from . import ontology
from .errors import AuthFail, KeyUnavailable, Replay, SchemaReject, UnknownChannel

ENVELOPE_VERSION = 1
NONCE_BYTES = 12
MAX_PAYLOAD_BYTES = 1 << 20


class AgentId(str, Enum):
    TDA = "TDA"
    TIA = "TIA"
    RCA = "RCA"
    AA = "AA"
    COORDINATOR = "COORDINATOR"


class AuditOutcome(str, Enum):
    DELIVERED = "DELIVERED"
    AUTH_FAIL = "AUTH_FAIL"
    REPLAY = "REPLAY"
    SCHEMA_REJECT = "SCHEMA_REJECT"
    FALLBACK_USED = "FALLBACK_USED"
    DECISION = "DECISION"


def canonical_payload(obj) -> bytes:
    """Stable serialization (sorted keys, no whitespace) so payload digests
    and round-trip tests are byte-exact."""
    return json.dumps(obj, sort_keys=True, separators=(",", ":")).encode("utf-8")


def payload_digest(payload: bytes) -> str:
    return hashlib.sha256(payload).hexdigest()


@dataclass(frozen=True)
class SecureEnvelope:
    version: int
    sender: AgentId
    recipient: AgentId
    sequence: int
    nonce: bytes
    ciphertext: bytes

    def associated_data(self) -> bytes:
        return _associated_data(self.version, self.sender, self.recipient, self.sequence)

    def to_bytes(self) -> bytes:
        fields = [
            bytes([self.version]),
            self.sender.value.encode(),
            self.recipient.value.encode(),
            struct.pack(">Q", self.sequence),
            self.nonce,
            self.ciphertext,
        ]
        return b"".join(struct.pack(">I", len(f)) + f for f in fields)

    @classmethod
    def from_bytes(cls, data: bytes) -> "SecureEnvelope":
        fields = []
        offset = 0
        for _ in range(6):
            if offset + 4 > len(data):
                raise AuthFail("truncated envelope")
            (length,) = struct.unpack_from(">I", data, offset)
            offset += 4
            if offset + length > len(data):
                raise AuthFail("truncated envelope field")
            fields.append(data[offset : offset + length])
            offset += length
        if offset != len(data):
            raise AuthFail("trailing bytes after envelope")
        try:
            version = fields[0][0] if len(fields[0]) == 1 else -1
            sender = AgentId(fields[1].decode())
            recipient = AgentId(fields[2].decode())
            (sequence,) = struct.unpack(">Q", fields[3])
        except (ValueError, struct.error, UnicodeDecodeError) as e:
            raise AuthFail(f"malformed envelope header: {e}") from e
        return cls(version, sender, recipient, sequence, fields[4], fields[5])


def _associated_data(version: int, sender: AgentId, recipient: AgentId, sequence: int) -> bytes:
    return b"|".join(
        [bytes([version & 0xFF]), sender.value.encode(), recipient.value.encode(),
         struct.pack(">Q", sequence)]
    )


@dataclass
class ChannelState:
    sender: AgentId
    recipient: AgentId
    key: bytes
    next_send_sequence: int = 0
    highest_accepted_sequence: int = -1
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False)

    def __repr__(self):  # key material stays out of logs
        return (
            f"ChannelState({self.sender.value}->{self.recipient.value}, "
            f"send={self.next_send_sequence}, acc={self.highest_accepted_sequence})"
        )


def derive_channel_key(root_key: bytes, a: AgentId, b: AgentId) -> bytes:
    """Pairwise symmetric key from the per-run root key; the label is the
    sorted agent-id pair so both directions share one key (direction is
    still bound via associated data)."""
    label = "|".join(sorted([a.value, b.value]))
    return hashlib.sha256(b"malcdf-channel|" + root_key + b"|" + label.encode()).digest()


@dataclass(frozen=True)
class AuditEntry:
    index: int
    timestamp_ms: int
    sender: str
    recipient: str
    payload_digest: str
    outcome: AuditOutcome
    detail: str = ""

    def to_dict(self) -> dict:
        return {
            "index": self.index,
            "timestamp_ms": self.timestamp_ms,
            "sender": self.sender,
            "recipient": self.recipient,
            "payload_digest": self.payload_digest,
            "outcome": self.outcome.value,
            "detail": self.detail,
        }


class AuditLog:
    """Append-only, gapless-index audit log; optionally mirrored to a JSONL
    file as entries arrive."""

    def __init__(self, path: Optional[str] = None):
        self._entries: list[AuditEntry] = []
        self._lock = threading.Lock()
        self._path = path
        self._fh = open(path, "a", encoding="utf-8") if path else None

    def append(self, sender: str, recipient: str, digest: str, outcome: AuditOutcome,
               detail: str = "") -> AuditEntry:
        with self._lock:
            entry = AuditEntry(
                index=len(self._entries),
                timestamp_ms=int(time.time() * 1000),
                sender=sender,
                recipient=recipient,
                payload_digest=digest,
                outcome=outcome,
                detail=detail,
            )
            self._entries.append(entry)
            if self._fh:
                self._fh.write(json.dumps(entry.to_dict(), sort_keys=True) + "\n")
                self._fh.flush()
            return entry

    def read(self) -> list[AuditEntry]:
        with self._lock:
            return list(self._entries)

    def close(self) -> None:
        with self._lock:
            if self._fh:
                self._fh.close()
                self._fh = None

    def __len__(self) -> int:
        with self._lock:
            return len(self._entries)


# --- role schemas -----------------------------------------------------------

ROLE_SCHEMAS: dict[str, set[str]] = {
    "event": {"event_id", "src_ip", "dst_ip", "dst_port", "protocol", "bytes_sent"},
    "tda": {"is_attack", "threat_type", "severity", "confidence", "rationale"},
    "tia": {"agrees_with_detection", "revised_confidence", "context_notes", "indicator_matches"},
    "rca": {"actions", "requires_approval"},
    "aa": {"summary", "event_fields", "verdict_ref"},
}


def _validate_schema(payload: dict, schema_id: str) -> None:
    required = ROLE_SCHEMAS.get(schema_id)
    if required is None:
        raise SchemaReject(f"unknown schema id: {schema_id}")
    missing = required - payload.keys()
    if missing:
        raise SchemaReject(f"{schema_id} payload missing fields: {sorted(missing)}")
    # Verdict-bearing payloads must speak the shared ontology.
    if "threat_type" in payload:
        try:
            ttype = ontology.normalize_term(str(payload["threat_type"]).replace("_", " "))
        except Exception as e:
            raise SchemaReject(f"threat_type rejected: {e}") from e
        sev = payload.get("severity")
        if sev is not None and str(sev).upper() not in ontology.Severity.__members__:
            raise SchemaReject(f"severity rejected: {sev!r}")
        conf = payload.get("confidence")
        if conf is not None and not (isinstance(conf, (int, float)) and 0 <= conf <= 1):
            raise SchemaReject(f"confidence rejected: {conf!r}")
        if bool(payload.get("is_attack")) == (ttype is ontology.ThreatType.BENIGN):
            raise SchemaReject("is_attack inconsistent with threat_type")


# --- the layer itself -------------------------------------------------------

class SecureChannelLayer:
    """Per-run SCL instance: pairwise channels, seal/open/deliver, audit."""

    def __init__(self, root_key: Optional[bytes] = None, audit_path: Optional[str] = None):
        self._root_key = root_key if root_key is not None else os.urandom(32)
        self._channels: dict[tuple[AgentId, AgentId], ChannelState] = {}
        self._lock = threading.Lock()
        self.audit = AuditLog(audit_path)
        self.seal_open_seconds = 0.0  # cumulative crypto time, for latency attribution

    def channel(self, sender: AgentId, recipient: AgentId) -> ChannelState:
        if self._root_key is None:
            raise KeyUnavailable("layer closed")
        with self._lock:
            key = (sender, recipient)
            if key not in self._channels:
                self._channels[key] = ChannelState(
                    sender, recipient, derive_channel_key(self._root_key, sender, recipient)
                )
            return self._channels[key]

    def seal(self, sender: AgentId, recipient: AgentId, payload: bytes) -> SecureEnvelope:
        start = time.perf_counter()
        channel = self.channel(sender, recipient)
        with channel._lock:
            sequence = channel.next_send_sequence
            channel.next_send_sequence += 1
        nonce = os.urandom(NONCE_BYTES)
        aad = _associated_data(ENVELOPE_VERSION, sender, recipient, sequence)
        ciphertext = AESGCM(channel.key).encrypt(nonce, payload, aad)
        self.seal_open_seconds += time.perf_counter() - start
        return SecureEnvelope(ENVELOPE_VERSION, sender, recipient, sequence, nonce, ciphertext)

    def open(self, envelope: SecureEnvelope) -> bytes:
        """Authenticate, then replay-check, then release plaintext.  Failed
        envelopes leave channel state untouched."""
        start = time.perf_counter()
        try:
            channel = self._channels.get((envelope.sender, envelope.recipient))
            if channel is None:
                raise UnknownChannel(
                    f"no channel {envelope.sender.value}->{envelope.recipient.value}"
                )
            try:
                plaintext = AESGCM(channel.key).decrypt(
                    envelope.nonce, envelope.ciphertext, envelope.associated_data()
                )
            except InvalidTag as e:
                raise AuthFail("envelope failed authentication") from e
            with channel._lock:
                if envelope.sequence <= channel.highest_accepted_sequence:
                    raise Replay(f"sequence {envelope.sequence} already accepted")
                channel.highest_accepted_sequence = envelope.sequence
            return plaintext
        finally:
            self.seal_open_seconds += time.perf_counter() - start

    def open_bytes(self, wire: bytes) -> bytes:
        return self.open(SecureEnvelope.from_bytes(wire))

    def deliver(self, envelope: SecureEnvelope, expected_schema: str) -> dict:
        """open + schema/ontology gate + exactly one audit entry per attempt."""
        sender, recipient = envelope.sender.value, envelope.recipient.value
        try:
            plaintext = self.open(envelope)
        except Replay as e:
            self.audit.append(sender, recipient, "", AuditOutcome.REPLAY, str(e))
            raise
        except (AuthFail, UnknownChannel) as e:
            self.audit.append(sender, recipient, "", AuditOutcome.AUTH_FAIL, str(e))
            raise
        digest = payload_digest(plaintext)
        try:
            payload = json.loads(plaintext.decode("utf-8"))
            if not isinstance(payload, dict):
                raise SchemaReject("payload is not an object")
            _validate_schema(payload, expected_schema)
        except SchemaReject as e:
            self.audit.append(sender, recipient, digest, AuditOutcome.SCHEMA_REJECT, str(e))
            raise
        except (ValueError, UnicodeDecodeError) as e:
            self.audit.append(sender, recipient, digest, AuditOutcome.SCHEMA_REJECT, str(e))
            raise SchemaReject(f"payload not valid JSON: {e}") from e
        self.audit.append(sender, recipient, digest, AuditOutcome.DELIVERED)
        return payload

    def send(self, sender: AgentId, recipient: AgentId, payload_obj, expected_schema: str) -> dict:
        """seal + deliver in one hop over the in-process transport."""
        envelope = self.seal(sender, recipient, canonical_payload(payload_obj))
        return self.deliver(envelope, expected_schema)

    def note_fallback(self, sender: AgentId, recipient: AgentId, detail: str) -> None:
        self.audit.append(sender.value, recipient.value, "", AuditOutcome.FALLBACK_USED, detail)

    def close(self) -> None:
        self.audit.close()
