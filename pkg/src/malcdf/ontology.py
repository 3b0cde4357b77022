"""Shared threat taxonomy: threat types, severities, synonym normalization,
and the ATT&CK technique mapping used by every agent.

All tables are loaded once from ``data/ontology.map`` and are immutable
afterwards, so concurrent readers need no locking.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum
from functools import total_ordering
from importlib import resources
from typing import Optional

from .errors import UnknownTerm


class ThreatType(str, Enum):
    BENIGN = "BENIGN"
    DATA_EXFILTRATION = "DATA_EXFILTRATION"
    MALWARE_BEACONING = "MALWARE_BEACONING"
    UNAUTHORIZED_ACCESS = "UNAUTHORIZED_ACCESS"
    DDOS = "DDOS"
    PORT_SCAN = "PORT_SCAN"
    BRUTE_FORCE = "BRUTE_FORCE"

    @property
    def display_name(self) -> str:
        return self.value.replace("_", " ").title()


@total_ordering
class Severity(str, Enum):
    LOW = "LOW"
    MEDIUM = "MEDIUM"
    HIGH = "HIGH"

    def _rank(self) -> int:
        return {"LOW": 0, "MEDIUM": 1, "HIGH": 2}[self.value]

    def __lt__(self, other: "Severity") -> bool:
        if not isinstance(other, Severity):
            return NotImplemented
        return self._rank() < other._rank()

    def __le__(self, other: "Severity") -> bool:
        if not isinstance(other, Severity):
            return NotImplemented
        return self._rank() <= other._rank()

    def __gt__(self, other: "Severity") -> bool:
        if not isinstance(other, Severity):
            return NotImplemented
        return self._rank() > other._rank()

    def __ge__(self, other: "Severity") -> bool:
        if not isinstance(other, Severity):
            return NotImplemented
        return self._rank() >= other._rank()


_TECHNIQUE_ID_RE = re.compile(r"^T\d{4}(\.\d{3})?$")


@dataclass(frozen=True)
class AttackTechniqueRef:
    technique_id: str
    name: str

    def __post_init__(self):
        if not _TECHNIQUE_ID_RE.match(self.technique_id):
            raise ValueError(f"bad technique id: {self.technique_id!r}")


def _load_mapping():
    synonyms: dict[str, ThreatType] = {}
    keywords: list[tuple[str, ThreatType]] = []
    techniques: dict[ThreatType, AttackTechniqueRef] = {}
    text = resources.files("malcdf.data").joinpath("ontology.map").read_text("utf-8")
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        kind = parts[0]
        if kind == "technique":
            ttype = ThreatType[parts[1]]
            techniques[ttype] = AttackTechniqueRef(parts[2], " ".join(parts[3:]))
        elif kind == "synonym":
            ttype = ThreatType[parts[1]]
            phrase = " ".join(parts[2:]).lower()
            if phrase in synonyms and synonyms[phrase] is not ttype:
                raise ValueError(f"ontology.map:{lineno}: phrase maps to two types")
            synonyms[phrase] = ttype
        elif kind == "keyword":
            keywords.append((" ".join(parts[2:]).lower(), ThreatType[parts[1]]))
        else:
            raise ValueError(f"ontology.map:{lineno}: unknown directive {kind!r}")
    return synonyms, keywords, techniques


_SYNONYMS, _KEYWORDS, _TECHNIQUES = _load_mapping()

# Canonical display names resolve to themselves so normalize_term is
# idempotent over its own outputs.
for _t in ThreatType:
    _SYNONYMS.setdefault(_t.display_name.lower(), _t)
    _SYNONYMS.setdefault(_t.value.lower().replace("_", " "), _t)


def normalize_term(raw: str) -> ThreatType:
    """Map free-text threat language onto the closed taxonomy.

    Exact synonym lookup first, then substring keyword fallback.  Unmatched
    text raises UNKNOWN_TERM rather than silently defaulting to benign.
    """
    cleaned = re.sub(r"\s+", " ", raw.strip().lower())
    if not cleaned:
        raise UnknownTerm("empty threat term")
    hit = _SYNONYMS.get(cleaned)
    if hit is not None:
        return hit
    for needle, ttype in _KEYWORDS:
        if needle in cleaned:
            return ttype
    raise UnknownTerm(f"unrecognized threat term: {raw!r}")


def technique_for(t: ThreatType) -> Optional[AttackTechniqueRef]:
    """Static ATT&CK mapping; total over ThreatType, BENIGN maps to none."""
    if t is ThreatType.BENIGN:
        return None
    return _TECHNIQUES[t]


def validate_verdict(v) -> list[str]:
    """Return every violation in a verdict-shaped object (empty list = ok).

    Accepts any object with threat_type / severity / confidence / is_attack
    and optionally a technique ref; collects all problems instead of
    stopping at the first.
    """
    violations: list[str] = []
    ttype = getattr(v, "threat_type", None)
    if not isinstance(ttype, ThreatType):
        violations.append(f"threat_type not in taxonomy: {ttype!r}")
        ttype = None
    sev = getattr(v, "severity", None)
    if not isinstance(sev, Severity):
        violations.append(f"severity not in scale: {sev!r}")
    conf = getattr(v, "confidence", None)
    if not isinstance(conf, (int, float)) or not (0.0 <= conf <= 1.0):
        violations.append(f"confidence out of range: {conf!r}")
    is_attack = getattr(v, "is_attack", None)
    if ttype is not None and is_attack is not None:
        if (ttype is ThreatType.BENIGN) == bool(is_attack):
            violations.append("is_attack inconsistent with threat_type")
    technique = getattr(v, "technique", None)
    if technique is not None and ttype is not None:
        expected = technique_for(ttype)
        if expected is None:
            violations.append("technique on benign verdict")
        elif technique.technique_id != expected.technique_id:
            violations.append(
                f"technique {technique.technique_id} inconsistent with {ttype.value}"
            )
    return violations
