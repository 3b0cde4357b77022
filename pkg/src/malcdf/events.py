"""Flow-record schema, CSV load/serialize, feature normalization, and the
seeded synthetic stream generator.

The per-threat-type field profiles (byte thresholds, port ranges) live in
``data/threat_profiles.json`` and are exported here as constants; the
rule-based detection provider reads the same table, so generator and rules
cannot drift apart.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import random
from dataclasses import dataclass, field, replace
from enum import Enum
from importlib import resources
from typing import Iterator, Optional

from .errors import BadConfig, BadValue, MalformedCsv, MissingColumn, UnknownFeature, UnknownTerm
from .ontology import ThreatType, normalize_term


class Protocol(str, Enum):
    TCP = "TCP"
    UDP = "UDP"
    HTTP = "HTTP"
    ICMP = "ICMP"
    OTHER = "OTHER"


@dataclass(frozen=True)
class GroundTruthLabel:
    is_attack: bool
    threat_type: Optional[ThreatType] = None

    def __post_init__(self):
        if not self.is_attack and self.threat_type is not None:
            raise BadValue("benign label cannot carry a threat type")


@dataclass(frozen=True)
class NetworkEventRecord:
    event_id: int
    src_ip: str
    dst_ip: str
    dst_port: int
    protocol: Protocol
    bytes_sent: int
    packets: int
    duration_ms: int
    extra_features: tuple[tuple[str, float], ...] = ()
    label: Optional[GroundTruthLabel] = None

    def __post_init__(self):
        if not (0 <= self.dst_port <= 65535):
            raise BadValue(f"dst_port out of range: {self.dst_port}")
        for name, value in (
            ("bytes_sent", self.bytes_sent),
            ("packets", self.packets),
            ("duration_ms", self.duration_ms),
        ):
            if value < 0:
                raise BadValue(f"{name} negative: {value}")

    @property
    def feature_names(self) -> tuple[str, ...]:
        return tuple(name for name, _ in self.extra_features)

    def to_dict(self) -> dict:
        d = {
            "event_id": self.event_id,
            "src_ip": self.src_ip,
            "dst_ip": self.dst_ip,
            "dst_port": self.dst_port,
            "protocol": self.protocol.value,
            "bytes_sent": self.bytes_sent,
            "packets": self.packets,
            "duration_ms": self.duration_ms,
            "extra_features": {k: v for k, v in self.extra_features},
        }
        if self.label is not None:
            d["label"] = {
                "is_attack": self.label.is_attack,
                "threat_type": self.label.threat_type.value if self.label.threat_type else None,
            }
        return d


class DatasetSource(str, Enum):
    UPLOAD = "UPLOAD"
    SYNTHETIC = "SYNTHETIC"
    FIXTURE = "FIXTURE"


def schema_fingerprint(feature_names: tuple[str, ...]) -> str:
    return hashlib.sha256("\n".join(feature_names).encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class Dataset:
    records: tuple[NetworkEventRecord, ...]
    schema_fingerprint: str
    source: DatasetSource

    def __post_init__(self):
        if not self.records:
            raise BadValue("empty dataset")
        ids = [r.event_id for r in self.records]
        if len(set(ids)) != len(ids):
            raise BadValue("duplicate event_id in dataset")
        names = self.records[0].feature_names
        for r in self.records:
            if r.feature_names != names:
                raise BadValue("inconsistent extra_feature schema across records")

    @classmethod
    def from_records(cls, records, source: DatasetSource) -> "Dataset":
        records = tuple(records)
        if not records:
            raise BadValue("empty dataset")
        return cls(records, schema_fingerprint(records[0].feature_names), source)

    @property
    def attack_count(self) -> int:
        return sum(1 for r in self.records if r.label and r.label.is_attack)


@dataclass(frozen=True)
class StreamConfig:
    total_records: int
    attack_records: int
    seed: int
    inter_event_delay_ms: int = 0
    threat_mix: dict[ThreatType, float] = field(default_factory=dict)

    def validate(self) -> None:
        if self.total_records <= 0:
            raise BadConfig("total_records must be positive")
        if not (0 <= self.attack_records <= self.total_records):
            raise BadConfig("attack_records out of range")
        if self.inter_event_delay_ms < 0:
            raise BadConfig("inter_event_delay_ms negative")
        mix = self.threat_mix or DEFAULT_THREAT_MIX
        if any(w < 0 for w in mix.values()):
            raise BadConfig("negative threat-mix weight")
        if self.attack_records > 0 and not any(w > 0 for w in mix.values()):
            raise BadConfig("threat mix has no positive weight")
        if ThreatType.BENIGN in mix:
            raise BadConfig("BENIGN cannot appear in the attack mix")


# --- shared threat profiles -------------------------------------------------

_PROFILE_DATA = json.loads(
    resources.files("malcdf.data").joinpath("threat_profiles.json").read_text("utf-8")
)

COMMON_SERVICE_PORTS: frozenset[int] = frozenset(_PROFILE_DATA["common_service_ports"])
BENIGN_PROFILE: dict = _PROFILE_DATA["benign"]
THREAT_PROFILES: dict[ThreatType, dict] = {
    ThreatType[k]: v for k, v in _PROFILE_DATA["profiles"].items()
}
RULE_PRECEDENCE: tuple[ThreatType, ...] = tuple(
    ThreatType[k] for k in _PROFILE_DATA["rule_precedence"]
)

DEFAULT_THREAT_MIX: dict[ThreatType, float] = {
    ThreatType.DATA_EXFILTRATION: 0.4,
    ThreatType.MALWARE_BEACONING: 0.25,
    ThreatType.UNAUTHORIZED_ACCESS: 0.15,
    ThreatType.DDOS: 0.1,
    ThreatType.PORT_SCAN: 0.05,
    ThreatType.BRUTE_FORCE: 0.05,
}

EXTRA_FEATURE_NAMES: tuple[str, ...] = (
    "flow_iat_mean",
    "fwd_pkt_len_mean",
    "down_up_ratio",
)

# --- CSV parsing ------------------------------------------------------------

_COLUMN_ALIASES = {
    "src_ip": {"src_ip", "source ip", "src ip", "source_ip"},
    "dst_ip": {"dst_ip", "destination ip", "dst ip", "destination_ip"},
    "dst_port": {"dst_port", "destination port", "port", "dst port"},
    "protocol": {"protocol", "proto", "proto."},
    "bytes_sent": {"bytes_sent", "bytes sent", "total bytes", "bytes"},
}
_OPTIONAL_ALIASES = {
    "event_id": {"event_id", "event id", "id"},
    "packets": {"packets", "total packets", "packet count"},
    "duration_ms": {"duration_ms", "duration", "flow duration"},
}
_LABEL_NAMES = {"label"}


def _parse_protocol(raw: str) -> Protocol:
    try:
        return Protocol(raw.strip().upper())
    except ValueError:
        return Protocol.OTHER


def _parse_label(raw: str) -> Optional[GroundTruthLabel]:
    text = raw.strip()
    if not text:
        return None
    if text.upper() == "BENIGN":
        return GroundTruthLabel(is_attack=False)
    try:
        ttype = normalize_term(text.replace("_", " "))
    except UnknownTerm:
        return GroundTruthLabel(is_attack=True, threat_type=None)
    if ttype is ThreatType.BENIGN:
        return GroundTruthLabel(is_attack=False)
    return GroundTruthLabel(is_attack=True, threat_type=ttype)


def parse_dataset(csv_bytes: bytes, source: DatasetSource = DatasetSource.UPLOAD) -> Dataset:
    """Parse a CICIDS-schema CSV into a Dataset.

    Required columns (matched case-insensitively after trimming):
    src/dst IP, destination port, protocol, bytes sent.  All remaining
    numeric columns become the ordered extra-feature tail.
    """
    try:
        text = csv_bytes.decode("utf-8")
    except UnicodeDecodeError as e:
        raise MalformedCsv(f"not UTF-8: {e}") from e
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise MalformedCsv("empty file") from None

    norm_header = [h.strip().lower() for h in header]
    col_index: dict[str, int] = {}
    for target, aliases in {**_COLUMN_ALIASES, **_OPTIONAL_ALIASES}.items():
        for i, name in enumerate(norm_header):
            if name in aliases:
                col_index[target] = i
                break
    for required in _COLUMN_ALIASES:
        if required not in col_index:
            raise MissingColumn(f"required column missing: {required}")
    label_idx = next((i for i, n in enumerate(norm_header) if n in _LABEL_NAMES), None)

    claimed = set(col_index.values()) | ({label_idx} if label_idx is not None else set())
    extra_indices = [i for i in range(len(header)) if i not in claimed]
    extra_names = tuple(header[i].strip() for i in extra_indices)

    records: list[NetworkEventRecord] = []
    for row_num, row in enumerate(reader, 2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != len(header):
            raise MalformedCsv(f"row {row_num}: expected {len(header)} cells, got {len(row)}")
        try:
            extra = tuple(
                (name, float(row[i].strip().replace(",", "")))
                for name, i in zip(extra_names, extra_indices)
            )
            record = NetworkEventRecord(
                event_id=(
                    int(row[col_index["event_id"]]) if "event_id" in col_index else len(records) + 1
                ),
                src_ip=row[col_index["src_ip"]].strip(),
                dst_ip=row[col_index["dst_ip"]].strip(),
                dst_port=int(row[col_index["dst_port"]].strip()),
                protocol=_parse_protocol(row[col_index["protocol"]]),
                bytes_sent=int(row[col_index["bytes_sent"]].strip().replace(",", "")),
                packets=int(row[col_index["packets"]].strip()) if "packets" in col_index else 0,
                duration_ms=(
                    int(row[col_index["duration_ms"]].strip()) if "duration_ms" in col_index else 0
                ),
                extra_features=extra,
                label=_parse_label(row[label_idx]) if label_idx is not None else None,
            )
        except BadValue:
            raise
        except ValueError as e:
            raise MalformedCsv(f"row {row_num}: {e}") from e
        records.append(record)
    if not records:
        raise MalformedCsv("no data rows")
    return Dataset.from_records(records, source)


def serialize_dataset(dataset: Dataset) -> bytes:
    """Inverse of parse_dataset; round-trips losslessly."""
    extra_names = dataset.records[0].feature_names
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(
        ["event_id", "src_ip", "dst_ip", "dst_port", "protocol", "bytes_sent",
         "packets", "duration_ms", *extra_names, "Label"]
    )
    for r in dataset.records:
        if r.label is None:
            label = ""
        elif not r.label.is_attack:
            label = "BENIGN"
        else:
            label = r.label.threat_type.value if r.label.threat_type else "ATTACK"
        writer.writerow(
            [r.event_id, r.src_ip, r.dst_ip, r.dst_port, r.protocol.value, r.bytes_sent,
             r.packets, r.duration_ms, *(repr(v) for _, v in r.extra_features), label]
        )
    return out.getvalue().encode("utf-8")


# --- normalization ----------------------------------------------------------

def feature_stats(dataset: Dataset) -> dict[str, tuple[float, float]]:
    """Per-feature (min, max) over the extra-feature tail."""
    stats: dict[str, tuple[float, float]] = {}
    for r in dataset.records:
        for name, value in r.extra_features:
            lo, hi = stats.get(name, (value, value))
            stats[name] = (min(lo, value), max(hi, value))
    return stats


def normalize_record(
    raw: NetworkEventRecord, stats: dict[str, tuple[float, float]]
) -> NetworkEventRecord:
    """Min-max scale extra features to [0,1]; zero-range features map to 0."""
    scaled = []
    for name, value in raw.extra_features:
        if name not in stats:
            raise UnknownFeature(f"no stats for feature {name!r}")
        lo, hi = stats[name]
        scaled.append((name, 0.0 if hi == lo else (value - lo) / (hi - lo)))
    return replace(raw, extra_features=tuple(scaled))


# --- synthetic stream -------------------------------------------------------

def _rand_int(rng: random.Random, bounds) -> int:
    return rng.randint(bounds[0], bounds[1])


def _attack_fields(rng: random.Random, ttype: ThreatType) -> dict:
    gen = THREAT_PROFILES[ttype]["generate"]
    if "port_range" in gen:
        lo, hi = gen["port_range"]
        port = rng.randint(lo, hi)
        while port in COMMON_SERVICE_PORTS:
            port = rng.randint(lo, hi)
    else:
        port = rng.choice(gen["ports"])
    return {
        "dst_port": port,
        "protocol": Protocol(rng.choice(gen["protocols"])),
        "bytes_sent": _rand_int(rng, gen["bytes"]),
        "packets": _rand_int(rng, gen["packets"]),
        "duration_ms": _rand_int(rng, gen["duration_ms"]),
    }


def _benign_fields(rng: random.Random) -> dict:
    gen = BENIGN_PROFILE
    return {
        "dst_port": rng.choice(gen["ports"]),
        "protocol": Protocol(rng.choice(gen["protocols"])),
        "bytes_sent": _rand_int(rng, gen["bytes"]),
        "packets": _rand_int(rng, gen["packets"]),
        "duration_ms": _rand_int(rng, gen["duration_ms"]),
    }


def generate_stream(config: StreamConfig) -> Iterator[NetworkEventRecord]:
    """Deterministic synthetic stream: same config, same records, always."""
    config.validate()
    rng = random.Random(config.seed)
    attack_positions = set(rng.sample(range(config.total_records), config.attack_records))
    mix = config.threat_mix or DEFAULT_THREAT_MIX
    types, weights = zip(*sorted(mix.items(), key=lambda kv: kv[0].value)) if mix else ((), ())

    for i in range(config.total_records):
        if i in attack_positions:
            ttype = rng.choices(types, weights=weights)[0]
            fields = _attack_fields(rng, ttype)
            label = GroundTruthLabel(is_attack=True, threat_type=ttype)
            src = f"192.168.1.{rng.randint(2, 254)}"
            dst = f"10.0.0.{rng.randint(2, 254)}"
        else:
            fields = _benign_fields(rng)
            label = GroundTruthLabel(is_attack=False)
            src = f"192.168.1.{rng.randint(2, 254)}"
            dst = f"172.16.0.{rng.randint(2, 254)}"
        extra = tuple((name, round(rng.uniform(0, 1000), 3)) for name in EXTRA_FEATURE_NAMES)
        yield NetworkEventRecord(
            event_id=i + 1, src_ip=src, dst_ip=dst, extra_features=extra, label=label, **fields
        )


def generate_dataset(config: StreamConfig) -> Dataset:
    return Dataset.from_records(generate_stream(config), DatasetSource.SYNTHETIC)
