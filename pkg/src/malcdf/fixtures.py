"""Shipped reference fixtures: the 50-record stream, scripted agent outputs
for the coordinated and single-model paths, the indicator list, and an
expected-results manifest.  Internal consistency is machine-checked at
load; any drift raises FIXTURE_CORRUPT.
"""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import dataclass
from pathlib import Path

from .errors import FixtureCorrupt
from .evaluation import confusion
from .events import Dataset, DatasetSource, parse_dataset
from .agents import load_indicators
from .ontology import Severity, ThreatType


def fixtures_root() -> Path:
    env = os.environ.get("MALCDF_FIXTURES_DIR")
    if env:
        return Path(env)
    repo_root = Path(__file__).resolve().parents[2]
    candidate = repo_root / "fixtures"
    if candidate.is_dir():
        return candidate
    return Path.cwd() / "fixtures"


@dataclass(frozen=True)
class FixtureBundle:
    name: str
    dataset: Dataset
    scripted: dict[str, dict]
    indicators: frozenset[str]
    manifest: dict

    @property
    def truth(self) -> list[bool]:
        return [bool(r.label and r.label.is_attack) for r in self.dataset.records]


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def load_fixture(name: str = "paper") -> FixtureBundle:
    root = fixtures_root() / name
    manifest_path = root / "manifest.json"
    if not manifest_path.is_file():
        raise FixtureCorrupt(f"no fixture named {name!r} under {root.parent}")
    manifest = json.loads(manifest_path.read_text("utf-8"))

    for filename, expected in manifest.get("files", {}).items():
        actual = _sha256(root / filename)
        if actual != expected:
            raise FixtureCorrupt(f"{filename} checksum mismatch")

    dataset = parse_dataset((root / "stream.csv").read_bytes(), DatasetSource.FIXTURE)
    scripted = json.loads((root / "scripted.json").read_text("utf-8"))
    indicators = load_indicators((root / "indicators.txt").read_text("utf-8"))
    bundle = FixtureBundle(name, dataset, scripted, indicators, manifest)
    _self_check(bundle)
    return bundle


def _self_check(bundle: FixtureBundle) -> None:
    """Recompute every manifest aggregate from the fixture's own tables."""
    truth = bundle.truth
    manifest = bundle.manifest

    def check_matrix(key: str, predictions: list[bool]) -> None:
        matrix = confusion(predictions, truth)
        if matrix.to_dict() != manifest["confusion"][key]:
            raise FixtureCorrupt(
                f"{key} confusion {matrix.to_dict()} != manifest {manifest['confusion'][key]}"
            )

    tda = bundle.scripted["tda"]
    coordinated = [bool(tda[str(r.event_id)]["is_attack"]) for r in bundle.dataset.records]
    check_matrix("coordinated", coordinated)

    single = bundle.scripted["single_llm"]
    check_matrix(
        "single_llm",
        [bool(single[str(r.event_id)]["is_attack"]) for r in bundle.dataset.records],
    )

    severity_counts = {s.value: 0 for s in Severity}
    type_counts: dict[str, int] = {}
    for record, is_attack in zip(bundle.dataset.records, truth):
        verdict = tda[str(record.event_id)]
        if is_attack and verdict["is_attack"]:
            severity_counts[verdict["severity"]] += 1
            type_counts[verdict["threat_type"]] = type_counts.get(verdict["threat_type"], 0) + 1
    if severity_counts != manifest["severity_over_tp"]:
        raise FixtureCorrupt(f"severity split {severity_counts} != manifest")
    if type_counts != manifest["types_over_tp"]:
        raise FixtureCorrupt(f"type split {type_counts} != manifest")

    confidences = [
        float(tda[str(r.event_id)]["confidence"]) for r in bundle.dataset.records
    ]
    mean_conf = sum(confidences) / len(confidences)
    if abs(mean_conf - manifest["mean_confidence"]) > 0.01:
        raise FixtureCorrupt(f"mean scripted confidence {mean_conf} != manifest")
