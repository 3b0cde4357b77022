"""Record-to-vector mapping for the random-forest baseline.

Fixed layout: [dst_port, protocol one-hot (5), bytes_sent, packets,
duration_ms] followed by the record's extra-feature tail.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import SchemaMismatch
from ..events import Dataset, NetworkEventRecord, Protocol, schema_fingerprint

_PROTOCOLS = tuple(Protocol)
BASE_FEATURE_NAMES = (
    "dst_port",
    *(f"proto_{p.value.lower()}" for p in _PROTOCOLS),
    "bytes_sent",
    "packets",
    "duration_ms",
)


@dataclass(frozen=True)
class FeatureVector:
    values: np.ndarray
    feature_names: tuple[str, ...]


def feature_names_for(record: NetworkEventRecord) -> tuple[str, ...]:
    return BASE_FEATURE_NAMES + record.feature_names


def extract_features(record: NetworkEventRecord) -> FeatureVector:
    onehot = [1.0 if record.protocol is p else 0.0 for p in _PROTOCOLS]
    values = np.array(
        [
            float(record.dst_port),
            *onehot,
            float(record.bytes_sent),
            float(record.packets),
            float(record.duration_ms),
            *(v for _, v in record.extra_features),
        ],
        dtype=np.float64,
    )
    return FeatureVector(values, feature_names_for(record))


def dataset_matrix(dataset: Dataset) -> tuple[np.ndarray, np.ndarray, str]:
    """(X, y, vector-schema fingerprint) for a labeled dataset."""
    names = feature_names_for(dataset.records[0])
    X = np.empty((len(dataset.records), len(names)), dtype=np.float64)
    y = np.zeros(len(dataset.records), dtype=np.int64)
    for i, record in enumerate(dataset.records):
        fv = extract_features(record)
        if fv.feature_names != names:
            raise SchemaMismatch(f"record {record.event_id} has a different feature schema")
        X[i] = fv.values
        if record.label is not None and record.label.is_attack:
            y[i] = 1
    return X, y, schema_fingerprint(names)
