"""Single-model baseline: one detection call per record, no secure channel,
no intelligence pass, no ontology normalization, no consensus."""

from __future__ import annotations

from typing import Optional

from ..agents import Provider
from ..errors import ProviderFailed
from ..events import Dataset


def single_llm_run(data: Dataset, provider: Provider) -> list[Optional[bool]]:
    """One is_attack prediction per record; provider failures become
    no-predictions (None) rather than aborting the run."""
    predictions: list[Optional[bool]] = []
    for record in data.records:
        try:
            result = provider.complete("single_llm", record, {})
            predictions.append(bool(result.payload["is_attack"]))
        except (ProviderFailed, KeyError):
            predictions.append(None)
    return predictions
