"""Error types shared across the pipeline.

Every error carries a stable machine-readable ``code`` so CLI exit paths
and HTTP responses can surface it without string matching.
"""

from __future__ import annotations


class MalcdfError(Exception):
    """Base class; ``code`` is stable across releases."""

    code = "MALCDF_ERROR"

    def __init__(self, message: str = ""):
        super().__init__(message or self.code)
        self.message = message or self.code


class MalformedCsv(MalcdfError):
    code = "MALFORMED_CSV"


class MissingColumn(MalcdfError):
    code = "MISSING_COLUMN"


class BadValue(MalcdfError):
    code = "BAD_VALUE"


class BadConfig(MalcdfError):
    code = "BAD_CONFIG"


class UnknownFeature(MalcdfError):
    code = "UNKNOWN_FEATURE"


class UnknownTerm(MalcdfError):
    code = "UNKNOWN_TERM"


class KeyUnavailable(MalcdfError):
    code = "KEY_UNAVAILABLE"


class AuthFail(MalcdfError):
    code = "AUTH_FAIL"


class Replay(MalcdfError):
    code = "REPLAY"


class UnknownChannel(AuthFail):
    # A header rewrite onto a nonexistent channel is still an
    # authentication failure from the caller's point of view.
    code = "UNKNOWN_CHANNEL"


class SchemaReject(MalcdfError):
    code = "SCHEMA_REJECT"


class ProviderFailed(MalcdfError):
    code = "PROVIDER_FAILED"


class StageFailed(MalcdfError):
    code = "STAGE_FAILED"

    def __init__(self, stage: str, message: str = ""):
        super().__init__(f"stage {stage}: {message}")
        self.stage = stage


class SclReject(MalcdfError):
    code = "SCL_REJECT"


class RunConfigInvalid(MalcdfError):
    code = "RUN_CONFIG_INVALID"


class SchemaMismatch(MalcdfError):
    code = "SCHEMA_MISMATCH"


class EmptyDataset(MalcdfError):
    code = "EMPTY_DATASET"


class LengthMismatch(MalcdfError):
    code = "LENGTH_MISMATCH"


class FixtureCorrupt(MalcdfError):
    code = "FIXTURE_CORRUPT"


class LeakageDetected(MalcdfError):
    code = "LEAKAGE"
