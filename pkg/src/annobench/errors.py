"""Exception hierarchy shared across the workbench.

Three broad families matter for the CLI exit codes: usage problems,
data problems (bad files, bad schemas, bad references), and backend
problems (the model server). Everything derives from AnnobenchError so
callers can catch the whole family at once.
"""

from __future__ import annotations


class AnnobenchError(Exception):
    """Base class for all workbench errors."""


class DataError(AnnobenchError):
    """A problem with input data or on-disk artifacts."""


# corpus
class NoSectionsFound(DataError):
    """No section header alias matched anywhere in a report."""


class DuplicateReportId(DataError):
    pass


# schema
class SchemaParseError(DataError):
    """Schema file failed to parse; message carries row/column context."""


class DuplicateCode(SchemaParseError):
    pass


class DanglingGroupRef(SchemaParseError):
    pass


class InvalidWeight(SchemaParseError):
    pass


# prompts
class MissingFewShots(DataError):
    """A prompt config asked for more shots than examples exist."""


# backends
class BackendError(AnnobenchError):
    """A problem talking to a generation backend."""


class BackendUnavailable(BackendError):
    """Connection refused or otherwise unreachable."""


class BackendTimeout(BackendError):
    pass


class BackendServerError(BackendError):
    """The server answered, but not with a usable completion."""


class JudgeUnavailable(BackendError):
    """A judge-path comparison was requested but no judge is configured."""


# runner / store
class OutputConflict(DataError):
    """A run directory exists with a different configuration."""


class StoreError(DataError):
    pass


class LockHeld(StoreError):
    """Another writer holds the run-directory lock."""


class UnknownComparison(StoreError):
    pass


# evaluate / disagree
class MissingGold(DataError):
    """A scored report has no gold annotation."""


class CorpusMismatch(DataError):
    """Two runs being compared do not cover the same report ids."""
