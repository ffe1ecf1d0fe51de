"""Typed error hierarchy shared across all subsystems.

Every error carries a stable ``code`` string: the API maps codes to HTTP
statuses and failed jobs record the code verbatim, so codes are part of
the wire contract and must not be renamed casually.
"""

from __future__ import annotations


class SlidegradeError(Exception):
    """Base class for all domain errors."""

    code = "internal"

    def __init__(self, message: str = ""):
        super().__init__(message or self.code)
        self.message = message or self.code


# --- deck parsing -----------------------------------------------------------

class DeckParseError(SlidegradeError):
    code = "deck_parse_error"


class NotAZipArchive(DeckParseError):
    code = "NotAZipArchive"


class MissingPresentationPart(DeckParseError):
    code = "MissingPresentationPart"


class XmlMalformed(DeckParseError):
    code = "XmlMalformed"

    def __init__(self, part_name: str, message: str = ""):
        super().__init__(message or f"malformed XML in part {part_name!r}")
        self.part_name = part_name


class LimitExceeded(SlidegradeError):
    code = "LimitExceeded"

    def __init__(self, limit_name: str, message: str = ""):
        super().__init__(message or f"limit exceeded: {limit_name}")
        self.limit_name = limit_name


# --- rubric scoring ---------------------------------------------------------

class RubricError(SlidegradeError):
    code = "rubric_error"


class MissingItemScore(RubricError):
    code = "MissingItemScore"

    def __init__(self, item_id: str):
        super().__init__(f"no score supplied for rubric item {item_id!r}")
        self.item_id = item_id


class UnknownItemScore(RubricError):
    code = "UnknownItemScore"

    def __init__(self, item_id: str):
        super().__init__(f"score supplied for unknown rubric item {item_id!r}")
        self.item_id = item_id


class ScoreOutOfRange(RubricError):
    code = "ScoreOutOfRange"

    def __init__(self, item_id: str, value=None):
        super().__init__(f"score for item {item_id!r} out of range [1,5]: {value!r}")
        self.item_id = item_id
        self.value = value


# --- evaluation -------------------------------------------------------------

class EvaluationError(SlidegradeError):
    code = "evaluation_error"


class ProviderUnreachable(EvaluationError):
    code = "ProviderUnreachable"


class ProviderTimeout(EvaluationError):
    code = "ProviderTimeout"


class SchemaInvalidAfterRepairs(EvaluationError):
    code = "SchemaInvalidAfterRepairs"

    def __init__(self, attempts: int, last_errors: list[str]):
        super().__init__(
            f"provider output still schema-invalid after {attempts} repair attempt(s): "
            + "; ".join(last_errors[:5])
        )
        self.attempts = attempts
        self.last_errors = list(last_errors)


class ItemCoverageMismatch(EvaluationError):
    code = "ItemCoverageMismatch"

    def __init__(self, attempts: int, last_errors: list[str]):
        super().__init__(
            f"provider output covers the wrong rubric items after {attempts} repair attempt(s)"
        )
        self.attempts = attempts
        self.last_errors = list(last_errors)


# --- persistence / access ---------------------------------------------------

class NotFound(SlidegradeError):
    code = "NotFound"


class Forbidden(SlidegradeError):
    code = "Forbidden"


class CourseNotFound(NotFound):
    code = "CourseNotFound"


class RubricNotFound(NotFound):
    code = "RubricNotFound"


class NotEnrolled(Forbidden):
    code = "NotEnrolled"


# --- imports ----------------------------------------------------------------

class ImportError_(SlidegradeError):
    code = "import_error"


class UnknownSheetKind(ImportError_):
    code = "UnknownSheetKind"


class SheetSchemaMismatch(ImportError_):
    code = "SchemaMismatch"

    def __init__(self, row: int, column: str, message: str = ""):
        super().__init__(message or f"row {row}, column {column!r}: schema mismatch")
        self.row = row
        self.column = column


# --- config -----------------------------------------------------------------

class ConfigError(SlidegradeError):
    code = "config_error"
