"""Corpus record validation.

Checks one decoded JSONL record before it becomes a Document:
- Required fields present ("id", "sentences")
- Sentences are non-empty lists of string tokens
- Optional highlights and labels are well formed
"""

from dataclasses import dataclass, field
from typing import Any


@dataclass
class ValidationError:
    """One problem found in a record."""

    path: str  # location inside the record, e.g. "sentences[2][0]"
    message: str
    severity: str = "error"  # or "warning"

    def describe(self) -> str:
        return f"{self.message} at '{self.path}'" if self.path else self.message


@dataclass
class ValidationResult:
    """Errors reject the record; warnings are logged and the record is kept."""

    errors: list[ValidationError] = field(default_factory=list)
    warnings: list[ValidationError] = field(default_factory=list)

    @property
    def valid(self) -> bool:
        return not self.errors

    def first_error(self) -> str | None:
        return self.errors[0].describe() if self.errors else None


def _validate_token_grid(value: Any, field: str, errors: list[ValidationError]) -> None:
    """Check a list of sentences, each a non-empty list of string tokens."""
    if not isinstance(value, list):
        errors.append(ValidationError(field, f"'{field}' must be an array of sentences"))
        return
    if not value:
        errors.append(ValidationError(field, f"'{field}' must contain at least one sentence"))
        return
    for i, sentence in enumerate(value):
        path = f"{field}[{i}]"
        if not isinstance(sentence, list):
            errors.append(ValidationError(path, "Sentence must be an array of tokens"))
        elif not sentence:
            errors.append(ValidationError(path, "Sentence must not be empty"))
        else:
            for j, token in enumerate(sentence):
                if not isinstance(token, str) or not token:
                    errors.append(ValidationError(f"{path}[{j}]", "Token must be a non-empty string"))
                    break


def validate_record(record: Any) -> ValidationResult:
    """Validate a decoded corpus record.

    Args:
        record: The object decoded from one JSONL line

    Returns:
        ValidationResult with errors and warnings
    """
    errors: list[ValidationError] = []
    warnings: list[ValidationError] = []

    if not isinstance(record, dict):
        errors.append(ValidationError("", "Record must be a JSON object"))
        return ValidationResult(errors, warnings)

    if "id" not in record:
        errors.append(ValidationError("", "Record must have 'id' field"))
    elif not isinstance(record["id"], str):
        errors.append(ValidationError("id", "Record 'id' must be a string"))

    if "sentences" not in record:
        errors.append(ValidationError("", "Record must have 'sentences' field"))
    else:
        _validate_token_grid(record["sentences"], "sentences", errors)

    if "highlights" in record and record["highlights"] is not None:
        _validate_token_grid(record["highlights"], "highlights", errors)

    if "labels" in record and record["labels"] is not None:
        labels = record["labels"]
        if not isinstance(labels, list) or any(type(bit) is not int or bit not in (0, 1) for bit in labels):
            errors.append(ValidationError("labels", "'labels' must be an array of 0/1 integers"))
        elif isinstance(record.get("sentences"), list) and len(labels) != len(record["sentences"]):
            errors.append(
                ValidationError(
                    "labels",
                    f"'labels' has {len(labels)} entries but the record has {len(record['sentences'])} sentences",
                )
            )

    known = {"id", "sentences", "highlights", "labels"}
    for key in sorted(set(record) - known):
        warnings.append(ValidationError(key, f"Unknown field '{key}' ignored", severity="warning"))

    return ValidationResult(errors, warnings)
