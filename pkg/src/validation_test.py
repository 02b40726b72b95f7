"""Tests for corpus record validation."""

from src.validation import ValidationError, ValidationResult, validate_record


def _record(**overrides):
    record = {"id": "d1", "sentences": [["a", "b"], ["c"]], "highlights": [["a"]]}
    record.update(overrides)
    return record


# ##################################################################
# test ValidationResult
def test_result_with_only_warnings_is_valid():
    result = ValidationResult(warnings=[ValidationError("extra", "Unknown field", severity="warning")])
    assert result.valid
    assert result.first_error() is None


def test_first_error_names_location():
    result = ValidationResult(errors=[ValidationError("sentences[1]", "Sentence must not be empty"), ValidationError("id", "x")])
    assert not result.valid
    assert result.first_error() == "Sentence must not be empty at 'sentences[1]'"


def test_first_error_without_location():
    result = ValidationResult(errors=[ValidationError("", "Record must be a JSON object")])
    assert result.first_error() == "Record must be a JSON object"


# ##################################################################
# test validate_record - structure
def test_valid_record():
    result = validate_record(_record())
    assert result.valid
    assert result.errors == []


def test_highlights_optional():
    record = _record()
    del record["highlights"]
    assert validate_record(record).valid


def test_record_not_dict():
    result = validate_record(["a"])
    assert not result.valid
    assert "must be a JSON object" in result.errors[0].message


def test_missing_sentences_named():
    record = _record()
    del record["sentences"]
    result = validate_record(record)
    assert not result.valid
    assert any("'sentences'" in e.message for e in result.errors)


def test_missing_id():
    record = _record()
    del record["id"]
    assert any("'id'" in e.message for e in validate_record(record).errors)


def test_id_must_be_string():
    result = validate_record(_record(id=7))
    assert result.errors[0].path == "id"


# ##################################################################
# test validate_record - token grids
def test_empty_document_rejected():
    result = validate_record(_record(sentences=[]))
    assert not result.valid
    assert "at least one sentence" in result.errors[0].message


def test_empty_sentence_rejected():
    result = validate_record(_record(sentences=[["a"], []]))
    assert result.errors[0].path == "sentences[1]"


def test_non_string_token_rejected():
    result = validate_record(_record(sentences=[["a", 3]]))
    assert result.errors[0].path == "sentences[0][1]"


def test_bad_highlights_rejected():
    result = validate_record(_record(highlights="a summary"))
    assert result.errors[0].path == "highlights"


# ##################################################################
# test validate_record - labels and unknown fields
def test_labels_must_match_sentence_count():
    result = validate_record(_record(labels=[1]))
    assert not result.valid
    assert "2 sentences" in result.errors[0].message


def test_labels_must_be_bits():
    assert not validate_record(_record(labels=[1, 2])).valid
    assert not validate_record(_record(labels=[1.0, 0])).valid
    assert not validate_record(_record(labels=[True, False])).valid
    assert validate_record(_record(labels=[0, 1])).valid


def test_unknown_field_is_warning():
    result = validate_record(_record(source="cnn"))
    assert result.valid
    assert result.warnings[0].path == "source"
