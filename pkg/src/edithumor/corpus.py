"""Humicroedit CSV ingestion.

Task-1 files have the columns ``id, original, edit, grades, meanGrade``.
Task-2 files carry the same columns twice with ``1``/``2`` suffixes plus a
``label`` column. ``grades``/``meanGrade``/``label`` may be absent on
unlabeled test files.
"""

from __future__ import annotations

import csv
import math
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import MalformedEdit, MissingColumn, ParseError
from .text import PAD_ID, Vocab, tokenize

TASK1_COLUMNS = ("id", "original", "edit", "grades", "meanGrade")
TASK1_REQUIRED = ("id", "original", "edit")
MIN_GRADE, MAX_GRADE = 0.0, 3.0


@dataclass(frozen=True)
class RawRecord:
    id: str
    original: str
    edit: str
    mean_grade: float | None = None
    grades: str | None = None

    @property
    def edited(self) -> str:
        return apply_edit(self.original, self.edit)


@dataclass(frozen=True)
class PairRecord:
    id: str
    record_a: RawRecord
    record_b: RawRecord
    label: int | None = None


@dataclass(frozen=True)
class Example:
    id: str
    tokens: np.ndarray
    true_length: int
    target: float | None = None


@dataclass
class LoadReport:
    n_records: int = 0
    n_empty: int = 0
    empty_ids: list[str] = field(default_factory=list)
    n_truncated: int = 0
    vocab_size: int | None = None


def _edit_span(original: str) -> tuple[int, int]:
    start = original.find("<")
    end = original.find("/>")
    if (
        start < 0
        or end < 0
        or original.count("<") != 1
        or original.count("/>") != 1
        or end < start
    ):
        raise MalformedEdit(f"expected exactly one <word/> span in {original!r}")
    return start, end + 2


def apply_edit(original: str, edit: str) -> str:
    """Replace the ``<word/>`` span of ``original`` with ``edit``."""
    if not edit:
        raise MalformedEdit("edit word is empty")
    start, stop = _edit_span(original)
    return original[:start] + edit + original[stop:]


def _parse_grade(value: str, row: int, side: str | None) -> float | None:
    value = value.strip()
    if value == "":
        return None
    try:
        grade = float(value)
    except ValueError:
        raise ParseError(f"meanGrade {value!r} is not a number", row, side) from None
    if not (MIN_GRADE <= grade <= MAX_GRADE) or math.isnan(grade):
        raise ParseError(f"meanGrade {grade} outside [0, 3]", row, side)
    return grade


def _side_ids(pair_id: str) -> tuple[str, str]:
    """Official pair ids are ``"<id_a>-<id_b>"``; anything else is reused per side."""
    parts = pair_id.split("-")
    if len(parts) == 2 and all(parts):
        return parts[0], parts[1]
    return pair_id, pair_id


def _record(row: dict, suffix: str, rownum: int, side: str | None, rid=None) -> RawRecord:
    original = row["original" + suffix]
    edit = row["edit" + suffix]
    if original is None or edit is None:
        raise ParseError("missing fields", rownum, side)
    try:
        _edit_span(original)
    except MalformedEdit as exc:
        raise ParseError(str(exc), rownum, side) from None
    if not edit.strip():
        raise ParseError("edit word is empty", rownum, side)
    grade_text = row.get("meanGrade" + suffix)
    grades = row.get("grades" + suffix)
    return RawRecord(
        id=row["id"] if rid is None else rid,
        original=original,
        edit=edit,
        mean_grade=None if grade_text is None else _parse_grade(grade_text, rownum, side),
        grades=grades,
    )


def _read_rows(path: str | Path, required: Sequence[str]):
    with open(path, encoding="utf-8", newline="") as f:
        reader = csv.DictReader(f)
        header = reader.fieldnames
        if header is None:
            raise MissingColumn(f"{path}: missing header row")
        missing = [c for c in required if c not in header]
        if missing:
            raise MissingColumn(f"{path}: missing column(s) {', '.join(missing)}")
        # rownum is the physical line number; the header is line 1
        for row in reader:
            rownum = reader.line_num
            if None in row or any(v is None for v in row.values()):
                raise ParseError(f"expected {len(header)} fields", rownum)
            yield rownum, row


def load_task1_csv(path: str | Path, require_labels: bool = False) -> list[RawRecord]:
    records = []
    for rownum, row in _read_rows(path, TASK1_REQUIRED):
        rec = _record(row, "", rownum, None)
        if require_labels and rec.mean_grade is None:
            raise ParseError("meanGrade missing on a labeled split", rownum)
        records.append(rec)
    return records


def load_task2_csv(path: str | Path, require_labels: bool = False) -> list[PairRecord]:
    required = ["id"] + [c + s for s in ("1", "2") for c in TASK1_REQUIRED[1:]]
    pairs = []
    for rownum, row in _read_rows(path, required):
        id_a, id_b = _side_ids(row["id"])
        a = _record(row, "1", rownum, "a", id_a)
        b = _record(row, "2", rownum, "b", id_b)
        label = row.get("label")
        if label is not None and label.strip() != "":
            try:
                label = int(label)
            except ValueError:
                raise ParseError(f"label {label!r} is not an integer", rownum) from None
            if label not in (0, 1, 2):
                raise ParseError(f"label {label} not in {{0, 1, 2}}", rownum)
        else:
            label = None
        if require_labels and label is None:
            raise ParseError("label missing on a labeled split", rownum)
        pairs.append(PairRecord(id=row["id"], record_a=a, record_b=b, label=label))
    return pairs


def write_task1_csv(records: Iterable[RawRecord], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(TASK1_COLUMNS)
        for r in records:
            grade = "" if r.mean_grade is None else repr(r.mean_grade)
            writer.writerow([r.id, r.original, r.edit, r.grades or "", grade])


def write_task2_csv(pairs: Iterable[PairRecord], path: str | Path) -> None:
    cols = ["id"] + [c + s for s in ("1", "2") for c in TASK1_COLUMNS[1:]] + ["label"]
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(cols)
        for p in pairs:
            row = [p.id]
            for r in (p.record_a, p.record_b):
                grade = "" if r.mean_grade is None else repr(r.mean_grade)
                row += [r.original, r.edit, r.grades or "", grade]
            row.append("" if p.label is None else str(p.label))
            writer.writerow(row)


def record_tokens(record: RawRecord) -> list[str]:
    return tokenize(record.edited)


def to_example(record: RawRecord, vocab: Vocab, seq_len: int = 20) -> Example:
    ids = vocab.encode(record_tokens(record))[:seq_len]
    tokens = np.full(seq_len, PAD_ID, dtype=np.int64)
    tokens[: len(ids)] = ids
    return Example(id=record.id, tokens=tokens, true_length=len(ids), target=record.mean_grade)


def to_examples(
    records: Sequence[RawRecord], vocab: Vocab, seq_len: int = 20
) -> tuple[list[Example], LoadReport]:
    report = LoadReport(n_records=len(records), vocab_size=len(vocab))
    examples = []
    for rec in records:
        ex = to_example(rec, vocab, seq_len)
        n_tokens = len(record_tokens(rec))
        if n_tokens == 0:
            report.n_empty += 1
            report.empty_ids.append(rec.id)
        elif n_tokens > seq_len:
            report.n_truncated += 1
        examples.append(ex)
    return examples, report


def stack(examples: Sequence[Example]) -> tuple[np.ndarray, np.ndarray, np.ndarray | None]:
    """Batch arrays (tokens B x L, lengths B, targets B or None)."""
    tokens = np.stack([ex.tokens for ex in examples]) if examples else np.zeros((0, 0), np.int64)
    lengths = np.array([ex.true_length for ex in examples], dtype=np.int64)
    if any(ex.target is None for ex in examples):
        targets = None
    else:
        targets = np.array([ex.target for ex in examples], dtype=np.float64)
    return tokens, lengths, targets
