"""Batch sheet imports: student lists, courses and baseline rubrics.

Accepts XLSX (parsed with the same bounded ZIP+XML machinery as decks) or
CSV. Each sheet applies all-or-nothing: a validation pass runs first and
any row error aborts the import with per-row diagnostics; the apply pass
then runs inside one storage transaction.

Column schemas (header row required, case-insensitive):
    students: email, display_name, course_code [, password]
    courses:  course_code, title
    rubrics:  course_code, rubric_title, criterion, desc1..desc5 [, weight]

Rubric rows group by (course_code, rubric_title); each row is one item.
Importing over an existing rubric title creates a new snapshot.
"""

from __future__ import annotations

import csv
import io
import re
import secrets
from typing import Optional

from ..config import AppConfig
from ..errors import SheetSchemaMismatch, UnknownSheetKind
from ..ooxml import BoundedArchive, qn, read_relationships
from ..rubric import Rubric, RubricItem, validate_rubric
from ..store.base import Storage
from ..store.security import hash_password

SHEET_KINDS = ("students", "courses", "rubrics")

_EMAIL_RE = re.compile(r"^[^@\s]+@[^@\s]+\.[^@\s]+$")
_CELL_REF_RE = re.compile(r"^([A-Z]+)\d+$")

_REQUIRED_COLUMNS = {
    "students": ("email", "display_name", "course_code"),
    "courses": ("course_code", "title"),
    "rubrics": ("course_code", "rubric_title", "criterion",
                "desc1", "desc2", "desc3", "desc4", "desc5"),
}


# --- XLSX reading -------------------------------------------------------

def _column_index(ref: str) -> int:
    match = _CELL_REF_RE.match(ref or "")
    if not match:
        return 0
    index = 0
    for ch in match.group(1):
        index = index * 26 + (ord(ch) - ord("A") + 1)
    return index - 1


def _shared_strings(archive: BoundedArchive) -> list[str]:
    if "xl/sharedStrings.xml" not in archive:
        return []
    root = archive.read_xml("xl/sharedStrings.xml")
    strings = []
    for si in root.findall(qn("s:si")):
        strings.append("".join(t.text or "" for t in si.iter(qn("s:t"))))
    return strings


def _cell_value(cell, shared: list[str]) -> str:
    ctype = cell.get("t", "n")
    if ctype == "inlineStr":
        return "".join(t.text or "" for t in cell.iter(qn("s:t")))
    v = cell.find(qn("s:v"))
    raw = v.text or "" if v is not None else ""
    if ctype == "s":
        try:
            return shared[int(raw)]
        except (ValueError, IndexError):
            return ""
    if ctype == "n" and raw:
        # keep integer-valued numerics clean ("3" not "3.0")
        try:
            value = float(raw)
            return str(int(value)) if value == int(value) else str(value)
        except ValueError:
            return raw
    return raw


def read_xlsx_rows(data: bytes, config: AppConfig) -> list[list[str]]:
    """Cell matrix of the workbook's first sheet."""
    archive = BoundedArchive(data, config.max_zip_parts, config.max_inflation_ratio)
    if "xl/workbook.xml" not in archive:
        raise UnknownSheetKind("not an XLSX workbook (no xl/workbook.xml)")
    workbook = archive.read_xml("xl/workbook.xml")
    rels = read_relationships(archive, "xl/workbook.xml")
    sheet_part = None
    sheets = workbook.find(qn("s:sheets"))
    if sheets is not None:
        for sheet in sheets.findall(qn("s:sheet")):
            rel = rels.get(sheet.get(qn("r:id")))
            if rel and rel["abs_target"] in archive:
                sheet_part = rel["abs_target"]
                break
    if sheet_part is None:
        raise UnknownSheetKind("workbook lists no readable sheets")
    shared = _shared_strings(archive)
    root = archive.read_xml(sheet_part)
    rows: list[list[str]] = []
    for row in root.iter(qn("s:row")):
        cells: dict[int, str] = {}
        for cell in row.findall(qn("s:c")):
            cells[_column_index(cell.get("r", ""))] = _cell_value(cell, shared)
        width = max(cells) + 1 if cells else 0
        rows.append([cells.get(i, "") for i in range(width)])
    return rows


def read_csv_rows(data: bytes) -> list[list[str]]:
    text = data.decode("utf-8-sig", errors="replace")
    return [list(row) for row in csv.reader(io.StringIO(text))]


def _sheet_rows(data: bytes, filename: Optional[str], config: AppConfig) -> list[list[str]]:
    looks_zip = data[:4] == b"PK\x03\x04"
    if (filename or "").lower().endswith(".xlsx") or looks_zip:
        return read_xlsx_rows(data, config)
    return read_csv_rows(data)


# --- import -------------------------------------------------------------

def _as_records(rows: list[list[str]], kind: str) -> tuple[list[dict], dict[str, int]]:
    """Header-mapped records; raises SheetSchemaMismatch on missing columns."""
    if not rows:
        raise SheetSchemaMismatch(1, "header", "sheet is empty")
    headers = [h.strip().lower() for h in rows[0]]
    positions = {name: i for i, name in enumerate(headers) if name}
    for required in _REQUIRED_COLUMNS[kind]:
        if required not in positions:
            raise SheetSchemaMismatch(1, required, f"missing required column {required!r}")
    records = []
    for line_no, row in enumerate(rows[1:], start=2):
        if not any(cell.strip() for cell in row):
            continue
        record = {"_row": line_no}
        for name, pos in positions.items():
            record[name] = row[pos].strip() if pos < len(row) else ""
        records.append(record)
    return records, positions


def import_sheet(
    storage: Storage,
    data: bytes,
    kind: str,
    filename: Optional[str] = None,
    config: AppConfig | None = None,
) -> dict:
    """Validate then transactionally apply one sheet; see module docstring."""
    config = config or AppConfig()
    if kind not in SHEET_KINDS:
        raise UnknownSheetKind(f"unknown sheet kind {kind!r}")
    rows = _sheet_rows(data, filename, config)
    records, _ = _as_records(rows, kind)

    if kind == "students":
        return _import_students(storage, records, config)
    if kind == "courses":
        return _import_courses(storage, records)
    return _import_rubrics(storage, records)


def _report(kind: str, applied: bool, row_reports: list[dict], errors: list[dict]) -> dict:
    return {
        "kind": kind,
        "applied": applied,
        "created": sum(1 for r in row_reports if r.get("action") == "created") if applied else 0,
        "updated": sum(1 for r in row_reports if r.get("action") == "updated") if applied else 0,
        "errors": errors,
        "rows": row_reports,
    }


def _import_students(storage: Storage, records: list[dict], config: AppConfig) -> dict:
    errors: list[dict] = []
    row_reports: list[dict] = []
    seen_emails: set[str] = set()
    plan: list[dict] = []
    for record in records:
        row = record["_row"]
        email = record.get("email", "").lower()
        if not _EMAIL_RE.match(email):
            errors.append({"row": row, "column": "email", "message": f"malformed email {email!r}"})
            continue
        if email in seen_emails:
            errors.append({"row": row, "column": "email", "message": f"duplicate email {email!r} in sheet"})
            continue
        seen_emails.add(email)
        if not record.get("display_name"):
            errors.append({"row": row, "column": "display_name", "message": "display_name is required"})
            continue
        course = storage.structured.get_course_by_code(record.get("course_code", ""))
        if course is None:
            errors.append({"row": row, "column": "course_code",
                           "message": f"unknown course code {record.get('course_code')!r}"})
            continue
        plan.append({**record, "email": email, "_course_id": course["course_id"]})
    if errors:
        return _report("students", False, row_reports, errors)

    with storage.structured.atomic():
        for record in plan:
            existing = storage.structured.get_user_by_email(record["email"])
            if existing is not None:
                storage.structured.update_display_name(existing["user_id"], record["display_name"])
                storage.structured.enroll(record["_course_id"], existing["user_id"])
                row_reports.append({"row": record["_row"], "action": "updated",
                                    "email": record["email"]})
            else:
                password = record.get("password") or secrets.token_urlsafe(9)
                user_id = storage.structured.create_user(
                    record["email"], record["display_name"],
                    hash_password(password, config), {"student"},
                )
                storage.structured.enroll(record["_course_id"], user_id)
                report_row = {"row": record["_row"], "action": "created", "email": record["email"]}
                if not record.get("password"):
                    # generated credential surfaced once so the admin can hand it out
                    report_row["initial_password"] = password
                row_reports.append(report_row)
    return _report("students", True, row_reports, errors)


def _import_courses(storage: Storage, records: list[dict]) -> dict:
    errors: list[dict] = []
    row_reports: list[dict] = []
    seen: set[str] = set()
    for record in records:
        row = record["_row"]
        code = record.get("course_code", "")
        if not code:
            errors.append({"row": row, "column": "course_code", "message": "course_code is required"})
        elif code in seen:
            errors.append({"row": row, "column": "course_code",
                           "message": f"duplicate course code {code!r} in sheet"})
        elif not record.get("title"):
            errors.append({"row": row, "column": "title", "message": "title is required"})
        seen.add(code)
    if errors:
        return _report("courses", False, row_reports, errors)

    with storage.structured.atomic():
        for record in records:
            existing = storage.structured.get_course_by_code(record["course_code"])
            if existing is not None:
                storage.structured.update_course_title(existing["course_id"], record["title"])
                row_reports.append({"row": record["_row"], "action": "updated",
                                    "course_code": record["course_code"]})
            else:
                storage.structured.create_course(record["course_code"], record["title"])
                row_reports.append({"row": record["_row"], "action": "created",
                                    "course_code": record["course_code"]})
    return _report("courses", True, row_reports, errors)


def _import_rubrics(storage: Storage, records: list[dict]) -> dict:
    from ..rubric import rubric_to_dict

    errors: list[dict] = []
    row_reports: list[dict] = []
    groups: dict[tuple[str, str], list[dict]] = {}
    for record in records:
        row = record["_row"]
        course = storage.structured.get_course_by_code(record.get("course_code", ""))
        if course is None:
            errors.append({"row": row, "column": "course_code",
                           "message": f"unknown course code {record.get('course_code')!r}"})
            continue
        if not record.get("rubric_title"):
            errors.append({"row": row, "column": "rubric_title", "message": "rubric_title is required"})
            continue
        if not record.get("criterion"):
            errors.append({"row": row, "column": "criterion", "message": "criterion is required"})
            continue
        descriptors = [record.get(f"desc{i}", "") for i in range(1, 6)]
        if any(not d for d in descriptors):
            missing = next(f"desc{i}" for i in range(1, 6) if not record.get(f"desc{i}"))
            errors.append({"row": row, "column": missing,
                           "message": "item must have exactly 5 level descriptors"})
            continue
        weight = 1.0
        if record.get("weight"):
            try:
                weight = float(record["weight"])
            except ValueError:
                errors.append({"row": row, "column": "weight",
                               "message": f"weight is not a number: {record['weight']!r}"})
                continue
            if weight <= 0:
                errors.append({"row": row, "column": "weight", "message": "weight must be > 0"})
                continue
        groups.setdefault((course["course_id"], record["rubric_title"]), []).append(
            {"row": row, "criterion": record["criterion"],
             "descriptors": descriptors, "weight": weight}
        )
    if errors:
        return _report("rubrics", False, row_reports, errors)

    assembled: list[tuple[str, str, Rubric, list[int]]] = []
    for (course_id, title), items in groups.items():
        rubric = Rubric(
            rubric_id="pending",
            course_id=course_id,
            title=title,
            items=tuple(
                RubricItem(
                    item_id=f"item-{i + 1}",
                    criterion=item["criterion"],
                    level_descriptors=tuple(item["descriptors"]),
                    weight=item["weight"],
                )
                for i, item in enumerate(items)
            ),
        )
        problems = validate_rubric(rubric)
        if problems:
            errors.extend(
                {"row": items[0]["row"], "column": "rubric_title", "message": p} for p in problems
            )
        assembled.append((course_id, title, rubric, [item["row"] for item in items]))
    if errors:
        return _report("rubrics", False, row_reports, errors)

    with storage.structured.atomic():
        for course_id, title, rubric, row_numbers in assembled:
            doc = rubric_to_dict(rubric)
            doc.pop("rubric_id", None)
            existing = storage.structured.find_rubric_by_title(course_id, title)
            if existing is not None:
                storage.structured.update_rubric(existing["rubric_id"], doc)
                action = "updated"
            else:
                storage.structured.create_rubric(course_id, doc)
                action = "created"
            for row in row_numbers:
                row_reports.append({"row": row, "action": action, "rubric_title": title})
    return _report("rubrics", True, row_reports, errors)
