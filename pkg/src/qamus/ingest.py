"""Parsers for the two input streams: tabular transcriptions and OCR pages.

Row parsing accumulates errors instead of aborting: dictionary captures are
noisy and partial salvage is the norm, so a bad row is reported with its
line number and skipped while the rest of the file goes through. Only a
broken header is fatal, since nothing after it can be interpreted.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Optional

from . import ids
from .model import (
    EtymologyRecord,
    GrammaticalGender,
    LexemeEntry,
    LexicalCategory,
    ProjectConfig,
    ProvenanceRecord,
    VerificationState,
    validate_entry,
)

# Canonical TSV header. Order-insensitive on input; emitted in this order.
CANONICAL_COLUMNS = (
    "lemma",
    "category",
    "gender",
    "etym_origin",
    "etym_note",
    "gloss_lang",
    "gloss",
    "source_id",
    "page",
    "line",
)

# Multi-valued gloss cells: "en|fr" / "book|livre". Kept out of gloss text
# at ingest so emission round-trips exactly.
GLOSS_SEPARATOR = "|"

CATEGORY_TOKENS = {c.value for c in LexicalCategory}
GENDER_TOKENS = {g.value for g in GrammaticalGender}


class TabularHeaderError(Exception):
    def __init__(self, code: str, detail: str):
        self.code = code  # MissingHeader | UnknownColumn
        super().__init__(f"{code}: {detail}")


@dataclass(frozen=True)
class RowIssue:
    severity: str  # "error" | "warning"
    code: str
    line: int
    message: str


@dataclass
class TabularResult:
    entries: list[LexemeEntry] = field(default_factory=list)
    errors: list[RowIssue] = field(default_factory=list)
    warnings: list[RowIssue] = field(default_factory=list)


def _split_glosses(
    gloss_lang: str, gloss: str, lineno: int
) -> tuple[Optional[tuple[tuple[str, str], ...]], Optional[RowIssue]]:
    if not gloss_lang and not gloss:
        return (), None
    langs = gloss_lang.split(GLOSS_SEPARATOR)
    texts = gloss.split(GLOSS_SEPARATOR)
    if len(langs) != len(texts):
        return None, RowIssue(
            "error",
            "GlossCountMismatch",
            lineno,
            f"{len(langs)} gloss languages for {len(texts)} gloss texts",
        )
    for lang in langs:
        if not lang:
            return None, RowIssue("error", "MissingGlossLang", lineno, "empty gloss language code")
    return tuple(zip(langs, texts)), None


def parse_tabular(
    stream: str,
    capture_method: str,
    config: Optional[ProjectConfig] = None,
    label_map: Optional[dict] = None,
    id_gen: Optional[ids.IdGenerator] = None,
) -> TabularResult:
    """Parse canonical TSV text into Imported-state entries.

    One entry per valid row; invalid rows are reported with their 1-based
    line number and skipped. Unknown category/gender labels degrade to
    unknown/unspecified with a warning rather than failing the row.
    """
    config = config or ProjectConfig()
    label_map = label_map or {}
    new_id = (id_gen or ids._default).new_id
    result = TabularResult()

    lines = stream.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines:
        raise TabularHeaderError("MissingHeader", "empty stream")

    header = [cell.strip() for cell in lines[0].rstrip("\r").split("\t")]
    if not any(name in CANONICAL_COLUMNS for name in header):
        raise TabularHeaderError("MissingHeader", "first line is not a header row")
    unknown = [name for name in header if name not in CANONICAL_COLUMNS]
    if unknown:
        raise TabularHeaderError("UnknownColumn", f"unrecognized columns: {unknown}")
    missing = [name for name in CANONICAL_COLUMNS if name not in header]
    if missing:
        raise TabularHeaderError("MissingHeader", f"missing columns: {missing}")
    if len(header) != len(CANONICAL_COLUMNS):
        raise TabularHeaderError("UnknownColumn", "duplicate column names in header")
    col = {name: header.index(name) for name in CANONICAL_COLUMNS}

    for lineno, raw_line in enumerate(lines[1:], start=2):
        line_text = raw_line.rstrip("\r")
        if not line_text:
            continue
        cells = line_text.split("\t")
        if len(cells) != len(header):
            result.errors.append(
                RowIssue("error", "BadColumnCount", lineno, f"expected {len(header)} cells, got {len(cells)}")
            )
            continue

        lemma = cells[col["lemma"]].strip()
        if not lemma:
            result.errors.append(RowIssue("error", "EmptyLemma", lineno, "empty lemma"))
            continue
        source_id = cells[col["source_id"]].strip()
        if not source_id:
            result.errors.append(RowIssue("error", "MissingSource", lineno, "empty source_id"))
            continue

        page_cell = cells[col["page"]].strip()
        try:
            page = int(page_cell)
            if page < 1:
                raise ValueError
        except ValueError:
            result.errors.append(RowIssue("error", "BadPage", lineno, f"bad page {page_cell!r}"))
            continue
        line_cell = cells[col["line"]].strip()
        line_no: Optional[int] = None
        if line_cell:
            try:
                line_no = int(line_cell)
                if line_no < 1:
                    raise ValueError
            except ValueError:
                result.errors.append(RowIssue("error", "BadLine", lineno, f"bad line {line_cell!r}"))
                continue

        category_label = cells[col["category"]].strip()
        category = LexicalCategory.UNKNOWN
        if category_label:
            token = category_label if category_label in CATEGORY_TOKENS else label_map.get(category_label)
            if token in CATEGORY_TOKENS:
                category = LexicalCategory(token)
            else:
                result.warnings.append(
                    RowIssue("warning", "UnknownCategoryLabel", lineno, f"label {category_label!r} mapped to unknown")
                )

        gender_label = cells[col["gender"]].strip()
        gender = GrammaticalGender.UNSPECIFIED
        if gender_label:
            token = gender_label if gender_label in GENDER_TOKENS else label_map.get(gender_label)
            if token in GENDER_TOKENS:
                gender = GrammaticalGender(token)
            else:
                result.warnings.append(
                    RowIssue("warning", "UnknownGenderLabel", lineno, f"label {gender_label!r} mapped to unspecified")
                )

        origin = cells[col["etym_origin"]].strip() or "unknown"
        note = cells[col["etym_note"]]

        glosses, issue = _split_glosses(cells[col["gloss_lang"]], cells[col["gloss"]], lineno)
        if issue is not None:
            result.errors.append(issue)
            continue

        entry = LexemeEntry(
            id=new_id(),
            lemma=lemma,
            category=category,
            gender=gender,
            etymology=EtymologyRecord(origin=origin, note=note),
            glosses=glosses,
            provenance=(
                ProvenanceRecord(
                    source_id=source_id,
                    page=page,
                    line=line_no,
                    raw_text=line_text,
                    capture_method=capture_method,
                ),
            ),
            state=VerificationState.IMPORTED,
        )
        violations = validate_entry(entry, config)
        if violations:
            first = violations[0]
            result.errors.append(RowIssue("error", first.code, lineno, first.message))
            continue
        result.entries.append(entry)

    return result


# ---------------------------------------------------------------------------
# OCR page stream


@dataclass(frozen=True)
class OcrPage:
    source_id: str
    page: int
    text: str


class OcrParseError(Exception):
    def __init__(self, code: str, detail: str):
        self.code = code  # NoPageMarker | DuplicatePage | BadPageMarker
        super().__init__(f"{code}: {detail}")


_PAGE_MARKER_RE = re.compile(r"^### PAGE (\d+) SOURCE (\S+)\s*$")


def parse_ocr_pages(stream: str) -> list[OcrPage]:
    """Split a marked-up OCR dump into pages.

    Each page starts at a line matching ``### PAGE <n> SOURCE <source_id>``;
    its text is everything up to the next marker, verbatim. Non-blank
    content before the first marker is an error.
    """
    pages: list[OcrPage] = []
    current: Optional[tuple[str, int]] = None
    buffer: list[str] = []
    seen: set[tuple[str, int]] = set()

    def flush() -> None:
        if current is not None:
            pages.append(OcrPage(source_id=current[0], page=current[1], text="".join(buffer)))

    for lineno, line in enumerate(stream.splitlines(keepends=True), 1):
        match = _PAGE_MARKER_RE.match(line.rstrip("\n"))
        if match:
            page_no = int(match.group(1))
            if page_no < 1:
                raise OcrParseError("BadPageMarker", f"line {lineno}: page number must be >= 1")
            key = (match.group(2), page_no)
            if key in seen:
                raise OcrParseError("DuplicatePage", f"line {lineno}: page {page_no} of {key[0]} repeated")
            seen.add(key)
            flush()
            current = key
            buffer = []
        elif current is None:
            if line.strip():
                raise OcrParseError("NoPageMarker", f"line {lineno}: content before first page marker")
        else:
            buffer.append(line)
    flush()
    return pages


@dataclass(frozen=True)
class SegmentationRules:
    """Entry-start heuristic: an Arabic-script token then a separator."""

    separators: tuple[str, ...] = (":", "–", "—", "\t")


def _headword_re(rules: SegmentationRules, config: ProjectConfig) -> re.Pattern:
    blocks = "".join(f"{chr(lo)}-{chr(hi)}" for lo, hi in config.lemma_blocks())
    seps = "|".join(re.escape(s) for s in rules.separators)
    return re.compile(rf"^[ \t]*([{blocks}]+)[ \t]*(?:{seps})[ \t]*(.*)$")


def segment_ocr_page(
    page: OcrPage,
    rules: Optional[SegmentationRules] = None,
    config: Optional[ProjectConfig] = None,
    id_gen: Optional[ids.IdGenerator] = None,
) -> list[LexemeEntry]:
    """Cut one OCR page into Imported entries, one per detected headword.

    Everything between a headword line and the next becomes the entry's
    gloss (language "und"); the raw segment is preserved in provenance.
    Deterministic and order-preserving; a page with no matches yields [].
    """
    rules = rules or SegmentationRules()
    config = config or ProjectConfig()
    new_id = (id_gen or ids._default).new_id
    pattern = _headword_re(rules, config)

    lines = page.text.splitlines()
    starts: list[tuple[int, str, str]] = []  # (line index, lemma, same-line remainder)
    for i, line in enumerate(lines):
        match = pattern.match(line)
        if match:
            starts.append((i, match.group(1), match.group(2)))

    entries: list[LexemeEntry] = []
    for k, (i, lemma, remainder) in enumerate(starts):
        end = starts[k + 1][0] if k + 1 < len(starts) else len(lines)
        segment_lines = lines[i:end]
        gloss_parts = [remainder] + segment_lines[1:]
        gloss = "\n".join(part for part in gloss_parts).strip()
        entries.append(
            LexemeEntry(
                id=new_id(),
                lemma=lemma,
                glosses=(("und", gloss),) if gloss else (),
                provenance=(
                    ProvenanceRecord(
                        source_id=page.source_id,
                        page=page.page,
                        line=i + 1,
                        raw_text="\n".join(segment_lines),
                        capture_method="ocr",
                    ),
                ),
                state=VerificationState.IMPORTED,
            )
        )
    return entries
