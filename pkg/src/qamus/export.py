"""Exports: Wikibase-lexeme-shaped JSON, a QuickStatements-like TSV dialect,
and the lossless canonical tabular form.

Nothing here talks to a remote service. Export writes reviewable files; the
operator uploads them with their own tooling after checking the mapping.
All item/property identifiers come from an external mapping file — there
are no compiled-in defaults to go stale.
"""

from __future__ import annotations

import json
import os
import re
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional

from . import __version__
from .ingest import CANONICAL_COLUMNS, GLOSS_SEPARATOR
from .model import (
    GrammaticalGender,
    LexemeEntry,
    VerificationState,
)

_WIKIBASE_ID_RE = re.compile(r"^[QPL][0-9]+$")

# States admitted through the export gate. Exported entries stay eligible so
# re-running an export of an unchanged project is byte-identical.
_EXPORTABLE = (VerificationState.PASS2_VERIFIED, VerificationState.EXPORTED)


class ExportError(Exception):
    code = "ExportError"


class EmptyExport(ExportError):
    code = "EmptyExport"


class UnmappedCategory(ExportError):
    code = "UnmappedCategory"


class UnmappedGender(ExportError):
    code = "UnmappedGender"


class MappingError(ExportError):
    code = "MappingError"


@dataclass(frozen=True)
class WikibaseMapping:
    language_item: str
    lemma_language_code: str = "ary"
    category_map: dict = field(default_factory=dict)  # category token -> Q id
    gender_map: dict = field(default_factory=dict)  # gender token -> Q id
    relation_property_map: dict = field(default_factory=dict)  # relation kind -> P id
    etymology_property: Optional[str] = None  # where origin statements go, if anywhere
    language_map: dict = field(default_factory=dict)  # origin tag -> Q id

    def validate(self) -> None:
        for label, value in [("language_item", self.language_item)] + [
            (f"category_map[{k}]", v) for k, v in self.category_map.items()
        ] + [(f"gender_map[{k}]", v) for k, v in self.gender_map.items()] + [
            (f"relation_property_map[{k}]", v) for k, v in self.relation_property_map.items()
        ] + [(f"language_map[{k}]", v) for k, v in self.language_map.items()]:
            if not _WIKIBASE_ID_RE.match(value):
                raise MappingError(f"{label}: {value!r} does not match the Q/P/L id grammar")
        if self.etymology_property is not None and not _WIKIBASE_ID_RE.match(self.etymology_property):
            raise MappingError(f"etymology_property: {self.etymology_property!r} is not a P/Q/L id")
        if not self.lemma_language_code:
            raise MappingError("lemma_language_code must be non-empty")

    def checksum_payload(self) -> dict:
        return {
            "language_item": self.language_item,
            "lemma_language_code": self.lemma_language_code,
            "category_map": self.category_map,
            "gender_map": self.gender_map,
            "relation_property_map": self.relation_property_map,
            "etymology_property": self.etymology_property,
            "language_map": self.language_map,
        }


def load_mapping(path) -> WikibaseMapping:
    with open(path, encoding="utf-8") as fh:
        data = json.load(fh)
    mapping = WikibaseMapping(
        language_item=data["language_item"],
        lemma_language_code=data.get("lemma_language_code", "ary"),
        category_map=data.get("category_map", {}),
        gender_map=data.get("gender_map", {}),
        relation_property_map=data.get("relation_property_map", {}),
        etymology_property=data.get("etymology_property"),
        language_map=data.get("language_map", {}),
    )
    mapping.validate()
    return mapping


def mapping_checksum(mapping: WikibaseMapping) -> str:
    import hashlib

    canonical = json.dumps(mapping.checksum_payload(), sort_keys=True, ensure_ascii=False)
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


# ---------------------------------------------------------------------------
# Lexeme records


def _eligible_entries(project) -> list[LexemeEntry]:
    return [
        project.entries[eid]
        for eid in sorted(project.entries)
        if project.entries[eid].state in _EXPORTABLE
    ]


def _check_mapping_covers(entries: list[LexemeEntry], mapping: WikibaseMapping) -> None:
    for entry in entries:
        if entry.category.value not in mapping.category_map:
            raise UnmappedCategory(
                f"entry {entry.id}: category {entry.category.value!r} missing from category_map"
            )
        if (
            entry.gender is not GrammaticalGender.UNSPECIFIED
            and entry.gender.value not in mapping.gender_map
        ):
            raise UnmappedGender(
                f"entry {entry.id}: gender {entry.gender.value!r} missing from gender_map"
            )


def lexeme_record(entry: LexemeEntry, mapping: WikibaseMapping, exported_ids: set, edges) -> dict:
    """One Wikibase-lexeme-shaped record; claims reference other records by
    their local (entry) id until real L-ids exist."""
    code = mapping.lemma_language_code
    record: dict = {
        "id": entry.id,
        "lemmas": {code: {"language": code, "value": entry.lemma}},
        "language": mapping.language_item,
        "lexicalCategory": mapping.category_map[entry.category.value],
        "grammaticalFeatures": [],
        "senses": [
            {"glosses": {lang: {"language": lang, "value": text}}}
            for lang, text in entry.glosses
        ],
        "claims": [],
    }
    if entry.gender is not GrammaticalGender.UNSPECIFIED:
        record["grammaticalFeatures"].append(mapping.gender_map[entry.gender.value])
    for edge in edges:
        if edge.from_id != entry.id or edge.to_id not in exported_ids:
            continue
        prop = mapping.relation_property_map.get(edge.kind)
        if prop is None:
            continue
        record["claims"].append(
            {"property": prop, "value": {"type": "local-lexeme", "id": edge.to_id}}
        )
    if mapping.etymology_property and entry.etymology.origin != "unknown":
        origin = entry.etymology.origin
        if origin in mapping.language_map:
            value = {"type": "item", "id": mapping.language_map[origin]}
        else:
            value = {"type": "string", "text": origin}
        record["claims"].append({"property": mapping.etymology_property, "value": value})
    return record


def _dump_canonical(obj) -> str:
    return json.dumps(obj, ensure_ascii=False, sort_keys=True, indent=2) + "\n"


def _write_durable(path: Path, text: str) -> None:
    tmp = path.with_suffix(path.suffix + ".tmp")
    with open(tmp, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
        fh.flush()
        os.fsync(fh.fileno())
    os.replace(tmp, path)


def export_lexemes(project, mapping: WikibaseMapping, out_dir, reviewer: str = "system") -> dict:
    """Write lexemes.json, relations.json, and manifest.json for every entry
    past both verification passes; mark them Exported once files are durable.

    Entries not past pass 2 are silently excluded — they never fail the
    batch. Two exports of an unchanged project are byte-identical.
    """
    mapping.validate()
    entries = _eligible_entries(project)
    if not entries:
        raise EmptyExport("no entries have passed both verification passes")
    _check_mapping_covers(entries, mapping)

    exported_ids = {e.id for e in entries}
    records = [lexeme_record(e, mapping, exported_ids, project.edges) for e in entries]
    relations = [
        {
            "from": edge.from_id,
            "to": edge.to_id,
            "kind": edge.kind,
            "property": mapping.relation_property_map.get(edge.kind),
        }
        for edge in sorted(project.edges, key=lambda e: (e.from_id, e.to_id, e.kind))
        if edge.from_id in exported_ids and edge.to_id in exported_ids
    ]
    manifest = {
        "lexemes": len(records),
        "relations": len(relations),
        "mapping_checksum": mapping_checksum(mapping),
        "tool_version": __version__,
    }

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    _write_durable(out / "lexemes.json", _dump_canonical(records))
    _write_durable(out / "relations.json", _dump_canonical(relations))
    _write_durable(out / "manifest.json", _dump_canonical(manifest))

    for entry in entries:
        if entry.state is VerificationState.PASS2_VERIFIED:
            project.replace_entry(
                replace(entry, state=VerificationState.EXPORTED),
                kind="exported",
                reviewer=reviewer,
                payload={"out": str(out)},
            )
    return manifest


# ---------------------------------------------------------------------------
# QuickStatements-like dialect

QS_HEADER = (
    "# qamus quickstatements-like dialect v1\n"
    "# one command block per lexeme: CREATE_LEX, then LAST FEATURE / LAST GLOSS lines\n"
    "# adapt to a live QuickStatements batch before upload; this file is not uploadable as-is\n"
)


def _qs_quote(text: str) -> str:
    return '"' + text.replace('"', '""') + '"'


def quickstatements_lines(entries: list[LexemeEntry], mapping: WikibaseMapping) -> list[str]:
    lines: list[str] = []
    for entry in entries:
        lines.append(
            "\t".join(
                [
                    "CREATE_LEX",
                    mapping.lemma_language_code,
                    _qs_quote(entry.lemma),
                    mapping.language_item,
                    mapping.category_map[entry.category.value],
                ]
            )
        )
        if entry.gender is not GrammaticalGender.UNSPECIFIED:
            lines.append("\t".join(["LAST", "FEATURE", mapping.gender_map[entry.gender.value]]))
        for lang, text in entry.glosses:
            lines.append("\t".join(["LAST", "GLOSS", lang, _qs_quote(text)]))
    return lines


def export_quickstatements(project, mapping: WikibaseMapping, out_path, reviewer: str = "system") -> int:
    """Write the command file; returns the number of command lines."""
    mapping.validate()
    entries = _eligible_entries(project)
    if not entries:
        raise EmptyExport("no entries have passed both verification passes")
    _check_mapping_covers(entries, mapping)
    lines = quickstatements_lines(entries, mapping)
    _write_durable(Path(out_path), QS_HEADER + "".join(line + "\n" for line in lines))
    for entry in entries:
        if entry.state is VerificationState.PASS2_VERIFIED:
            project.replace_entry(
                replace(entry, state=VerificationState.EXPORTED),
                kind="exported",
                reviewer=reviewer,
                payload={"out": str(out_path)},
            )
    return len(lines)


# ---------------------------------------------------------------------------
# Canonical tabular re-export


def emit_tabular(entries: list[LexemeEntry]) -> str:
    """Inverse of parse_tabular on the shared fields, all states included.

    Entries are emitted in id order. Ingest rejects tabs/newlines in the
    emitted fields, so no escaping is ever needed here.
    """
    lines = ["\t".join(CANONICAL_COLUMNS)]
    for entry in sorted(entries, key=lambda e: e.id):
        first = entry.provenance[0] if entry.provenance else None
        gloss_langs = GLOSS_SEPARATOR.join(lang for lang, _ in entry.glosses)
        gloss_texts = GLOSS_SEPARATOR.join(text for _, text in entry.glosses)
        lines.append(
            "\t".join(
                [
                    entry.lemma,
                    entry.category.value,
                    entry.gender.value,
                    entry.etymology.origin,
                    entry.etymology.note,
                    gloss_langs,
                    gloss_texts,
                    first.source_id if first else "",
                    str(first.page) if first else "",
                    str(first.line) if first and first.line is not None else "",
                ]
            )
        )
    return "".join(line + "\n" for line in lines)
