"""Data model for lexical entries: enumerations, records, validation.

Entries are immutable values. The project store never mutates an entry in
place; every change is a replace plus an audit append (see store.py).
"""

from __future__ import annotations

import hashlib
import json
import re
from dataclasses import dataclass, field, fields
from enum import Enum
from typing import Optional

# Lemmas must contain at least one codepoint from these blocks; projects may
# configure additional blocks (e.g. Arabic Extended-A) but never fewer.
ARABIC_BLOCKS: tuple[tuple[int, int], ...] = ((0x0600, 0x06FF), (0x0750, 0x077F))

CAPTURE_METHODS = ("ocr", "manual")
RELATION_KINDS = ("derived_from", "variant_of", "semantic_related")
SPAN_TARGETS = ("lemma", "raw_text")

_LANG_TAG_RE = re.compile(r"^[A-Za-z]{2,3}$")
_CONTROL_RE = re.compile(r"[\t\n\r]")


class LexicalCategory(Enum):
    """Closed part-of-speech set; parse/emit is a bijection on the tokens."""

    NOUN = "noun"
    VERB = "verb"
    ADJECTIVE = "adjective"
    ADVERB = "adverb"
    PRONOUN = "pronoun"
    PREPOSITION = "preposition"
    CONJUNCTION = "conjunction"
    INTERJECTION = "interjection"
    PARTICLE = "particle"
    NUMERAL = "numeral"
    PROPER_NOUN = "proper-noun"
    UNKNOWN = "unknown"

    @classmethod
    def parse(cls, token: str) -> "LexicalCategory":
        try:
            return cls(token)
        except ValueError:
            raise ValueError(f"unknown lexical category token: {token!r}") from None


class GrammaticalGender(Enum):
    MASCULINE = "masculine"
    FEMININE = "feminine"
    UNSPECIFIED = "unspecified"

    @classmethod
    def parse(cls, token: str) -> "GrammaticalGender":
        try:
            return cls(token)
        except ValueError:
            raise ValueError(f"unknown gender token: {token!r}") from None


class VerificationState(Enum):
    IMPORTED = "Imported"
    PASS1_VERIFIED = "Pass1Verified"
    PASS2_VERIFIED = "Pass2Verified"
    EXPORTED = "Exported"
    REJECTED = "Rejected"

    @classmethod
    def parse(cls, token: str) -> "VerificationState":
        try:
            return cls(token)
        except ValueError:
            raise ValueError(f"unknown verification state: {token!r}") from None


# The only legal state transitions. Rejected is terminal: resurrecting an
# entry means re-ingesting it under a fresh id.
ALLOWED_TRANSITIONS: dict[VerificationState, frozenset[VerificationState]] = {
    VerificationState.IMPORTED: frozenset(
        {VerificationState.PASS1_VERIFIED, VerificationState.REJECTED}
    ),
    VerificationState.PASS1_VERIFIED: frozenset(
        {VerificationState.PASS2_VERIFIED, VerificationState.REJECTED}
    ),
    VerificationState.PASS2_VERIFIED: frozenset({VerificationState.EXPORTED}),
    VerificationState.EXPORTED: frozenset(),
    VerificationState.REJECTED: frozenset(),
}

# Pipeline rank used when merging entries in mixed states (least verified wins).
STATE_RANK = {
    VerificationState.IMPORTED: 0,
    VerificationState.PASS1_VERIFIED: 1,
    VerificationState.PASS2_VERIFIED: 2,
    VerificationState.EXPORTED: 3,
}


@dataclass(frozen=True)
class EtymologyRecord:
    origin: str = "unknown"  # "unknown" or a 2-3 letter primary language subtag
    note: str = ""


@dataclass(frozen=True)
class ProvenanceRecord:
    source_id: str
    page: int
    raw_text: str
    capture_method: str  # "ocr" | "manual"
    line: Optional[int] = None


@dataclass(frozen=True)
class SuspectSpan:
    """A region matching a known grapheme-confusion rule, queued for review."""

    target_field: str  # "lemma" | "raw_text"
    offset: int  # codepoint index into the target text
    length: int  # codepoint count
    rule_id: str
    suggested_form: str


@dataclass(frozen=True)
class LexemeEntry:
    id: str
    lemma: str
    category: LexicalCategory = LexicalCategory.UNKNOWN
    gender: GrammaticalGender = GrammaticalGender.UNSPECIFIED
    etymology: EtymologyRecord = EtymologyRecord()
    variants: tuple[str, ...] = ()
    glosses: tuple[tuple[str, str], ...] = ()  # (language-code, text) pairs
    provenance: tuple[ProvenanceRecord, ...] = ()
    state: VerificationState = VerificationState.IMPORTED
    flags: tuple[SuspectSpan, ...] = ()


@dataclass(frozen=True)
class RelationEdge:
    from_id: str
    to_id: str
    kind: str  # derived_from | variant_of | semantic_related
    note: str = ""


@dataclass(frozen=True)
class ProjectConfig:
    normalization_profile: str = "default"
    confusion_table: str = "confusions.json"  # path relative to the project dir
    label_map: str = "labels.json"
    dedup_tau: float = 0.25
    sample_size: int = 100
    seed: int = 0
    # Categories whose gender must be concrete once pass 2 is complete.
    gender_required_categories: tuple[str, ...] = ("noun", "adjective")
    extra_lemma_blocks: tuple[tuple[int, int], ...] = ()
    grapheme_clusters: bool = False  # align over clusters instead of codepoints

    def validate(self) -> None:
        if not (0.0 <= self.dedup_tau <= 1.0):
            raise ValueError(f"dedup_tau must be in [0,1], got {self.dedup_tau}")
        if self.sample_size < 1:
            raise ValueError(f"sample_size must be >= 1, got {self.sample_size}")
        if not (-(1 << 63) <= self.seed < (1 << 64)):
            raise ValueError("seed must fit in 64 bits")
        for token in self.gender_required_categories:
            LexicalCategory.parse(token)

    def lemma_blocks(self) -> tuple[tuple[int, int], ...]:
        return ARABIC_BLOCKS + tuple(self.extra_lemma_blocks)

    def to_dict(self) -> dict:
        return {
            "normalization_profile": self.normalization_profile,
            "confusion_table": self.confusion_table,
            "label_map": self.label_map,
            "dedup_tau": self.dedup_tau,
            "sample_size": self.sample_size,
            "seed": self.seed,
            "gender_required_categories": list(self.gender_required_categories),
            "extra_lemma_blocks": [list(b) for b in self.extra_lemma_blocks],
            "grapheme_clusters": self.grapheme_clusters,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ProjectConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        kwargs = dict(data)
        if "gender_required_categories" in kwargs:
            kwargs["gender_required_categories"] = tuple(kwargs["gender_required_categories"])
        if "extra_lemma_blocks" in kwargs:
            kwargs["extra_lemma_blocks"] = tuple(
                (int(lo), int(hi)) for lo, hi in kwargs["extra_lemma_blocks"]
            )
        config = cls(**kwargs)
        config.validate()
        return config


@dataclass(frozen=True)
class Violation:
    code: str
    field: str
    message: str


# ---------------------------------------------------------------------------
# Serialization


def entry_to_dict(entry: LexemeEntry) -> dict:
    return {
        "id": entry.id,
        "lemma": entry.lemma,
        "category": entry.category.value,
        "gender": entry.gender.value,
        "etymology": {"origin": entry.etymology.origin, "note": entry.etymology.note},
        "variants": list(entry.variants),
        "glosses": [[lang, text] for lang, text in entry.glosses],
        "provenance": [
            {
                "source_id": p.source_id,
                "page": p.page,
                "line": p.line,
                "raw_text": p.raw_text,
                "capture_method": p.capture_method,
            }
            for p in entry.provenance
        ],
        "state": entry.state.value,
        "flags": [
            {
                "target_field": s.target_field,
                "offset": s.offset,
                "length": s.length,
                "rule_id": s.rule_id,
                "suggested_form": s.suggested_form,
            }
            for s in entry.flags
        ],
    }


def entry_from_dict(data: dict) -> LexemeEntry:
    return LexemeEntry(
        id=data["id"],
        lemma=data["lemma"],
        category=LexicalCategory.parse(data["category"]),
        gender=GrammaticalGender.parse(data["gender"]),
        etymology=EtymologyRecord(
            origin=data["etymology"]["origin"], note=data["etymology"]["note"]
        ),
        variants=tuple(data["variants"]),
        glosses=tuple((lang, text) for lang, text in data["glosses"]),
        provenance=tuple(
            ProvenanceRecord(
                source_id=p["source_id"],
                page=p["page"],
                line=p["line"],
                raw_text=p["raw_text"],
                capture_method=p["capture_method"],
            )
            for p in data["provenance"]
        ),
        state=VerificationState.parse(data["state"]),
        flags=tuple(
            SuspectSpan(
                target_field=s["target_field"],
                offset=s["offset"],
                length=s["length"],
                rule_id=s["rule_id"],
                suggested_form=s["suggested_form"],
            )
            for s in data["flags"]
        ),
    )


def entry_hash(entry: LexemeEntry) -> str:
    """Content hash used by the audit chain (sha256 of canonical JSON)."""
    canonical = json.dumps(entry_to_dict(entry), sort_keys=True, ensure_ascii=False)
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def edge_to_dict(edge: RelationEdge) -> dict:
    return {"from_id": edge.from_id, "to_id": edge.to_id, "kind": edge.kind, "note": edge.note}


def edge_from_dict(data: dict) -> RelationEdge:
    return RelationEdge(
        from_id=data["from_id"],
        to_id=data["to_id"],
        kind=data["kind"],
        note=data.get("note", ""),
    )


# ---------------------------------------------------------------------------
# Validation


def _in_blocks(ch: str, blocks: tuple[tuple[int, int], ...]) -> bool:
    cp = ord(ch)
    return any(lo <= cp <= hi for lo, hi in blocks)


def is_valid_origin(origin: str) -> bool:
    return origin == "unknown" or bool(_LANG_TAG_RE.match(origin))


def validate_entry(
    entry: LexemeEntry,
    config: ProjectConfig,
    registry: Optional[dict] = None,
) -> list[Violation]:
    """Return every invariant violation, in a fixed canonical order.

    Pure and total: the same entry and config always yield the same list.
    When ``registry`` (the source registry mapping) is supplied, provenance
    source ids are checked against it as well.
    """
    violations: list[Violation] = []
    blocks = config.lemma_blocks()

    if not entry.lemma.strip():
        violations.append(Violation("EmptyLemma", "lemma", "lemma is empty after trimming"))
    elif not any(_in_blocks(ch, blocks) for ch in entry.lemma):
        violations.append(
            Violation(
                "NonArabicLemma",
                "lemma",
                "lemma contains no codepoint in the configured Arabic blocks",
            )
        )
    if _CONTROL_RE.search(entry.lemma):
        violations.append(
            Violation("ControlCharInField", "lemma", "lemma contains tab or newline")
        )
    for variant in entry.variants:
        if _CONTROL_RE.search(variant):
            violations.append(
                Violation("ControlCharInField", "variants", f"variant {variant!r} contains tab or newline")
            )

    if not entry.provenance:
        violations.append(
            Violation("NoProvenance", "provenance", "entry has no provenance record")
        )
    for i, prov in enumerate(entry.provenance):
        where = f"provenance[{i}]"
        if not prov.source_id:
            violations.append(Violation("BadProvenance", where, "empty source_id"))
        elif registry is not None and prov.source_id not in registry:
            violations.append(
                Violation("UnknownSource", where, f"source {prov.source_id!r} not in registry")
            )
        if prov.page < 1:
            violations.append(Violation("BadProvenance", where, f"page must be >= 1, got {prov.page}"))
        if prov.line is not None and prov.line < 1:
            violations.append(Violation("BadProvenance", where, f"line must be >= 1, got {prov.line}"))
        if prov.capture_method not in CAPTURE_METHODS:
            violations.append(
                Violation("BadProvenance", where, f"bad capture_method {prov.capture_method!r}")
            )

    if not is_valid_origin(entry.etymology.origin):
        violations.append(
            Violation(
                "BadEtymologyOrigin",
                "etymology.origin",
                f"{entry.etymology.origin!r} is neither 'unknown' nor a 2-3 letter subtag",
            )
        )
    for text, where in ((entry.etymology.origin, "etymology.origin"), (entry.etymology.note, "etymology.note")):
        if _CONTROL_RE.search(text):
            violations.append(Violation("ControlCharInField", where, "contains tab or newline"))

    for i, (lang, text) in enumerate(entry.glosses):
        where = f"glosses[{i}]"
        if not _LANG_TAG_RE.match(lang):
            violations.append(Violation("BadGlossLanguage", where, f"bad language code {lang!r}"))
        if _CONTROL_RE.search(lang) or _CONTROL_RE.search(text):
            violations.append(Violation("ControlCharInField", where, "contains tab or newline"))

    # Verified entries must have resolved the missing-metadata markers: the
    # model represents missing-ness, the export gate must not see it.
    verified = entry.state in (VerificationState.PASS2_VERIFIED, VerificationState.EXPORTED)
    if verified and entry.category is LexicalCategory.UNKNOWN:
        violations.append(
            Violation("UnknownCategory", "category", f"category unknown in state {entry.state.value}")
        )
    if (
        verified
        and entry.category.value in config.gender_required_categories
        and entry.gender is GrammaticalGender.UNSPECIFIED
    ):
        violations.append(
            Violation(
                "UnspecifiedGender",
                "gender",
                f"{entry.category.value} must have a concrete gender in state {entry.state.value}",
            )
        )

    for i, span in enumerate(entry.flags):
        where = f"flags[{i}]"
        if span.target_field not in SPAN_TARGETS:
            violations.append(
                Violation("BadSpanTarget", where, f"bad target_field {span.target_field!r}")
            )
            continue
        if span.target_field == "lemma":
            target_text = entry.lemma
        else:
            target_text = entry.provenance[0].raw_text if entry.provenance else ""
        if span.offset < 0 or span.length < 1 or span.offset + span.length > len(target_text):
            violations.append(
                Violation(
                    "SpanOutOfRange",
                    where,
                    f"span {span.offset}+{span.length} outside {span.target_field}",
                )
            )

    return violations
