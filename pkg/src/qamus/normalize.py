"""Conservative Arabic-script normalization and confusion detection.

Normalization only ever applies the transforms a profile enables (NFC,
tatweel removal, diacritic removal, digit unification). Letter-variant
confusions between dialectal and standard orthography are never rewritten
automatically: they are *detected* and flagged for the human passes, because
auto-correcting would re-introduce the very bias the review exists to catch.
"""

from __future__ import annotations

import json
import re
import unicodedata
from dataclasses import dataclass

from .model import SuspectSpan

TATWEEL = "ـ"

# Arabic combining marks: tashkeel, superscript alef, Quranic annotation
# signs. Letters (e.g. U+06E5/U+06E6) and symbols (U+06E9) are excluded.
_DIACRITICS_RE = re.compile(
    "["
    "ؐ-ؚ"
    "ً-ٟ"
    "ٰ"
    "ۖ-ۜ"
    "۟-ۤ"
    "ۧۨ"
    "۪-ۭ"
    "ࣔ-࣡"
    "ࣣ-ࣿ"
    "]"
)

_ARABIC_TO_ASCII_DIGITS = str.maketrans("٠١٢٣٤٥٦٧٨٩", "0123456789")
_ASCII_TO_ARABIC_DIGITS = str.maketrans("0123456789", "٠١٢٣٤٥٦٧٨٩")


@dataclass(frozen=True)
class NormalizationProfile:
    name: str
    apply_nfc: bool = True
    strip_tatweel: bool = True
    strip_diacritics: bool = False
    unify_digits: bool = False
    digit_direction: str = "arabic_to_ascii"  # or "ascii_to_arabic"


# Registered profiles; project config picks one by name.
PROFILES: dict[str, NormalizationProfile] = {
    "default": NormalizationProfile("default"),
    "nfc-only": NormalizationProfile("nfc-only", strip_tatweel=False),
    "search": NormalizationProfile("search", strip_diacritics=True, unify_digits=True),
}


def get_profile(name: str) -> NormalizationProfile:
    try:
        return PROFILES[name]
    except KeyError:
        raise KeyError(f"unknown normalization profile: {name!r}") from None


def normalize(text: str, profile: NormalizationProfile) -> str:
    """Apply the profile's transforms. Idempotent for every profile.

    NFC runs before and after the removals: before, so canonically
    equivalent inputs are treated alike; after, so removing a blocking
    character cannot leave a decomposed sequence behind.
    """
    if profile.apply_nfc:
        text = unicodedata.normalize("NFC", text)
    if profile.strip_tatweel:
        text = text.replace(TATWEEL, "")
    if profile.strip_diacritics:
        text = _DIACRITICS_RE.sub("", text)
    if profile.apply_nfc:
        text = unicodedata.normalize("NFC", text)
    if profile.unify_digits:
        if profile.digit_direction == "ascii_to_arabic":
            text = text.translate(_ASCII_TO_ARABIC_DIGITS)
        else:
            text = text.translate(_ARABIC_TO_ASCII_DIGITS)
    return text


# ---------------------------------------------------------------------------
# Grapheme confusion table


@dataclass(frozen=True)
class ConfusionRule:
    rule_id: str
    darija_form: str  # the dialect-correct grapheme sequence
    msa_form: str  # what OCR typically substitutes for it
    note: str = ""


class ConfusionTableError(ValueError):
    pass


def validate_table(rules: list[ConfusionRule]) -> None:
    seen: set[str] = set()
    for rule in rules:
        if not rule.rule_id:
            raise ConfusionTableError("rule with empty rule_id")
        if rule.rule_id in seen:
            raise ConfusionTableError(f"duplicate rule_id {rule.rule_id!r}")
        seen.add(rule.rule_id)
        if not rule.darija_form or not rule.msa_form:
            raise ConfusionTableError(f"rule {rule.rule_id!r}: both forms must be non-empty")
        if rule.darija_form == rule.msa_form:
            raise ConfusionTableError(f"rule {rule.rule_id!r}: forms must be distinct")
        # A suggestion containing the matched form would be re-flagged at the
        # same position forever, sending reviewers in circles.
        if rule.msa_form in rule.darija_form:
            raise ConfusionTableError(
                f"rule {rule.rule_id!r}: darija_form must not contain msa_form"
            )


def load_confusion_table(path) -> list[ConfusionRule]:
    with open(path, encoding="utf-8") as fh:
        raw = json.load(fh)
    if not isinstance(raw, list):
        raise ConfusionTableError("confusion table must be a JSON array")
    rules = [
        ConfusionRule(
            rule_id=item["rule_id"],
            darija_form=item["darija_form"],
            msa_form=item["msa_form"],
            note=item.get("note", ""),
        )
        for item in raw
    ]
    validate_table(rules)
    return rules


# The one confusion pair attested in the source material this tool was built
# around. Real tables are compiled per OCR engine by a native speaker and
# loaded from the project's confusion table file.
DEFAULT_CONFUSION_RULES = [
    ConfusionRule(
        rule_id="alef-fatha-vs-alef-hamza",
        darija_form="اَ",  # اَ
        msa_form="أ",  # أ
        note="OCR rewrites bare alef + fatha as alef with hamza above",
    )
]


def default_table_json() -> str:
    rows = [
        {
            "rule_id": r.rule_id,
            "darija_form": r.darija_form,
            "msa_form": r.msa_form,
            "note": r.note,
        }
        for r in DEFAULT_CONFUSION_RULES
    ]
    return json.dumps(rows, ensure_ascii=False, indent=2) + "\n"


def detect_suspects(
    text: str,
    table: list[ConfusionRule],
    target_field: str = "lemma",
) -> list[SuspectSpan]:
    """Find non-overlapping occurrences of any rule's msa_form in text.

    Leftmost-longest policy: at each position the longest matching msa_form
    wins (ties broken by rule_id), and scanning resumes after the match.
    Returns spans sorted by offset; offsets and lengths are codepoint counts.
    """
    if not table:
        return []
    ordered = sorted(table, key=lambda r: (-len(r.msa_form), r.rule_id))
    spans: list[SuspectSpan] = []
    i = 0
    n = len(text)
    while i < n:
        for rule in ordered:
            if text.startswith(rule.msa_form, i):
                spans.append(
                    SuspectSpan(
                        target_field=target_field,
                        offset=i,
                        length=len(rule.msa_form),
                        rule_id=rule.rule_id,
                        suggested_form=rule.darija_form,
                    )
                )
                i += len(rule.msa_form)
                break
        else:
            i += 1
    return spans
