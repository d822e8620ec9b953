"""Dual-pass verification workflow.

Pass 1 is the visual sanity check: the reviewer fixes captured text against
the physical source (lemma, raw capture). Pass 2 completes the grammatical
and etymological metadata. Every applied decision advances the entry state
along the whitelist and appends exactly one audit event; the audit log's
per-entry hash chain makes the whole history verifiable.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional

from .model import (
    ALLOWED_TRANSITIONS,
    EtymologyRecord,
    GrammaticalGender,
    LexemeEntry,
    LexicalCategory,
    VerificationState,
    Violation,
    entry_hash,
    validate_entry,
)
from .store import Project, UnknownEntry

PASS1_FIELDS = frozenset({"lemma", "raw_text"})
PASS2_FIELDS = frozenset({"category", "gender", "etymology_origin", "etymology_note", "glosses"})

ACTIONS = ("accept", "correct", "reject")

_PASS_SOURCE_STATE = {
    1: VerificationState.IMPORTED,
    2: VerificationState.PASS1_VERIFIED,
}
_PASS_TARGET_STATE = {
    1: VerificationState.PASS1_VERIFIED,
    2: VerificationState.PASS2_VERIFIED,
}


class WorkflowError(Exception):
    code = "WorkflowError"


class IllegalTransition(WorkflowError):
    code = "IllegalTransition"


class InvalidDecision(WorkflowError):
    code = "InvalidDecision"


class ValidationFailed(WorkflowError):
    code = "ValidationFailed"

    def __init__(self, violations: list[Violation]):
        self.violations = violations
        detail = "; ".join(f"{v.code}({v.field})" for v in violations)
        super().__init__(f"corrected entry violates invariants: {detail}")


@dataclass(frozen=True)
class Decision:
    entry_id: str
    pass_number: int  # 1 | 2
    action: str  # accept | correct | reject
    corrections: dict = field(default_factory=dict)
    reviewer: str = "anonymous"
    timestamp: Optional[str] = None

    def to_payload(self) -> dict:
        return {
            "pass": self.pass_number,
            "action": self.action,
            "corrections": dict(self.corrections),
            "reviewer": self.reviewer,
        }


def _check_decision_shape(decision: Decision) -> None:
    if decision.pass_number not in (1, 2):
        raise InvalidDecision(f"pass must be 1 or 2, got {decision.pass_number}")
    if decision.action not in ACTIONS:
        raise InvalidDecision(f"action must be one of {ACTIONS}, got {decision.action!r}")
    allowed = PASS1_FIELDS if decision.pass_number == 1 else PASS2_FIELDS
    stray = set(decision.corrections) - allowed
    if stray:
        raise InvalidDecision(
            f"pass {decision.pass_number} may not touch fields: {sorted(stray)}"
        )
    if decision.action == "correct" and not decision.corrections:
        raise InvalidDecision("action 'correct' requires non-empty corrections")
    if decision.action != "correct" and decision.corrections:
        raise InvalidDecision(f"action {decision.action!r} must not carry corrections")


def _apply_corrections(entry: LexemeEntry, corrections: dict) -> LexemeEntry:
    updates: dict = {}
    if "lemma" in corrections:
        value = corrections["lemma"]
        if not isinstance(value, str):
            raise InvalidDecision("lemma correction must be a string")
        updates["lemma"] = value.strip()
    if "raw_text" in corrections:
        value = corrections["raw_text"]
        if not isinstance(value, str):
            raise InvalidDecision("raw_text correction must be a string")
        if not entry.provenance:
            raise InvalidDecision("entry has no provenance record to correct")
        fixed = replace(entry.provenance[0], raw_text=value)
        updates["provenance"] = (fixed,) + entry.provenance[1:]
    if "category" in corrections:
        try:
            updates["category"] = LexicalCategory.parse(corrections["category"])
        except ValueError as exc:
            raise InvalidDecision(str(exc)) from None
    if "gender" in corrections:
        try:
            updates["gender"] = GrammaticalGender.parse(corrections["gender"])
        except ValueError as exc:
            raise InvalidDecision(str(exc)) from None
    if "etymology_origin" in corrections or "etymology_note" in corrections:
        origin = corrections.get("etymology_origin", entry.etymology.origin)
        note = corrections.get("etymology_note", entry.etymology.note)
        if not isinstance(origin, str) or not isinstance(note, str):
            raise InvalidDecision("etymology corrections must be strings")
        updates["etymology"] = EtymologyRecord(origin=origin, note=note)
    if "glosses" in corrections:
        raw = corrections["glosses"]
        try:
            updates["glosses"] = tuple((str(lang), str(text)) for lang, text in raw)
        except (TypeError, ValueError):
            raise InvalidDecision("glosses correction must be a list of [lang, text] pairs") from None
    return replace(entry, **updates)


def _clear_flags(entry: LexemeEntry, decision: Decision) -> LexemeEntry:
    """Pass-1 review proves human attention: accept clears every flag, a
    correction clears the flags on the fields it touched."""
    if decision.pass_number != 1 or decision.action == "reject":
        return entry
    if decision.action == "accept":
        return replace(entry, flags=())
    touched = set(decision.corrections)
    remaining = tuple(s for s in entry.flags if s.target_field not in touched)
    return replace(entry, flags=remaining)


def apply_decision(project: Project, decision: Decision) -> LexemeEntry:
    """Apply one review decision atomically: corrections, state transition,
    flag resolution, and a single audit event."""
    _check_decision_shape(decision)
    entry = project.entries.get(decision.entry_id)
    if entry is None:
        raise UnknownEntry(f"no entry with id {decision.entry_id}")

    expected = _PASS_SOURCE_STATE[decision.pass_number]
    if entry.state is not expected:
        raise IllegalTransition(
            f"pass {decision.pass_number} requires state {expected.value}, "
            f"entry is {entry.state.value}"
        )

    if decision.action == "reject":
        target = VerificationState.REJECTED
    else:
        target = _PASS_TARGET_STATE[decision.pass_number]
    assert target in ALLOWED_TRANSITIONS[entry.state]

    updated = entry
    if decision.action == "correct":
        updated = _apply_corrections(updated, decision.corrections)
    updated = _clear_flags(updated, decision)
    updated = replace(updated, state=target)

    if decision.action != "reject":
        violations = validate_entry(updated, project.config, registry=project.sources)
        if violations:
            raise ValidationFailed(violations)

    project.replace_entry(
        updated,
        kind="decision",
        reviewer=decision.reviewer,
        payload=decision.to_payload(),
    )
    return updated


# ---------------------------------------------------------------------------
# Review queue


def review_queue(project: Project, pass_number: int, limit: Optional[int] = None) -> list[dict]:
    """Entries awaiting the given pass, most-flagged first, then by id."""
    if pass_number not in (1, 2):
        raise InvalidDecision(f"pass must be 1 or 2, got {pass_number}")
    wanted = _PASS_SOURCE_STATE[pass_number]
    eligible = [e for e in project.entries.values() if e.state is wanted]
    eligible.sort(key=lambda e: (-len(e.flags), e.id))
    if limit is not None:
        eligible = eligible[:limit]
    return [
        {
            "id": e.id,
            "lemma": e.lemma,
            "flags_count": len(e.flags),
            "state": e.state.value,
            "source": _source_summary(e),
        }
        for e in eligible
    ]


def _source_summary(entry: LexemeEntry) -> str:
    if not entry.provenance:
        return ""
    first = entry.provenance[0]
    extra = len(entry.provenance) - 1
    base = f"{first.source_id} p.{first.page}"
    return f"{base} (+{extra} more)" if extra else base


def stats(project: Project) -> dict:
    """Recountable snapshot: per-state counts, flag totals, per-source counts."""
    per_state = {state.value: 0 for state in VerificationState}
    per_source: dict[str, int] = {}
    total_flags = 0
    for entry in project.entries.values():
        per_state[entry.state.value] += 1
        total_flags += len(entry.flags)
        for source_id in {p.source_id for p in entry.provenance}:
            per_source[source_id] = per_source.get(source_id, 0) + 1
    return {
        "entries": len(project.entries),
        "states": per_state,
        "total_flags": total_flags,
        "sources": dict(sorted(per_source.items())),
    }


# ---------------------------------------------------------------------------
# Audit verification


class AuditChainError(Exception):
    pass


def verify_audit_chain(project: Project) -> int:
    """Check the full audit log; returns the number of events verified.

    Sequence numbers must be strictly increasing; per entry, each event's
    before-hash must equal the previous event's after-hash, the first event
    must be a creation, and the last after-hash must match the stored entry
    (or be null for absorbed entries).
    """
    events = project.audit_events()
    last_seq = 0
    per_entry: dict[str, list] = {}
    for event in events:
        if event.seq <= last_seq:
            raise AuditChainError(f"sequence not strictly increasing at seq={event.seq}")
        last_seq = event.seq
        per_entry.setdefault(event.entry_id, []).append(event)

    for entry_id, chain in per_entry.items():
        if chain[0].before_hash is not None:
            raise AuditChainError(f"{entry_id}: first event (seq={chain[0].seq}) has a before-hash")
        for prev, cur in zip(chain, chain[1:]):
            if prev.after_hash is None:
                raise AuditChainError(
                    f"{entry_id}: event after removal (seq={cur.seq})"
                )
            if cur.before_hash != prev.after_hash:
                raise AuditChainError(
                    f"{entry_id}: chain broken between seq={prev.seq} and seq={cur.seq}"
                )
        tail = chain[-1]
        current = project.entries.get(entry_id)
        if current is None:
            if tail.after_hash is not None:
                raise AuditChainError(f"{entry_id}: missing entry but chain does not end in removal")
        else:
            if tail.after_hash != entry_hash(current):
                raise AuditChainError(f"{entry_id}: stored entry does not match final after-hash")
    return len(events)


def both_passes_verified(project: Project, entry_id: str) -> bool:
    """True when the audit history holds an accepting/correcting decision for
    both passes — the export gate's ground truth."""
    passes = set()
    for event in project.audit_events():
        if event.entry_id != entry_id or event.kind != "decision":
            continue
        payload = event.payload
        if payload.get("action") in ("accept", "correct"):
            passes.add(payload.get("pass"))
    return {1, 2} <= passes
