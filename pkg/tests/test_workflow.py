import dataclasses

import pytest

from conftest import make_entry, make_id_gen
from qamus.model import (
    GrammaticalGender,
    SuspectSpan,
    VerificationState,
    entry_hash,
)
from qamus.store import UnknownEntry
from qamus.workflow import (
    AuditChainError,
    Decision,
    IllegalTransition,
    InvalidDecision,
    ValidationFailed,
    apply_decision,
    both_passes_verified,
    review_queue,
    stats,
    verify_audit_chain,
)


@pytest.fixture
def imported(project):
    entry = make_entry()
    project.add_entry(entry)
    return entry


def test_pass1_accept_advances(project, imported):
    updated = apply_decision(project, Decision(imported.id, 1, "accept", reviewer="rev"))
    assert updated.state is VerificationState.PASS1_VERIFIED
    assert project.entries[imported.id].state is VerificationState.PASS1_VERIFIED


def test_pass2_on_imported_is_illegal(project, imported):
    with pytest.raises(IllegalTransition):
        apply_decision(project, Decision(imported.id, 2, "accept"))
    assert project.entries[imported.id].state is VerificationState.IMPORTED


def test_pass1_twice_is_illegal(project, imported):
    apply_decision(project, Decision(imported.id, 1, "accept"))
    with pytest.raises(IllegalTransition):
        apply_decision(project, Decision(imported.id, 1, "accept"))


def test_pass2_accept_with_unspecified_noun_gender_fails(project):
    entry = make_entry(gender=GrammaticalGender.UNSPECIFIED)
    project.add_entry(entry)
    apply_decision(project, Decision(entry.id, 1, "accept"))
    with pytest.raises(ValidationFailed) as exc:
        apply_decision(project, Decision(entry.id, 2, "accept"))
    assert any(v.code == "UnspecifiedGender" for v in exc.value.violations)
    assert project.entries[entry.id].state is VerificationState.PASS1_VERIFIED  # unchanged


def test_pass2_correct_fills_gender_and_advances(project):
    entry = make_entry(gender=GrammaticalGender.UNSPECIFIED)
    project.add_entry(entry)
    apply_decision(project, Decision(entry.id, 1, "accept"))
    updated = apply_decision(
        project,
        Decision(entry.id, 2, "correct", corrections={"gender": "feminine"}),
    )
    assert updated.state is VerificationState.PASS2_VERIFIED
    assert updated.gender is GrammaticalGender.FEMININE


def test_reject_is_terminal(project, imported):
    apply_decision(project, Decision(imported.id, 1, "reject"))
    assert project.entries[imported.id].state is VerificationState.REJECTED
    with pytest.raises(IllegalTransition):
        apply_decision(project, Decision(imported.id, 1, "accept"))
    with pytest.raises(IllegalTransition):
        apply_decision(project, Decision(imported.id, 2, "accept"))


def test_pass1_corrections_limited_to_textual_fields(project, imported):
    with pytest.raises(InvalidDecision):
        apply_decision(
            project, Decision(imported.id, 1, "correct", corrections={"gender": "feminine"})
        )


def test_pass2_corrections_limited_to_metadata(project, imported):
    apply_decision(project, Decision(imported.id, 1, "accept"))
    with pytest.raises(InvalidDecision):
        apply_decision(
            project, Decision(imported.id, 2, "correct", corrections={"lemma": "قلم"})
        )


def test_correct_requires_corrections_and_accept_forbids_them(project, imported):
    with pytest.raises(InvalidDecision):
        apply_decision(project, Decision(imported.id, 1, "correct"))
    with pytest.raises(InvalidDecision):
        apply_decision(
            project, Decision(imported.id, 1, "accept", corrections={"lemma": "قلم"})
        )


def test_pass1_correct_edits_lemma_and_raw_text(project):
    entry = make_entry(raw_text="كتـاب")
    project.add_entry(entry)
    updated = apply_decision(
        project,
        Decision(
            entry.id,
            1,
            "correct",
            corrections={"lemma": "قلم", "raw_text": "قلم"},
        ),
    )
    assert updated.lemma == "قلم"
    assert updated.provenance[0].raw_text == "قلم"


def test_corrected_entry_must_validate(project, imported):
    with pytest.raises(ValidationFailed):
        apply_decision(
            project, Decision(imported.id, 1, "correct", corrections={"lemma": "latin"})
        )


def test_unknown_entry(project):
    with pytest.raises(UnknownEntry):
        apply_decision(project, Decision("missing", 1, "accept"))


# -- flag resolution ---------------------------------------------------------


def _flagged_entry(**kwargs):
    flags = (
        SuspectSpan("lemma", 0, 1, "r1", "x"),
        SuspectSpan("raw_text", 0, 1, "r1", "x"),
    )
    return make_entry(flags=flags, **kwargs)


def test_pass1_accept_clears_all_flags(project):
    entry = _flagged_entry()
    project.add_entry(entry)
    updated = apply_decision(project, Decision(entry.id, 1, "accept"))
    assert updated.flags == ()


def test_pass1_correct_clears_only_touched_fields(project):
    entry = _flagged_entry()
    project.add_entry(entry)
    updated = apply_decision(
        project, Decision(entry.id, 1, "correct", corrections={"lemma": "قلم"})
    )
    assert [s.target_field for s in updated.flags] == ["raw_text"]


def test_untouched_flags_persist_to_pass2(project):
    entry = _flagged_entry()
    project.add_entry(entry)
    apply_decision(
        project, Decision(entry.id, 1, "correct", corrections={"lemma": "قلم"})
    )
    updated = apply_decision(project, Decision(entry.id, 2, "accept"))
    assert [s.target_field for s in updated.flags] == ["raw_text"]


def test_reject_keeps_flags(project):
    entry = _flagged_entry()
    project.add_entry(entry)
    updated = apply_decision(project, Decision(entry.id, 1, "reject"))
    assert len(updated.flags) == 2


# -- review queue -------------------------------------------------------------


def test_queue_orders_flagged_first(project):
    id_gen = make_id_gen()
    counts = [2, 0, 5]
    entry_ids = []
    for count in counts:
        flags = tuple(SuspectSpan("lemma", 0, 1, "r1", "x") for _ in range(count))
        entry = make_entry(entry_id=id_gen.new_id(), flags=flags)
        project.add_entry(entry)
        entry_ids.append(entry.id)
    queue = review_queue(project, 1)
    assert [item["flags_count"] for item in queue] == [5, 2, 0]
    assert queue[0]["id"] == entry_ids[2]
    # stable across calls absent mutations
    assert review_queue(project, 1) == queue


def test_queue_empty_project(project):
    assert review_queue(project, 1) == []
    assert review_queue(project, 2) == []


def test_queue_limit(project):
    id_gen = make_id_gen()
    for _ in range(3):
        project.add_entry(make_entry(entry_id=id_gen.new_id()))
    assert len(review_queue(project, 1, limit=1)) == 1
    assert review_queue(project, 1, limit=1)[0] == review_queue(project, 1)[0]


def test_queue_pass2_shows_pass1_verified(project, imported):
    assert review_queue(project, 2) == []
    apply_decision(project, Decision(imported.id, 1, "accept"))
    assert review_queue(project, 1) == []
    (item,) = review_queue(project, 2)
    assert item["id"] == imported.id
    assert item["source"] == "src1 p.1"


def test_stats_counts(project, imported):
    snapshot = stats(project)
    assert snapshot["entries"] == 1
    assert snapshot["states"]["Imported"] == 1
    assert snapshot["sources"] == {"src1": 1}
    apply_decision(project, Decision(imported.id, 1, "accept"))
    snapshot = stats(project)
    assert snapshot["states"]["Imported"] == 0
    assert snapshot["states"]["Pass1Verified"] == 1


# -- audit chain ---------------------------------------------------------------


def test_audit_chain_verifies_full_history(project):
    entry = make_entry(gender=GrammaticalGender.UNSPECIFIED)
    project.add_entry(entry)
    apply_decision(
        project, Decision(entry.id, 1, "correct", corrections={"lemma": "قلم"})
    )
    apply_decision(project, Decision(entry.id, 2, "correct", corrections={"gender": "masculine"}))
    assert verify_audit_chain(project) == 3
    assert both_passes_verified(project, entry.id)


def test_audit_chain_detects_tampering(project, imported):
    apply_decision(project, Decision(imported.id, 1, "accept"))
    # bypass the store API to simulate tampering with entries.jsonl
    project.entries[imported.id] = dataclasses.replace(
        project.entries[imported.id], lemma="قلم"
    )
    with pytest.raises(AuditChainError):
        verify_audit_chain(project)


def test_audit_records_reviewer_and_payload(project, imported):
    apply_decision(project, Decision(imported.id, 1, "accept", reviewer="amal"))
    event = project.audit_events()[-1]
    assert event.reviewer == "amal"
    assert event.payload["pass"] == 1
    assert event.payload["action"] == "accept"
    assert event.entry_id == imported.id
    assert event.after_hash == entry_hash(project.entries[imported.id])
