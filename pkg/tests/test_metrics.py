import random
from functools import lru_cache

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import SAFE_ARABIC, make_entry, random_lemma
from qamus.metrics import (
    Alignment,
    EditOp,
    InsufficientEligibleEntries,
    align,
    breakdown,
    edit_distance,
    grapheme_split,
    sample_report,
)
from qamus.normalize import ConfusionRule, DEFAULT_CONFUSION_RULES


def oracle_distance(a: str, b: str) -> int:
    """Independent brute-force recursive edit distance (first-character rule)."""

    @lru_cache(maxsize=None)
    def rec(i: int, j: int) -> int:
        if i == len(a):
            return len(b) - j
        if j == len(b):
            return len(a) - i
        if a[i] == b[j]:
            return rec(i + 1, j + 1)
        return 1 + min(rec(i + 1, j + 1), rec(i + 1, j), rec(i, j + 1))

    return rec(0, 0)


def test_align_identical():
    alignment = align("abc", "abc")
    assert [op.kind for op in alignment.ops] == ["match", "match", "match"]
    assert alignment.distance == 0


def test_align_single_substitution():
    # oracle_distance("abc", "axc") == 1, frozen
    alignment = align("abc", "axc")
    assert alignment.distance == 1
    assert [op.kind for op in alignment.ops] == ["match", "substitute", "match"]
    assert alignment.ops[1] == EditOp("substitute", "b", "x")


def test_align_empty_hypothesis():
    alignment = align("ab", "")
    assert [op.kind for op in alignment.ops] == ["delete", "delete"]
    assert alignment.distance == 2


def test_align_empty_reference():
    alignment = align("", "ab")
    assert [op.kind for op in alignment.ops] == ["insert", "insert"]


def test_alignment_reconstructs_both_sides():
    ref, hyp = "kitten", "sitting"
    alignment = align(ref, hyp)
    assert alignment.ref_text == ref
    assert alignment.hyp_text == hyp
    assert alignment.distance == oracle_distance(ref, hyp) == 3


def test_align_deterministic_tie_break():
    first = align("ab", "ba")
    second = align("ab", "ba")
    assert first == second
    assert first.distance == 2
    assert [op.kind for op in first.ops] == ["substitute", "substitute"]


text_pairs = st.tuples(
    st.text(alphabet="abcd", max_size=8), st.text(alphabet="abcd", max_size=8)
)


@settings(max_examples=200)
@given(pair=text_pairs)
def test_align_cost_matches_oracle(pair):
    a, b = pair
    assert align(a, b).distance == oracle_distance(a, b) == edit_distance(a, b)


@settings(max_examples=200)
@given(pair=text_pairs)
def test_distance_symmetry_swaps_ins_del(pair):
    a, b = pair
    fwd = breakdown(align(a, b), [])
    rev = breakdown(align(b, a), [])
    assert fwd.distance == rev.distance
    assert fwd.insertions == rev.deletions
    assert fwd.deletions == rev.insertions


@settings(max_examples=100)
@given(
    a=st.text(alphabet="abc", max_size=6),
    b=st.text(alphabet="abc", max_size=6),
    c=st.text(alphabet="abc", max_size=6),
)
def test_triangle_inequality(a, b, c):
    assert edit_distance(a, c) <= edit_distance(a, b) + edit_distance(b, c)


@settings(max_examples=100)
@given(a=st.text(alphabet=SAFE_ARABIC, max_size=10))
def test_distance_to_self_is_zero(a):
    assert edit_distance(a, a) == 0
    assert align(a, a).distance == 0


def test_grapheme_cluster_mode():
    # fatha rides its base letter as a single unit in cluster mode
    ref = "اَب"  # اَب
    assert grapheme_split(ref) == ["اَ", "ب"]
    alignment = align(ref, "أب", clusters=True)
    assert [op.kind for op in alignment.ops] == ["substitute", "match"]
    assert alignment.ops[0].ref_grapheme == "اَ"


# ---------------------------------------------------------------------------
# Breakdown / bias classification


def test_breakdown_counts_sum_to_distance():
    alignment = align("kitten", "sitting")
    bd = breakdown(alignment, [])
    assert bd.distance == bd.substitutions + bd.insertions + bd.deletions == 3
    assert bd.ref_len == 6
    assert bd.cer == pytest.approx(0.5)


def test_breakdown_attested_pair_counts_once():
    # اَ against أ: the aligner yields one substitution plus one deletion,
    # and the run matches the shipped rule as a single bias event.
    alignment = align("اَ", "أ")
    bd = breakdown(alignment, DEFAULT_CONFUSION_RULES)
    assert bd.distance == 2
    assert bd.substitutions == 1
    assert bd.msa_bias_count == 1
    assert bd.msa_bias_share == 1.0


def test_breakdown_constructed_single_op_alignment():
    # Treating the attested pair as whole graphemes in one substitution op.
    alignment = Alignment(ops=(EditOp("substitute", "اَ", "أ"),))
    bd = breakdown(alignment, DEFAULT_CONFUSION_RULES)
    assert bd.msa_bias_count == 1
    assert bd.msa_bias_share == 1.0


def test_breakdown_share_six_of_ten():
    # 10 isolated substitutions, 6 matching single-grapheme rules.
    rules = [ConfusionRule(f"r{i}", chr(0x0680 + i), chr(0x0690 + i)) for i in range(6)]
    ops = []
    for i in range(10):
        ops.append(EditOp("match", "ب", "ب"))
        if i < 6:
            ops.append(EditOp("substitute", chr(0x0680 + i), chr(0x0690 + i)))
        else:
            ops.append(EditOp("substitute", "س", chr(0x06A0 + i)))
    bd = breakdown(Alignment(ops=tuple(ops)), rules)
    assert bd.substitutions == 10
    assert bd.msa_bias_count == 6
    assert bd.msa_bias_share == pytest.approx(0.6)


def test_breakdown_zero_distance_share_undefined():
    bd = breakdown(align("abc", "abc"), DEFAULT_CONFUSION_RULES)
    assert bd.distance == 0
    assert bd.msa_bias_count == 0
    assert bd.msa_bias_share is None


def test_breakdown_pure_deletions_share_zero():
    bd = breakdown(align("ab", ""), DEFAULT_CONFUSION_RULES)
    assert bd.distance == 2
    assert bd.msa_bias_share == 0.0


def test_bias_never_exceeds_substitutions():
    rng = random.Random(5)
    rules = DEFAULT_CONFUSION_RULES + [ConfusionRule("g", "گ", "ك")]
    for _ in range(200):
        ref = random_lemma(rng, 1, 12)
        hyp = random_lemma(rng, 0, 12)
        bd = breakdown(align(ref, hyp), rules)
        assert bd.msa_bias_count <= bd.substitutions
        assert bd.distance == bd.substitutions + bd.insertions + bd.deletions


# ---------------------------------------------------------------------------
# Sampling


def _seed_ocr_entries(project, count, id_gen):
    from qamus.workflow import Decision, apply_decision

    entries = []
    for i in range(count):
        entry = make_entry(
            entry_id=id_gen.new_id(),
            lemma="كتاب",
            raw_text="كتب",  # one deletion vs lemma
            capture_method="ocr",
        )
        project.add_entry(entry)
        entries.append(entry)
    for entry in entries:
        apply_decision(project, Decision(entry.id, 1, "accept", reviewer="r"))
    return entries


def test_sample_report_deterministic(project, id_gen):
    _seed_ocr_entries(project, 10, id_gen)
    first = sample_report(project, 5, seed=42)
    second = sample_report(project, 5, seed=42)
    assert first == second
    assert [e[0] for e in first.entries] == sorted(e[0] for e in first.entries)
    different = sample_report(project, 5, seed=43)
    assert first.sample_size == different.sample_size == 5


def test_sample_report_insufficient(project, id_gen):
    _seed_ocr_entries(project, 3, id_gen)
    with pytest.raises(InsufficientEligibleEntries) as exc:
        sample_report(project, 10, seed=1)
    assert exc.value.requested == 10
    assert exc.value.available == 3


def test_manual_capture_not_eligible(project, id_gen):
    from qamus.workflow import Decision, apply_decision

    entry = make_entry(entry_id=id_gen.new_id(), capture_method="manual")
    project.add_entry(entry)
    apply_decision(project, Decision(entry.id, 1, "accept", reviewer="r"))
    with pytest.raises(InsufficientEligibleEntries):
        sample_report(project, 1, seed=1)


def test_unverified_entries_not_eligible(project, id_gen):
    entry = make_entry(entry_id=id_gen.new_id(), capture_method="ocr")
    project.add_entry(entry)  # still Imported: no human-corrected reference yet
    with pytest.raises(InsufficientEligibleEntries):
        sample_report(project, 1, seed=1)
