"""Character-level alignment, error rates, and bias classification.

Alignment is plain Levenshtein over codepoints with unit costs and a fixed
backtrace preference (match > substitute > delete > insert), so the same
input pair always yields the same alignment and therefore the same bias
classification. A grapheme-cluster mode (base character plus trailing
combining marks as one unit) is available behind a config flag, default off.
"""

from __future__ import annotations

import random
import unicodedata
from dataclasses import dataclass
from typing import Optional

from .model import VerificationState
from .normalize import ConfusionRule

MATCH = "match"
SUBSTITUTE = "substitute"
INSERT = "insert"
DELETE = "delete"


@dataclass(frozen=True)
class EditOp:
    kind: str
    ref_grapheme: Optional[str] = None  # set for match/substitute/delete
    hyp_grapheme: Optional[str] = None  # set for match/substitute/insert


@dataclass(frozen=True)
class Alignment:
    ops: tuple[EditOp, ...]

    @property
    def distance(self) -> int:
        return sum(1 for op in self.ops if op.kind != MATCH)

    @property
    def ref_text(self) -> str:
        return "".join(op.ref_grapheme for op in self.ops if op.ref_grapheme is not None)

    @property
    def hyp_text(self) -> str:
        return "".join(op.hyp_grapheme for op in self.ops if op.hyp_grapheme is not None)


def grapheme_split(text: str) -> list[str]:
    """Split into base-plus-combining-marks clusters."""
    clusters: list[str] = []
    for ch in text:
        if clusters and unicodedata.combining(ch):
            clusters[-1] += ch
        else:
            clusters.append(ch)
    return clusters


def edit_distance(a: str, b: str) -> int:
    """Unit-cost Levenshtein distance over codepoints (two-row DP)."""
    if a == b:
        return 0
    if not a:
        return len(b)
    if not b:
        return len(a)
    prev = list(range(len(b) + 1))
    for i, ca in enumerate(a, 1):
        cur = [i] + [0] * len(b)
        for j, cb in enumerate(b, 1):
            cur[j] = min(
                prev[j - 1] + (ca != cb),
                prev[j] + 1,
                cur[j - 1] + 1,
            )
        prev = cur
    return prev[-1]


def _flip(op: EditOp) -> EditOp:
    if op.kind == DELETE:
        return EditOp(INSERT, None, op.ref_grapheme)
    if op.kind == INSERT:
        return EditOp(DELETE, op.hyp_grapheme, None)
    return EditOp(op.kind, op.hyp_grapheme, op.ref_grapheme)


def align(ref: str, hyp: str, clusters: bool = False) -> Alignment:
    """Minimal-cost alignment of hyp against ref.

    Backtrace runs from the end of both strings; at equal cost it prefers
    match, then substitute, then delete (consume ref), then insert (consume
    hyp), which makes the output fully deterministic. The DP always runs in
    a canonical orientation of the pair and mirrors the ops back, so
    align(a, b) and align(b, a) are exact mirror images: same distance and
    substitutions, insert/delete counts swapped.
    """
    if (len(hyp), hyp) < (len(ref), ref):
        mirrored = align(hyp, ref, clusters=clusters)
        return Alignment(ops=tuple(_flip(op) for op in mirrored.ops))
    r = grapheme_split(ref) if clusters else list(ref)
    h = grapheme_split(hyp) if clusters else list(hyp)
    m, n = len(r), len(h)

    dp = [[0] * (n + 1) for _ in range(m + 1)]
    for i in range(1, m + 1):
        dp[i][0] = i
    for j in range(1, n + 1):
        dp[0][j] = j
    for i in range(1, m + 1):
        row = dp[i]
        prev_row = dp[i - 1]
        ri = r[i - 1]
        for j in range(1, n + 1):
            row[j] = min(
                prev_row[j - 1] + (ri != h[j - 1]),
                prev_row[j] + 1,
                row[j - 1] + 1,
            )

    ops: list[EditOp] = []
    i, j = m, n
    while i > 0 or j > 0:
        if i > 0 and j > 0 and r[i - 1] == h[j - 1] and dp[i][j] == dp[i - 1][j - 1]:
            ops.append(EditOp(MATCH, r[i - 1], h[j - 1]))
            i, j = i - 1, j - 1
        elif i > 0 and j > 0 and dp[i][j] == dp[i - 1][j - 1] + 1:
            ops.append(EditOp(SUBSTITUTE, r[i - 1], h[j - 1]))
            i, j = i - 1, j - 1
        elif i > 0 and dp[i][j] == dp[i - 1][j] + 1:
            ops.append(EditOp(DELETE, r[i - 1], None))
            i -= 1
        else:
            ops.append(EditOp(INSERT, None, h[j - 1]))
            j -= 1
    ops.reverse()
    return Alignment(ops=tuple(ops))


# ---------------------------------------------------------------------------
# Error breakdown


@dataclass(frozen=True)
class ErrorBreakdown:
    ref_len: int
    distance: int
    cer: float
    substitutions: int
    insertions: int
    deletions: int
    msa_bias_count: int
    msa_bias_share: Optional[float]  # None when distance == 0

    def to_dict(self) -> dict:
        return {
            "ref_len": self.ref_len,
            "distance": self.distance,
            "cer": self.cer,
            "substitutions": self.substitutions,
            "insertions": self.insertions,
            "deletions": self.deletions,
            "msa_bias_count": self.msa_bias_count,
            "msa_bias_share": self.msa_bias_share,
        }


def breakdown(alignment: Alignment, table: list[ConfusionRule]) -> ErrorBreakdown:
    """Classify alignment errors against the confusion table.

    A substitution whose (ref, hyp) graphemes equal a rule's
    (darija_form, msa_form) is a bias hit. Rules spanning several graphemes
    are matched against maximal runs of adjacent non-match ops whose ref side
    spells darija_form and hyp side spells msa_form; a matched run counts as
    one bias event. The share reported is the rule-matched share of
    substitutions.
    """
    subs = sum(1 for op in alignment.ops if op.kind == SUBSTITUTE)
    inss = sum(1 for op in alignment.ops if op.kind == INSERT)
    dels = sum(1 for op in alignment.ops if op.kind == DELETE)
    distance = subs + inss + dels
    ref_len = sum(
        len(op.ref_grapheme) for op in alignment.ops if op.ref_grapheme is not None
    )

    single = {(r.darija_form, r.msa_form) for r in table}
    multi = {(r.darija_form, r.msa_form) for r in table if len(r.darija_form) > 1 or len(r.msa_form) > 1}

    bias = 0
    run: list[EditOp] = []

    def close_run() -> int:
        if not run:
            return 0
        ref_side = "".join(op.ref_grapheme or "" for op in run)
        hyp_side = "".join(op.hyp_grapheme or "" for op in run)
        if (ref_side, hyp_side) in multi:
            return 1
        # Not a run-level hit: fall back to per-op single-grapheme matches.
        return sum(
            1
            for op in run
            if op.kind == SUBSTITUTE and (op.ref_grapheme, op.hyp_grapheme) in single
        )

    for op in alignment.ops:
        if op.kind == MATCH:
            bias += close_run()
            run = []
        else:
            run.append(op)
    bias += close_run()

    if ref_len > 0:
        cer = distance / ref_len
    else:
        cer = 0.0 if distance == 0 else float("inf")
    if distance == 0:
        share: Optional[float] = None
    elif subs == 0:
        share = 0.0
    else:
        share = bias / subs
    return ErrorBreakdown(
        ref_len=ref_len,
        distance=distance,
        cer=cer,
        substitutions=subs,
        insertions=inss,
        deletions=dels,
        msa_bias_count=bias,
        msa_bias_share=share,
    )


# ---------------------------------------------------------------------------
# Sampling protocol


class InsufficientEligibleEntries(Exception):
    def __init__(self, requested: int, available: int):
        self.requested = requested
        self.available = available
        super().__init__(
            f"requested sample of {requested} but only {available} eligible entries"
        )


@dataclass(frozen=True)
class SampleReport:
    seed: int
    sample_size: int
    entries: tuple[tuple[str, ErrorBreakdown], ...]  # (entry id, breakdown)
    aggregate_cer: float
    aggregate_msa_bias_share: Optional[float]
    units: str

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "sample_size": self.sample_size,
            "aggregation": {
                "cer": "micro: total distance / total reference length",
                "msa_bias_share": "micro: rule-matched events / total substitutions",
            },
            "units": self.units,
            "aggregate_cer": self.aggregate_cer,
            "aggregate_msa_bias_share": self.aggregate_msa_bias_share,
            "entries": [
                {"id": entry_id, **bd.to_dict()} for entry_id, bd in self.entries
            ],
        }


_REF_STATES = (
    VerificationState.PASS1_VERIFIED,
    VerificationState.PASS2_VERIFIED,
    VerificationState.EXPORTED,
)


def eligible_for_sampling(project) -> list:
    """Entries usable as (ref, hyp) pairs: OCR-captured and human-verified.

    The reference is the current lemma (corrected in pass 1); the hypothesis
    is the raw text exactly as captured by OCR.
    """
    out = []
    for entry in sorted(project.entries.values(), key=lambda e: e.id):
        if entry.state not in _REF_STATES:
            continue
        prov = next((p for p in entry.provenance if p.capture_method == "ocr"), None)
        if prov is None or not prov.raw_text or not entry.lemma:
            continue
        out.append((entry, prov))
    return out


def sample_report(project, n: int, seed: int) -> SampleReport:
    """Draw a reproducible sample without replacement and micro-average it."""
    eligible = eligible_for_sampling(project)
    if len(eligible) < n:
        raise InsufficientEligibleEntries(n, len(eligible))
    rng = random.Random(seed)
    chosen = sorted(rng.sample(eligible, n), key=lambda pair: pair[0].id)

    table = project.confusion_rules()
    clusters = project.config.grapheme_clusters
    rows: list[tuple[str, ErrorBreakdown]] = []
    total_dist = total_ref = total_subs = total_bias = 0
    for entry, prov in chosen:
        alignment = align(entry.lemma, prov.raw_text, clusters=clusters)
        bd = breakdown(alignment, table)
        rows.append((entry.id, bd))
        total_dist += bd.distance
        total_ref += bd.ref_len
        total_subs += bd.substitutions
        total_bias += bd.msa_bias_count

    aggregate_cer = total_dist / total_ref if total_ref else 0.0
    if total_dist == 0:
        share: Optional[float] = None
    elif total_subs == 0:
        share = 0.0
    else:
        share = total_bias / total_subs
    return SampleReport(
        seed=seed,
        sample_size=n,
        entries=tuple(rows),
        aggregate_cer=aggregate_cer,
        aggregate_msa_bias_share=share,
        units="grapheme-clusters" if clusters else "codepoints",
    )


def report_table(report: SampleReport) -> str:
    """Human-readable fixed-width rendering of a sample report."""
    lines = [
        f"sample n={report.sample_size} seed={report.seed} units={report.units}",
        f"{'id':<26} {'ref_len':>7} {'dist':>5} {'cer':>7} {'S':>4} {'I':>4} {'D':>4} {'bias':>5} {'share':>6}",
    ]
    for entry_id, bd in report.entries:
        share = "-" if bd.msa_bias_share is None else f"{bd.msa_bias_share:.2f}"
        lines.append(
            f"{entry_id:<26} {bd.ref_len:>7} {bd.distance:>5} {bd.cer:>7.4f}"
            f" {bd.substitutions:>4} {bd.insertions:>4} {bd.deletions:>4}"
            f" {bd.msa_bias_count:>5} {share:>6}"
        )
    agg_share = (
        "-" if report.aggregate_msa_bias_share is None else f"{report.aggregate_msa_bias_share:.4f}"
    )
    lines.append(
        f"aggregate (micro): cer={report.aggregate_cer:.4f} msa_bias_share={agg_share}"
    )
    return "\n".join(lines)
