#!/usr/bin/env python3
"""Generate the frozen CER fixture corpus (tests/fixtures/cer_corpus.json).

Builds 100 (ref, hyp) pairs engineered so that, micro-averaged:

    total distance / total reference length = 1700 / 10000 = 0.17
    rule-matched substitutions / substitutions = 59 / 100   = 0.59

Each pair: reference of 100 codepoints, hypothesis derived from it by one
substitution (rule-matched on the first 59 pairs) plus 16 deletions.
Every pair is verified against the aligner and classifier before freezing,
so the corpus is construction-verified, not assumed.
"""

import json
import random
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from qamus.metrics import align, breakdown
from qamus.normalize import ConfusionRule, DEFAULT_CONFUSION_RULES

# No alef-hamza forms, no kaf, no ng-kaf: rule hits occur only where planted.
ALPHABET = "بتجدرزسشصضطظعغفقلمنهوي"
NG_KAF = "ڭ"  # ڭ (dialect form)
KAF = "ك"  # ك (what MSA-trained OCR reads it as)

FIXTURE_RULES = DEFAULT_CONFUSION_RULES + [
    ConfusionRule("ng-kaf-vs-kaf", NG_KAF, KAF, "three-dot kaf flattened to plain kaf"),
]

REF_LEN = 100
DELETIONS = 16
PAIRS = 100
BIASED = 59


def build_pair(rng: random.Random, biased: bool) -> dict:
    while True:
        chars = []
        for _ in range(REF_LEN):
            ch = rng.choice(ALPHABET)
            while chars and ch == chars[-1]:
                ch = rng.choice(ALPHABET)
            chars.append(ch)
        sub_pos = rng.randrange(10, REF_LEN - 10)
        if biased:
            chars[sub_pos] = NG_KAF
            replacement = KAF
        else:
            replacement = rng.choice(ALPHABET)
            while replacement in (chars[sub_pos], chars[sub_pos - 1], chars[sub_pos + 1]):
                replacement = rng.choice(ALPHABET)
        ref = "".join(chars)

        candidates = [i for i in range(REF_LEN) if abs(i - sub_pos) > 1]
        dels = set(rng.sample(candidates, DELETIONS))
        hyp_chars = []
        for i, ch in enumerate(chars):
            if i in dels:
                continue
            hyp_chars.append(replacement if i == sub_pos else ch)
        hyp = "".join(hyp_chars)

        bd = breakdown(align(ref, hyp), FIXTURE_RULES)
        if (
            bd.distance == DELETIONS + 1
            and bd.substitutions == 1
            and bd.deletions == DELETIONS
            and bd.insertions == 0
            and bd.msa_bias_count == (1 if biased else 0)
        ):
            return {"ref": ref, "hyp": hyp, "bias": biased}


def main() -> None:
    rng = random.Random(20250)
    pairs = [build_pair(rng, i < BIASED) for i in range(PAIRS)]

    total_ref = sum(len(p["ref"]) for p in pairs)
    total_dist = total_subs = total_bias = 0
    for pair in pairs:
        bd = breakdown(align(pair["ref"], pair["hyp"]), FIXTURE_RULES)
        total_dist += bd.distance
        total_subs += bd.substitutions
        total_bias += bd.msa_bias_count
    assert total_ref == PAIRS * REF_LEN == 10000
    assert total_dist == 1700, total_dist
    assert total_subs == 100 and total_bias == 59
    assert total_dist / total_ref == 0.17
    assert total_bias / total_subs == 0.59

    out = Path(__file__).resolve().parents[1] / "tests" / "fixtures" / "cer_corpus.json"
    out.parent.mkdir(parents=True, exist_ok=True)
    payload = {
        "rules": [
            {"rule_id": r.rule_id, "darija_form": r.darija_form, "msa_form": r.msa_form, "note": r.note}
            for r in FIXTURE_RULES
        ],
        "pairs": pairs,
    }
    out.write_text(json.dumps(payload, ensure_ascii=False, indent=1) + "\n", encoding="utf-8")
    print(f"wrote {out} ({len(pairs)} pairs, cer=0.17, bias share=0.59)")


if __name__ == "__main__":
    main()
