import random

import pytest

from qamus.ids import IdGenerator
from qamus.model import (
    EtymologyRecord,
    GrammaticalGender,
    LexemeEntry,
    LexicalCategory,
    ProjectConfig,
    ProvenanceRecord,
    VerificationState,
)
from qamus.store import open_project

# Letters safe against the default confusion table (no alef-hamza forms).
SAFE_ARABIC = "بتجدرسصطعفقكلمنهوي"


def make_id_gen(seed: int = 0) -> IdGenerator:
    rng = random.Random(seed)
    counter = iter(range(10**9))
    return IdGenerator(clock=lambda: next(counter) / 1000.0, randbits=rng.getrandbits)


def make_entry(
    entry_id: str = "01000000000000000000000000",
    lemma: str = "كتاب",  # كتاب
    category: LexicalCategory = LexicalCategory.NOUN,
    gender: GrammaticalGender = GrammaticalGender.MASCULINE,
    origin: str = "ar",
    state: VerificationState = VerificationState.IMPORTED,
    source_id: str = "src1",
    page: int = 1,
    raw_text: str = None,
    capture_method: str = "manual",
    glosses=(("en", "book"),),
    flags=(),
    variants=(),
) -> LexemeEntry:
    return LexemeEntry(
        id=entry_id,
        lemma=lemma,
        category=category,
        gender=gender,
        etymology=EtymologyRecord(origin=origin),
        variants=tuple(variants),
        glosses=tuple(glosses),
        provenance=(
            ProvenanceRecord(
                source_id=source_id,
                page=page,
                raw_text=lemma if raw_text is None else raw_text,
                capture_method=capture_method,
            ),
        ),
        state=state,
        flags=tuple(flags),
    )


def random_lemma(rng: random.Random, min_len: int = 2, max_len: int = 8) -> str:
    return "".join(rng.choice(SAFE_ARABIC) for _ in range(rng.randint(min_len, max_len)))


@pytest.fixture
def config():
    return ProjectConfig()


@pytest.fixture
def project(tmp_path):
    proj = open_project(tmp_path / "proj")
    proj.register_source("src1", title="Source One", capture_method_default="manual")
    proj.register_source("src2", title="Source Two", capture_method_default="ocr")
    yield proj
    proj.close()


@pytest.fixture
def id_gen():
    return make_id_gen()
