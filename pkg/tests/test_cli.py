import json
import os
from pathlib import Path

import pytest

from qamus.cli import run
from qamus.store import open_project
from qamus.workflow import Decision, apply_decision

HEADER = "lemma\tcategory\tgender\tetym_origin\tetym_note\tgloss_lang\tgloss\tsource_id\tpage\tline"

SUBCOMMANDS = (
    "init",
    "ingest",
    "normalize",
    "flags",
    "dedupe",
    "merge",
    "link",
    "propagate",
    "review",
    "metrics",
    "export",
    "validate",
)


def _write_tsv(path: Path, rows: list[str]) -> Path:
    path.write_text(HEADER + "\n" + "".join(r + "\n" for r in rows), encoding="utf-8")
    return path


THREE_ROWS = [
    "كتاب\tnoun\tmasculine\tar\t\ten\tbook\tamili2011\t44\t3",
    "دفتر\tnoun\tmasculine\tar\t\ten\tnotebook\tamili2011\t44\t4",
    "قلم\tnoun\tmasculine\tar\t\ten\tpen\tamili2011\t45\t1",
]


def test_init_then_validate(tmp_path, capsys):
    assert run(["init", "--project", str(tmp_path / "p")]) == 0
    out = capsys.readouterr().out
    assert "entries=0" in out
    assert run(["validate", "--project", str(tmp_path / "p")]) == 0
    out = capsys.readouterr().out
    assert "entries=0" in out and "violations=0" in out


def test_ingest_three_row_fixture(tmp_path, capsys):
    project_dir = str(tmp_path / "p")
    run(["init", "--project", project_dir])
    tsv = _write_tsv(tmp_path / "rows.tsv", THREE_ROWS)
    assert run(["ingest", "--project", project_dir, "tsv", "--source", "amili2011", str(tsv)]) == 0
    out = capsys.readouterr().out.splitlines()[-1]
    assert "imported=3" in out and "errors=0" in out


def test_reingest_same_file_skipped(tmp_path, capsys):
    project_dir = str(tmp_path / "p")
    run(["init", "--project", project_dir])
    tsv = _write_tsv(tmp_path / "rows.tsv", THREE_ROWS)
    run(["ingest", "--project", project_dir, "tsv", str(tsv)])
    capsys.readouterr()
    assert run(["ingest", "--project", project_dir, "tsv", str(tsv)]) == 0
    captured = capsys.readouterr()
    assert "skipped=1" in captured.out
    assert "already ingested" in captured.err
    with open_project(project_dir) as project:
        assert len(project.entries) == 3


def test_export_without_verified_entries_exits_1(tmp_path, capsys):
    project_dir = str(tmp_path / "p")
    run(["init", "--project", project_dir])
    tsv = _write_tsv(tmp_path / "rows.tsv", THREE_ROWS)
    run(["ingest", "--project", project_dir, "tsv", str(tsv)])
    mapping = tmp_path / "mapping.json"
    mapping.write_text(
        json.dumps(
            {
                "language_item": "Q106",
                "category_map": {"noun": "Q1084"},
                "gender_map": {"masculine": "Q499327"},
            }
        ),
        encoding="utf-8",
    )
    capsys.readouterr()
    code = run([
        "export", "--project", project_dir, "lexemes",
        "--mapping", str(mapping), "--out", str(tmp_path / "out"),
    ])
    captured = capsys.readouterr()
    assert code == 1
    assert "EmptyExport" in captured.err


def test_usage_error_exits_2(tmp_path):
    with pytest.raises(SystemExit) as exc:
        run(["ingest", "--project", str(tmp_path), "tsv"])  # missing file arg
    assert exc.value.code == 2


def test_unknown_flag_exits_2():
    with pytest.raises(SystemExit) as exc:
        run(["init", "--bogus"])
    assert exc.value.code == 2


def test_help_golden(capsys):
    os.environ["COLUMNS"] = "100"
    try:
        with pytest.raises(SystemExit):
            run(["--help"])
    finally:
        os.environ.pop("COLUMNS", None)
    golden = (Path(__file__).parent / "golden" / "help.txt").read_text(encoding="utf-8")
    assert capsys.readouterr().out == golden


def test_help_enumerates_every_subcommand(capsys):
    with pytest.raises(SystemExit):
        run(["--help"])
    text = capsys.readouterr().out
    for name in SUBCOMMANDS:
        assert name in text


def test_project_env_fallback(tmp_path, capsys, monkeypatch):
    monkeypatch.setenv("LRELF_PROJECT", str(tmp_path / "envproj"))
    assert run(["init"]) == 0
    assert (tmp_path / "envproj" / "project.json").exists()


def test_ocr_ingest_and_flags_pipeline(tmp_path, capsys):
    project_dir = str(tmp_path / "p")
    run(["init", "--project", project_dir])
    ocr = tmp_path / "pages.txt"
    ocr.write_text(
        "### PAGE 1 SOURCE chafik1999\n"
        "أستاذ : معلم\n"
        "كتاب : دفتر\n",
        encoding="utf-8",
    )
    assert run(["ingest", "--project", project_dir, "ocr", str(ocr)]) == 0
    out = capsys.readouterr().out
    assert "pages=1" in out and "imported=2" in out
    assert run(["flags", "--project", project_dir]) == 0
    out = capsys.readouterr().out
    assert "entries_flagged=1" in out  # أستاذ hits the default table twice (lemma + raw)
    assert "spans=2" in out
    with open_project(project_dir) as project:
        flagged = [e for e in project.entries.values() if e.flags]
        assert len(flagged) == 1
        assert flagged[0].lemma == "أستاذ"


def test_dedupe_merge_link_propagate_cycle(tmp_path, capsys):
    project_dir = str(tmp_path / "p")
    run(["init", "--project", project_dir])
    rows = [
        "كتاب\tnoun\tmasculine\tar\t\ten\tbook\tsrcA\t1\t",
        "كتاب\tnoun\t\t\t\tfr\tlivre\tsrcB\t7\t",
        "كتب\tverb\t\tunknown\t\t\t\tsrcA\t2\t",
    ]
    tsv = _write_tsv(tmp_path / "rows.tsv", rows)
    run(["ingest", "--project", project_dir, "tsv", str(tsv)])
    capsys.readouterr()

    assert run(["dedupe", "--project", project_dir]) == 0
    captured = capsys.readouterr()
    assert "clusters=1 exact=1 fuzzy=0" in captured.out
    report = json.loads(captured.out[: captured.out.rindex("clusters=")])
    assert len(report["clusters"][0]["members"]) == 2

    assert run(["merge", "--project", project_dir]) == 0
    assert "applied=1" in capsys.readouterr().out

    with open_project(project_dir) as project:
        assert len(project.entries) == 2
        noun = next(e for e in project.entries.values() if e.category.value == "noun")
        verb = next(e for e in project.entries.values() if e.category.value == "verb")
        assert len(noun.provenance) == 2
    assert run([
        "link", "--project", project_dir,
        "--from", verb.id, "--to", noun.id, "--kind", "derived_from",
    ]) == 0
    assert "added=1" in capsys.readouterr().out

    # re-linking warns and stays idempotent
    assert run([
        "link", "--project", project_dir,
        "--from", verb.id, "--to", noun.id, "--kind", "derived_from",
    ]) == 0
    assert "duplicate=1" in capsys.readouterr().out

    assert run(["propagate", "--project", project_dir]) == 0
    captured = capsys.readouterr()
    # verb inherits the noun's gender and etymology origin
    assert "proposals=2" in captured.out
    fills = json.loads(captured.out[: captured.out.rindex("proposals=")])
    assert [(f["field"], f["value"]) for f in fills] == [
        ("gender", "masculine"),
        ("etymology_origin", "ar"),
    ]


def test_normalize_command(tmp_path, capsys):
    project_dir = str(tmp_path / "p")
    run(["init", "--project", project_dir])
    rows = ["كـتاب\tnoun\tmasculine\tar\t\t\t\tsrc\t1\t"]
    tsv = _write_tsv(tmp_path / "rows.tsv", rows)
    run(["ingest", "--project", project_dir, "tsv", str(tsv)])
    capsys.readouterr()
    assert run(["normalize", "--project", project_dir]) == 0
    assert "changed=1" in capsys.readouterr().out
    with open_project(project_dir) as project:
        (entry,) = project.entries.values()
        assert entry.lemma == "كتاب"  # tatweel stripped


def test_metrics_sample_cli(tmp_path, capsys):
    project_dir = tmp_path / "p"
    run(["init", "--project", str(project_dir)])
    tsv = _write_tsv(
        tmp_path / "rows.tsv",
        ["كتاب\tnoun\tmasculine\tar\t\t\t\tsrc\t1\t"],
    )
    run(["ingest", "--project", str(project_dir), "tsv", "--method", "ocr", str(tsv)])
    with open_project(project_dir) as project:
        (entry,) = project.entries.values()
        apply_decision(
            project,
            Decision(entry.id, 1, "correct", corrections={"lemma": "كتابي"}),
        )
    capsys.readouterr()
    assert run(["metrics", "--project", str(project_dir), "sample", "--n", "1", "--seed", "7"]) == 0
    captured = capsys.readouterr().out
    assert "n=1 seed=7" in captured
    report = json.loads(captured[: captured.rindex("cer=")])
    assert report["sample_size"] == 1
    assert report["aggregate_cer"] > 0

    assert run([
        "metrics", "--project", str(project_dir), "sample", "--n", "1", "--seed", "7",
        "--format", "table",
    ]) == 0
    assert "aggregate (micro)" in capsys.readouterr().out


def test_metrics_sample_insufficient_exits_1(tmp_path, capsys):
    project_dir = str(tmp_path / "p")
    run(["init", "--project", project_dir])
    capsys.readouterr()
    assert run(["metrics", "--project", project_dir, "sample", "--n", "5", "--seed", "1"]) == 1
    assert "InsufficientEligibleEntries" in capsys.readouterr().err


def test_validate_reports_violations_and_exits_1(tmp_path, capsys):
    project_dir = str(tmp_path / "p")
    run(["init", "--project", project_dir])
    with open_project(project_dir) as project:
        project.register_source("src1")
        from conftest import make_entry
        from qamus.model import GrammaticalGender, VerificationState

        bad = make_entry(gender=GrammaticalGender.UNSPECIFIED, state=VerificationState.PASS2_VERIFIED)
        project.add_entry(bad)
    capsys.readouterr()
    assert run(["validate", "--project", project_dir]) == 1
    captured = capsys.readouterr()
    assert "invalid=1" in captured.out
    assert "UnspecifiedGender" in captured.err


def test_review_releases_lock_on_sigterm(tmp_path):
    import signal
    import subprocess
    import time

    project_dir = str(tmp_path / "p")
    run(["init", "--project", project_dir])
    proc = subprocess.Popen(
        ["python3", "-m", "qamus", "review", "--project", project_dir, "--port", "0"],
        stdout=subprocess.PIPE,
        stderr=subprocess.PIPE,
        text=True,
    )
    try:
        line = proc.stdout.readline()
        assert "url=" in line
        proc.send_signal(signal.SIGTERM)
        assert proc.wait(timeout=10) == 0
        assert not (tmp_path / "p" / ".lock").exists()
        with open_project(project_dir):
            pass  # reopens cleanly
    finally:
        if proc.poll() is None:
            proc.kill()


def test_lock_held_reported_as_error(tmp_path, capsys):
    project_dir = str(tmp_path / "p")
    run(["init", "--project", project_dir])
    capsys.readouterr()
    with open_project(project_dir):
        assert run(["validate", "--project", project_dir]) == 1
        assert "LockHeld" in capsys.readouterr().err
