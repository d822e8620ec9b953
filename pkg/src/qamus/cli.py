"""Command-line surface, one subcommand per pipeline stage.

Exit codes: 0 success, 1 validation/data error, 2 usage error. Diagnostics
go to stderr; data goes to stdout or files; every subcommand ends with a
one-line machine-parsable key=value summary on stdout.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from .api import AddressInUse, DEFAULT_PORT, ReviewApiServer
from .dedup import apply_merge, find_duplicates, propose_merge
from .export import (
    ExportError,
    emit_tabular,
    export_lexemes,
    export_quickstatements,
    load_mapping,
)
from .ingest import (
    OcrParseError,
    SegmentationRules,
    TabularHeaderError,
    parse_ocr_pages,
    parse_tabular,
    segment_ocr_page,
)
from .metrics import InsufficientEligibleEntries, report_table, sample_report
from .model import ProjectConfig, RelationEdge, VerificationState, validate_entry
from .normalize import ConfusionTableError, detect_suspects, get_profile, normalize
from .relations import DuplicateEdge, RelationError, add_relation, propagate_fields
from .store import ProjectError, file_sha256, open_project

PROJECT_ENV = "LRELF_PROJECT"


def _common_options(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--project",
        default=argparse.SUPPRESS,
        help=f"project directory (default: $%s or .)" % PROJECT_ENV,
    )
    parser.add_argument("--config", default=argparse.SUPPRESS, help="JSON file of config overrides")
    parser.add_argument("--seed", type=int, default=argparse.SUPPRESS, help="RNG seed override")
    parser.add_argument("--tau", type=float, default=argparse.SUPPRESS, help="dedup threshold override")
    parser.add_argument("--n", type=int, default=argparse.SUPPRESS, help="sample size override")
    parser.add_argument("--port", type=int, default=argparse.SUPPRESS, help="review API port")
    parser.add_argument("--reviewer", default=argparse.SUPPRESS, help="reviewer name recorded in the audit log")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qamus",
        description="Dictionary digitization pipeline: ingest, normalize, flag, dedupe, link, review, measure, export.",
    )
    _common_options(parser)
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")

    p = sub.add_parser("init", help="create a new project (or open an existing one)")
    _common_options(p)

    p = sub.add_parser("ingest", help="ingest a TSV transcription or an OCR page dump")
    _common_options(p)
    ingest_sub = p.add_subparsers(dest="ingest_kind", metavar="KIND", required=True)
    p_tsv = ingest_sub.add_parser("tsv", help="canonical TSV with header")
    _common_options(p_tsv)
    p_tsv.add_argument("file", help="TSV file to ingest")
    p_tsv.add_argument("--source", help="source id to register (default capture method attached)")
    p_tsv.add_argument("--method", choices=("ocr", "manual"), default="manual", help="capture method for rows")
    p_ocr = ingest_sub.add_parser("ocr", help="OCR text with '### PAGE <n> SOURCE <id>' markers")
    _common_options(p_ocr)
    p_ocr.add_argument("file", help="OCR page dump to ingest")
    p_ocr.add_argument(
        "--separator",
        action="append",
        default=None,
        help="headword separator (repeatable; default ':' en/em dash, tab)",
    )

    p = sub.add_parser("normalize", help="apply the configured normalization profile to stored lemmas")
    _common_options(p)

    p = sub.add_parser("flags", help="detect suspect graphemes over the store and set entry flags")
    _common_options(p)

    p = sub.add_parser("dedupe", help="report duplicate clusters")
    _common_options(p)
    p.add_argument("--out", help="write the cluster report JSON here instead of stdout")

    p = sub.add_parser("merge", help="apply conflict-free merge proposals from the current clusters")
    _common_options(p)
    p.add_argument("--dry-run", action="store_true", help="print proposals without applying")

    p = sub.add_parser("link", help="add a typed relation edge between two entries")
    _common_options(p)
    p.add_argument("--from", dest="from_id", required=True, help="child / source entry id")
    p.add_argument("--to", dest="to_id", required=True, help="parent / target entry id")
    p.add_argument("--kind", required=True, choices=("derived_from", "variant_of", "semantic_related"))
    p.add_argument("--note", default="", help="free-text note on the edge")

    p = sub.add_parser("propagate", help="propose filling missing fields from derivation parents")
    _common_options(p)
    p.add_argument("--out", help="write the proposal JSON here instead of stdout")

    p = sub.add_parser("review", help="serve the review API (and UI) until interrupted")
    _common_options(p)
    p.add_argument("--host", default="127.0.0.1", help="bind address (loopback by default)")
    p.add_argument("--ui-dir", help="static UI directory (default: auto-detect frontend/dist)")

    p = sub.add_parser("metrics", help="quality measurements")
    _common_options(p)
    metrics_sub = p.add_subparsers(dest="metrics_kind", metavar="KIND", required=True)
    p_sample = metrics_sub.add_parser("sample", help="sampled character error rate and bias share")
    _common_options(p_sample)
    p_sample.add_argument("--format", choices=("json", "table"), default="json")
    p_sample.add_argument("--out", help="write the report here instead of stdout")

    p = sub.add_parser("export", help="write export files for verified entries")
    _common_options(p)
    export_sub = p.add_subparsers(dest="export_kind", metavar="KIND", required=True)
    p_lex = export_sub.add_parser("lexemes", help="Wikibase-lexeme-shaped JSON files")
    _common_options(p_lex)
    p_lex.add_argument("--mapping", required=True, help="item/property mapping JSON file")
    p_lex.add_argument("--out", required=True, help="output directory")
    p_qs = export_sub.add_parser("qs", help="QuickStatements-like command file")
    _common_options(p_qs)
    p_qs.add_argument("--mapping", required=True, help="item/property mapping JSON file")
    p_qs.add_argument("--out", required=True, help="output file")
    p_tsv2 = export_sub.add_parser("tsv", help="canonical tabular re-export of all entries")
    _common_options(p_tsv2)
    p_tsv2.add_argument("--out", help="output file (default stdout)")

    p = sub.add_parser("validate", help="run every entry through validation and report violations")
    _common_options(p)

    return parser


def _project_path(args) -> Path:
    explicit = getattr(args, "project", None)
    return Path(explicit or os.environ.get(PROJECT_ENV) or ".")


def _load_config_overrides(project, args) -> None:
    config_path = getattr(args, "config", None)
    if config_path:
        with open(config_path, encoding="utf-8") as fh:
            overrides = json.load(fh)
        merged = {**project.config.to_dict(), **overrides}
        project.config = ProjectConfig.from_dict(merged)
        project._confusion_cache = None


def _summary(**kv) -> None:
    print(" ".join(f"{key}={value}" for key, value in kv.items()))


def _emit_report(text: str, out_path) -> None:
    if out_path:
        Path(out_path).write_text(text, encoding="utf-8")
    else:
        print(text, end="" if text.endswith("\n") else "\n")


def run(argv) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if not args.command:
        parser.print_help(sys.stderr)
        return 2
    try:
        return _dispatch(args)
    except (
        ProjectError,
        TabularHeaderError,
        OcrParseError,
        ConfusionTableError,
        RelationError,
        ExportError,
        InsufficientEligibleEntries,
        AddressInUse,
        OSError,
        json.JSONDecodeError,
        ValueError,
    ) as exc:
        code = getattr(exc, "code", exc.__class__.__name__)
        print(f"error: {code}: {exc}", file=sys.stderr)
        return 1


def _dispatch(args) -> int:
    path = _project_path(args)
    reviewer = getattr(args, "reviewer", None) or "anonymous"

    with open_project(path) as project:
        _load_config_overrides(project, args)

        if args.command == "init":
            _summary(project=path, entries=len(project.entries))
            return 0

        if args.command == "ingest":
            return _cmd_ingest(project, args, reviewer)
        if args.command == "normalize":
            return _cmd_normalize(project, args, reviewer)
        if args.command == "flags":
            return _cmd_flags(project, args, reviewer)
        if args.command == "dedupe":
            return _cmd_dedupe(project, args)
        if args.command == "merge":
            return _cmd_merge(project, args, reviewer)
        if args.command == "link":
            return _cmd_link(project, args)
        if args.command == "propagate":
            return _cmd_propagate(project, args)
        if args.command == "review":
            return _cmd_review(project, args, reviewer)
        if args.command == "metrics":
            return _cmd_metrics(project, args)
        if args.command == "export":
            return _cmd_export(project, args, reviewer)
        if args.command == "validate":
            return _cmd_validate(project)

    raise AssertionError(f"unhandled command {args.command}")


def _cmd_ingest(project, args, reviewer: str) -> int:
    source_path = Path(args.file)
    content_hash = file_sha256(source_path)
    if project.has_ingested(content_hash):
        print(f"warning: {source_path} already ingested (content hash match); skipping", file=sys.stderr)
        if args.ingest_kind == "tsv":
            _summary(imported=0, errors=0, warnings=0, skipped=1)
        else:
            _summary(pages=0, imported=0, skipped=1)
        return 0
    text = source_path.read_text(encoding="utf-8")

    if args.ingest_kind == "tsv":
        if args.source:
            project.register_source(args.source, capture_method_default=args.method)
        result = parse_tabular(text, args.method, project.config, project.label_map())
        for issue in result.errors + result.warnings:
            print(f"{source_path}:{issue.line}: {issue.severity}: {issue.code}: {issue.message}", file=sys.stderr)
        for entry in result.entries:
            for prov in entry.provenance:
                project.register_source(prov.source_id, capture_method_default=args.method)
            project.add_entry(entry, reviewer=reviewer)
        project.record_ingest(content_hash)
        _summary(imported=len(result.entries), errors=len(result.errors), warnings=len(result.warnings), skipped=0)
        return 0

    rules = SegmentationRules(tuple(args.separator)) if args.separator else SegmentationRules()
    pages = parse_ocr_pages(text)
    imported = 0
    for page in pages:
        project.register_source(page.source_id, capture_method_default="ocr")
        for entry in segment_ocr_page(page, rules, project.config):
            project.add_entry(entry, reviewer=reviewer)
            imported += 1
    project.record_ingest(content_hash)
    _summary(pages=len(pages), imported=imported, skipped=0)
    return 0


def _cmd_normalize(project, args, reviewer: str) -> int:
    from dataclasses import replace

    profile = get_profile(project.config.normalization_profile)
    changed = 0
    for entry_id in sorted(project.entries):
        entry = project.entries[entry_id]
        new_lemma = normalize(entry.lemma, profile)
        new_variants = tuple(normalize(v, profile) for v in entry.variants)
        if new_lemma == entry.lemma and new_variants == entry.variants:
            continue
        flags = entry.flags
        if new_lemma != entry.lemma:
            flags = tuple(s for s in flags if s.target_field != "lemma")  # offsets now stale
        project.replace_entry(
            replace(entry, lemma=new_lemma, variants=new_variants, flags=flags),
            kind="normalized",
            reviewer=reviewer,
            payload={"profile": profile.name},
        )
        changed += 1
    _summary(changed=changed)
    return 0


def _cmd_flags(project, args, reviewer: str) -> int:
    from dataclasses import replace

    table = project.confusion_rules()
    flagged_entries = 0
    total_spans = 0
    for entry_id in sorted(project.entries):
        entry = project.entries[entry_id]
        if entry.state is not VerificationState.IMPORTED:
            continue
        spans = tuple(detect_suspects(entry.lemma, table, target_field="lemma"))
        if entry.provenance:
            spans += tuple(detect_suspects(entry.provenance[0].raw_text, table, target_field="raw_text"))
        if spans:
            flagged_entries += 1
            total_spans += len(spans)
        if spans != entry.flags:
            project.replace_entry(
                replace(entry, flags=spans),
                kind="flagged",
                reviewer=reviewer,
                payload={"spans": len(spans)},
            )
    _summary(entries_flagged=flagged_entries, spans=total_spans)
    return 0


def _active_entries(project) -> list:
    return [e for e in project.entries.values() if e.state is not VerificationState.REJECTED]


def _cmd_dedupe(project, args) -> int:
    profile = get_profile(project.config.normalization_profile)
    tau = getattr(args, "tau", None)
    tau = project.config.dedup_tau if tau is None else tau
    clusters = find_duplicates(_active_entries(project), profile, tau)
    report = {
        "tau": tau,
        "profile": profile.name,
        "clusters": [
            {"kind": c.kind, "members": list(c.member_ids), "pairwise": [list(p) for p in c.pairwise_scores]}
            for c in clusters
        ],
    }
    _emit_report(json.dumps(report, ensure_ascii=False, indent=2) + "\n", args.out)
    exact = sum(1 for c in clusters if c.kind == "exact")
    _summary(clusters=len(clusters), exact=exact, fuzzy=len(clusters) - exact)
    return 0


def _cmd_merge(project, args, reviewer: str) -> int:
    profile = get_profile(project.config.normalization_profile)
    tau = getattr(args, "tau", None)
    tau = project.config.dedup_tau if tau is None else tau
    clusters = find_duplicates(_active_entries(project), profile, tau)
    applied = conflicts = skipped = 0
    for cluster in clusters:
        if not all(mid in project.entries for mid in cluster.member_ids):
            skipped += 1  # members absorbed by an earlier merge this run
            continue
        proposal = propose_merge(cluster, project.entries)
        if proposal.conflicts:
            conflicts += 1
            for fieldname, a, b in proposal.conflicts:
                print(
                    f"conflict: {proposal.surviving_id}: {fieldname}: {a!r} vs {b!r}",
                    file=sys.stderr,
                )
            continue
        if args.dry_run:
            print(json.dumps(
                {"survivor": proposal.surviving_id, "absorbed": list(proposal.absorbed_ids)},
                ensure_ascii=False,
            ))
            continue
        apply_merge(project, proposal, reviewer=reviewer)
        applied += 1
    _summary(applied=0 if args.dry_run else applied, conflicts=conflicts, skipped=skipped)
    return 0


def _cmd_link(project, args) -> int:
    edge = RelationEdge(from_id=args.from_id, to_id=args.to_id, kind=args.kind, note=args.note)
    try:
        add_relation(project, edge)
    except DuplicateEdge as exc:
        print(f"warning: {exc}", file=sys.stderr)
        _summary(added=0, duplicate=1)
        return 0
    _summary(added=1, kind=args.kind)
    return 0


def _cmd_propagate(project, args) -> int:
    fills = propagate_fields(project.edges, project.entries)
    _emit_report(json.dumps([f.to_dict() for f in fills], ensure_ascii=False, indent=2) + "\n", args.out)
    _summary(proposals=len(fills))
    return 0


def _find_ui_dir() -> "Path | None":
    here = Path(__file__).resolve()
    for base in (Path.cwd(), *here.parents):
        candidate = base / "frontend" / "dist"
        if (candidate / "index.html").is_file():
            return candidate
    return None


def _cmd_review(project, args, reviewer: str) -> int:
    import signal

    port = getattr(args, "port", None) or DEFAULT_PORT
    ui_dir = Path(args.ui_dir) if args.ui_dir else _find_ui_dir()
    server = ReviewApiServer(project, host=args.host, port=port, reviewer=reviewer, ui_dir=ui_dir)

    def _sigterm(signum, frame):
        # treat like Ctrl+C so the project lock is released on the way out
        raise KeyboardInterrupt

    signal.signal(signal.SIGTERM, _sigterm)
    _summary(url=server.url, ui="yes" if ui_dir else "no")
    sys.stdout.flush()
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.httpd.server_close()
    return 0


def _cmd_metrics(project, args) -> int:
    n = getattr(args, "n", None)
    if n is None:
        n = project.config.sample_size
    seed = getattr(args, "seed", None)
    if seed is None:
        seed = project.config.seed
    report = sample_report(project, n, seed)
    if args.format == "table":
        _emit_report(report_table(report) + "\n", args.out)
    else:
        _emit_report(json.dumps(report.to_dict(), ensure_ascii=False, indent=2) + "\n", args.out)
    share = report.aggregate_msa_bias_share
    _summary(
        cer=f"{report.aggregate_cer:.4f}",
        msa_bias_share="undefined" if share is None else f"{share:.4f}",
        n=n,
        seed=seed,
    )
    return 0


def _cmd_export(project, args, reviewer: str) -> int:
    if args.export_kind == "tsv":
        text = emit_tabular(list(project.entries.values()))
        _emit_report(text, args.out)
        _summary(rows=len(project.entries), out=args.out or "-")
        return 0
    mapping = load_mapping(args.mapping)
    if args.export_kind == "lexemes":
        manifest = export_lexemes(project, mapping, args.out, reviewer=reviewer)
        _summary(exported=manifest["lexemes"], relations=manifest["relations"], out=args.out)
        return 0
    lines = export_quickstatements(project, mapping, args.out, reviewer=reviewer)
    _summary(lines=lines, out=args.out)
    return 0


def _cmd_validate(project) -> int:
    invalid = 0
    total = 0
    for entry_id in sorted(project.entries):
        entry = project.entries[entry_id]
        violations = validate_entry(entry, project.config, registry=project.sources)
        if violations:
            invalid += 1
            total += len(violations)
            for v in violations:
                print(f"entry={entry_id} code={v.code} field={v.field} {v.message}", file=sys.stderr)
    _summary(entries=len(project.entries), invalid=invalid, violations=total)
    return 1 if total else 0


def entrypoint() -> None:
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    entrypoint()
