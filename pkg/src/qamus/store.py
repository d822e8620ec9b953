"""On-disk project store.

Layout (all files UTF-8, no BOM, LF line endings):

    project.json    schema version, config, ingest content hashes
    entries.jsonl   one entry per line
    edges.jsonl     one relation edge per line
    audit.jsonl     append-only audit log, one event per line
    sources.json    source registry: id -> {title, year, capture_method_default}

One writer per project, enforced by an exclusive lock file. Entries are
immutable values: every mutation replaces the entry and appends exactly one
audit event carrying content hashes before and after, so the per-entry hash
chain can be verified end to end.
"""

from __future__ import annotations

import hashlib
import json
import os
import threading
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterator, Optional

from .model import (
    LexemeEntry,
    ProjectConfig,
    RelationEdge,
    edge_from_dict,
    edge_to_dict,
    entry_from_dict,
    entry_hash,
    entry_to_dict,
)
from .normalize import ConfusionRule, load_confusion_table

SCHEMA_VERSION = 1
LOCK_FILE = ".lock"


class ProjectError(Exception):
    code = "ProjectError"


class LockHeld(ProjectError):
    code = "LockHeld"


class SchemaMismatch(ProjectError):
    code = "SchemaMismatch"


class CorruptStore(ProjectError):
    code = "CorruptStore"

    def __init__(self, file: str, line: int, detail: str):
        self.file = file
        self.line = line
        super().__init__(f"{file}:{line}: {detail}")


class UnknownEntry(ProjectError):
    code = "UnknownEntry"


class UnknownSource(ProjectError):
    code = "UnknownSource"


@dataclass(frozen=True)
class AuditEvent:
    seq: int
    timestamp: str
    reviewer: str
    entry_id: str
    kind: str  # created | decision | normalized | flagged | merge_survivor | merge_absorbed | exported
    payload: dict
    before_hash: Optional[str]
    after_hash: Optional[str]

    def to_dict(self) -> dict:
        return {
            "seq": self.seq,
            "timestamp": self.timestamp,
            "reviewer": self.reviewer,
            "entry_id": self.entry_id,
            "kind": self.kind,
            "payload": self.payload,
            "before_hash": self.before_hash,
            "after_hash": self.after_hash,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "AuditEvent":
        return cls(
            seq=data["seq"],
            timestamp=data["timestamp"],
            reviewer=data["reviewer"],
            entry_id=data["entry_id"],
            kind=data["kind"],
            payload=data["payload"],
            before_hash=data["before_hash"],
            after_hash=data["after_hash"],
        )


def _utcnow() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def _read_jsonl(path: Path) -> Iterator[tuple[int, dict]]:
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.rstrip("\n")
            if not line:
                continue
            try:
                yield lineno, json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorruptStore(path.name, lineno, str(exc)) from None


def _atomic_write(path: Path, text: str, durable: bool = False) -> None:
    tmp = path.with_suffix(path.suffix + ".tmp")
    with open(tmp, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
        if durable:
            fh.flush()
            os.fsync(fh.fileno())
    os.replace(tmp, path)


def file_sha256(path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            digest.update(chunk)
    return digest.hexdigest()


class Project:
    """Handle over an open project directory. Use via open_project()."""

    def __init__(self, path: Path):
        self.path = Path(path)
        self.config = ProjectConfig()
        self.entries: dict[str, LexemeEntry] = {}
        self.edges: list[RelationEdge] = []
        self.sources: dict[str, dict] = {}
        self.ingested_hashes: list[str] = []
        self._next_seq = 1
        self._lock_fd: Optional[int] = None
        self._mutex = threading.RLock()
        self._confusion_cache: Optional[list[ConfusionRule]] = None

    # -- lifecycle ----------------------------------------------------------

    def close(self) -> None:
        if self._lock_fd is not None:
            os.close(self._lock_fd)
            try:
                os.unlink(self.path / LOCK_FILE)
            except FileNotFoundError:
                pass
            self._lock_fd = None

    def __enter__(self) -> "Project":
        return self

    def __exit__(self, *exc) -> None:
        self.close()

    # -- paths --------------------------------------------------------------

    @property
    def project_file(self) -> Path:
        return self.path / "project.json"

    @property
    def entries_file(self) -> Path:
        return self.path / "entries.jsonl"

    @property
    def edges_file(self) -> Path:
        return self.path / "edges.jsonl"

    @property
    def audit_file(self) -> Path:
        return self.path / "audit.jsonl"

    @property
    def sources_file(self) -> Path:
        return self.path / "sources.json"

    def resolve(self, relative: str) -> Path:
        return self.path / relative

    def confusion_rules(self) -> list[ConfusionRule]:
        if self._confusion_cache is None:
            table_path = self.resolve(self.config.confusion_table)
            self._confusion_cache = load_confusion_table(table_path) if table_path.exists() else []
        return self._confusion_cache

    def label_map(self) -> dict:
        path = self.resolve(self.config.label_map)
        if not path.exists():
            return {}
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)

    # -- persistence --------------------------------------------------------

    def _save_project_file(self) -> None:
        payload = {
            "schema_version": SCHEMA_VERSION,
            "config": self.config.to_dict(),
            "ingested_hashes": self.ingested_hashes,
        }
        _atomic_write(self.project_file, json.dumps(payload, ensure_ascii=False, indent=2) + "\n")

    def _save_entries(self) -> None:
        lines = [
            json.dumps(entry_to_dict(self.entries[eid]), ensure_ascii=False, sort_keys=True)
            for eid in sorted(self.entries)
        ]
        _atomic_write(self.entries_file, "".join(line + "\n" for line in lines))

    def _save_edges(self) -> None:
        lines = [
            json.dumps(edge_to_dict(edge), ensure_ascii=False, sort_keys=True)
            for edge in self.edges
        ]
        _atomic_write(self.edges_file, "".join(line + "\n" for line in lines))

    def _save_sources(self) -> None:
        _atomic_write(
            self.sources_file,
            json.dumps(self.sources, ensure_ascii=False, indent=2, sort_keys=True) + "\n",
        )

    def _append_audit(self, event: AuditEvent) -> None:
        with open(self.audit_file, "a", encoding="utf-8", newline="\n") as fh:
            fh.write(json.dumps(event.to_dict(), ensure_ascii=False, sort_keys=True) + "\n")

    def audit_events(self) -> list[AuditEvent]:
        if not self.audit_file.exists():
            return []
        return [AuditEvent.from_dict(data) for _, data in _read_jsonl(self.audit_file)]

    def save_config(self) -> None:
        self.config.validate()
        self._confusion_cache = None
        self._save_project_file()

    # -- source registry ----------------------------------------------------

    def register_source(
        self,
        source_id: str,
        title: Optional[str] = None,
        year: Optional[int] = None,
        capture_method_default: str = "manual",
    ) -> None:
        if not source_id:
            raise UnknownSource("source_id must be non-empty")
        if source_id not in self.sources:
            self.sources[source_id] = {
                "title": title or source_id,
                "year": year,
                "capture_method_default": capture_method_default,
            }
            self._save_sources()

    # -- entry mutations (each appends exactly one audit event) --------------

    def _emit(
        self,
        kind: str,
        entry_id: str,
        reviewer: str,
        payload: dict,
        before: Optional[str],
        after: Optional[str],
    ) -> AuditEvent:
        event = AuditEvent(
            seq=self._next_seq,
            timestamp=_utcnow(),
            reviewer=reviewer,
            entry_id=entry_id,
            kind=kind,
            payload=payload,
            before_hash=before,
            after_hash=after,
        )
        self._next_seq += 1
        self._append_audit(event)
        return event

    def add_entry(self, entry: LexemeEntry, reviewer: str = "system") -> AuditEvent:
        with self._mutex:
            if entry.id in self.entries:
                raise ProjectError(f"duplicate entry id {entry.id}")
            for prov in entry.provenance:
                if prov.source_id not in self.sources:
                    raise UnknownSource(f"source {prov.source_id!r} not registered")
            self.entries[entry.id] = entry
            self._save_entries()
            return self._emit("created", entry.id, reviewer, {}, None, entry_hash(entry))

    def replace_entry(
        self,
        entry: LexemeEntry,
        kind: str,
        reviewer: str = "system",
        payload: Optional[dict] = None,
    ) -> AuditEvent:
        with self._mutex:
            old = self.entries.get(entry.id)
            if old is None:
                raise UnknownEntry(f"no entry with id {entry.id}")
            self.entries[entry.id] = entry
            self._save_entries()
            return self._emit(
                kind, entry.id, reviewer, payload or {}, entry_hash(old), entry_hash(entry)
            )

    def remove_entry(
        self,
        entry_id: str,
        kind: str,
        reviewer: str = "system",
        payload: Optional[dict] = None,
    ) -> AuditEvent:
        with self._mutex:
            old = self.entries.get(entry_id)
            if old is None:
                raise UnknownEntry(f"no entry with id {entry_id}")
            del self.entries[entry_id]
            self._save_entries()
            return self._emit(kind, entry_id, reviewer, payload or {}, entry_hash(old), None)

    # -- edges (validated in relations.py; this persists) --------------------

    def append_edge(self, edge: RelationEdge) -> None:
        with self._mutex:
            self.edges.append(edge)
            with open(self.edges_file, "a", encoding="utf-8", newline="\n") as fh:
                fh.write(json.dumps(edge_to_dict(edge), ensure_ascii=False, sort_keys=True) + "\n")

    def rewrite_edges(self, edges: list[RelationEdge]) -> None:
        with self._mutex:
            self.edges = list(edges)
            self._save_edges()

    # -- ingest bookkeeping ---------------------------------------------------

    def has_ingested(self, content_hash: str) -> bool:
        return content_hash in self.ingested_hashes

    def record_ingest(self, content_hash: str) -> None:
        if content_hash not in self.ingested_hashes:
            self.ingested_hashes.append(content_hash)
            self._save_project_file()


def _lock_owner_alive(lock_path: Path) -> bool:
    try:
        pid = int(lock_path.read_text().strip())
    except (OSError, ValueError):
        return True  # unreadable or mid-write: treat as held
    try:
        os.kill(pid, 0)
    except ProcessLookupError:
        return False
    except PermissionError:
        return True
    return True


def _acquire_lock(path: Path) -> int:
    lock_path = path / LOCK_FILE
    for attempt in range(2):
        try:
            fd = os.open(lock_path, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
        except FileExistsError:
            # a lock whose owner died (crash, SIGKILL) is stale, not held
            if attempt == 0 and not _lock_owner_alive(lock_path):
                try:
                    os.unlink(lock_path)
                except FileNotFoundError:
                    pass
                continue
            raise LockHeld(f"project lock already held: {lock_path}") from None
        os.write(fd, f"{os.getpid()}\n".encode())
        return fd
    raise LockHeld(f"project lock already held: {lock_path}")


def open_project(path, create: bool = True) -> Project:
    """Open (or initialize) a project directory and take its writer lock.

    A directory counts as an existing project when project.json is present;
    anything else is initialized fresh (when ``create`` is true).
    """
    root = Path(path)
    root.mkdir(parents=True, exist_ok=True)
    project = Project(root)
    project._lock_fd = _acquire_lock(root)
    try:
        if project.project_file.exists():
            _load_existing(project)
        elif create:
            _init_new(project)
        else:
            raise ProjectError(f"{root} is not a project (no project.json)")
    except BaseException:
        project.close()
        raise
    return project


def _init_new(project: Project) -> None:
    from .normalize import default_table_json

    project._save_project_file()
    project._save_entries()
    project._save_edges()
    project._save_sources()
    project.audit_file.touch()
    table_path = project.resolve(project.config.confusion_table)
    if not table_path.exists():
        _atomic_write(table_path, default_table_json())
    label_path = project.resolve(project.config.label_map)
    if not label_path.exists():
        _atomic_write(label_path, "{}\n")


def _load_existing(project: Project) -> None:
    with open(project.project_file, encoding="utf-8") as fh:
        try:
            meta = json.load(fh)
        except json.JSONDecodeError as exc:
            raise CorruptStore("project.json", exc.lineno, exc.msg) from None
    version = meta.get("schema_version")
    if version != SCHEMA_VERSION:
        raise SchemaMismatch(f"store schema version {version!r}, supported: {SCHEMA_VERSION}")
    project.config = ProjectConfig.from_dict(meta.get("config", {}))
    project.ingested_hashes = list(meta.get("ingested_hashes", []))

    for name in (project.config.confusion_table, project.config.label_map):
        if not project.resolve(name).exists():
            raise ProjectError(f"config references missing file: {name}")

    if project.sources_file.exists():
        with open(project.sources_file, encoding="utf-8") as fh:
            try:
                project.sources = json.load(fh)
            except json.JSONDecodeError as exc:
                raise CorruptStore("sources.json", exc.lineno, exc.msg) from None

    if project.entries_file.exists():
        for lineno, data in _read_jsonl(project.entries_file):
            try:
                entry = entry_from_dict(data)
            except (KeyError, ValueError, TypeError) as exc:
                raise CorruptStore("entries.jsonl", lineno, f"bad entry record: {exc}") from None
            project.entries[entry.id] = entry

    if project.edges_file.exists():
        for lineno, data in _read_jsonl(project.edges_file):
            try:
                project.edges.append(edge_from_dict(data))
            except (KeyError, ValueError, TypeError) as exc:
                raise CorruptStore("edges.jsonl", lineno, f"bad edge record: {exc}") from None

    if project.audit_file.exists():
        last_seq = 0
        for lineno, data in _read_jsonl(project.audit_file):
            try:
                last_seq = int(data["seq"])
            except (KeyError, ValueError, TypeError) as exc:
                raise CorruptStore("audit.jsonl", lineno, f"bad audit record: {exc}") from None
        project._next_seq = last_seq + 1
