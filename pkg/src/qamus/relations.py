"""Typed relation graph between entries and shared-field propagation.

Derivation edges must stay acyclic; variant links are symmetric and stored
once in canonical id order. Field propagation walks one hop per run so every
proposed fill stays attributable to a single reviewed parent.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

from .model import (
    GrammaticalGender,
    LexemeEntry,
    LexicalCategory,
    RELATION_KINDS,
    RelationEdge,
)


class RelationError(Exception):
    code = "RelationError"


class SelfLoop(RelationError):
    code = "SelfLoop"


class UnknownEndpoint(RelationError):
    code = "UnknownEndpoint"


class DuplicateEdge(RelationError):
    code = "DuplicateEdge"


class CycleWouldForm(RelationError):
    code = "CycleWouldForm"


def canonicalize(edge: RelationEdge) -> RelationEdge:
    """Symmetric kinds are stored once, smaller id first."""
    if edge.kind == "variant_of" and edge.from_id > edge.to_id:
        return replace(edge, from_id=edge.to_id, to_id=edge.from_id)
    return edge


def _derivation_adjacency(edges) -> dict[str, list[str]]:
    adj: dict[str, list[str]] = {}
    for edge in edges:
        if edge.kind == "derived_from":
            adj.setdefault(edge.from_id, []).append(edge.to_id)
    return adj


def has_path(edges, src: str, dst: str) -> bool:
    """Is dst reachable from src over derived_from edges? Iterative DFS."""
    adj = _derivation_adjacency(edges)
    stack = [src]
    seen = set()
    while stack:
        node = stack.pop()
        if node == dst:
            return True
        if node in seen:
            continue
        seen.add(node)
        stack.extend(adj.get(node, ()))
    return False


def would_remain_acyclic(edges) -> bool:
    """Full cycle check over the derived_from subgraph (three-color DFS)."""
    adj = _derivation_adjacency(edges)
    WHITE, GREY, BLACK = 0, 1, 2
    color: dict[str, int] = {}
    for start in adj:
        if color.get(start, WHITE) != WHITE:
            continue
        stack: list[tuple[str, int]] = [(start, 0)]
        color[start] = GREY
        while stack:
            node, idx = stack[-1]
            targets = adj.get(node, ())
            if idx < len(targets):
                stack[-1] = (node, idx + 1)
                nxt = targets[idx]
                c = color.get(nxt, WHITE)
                if c == GREY:
                    return False
                if c == WHITE:
                    color[nxt] = GREY
                    stack.append((nxt, 0))
            else:
                color[node] = BLACK
                stack.pop()
    return True


def add_relation(project, edge: RelationEdge) -> RelationEdge:
    """Validate and persist an edge; derivation acyclicity is re-verified
    before commit."""
    if edge.kind not in RELATION_KINDS:
        raise RelationError(f"unknown relation kind {edge.kind!r}")
    if edge.from_id == edge.to_id:
        raise SelfLoop(f"edge {edge.from_id} -> itself")
    for eid in (edge.from_id, edge.to_id):
        if eid not in project.entries:
            raise UnknownEndpoint(f"no entry with id {eid}")
    edge = canonicalize(edge)
    for existing in project.edges:
        if (existing.from_id, existing.to_id, existing.kind) == (edge.from_id, edge.to_id, edge.kind):
            raise DuplicateEdge(f"{edge.kind} edge {edge.from_id} -> {edge.to_id} already present")
    if edge.kind == "derived_from" and has_path(project.edges, edge.to_id, edge.from_id):
        raise CycleWouldForm(f"{edge.from_id} -> {edge.to_id} would close a derivation cycle")
    project.append_edge(edge)
    return edge


# ---------------------------------------------------------------------------
# Shared-field propagation


@dataclass(frozen=True)
class ProposedFill:
    entry_id: str
    field: str  # category | gender | etymology_origin
    value: str
    parent_id: str

    def to_dict(self) -> dict:
        return {
            "entry_id": self.entry_id,
            "field": self.field,
            "value": self.value,
            "parent_id": self.parent_id,
        }


def propagate_fields(
    edges,
    entries_by_id: dict[str, LexemeEntry],
) -> list[ProposedFill]:
    """Propose filling a child's missing fields from its derivation parent.

    One hop per run: values only move along direct derived_from edges, never
    transitively, and a concrete child value is never overwritten. Fills are
    proposals for the second review pass, not mutations.
    """
    fills: list[ProposedFill] = []
    derivation = sorted(
        (e for e in edges if e.kind == "derived_from"),
        key=lambda e: (e.from_id, e.to_id),
    )
    for edge in derivation:
        child = entries_by_id.get(edge.from_id)
        parent = entries_by_id.get(edge.to_id)
        if child is None or parent is None:
            continue
        if (
            child.category is LexicalCategory.UNKNOWN
            and parent.category is not LexicalCategory.UNKNOWN
        ):
            fills.append(ProposedFill(child.id, "category", parent.category.value, parent.id))
        if (
            child.gender is GrammaticalGender.UNSPECIFIED
            and parent.gender is not GrammaticalGender.UNSPECIFIED
        ):
            fills.append(ProposedFill(child.id, "gender", parent.gender.value, parent.id))
        if child.etymology.origin == "unknown" and parent.etymology.origin != "unknown":
            fills.append(
                ProposedFill(child.id, "etymology_origin", parent.etymology.origin, parent.id)
            )
    return fills


def pending_fills_for(project, entry_id: str) -> list[ProposedFill]:
    fills = propagate_fields(project.edges, project.entries)
    return [f for f in fills if f.entry_id == entry_id]
