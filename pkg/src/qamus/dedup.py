"""Duplicate detection and merge proposals.

The same word shows up across sources, sometimes in different spellings, so
clustering runs in two passes: an exact pass over normalized lemmas and a
fuzzy pass that single-links pairs within a normalized-distance threshold.
Merges are only ever proposals; anything with a field conflict goes to a
human, never auto-applied.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

from .metrics import edit_distance
from .model import (
    EtymologyRecord,
    GrammaticalGender,
    LexemeEntry,
    LexicalCategory,
    STATE_RANK,
    VerificationState,
)
from .normalize import NormalizationProfile, normalize


@dataclass(frozen=True)
class DuplicateCluster:
    member_ids: tuple[str, ...]  # sorted, >= 2 members
    kind: str  # "exact" | "fuzzy"
    pairwise_scores: tuple[tuple[str, str, float], ...]


@dataclass(frozen=True)
class MergeProposal:
    surviving_id: str
    absorbed_ids: tuple[str, ...]
    merged_entry: LexemeEntry
    conflicts: tuple[tuple[str, str, str], ...]  # (field, value_a, value_b)


def normalized_distance(a: str, b: str) -> float:
    if a == b:
        return 0.0
    longest = max(len(a), len(b))
    if longest == 0:
        return 0.0
    return edit_distance(a, b) / longest


def _categories_compatible(a: LexemeEntry, b: LexemeEntry) -> bool:
    return (
        a.category is b.category
        or a.category is LexicalCategory.UNKNOWN
        or b.category is LexicalCategory.UNKNOWN
    )


class _UnionFind:
    def __init__(self, items):
        self.parent = {item: item for item in items}

    def find(self, x):
        while self.parent[x] != x:
            self.parent[x] = self.parent[self.parent[x]]
            x = self.parent[x]
        return x

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[max(ra, rb)] = min(ra, rb)


def find_duplicates(
    entries: list[LexemeEntry],
    profile: NormalizationProfile,
    tau: float,
) -> list[DuplicateCluster]:
    """Cluster probable duplicates; deterministic, ordered by smallest id.

    Exact clusters group identical normalized lemmas. Fuzzy clusters
    single-link pairs with edit_distance/max(len) <= tau and compatible
    categories (equal, or either unknown). Distance-zero pairs belong to the
    exact pass and do not link fuzzy clusters on their own.
    """
    if not (0.0 <= tau <= 1.0):
        raise ValueError(f"tau must be in [0,1], got {tau}")
    ordered = sorted(entries, key=lambda e: e.id)
    norm = {e.id: normalize(e.lemma, profile) for e in ordered}

    clusters: list[DuplicateCluster] = []

    groups: dict[str, list[str]] = {}
    for e in ordered:
        groups.setdefault(norm[e.id], []).append(e.id)
    for members in groups.values():
        if len(members) >= 2:
            pairs = tuple(
                (members[i], members[j], 0.0)
                for i in range(len(members))
                for j in range(i + 1, len(members))
            )
            clusters.append(DuplicateCluster(tuple(members), "exact", pairs))

    by_id = {e.id: e for e in ordered}
    uf = _UnionFind([e.id for e in ordered])
    linked: set[str] = set()
    distances: dict[tuple[str, str], float] = {}
    for i in range(len(ordered)):
        for j in range(i + 1, len(ordered)):
            a, b = ordered[i], ordered[j]
            if not _categories_compatible(a, b):
                continue
            d = normalized_distance(norm[a.id], norm[b.id])
            distances[(a.id, b.id)] = d
            if 0.0 < d <= tau:
                uf.union(a.id, b.id)
                linked.update((a.id, b.id))

    components: dict[str, list[str]] = {}
    for eid in sorted(linked):
        components.setdefault(uf.find(eid), []).append(eid)
    for members in components.values():
        if len(members) < 2:
            continue
        pairs = []
        for i in range(len(members)):
            for j in range(i + 1, len(members)):
                key = (members[i], members[j])
                d = distances.get(key)
                if d is None:
                    d = normalized_distance(norm[key[0]], norm[key[1]])
                pairs.append((key[0], key[1], d))
        clusters.append(DuplicateCluster(tuple(members), "fuzzy", tuple(pairs)))

    clusters.sort(key=lambda c: (c.member_ids[0], c.kind))
    return clusters


def _fold(
    field_name: str,
    current,
    incoming,
    missing,
    conflicts: list[tuple[str, str, str]],
):
    """Field-wise merge rule: missing yields to concrete, contradictions conflict."""
    if incoming == missing or incoming == current:
        return current
    if current == missing:
        return incoming
    conflicts.append((field_name, _token(current), _token(incoming)))
    return current


def _token(value) -> str:
    return value.value if hasattr(value, "value") else str(value)


def propose_merge(
    cluster: DuplicateCluster, entries_by_id: dict[str, LexemeEntry]
) -> MergeProposal:
    """Build the merged entry for a cluster; smallest id survives.

    Provenance and glosses are unioned (order-preserving, deduplicated);
    distinct lemma spellings of absorbed members become variants; the merged
    state is the least verified member state, since merged-in content has
    only been reviewed as far as its weakest member.
    """
    members = [entries_by_id[eid] for eid in sorted(cluster.member_ids)]
    for member in members:
        if member.state is VerificationState.REJECTED:
            raise ValueError(f"cannot merge rejected entry {member.id}")
    survivor = members[0]
    rest = members[1:]
    conflicts: list[tuple[str, str, str]] = []

    category = survivor.category
    gender = survivor.gender
    origin = survivor.etymology.origin
    note = survivor.etymology.note
    for member in rest:
        category = _fold("category", category, member.category, LexicalCategory.UNKNOWN, conflicts)
        gender = _fold("gender", gender, member.gender, GrammaticalGender.UNSPECIFIED, conflicts)
        origin = _fold("etymology_origin", origin, member.etymology.origin, "unknown", conflicts)
        if not note and member.etymology.note:
            note = member.etymology.note

    variants: list[str] = list(survivor.variants)
    for member in rest:
        for candidate in (member.lemma, *member.variants):
            if candidate != survivor.lemma and candidate not in variants:
                variants.append(candidate)

    glosses: list[tuple[str, str]] = []
    provenance = []
    for member in members:
        for gloss in member.glosses:
            if gloss not in glosses:
                glosses.append(gloss)
        for prov in member.provenance:
            if prov not in provenance:
                provenance.append(prov)

    state = min((m.state for m in members), key=lambda s: STATE_RANK[s])

    merged = replace(
        survivor,
        category=category,
        gender=gender,
        etymology=EtymologyRecord(origin=origin, note=note),
        variants=tuple(variants),
        glosses=tuple(glosses),
        provenance=tuple(provenance),
        state=state,
    )
    return MergeProposal(
        surviving_id=survivor.id,
        absorbed_ids=tuple(m.id for m in rest),
        merged_entry=merged,
        conflicts=tuple(conflicts),
    )


class MergeConflict(Exception):
    pass


def apply_merge(project, proposal: MergeProposal, reviewer: str = "system") -> None:
    """Commit a conflict-free merge: replace survivor, drop absorbed, rewire edges.

    Refuses proposals with conflicts and merges whose edge rewiring would
    close a derivation cycle; the derivation subgraph must stay acyclic
    after every committed operation.
    """
    from .relations import would_remain_acyclic

    if proposal.conflicts:
        raise MergeConflict(f"proposal for {proposal.surviving_id} has unresolved conflicts")
    absorbed = set(proposal.absorbed_ids)

    rewired = []
    seen = set()
    for edge in project.edges:
        new_from = proposal.surviving_id if edge.from_id in absorbed else edge.from_id
        new_to = proposal.surviving_id if edge.to_id in absorbed else edge.to_id
        if new_from == new_to:
            continue  # collapsed self-relation disappears
        if edge.kind == "variant_of" and new_from > new_to:
            new_from, new_to = new_to, new_from
        key = (new_from, new_to, edge.kind)
        if key in seen:
            continue
        seen.add(key)
        rewired.append(replace(edge, from_id=new_from, to_id=new_to))

    if not would_remain_acyclic(rewired):
        from .relations import CycleWouldForm

        raise CycleWouldForm(
            f"merging into {proposal.surviving_id} would close a derivation cycle"
        )

    payload = {"absorbed_ids": list(proposal.absorbed_ids)}
    project.replace_entry(proposal.merged_entry, kind="merge_survivor", reviewer=reviewer, payload=payload)
    for eid in proposal.absorbed_ids:
        project.remove_entry(
            eid, kind="merge_absorbed", reviewer=reviewer, payload={"survivor": proposal.surviving_id}
        )
    project.rewrite_edges(rewired)
