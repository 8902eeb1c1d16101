"""Reply trees as bipolar argumentation frameworks.

A reply tree is the BAF <A, R_sup, R_att>: every non-root argument replies to
exactly one parent, either supporting or attacking it. Levels and in-degrees
are always derived from the parent links, never read from input.
"""

from __future__ import annotations

import logging
from collections import deque
from collections.abc import Iterable, Iterator
from dataclasses import dataclass, field
from enum import Enum
from typing import Any

from argwin.errors import (
    CycleDetectedError,
    DuplicateIdError,
    MissingPolarityError,
    MissingRootError,
    MultipleRootsError,
    NoEdgesError,
    OrphanParentError,
    PolarityOnRootError,
    TreeValidationError,
)

logger = logging.getLogger(__name__)


class Polarity(str, Enum):
    """Sign of a reply edge."""

    SUPPORT = "support"
    ATTACK = "attack"

    @property
    def sign(self) -> int:
        """Entry of the sign matrix J for an edge of this polarity."""
        return 1 if self is Polarity.SUPPORT else -1

    @classmethod
    def parse(cls, value: str | Polarity | None) -> Polarity | None:
        """Parse a polarity from its document form; None stays None."""
        if value is None or isinstance(value, Polarity):
            return value
        try:
            return cls(str(value).strip().lower())
        except ValueError as exc:
            raise TreeValidationError(f"Unknown polarity '{value}'") from exc


@dataclass(frozen=True)
class NodeRecord:
    """One node as it appears in an input document."""

    id: str
    parent: str | None = None
    polarity: Polarity | None = None
    text: str | None = None
    deleted: bool = False


@dataclass(frozen=True)
class ArgumentNode:
    """A validated node with its derived level and in-degree."""

    id: str
    parent: str | None
    polarity: Polarity | None
    in_degree: int
    level: int
    text: str | None = None

    @property
    def is_root(self) -> bool:
        return self.parent is None

    @property
    def is_leaf(self) -> bool:
        return self.in_degree == 0


@dataclass(frozen=True)
class LevelIndex:
    """Level h of a tree together with its alignment key d = N - h."""

    h: int
    d: int


@dataclass(frozen=True)
class ReplyTree:
    """Immutable, validated reply tree.

    ``depth`` is the deepest populated level N. ``horizon`` is set on
    generated homogeneous trees and marks the level at which nodes are
    forced leaves; when present it anchors level alignment instead of N.
    """

    nodes: dict[str, ArgumentNode]
    root_id: str
    depth: int
    tree_id: str = ""
    horizon: int | None = None
    children_map: dict[str, tuple[str, ...]] = field(default_factory=dict, compare=False)
    levels: tuple[tuple[str, ...], ...] = field(default=(), compare=False)

    @property
    def size(self) -> int:
        return len(self.nodes)

    @property
    def edge_count(self) -> int:
        return len(self.nodes) - 1

    @property
    def support_count(self) -> int:
        return sum(1 for n in self.nodes.values() if n.polarity is Polarity.SUPPORT)

    @property
    def alignment_depth(self) -> int:
        """Level that alignment keys are measured from."""
        return self.horizon if self.horizon is not None else self.depth

    def node(self, node_id: str) -> ArgumentNode:
        return self.nodes[node_id]

    def children(self, node_id: str) -> tuple[str, ...]:
        """Ids of the replies to ``node_id``, sorted."""
        return self.children_map.get(node_id, ())

    def is_leaf(self, node_id: str) -> bool:
        return self.nodes[node_id].in_degree == 0

    def nodes_at_level(self, h: int) -> tuple[str, ...]:
        if h < 0 or h >= len(self.levels):
            return ()
        return self.levels[h]

    def level_sizes(self) -> list[int]:
        """n_h for h = 0..N."""
        return [len(ids) for ids in self.levels]

    def leaves(self) -> list[str]:
        return sorted(n.id for n in self.nodes.values() if n.in_degree == 0)

    def in_degrees(self) -> list[int]:
        return [self.nodes[i].in_degree for level in self.levels for i in level]

    def edges(self) -> Iterator[tuple[str, str, Polarity]]:
        """Yield (reply, target, polarity) in level order."""
        for level in self.levels[1:]:
            for node_id in level:
                node = self.nodes[node_id]
                assert node.parent is not None and node.polarity is not None
                yield node_id, node.parent, node.polarity

    def alignment_key(self, h: int) -> int:
        return self.alignment_depth - h

    def level_index(self, h: int) -> LevelIndex:
        if h < 0 or h > self.depth:
            raise ValueError(f"Level {h} outside 0..{self.depth}")
        return LevelIndex(h=h, d=self.alignment_key(h))


def _normalize_record(record: NodeRecord | tuple[Any, ...]) -> NodeRecord:
    if isinstance(record, NodeRecord):
        return record
    node_id, parent, polarity = record[:3]
    return NodeRecord(
        id=str(node_id),
        parent=None if parent is None else str(parent),
        polarity=Polarity.parse(polarity),
    )


def build_tree(
    records: Iterable[NodeRecord | tuple[Any, ...]],
    tree_id: str = "",
    horizon: int | None = None,
) -> ReplyTree:
    """Validate node records and build a ReplyTree.

    Args:
        records: NodeRecord objects or ``(id, parent_id, polarity)`` tuples.
        tree_id: Optional identifier carried through to outputs.
        horizon: Optional forced-leaf level of a generated tree.

    Returns:
        The validated tree. Input order does not matter.

    Raises:
        DuplicateIdError, MissingRootError, MultipleRootsError,
        OrphanParentError, CycleDetectedError, PolarityOnRootError,
        MissingPolarityError.
    """
    by_id: dict[str, NodeRecord] = {}
    for raw in records:
        rec = _normalize_record(raw)
        if rec.id in by_id:
            raise DuplicateIdError(f"Duplicate node id '{rec.id}'")
        by_id[rec.id] = rec

    roots = sorted(r.id for r in by_id.values() if r.parent is None)
    if not roots:
        raise MissingRootError("No node without a parent")
    if len(roots) > 1:
        raise MultipleRootsError(f"Multiple roots: {', '.join(roots)}")
    root_id = roots[0]

    children: dict[str, list[str]] = {}
    for rec in by_id.values():
        if rec.parent is None:
            if rec.polarity is not None:
                raise PolarityOnRootError(f"Root '{rec.id}' carries a polarity")
            continue
        if rec.polarity is None:
            raise MissingPolarityError(f"Node '{rec.id}' has no polarity")
        if rec.parent not in by_id:
            raise OrphanParentError(f"Node '{rec.id}' replies to unknown '{rec.parent}'")
        children.setdefault(rec.parent, []).append(rec.id)

    children_map = {pid: tuple(sorted(ids)) for pid, ids in children.items()}

    level_of: dict[str, int] = {root_id: 0}
    queue = deque([root_id])
    while queue:
        current = queue.popleft()
        for child in children_map.get(current, ()):
            level_of[child] = level_of[current] + 1
            queue.append(child)

    if len(level_of) != len(by_id):
        stuck = sorted(set(by_id) - set(level_of))
        raise CycleDetectedError(f"Nodes not reachable from root: {', '.join(stuck[:5])}")

    depth = max(level_of.values())
    if horizon is not None and horizon < depth:
        raise TreeValidationError(f"Horizon {horizon} is shallower than depth {depth}")

    buckets: list[list[str]] = [[] for _ in range(depth + 1)]
    for node_id, h in level_of.items():
        buckets[h].append(node_id)

    nodes = {
        rec.id: ArgumentNode(
            id=rec.id,
            parent=rec.parent,
            polarity=rec.polarity,
            in_degree=len(children_map.get(rec.id, ())),
            level=level_of[rec.id],
            text=rec.text,
        )
        for rec in sorted(by_id.values(), key=lambda r: r.id)
    }

    return ReplyTree(
        nodes=nodes,
        root_id=root_id,
        depth=depth,
        tree_id=tree_id,
        horizon=horizon,
        children_map=children_map,
        levels=tuple(tuple(sorted(b)) for b in buckets),
    )


def leaf_fraction_per_level(t: ReplyTree) -> dict[int, float]:
    """p̂(0|h): fraction of nodes at each level with no replies."""
    result: dict[int, float] = {}
    for h, ids in enumerate(t.levels):
        leaves = sum(1 for i in ids if t.nodes[i].in_degree == 0)
        result[h] = leaves / len(ids)
    return result


def mean_in_degree_per_level(t: ReplyTree) -> dict[int, float]:
    """k̂_h: average number of replies received by nodes at level h."""
    return {
        h: sum(t.nodes[i].in_degree for i in ids) / len(ids)
        for h, ids in enumerate(t.levels)
    }


def estimate_q(t: ReplyTree) -> float:
    """Fraction of supporting edges among all edges.

    Raises:
        NoEdgesError: The tree is root-only.
    """
    if t.edge_count == 0:
        raise NoEdgesError(f"Tree '{t.tree_id or t.root_id}' has no edges")
    return t.support_count / t.edge_count


# --- Document form ---


def records_from_document(doc: dict[str, Any]) -> list[NodeRecord]:
    """Read node records from a tree document, ignoring unknown fields."""
    records: list[NodeRecord] = []
    for raw in doc.get("nodes", []):
        parent = raw.get("parent")
        text = raw.get("text")
        records.append(
            NodeRecord(
                id=str(raw["id"]),
                parent=None if parent is None else str(parent),
                polarity=Polarity.parse(raw.get("polarity")),
                text=None if text is None else str(text),
                deleted=bool(raw.get("deleted", False)),
            )
        )
    return records


def tree_from_document(doc: dict[str, Any], tree_id: str = "") -> ReplyTree:
    """Build a tree from its JSON document form."""
    horizon = doc.get("horizon")
    return build_tree(
        records_from_document(doc),
        tree_id=str(doc.get("tree_id") or tree_id),
        horizon=None if horizon is None else int(horizon),
    )


def tree_to_document(t: ReplyTree) -> dict[str, Any]:
    """Serialize a tree to the JSON document form, nodes in level order."""
    nodes: list[dict[str, Any]] = []
    for level in t.levels:
        for node_id in level:
            node = t.nodes[node_id]
            entry: dict[str, Any] = {
                "id": node.id,
                "parent": node.parent,
                "polarity": node.polarity.value if node.polarity else None,
            }
            if node.text is not None:
                entry["text"] = node.text
            nodes.append(entry)

    doc: dict[str, Any] = {}
    if t.tree_id:
        doc["tree_id"] = t.tree_id
    if t.horizon is not None:
        doc["horizon"] = t.horizon
    doc["nodes"] = nodes
    return doc
