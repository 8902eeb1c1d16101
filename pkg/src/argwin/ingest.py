"""Load, clean and bin discussion corpora; fit the in-degree power law.

A corpus is a directory (or .zip / .tar / .tar.gz archive) of JSON tree
documents. Every document is checked against ``TREE_SCHEMA`` before it is
built. Problems with single documents are recorded in the CleaningReport and
never abort the load.
"""

from __future__ import annotations

import json
import logging
import tarfile
import zipfile
from collections.abc import Iterable, Iterator
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any

import numpy as np
from jsonschema import Draft202012Validator
from scipy.optimize import minimize_scalar
from scipy.special import zeta

from argwin.errors import (
    ArgwinError,
    InsufficientTailError,
    NoEdgesError,
    TreeValidationError,
    UnreadablePathError,
)
from argwin.output import write_json
from argwin.reply_tree import (
    NodeRecord,
    ReplyTree,
    build_tree,
    estimate_q,
    records_from_document,
    tree_to_document,
)

logger = logging.getLogger(__name__)

DEFAULT_MIN_SIZE = 20
DEFAULT_MIN_SAMPLES = 50
DEFAULT_MIN_TAIL = 25
MAX_ALPHA = 10.0

TREE_SCHEMA: dict[str, Any] = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "Reply tree",
    "type": "object",
    "required": ["nodes"],
    "properties": {
        "tree_id": {"type": "string"},
        "horizon": {"type": "integer", "minimum": 0},
        "nodes": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["id"],
                "properties": {
                    "id": {"type": ["string", "integer"]},
                    "parent": {"type": ["string", "integer", "null"]},
                    "polarity": {"enum": ["support", "attack", None]},
                    "text": {"type": ["string", "null"]},
                    "deleted": {"type": "boolean"},
                },
            },
        },
    },
}

_VALIDATOR = Draft202012Validator(TREE_SCHEMA)


def validate_document(doc: Any) -> list[str]:
    """Schema errors of a tree document, as ``path: message`` strings."""
    errors = []
    for err in sorted(_VALIDATOR.iter_errors(doc), key=lambda e: list(e.absolute_path)):
        where = "/".join(str(p) for p in err.absolute_path) or "<root>"
        errors.append(f"{where}: {err.message}")
    return errors


# --- Cleaning ---


def _is_flagged(rec: NodeRecord) -> bool:
    return rec.deleted or (rec.text is not None and not rec.text.strip())


def _prune_flagged(records: list[NodeRecord]) -> tuple[list[NodeRecord], int]:
    """Drop flagged nodes and every reply below them."""
    children: dict[str | None, list[str]] = {}
    for rec in records:
        children.setdefault(rec.parent, []).append(rec.id)
    doomed: set[str] = set()
    stack = [rec.id for rec in records if _is_flagged(rec)]
    while stack:
        node_id = stack.pop()
        if node_id in doomed:
            continue
        doomed.add(node_id)
        stack.extend(children.get(node_id, []))
    return [r for r in records if r.id not in doomed], len(doomed)


def tree_from_clean_document(
    doc: dict[str, Any], tree_id: str, strict: bool = True
) -> tuple[ReplyTree, int]:
    """Validate, clean and build one document.

    Returns the tree and the number of pruned nodes.

    Raises:
        TreeValidationError: Schema failure, broken structure, a flagged
            root, or (strict mode) any flagged node.
    """
    problems = validate_document(doc)
    if problems:
        raise TreeValidationError("; ".join(problems[:3]))

    records = records_from_document(doc)
    pruned = 0
    flagged = [r.id for r in records if _is_flagged(r)]
    if flagged:
        if strict:
            raise TreeValidationError(
                f"{len(flagged)} deleted or empty node(s), first '{flagged[0]}'"
            )
        if any(r.parent is None and _is_flagged(r) for r in records):
            raise TreeValidationError("root is deleted or empty")
        records, pruned = _prune_flagged(records)

    horizon = doc.get("horizon")
    tree = build_tree(
        records,
        tree_id=str(doc.get("tree_id") or tree_id),
        horizon=None if horizon is None else int(horizon),
    )
    return tree, pruned


def load_tree_file(path: str | Path, strict: bool = True) -> ReplyTree:
    """Load a single tree document.

    Raises:
        UnreadablePathError: The file cannot be read or is not JSON.
        TreeValidationError: The document does not describe a valid tree.
    """
    p = Path(path)
    try:
        doc = json.loads(p.read_text(encoding="utf-8"))
    except (OSError, UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise UnreadablePathError(f"Cannot read tree file {p}: {exc}") from exc
    tree, _ = tree_from_clean_document(doc, tree_id=p.stem, strict=strict)
    return tree


@dataclass
class CleaningReport:
    """What happened to each document of a corpus."""

    source: str = ""
    trees_in: int = 0
    removed_small: int = 0
    removed_malformed: int = 0
    trees_out: int = 0
    pruned_nodes: int = 0
    q_hat: dict[str, float | None] = field(default_factory=dict)
    sizes: list[int] = field(default_factory=list)
    errors: list[dict[str, str]] = field(default_factory=list)
    min_size: int = DEFAULT_MIN_SIZE
    strict: bool = True

    def record_error(self, name: str, exc: Exception) -> None:
        kind = exc.kind if isinstance(exc, ArgwinError) else type(exc).__name__
        self.errors.append({"file": name, "error": kind, "message": str(exc)})

    def summary(self) -> dict[str, Any]:
        """Mean, median and standard deviation of retained sizes and q̂."""
        qs = [q for q in self.q_hat.values() if q is not None]
        return {
            "size": _describe(self.sizes),
            "q_hat": _describe(qs),
        }

    def to_dict(self) -> dict[str, Any]:
        return {
            "source": self.source,
            "min_size": self.min_size,
            "strict": self.strict,
            "trees_in": self.trees_in,
            "removed_small": self.removed_small,
            "removed_malformed": self.removed_malformed,
            "trees_out": self.trees_out,
            "pruned_nodes": self.pruned_nodes,
            "summary": self.summary(),
            "q_hat": self.q_hat,
            "errors": self.errors,
        }


def _describe(values: list[float] | list[int]) -> dict[str, float | None]:
    if not values:
        return {"mean": None, "median": None, "std": None}
    arr = np.asarray(values, dtype=float)
    return {"mean": float(arr.mean()), "median": float(np.median(arr)), "std": float(arr.std())}


def _iter_documents(path: Path) -> Iterator[tuple[str, bytes | Exception]]:
    """Yield (name, raw bytes) for every JSON member of a corpus, sorted by name."""
    if path.is_dir():
        for file in sorted(path.rglob("*.json")):
            name = file.relative_to(path).as_posix()
            try:
                yield name, file.read_bytes()
            except OSError as exc:
                yield name, exc
        return

    name = path.name.lower()
    if name.endswith(".zip"):
        with zipfile.ZipFile(path) as zf:
            for member in sorted(zf.namelist()):
                if member.endswith(".json"):
                    yield member, zf.read(member)
        return
    if name.endswith((".tar", ".tar.gz", ".tgz")):
        with tarfile.open(path) as tf:
            members = sorted(
                (m for m in tf.getmembers() if m.isfile() and m.name.endswith(".json")),
                key=lambda m: m.name,
            )
            for member in members:
                handle = tf.extractfile(member)
                if handle is None:
                    continue
                yield member.name, handle.read()
        return
    raise UnreadablePathError(f"Not a directory or supported archive: {path}")


def load_corpus(
    path: str | Path,
    min_size: int = DEFAULT_MIN_SIZE,
    strict: bool = True,
) -> tuple[list[ReplyTree], CleaningReport]:
    """Load every tree of a corpus and drop malformed or small ones.

    Args:
        path: Directory or archive of JSON tree documents.
        min_size: Smallest node count kept (inclusive).
        strict: Exclude trees with deleted or empty-text nodes; otherwise
            prune the affected subtrees.

    Returns:
        Retained trees in document-name order, and the cleaning report.

    Raises:
        UnreadablePathError: The corpus itself cannot be opened.
    """
    p = Path(path)
    if not p.exists():
        raise UnreadablePathError(f"Corpus path does not exist: {p}")

    report = CleaningReport(source=str(p), min_size=min_size, strict=strict)
    trees: list[ReplyTree] = []
    try:
        documents = list(_iter_documents(p))
    except (OSError, zipfile.BadZipFile, tarfile.TarError) as exc:
        raise UnreadablePathError(f"Cannot read corpus {p}: {exc}") from exc

    for name, raw in documents:
        report.trees_in += 1
        stem = name.rsplit("/", 1)[-1].removesuffix(".json")
        try:
            if isinstance(raw, Exception):
                raise UnreadablePathError(str(raw))
            doc = json.loads(raw.decode("utf-8"))
            tree, pruned = tree_from_clean_document(doc, tree_id=stem, strict=strict)
        except (ArgwinError, ValueError, UnicodeDecodeError) as exc:
            report.removed_malformed += 1
            report.record_error(name, exc)
            logger.warning("Skipping %s: %s", name, exc)
            continue

        if tree.size < min_size:
            report.removed_small += 1
            continue

        report.pruned_nodes += pruned
        report.q_hat[tree.tree_id] = estimate_q(tree) if tree.edge_count else None
        report.sizes.append(tree.size)
        trees.append(tree)

    report.trees_out = len(trees)
    logger.info(
        "Loaded %d of %d trees from %s (%d small, %d malformed)",
        report.trees_out,
        report.trees_in,
        p,
        report.removed_small,
        report.removed_malformed,
    )
    return trees, report


def export_corpus(trees: Iterable[ReplyTree], directory: str | Path) -> list[Path]:
    """Write trees as a corpus directory readable by ``load_corpus``."""
    out = Path(directory)
    written: list[Path] = []
    for i, tree in enumerate(trees):
        name = tree.tree_id or f"tree-{i:06d}"
        written.append(write_json(tree_to_document(tree), out / f"{name}.json"))
    logger.info("Exported %d trees to %s", len(written), out)
    return written


# --- Support classes ---


class SupportClass(str, Enum):
    LOW = "low"
    BALANCED = "balanced"
    HIGH = "high"
    UNCLASSIFIED = "unclassified"


def classify_support(q_hat: float) -> SupportClass:
    """Class of a tree by its support fraction; bounds are inclusive."""
    if q_hat <= 0.2:
        return SupportClass.LOW
    if 0.4 <= q_hat <= 0.6:
        return SupportClass.BALANCED
    if q_hat >= 0.8:
        return SupportClass.HIGH
    return SupportClass.UNCLASSIFIED


def bin_by_support(trees: Iterable[ReplyTree]) -> dict[SupportClass, list[ReplyTree]]:
    """Partition trees by support class; root-only trees are skipped."""
    bins: dict[SupportClass, list[ReplyTree]] = {c: [] for c in SupportClass}
    for tree in trees:
        try:
            q_hat = estimate_q(tree)
        except NoEdgesError:
            logger.warning("Tree %s has no edges; not binned", tree.tree_id or tree.root_id)
            continue
        bins[classify_support(q_hat)].append(tree)
    return bins


def bins_to_dict(bins: dict[SupportClass, list[ReplyTree]]) -> dict[str, list[str]]:
    return {c.value: [t.tree_id for t in bins.get(c, [])] for c in SupportClass}


# --- Power-law fit ---


@dataclass(frozen=True)
class PowerLawFit:
    alpha: float
    k_min: int
    ks_distance: float
    n_tail: int
    n_samples: int = 0

    def to_dict(self) -> dict[str, Any]:
        return {
            "alpha": self.alpha,
            "k_min": self.k_min,
            "ks_distance": self.ks_distance,
            "n_tail": self.n_tail,
            "n_samples": self.n_samples,
        }


def pooled_in_degrees(trees: Iterable[ReplyTree]) -> list[int]:
    """All in-degrees k >= 1 across the trees."""
    return [k for tree in trees for k in tree.in_degrees() if k >= 1]


def _fit_alpha(tail: np.ndarray, k_min: int, max_alpha: float) -> float:
    log_sum = float(np.log(tail).sum())
    n = tail.size

    def neg_log_likelihood(alpha: float) -> float:
        return alpha * log_sum + n * float(np.log(zeta(alpha, k_min)))

    result = minimize_scalar(
        neg_log_likelihood,
        bounds=(1.0001, max_alpha),
        method="bounded",
        options={"xatol": 1e-7},
    )
    return float(result.x)


def _ks_distance(tail: np.ndarray, alpha: float, k_min: int) -> float:
    values, counts = np.unique(tail, return_counts=True)
    ecdf = np.cumsum(counts) / tail.size
    cdf = 1.0 - zeta(alpha, values + 1) / zeta(alpha, k_min)
    return float(np.abs(ecdf - cdf).max())


def fit_power_law(
    in_degrees: Iterable[int],
    *,
    k_min: int | None = None,
    min_samples: int = DEFAULT_MIN_SAMPLES,
    min_tail: int = DEFAULT_MIN_TAIL,
    max_alpha: float = MAX_ALPHA,
) -> PowerLawFit:
    """Discrete power-law fit by maximum likelihood with a KS-chosen k_min.

    Args:
        in_degrees: Observed in-degrees; values below 1 are ignored.
        k_min: Fix the lower cutoff and fit α alone.
        min_samples: Smallest usable sample.
        min_tail: Smallest tail a candidate k_min may leave.
        max_alpha: Upper end of the α search interval.

    Returns:
        The fit with the smallest KS distance; ties go to the smaller k_min.

    Raises:
        InsufficientTailError: Too few samples, or no k_min leaves
            ``min_tail`` samples.
    """
    x = np.asarray([k for k in in_degrees if k >= 1], dtype=np.int64)
    if x.size < min_samples:
        raise InsufficientTailError(
            f"need at least {min_samples} samples with k >= 1, got {x.size}"
        )

    if k_min is not None:
        candidates = [int(k_min)]
    else:
        values = np.unique(x)
        tail_sizes = x.size - np.searchsorted(np.sort(x), values, side="left")
        candidates = [int(v) for v, n in zip(values, tail_sizes, strict=True) if n >= min_tail]

    best: PowerLawFit | None = None
    for cutoff in candidates:
        tail = x[x >= cutoff]
        if tail.size < min_tail:
            continue
        alpha = _fit_alpha(tail, cutoff, max_alpha)
        ks = _ks_distance(tail, alpha, cutoff)
        if best is None or ks < best.ks_distance:
            best = PowerLawFit(
                alpha=alpha,
                k_min=cutoff,
                ks_distance=ks,
                n_tail=int(tail.size),
                n_samples=int(x.size),
            )

    if best is None:
        raise InsufficientTailError(f"no k_min leaves at least {min_tail} tail samples")
    logger.info(
        "Power-law fit: alpha=%.3f k_min=%d ks=%.4f", best.alpha, best.k_min, best.ks_distance
    )
    return best
