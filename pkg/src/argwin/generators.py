"""Seeded random ensembles of signed reply trees.

Two generators:

  * homogeneous: every node above the horizon N draws its reply count from a
    fixed in-degree distribution p(k); nodes at level N are forced leaves.
  * preferential: trees grown one node at a time, attaching to an existing
    node with probability proportional to its total degree.

Topology and edge signs are drawn from two independent child streams of the
master seed, so changing q never changes the shape of tree t.
"""

from __future__ import annotations

import logging
import math
from collections import Counter
from collections.abc import Iterable, Iterator, Mapping
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from typing import Any, Protocol, runtime_checkable

import numpy as np
from scipy.special import zeta
from scipy.stats import poisson

from argwin.errors import DegenerateTreeError, InvalidModelError, InvalidProbabilityError
from argwin.reply_tree import NodeRecord, Polarity, ReplyTree, build_tree

logger = logging.getLogger(__name__)

TOPOLOGY_STREAM = 0
SIGN_STREAM = 1

# Truncated-zeta inverse-CDF table length for power-law sampling.
ZETA_TABLE_SIZE = 100_000

DEFAULT_SERIES_TOLERANCE = 1e-12
DEFAULT_MAX_SERIES_TERMS = 100_000


def child_rng(seed: int, *parts: int) -> np.random.Generator:
    """Generator deterministically derived from ``seed`` and ``parts``."""
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=parts))


def _check_probability(q: float, name: str = "q") -> None:
    if not (0.0 <= q <= 1.0) or math.isnan(q):
        raise InvalidProbabilityError(f"{name} must lie in [0, 1], got {q}")


# --- Degree models ---


@dataclass(frozen=True)
class DegreeSeries:
    """Truncated support of a degree distribution.

    ``truncation`` is the largest k kept (K); ``tail_mass`` the probability
    of k > K that was dropped.
    """

    ks: np.ndarray
    masses: np.ndarray
    truncation: int
    tail_mass: float


@runtime_checkable
class DegreeModel(Protocol):
    """In-degree distribution p(k)."""

    def pmf(self, k: int) -> float: ...

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray: ...

    def series(
        self,
        tolerance: float = DEFAULT_SERIES_TOLERANCE,
        max_terms: int = DEFAULT_MAX_SERIES_TERMS,
    ) -> DegreeSeries: ...

    def mean(self) -> float: ...

    def to_dict(self) -> dict[str, Any]: ...


@dataclass(frozen=True)
class Poisson:
    lam: float

    def __post_init__(self) -> None:
        if not math.isfinite(self.lam) or self.lam <= 0:
            raise InvalidModelError(f"Poisson rate must be finite and > 0, got {self.lam}")

    def pmf(self, k: int) -> float:
        return float(poisson.pmf(k, self.lam))

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        return rng.poisson(self.lam, size=size)

    def series(
        self,
        tolerance: float = DEFAULT_SERIES_TOLERANCE,
        max_terms: int = DEFAULT_MAX_SERIES_TERMS,
    ) -> DegreeSeries:
        ks = np.arange(max_terms)
        tails = poisson.sf(ks, self.lam)
        below = np.nonzero(tails < tolerance)[0]
        cutoff = int(below[0]) if below.size else max_terms - 1
        kept = ks[: cutoff + 1]
        return DegreeSeries(
            ks=kept,
            masses=poisson.pmf(kept, self.lam),
            truncation=cutoff,
            tail_mass=float(tails[cutoff]),
        )

    def pgf(self, x: float) -> float:
        """Closed-form generating function Σ x^k p(k) = exp(-λ(1 - x))."""
        return math.exp(-self.lam * (1.0 - x))

    def mean(self) -> float:
        return self.lam

    def to_dict(self) -> dict[str, Any]:
        return {"model": "poisson", "lambda": self.lam}


@lru_cache(maxsize=32)
def _zeta_cdf_table(alpha: float, k_min: int, size: int) -> np.ndarray:
    ks = np.arange(k_min, k_min + size, dtype=float)
    return np.cumsum(ks**-alpha) / zeta(alpha, k_min)


@dataclass(frozen=True)
class PowerLaw:
    """Discrete power law p(k) = k^-α / ζ(α, k_min) for k ≥ k_min."""

    alpha: float
    k_min: int = 1

    def __post_init__(self) -> None:
        if not math.isfinite(self.alpha) or self.alpha <= 1:
            raise InvalidModelError(f"Power-law exponent must be > 1, got {self.alpha}")
        if self.k_min < 1:
            raise InvalidModelError(f"k_min must be >= 1, got {self.k_min}")

    @property
    def normalizer(self) -> float:
        """Hurwitz zeta ζ(α, k_min) = ζ(α) - Σ_{k<k_min} k^-α."""
        return float(zeta(self.alpha, self.k_min))

    def pmf(self, k: int) -> float:
        if k < self.k_min:
            return 0.0
        return k**-self.alpha / self.normalizer

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        table = _zeta_cdf_table(self.alpha, self.k_min, ZETA_TABLE_SIZE)
        u = rng.random(size)
        idx = np.searchsorted(table, u, side="left")
        draws = self.k_min + idx
        beyond = idx >= table.size
        if beyond.any():
            # continuous approximation for the far tail
            far = np.floor(
                (self.k_min - 0.5) * (1.0 - u[beyond]) ** (-1.0 / (self.alpha - 1.0)) + 0.5
            )
            draws[beyond] = np.maximum(far, self.k_min + table.size).astype(draws.dtype)
        return draws

    def series(
        self,
        tolerance: float = DEFAULT_SERIES_TOLERANCE,
        max_terms: int = DEFAULT_MAX_SERIES_TERMS,
    ) -> DegreeSeries:
        norm = self.normalizer
        ks = np.arange(self.k_min, self.k_min + max_terms)
        tails = zeta(self.alpha, ks + 1) / norm
        below = np.nonzero(tails < tolerance)[0]
        last = int(below[0]) if below.size else max_terms - 1
        kept = ks[: last + 1]
        if not below.size:
            logger.warning(
                "Power-law series for alpha=%.3f truncated at K=%d with tail mass %.2e",
                self.alpha,
                int(kept[-1]),
                float(tails[last]),
            )
        return DegreeSeries(
            ks=kept,
            masses=kept.astype(float) ** -self.alpha / norm,
            truncation=int(kept[-1]),
            tail_mass=float(tails[last]),
        )

    def mean(self) -> float:
        if self.alpha <= 2:
            return math.inf
        return float(zeta(self.alpha - 1, self.k_min)) / self.normalizer

    def to_dict(self) -> dict[str, Any]:
        return {"model": "powerlaw", "alpha": self.alpha, "k_min": self.k_min}


@dataclass(frozen=True)
class Empirical:
    """Finite histogram over k, normalized on construction."""

    probabilities: Mapping[int, float]

    def __post_init__(self) -> None:
        if not self.probabilities:
            raise InvalidModelError("Empirical histogram is empty")
        cleaned: dict[int, float] = {}
        for k, p in self.probabilities.items():
            k = int(k)
            p = float(p)
            if k < 0 or p < 0 or not math.isfinite(p):
                raise InvalidModelError(f"Invalid histogram entry {k}: {p}")
            if p > 0:
                cleaned[k] = cleaned.get(k, 0.0) + p
        total = math.fsum(cleaned.values())
        if total <= 0:
            raise InvalidModelError("Empirical histogram has zero mass")
        if abs(total - 1.0) > 1e-9:
            raise InvalidModelError(f"Empirical probabilities sum to {total}, not 1")
        object.__setattr__(
            self, "probabilities", {k: cleaned[k] / total for k in sorted(cleaned)}
        )

    @classmethod
    def from_counts(cls, degrees: Iterable[int]) -> Empirical:
        """Build p(k) from observed in-degrees."""
        counts = Counter(int(k) for k in degrees)
        total = sum(counts.values())
        if total == 0:
            raise InvalidModelError("No degrees to build a histogram from")
        return cls({k: n / total for k, n in counts.items()})

    def pmf(self, k: int) -> float:
        return self.probabilities.get(k, 0.0)

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        ks = np.fromiter(self.probabilities.keys(), dtype=np.int64)
        ps = np.fromiter(self.probabilities.values(), dtype=float)
        return rng.choice(ks, size=size, p=ps)

    def series(
        self,
        tolerance: float = DEFAULT_SERIES_TOLERANCE,
        max_terms: int = DEFAULT_MAX_SERIES_TERMS,
    ) -> DegreeSeries:
        ks = np.fromiter(self.probabilities.keys(), dtype=np.int64)
        return DegreeSeries(
            ks=ks,
            masses=np.fromiter(self.probabilities.values(), dtype=float),
            truncation=int(ks.max()),
            tail_mass=0.0,
        )

    def mean(self) -> float:
        return math.fsum(k * p for k, p in self.probabilities.items())

    def to_dict(self) -> dict[str, Any]:
        return {
            "model": "empirical",
            "histogram": {str(k): p for k, p in self.probabilities.items()},
        }


def degree_model_from_dict(data: Mapping[str, Any]) -> DegreeModel:
    """Rebuild a degree model from its ``to_dict`` form."""
    name = str(data.get("model", "")).lower()
    if name == "poisson":
        return Poisson(float(data["lambda"]))
    if name == "powerlaw":
        return PowerLaw(float(data["alpha"]), int(data.get("k_min", 1)))
    if name == "empirical":
        return Empirical({int(k): float(p) for k, p in data["histogram"].items()})
    raise InvalidModelError(f"Unknown degree model '{name}'")


# --- Single trees ---


def _sign_records(
    pairs: list[tuple[str, str]], q: float, rng: np.random.Generator
) -> list[NodeRecord]:
    supports = rng.random(len(pairs)) < q
    return [
        NodeRecord(id=child, parent=parent, polarity=Polarity.SUPPORT if s else Polarity.ATTACK)
        for (child, parent), s in zip(pairs, supports, strict=True)
    ]


def generate_homogeneous(
    depth: int,
    model: DegreeModel,
    q: float,
    seed: int,
    *,
    key: tuple[int, ...] = (),
    tree_id: str = "",
) -> ReplyTree:
    """Grow a tree breadth-wise down to the horizon ``depth``.

    Node ids encode their position: the root is ``"0"`` and the j-th reply
    to node ``x`` is ``"x.j"``. A root that draws k=0 yields a root-only
    tree.
    """
    if depth < 1:
        raise InvalidModelError(f"depth must be >= 1, got {depth}")
    _check_probability(q)
    topology = child_rng(seed, *key, TOPOLOGY_STREAM)
    signs = child_rng(seed, *key, SIGN_STREAM)

    records = [NodeRecord(id="0")]
    frontier = ["0"]
    for _ in range(depth):
        if not frontier:
            break
        counts = model.sample(topology, len(frontier))
        pairs = [
            (f"{parent}.{j}", parent)
            for parent, k in zip(frontier, counts, strict=True)
            for j in range(int(k))
        ]
        records.extend(_sign_records(pairs, q, signs))
        frontier = [child for child, _ in pairs]

    return build_tree(records, tree_id=tree_id, horizon=depth)


def generate_preferential(
    n: int,
    q: float,
    seed: int,
    *,
    key: tuple[int, ...] = (),
    tree_id: str = "",
) -> ReplyTree:
    """Grow a tree of exactly ``n`` nodes by total-degree preferential attachment.

    Starts from root ``n0`` and its reply ``n1`` (both degree 1). Node i
    attaches to an existing node with probability w / Σw.
    """
    if n < 2:
        raise InvalidModelError(f"node count must be >= 2, got {n}")
    _check_probability(q)
    topology = child_rng(seed, *key, TOPOLOGY_STREAM)
    signs = child_rng(seed, *key, SIGN_STREAM)

    # every node appears once per unit of degree
    tokens = [0, 1]
    pairs = [("n1", "n0")]
    draws = topology.random(n - 2)
    for i in range(2, n):
        target = tokens[int(draws[i - 2] * len(tokens))]
        tokens.append(target)
        tokens.append(i)
        pairs.append((f"n{i}", f"n{target}"))

    records = [NodeRecord(id="n0"), *_sign_records(pairs, q, signs)]
    return build_tree(records, tree_id=tree_id)


# --- Ensembles ---


class GeneratorKind(str, Enum):
    HOMOGENEOUS = "homogeneous"
    PREFERENTIAL = "preferential"


@dataclass(frozen=True)
class EnsembleSpec:
    """Parameters of a synthetic ensemble.

    ``depth`` and ``model`` apply to homogeneous ensembles, ``nodes`` to
    preferential ones.
    """

    kind: GeneratorKind
    trees: int
    q: float
    seed: int
    depth: int | None = None
    nodes: int | None = None
    model: DegreeModel | None = None
    condition_on_depth: bool = False
    max_attempts: int = 1000

    def __post_init__(self) -> None:
        if self.trees < 1:
            raise InvalidModelError(f"tree count must be >= 1, got {self.trees}")
        _check_probability(self.q)
        if self.kind is GeneratorKind.HOMOGENEOUS:
            if self.depth is None or self.depth < 1:
                raise InvalidModelError("homogeneous ensembles need depth >= 1")
            if self.model is None:
                raise InvalidModelError("homogeneous ensembles need a degree model")
        else:
            if self.nodes is None or self.nodes < 2:
                raise InvalidModelError("preferential ensembles need nodes >= 2")
        if self.max_attempts < 1:
            raise InvalidModelError("max_attempts must be >= 1")

    def to_dict(self) -> dict[str, Any]:
        data: dict[str, Any] = {
            "kind": self.kind.value,
            "trees": self.trees,
            "q": self.q,
            "seed": self.seed,
        }
        if self.kind is GeneratorKind.HOMOGENEOUS:
            assert self.model is not None
            data["depth"] = self.depth
            data["model"] = self.model.to_dict()
            data["condition_on_depth"] = self.condition_on_depth
        else:
            data["nodes"] = self.nodes
        return data

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> EnsembleSpec:
        model = data.get("model")
        return cls(
            kind=GeneratorKind(data["kind"]),
            trees=int(data["trees"]),
            q=float(data["q"]),
            seed=int(data["seed"]),
            depth=None if data.get("depth") is None else int(data["depth"]),
            nodes=None if data.get("nodes") is None else int(data["nodes"]),
            model=None if model is None else degree_model_from_dict(model),
            condition_on_depth=bool(data.get("condition_on_depth", False)),
            max_attempts=int(data.get("max_attempts", 1000)),
        )


@dataclass(frozen=True)
class GeneratedTree:
    """One ensemble member plus generation diagnostics."""

    index: int
    tree: ReplyTree
    degenerate: bool = False
    attempts: int = 1


def member_id(t: int) -> str:
    return f"tree-{t:06d}"


def generate_member(spec: EnsembleSpec, t: int) -> GeneratedTree:
    """Generate tree ``t`` of the ensemble; depends only on (spec, t).

    Raises:
        DegenerateTreeError: Depth conditioning is on and no attempt reached
            the horizon within ``spec.max_attempts``.
    """
    tree_id = member_id(t)
    if spec.kind is GeneratorKind.PREFERENTIAL:
        assert spec.nodes is not None
        tree = generate_preferential(spec.nodes, spec.q, spec.seed, key=(t, 0), tree_id=tree_id)
        return GeneratedTree(index=t, tree=tree)

    assert spec.depth is not None and spec.model is not None
    attempts = spec.max_attempts if spec.condition_on_depth else 1
    for attempt in range(attempts):
        tree = generate_homogeneous(
            spec.depth, spec.model, spec.q, spec.seed, key=(t, attempt), tree_id=tree_id
        )
        if not spec.condition_on_depth or tree.depth == spec.depth:
            return GeneratedTree(
                index=t, tree=tree, degenerate=tree.size == 1, attempts=attempt + 1
            )
    raise DegenerateTreeError(
        f"Tree {t} did not reach depth {spec.depth} in {spec.max_attempts} attempts"
    )


def generate_ensemble(spec: EnsembleSpec) -> Iterator[ReplyTree]:
    """Stream the ``spec.trees`` trees of an ensemble in index order."""
    degenerate = 0
    for t in range(spec.trees):
        member = generate_member(spec, t)
        degenerate += member.degenerate
        yield member.tree
    if degenerate:
        logger.info("Ensemble produced %d root-only trees out of %d", degenerate, spec.trees)
