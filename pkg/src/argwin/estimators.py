"""Monte-Carlo estimation of per-level winner statistics.

Trees of different depth are aligned by distance from their own deepest
level, d = N_t - h (the horizon for generated homogeneous trees). Each
statistic is first computed per tree and then averaged over the trees that
have a node at that distance.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Iterable, Iterator, Mapping
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import partial
from typing import Any

from argwin.analytics import LevelProbabilityProfile, ProfileVariant, TreeObservables
from argwin.errors import EmptyEnsembleError
from argwin.generators import EnsembleSpec, generate_member
from argwin.reply_tree import ReplyTree, estimate_q
from argwin.semantics import GROUNDED, StateAssignment, WinningRule, propagate_states

logger = logging.getLogger(__name__)

DEFAULT_MIN_TREES = 10

STATS_COLUMNS = (
    "distance_from_max",
    "n_trees",
    "n_nodes",
    "p_win",
    "p_leaf",
    "p_win_no_leaves",
    "mean_in_degree",
    "signed_mean",
)


@dataclass(frozen=True)
class TreeLevelStats:
    """Counts for one level of one tree."""

    h: int
    n_nodes: int
    winners: int
    leaves: int
    in_degree_sum: int

    @property
    def winner_fraction(self) -> float:
        return self.winners / self.n_nodes

    @property
    def leaf_fraction(self) -> float:
        return self.leaves / self.n_nodes

    @property
    def winner_fraction_no_leaves(self) -> float | None:
        """(p̂ - p̂(0)) / (1 - p̂(0)); None on an all-leaf level."""
        if self.leaves == self.n_nodes:
            return None
        # leaves always win, so winners >= leaves
        return (self.winners - self.leaves) / (self.n_nodes - self.leaves)

    @property
    def mean_in_degree(self) -> float:
        return self.in_degree_sum / self.n_nodes

    @property
    def mean_nonleaf_in_degree(self) -> float | None:
        """Replies per non-leaf node; None on an all-leaf level."""
        if self.leaves == self.n_nodes:
            return None
        return self.in_degree_sum / (self.n_nodes - self.leaves)

    @property
    def signed_mean(self) -> float:
        """Σs / Σs² over the level, in [-1, 1]."""
        return (2 * self.winners - self.n_nodes) / self.n_nodes


def tree_level_stats(t: ReplyTree, s: StateAssignment) -> dict[int, TreeLevelStats]:
    """Per-level counts of winners, leaves and replies for one tree."""
    missing = set(t.nodes) - set(s.states)
    if missing:
        raise ValueError(f"State assignment misses {len(missing)} node(s) of the tree")

    stats: dict[int, TreeLevelStats] = {}
    for h, ids in enumerate(t.levels):
        stats[h] = TreeLevelStats(
            h=h,
            n_nodes=len(ids),
            winners=sum(1 for i in ids if s.states[i] == 1),
            leaves=sum(1 for i in ids if t.nodes[i].in_degree == 0),
            in_degree_sum=sum(t.nodes[i].in_degree for i in ids),
        )
    return stats


@dataclass(frozen=True)
class TreeSummary:
    """Everything the ensemble fold needs from one evaluated tree."""

    tree_id: str
    depth: int
    alignment_depth: int
    edges: int
    q_hat: float | None
    levels: dict[int, TreeLevelStats]
    degenerate: bool = False
    attempts: int = 1

    def observables(self) -> TreeObservables:
        return TreeObservables(
            depth=self.depth,
            alignment_depth=self.alignment_depth,
            leaf_fraction={h: ls.leaf_fraction for h, ls in self.levels.items()},
            mean_in_degree={
                h: k
                for h, ls in self.levels.items()
                if (k := ls.mean_nonleaf_in_degree) is not None
            },
            q_hat=self.q_hat,
        )


def summarize_tree(t: ReplyTree, rule: WinningRule = GROUNDED) -> TreeSummary:
    """Evaluate a tree under ``rule`` and reduce it to level statistics."""
    states = propagate_states(t, rule)
    return TreeSummary(
        tree_id=t.tree_id,
        depth=t.depth,
        alignment_depth=t.alignment_depth,
        edges=t.edge_count,
        q_hat=estimate_q(t) if t.edge_count else None,
        levels=tree_level_stats(t, states),
    )


@dataclass(frozen=True)
class LevelStats:
    """Ensemble statistics at distance ``d`` from each tree's deepest level."""

    d: int
    n_trees: int
    n_nodes: int
    p_win: float
    p_leaf: float
    p_win_no_leaves: float | None
    mean_in_degree: float
    signed_mean: float
    n_trees_no_leaves: int = 0

    @property
    def p_win_se(self) -> float:
        """Binomial standard error of p_win over the pooled nodes."""
        return math.sqrt(max(self.p_win * (1.0 - self.p_win), 0.0) / self.n_nodes)

    def to_row(self) -> dict[str, Any]:
        return {
            "distance_from_max": self.d,
            "n_trees": self.n_trees,
            "n_nodes": self.n_nodes,
            "p_win": self.p_win,
            "p_leaf": self.p_leaf,
            "p_win_no_leaves": self.p_win_no_leaves,
            "mean_in_degree": self.mean_in_degree,
            "signed_mean": self.signed_mean,
        }

    def to_dict(self) -> dict[str, Any]:
        data = self.to_row()
        data["p_win_se"] = self.p_win_se
        data["n_trees_no_leaves"] = self.n_trees_no_leaves
        return data


@dataclass(frozen=True)
class EnsembleStats:
    """Reported levels, ordered by d, of an evaluated ensemble."""

    levels: list[LevelStats]
    rule: WinningRule
    source: dict[str, Any] = field(default_factory=dict)
    min_tree_threshold: int = DEFAULT_MIN_TREES
    n_trees: int = 0

    def level(self, d: int) -> LevelStats | None:
        for ls in self.levels:
            if ls.d == d:
                return ls
        return None

    def to_rows(self) -> list[dict[str, Any]]:
        return [ls.to_row() for ls in self.levels]

    def to_dict(self) -> dict[str, Any]:
        return {
            "rule": self.rule.name,
            "min_tree_threshold": self.min_tree_threshold,
            "n_trees": self.n_trees,
            "source": self.source,
            "levels": [ls.to_dict() for ls in self.levels],
        }

    def to_profile(self) -> LevelProbabilityProfile:
        """Empirical p_win as a profile; the deepest reported d becomes level 0."""
        if not self.levels:
            raise EmptyEnsembleError("no level passed the tree threshold")
        top = max(ls.d for ls in self.levels)
        return LevelProbabilityProfile(
            depth=top,
            p={top - ls.d: ls.p_win for ls in sorted(self.levels, key=lambda x: -x.d)},
            variant=ProfileVariant.EMPIRICAL,
            metadata={"rule": self.rule.name, "n_trees": self.n_trees},
        )


def profile_from_stats(stats: EnsembleStats) -> LevelProbabilityProfile:
    return stats.to_profile()


@dataclass
class _LevelSums:
    n_trees: int = 0
    n_nodes: int = 0
    p_win: float = 0.0
    p_leaf: float = 0.0
    p_nl: float = 0.0
    n_nl: int = 0
    k_mean: float = 0.0
    signed: float = 0.0

    def merge(self, other: _LevelSums) -> None:
        self.n_trees += other.n_trees
        self.n_nodes += other.n_nodes
        self.p_win += other.p_win
        self.p_leaf += other.p_leaf
        self.p_nl += other.p_nl
        self.n_nl += other.n_nl
        self.k_mean += other.k_mean
        self.signed += other.signed


@dataclass
class EnsembleAccumulator:
    """Running per-distance sums of per-tree fractions.

    ``add`` folds one tree; ``merge`` combines two partial folds.
    """

    sums: dict[int, _LevelSums] = field(default_factory=dict)
    n_trees: int = 0
    degenerate: int = 0
    max_attempts: int = 0

    def add(self, summary: TreeSummary) -> None:
        self.n_trees += 1
        self.degenerate += summary.degenerate
        self.max_attempts = max(self.max_attempts, summary.attempts)
        for h, ls in summary.levels.items():
            acc = self.sums.setdefault(summary.alignment_depth - h, _LevelSums())
            acc.n_trees += 1
            acc.n_nodes += ls.n_nodes
            acc.p_win += ls.winner_fraction
            acc.p_leaf += ls.leaf_fraction
            acc.k_mean += ls.mean_in_degree
            acc.signed += ls.signed_mean
            nl = ls.winner_fraction_no_leaves
            if nl is not None:
                acc.p_nl += nl
                acc.n_nl += 1

    def merge(self, other: EnsembleAccumulator) -> None:
        self.n_trees += other.n_trees
        self.degenerate += other.degenerate
        self.max_attempts = max(self.max_attempts, other.max_attempts)
        for d, acc in other.sums.items():
            self.sums.setdefault(d, _LevelSums()).merge(acc)

    def finalize(
        self,
        rule: WinningRule,
        threshold: int = DEFAULT_MIN_TREES,
        source: Mapping[str, Any] | None = None,
    ) -> EnsembleStats:
        """Average the sums and drop distances with fewer than ``threshold`` trees.

        Raises:
            EmptyEnsembleError: No tree was added.
        """
        if self.n_trees == 0:
            raise EmptyEnsembleError("cannot aggregate an empty ensemble")
        levels: list[LevelStats] = []
        for d in sorted(self.sums):
            acc = self.sums[d]
            if acc.n_trees < threshold:
                continue
            levels.append(
                LevelStats(
                    d=d,
                    n_trees=acc.n_trees,
                    n_nodes=acc.n_nodes,
                    p_win=acc.p_win / acc.n_trees,
                    p_leaf=acc.p_leaf / acc.n_trees,
                    p_win_no_leaves=acc.p_nl / acc.n_nl if acc.n_nl else None,
                    mean_in_degree=acc.k_mean / acc.n_trees,
                    signed_mean=acc.signed / acc.n_trees,
                    n_trees_no_leaves=acc.n_nl,
                )
            )
        dropped = len(self.sums) - len(levels)
        if dropped:
            logger.debug("Dropped %d distance(s) below %d trees", dropped, threshold)
        return EnsembleStats(
            levels=levels,
            rule=rule,
            source=dict(source or {}),
            min_tree_threshold=threshold,
            n_trees=self.n_trees,
        )


def aggregate(
    trees: Iterable[ReplyTree],
    rule: WinningRule = GROUNDED,
    threshold: int = DEFAULT_MIN_TREES,
    source: Mapping[str, Any] | None = None,
) -> EnsembleStats:
    """Evaluate and fold a stream of trees; only running sums are kept.

    Raises:
        EmptyEnsembleError: The stream is empty.
    """
    acc = EnsembleAccumulator()
    for t in trees:
        acc.add(summarize_tree(t, rule))
    return acc.finalize(rule, threshold, source)


# --- Simulation ---


@dataclass(frozen=True)
class SimulationResult:
    stats: EnsembleStats
    observables: list[TreeObservables]
    degenerate: int = 0
    max_attempts: int = 1


def _simulate_member(spec: EnsembleSpec, rule: WinningRule, t: int) -> TreeSummary:
    member = generate_member(spec, t)
    summary = summarize_tree(member.tree, rule)
    return TreeSummary(
        tree_id=summary.tree_id,
        depth=summary.depth,
        alignment_depth=summary.alignment_depth,
        edges=summary.edges,
        q_hat=summary.q_hat,
        levels=summary.levels,
        degenerate=member.degenerate,
        attempts=member.attempts,
    )


def _iter_summaries(
    spec: EnsembleSpec, rule: WinningRule, jobs: int, chunksize: int
) -> Iterator[TreeSummary]:
    work = partial(_simulate_member, spec, rule)
    if jobs <= 1:
        yield from map(work, range(spec.trees))
        return
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        # map preserves index order
        yield from pool.map(work, range(spec.trees), chunksize=chunksize)


def simulate_ensemble(
    spec: EnsembleSpec,
    rule: WinningRule = GROUNDED,
    threshold: int = DEFAULT_MIN_TREES,
    jobs: int = 1,
) -> SimulationResult:
    """Generate, evaluate and aggregate an ensemble.

    Summaries are folded in tree-index order whatever ``jobs`` is, so the
    statistics are identical for every worker count.
    """
    logger.info(
        "Simulating %d %s trees (q=%.3f, rule=%s, jobs=%d)",
        spec.trees,
        spec.kind.value,
        spec.q,
        rule.name,
        jobs,
    )
    acc = EnsembleAccumulator()
    observables: list[TreeObservables] = []
    chunksize = max(1, spec.trees // (4 * max(jobs, 1)))
    for summary in _iter_summaries(spec, rule, jobs, chunksize):
        acc.add(summary)
        observables.append(summary.observables())

    stats = acc.finalize(rule, threshold, source=spec.to_dict())
    if acc.degenerate:
        logger.info("%d of %d trees were root-only", acc.degenerate, acc.n_trees)
    return SimulationResult(
        stats=stats,
        observables=observables,
        degenerate=acc.degenerate,
        max_attempts=acc.max_attempts,
    )
