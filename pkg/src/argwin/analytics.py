"""Winning-probability theory for homogeneous and empirical reply trees.

Notation: level h runs from the root (0) to the deepest level N. For support
probability q, a replier at level h+1 that wins with probability p leaves its
target standing with probability

    rho(p) = q p + (1 - q)(1 - p)

and the probability that a level-h node wins is the generating function of
p(k|h) evaluated at rho(p_{h+1}), starting from p_N = 1.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Literal

import numpy as np

from argwin.errors import (
    InsufficientLevelsError,
    InvalidModelError,
    InvalidProbabilityError,
    MissingLeafProfileError,
    NoEdgesError,
)
from argwin.generators import (
    DEFAULT_MAX_SERIES_TERMS,
    DEFAULT_SERIES_TOLERANCE,
    DegreeModel,
    Poisson,
)

logger = logging.getLogger(__name__)

DEFAULT_REGIME_EPSILON = 1e-9
CLAMP_TOLERANCE = 1e-12
FLAT_TOLERANCE = 1e-9
# Homogeneous trees with q̂ at or below this use parity ordering.
PARITY_Q_MAX = 0.4

SolveMethod = Literal["auto", "series", "closed"]


class ProfileVariant(str, Enum):
    FULL = "full"
    LEAF_REMOVED = "no-leaves"
    UPPER_BOUND = "upper-bound"
    LOWER_BOUND = "lower-bound"
    APPROXIMATE = "approx-no-leaves"
    EMPIRICAL = "empirical"


class Regime(str, Enum):
    OSCILLATORY = "oscillatory"
    FLAT = "flat"
    MONOTONE_DECAY = "monotone-decay"


class StructureHint(str, Enum):
    HOMOGENEOUS = "homogeneous"
    SCALE_FREE = "scale-free"


def _check_q(q: float) -> None:
    if math.isnan(q) or not 0.0 <= q <= 1.0:
        raise InvalidProbabilityError(f"q must lie in [0, 1], got {q}")


def _clamp(value: float, tolerance: float = CLAMP_TOLERANCE) -> float:
    if value < -tolerance or value > 1.0 + tolerance:
        raise InvalidProbabilityError(f"Probability {value!r} escaped [0, 1] beyond {tolerance}")
    return min(1.0, max(0.0, value))


def rho(p: float, q: float) -> float:
    """Probability that one replier, winning with probability p, does not defeat its target."""
    return (1.0 - q) + (2.0 * q - 1.0) * p


@dataclass(frozen=True)
class LevelProbabilityProfile:
    """Probability of winning per level h, for h in ``p``.

    ``depth`` is the deepest level N; distance_from_max is N - h.
    """

    depth: int
    p: dict[int, float]
    variant: ProfileVariant
    metadata: dict[str, Any] = field(default_factory=dict)

    def levels(self) -> list[int]:
        return sorted(self.p)

    def values(self) -> list[float]:
        return [self.p[h] for h in self.levels()]

    def to_rows(self) -> list[dict[str, Any]]:
        """Rows for the ``variant,level,distance_from_max,p`` CSV."""
        return [
            {
                "variant": self.variant.value,
                "level": h,
                "distance_from_max": self.depth - h,
                "p": self.p[h],
            }
            for h in self.levels()
        ]

    def to_dict(self) -> dict[str, Any]:
        return {
            "variant": self.variant.value,
            "depth": self.depth,
            "levels": self.to_rows(),
            "metadata": self.metadata,
        }


@dataclass(frozen=True)
class CobwebTrace:
    """Iterates of the upper-bound map, from p_N = 1 down to p_0.

    ``steps`` holds (p_{h+1}, p_h) pairs. ``points()`` adds the diagonal
    projections so the staircase can be drawn as one polyline.
    """

    p0: float
    q: float
    steps: list[tuple[float, float]]

    def points(self) -> list[tuple[float, float]]:
        if not self.steps:
            return []
        x0 = self.steps[0][0]
        pts = [(x0, x0)]
        for x, y in self.steps:
            pts.append((x, y))
            pts.append((y, y))
        return pts

    def to_dict(self) -> dict[str, Any]:
        return {
            "p0": self.p0,
            "q": self.q,
            "steps": [list(s) for s in self.steps],
            "points": [list(pt) for pt in self.points()],
        }


@dataclass(frozen=True)
class RegimeReport:
    """Regime of q and the order in which levels should be read.

    ``probabilities`` holds the estimate attached to each ordered level
    when the order was derived from a profile.
    """

    q: float
    regime: Regime
    recommended_order: list[int]
    probabilities: dict[int, float] = field(default_factory=dict)
    epsilon: float = DEFAULT_REGIME_EPSILON
    degenerate: bool = False
    strategy: str = ""

    def to_dict(self) -> dict[str, Any]:
        data: dict[str, Any] = {
            "q": self.q,
            "regime": self.regime.value,
            "epsilon": self.epsilon,
            "recommended_order": self.recommended_order,
            "degenerate": self.degenerate,
        }
        if self.strategy:
            data["strategy"] = self.strategy
        if self.probabilities:
            data["levels"] = [
                {"level": h, "p": self.probabilities[h]} for h in self.recommended_order
            ]
        return data


# --- Full recurrence ---


def _series_recurrence(
    model: DegreeModel,
    depth: int,
    q: float,
    tolerance: float,
    max_terms: int,
    clamp_tolerance: float,
) -> tuple[dict[int, float], dict[str, Any]]:
    series = model.series(tolerance, max_terms)
    p = {depth: 1.0}
    for h in range(depth - 1, -1, -1):
        r = rho(p[h + 1], q)
        p[h] = _clamp(float(np.dot(np.power(r, series.ks), series.masses)), clamp_tolerance)
    return p, {"truncation": series.truncation, "tail_mass": series.tail_mass}


def solve_recurrence(
    model: DegreeModel,
    depth: int,
    q: float,
    *,
    method: SolveMethod = "auto",
    tolerance: float = DEFAULT_SERIES_TOLERANCE,
    max_terms: int = DEFAULT_MAX_SERIES_TERMS,
    clamp_tolerance: float = CLAMP_TOLERANCE,
) -> LevelProbabilityProfile:
    """Solve p_h = Σ_k rho(p_{h+1})^k p(k) backwards from p_N = 1.

    Args:
        model: Homogeneous in-degree distribution p(k).
        depth: Horizon N (>= 1).
        q: Support probability.
        method: ``closed`` uses the Poisson generating function, ``series``
            the truncated sum, ``auto`` the closed form when available.
        tolerance: Tail mass below which the series is truncated.
        max_terms: Upper bound on series length.
        clamp_tolerance: Overshoot past [0, 1] accepted as rounding error.

    Returns:
        Full profile over levels 0..N.
    """
    _check_q(q)
    if depth < 1:
        raise InvalidModelError(f"depth must be >= 1, got {depth}")

    use_closed = method == "closed" or (method == "auto" and isinstance(model, Poisson))
    if use_closed:
        if not isinstance(model, Poisson):
            raise InvalidModelError("closed-form solving is only available for Poisson models")
        p = {depth: 1.0}
        for h in range(depth - 1, -1, -1):
            p[h] = _clamp(model.pgf(rho(p[h + 1], q)), clamp_tolerance)
        metadata: dict[str, Any] = {"method": "closed"}
    else:
        p, metadata = _series_recurrence(
            model, depth, q, tolerance, max_terms, clamp_tolerance
        )
        metadata["method"] = "series"

    metadata.update({"q": q, "model": model.to_dict()})
    return LevelProbabilityProfile(
        depth=depth, p=dict(sorted(p.items())), variant=ProfileVariant.FULL, metadata=metadata
    )


# --- Regimes ---


def parity_order(depth: int) -> list[int]:
    """Even distances from the deepest level first, then odd ones."""
    even = list(range(depth, -1, -2))
    odd = list(range(depth - 1, -1, -2))
    return even + odd


def classify_regime(
    q: float, epsilon: float = DEFAULT_REGIME_EPSILON, depth: int | None = None
) -> RegimeReport:
    """Classify q against 1/2.

    With ``depth`` given, the report carries the level order suited to the
    regime; otherwise the order is empty.
    """
    _check_q(q)
    if abs(q - 0.5) <= epsilon:
        regime = Regime.FLAT
        order = [] if depth is None else [depth, *range(depth)]
    elif q < 0.5:
        regime = Regime.OSCILLATORY
        order = [] if depth is None else parity_order(depth)
    else:
        regime = Regime.MONOTONE_DECAY
        order = [] if depth is None else list(range(depth, -1, -1))
    return RegimeReport(q=q, regime=regime, recommended_order=order, epsilon=epsilon)


def regime_tolerance(q_hat: float, edges: int) -> float:
    """Half-width 1.96 sqrt(q̂(1-q̂)/E) of the q̂ confidence interval."""
    _check_q(q_hat)
    if edges <= 0:
        raise NoEdgesError("regime tolerance needs at least one edge")
    return 1.96 * math.sqrt(q_hat * (1.0 - q_hat) / edges)


@dataclass(frozen=True)
class RegimeCheck:
    """Whether a Full profile behaves as its regime predicts."""

    regime: Regime
    holds: bool
    violations: list[int] = field(default_factory=list)

    def to_dict(self) -> dict[str, Any]:
        return {"regime": self.regime.value, "holds": self.holds, "violations": self.violations}


def regime_predicates(
    profile: LevelProbabilityProfile,
    q: float,
    epsilon: float = DEFAULT_REGIME_EPSILON,
    tolerance: float = FLAT_TOLERANCE,
) -> RegimeCheck:
    """Check the per-regime shape of a homogeneous Full profile.

    flat: p_h constant for h < N. oscillatory: p_{N-1} < p_N and the sign
    of p_h - p_{h+1} alternates. monotone-decay: p_h < p_{h+1} for all h < N.
    Violations list the offending levels h.
    """
    regime = classify_regime(q, epsilon).regime
    n = profile.depth
    p = profile.p
    violations: list[int] = []

    if regime is Regime.FLAT:
        ref = p[n - 1]
        violations = [h for h in range(n) if abs(p[h] - ref) > tolerance]
    elif regime is Regime.MONOTONE_DECAY:
        violations = [h for h in range(n) if not p[h] < p[h + 1]]
    else:
        for h in range(n):
            delta = p[h] - p[h + 1]
            # h = N-1 is negative, then signs alternate
            expected_negative = (n - 1 - h) % 2 == 0
            if (expected_negative and not delta < 0) or (not expected_negative and not delta > 0):
                violations.append(h)

    return RegimeCheck(regime=regime, holds=not violations, violations=violations)


def oscillation_amplitude(
    profile: LevelProbabilityProfile, levels: Iterable[int] | None = None
) -> dict[int, float]:
    """|p_h - p_{h+1}| for every h where both levels are in the profile."""
    wanted = set(profile.p) if levels is None else set(levels)
    return {
        h: abs(profile.p[h] - profile.p[h + 1])
        for h in profile.levels()
        if h in wanted and h + 1 in profile.p
    }


# --- Bounds ---


def bound_profiles(
    p0: float, depth: int, q: float, clamp_tolerance: float = CLAMP_TOLERANCE
) -> tuple[LevelProbabilityProfile, LevelProbabilityProfile, CobwebTrace]:
    """Upper and lower bounds on p_h from the leaf probability alone.

    The upper bound iterates p_h = p0 + rho(p_{h+1})(1 - p0) from 1; the
    lower bound is p0 below the horizon.
    """
    _check_q(q)
    if math.isnan(p0) or not 0.0 <= p0 < 1.0:
        raise InvalidProbabilityError(f"p0 must lie in [0, 1), got {p0}")
    if depth < 1:
        raise InvalidModelError(f"depth must be >= 1, got {depth}")

    upper = {depth: 1.0}
    steps: list[tuple[float, float]] = []
    for h in range(depth - 1, -1, -1):
        upper[h] = _clamp(p0 + rho(upper[h + 1], q) * (1.0 - p0), clamp_tolerance)
        steps.append((upper[h + 1], upper[h]))

    lower = {h: p0 for h in range(depth)}
    lower[depth] = 1.0

    meta = {"p0": p0, "q": q}
    return (
        LevelProbabilityProfile(
            depth, dict(sorted(upper.items())), ProfileVariant.UPPER_BOUND, meta
        ),
        LevelProbabilityProfile(depth, lower, ProfileVariant.LOWER_BOUND, dict(meta)),
        CobwebTrace(p0=p0, q=q, steps=steps),
    )


# --- Leaf-removed recurrence ---


def _nonleaf_generating(model: DegreeModel, x: float, tolerance: float, max_terms: int) -> float:
    series = model.series(tolerance, max_terms)
    mask = series.ks >= 1
    return float(np.dot(np.power(x, series.ks[mask]), series.masses[mask]))


def solve_recurrence_no_leaves(
    depth: int,
    q: float,
    *,
    model: DegreeModel | None = None,
    level_models: Mapping[int, DegreeModel] | None = None,
    tolerance: float = DEFAULT_SERIES_TOLERANCE,
    max_terms: int = DEFAULT_MAX_SERIES_TERMS,
    clamp_tolerance: float = CLAMP_TOLERANCE,
) -> LevelProbabilityProfile:
    """Winning probability of non-leaf nodes per level.

    p_h^nl = Σ_{k>=1} rho(P_{h+1})^k p(k|h) / (1 - p(0|h)), where
    P_{h+1} = p(0|h+1) + (1 - p(0|h+1)) p_{h+1}^nl and level N holds only
    leaves. With a homogeneous ``model``, p(k|h) = p(k) for h < N;
    otherwise ``level_models`` gives p(k|h) for every h < N.

    Levels whose nodes are all leaves are omitted.

    Raises:
        MissingLeafProfileError: Neither input is given or a level is missing.
    """
    _check_q(q)
    if depth < 1:
        raise InvalidModelError(f"depth must be >= 1, got {depth}")
    if model is None and level_models is None:
        raise MissingLeafProfileError("need a homogeneous model or per-level models")

    def model_at(h: int) -> DegreeModel:
        if model is not None:
            return model
        assert level_models is not None
        if h not in level_models:
            raise MissingLeafProfileError(f"no degree distribution for level {h}")
        return level_models[h]

    p_nl: dict[int, float] = {}
    leaf_probs: dict[int, float] = {depth: 1.0}
    # probability that a node at level h+1 wins, leaves included
    win_below = 1.0
    for h in range(depth - 1, -1, -1):
        m = model_at(h)
        p0 = m.pmf(0)
        leaf_probs[h] = p0
        if p0 >= 1.0:
            win_below = 1.0
            continue
        value = _nonleaf_generating(m, rho(win_below, q), tolerance, max_terms) / (1.0 - p0)
        # rounding in the unnormalised sum is scaled by 1 / (1 - p0)
        p_nl[h] = _clamp(value, clamp_tolerance / (1.0 - p0))
        win_below = p0 + (1.0 - p0) * p_nl[h]

    return LevelProbabilityProfile(
        depth=depth,
        p=dict(sorted(p_nl.items())),
        variant=ProfileVariant.LEAF_REMOVED,
        metadata={"q": q, "leaf_probabilities": dict(sorted(leaf_probs.items()))},
    )


# --- Approximation from per-tree observables ---


@dataclass(frozen=True)
class TreeObservables:
    """Per-level observables of one tree, keyed by level h."""

    depth: int
    alignment_depth: int
    leaf_fraction: dict[int, float]
    mean_in_degree: dict[int, float]
    q_hat: float | None = None

    def to_dict(self) -> dict[str, Any]:
        return {
            "depth": self.depth,
            "alignment_depth": self.alignment_depth,
            "q_hat": self.q_hat,
            "leaf_fraction": self.leaf_fraction,
            "mean_in_degree": self.mean_in_degree,
        }


def tree_approximation(obs: TreeObservables, q: float) -> dict[int, float]:
    """Leaf-removed winning probability of one tree from its observables.

    ``obs.mean_in_degree`` holds replies per non-leaf node; levels missing
    from it have only leaves and get no value.
    """
    _check_q(q)
    values: dict[int, float] = {}
    for h in range(obs.depth - 1, -1, -1):
        if h not in obs.mean_in_degree:
            continue
        leaf_next = obs.leaf_fraction.get(h + 1, 1.0)
        # probability that a replier at h+1 wins, leaves included
        if leaf_next >= 1.0:
            x = 1.0
        else:
            x = leaf_next + (1.0 - leaf_next) * values[h + 1]
        bracket = q * x + (1.0 - q) * (1.0 - x)
        values[h] = _clamp(bracket ** obs.mean_in_degree[h])
    return values


def approx_no_leaves(
    observables: Sequence[TreeObservables],
    q: float | None = None,
    min_trees: int = 1,
) -> LevelProbabilityProfile:
    """Average the per-tree leaf-removed approximation over an ensemble.

    Each tree is evaluated with ``q`` when given, otherwise with its own q̂.
    Values are averaged per distance from the tree's alignment level and
    keys with fewer than ``min_trees`` contributing trees are dropped.

    Raises:
        InsufficientLevelsError: No tree has a level below its root.
    """
    sums: dict[int, float] = {}
    counts: dict[int, int] = {}
    for obs in observables:
        if obs.depth < 1:
            continue
        q_tree = q if q is not None else obs.q_hat
        if q_tree is None:
            continue
        for h, value in tree_approximation(obs, q_tree).items():
            d = obs.alignment_depth - h
            sums[d] = sums.get(d, 0.0) + value
            counts[d] = counts.get(d, 0) + 1

    kept = {d: sums[d] / counts[d] for d in sums if counts[d] >= min_trees}
    if not kept:
        raise InsufficientLevelsError("no tree contributes a level below its root")

    top = max(kept)
    return LevelProbabilityProfile(
        depth=top,
        p={top - d: kept[d] for d in sorted(kept, reverse=True)},
        variant=ProfileVariant.APPROXIMATE,
        metadata={
            "q": q,
            "n_trees": {str(d): counts[d] for d in sorted(kept)},
        },
    )


# --- Sampling recommendations ---


def _merge_profiles(profiles: Sequence[LevelProbabilityProfile]) -> LevelProbabilityProfile:
    if len(profiles) == 1:
        return profiles[0]
    depth = max(p.depth for p in profiles)
    sums: dict[int, float] = {}
    counts: dict[int, int] = {}
    for prof in profiles:
        shift = depth - prof.depth
        for h, value in prof.p.items():
            sums[h + shift] = sums.get(h + shift, 0.0) + value
            counts[h + shift] = counts.get(h + shift, 0) + 1
    merged = {h: sums[h] / counts[h] for h in sorted(sums)}
    return LevelProbabilityProfile(depth, merged, profiles[0].variant)


def recommend_sampling(
    profiles: LevelProbabilityProfile | Sequence[LevelProbabilityProfile],
    q_hat: float,
    structure: StructureHint = StructureHint.SCALE_FREE,
    epsilon: float = DEFAULT_REGIME_EPSILON,
) -> RegimeReport:
    """Order levels so the winners are read first.

    Homogeneous trees with q̂ <= 0.4 are read by parity from the deepest
    level. Otherwise levels go by descending estimated probability, deeper
    level first on ties. A flat profile gives the deepest level followed
    by the rest in index order.
    """
    items = [profiles] if isinstance(profiles, LevelProbabilityProfile) else list(profiles)
    if not items:
        raise InsufficientLevelsError("recommend_sampling needs at least one profile")
    profile = _merge_profiles(items)
    regime = classify_regime(q_hat, epsilon).regime
    levels = profile.levels()
    deepest = max(levels)
    p = profile.p

    interior = [p[h] for h in levels if h != deepest]
    degenerate = all(v >= 1.0 - CLAMP_TOLERANCE for v in p.values())
    flat = not interior or max(interior) - min(interior) <= FLAT_TOLERANCE

    if degenerate or flat:
        order = [deepest, *(h for h in levels if h != deepest)]
        strategy = "flat"
    elif structure is StructureHint.HOMOGENEOUS and q_hat <= PARITY_Q_MAX:
        order = [h for h in parity_order(deepest) if h in p]
        strategy = "parity"
    else:
        order = sorted(levels, key=lambda h: (-p[h], -h))
        strategy = "descending"

    if degenerate:
        logger.warning("Profile is constant 1; ordering carries no information")

    return RegimeReport(
        q=q_hat,
        regime=regime,
        recommended_order=order,
        probabilities={h: p[h] for h in order},
        epsilon=epsilon,
        degenerate=degenerate,
        strategy=strategy,
    )


def profile_from_rows(rows: Iterable[Mapping[str, Any]]) -> LevelProbabilityProfile:
    """Rebuild a profile from profile-CSV rows or EnsembleStats CSV rows.

    Profile rows carry ``level`` and ``p``; stats rows carry
    ``distance_from_max`` and ``p_win`` and are keyed by distance.
    """
    rows = list(rows)
    if not rows:
        raise InsufficientLevelsError("no rows to build a profile from")
    if "p_win" in rows[0]:
        by_d = {int(r["distance_from_max"]): float(r["p_win"]) for r in rows}
        top = max(by_d)
        return LevelProbabilityProfile(
            depth=top,
            p={top - d: v for d, v in sorted(by_d.items(), reverse=True)},
            variant=ProfileVariant.EMPIRICAL,
        )
    variant = ProfileVariant(rows[0].get("variant") or ProfileVariant.FULL.value)
    p = {int(r["level"]): float(r["p"]) for r in rows}
    depth = max(int(r["level"]) + int(r["distance_from_max"]) for r in rows)
    return LevelProbabilityProfile(depth=depth, p=dict(sorted(p.items())), variant=variant)
