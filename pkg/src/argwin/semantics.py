"""Winning and losing arguments on reply trees.

Two routes to the winners are provided:

  1. Reduce the BAF to an attack-only AF (support-defeat and indirect
     defeat) and run the grounded fixed point.
  2. Propagate states s_i in {+1, -1} from the deepest level to the root
     using the sign matrix J.

Under the grounded rule the routes agree whenever the reduction is run
without support-defeat; see ``reduce_baf_to_af``.

Route 2 also implements the relaxed rules that dampen the influence of
unanswered replies: leaves-only exception, majority and generalized
majority.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Iterable
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Any

import networkx as nx

from argwin.errors import InvalidModelError, NotAcyclicError, TooLargeError
from argwin.reply_tree import Polarity, ReplyTree

logger = logging.getLogger(__name__)

DEFAULT_TIE_TOLERANCE = 1e-12
ORACLE_MAX_ARGUMENTS = 20

SignMatrix = dict[tuple[str, str], int]


class RuleKind(str, Enum):
    """Rules for deciding an interior node from its repliers."""

    GROUNDED = "grounded"
    LEAVES_EXCEPTION = "leaves-exception"
    MAJORITY = "majority"
    GEN_MAJORITY = "gen-majority"


@dataclass(frozen=True)
class WinningRule:
    """A winning rule.

    ``beta`` and ``tie_tolerance`` are only read by the generalized majority;
    a non-integer beta sum within ``tie_tolerance`` of zero is a tie.
    """

    kind: RuleKind = RuleKind.GROUNDED
    beta: float = 0.0
    tie_tolerance: float = DEFAULT_TIE_TOLERANCE

    def __post_init__(self) -> None:
        if not math.isfinite(self.beta) or self.beta < 0:
            raise InvalidModelError(f"beta must be finite and >= 0, got {self.beta}")
        if not self.tie_tolerance >= 0:
            raise InvalidModelError(f"tie_tolerance must be >= 0, got {self.tie_tolerance}")

    @property
    def name(self) -> str:
        if self.kind is RuleKind.GEN_MAJORITY:
            return f"{self.kind.value}:{self.beta:g}"
        return self.kind.value

    @classmethod
    def parse(
        cls, name: str, beta: float = 0.0, tie_tolerance: float = DEFAULT_TIE_TOLERANCE
    ) -> WinningRule:
        """Parse a CLI rule name such as ``grounded`` or ``gen-majority``."""
        try:
            kind = RuleKind(name.strip().lower())
        except ValueError as exc:
            valid = ", ".join(k.value for k in RuleKind)
            raise InvalidModelError(f"Unknown rule '{name}'. Must be one of {valid}") from exc
        beta = beta if kind is RuleKind.GEN_MAJORITY else 0.0
        return cls(kind=kind, beta=beta, tie_tolerance=tie_tolerance)


GROUNDED = WinningRule()


@dataclass(frozen=True)
class AttackGraph:
    """An argumentation framework <A, R> with R a set of (attacker, target)."""

    arguments: frozenset[str]
    attacks: frozenset[tuple[str, str]] = field(default_factory=frozenset)

    @classmethod
    def from_pairs(
        cls, arguments: Iterable[str], attacks: Iterable[tuple[str, str]]
    ) -> AttackGraph:
        args = frozenset(arguments)
        pairs = frozenset(attacks)
        for a, b in pairs:
            if a not in args or b not in args:
                raise ValueError(f"Attack ({a}, {b}) mentions an unknown argument")
        return cls(arguments=args, attacks=pairs)

    def attackers(self) -> dict[str, set[str]]:
        result: dict[str, set[str]] = {a: set() for a in self.arguments}
        for a, b in self.attacks:
            result[b].add(a)
        return result

    def to_digraph(self) -> nx.DiGraph:
        graph = nx.DiGraph()
        graph.add_nodes_from(sorted(self.arguments))
        graph.add_edges_from(sorted(self.attacks))
        return graph


@dataclass(frozen=True)
class StateAssignment:
    """Winning (+1) or losing (-1) state for every node under a rule."""

    rule: WinningRule
    states: dict[str, int]

    def winners(self) -> list[str]:
        return sorted(i for i, s in self.states.items() if s == 1)

    def to_dict(self) -> dict[str, Any]:
        return {
            "rule": self.rule.name,
            "states": {i: self.states[i] for i in sorted(self.states)},
        }


def sign_matrix(t: ReplyTree) -> SignMatrix:
    """Nonzero entries of J: J[(i, j)] = +1 if i supports j, -1 if i attacks j."""
    return {(reply, target): pol.sign for reply, target, pol in t.edges()}


def _support_sources(t: ReplyTree, node_id: str) -> list[str]:
    """Nodes with a support path ending at ``node_id``."""
    found: list[str] = []
    stack = [node_id]
    while stack:
        current = stack.pop()
        for child in t.children(current):
            if t.nodes[child].polarity is Polarity.SUPPORT:
                found.append(child)
                stack.append(child)
    return found


def _support_targets(t: ReplyTree, node_id: str) -> list[str]:
    """Nodes reached from ``node_id`` along a support path."""
    found: list[str] = []
    node = t.nodes[node_id]
    while node.polarity is Polarity.SUPPORT and node.parent is not None:
        found.append(node.parent)
        node = t.nodes[node.parent]
    return found


def reduce_baf_to_af(t: ReplyTree, support_defeat: bool = True) -> AttackGraph:
    """Flatten supports into derived attacks.

    For every attack (c, b): c also attacks everything b supports along a
    support path (indirect defeat), and everything supporting c along a
    support path also attacks b (support-defeat).

    With ``support_defeat=False`` only direct attacks and indirect defeat
    are kept. That graph's grounded extension equals the winners of
    ``propagate_states`` on every tree. The full graph can differ: a
    supporter of a defeated attacker still defeats the attacker's target.
    """
    attacks: set[tuple[str, str]] = set()
    for reply, target, pol in t.edges():
        if pol is not Polarity.ATTACK:
            continue
        attacks.add((reply, target))
        if support_defeat:
            for source in _support_sources(t, reply):
                attacks.add((source, target))
        for downstream in _support_targets(t, target):
            attacks.add((reply, downstream))
    return AttackGraph(arguments=frozenset(t.nodes), attacks=frozenset(attacks))


def grounded_extension(g: AttackGraph) -> frozenset[str]:
    """Compute the grounded extension by fixed-point iteration.

    Raises:
        NotAcyclicError: The attack graph contains a cycle.
    """
    graph = g.to_digraph()
    if not nx.is_directed_acyclic_graph(graph):
        cycle = nx.find_cycle(graph)
        raise NotAcyclicError(f"Attack graph has a cycle through {cycle[0][0]}")

    attackers = g.attackers()
    accepted: set[str] = set()
    rejected: set[str] = set()
    undecided = set(g.arguments)

    changed = True
    while changed:
        changed = False
        newly_in = {a for a in undecided if attackers[a] <= rejected}
        if newly_in:
            accepted |= newly_in
            undecided -= newly_in
            changed = True
        newly_out = {a for a in undecided if attackers[a] & accepted}
        if newly_out:
            rejected |= newly_out
            undecided -= newly_out
            changed = True

    return frozenset(accepted)


def _sign(total: float | Fraction, tolerance: float = 0.0) -> int:
    # sign(0) is a loss: a node not strictly carried by its repliers loses
    return 1 if total > tolerance else -1


def _generalized_weight_sum(
    t: ReplyTree,
    repliers: tuple[str, ...],
    states: dict[str, int],
    beta: float,
    tie_tolerance: float,
) -> tuple[float | Fraction, float]:
    """Weighted sum of J s (k+1)^(s beta) and the tolerance to compare it with."""
    if float(beta).is_integer():
        b = int(beta)
        exact = Fraction(0)
        for j in repliers:
            s = states[j]
            base = (t.nodes[j].in_degree + 1) ** b
            weight = Fraction(base) if s == 1 else Fraction(1, base)
            exact += t.nodes[j].polarity.sign * s * weight  # type: ignore[union-attr]
        return exact, 0.0

    terms = [
        t.nodes[j].polarity.sign  # type: ignore[union-attr]
        * states[j]
        * (t.nodes[j].in_degree + 1) ** (states[j] * beta)
        for j in repliers
    ]
    return math.fsum(terms), tie_tolerance


def _evaluate(
    t: ReplyTree, repliers: tuple[str, ...], states: dict[str, int], rule: WinningRule
) -> int:
    def term(j: str) -> int:
        return t.nodes[j].polarity.sign * states[j]  # type: ignore[union-attr]

    if rule.kind is RuleKind.GROUNDED:
        return min(term(j) for j in repliers)

    if rule.kind is RuleKind.LEAVES_EXCEPTION:
        inner = [j for j in repliers if not t.is_leaf(j)]
        return min(term(j) for j in (inner or repliers))

    if rule.kind is RuleKind.MAJORITY:
        return _sign(sum(term(j) for j in repliers))

    total, tolerance = _generalized_weight_sum(
        t, repliers, states, rule.beta, rule.tie_tolerance
    )
    if abs(total) <= tolerance:
        return -1
    return _sign(total)


def propagate_states(t: ReplyTree, rule: WinningRule = GROUNDED) -> StateAssignment:
    """Assign +1/-1 to every node, from level N up to the root.

    Leaves always win. Levels are processed deepest first; nodes within a
    level do not depend on each other.
    """
    states: dict[str, int] = {}
    for h in range(t.depth, -1, -1):
        for node_id in t.levels[h]:
            repliers = t.children(node_id)
            states[node_id] = 1 if not repliers else _evaluate(t, repliers, states, rule)
    return StateAssignment(rule=rule, states=states)


def enumerate_extensions_oracle(
    g: AttackGraph, max_arguments: int = ORACLE_MAX_ARGUMENTS
) -> list[frozenset[str]]:
    """Brute-force every complete extension of a small AF.

    Test oracle only: enumerates all 2^|A| subsets and keeps those that are
    conflict-free and equal to the set of arguments they defend.

    Raises:
        TooLargeError: More than ``max_arguments`` arguments.
    """
    args = sorted(g.arguments)
    n = len(args)
    if n > max_arguments:
        raise TooLargeError(f"Oracle limited to {max_arguments} arguments, got {n}")

    index = {a: i for i, a in enumerate(args)}
    attackers_mask = [0] * n
    targets_mask = [0] * n
    for a, b in g.attacks:
        attackers_mask[index[b]] |= 1 << index[a]
        targets_mask[index[a]] |= 1 << index[b]

    extensions: list[frozenset[str]] = []
    for subset in range(1 << n):
        attacked = 0
        bits = subset
        while bits:
            low = bits & -bits
            attacked |= targets_mask[low.bit_length() - 1]
            bits ^= low
        if attacked & subset:
            continue
        defended = 0
        for i in range(n):
            if (attackers_mask[i] & ~attacked) == 0:
                defended |= 1 << i
        if defended == subset:
            extensions.append(frozenset(args[i] for i in range(n) if (subset >> i) & 1))

    extensions.sort(key=lambda e: (len(e), sorted(e)))
    return extensions


def extension_to_list(extension: Iterable[str]) -> list[str]:
    """Serialize an extension as a sorted id list."""
    return sorted(extension)


def states_from_extension(
    t: ReplyTree, extension: Iterable[str], rule: WinningRule = GROUNDED
) -> StateAssignment:
    """+1 for members of ``extension``, -1 for every other node of ``t``."""
    members = set(extension)
    return StateAssignment(
        rule=rule, states={i: 1 if i in members else -1 for i in t.nodes}
    )
