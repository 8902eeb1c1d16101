"""Tests for semantics module."""

from __future__ import annotations

import pytest

from argwin.errors import InvalidModelError, NotAcyclicError, TooLargeError
from argwin.reply_tree import ReplyTree, build_tree
from argwin.semantics import (
    GROUNDED,
    AttackGraph,
    RuleKind,
    WinningRule,
    enumerate_extensions_oracle,
    extension_to_list,
    grounded_extension,
    propagate_states,
    reduce_baf_to_af,
    sign_matrix,
    states_from_extension,
)

from .conftest import RandomTreeFactory

MAJORITY = WinningRule(RuleKind.MAJORITY)
LEAVES = WinningRule(RuleKind.LEAVES_EXCEPTION)


def _star(*polarities: str) -> ReplyTree:
    records = [("r", None, None)]
    records += [(f"x{i}", "r", pol) for i, pol in enumerate(polarities)]
    return build_tree(records)


class TestWinningRule:
    def test_parse_names(self) -> None:
        assert WinningRule.parse("grounded") == GROUNDED
        assert WinningRule.parse("gen-majority", 2.0).beta == 2.0
        assert WinningRule.parse("majority", 5.0).beta == 0.0

    def test_parse_unknown(self) -> None:
        with pytest.raises(InvalidModelError):
            WinningRule.parse("preferred")

    def test_negative_beta(self) -> None:
        with pytest.raises(InvalidModelError):
            WinningRule(RuleKind.GEN_MAJORITY, -1.0)

    def test_negative_tie_tolerance(self) -> None:
        with pytest.raises(InvalidModelError):
            WinningRule(RuleKind.GEN_MAJORITY, 0.5, tie_tolerance=-1.0)

    def test_parse_keeps_tie_tolerance(self) -> None:
        assert WinningRule.parse("gen-majority", 0.5, tie_tolerance=0.25).tie_tolerance == 0.25

    def test_name(self) -> None:
        assert WinningRule(RuleKind.GEN_MAJORITY, 0.5).name == "gen-majority:0.5"
        assert LEAVES.name == "leaves-exception"


class TestReduction:
    def test_bipolar_five(self, bipolar_five: ReplyTree) -> None:
        g = reduce_baf_to_af(bipolar_five)
        assert g.arguments == frozenset("abcde")
        assert g.attacks == frozenset({("c", "b"), ("c", "a"), ("d", "b")})

    def test_support_then_attack(self) -> None:
        t = build_tree([("a0", None, None), ("a1", "a0", "support"), ("a2", "a1", "attack")])
        assert reduce_baf_to_af(t).attacks == frozenset({("a2", "a1"), ("a2", "a0")})

    def test_support_chain_propagates(self) -> None:
        t = build_tree(
            [
                ("r", None, None),
                ("s1", "r", "support"),
                ("s2", "s1", "support"),
                ("x", "s2", "attack"),
                ("y", "x", "support"),
                ("z", "y", "support"),
            ]
        )
        attacks = reduce_baf_to_af(t).attacks
        assert {("x", "s2"), ("x", "s1"), ("x", "r")} <= attacks
        assert {("y", "s2"), ("z", "s2")} <= attacks

    def test_attack_only_tree_unchanged(self) -> None:
        t = _star("attack", "attack")
        assert reduce_baf_to_af(t).attacks == frozenset({("x0", "r"), ("x1", "r")})

    def test_sign_matrix(self, bipolar_five: ReplyTree) -> None:
        j = sign_matrix(bipolar_five)
        assert j[("b", "a")] == 1
        assert j[("c", "b")] == -1
        assert len(j) == 4


class TestGroundedExtension:
    def test_attack_chain(self, attack_chain_af: AttackGraph) -> None:
        assert grounded_extension(attack_chain_af) == frozenset({"a", "d", "e"})

    def test_bipolar_five_winners(self, bipolar_five: ReplyTree) -> None:
        ext = grounded_extension(reduce_baf_to_af(bipolar_five))
        assert extension_to_list(ext) == ["c", "d", "e"]

    def test_states_from_extension(self, bipolar_five: ReplyTree) -> None:
        ext = grounded_extension(reduce_baf_to_af(bipolar_five))
        assignment = states_from_extension(bipolar_five, ext)
        assert assignment.winners() == ["c", "d", "e"]
        assert assignment.states["a"] == assignment.states["b"] == -1
        assert assignment.rule == GROUNDED

    def test_cycle_rejected(self, mutual_attack_af: AttackGraph) -> None:
        with pytest.raises(NotAcyclicError):
            grounded_extension(mutual_attack_af)

    def test_unattacked_arguments_accepted(self) -> None:
        g = AttackGraph.from_pairs(["a", "b"], [])
        assert grounded_extension(g) == frozenset({"a", "b"})

    def test_unknown_argument_in_attack(self) -> None:
        with pytest.raises(ValueError):
            AttackGraph.from_pairs(["a"], [("a", "b")])


class TestOracle:
    def test_mutual_attack_complete_extensions(self, mutual_attack_af: AttackGraph) -> None:
        exts = enumerate_extensions_oracle(mutual_attack_af)
        assert exts == [frozenset(), frozenset({"b"}), frozenset({"a", "c"})]

    def test_single_extension_on_chain(self, attack_chain_af: AttackGraph) -> None:
        assert enumerate_extensions_oracle(attack_chain_af) == [frozenset({"a", "d", "e"})]

    def test_too_large(self) -> None:
        g = AttackGraph.from_pairs([f"a{i}" for i in range(21)], [])
        with pytest.raises(TooLargeError):
            enumerate_extensions_oracle(g)


class TestPropagateStates:
    def test_bipolar_five_grounded(self, bipolar_five: ReplyTree) -> None:
        s = propagate_states(bipolar_five)
        assert s.winners() == ["c", "d", "e"]
        assert s.states["a"] == -1

    def test_root_only(self) -> None:
        s = propagate_states(build_tree([("root", None, None)]))
        assert s.winners() == ["root"]

    def test_bipolar_five_majority(self, bipolar_five: ReplyTree) -> None:
        # b ties between a winning attacker and a winning supporter
        s = propagate_states(bipolar_five, MAJORITY)
        assert s.states == {"a": -1, "b": -1, "c": 1, "d": 1, "e": 1}

    def test_majority_differs_from_grounded(self) -> None:
        t = _star("attack", "support", "support")
        assert propagate_states(t).states["r"] == -1
        assert propagate_states(t, MAJORITY).states["r"] == 1

    def test_majority_tie_loses(self) -> None:
        t = _star("attack", "support")
        assert propagate_states(t, MAJORITY).states["r"] == -1

    def test_leaves_exception_ignores_leaf_repliers(self) -> None:
        t = build_tree(
            [("r", None, None), ("a", "r", "attack"), ("b", "r", "support"), ("c", "b", "support")]
        )
        assert propagate_states(t).states["r"] == -1
        assert propagate_states(t, LEAVES).states["r"] == 1

    def test_leaves_exception_all_leaves(self) -> None:
        t = _star("attack", "support")
        assert propagate_states(t, LEAVES).states["r"] == -1

    def test_generalized_zero_matches_majority(self, random_tree: RandomTreeFactory) -> None:
        gen0 = WinningRule(RuleKind.GEN_MAJORITY, 0.0)
        for seed in range(30):
            t = random_tree(25, 0.5, seed)
            assert propagate_states(t, gen0).states == propagate_states(t, MAJORITY).states

    def test_generalized_weights_busy_repliers(self) -> None:
        t = build_tree(
            [
                ("r", None, None),
                ("a", "r", "attack"),
                ("b", "r", "support"),
                ("c", "b", "support"),
                ("d", "b", "support"),
            ]
        )
        # b wins with two replies: weight 3 against the leaf attacker's 1
        assert propagate_states(t, WinningRule(RuleKind.GEN_MAJORITY, 1.0)).states["r"] == 1
        assert propagate_states(t, MAJORITY).states["r"] == -1

    def test_generalized_exact_tie_loses(self) -> None:
        t = _star("attack", "support")
        for beta in (1.0, 0.5):
            rule = WinningRule(RuleKind.GEN_MAJORITY, beta)
            assert propagate_states(t, rule).states["r"] == -1

    def test_tie_tolerance_widens_ties(self) -> None:
        t = build_tree(
            [
                ("r", None, None),
                ("s1", "r", "support"),
                ("s2", "r", "support"),
                ("a", "r", "attack"),
                ("b", "a", "support"),
            ]
        )
        # 1 + 1 - sqrt(2) at the root
        default = WinningRule(RuleKind.GEN_MAJORITY, 0.5)
        wide = WinningRule(RuleKind.GEN_MAJORITY, 0.5, tie_tolerance=0.75)
        assert propagate_states(t, default).states["r"] == 1
        assert propagate_states(t, wide).states["r"] == -1

    @pytest.mark.parametrize("rule", [GROUNDED, MAJORITY, LEAVES])
    def test_leaves_win_and_states_total(
        self, rule: WinningRule, random_tree: RandomTreeFactory
    ) -> None:
        t = random_tree(40, 0.3, 11)
        s = propagate_states(t, rule)
        assert set(s.states) == set(t.nodes)
        assert set(s.states.values()) <= {1, -1}
        assert all(s.states[leaf] == 1 for leaf in t.leaves())

    def test_to_dict(self, bipolar_five: ReplyTree) -> None:
        doc = propagate_states(bipolar_five).to_dict()
        assert doc["rule"] == "grounded"
        assert list(doc["states"]) == ["a", "b", "c", "d", "e"]


class TestEquivalence:
    def test_propagation_matches_grounded_extension(
        self, random_tree: RandomTreeFactory
    ) -> None:
        for seed in range(500):
            size = 5 + seed % 46
            q = (seed * 0.618034) % 1.0
            t = random_tree(size, q, seed)
            g = reduce_baf_to_af(t, support_defeat=False)
            assert propagate_states(t).winners() == extension_to_list(grounded_extension(g)), seed

    def test_support_defeat_of_defeated_attacker(self) -> None:
        t = build_tree(
            [("r", None, None), ("a", "r", "attack"), ("s", "a", "support"), ("x", "a", "attack")]
        )
        assert propagate_states(t).winners() == ["r", "s", "x"]
        assert grounded_extension(reduce_baf_to_af(t, support_defeat=False)) == {"r", "s", "x"}
        # s still defeats r through the attacker it supports
        assert grounded_extension(reduce_baf_to_af(t)) == {"s", "x"}

    def test_both_reductions_agree_on_bipolar_five(self, bipolar_five: ReplyTree) -> None:
        full = grounded_extension(reduce_baf_to_af(bipolar_five))
        assert full == grounded_extension(reduce_baf_to_af(bipolar_five, support_defeat=False))

    def test_oracle_has_one_extension_on_trees(self, random_tree: RandomTreeFactory) -> None:
        for seed in range(200):
            size = 2 + seed % 13
            q = (seed * 0.381966) % 1.0
            t = random_tree(size, q, 1000 + seed)
            g = reduce_baf_to_af(t)
            assert enumerate_extensions_oracle(g) == [grounded_extension(g)], seed
