"""Shared fixtures for argwin tests."""

from __future__ import annotations

from collections.abc import Callable
from pathlib import Path

import numpy as np
import pytest

from argwin.reply_tree import ReplyTree, build_tree
from argwin.semantics import AttackGraph

RandomTreeFactory = Callable[[int, float, int], ReplyTree]


@pytest.fixture
def project_root() -> Path:
    """Return the project root directory."""
    return Path(__file__).resolve().parent.parent


@pytest.fixture
def config_dir(project_root: Path) -> Path:
    """Return the config directory."""
    return project_root / "config"


@pytest.fixture
def data_dir(project_root: Path) -> Path:
    """Return the shipped data directory."""
    return project_root / "data"


@pytest.fixture
def example_corpus(data_dir: Path) -> Path:
    """Return the small example corpus shipped with the repo."""
    return data_dir / "example_corpus"


@pytest.fixture
def bipolar_five() -> ReplyTree:
    """b supports a, c attacks b, e supports b, d supports c."""
    return build_tree(
        [
            ("a", None, None),
            ("b", "a", "support"),
            ("c", "b", "attack"),
            ("e", "b", "support"),
            ("d", "c", "support"),
        ],
        tree_id="bipolar-five",
    )


@pytest.fixture
def attack_chain_af() -> AttackGraph:
    """e and d unattacked, d attacks c, c and e attack b, b attacks a."""
    return AttackGraph.from_pairs(
        ["a", "b", "c", "d", "e"],
        [("e", "b"), ("d", "c"), ("c", "b"), ("b", "a")],
    )


@pytest.fixture
def mutual_attack_af() -> AttackGraph:
    """a and b attack each other, b attacks c."""
    return AttackGraph.from_pairs(["a", "b", "c"], [("a", "b"), ("b", "a"), ("b", "c")])


@pytest.fixture
def random_tree() -> RandomTreeFactory:
    """Random recursive tree: node i replies to a uniform earlier node."""

    def make(size: int, q: float, seed: int) -> ReplyTree:
        rng = np.random.default_rng(seed)
        records: list[tuple[str, str | None, str | None]] = [("n0", None, None)]
        for i in range(1, size):
            parent = int(rng.integers(0, i))
            polarity = "support" if rng.random() < q else "attack"
            records.append((f"n{i}", f"n{parent}", polarity))
        return build_tree(records, tree_id=f"random-{seed}")

    return make
