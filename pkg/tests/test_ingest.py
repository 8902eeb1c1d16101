"""Tests for ingest module."""

from __future__ import annotations

import json
import tarfile
import zipfile
from pathlib import Path

import numpy as np
import pytest

from argwin.errors import InsufficientTailError, TreeValidationError, UnreadablePathError
from argwin.generators import PowerLaw, child_rng
from argwin.ingest import (
    SupportClass,
    bin_by_support,
    bins_to_dict,
    classify_support,
    export_corpus,
    fit_power_law,
    load_corpus,
    load_tree_file,
    pooled_in_degrees,
    tree_from_clean_document,
    validate_document,
)
from argwin.reply_tree import ReplyTree, build_tree

from .conftest import RandomTreeFactory

KEPT = ["balanced-long", "balanced", "high-support", "low-support"]


class TestValidateDocument:
    def test_valid(self) -> None:
        assert validate_document({"nodes": [{"id": "r", "parent": None}]}) == []

    def test_missing_nodes(self) -> None:
        assert validate_document({"tree_id": "x"})

    def test_bad_polarity(self) -> None:
        doc = {"nodes": [{"id": "r"}, {"id": "x", "parent": "r", "polarity": "agree"}]}
        problems = validate_document(doc)
        assert problems and problems[0].startswith("nodes/1/polarity")


class TestCleanDocument:
    def _doc(self, flagged: dict[str, object]) -> dict[str, object]:
        return {
            "nodes": [
                {"id": "r", "parent": None, "text": "root"},
                {"id": "a", "parent": "r", "polarity": "attack", **flagged},
                {"id": "b", "parent": "a", "polarity": "support"},
                {"id": "c", "parent": "r", "polarity": "support"},
            ]
        }

    def test_strict_rejects_deleted(self) -> None:
        with pytest.raises(TreeValidationError):
            tree_from_clean_document(self._doc({"deleted": True}), "t")

    def test_lenient_prunes_subtree(self) -> None:
        tree, pruned = tree_from_clean_document(self._doc({"deleted": True}), "t", strict=False)
        assert pruned == 2
        assert sorted(tree.nodes) == ["c", "r"]

    def test_blank_text_is_flagged(self) -> None:
        tree, pruned = tree_from_clean_document(self._doc({"text": "   "}), "t", strict=False)
        assert pruned == 2
        assert tree.size == 2

    def test_flagged_root(self) -> None:
        doc = {"nodes": [{"id": "r", "parent": None, "deleted": True}]}
        with pytest.raises(TreeValidationError, match="root"):
            tree_from_clean_document(doc, "t", strict=False)

    def test_tree_id_falls_back_to_name(self) -> None:
        tree, _ = tree_from_clean_document({"nodes": [{"id": "r"}]}, "from-name")
        assert tree.tree_id == "from-name"


class TestLoadTreeFile:
    def test_bipolar_five(self, data_dir: Path) -> None:
        tree = load_tree_file(data_dir / "trees" / "bipolar-five.json")
        assert tree.tree_id == "bipolar-five"
        assert tree.size == 5

    def test_not_json(self, tmp_path: Path) -> None:
        bad = tmp_path / "bad.json"
        bad.write_text("{nope", encoding="utf-8")
        with pytest.raises(UnreadablePathError):
            load_tree_file(bad)


class TestLoadCorpus:
    def test_example_corpus_strict(self, example_corpus: Path) -> None:
        trees, report = load_corpus(example_corpus)
        assert [t.tree_id for t in trees] == KEPT
        assert report.trees_in == 7
        assert report.removed_malformed == 2
        assert report.removed_small == 1
        assert report.trees_out == 4
        assert {e["file"] for e in report.errors} == {
            "balanced-deleted.json",
            "missing-polarity.json",
        }
        kinds = {e["file"]: e["error"] for e in report.errors}
        assert kinds["missing-polarity.json"] == "MissingPolarity"

    def test_example_corpus_lenient(self, example_corpus: Path) -> None:
        trees, report = load_corpus(example_corpus, strict=False)
        # pruning leaves balanced-deleted with 19 nodes
        assert report.removed_malformed == 1
        assert report.removed_small == 2
        assert [t.tree_id for t in trees] == KEPT

    def test_report_summary(self, example_corpus: Path) -> None:
        _, report = load_corpus(example_corpus)
        doc = report.to_dict()
        assert doc["q_hat"]["high-support"] == pytest.approx(21 / 24)
        assert doc["summary"]["size"]["mean"] == pytest.approx((31 + 23 + 25 + 24) / 4)

    def test_size_boundary(self, tmp_path: Path, random_tree: RandomTreeFactory) -> None:
        export_corpus([random_tree(19, 0.5, 1), random_tree(20, 0.5, 2)], tmp_path)
        trees, report = load_corpus(tmp_path, min_size=20)
        assert [t.size for t in trees] == [20]
        assert report.removed_small == 1

    def test_empty_directory(self, tmp_path: Path) -> None:
        trees, report = load_corpus(tmp_path)
        assert trees == []
        assert report.trees_in == 0

    def test_missing_path(self, tmp_path: Path) -> None:
        with pytest.raises(UnreadablePathError):
            load_corpus(tmp_path / "absent")

    def test_unsupported_file(self, tmp_path: Path) -> None:
        f = tmp_path / "corpus.txt"
        f.write_text("x", encoding="utf-8")
        with pytest.raises(UnreadablePathError):
            load_corpus(f)

    def test_zip_archive(self, tmp_path: Path, example_corpus: Path) -> None:
        archive = tmp_path / "corpus.zip"
        with zipfile.ZipFile(archive, "w") as zf:
            for f in sorted(example_corpus.glob("*.json")):
                zf.write(f, arcname=f"corpus/{f.name}")
        trees, report = load_corpus(archive)
        assert [t.tree_id for t in trees] == KEPT
        assert report.trees_in == 7

    def test_tar_archive(self, tmp_path: Path, example_corpus: Path) -> None:
        archive = tmp_path / "corpus.tar.gz"
        with tarfile.open(archive, "w:gz") as tf:
            for f in sorted(example_corpus.glob("*.json")):
                tf.add(f, arcname=f.name)
        trees, report = load_corpus(archive)
        assert report.trees_out == 4
        assert [t.tree_id for t in trees] == KEPT

    def test_export_then_load(self, tmp_path: Path, random_tree: RandomTreeFactory) -> None:
        originals = [random_tree(25, 0.3, seed) for seed in range(5)]
        written = export_corpus(originals, tmp_path)
        assert len(written) == 5
        assert json.loads(written[0].read_text(encoding="utf-8"))["tree_id"] == "random-0"
        loaded, _ = load_corpus(tmp_path)
        assert sorted(loaded, key=lambda t: t.tree_id) == originals


class TestSupportClasses:
    @pytest.mark.parametrize(
        ("q", "expected"),
        [
            (0.0, SupportClass.LOW),
            (0.2, SupportClass.LOW),
            (0.3, SupportClass.UNCLASSIFIED),
            (0.4, SupportClass.BALANCED),
            (0.6, SupportClass.BALANCED),
            (0.7, SupportClass.UNCLASSIFIED),
            (0.8, SupportClass.HIGH),
            (1.0, SupportClass.HIGH),
        ],
    )
    def test_inclusive_bounds(self, q: float, expected: SupportClass) -> None:
        assert classify_support(q) is expected

    def test_example_corpus_bins(self, example_corpus: Path) -> None:
        trees, _ = load_corpus(example_corpus)
        bins = bins_to_dict(bin_by_support(trees))
        assert bins == {
            "low": ["low-support"],
            "balanced": ["balanced-long", "balanced"],
            "high": ["high-support"],
            "unclassified": [],
        }

    def test_root_only_skipped(self) -> None:
        bins = bin_by_support([build_tree([("r", None, None)])])
        assert all(not members for members in bins.values())


class TestFitPowerLaw:
    @pytest.fixture(scope="class")
    def draws(self) -> list[int]:
        return [int(k) for k in PowerLaw(3.05, k_min=17).sample(child_rng(17, 0), 100_000)]

    def test_recovers_exponent(self, draws: list[int]) -> None:
        fit = fit_power_law(draws)
        assert abs(fit.alpha - 3.05) < 0.15
        assert fit.n_samples == 100_000

    def test_fixed_k_min(self, draws: list[int]) -> None:
        fit = fit_power_law(draws, k_min=17)
        assert fit.k_min == 17
        assert fit.n_tail == 100_000
        assert abs(fit.alpha - 3.05) < 0.05

    def test_geometric_data_fits_worse(self, draws: list[int]) -> None:
        geometric = child_rng(5, 0).geometric(0.3, 100_000).tolist()
        power = fit_power_law(draws, k_min=17)
        other = fit_power_law(geometric, k_min=1)
        assert power.ks_distance < other.ks_distance

    def test_duplication_invariance(self, draws: list[int]) -> None:
        once = fit_power_law(draws[:5000], k_min=17)
        twice = fit_power_law(draws[:5000] * 2, k_min=17)
        assert twice.alpha == pytest.approx(once.alpha, abs=1e-5)
        assert twice.ks_distance == pytest.approx(once.ks_distance, abs=1e-5)

    def test_ignores_zero_degrees(self) -> None:
        sample = [1, 2, 3, 1, 1, 2, 5] * 10
        assert fit_power_law(sample + [0] * 100).n_samples == fit_power_law(sample).n_samples

    def test_too_few_samples(self) -> None:
        with pytest.raises(InsufficientTailError):
            fit_power_law([1, 2, 3])

    def test_tail_too_short(self) -> None:
        with pytest.raises(InsufficientTailError):
            fit_power_law([1] * 60 + [5] * 10, k_min=5)

    def test_to_dict(self) -> None:
        fit = fit_power_law(np.arange(1, 101).tolist(), min_tail=10)
        assert set(fit.to_dict()) == {"alpha", "k_min", "ks_distance", "n_tail", "n_samples"}


class TestPooledInDegrees:
    def test_bipolar_five(self, bipolar_five: ReplyTree) -> None:
        assert sorted(pooled_in_degrees([bipolar_five])) == [1, 1, 2]
