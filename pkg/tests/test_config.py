"""Tests for config module."""

from __future__ import annotations

from pathlib import Path

import pytest

from argwin.cli import _rule
from argwin.config import AnalyticsConfig, IngestConfig, detect_env, load_config


class TestDetectEnv:
    def test_explicit_env(self) -> None:
        assert detect_env("prod") == "prod"

    def test_default_env(self, monkeypatch: pytest.MonkeyPatch) -> None:
        monkeypatch.delenv("ARGWIN_ENV", raising=False)
        assert detect_env(None) == "dev"

    def test_env_var(self, monkeypatch: pytest.MonkeyPatch) -> None:
        monkeypatch.setenv("ARGWIN_ENV", "staging")
        assert detect_env(None) == "staging"

    def test_invalid_env(self) -> None:
        with pytest.raises(ValueError, match="Invalid environment"):
            detect_env("invalid")


class TestLoadConfig:
    def test_loads_dev_config(self) -> None:
        config = load_config("dev")
        assert config.env == "dev"
        assert config.logging.level == "DEBUG"
        assert config.paths.output_dir == "out"

    def test_loads_prod_config(self) -> None:
        config = load_config("prod")
        assert config.env == "prod"
        assert config.logging.level == "WARNING"
        assert config.simulation.jobs == 4

    def test_sections_loaded(self) -> None:
        config = load_config("staging")
        assert config.simulation.min_tree_threshold == 10
        assert config.analytics.series_tolerance == 1e-12
        assert config.ingest.min_size == 20
        assert config.ingest.strict is True

    def test_missing_config_raises(self) -> None:
        with pytest.raises(FileNotFoundError):
            load_config("dev", config_dir=Path("/nonexistent"))

    def test_empty_file_uses_defaults(self, tmp_path: Path) -> None:
        (tmp_path / "argwin.dev.yaml").write_text("", encoding="utf-8")
        config = load_config("dev", config_dir=tmp_path)
        assert config.simulation.trees == 1000
        assert config.logging.level == "INFO"

    def test_partial_sections(self, tmp_path: Path) -> None:
        (tmp_path / "argwin.dev.yaml").write_text(
            "ingest:\n  min_size: 5\n  strict: false\n", encoding="utf-8"
        )
        config = load_config("dev", config_dir=tmp_path)
        assert config.ingest.min_size == 5
        assert config.ingest.strict is False
        assert config.ingest.min_tail == 25

    def test_solver_tolerances(self, tmp_path: Path) -> None:
        (tmp_path / "argwin.dev.yaml").write_text(
            "analytics:\n  tie_tolerance: 0.25\n  clamp_tolerance: 1.0e-9\n", encoding="utf-8"
        )
        config = load_config("dev", config_dir=tmp_path)
        assert config.analytics.tie_tolerance == 0.25
        assert config.analytics.clamp_tolerance == 1e-9
        rule = _rule("gen-majority", 0.5, config)
        assert rule.tie_tolerance == 0.25

    def test_bad_section_type(self, tmp_path: Path) -> None:
        (tmp_path / "argwin.dev.yaml").write_text("simulation: 3\n", encoding="utf-8")
        with pytest.raises(ValueError, match="simulation"):
            load_config("dev", config_dir=tmp_path)


class TestDefaults:
    def test_analytics(self) -> None:
        a = AnalyticsConfig()
        assert a.regime_epsilon == 1e-9
        assert a.max_series_terms == 100_000

    def test_ingest(self) -> None:
        i = IngestConfig()
        assert (i.min_size, i.min_samples, i.min_tail) == (20, 50, 25)
