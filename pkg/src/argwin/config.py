"""Environment-aware configuration loader.

Loads YAML config from config/argwin.{env}.yaml. Every section is optional
and falls back to the dataclass defaults.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import yaml

VALID_ENVS = ("dev", "staging", "prod")
ENV_VAR = "ARGWIN_ENV"
PROJECT_ROOT = Path(__file__).resolve().parent.parent.parent


@dataclass(frozen=True)
class PathsConfig:
    """Filesystem paths for outputs."""

    output_dir: str = "out"


@dataclass(frozen=True)
class LoggingConfig:
    """Logging settings."""

    level: str = "INFO"
    format: str = "%(asctime)s [%(levelname)s] %(name)s: %(message)s"


@dataclass(frozen=True)
class SimulationConfig:
    """Ensemble simulation defaults."""

    trees: int = 1000
    min_tree_threshold: int = 10
    jobs: int = 1
    max_depth_attempts: int = 1000


@dataclass(frozen=True)
class AnalyticsConfig:
    """Numerical tolerances of the recurrence solvers."""

    regime_epsilon: float = 1e-9
    series_tolerance: float = 1e-12
    max_series_terms: int = 100_000
    tie_tolerance: float = 1e-12
    clamp_tolerance: float = 1e-12


@dataclass(frozen=True)
class IngestConfig:
    """Corpus cleaning and power-law fitting thresholds."""

    min_size: int = 20
    strict: bool = True
    min_samples: int = 50
    min_tail: int = 25


@dataclass(frozen=True)
class AppConfig:
    """Top-level application configuration."""

    env: str
    paths: PathsConfig = field(default_factory=PathsConfig)
    logging: LoggingConfig = field(default_factory=LoggingConfig)
    simulation: SimulationConfig = field(default_factory=SimulationConfig)
    analytics: AnalyticsConfig = field(default_factory=AnalyticsConfig)
    ingest: IngestConfig = field(default_factory=IngestConfig)


def detect_env(cli_env: str | None = None) -> str:
    """Detect the runtime environment.

    Priority:
      1. Explicit CLI flag
      2. ARGWIN_ENV environment variable
      3. Default to 'dev'
    """
    env = cli_env or os.environ.get(ENV_VAR, "dev")
    if env not in VALID_ENVS:
        raise ValueError(f"Invalid environment '{env}'. Must be one of {VALID_ENVS}")
    return env


def _load_yaml(path: Path) -> dict[str, Any]:
    """Load a YAML file and return its contents as a dict."""
    if not path.exists():
        raise FileNotFoundError(f"Config file not found: {path}")
    with open(path, encoding="utf-8") as f:
        return yaml.safe_load(f) or {}


def _section(raw: dict[str, Any], name: str) -> dict[str, Any]:
    value = raw.get(name) or {}
    if not isinstance(value, dict):
        raise ValueError(f"Config section '{name}' must be a mapping")
    return value


def load_config(
    env: str | None = None,
    config_dir: Path | None = None,
) -> AppConfig:
    """Load and parse the YAML config for the given environment.

    Args:
        env: The environment name (dev/staging/prod). Auto-detected if None.
        config_dir: Override the config directory path.

    Returns:
        Fully resolved AppConfig instance.
    """
    resolved_env = detect_env(env)
    resolved_config_dir = config_dir or PROJECT_ROOT / "config"
    raw = _load_yaml(resolved_config_dir / f"argwin.{resolved_env}.yaml")

    paths_raw = _section(raw, "paths")
    logging_raw = _section(raw, "logging")
    sim_raw = _section(raw, "simulation")
    an_raw = _section(raw, "analytics")
    ing_raw = _section(raw, "ingest")

    return AppConfig(
        env=resolved_env,
        paths=PathsConfig(output_dir=paths_raw.get("output_dir", "out")),
        logging=LoggingConfig(
            level=logging_raw.get("level", "INFO"),
            format=logging_raw.get(
                "format", "%(asctime)s [%(levelname)s] %(name)s: %(message)s"
            ),
        ),
        simulation=SimulationConfig(
            trees=int(sim_raw.get("trees", 1000)),
            min_tree_threshold=int(sim_raw.get("min_tree_threshold", 10)),
            jobs=int(sim_raw.get("jobs", 1)),
            max_depth_attempts=int(sim_raw.get("max_depth_attempts", 1000)),
        ),
        analytics=AnalyticsConfig(
            regime_epsilon=float(an_raw.get("regime_epsilon", 1e-9)),
            series_tolerance=float(an_raw.get("series_tolerance", 1e-12)),
            max_series_terms=int(an_raw.get("max_series_terms", 100_000)),
            tie_tolerance=float(an_raw.get("tie_tolerance", 1e-12)),
            clamp_tolerance=float(an_raw.get("clamp_tolerance", 1e-12)),
        ),
        ingest=IngestConfig(
            min_size=int(ing_raw.get("min_size", 20)),
            strict=bool(ing_raw.get("strict", True)),
            min_samples=int(ing_raw.get("min_samples", 50)),
            min_tail=int(ing_raw.get("min_tail", 25)),
        ),
    )
