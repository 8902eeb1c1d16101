"""CLI entry point for argwin.

Provides commands:
  - argwin solve: Winners of a single tree under a winning rule
  - argwin simulate: Per-level statistics of a synthetic ensemble
  - argwin recurrence: Analytic winning-probability profiles and bounds
  - argwin analyze: Clean, bin and evaluate a discussion corpus
  - argwin fit-powerlaw: Fit the in-degree power law of a corpus
  - argwin recommend: Level sampling order from a profile or stats CSV
  - argwin export: Write a synthetic ensemble as a corpus

Failures are reported on stderr as one JSON object. Exit codes: 0 success,
2 input or validation error, 3 empty result.
"""

from __future__ import annotations

import csv
import json
import logging
import sys
from collections.abc import Callable
from pathlib import Path
from typing import Any

import click
import numpy as np

from argwin import __version__
from argwin.analytics import (
    StructureHint,
    approx_no_leaves,
    bound_profiles,
    classify_regime,
    profile_from_rows,
    recommend_sampling,
    regime_predicates,
    regime_tolerance,
    solve_recurrence,
    solve_recurrence_no_leaves,
)
from argwin.config import PROJECT_ROOT, AppConfig, load_config
from argwin.errors import ArgwinError, EmptyEnsembleError, InsufficientLevelsError
from argwin.estimators import STATS_COLUMNS, EnsembleAccumulator, simulate_ensemble, summarize_tree
from argwin.generators import (
    DegreeModel,
    EnsembleSpec,
    GeneratorKind,
    Poisson,
    PowerLaw,
    generate_ensemble,
)
from argwin.ingest import (
    SupportClass,
    bin_by_support,
    bins_to_dict,
    export_corpus,
    fit_power_law,
    load_corpus,
    load_tree_file,
    pooled_in_degrees,
)
from argwin.output import (
    CLEANING_REPORT_SCHEMA,
    POWERLAW_FIT_SCHEMA,
    RECOMMENDATION_SCHEMA,
    STATS_SCHEMA,
    RunManifest,
    validate_document,
    write_csv,
    write_json,
    write_manifest,
)
from argwin.reply_tree import estimate_q
from argwin.semantics import (
    RuleKind,
    WinningRule,
    grounded_extension,
    propagate_states,
    reduce_baf_to_af,
    states_from_extension,
)

logger = logging.getLogger("argwin")

EXIT_INPUT = 2
EXIT_EMPTY = 3

PROFILE_COLUMNS = ("variant", "level", "distance_from_max", "p")
RULE_NAMES = [k.value for k in RuleKind]
ENVS = ["dev", "staging", "prod"]

# JSON config keys that differ from the option's parameter name
_CONFIG_ALIASES = {"lambda": "lam", "k-min": "k_min", "kind": "gen"}


def _setup_logging(level: str, fmt: str) -> None:
    """Configure logging for the CLI."""
    logging.basicConfig(
        level=getattr(logging, level.upper(), logging.INFO),
        format=fmt,
        stream=sys.stderr,
    )


def _resolve_path(path_str: str) -> Path:
    """Resolve a path relative to the project root."""
    p = Path(path_str)
    if p.is_absolute():
        return p
    return (PROJECT_ROOT / p).resolve()


# --- Error reporting ---


class CliError(click.ClickException):
    """A failure rendered as ``{"error": kind, "message": ...}`` on stderr."""

    def __init__(self, kind: str, message: str, exit_code: int = EXIT_INPUT) -> None:
        super().__init__(message)
        self.kind = kind
        self.exit_code = exit_code

    def show(self, file: Any = None) -> None:
        click.echo(json.dumps({"error": self.kind, "message": self.format_message()}), err=True)


class JsonErrorCommand(click.Command):
    """Command whose usage and domain errors become JSON CliErrors."""

    def make_context(
        self,
        info_name: str | None,
        args: list[str],
        parent: click.Context | None = None,
        **extra: Any,
    ) -> click.Context:
        try:
            return super().make_context(info_name, args, parent=parent, **extra)
        except click.UsageError as exc:
            raise CliError("UsageError", exc.format_message()) from exc

    def invoke(self, ctx: click.Context) -> Any:
        try:
            return super().invoke(ctx)
        except CliError:
            raise
        except EmptyEnsembleError as exc:
            raise CliError(exc.kind, str(exc), EXIT_EMPTY) from exc
        except ArgwinError as exc:
            raise CliError(exc.kind, str(exc)) from exc
        except OSError as exc:
            raise CliError("UnreadablePath", str(exc)) from exc
        except ValueError as exc:
            raise CliError("InvalidInput", str(exc)) from exc


class JsonErrorGroup(click.Group):
    command_class = JsonErrorCommand

    def resolve_command(
        self, ctx: click.Context, args: list[str]
    ) -> tuple[str | None, click.Command | None, list[str]]:
        try:
            return super().resolve_command(ctx, args)
        except click.UsageError as exc:
            raise CliError("UsageError", exc.format_message()) from exc


# --- Shared options ---


def _load_json_config(ctx: click.Context, _param: click.Parameter, value: str | None) -> None:
    """Eagerly turn a JSON experiment file into option defaults."""
    if not value:
        return
    try:
        with open(value, encoding="utf-8") as f:
            raw = json.load(f)
    except (OSError, json.JSONDecodeError) as exc:
        raise CliError("UnreadablePath", f"Cannot read config {value}: {exc}") from exc
    if not isinstance(raw, dict):
        raise CliError("InvalidInput", "--config file must hold a JSON object")

    defaults: dict[str, Any] = {}
    model = raw.pop("model", None)
    if isinstance(model, dict):
        defaults["gen"] = model.get("model")
        for key in ("lambda", "alpha", "k_min"):
            if key in model:
                defaults[_CONFIG_ALIASES.get(key, key)] = model[key]
    elif model is not None:
        defaults["model"] = model
    for key, val in raw.items():
        name = _CONFIG_ALIASES.get(key, key).replace("-", "_")
        defaults[name] = val
    if defaults.get("gen") == GeneratorKind.PREFERENTIAL.value:
        defaults["gen"] = "pa"
    if defaults.get("gen") == GeneratorKind.HOMOGENEOUS.value:
        defaults["gen"] = "poisson"
    ctx.default_map = {**(ctx.default_map or {}), **defaults}


def _stack(*decorators: Callable[[Any], Any]) -> Callable[[Any], Any]:
    def apply(func: Any) -> Any:
        for decorator in reversed(decorators):
            func = decorator(func)
        return func

    return apply


env_option = click.option(
    "--env", type=click.Choice(ENVS), default=None, help="Environment (default: dev or ARGWIN_ENV)"
)

config_option = click.option(
    "--config",
    "config_file",
    type=click.Path(dir_okay=False),
    callback=_load_json_config,
    is_eager=True,
    expose_value=False,
    help="JSON file supplying option defaults; flags still win.",
)

rule_options = _stack(
    click.option("--rule", type=click.Choice(RULE_NAMES), default="grounded", show_default=True),
    click.option("--beta", type=float, default=0.0, show_default=True,
                 help="Exponent of the generalized majority rule."),
)

generator_options = _stack(
    click.option("--gen", type=click.Choice(["poisson", "powerlaw", "pa"]), default="poisson",
                 show_default=True, help="Homogeneous Poisson/power-law trees or preferential."),
    click.option("--lambda", "lam", type=float, default=2.0, show_default=True),
    click.option("--alpha", type=float, default=3.0, show_default=True),
    click.option("--k-min", "k_min", type=int, default=1, show_default=True),
    click.option("--depth", type=int, default=8, show_default=True),
    click.option("--nodes", type=int, default=50, show_default=True),
    click.option("--q", type=float, required=True, help="Support probability."),
    click.option("--trees", type=int, default=None, help="Ensemble size (default: config)."),
    click.option("--seed", type=int, envvar="ARGWIN_SEED", default=None,
                 help="Master seed (default: ARGWIN_SEED or fresh entropy)."),
    click.option("--condition-on-depth", is_flag=True, default=False,
                 help="Regenerate homogeneous trees until they reach the depth."),
)


def _rule(rule: str, beta: float, config: AppConfig) -> WinningRule:
    return WinningRule.parse(rule, beta, config.analytics.tie_tolerance)


def _model(gen: str, lam: float, alpha: float, k_min: int) -> DegreeModel:
    if gen == "powerlaw":
        return PowerLaw(alpha, k_min)
    return Poisson(lam)


def _ensemble_spec(
    config: AppConfig,
    *,
    gen: str,
    lam: float,
    alpha: float,
    k_min: int,
    depth: int,
    nodes: int,
    q: float,
    trees: int | None,
    seed: int | None,
    condition_on_depth: bool,
) -> EnsembleSpec:
    if seed is None:
        seed = int(np.random.SeedSequence().entropy)
        logger.info("No seed given; using fresh entropy %d", seed)
    n_trees = trees if trees is not None else config.simulation.trees
    if gen == "pa":
        return EnsembleSpec(
            kind=GeneratorKind.PREFERENTIAL, trees=n_trees, q=q, seed=seed, nodes=nodes
        )
    return EnsembleSpec(
        kind=GeneratorKind.HOMOGENEOUS,
        trees=n_trees,
        q=q,
        seed=seed,
        depth=depth,
        model=_model(gen, lam, alpha, k_min),
        condition_on_depth=condition_on_depth,
        max_attempts=config.simulation.max_depth_attempts,
    )


def _out_dir(out: str | None, config: AppConfig, command: str) -> Path:
    path = Path(out) if out else _resolve_path(config.paths.output_dir) / command
    path.mkdir(parents=True, exist_ok=True)
    return path


def _params(ctx: click.Context) -> dict[str, Any]:
    return {k: (str(v) if isinstance(v, Path) else v) for k, v in sorted(ctx.params.items())}


def _check(doc: Any, schema: dict[str, Any], name: str) -> None:
    if not validate_document(doc, schema, name):
        raise CliError("SchemaValidation", f"{name} does not match its schema")


@click.group(cls=JsonErrorGroup)
@click.version_option(version=__version__)
def main() -> None:
    """Winning arguments in bipolar reply trees."""


# --- solve ---


@main.command()
@click.argument("tree_file", type=click.Path(exists=True, dir_okay=False))
@rule_options
@click.option("--via-af", is_flag=True, default=False,
              help="Compute grounded winners through the reduced AF instead of propagation.")
@click.option("--out", type=click.Path(dir_okay=False), default=None,
              help="Write the states JSON here instead of stdout.")
@env_option
@click.pass_context
def solve(
    ctx: click.Context,
    tree_file: str,
    rule: str,
    beta: float,
    via_af: bool,
    out: str | None,
    env: str | None,
) -> None:
    """Winners and states of a single tree."""
    config = load_config(env=env)
    _setup_logging(config.logging.level, config.logging.format)
    manifest = RunManifest(command="solve", params=_params(ctx))

    tree = load_tree_file(tree_file, strict=config.ingest.strict)
    winning_rule = _rule(rule, beta, config)
    if via_af:
        if winning_rule.kind is not RuleKind.GROUNDED:
            raise CliError("UsageError", "--via-af only applies to the grounded rule")
        extension = grounded_extension(reduce_baf_to_af(tree))
        assignment = states_from_extension(tree, extension, winning_rule)
    else:
        assignment = propagate_states(tree, winning_rule)
    winners = assignment.winners()

    doc = {"tree_id": tree.tree_id, "winners": winners, **assignment.to_dict()}
    if out is None:
        click.echo(json.dumps(doc, indent=2))
        return

    path = write_json(doc, out)
    manifest.add(path)
    write_manifest(manifest, path.parent)
    click.echo(f"Winners: {', '.join(winners)}")
    click.echo(f"  Output: {path}")


# --- simulate ---


def _theory_rows(spec: EnsembleSpec, config: AppConfig) -> list[dict[str, Any]]:
    assert spec.model is not None and spec.depth is not None
    an = config.analytics
    full = solve_recurrence(
        spec.model, spec.depth, spec.q,
        tolerance=an.series_tolerance, max_terms=an.max_series_terms,
        clamp_tolerance=an.clamp_tolerance,
    )
    no_leaves = solve_recurrence_no_leaves(
        spec.depth, spec.q, model=spec.model,
        tolerance=an.series_tolerance, max_terms=an.max_series_terms,
        clamp_tolerance=an.clamp_tolerance,
    )
    return full.to_rows() + no_leaves.to_rows()


@main.command()
@generator_options
@rule_options
@click.option("--jobs", type=int, default=None, help="Worker processes (default: config).")
@click.option("--threshold", type=int, default=None,
              help="Minimum trees per reported level (default: config).")
@click.option("--out", type=click.Path(file_okay=False), default=None, help="Output directory.")
@config_option
@env_option
@click.pass_context
def simulate(ctx: click.Context, **kwargs: Any) -> None:
    """Per-level statistics of a synthetic ensemble."""
    config = load_config(env=kwargs["env"])
    _setup_logging(config.logging.level, config.logging.format)

    spec = _ensemble_spec(
        config,
        **{k: kwargs[k] for k in (
            "gen", "lam", "alpha", "k_min", "depth", "nodes", "q", "trees", "seed",
            "condition_on_depth",
        )},
    )
    manifest = RunManifest(command="simulate", params=_params(ctx), seed=spec.seed)
    rule = _rule(kwargs["rule"], kwargs["beta"], config)
    jobs = kwargs["jobs"] or config.simulation.jobs
    threshold = min(kwargs["threshold"] or config.simulation.min_tree_threshold, spec.trees)
    out_dir = _out_dir(kwargs["out"], config, "simulate")

    result = simulate_ensemble(spec, rule, threshold=threshold, jobs=jobs)
    stats_doc = result.stats.to_dict()
    stats_doc["degenerate_trees"] = result.degenerate
    _check(stats_doc, STATS_SCHEMA, "stats.json")
    manifest.add(write_csv(result.stats.to_rows(), STATS_COLUMNS, out_dir / "stats.csv"))
    manifest.add(write_json(stats_doc, out_dir / "stats.json"))

    try:
        approx = approx_no_leaves(result.observables, q=spec.q, min_trees=threshold)
        manifest.add(write_csv(approx.to_rows(), PROFILE_COLUMNS, out_dir / "approx_no_leaves.csv"))
    except InsufficientLevelsError as exc:
        logger.warning("No leaf-removed approximation: %s", exc)

    if spec.kind is GeneratorKind.HOMOGENEOUS:
        manifest.add(write_csv(_theory_rows(spec, config), PROFILE_COLUMNS, out_dir / "theory.csv"))

    write_manifest(manifest, out_dir)
    click.echo(f"Simulated {spec.trees} trees ({len(result.stats.levels)} levels reported)")
    click.echo(f"  Output: {out_dir}")


# --- recurrence ---


@main.command()
@click.option("--model", "gen", type=click.Choice(["poisson", "powerlaw"]), default="poisson",
              show_default=True)
@click.option("--lambda", "lam", type=float, default=2.0, show_default=True)
@click.option("--alpha", type=float, default=3.0, show_default=True)
@click.option("--k-min", "k_min", type=int, default=1, show_default=True)
@click.option("--depth", type=int, default=8, show_default=True)
@click.option("--q", type=float, required=True)
@click.option("--variant", type=click.Choice(["full", "no-leaves", "bounds"]), default="full",
              show_default=True)
@click.option("--p0", type=float, default=None,
              help="Leaf probability for bounds (default: the model's p(0)).")
@click.option("--method", type=click.Choice(["auto", "series", "closed"]), default="auto",
              show_default=True)
@click.option("--out", type=click.Path(file_okay=False), default=None, help="Output directory.")
@config_option
@env_option
@click.pass_context
def recurrence(
    ctx: click.Context,
    gen: str,
    lam: float,
    alpha: float,
    k_min: int,
    depth: int,
    q: float,
    variant: str,
    p0: float | None,
    method: str,
    out: str | None,
    env: str | None,
) -> None:
    """Analytic winning-probability profile of homogeneous trees."""
    config = load_config(env=env)
    _setup_logging(config.logging.level, config.logging.format)
    manifest = RunManifest(command="recurrence", params=_params(ctx))
    out_dir = _out_dir(out, config, "recurrence")
    an = config.analytics

    if variant == "bounds":
        leaf_p = p0 if p0 is not None else _model(gen, lam, alpha, k_min).pmf(0)
        upper, lower, trace = bound_profiles(leaf_p, depth, q, an.clamp_tolerance)
        rows = upper.to_rows() + lower.to_rows()
        manifest.add(write_json(trace.to_dict(), out_dir / "cobweb.json"))
    else:
        model = _model(gen, lam, alpha, k_min)
        if variant == "full":
            profile = solve_recurrence(
                model, depth, q, method=method,  # type: ignore[arg-type]
                tolerance=an.series_tolerance, max_terms=an.max_series_terms,
                clamp_tolerance=an.clamp_tolerance,
            )
            report = classify_regime(q, an.regime_epsilon, depth=depth)
            check = regime_predicates(profile, q, an.regime_epsilon)
            manifest.add(write_json(
                {**report.to_dict(), "check": check.to_dict()}, out_dir / "regime.json"
            ))
        else:
            profile = solve_recurrence_no_leaves(
                depth, q, model=model,
                tolerance=an.series_tolerance, max_terms=an.max_series_terms,
                clamp_tolerance=an.clamp_tolerance,
            )
        rows = profile.to_rows()
        manifest.add(write_json(profile.to_dict(), out_dir / "profile.json"))

    manifest.add(write_csv(rows, PROFILE_COLUMNS, out_dir / "profile.csv"))
    write_manifest(manifest, out_dir)
    click.echo(f"Wrote {variant} profile for depth {depth}, q={q}")
    click.echo(f"  Output: {out_dir}")


# --- analyze ---


@main.command()
@click.argument("corpus", type=click.Path(exists=True))
@rule_options
@click.option("--min-size", type=int, default=None, help="Smallest tree kept (default: config).")
@click.option("--lenient", is_flag=True, default=False,
              help="Prune deleted/empty subtrees instead of dropping the tree.")
@click.option("--threshold", type=int, default=None,
              help="Minimum trees per reported level (default: config).")
@click.option("--structure", type=click.Choice([s.value for s in StructureHint]),
              default=StructureHint.SCALE_FREE.value, show_default=True)
@click.option("--out", type=click.Path(file_okay=False), default=None, help="Output directory.")
@config_option
@env_option
@click.pass_context
def analyze(
    ctx: click.Context,
    corpus: str,
    rule: str,
    beta: float,
    min_size: int | None,
    lenient: bool,
    threshold: int | None,
    structure: str,
    out: str | None,
    env: str | None,
) -> None:
    """Clean, bin and evaluate a corpus of discussion trees."""
    config = load_config(env=env)
    _setup_logging(config.logging.level, config.logging.format)
    manifest = RunManifest(command="analyze", params=_params(ctx))
    out_dir = _out_dir(out, config, "analyze")
    winning_rule = _rule(rule, beta, config)
    hint = StructureHint(structure)
    min_trees = threshold or config.simulation.min_tree_threshold

    trees, report = load_corpus(
        corpus,
        min_size=min_size if min_size is not None else config.ingest.min_size,
        strict=config.ingest.strict and not lenient,
    )
    report_doc = report.to_dict()
    _check(report_doc, CLEANING_REPORT_SCHEMA, "cleaning_report.json")
    manifest.add(write_json(report_doc, out_dir / "cleaning_report.json"))
    if not trees:
        write_manifest(manifest, out_dir)
        raise CliError("EmptyCorpus", f"No tree in {corpus} survived cleaning", EXIT_EMPTY)

    bins = bin_by_support(trees)
    manifest.add(write_json(bins_to_dict(bins), out_dir / "bins.json"))

    for support_class in SupportClass:
        members = bins[support_class]
        if members:
            _analyze_class(support_class, members, winning_rule, hint, min_trees, out_dir,
                           manifest, config)

    try:
        fit_doc: dict[str, Any] = fit_power_law(
            pooled_in_degrees(trees),
            min_samples=config.ingest.min_samples,
            min_tail=config.ingest.min_tail,
        ).to_dict()
    except ArgwinError as exc:
        logger.warning("Power-law fit skipped: %s", exc)
        fit_doc = exc.to_dict()
    _check(fit_doc, POWERLAW_FIT_SCHEMA, "powerlaw_fit.json")
    manifest.add(write_json(fit_doc, out_dir / "powerlaw_fit.json"))

    write_manifest(manifest, out_dir)
    click.echo(f"Analyzed {len(trees)} of {report.trees_in} trees")
    click.echo(f"  Output: {out_dir}")


def _analyze_class(
    support_class: SupportClass,
    members: list[Any],
    rule: WinningRule,
    hint: StructureHint,
    min_trees: int,
    out_dir: Path,
    manifest: RunManifest,
    config: AppConfig,
) -> None:
    name = support_class.value
    acc = EnsembleAccumulator()
    observables = []
    for tree in members:
        summary = summarize_tree(tree, rule)
        acc.add(summary)
        observables.append(summary.observables())

    threshold = min(min_trees, len(members))
    stats = acc.finalize(rule, threshold, source={"support_class": name, "trees": len(members)})
    manifest.add(write_csv(stats.to_rows(), STATS_COLUMNS, out_dir / f"stats_{name}.csv"))

    try:
        approx = approx_no_leaves(observables, q=None, min_trees=threshold)
        approx_rows = approx.to_rows()
    except InsufficientLevelsError as exc:
        logger.warning("No approximation for class %s: %s", name, exc)
        approx_rows = []
    manifest.add(write_csv(approx_rows, PROFILE_COLUMNS, out_dir / f"approx_{name}.csv"))

    edges = sum(t.edge_count for t in members)
    q_hat = sum(t.support_count for t in members) / edges
    epsilon = max(regime_tolerance(q_hat, edges), config.analytics.regime_epsilon)
    if stats.levels:
        doc = recommend_sampling(stats.to_profile(), q_hat, hint, epsilon).to_dict()
    else:
        doc = classify_regime(q_hat, epsilon).to_dict()
        doc["degenerate"] = True
        doc["note"] = "no level reached the tree threshold"
    doc["support_class"] = name
    doc["mean_q_hat"] = sum(estimate_q(t) for t in members) / len(members)
    _check(doc, RECOMMENDATION_SCHEMA, f"recommendation_{name}.json")
    manifest.add(write_json(doc, out_dir / f"recommendation_{name}.json"))


# --- fit-powerlaw ---


@main.command("fit-powerlaw")
@click.argument("source", type=click.Path(exists=True))
@click.option("--degrees", "degrees_file", is_flag=True, default=False,
              help="SOURCE is a text file of in-degrees, one per line.")
@click.option("--k-min", "k_min", type=int, default=None, help="Fix k_min and fit alpha only.")
@click.option("--min-tail", type=int, default=None, help="Smallest tail (default: config).")
@click.option("--out", type=click.Path(file_okay=False), default=None, help="Output directory.")
@env_option
@click.pass_context
def fit_powerlaw_cmd(
    ctx: click.Context,
    source: str,
    degrees_file: bool,
    k_min: int | None,
    min_tail: int | None,
    out: str | None,
    env: str | None,
) -> None:
    """Fit a discrete power law to pooled in-degrees."""
    config = load_config(env=env)
    _setup_logging(config.logging.level, config.logging.format)
    manifest = RunManifest(command="fit-powerlaw", params=_params(ctx))
    out_dir = _out_dir(out, config, "fit-powerlaw")

    if degrees_file:
        with open(source, encoding="utf-8") as f:
            degrees = [int(line) for line in f if line.strip()]
    else:
        trees, _ = load_corpus(source, min_size=config.ingest.min_size,
                               strict=config.ingest.strict)
        degrees = pooled_in_degrees(trees)

    fit = fit_power_law(
        degrees,
        k_min=k_min,
        min_samples=config.ingest.min_samples,
        min_tail=min_tail if min_tail is not None else config.ingest.min_tail,
    )
    manifest.add(write_json(fit.to_dict(), out_dir / "powerlaw_fit.json"))
    write_manifest(manifest, out_dir)
    click.echo(f"alpha={fit.alpha:.4f} k_min={fit.k_min} ks={fit.ks_distance:.4f} "
               f"n_tail={fit.n_tail}")


# --- recommend ---


@main.command()
@click.argument("profile_csv", type=click.Path(exists=True, dir_okay=False))
@click.option("--q", "q_hat", type=float, required=True, help="Support probability or q̂.")
@click.option("--structure", type=click.Choice([s.value for s in StructureHint]),
              default=StructureHint.SCALE_FREE.value, show_default=True)
@click.option("--epsilon", type=float, default=None, help="Regime tolerance (default: config).")
@click.option("--out", type=click.Path(dir_okay=False), default=None,
              help="Write the recommendation JSON here instead of stdout.")
@env_option
def recommend(
    profile_csv: str,
    q_hat: float,
    structure: str,
    epsilon: float | None,
    out: str | None,
    env: str | None,
) -> None:
    """Order levels for sampling from a profile or stats CSV."""
    config = load_config(env=env)
    _setup_logging(config.logging.level, config.logging.format)

    with open(profile_csv, encoding="utf-8", newline="") as f:
        rows = list(csv.DictReader(f))
    if rows and "variant" in rows[0]:
        # a bounds CSV holds two variants; the first one is used
        rows = [r for r in rows if r["variant"] == rows[0]["variant"]]
    profile = profile_from_rows(rows)
    report = recommend_sampling(
        profile,
        q_hat,
        StructureHint(structure),
        epsilon if epsilon is not None else config.analytics.regime_epsilon,
    )
    doc = report.to_dict()
    if out is None:
        click.echo(json.dumps(doc, indent=2))
        return
    write_json(doc, out)
    click.echo(f"Recommended order: {report.recommended_order}")


# --- export ---


@main.command()
@generator_options
@click.option("--out", type=click.Path(file_okay=False), required=True,
              help="Directory receiving trees/ and manifest.json.")
@config_option
@env_option
@click.pass_context
def export(ctx: click.Context, **kwargs: Any) -> None:
    """Write a synthetic ensemble as a corpus of tree documents."""
    config = load_config(env=kwargs["env"])
    _setup_logging(config.logging.level, config.logging.format)

    spec = _ensemble_spec(
        config,
        **{k: kwargs[k] for k in (
            "gen", "lam", "alpha", "k_min", "depth", "nodes", "q", "trees", "seed",
            "condition_on_depth",
        )},
    )
    manifest = RunManifest(command="export", params=_params(ctx), seed=spec.seed)
    out_dir = Path(kwargs["out"])
    written = export_corpus(generate_ensemble(spec), out_dir / "trees")
    manifest.add(write_json(spec.to_dict(), out_dir / "spec.json"))
    write_manifest(manifest, out_dir)
    click.echo(f"Exported {len(written)} trees")
    click.echo(f"  Output: {out_dir / 'trees'}")
