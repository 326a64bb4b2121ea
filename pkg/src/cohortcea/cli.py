"""Command-line front end.

Subcommands run a model configuration end to end and write delimited (or
JSON) tables plus, on request, rendered figures into an output
directory, alongside a JSON run manifest recording the config hash, seed
inputs, and library versions. Exit codes: 0 success, 2 configuration
error, 3 transition-model validation error, 4 runtime numeric error.
"""

from __future__ import annotations

import functools
import hashlib
import os
import platform
import sys
from pathlib import Path

import click
import numpy as np

from . import __version__
from .analysis import evaluate_strategies
from .cea import calculate_icers
from .config import ConfigEvaluator, ModelConfig, discount_specs, load_config
from .epi import life_expectancy, prevalence, proportion_among, survival
from .errors import (
    CohortModelError,
    ConfigError,
    LifeTableError,
    NumericError,
    PsaEvaluationError,
    StructureError,
    ValidationError,
)
from .psa import ceac, default_wtp_grid, evaluate_psa, expected_loss_and_evpi, generate_psa_params
from .sicksicker import bundled_config_path
from .tableio import (
    cea_rows,
    epi_series_rows,
    human_cea_rows,
    trace_rows,
    write_manifest,
    write_table,
)
from .transforms import LifeTable

OUT_ENV_VAR = "COHORTCEA_OUT"
DEFAULT_OUT = "cohortcea_out"
EXIT_CONFIG = 2
EXIT_VALIDATION = 3
EXIT_NUMERIC = 4


def _fail(message: str, code: int, details=None):
    click.echo(f"error: {message}", err=True)
    for item in details or []:
        click.echo(f"  - {item}", err=True)
    sys.exit(code)


def _exit_codes(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except ConfigError as exc:
            _fail(str(exc), EXIT_CONFIG, exc.problems if exc.problems != [str(exc)] else None)
        except (LifeTableError, StructureError) as exc:
            _fail(str(exc), EXIT_CONFIG)
        except ValidationError as exc:
            _fail(str(exc), EXIT_VALIDATION, [str(v) for v in exc.violations[:10]])
        except PsaEvaluationError as exc:
            if isinstance(exc.__cause__, ValidationError):
                _fail(str(exc), EXIT_VALIDATION)
            _fail(str(exc), EXIT_NUMERIC)
        except NumericError as exc:
            _fail(str(exc), EXIT_NUMERIC)
        except CohortModelError as exc:
            _fail(str(exc), EXIT_CONFIG)

    return wrapper


def _resolve_model(model: str) -> Path:
    if model == "sick-sicker":
        return bundled_config_path()
    path = Path(model)
    if not path.exists():
        raise ConfigError(f"model {model!r} is neither a bundled model name nor a file")
    return path


def _load(model: str, life_table: str | None) -> tuple[ModelConfig, Path, Path | None]:
    config_path = _resolve_model(model)
    override = None
    lt_path = None
    if life_table is not None:
        lt_path = Path(life_table)
        override = LifeTable.from_csv(lt_path)
    return load_config(config_path, life_table_override=override), config_path, lt_path


def _pick_variant(config: ModelConfig, variant: str | None) -> str:
    available = config.variants()
    if variant is None:
        return "age-dependent" if "age-dependent" in available else available[0]
    if variant not in available:
        raise ConfigError(
            f"variant {variant!r} not available for this model; choose from {available}"
        )
    return variant


def _out_dir(out: str | None) -> Path:
    path = Path(out or os.environ.get(OUT_ENV_VAR) or DEFAULT_OUT)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _manifest(out_dir: Path, command: str, config_path: Path, lt_path, variant, fmt, **extra):
    entries = {
        "command": command,
        "config": str(config_path),
        "config_sha256": _sha256(config_path),
        "variant": variant,
        "format": fmt,
        "versions": {
            "cohortcea": __version__,
            "numpy": np.__version__,
            "python": platform.python_version(),
        },
    }
    if lt_path is not None:
        entries["life_table"] = str(lt_path)
        entries["life_table_sha256"] = _sha256(lt_path)
    entries.update(extra)
    write_manifest(out_dir / "manifest.json", entries)


def _slug(label: str) -> str:
    return "".join(c if c.isalnum() else "_" for c in label.lower()).strip("_")


def _deterministic_run(config: ModelConfig, variant: str):
    specs, tunnel_spec = config.build_strategies(variant)
    init = config.initial_vector(specs[0].model.space, tunnel_spec)
    d_cost, d_effect = discount_specs(config)
    results = evaluate_strategies(specs, init, d_cost, d_effect)
    if tunnel_spec is not None:
        from .tunnels import aggregate_trace

        traces = {r.label: aggregate_trace(r.trace, tunnel_spec) for r in results}
    else:
        traces = {r.label: r.trace for r in results}
    return results, traces, tunnel_spec


def _epi_series(config: ModelConfig, trace):
    death = sorted(config.space.absorbing)
    alive_states = [n for n in trace.space.names if n not in trace.space.absorbing]
    series = [survival(trace, death)]
    for name in alive_states:
        series.append(prevalence(trace, [name], death))
    if config.tunnel is not None:
        pair = [config.tunnel.state, config.tunnel.progression_to]
        series.append(prevalence(trace, pair, death))
        series.append(proportion_among(trace, [config.tunnel.progression_to], pair))
    return series


_shared_options = [
    click.option("--model", default="sick-sicker", show_default=True,
                 help="Bundled model name or path to a configuration file."),
    click.option("--variant", default=None,
                 help="Model variant (time-independent, age-dependent, tunnels)."),
    click.option("--life-table", default=None, type=click.Path(),
                 help="Override the model's life-table file."),
    click.option("--out", default=None, type=click.Path(),
                 help=f"Output directory (default ${OUT_ENV_VAR} or ./{DEFAULT_OUT})."),
    click.option("--format", "fmt", default="csv", show_default=True,
                 type=click.Choice(["csv", "json"]), help="Table format."),
    click.option("--figures/--no-figures", default=False, show_default=True,
                 help="Render figures alongside the tables."),
]


def shared_options(fn):
    for option in reversed(_shared_options):
        fn = option(fn)
    return fn


@click.group()
@click.version_option(__version__)
def main():
    """Cohort state-transition modeling and cost-effectiveness analysis."""


@main.command()
@shared_options
@_exit_codes
def trace(model, variant, life_table, out, fmt, figures):
    """Simulate cohort traces for every strategy."""
    config, config_path, lt_path = _load(model, life_table)
    variant = _pick_variant(config, variant)
    out_dir = _out_dir(out)
    _, traces, _ = _deterministic_run(config, variant)
    written = []
    for label, tr in traces.items():
        header, rows = trace_rows(tr)
        written.append(write_table(out_dir / f"trace_{_slug(label)}.{fmt}", header, rows, fmt))
        if figures:
            from .plots import plot_trace

            plot_trace(tr, out_dir / f"trace_{_slug(label)}.png", title=f"Cohort trace: {label}")
    _manifest(out_dir, "trace", config_path, lt_path, variant, fmt)
    click.echo(f"wrote {len(written)} trace table(s) to {out_dir}")


@main.command()
@shared_options
@_exit_codes
def epi(model, variant, life_table, out, fmt, figures):
    """Epidemiological series and life expectancy under the first strategy."""
    config, config_path, lt_path = _load(model, life_table)
    variant = _pick_variant(config, variant)
    out_dir = _out_dir(out)
    _, traces, _ = _deterministic_run(config, variant)
    first = next(iter(traces.values()))
    series = _epi_series(config, first)
    header, rows = epi_series_rows(series)
    write_table(out_dir / f"epi_series.{fmt}", header, rows, fmt)
    le = life_expectancy(series[0])
    write_table(out_dir / f"epi_summary.{fmt}", ["metric", "value"],
                [["life_expectancy_cycles", le]], fmt)
    if figures:
        from .plots import plot_epi_series

        plot_epi_series([series[0]], out_dir / "survival.png", title="Survival")
        plot_epi_series(series[1:], out_dir / "prevalence.png", title="Prevalence")
    _manifest(out_dir, "epi", config_path, lt_path, variant, fmt)
    click.echo(f"life expectancy: {le:.4f} cycles; tables in {out_dir}")


@main.command()
@shared_options
@_exit_codes
def cea(model, variant, life_table, out, fmt, figures):
    """Discounted totals, dominance, and ICERs across strategies."""
    config, config_path, lt_path = _load(model, life_table)
    variant = _pick_variant(config, variant)
    out_dir = _out_dir(out)
    results, _, _ = _deterministic_run(config, variant)
    write_table(
        out_dir / f"expected_outcomes.{fmt}",
        ["strategy", "cost", "qaly"],
        [[r.label, r.state_cost, r.state_qaly] for r in results],
        fmt,
    )
    table = calculate_icers([r.transition_outcome() for r in results])
    header, rows = cea_rows(table)
    write_table(out_dir / f"cea_table.{fmt}", header, rows, fmt)
    write_table(out_dir / f"cea_report.{fmt}", header, human_cea_rows(table), fmt)
    if figures:
        from .plots import plot_frontier

        plot_frontier(table, out_dir / "frontier.png")
    _manifest(out_dir, "cea", config_path, lt_path, variant, fmt)
    for row in human_cea_rows(table):
        click.echo("  ".join(str(c) for c in row))


@main.command()
@shared_options
@click.option("--n-sim", default=1000, show_default=True, help="Number of parameter samples.")
@click.option("--seed", default=1, show_default=True, help="PSA random seed.")
@click.option("--wtp-max", default=200_000.0, show_default=True,
              help="Upper end of the willingness-to-pay grid.")
@click.option("--wtp-step", default=5_000.0, show_default=True,
              help="Willingness-to-pay grid spacing.")
@click.option("--workers", default=1, show_default=True,
              help="Parallel processes for sample evaluation.")
@_exit_codes
def psa(model, variant, life_table, out, fmt, figures, n_sim, seed, wtp_max, wtp_step, workers):
    """Probabilistic sensitivity analysis: CEAC, CEAF, ELC, EVPI."""
    config, config_path, lt_path = _load(model, life_table)
    variant = _pick_variant(config, variant)
    out_dir = _out_dir(out)
    dists = config.psa_distributions()
    if not dists:
        raise ConfigError("this model configuration has no psa.distributions block")
    samples = generate_psa_params(dists, n_sim, seed)
    outcomes = evaluate_psa(samples, ConfigEvaluator(config, variant), workers=workers)

    write_table(out_dir / f"psa_samples.{fmt}", ["sample", *samples.names],
                [[i, *samples.values[i]] for i in range(samples.n_sim)], fmt)
    outcome_rows = []
    for i in range(outcomes.n_sim):
        for k, label in enumerate(outcomes.strategies):
            outcome_rows.append([i, label, outcomes.costs[i, k], outcomes.effects[i, k]])
    write_table(out_dir / f"psa_outcomes.{fmt}", ["sample", "strategy", "cost", "effect"],
                outcome_rows, fmt)

    grid = default_wtp_grid(wtp_max, wtp_step)
    acceptability = ceac(outcomes, grid)
    write_table(
        out_dir / f"ceac.{fmt}",
        ["wtp", *acceptability.strategies, "frontier"],
        [[grid[k], *acceptability.probabilities[k], acceptability.frontier[k]]
         for k in range(grid.size)],
        fmt,
    )
    loss, evpi = expected_loss_and_evpi(outcomes, grid)
    write_table(
        out_dir / f"expected_loss.{fmt}",
        ["wtp", *outcomes.strategies],
        [[grid[k], *loss[k]] for k in range(grid.size)],
        fmt,
    )
    write_table(out_dir / f"evpi.{fmt}", ["wtp", "evpi"],
                [[grid[k], evpi[k]] for k in range(grid.size)], fmt)
    if figures:
        from .plots import plot_ceac, plot_elc

        plot_ceac(acceptability, out_dir / "ceac.png")
        plot_elc(grid, loss, outcomes.strategies, evpi, out_dir / "expected_loss.png")
    _manifest(out_dir, "psa", config_path, lt_path, variant, fmt,
              seed=seed, n_sim=n_sim, wtp_max=wtp_max, wtp_step=wtp_step)
    click.echo(f"PSA with {n_sim} samples done; tables in {out_dir}")


@main.command()
@shared_options
@_exit_codes
def report(model, variant, life_table, out, fmt, figures):
    """Full deterministic report: traces, epi series, CEA, and figures."""
    config, config_path, lt_path = _load(model, life_table)
    variant = _pick_variant(config, variant)
    out_dir = _out_dir(out)
    results, traces, _ = _deterministic_run(config, variant)

    from .plots import plot_epi_series, plot_frontier, plot_trace

    for label, tr in traces.items():
        header, rows = trace_rows(tr)
        write_table(out_dir / f"trace_{_slug(label)}.{fmt}", header, rows, fmt)
        plot_trace(tr, out_dir / f"trace_{_slug(label)}.png", title=f"Cohort trace: {label}")

    first = next(iter(traces.values()))
    series = _epi_series(config, first)
    header, rows = epi_series_rows(series)
    write_table(out_dir / f"epi_series.{fmt}", header, rows, fmt)
    le = life_expectancy(series[0])
    write_table(out_dir / f"epi_summary.{fmt}", ["metric", "value"],
                [["life_expectancy_cycles", le]], fmt)
    plot_epi_series([series[0]], out_dir / "survival.png", title="Survival")
    plot_epi_series(series[1:], out_dir / "prevalence.png", title="Prevalence")

    write_table(
        out_dir / f"expected_outcomes.{fmt}",
        ["strategy", "cost", "qaly"],
        [[r.label, r.state_cost, r.state_qaly] for r in results],
        fmt,
    )
    table = calculate_icers([r.transition_outcome() for r in results])
    header, rows = cea_rows(table)
    write_table(out_dir / f"cea_table.{fmt}", header, rows, fmt)
    write_table(out_dir / f"cea_report.{fmt}", header, human_cea_rows(table), fmt)
    plot_frontier(table, out_dir / "frontier.png")

    _manifest(out_dir, "report", config_path, lt_path, variant, fmt)
    click.echo(f"report written to {out_dir} (life expectancy {le:.4f} cycles)")


if __name__ == "__main__":
    main()
