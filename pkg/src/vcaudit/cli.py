"""Command-line interface.

Commands: ``design``, ``simulate``, ``ingest``, ``fit {ols|hetprobit|
two-threshold|loo|curve}``, ``demo {heckman|loo}``, ``report`` and
``pipeline`` (all stages in order).  Global flags: ``--seed`` (required for
any stochastic command; there is no wall-clock default), ``--out``,
``--config``, ``--threads``.

Exit codes: 0 success, 1 runtime/numeric failure, 2 configuration error.
Errors are emitted as a single machine-readable JSON line on stderr.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from . import pipeline as pl
from .catalog import CatalogError, load_catalog
from .defaults import ConfigError, load_config
from .demos import (
    run_split_demo,
    run_variance_demo,
    split_demo_report,
    variance_demo_report,
)


@click.group()
@click.option("--seed", type=int, default=None, help="Seed for stochastic commands (required for them).")
@click.option("--out", "out_dir", type=click.Path(), default="out", show_default=True, help="Output directory.")
@click.option("--config", "config_path", type=click.Path(), default=None, help="Key-value config file.")
@click.option("--threads", type=int, default=1, show_default=True, help="Worker threads for replication loops.")
@click.pass_context
def cli(ctx, seed, out_dir, config_path, threads):
    """Audit-study design, simulation, and estimation toolkit."""
    if config_path is not None and not Path(config_path).exists():
        raise ConfigError(f"config file not found: {config_path}")
    ctx.obj = {
        "seed": seed,
        "out_dir": Path(out_dir),
        "cfg": load_config(config_path),
        "threads": threads,
    }


@cli.command()
@click.option("--n-profiles", type=int, default=None, help="Profiles per survey session.")
@click.option("--catalog", "catalog_path", type=click.Path(), default=None, help="Component catalog config.")
@click.option("--min-gap-days", type=int, default=None, help="Minimum days between sends to one investor.")
@click.pass_obj
def design(obj, n_profiles, catalog_path, min_gap_days):
    """Generate investors, survey profiles, and the email schedule."""
    cfg = obj["cfg"]
    if n_profiles is not None:
        cfg["design"]["n_profiles"] = n_profiles
    if min_gap_days is not None:
        cfg["design"]["min_gap_days"] = min_gap_days
    catalog = None
    if catalog_path is not None:
        if not Path(catalog_path).exists():
            raise ConfigError(f"--catalog file not found: {catalog_path}")
        catalog = load_catalog(catalog_path)
    written = pl.run_design(obj["seed"], obj["out_dir"], cfg, catalog=catalog)
    _done("design", written)


@cli.command()
@click.pass_obj
def simulate(obj):
    """Simulate evaluations, email opens, the event log, and donations."""
    written = pl.run_simulate(obj["seed"], obj["out_dir"], obj["cfg"])
    _done("simulate", written)


@cli.command()
@click.pass_obj
def ingest(obj):
    """Parse the event log and build the analysis panel."""
    written = pl.run_ingest(obj["out_dir"], obj["cfg"])
    _done("ingest", written)


@cli.command()
@click.argument("kind", type=click.Choice(["ols", "hetprobit", "two-threshold", "loo", "curve"]))
@click.pass_obj
def fit(obj, kind):
    """Fit one estimator on ingested artifacts."""
    written = pl.run_fit(kind, obj["out_dir"], obj["cfg"], seed=obj["seed"])
    _done(f"fit {kind}", written)


@cli.command()
@click.argument("which", type=click.Choice(["heckman", "loo"]))
@click.pass_obj
def demo(obj, which):
    """Run a canned bias demonstration and write its report."""
    seed = obj["seed"]
    if seed is None:
        raise ConfigError("this command is stochastic: --seed is required")
    out_dir = obj["out_dir"]
    out_dir.mkdir(parents=True, exist_ok=True)
    cfg = obj["cfg"]
    if which == "heckman":
        section = cfg["demo_variance"]
        result = run_variance_demo(
            seed,
            replications=section["replications"],
            n_emails=section["n_emails"],
            threshold=section["threshold"],
            x_low=section["x_low"],
            x_high=section["x_high"],
            sd_ratio=section["sd_ratio"],
            ivy_coef=section["ivy_coef"],
            advantage_coef=section["advantage_coef"],
            n_threads=obj["threads"],
        )
        report_text = variance_demo_report(result)
        csv_path = out_dir / "demo_heckman.csv"
        txt_path = out_dir / "demo_heckman.txt"
    else:
        section = cfg["demo_split"]
        grid = tuple(int(x) for x in str(section["profile_grid"]).split(","))
        result = run_split_demo(
            seed,
            replications=section["replications"],
            n_investors=section["n_investors"],
            n_profiles=section["n_profiles"],
            error_corr=section["error_corr"],
            noise_scale=section["noise_scale"],
            alpha_scale=section["alpha_scale"],
            profile_grid=grid,
            n_threads=obj["threads"],
        )
        report_text = split_demo_report(result)
        csv_path = out_dir / "demo_loo.csv"
        txt_path = out_dir / "demo_loo.txt"
    result.per_rep.to_csv(csv_path, index=False, float_format="%.12g")
    with open(txt_path, "w", encoding="utf-8") as fh:
        fh.write(report_text)
    pl.Manifest(out_dir, seed, cfg).record(csv_path, txt_path)
    click.echo(report_text)
    _done(f"demo {which}", [csv_path, txt_path])


@cli.command()
@click.pass_obj
def report(obj):
    """Summarize the fits present in the output directory."""
    written = pl.run_report(obj["out_dir"], obj["cfg"])
    _done("report", written)


@cli.command()
@click.pass_obj
def pipeline(obj):
    """Run design, simulate, ingest, every fit, and report."""
    written = pl.run_pipeline(obj["seed"], obj["out_dir"], obj["cfg"])
    _done("pipeline", written)


def _done(stage: str, written) -> None:
    names = ", ".join(sorted(p.name for p in written))
    click.echo(f"{stage}: wrote {names}")


def main(argv=None) -> int:
    try:
        cli.main(args=argv, standalone_mode=False)
    except (ConfigError, CatalogError, click.UsageError) as exc:
        message = exc.format_message() if isinstance(exc, click.UsageError) else str(exc)
        sys.stderr.write(json.dumps({"error": message, "kind": "config"}) + "\n")
        return 2
    except click.exceptions.Exit as exc:
        return exc.exit_code
    except click.Abort:
        return 1
    except Exception as exc:
        sys.stderr.write(
            json.dumps({"error": str(exc), "kind": type(exc).__name__}) + "\n"
        )
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
