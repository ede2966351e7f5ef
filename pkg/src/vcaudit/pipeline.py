"""Pipeline orchestration: staged artifact generation with a manifest.

Stages (design -> simulate -> ingest -> fit -> report) each read the
previous stage's files from the output directory and write their own.
Every write goes through the manifest so a run records its seed, config
hash, and the checksum of every artifact; identical seed + config produce
byte-identical files.  A failing stage removes its partial outputs.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

import numpy as np
import pandas as pd

from .defaults import (
    ConfigError,
    DEFAULTS_VERSION,
    callback_params_from_config,
    config_hash,
    donation_params_from_config,
    eval_params_from_config,
    event_params_from_config,
    load_config,
)
from .design import (
    build_email_campaign,
    check_schedule,
    generate_survey_design,
    make_investor_pool,
)
from .estimators import (
    CdfDifferenceCurve,
    FixedEffectsOLS,
    HeteroskedasticProbit,
    LeaveOneOutEffects,
    TwoThresholdProbit,
    write_curve,
    write_fit,
)
from .events import parse_events, read_event_log, write_event_log
from .panel import PanelSpec, build_panel, write_panel
from .simulate import (
    emit_event_log,
    simulate_callbacks,
    simulate_donations,
    simulate_evaluations,
    truth_table,
)

MANIFEST_NAME = "manifest.json"
_CSV_FLOAT_FORMAT = "%.12g"


def _sha256(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            digest.update(chunk)
    return digest.hexdigest()


class Manifest:
    """Seed, config hash, and artifact checksums for one output directory."""

    def __init__(self, out_dir: Path, seed: int | None, cfg: dict):
        self.out_dir = Path(out_dir)
        self.path = self.out_dir / MANIFEST_NAME
        if self.path.exists():
            with open(self.path, encoding="utf-8") as fh:
                self.payload = json.load(fh)
        else:
            self.payload = {
                "defaults_version": DEFAULTS_VERSION,
                "seed": seed,
                "config_hash": config_hash(cfg),
                "files": {},
            }
        if seed is not None:
            self.payload["seed"] = seed
        self.payload["config_hash"] = config_hash(cfg)

    def record(self, *paths: Path) -> None:
        for path in paths:
            self.payload["files"][Path(path).name] = _sha256(Path(path))
        with open(self.path, "w", encoding="utf-8") as fh:
            json.dump(self.payload, fh, indent=2, sort_keys=True)
            fh.write("\n")

    def verify(self) -> list[str]:
        """Names of recorded files that are missing or checksum-mismatched."""
        bad = []
        for name, checksum in self.payload.get("files", {}).items():
            path = self.out_dir / name
            if not path.exists() or _sha256(path) != checksum:
                bad.append(name)
        return bad


class _Stage:
    """Tracks files written by one stage and removes them on failure."""

    def __init__(self, out_dir: Path):
        self.out_dir = Path(out_dir)
        self.written: list[Path] = []

    def path(self, name: str) -> Path:
        p = self.out_dir / name
        self.written.append(p)
        return p

    def cleanup(self) -> None:
        for p in self.written:
            if p.exists():
                p.unlink()


_STAGE_INDEX = {"design": 1, "simulate": 2, "ingest": 3, "fit": 4, "report": 5}


def _stage_rng(seed: int, label: str) -> np.random.Generator:
    # Independent stream per stage so stages stay reproducible in isolation
    # (stable indices; never Python's randomized string hash).
    return np.random.default_rng(np.random.SeedSequence((seed, _STAGE_INDEX[label])))


def _require_seed(seed):
    if seed is None:
        raise ConfigError("this command is stochastic: --seed is required")
    return int(seed)


def _require_inputs(out_dir: Path, names: list[str], stage: str):
    missing = [n for n in names if not (out_dir / n).exists()]
    if missing:
        raise ConfigError(
            f"stage '{stage}' needs missing input file(s): {missing}; "
            "run earlier stages first"
        )


def _write_csv(frame: pd.DataFrame, path: Path) -> None:
    frame.to_csv(path, index=False, float_format=_CSV_FLOAT_FORMAT)


def run_design(seed, out_dir, cfg: dict | None = None, catalog=None) -> list[Path]:
    """Stage 1: investor pools, survey profiles, and the email schedule."""
    seed = _require_seed(seed)
    cfg = cfg or load_config()
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    stage = _Stage(out_dir)
    section = cfg["design"]
    try:
        rng = _stage_rng(seed, "design")
        survey_investors = make_investor_pool(rng, section["n_investors"])
        profiles = generate_survey_design(
            rng,
            survey_investors["investor_id"],
            catalog,
            n_profiles=section["n_profiles"],
            benchmark_year=section["benchmark_year"],
        )
        email_investors = make_investor_pool(rng, section["n_email_investors"])
        idea_ids = [f"idea{k:03d}" for k in range(section["n_ideas"])]
        schedule = build_email_campaign(
            rng,
            email_investors,
            idea_ids,
            start_day=section["start_day"],
            min_gap_days=section["min_gap_days"],
            mixed_ivy_share=section["mixed_ivy_share"],
        )
        report = check_schedule(schedule)
        if not report.ok:
            raise RuntimeError(f"schedule failed verification: {report.violations}")

        _write_csv(survey_investors, stage.path("investors.csv"))
        _write_csv(profiles, stage.path("profiles.csv"))
        _write_csv(email_investors, stage.path("email_investors.csv"))
        _write_csv(schedule.to_frame(), stage.path("schedule.csv"))
        Manifest(out_dir, seed, cfg).record(*stage.written)
        return stage.written
    except Exception:
        stage.cleanup()
        raise


def run_simulate(seed, out_dir, cfg: dict | None = None) -> list[Path]:
    """Stage 2: evaluations, email opens with event log, donations, truth."""
    seed = _require_seed(seed)
    cfg = cfg or load_config()
    out_dir = Path(out_dir)
    _require_inputs(out_dir, ["profiles.csv", "schedule.csv", "investors.csv"], "simulate")
    stage = _Stage(out_dir)
    try:
        rng = _stage_rng(seed, "simulate")
        profiles = pd.read_csv(out_dir / "profiles.csv")
        schedule = pd.read_csv(out_dir / "schedule.csv")
        investors = pd.read_csv(out_dir / "investors.csv")

        eval_params = eval_params_from_config(cfg)
        callback_params = callback_params_from_config(cfg)
        event_params = event_params_from_config(cfg)
        donation_params = donation_params_from_config(cfg)

        evaluations = simulate_evaluations(rng, profiles, eval_params)
        opens = simulate_callbacks(rng, schedule, callback_params)
        events = emit_event_log(rng, schedule, opens, event_params)
        donations = simulate_donations(rng, investors, donation_params)

        truth = pd.concat(
            [
                truth_table(eval_params).assign(model="evaluations"),
                truth_table(callback_params).assign(model="callbacks"),
                truth_table(donation_params).assign(model="donations"),
            ],
            ignore_index=True,
        )

        _write_csv(evaluations, stage.path("evaluations.csv"))
        write_event_log(events, stage.path("events.jsonl"))
        _write_csv(donations, stage.path("donations.csv"))
        _write_csv(truth[["model", "parameter", "value"]], stage.path("truth.csv"))
        Manifest(out_dir, seed, cfg).record(*stage.written)
        return stage.written
    except Exception:
        stage.cleanup()
        raise


def run_ingest(out_dir, cfg: dict | None = None) -> list[Path]:
    """Stage 3: parse the event log and build the default analysis panel."""
    cfg = cfg or load_config()
    out_dir = Path(out_dir)
    _require_inputs(out_dir, ["events.jsonl", "schedule.csv", "evaluations.csv"], "ingest")
    stage = _Stage(out_dir)
    try:
        events = read_event_log(out_dir / "events.jsonl")
        schedule = pd.read_csv(out_dir / "schedule.csv")
        rate = cfg["events"]["download_rate_bytes_per_s"]
        outcomes = parse_events(events, download_rate_bytes_per_s=rate)
        email_outcomes = schedule.merge(outcomes, on="email_id", how="left")
        for col in ("opened", "clicked", "replied"):
            email_outcomes[col] = email_outcomes[col].fillna(False).astype(int)
        email_outcomes["staying_seconds"] = email_outcomes["staying_seconds"].fillna(0.0)
        email_outcomes["open_count"] = email_outcomes["open_count"].fillna(0).astype(int)

        evaluations = pd.read_csv(out_dir / "evaluations.csv")
        fit_cfg = cfg["fit"]
        spec = PanelSpec(
            outcome=fit_cfg["panel_outcome"],
            terms=tuple(t.strip() for t in fit_cfg["panel_terms"].split(",") if t.strip()),
            fixed_effect=fit_cfg["panel_fixed_effect"] or None,
            cluster=fit_cfg["panel_cluster"] or None,
        )
        panel = build_panel(evaluations, spec)

        _write_csv(email_outcomes, stage.path("email_outcomes.csv"))
        write_panel(panel, stage.path("panel.csv"), stage.path("panel.meta"))
        Manifest(out_dir, None, cfg).record(*stage.written)
        return stage.written
    except Exception:
        stage.cleanup()
        raise


_FIT_KINDS = ("ols", "hetprobit", "two-threshold", "loo", "curve")


def run_fit(kind: str, out_dir, cfg: dict | None = None, seed=None) -> list[Path]:
    """Stage 4: fit one estimator on the ingested artifacts."""
    cfg = cfg or load_config()
    out_dir = Path(out_dir)
    if kind not in _FIT_KINDS:
        raise ConfigError(f"unknown fit kind {kind!r}; choose from {_FIT_KINDS}")
    stage = _Stage(out_dir)
    fit_cfg = cfg["fit"]
    try:
        if kind == "ols":
            _require_inputs(out_dir, ["panel.csv"], "fit ols")
            from .panel import read_panel

            panel = read_panel(out_dir / "panel.csv")
            est = FixedEffectsOLS(se="cluster" if panel.cluster is not None else "robust")
            est.fit_panel(panel)
            write_fit(est.result_, stage.path("fit_ols.csv"), stage.path("fit_ols.meta"))
        elif kind in ("hetprobit", "two-threshold"):
            _require_inputs(out_dir, ["email_outcomes.csv"], f"fit {kind}")
            emails = pd.read_csv(out_dir / "email_outcomes.csv")
            X = emails[["ivy", "advantage"]]
            y = emails["opened"].to_numpy(dtype=float)
            g = emails[cfg["callback_dgp"]["group_col"]].to_numpy(dtype=float)
            if kind == "hetprobit":
                est = HeteroskedasticProbit().fit(
                    X, y, g, cluster=emails["investor_id"].to_numpy()
                )
                write_fit(
                    est.result_,
                    stage.path("fit_hetprobit.csv"),
                    stage.path("fit_hetprobit.meta"),
                )
            else:
                est = TwoThresholdProbit().fit(X, y, g)
                write_fit(
                    est.result_,
                    stage.path("fit_twothreshold.csv"),
                    stage.path("fit_twothreshold.meta"),
                )
        elif kind == "loo":
            _require_inputs(out_dir, ["evaluations.csv"], "fit loo")
            n_boot = int(fit_cfg["loo_bootstrap"])
            if n_boot > 0:
                seed = _require_seed(seed)
            records = pd.read_csv(out_dir / "evaluations.csv")
            est = LeaveOneOutEffects(
                classify_on=fit_cfg["loo_classify_on"],
                outcomes=tuple(
                    t.strip() for t in fit_cfg["loo_outcomes"].split(",") if t.strip()
                ),
                n_bootstrap=n_boot,
                random_state=seed,
            ).fit(records)
            _write_csv(est.summary_frame(), stage.path("fit_loo.csv"))
        else:  # curve
            _require_inputs(out_dir, ["evaluations.csv"], "fit curve")
            records = pd.read_csv(out_dir / "evaluations.csv")
            outcome = fit_cfg["curve_outcome"]
            group = fit_cfg["curve_group"]
            sub = records.dropna(subset=[outcome])
            est = CdfDifferenceCurve().fit(
                sub[outcome].to_numpy(dtype=float), sub[group].to_numpy(dtype=float)
            )
            write_curve(est.result_, stage.path("curve.csv"))
        Manifest(out_dir, None, cfg).record(*stage.written)
        return stage.written
    except Exception:
        stage.cleanup()
        raise


def run_report(out_dir, cfg: dict | None = None) -> list[Path]:
    """Stage 5: one-page text summary of whatever fits are present."""
    cfg = cfg or load_config()
    out_dir = Path(out_dir)
    stage = _Stage(out_dir)
    try:
        lines = ["vcaudit run report", "=" * 18, ""]
        manifest_path = out_dir / MANIFEST_NAME
        if manifest_path.exists():
            with open(manifest_path, encoding="utf-8") as fh:
                payload = json.load(fh)
            lines.append(f"seed: {payload.get('seed')}")
            lines.append(f"config hash: {payload.get('config_hash')}")
            lines.append(f"artifacts: {len(payload.get('files', {}))}")
            lines.append("")
        for name in ("fit_ols", "fit_hetprobit", "fit_twothreshold"):
            path = out_dir / f"{name}.csv"
            if not path.exists():
                continue
            frame = pd.read_csv(path)
            lines.append(f"[{name}]")
            for _, row in frame.iterrows():
                lines.append(
                    f"  {row['term']:<16} {row['estimate']:>10.4f}"
                    f"  (se {row['se']:.4f}, p {row['p']:.3f})"
                )
            lines.append("")
        loo_path = out_dir / "fit_loo.csv"
        if loo_path.exists():
            frame = pd.read_csv(loo_path)
            lines.append("[fit_loo]")
            for _, row in frame.iterrows():
                lines.append(
                    f"  {row['outcome']}: anti {row['coef_anti']:.3f} "
                    f"(share {row['share_anti']:.2f}), "
                    f"pro {row['coef_pro']:.3f} (share {row['share_pro']:.2f})"
                )
            lines.append("")
        curve_path = out_dir / "curve.csv"
        if curve_path.exists():
            frame = pd.read_csv(curve_path)
            lines.append(
                f"[curve] {len(frame)} grid points, "
                f"coef range [{frame['coef'].min():.3f}, {frame['coef'].max():.3f}]"
            )
            lines.append("")
        path = stage.path("report.txt")
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("\n".join(lines))
        Manifest(out_dir, None, cfg).record(*stage.written)
        return stage.written
    except Exception:
        stage.cleanup()
        raise


def run_pipeline(seed, out_dir, cfg: dict | None = None) -> list[Path]:
    """Design -> simulate -> ingest -> every fit -> report, one manifest."""
    seed = _require_seed(seed)
    cfg = cfg or load_config()
    written: list[Path] = []
    written += run_design(seed, out_dir, cfg)
    written += run_simulate(seed, out_dir, cfg)
    written += run_ingest(out_dir, cfg)
    for kind in ("ols", "hetprobit", "loo", "curve"):
        written += run_fit(kind, out_dir, cfg, seed=seed)
    written += run_report(out_dir, cfg)
    return written
