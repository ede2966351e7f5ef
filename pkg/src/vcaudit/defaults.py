"""Pinned default parameters for every stage, plus the config-file loader.

All stochastic defaults live here in one versioned place so that pipeline
and acceptance runs are reproducible.  A config file (INI key-value, UTF-8)
overrides individual entries; values keep the type of the default they
replace.
"""

from __future__ import annotations

import configparser
import copy
import hashlib
import json

import numpy as np

from .simulate import (
    CallbackDgpParams,
    DonationDgpParams,
    EvalDgpParams,
    EventTimingParams,
    TreatmentEffect,
)

DEFAULTS_VERSION = "1"

DEFAULTS: dict = {
    "design": {
        "n_investors": 48,           # survey arm respondents
        "n_profiles": 16,            # profiles per session
        "n_email_investors": 192,    # email arm recipients (one per fund)
        "n_ideas": 4,                # pitched startup ideas
        "min_gap_days": 14,
        "benchmark_year": 2020,
        "mixed_ivy_share": 0.0,
        "start_day": 0,
    },
    "eval_dgp": {
        "alpha_scale": 10.0,
        "noise_q1": 10.0,
        "noise_q2": 10.0,
        "noise_q3": 10.0,
        "noise_q4": 2.0,
        "noise_q5": 10.0,
        # Split-effect calibration for the treated characteristic.
        "treatment": "female",
        "share_anti": 0.42,
        "anti_q1": -16.40,
        "anti_q2": -2.85,
        "anti_q3": -21.81,
        "anti_q4": -2.61,
        "pro_q1": 7.93,
        "pro_q2": 1.54,
        "pro_q3": 13.69,
        "pro_q4": 1.08,
        "error_corr_q1_q3": 0.3,
    },
    "callback_dgp": {
        "threshold": 1.0,
        "x_level": 0.0,
        "ivy_coef": 0.5,
        "advantage_coef": 0.25,
        "group_col": "female",
        "group_shift": 0.3,
        "log_sd_ratio": float(np.log(0.8)),
        "sigma_fund": 0.0,
    },
    "events": {
        "download_rate_bytes_per_s": 10_240,
        "read_time_median_s": 10.33,
        "read_time_sigma": 0.8,
        "open_delay_hours_scale": 24.0,
        "click_prob": 0.02,
        "reply_prob": 0.015,
        "reopen_prob": 0.0,
    },
    "donation_dgp": {
        "base": 11.10,
        "female_founder": -3.05,
        "female_x_female_investor": 10.31,
        "female_investor": -7.41,
        "noise_scale": 4.0,
    },
    "fit": {
        "panel_outcome": "q1",
        "panel_terms": "female",
        "panel_fixed_effect": "investor_id",
        "panel_cluster": "investor_id",
        "loo_classify_on": "q3",
        "loo_outcomes": "q1,q2,q3,q4",
        "loo_bootstrap": 200,
        "curve_outcome": "q3",
        "curve_group": "female",
    },
    "demo_variance": {
        "replications": 100,
        "n_emails": 4000,
        "threshold": 1.0,
        "x_low": 0.0,
        "x_high": 2.0,
        "sd_ratio": float(1.0 / 1.5),  # treated/reference noise sd
        "ivy_coef": 0.5,
        "advantage_coef": 0.25,
    },
    "demo_split": {
        "replications": 100,
        "n_investors": 200,
        "n_profiles": 16,
        "error_corr": 0.8,
        "profile_grid": "8,16,64",
        "noise_scale": 10.0,
        "alpha_scale": 10.0,
    },
}


class ConfigError(ValueError):
    """Raised for unreadable or ill-typed configuration."""


def _coerce(raw: str, like):
    raw = raw.strip()
    if isinstance(like, bool):
        if raw.lower() in ("true", "1", "yes"):
            return True
        if raw.lower() in ("false", "0", "no"):
            return False
        raise ConfigError(f"expected boolean, got {raw!r}")
    if isinstance(like, int):
        return int(raw)
    if isinstance(like, float):
        return float(raw)
    return raw


def load_config(path=None) -> dict:
    """Defaults merged with overrides from an INI config file."""
    cfg = copy.deepcopy(DEFAULTS)
    if path is None:
        return cfg
    parser = configparser.ConfigParser(interpolation=None)
    read = parser.read(path, encoding="utf-8")
    if not read:
        raise ConfigError(f"cannot read config file {path}")
    for section in parser.sections():
        if section not in cfg:
            raise ConfigError(f"unknown config section [{section}]")
        for key, raw in parser.items(section):
            if key not in cfg[section]:
                raise ConfigError(f"unknown config key {key!r} in [{section}]")
            try:
                cfg[section][key] = _coerce(raw, cfg[section][key])
            except ConfigError:
                raise
            except ValueError as exc:
                raise ConfigError(f"bad value for {section}.{key}: {exc}") from exc
    return cfg


def config_hash(cfg: dict) -> str:
    """Stable hash of a merged configuration."""
    blob = json.dumps(cfg, sort_keys=True, default=str).encode("utf-8")
    return hashlib.sha256(blob).hexdigest()


def eval_params_from_config(cfg: dict) -> EvalDgpParams:
    section = cfg["eval_dgp"]
    corr = np.eye(5)
    corr[0, 2] = corr[2, 0] = section["error_corr_q1_q3"]
    effect = TreatmentEffect(
        share_anti=section["share_anti"],
        effect_anti={f"q{k}": section[f"anti_q{k}"] for k in range(1, 5)},
        effect_pro={f"q{k}": section[f"pro_q{k}"] for k in range(1, 5)},
    )
    return EvalDgpParams(
        alpha_scale=section["alpha_scale"],
        noise_scales={f"q{k}": section[f"noise_q{k}"] for k in range(1, 6)},
        error_correlation=corr,
        treatments={section["treatment"]: effect},
    )


def callback_params_from_config(cfg: dict) -> CallbackDgpParams:
    section = cfg["callback_dgp"]
    return CallbackDgpParams(
        threshold=section["threshold"],
        x_level=section["x_level"],
        quality_coefs={"ivy": section["ivy_coef"], "advantage": section["advantage_coef"]},
        group_col=section["group_col"],
        group_shift=section["group_shift"],
        log_sd_ratio=section["log_sd_ratio"],
        sigma_fund=section["sigma_fund"],
    )


def event_params_from_config(cfg: dict) -> EventTimingParams:
    section = cfg["events"]
    return EventTimingParams(
        download_rate_bytes_per_s=section["download_rate_bytes_per_s"],
        read_time_median_s=section["read_time_median_s"],
        read_time_sigma=section["read_time_sigma"],
        open_delay_hours_scale=section["open_delay_hours_scale"],
        click_prob=section["click_prob"],
        reply_prob=section["reply_prob"],
        reopen_prob=section["reopen_prob"],
    )


def donation_params_from_config(cfg: dict) -> DonationDgpParams:
    section = cfg["donation_dgp"]
    return DonationDgpParams(
        base=section["base"],
        founder_effects={"female_founder": section["female_founder"]},
        investor_effects={"female_investor": section["female_investor"]},
        interaction_effects={
            ("female_founder", "female_investor"): section["female_x_female_investor"]
        },
        noise_scale=section["noise_scale"],
    )
