"""Synthetic respondent behavior with known ground truth.

Evaluations follow the latent linear model Y = investor effect + treatment
slopes + per-question noise (cross-question correlated); email opens follow
a threshold rule on perceived quality whose noise standard deviation may
differ by group; event logs replay the tracking protocol for the simulated
opens.  Every knob that an estimator is supposed to recover is a parameter
here, so simulations double as oracles.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from datetime import datetime, timedelta
from typing import Mapping, Sequence

import numpy as np
import pandas as pd
from scipy.special import ndtr

from .design import CampaignSchedule
from .events import DOWNLOAD_RATE_BYTES_PER_S, EmailEvent


class DgpError(ValueError):
    """Raised for inconsistent simulation parameters."""


QUESTIONS = ("q1", "q2", "q3", "q4", "q5")
QUESTION_MAX = {"q1": 100.0, "q2": 100.0, "q3": 100.0, "q4": 20.0, "q5": 100.0}


@dataclass(frozen=True)
class TreatmentEffect:
    """Investor-level mixture of slopes for one treated characteristic.

    A share ``share_anti`` of investors responds with ``effect_anti`` on
    each question; the rest respond with ``effect_pro``.  ``second_half_shift``
    is added to the active slope for profiles shown after the break.
    """

    share_anti: float = 0.0
    effect_anti: Mapping[str, float] = field(default_factory=dict)
    effect_pro: Mapping[str, float] = field(default_factory=dict)
    second_half_shift: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self):
        if not 0.0 <= self.share_anti <= 1.0:
            raise DgpError(f"share_anti must lie in [0, 1], got {self.share_anti}")


@dataclass
class EvalDgpParams:
    """Data-generating process for profile evaluations."""

    baselines: Mapping[str, float] = field(
        default_factory=lambda: {"q1": 50.0, "q2": 50.0, "q3": 50.0, "q4": 10.0, "q5": 50.0}
    )
    alpha_scale: float = 10.0  # sd of the common investor effect
    eta_scales: Mapping[str, float] = field(
        default_factory=lambda: {q: 0.0 for q in QUESTIONS}
    )
    noise_scales: Mapping[str, float] = field(
        default_factory=lambda: {"q1": 10.0, "q2": 10.0, "q3": 10.0, "q4": 2.0, "q5": 10.0}
    )
    error_correlation: np.ndarray | None = None  # len(QUESTIONS) square, default identity
    treatments: Mapping[str, TreatmentEffect] = field(default_factory=dict)
    missing_prob: Mapping[str, float] = field(default_factory=dict)
    response_time_median_s: float = 40.0
    response_time_sigma: float = 0.6
    second_half_time_factor: float = 0.55
    clip_to_scale: bool = True

    def __post_init__(self):
        if self.error_correlation is None:
            self.error_correlation = np.eye(len(QUESTIONS))
        corr = np.asarray(self.error_correlation, dtype=float)
        k = len(QUESTIONS)
        if corr.shape != (k, k):
            raise DgpError(f"error_correlation must be {k}x{k}")
        if not np.allclose(corr, corr.T):
            raise DgpError("error_correlation must be symmetric")
        eigmin = np.linalg.eigvalsh(corr).min()
        if eigmin < -1e-10:
            raise DgpError("error_correlation must be positive semi-definite")
        self.error_correlation = corr
        for q, p in self.missing_prob.items():
            if not 0.0 <= p <= 1.0:
                raise DgpError(f"missing probability for {q} must lie in [0, 1]")


def _corr_factor(corr: np.ndarray) -> np.ndarray:
    # PSD-safe square root (allows singular correlation matrices).
    vals, vecs = np.linalg.eigh(corr)
    vals = np.clip(vals, 0.0, None)
    return vecs * np.sqrt(vals)


def simulate_evaluations(
    rng: np.random.Generator,
    profiles: pd.DataFrame,
    params: EvalDgpParams,
) -> pd.DataFrame:
    """Generate evaluation records for a profile table.

    ``profiles`` must carry ``investor_id``, ``profile_id``, ``order_index``,
    ``second_half`` and a 0/1 column for every treated characteristic in
    ``params.treatments``.  The returned records append ``q1``..``q5``,
    ``response_seconds`` and hidden ground-truth columns (``true_*``) that
    never feed back into the observables.
    """
    required = {"investor_id", "profile_id", "order_index", "second_half"}
    missing = required - set(profiles.columns)
    if missing:
        raise DgpError(f"profiles table missing columns: {sorted(missing)}")
    for char in params.treatments:
        if char not in profiles.columns:
            raise DgpError(f"treated characteristic {char!r} not in profiles table")

    records = profiles.copy().reset_index(drop=True)
    n = len(records)
    investor_ids, inv_index = np.unique(records["investor_id"].astype(str), return_inverse=True)
    n_inv = len(investor_ids)

    alpha = rng.normal(0.0, params.alpha_scale, size=n_inv)
    eta = {
        q: rng.normal(0.0, params.eta_scales.get(q, 0.0), size=n_inv) for q in QUESTIONS
    }

    # Investor types and active slopes per treated characteristic.
    slopes: dict[str, dict[str, np.ndarray]] = {}
    for char, effect in params.treatments.items():
        is_anti = rng.random(n_inv) < effect.share_anti
        records[f"true_type_{char}"] = np.where(is_anti[inv_index], "anti", "pro")
        slopes[char] = {}
        for q in QUESTIONS:
            base = np.where(
                is_anti,
                effect.effect_anti.get(q, 0.0),
                effect.effect_pro.get(q, 0.0),
            )
            slopes[char][q] = base

    scales = np.array([params.noise_scales.get(q, 0.0) for q in QUESTIONS])
    factor = _corr_factor(params.error_correlation)
    shocks = rng.standard_normal((n, len(QUESTIONS))) @ factor.T * scales

    second_half = records["second_half"].to_numpy().astype(bool)
    for qi, q in enumerate(QUESTIONS):
        y = np.full(n, params.baselines.get(q, 0.0))
        y = y + alpha[inv_index] + eta[q][inv_index]
        for char, effect in params.treatments.items():
            x = records[char].to_numpy(dtype=float)
            slope = slopes[char][q][inv_index].astype(float).copy()
            shift = effect.second_half_shift.get(q, 0.0)
            slope[second_half] += shift
            records[f"true_slope_{q}_{char}"] = slope
            y = y + x * slope
        y = y + shocks[:, qi]
        if params.clip_to_scale:
            y = np.clip(y, 0.0, QUESTION_MAX[q])
        p_miss = params.missing_prob.get(q, 0.0)
        if p_miss > 0:
            y = np.where(rng.random(n) < p_miss, np.nan, y)
        records[q] = y

    records["true_alpha"] = alpha[inv_index]
    mu = np.log(params.response_time_median_s)
    seconds = rng.lognormal(mu, params.response_time_sigma, size=n)
    seconds = np.where(second_half, seconds * params.second_half_time_factor, seconds)
    records["response_seconds"] = seconds
    return records


@dataclass
class CallbackDgpParams:
    """Threshold model for email opens.

    An email is opened when latent quality ``x_level + quality coefs . bits
    + group_shift * G + fund effect + noise`` clears ``threshold``; noise sd
    is 1 for the reference group and ``exp(log_sd_ratio)`` for the treated
    group.  With ``upper_threshold`` set, opens additionally require the
    latent index to stay below it (the "overqualified" rejection band).
    """

    threshold: float = 1.0
    upper_threshold: float | None = None
    x_level: float = 0.0
    quality_coefs: Mapping[str, float] = field(
        default_factory=lambda: {"ivy": 0.5, "advantage": 0.25}
    )
    group_col: str = "female"
    group_shift: float = 0.0
    log_sd_ratio: float = 0.0
    sigma_fund: float = 0.0

    def __post_init__(self):
        if self.sigma_fund < 0:
            raise DgpError("sigma_fund must be non-negative")
        if self.upper_threshold is not None and self.upper_threshold <= self.threshold:
            raise DgpError(
                f"upper threshold {self.upper_threshold} must exceed "
                f"lower threshold {self.threshold}"
            )


def _schedule_frame(schedule) -> pd.DataFrame:
    if isinstance(schedule, CampaignSchedule):
        return schedule.to_frame()
    return schedule.copy()


def _latent_index(frame: pd.DataFrame, params: CallbackDgpParams):
    mu = np.full(len(frame), params.x_level, dtype=float)
    for col, coef in params.quality_coefs.items():
        if col not in frame.columns:
            raise DgpError(f"schedule missing quality column {col!r}")
        mu = mu + coef * frame[col].to_numpy(dtype=float)
    g = frame[params.group_col].to_numpy(dtype=float)
    if not np.all(np.isin(np.unique(g), (0.0, 1.0))):
        raise DgpError(f"group column {params.group_col!r} must be binary")
    mu = mu + params.group_shift * g
    sd = np.sqrt(np.exp(2.0 * params.log_sd_ratio * g) + params.sigma_fund**2)
    return mu, sd, g


def open_probability(frame: pd.DataFrame, params: CallbackDgpParams) -> np.ndarray:
    """Analytic open probability per email under the single-threshold rule."""
    mu, sd, _ = _latent_index(_schedule_frame(frame), params)
    return ndtr((mu - params.threshold) / sd)


def interval_open_probability(frame: pd.DataFrame, params: CallbackDgpParams) -> np.ndarray:
    """Analytic open probability under the two-threshold (band) rule."""
    if params.upper_threshold is None:
        raise DgpError("two-threshold probability requires upper_threshold")
    mu, sd, _ = _latent_index(_schedule_frame(frame), params)
    upper = ndtr((params.upper_threshold - mu) / sd)
    lower = ndtr((params.threshold - mu) / sd)
    return upper - lower


def _draw_latent(rng, frame: pd.DataFrame, params: CallbackDgpParams) -> np.ndarray:
    mu = np.full(len(frame), params.x_level, dtype=float)
    for col, coef in params.quality_coefs.items():
        mu = mu + coef * frame[col].to_numpy(dtype=float)
    g = frame[params.group_col].to_numpy(dtype=float)
    mu = mu + params.group_shift * g
    noise_sd = np.exp(params.log_sd_ratio * g)
    latent = mu + rng.standard_normal(len(frame)) * noise_sd
    if params.sigma_fund > 0:
        funds, fund_index = np.unique(frame["fund_id"].astype(str), return_inverse=True)
        fund_effect = rng.normal(0.0, params.sigma_fund, size=len(funds))
        latent = latent + fund_effect[fund_index]
    return latent


def simulate_callbacks(
    rng: np.random.Generator,
    schedule,
    params: CallbackDgpParams,
) -> pd.DataFrame:
    """Draw open indicators for a campaign schedule (single threshold)."""
    frame = _schedule_frame(schedule)
    mu, sd, _ = _latent_index(frame, params)  # validates columns
    latent = _draw_latent(rng, frame, params)
    out = frame[["email_id"]].copy()
    out["opened"] = latent > params.threshold
    return out


def simulate_two_threshold_callbacks(
    rng: np.random.Generator,
    schedule,
    params: CallbackDgpParams,
) -> pd.DataFrame:
    """Draw open indicators under the non-monotonic (band) decision rule."""
    if params.upper_threshold is None:
        raise DgpError("two-threshold simulation requires upper_threshold")
    frame = _schedule_frame(schedule)
    _latent_index(frame, params)
    latent = _draw_latent(rng, frame, params)
    out = frame[["email_id"]].copy()
    out["opened"] = (latent > params.threshold) & (latent < params.upper_threshold)
    return out


@dataclass
class EventTimingParams:
    """Timing and engagement model for the tracked event log."""

    download_rate_bytes_per_s: int = DOWNLOAD_RATE_BYTES_PER_S
    read_time_median_s: float = 10.33
    read_time_sigma: float = 0.8
    open_delay_hours_scale: float = 24.0
    click_prob: float = 0.02
    reply_prob: float = 0.015
    reopen_prob: float = 0.0
    start_date: datetime = field(default_factory=lambda: datetime(2020, 3, 2))

    def __post_init__(self):
        if self.download_rate_bytes_per_s <= 0:
            raise DgpError("download rate must be positive")
        for name in ("click_prob", "reply_prob", "reopen_prob"):
            p = getattr(self, name)
            if not 0.0 <= p <= 1.0:
                raise DgpError(f"{name} must lie in [0, 1]")


def emit_event_log(
    rng: np.random.Generator,
    schedule,
    opens: pd.DataFrame,
    params: EventTimingParams | None = None,
) -> list[EmailEvent]:
    """Replay the tracking protocol for simulated opens.

    Every email emits ``sent``; opened emails add ``pixel_fetch`` then
    ``bytes_progress`` with bytes = round(read_seconds * download rate),
    optional repeat opens, and click/reply events.  Unopened emails emit
    nothing else.
    """
    params = params or EventTimingParams()
    frame = _schedule_frame(schedule)
    if "send_day" not in frame.columns:
        raise DgpError("schedule has no send_day column; schedule the campaign first")
    opened = opens.set_index("email_id")["opened"]
    events: list[EmailEvent] = []
    for _, row in frame.iterrows():
        email_id = row["email_id"]
        sent_at = params.start_date + timedelta(days=int(row["send_day"]))
        events.append(EmailEvent(email_id, "sent", sent_at))
        if not bool(opened.get(email_id, False)):
            continue
        delay_s = float(rng.exponential(params.open_delay_hours_scale * 3600.0))
        opened_at = sent_at + timedelta(seconds=round(delay_s, 3))
        events.append(EmailEvent(email_id, "pixel_fetch", opened_at))
        read_s = float(rng.lognormal(np.log(params.read_time_median_s), params.read_time_sigma))
        n_bytes = int(round(read_s * params.download_rate_bytes_per_s))
        progress_at = opened_at + timedelta(seconds=round(read_s, 3))
        events.append(EmailEvent(email_id, "bytes_progress", progress_at, bytes=n_bytes))
        last_at = progress_at
        while params.reopen_prob > 0 and rng.random() < params.reopen_prob:
            gap_s = float(rng.exponential(params.open_delay_hours_scale * 3600.0))
            last_at = last_at + timedelta(seconds=round(gap_s, 3))
            events.append(EmailEvent(email_id, "pixel_fetch", last_at))
        if rng.random() < params.click_prob:
            last_at = last_at + timedelta(seconds=30)
            events.append(EmailEvent(email_id, "click", last_at))
        if rng.random() < params.reply_prob:
            last_at = last_at + timedelta(seconds=60)
            events.append(EmailEvent(email_id, "reply", last_at))
    return events


@dataclass
class DonationDgpParams:
    """Dictator-game donations censored to the gift-card budget."""

    base: float = 11.10
    founder_effects: Mapping[str, float] = field(default_factory=dict)
    investor_effects: Mapping[str, float] = field(default_factory=dict)
    interaction_effects: Mapping[tuple, float] = field(default_factory=dict)
    noise_scale: float = 4.0
    max_amount: float = 15.0

    def __post_init__(self):
        if self.max_amount <= 0:
            raise DgpError("max_amount must be positive")
        if self.noise_scale < 0:
            raise DgpError("noise_scale must be non-negative")


def simulate_donations(
    rng: np.random.Generator,
    investors: pd.DataFrame,
    params: DonationDgpParams,
    *,
    founder_cols: Sequence[str] = ("female_founder", "asian_founder"),
) -> pd.DataFrame:
    """Donation per investor toward one randomly displayed founder cell.

    ``founder_effects`` keys must be founder columns, ``investor_effects``
    keys investor columns, and ``interaction_effects`` keys
    (founder column, investor column) pairs.  The linear index is censored
    to [0, max_amount], mimicking the budget slider.
    """
    n = len(investors)
    out = investors.copy().reset_index(drop=True)
    for col in founder_cols:
        out[col] = rng.integers(0, 2, size=n)
    amount = np.full(n, params.base, dtype=float)
    for col, coef in params.founder_effects.items():
        amount += coef * out[col].to_numpy(dtype=float)
    for col, coef in params.investor_effects.items():
        amount += coef * out[col].to_numpy(dtype=float)
    for (f_col, i_col), coef in params.interaction_effects.items():
        amount += coef * out[f_col].to_numpy(dtype=float) * out[i_col].to_numpy(dtype=float)
    if params.noise_scale > 0:
        amount += rng.normal(0.0, params.noise_scale, size=n)
    out["donation"] = np.clip(amount, 0.0, params.max_amount)
    return out


def truth_table(params) -> pd.DataFrame:
    """Flatten a params dataclass to a (parameter, value) sidecar table."""
    rows = []

    def emit(prefix, value):
        if isinstance(value, Mapping):
            for key, sub in value.items():
                emit(f"{prefix}.{key}", sub)
        elif isinstance(value, TreatmentEffect):
            emit(f"{prefix}.share_anti", value.share_anti)
            emit(f"{prefix}.effect_anti", value.effect_anti)
            emit(f"{prefix}.effect_pro", value.effect_pro)
            emit(f"{prefix}.second_half_shift", value.second_half_shift)
        elif isinstance(value, np.ndarray):
            rows.append((prefix, np.array2string(value, separator=",")))
        elif isinstance(value, datetime):
            rows.append((prefix, value.isoformat()))
        elif isinstance(value, (int, float, str, bool)) or value is None:
            rows.append((prefix, value))
        else:
            rows.append((prefix, repr(value)))

    for name, value in vars(params).items():
        emit(name, value)
    return pd.DataFrame(rows, columns=["parameter", "value"])
