"""Decision-based heterogeneous effects with leave-one-out classification.

Respondents are split into "anti" and "pro" groups by the sign of their own
within-respondent slope of a classification outcome on the treatment.  Using
the full-sample slope creates a generated-regressor problem: the slope
contains the respondent's own error, which is correlated across outcome
questions, so the classification indicator is endogenous in the second
stage.  Leaving out observation j when classifying observation j restores
independence; the slope for cell (i, j) never touches (X_ij, Y_ij).

The second stage pools observations and regresses each outcome on
``1(slope<0) * X`` and ``1(slope>0) * X`` with respondent fixed effects.
Standard errors bootstrap whole respondents to cover both stages.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np
import pandas as pd
from sklearn.base import BaseEstimator

from ..validation import group_codes

_SXX_TOL = 1e-10


class LooError(ValueError):
    """Raised for inputs the split estimator cannot classify."""


def decision_slopes(y, x, investor, *, leave_one_out: bool = True) -> np.ndarray:
    """Per-observation within-investor slope of ``y`` on ``x``.

    With ``leave_one_out`` the slope for row j uses only the investor's
    other rows, demeaned over those rows, so it is exactly invariant to
    (x_j, y_j).  Without it, every row of an investor gets the full-sample
    within slope (the biased, generated-regressor classifier).  Rows whose
    slope is undefined (no x variation in the relevant subset, or subsets
    smaller than two rows) come back NaN.

    Rows with missing ``y`` receive the slope computed from the investor's
    non-missing rows; they never enter anyone's sums.
    """
    y = np.asarray(y, dtype=float)
    x = np.asarray(x, dtype=float)
    codes = group_codes(investor, "investor")
    if len(y) != len(x) or len(y) != len(codes):
        raise LooError("y, x and investor must have equal length")
    return _slopes_from_codes(y, x, codes, leave_one_out)


def _slopes_from_codes(y, x, codes, leave_one_out):
    n_inv = codes.max() + 1 if len(codes) else 0
    valid = np.isfinite(y) & np.isfinite(x)
    vx = np.where(valid, x, 0.0)
    vy = np.where(valid, y, 0.0)
    t_n = np.bincount(codes, weights=valid.astype(float), minlength=n_inv)
    t_x = np.bincount(codes, weights=vx, minlength=n_inv)
    t_y = np.bincount(codes, weights=vy, minlength=n_inv)
    t_xx = np.bincount(codes, weights=vx * vx, minlength=n_inv)
    t_xy = np.bincount(codes, weights=vx * vy, minlength=n_inv)

    slopes = np.full(len(y), np.nan)
    if leave_one_out:
        m = t_n[codes] - valid  # subset size once row j is left out
        sub_x = t_x[codes] - vx
        sub_y = t_y[codes] - vy
        sub_xx = t_xx[codes] - vx * vx
        sub_xy = t_xy[codes] - vx * vy
        with np.errstate(divide="ignore", invalid="ignore"):
            sxx = sub_xx - sub_x**2 / m
            sxy = sub_xy - sub_x * sub_y / m
        ok = (m >= 2) & (sxx > _SXX_TOL * np.maximum(1.0, sub_xx))
        slopes[ok] = sxy[ok] / sxx[ok]
    else:
        with np.errstate(divide="ignore", invalid="ignore"):
            sxx = t_xx - t_x**2 / t_n
            sxy = t_xy - t_x * t_y / t_n
        ok = (t_n >= 2) & (sxx > _SXX_TOL * np.maximum(1.0, t_xx))
        inv_slope = np.full(n_inv, np.nan)
        inv_slope[ok] = sxy[ok] / sxx[ok]
        slopes = inv_slope[codes]
    return slopes


def _within_split_fit(y, x, codes, is_anti, is_pro):
    """FE regression of y on (anti x, pro x); returns (coef_anti, coef_pro, n)."""
    use = np.isfinite(y) & (is_anti | is_pro)
    n = int(use.sum())
    if n == 0:
        return None, None, 0
    yy = y[use]
    codes_u = pd.factorize(codes[use])[0]
    n_groups = codes_u.max() + 1
    cols = []
    which = []
    xa = x[use] * is_anti[use]
    xp = x[use] * is_pro[use]
    if is_anti[use].any():
        cols.append(xa)
        which.append("anti")
    if is_pro[use].any():
        cols.append(xp)
        which.append("pro")
    X = np.column_stack(cols)

    counts = np.bincount(codes_u, minlength=n_groups).astype(float)
    ym = yy - (np.bincount(codes_u, weights=yy, minlength=n_groups) / counts)[codes_u]
    Xm = np.empty_like(X)
    for j in range(X.shape[1]):
        mean_j = np.bincount(codes_u, weights=X[:, j], minlength=n_groups) / counts
        Xm[:, j] = X[:, j] - mean_j[codes_u]
    xtx = Xm.T @ Xm
    if np.linalg.matrix_rank(xtx) < X.shape[1]:
        return None, None, n
    beta = np.linalg.solve(xtx, Xm.T @ ym)
    out = {"anti": None, "pro": None}
    for name, value in zip(which, beta):
        out[name] = float(value)
    return out["anti"], out["pro"], n


@dataclass
class OutcomeSplit:
    """Second-stage results for one outcome."""

    coef_anti: float | None
    coef_pro: float | None
    se_anti: float | None = None
    se_pro: float | None = None
    share_anti: float = 0.0
    share_pro: float = 0.0
    share_dropped: float = 0.0
    n_obs: int = 0


@dataclass
class LooResult:
    """Slopes, classification, and pooled split coefficients per outcome."""

    slopes: np.ndarray
    classification: np.ndarray  # "anti" | "pro" | "dropped"
    outcomes: Mapping[str, OutcomeSplit] = field(default_factory=dict)
    n_undefined: int = 0
    n_bootstrap: int = 0


class LeaveOneOutEffects(BaseEstimator):
    """Two-stage split estimator over a records table.

    Parameters
    ----------
    classify_on : column whose within-investor slope signs the split
        (default the contact-interest question).
    outcomes : columns fitted in the second stage.
    treatment : 0/1 treated-characteristic column.
    investor : respondent id column (fixed effect and bootstrap unit).
    leave_one_out : classify row j from the other rows only (True) or from
        the full sample including row j (False; the biased baseline).
    n_bootstrap : bootstrap replications over whole investors; 0 skips SEs.

    Attributes (after fit)
    ----------------------
    slopes_, classification_, share_anti_, share_pro_, share_dropped_,
    coef_anti_, coef_pro_, se_anti_, se_pro_ (per-outcome dicts), result_.
    """

    def __init__(
        self,
        classify_on: str = "q3",
        outcomes: Sequence[str] = ("q1", "q2", "q3", "q4"),
        treatment: str = "female",
        investor: str = "investor_id",
        leave_one_out: bool = True,
        n_bootstrap: int = 0,
        random_state: int | None = None,
    ):
        self.classify_on = classify_on
        self.outcomes = tuple(outcomes)
        self.treatment = treatment
        self.investor = investor
        self.leave_one_out = leave_one_out
        self.n_bootstrap = n_bootstrap
        self.random_state = random_state

    def _estimate(self, y_cls, x, codes, outcome_arrays):
        slopes = _slopes_from_codes(y_cls, x, codes, self.leave_one_out)
        dropped = np.isnan(slopes) | (slopes == 0.0)
        is_anti = ~dropped & (slopes < 0)
        is_pro = ~dropped & (slopes > 0)
        per_outcome = {}
        for name, y in outcome_arrays.items():
            present = np.isfinite(y)
            n_out = int(present.sum())
            share_anti = float((is_anti & present).sum() / n_out) if n_out else 0.0
            share_pro = float((is_pro & present).sum() / n_out) if n_out else 0.0
            coef_anti, coef_pro, n_used = _within_split_fit(y, x, codes, is_anti, is_pro)
            per_outcome[name] = OutcomeSplit(
                coef_anti=coef_anti,
                coef_pro=coef_pro,
                share_anti=share_anti,
                share_pro=share_pro,
                share_dropped=1.0 - share_anti - share_pro,
                n_obs=n_used,
            )
        return slopes, is_anti, is_pro, dropped, per_outcome

    def fit(self, records: pd.DataFrame):
        needed = {self.classify_on, self.treatment, self.investor, *self.outcomes}
        missing = needed - set(records.columns)
        if missing:
            raise LooError(f"records missing columns: {sorted(missing)}")
        records = records.reset_index(drop=True)
        y_cls = records[self.classify_on].to_numpy(dtype=float)
        x = records[self.treatment].to_numpy(dtype=float)
        codes = group_codes(records[self.investor].to_numpy(), "investor")
        outcome_arrays = {
            name: records[name].to_numpy(dtype=float) for name in self.outcomes
        }

        slopes, is_anti, is_pro, dropped, per_outcome = self._estimate(
            y_cls, x, codes, outcome_arrays
        )

        if self.n_bootstrap > 0:
            draws = self._bootstrap(y_cls, x, codes, outcome_arrays)
            for name in self.outcomes:
                anti = np.array([d[name][0] for d in draws if d[name][0] is not None])
                pro = np.array([d[name][1] for d in draws if d[name][1] is not None])
                split = per_outcome[name]
                split.se_anti = float(anti.std(ddof=1)) if len(anti) > 1 else None
                split.se_pro = float(pro.std(ddof=1)) if len(pro) > 1 else None

        self.slopes_ = slopes
        self.classification_ = np.where(dropped, "dropped", np.where(is_anti, "anti", "pro"))
        self.coef_anti_ = {k: v.coef_anti for k, v in per_outcome.items()}
        self.coef_pro_ = {k: v.coef_pro for k, v in per_outcome.items()}
        self.se_anti_ = {k: v.se_anti for k, v in per_outcome.items()}
        self.se_pro_ = {k: v.se_pro for k, v in per_outcome.items()}
        self.share_anti_ = {k: v.share_anti for k, v in per_outcome.items()}
        self.share_pro_ = {k: v.share_pro for k, v in per_outcome.items()}
        self.share_dropped_ = {k: v.share_dropped for k, v in per_outcome.items()}
        self.result_ = LooResult(
            slopes=slopes,
            classification=self.classification_,
            outcomes=per_outcome,
            n_undefined=int(np.isnan(slopes).sum()),
            n_bootstrap=self.n_bootstrap,
        )
        return self

    def _bootstrap(self, y_cls, x, codes, outcome_arrays):
        """Resample whole investors with replacement; redo both stages."""
        rng = np.random.default_rng(self.random_state)
        n_inv = codes.max() + 1
        rows_of = [np.flatnonzero(codes == i) for i in range(n_inv)]
        sizes = np.array([len(r) for r in rows_of])
        draws = []
        for _ in range(self.n_bootstrap):
            chosen = rng.integers(0, n_inv, size=n_inv)
            idx = np.concatenate([rows_of[i] for i in chosen])
            # Each resampled copy acts as a distinct investor.
            new_codes = np.repeat(np.arange(n_inv), sizes[chosen])
            sample_outcomes = {k: v[idx] for k, v in outcome_arrays.items()}
            _, _, _, _, per_outcome = self._estimate(
                y_cls[idx], x[idx], new_codes, sample_outcomes
            )
            draws.append({k: (v.coef_anti, v.coef_pro) for k, v in per_outcome.items()})
        return draws

    def summary_frame(self) -> pd.DataFrame:
        rows = []
        for outcome, split in self.result_.outcomes.items():
            rows.append(
                {
                    "outcome": outcome,
                    "coef_anti": split.coef_anti,
                    "se_anti": split.se_anti,
                    "coef_pro": split.coef_pro,
                    "se_pro": split.se_pro,
                    "share_anti": split.share_anti,
                    "share_pro": split.share_pro,
                    "share_dropped": split.share_dropped,
                    "n_obs": split.n_obs,
                }
            )
        return pd.DataFrame(rows)
