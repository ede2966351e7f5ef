"""Distributional group differences: P(Y > x | G=1) - P(Y > x | G=0) over x.

For every threshold x on a grid, the exceedance indicator is regressed on
the group dummy with heteroskedasticity-robust standard errors; with a
single binary regressor plus intercept the coefficient is exactly the
difference in exceedance proportions.  Sign changes of the coefficient
along the grid ("crossings") locate where the direction of the group gap
flips across the outcome distribution.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import pandas as pd
from scipy import stats
from sklearn.base import BaseEstimator

from ..validation import as_float_vector, check_binary
from .ols import FixedEffectsOLS


@dataclass
class CurveResult:
    """Coefficient curve with pointwise confidence band and crossings."""

    grid: np.ndarray
    coef: np.ndarray
    ci_low: np.ndarray
    ci_high: np.ndarray
    crossings: list[float] = field(default_factory=list)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            {
                "x": self.grid,
                "coef": self.coef,
                "ci_low": self.ci_low,
                "ci_high": self.ci_high,
            }
        )


def _find_crossings(grid: np.ndarray, coef: np.ndarray) -> list[float]:
    crossings: list[float] = []
    signs = np.sign(coef)
    nz = np.flatnonzero(signs != 0)
    # Exact zeros flanked by opposite signs count as crossings at that x.
    for i in np.flatnonzero(signs == 0):
        before = nz[nz < i]
        after = nz[nz > i]
        if len(before) and len(after) and signs[before[-1]] * signs[after[0]] < 0:
            crossings.append(float(grid[i]))
    for i in range(len(grid) - 1):
        a, b = coef[i], coef[i + 1]
        if np.isfinite(a) and np.isfinite(b) and a * b < 0:
            crossings.append(float(grid[i] + (grid[i + 1] - grid[i]) * a / (a - b)))
    return sorted(crossings)


class CdfDifferenceCurve(BaseEstimator):
    """Pointwise exceedance-gap curve between two groups.

    Parameters
    ----------
    grid : thresholds to evaluate; default is the integer grid spanning the
        observed outcome support.
    alpha : pointwise confidence level is 1 - alpha.

    Attributes (after fit)
    ----------------------
    grid_, coef_, se_, ci_low_, ci_high_, crossings_, result_.  At grid
    points where the exceedance indicator is degenerate (all 0 or all 1)
    the coefficient is reported with an absent (NaN) interval.
    """

    def __init__(self, grid=None, alpha: float = 0.05):
        self.grid = grid
        self.alpha = alpha

    def fit(self, y, group):
        yvec = as_float_vector(y, "y")
        g = check_binary(group, "group")
        if len(g) != len(yvec):
            raise ValueError("y and group must have equal length")
        if g.sum() == 0 or g.sum() == len(g):
            raise ValueError("both groups must be present")
        if self.grid is None:
            grid = np.arange(np.floor(yvec.min()) - 1, np.ceil(yvec.max()) + 1)
        else:
            grid = np.asarray(self.grid, dtype=float)
            if grid.ndim != 1 or len(grid) == 0:
                raise ValueError("grid must be a non-empty 1-D array")
        z = stats.norm.ppf(1.0 - self.alpha / 2.0)

        coef = np.empty(len(grid))
        se = np.full(len(grid), np.nan)
        for i, x in enumerate(grid):
            indicator = (yvec > x).astype(float)
            if indicator.min() == indicator.max():
                # Degenerate: both groups share the constant, so the gap is 0
                # but no sampling variance is estimable.
                coef[i] = 0.0
                continue
            fit = FixedEffectsOLS(se="robust").fit(
                pd.DataFrame({"group": g}), indicator
            )
            coef[i] = fit.result_["group"]
            se[i] = fit.result_.se[fit.result_.terms.index("group")]

        ci_low = coef - z * se
        ci_high = coef + z * se
        crossings = _find_crossings(grid, coef)

        self.grid_ = grid
        self.coef_ = coef
        self.se_ = se
        self.ci_low_ = ci_low
        self.ci_high_ = ci_high
        self.crossings_ = crossings
        self.result_ = CurveResult(
            grid=grid, coef=coef, ci_low=ci_low, ci_high=ci_high, crossings=crossings
        )
        return self


def write_curve(result: CurveResult, path) -> None:
    """Write ``curve.csv`` with columns x, coef, ci_low, ci_high."""
    result.to_frame().to_csv(path, index=False, float_format="%.12g")
