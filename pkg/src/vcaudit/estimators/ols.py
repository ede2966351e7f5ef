"""Fixed-effects OLS with robust and cluster-robust inference.

Group effects are absorbed by the within transformation (demeaning by the
fixed-effect group), which yields the same slope estimates and residuals as
explicit group dummies.  Sandwich variance estimators use the absorbed
parameter count in their degrees-of-freedom corrections, so cluster and
robust versions agree exactly when every cluster is a singleton.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
import pandas as pd
from scipy import stats
from sklearn.base import BaseEstimator

from ..validation import as_float_matrix, as_float_vector, group_codes


class RankDeficiencyError(ValueError):
    """Raised when regressors are collinear after demeaning."""


class InferenceError(ValueError):
    """Raised when a variance estimator is undefined for the data."""


@dataclass
class FitResult:
    """Point estimates plus the variance matrix behind one regression table column."""

    terms: list[str]
    estimates: np.ndarray
    vcov: np.ndarray
    se_kind: str
    n_obs: int
    n_groups_absorbed: int = 0
    df_inference: int | None = None
    r_squared: float | None = None
    log_likelihood: float | None = None
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        self.estimates = np.asarray(self.estimates, dtype=float)
        self.vcov = np.asarray(self.vcov, dtype=float)
        if self.vcov.shape != (len(self.terms), len(self.terms)):
            raise ValueError("vcov shape does not match number of terms")
        if np.any(np.diag(self.vcov) < -1e-12):
            raise ValueError("vcov has negative diagonal entries")

    @property
    def se(self) -> np.ndarray:
        return np.sqrt(np.clip(np.diag(self.vcov), 0.0, None))

    @property
    def tstats(self) -> np.ndarray:
        with np.errstate(divide="ignore", invalid="ignore"):
            return self.estimates / self.se

    @property
    def pvalues(self) -> np.ndarray:
        t = np.abs(self.tstats)
        if self.df_inference is not None and self.df_inference > 0:
            return 2.0 * stats.t.sf(t, self.df_inference)
        return 2.0 * stats.norm.sf(t)

    def __getitem__(self, term: str) -> float:
        return float(self.estimates[self.terms.index(term)])

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            {
                "term": self.terms,
                "estimate": self.estimates,
                "se": self.se,
                "t": self.tstats,
                "p": self.pvalues,
            }
        )


def write_fit(result: FitResult, csv_path, meta_path=None) -> None:
    """Write ``fit.csv`` (term, estimate, se, t, p) and an optional meta sidecar."""
    result.to_frame().to_csv(csv_path, index=False, float_format="%.12g")
    if meta_path is not None:
        meta = {
            "se_kind": result.se_kind,
            "n_obs": result.n_obs,
            "n_groups_absorbed": result.n_groups_absorbed,
            "r_squared": result.r_squared,
            "log_likelihood": result.log_likelihood,
        }
        meta.update({k: v for k, v in result.extra.items() if _jsonable(v)})
        with open(meta_path, "w", encoding="utf-8") as fh:
            json.dump(meta, fh, indent=2, sort_keys=True, default=str)
            fh.write("\n")


def _jsonable(value) -> bool:
    return isinstance(value, (str, int, float, bool, list, tuple, dict, type(None)))


def _check_rank(X: np.ndarray, names: list[str]) -> None:
    if X.shape[0] < X.shape[1]:
        raise RankDeficiencyError(
            f"more regressors ({X.shape[1]}) than observations ({X.shape[0]})"
        )
    scale = np.sqrt((X**2).sum(axis=0))
    scale[scale == 0] = 1.0
    r = np.linalg.qr(X / scale, mode="r")
    bad = np.abs(np.diag(r)) < 1e-8
    if bad.any():
        offenders = [names[j] for j in np.flatnonzero(bad)]
        raise RankDeficiencyError(
            f"regressors collinear after demeaning: {offenders}"
        )


def _demean_by_group(values: np.ndarray, codes: np.ndarray, n_groups: int) -> np.ndarray:
    counts = np.bincount(codes, minlength=n_groups).astype(float)
    if values.ndim == 1:
        sums = np.bincount(codes, weights=values, minlength=n_groups)
        return values - (sums / counts)[codes]
    out = np.empty_like(values)
    for j in range(values.shape[1]):
        sums = np.bincount(codes, weights=values[:, j], minlength=n_groups)
        out[:, j] = values[:, j] - (sums / counts)[codes]
    return out


def robust_vcov(X: np.ndarray, residuals: np.ndarray, *, n_params_absorbed: int = 0) -> np.ndarray:
    """Heteroskedasticity-consistent sandwich (HC1-style dof correction)."""
    n, k = X.shape
    df = n - k - n_params_absorbed
    if df <= 0:
        raise InferenceError("non-positive residual degrees of freedom")
    bread = np.linalg.inv(X.T @ X)
    meat = (X * residuals[:, None]**2).T @ X
    return bread @ meat @ bread * (n / df)


def cluster_vcov(
    X: np.ndarray,
    residuals: np.ndarray,
    cluster,
    *,
    n_params_absorbed: int = 0,
) -> np.ndarray:
    """Cluster-robust sandwich: score contributions summed within clusters."""
    n, k = X.shape
    codes = group_codes(cluster, "cluster")
    n_clusters = codes.max() + 1
    if n_clusters < 2:
        raise InferenceError("cluster-robust inference needs at least two clusters")
    df = n - k - n_params_absorbed
    if df <= 0:
        raise InferenceError("non-positive residual degrees of freedom")
    scores = X * residuals[:, None]
    cluster_scores = np.zeros((n_clusters, k))
    np.add.at(cluster_scores, codes, scores)
    bread = np.linalg.inv(X.T @ X)
    meat = cluster_scores.T @ cluster_scores
    correction = (n_clusters / (n_clusters - 1)) * ((n - 1) / df)
    return bread @ meat @ bread * correction


class FixedEffectsOLS(BaseEstimator):
    """Least squares with absorbed group effects.

    Parameters
    ----------
    se : {"robust", "cluster", "classical"}
        Variance estimator.  "cluster" requires cluster ids at fit time.
    add_intercept : bool or "auto"
        Include a constant term.  "auto" adds one only when no fixed-effect
        groups are supplied (the within transformation makes an intercept
        redundant otherwise).

    Attributes (after fit)
    ----------------------
    coef_, se_, vcov_, resid_, fitted_, r_squared_, n_obs_, n_groups_,
    feature_names_in_, result_ (a :class:`FitResult`).
    """

    def __init__(self, se: str = "robust", add_intercept="auto"):
        self.se = se
        self.add_intercept = add_intercept

    def fit(self, X, y, groups=None, cluster=None):
        if self.se not in ("robust", "cluster", "classical"):
            raise ValueError(f"unknown se kind {self.se!r}")
        if self.se == "cluster" and cluster is None:
            raise InferenceError("se='cluster' requires cluster ids")
        Xmat, names = as_float_matrix(X)
        yvec = as_float_vector(y, "y", n_rows=Xmat.shape[0])
        n = Xmat.shape[0]

        use_intercept = self.add_intercept is True or (
            self.add_intercept == "auto" and groups is None
        )
        if use_intercept:
            Xmat = np.column_stack([np.ones(n), Xmat])
            names = ["const", *names]

        if groups is not None:
            codes = group_codes(groups, "groups")
            n_groups = codes.max() + 1
            Xw = _demean_by_group(Xmat, codes, n_groups)
            yw = _demean_by_group(yvec, codes, n_groups)
        else:
            codes = None
            n_groups = 0
            Xw, yw = Xmat, yvec

        _check_rank(Xw, names)
        beta, *_ = np.linalg.lstsq(Xw, yw, rcond=None)
        resid = yw - Xw @ beta
        ssr = float((resid**2).sum())
        if n_groups > 0:
            ss_tot = float((yw**2).sum())  # within variation
        elif use_intercept:
            ss_tot = float(((yvec - yvec.mean()) ** 2).sum())
        else:
            ss_tot = float((yvec**2).sum())  # uncentered
        r2 = 1.0 - ssr / ss_tot if ss_tot > 0 else 0.0

        k = Xw.shape[1]
        df = n - k - n_groups
        if df <= 0:
            raise InferenceError("model has no residual degrees of freedom")
        if self.se == "classical":
            sigma2 = ssr / df
            vcov = sigma2 * np.linalg.inv(Xw.T @ Xw)
            df_inf = df
        elif self.se == "robust":
            vcov = robust_vcov(Xw, resid, n_params_absorbed=n_groups)
            df_inf = df
        else:
            vcov = cluster_vcov(Xw, resid, cluster, n_params_absorbed=n_groups)
            df_inf = int(group_codes(cluster, "cluster").max())  # M - 1

        self.feature_names_in_ = names
        self.coef_ = beta
        self.vcov_ = vcov
        self.se_ = np.sqrt(np.clip(np.diag(vcov), 0.0, None))
        self.resid_ = resid
        self.fitted_ = yvec - resid
        self.r_squared_ = r2
        self.n_obs_ = n
        self.n_groups_ = int(n_groups)
        self.result_ = FitResult(
            terms=list(names),
            estimates=beta,
            vcov=vcov,
            se_kind=self.se if self.se != "cluster" else "cluster",
            n_obs=n,
            n_groups_absorbed=int(n_groups),
            df_inference=df_inf,
            r_squared=r2,
        )
        return self

    def fit_panel(self, panel, se: str | None = None):
        """Convenience: fit from a :class:`~vcaudit.panel.Panel`."""
        if se is not None:
            self.se = se
        return self.fit(
            panel.X, panel.outcome, groups=panel.fe_group, cluster=panel.cluster
        )


def ivy_scaled_ratio(result: FitResult, numerator_terms, denominator_term: str) -> float:
    """Sum of numerator coefficients divided by the benchmark coefficient.

    Used to express an effect relative to a yardstick effect from the same
    regression (e.g. a group gap scaled by the elite-college premium).
    """
    missing = [t for t in (*numerator_terms, denominator_term) if t not in result.terms]
    if missing:
        raise ValueError(f"terms not in fit: {missing}")
    denom = result[denominator_term]
    if abs(denom) < 1e-12:
        raise ZeroDivisionError(
            f"denominator coefficient {denominator_term!r} is numerically zero"
        )
    return float(sum(result[t] for t in numerator_terms) / denom)
