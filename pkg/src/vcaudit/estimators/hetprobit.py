"""Heteroskedastic probit with variance-ratio identification.

Latent model: the outcome is 1 when ``intercept + X b + d G + e`` is
positive, where sd(e) = 1 for the reference group and ``exp(w)`` for the
treated group.  Variation in observable quality identifies the scale of the
treated group's unobservables, separating a level shift on the group
indicator from a variance difference (the confound behind spurious
audit-study results).  The intercept equals minus the decision threshold.

Fitting is quasi-Newton (BFGS, analytic gradient) on the mean
log-likelihood with multi starts over the log-sd-ratio, cluster-robust
covariance when cluster ids are given, a Wald test of sd ratio = 1, and an
exact level/variance decomposition of the group marginal effect.
"""

from __future__ import annotations

import numpy as np
from scipy import optimize, stats
from scipy.special import log_ndtr, ndtr
from sklearn.base import BaseEstimator

from ..validation import as_float_matrix, as_float_vector, check_binary, group_codes
from .ols import FitResult

_LOG_SQRT_2PI = 0.5 * np.log(2.0 * np.pi)


class ConvergenceError(RuntimeError):
    """Raised when no optimizer start reaches the convergence criterion."""


class IdentificationError(ValueError):
    """Raised when the data cannot identify the model parameters."""


def _unpack(params, k):
    params = np.asarray(params, dtype=float)
    if params.shape != (k + 3,):
        raise ValueError(f"expected {k + 3} parameters, got shape {params.shape}")
    return params[0], params[1 : k + 1], params[k + 1], params[k + 2]


def _zscore(params, X, g):
    a, beta, gamma, omega = _unpack(params, X.shape[1])
    eta = a + X @ beta + gamma * g
    scale = np.exp(-omega * g)
    return eta, scale


def het_probit_loglik(params, X, y, group) -> float:
    """Log-likelihood at ``params = [intercept, *coef, group_coef, log_sd_ratio]``.

    The intercept is minus the decision threshold; the latent z-score is
    ``(intercept + X coef + group_coef * G) * exp(-log_sd_ratio * G)``.
    """
    X, _ = as_float_matrix(X)
    y = check_binary(y, "y")
    g = check_binary(group, "group")
    eta, scale = _zscore(params, X, g)
    z = eta * scale
    return float(np.sum(np.where(y > 0, log_ndtr(z), log_ndtr(-z))))


def het_probit_score(params, X, y, group) -> np.ndarray:
    """Analytic gradient of :func:`het_probit_loglik` in the same order."""
    X, _ = as_float_matrix(X)
    y = check_binary(y, "y")
    g = check_binary(group, "group")
    eta, scale = _zscore(params, X, g)
    z = eta * scale
    lam = _generalized_residual(z, y)
    dz = lam * scale
    grad = np.empty(X.shape[1] + 3)
    grad[0] = dz.sum()
    grad[1 : X.shape[1] + 1] = X.T @ dz
    grad[X.shape[1] + 1] = dz @ g
    grad[X.shape[1] + 2] = -(lam * g * z).sum()
    return grad


def _generalized_residual(z, y):
    # d loglik / dz per observation, computed in log space for tail stability.
    log_pdf = -0.5 * z**2 - _LOG_SQRT_2PI
    lam_pos = np.exp(log_pdf - log_ndtr(z))
    lam_neg = -np.exp(log_pdf - log_ndtr(-z))
    return np.where(y > 0, lam_pos, lam_neg)


def _score_rows(params, X, y, g):
    eta, scale = _zscore(params, X, g)
    z = eta * scale
    lam = _generalized_residual(z, y)
    dz = lam * scale
    cols = [dz[:, None], X * dz[:, None], (dz * g)[:, None], (-(lam * g * z))[:, None]]
    return np.hstack(cols)


def marginal_decomposition(intercept, coef, group_coef, log_sd_ratio, x_mean, g_mean):
    """Group marginal effect at covariate means, split into level and variance.

    Treating the group indicator as continuous, the derivative of the fitted
    probability splits exactly: the level part moves the latent mean, the
    variance part rescales the unobservables.
    """
    x_mean = np.asarray(x_mean, dtype=float)
    eta = intercept + float(x_mean @ np.asarray(coef, dtype=float)) + group_coef * g_mean
    scale = np.exp(-log_sd_ratio * g_mean)
    z = eta * scale
    pdf = float(stats.norm.pdf(z))
    level = pdf * group_coef * scale
    variance = -pdf * z * log_sd_ratio
    return {"total": level + variance, "level": level, "variance": variance}


def _finite_diff_hessian(score_fn, params, rel_step=1e-5):
    k = len(params)
    H = np.zeros((k, k))
    for j in range(k):
        h = rel_step * max(1.0, abs(params[j]))
        up = params.copy()
        dn = params.copy()
        up[j] += h
        dn[j] -= h
        H[:, j] = (score_fn(up) - score_fn(dn)) / (2.0 * h)
    return 0.5 * (H + H.T)


class HeteroskedasticProbit(BaseEstimator):
    """MLE of the group-heteroskedastic probit.

    Parameters
    ----------
    fix_log_sd_ratio : float or None
        When set, the log sd ratio is held at this value instead of being
        estimated; 0.0 gives the plain (homoskedastic) probit.
    omega_starts : sequence of float
        Multi-start values for the log sd ratio.
    gtol, max_iter : optimizer contract (max-norm of the mean-loglik
        gradient; iteration cap per start).

    Attributes (after fit)
    ----------------------
    intercept_, threshold_ (= -intercept_), coef_, group_coef_,
    log_sd_ratio_, sd_ratio_, loglik_, vcov_, se_, converged_,
    wald_ratio_stat_, wald_ratio_pvalue_, marginal_total_, marginal_level_,
    marginal_variance_, result_.
    """

    def __init__(
        self,
        fix_log_sd_ratio: float | None = None,
        omega_starts=(-0.5, 0.0, 0.5),
        gtol: float = 1e-8,
        max_iter: int = 500,
    ):
        self.fix_log_sd_ratio = fix_log_sd_ratio
        self.omega_starts = omega_starts
        self.gtol = gtol
        self.max_iter = max_iter

    # -- internal objective pieces (mean loglik keeps gtol scale-free) ----

    def _check_inputs(self, X, y, group):
        Xmat, names = as_float_matrix(X)
        yvec = check_binary(y, "y")
        gvec = check_binary(group, "group")
        if len(yvec) != Xmat.shape[0] or len(gvec) != Xmat.shape[0]:
            raise ValueError("X, y and group must have equal length")
        if yvec.sum() == 0 or yvec.sum() == len(yvec):
            raise IdentificationError("degenerate outcome: y has a single value")
        for gval in (0.0, 1.0):
            mask = gvec == gval
            if not mask.any():
                raise IdentificationError(f"group value {int(gval)} absent")
            if yvec[mask].min() == yvec[mask].max():
                raise IdentificationError(
                    f"outcome constant within group {int(gval)}; "
                    "threshold not identified"
                )
        varies = False
        for j in range(Xmat.shape[1]):
            for gval in (0.0, 1.0):
                if np.ptp(Xmat[gvec == gval, j]) > 0:
                    varies = True
        if not varies:
            raise IdentificationError(
                "every X column is constant within both groups; "
                "observable quality variation is required to identify the sd ratio"
            )
        return Xmat, names, yvec, gvec

    def fit(self, X, y, group, cluster=None):
        Xmat, names, yvec, gvec = self._check_inputs(X, y, group)
        n, k = Xmat.shape
        fixed = self.fix_log_sd_ratio

        def negll_full(p):
            return -het_probit_loglik(p, Xmat, yvec, gvec) / n

        def neggrad_full(p):
            return -het_probit_score(p, Xmat, yvec, gvec) / n

        def embed(p_short, omega):
            return np.concatenate([p_short, [omega]])

        # Plain-probit start: log sd ratio pinned at 0.
        def negll_short(p_short, omega=0.0):
            return negll_full(embed(p_short, omega))

        def neggrad_short(p_short, omega=0.0):
            return neggrad_full(embed(p_short, omega))[: k + 2]

        short0 = np.zeros(k + 2)
        probit = optimize.minimize(
            negll_short,
            short0,
            jac=neggrad_short,
            method="BFGS",
            options={"gtol": self.gtol, "maxiter": self.max_iter},
        )

        trace = []
        if fixed is not None:
            res = optimize.minimize(
                negll_short,
                probit.x,
                args=(fixed,),
                jac=neggrad_short,
                method="BFGS",
                options={"gtol": self.gtol, "maxiter": self.max_iter},
            )
            grad_norm = float(np.max(np.abs(neggrad_short(res.x, fixed))))
            trace.append((fixed, -res.fun * n, grad_norm))
            if not (res.success or grad_norm < 1e-6):
                raise ConvergenceError(f"probit fit did not converge: trace={trace}")
            params = embed(res.x, fixed)
            free = np.arange(k + 2)  # log sd ratio excluded from inference
        else:
            best = None
            for omega0 in self.omega_starts:
                start = embed(probit.x, omega0)
                res = optimize.minimize(
                    negll_full,
                    start,
                    jac=neggrad_full,
                    method="BFGS",
                    options={"gtol": self.gtol, "maxiter": self.max_iter},
                )
                # Line-search precision loss can stop BFGS early with the
                # optimum effectively reached; accept small gradients.
                grad_norm = float(np.max(np.abs(neggrad_full(res.x))))
                converged = bool(res.success) or grad_norm < 1e-6
                trace.append((omega0, -res.fun * n, grad_norm))
                if converged and (best is None or res.fun < best.fun):
                    best = res
            if best is None:
                raise ConvergenceError(
                    f"no start converged after {self.max_iter} iterations; "
                    f"trace (start, loglik, grad_norm): {trace}"
                )
            params = best.x
            free = np.arange(k + 3)

        loglik = het_probit_loglik(params, Xmat, yvec, gvec)

        # Observed-information covariance; cluster sandwich when ids given.
        def score_sum(p):
            return het_probit_score(p, Xmat, yvec, gvec)

        hessian = _finite_diff_hessian(score_sum, params)
        info = -hessian[np.ix_(free, free)]
        info_inv = np.linalg.inv(info)
        if cluster is not None:
            codes = group_codes(cluster, "cluster")
            m = codes.max() + 1
            if m < 2:
                raise IdentificationError("cluster-robust vcov needs >= 2 clusters")
            rows = _score_rows(params, Xmat, yvec, gvec)[:, free]
            cluster_scores = np.zeros((m, len(free)))
            np.add.at(cluster_scores, codes, rows)
            meat = cluster_scores.T @ cluster_scores
            vcov = info_inv @ meat @ info_inv * (m / (m - 1))
            se_kind = "cluster(investor)"
        else:
            vcov = info_inv
            se_kind = "hessian"

        full_vcov = np.zeros((k + 3, k + 3))
        full_vcov[np.ix_(free, free)] = vcov

        self.feature_names_in_ = names
        self.n_obs_ = n
        self.intercept_ = float(params[0])
        self.threshold_ = -self.intercept_
        self.coef_ = params[1 : k + 1].copy()
        self.group_coef_ = float(params[k + 1])
        self.log_sd_ratio_ = float(params[k + 2])
        self.sd_ratio_ = float(np.exp(self.log_sd_ratio_))
        self.loglik_ = loglik
        self.vcov_ = full_vcov
        self.se_ = np.sqrt(np.clip(np.diag(full_vcov), 0.0, None))
        self.converged_ = True
        self.trace_ = trace

        if fixed is None:
            se_omega = self.se_[k + 2]
            se_ratio = self.sd_ratio_ * se_omega  # delta method
            if se_ratio > 0:
                stat = ((self.sd_ratio_ - 1.0) / se_ratio) ** 2
                self.wald_ratio_stat_ = float(stat)
                self.wald_ratio_pvalue_ = float(stats.chi2.sf(stat, 1))
            else:
                self.wald_ratio_stat_ = np.nan
                self.wald_ratio_pvalue_ = np.nan
        else:
            self.wald_ratio_stat_ = None
            self.wald_ratio_pvalue_ = None

        marg = marginal_decomposition(
            self.intercept_, self.coef_, self.group_coef_, self.log_sd_ratio_,
            Xmat.mean(axis=0), float(gvec.mean()),
        )
        self.marginal_total_ = marg["total"]
        self.marginal_level_ = marg["level"]
        self.marginal_variance_ = marg["variance"]

        terms = ["intercept", *names, "group", "log_sd_ratio"]
        self.result_ = FitResult(
            terms=terms,
            estimates=params,
            vcov=full_vcov,
            se_kind=se_kind,
            n_obs=n,
            log_likelihood=loglik,
            extra={
                "threshold": self.threshold_,
                "sd_ratio": self.sd_ratio_,
                "wald_ratio_stat": self.wald_ratio_stat_,
                "wald_ratio_pvalue": self.wald_ratio_pvalue_,
                "marginal_total": self.marginal_total_,
                "marginal_level": self.marginal_level_,
                "marginal_variance": self.marginal_variance_,
                "convergence_trace": [tuple(map(float, t)) for t in trace],
            },
        )
        return self

    def predict_proba(self, X, group) -> np.ndarray:
        Xmat, _ = as_float_matrix(X)
        g = check_binary(group, "group")
        params = np.concatenate(
            [[self.intercept_], self.coef_, [self.group_coef_, self.log_sd_ratio_]]
        )
        eta, scale = _zscore(params, Xmat, g)
        return ndtr(eta * scale)

    def marginal_effects(self, X=None, group=None) -> dict:
        """Decomposed group marginal at the fit's covariate means."""
        return {
            "total": self.marginal_total_,
            "level": self.marginal_level_,
            "variance": self.marginal_variance_,
        }
