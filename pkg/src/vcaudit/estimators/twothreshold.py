"""Two-threshold (band) probit for non-monotonic response rules.

The outcome is 1 only when the latent index lands strictly between a lower
and an upper threshold: strong-looking pitches can be ignored as
"overqualified".  The likelihood multiplies interval probabilities for
responders and their complements for non-responders; the upper threshold is
kept above the lower one by the reparameterization
``upper = lower + exp(log_gap)``.  The likelihood is not concave, so the
fit always multi-starts.
"""

from __future__ import annotations

import numpy as np
from scipy import optimize
from scipy.special import ndtr
from sklearn.base import BaseEstimator

from ..validation import as_float_matrix, check_binary
from .hetprobit import ConvergenceError, HeteroskedasticProbit, IdentificationError
from .ols import FitResult

_P_FLOOR = 1e-12


def _norm_pdf(z):
    return np.exp(-0.5 * z**2) / np.sqrt(2.0 * np.pi)


def _unpack(params, k):
    params = np.asarray(params, dtype=float)
    if params.shape != (k + 4,):
        raise ValueError(f"expected {k + 4} parameters, got shape {params.shape}")
    lower, log_gap = params[0], params[1]
    beta = params[2 : k + 2]
    gamma, omega = params[k + 2], params[k + 3]
    return lower, log_gap, beta, gamma, omega


def _interval_probs(params, X, g):
    lower, log_gap, beta, gamma, omega = _unpack(params, X.shape[1])
    upper = lower + np.exp(log_gap)
    eta = X @ beta + gamma * g
    sigma = np.exp(omega * g)
    u = (upper - eta) / sigma
    low = (lower - eta) / sigma
    p = ndtr(u) - ndtr(low)
    return p, u, low, sigma


def two_threshold_loglik(params, X, y, group) -> float:
    """Log-likelihood at ``params = [lower, log_gap, *coef, group_coef, log_sd_ratio]``.

    Responders contribute the interval probability, non-responders its
    complement (the mass below the lower or above the upper threshold).
    """
    X, _ = as_float_matrix(X)
    y = check_binary(y, "y")
    g = check_binary(group, "group")
    p, _, _, _ = _interval_probs(params, X, g)
    p = np.clip(p, _P_FLOOR, 1.0 - _P_FLOOR)
    return float(np.sum(np.where(y > 0, np.log(p), np.log1p(-p))))


def two_threshold_score(params, X, y, group) -> np.ndarray:
    """Analytic gradient of :func:`two_threshold_loglik`."""
    X, _ = as_float_matrix(X)
    y = check_binary(y, "y")
    g = check_binary(group, "group")
    k = X.shape[1]
    _, log_gap, *_ = _unpack(params, k)
    p, u, low, sigma = _interval_probs(params, X, g)
    p = np.clip(p, _P_FLOOR, 1.0 - _P_FLOOR)
    w = np.where(y > 0, 1.0 / p, -1.0 / (1.0 - p))
    pdf_u = _norm_pdf(u)
    pdf_l = _norm_pdf(low)
    dp_dupper = pdf_u / sigma
    dp_dlower = -pdf_l / sigma
    dp_deta = (pdf_l - pdf_u) / sigma
    dp_domega = g * (pdf_l * low - pdf_u * u)
    grad = np.empty(k + 4)
    grad[0] = (w * (dp_dlower + dp_dupper)).sum()  # upper moves with lower
    grad[1] = (w * dp_dupper).sum() * np.exp(log_gap)
    grad[2 : k + 2] = X.T @ (w * dp_deta)
    grad[k + 2] = (w * dp_deta * g).sum()
    grad[k + 3] = (w * dp_domega).sum()
    return grad


class TwoThresholdProbit(BaseEstimator):
    """MLE of the band-response probit with group heteroskedasticity.

    Attributes (after fit)
    ----------------------
    lower_threshold_, upper_threshold_, coef_, group_coef_, log_sd_ratio_,
    sd_ratio_, loglik_, converged_, upper_tail_flat_ (True when no fitted
    observation puts mass above the upper threshold, i.e. the upper
    threshold is effectively unidentified), result_.
    """

    def __init__(
        self,
        gap_starts=(1.0, 2.0, 4.0),
        omega_starts=(-0.5, 0.0, 0.5),
        gtol: float = 1e-8,
        max_iter: int = 500,
        flat_tail_tol: float = 1e-4,
    ):
        self.gap_starts = gap_starts
        self.omega_starts = omega_starts
        self.gtol = gtol
        self.max_iter = max_iter
        self.flat_tail_tol = flat_tail_tol

    def fit(self, X, y, group):
        Xmat, names = as_float_matrix(X)
        yvec = check_binary(y, "y")
        gvec = check_binary(group, "group")
        n, k = Xmat.shape
        if yvec.sum() == 0:
            raise IdentificationError("degenerate outcome: no positive responses")
        if yvec.sum() == n:
            raise IdentificationError("degenerate outcome: every response positive")

        # Anchor starts at the single-threshold fit; its threshold seeds the
        # lower threshold and its slopes seed the index.
        single = HeteroskedasticProbit(gtol=self.gtol, max_iter=self.max_iter)
        try:
            single.fit(Xmat, yvec, gvec)
            base = np.concatenate(
                [[single.threshold_], Xmat.shape[1] * [0.0], [0.0, 0.0]]
            )
            base[1 : k + 1] = single.coef_
            base[k + 1] = single.group_coef_
            base[k + 2] = single.log_sd_ratio_
            anchors = [base]
        except Exception:
            anchors = [np.zeros(k + 3)]

        def negll(p):
            return -two_threshold_loglik(p, Xmat, yvec, gvec) / n

        def neggrad(p):
            return -two_threshold_score(p, Xmat, yvec, gvec) / n

        trace = []
        best = None
        for anchor in anchors:
            for gap in self.gap_starts:
                for omega0 in self.omega_starts:
                    start = np.empty(k + 4)
                    start[0] = anchor[0]
                    start[1] = np.log(gap)
                    start[2 : k + 2] = anchor[1 : k + 1]
                    start[k + 2] = anchor[k + 1]
                    start[k + 3] = omega0
                    res = optimize.minimize(
                        negll,
                        start,
                        jac=neggrad,
                        method="BFGS",
                        options={"gtol": self.gtol, "maxiter": self.max_iter},
                    )
                    grad_norm = float(np.max(np.abs(neggrad(res.x))))
                    converged = bool(res.success) or grad_norm < 1e-5
                    trace.append((gap, omega0, -res.fun * n, grad_norm))
                    if converged and (best is None or res.fun < best.fun):
                        best = res
        if best is None:
            raise ConvergenceError(
                "two-threshold fit: no start converged; "
                f"trace (gap, omega0, loglik, grad_norm): {trace}"
            )

        params = best.x
        lower, log_gap, beta, gamma, omega = _unpack(params, k)
        p, u, low, sigma = _interval_probs(params, Xmat, gvec)
        upper_tail = 1.0 - ndtr(u)

        self.feature_names_in_ = names
        self.n_obs_ = n
        self.lower_threshold_ = float(lower)
        self.upper_threshold_ = float(lower + np.exp(log_gap))
        self.coef_ = beta.copy()
        self.group_coef_ = float(gamma)
        self.log_sd_ratio_ = float(omega)
        self.sd_ratio_ = float(np.exp(omega))
        self.loglik_ = two_threshold_loglik(params, Xmat, yvec, gvec)
        self.converged_ = True
        self.upper_tail_flat_ = bool(upper_tail.max() < self.flat_tail_tol)
        self.trace_ = trace
        terms = ["lower_threshold", "log_gap", *names, "group", "log_sd_ratio"]
        self.result_ = FitResult(
            terms=terms,
            estimates=params,
            vcov=np.zeros((k + 4, k + 4)),
            se_kind="none",
            n_obs=n,
            log_likelihood=self.loglik_,
            extra={
                "lower_threshold": self.lower_threshold_,
                "upper_threshold": self.upper_threshold_,
                "sd_ratio": self.sd_ratio_,
                "upper_tail_flat": self.upper_tail_flat_,
            },
        )
        return self

    def predict_proba(self, X, group) -> np.ndarray:
        Xmat, _ = as_float_matrix(X)
        g = check_binary(group, "group")
        params = np.concatenate(
            [
                [self.lower_threshold_, np.log(self.upper_threshold_ - self.lower_threshold_)],
                self.coef_,
                [self.group_coef_, self.log_sd_ratio_],
            ]
        )
        p, *_ = _interval_probs(params, Xmat, g)
        return p
