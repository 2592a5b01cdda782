"""Phase-1 analytics: interaction expansion, CWESS, interaction scores,
and hybrid factor classification."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateError, NonFiniteError
from .numkit import elastic_net_fit

DEFAULT_EN_LAMBDA = 0.01
DEFAULT_EN_ALPHA = 0.5
DEFAULT_SE_LAMBDA = 0.01
DEFAULT_EPSILON = 1e-8


@dataclass
class ScreeningReport:
    cwess: np.ndarray
    beta_main: np.ndarray
    se_main: np.ndarray
    snr: float
    interaction_scores: dict[tuple[int, int], float]
    w_int: float
    epsilon: float


@dataclass
class FactorClassification:
    labels: list[str]  # Critical | Moderate | Negligible
    critical_set: set[int]
    k_c: int
    significant_interactions: set[tuple[int, int]]
    n_int: int
    tau_p: float
    tau_a: float
    tau_crit: float


def interaction_expand(X: np.ndarray) -> np.ndarray:
    """Append all two-factor product columns in lexicographic (i, j) order."""
    X = np.asarray(X, dtype=float)
    k = X.shape[1]
    if k < 2:
        raise DegenerateError("interaction expansion needs k >= 2")
    products = [X[:, i] * X[:, j] for i, j in itertools.combinations(range(k), 2)]
    return np.column_stack([X] + products)


def _population_var(v: np.ndarray) -> float:
    return float(np.var(v))


def _snr_from_fit(X: np.ndarray, yc: np.ndarray, beta: np.ndarray) -> tuple[float, float]:
    """(mse, snr) with divisor-n MSE and population variance of the fit."""
    fitted = X @ beta
    resid = yc - fitted
    mse = float(resid @ resid) / len(yc)
    snr = _population_var(fitted) / mse if mse > 0 else 0.0
    return mse, snr


def interaction_scores(
    X1: np.ndarray,
    y1: np.ndarray,
    lam: float = DEFAULT_EN_LAMBDA,
    alpha: float = DEFAULT_EN_ALPHA,
) -> dict[tuple[int, int], float]:
    """Interaction score |beta_pair| * sqrt(snr_full) * w_int per factor pair.

    The elastic net is refit on the interaction-expanded matrix and the SNR is
    recomputed from that full model.
    """
    X1 = np.asarray(X1, dtype=float)
    y1 = np.asarray(y1, dtype=float)
    k = X1.shape[1]
    X_full = interaction_expand(X1)
    coef = elastic_net_fit(X_full, y1, lam, alpha)
    yc = y1 - coef.intercept
    _, snr_full = _snr_from_fit(X_full, yc, coef.values)
    w_int = np.sqrt((k - 1) / 2.0)
    scores: dict[tuple[int, int], float] = {}
    for m, (i, j) in enumerate(itertools.combinations(range(k), 2)):
        scores[(i, j)] = float(abs(coef.values[k + m]) * np.sqrt(snr_full) * w_int)
    return scores


def cwess_scores(
    X1: np.ndarray,
    y1: np.ndarray,
    en_lambda: float = DEFAULT_EN_LAMBDA,
    en_alpha: float = DEFAULT_EN_ALPHA,
    se_lambda: float = DEFAULT_SE_LAMBDA,
    epsilon: float = DEFAULT_EPSILON,
) -> ScreeningReport:
    """Full Phase-1 screening report.

    Main effects come from the elastic net; standard errors use the ridge hat
    matrix diagonal evaluated at the elastic-net residuals; CWESS weights the
    standardized effect by sqrt(SNR).
    """
    X1 = np.asarray(X1, dtype=float)
    y1 = np.asarray(y1, dtype=float)
    if not np.all(np.isfinite(X1)) or not np.all(np.isfinite(y1)):
        raise NonFiniteError("screening inputs contain non-finite values")
    n, k = X1.shape
    if n < 3:
        raise DegenerateError("screening needs at least 3 runs")

    coef = elastic_net_fit(X1, y1, en_lambda, en_alpha)
    beta = coef.values
    yc = y1 - coef.intercept
    mse, snr = _snr_from_fit(X1, yc, beta)

    A_inv = np.linalg.inv(X1.T @ X1 + se_lambda * np.eye(k))
    se = np.sqrt(np.maximum(mse * np.diag(A_inv), 0.0))
    cwess = np.abs(beta) / (se + epsilon) * np.sqrt(snr)

    if k >= 2:
        scores = interaction_scores(X1, y1, en_lambda, en_alpha)
    else:
        scores = {}
    return ScreeningReport(
        cwess=cwess,
        beta_main=beta,
        se_main=se,
        snr=snr,
        interaction_scores=scores,
        w_int=float(np.sqrt((k - 1) / 2.0)) if k >= 2 else 0.0,
        epsilon=epsilon,
    )


def percentile_interp(values: np.ndarray, q: float) -> float:
    """Sorted linear interpolation at 0-based index q*(m-1)."""
    v = np.sort(np.asarray(values, dtype=float))
    m = len(v)
    if m == 1:
        return float(v[0])
    idx = q * (m - 1)
    lo = int(np.floor(idx))
    hi = min(lo + 1, m - 1)
    frac = idx - lo
    return float(v[lo] * (1 - frac) + v[hi] * frac)


def classify_factors(report: ScreeningReport) -> FactorClassification:
    """Hybrid Critical/Moderate/Negligible classification.

    Critical if CWESS exceeds min(60th percentile of CWESS, 0.8*median|beta|)
    or |beta| exceeds the absolute threshold; Moderate above half the critical
    threshold; everything else Negligible.
    """
    cwess = np.asarray(report.cwess, dtype=float)
    beta = np.asarray(report.beta_main, dtype=float)
    tau_p = percentile_interp(cwess, 0.60)
    tau_a = 0.8 * float(np.median(np.abs(beta)))
    tau_crit = min(tau_p, tau_a)

    labels = []
    critical = set()
    for i in range(len(cwess)):
        if cwess[i] > tau_crit or abs(beta[i]) > tau_a:
            labels.append("Critical")
            critical.add(i)
        elif cwess[i] > 0.5 * tau_crit:
            labels.append("Moderate")
        else:
            labels.append("Negligible")

    sig = {
        pair for pair, score in report.interaction_scores.items() if score > tau_crit
    }
    return FactorClassification(
        labels=labels,
        critical_set=critical,
        k_c=len(critical),
        significant_interactions=sig,
        n_int=len(sig),
        tau_p=tau_p,
        tau_a=tau_a,
        tau_crit=tau_crit,
    )
