"""Numerical kernel: penalized regression, Welch's t-test, seedable RNG streams.

Everything here is pure given its inputs; the rest of the engine builds on
these primitives so their conventions (MSE divisor n, population variance,
exact penalty scaling) are pinned once, here.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .errors import DegenerateError, NonFiniteError, SolveFailure

RNG_ALGORITHM = "pcg64-seedseq-spawnkey/1"


@dataclass
class Coefficients:
    values: np.ndarray
    intercept: float = 0.0


@dataclass
class RegressionDiagnostics:
    mse: float
    se: np.ndarray
    snr: float


@dataclass
class TTestResult:
    t: float
    df: float
    p: float


class RandomStream:
    """Deterministic random stream with index-based splitting.

    Backed by numpy's PCG64 seeded through a SeedSequence whose spawn key is
    the path of child indices from the root.  Identical (seed, path) gives an
    identical sequence on every platform; sibling children are statistically
    independent.
    """

    def __init__(self, seed: int, path: tuple[int, ...] = ()):
        self.seed = int(seed)
        self.path = tuple(int(i) for i in path)
        self._gen = np.random.Generator(
            np.random.PCG64(np.random.SeedSequence(self.seed, spawn_key=self.path))
        )

    @property
    def algorithm(self) -> str:
        return RNG_ALGORITHM

    def child(self, index: int) -> "RandomStream":
        return RandomStream(self.seed, self.path + (int(index),))

    def next_uniform(self) -> float:
        return float(self._gen.random())

    def uniforms(self, n: int) -> np.ndarray:
        return self._gen.random(n)

    def normals(self, n: int) -> np.ndarray:
        return self._gen.standard_normal(n)

    def next_permutation(self, n: int) -> np.ndarray:
        return self._gen.permutation(n)

    def integers(self, low: int, high: int, size=None):
        return self._gen.integers(low, high, size=size)

    def choice_weighted(self, values, probs, size) -> np.ndarray:
        return self._gen.choice(np.asarray(values), size=size, p=np.asarray(probs))


def random_stream(seed: int) -> RandomStream:
    return RandomStream(seed)


def _check_finite(X: np.ndarray, y: np.ndarray) -> None:
    if not np.all(np.isfinite(X)) or not np.all(np.isfinite(y)):
        raise NonFiniteError("design matrix or response contains non-finite values")


def _soft_threshold(z: float, gamma: float) -> float:
    if z > gamma:
        return z - gamma
    if z < -gamma:
        return z + gamma
    return 0.0


def elastic_net_fit(
    X: np.ndarray,
    y: np.ndarray,
    lam: float,
    alpha: float,
    tol: float = 1e-8,
    max_sweeps: int = 10_000,
) -> Coefficients:
    """Coordinate descent for  ||y - Xb||^2 + lam*(alpha*||b||_1 + (1-alpha)*||b||^2).

    The objective is unscaled (no 1/n on the loss).  y is centered internally;
    the intercept is reported separately and no intercept column is fit.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    _check_finite(X, y)
    n, p = X.shape
    if n < 2:
        raise DegenerateError("elastic net needs at least 2 observations")

    intercept = float(np.mean(y))
    yc = y - intercept

    beta = np.zeros(p)
    resid = yc.copy()
    col_sq = np.einsum("ij,ij->j", X, X)
    l1 = lam * alpha / 2.0
    l2 = lam * (1.0 - alpha)

    for _ in range(max_sweeps):
        max_delta = 0.0
        for j in range(p):
            xj = X[:, j]
            rho = xj @ resid + col_sq[j] * beta[j]
            new = _soft_threshold(rho, l1) / (col_sq[j] + l2) if col_sq[j] + l2 > 0 else 0.0
            delta = new - beta[j]
            if delta != 0.0:
                resid -= delta * xj
                beta[j] = new
                max_delta = max(max_delta, abs(delta))
        if max_delta < tol:
            break

    return Coefficients(values=beta, intercept=intercept)


def elastic_net_kkt_residuals(
    X: np.ndarray, y: np.ndarray, beta: np.ndarray, lam: float, alpha: float
) -> np.ndarray:
    """Per-coordinate violation of the subgradient optimality condition."""
    X = np.asarray(X, dtype=float)
    yc = np.asarray(y, dtype=float) - np.mean(y)
    grad = -2.0 * X.T @ (yc - X @ beta) + 2.0 * lam * (1.0 - alpha) * beta
    l1 = lam * alpha
    out = np.empty_like(beta)
    for j in range(len(beta)):
        if beta[j] > 0:
            out[j] = abs(grad[j] + l1)
        elif beta[j] < 0:
            out[j] = abs(grad[j] - l1)
        else:
            out[j] = max(0.0, abs(grad[j]) - l1)
    return out


def ridge_fit_with_se(
    X: np.ndarray, y: np.ndarray, lam: float
) -> tuple[Coefficients, RegressionDiagnostics]:
    """Closed-form ridge with standard errors from the regularized normal matrix.

    mse uses divisor n; snr = PopVar(X beta) / mse with population variance.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    _check_finite(X, y)
    n, p = X.shape
    if n < 2:
        raise DegenerateError("ridge needs at least 2 observations")

    intercept = float(np.mean(y))
    yc = y - intercept
    A = X.T @ X + lam * np.eye(p)
    try:
        A_inv = np.linalg.inv(A)
    except np.linalg.LinAlgError as exc:
        raise SolveFailure("regularized normal matrix is singular") from exc
    cond = np.linalg.cond(A)
    if not np.isfinite(cond) or cond > 1e14:
        raise SolveFailure("regularized normal matrix is numerically singular")

    beta = A_inv @ (X.T @ yc)
    fitted = X @ beta
    resid = yc - fitted
    mse = float(resid @ resid) / n
    se = np.sqrt(np.maximum(mse * np.diag(A_inv), 0.0))
    var_fit = float(np.var(fitted))  # population variance (divide by n)
    snr = var_fit / mse if mse > 0 else 0.0
    return Coefficients(values=beta, intercept=intercept), RegressionDiagnostics(
        mse=mse, se=se, snr=snr
    )


def welch_t_test(a, b) -> TTestResult:
    """Welch's unequal-variance two-sample t-test, two-sided."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if len(a) < 2 or len(b) < 2:
        raise DegenerateError("welch t-test needs at least 2 elements per sample")
    _check_finite(a, b)

    va, vb = np.var(a, ddof=1), np.var(b, ddof=1)
    na, nb = len(a), len(b)
    if va == 0.0 and vb == 0.0:
        if np.mean(a) == np.mean(b):
            return TTestResult(t=0.0, df=float(na + nb - 2), p=1.0)
        # zero within-sample variance but different means: infinitely significant
        sign = 1.0 if np.mean(a) > np.mean(b) else -1.0
        return TTestResult(t=sign * np.inf, df=float(na + nb - 2), p=0.0)

    sa2, sb2 = va / na, vb / nb
    t = (np.mean(a) - np.mean(b)) / np.sqrt(sa2 + sb2)
    df = (sa2 + sb2) ** 2 / (sa2**2 / (na - 1) + sb2**2 / (nb - 1))
    p = float(2.0 * stats.t.sf(abs(t), df))
    return TTestResult(t=float(t), df=float(df), p=min(max(p, 0.0), 1.0))
