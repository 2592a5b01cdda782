"""Gaussian-process surrogate with a Matern-5/2 kernel.

Hyperparameters (signal variance, isotropic length-scale, noise variance) are
fit by restarted marginal-likelihood maximization in log-space.  Posterior
variance can be updated with new input locations only, which is what the
refinement planner needs.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from scipy.linalg import cho_solve, solve_triangular
from scipy.optimize import minimize
from scipy.spatial.distance import cdist

from .errors import FitFailure, MeanQueryOnVarianceOnlyModel
from .numkit import RandomStream

LOG_BOUND_LO = np.log(1e-4)
LOG_BOUND_HI = np.log(1e4)
N_RESTARTS = 20
MAX_LOCAL_ITERS = 200
_SQRT5 = np.sqrt(5.0)


@dataclass
class KernelParams:
    sigma_f2: float
    ell: float
    sigma_n2: float


def matern52_kernel(x: np.ndarray, x2: np.ndarray, params: KernelParams) -> float:
    r = float(np.linalg.norm(np.asarray(x, float) - np.asarray(x2, float)))
    return float(_matern52_from_r(np.array([[r]]), params)[0, 0])


def _matern52_from_r(r: np.ndarray, params: KernelParams) -> np.ndarray:
    s = _SQRT5 * r / params.ell
    return params.sigma_f2 * (1.0 + s + s * s / 3.0) * np.exp(-s)


def kernel_matrix(A: np.ndarray, B: np.ndarray, params: KernelParams) -> np.ndarray:
    r = cdist(np.atleast_2d(A), np.atleast_2d(B))
    return _matern52_from_r(r, params)


def _chol_with_jitter(K: np.ndarray) -> tuple[np.ndarray, float]:
    jitter = 0.0
    for j in [0.0, 1e-10, 1e-8, 1e-6, 1e-4]:
        try:
            L = np.linalg.cholesky(K + j * np.eye(len(K)))
            return L, j
        except np.linalg.LinAlgError:
            jitter = j
    raise np.linalg.LinAlgError(f"cholesky failed even with jitter {jitter}")


@dataclass
class GPModel:
    params: KernelParams
    train_x: np.ndarray
    train_y: np.ndarray  # centered
    y_mean: float
    chol: np.ndarray
    alpha_vec: np.ndarray | None
    variance_only: bool = False

    def predict(self, x: np.ndarray) -> tuple[float, float]:
        means, variances = self.predict_batch(np.atleast_2d(x))
        return float(means[0]), float(variances[0])

    def predict_batch(self, X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        X = np.atleast_2d(np.asarray(X, float))
        Ks = kernel_matrix(self.train_x, X, self.params)  # (n, m)
        V = _solve_lower(self.chol, Ks)
        var = self.params.sigma_f2 - np.einsum("ij,ij->j", V, V)
        var = np.clip(var, 0.0, self.params.sigma_f2 + self.params.sigma_n2)
        if self.variance_only:
            raise MeanQueryOnVarianceOnlyModel(
                "mean query on a variance-only conditioned model"
            )
        mean = Ks.T @ self.alpha_vec + self.y_mean
        return mean, var

    def variance_batch(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, float))
        Ks = kernel_matrix(self.train_x, X, self.params)
        V = _solve_lower(self.chol, Ks)
        var = self.params.sigma_f2 - np.einsum("ij,ij->j", V, V)
        return np.clip(var, 0.0, self.params.sigma_f2 + self.params.sigma_n2)

    def variance(self, x: np.ndarray) -> float:
        return float(self.variance_batch(np.atleast_2d(x))[0])


def _solve_lower(L: np.ndarray, B: np.ndarray) -> np.ndarray:
    return solve_triangular(L, B, lower=True)


def _neg_log_marginal_likelihood(theta: np.ndarray, X: np.ndarray, yc: np.ndarray) -> float:
    params = KernelParams(*np.exp(theta))
    n = len(yc)
    K = kernel_matrix(X, X, params) + params.sigma_n2 * np.eye(n)
    try:
        L, _ = _chol_with_jitter(K)
    except np.linalg.LinAlgError:
        return 1e25
    a = _solve_lower(L, yc)
    nll = 0.5 * float(a @ a) + float(np.sum(np.log(np.diag(L)))) + 0.5 * n * np.log(2 * np.pi)
    return nll if np.isfinite(nll) else 1e25


def make_model(X: np.ndarray, y: np.ndarray, params: KernelParams) -> GPModel:
    """Assemble a GPModel at fixed hyperparameters."""
    X = np.atleast_2d(np.asarray(X, float))
    y = np.asarray(y, float)
    y_mean = float(np.mean(y))
    yc = y - y_mean
    K = kernel_matrix(X, X, params) + params.sigma_n2 * np.eye(len(y))
    L, _ = _chol_with_jitter(K)
    alpha_vec = cho_solve((L, True), yc)
    return GPModel(
        params=params,
        train_x=X,
        train_y=yc,
        y_mean=y_mean,
        chol=L,
        alpha_vec=alpha_vec,
    )


def gp_fit(X: np.ndarray, y: np.ndarray, stream: RandomStream) -> GPModel:
    """Restarted maximum marginal likelihood over (log sf2, log ell, log sn2).

    20 restarts drawn log-uniformly from the bounds; local polish by L-BFGS-B
    capped at 200 iterations; best restart wins, ties to the lowest index.
    """
    X = np.atleast_2d(np.asarray(X, float))
    y = np.asarray(y, float)
    if len(y) < 3:
        raise FitFailure("gp_fit needs at least 3 observations")
    yc = y - np.mean(y)

    bounds = [(LOG_BOUND_LO, LOG_BOUND_HI)] * 3
    best_nll = np.inf
    best_theta = None
    for _ in range(N_RESTARTS):
        theta0 = LOG_BOUND_LO + (LOG_BOUND_HI - LOG_BOUND_LO) * stream.uniforms(3)
        try:
            res = minimize(
                _neg_log_marginal_likelihood,
                theta0,
                args=(X, yc),
                method="L-BFGS-B",
                bounds=bounds,
                options={"maxiter": MAX_LOCAL_ITERS},
            )
        except np.linalg.LinAlgError:
            continue
        if np.isfinite(res.fun) and res.fun < best_nll:
            best_nll = res.fun
            best_theta = res.x
    if best_theta is None:
        raise FitFailure("all marginal-likelihood restarts failed")

    params = KernelParams(*np.exp(best_theta))
    return make_model(X, y, params)


def condition_on_points(model: GPModel, new_x: np.ndarray) -> GPModel:
    """Variance-only update: add input locations with unknown responses.

    Posterior variance does not depend on responses, so the returned model has
    valid variance everywhere; mean queries raise.
    """
    new_x = np.atleast_2d(np.asarray(new_x, float))
    if new_x.size == 0:
        return replace(model, variance_only=model.variance_only)
    X = np.vstack([model.train_x, new_x])
    K = kernel_matrix(X, X, model.params) + model.params.sigma_n2 * np.eye(len(X))
    L, _ = _chol_with_jitter(K)
    return GPModel(
        params=model.params,
        train_x=X,
        train_y=np.zeros(len(X)),
        y_mean=model.y_mean,
        chol=L,
        alpha_vec=None,
        variance_only=True,
    )
