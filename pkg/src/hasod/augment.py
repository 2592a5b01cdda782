"""Phase-2 logic: strategy selection, augmentation design construction,
and the combined ridge fit over Phase-1 + Phase-2 data."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .designs import (
    TAG_FOLDOVER,
    Design,
    fold_over,
    full_factorial,
    half_fraction_res_v,
    star_points,
)
from .numkit import Coefficients, RegressionDiagnostics, ridge_fit_with_se
from .screening import FactorClassification

COMBINED_RIDGE_LAMBDA = 0.1


@dataclass
class Strategy:
    kind: str  # A_FullFactorial | B_ResV | C_Star | D_FoldOver
    rationale: str


@dataclass
class CombinedModel:
    beta: Coefficients
    column_spec: list[str]
    lam: float
    diagnostics: RegressionDiagnostics


def select_strategy(k_c: int, n_int: int) -> Strategy:
    """Decision table over (number of critical factors, significant interactions).

    Evaluated in order: D for k_c > 6; A when interactions are present and the
    full factorial is affordable; B for the resolution-V fraction at k_c = 6;
    C when no interactions and few factors; D as fallback for the remaining
    cells.
    """
    if k_c > 6:
        return Strategy("D_FoldOver", f"k_c={k_c} > 6: fold-over fallback")
    if n_int >= 1 and k_c <= 5:
        return Strategy("A_FullFactorial", f"n_int={n_int} >= 1 and k_c={k_c} <= 5")
    if n_int >= 1 and k_c == 6:
        return Strategy("B_ResV", f"n_int={n_int} >= 1 and k_c=6")
    if n_int == 0 and k_c <= 3:
        return Strategy("C_Star", f"n_int=0 and k_c={k_c} <= 3")
    return Strategy("D_FoldOver", f"uncovered cell (k_c={k_c}, n_int={n_int}): fold-over fallback")


def _embed(rows: np.ndarray, critical: list[int], k: int) -> np.ndarray:
    """Place k_c-dimensional rows into k-factor space, non-critical coords at 0."""
    out = np.zeros((rows.shape[0], k))
    out[:, critical] = rows
    return out


def build_augmentation(
    strategy: Strategy, cls: FactorClassification, phase1: Design
) -> Design:
    """Construct the Phase-2 block in full k-factor coordinates.

    For A/B/C, rows that exactly duplicate a Phase-1 row are dropped.  Strategy
    D keeps all folded rows: the fold of a mirror pair reproduces Phase-1 rows
    and those repeats serve as replicates.
    """
    k = phase1.k
    critical = sorted(cls.critical_set)

    if strategy.kind == "A_FullFactorial":
        block = full_factorial(len(critical))
        rows = _embed(block.rows, critical, k)
        tags = block.row_tags
    elif strategy.kind == "B_ResV":
        block = half_fraction_res_v(len(critical))
        rows = _embed(block.rows, critical, k)
        tags = block.row_tags
    elif strategy.kind == "C_Star":
        k_c = len(critical)
        block = star_points(k_c, float(np.sqrt(k_c)))
        rows = _embed(block.rows, critical, k)
        tags = block.row_tags
    elif strategy.kind == "D_FoldOver":
        block = fold_over(phase1)
        return Design(k=k, rows=block.rows, row_tags=[TAG_FOLDOVER] * block.n, phase="P2")
    else:
        raise ValueError(f"unknown strategy kind {strategy.kind!r}")

    existing = {tuple(r) for r in phase1.rows}
    keep = [i for i in range(len(rows)) if tuple(rows[i]) not in existing]
    return Design(
        k=k,
        rows=rows[keep],
        row_tags=[tags[i] for i in keep],
        phase="P2",
    )


def combined_model_matrix(
    X: np.ndarray,
    cls: FactorClassification,
    include_quadratics: bool,
) -> tuple[np.ndarray, list[str]]:
    """[main effects | significant interaction products | centered quadratics]."""
    k = X.shape[1]
    cols = [X[:, i] for i in range(k)]
    spec = [f"x{i + 1}" for i in range(k)]
    for i, j in sorted(cls.significant_interactions):
        cols.append(X[:, i] * X[:, j])
        spec.append(f"x{i + 1}*x{j + 1}")
    if include_quadratics:
        for i in sorted(cls.critical_set):
            sq = X[:, i] ** 2
            cols.append(sq - sq.mean())
            spec.append(f"x{i + 1}^2")
    return np.column_stack(cols), spec


def fit_combined(
    X: np.ndarray,
    y: np.ndarray,
    cls: FactorClassification,
    include_quadratics: bool = False,
    lam: float = COMBINED_RIDGE_LAMBDA,
) -> CombinedModel:
    """Ridge fit over all Phase-1 + Phase-2 rows."""
    M, spec = combined_model_matrix(np.asarray(X, dtype=float), cls, include_quadratics)
    beta, diag = ridge_fit_with_se(M, np.asarray(y, dtype=float), lam)
    return CombinedModel(beta=beta, column_spec=spec, lam=lam, diagnostics=diag)


def predict_combined(model: CombinedModel, X: np.ndarray, cls: FactorClassification,
                     include_quadratics: bool, train_X: np.ndarray) -> np.ndarray:
    """Evaluate the combined model at new points.

    Quadratic columns were centered on the training data, so the training
    matrix is needed to reproduce the same centering.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    k = X.shape[1]
    cols = [X[:, i] for i in range(k)]
    for i, j in sorted(cls.significant_interactions):
        cols.append(X[:, i] * X[:, j])
    if include_quadratics:
        for i in sorted(cls.critical_set):
            train_mean = float((np.asarray(train_X)[:, i] ** 2).mean())
            cols.append(X[:, i] ** 2 - train_mean)
    M = np.column_stack(cols)
    return M @ model.beta.values + model.beta.intercept
