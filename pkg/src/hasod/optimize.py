"""Differential evolution over a box, and variance-guided refinement points."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .designs import TAG_REFINE, Design
from .gp import GPModel, condition_on_points
from .numkit import RandomStream

DEFAULT_REGION_HALFWIDTH = 0.3


@dataclass
class DEConfig:
    population: int | None = None  # defaults to 15 * k when unset
    f_weight: float = 0.8
    crossover: float = 0.9
    max_generations: int = 200
    tol: float = 1e-8
    stall_generations: int = 20


def de_maximize(
    objective,
    lower: np.ndarray,
    upper: np.ndarray,
    config: DEConfig,
    stream: RandomStream,
):
    """Classic rand/1/bin differential evolution, maximizing.

    objective(X) takes an (m, k) batch and returns m values.  Candidates are
    clamped to the box.  Terminates after max_generations or when the relative
    best-value change over stall_generations drops below tol.
    """
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    k = len(lower)
    np_pop = config.population if config.population is not None else 15 * k
    np_pop = max(np_pop, 4)
    F = config.f_weight
    CR = config.crossover

    pop = lower + (upper - lower) * stream.uniforms(np_pop * k).reshape(np_pop, k)
    vals = np.asarray(objective(pop), dtype=float)

    best_history = [float(np.max(vals))]
    members = np.arange(np_pop)
    for _ in range(config.max_generations):
        # batch-draw donor indices, redrawing rows until r1, r2, r3 and the
        # target are pairwise distinct
        R = stream.integers(0, np_pop, size=(np_pop, 3))
        for _redraw in range(100):
            bad = (
                (R[:, 0] == R[:, 1])
                | (R[:, 0] == R[:, 2])
                | (R[:, 1] == R[:, 2])
                | (R[:, 0] == members)
                | (R[:, 1] == members)
                | (R[:, 2] == members)
            )
            if not bad.any():
                break
            R[bad] = stream.integers(0, np_pop, size=(int(bad.sum()), 3))
        mutant = pop[R[:, 0]] + F * (pop[R[:, 1]] - pop[R[:, 2]])
        np.clip(mutant, lower, upper, out=mutant)
        cross = stream.uniforms(np_pop * k).reshape(np_pop, k) < CR
        cross[members, stream.integers(0, k, size=np_pop)] = True
        trial = np.where(cross, mutant, pop)
        trial_vals = np.asarray(objective(trial), dtype=float)
        improved = trial_vals > vals
        pop[improved] = trial[improved]
        vals[improved] = trial_vals[improved]

        best = float(np.max(vals))
        best_history.append(best)
        if len(best_history) > config.stall_generations:
            old = best_history[-config.stall_generations - 1]
            if abs(best - old) <= config.tol * max(1.0, abs(best)):
                break

    i_best = int(np.argmax(vals))
    return pop[i_best].copy(), float(vals[i_best])


@dataclass
class OptimumEstimate:
    x_star: np.ndarray
    mu_at_x_star: float
    var_at_x_star: float


def maximize_posterior_mean(
    model: GPModel, k: int, config: DEConfig, stream: RandomStream
) -> OptimumEstimate:
    """argmax of the GP posterior mean over the coded cube."""

    def obj(X):
        means, _ = model.predict_batch(X)
        return means

    x, val = de_maximize(obj, -np.ones(k), np.ones(k), config, stream)
    return OptimumEstimate(
        x_star=x, mu_at_x_star=val, var_at_x_star=model.variance(x)
    )


def refinement_points(
    model: GPModel,
    x_star: np.ndarray,
    n3: int,
    region_halfwidth: float,
    config: DEConfig,
    stream: RandomStream,
) -> Design:
    """Greedy sequential max-variance points in a trust region around x_star.

    After each pick the model is conditioned on the new location (responses
    unknown), which collapses variance there and keeps the picks distinct.
    """
    x_star = np.asarray(x_star, dtype=float)
    k = len(x_star)
    lower = np.maximum(x_star - region_halfwidth, -1.0)
    upper = np.minimum(x_star + region_halfwidth, 1.0)

    current = model
    rows = []
    for t in range(n3):
        def obj(X, m=current):
            return m.variance_batch(X)

        x, _ = de_maximize(obj, lower, upper, config, stream.child(t))
        rows.append(x)
        current = condition_on_points(current, x.reshape(1, -1))

    return Design(
        k=k, rows=np.array(rows), row_tags=[TAG_REFINE] * n3, phase="P3"
    )
