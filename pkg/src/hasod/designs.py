"""Experimental design constructors in coded units.

All designs are plain matrices of coded levels with per-row provenance tags.
Randomized constructors are bit-reproducible from their RandomStream.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import qmc

from .errors import DesignError
from .numkit import RandomStream

# Row provenance tags
TAG_CENTER = "center"
TAG_SCREEN_PAIR = "screen_pair"
TAG_CORNER = "corner"
TAG_FACTORIAL = "factorial"
TAG_AXIAL = "axial"
TAG_FOLDOVER = "foldover"
TAG_REFINE = "refine"
TAG_BASELINE = "baseline"


@dataclass
class Design:
    k: int
    rows: np.ndarray  # (n, k) coded levels
    row_tags: list[str]
    phase: str  # P1 | P2 | P3 | Baseline

    @property
    def n(self) -> int:
        return self.rows.shape[0]

    def to_csv(self) -> str:
        header = ",".join(f"f{i + 1}" for i in range(self.k))
        lines = [header]
        for row in self.rows:
            lines.append(",".join(repr(float(v)) for v in row))
        return "\n".join(lines) + "\n"


def mdsd(k: int, stream: RandomStream) -> Design:
    """Modified definitive screening design: 2k+3 runs.

    One center row, k mirror pairs with entries drawn from {-1, 0, +1} at
    probabilities (0.45, 0.10, 0.45), and the two antipodal corner rows.
    A sampled pair row is rejected if all-zero or if it (or its mirror)
    duplicates an already-placed row.
    """
    if k < 2:
        raise DesignError("mdsd requires k >= 2")
    if k > 20:
        raise DesignError("mdsd requires k <= 20")

    center = np.zeros(k)
    corner_lo = -np.ones(k)
    corner_hi = np.ones(k)
    taken = {tuple(center), tuple(corner_lo), tuple(corner_hi)}

    pairs = []
    for _ in range(k):
        for attempt in range(101):
            if attempt == 100:
                raise DesignError("mdsd: could not sample a fresh screening row")
            r = stream.choice_weighted([-1.0, 0.0, 1.0], [0.45, 0.10, 0.45], k)
            if not np.any(r):
                continue
            if tuple(r) in taken or tuple(-r) in taken:
                continue
            break
        pairs.append(r)
        taken.add(tuple(r))
        taken.add(tuple(-r))

    rows = [center]
    tags = [TAG_CENTER]
    for r in pairs:
        rows.extend([r, -r])
        tags.extend([TAG_SCREEN_PAIR, TAG_SCREEN_PAIR])
    rows.extend([corner_lo, corner_hi])
    tags.extend([TAG_CORNER, TAG_CORNER])
    return Design(k=k, rows=np.array(rows), row_tags=tags, phase="P1")


def full_factorial(k_c: int) -> Design:
    if not 1 <= k_c <= 5:
        raise DesignError("full factorial limited to 1 <= k_c <= 5")
    rows = np.array(list(itertools.product([-1.0, 1.0], repeat=k_c)))
    return Design(k=k_c, rows=rows, row_tags=[TAG_FACTORIAL] * len(rows), phase="P2")


def half_fraction_res_v(k_c: int) -> Design:
    """2^(k_c-1) half fraction with generator I = product of all factors.

    The defining word has length k_c, so resolution >= V needs k_c >= 5.
    """
    if k_c < 5:
        raise DesignError("half fraction is resolution V only for k_c >= 5")
    base = np.array(list(itertools.product([-1.0, 1.0], repeat=k_c - 1)))
    last = np.prod(base, axis=1, keepdims=True)
    rows = np.hstack([base, last])
    return Design(k=k_c, rows=rows, row_tags=[TAG_FACTORIAL] * len(rows), phase="P2")


def star_points(k_c: int, alpha: float) -> Design:
    if not 1 <= k_c <= 3:
        raise DesignError("star points limited to 1 <= k_c <= 3")
    if alpha <= 0:
        raise DesignError("alpha must be positive")
    rows = []
    for axis in range(k_c):
        for sign in (-1.0, 1.0):
            r = np.zeros(k_c)
            r[axis] = sign * alpha
            rows.append(r)
    return Design(k=k_c, rows=np.array(rows), row_tags=[TAG_AXIAL] * 2 * k_c, phase="P2")


def fold_over(d: Design) -> Design:
    """Sign-negate every non-center (non-all-zero) row; center rows are omitted."""
    if d.n == 0:
        raise DesignError("fold_over of empty design")
    keep = [i for i in range(d.n) if np.any(d.rows[i])]
    rows = -d.rows[keep]
    return Design(k=d.k, rows=rows, row_tags=[TAG_FOLDOVER] * len(keep), phase="P2")


def space_filling(kind: str, n: int, k: int, stream: RandomStream) -> Design:
    """LHS or Sobol points mapped to the coded cube [-1, 1]^k."""
    if n < 1 or not 1 <= k <= 20:
        raise DesignError("space_filling requires n >= 1 and 1 <= k <= 20")
    if kind == "LHS":
        unit = np.empty((n, k))
        for j in range(k):
            perm = stream.next_permutation(n)
            jitter = stream.uniforms(n)
            unit[:, j] = (perm + jitter) / n
    elif kind == "Sobol":
        try:
            sampler = qmc.Sobol(d=k, scramble=False)
        except ValueError as exc:
            raise DesignError(f"Sobol direction numbers unavailable for k={k}") from exc
        # skip the all-zero index-0 point
        unit = sampler.random(n + 1)[1:]
    else:
        raise DesignError(f"unknown space-filling kind {kind!r}")
    rows = 2.0 * unit - 1.0
    return Design(k=k, rows=rows, row_tags=[TAG_BASELINE] * n, phase="Baseline")


# Conference matrices C (zero diagonal, +-1 off-diagonal, C C^T = (k-1) I),
# Paley construction, verified at generation time; stored here as fixed sign
# patterns so the standard DSD is identical across platforms.
_CONFERENCE: dict[int, list[list[int]]] = {
    2: [[0, 1], [1, 0]],
    4: [[0, 1, 1, 1], [-1, 0, -1, 1], [-1, 1, 0, -1], [-1, -1, 1, 0]],
    6: [
        [0, 1, 1, 1, 1, 1],
        [1, 0, 1, -1, -1, 1],
        [1, 1, 0, 1, -1, -1],
        [1, -1, 1, 0, 1, -1],
        [1, -1, -1, 1, 0, 1],
        [1, 1, -1, -1, 1, 0],
    ],
    8: [
        [0, 1, 1, 1, 1, 1, 1, 1],
        [-1, 0, -1, -1, 1, -1, 1, 1],
        [-1, 1, 0, -1, -1, 1, -1, 1],
        [-1, 1, 1, 0, -1, -1, 1, -1],
        [-1, -1, 1, 1, 0, -1, -1, 1],
        [-1, 1, -1, 1, 1, 0, -1, -1],
        [-1, -1, 1, -1, 1, 1, 0, -1],
        [-1, -1, -1, 1, -1, 1, 1, 0],
    ],
    10: [
        [0, 1, 1, 1, 1, 1, 1, 1, 1, 1],
        [1, 0, 1, 1, 1, -1, -1, 1, -1, -1],
        [1, 1, 0, 1, -1, 1, -1, -1, 1, -1],
        [1, 1, 1, 0, -1, -1, 1, -1, -1, 1],
        [1, 1, -1, -1, 0, 1, 1, 1, -1, -1],
        [1, -1, 1, -1, 1, 0, 1, -1, 1, -1],
        [1, -1, -1, 1, 1, 1, 0, -1, -1, 1],
        [1, 1, -1, -1, 1, -1, -1, 0, 1, 1],
        [1, -1, 1, -1, -1, 1, -1, 1, 0, 1],
        [1, -1, -1, 1, -1, -1, 1, 1, 1, 0],
    ],
    12: [
        [0, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1],
        [-1, 0, -1, 1, -1, -1, -1, 1, 1, 1, -1, 1],
        [-1, 1, 0, -1, 1, -1, -1, -1, 1, 1, 1, -1],
        [-1, -1, 1, 0, -1, 1, -1, -1, -1, 1, 1, 1],
        [-1, 1, -1, 1, 0, -1, 1, -1, -1, -1, 1, 1],
        [-1, 1, 1, -1, 1, 0, -1, 1, -1, -1, -1, 1],
        [-1, 1, 1, 1, -1, 1, 0, -1, 1, -1, -1, -1],
        [-1, -1, 1, 1, 1, -1, 1, 0, -1, 1, -1, -1],
        [-1, -1, -1, 1, 1, 1, -1, 1, 0, -1, 1, -1],
        [-1, -1, -1, -1, 1, 1, 1, -1, 1, 0, -1, 1],
        [-1, 1, -1, -1, -1, 1, 1, 1, -1, 1, 0, -1],
        [-1, -1, 1, -1, -1, -1, 1, 1, 1, -1, 1, 0],
    ],
}


def fractional_factorial(k: int, generators: list[tuple[int, list[int]]]) -> np.ndarray:
    """Base full factorial in the free columns plus generated columns.

    generators: (target column index, source column indices) with the target
    equal to the product of the sources.
    """
    free = k - len(generators)
    base = np.array(list(itertools.product([-1.0, 1.0], repeat=free)))
    rows = np.zeros((len(base), k))
    rows[:, :free] = base
    for target, sources in generators:
        rows[:, target] = np.prod(rows[:, sources], axis=1)
    return rows


def baseline_design(kind: str, k: int) -> Design:
    if kind == "StdDSD":
        if k % 2 != 0 or not 2 <= k <= 12:
            raise DesignError("StdDSD requires even k with 2 <= k <= 12")
        C = np.array(_CONFERENCE[k], dtype=float)
        rows = [np.zeros(k)]
        tags = [TAG_CENTER]
        for i in range(k):
            rows.append(C[i])
            tags.append(TAG_SCREEN_PAIR)
        for i in range(k):
            rows.append(-C[i])
            tags.append(TAG_SCREEN_PAIR)
        return Design(k=k, rows=np.array(rows), row_tags=tags, phase="Baseline")

    if kind == "CCD":
        if not 1 <= k <= 6:
            raise DesignError("CCD baseline limited to 1 <= k <= 6")
        if k <= 4:
            core = np.array(list(itertools.product([-1.0, 1.0], repeat=k)))
        elif k == 5:
            # resolution-V half fraction, 16 runs
            core = fractional_factorial(5, [(4, [0, 1, 2, 3])])
        else:
            # 16-run cap forces the 2^(6-2) quarter fraction (resolution IV)
            core = fractional_factorial(6, [(4, [0, 1, 2]), (5, [1, 2, 3])])
        axial = []
        for axis in range(k):
            for sign in (-1.0, 1.0):
                r = np.zeros(k)
                r[axis] = sign  # face-centered: alpha = 1
                axial.append(r)
        rows = np.vstack([core, np.array(axial), np.zeros((1, k))])
        tags = (
            [TAG_FACTORIAL] * len(core) + [TAG_AXIAL] * 2 * k + [TAG_CENTER]
        )
        return Design(k=k, rows=rows, row_tags=tags, phase="Baseline")

    raise DesignError(f"unknown baseline design kind {kind!r}")
