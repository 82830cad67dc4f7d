"""Domain types, likelihood fields, tiling validity, scores, and model selection.

A tiling assigns each matrix element to at most one tile, where a tile is the
cross product of a row subset and a column subset. All solvers consume a
:class:`LikelihoodField` (per-element log-likelihood ratios plus background
log-likelihoods) and produce a :class:`Tiling`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

LOG2 = math.log(2.0)


class TilingError(ValueError):
    """Raised when a tiling violates the non-overlap constraint or is malformed."""


def as_data_matrix(values) -> np.ndarray:
    """Coerce to a dense 2-D float array with positive dimensions and finite entries."""
    x = np.asarray(values, dtype=float)
    if x.ndim != 2 or x.shape[0] == 0 or x.shape[1] == 0:
        raise ValueError(f"data matrix must be 2-D and non-empty, got shape {x.shape}")
    if not np.isfinite(x).all():
        raise ValueError("data matrix contains non-finite entries")
    return x


@dataclass(frozen=True, eq=False)
class LikelihoodField:
    """Per-element evidence: log(l_ij / l0_ij) and log l0_ij.

    This pair is the sole algorithmic input to the solvers; the raw data
    matrix is only needed to build it.
    """

    log_ratio: np.ndarray
    log_background: np.ndarray

    def __post_init__(self):
        lr = np.asarray(self.log_ratio, dtype=float)
        lb = np.asarray(self.log_background, dtype=float)
        if lr.ndim != 2 or lr.shape != lb.shape:
            raise ValueError(
                f"log_ratio {lr.shape} and log_background {lb.shape} must be matching 2-D arrays"
            )
        if not (np.isfinite(lr).all() and np.isfinite(lb).all()):
            raise ValueError("likelihood field entries must be finite")
        object.__setattr__(self, "log_ratio", lr)
        object.__setattr__(self, "log_background", lb)

    @property
    def n_rows(self) -> int:
        return self.log_ratio.shape[0]

    @property
    def n_cols(self) -> int:
        return self.log_ratio.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.log_ratio.shape


@dataclass(frozen=True, eq=False)
class Tiling:
    """Row/column membership indicators for T tiles over an N x M matrix.

    ``row_members`` has shape (T, N) and ``col_members`` shape (T, M), both
    0/1. A valid tiling claims every element at most once; use
    :func:`check_nonoverlap` to test that, since raw solver output may
    violate it before overlap resolution.
    """

    row_members: np.ndarray
    col_members: np.ndarray

    def __post_init__(self):
        r = np.ascontiguousarray(np.asarray(self.row_members), dtype=np.uint8)
        c = np.ascontiguousarray(np.asarray(self.col_members), dtype=np.uint8)
        if r.ndim != 2 or c.ndim != 2:
            raise ValueError("membership indicators must be 2-D (tiles x axis length)")
        if r.shape[0] != c.shape[0]:
            raise TilingError(
                f"row_members has {r.shape[0]} tiles but col_members has {c.shape[0]}"
            )
        if (r.size and r.max() > 1) or (c.size and c.max() > 1):
            raise ValueError("membership indicators must be binary")
        object.__setattr__(self, "row_members", r)
        object.__setattr__(self, "col_members", c)

    @property
    def tile_count(self) -> int:
        return self.row_members.shape[0]

    @property
    def n_rows(self) -> int:
        return self.row_members.shape[1]

    @property
    def n_cols(self) -> int:
        return self.col_members.shape[1]

    @classmethod
    def empty(cls, n_rows: int, n_cols: int) -> "Tiling":
        return cls(np.zeros((0, n_rows), np.uint8), np.zeros((0, n_cols), np.uint8))

    @classmethod
    def from_indicators(cls, row_members, col_members) -> "Tiling":
        """Build a tiling, pruning tiles with no active row or no active column."""
        r = np.asarray(row_members, dtype=np.uint8)
        c = np.asarray(col_members, dtype=np.uint8)
        if r.ndim != 2 or c.ndim != 2:
            raise ValueError("indicators must be (tiles, axis length) arrays")
        keep = (r.sum(axis=1) > 0) & (c.sum(axis=1) > 0)
        return cls(r[keep], c[keep])

    def coverage(self) -> np.ndarray:
        """Integer matrix counting how many tiles claim each element."""
        if self.tile_count == 0:
            return np.zeros((self.n_rows, self.n_cols), dtype=int)
        return self.row_members.astype(int).T @ self.col_members.astype(int)


@dataclass(frozen=True)
class SolverParams:
    """Knobs shared by the solvers; defaults match the documented conventions."""

    max_iterations: int = 200
    convergence_tol: float = 1e-3
    decode_threshold: float = 0.0
    clamp_bound: float = 50.0
    restarts: int = 5
    rng_seed: int = 0
    freeze_start: int = 3
    freeze_belief: float = 25.0

    def __post_init__(self):
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if self.convergence_tol <= 0:
            raise ValueError("convergence_tol must be > 0")
        if self.clamp_bound <= 0:
            raise ValueError("clamp_bound must be > 0")
        if self.restarts < 1:
            raise ValueError("restarts must be >= 1")


def binary_likelihood_field(data, epsilon: float) -> LikelihoodField:
    """Likelihood field for a 0/1 matrix observed through symmetric flip noise.

    Tile elements are noisy ones, background elements noisy zeros, each
    flipped with probability ``epsilon``. The log ratio is therefore
    ``log((1-eps)/eps)`` at ones and its negation at zeros.
    """
    if not 0.0 < epsilon < 1.0:
        raise ValueError(f"epsilon must lie in (0, 1), got {epsilon}")
    x = as_data_matrix(data)
    if not np.isin(x, (0.0, 1.0)).all():
        raise ValueError("binary field requires entries in {0, 1}")
    logit = math.log((1.0 - epsilon) / epsilon)
    log_ratio = (2.0 * x - 1.0) * logit
    log_background = x * math.log(epsilon) + (1.0 - x) * math.log(1.0 - epsilon)
    return LikelihoodField(log_ratio, log_background)


def gaussian_likelihood_field(
    data, tile_mean: float = 1.0, bg_mean: float = 0.0, sigma: float = 0.5
) -> LikelihoodField:
    """Likelihood field for real data under normal tile/background models.

    Both models share ``sigma``, so the log ratio reduces to
    ``((x - bg_mean)^2 - (x - tile_mean)^2) / (2 sigma^2)``.
    """
    if sigma <= 0:
        raise ValueError(f"sigma must be > 0, got {sigma}")
    x = as_data_matrix(data)
    var2 = 2.0 * sigma * sigma
    log_ratio = ((x - bg_mean) ** 2 - (x - tile_mean) ** 2) / var2
    log_background = -0.5 * math.log(math.pi * var2) - (x - bg_mean) ** 2 / var2
    return LikelihoodField(log_ratio, log_background)


def check_nonoverlap(tiling: Tiling) -> bool:
    """True iff no matrix element is claimed by more than one tile."""
    if tiling.tile_count == 0:
        return True
    return bool((tiling.coverage() <= 1).all())


def _require_valid(tiling: Tiling, field: LikelihoodField):
    if tiling.n_rows != field.n_rows or tiling.n_cols != field.n_cols:
        raise ValueError(
            f"tiling is {tiling.n_rows}x{tiling.n_cols} but field is "
            f"{field.n_rows}x{field.n_cols}"
        )
    if not check_nonoverlap(tiling):
        raise TilingError("tiling claims at least one element twice")


def labels_from_tiling(tiling: Tiling) -> np.ndarray:
    """Integer label matrix: tile index (1-based) per element, 0 for background."""
    if not check_nonoverlap(tiling):
        raise TilingError("cannot label an overlapping tiling")
    labels = np.zeros((tiling.n_rows, tiling.n_cols), dtype=int)
    for t in range(tiling.tile_count):
        mask = np.outer(tiling.row_members[t], tiling.col_members[t]).astype(bool)
        labels[mask] = t + 1
    return labels


def log_joint_score(tiling: Tiling, field: LikelihoodField) -> float:
    """Log-likelihood of the data under the tiling, up to tiling-independent constants.

    Covered elements contribute their log ratio on top of the background
    term that every element pays.
    """
    _require_valid(tiling, field)
    covered = tiling.coverage().astype(float)
    return float(np.sum(covered * field.log_ratio) + np.sum(field.log_background))


def mdl_cost(tiling: Tiling, field: LikelihoodField) -> float:
    """Description length: negative tile evidence, background code, plus
    T(N+M) log 2 bits for the indicator vectors. Lower is better."""
    _require_valid(tiling, field)
    score = log_joint_score(tiling, field)
    t = tiling.tile_count
    return -score + t * (tiling.n_rows + tiling.n_cols) * LOG2


def select_tile_count(solver, field: LikelihoodField, t_max: int, params: SolverParams) -> Tiling:
    """Grow the tile budget until the description length stops improving.

    ``solver`` is any callable ``(field, tile_count, params) -> Tiling``.
    Runs it for T = 0, 1, 2, ... and stops at the first budget whose cost is
    not strictly lower than the previous one (or at ``t_max``); returns the
    cheapest tiling seen.
    """
    if t_max < 1:
        raise ValueError("t_max must be >= 1")
    best = Tiling.empty(field.n_rows, field.n_cols)
    best_cost = mdl_cost(best, field)
    prev_cost = best_cost
    for t in range(1, t_max + 1):
        tiling = solver(field, t, params)
        cost = mdl_cost(tiling, field)
        if cost < best_cost:
            best, best_cost = tiling, cost
        if cost >= prev_cost:
            break
        prev_cost = cost
    return best
