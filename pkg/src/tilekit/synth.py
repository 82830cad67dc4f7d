"""Synthetic benchmark instances: planted non-overlapping tilings rendered to
a clean matrix, then corrupted with additive Gaussian noise."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import Tiling, as_data_matrix, check_nonoverlap

ASPECT_RANGE = (1.0 / 3.0, 3.0)
AREA_SLACK = 0.25
MAX_ATTEMPTS = 1000


class GenerationError(RuntimeError):
    """Raised when a non-overlapping tiling cannot be placed within the attempt budget."""


@dataclass(frozen=True, eq=False)
class GroundTruth:
    """A planted tiling with its clean rendering and noisy observation."""

    tiling: Tiling
    clean: np.ndarray
    noisy: np.ndarray
    sigma: float
    seed: int


def generate_tiling(n: int, tile_count: int, area_fraction: float, rng_seed: int = 0) -> Tiling:
    """Plant ``tile_count`` random non-overlapping tiles in an n x n matrix.

    Each tile's area stays within +/-25% of ``area_fraction * n**2``, its
    row:column aspect ratio is drawn uniformly from [1/3, 3], and its row and
    column subsets are arbitrary (tiles need not be contiguous). Placement is
    rejection-sampled against the previously placed tiles.
    """
    if n < 4:
        raise ValueError("matrix size must be at least 4")
    if area_fraction <= 0:
        raise ValueError("area_fraction must be positive")
    if tile_count * area_fraction > 0.5:
        raise ValueError(
            f"requested coverage {tile_count * area_fraction:.2f} exceeds the 0.5 feasibility cap"
        )
    rng = np.random.default_rng(np.random.SeedSequence(rng_seed))
    target = area_fraction * n * n
    lo, hi = (1.0 - AREA_SLACK) * target, (1.0 + AREA_SLACK) * target

    rows = np.zeros((tile_count, n), dtype=np.uint8)
    cols = np.zeros((tile_count, n), dtype=np.uint8)
    # claimed[i, j] marks columns j already owned by some tile containing
    # row i; a new tile's columns must avoid the claims of all its rows.
    claimed = np.zeros((n, n), dtype=bool)
    for t in range(tile_count):
        # The row set grows one row at a time, keeping only rows that leave
        # enough unclaimed columns. Drawing a whole row subset blindly (let
        # alone a whole tile) is rejected almost surely once a few scattered
        # tiles are placed, so placement would be infeasible without this.
        for attempt in range(MAX_ATTEMPTS):
            aspect = rng.uniform(*ASPECT_RANGE)
            height = int(np.clip(round(np.sqrt(target * aspect)), 1, n))
            width = int(np.clip(round(np.sqrt(target / aspect)), 1, n))
            if not lo <= height * width <= hi:
                continue
            r_idx = []
            blocked = np.zeros(n, dtype=bool)
            in_set = np.zeros(n, dtype=bool)
            while len(r_idx) < height:
                room = (~in_set) & ((~(blocked | claimed)).sum(axis=1) >= width)
                candidates = np.flatnonzero(room)
                if candidates.size == 0:
                    break
                pick = int(rng.choice(candidates))
                r_idx.append(pick)
                in_set[pick] = True
                blocked |= claimed[pick]
            if len(r_idx) < height:
                continue
            allowed = np.flatnonzero(~blocked)
            c_idx = rng.choice(allowed, size=width, replace=False)
            rows[t, r_idx] = 1
            cols[t, c_idx] = 1
            claimed[np.ix_(r_idx, c_idx)] = True
            break
        else:
            raise GenerationError(
                f"could not place tile {t + 1}/{tile_count} after {MAX_ATTEMPTS} attempts"
            )
    tiling = Tiling(rows, cols)
    assert check_nonoverlap(tiling)
    return tiling


def render_matrix(tiling: Tiling, tile_value: float = 1.0, bg_value: float = 0.0) -> np.ndarray:
    """Paint covered elements with ``tile_value`` and the rest with ``bg_value``."""
    cover = tiling.coverage()
    if (cover > 1).any():
        raise ValueError("cannot render an overlapping tiling")
    return np.where(cover > 0, tile_value, bg_value).astype(float)


def add_gaussian_noise(clean, sigma: float, rng_seed: int = 0) -> np.ndarray:
    """Element-wise additive zero-mean Gaussian noise, deterministic per seed."""
    if sigma < 0:
        raise ValueError("sigma must be non-negative")
    x = as_data_matrix(clean)
    if sigma == 0:
        return x.copy()
    rng = np.random.default_rng(np.random.SeedSequence(rng_seed))
    return x + rng.normal(0.0, sigma, size=x.shape)


def make_instance(
    n: int,
    tile_count: int,
    log10_variance: float,
    seed: int,
    area_fraction: float = 0.04,
    tile_value: float = 1.0,
    bg_value: float = 0.0,
) -> GroundTruth:
    """Full benchmark instance; the tiling and the noise use independent
    streams derived from one seed."""
    tiling_seed, noise_seed = [int(s.generate_state(1)[0]) for s in np.random.SeedSequence(seed).spawn(2)]
    sigma = float(np.sqrt(10.0 ** log10_variance))
    tiling = generate_tiling(n, tile_count, area_fraction, tiling_seed)
    clean = render_matrix(tiling, tile_value, bg_value)
    noisy = add_gaussian_noise(clean, sigma, noise_seed)
    return GroundTruth(tiling=tiling, clean=clean, noisy=noisy, sigma=sigma, seed=seed)


def instance_basename(n: int, tile_count: int, log10_variance: float, seed: int) -> str:
    """Canonical file stem, e.g. ``40x40_T3_s-1.5_seed7``."""
    return f"{n}x{n}_T{tile_count}_s{log10_variance:g}_seed{seed}"
