"""Baseline that quantizes a principal-component analysis into tiles.

Row memberships come from gap-thresholding the top eigenvectors of the
column covariance; column memberships come from gap-thresholding the
pseudo-inverse projection of each data column onto the binarized
components. Overlap repair and pruning then yield a valid tiling.
"""

from __future__ import annotations

import numpy as np

from .core import LikelihoodField, Tiling, as_data_matrix
from .sumprod import resolve_overlaps


def column_covariance(data) -> np.ndarray:
    """Sample covariance treating columns as observations and rows as variables."""
    x = as_data_matrix(data)
    if x.shape[1] < 2:
        raise ValueError("need at least 2 columns to estimate covariance")
    centered = x - x.mean(axis=1, keepdims=True)
    return centered @ centered.T / (x.shape[1] - 1)


def top_components(cov, count: int) -> tuple[np.ndarray, np.ndarray]:
    """Leading eigenvectors of a symmetric matrix, eigenvalues non-increasing.

    Signs are fixed so each vector's largest-magnitude entry is positive
    (first such entry on ties). Returns (components, eigenvalues) with
    components as rows.
    """
    cov = np.asarray(cov, dtype=float)
    n = cov.shape[0]
    if count > n:
        raise ValueError(f"cannot extract {count} components from a {n}x{n} covariance")
    eigvals, eigvecs = np.linalg.eigh(cov)
    order = np.argsort(-eigvals, kind="stable")[:count]
    comps = eigvecs[:, order].T
    vals = eigvals[order]
    for k in range(comps.shape[0]):
        pivot = int(np.argmax(np.abs(comps[k])))
        if comps[k, pivot] < 0:
            comps[k] = -comps[k]
    return comps, vals


def gap_threshold(values) -> np.ndarray:
    """Binarize by splitting at the largest gap between sorted values.

    Flags entries above the midpoint of that gap, in the original order.
    Degenerate input (all values equal) flags nothing.
    """
    v = np.asarray(values, dtype=float)
    if v.ndim != 1 or v.size < 2:
        raise ValueError("need a 1-D vector of length >= 2")
    ordered = np.sort(v)
    gaps = np.diff(ordered)
    if gaps.max() <= 0:
        return np.zeros(v.size, dtype=np.uint8)
    widest = int(np.argmax(gaps))
    cut = 0.5 * (ordered[widest] + ordered[widest + 1])
    return (v > cut).astype(np.uint8)


def run_pca_tiles(data, tile_count: int, field: LikelihoodField) -> Tiling:
    """Covariance eigenvectors -> row indicators -> pseudo-inverse projection
    -> column indicators -> overlap repair."""
    x = as_data_matrix(data)
    n, m = x.shape
    if tile_count > min(n, m):
        raise ValueError(f"tile_count {tile_count} exceeds min(N, M) = {min(n, m)}")
    if tile_count == 0:
        return Tiling.empty(n, m)

    comps, _ = top_components(column_covariance(x), tile_count)
    row_sets = [gap_threshold(comp) for comp in comps]
    row_sets = [rows for rows in row_sets if rows.any()]  # degenerate components drop out
    if not row_sets:
        return Tiling.empty(n, m)

    basis = np.stack(row_sets, axis=1).astype(float)  # (N, K)
    coeffs = np.linalg.pinv(basis) @ x  # (K, M)
    raw_r = np.stack(row_sets, axis=0)
    raw_c = np.stack([gap_threshold(coeffs[k]) for k in range(coeffs.shape[0])], axis=0)
    return resolve_overlaps(raw_r, raw_c, field)
