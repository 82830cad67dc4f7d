"""Evaluation metrics: Hamming distance, greedy tile matching, classification
error, cost relative to a reference tiling, and an exhaustive MAP oracle."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import LikelihoodField, Tiling, mdl_cost, log_joint_score


@dataclass(frozen=True)
class TileMatching:
    """One-to-one pairing of reference tile labels to predicted tile labels."""

    pairs: tuple[tuple[int, int], ...]
    unmatched_truth: tuple[int, ...]
    unmatched_pred: tuple[int, ...]


def _check_dims(truth: np.ndarray, pred: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    t = np.asarray(truth, dtype=int)
    p = np.asarray(pred, dtype=int)
    if t.shape != p.shape:
        raise ValueError(f"label matrices differ in shape: {t.shape} vs {p.shape}")
    return t, p


def hamming(truth, pred) -> float:
    """Fraction of elements whose tile-vs-background status disagrees.

    Both label matrices are binarized (any tile index counts as 1) before
    comparison, so this ignores which tile claimed an element.
    """
    t, p = _check_dims(truth, pred)
    return float(np.mean((t > 0) != (p > 0)))


def greedy_match(truth, pred) -> TileMatching:
    """Pair reference and predicted tiles by repeatedly taking the largest
    element overlap.

    Ties pick the smallest reference label, then the smallest predicted
    label. Background (label 0) never participates. Pairing stops once no
    positive overlap remains.
    """
    t, p = _check_dims(truth, pred)
    t_labels = [int(u) for u in np.unique(t) if u > 0]
    p_labels = [int(v) for v in np.unique(p) if v > 0]
    overlap = np.zeros((len(t_labels), len(p_labels)), dtype=int)
    for a, u in enumerate(t_labels):
        tu = t == u
        for b, v in enumerate(p_labels):
            overlap[a, b] = int(np.sum(tu & (p == v)))

    pairs = []
    live_t = list(range(len(t_labels)))
    live_p = list(range(len(p_labels)))
    while live_t and live_p:
        sub = overlap[np.ix_(live_t, live_p)]
        if sub.max(initial=0) <= 0:
            break
        flat = int(np.argmax(sub))  # first occurrence = smallest (u, v) in label order
        a, b = divmod(flat, sub.shape[1])
        pairs.append((t_labels[live_t[a]], p_labels[live_p[b]]))
        del live_t[a]
        del live_p[b]

    return TileMatching(
        pairs=tuple(pairs),
        unmatched_truth=tuple(t_labels[a] for a in live_t),
        unmatched_pred=tuple(p_labels[b] for b in live_p),
    )


def classification_error(truth, pred) -> float:
    """Fraction of mislabeled elements after aligning predicted tiles to the
    reference via :func:`greedy_match`.

    Unmatched predicted tiles are renamed to fresh labels above the largest
    reference label so they always count as errors against the reference.
    """
    t, p = _check_dims(truth, pred)
    matching = greedy_match(t, p)
    rename = {v: u for u, v in matching.pairs}
    next_fresh = int(t.max(initial=0)) + 1
    for v in matching.unmatched_pred:
        rename[v] = next_fresh
        next_fresh += 1
    relabeled = np.zeros_like(p)
    for v, u in rename.items():
        relabeled[p == v] = u
    return float(np.mean(relabeled != t))


def relative_cost(pred: Tiling, truth: Tiling, field: LikelihoodField) -> float:
    """Description-length gap between a prediction and the reference tiling.

    Negative values mean the prediction codes the data more cheaply than the
    reference, which noise can legitimately cause.
    """
    return mdl_cost(pred, field) - mdl_cost(truth, field)


def brute_force_map(field: LikelihoodField, tile_count: int) -> Tiling:
    """Exhaustively maximize the joint score over all indicator assignments.

    Only feasible for tiny instances; guards at 2^24 configurations. Ties
    are broken toward the lexicographically smallest flattened (rows, cols)
    bit pattern, so empty tiles win over equal-scoring occupied ones.
    """
    n, m = field.shape
    t = tile_count
    if t == 0:
        return Tiling.empty(n, m)
    bits = t * (n + m)
    if bits > 24:
        raise ValueError(f"instance too large for enumeration: 2^{bits} configurations")

    n_r = 1 << (t * n)
    n_c = 1 << (t * m)
    # Row-major bit layouts so that integer order == lexicographic order on
    # the flattened indicator bits (most significant bit = tile 0, index 0).
    shifts_r = np.arange(t * n - 1, -1, -1, dtype=np.uint32)
    shifts_c = np.arange(t * m - 1, -1, -1, dtype=np.uint32)
    all_r = ((np.arange(n_r, dtype=np.uint32)[:, None] >> shifts_r) & 1).astype(np.uint8)
    all_c = ((np.arange(n_c, dtype=np.uint32)[:, None] >> shifts_c) & 1).astype(np.uint8)
    all_r = all_r.reshape(n_r, t, n)
    all_c = all_c.reshape(n_c, t, m)

    lam = field.log_ratio
    best_score = -np.inf
    best_pair = (0, 0)
    # Chunk the row configurations to bound the coverage tensor.
    chunk = max(1, int(4_000_000 // max(1, n_c * n * m)))
    for start in range(0, n_r, chunk):
        r_blk = all_r[start : start + chunk].astype(np.int64)
        cover = np.einsum("atn,btm->abnm", r_blk, all_c.astype(np.int64))
        valid = (cover <= 1).all(axis=(2, 3))
        scores = np.einsum("abnm,nm->ab", cover, lam)
        scores[~valid] = -np.inf
        idx = int(np.argmax(scores))
        a, b = divmod(idx, n_c)
        if scores[a, b] > best_score:
            best_score = float(scores[a, b])
            best_pair = (start + a, b)
    if not np.isfinite(best_score):
        raise RuntimeError("no valid configuration found")  # unreachable: all-zero is valid

    a, b = best_pair
    return Tiling.from_indicators(all_r[a], all_c[b])


def oracle_score(field: LikelihoodField, tile_count: int) -> float:
    """Joint score attained by :func:`brute_force_map` on the same instance."""
    return log_joint_score(brute_force_map(field, tile_count), field)
