"""Loopy sum-product solver over the tile factor graph.

Variables are the row, column, and per-element ownership indicators; one
factor family ties each ownership bit to its row and column bits, the other
enforces single ownership per element and injects the evidence. All messages
travel as log-odds scalars, so a single real per edge carries the full
binary message and hard zeros appear as ``-inf``.

Tiles are processed consecutively within a sweep, each in the fixed update
order (ownership evidence, factor-to-row, row-to-factor, factor-to-column,
column-to-factor, factor-to-ownership). Plain message passing is not enough
on this graph: started from the neutral initialization it settles into an
all-background fixed point, and interchangeable tiles converge to identical
marginals that no threshold can tell apart. The solver therefore makes
incremental hard decisions on a fixed schedule (see ``sweep``): tiles enter
one at a time, each commits one coherent block of evidence by pinning its
variables, over-committed pins are released once all claims are in, and the
free dynamics settle the boundaries before decoding.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import LikelihoodField, SolverParams, Tiling, mdl_cost


@dataclass(eq=False)
class MessageState:
    """All messages of the factor graph, indexed (row, col, tile).

    ``frozen_row_sign`` / ``frozen_col_sign`` record variables whose outgoing
    messages have been pinned at the clamp bound by incremental thresholding
    (0 = live, otherwise the pinned sign).
    """

    mu_g_to_s: np.ndarray
    mu_f_to_r: np.ndarray
    mu_r_to_f: np.ndarray
    mu_f_to_c: np.ndarray
    mu_c_to_f: np.ndarray
    mu_f_to_s: np.ndarray
    frozen_row_sign: np.ndarray
    frozen_col_sign: np.ndarray
    ignited: np.ndarray
    iteration: int = 0

    @property
    def tile_count(self) -> int:
        return self.mu_f_to_s.shape[2]

    def copy(self) -> "MessageState":
        return MessageState(
            self.mu_g_to_s.copy(),
            self.mu_f_to_r.copy(),
            self.mu_r_to_f.copy(),
            self.mu_f_to_c.copy(),
            self.mu_c_to_f.copy(),
            self.mu_f_to_s.copy(),
            self.frozen_row_sign.copy(),
            self.frozen_col_sign.copy(),
            self.ignited.copy(),
            self.iteration,
        )


@dataclass(frozen=True, eq=False)
class SumProductRun:
    """Outcome of a full solver run, with convergence diagnostics."""

    tiling: Tiling
    converged: bool
    iterations: int
    residuals: tuple[tuple[float, float], ...]  # (abs change, reference sum) per sweep


def message_to_probabilities(message: float) -> tuple[float, float]:
    """Recover (p0, p1) from a log-odds message without overflow."""
    if np.isneginf(message):
        return 1.0, 0.0
    if message >= 0:
        e = np.exp(-message)
        return e / (1.0 + e), 1.0 / (1.0 + e)
    e = np.exp(message)
    return 1.0 / (1.0 + e), e / (1.0 + e)


def msg_g_to_s(lambda_ij: float, other_tile_claims) -> float:
    """Ownership evidence for one tile given the other tiles' claims."""
    stack = np.concatenate(([-float(lambda_ij)], np.asarray(other_tile_claims, dtype=float)))
    return float(-_logsumexp(stack))


def msg_f_to_axis(mu_opposite_axis: float, mu_gs: float) -> float:
    """Factor-to-row (or column) update; attenuates ownership evidence by the
    belief of the opposite axis."""
    return float(
        np.logaddexp(0.0, mu_opposite_axis + mu_gs) - np.logaddexp(0.0, mu_opposite_axis)
    )


def msg_axis_to_f(incoming) -> float:
    """Variable-to-factor update: sum of the other incoming messages."""
    arr = np.asarray(incoming, dtype=float)
    if arr.size == 0:
        return 0.0
    return float(arr.sum())


def msg_f_to_s(mu_c: float, mu_r: float) -> float:
    """Factor-to-ownership update; symmetric in its two arguments."""
    return float(mu_c + mu_r - np.logaddexp(np.logaddexp(mu_c, mu_r), 0.0))


def _logsumexp(values: np.ndarray, axis=None):
    m = np.max(values, axis=axis)
    m_safe = np.where(np.isneginf(m), 0.0, m)
    if axis is None:
        total = np.sum(np.exp(values - m_safe))
    else:
        total = np.sum(np.exp(values - np.expand_dims(m_safe, axis)), axis=axis)
    return np.where(np.isneginf(m), -np.inf, m_safe + np.log(total))


def _freeze(beliefs: np.ndarray, sign: np.ndarray, params: SolverParams) -> None:
    """Pin any live variable whose fused belief magnitude clears the
    ``freeze_belief`` threshold, at the sign it already has."""
    live = sign == 0
    hot = live & (np.abs(beliefs) > params.freeze_belief)
    sign[hot] = np.sign(beliefs[hot]).astype(np.int8)


def _ignite(state: MessageState, tile: int, g: np.ndarray) -> None:
    """Commit one coherent evidence block to a tile that has none yet.

    The message dynamics cannot leave the all-background fixed point on
    their own: with every variable near neutral, each axis taxes the other
    into staying negative, so a minority tile never surfaces. This seeds
    the escape. The tile's best column (by fused belief) picks a block out
    of its ownable evidence ``g`` (the likelihood ratios, already discounted
    by other tiles' claims, so ignition is repelled from claimed elements):
    rows positive on the seed column, then columns positive on those rows,
    then rows positive on those columns. That block is pinned positive;
    everything else stays live for the messages to settle. Tiles ignite on
    different sweeps, giving claims time to propagate between ignitions.
    """
    col_beliefs = state.mu_f_to_c[:, :, tile].sum(axis=0)
    seed = int(np.argmax(col_beliefs))
    cols = np.zeros(g.shape[1], dtype=bool)
    cols[seed] = True
    rows = np.zeros(g.shape[0], dtype=bool)
    positive = g > 0
    support = 0.6
    for _ in range(20):
        # Members must be positive on well over half the block, not just in
        # sum: two blocks sharing a minority of rows would otherwise grow
        # into one, whose cross elements are pure background.
        rows = (positive[:, cols].sum(axis=1) > support * cols.sum()) & (g[:, cols].sum(axis=1) > 0)
        if not rows.any():
            return
        grown = (positive[rows, :].sum(axis=0) > support * rows.sum()) & (g[rows, :].sum(axis=0) > 0)
        if not grown.any():
            return
        if (grown == cols).all():
            break
        cols = grown
    state.frozen_row_sign[rows, tile] = 1
    state.frozen_col_sign[cols, tile] = 1
    state.ignited[tile] = True


def init_messages(field: LikelihoodField, tile_count: int) -> MessageState:
    """Fresh message state: zeros everywhere except the ownership-to-evidence
    direction, which starts at -inf (no element claimed by any tile)."""
    if tile_count < 1:
        raise ValueError("tile_count must be >= 1; handle the empty model separately")
    n, m = field.shape
    shape = (n, m, tile_count)
    return MessageState(
        mu_g_to_s=np.zeros(shape),
        mu_f_to_r=np.zeros(shape),
        mu_r_to_f=np.zeros(shape),
        mu_f_to_c=np.zeros(shape),
        mu_c_to_f=np.zeros(shape),
        mu_f_to_s=np.full(shape, -np.inf),
        frozen_row_sign=np.zeros((n, tile_count), dtype=np.int8),
        frozen_col_sign=np.zeros((m, tile_count), dtype=np.int8),
        ignited=np.zeros(tile_count, dtype=bool),
        iteration=0,
    )


def sweep(state: MessageState, field: LikelihoodField, params: SolverParams) -> MessageState:
    """One full message-passing pass over all tiles. Pure: returns a new state."""
    out = state.copy()
    n, m = field.shape
    t_count = out.tile_count
    lam = field.log_ratio
    bound = params.clamp_bound
    sweep_number = out.iteration + 1
    # Tiles enter the schedule one at a time, ``freeze_start`` sweeps apart,
    # and take their single hard-decision turn at the end of their warm-up.
    # An inactive tile's ownership messages are still the initial -inf, so
    # it is invisible to the others: each tile starts against a world where
    # the earlier tiles' claims are already settled. Once every tile has
    # committed and had one interval to propagate, pins whose fused belief
    # disagrees with them are released: those are the rough edges of the
    # committed blocks, and the free dynamics trim them. Pins the beliefs
    # agree with stay, which is what keeps weakly-evidenced small blocks
    # from dissolving back into the neutral plateau. With freezing disabled
    # every tile runs from the first sweep.
    staggered = params.freeze_start <= params.max_iterations
    release_sweep = (t_count + 1) * params.freeze_start
    settle_sweep = release_sweep + (t_count + 1) * params.freeze_start
    if staggered and sweep_number > release_sweep:
        all_row_beliefs = out.mu_f_to_r.sum(axis=1)  # (N, T)
        all_col_beliefs = out.mu_f_to_c.sum(axis=0)  # (M, T)
        repairing = sweep_number <= settle_sweep
        for t in range(t_count):
            rivals_r = np.max(np.delete(all_row_beliefs, t, axis=1), axis=1) if t_count > 1 else None
            rivals_c = np.max(np.delete(all_col_beliefs, t, axis=1), axis=1) if t_count > 1 else None
            row_sign = out.frozen_row_sign[:, t]
            col_sign = out.frozen_col_sign[:, t]
            drop_r = row_sign * all_row_beliefs[:, t] <= 0
            drop_c = col_sign * all_col_beliefs[:, t] <= 0
            if repairing and t_count > 1:
                # During the repair era a pin also yields when another tile
                # believes in the same variable more strongly; afterwards
                # only self-disagreeing pins release, so the state settles.
                drop_r |= (row_sign > 0) & (rivals_r > all_row_beliefs[:, t])
                drop_c |= (col_sign > 0) & (rivals_c > all_col_beliefs[:, t])
            row_sign[drop_r] = 0
            col_sign[drop_c] = 0

    for t in range(t_count):
        if staggered and sweep_number <= t * params.freeze_start:
            continue
        others = [k for k in range(t_count) if k != t]
        stack = np.concatenate(
            [-lam[:, :, None], out.mu_f_to_s[:, :, others]], axis=2
        )
        g = np.clip(-_logsumexp(stack, axis=2), -bound, bound)
        out.mu_g_to_s[:, :, t] = g

        my_turn = staggered and sweep_number >= (t + 1) * params.freeze_start
        first_turn = (t + 1) * params.freeze_start
        if staggered and (
            (sweep_number == first_turn)
            or (first_turn < sweep_number <= release_sweep and not out.ignited[t])
            or (sweep_number == first_turn + release_sweep)
        ):
            # Tiles get a second commitment turn once every rival has had a
            # first: an established tile extends into territory the other
            # claims have since clarified, a dissolved one re-seeds afresh.
            _ignite(out, t, g)

        c_in = out.mu_c_to_f[:, :, t]
        f_to_r = np.logaddexp(0.0, c_in + g) - np.logaddexp(0.0, c_in)
        out.mu_f_to_r[:, :, t] = np.clip(f_to_r, -bound, bound)

        if my_turn:
            _freeze(out.mu_f_to_r[:, :, t].sum(axis=1), out.frozen_row_sign[:, t], params)

        totals = out.mu_f_to_r[:, :, t].sum(axis=1, keepdims=True)
        r_to_f = np.clip(totals - out.mu_f_to_r[:, :, t], -bound, bound)
        pinned_r = out.frozen_row_sign[:, t] != 0
        r_to_f[pinned_r, :] = out.frozen_row_sign[pinned_r, t][:, None] * bound
        out.mu_r_to_f[:, :, t] = r_to_f

        f_to_c = np.logaddexp(0.0, r_to_f + g) - np.logaddexp(0.0, r_to_f)
        out.mu_f_to_c[:, :, t] = np.clip(f_to_c, -bound, bound)

        if my_turn:
            _freeze(out.mu_f_to_c[:, :, t].sum(axis=0), out.frozen_col_sign[:, t], params)

        totals = out.mu_f_to_c[:, :, t].sum(axis=0, keepdims=True)
        c_to_f = np.clip(totals - out.mu_f_to_c[:, :, t], -bound, bound)
        pinned_c = out.frozen_col_sign[:, t] != 0
        c_to_f[:, pinned_c] = out.frozen_col_sign[pinned_c, t] * bound
        out.mu_c_to_f[:, :, t] = c_to_f

        f_to_s = c_to_f + r_to_f - np.logaddexp(np.logaddexp(c_to_f, r_to_f), 0.0)
        out.mu_f_to_s[:, :, t] = np.clip(f_to_s, -bound, bound)

    out.iteration = sweep_number
    return out


def _residual(prev: MessageState, curr: MessageState) -> tuple[float, float]:
    """(sum of absolute message change, reference magnitude sum) over the
    ownership messages, skipping entries that are -inf on both sides."""
    a, b = prev.mu_f_to_s, curr.mu_f_to_s
    both_off = np.isneginf(a) & np.isneginf(b)
    one_off = np.isneginf(a) != np.isneginf(b)
    if one_off.any():
        return np.inf, float(np.sum(np.abs(a[~np.isneginf(a)])))
    live = ~both_off
    return float(np.sum(np.abs(a[live] - b[live]))), float(np.sum(np.abs(a[live])))


def converged(prev: MessageState, curr: MessageState, tol: float) -> bool:
    """Relative-change test on the ownership messages, with an absolute
    fallback of 1e-12 for the degenerate all-zero reference."""
    if prev.mu_f_to_s.shape != curr.mu_f_to_s.shape:
        raise ValueError("message states have mismatched dimensions")
    change, reference = _residual(prev, curr)
    if change <= 1e-12:
        return True
    return change <= tol * reference


def resolve_overlaps(row_members, col_members, field: LikelihoodField) -> Tiling:
    """Make raw indicators non-overlapping, spending as little evidence as possible.

    Contested elements go to the claiming tile with the largest total
    log-ratio sum; every losing tile drops the element's row or column,
    whichever removal costs less evidence. If simply deleting every
    contested tile describes the data more cheaply than that repair, the
    deletion wins.
    """
    r = np.asarray(row_members, dtype=np.uint8).copy()
    c = np.asarray(col_members, dtype=np.uint8).copy()
    lam = field.log_ratio

    def coverage(rr, cc):
        if rr.shape[0] == 0:
            return np.zeros(field.shape, dtype=int)
        return rr.astype(int).T @ cc.astype(int)

    cover = coverage(r, c)
    if (cover <= 1).all():
        return Tiling.from_indicators(r, c)

    contested_mask = cover > 1
    involved = np.array(
        [bool((np.outer(r[t], c[t]).astype(bool) & contested_mask).any()) for t in range(r.shape[0])]
    )
    fallback = Tiling.from_indicators(r[~involved], c[~involved])

    while True:
        cover = coverage(r, c)
        spots = np.argwhere(cover > 1)
        if spots.size == 0:
            break
        i, j = map(int, spots[0])
        claimants = [t for t in range(r.shape[0]) if r[t, i] and c[t, j]]
        totals = [float(lam[np.ix_(r[t] > 0, c[t] > 0)].sum()) for t in claimants]
        winner = claimants[int(np.argmax(totals))]
        for t in claimants:
            if t == winner:
                continue
            row_loss = float(lam[i, c[t] > 0].sum())
            col_loss = float(lam[r[t] > 0, j].sum())
            if row_loss <= col_loss:
                r[t, i] = 0
            else:
                c[t, j] = 0

    resolved = Tiling.from_indicators(r, c)
    if mdl_cost(fallback, field) < mdl_cost(resolved, field):
        return fallback
    return resolved


def decode(state: MessageState, field: LikelihoodField, threshold: float = 0.0) -> Tiling:
    """Threshold the fused beliefs into indicators and repair any overlap."""
    row_beliefs = state.mu_f_to_r.sum(axis=1)  # (N, T)
    col_beliefs = state.mu_f_to_c.sum(axis=0)  # (M, T)
    raw_r = (row_beliefs > threshold).T.astype(np.uint8)
    raw_c = (col_beliefs > threshold).T.astype(np.uint8)
    return resolve_overlaps(raw_r, raw_c, field)


def sum_product(
    field: LikelihoodField, tile_count: int, params: SolverParams | None = None
) -> SumProductRun:
    """Run the solver to convergence (or the iteration cap) and decode.

    Deterministic for fixed inputs. Non-convergence is reported in the
    result, not raised; the final state still decodes to a valid tiling.
    """
    params = params or SolverParams()
    if tile_count == 0:
        return SumProductRun(Tiling.empty(*field.shape), True, 0, ())
    state = init_messages(field, tile_count)
    residuals = []
    did_converge = False
    # The pre-ignition plateau can look converged while hard decisions are
    # still pending, so the test only arms once the repair era has ended.
    freeze_live = params.freeze_start <= params.max_iterations
    release = 2 * (tile_count + 1) * params.freeze_start
    for _ in range(params.max_iterations):
        new = sweep(state, field, params)
        residuals.append(_residual(state, new))
        armed = not freeze_live or new.iteration > release
        if armed and converged(state, new, params.convergence_tol):
            state = new
            did_converge = True
            break
        state = new
    tiling = decode(state, field, params.decode_threshold)
    return SumProductRun(tiling, did_converge, state.iteration, tuple(residuals))


def run_sum_product(
    field: LikelihoodField, tile_count: int, params: SolverParams | None = None
) -> Tiling:
    """Tiling-only wrapper around :func:`sum_product`; use that for the
    convergence flag and residual trace."""
    return sum_product(field, tile_count, params).tiling
