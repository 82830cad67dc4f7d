"""Acceptance gate: every criterion runs at its stated tolerance and prints
one PASS/FAIL line. Run with ``pytest -s tests/test_acceptance.py`` to see
the lines as they come.
"""

import math
import os
import subprocess
import sys
import time

import numpy as np

from tilekit.core import (
    LikelihoodField,
    SolverParams,
    Tiling,
    check_nonoverlap,
    gaussian_likelihood_field,
    labels_from_tiling,
    log_joint_score,
    mdl_cost,
    select_tile_count,
)
from tilekit.evaluate import brute_force_map, classification_error, hamming
from tilekit.icm import icm_sweep, run_icm
from tilekit.pca import run_pca_tiles
from tilekit.sumprod import (
    message_to_probabilities,
    msg_axis_to_f,
    msg_f_to_axis,
    msg_f_to_s,
    msg_g_to_s,
    run_sum_product,
)
from tilekit.synth import make_instance

LOG2 = math.log(2.0)


def report(number, passed, detail):
    line = f"criterion {number}: {'PASS' if passed else 'FAIL'} - {detail}"
    print(line, flush=True)
    assert passed, line


def test_criterion_1_oracle_map_equivalence():
    rng = np.random.default_rng(12345)
    params = SolverParams(rng_seed=7)
    started = time.perf_counter()
    hits_icm = hits_sp = 0
    for k in range(200):
        t_count = 1 + (k % 2)
        field = LikelihoodField(rng.choice([-2.0, 2.0], size=(3, 3)), np.zeros((3, 3)))
        optimum = log_joint_score(brute_force_map(field, t_count), field)
        t_icm = run_icm(field, t_count, params)
        t_sp = run_sum_product(field, t_count, params)
        assert check_nonoverlap(t_icm) and check_nonoverlap(t_sp)
        hits_icm += log_joint_score(t_icm, field) >= optimum - 1e-9
        hits_sp += log_joint_score(t_sp, field) >= optimum - 1e-9
    elapsed = time.perf_counter() - started
    passed = hits_icm >= 190 and hits_sp >= 160 and elapsed < 30.0
    report(1, passed,
           f"icm {hits_icm}/200 (need >=190), sp {hits_sp}/200 (need >=160), {elapsed:.1f}s (<30s)")


def test_criterion_2_single_tile_recovery():
    params = SolverParams(rng_seed=7)
    started = time.perf_counter()
    exact = {"sp": 0, "icm": 0, "pca": 0}
    errors = {"sp": [], "icm": [], "pca": []}
    for seed in range(20):
        inst = make_instance(40, 1, -1.5, seed)
        field = gaussian_likelihood_field(inst.noisy, 1.0, 0.0, 0.5)
        truth_labels = labels_from_tiling(inst.tiling)
        predictions = {
            "sp": run_sum_product(field, 1, params),
            "icm": run_icm(field, 1, params),
            "pca": run_pca_tiles(inst.noisy, 1, field),
        }
        for method, tiling in predictions.items():
            labels = labels_from_tiling(tiling)
            exact[method] += hamming(truth_labels, labels) == 0.0
            errors[method].append(classification_error(truth_labels, labels))
    elapsed = time.perf_counter() - started
    means = {m: float(np.mean(v)) for m, v in errors.items()}
    passed = (
        all(exact[m] >= 18 for m in exact)
        and all(means[m] < 0.005 for m in means)
        and elapsed < 120.0
    )
    report(2, passed,
           f"exact sp/icm/pca {exact['sp']}/{exact['icm']}/{exact['pca']} of 20 (need >=18), "
           f"mean class err {means['sp']:.4f}/{means['icm']:.4f}/{means['pca']:.4f} (<0.005), "
           f"{elapsed:.0f}s (<120s)")


def test_criterion_3_sp_vs_icm_ordering():
    params = SolverParams(rng_seed=7)
    sp_costs, icm_costs, sp_rel, icm_rel = [], [], [], []
    for k in range(20):
        inst = make_instance(100, 5, -0.8, 1000 + k)
        field = gaussian_likelihood_field(inst.noisy, 1.0, 0.0, 0.5)
        truth_cost = mdl_cost(inst.tiling, field)
        c_sp = mdl_cost(run_sum_product(field, 5, params), field)
        c_icm = mdl_cost(run_icm(field, 5, params), field)
        sp_costs.append(c_sp)
        icm_costs.append(c_icm)
        sp_rel.append(c_sp - truth_cost)
        icm_rel.append(c_icm - truth_cost)
    mean_sp, mean_icm = float(np.mean(sp_costs)), float(np.mean(icm_costs))
    finite = all(np.isfinite(sp_rel)) and all(np.isfinite(icm_rel))
    passed = mean_sp <= mean_icm and finite
    report(3, passed,
           f"mean mdl sp {mean_sp:.1f} <= icm {mean_icm:.1f}; "
           f"mean relative cost sp {np.mean(sp_rel):.1f}, icm {np.mean(icm_rel):.1f} (finite)")


def test_criterion_4_icm_monotonicity_and_termination():
    rng = np.random.default_rng(99)
    monotone = True
    for _ in range(1000):
        n, m = rng.integers(2, 21, size=2)
        t_count = int(rng.integers(1, 4))
        field = LikelihoodField(
            rng.normal(scale=2.0, size=(n, m)), np.zeros((n, m))
        )
        rows = (rng.random((t_count, n)) < 0.4).astype(np.uint8)
        cols = (rng.random((t_count, m)) < 0.4).astype(np.uint8)
        for t in range(1, t_count):  # clear later tiles' conflicting columns
            cover = rows[:t].astype(int).T @ cols[:t].astype(int)
            mask = np.outer(rows[t], cols[t]).astype(bool) & (cover > 0)
            cols[t, mask.any(axis=0)] = 0
        tiling = Tiling(rows, cols)
        score = log_joint_score(Tiling.from_indicators(rows, cols), field)
        for _ in range(2):
            tiling = icm_sweep(tiling, field)
            new_score = log_joint_score(
                Tiling.from_indicators(tiling.row_members, tiling.col_members), field
            )
            if new_score < score - 1e-9:
                monotone = False
            score = new_score

    # Termination: the ascent reaches a fixed point well inside the cap.
    terminated = True
    params = SolverParams(rng_seed=5)
    for k in range(50):
        n = int(rng.integers(4, 21))
        field = LikelihoodField(rng.choice([-2.0, 2.0], size=(n, n)), np.zeros((n, n)))
        from tilekit.icm import _seeded_start

        for stream in np.random.SeedSequence(params.rng_seed).spawn(2):
            tiling = _seeded_start(field, 2, np.random.default_rng(stream))
            for sweeps in range(1, params.max_iterations + 1):
                updated = icm_sweep(tiling, field)
                if np.array_equal(updated.row_members, tiling.row_members) and np.array_equal(
                    updated.col_members, tiling.col_members
                ):
                    break
                tiling = updated
            else:
                terminated = False
            if sweeps >= params.max_iterations:
                terminated = False
    passed = monotone and terminated
    report(4, passed, f"monotone over 1000 instances: {monotone}; "
                      f"fixed point before iteration cap: {terminated}")


def test_criterion_5_model_selection():
    params = SolverParams(rng_seed=7)
    chosen = {"sp": 0, "icm": 0}
    for k in range(20):
        inst = make_instance(70, 3, -1.5, 7000 + k)
        field = gaussian_likelihood_field(inst.noisy, 1.0, 0.0, 0.5)
        chosen["sp"] += select_tile_count(run_sum_product, field, 10, params).tile_count == 3
        chosen["icm"] += select_tile_count(run_icm, field, 10, params).tile_count == 3
    passed = chosen["sp"] >= 16 and chosen["icm"] >= 16
    report(5, passed, f"selected T=3 on sp {chosen['sp']}/20, icm {chosen['icm']}/20 (need >=16)")


def test_criterion_6_mdl_identity():
    rng = np.random.default_rng(42)
    worst = 0.0
    for _ in range(1000):
        n, m = rng.integers(2, 10, size=2)
        field = LikelihoodField(rng.normal(size=(n, m)), rng.normal(size=(n, m)))
        t_count = int(rng.integers(0, 4))
        rows = np.zeros((t_count, n), np.uint8)
        cols = np.zeros((t_count, m), np.uint8)
        bands = np.array_split(rng.permutation(n), t_count) if t_count else []
        for k, band in enumerate(bands):
            if band.size == 0:
                continue
            rows[k, band] = 1
            cols[k, rng.choice(m, size=rng.integers(1, m + 1), replace=False)] = 1
        tiling = Tiling.from_indicators(rows, cols)
        lhs = mdl_cost(tiling, field)
        rhs = -log_joint_score(tiling, field) + tiling.tile_count * (n + m) * LOG2
        scale = max(1.0, abs(lhs), abs(rhs))
        worst = max(worst, abs(lhs - rhs) / scale)
    passed = worst <= 1e-9
    report(6, passed, f"max relative identity violation {worst:.2e} (<=1e-9)")


def test_criterion_7_message_algebra():
    neg_inf = -np.inf
    checks = [
        abs(msg_g_to_s(0.7, []) - 0.7) < 1e-9,
        abs(msg_g_to_s(0.0, [neg_inf])) < 1e-9,
        abs(msg_g_to_s(math.log(2), [math.log(0.5)])) < 1e-9,
        abs(msg_f_to_axis(-1.3, 0.0)) < 1e-9,
        abs(msg_f_to_axis(neg_inf, 5.0)) < 1e-9,
        abs(msg_f_to_axis(0.0, math.log(3)) - math.log(2)) < 1e-9,
        msg_axis_to_f([]) == 0.0,
        abs(msg_axis_to_f([1.5, -0.5]) - 1.0) < 1e-9,
        msg_axis_to_f([neg_inf, 2.0]) == neg_inf,
        abs(msg_f_to_s(0.0, 0.0) + math.log(3)) < 1e-9,
        msg_f_to_s(neg_inf, 4.0) == neg_inf,
        abs(msg_f_to_s(1.0, 1.0) - (2 - math.log(2 * math.e + 1))) < 1e-9,
    ]
    rng = np.random.default_rng(1234)
    magnitudes = np.concatenate([
        rng.uniform(-700, 700, size=998), [700.0, -700.0]
    ])
    reconstruction_ok = True
    with np.errstate(over="raise"):
        for pi in magnitudes:
            p0, p1 = message_to_probabilities(pi)
            if abs(p0 + p1 - 1.0) > 1e-12:
                reconstruction_ok = False
            if abs(math.log(p1 / p0) - pi) > 1e-12 * max(1.0, abs(pi)):
                reconstruction_ok = False
    passed = all(checks) and reconstruction_ok
    report(7, passed,
           f"{sum(checks)}/{len(checks)} kernel examples at 1e-9; "
           f"reconstruction identity on 1000 messages up to |700|: {reconstruction_ok}")


BENCH_CONFIG = """\
sizes = 40
tile_counts = 1, 2
noise_log_variances = -1.5
replicates = 2
methods = sp, icm, pca
seed_base = 400
output_dir = {out}
"""


def test_criterion_8_bench_determinism(tmp_path):
    outputs = {}
    for threads in ("1", "8"):
        out = tmp_path / f"t{threads}"
        cfg = tmp_path / f"t{threads}.cfg"
        cfg.write_text(BENCH_CONFIG.format(out=out))
        proc = subprocess.run(
            [sys.executable, "-m", "tilekit.cli", "bench", str(cfg)],
            capture_output=True, text=True,
            env={**os.environ, "MTA_THREADS": threads, "MPLBACKEND": "Agg"},
        )
        assert proc.returncode == 0, proc.stderr
        outputs[threads] = out
    identical = all(
        (outputs["1"] / name).read_bytes() == (outputs["8"] / name).read_bytes()
        for name in ("results.csv", "summary.csv")
    )
    report(8, identical, "results.csv and summary.csv byte-identical for MTA_THREADS=1 and 8")


def test_criterion_9_external_data_excluded():
    print(
        "criterion 9: SKIP - curated gene-interaction analysis requires external "
        "data and is excluded by design",
        flush=True,
    )
