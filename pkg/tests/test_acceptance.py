"""Acceptance gate: one test per release criterion, at its stated tolerance.

Run with ``pytest tests/test_acceptance.py -v -s`` to see one pass/fail line
per criterion. These tests lean on wavemlp.selftest so the CLI ``selftest``
command and this module agree on what correct means.
"""

import math
import time

import numpy as np

from wavemlp.model import preset
from wavemlp.phasemap import (
    export_phase_map,
    phase_difference_map,
    phase_grid,
    read_pgm,
    read_phase_map_csv,
)
from wavemlp.selftest import (
    check_classical_limit,
    check_gradients,
    check_reference_budgets,
    check_superposition_oracle,
    check_variable_resolution,
    load_pilot,
    pilot_task_config,
)
from wavemlp.synth import make_dataset
from wavemlp.train import ABLATION_AXES, TrainConfig, ablate, train


def _report(num: int, name: str, ok: bool, detail: str = ""):
    line = f"acceptance criterion {num} ({name}): {'PASS' if ok else 'FAIL'}"
    if detail:
        line += f" -- {detail}"
    print(line)


def test_criterion_1_superposition_oracle_equivalence():
    t0 = time.perf_counter()
    result = check_superposition_oracle(n=100_000, seed=0, tol=1e-10)
    elapsed = time.perf_counter() - t0
    ok = result.passed and elapsed < 5.0
    _report(1, "superposition oracle equivalence", ok, f"{result.detail} elapsed={elapsed:.2f}s")
    assert ok, result.detail


def test_criterion_2_classical_limit_identity():
    result = check_classical_limit(configs=100, seed=0, tol=1e-12)
    _report(2, "classical-limit identity", result.passed, result.detail)
    assert result.passed, result.detail


def test_criterion_3_gradient_correctness():
    t0 = time.perf_counter()
    results = check_gradients(seed=0, tol=1e-4, step=1e-5)
    elapsed = time.perf_counter() - t0
    names = {r.name for r in results}
    expected = {
        "grad_matmul",
        "grad_normalize",
        "grad_channel_mlp",
        "grad_patm_none",
        "grad_patm_static",
        "grad_patm_channel_fc",
        "grad_patm_depthwise",
        "grad_patm_identity",
        "grad_aggregate_tokens",
        "grad_token_mixing_block",
        "grad_two_block_model",
    }
    ok = expected <= names and all(r.passed for r in results) and elapsed < 120.0
    detail = f"{len(results)} checks, elapsed={elapsed:.1f}s"
    failing = [r.name for r in results if not r.passed]
    if failing:
        detail += f", failing={failing}"
    _report(3, "gradient correctness", ok, detail)
    assert ok, detail


def test_criterion_4_reference_table_accounting():
    results = check_reference_budgets(rel_tol=0.10)
    ok = all(r.passed for r in results) and len(results) == 5
    _report(4, "parameter/FLOP accounting", ok, "; ".join(r.detail for r in results))
    assert ok, results


def test_criterion_5_variable_resolution_contract():
    results = check_variable_resolution(h=64, w=96, seed=0)
    ok = all(r.passed for r in results) and len(results) == 5
    _report(5, "variable-resolution contract", ok, "; ".join(r.name for r in results))
    assert ok, [r.detail for r in results if not r.passed]


def test_criterion_6_toy_training_threshold_and_determinism():
    doc = load_pilot()
    task, tc = pilot_task_config()
    t0 = time.perf_counter()
    _m1, h1 = train(preset("tiny"), task, tc)
    _m2, h2 = train(preset("tiny"), task, tc)
    elapsed = time.perf_counter() - t0
    steps_per_epoch = math.ceil(task.train_size / tc.batch_size)
    limit = doc["threshold"]["within_steps"]
    target = doc["threshold"]["min_train_acc"]
    reached = [
        (e + 1) * steps_per_epoch
        for e, acc in enumerate(h1.train_acc)
        if acc >= target and (e + 1) * steps_per_epoch <= limit
    ]
    identical = h1.loss == h2.loss and h1.train_acc == h2.train_acc and h1.val_acc == h2.val_acc
    ok = bool(reached) and identical and elapsed < 600.0
    detail = (
        f"first_step_at_{target:.0%}={reached[0] if reached else 'never'} "
        f"best={max(h1.train_acc):.3f} bit_identical={identical} elapsed={elapsed:.0f}s"
    )
    _report(6, "toy training", ok, detail)
    assert ok, detail


def test_criterion_7_ablation_row_structures(tmp_path):
    task, _tc = pilot_task_config()
    quick = TrainConfig(epochs=2, batch_size=64, lr=3e-3, seed=0)
    expected_rows = {
        "phase_mode": ["None", "Static", "ChannelFC"],
        "estimator": ["Identity", "DepthWise", "ChannelFC"],
        "window": ["3", "5", "7", "All"],
    }
    ok = True
    details = []
    for axis in ("phase_mode", "estimator", "window"):
        table = ablate(axis, task, quick, seeds=(0, 1, 2))
        rows = [r.setting for r in table.rows]
        values_valid = all(0.0 <= a <= 1.0 for r in table.rows for a in r.val_accs)
        this_ok = rows == expected_rows[axis] and values_valid
        table.save(str(tmp_path))
        assert (tmp_path / f"ablation_{axis}.csv").exists()
        details.append(f"{axis}={rows}")
        ok = ok and this_ok
    assert set(ABLATION_AXES) == set(expected_rows)
    _report(7, "ablation harness", ok, "; ".join(details))
    assert ok, details


def test_criterion_8_phase_map_export(tmp_path):
    task, _tc = pilot_task_config()
    tc = TrainConfig(epochs=10, batch_size=64, lr=3e-3, seed=0)
    model, hist = train(preset("tiny"), task, tc)
    image = make_dataset(task)[0][0]
    ok = True
    details = [f"train_acc={hist.train_acc[-1]:.2f}"]
    for stage in (3, 4):
        csv_path, pgm_path = export_phase_map(model, image, stage, str(tmp_path))
        window = model.windows[stage - 1]
        vals = phase_difference_map(phase_grid(model, image, stage), window)
        in_range = vals.min() >= -1.0 and vals.max() <= 1.0
        half = window // 2
        centers = vals[half::window, half::window]
        diag_ok = bool(np.abs(centers - 1.0).max() <= 1e-12)
        csv_back = read_phase_map_csv(csv_path)
        csv_ok = np.array_equal(csv_back, vals)
        pixels = read_pgm(pgm_path)
        reencoded = np.rint((np.clip(vals, -1, 1) + 1) * 0.5 * 255).astype(np.uint8)
        pgm_ok = np.array_equal(pixels, reencoded)
        ok = ok and in_range and diag_ok and csv_ok and pgm_ok
        details.append(
            f"stage{stage}: range_ok={in_range} diag_ok={diag_ok} csv={csv_ok} pgm={pgm_ok}"
        )
    _report(8, "phase-map export", ok, "; ".join(details))
    assert ok, details
