"""Acceptance gate: the eight end-to-end checks this package promises.

Each test prints exactly one pass/fail line under ``pytest -v`` and pins the
stated tolerance; nothing here is redundant with the unit suites, which probe
the same components at finer grain.
"""

import dataclasses
import math
import time

import numpy as np
import pytest

from tcmgrid import (
    EvolutionConfig,
    GridStrategy,
    ModelParams,
    build_hamiltonian,
    build_propagator_factors,
    cannon_multiply,
    evolve_step,
    first_peak,
    frobenius_distance,
    frobenius_norm,
    initial_state_all_excited,
    matexp_exact,
    matmul_serial,
    photon_distribution,
    random_complex,
    run_benchmark,
    run_trajectory,
    speedup_table,
    spectral_norm_hermitian,
)

CANNON_REL_TOL = 1e-10
RABI_TOL = 1e-4


def test_criterion_1_block_products_match_serial_oracle():
    """Random complex products, dims {16,64,256}, all grid sides, 50 seeds:
    relative Frobenius error vs the serial kernel <= 1e-10, under 2 minutes."""
    start = time.monotonic()
    worst = 0.0
    for dim in (16, 64, 256):
        sides = (2, 4) if dim < 256 else (2, 4, 8, 16)
        for seed in range(50):
            a = random_complex(dim, 7919 * seed + dim)
            b = random_complex(dim, 104729 * seed + dim + 1)
            ref = matmul_serial(a, b)
            ref_norm = frobenius_norm(ref)
            for q in sides:
                got = cannon_multiply(a, b, GridStrategy.grid(q))
                worst = max(worst, frobenius_distance(got, ref) / ref_norm)
    elapsed = time.monotonic() - start
    assert worst <= CANNON_REL_TOL, f"worst relative error {worst:.3e}"
    assert elapsed < 120.0, f"took {elapsed:.1f}s"


def test_criterion_2_taylor_factors_match_spectral_oracle():
    """n=8 propagator factors at ||H||dt = 0.2, order 10: Frobenius distance
    to the exact exponentials within the truncation bound; R is bitwise L^dag."""
    h = build_hamiltonian(ModelParams.uniform(8, 0.02))
    dt = 0.2 / spectral_norm_hermitian(h)
    left, right = build_propagator_factors(h, dt, order=10)
    bound = 0.2**11 / math.factorial(11) + 1e-12
    err_left = frobenius_distance(left, matexp_exact(-1j * dt * h))
    err_right = frobenius_distance(right, matexp_exact(1j * dt * h))
    assert err_left <= bound, f"left factor error {err_left:.3e} > {bound:.3e}"
    assert err_right <= bound, f"right factor error {err_right:.3e} > {bound:.3e}"
    assert np.array_equal(right, left.conj().T), "right factor is not bitwise adjoint"


def test_criterion_3_two_level_exchange_matches_analytic_oracle():
    """n=1 reduces to two-level exchange: P_1(t) = sin^2(g t / hbar) within
    1e-4 across one full period t in [0, 2 pi]."""
    start = time.monotonic()
    record = run_trajectory(
        ModelParams.uniform(1, 1.0), EvolutionConfig(dt=0.001, steps=6284)
    )
    err = float(np.max(np.abs(record.photon_probs[:, 1] - np.sin(record.times) ** 2)))
    elapsed = time.monotonic() - start
    assert err <= RABI_TOL, f"max |P_1 - sin^2| = {err:.3e}"
    assert elapsed < 60.0, f"took {elapsed:.1f}s"


def test_criterion_4_sector_dynamics_qualitative_features(n8_run):
    """n=8 all-excited trajectory, qualitative shape of the sector curves:
    (a) P_0(0) = 1 exactly; (b) first-peak times strictly ordered in m;
    (c) mirror sectors m and 8-m share their window maximum within 0.02;
    (d) serial runtime under 10 minutes."""
    failures = []

    if n8_run.probs[0, 0] != 1.0:
        failures.append(f"(a) P_0(0) = {n8_run.probs[0, 0]!r} != 1.0")

    peak_times = {}
    for m in range(1, 9):
        peak = first_peak(n8_run.times, n8_run.probs[:, m])
        if peak is None:
            failures.append(f"(b) P_{m} never turns over in t <= 120")
        else:
            peak_times[m] = peak[0]
    for m in range(1, 8):
        if m in peak_times and m + 1 in peak_times:
            if not peak_times[m] < peak_times[m + 1]:
                failures.append(
                    f"(b) t_peak(P_{m}) = {peak_times[m]:.2f} >= "
                    f"t_peak(P_{m + 1}) = {peak_times[m + 1]:.2f}"
                )

    for m in range(4):
        gap = abs(float(n8_run.probs[:, m].max()) - float(n8_run.probs[:, 8 - m].max()))
        if gap > 0.02:
            failures.append(f"(c) |max P_{m} - max P_{8 - m}| = {gap:.3f} > 0.02")

    if not n8_run.wall_seconds < 600.0:
        failures.append(f"(d) reference run took {n8_run.wall_seconds:.0f}s")

    assert not failures, "; ".join(failures)


def test_criterion_5_conservation_suite(n8_run):
    """Over 2400 steps at n=8: |trace-1| <= 1e-8, hermiticity defect <= 1e-9,
    sum_m P_m = trace within 1e-9 at every step, and P_m >= -1e-9."""
    assert len(n8_run.times) == 2401
    drift = float(np.max(np.abs(n8_run.traces - 1.0)))
    assert drift <= 1e-8, f"max |trace - 1| = {drift:.3e}"
    herm = float(np.max(n8_run.hermiticity_defects))
    assert herm <= 1e-9, f"max hermiticity defect = {herm:.3e}"
    total_gap = float(np.max(np.abs(n8_run.probs.sum(axis=1) - n8_run.traces)))
    assert total_gap <= 1e-9, f"max |sum P_m - trace| = {total_gap:.3e}"
    most_negative = float(n8_run.probs.min())
    assert most_negative >= -1e-9, f"P_m dipped to {most_negative:.3e}"


def test_criterion_6_grid_trajectories_match_serial():
    """The n=8 trajectory is strategy-independent: every grid side yields the
    same sector probabilities as serial within 1e-8 at every recorded step."""
    params = ModelParams.uniform(8, 0.02)
    reference = run_trajectory(params, EvolutionConfig(dt=0.05, steps=120))
    worst = 0.0
    for q in (2, 4, 8, 16):
        record = run_trajectory(
            params, EvolutionConfig(dt=0.05, steps=120, strategy=GridStrategy.grid(q))
        )
        dev = float(np.max(np.abs(record.photon_probs - reference.photon_probs)))
        worst = max(worst, dev)
    assert worst <= 1e-8, f"worst sector deviation {worst:.3e}"


def test_criterion_7_benchmark_tables_are_well_formed():
    """The harness times real cells and emits strategies x dimensions speedup
    tables: serial row exactly 1.000, ratios scale-invariant, missing cells
    rendered as the absent marker."""
    records, skipped = run_benchmark(
        [16, 64],
        [GridStrategy.serial(), GridStrategy.grid(2), GridStrategy.grid(4)],
        repetitions=3,
        steps=3,
    )
    assert skipped == []
    assert len(records) == 12  # 2 tasks x 2 dims x 3 strategies

    for task in ("taylor", "evolution"):
        table = speedup_table(records, task)
        assert table.strategies == ("serial", "grid(2)", "grid(4)")
        assert table.dimensions == (16, 64)
        for dim in table.dimensions:
            assert table.cell("serial", dim) == 1.0  # exact, not approximate
            for label in table.strategies:
                assert table.cell(label, dim) > 0

        lines = table.to_csv().splitlines()
        assert lines[0] == "strategy,16,64"
        assert lines[1] == "serial,1.000,1.000"
        assert len(lines) == 4

        scaled = [
            dataclasses.replace(r, wall_time_seconds=r.wall_time_seconds * 12.5)
            for r in records
        ]
        scaled_table = speedup_table(scaled, task)
        for label in table.strategies:
            for dim in table.dimensions:
                assert scaled_table.cell(label, dim) == pytest.approx(
                    table.cell(label, dim), rel=1e-12
                )

    pruned = [
        r
        for r in records
        if not (r.task == "taylor" and r.dimension == 64 and r.strategy.label == "grid(4)")
    ]
    pruned_table = speedup_table(pruned, "taylor")
    assert pruned_table.cell("grid(4)", 64) is None
    grid4_row = [l for l in pruned_table.to_csv().splitlines() if l.startswith("grid(4),")][0]
    assert grid4_row.endswith(",--")


def test_criterion_8_fault_hooks_break_their_target_checks():
    """Mutation sensitivity: the reversed-shift hook must push block products
    past the 1e-10 oracle gate, and the photon-factor off-by-one hook must
    push the two-level exchange past its 1e-4 analytic gate."""
    weakest = math.inf
    for seed in range(5):
        a = random_complex(64, 31337 + seed)
        b = random_complex(64, 62791 + seed)
        got = cannon_multiply(a, b, GridStrategy.grid(4), _reverse_shift=True)
        rel = frobenius_distance(got, matmul_serial(a, b)) / frobenius_norm(
            matmul_serial(a, b)
        )
        weakest = min(weakest, rel)
    assert weakest > CANNON_REL_TOL, f"reversed shift left error at {weakest:.3e}"

    params = ModelParams.uniform(1, 1.0)
    hooked = build_hamiltonian(params, _photon_factor_off_by_one=True)
    left, right = build_propagator_factors(hooked, 0.001)
    rho = initial_state_all_excited(1)
    err = 0.0
    for step in range(1, 6285):
        rho = evolve_step(left, rho, right)
        p1 = photon_distribution(rho, 1)[1]
        err = max(err, abs(p1 - math.sin(step * 0.001) ** 2))
    assert err > RABI_TOL, f"off-by-one coupling left error at {err:.3e}"
