"""Shared fixtures: worker-grid cleanup and the session n=8 reference run."""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np
import pytest

from tcmgrid import (
    ModelParams,
    build_hamiltonian,
    build_propagator_factors,
    evolve_step,
    initial_state_all_excited,
    photon_distribution,
    shutdown_engines,
)


@pytest.fixture(scope="session", autouse=True)
def _engine_cleanup():
    yield
    shutdown_engines()


@dataclass(frozen=True)
class ReferenceRun:
    """Densely recorded serial n=8 run shared by the trajectory criteria."""

    dt: float
    times: np.ndarray
    probs: np.ndarray          # (steps+1, 9)
    traces: np.ndarray
    excitations: np.ndarray
    hermiticity_defects: np.ndarray
    min_diagonal: np.ndarray
    wall_seconds: float


N8_DT = 0.05
N8_STEPS = 2400
N8_COUPLING = 0.02


@pytest.fixture(scope="session")
def n8_run() -> ReferenceRun:
    """2400 steps of the all-excited n=8 system at dt=0.05 (t_end=120),
    recording everything the conservation and peak criteria inspect."""
    n = 8
    params = ModelParams.uniform(n, N8_COUPLING)
    h = build_hamiltonian(params)
    start = time.monotonic()
    left, right = build_propagator_factors(h, N8_DT, hbar=params.hbar, order=10)
    rho = initial_state_all_excited(n)
    ms = np.arange(n + 1)

    times, probs, traces, excs, herms, mins = [], [], [], [], [], []

    def record(step: int, state) -> None:
        p = photon_distribution(state, n)
        times.append(step * N8_DT)
        probs.append(p)
        traces.append(state.trace.real)
        excs.append(float(np.sum((n - ms) * p + ms * p)))
        herms.append(float(np.linalg.norm(state.mat - state.mat.conj().T)))
        mins.append(float(np.diagonal(state.mat).real.min()))

    record(0, rho)
    for step in range(1, N8_STEPS + 1):
        rho = evolve_step(left, rho, right)
        record(step, rho)
    wall = time.monotonic() - start

    return ReferenceRun(
        dt=N8_DT,
        times=np.asarray(times),
        probs=np.asarray(probs),
        traces=np.asarray(traces),
        excitations=np.asarray(excs),
        hermiticity_defects=np.asarray(herms),
        min_diagonal=np.asarray(mins),
        wall_seconds=wall,
    )
