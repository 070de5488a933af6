"""Wall-clock comparison of grid strategies against serial execution.

Two tasks are timed per (dimension, strategy) cell:

* ``taylor`` — building both truncated-propagator factors, and
* ``evolution`` — a fixed-step density-matrix trajectory (with factor
  construction included by default; the flag travels in the record
  metadata so totals stay interpretable either way).

Inputs are seeded synthetic Hermitian matrices by default (so dimension
sweeps aren't tied to modeled atom counts); ``use_tcm=True`` switches to
real model Hamiltonians. Each cell reports the median of >= 3 repetitions.
Timing is observational: the benchmark never changes numerical results.

The harness runs cells strictly sequentially — never two worker grids at
once — so timings don't contaminate each other. Speedups are
``T_serial / T_strategy``; the serial row of the table is exactly 1.000
whenever a serial timing exists, and cells without a timing are emitted as
the explicit absent marker ``--``.
"""

from __future__ import annotations

import json
import os
import platform
import socket
import statistics
import time
from dataclasses import dataclass, field
from datetime import datetime, timezone

import numpy as np

from .cannon import GridStrategy, lease_engine
from .errors import DimensionError, ParameterError, PartitionError, SimulationError
from .evolution import (
    DensityMatrix,
    build_propagator_factors,
    evolve_step,
    photon_distribution,
)
from .linalg import random_hermitian
from .model import MAX_ATOMS_DEFAULT, ModelParams, build_hamiltonian

__all__ = [
    "TimingRecord",
    "SpeedupTable",
    "ABSENT_MARKER",
    "time_taylor",
    "time_evolution",
    "run_benchmark",
    "speedup_table",
    "write_records_jsonl",
    "machine_metadata",
]

ABSENT_MARKER = "--"

_BENCH_DT = 0.01
_BENCH_COUPLING = 0.02


@dataclass(frozen=True)
class TimingRecord:
    """One timed cell: task, input size, strategy, and the median wall time."""

    task: str
    dimension: int
    strategy: GridStrategy
    wall_time_seconds: float
    workers: int
    repetitions: int
    timestamp: str
    metadata: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.task not in ("taylor", "evolution"):
            raise ParameterError(f"unknown bench task {self.task!r}")
        if not (self.wall_time_seconds > 0):
            raise ParameterError("wall_time_seconds must be positive")
        if self.repetitions < 1:
            raise ParameterError("repetitions must be >= 1")

    def to_record_dict(self) -> dict:
        """The exact exported column set for line-delimited records."""
        return {
            "task": self.task,
            "dimension": self.dimension,
            "strategy": self.strategy.label,
            "workers": self.workers,
            "repetitions": self.repetitions,
            "wall_time_seconds": self.wall_time_seconds,
        }


def _check_dimension(dimension: int) -> None:
    if not isinstance(dimension, int) or dimension < 2 or dimension & (dimension - 1):
        raise ParameterError(f"dimension must be a power of two >= 2, got {dimension!r}")
    if dimension > (1 << MAX_ATOMS_DEFAULT):
        raise DimensionError(
            f"dimension {dimension} exceeds the cap 2^{MAX_ATOMS_DEFAULT}"
        )


def _check_strategy_fits(dimension: int, strategy: GridStrategy) -> None:
    if strategy.kind == "grid" and dimension % strategy.q != 0:
        raise PartitionError(
            f"grid side {strategy.q} does not divide dimension {dimension}"
        )


def _bench_hamiltonian(dimension: int, seed: int, use_tcm: bool) -> np.ndarray:
    if use_tcm:
        n = dimension.bit_length() - 1
        params = ModelParams.uniform(n, _BENCH_COUPLING)
        return build_hamiltonian(params)
    return random_hermitian(dimension, seed)


def _timed_reps(fn, repetitions: int) -> float:
    samples = []
    for _ in range(repetitions):
        start = time.perf_counter()
        fn()
        samples.append(time.perf_counter() - start)
    return float(statistics.median(samples))


def _lease_for(strategy: GridStrategy):
    from contextlib import nullcontext

    return nullcontext(None) if strategy.kind == "serial" else lease_engine(strategy.q)


def time_taylor(
    dimension: int,
    strategy: GridStrategy,
    repetitions: int = 3,
    *,
    seed: int = 0,
    use_tcm: bool = False,
    taylor_order: int = 10,
    dt: float = _BENCH_DT,
) -> TimingRecord:
    """Median wall time of building both propagator factors at this size.

    The input matrix is generated from the fixed seed, so repeated calls
    time bit-identical inputs (the timings themselves naturally vary).
    """
    _check_dimension(dimension)
    _check_strategy_fits(dimension, strategy)
    if repetitions < 1:
        raise ParameterError("repetitions must be >= 1")
    h = _bench_hamiltonian(dimension, seed, use_tcm)
    with _lease_for(strategy) as engine:
        wall = _timed_reps(
            lambda: build_propagator_factors(
                h, dt, order=taylor_order, strategy=strategy, engine=engine
            ),
            repetitions,
        )
    return TimingRecord(
        task="taylor",
        dimension=dimension,
        strategy=strategy,
        wall_time_seconds=wall,
        workers=strategy.workers,
        repetitions=repetitions,
        timestamp=datetime.now(timezone.utc).isoformat(),
        metadata={"seed": seed, "use_tcm": use_tcm, "taylor_order": taylor_order, "dt": dt},
    )


def time_evolution(
    dimension: int,
    strategy: GridStrategy,
    steps: int = 5,
    repetitions: int = 3,
    *,
    seed: int = 0,
    use_tcm: bool = False,
    taylor_order: int = 10,
    dt: float = _BENCH_DT,
    include_factor_build: bool = True,
) -> TimingRecord:
    """Median wall time of a fixed-step trajectory at this size.

    ``include_factor_build`` controls whether factor construction is inside
    the timed region (default: included, i.e. standalone totals); the flag
    is recorded in the metadata rather than guessed at read time.
    """
    _check_dimension(dimension)
    _check_strategy_fits(dimension, strategy)
    if steps < 1:
        raise ParameterError("steps must be >= 1")
    if repetitions < 1:
        raise ParameterError("repetitions must be >= 1")
    h = _bench_hamiltonian(dimension, seed, use_tcm)
    n = dimension.bit_length() - 1
    rho0 = np.zeros((dimension, dimension), dtype=np.complex128)
    rho0[dimension - 1, dimension - 1] = 1.0

    with _lease_for(strategy) as engine:
        prebuilt = None
        if not include_factor_build:
            prebuilt = build_propagator_factors(
                h, dt, order=taylor_order, strategy=strategy, engine=engine
            )

        def workload() -> None:
            if prebuilt is None:
                left, right = build_propagator_factors(
                    h, dt, order=taylor_order, strategy=strategy, engine=engine
                )
            else:
                left, right = prebuilt
            rho = DensityMatrix(rho0, validate=False)
            for _ in range(steps):
                rho = evolve_step(left, rho, right, strategy, engine=engine)
                photon_distribution(rho, n)

        wall = _timed_reps(workload, repetitions)
    return TimingRecord(
        task="evolution",
        dimension=dimension,
        strategy=strategy,
        wall_time_seconds=wall,
        workers=strategy.workers,
        repetitions=repetitions,
        timestamp=datetime.now(timezone.utc).isoformat(),
        metadata={
            "seed": seed,
            "use_tcm": use_tcm,
            "taylor_order": taylor_order,
            "dt": dt,
            "steps": steps,
            "factors_included": include_factor_build,
        },
    )


def run_benchmark(
    dimensions: list[int],
    strategies: list[GridStrategy],
    *,
    tasks: tuple[str, ...] = ("taylor", "evolution"),
    repetitions: int = 3,
    steps: int = 5,
    seed: int = 0,
    use_tcm: bool = False,
) -> tuple[list[TimingRecord], list[dict]]:
    """Time every feasible (task, dimension, strategy) cell sequentially.

    Infeasible cells (divisibility, worker cap) are skipped and reported in
    the second return value; the run continues.
    """
    records: list[TimingRecord] = []
    skipped: list[dict] = []
    for task in tasks:
        if task not in ("taylor", "evolution"):
            raise ParameterError(f"unknown bench task {task!r}")
        for dim in dimensions:
            for strategy in strategies:
                try:
                    if task == "taylor":
                        rec = time_taylor(
                            dim, strategy, repetitions, seed=seed, use_tcm=use_tcm
                        )
                    else:
                        rec = time_evolution(
                            dim, strategy, steps, repetitions, seed=seed, use_tcm=use_tcm
                        )
                except SimulationError as exc:
                    skipped.append(
                        {
                            "task": task,
                            "dimension": dim,
                            "strategy": strategy.label,
                            "reason": str(exc),
                        }
                    )
                    continue
                records.append(rec)
    return records, skipped


@dataclass(frozen=True)
class SpeedupTable:
    """Strategies x dimensions table of T_serial / T_strategy ratios."""

    task: str
    strategies: tuple[str, ...]
    dimensions: tuple[int, ...]
    cells: dict  # (strategy_label, dimension) -> float | None

    def cell(self, strategy_label: str, dimension: int) -> float | None:
        return self.cells.get((strategy_label, dimension))

    def to_csv(self, metadata: dict | None = None) -> str:
        lines = []
        for key, value in (metadata or {}).items():
            lines.append(f"# {key}={value}")
        lines.append("strategy," + ",".join(str(d) for d in self.dimensions))
        for label in self.strategies:
            cells = []
            for dim in self.dimensions:
                value = self.cell(label, dim)
                cells.append(ABSENT_MARKER if value is None else f"{value:.3f}")
            lines.append(label + "," + ",".join(cells))
        return "\n".join(lines) + "\n"


def speedup_table(records: list[TimingRecord], task: str) -> SpeedupTable:
    """Build the ratio table for one task from raw timing records.

    Requires a serial timing for every dimension present (otherwise the
    ratio is undefined); cells without a grid timing are absent, not zero.
    The serial row is identically 1.0 by construction, and the whole table
    is invariant under rescaling all wall times by one constant.
    """
    rows = [r for r in records if r.task == task]
    if not rows:
        raise ParameterError(f"no records for task {task!r}")
    dims = sorted({r.dimension for r in rows})
    labels: list[str] = []
    for r in rows:
        if r.strategy.label not in labels:
            labels.append(r.strategy.label)
    if "serial" in labels:  # serial row always leads
        labels.remove("serial")
        labels.insert(0, "serial")
    walls = {(r.strategy.label, r.dimension): r.wall_time_seconds for r in rows}
    for dim in dims:
        if ("serial", dim) not in walls:
            raise ParameterError(f"missing serial baseline for dimension {dim}")
    cells = {}
    for label in labels:
        for dim in dims:
            wall = walls.get((label, dim))
            if wall is None:
                cells[(label, dim)] = None
            elif label == "serial":
                cells[(label, dim)] = 1.0  # exact by definition
            else:
                cells[(label, dim)] = walls[("serial", dim)] / wall
    return SpeedupTable(task=task, strategies=tuple(labels), dimensions=tuple(dims), cells=cells)


def write_records_jsonl(records: list[TimingRecord], path: str) -> None:
    """One JSON object per line with the exact exported column set."""
    tmp = path + ".tmp"
    with open(tmp, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(rec.to_record_dict()) + "\n")
    os.replace(tmp, path)


def machine_metadata() -> dict:
    """Host facts that make wall-clock numbers interpretable."""
    return {
        "hostname": socket.gethostname(),
        "cpu_count": os.cpu_count() or 1,
        "platform": platform.platform(),
        "python": platform.python_version(),
        "generated_at": datetime.now(timezone.utc).isoformat(),
    }
