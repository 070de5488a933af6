"""Command-line front end: simulate, verify, bench, plotdata.

Exit codes (each error path distinct):

* 0 — success
* 2 — usage / config-file parse errors (argparse convention)
* 3 — semantic validation errors (bad parameter, divisibility, caps)
* 4 — trajectory abort: trace left its accuracy band
* 5 — verification checks failed
* 6 — malformed input file (plotdata)

Output files are written to a temp path and renamed into place, so a
failing run never leaves partial files. Trajectory CSV uses 17 significant
digits (full double precision) with the fixed header
``t,P_0,...,P_n,trace,excitation``. The worker-pool cap is read from the
TCMGRID_MAX_WORKERS environment variable.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import math
import os
import sys
from dataclasses import dataclass

import numpy as np

from . import bench as bench_mod
from .cannon import GridStrategy, cannon_multiply
from .errors import ParameterError, SimulationError, TraceDivergenceError
from .evolution import (
    EvolutionConfig,
    PEAK_FLOOR_DEFAULT,
    build_propagator_factors,
    first_peak,
    peak_summary,
    run_trajectory,
)
from .linalg import (
    frobenius_distance,
    frobenius_norm,
    matexp_exact,
    matmul_serial,
    random_complex,
    spectral_norm_hermitian,
)
from .model import ModelParams, build_hamiltonian, check_rwa

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_VALIDATION = 3
EXIT_TRACE_ABORT = 4
EXIT_VERIFY_FAILED = 5
EXIT_BAD_INPUT = 6

_FMT = "{:.17g}"


@dataclass
class RunConfig:
    """Declarative simulation config; JSON round-trips losslessly."""

    n: int = 8
    omega: float = 1.0
    hbar: float = 1.0
    coupling: float = 0.02
    couplings: list[float] | None = None
    dt: float = 0.05
    steps: int = 2400
    taylor_order: int = 10
    strategy: str = "serial"
    renormalize_trace: bool = False
    record_stride: int = 1
    trajectory_csv: str = "trajectory.csv"
    summary_json: str = "summary.json"
    seed: int = 0

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ParameterError(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)

    @classmethod
    def from_file(cls, path: str) -> "RunConfig":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))

    def model_params(self) -> ModelParams:
        if self.couplings is not None:
            return ModelParams(
                n=self.n, omega=self.omega, hbar=self.hbar, couplings=tuple(self.couplings)
            )
        return ModelParams.uniform(self.n, self.coupling, omega=self.omega, hbar=self.hbar)

    def evolution_config(self) -> EvolutionConfig:
        return EvolutionConfig(
            dt=self.dt,
            steps=self.steps,
            taylor_order=self.taylor_order,
            strategy=GridStrategy.parse(self.strategy),
            renormalize_trace=self.renormalize_trace,
            record_stride=self.record_stride,
        )


def _write_text_atomic(path: str, text: str) -> None:
    tmp = path + ".tmp"
    with open(tmp, "w", encoding="utf-8") as fh:
        fh.write(text)
    os.replace(tmp, path)


def _trajectory_csv_text(record) -> str:
    n = record.n
    header = "t," + ",".join(f"P_{m}" for m in range(n + 1)) + ",trace,excitation"
    lines = [header]
    for i in range(len(record.times)):
        cells = [record.times[i], *record.photon_probs[i], record.traces[i], record.excitations[i]]
        lines.append(",".join(_FMT.format(float(c)) for c in cells))
    return "\n".join(lines) + "\n"


def cmd_simulate(args: argparse.Namespace) -> int:
    config = RunConfig.from_file(args.config) if args.config else RunConfig()
    overrides = {
        "n": args.n,
        "coupling": args.coupling,
        "omega": args.omega,
        "hbar": args.hbar,
        "dt": args.dt,
        "steps": args.steps,
        "taylor_order": args.taylor_order,
        "strategy": args.strategy,
        "record_stride": args.record_stride,
        "trajectory_csv": args.output,
        "summary_json": args.summary,
        "seed": args.seed,
    }
    for key, value in overrides.items():
        if value is not None:
            config = dataclasses.replace(config, **{key: value})
    if args.renormalize_trace:
        config = dataclasses.replace(config, renormalize_trace=True)

    params = config.model_params()
    rwa = check_rwa(params)
    if not rwa.valid:
        print(
            f"warning: coupling ratio {rwa.ratio:.4g} >= {rwa.threshold} — "
            "outside the rotating-wave regime; results are model-faithful but "
            "the model itself may not describe your system",
            file=sys.stderr,
        )
    record = run_trajectory(params, config.evolution_config())

    _write_text_atomic(config.trajectory_csv, _trajectory_csv_text(record))
    peaks = peak_summary(record)
    summary = {
        "config": config.to_dict(),
        "rwa_ratio": rwa.ratio,
        "max_trace_drift": float(np.max(np.abs(record.traces - 1.0))),
        "peaks": peaks,
    }
    _write_text_atomic(config.summary_json, json.dumps(summary, indent=2) + "\n")
    print(f"trajectory: {config.trajectory_csv} ({len(record.times)} rows)")
    print(f"summary:    {config.summary_json}")
    print(f"max |trace-1| = {summary['max_trace_drift']:.3e}")
    for entry in peaks:
        fp = entry["first_peak_time"]
        fp_text = "none" if fp is None else f"t={fp:g} h={entry['first_peak_height']:.4f}"
        print(
            f"  P_{entry['sector']}: first peak {fp_text}; "
            f"max {entry['max_height']:.4f} at t={entry['max_time']:g}"
        )
    return EXIT_OK


def _verify_cannon(seeds: range, dims: tuple[int, ...]) -> tuple[bool, str, float]:
    worst = 0.0
    for dim in dims:
        sides = [2, 4] + ([8, 16] if dim >= 256 else [])
        for q in sides:
            if dim % q:
                continue
            for seed in seeds:
                a = random_complex(dim, 1000 * seed + dim + q)
                b = random_complex(dim, 2000 * seed + dim - q)
                got = cannon_multiply(a, b, GridStrategy.grid(q))
                ref = matmul_serial(a, b)
                rel = frobenius_distance(got, ref) / frobenius_norm(ref)
                worst = max(worst, rel)
    return worst <= 1e-10, "block-grid product vs serial oracle (relative)", worst


def _verify_taylor() -> tuple[bool, str, float]:
    params = ModelParams.uniform(8, 0.02)
    h = build_hamiltonian(params)
    dt = 0.2 / spectral_norm_hermitian(h)
    left, right = build_propagator_factors(h, dt, order=10)
    bound = 0.2**11 / math.factorial(11) + 1e-12
    err_l = frobenius_distance(left, matexp_exact(-1j * h * dt))
    err_r = frobenius_distance(right, matexp_exact(1j * h * dt))
    adjoint_exact = np.array_equal(right, left.conj().T)
    ok = err_l <= bound and err_r <= bound and adjoint_exact
    return ok, "taylor factors vs exact exponential", max(err_l, err_r)


def _verify_rabi() -> tuple[bool, str, float]:
    params = ModelParams.uniform(1, 1.0)
    config = EvolutionConfig(dt=0.001, steps=6284)
    record = run_trajectory(params, config)
    expected = np.sin(record.times) ** 2
    err = float(np.max(np.abs(record.photon_probs[:, 1] - expected)))
    return err <= 1e-4, "two-level exchange vs sin^2(gt)", err


def _verify_full_trajectory() -> list[tuple[bool, str, float]]:
    record = run_trajectory(ModelParams.uniform(8, 0.02), EvolutionConfig(dt=0.05, steps=2400))
    checks: list[tuple[bool, str, float]] = []

    drift = float(np.max(np.abs(record.traces - 1.0)))
    checks.append((drift <= 1e-8, "trace conservation over 2400 steps", drift))
    total_gap = float(np.max(np.abs(record.photon_probs.sum(axis=1) - record.traces)))
    checks.append((total_gap <= 1e-9, "sector completeness sum P_m = trace", total_gap))
    negativity = float(-min(0.0, record.photon_probs.min()))
    checks.append((negativity <= 1e-9, "sector probability non-negativity", negativity))

    start_gap = float(abs(record.photon_probs[0, 0] - 1.0))
    checks.append((start_gap == 0.0, "P_0(0) = 1 exactly", start_gap))
    peak_times = []
    ordered = True
    for m in range(1, 9):
        peak = first_peak(record.times, record.photon_probs[:, m], floor=PEAK_FLOOR_DEFAULT)
        if peak is None or (peak_times and peak[0] <= peak_times[-1]):
            ordered = False
        if peak is not None:
            peak_times.append(peak[0])
    checks.append((ordered, "first-peak times strictly ordered in m", float("nan")))
    sym = max(
        abs(record.photon_probs[:, m].max() - record.photon_probs[:, 8 - m].max())
        for m in range(4)
    )
    checks.append((sym <= 0.02, "sector peak symmetry max|P_m - P_{8-m}|", float(sym)))
    return checks


def cmd_verify(args: argparse.Namespace) -> int:
    checks: list[tuple[bool, str, float]] = []
    seeds = range(3) if args.level == "quick" else range(10)
    checks.append(_verify_cannon(seeds, (16, 64) if args.level == "quick" else (16, 64, 256)))
    checks.append(_verify_taylor())
    checks.append(_verify_rabi())
    if args.level == "full":
        checks.extend(_verify_full_trajectory())
    all_ok = True
    for ok, name, err in checks:
        all_ok &= ok
        print(f"[{'PASS' if ok else 'FAIL'}] {name}: max error {err:.3e}")
    print("verification " + ("passed" if all_ok else "FAILED"))
    return EXIT_OK if all_ok else EXIT_VERIFY_FAILED


def cmd_bench(args: argparse.Namespace) -> int:
    dimensions = [int(d) for d in args.dimensions.split(",") if d]
    strategies = [GridStrategy.parse(s) for s in args.strategies.split(",") if s]
    tasks = tuple(t for t in args.tasks.split(",") if t)
    records, skipped = bench_mod.run_benchmark(
        dimensions,
        strategies,
        tasks=tasks,
        repetitions=args.repetitions,
        steps=args.steps,
        seed=args.seed,
        use_tcm=args.use_tcm,
    )
    for item in skipped:
        print(
            f"skipped {item['task']} dim={item['dimension']} {item['strategy']}: "
            f"{item['reason']}",
            file=sys.stderr,
        )
    bench_mod.write_records_jsonl(records, args.records)
    print(f"records:  {args.records} ({len(records)} rows)")
    metadata = bench_mod.machine_metadata()
    metadata["repetitions"] = args.repetitions
    metadata["evolution_steps"] = args.steps
    metadata["factors_included"] = True
    for task in tasks:
        table = bench_mod.speedup_table(records, task)
        path = f"{args.table_prefix}_{task}.csv"
        meta = dict(metadata)
        meta["task"] = task
        _write_text_atomic(path, table.to_csv(meta))
        print(f"speedups: {path}")
    return EXIT_OK


def cmd_plotdata(args: argparse.Namespace) -> int:
    try:
        with open(args.trajectory, "r", encoding="utf-8") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        print(f"error: cannot read {args.trajectory}: {exc}", file=sys.stderr)
        return EXIT_BAD_INPUT
    if not rows or not rows[0] or rows[0][0] != "t":
        print("error: malformed trajectory CSV (missing 't' header)", file=sys.stderr)
        return EXIT_BAD_INPUT
    header = rows[0]
    sector_cols = [i for i, name in enumerate(header) if name.startswith("P_")]
    expected = [f"P_{m}" for m in range(len(sector_cols))]
    if not sector_cols or [header[i] for i in sector_cols] != expected:
        print("error: malformed trajectory CSV (sector columns)", file=sys.stderr)
        return EXIT_BAD_INPUT
    try:
        data = np.array([[float(cell) for cell in row] for row in rows[1:]])
    except ValueError as exc:
        print(f"error: malformed trajectory CSV: {exc}", file=sys.stderr)
        return EXIT_BAD_INPUT
    if data.ndim != 2 or data.shape[0] < 1 or data.shape[1] != len(header):
        print("error: malformed trajectory CSV (row shape)", file=sys.stderr)
        return EXIT_BAD_INPUT

    os.makedirs(args.outdir, exist_ok=True)
    times = data[:, 0]
    peak_rows = ["sector,first_peak_time,first_peak_height,max_time,max_height"]
    for m, col in enumerate(sector_cols):
        series = data[:, col]
        text = f"t,P_{m}\n" + "".join(
            _FMT.format(t) + "," + _FMT.format(v) + "\n" for t, v in zip(times, series)
        )
        _write_text_atomic(os.path.join(args.outdir, f"sector_{m}.csv"), text)
        peak = first_peak(times, series)
        if peak is not None:
            imax = int(np.argmax(series))
            peak_rows.append(
                f"{m},{_FMT.format(peak[0])},{_FMT.format(peak[1])},"
                f"{_FMT.format(times[imax])},{_FMT.format(series[imax])}"
            )
    _write_text_atomic(os.path.join(args.outdir, "peaks.csv"), "\n".join(peak_rows) + "\n")
    print(f"wrote {len(sector_cols)} sector series + peaks.csv to {args.outdir}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tcmgrid",
        description=(
            "Tavis-Cummings unitary evolution with truncated-Taylor propagators; "
            "every large matrix product runs serially or on a q x q block-"
            "distributed worker grid. Cap grid size with TCMGRID_MAX_WORKERS."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run a trajectory, write CSV + summary")
    sim.add_argument("--config", help="JSON config file (flags override it)")
    sim.add_argument("--n", type=int)
    sim.add_argument("--coupling", type=float)
    sim.add_argument("--omega", type=float)
    sim.add_argument("--hbar", type=float)
    sim.add_argument("--dt", type=float)
    sim.add_argument("--steps", type=int)
    sim.add_argument("--taylor-order", type=int, dest="taylor_order")
    sim.add_argument("--strategy", help="'serial' or 'grid(q)'")
    sim.add_argument("--record-stride", type=int, dest="record_stride")
    sim.add_argument("--renormalize-trace", action="store_true", dest="renormalize_trace")
    sim.add_argument("--output", help="trajectory CSV path")
    sim.add_argument("--summary", help="summary JSON path")
    sim.add_argument("--seed", type=int)
    sim.set_defaults(func=cmd_simulate)

    ver = sub.add_parser("verify", help="run the built-in oracle checks")
    ver.add_argument("--level", choices=("quick", "full"), default="quick")
    ver.set_defaults(func=cmd_verify)

    ben = sub.add_parser("bench", help="time strategies and emit speedup tables")
    ben.add_argument("--dimensions", default="16,64,256")
    ben.add_argument("--strategies", default="serial,grid(2),grid(4)")
    ben.add_argument("--tasks", default="taylor,evolution")
    ben.add_argument("--repetitions", type=int, default=3)
    ben.add_argument("--steps", type=int, default=5)
    ben.add_argument("--seed", type=int, default=0)
    ben.add_argument("--use-tcm", action="store_true", dest="use_tcm")
    ben.add_argument("--records", default="bench_records.jsonl")
    ben.add_argument("--table-prefix", default="speedup", dest="table_prefix")
    ben.set_defaults(func=cmd_bench)

    plot = sub.add_parser("plotdata", help="split a trajectory CSV into plot series")
    plot.add_argument("--trajectory", required=True)
    plot.add_argument("--outdir", default="plotdata")
    plot.set_defaults(func=cmd_plotdata)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except TraceDivergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_TRACE_ABORT
    except (json.JSONDecodeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SimulationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
