"""Propagator pipeline: truncated-Taylor factors, density-matrix stepping,
trajectories, and photon-sector observables.

One time step of the closed-system dynamics is

    rho(t + dt) = L @ (rho(t) @ R)

where L and R truncate exp(-iH dt/hbar) and exp(+iH dt/hbar) at order K
(default 10). Both factors are built from ONE right-associated power chain
of M = -iH dt/hbar:

    term_k = M @ (M @ (...)) / k!,   L = I + sum_k term_k,
    R = I + sum_k adjoint(term_k)

summed in ascending k. Conjugate-transposition is exact in IEEE arithmetic
and the summation orders mirror each other, so R == L.conj().T bit-for-bit —
a stronger guarantee than rebuilding R from +iH dt, which would differ in
the last bits through float non-associativity.

Every matrix product runs through the strategy (serial kernel or worker
grid); a trajectory leases its grid once and owns it exclusively until done.
"""

from __future__ import annotations

import math
from contextlib import nullcontext
from dataclasses import dataclass, field

import numpy as np

from .cannon import CannonEngine, GridStrategy, cannon_chain, cannon_multiply, lease_engine
from .errors import DimensionError, ParameterError, TraceDivergenceError
from .linalg import as_complex_matrix, require_same_dim
from .model import ModelParams, MAX_ATOMS_DEFAULT, build_hamiltonian, photon_sector_indices

__all__ = [
    "TAYLOR_ORDER_DEFAULT",
    "TRACE_ABORT_TOLERANCE_DEFAULT",
    "PEAK_FLOOR_DEFAULT",
    "DensityMatrix",
    "EvolutionConfig",
    "TrajectoryRecord",
    "build_left_factor",
    "build_right_factor",
    "build_propagator_factors",
    "evolve_step",
    "initial_state_all_excited",
    "photon_distribution",
    "run_trajectory",
    "first_peak",
    "peak_summary",
]

TAYLOR_ORDER_DEFAULT = 10
TRACE_ABORT_TOLERANCE_DEFAULT = 1e-4

# Probabilities grow like t^(2m) out of the initial state, sitting below
# double-precision noise at early times; a detector floor keeps first-peak
# searches from latching onto rounding wiggles.
PEAK_FLOOR_DEFAULT = 1e-4


class DensityMatrix:
    """A dense density matrix with physicality checks at the boundary.

    Construction validates hermiticity, unit trace, and non-negative
    diagonal within the documented tolerances. Internal stepping constructs
    with ``validate=False`` — drift budgets during evolution are enforced by
    the trajectory's trace-abort band and the conservation test suite, which
    are intentionally looser than construction tolerances.
    """

    HERMITICITY_TOL = 1e-10
    TRACE_TOL = 1e-8
    DIAG_NEGATIVITY_TOL = 1e-12

    def __init__(self, mat: np.ndarray, *, validate: bool = True):
        self.mat = as_complex_matrix(mat, name="density matrix")
        if validate:
            self.validate()

    @property
    def dim(self) -> int:
        return self.mat.shape[0]

    @property
    def trace(self) -> complex:
        return complex(np.trace(self.mat))

    def validate(self) -> "DensityMatrix":
        defect = float(np.linalg.norm(self.mat - self.mat.conj().T))
        if defect > self.HERMITICITY_TOL:
            raise ParameterError(f"density matrix not Hermitian: defect {defect:.3e}")
        tr = self.trace
        if abs(tr - 1.0) > self.TRACE_TOL:
            raise ParameterError(f"density matrix trace {tr:.17g} is not 1")
        diag = np.diagonal(self.mat)
        worst = float(np.min(diag.real))
        if worst < -self.DIAG_NEGATIVITY_TOL:
            raise ParameterError(f"negative population on the diagonal: {worst:.3e}")
        return self


@dataclass(frozen=True)
class EvolutionConfig:
    """Stepping parameters for one trajectory."""

    dt: float
    steps: int
    taylor_order: int = TAYLOR_ORDER_DEFAULT
    strategy: GridStrategy = field(default_factory=GridStrategy.serial)
    renormalize_trace: bool = False
    record_stride: int = 1
    trace_abort_tolerance: float = TRACE_ABORT_TOLERANCE_DEFAULT

    def __post_init__(self) -> None:
        if not (self.dt > 0):
            raise ParameterError(f"dt must be positive, got {self.dt!r}")
        if not isinstance(self.steps, int) or self.steps < 1:
            raise ParameterError(f"steps must be a positive integer, got {self.steps!r}")
        if not isinstance(self.taylor_order, int) or self.taylor_order < 1:
            raise ParameterError(
                f"taylor_order must be a positive integer, got {self.taylor_order!r}"
            )
        if not isinstance(self.record_stride, int) or self.record_stride < 1:
            raise ParameterError(
                f"record_stride must be a positive integer, got {self.record_stride!r}"
            )
        if not (self.trace_abort_tolerance > 0):
            raise ParameterError("trace_abort_tolerance must be positive")


@dataclass(frozen=True)
class TrajectoryRecord:
    """Recorded time series: photon-sector probabilities plus diagnostics."""

    times: np.ndarray           # (T,)
    photon_probs: np.ndarray    # (T, n+1); column m is P_m
    traces: np.ndarray          # (T,) real part of trace rho
    excitations: np.ndarray     # (T,) <N_exc> bookkeeping (== n * trace here)

    @property
    def n(self) -> int:
        return self.photon_probs.shape[1] - 1


def _propagator_terms(
    h: np.ndarray,
    dt: float,
    *,
    hbar: float,
    order: int,
    strategy: GridStrategy,
    engine: CannonEngine | None,
) -> list[np.ndarray]:
    """Scaled Taylor terms [I, M, M^2/2!, ..., M^K/K!] with M = -iH dt/hbar.

    Powers are right-associated chained products M @ (M @ (...)), so the
    term list is bit-reproducible for a fixed strategy.
    """
    h = as_complex_matrix(h, name="H")
    if not isinstance(order, int) or order < 1:
        raise ParameterError(f"taylor order must be a positive integer, got {order!r}")
    if dt < 0 or not math.isfinite(dt):
        raise ParameterError(f"dt must be finite and non-negative, got {dt!r}")
    if not (hbar > 0):
        raise ParameterError(f"hbar must be positive, got {hbar!r}")
    m = (-1j * dt / hbar) * h
    terms = [np.eye(h.shape[0], dtype=np.complex128), m]
    power = m
    for k in range(2, order + 1):
        power = cannon_multiply(m, power, strategy, engine=engine)
        terms.append(power / math.factorial(k))
    return terms


def _sum_terms(terms: list[np.ndarray], *, adjoint: bool) -> np.ndarray:
    acc = terms[0].conj().T.copy() if adjoint else terms[0].copy()
    for t in terms[1:]:
        acc = acc + (t.conj().T if adjoint else t)
    return acc


def build_propagator_factors(
    h: np.ndarray,
    dt: float,
    *,
    hbar: float = 1.0,
    order: int = TAYLOR_ORDER_DEFAULT,
    strategy: GridStrategy | None = None,
    engine: CannonEngine | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Both truncated factors (L, R) from one shared term computation.

    Guarantees R == L.conj().T bitwise (termwise adjoint construction).
    """
    strategy = strategy or GridStrategy.serial()
    terms = _propagator_terms(h, dt, hbar=hbar, order=order, strategy=strategy, engine=engine)
    return _sum_terms(terms, adjoint=False), _sum_terms(terms, adjoint=True)


def build_left_factor(
    h: np.ndarray,
    dt: float,
    *,
    hbar: float = 1.0,
    order: int = TAYLOR_ORDER_DEFAULT,
    strategy: GridStrategy | None = None,
    engine: CannonEngine | None = None,
) -> np.ndarray:
    """L = I + M + sum_{k=2..K} M^k/k!  with  M = -iH dt/hbar."""
    strategy = strategy or GridStrategy.serial()
    terms = _propagator_terms(h, dt, hbar=hbar, order=order, strategy=strategy, engine=engine)
    return _sum_terms(terms, adjoint=False)


def build_right_factor(
    h: np.ndarray,
    dt: float,
    *,
    hbar: float = 1.0,
    order: int = TAYLOR_ORDER_DEFAULT,
    strategy: GridStrategy | None = None,
    engine: CannonEngine | None = None,
) -> np.ndarray:
    """R: the order-K truncation of exp(+iH dt/hbar), termwise-adjoint of L.

    Term construction is deterministic, so a separate call still lands
    bit-exactly on ``build_left_factor(...).conj().T``.
    """
    strategy = strategy or GridStrategy.serial()
    terms = _propagator_terms(h, dt, hbar=hbar, order=order, strategy=strategy, engine=engine)
    return _sum_terms(terms, adjoint=True)


def evolve_step(
    left: np.ndarray,
    rho: DensityMatrix,
    right: np.ndarray,
    strategy: GridStrategy | None = None,
    *,
    engine: CannonEngine | None = None,
    renormalize_trace: bool = False,
) -> DensityMatrix:
    """One step rho -> L @ (rho @ R), right-associated chained product."""
    strategy = strategy or GridStrategy.serial()
    require_same_dim(left, rho.mat)
    require_same_dim(rho.mat, right)
    mat = cannon_chain([left, rho.mat, right], strategy, engine=engine)
    if renormalize_trace:
        mat = mat / np.trace(mat).real
    return DensityMatrix(mat, validate=False)


def initial_state_all_excited(n: int, *, max_atoms: int = MAX_ATOMS_DEFAULT) -> DensityMatrix:
    """Pure state with every atom excited and zero free photons."""
    if not isinstance(n, int) or n < 1:
        raise ParameterError(f"atom count must be a positive integer, got {n!r}")
    if n > max_atoms:
        raise DimensionError(f"n={n} exceeds the configured cap of {max_atoms}")
    dim = 1 << n
    mat = np.zeros((dim, dim), dtype=np.complex128)
    mat[dim - 1, dim - 1] = 1.0
    return DensityMatrix(mat)


_sector_cache: dict[int, list[np.ndarray]] = {}


def _sectors(n: int) -> list[np.ndarray]:
    if n not in _sector_cache:
        _sector_cache[n] = photon_sector_indices(n)
    return _sector_cache[n]


def photon_distribution(rho: DensityMatrix | np.ndarray, n: int | None = None) -> np.ndarray:
    """Sector populations P_0..P_n: P_m sums the real diagonal over the
    basis states with exactly m free photons. sum_m P_m equals trace(rho)."""
    mat = rho.mat if isinstance(rho, DensityMatrix) else np.asarray(rho)
    dim = mat.shape[0]
    if n is None:
        n = dim.bit_length() - 1
    if (1 << n) != dim:
        raise DimensionError(f"density matrix dim {dim} is not 2^{n}")
    diag = np.diagonal(mat).real
    return np.array([float(diag[ix].sum()) for ix in _sectors(n)])


def run_trajectory(
    params: ModelParams,
    config: EvolutionConfig,
    rho0: DensityMatrix | None = None,
    *,
    max_atoms: int = MAX_ATOMS_DEFAULT,
) -> TrajectoryRecord:
    """Build H, L, R once, step ``config.steps`` times, record observables.

    Records every ``record_stride``-th step (plus step 0 and the final
    step). Aborts with :class:`TraceDivergenceError` if the raw trace
    leaves the configured band around 1 — with trace renormalization on,
    the check still sees the raw per-step trace before renormalization.
    """
    n = params.n
    h = build_hamiltonian(params, max_atoms=max_atoms)
    rho = rho0 if rho0 is not None else initial_state_all_excited(n, max_atoms=max_atoms)
    if rho.dim != h.shape[0]:
        raise DimensionError(f"initial state dim {rho.dim} != 2^{n}")

    times: list[float] = []
    probs: list[np.ndarray] = []
    traces: list[float] = []
    excitations: list[float] = []
    ms = np.arange(n + 1)

    def record(step: int, state: DensityMatrix) -> None:
        p = photon_distribution(state, n)
        times.append(step * config.dt)
        probs.append(p)
        traces.append(state.trace.real)
        # <N_exc> bookkeeping: (n - m) excited atoms plus m photons per sector.
        excitations.append(float(np.sum((n - ms) * p + ms * p)))

    lease = (
        nullcontext(None)
        if config.strategy.kind == "serial"
        else lease_engine(config.strategy.q)
    )
    with lease as engine:
        left, right = build_propagator_factors(
            h,
            config.dt,
            hbar=params.hbar,
            order=config.taylor_order,
            strategy=config.strategy,
            engine=engine,
        )
        record(0, rho)
        for step in range(1, config.steps + 1):
            rho = evolve_step(left, rho, right, config.strategy, engine=engine)
            raw_trace = rho.trace.real
            if abs(raw_trace - 1.0) > config.trace_abort_tolerance:
                raise TraceDivergenceError(
                    f"trace {raw_trace:.17g} left the band 1 +/- "
                    f"{config.trace_abort_tolerance} at step {step}; "
                    "reduce dt or raise the truncation order"
                )
            if config.renormalize_trace:
                rho = DensityMatrix(rho.mat / raw_trace, validate=False)
            if step % config.record_stride == 0 or step == config.steps:
                record(step, rho)

    return TrajectoryRecord(
        times=np.asarray(times),
        photon_probs=np.asarray(probs),
        traces=np.asarray(traces),
        excitations=np.asarray(excitations),
    )


def first_peak(
    times: np.ndarray, values: np.ndarray, *, floor: float = PEAK_FLOOR_DEFAULT
) -> tuple[float, float] | None:
    """First strict local maximum above the floor: v[i-1] < v[i] >= v[i+1].

    Returns (time, height) or None when the series never turns over.
    """
    v = np.asarray(values)
    t = np.asarray(times)
    for i in range(1, len(v) - 1):
        if v[i] >= floor and v[i - 1] < v[i] >= v[i + 1]:
            return float(t[i]), float(v[i])
    return None


def peak_summary(
    record: TrajectoryRecord, *, floor: float = PEAK_FLOOR_DEFAULT
) -> list[dict]:
    """Per-sector peak report: first peak (time, height) and window maximum."""
    out = []
    for m in range(record.n + 1):
        series = record.photon_probs[:, m]
        peak = first_peak(record.times, series, floor=floor)
        imax = int(np.argmax(series))
        out.append(
            {
                "sector": m,
                "first_peak_time": None if peak is None else peak[0],
                "first_peak_height": None if peak is None else peak[1],
                "max_time": float(record.times[imax]),
                "max_height": float(series[imax]),
            }
        )
    return out
