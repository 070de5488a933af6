"""tcmgrid: Tavis-Cummings unitary evolution with block-distributed products.

The package simulates n resonant two-level atoms exchanging excitations
with one cavity mode on the excitation-conserving subspace (dimension
2^n). Time evolution uses order-K truncated-Taylor propagator factors
applied as rho -> L (rho R), and every large matrix product can run either
serially or on a q x q message-passing worker grid using the classic
2D torus block algorithm. A benchmark harness compares the strategies.
"""

from .errors import (
    CannonWorkerError,
    DimensionError,
    EigenDecompositionError,
    ParameterError,
    PartitionError,
    SimulationError,
    TraceDivergenceError,
    WorkerPoolError,
)
from .model import (
    BasisState,
    MAX_ATOMS_DEFAULT,
    ModelParams,
    RWAReport,
    build_hamiltonian,
    check_rwa,
    enumerate_basis,
    photon_number,
    photon_sector_indices,
    state_index,
    state_occupations,
)
from .linalg import (
    frobenius_distance,
    frobenius_norm,
    matexp_exact,
    matmul_serial,
    random_complex,
    random_hermitian,
    spectral_norm_hermitian,
)
from .cannon import (
    BlockGrid,
    CannonEngine,
    GridStrategy,
    cannon_chain,
    cannon_multiply,
    gather,
    initial_alignment,
    lease_engine,
    partition,
    shutdown_engines,
)
from .evolution import (
    DensityMatrix,
    EvolutionConfig,
    TrajectoryRecord,
    build_left_factor,
    build_propagator_factors,
    build_right_factor,
    evolve_step,
    first_peak,
    initial_state_all_excited,
    peak_summary,
    photon_distribution,
    run_trajectory,
)
from .bench import (
    ABSENT_MARKER,
    SpeedupTable,
    TimingRecord,
    machine_metadata,
    run_benchmark,
    speedup_table,
    time_evolution,
    time_taylor,
    write_records_jsonl,
)

__version__ = "0.1.0"

__all__ = [
    "SimulationError",
    "ParameterError",
    "DimensionError",
    "PartitionError",
    "WorkerPoolError",
    "CannonWorkerError",
    "EigenDecompositionError",
    "TraceDivergenceError",
    "ModelParams",
    "BasisState",
    "RWAReport",
    "MAX_ATOMS_DEFAULT",
    "enumerate_basis",
    "state_index",
    "state_occupations",
    "photon_number",
    "photon_sector_indices",
    "build_hamiltonian",
    "check_rwa",
    "matmul_serial",
    "matexp_exact",
    "frobenius_norm",
    "frobenius_distance",
    "spectral_norm_hermitian",
    "random_complex",
    "random_hermitian",
    "GridStrategy",
    "BlockGrid",
    "partition",
    "gather",
    "initial_alignment",
    "CannonEngine",
    "lease_engine",
    "shutdown_engines",
    "cannon_multiply",
    "cannon_chain",
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
