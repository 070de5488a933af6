"""Block-distributed matrix multiplication on a q x q worker grid.

The classic 2D torus algorithm: each matrix is partitioned into q x q
blocks, blocks are skew-aligned so worker (i, j) starts with
A(i, (j+i) mod q) and B((i+j) mod q, j), then q rounds follow in which
every worker multiply-accumulates its current pair into a local C block,
sends its A block one step left and its B block one step up (cyclically),
and receives replacements from its right/below neighbors. After q rounds
every block is back at its aligned position and worker (i, j) owns C(i, j).

Workers are in-process threads connected ONLY by addressed per-worker
queues (no shared mutable matrix state); a barrier separates rounds so the
result is bit-for-bit reproducible regardless of scheduling. The local
multiply uses the same kernel as the serial oracle, so serial and grid
results differ only by block summation order (hence tolerance-based
comparison, not bit equality).

Grids are expensive to spawn, so they persist in a module pool and are
leased with exclusive checkout; two multiplies never share a grid
concurrently. The pool size can be capped with the TCMGRID_MAX_WORKERS
environment variable (a grid needs q*q workers).
"""

from __future__ import annotations

import atexit
import os
import queue
import threading
from contextlib import contextmanager
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    CannonWorkerError,
    ParameterError,
    PartitionError,
    WorkerPoolError,
)
from .linalg import as_complex_matrix, matmul_serial, multiply_accumulate, require_same_dim

__all__ = [
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
    "WORKER_CAP_ENV_VAR",
]

WORKER_CAP_ENV_VAR = "TCMGRID_MAX_WORKERS"

# Generous guard against a wedged worker grid; normal jobs finish in seconds.
_RESULT_TIMEOUT_SECONDS = 600.0


@dataclass(frozen=True)
class GridStrategy:
    """Execution strategy for large matrix products: serial or grid(q)."""

    kind: str
    q: int = 1

    def __post_init__(self) -> None:
        if self.kind not in ("serial", "grid"):
            raise ParameterError(f"unknown strategy kind {self.kind!r}")
        if not isinstance(self.q, int) or self.q < 1:
            raise ParameterError(f"grid side must be a positive integer, got {self.q!r}")
        if self.kind == "serial" and self.q != 1:
            raise ParameterError("serial strategy has no grid side")

    @classmethod
    def serial(cls) -> "GridStrategy":
        return cls(kind="serial")

    @classmethod
    def grid(cls, q: int) -> "GridStrategy":
        return cls(kind="grid", q=q)

    @classmethod
    def parse(cls, text: str) -> "GridStrategy":
        """Parse 'serial' or 'grid(q)' labels (the CLI/bench spelling)."""
        text = text.strip()
        if text == "serial":
            return cls.serial()
        if text.startswith("grid(") and text.endswith(")"):
            try:
                return cls.grid(int(text[5:-1]))
            except ValueError:
                pass
        raise ParameterError(f"cannot parse strategy {text!r}; expected 'serial' or 'grid(q)'")

    @property
    def workers(self) -> int:
        """Worker count: 1 for serial, q*q for a grid."""
        return 1 if self.kind == "serial" else self.q * self.q

    @property
    def label(self) -> str:
        return "serial" if self.kind == "serial" else f"grid({self.q})"


@dataclass
class BlockGrid:
    """A q x q tiling of a square matrix with per-worker block ownership."""

    q: int
    block_dim: int
    blocks: dict[tuple[int, int], np.ndarray] = field(default_factory=dict)

    @property
    def dim(self) -> int:
        return self.q * self.block_dim


def partition(m: np.ndarray, q: int) -> BlockGrid:
    """Tile ``m`` into q x q contiguous blocks; block (i, j) holds rows
    [i*N/q, (i+1)*N/q) x cols [j*N/q, (j+1)*N/q).

    No padding: raises :class:`PartitionError` unless q divides N.
    """
    m = as_complex_matrix(m, name="matrix")
    n = m.shape[0]
    if not isinstance(q, int) or q < 1:
        raise PartitionError(f"grid side must be a positive integer, got {q!r}")
    if n % q != 0:
        raise PartitionError(f"grid side {q} does not divide dimension {n}")
    b = n // q
    blocks = {
        (i, j): np.ascontiguousarray(m[i * b : (i + 1) * b, j * b : (j + 1) * b])
        for i in range(q)
        for j in range(q)
    }
    return BlockGrid(q=q, block_dim=b, blocks=blocks)


def gather(grid: BlockGrid) -> np.ndarray:
    """Reassemble the parent matrix, bit-for-bit. Raises on missing blocks."""
    q, b = grid.q, grid.block_dim
    out = np.empty((q * b, q * b), dtype=np.complex128)
    for i in range(q):
        for j in range(q):
            blk = grid.blocks.get((i, j))
            if blk is None:
                raise PartitionError(f"block {(i, j)} is missing")
            if blk.shape != (b, b):
                raise PartitionError(f"block {(i, j)} has shape {blk.shape}, expected {(b, b)}")
            out[i * b : (i + 1) * b, j * b : (j + 1) * b] = blk
    return out


def initial_alignment(ga: BlockGrid, gb: BlockGrid) -> tuple[BlockGrid, BlockGrid]:
    """Skew both grids so multiplication can proceed in cyclic rounds.

    Worker (i, j) receives A-block (i, (j+i) mod q) and B-block
    ((i+j) mod q, j) — applied as one direct permutation. The relocation is
    a bijection, so the multiset of blocks is unchanged.
    """
    if ga.q != gb.q or ga.block_dim != gb.block_dim:
        raise PartitionError(
            f"grid mismatch: {ga.q}x{ga.q}/{ga.block_dim} vs {gb.q}x{gb.q}/{gb.block_dim}"
        )
    q = ga.q
    aa = {(i, j): ga.blocks[(i, (j + i) % q)] for i in range(q) for j in range(q)}
    ab = {(i, j): gb.blocks[((i + j) % q, j)] for i in range(q) for j in range(q)}
    return (
        BlockGrid(q=q, block_dim=ga.block_dim, blocks=aa),
        BlockGrid(q=q, block_dim=gb.block_dim, blocks=ab),
    )


@dataclass
class _Job:
    a_block: np.ndarray
    b_block: np.ndarray
    reverse_shift: bool
    fail_at: tuple[int, int] | None  # test-only: worker that raises mid-job


class CannonEngine:
    """A persistent q x q grid of worker threads joined in a torus.

    Each worker owns two inboxes (incoming A blocks, incoming B blocks) and
    talks only to its four neighbors. ``multiply`` is synchronous and
    thread-safe; concurrent callers serialize on the engine lock (exclusive
    checkout), so one grid never runs two jobs at once.
    """

    def __init__(self, q: int):
        if not isinstance(q, int) or q < 1:
            raise ParameterError(f"grid side must be a positive integer, got {q!r}")
        cap = int(os.environ.get(WORKER_CAP_ENV_VAR, "0") or "0")
        if cap > 0 and q * q > cap:
            raise WorkerPoolError(
                f"grid({q}) needs {q * q} workers but {WORKER_CAP_ENV_VAR}={cap}"
            )
        self.q = q
        self._lock = threading.RLock()
        self._closed = False
        self._job_inboxes = {(i, j): queue.SimpleQueue() for i in range(q) for j in range(q)}
        self._a_inboxes = {(i, j): queue.SimpleQueue() for i in range(q) for j in range(q)}
        self._b_inboxes = {(i, j): queue.SimpleQueue() for i in range(q) for j in range(q)}
        self._results: queue.SimpleQueue = queue.SimpleQueue()
        self._barrier = threading.Barrier(q * q)
        self._threads = []
        for i in range(q):
            for j in range(q):
                t = threading.Thread(
                    target=self._worker, args=(i, j), name=f"cannon-{q}x{q}-{i}-{j}", daemon=True
                )
                t.start()
                self._threads.append(t)

    @property
    def closed(self) -> bool:
        return self._closed

    def _recv(self, inbox: queue.SimpleQueue):
        """Blocking receive that notices a broken (aborted) round barrier."""
        while True:
            try:
                return inbox.get(timeout=0.2)
            except queue.Empty:
                if self._barrier.broken:
                    raise CannonWorkerError("round aborted by a failed worker")

    def _worker(self, i: int, j: int) -> None:
        q = self.q
        job_inbox = self._job_inboxes[(i, j)]
        while True:
            job = job_inbox.get()
            if job is None:
                return
            try:
                if job.fail_at == (i, j):
                    raise RuntimeError(f"injected worker failure at {(i, j)}")
                a_blk, b_blk = job.a_block, job.b_block
                first_a, first_b = a_blk, b_blk
                c = np.zeros_like(a_blk)
                # Reversing the A direction alone desynchronizes the A/B
                # block pairing (the bug the hook exists to simulate);
                # reversing both would merely resweep k in opposite order.
                a_dest = (i, (j + 1) % q) if job.reverse_shift else (i, (j - 1) % q)
                b_dest = ((i - 1) % q, j)
                for _ in range(q):
                    multiply_accumulate(c, a_blk, b_blk)
                    self._a_inboxes[a_dest].put(a_blk)
                    self._b_inboxes[b_dest].put(b_blk)
                    a_blk = self._recv(self._a_inboxes[(i, j)])
                    b_blk = self._recv(self._b_inboxes[(i, j)])
                    self._barrier.wait()
                # q cyclic shifts are a full torus orbit: the blocks that
                # came back must be the very objects this worker started with.
                if a_blk is not first_a or b_blk is not first_b:
                    raise CannonWorkerError(
                        f"blocks did not return to aligned position at {(i, j)}"
                    )
                self._results.put(("ok", (i, j), c))
            except threading.BrokenBarrierError:
                self._results.put(("aborted", (i, j), None))
            except Exception as exc:  # surface as whole-operation failure
                self._barrier.abort()
                self._results.put(("error", (i, j), exc))

    def _drain(self) -> None:
        for inboxes in (self._a_inboxes, self._b_inboxes):
            for q_ in inboxes.values():
                while True:
                    try:
                        q_.get_nowait()
                    except queue.Empty:
                        break

    def multiply(
        self,
        a: np.ndarray,
        b: np.ndarray,
        *,
        _reverse_shift: bool = False,
        _fail_worker: tuple[int, int] | None = None,
    ) -> np.ndarray:
        """Distributed product a @ b. The underscored keywords are test-only
        fault hooks (A-blocks shifted the wrong way; induced worker failure)."""
        with self._lock:
            if self._closed:
                raise WorkerPoolError("engine has been shut down")
            a = as_complex_matrix(a, name="A")
            b = as_complex_matrix(b, name="B")
            require_same_dim(a, b)
            q = self.q
            ga, gb = partition(a, q), partition(b, q)
            aa, ab = initial_alignment(ga, gb)
            for i in range(q):
                for j in range(q):
                    self._job_inboxes[(i, j)].put(
                        _Job(
                            a_block=aa.blocks[(i, j)],
                            b_block=ab.blocks[(i, j)],
                            reverse_shift=_reverse_shift,
                            fail_at=_fail_worker,
                        )
                    )
            out_blocks: dict[tuple[int, int], np.ndarray] = {}
            failure: Exception | None = None
            for _ in range(q * q):
                try:
                    status, coord, payload = self._results.get(timeout=_RESULT_TIMEOUT_SECONDS)
                except queue.Empty:
                    self._closed = True
                    raise WorkerPoolError("worker grid did not respond; engine abandoned")
                if status == "ok":
                    out_blocks[coord] = payload
                elif status == "error" and failure is None:
                    failure = payload
            if failure is not None:
                self._drain()
                self._barrier.reset()
                raise CannonWorkerError(f"worker failed; no partial result: {failure}") from failure
            return gather(BlockGrid(q=q, block_dim=aa.block_dim, blocks=out_blocks))

    @contextmanager
    def lease(self):
        """Exclusive checkout of this grid for a sequence of multiplies."""
        with self._lock:
            if self._closed:
                raise WorkerPoolError("engine has been shut down")
            yield self

    def shutdown(self) -> None:
        with self._lock:
            if self._closed:
                return
            self._closed = True
            for inbox in self._job_inboxes.values():
                inbox.put(None)
        for t in self._threads:
            t.join(timeout=5.0)


_pool: dict[int, CannonEngine] = {}
_pool_lock = threading.Lock()


@contextmanager
def lease_engine(q: int):
    """Lease the pooled engine for grid side q, creating it on first use."""
    with _pool_lock:
        eng = _pool.get(q)
        if eng is None or eng.closed:
            eng = CannonEngine(q)
            _pool[q] = eng
    with eng.lease():
        yield eng


def shutdown_engines() -> None:
    """Stop every pooled worker grid (used by tests and interpreter exit)."""
    with _pool_lock:
        engines = list(_pool.values())
        _pool.clear()
    for eng in engines:
        eng.shutdown()


atexit.register(shutdown_engines)


def cannon_multiply(
    a: np.ndarray,
    b: np.ndarray,
    strategy: GridStrategy,
    *,
    engine: CannonEngine | None = None,
    _reverse_shift: bool = False,
) -> np.ndarray:
    """Product a @ b under the given strategy.

    serial delegates to the deterministic serial kernel; grid(q) runs the
    q x q torus (leasing a pooled engine unless one is supplied). Grid
    results match the serial product to ~1e-10 relative Frobenius error
    (block accumulation reorders floating-point sums).
    """
    if strategy.kind == "serial":
        return matmul_serial(a, b)
    if engine is not None:
        if engine.q != strategy.q:
            raise ParameterError(f"engine side {engine.q} != strategy side {strategy.q}")
        return engine.multiply(a, b, _reverse_shift=_reverse_shift)
    with lease_engine(strategy.q) as eng:
        return eng.multiply(a, b, _reverse_shift=_reverse_shift)


def cannon_chain(
    mats: list[np.ndarray],
    strategy: GridStrategy,
    *,
    engine: CannonEngine | None = None,
) -> np.ndarray:
    """Right-associated chained product M1 @ (M2 @ (... (Mk-1 @ Mk))).

    The association order is part of the contract (deterministic rounding);
    a grid engine is leased once for the whole chain.
    """
    if len(mats) < 2:
        raise ParameterError(f"chain needs at least two matrices, got {len(mats)}")
    dim = mats[0].shape[0] if mats[0].ndim == 2 else -1
    for m in mats:
        if m.ndim != 2 or m.shape != (dim, dim):
            require_same_dim(mats[0], m)

    def fold(eng: CannonEngine | None) -> np.ndarray:
        acc = mats[-1]
        for m in reversed(mats[:-1]):
            acc = cannon_multiply(m, acc, strategy, engine=eng)
        return acc

    if strategy.kind == "serial" or engine is not None:
        return fold(engine)
    with lease_engine(strategy.q) as eng:
        return fold(eng)
