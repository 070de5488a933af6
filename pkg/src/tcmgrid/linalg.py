"""Serial dense complex linear algebra.

This module is the correctness oracle for the block-distributed engine and
the exact-propagator oracle for the Taylor-truncated factors:

* :func:`matmul_serial` — deterministic dense product with a fixed
  summation order (ascending inner index), bit-reproducible across runs.
* :func:`matexp_exact` — exact exponential of an anti-Hermitian matrix via
  Hermitian eigendecomposition, with a unitarity guarantee.
* :func:`frobenius_distance` / :func:`frobenius_norm` — the metric every
  tolerance in the package is stated in.

Matrices are plain ``numpy.ndarray`` objects of dtype complex128. The one
multiply-accumulate kernel defined here is shared by the serial path and by
every per-worker block product, so the two paths differ only by block
summation order, never by kernel rounding behavior.

All functions are pure and safe to call concurrently.
"""

from __future__ import annotations

import numpy as np
from numba import njit

from .errors import DimensionError, EigenDecompositionError, ParameterError

__all__ = [
    "as_complex_matrix",
    "multiply_accumulate",
    "matmul_serial",
    "matexp_exact",
    "frobenius_norm",
    "frobenius_distance",
    "spectral_norm_hermitian",
    "random_complex",
    "random_hermitian",
]


def as_complex_matrix(a: np.ndarray, *, name: str = "matrix") -> np.ndarray:
    """Validate and normalize ``a`` into a square C-contiguous complex128 array.

    Raises :class:`DimensionError` for non-square input and
    :class:`ParameterError` for non-finite entries.
    """
    arr = np.ascontiguousarray(a, dtype=np.complex128)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1] or arr.shape[0] < 1:
        raise DimensionError(f"{name} must be square, got shape {arr.shape}")
    if not np.all(np.isfinite(arr.view(np.float64))):
        raise ParameterError(f"{name} contains non-finite entries")
    return arr


def require_same_dim(a: np.ndarray, b: np.ndarray) -> int:
    """Return the common dimension of two square matrices or raise."""
    if a.shape != b.shape:
        raise DimensionError(f"dimension mismatch: {a.shape} vs {b.shape}")
    return a.shape[0]


@njit(cache=True, nogil=True)
def _mm_acc_kernel(out, a, b):  # pragma: no cover - exercised via wrappers
    n, m = a.shape
    p = b.shape[1]
    for i in range(n):
        for k in range(m):
            aik = a[i, k]
            for j in range(p):
                out[i, j] += aik * b[k, j]


def multiply_accumulate(out: np.ndarray, a: np.ndarray, b: np.ndarray) -> None:
    """``out += a @ b`` with a fixed summation order (ascending k per entry).

    The accumulation order per output entry is the ascending inner index,
    so repeated calls with identical inputs produce bit-identical results.
    The kernel releases the GIL, letting worker threads overlap.
    """
    _mm_acc_kernel(out, a, b)


def matmul_serial(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Deterministic serial product ``a @ b`` (ascending-k accumulation).

    Raises :class:`DimensionError` on shape mismatch.
    """
    a = as_complex_matrix(a, name="A")
    b = as_complex_matrix(b, name="B")
    require_same_dim(a, b)
    out = np.zeros_like(a)
    multiply_accumulate(out, a, b)
    return out


def matexp_exact(a: np.ndarray) -> np.ndarray:
    """Exact ``exp(a)`` for anti-Hermitian ``a`` via eigendecomposition.

    With ``a = -i G dt`` for Hermitian G, computes ``V diag(exp(i mu_k)) V†``
    where ``i*a = V diag(mu) V†``. The result is unitary to ~1e-12 Frobenius,
    which doubles as a self-test of the decomposition. Inputs that are not
    anti-Hermitian get reduced accuracy (only the Hermitian part of ``i*a``
    is seen by the eigensolver).

    Raises :class:`EigenDecompositionError` if the eigensolver fails.
    """
    a = as_complex_matrix(a, name="A")
    g = 1j * a  # Hermitian when a is anti-Hermitian
    try:
        mu, v = np.linalg.eigh(g)
    except np.linalg.LinAlgError as exc:
        raise EigenDecompositionError(f"eigendecomposition failed: {exc}") from exc
    # exp(a) = exp(-i g) = V exp(-i mu) V†
    phases = np.exp(-1j * mu)
    return (v * phases) @ v.conj().T


def frobenius_norm(a: np.ndarray) -> float:
    """sqrt(sum |a_ij|^2)."""
    return float(np.linalg.norm(np.asarray(a)))


def frobenius_distance(a: np.ndarray, b: np.ndarray) -> float:
    """Frobenius distance sqrt(sum |a_ij - b_ij|^2); zero iff a == b exactly."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape:
        raise DimensionError(f"dimension mismatch: {a.shape} vs {b.shape}")
    return float(np.linalg.norm(a - b))


def spectral_norm_hermitian(h: np.ndarray) -> float:
    """Largest |eigenvalue| of a Hermitian matrix (its spectral norm)."""
    h = as_complex_matrix(h, name="H")
    try:
        ev = np.linalg.eigvalsh(h)
    except np.linalg.LinAlgError as exc:
        raise EigenDecompositionError(f"eigendecomposition failed: {exc}") from exc
    return float(np.max(np.abs(ev)))


def random_complex(dim: int, seed: int) -> np.ndarray:
    """Seeded dense complex matrix with entries in the unit square."""
    rng = np.random.default_rng(seed)
    return (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / np.sqrt(2)


def random_hermitian(dim: int, seed: int) -> np.ndarray:
    """Seeded dense Hermitian matrix (Gaussian entries, symmetrized)."""
    m = random_complex(dim, seed)
    return (m + m.conj().T) / 2
