"""Tavis-Cummings model on the excitation-conserving subspace.

``n`` two-level atoms share one resonant cavity mode (atomic transition
frequency equal to the field frequency) under the rotating-wave
approximation. With the total excitation number fixed at ``n`` (all atoms
excited, zero photons initially), the photon count of every basis state is
implied by the atomic occupations:

    p = n - sum(l_i),

so a basis state is just the atomic occupation word (l_1 .. l_n) and the
Hilbert space dimension is N = 2^n.

Encoding is little-endian and frozen: l_i is bit (i-1) of the basis index.

The Hamiltonian on this subspace is real symmetric: the diagonal is the
constant hbar*omega*n (kept, not gauged away, so propagators carry the
physical global phase), and each excited atom i in state s couples to the
state with that atom de-excited (one more photon) with matrix element
g_i * sqrt(p_s + 1) — the standard bosonic enhancement factor.

All functions are pure; safe for concurrent callers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, ParameterError

__all__ = [
    "MAX_ATOMS_DEFAULT",
    "RWA_RATIO_THRESHOLD",
    "ModelParams",
    "BasisState",
    "RWAReport",
    "enumerate_basis",
    "state_occupations",
    "state_index",
    "photon_number",
    "photon_sector_indices",
    "build_hamiltonian",
    "check_rwa",
]

# Refuse dimensions beyond 2^15 = 32768 unless the caller raises the cap.
MAX_ATOMS_DEFAULT = 15

# g/(hbar*omega) below this counts as safely within the rotating-wave regime.
RWA_RATIO_THRESHOLD = 0.1


@dataclass(frozen=True)
class ModelParams:
    """Physical parameters: atom count, frequencies, per-atom couplings.

    ``couplings`` always carries one entry per atom; use :meth:`uniform`
    for the common equal-coupling case. Internal units default to hbar = 1.
    """

    n: int
    omega: float = 1.0
    hbar: float = 1.0
    couplings: tuple[float, ...] = ()

    def __post_init__(self) -> None:
        if not isinstance(self.n, int) or self.n < 1:
            raise ParameterError(f"atom count must be a positive integer, got {self.n!r}")
        if not (self.omega > 0):
            raise ParameterError(f"omega must be positive, got {self.omega!r}")
        if not (self.hbar > 0):
            raise ParameterError(f"hbar must be positive, got {self.hbar!r}")
        if len(self.couplings) != self.n:
            raise ParameterError(
                f"expected {self.n} couplings, got {len(self.couplings)}"
            )
        for gi in self.couplings:
            if not (math.isfinite(gi) and gi >= 0):
                raise ParameterError(f"couplings must be real and non-negative, got {gi!r}")

    @classmethod
    def uniform(
        cls, n: int, g: float, *, omega: float = 1.0, hbar: float = 1.0
    ) -> "ModelParams":
        """Equal coupling g for every atom."""
        if not isinstance(n, int) or n < 1:
            raise ParameterError(f"atom count must be a positive integer, got {n!r}")
        return cls(n=n, omega=omega, hbar=hbar, couplings=(float(g),) * n)

    @property
    def dim(self) -> int:
        """Hilbert-space dimension N = 2^n."""
        return 1 << self.n


@dataclass(frozen=True)
class BasisState:
    """One atomic occupation word with its derived free-photon count."""

    index: int
    occupations: tuple[int, ...]
    photons: int


@dataclass(frozen=True)
class RWAReport:
    """Result of the rotating-wave validity check."""

    ratio: float
    threshold: float
    valid: bool


def _check_atom_count(n: int, max_atoms: int) -> None:
    if not isinstance(n, int) or n < 1:
        raise ParameterError(f"atom count must be a positive integer, got {n!r}")
    if n > max_atoms:
        raise DimensionError(
            f"n={n} gives dimension 2^{n} beyond the configured cap of 2^{max_atoms}"
        )


def state_occupations(index: int, n: int) -> tuple[int, ...]:
    """Decode a basis index into the occupation tuple (l_1 .. l_n)."""
    return tuple((index >> (i - 1)) & 1 for i in range(1, n + 1))


def state_index(occupations: tuple[int, ...]) -> int:
    """Encode an occupation tuple back into its basis index."""
    idx = 0
    for i, li in enumerate(occupations):
        if li not in (0, 1):
            raise ParameterError(f"occupations must be 0/1, got {li!r}")
        idx |= li << i
    return idx


def photon_number(index: int, n: int) -> int:
    """Free photons of basis state ``index``: p = n - sum(l_i)."""
    return n - (index & ((1 << n) - 1)).bit_count()


def enumerate_basis(n: int, *, max_atoms: int = MAX_ATOMS_DEFAULT) -> list[BasisState]:
    """All 2^n basis states ordered by index ascending.

    Raises :class:`ParameterError` for n < 1 and :class:`DimensionError`
    when 2^n exceeds the configured cap.
    """
    _check_atom_count(n, max_atoms)
    return [
        BasisState(index=s, occupations=state_occupations(s, n), photons=photon_number(s, n))
        for s in range(1 << n)
    ]


def photon_sector_indices(n: int) -> list[np.ndarray]:
    """Basis indices per photon sector: entry m lists states with p = m.

    Sector m contains the states with exactly n - m excited atoms; sector
    sizes are binomial(n, m) and the sectors tile the basis disjointly.
    """
    sectors: list[list[int]] = [[] for _ in range(n + 1)]
    for s in range(1 << n):
        sectors[photon_number(s, n)].append(s)
    return [np.asarray(ix, dtype=np.intp) for ix in sectors]


def build_hamiltonian(
    params: ModelParams,
    *,
    max_atoms: int = MAX_ATOMS_DEFAULT,
    _photon_factor_off_by_one: bool = False,
) -> np.ndarray:
    """Dense N x N Hamiltonian on the excitation-conserving subspace.

    Exactly real symmetric: diagonal hbar*omega*n; for each excited atom i
    of state s, element g_i*sqrt(p_s+1) to the state with atom i de-excited.

    ``_photon_factor_off_by_one`` is a test-only fault hook: it replaces
    sqrt(p_s+1) by sqrt(p_s) so mutation tests can verify the photon
    enhancement factor is load-bearing. Never set it in real use.
    """
    _check_atom_count(params.n, max_atoms)
    n = params.n
    dim = 1 << n
    ham = np.zeros((dim, dim), dtype=np.complex128)
    diag = params.hbar * params.omega * n
    for s in range(dim):
        ham[s, s] = diag
        p_s = photon_number(s, n)
        factor = math.sqrt(p_s if _photon_factor_off_by_one else p_s + 1)
        for i in range(n):
            if (s >> i) & 1:
                s_prime = s & ~(1 << i)
                amp = params.couplings[i] * factor
                ham[s_prime, s] += amp
                ham[s, s_prime] += amp
    return ham


def check_rwa(params: ModelParams) -> RWAReport:
    """Rotating-wave validity: r = max_i g_i/(hbar*omega), valid when r < 0.1.

    Advisory only — never raises; callers decide whether to warn.
    """
    ratio = max(params.couplings) / (params.hbar * params.omega)
    return RWAReport(ratio=ratio, threshold=RWA_RATIO_THRESHOLD, valid=ratio < RWA_RATIO_THRESHOLD)
