"""Basis enumeration and Hamiltonian construction on the excitation-
conserving subspace, checked against an independent full-space operator
construction."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from tcmgrid import (
    DimensionError,
    ModelParams,
    ParameterError,
    build_hamiltonian,
    check_rwa,
    enumerate_basis,
    photon_number,
    photon_sector_indices,
    state_index,
    state_occupations,
)


class TestModelParams:
    def test_uniform_builds_equal_couplings(self):
        p = ModelParams.uniform(3, 0.5)
        assert p.couplings == (0.5, 0.5, 0.5)
        assert p.dim == 8

    @pytest.mark.parametrize(
        "kwargs",
        [
            dict(n=0, couplings=()),
            dict(n=2, couplings=(0.1,)),
            dict(n=1, omega=0.0, couplings=(0.1,)),
            dict(n=1, hbar=-1.0, couplings=(0.1,)),
            dict(n=1, couplings=(-0.1,)),
        ],
    )
    def test_invalid_params_rejected(self, kwargs):
        with pytest.raises(ParameterError):
            ModelParams(**kwargs)


class TestBasisEnumeration:
    def test_single_atom_states(self):
        states = enumerate_basis(1)
        assert [(s.occupations, s.photons) for s in states] == [((0,), 1), ((1,), 0)]

    def test_eight_atoms_has_256_states(self):
        assert len(enumerate_basis(8)) == 256

    def test_little_endian_encoding_example(self):
        # index 5 = binary 101 -> atoms 1 and 3 excited, one free photon
        s = enumerate_basis(3)[5]
        assert s.occupations == (1, 0, 1)
        assert s.photons == 1

    def test_zero_atoms_rejected(self):
        with pytest.raises(ParameterError):
            enumerate_basis(0)

    def test_dimension_cap_enforced_and_overridable(self):
        with pytest.raises(DimensionError):
            enumerate_basis(16)
        assert len(enumerate_basis(16, max_atoms=16)) == 65536

    @settings(max_examples=50, deadline=None)
    @given(st.integers(1, 10), st.data())
    def test_encode_decode_round_trip(self, n, data):
        index = data.draw(st.integers(0, (1 << n) - 1))
        occ = state_occupations(index, n)
        assert state_index(occ) == index
        assert photon_number(index, n) == n - sum(occ)

    def test_sector_indices_partition_the_basis(self):
        n = 6
        sectors = photon_sector_indices(n)
        sizes = [len(ix) for ix in sectors]
        from math import comb

        assert sizes == [comb(n, n - m) for m in range(n + 1)]
        all_indices = np.concatenate(sectors)
        assert sorted(all_indices.tolist()) == list(range(1 << n))


def _full_space_hamiltonian(n: int, g: float, omega: float = 1.0, hbar: float = 1.0):
    """Independent oracle: explicit field/atom operators on the photon Fock
    space tensor the atomic registers, restricted to the excitation-n sector
    and reordered into the packaged little-endian basis."""
    pdim = n + 1
    a = np.zeros((pdim, pdim), dtype=complex)
    for p in range(pdim - 1):
        a[p, p + 1] = np.sqrt(p + 1)
    adag = a.conj().T
    lower = np.array([[0, 1], [0, 0]], dtype=complex)  # |ground><excited|
    raise_ = lower.conj().T
    number = raise_ @ lower
    eye2 = np.eye(2, dtype=complex)
    eyep = np.eye(pdim, dtype=complex)

    def kron_chain(ops):
        out = ops[0]
        for op in ops[1:]:
            out = np.kron(out, op)
        return out

    # atom i occupies the i-th factor after the field, least-significant last
    def atom_ops(i, op):
        return [eyep] + [op if j == i else eye2 for j in reversed(range(n))]

    ham = hbar * omega * kron_chain([adag @ a] + [eye2] * n)
    for i in range(n):
        ham = ham + hbar * omega * kron_chain(atom_ops(i, number))
        ham = ham + g * (
            kron_chain([adag] + atom_ops(i, lower)[1:])
            + kron_chain([a] + atom_ops(i, raise_)[1:])
        )

    sector = []
    for p in range(pdim):
        for bits in range(1 << n):
            if p + bin(bits).count("1") == n:
                sector.append((p, bits))
    # order the sector rows by the packaged basis index (= the atomic word)
    sector.sort(key=lambda item: item[1])
    rows = [p * (1 << n) + bits for p, bits in sector]
    return ham[np.ix_(rows, rows)]


class TestHamiltonian:
    def test_single_atom_matrix(self):
        h = build_hamiltonian(ModelParams.uniform(1, 1.0))
        assert np.array_equal(h, np.array([[1, 1], [1, 1]], dtype=complex))

    @settings(max_examples=25, deadline=None)
    @given(
        st.integers(1, 6),
        st.floats(0.0, 2.0),
        st.floats(0.1, 3.0),
        st.floats(0.1, 3.0),
    )
    def test_exactly_real_symmetric(self, n, g, omega, hbar):
        h = build_hamiltonian(ModelParams.uniform(n, g, omega=omega, hbar=hbar))
        assert np.array_equal(h, h.conj().T)
        assert np.all(h.imag == 0.0)

    def test_diagonal_is_constant_total_energy(self):
        p = ModelParams.uniform(4, 0.3, omega=2.0, hbar=1.5)
        h = build_hamiltonian(p)
        assert np.array_equal(np.diagonal(h), np.full(16, 1.5 * 2.0 * 4, dtype=complex))

    def test_matches_full_space_operator_oracle(self):
        params = ModelParams.uniform(2, 1.0)
        ours = build_hamiltonian(params)
        oracle = _full_space_hamiltonian(2, 1.0)
        assert np.linalg.norm(ours - oracle) <= 1e-12
        ours_big = build_hamiltonian(ModelParams.uniform(3, 0.7))
        oracle_big = _full_space_hamiltonian(3, 0.7)
        assert np.linalg.norm(ours_big - oracle_big) <= 1e-12

    def test_row_nonzero_structure(self):
        n = 4
        params = ModelParams.uniform(n, 0.5)
        h = build_hamiltonian(params)
        for s in range(1 << n):
            excited = bin(s).count("1")
            ground = n - excited
            p_s = n - excited
            off = np.delete(h[s].copy(), s)
            nonzero = np.count_nonzero(off)
            expected = excited + (ground if p_s > 0 else 0)
            assert nonzero == expected
            values = set(np.round(np.abs(off[off != 0]), 12).tolist())
            allowed = {round(0.5 * np.sqrt(p_s + 1), 12), round(0.5 * np.sqrt(p_s), 12)}
            assert values <= allowed

    def test_commutes_with_excitation_operator(self):
        h = build_hamiltonian(ModelParams.uniform(3, 0.4))
        n_exc = 3.0 * np.eye(8, dtype=complex)
        assert np.linalg.norm(h @ n_exc - n_exc @ h) == 0.0

    def test_per_atom_couplings_enter_their_own_rows(self):
        params = ModelParams(n=2, couplings=(0.25, 0.75))
        h = build_hamiltonian(params)
        # state 1 (atom 1 excited, p=1) <-> state 0 via g_1*sqrt(2)
        assert h[0, 1] == pytest.approx(0.25 * np.sqrt(2))
        # state 2 (atom 2 excited, p=1) <-> state 0 via g_2*sqrt(2)
        assert h[0, 2] == pytest.approx(0.75 * np.sqrt(2))

    def test_photon_factor_fault_hook_changes_matrix(self):
        good = build_hamiltonian(ModelParams.uniform(2, 1.0))
        bugged = build_hamiltonian(
            ModelParams.uniform(2, 1.0), _photon_factor_off_by_one=True
        )
        assert not np.array_equal(good, bugged)
        # at n=1 the bug zeroes the only coupling element
        bugged1 = build_hamiltonian(
            ModelParams.uniform(1, 1.0), _photon_factor_off_by_one=True
        )
        assert np.array_equal(bugged1, np.eye(2, dtype=complex))

    def test_cap_respected(self):
        with pytest.raises(DimensionError):
            build_hamiltonian(ModelParams.uniform(16, 0.1, omega=1.0), max_atoms=15)


class TestRWACheck:
    def test_weak_coupling_valid(self):
        report = check_rwa(ModelParams.uniform(2, 0.01))
        assert report.valid and report.ratio == pytest.approx(0.01)

    def test_strong_coupling_flagged(self):
        report = check_rwa(ModelParams.uniform(2, 0.5))
        assert not report.valid and report.ratio == pytest.approx(0.5)

    def test_hbar_scales_the_ratio(self):
        report = check_rwa(ModelParams.uniform(1, 0.1, hbar=2.0))
        assert report.valid and report.ratio == pytest.approx(0.05)
