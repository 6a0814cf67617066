"""Tests for the truncated Fock basis and state constructors."""

import numpy as np
import pytest
from scipy.special import comb, factorial

import oracle
from bellsim import (
    DimensionLimitError,
    TruncationTailError,
    fock,
)


def test_basis_size_four_modes_cutoff_sixteen():
    basis = fock.enumerate_basis(4, 16)
    assert basis.size == 4845
    assert basis.size == comb(20, 4, exact=True)


def test_basis_shell_counts():
    # states with total n fill a shell of size C(n+3, 3)
    basis = fock.enumerate_basis(4, 9)
    for total in range(10):
        count = int(np.sum(basis.totals == total))
        assert count == comb(total + 3, 3, exact=True)


def test_basis_is_graded_then_lexicographic():
    basis = fock.enumerate_basis(3, 5)
    rows = [tuple(r) for r in basis.occupations]
    keys = [(sum(r), r) for r in rows]
    assert keys == sorted(keys)


def test_index_of_round_trip():
    basis = fock.enumerate_basis(4, 10)
    rng = np.random.default_rng(11)
    for idx in rng.integers(0, basis.size, size=40):
        occ = tuple(int(n) for n in basis.occupations[idx])
        assert basis.index_of(occ) == idx


def test_dimension_guard():
    with pytest.raises(DimensionLimitError):
        fock.enumerate_basis(8, 40)


def test_vacuum_state():
    state = fock.vacuum_state(4, 6)
    assert abs(state.amplitudes[0] - 1.0) < 1e-15
    assert abs(np.sum(np.abs(state.amplitudes[1:]))) == 0.0
    assert abs(state.norm() - 1.0) < 1e-15


def test_number_state_placement():
    state = fock.number_state((2, 0, 1, 3), 8)
    idx = state.basis.index_of((2, 0, 1, 3))
    assert abs(state.amplitudes[idx] - 1.0) < 1e-15
    assert abs(state.norm() - 1.0) < 1e-15


def test_ladder_operators_match_dense_reference():
    cutoff = 4
    basis = fock.enumerate_basis(2, cutoff)
    rng = np.random.default_rng(23)
    amps = rng.normal(size=basis.size) + 1j * rng.normal(size=basis.size)
    # keep support strictly below the top shell so a creation never truncates
    amps[basis.totals >= cutoff] = 0.0
    state = fock.OccupationState(basis, amps).normalized()
    vec = oracle.from_graded(state)
    for mode in range(2):
        raised = fock.apply_creation(state, mode)
        adag = oracle.annihilator(mode, 2, cutoff).conj().T
        assert np.max(np.abs(oracle.from_graded(raised) - adag @ vec)) < 1e-12
        lowered = fock.apply_annihilation(state, mode)
        a = oracle.annihilator(mode, 2, cutoff)
        assert np.max(np.abs(oracle.from_graded(lowered) - a @ vec)) < 1e-12


def test_creation_off_the_top_shell_is_recorded_as_tail():
    # raising past the cutoff drops the component and books its weight
    top = fock.number_state((2, 0), 2)
    out = fock.apply_creation(top, 0)
    assert out.norm() == 0.0
    assert abs(out.truncation_tail - 3.0) < 1e-12


def test_number_expectation_matches_dense():
    cutoff = 3
    rng = np.random.default_rng(5)
    basis = fock.enumerate_basis(3, cutoff)
    amps = rng.normal(size=basis.size) + 1j * rng.normal(size=basis.size)
    state = fock.OccupationState(basis, amps).normalized()
    vec = oracle.from_graded(state)
    for mode in range(3):
        n_op = fock.number_operator(basis, mode)
        got = fock.expectation(state, n_op)
        a = oracle.annihilator(mode, 3, cutoff)
        want = np.real(vec.conj() @ (a.conj().T @ a) @ vec)
        assert abs(got - want) < 1e-12


def test_partial_trace_matches_dense():
    cutoff = 3
    rng = np.random.default_rng(7)
    basis = fock.enumerate_basis(3, cutoff)
    amps = rng.normal(size=basis.size) + 1j * rng.normal(size=basis.size)
    state = fock.OccupationState(basis, amps).normalized()
    reduced = fock.partial_trace(state.to_density_operator(), (0, 2))

    vec = oracle.from_graded(state)
    dense = np.outer(vec, vec.conj())
    d = cutoff + 1
    dense = dense.reshape(d, d, d, d, d, d)
    dense_reduced = np.einsum("ijkljm->iklm", dense).reshape(d * d, d * d)

    for r, occ_r in enumerate(reduced.basis.occupations):
        for c, occ_c in enumerate(reduced.basis.occupations):
            i = oracle.dense_index(tuple(occ_r), cutoff)
            j = oracle.dense_index(tuple(occ_c), cutoff)
            assert abs(reduced.matrix[r, c] - dense_reduced[i, j]) < 1e-12
    assert abs(np.trace(reduced.matrix) - 1.0) < 1e-12


def test_partial_trace_of_product_state_is_pure():
    state = fock.number_state((1, 0, 2, 0), 4)
    reduced = fock.partial_trace(state.to_density_operator(), (2, 3))
    assert abs(reduced.purity() - 1.0) < 1e-12
    idx = reduced.basis.index_of((2, 0))
    assert abs(reduced.matrix[idx, idx] - 1.0) < 1e-12


def test_synthesize_coherent_amplitudes():
    z = np.array([0.6 - 0.2j, 0.0, 0.3j, -0.4])
    cutoff = 14
    state = fock.synthesize_coherent(z, cutoff)
    norm_sq = np.exp(-np.sum(np.abs(z) ** 2))
    for idx in np.flatnonzero(np.abs(state.amplitudes) > 1e-14)[:60]:
        occ = state.basis.occupations[idx]
        want = np.sqrt(norm_sq) * np.prod(
            z ** occ / np.sqrt(factorial(occ))
        )
        assert abs(state.amplitudes[idx] - want) < 1e-13


def test_synthesize_coherent_tail_bookkeeping():
    z = np.array([0.5, 0.5, 0.0, 0.0])
    state = fock.synthesize_coherent(z, 12)
    assert state.truncation_tail >= 0.0
    # the dropped weight is exactly 1 - |kept|^2
    assert abs(state.truncation_tail - (1.0 - state.norm() ** 2)) < 1e-13


def test_synthesize_coherent_rejects_heavy_tail():
    z = np.array([3.5, 0.0, 0.0, 0.0])
    with pytest.raises(TruncationTailError):
        fock.synthesize_coherent(z, 8)
    assert fock.coherent_required_cutoff(z) > 8


def test_coherent_required_cutoff_is_sufficient():
    rng = np.random.default_rng(3)
    for _ in range(5):
        z = rng.normal(size=4) * 0.8 + 1j * rng.normal(size=4) * 0.8
        cutoff = fock.coherent_required_cutoff(z)
        state = fock.synthesize_coherent(z, cutoff)
        assert state.truncation_tail <= 1e-8


def test_two_photon_state_support():
    state = fock.two_photon_state()
    idx_a = state.basis.index_of((1, 0, 0, 1))
    idx_b = state.basis.index_of((0, 1, 1, 0))
    root_half = 1.0 / np.sqrt(2.0)
    assert abs(state.amplitudes[idx_a] - root_half) < 1e-15
    assert abs(state.amplitudes[idx_b] - root_half) < 1e-15
    others = np.delete(np.abs(state.amplitudes), [idx_a, idx_b])
    assert np.max(others) == 0.0
    assert abs(state.top_shell_weight() - 1.0) < 1e-15


def test_bunched_pair_state_support():
    state = fock.bunched_pair_state()
    want = {
        (0, 1, 1, 0): 0.5,
        (1, 0, 0, 1): 0.5,
        (0, 0, 1, 1): -0.5,
        (1, 1, 0, 0): -0.5,
    }
    for occ, amp in want.items():
        assert abs(state.amplitudes[state.basis.index_of(occ)] - amp) < 1e-15
    assert abs(state.norm() - 1.0) < 1e-15


def test_density_operator_validation():
    basis = fock.enumerate_basis(2, 2)
    bad = np.zeros((basis.size, basis.size), dtype=np.complex128)
    bad[0, 0] = 1.0
    bad[0, 1] = 0.5
    with pytest.raises(ValueError):
        fock.DensityOperator(basis, bad)
    off_trace = np.zeros_like(bad)
    off_trace[0, 0] = 0.7
    with pytest.raises(ValueError):
        fock.DensityOperator(basis, off_trace)


def test_density_operator_purity_of_even_mixture():
    basis = fock.enumerate_basis(2, 2)
    m = np.zeros((basis.size, basis.size), dtype=np.complex128)
    m[basis.index_of((1, 0)), basis.index_of((1, 0))] = 0.5
    m[basis.index_of((0, 1)), basis.index_of((0, 1))] = 0.5
    rho = fock.DensityOperator(basis, m)
    assert abs(rho.purity() - 0.5) < 1e-12
    assert rho.min_eigenvalue() > -1e-12


def test_overlap_and_normalized():
    a = fock.number_state((1, 0), 3)
    b = fock.number_state((0, 1), 3)
    both = fock.OccupationState(a.basis, a.amplitudes + b.amplitudes).normalized()
    assert abs(both.norm() - 1.0) < 1e-14
    assert abs(abs(both.overlap(a)) - 1.0 / np.sqrt(2.0)) < 1e-14
    with pytest.raises(ValueError):
        fock.OccupationState(
            a.basis, np.zeros(a.basis.size, dtype=np.complex128)
        ).normalized()
