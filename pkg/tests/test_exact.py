import numpy as np
import pytest
from scipy import sparse

from supercoherence import FrequencyDistribution, MeanFieldAllToAll, all_to_all, lattice, sample
from supercoherence.errors import DimensionCap, ValidationError
from supercoherence.exact import (SectorBasis, SectorState, build_sector_hamiltonian, collective_hop_matrix,
                                  evolve_fidelity, excitation_number, full_evolve, full_hamiltonian,
                                  symmetric_state)
from supercoherence.spectral import analyze, build_matrix, relative_coherence_avg


def _real(n, sigma=0.3, fam="uniform"):
    return sample(FrequencyDistribution(fam, sigma), n)


def test_dimensions():
    assert SectorBasis(4, 2).dimension == 6
    h = build_sector_hamiltonian(_real(4), MeanFieldAllToAll(), 2)
    assert h.shape == (6, 6)
    h0 = build_sector_hamiltonian(_real(4), MeanFieldAllToAll(), 0)
    assert h0.shape == (1, 1)
    with pytest.raises(ValidationError):
        SectorBasis(3, 4)


def test_single_excitation_block_is_hopping_matrix():
    real = _real(9)
    h = build_sector_hamiltonian(real, MeanFieldAllToAll(), 1).toarray()
    m = build_matrix(real, MeanFieldAllToAll())
    shift = h - m
    np.testing.assert_allclose(shift, shift[0, 0] * np.eye(9), atol=1e-14)
    assert shift[0, 0] == pytest.approx(-0.5 * real.omegas.sum(), abs=1e-14)


def test_sector_spectrum_matches_spectral():
    real = _real(10, 0.4, "gaussian")
    e = np.linalg.eigvalsh(build_sector_hamiltonian(real, lattice([10]), 1).toarray())
    np.testing.assert_allclose(e, analyze(real, lattice([10])).energies, atol=1e-10)


def test_sectors_are_blocks_of_full_hamiltonian():
    # oracle: the bit-string construction on 2^N states, independent of the sector code
    real = _real(6, 0.5)
    net = lattice([6])
    full = full_hamiltonian(real, net).toarray()
    exc = excitation_number(6)
    for k in range(7):
        idx = np.flatnonzero(exc == k)
        basis = SectorBasis(6, k)
        order = [sum(1 << i for i in s) for s in basis.states]
        block = full[np.ix_(order, order)]
        np.testing.assert_allclose(block, build_sector_hamiltonian(real, net, k).toarray(), atol=1e-14)
        assert set(order) == set(idx.tolist())


def test_full_hamiltonian_conserves_excitations():
    h = full_hamiltonian(_real(5), all_to_all(5)).tocoo()
    exc = excitation_number(5)
    assert np.all(exc[h.row] == exc[h.col])


def test_symmetric_state():
    s = symmetric_state(SectorBasis(3, 1))
    np.testing.assert_allclose(s.amplitudes, 1 / np.sqrt(3))
    assert np.linalg.norm(symmetric_state(SectorBasis(7, 3)).amplitudes) == pytest.approx(1.0)
    with pytest.raises(ValidationError):
        SectorState(SectorBasis(3, 1), [1.0, 1.0, 0.0])


def test_collective_hop_on_symmetric_state():
    # <n_s| S^+ S^- |n_s> = n (N - n + 1)
    for n_spins, k in ((5, 2), (6, 3)):
        basis = SectorBasis(n_spins, k)
        s = symmetric_state(basis).amplitudes
        assert np.real(s.conj() @ (collective_hop_matrix(basis) @ s)) == pytest.approx(k * (n_spins - k + 1))


def test_symmetric_is_eigenstate_without_disorder():
    real = _real(8, 0.0)
    h = build_sector_hamiltonian(real, MeanFieldAllToAll(), 3)
    basis = SectorBasis(8, 3)
    rows, summ = evolve_fidelity(h, symmetric_state(basis), np.linspace(0, 50, 26))
    np.testing.assert_allclose(rows[:, 1], 1.0, atol=1e-12)
    assert summ["F_bar"] == pytest.approx(1.0)


def test_single_excitation_fidelity_matches_hp():
    real = _real(12, 0.4)
    net = MeanFieldAllToAll()
    basis = SectorBasis(12, 1)
    _, summ = evolve_fidelity(build_sector_hamiltonian(real, net, 1), symmetric_state(basis), [0.0, 1.0])
    assert summ["F_bar"] == pytest.approx(relative_coherence_avg(analyze(real, net)), abs=1e-6)


def test_two_excitation_fidelity_law():
    real = _real(12, 0.2)
    net = MeanFieldAllToAll()
    _, summ = evolve_fidelity(build_sector_hamiltonian(real, net, 2), symmetric_state(SectorBasis(12, 2)), [0.0])
    assert summ["F_bar"] == pytest.approx(relative_coherence_avg(analyze(real, net)) ** 2, rel=0.15)


def test_polynomial_path_agrees_with_eigen():
    real = _real(9, 0.6)
    h = build_sector_hamiltonian(real, lattice([9]), 2)
    init = SectorState(SectorBasis(9, 2), np.eye(36)[0])
    t = np.linspace(0, 5, 6)
    a, _ = evolve_fidelity(h, init, t)
    b, summ = evolve_fidelity(h, init, t, eig_limit=10)
    assert summ["method"] == "polynomial"
    np.testing.assert_allclose(a, b, atol=1e-9)


def test_norm_conserved():
    real = _real(10, 0.8)
    h = build_sector_hamiltonian(real, all_to_all(10), 3)
    _, summ = evolve_fidelity(h, symmetric_state(SectorBasis(10, 3)), np.linspace(0, 200, 41))
    assert summ["norm_drift"] < 1e-8


def test_caps():
    with pytest.raises(DimensionCap):
        build_sector_hamiltonian(_real(30), MeanFieldAllToAll(), 15, cap=1000)
    with pytest.raises(DimensionCap):
        full_evolve(_real(15), MeanFieldAllToAll())
    with pytest.raises(ValidationError):
        full_evolve(_real(4), MeanFieldAllToAll(), r0=0.5)


def test_full_evolve_equator_zero_disorder_constant():
    tr = full_evolve(_real(12, 0.0), MeanFieldAllToAll(), np.pi / 2, times=np.linspace(0, 20, 11))
    np.testing.assert_allclose(tr.eta, tr.eta[0], atol=1e-8)
    assert tr.eta[0] == pytest.approx(1 + 1 / 12)


def test_full_evolve_ground_state_stationary():
    tr = full_evolve(_real(6), MeanFieldAllToAll(), 0.0, times=[0.0, 3.0])
    np.testing.assert_allclose(tr.eta, 0.0, atol=1e-14)


def test_full_evolve_matches_dense_propagation():
    # oracle: dense expm of the 2^N Hamiltonian on the product state
    from scipy.linalg import expm

    real = _real(5, 0.7)
    net = lattice([5])
    theta = 1.1
    tr = full_evolve(real, net, theta, 0.2, times=[0.0, 0.7, 2.3])
    h = full_hamiltonian(real, net).toarray()
    exc = excitation_number(5)
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    psi0 = c ** (5 - exc) * s**exc * np.exp(1j * 0.2 * exc)
    smin = sum(sparse.csr_matrix(([1.0] * 16, (np.flatnonzero((np.arange(32) >> i) & 1) ^ (1 << i),
                                              np.flatnonzero((np.arange(32) >> i) & 1))), shape=(32, 32))
               for i in range(5))
    for t, eta in zip(tr.times, tr.eta):
        psi = expm(-1j * h * t) @ psi0
        v = smin @ psi
        assert 4 / 25 * np.vdot(v, v).real == pytest.approx(eta, abs=1e-10)


def test_full_evolve_disorder_contrast():
    t = np.linspace(0, 200, 401)
    low = full_evolve(_real(12, 0.3), MeanFieldAllToAll(), times=t)
    high = full_evolve(_real(12, 2.0), MeanFieldAllToAll(), times=t)
    assert low.eta[200:].mean() > 3 * high.eta[200:].mean()
