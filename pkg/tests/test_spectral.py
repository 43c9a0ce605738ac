import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from spinhist.spectral import (
    ChainConfig,
    PropagatorKernel,
    basis_state,
    d_kernel,
    dense_oracle,
    exchange_operator,
    hopping_hamiltonian,
    mode_overlap_matrix,
    one_down_offset,
    pauli_hamiltonian,
    projector_matrix,
    projector_matrix_element,
    propagator_column,
    spectral_double_sum,
    spin_wave_energies,
    tiny_hilbert_oracle,
)

configs = st.builds(
    lambda M, frac, chi, t: ChainConfig(M=M, M1=max(1, min(M, int(round(frac * M)))), chi=chi, t=t),
    st.integers(2, 48),
    st.floats(0.0, 1.0),
    st.floats(0.05, 4.0),
    st.floats(0.0, 60.0),
)


class TestChainConfig:
    @pytest.mark.parametrize("kwargs", [dict(M=1, M1=1), dict(M=8, M1=0), dict(M=8, M1=9), dict(M=8, M1=2, t=math.nan)])
    def test_rejects_invalid(self, kwargs):
        with pytest.raises(ValueError):
            ChainConfig(**kwargs)

    def test_region_two_size(self):
        assert ChainConfig(M=10, M1=3).M2 == 7


class TestEnergies:
    def test_four_sites(self):
        E = spin_wave_energies(ChainConfig(M=4, M1=1)).energies
        assert sorted(np.round(E, 12)) == [-2.0, 0.0, 0.0, 2.0]

    @given(configs)
    def test_zero_sum(self, cfg):
        assert abs(spin_wave_energies(cfg).energies.sum()) < 1e-10 * cfg.M * cfg.chi

    def test_band_edges(self):
        E = spin_wave_energies(ChainConfig(M=1000, M1=1)).energies
        assert abs(E.min() + 2) < 1e-12 and abs(E.max() - 2) < 1e-12


class TestPropagator:
    def test_identity_at_zero_time(self):
        g = propagator_column(ChainConfig(M=12, M1=3, t=0.0)).g
        expected = np.zeros(12)
        expected[0] = 1
        np.testing.assert_allclose(g, expected, atol=1e-15)

    @given(configs)
    @settings(max_examples=50)
    def test_unitarity(self, cfg):
        g = propagator_column(cfg).g
        assert abs(np.sum(np.abs(g) ** 2) - 1) < 1e-12

    def test_matches_matrix_exponential(self):
        from scipy.linalg import expm

        cfg = ChainConfig(M=8, M1=3, chi=1.0, t=0.7)
        U = expm(-1j * cfg.t * hopping_hamiltonian(cfg))
        np.testing.assert_allclose(propagator_column(cfg).g, U[:, 0], atol=1e-10)

    def test_periodic_indexing(self):
        k = PropagatorKernel(np.arange(5.0) + 0j)
        assert k(-1) == 4 and k(7) == 2


class TestProjectorElement:
    def test_zero_time_region_one(self):
        cfg = ChainConfig(M=10, M1=4, t=0.0)
        for n in range(1, 5):
            assert abs(projector_matrix_element(cfg, n, n) - 1) < 1e-14
        assert abs(projector_matrix_element(cfg, 7, 7)) < 1e-14

    @given(st.integers(2, 30), st.floats(0, 40))
    @settings(max_examples=30)
    def test_full_region_is_identity(self, M, t):
        cfg = ChainConfig(M=M, M1=M, t=t)
        np.testing.assert_allclose(projector_matrix(cfg), np.eye(M), atol=1e-12)

    def test_worked_point_against_dense(self):
        cfg = ChainConfig(M=8, M1=3, chi=1.0, t=1.3)
        assert abs(projector_matrix_element(cfg, 2, 6) - dense_oracle(cfg)[1, 5]) < 1e-10

    @given(configs)
    @settings(max_examples=40)
    def test_fast_path_equals_dense(self, cfg):
        np.testing.assert_allclose(projector_matrix(cfg), dense_oracle(cfg), atol=1e-10)

    @given(configs)
    @settings(max_examples=40)
    def test_heisenberg_projector_properties(self, cfg):
        P = projector_matrix(cfg)
        np.testing.assert_allclose(P, P.conj().T, atol=1e-12)
        np.testing.assert_allclose(P @ P, P, atol=1e-10)
        assert abs(np.trace(P).real - cfg.M1) < 1e-9

    def test_out_of_range_site(self):
        with pytest.raises(IndexError):
            projector_matrix_element(ChainConfig(M=8, M1=3), 0, 2)

    def test_vectorised_matches_scalar(self):
        cfg = ChainConfig(M=9, M1=4, t=2.0)
        n = np.array([1, 5, 9])
        npr = np.array([3, 3, 8])
        vec = projector_matrix_element(cfg, n, npr)
        for i in range(3):
            assert vec[i] == projector_matrix_element(cfg, int(n[i]), int(npr[i]))


class TestModeSpace:
    def test_diagonal_is_region_size(self):
        cfg = ChainConfig(M=10, M1=4)
        for ell in range(10):
            assert d_kernel(cfg, ell, ell) == 4

    def test_full_region_orthogonality(self):
        cfg = ChainConfig(M=10, M1=10)
        for ell in range(1, 10):
            assert abs(d_kernel(cfg, 0, ell)) < 1e-12

    def test_two_term_sum(self):
        cfg = ChainConfig(M=6, M1=2)
        direct = sum(np.exp(-2j * np.pi * k * 1 / 6) for k in (1, 2))
        assert abs(d_kernel(cfg, 1, 0) - direct) < 1e-14

    @given(configs, st.data())
    @settings(max_examples=30)
    def test_double_sum_matches_site_space(self, cfg, data):
        n = data.draw(st.integers(1, cfg.M))
        npr = data.draw(st.integers(1, cfg.M))
        assert abs(spectral_double_sum(cfg, n, npr) - projector_matrix_element(cfg, n, npr)) < 1e-10

    def test_mode_overlaps_are_unitary(self):
        W = mode_overlap_matrix(7)
        np.testing.assert_allclose(W @ W.conj().T, np.eye(7), atol=1e-12)


class TestDenseOracle:
    def test_zero_time_projector(self):
        P = dense_oracle(ChainConfig(M=6, M1=2, t=0.0))
        np.testing.assert_allclose(P, np.diag([1, 1, 0, 0, 0, 0]), atol=1e-12)

    def test_cap(self):
        with pytest.raises(ValueError):
            dense_oracle(ChainConfig(M=300, M1=2))

    def test_two_site_ring(self):
        H = hopping_hamiltonian(ChainConfig(M=2, M1=1, chi=1.0))
        np.testing.assert_allclose(H, [[0, -2], [-2, 0]])


class TestFullSpace:
    def test_exchange_swaps_first_pair(self):
        m = 5
        assert np.allclose(exchange_operator(1, 2, m) @ basis_state([2], m), basis_state([1], m))

    def test_total_sz_conserved(self):
        from spinhist.spectral import site_operator

        H = pauli_hamiltonian(6, 1.3)
        Sz = sum(site_operator("z", s, 6) for s in range(1, 7))
        assert abs((H @ Sz - Sz @ H)).max() < 1e-12

    def test_offset_value(self):
        assert one_down_offset(6, 1.0) == -1.0

    @pytest.mark.parametrize("m", [3, 4, 6, 8])
    def test_tiny_oracle_passes(self, m):
        report = tiny_hilbert_oracle(m, chi=0.8, t=0.4)
        assert report.passed, report
        assert float(np.max(report.eigen_residuals)) < 1e-10

    def test_tiny_oracle_cap(self):
        with pytest.raises(ValueError):
            tiny_hilbert_oracle(13)
