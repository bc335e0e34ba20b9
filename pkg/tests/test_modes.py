import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wavetrap._backend import SplitMix64
from wavetrap.lattice import assemble, attach_cavity, build_chain, build_ring, build_custom
from wavetrap.modes import (EigenSolverError, band_edge, chain_dispersion,
                            group_velocity, normal_modes,
                            resonance_frequencies, side_branch_response,
                            side_branch_scattering, transmission_phase,
                            wavenumber_of)


def ring_mode_frequencies(n, k=1.0, m=1.0):
    return np.sort([chain_dispersion(k, m, 2 * math.pi * min(j, n - j) / n)
                    for j in range(n)])


class TestNormalModes:
    def test_single_oscillator(self):
        system = assemble(build_custom([1.0], [4.0], []))
        basis = normal_modes(system)
        assert np.allclose(basis.frequencies, [2.0], atol=1e-14)

    def test_free_two_node_closed_form(self):
        system = assemble(build_chain(2))
        basis = normal_modes(system)
        assert np.allclose(basis.frequencies, [0.0, math.sqrt(2.0)],
                           atol=1e-12)

    @pytest.mark.parametrize("n", [8, 16, 32])
    def test_ring_matches_dispersion(self, n):
        basis = normal_modes(assemble(build_ring(n)))
        assert np.max(np.abs(basis.frequencies
                             - ring_mode_frequencies(n))) < 1e-10

    def test_mass_orthonormality(self):
        spec = attach_cavity(build_ring(12, m=1.7, k=2.3), 3, 0.4, 1.1)
        system = assemble(spec)
        basis = normal_modes(system)
        gram = basis.vectors.T @ np.diag(system.mass_vector) @ basis.vectors
        assert np.max(np.abs(gram - np.eye(system.dimension))) < 1e-10

    def test_eigen_residual(self):
        spec = attach_cavity(build_ring(12, m=1.7, k=2.3), 3, 0.4, 1.1)
        system = assemble(spec)
        basis = normal_modes(system)
        k = system.stiffness_matrix
        m = np.diag(system.mass_vector)
        res = k @ basis.vectors - m @ basis.vectors * basis.frequencies ** 2
        assert np.linalg.norm(res, axis=0).max() <= 1e-9 * np.linalg.norm(k)

    def test_sign_convention_deterministic(self):
        system = assemble(build_ring(16))
        v1 = normal_modes(system).vectors
        v2 = normal_modes(system).vectors
        assert np.array_equal(v1, v2)
        for col in range(v1.shape[1]):
            idx = np.argmax(np.abs(v1[:, col]))
            assert v1[idx, col] > 0

    def test_sweep_budget_error(self):
        system = assemble(build_ring(24))
        with pytest.raises(EigenSolverError, match="off-diagonal"):
            normal_modes(system, max_sweeps=1, tol=1e-15)


class TestDispersion:
    def test_band_edge_value(self):
        # band edge of the tridiagonal spectrum, cross-checked by a
        # large-ring eigensolve
        assert chain_dispersion(1, 1, math.pi) == pytest.approx(2.0,
                                                                abs=1e-14)
        top = np.linalg.eigvalsh(
            assemble(build_ring(64)).stiffness_matrix)[-1]
        assert math.sqrt(top) == pytest.approx(2.0, abs=1e-3)

    def test_translation_limit(self):
        assert chain_dispersion(1, 1, 0.0) == 0.0

    def test_scaled_chain(self):
        assert chain_dispersion(4, 1, math.pi / 3) == pytest.approx(2.0)

    def test_range_error(self):
        with pytest.raises(ValueError):
            chain_dispersion(1, 1, -0.1)
        with pytest.raises(ValueError):
            chain_dispersion(1, 1, math.pi + 0.1)

    def test_group_velocity_values(self):
        assert group_velocity(1, 1, 1e-9) == pytest.approx(1.0, abs=1e-9)
        assert group_velocity(1, 1, math.pi) == 0.0
        assert group_velocity(4, 1, math.pi / 2) == pytest.approx(
            math.sqrt(2.0))

    def test_group_velocity_is_dispersion_derivative(self):
        h = 1e-6
        for q in np.linspace(0.1, 3.0, 30):
            fd = (chain_dispersion(1, 1, q + h)
                  - chain_dispersion(1, 1, q - h)) / (2 * h)
            assert group_velocity(1, 1, q) == pytest.approx(fd, abs=1e-6)

    def test_wavenumber_inverts_dispersion(self):
        for q in np.linspace(0.05, 3.1, 20):
            w = chain_dispersion(1.3, 0.7, q)
            assert wavenumber_of(1.3, 0.7, w) == pytest.approx(q, abs=1e-12)

    def test_evanescent_error(self):
        with pytest.raises(ValueError, match="evanescent"):
            wavenumber_of(1, 1, 2.5)


def oracle_scattering(k, m, K, M, omega, n=401, junction=200, source=80,
                      pad=60, c_max=1.5):
    """Independent steady-state oracle: drive a long damped-pad chain at
    omega, solve the complex linear system, fit incident/reflected and
    transmitted plane waves.  Right-movers carry exp(-i q n) in this
    convention, so results are conjugate to the analytic ones."""
    q = wavenumber_of(k, m, omega)
    d = n + 1
    a = np.zeros((d, d), dtype=complex)
    for i in range(n):
        a[i, i] -= m * omega ** 2
    for i in range(n - 1):
        a[i, i] += k
        a[i + 1, i + 1] += k
        a[i, i + 1] -= k
        a[i + 1, i] -= k
    a[n, n] = -M * omega ** 2 + K
    a[junction, junction] += K
    a[junction, n] -= K
    a[n, junction] -= K
    for i in range(n):
        if i < pad:
            ramp = (pad - i) / pad
        elif i >= n - pad:
            ramp = (i - (n - pad - 1)) / pad
        else:
            ramp = 0.0
        a[i, i] += 1j * omega * c_max * ramp ** 2
    f = np.zeros(d, dtype=complex)
    f[source] = 1.0
    x = np.linalg.solve(a, f)

    def fit(first):
        mat = np.array([[np.exp(-1j * q * first), np.exp(1j * q * first)],
                        [np.exp(-1j * q * (first + 1)),
                         np.exp(1j * q * (first + 1))]])
        return np.linalg.solve(mat, [x[first], x[first + 1]])

    inc, ref = fit(130)
    trans, _ = fit(250)
    a0 = inc * np.exp(-1j * q * junction)
    b0 = ref * np.exp(1j * q * junction)
    return b0 / a0, trans * np.exp(-1j * q * junction) / a0


class TestSideBranchScattering:
    def test_decoupled_branch(self):
        c = side_branch_scattering(1, 1, 0.0, 1.0, 1.2)
        assert c.r == 0
        assert c.s == 1

    def test_blocking_frequency_exact_limit(self):
        c = side_branch_scattering(1, 1, 1.0, 1.0, 1.0)
        assert c.s == 0
        assert c.r == -1  # hard-wall phase: amplitude sign flip

    def test_junction_node_at_blocking_frequency(self):
        # incident + reflected displacement at the junction: 1 + r = 0
        c = side_branch_scattering(1, 1, 1.0, 1.0, 1.0)
        assert abs(1.0 + c.r) == 0.0

    def test_against_linear_solve_oracle(self):
        # frozen from the oracle at (k=m=K=M=1, omega=1.2):
        #   r = -0.743949 + 0.436445j, s = 0.256060 + 0.436449j
        r_o, s_o = oracle_scattering(1, 1, 1.0, 1.0, 1.2)
        assert r_o == pytest.approx(-0.743949 + 0.436445j, abs=2e-4)
        assert s_o == pytest.approx(0.256060 + 0.436449j, abs=2e-4)
        c = side_branch_scattering(1, 1, 1.0, 1.0, 1.2)
        assert c.r == pytest.approx(r_o.conjugate(), abs=2e-4)
        assert c.s == pytest.approx(s_o.conjugate(), abs=2e-4)
        assert c.flux_error < 1e-12

    def test_unitarity_over_seeded_draws(self):
        rng = SplitMix64(20240)
        for _ in range(10):
            K = rng.uniform(0.05, 4.0)
            M = rng.uniform(0.05, 4.0)
            for w in np.linspace(1e-3, 2.0 - 1e-3, 100):
                c = side_branch_scattering(1, 1, K, M, float(w))
                assert c.flux_error < 1e-9

    @settings(max_examples=60, deadline=None)
    @given(K=st.floats(0.0, 5.0), M=st.floats(0.05, 5.0),
           frac=st.floats(1e-6, 1.0 - 1e-6))
    def test_unitarity_property(self, K, M, frac):
        omega = 2.0 * frac
        c = side_branch_scattering(1, 1, K, M, omega)
        assert c.flux_error < 1e-9

    def test_out_of_band_rejected(self):
        with pytest.raises(ValueError, match="evanescent"):
            side_branch_scattering(1, 1, 1.0, 1.0, 2.4)

    def test_blocking_phase_matches_hard_wall(self):
        # approaching sqrt(K/M) from either side, the reflection phase
        # tends to the hard-wall sign flip
        for w in (0.999, 1.001):
            c = side_branch_scattering(1, 1, 1.0, 1.0, w)
            assert abs(c.r + 1.0) < 5e-3

    def test_response_function(self):
        assert side_branch_response(0.0, 1.0, 1.2) == 0.0
        assert math.isinf(side_branch_response(1.0, 1.0, 1.0))
        assert side_branch_response(1.0, 1.0, 1.2) == pytest.approx(
            1.44 / (1 - 1.44))


class TestResonanceFrequencies:
    def test_decoupled_gives_bare_ring_modes(self):
        roots = resonance_frequencies(16, 1, 1, 0.0, 1.0)
        expected = [chain_dispersion(1, 1, 2 * math.pi * j / 16)
                    for j in range(1, 8)]
        assert len(roots) == len(expected)
        assert np.max(np.abs(roots - np.array(expected))) < 1e-9

    def test_no_root_at_transmission_zero(self):
        K = M = 0.5
        blocking = math.sqrt(K / M)
        roots = resonance_frequencies(16, 1, 1, K, M)
        assert len(roots) > 0
        assert np.min(np.abs(roots - blocking)) > 1e-6

    def test_roots_satisfy_phase_condition(self):
        roots = resonance_frequencies(16, 1, 1, 0.4, 0.3)
        for w in roots:
            q = wavenumber_of(1, 1, w)
            phase = 16 * q + transmission_phase(1, 1, 0.4, 0.3, w)
            assert math.remainder(phase, 2 * math.pi) == pytest.approx(
                0.0, abs=1e-7)

    def test_roots_in_band_and_sorted(self):
        roots = resonance_frequencies(12, 1, 1, 0.8, 0.6)
        assert np.all(np.diff(roots) > 0)
        assert np.all((roots > 0) & (roots < 2.0))
