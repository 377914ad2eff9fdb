import numpy as np
import pytest
from numpy.testing import assert_allclose

from thermal_qcp import DomainError, SymmetryViolationError, ed
from thermal_qcp.xxz import XXZParams
from thermal_qcp.xy import XYParams


class TestRingSpec:
    def test_lengths(self):
        ed.RingSpec(2, XXZParams(1.0, 0, 1))
        ed.RingSpec(12, XXZParams(1.0, 0, 1))
        for bad in (1, 13, 2.5):
            with pytest.raises(DomainError):
                ed.RingSpec(bad, XXZParams(1.0, 0, 1))

    def test_model_type(self):
        with pytest.raises(DomainError):
            ed.RingSpec(4, object())


class TestHamiltonian:
    def test_two_sites(self):
        # periodic L = 2 counts the bond twice: 2 J (xx + yy + Delta zz)
        h = ed.build_hamiltonian(ed.RingSpec(2, XXZParams(1.0, 0.0, 1.0)))
        assert_allclose(np.linalg.eigvalsh(h), [-6, 2, 2, 2], atol=1e-12)

    @pytest.mark.parametrize("model", [XXZParams(1.7, 0.4, 1.0), XYParams(0.8, 0.3, 1.0)])
    def test_symmetric(self, model):
        h = ed.build_hamiltonian(ed.RingSpec(6, model))
        assert_allclose(h, h.T, atol=0)

    def test_ising_limit(self):
        # Delta large: Neel energy per site is -Delta J
        e = ed.diagonalize(ed.RingSpec(8, XXZParams(1e4, 0.0, 1.0))).energies[0] / 8
        assert_allclose(e, -1e4, rtol=1e-7)

    def test_free_spins_in_field(self):
        # lam = 0 leaves -sigma_z on every site
        e = ed.diagonalize(ed.RingSpec(6, XYParams(0.0, 0.5, 1.0))).energies
        assert_allclose(e[0], -6.0, atol=1e-12)


class TestThermal:
    @pytest.fixture(scope="class")
    @staticmethod
    def spectrum():
        return ed.diagonalize(ed.RingSpec(8, XXZParams(1.5, 0.7, 1.0)))

    def test_energy_two_routes(self, spectrum):
        beta, d = 0.9, 1e-5
        ln_z = lambda b: -b * spectrum.spec.length * ed.free_energy_per_site(spectrum, b)
        numeric = -(ln_z(beta + d) - ln_z(beta - d)) / (2 * d) / spectrum.spec.length
        assert_allclose(ed.energy_per_site(spectrum, beta), numeric, atol=1e-8)

    def test_maximally_mixed(self, spectrum):
        s = ed.thermal_pair_state(spectrum, 1e-9)
        assert_allclose([s.rho11, s.rho22, s.rho44], [0.25] * 3, atol=1e-8)
        assert_allclose([s.rho23, s.rho14], [0, 0], atol=1e-8)

    def test_translation_invariance(self, spectrum):
        a = ed.reduced_pair_matrix(spectrum, 1.3, (1, 2))
        b = ed.reduced_pair_matrix(spectrum, 1.3, (3, 4))
        assert_allclose(a, b, atol=1e-12)

    def test_trace_and_positivity(self, spectrum):
        rho = ed.reduced_pair_matrix(spectrum, 2.0, (0, 2))
        assert_allclose(np.trace(rho), 1.0, atol=1e-12)
        assert np.linalg.eigvalsh(rho).min() > -1e-12

    def test_same_sites_rejected(self, spectrum):
        with pytest.raises(DomainError):
            ed.reduced_pair_matrix(spectrum, 1.0, (2, 2))

    def test_ground_state_limit(self, spectrum):
        # large beta picks out the lowest level
        assert_allclose(
            ed.energy_per_site(spectrum, 200.0), spectrum.energies[0] / spectrum.spec.length, atol=1e-9
        )

    def test_leakage_detected(self):
        rng = np.random.default_rng(3)
        m = rng.normal(size=(16, 16))
        sym = m + m.T
        e, v = np.linalg.eigh(sym)
        fake = ed.Spectrum(ed.RingSpec(4, XXZParams(1.0, 0, 1)), e, v)
        with pytest.raises(SymmetryViolationError):
            ed.thermal_pair_state(fake, 1.0)


class TestCorrelators:
    def test_polarized(self):
        s = ed.thermal_pair_state(ed.RingSpec(6, XXZParams(1.0, 50.0, 1.0)), 5.0)
        c = ed.pair_correlators(s)
        assert_allclose([c["sz"], c["szsz"]], [1.0, 1.0], atol=1e-10)

    def test_finite_size_convergence(self):
        p = XYParams(0.5, 1.0, 1.0)
        values = [
            ed.pair_correlators(ed.xy_formula_convention_state(n, p, 1))["sxsx"] for n in (6, 8, 10)
        ]
        assert abs(values[2] - values[1]) < abs(values[1] - values[0])

    def test_formula_convention_is_flip(self):
        p = XYParams(0.5, 1.0, 1.0)
        direct = ed.thermal_pair_state(ed.RingSpec(8, p), p.beta / 2, (0, 1))
        mapped = ed.xy_formula_convention_state(8, p, 1)
        assert_allclose(mapped.rho11, direct.rho44, atol=1e-14)
        assert_allclose(mapped.rho44, direct.rho11, atol=1e-14)
