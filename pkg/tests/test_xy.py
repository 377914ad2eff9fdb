import numpy as np
import pytest
from numpy.testing import assert_allclose
from scipy.integrate import quad

from thermal_qcp import DomainError, ed, xy
from thermal_qcp.xy import XYParams

#: G_1 at (lam, gamma, beta) = (1.5, 0.5, 10); quad_vec and a periodic
#: trapezoid rule agree to 2e-16.
G1_PIN = 0.08168980925698528
ELEMENTS = ("rho11", "rho22", "rho44", "rho23", "rho14")


def g_trapezoid(k, p, n=40000):
    """G_k from the trapezoid rule over a full period (spectrally accurate)."""
    phi = np.linspace(-np.pi, np.pi, n, endpoint=False)
    w = 0.5 * np.hypot(p.gamma * p.lam * np.sin(phi), 1 + p.lam * np.cos(phi))
    f = np.tanh(p.beta * w) / w * (
        (1 + p.lam * np.cos(phi)) * np.cos(k * phi) - p.gamma * p.lam * np.sin(k * phi) * np.sin(phi)
    )
    return f.mean() / 2


class TestParams:
    def test_domain(self):
        with pytest.raises(DomainError):
            XYParams(-0.1, 0.5, 1.0)
        with pytest.raises(DomainError):
            XYParams(1.0, 1.5, 1.0)
        with pytest.raises(DomainError):
            XYParams(1.0, 0.5, 0.0)


class TestDispersion:
    def test_examples(self):
        assert_allclose(xy.dispersion(0.0, XYParams(1.0, 0.3, 1.0)), 1.0)
        assert_allclose(xy.dispersion(np.pi, XYParams(1.0, 0.3, 1.0)), 0.0, atol=1e-16)
        assert_allclose(xy.dispersion(np.pi / 2, XYParams(2.0, 0.5, 1.0)), np.sqrt(2) / 2)

    def test_non_negative(self):
        phi = np.linspace(0, np.pi, 101)
        assert np.all(xy.dispersion(phi, XYParams(1.3, -0.7, 1.0)) >= 0)


class TestGFunction:
    def test_decoupled(self):
        p = XYParams(0.0, 0.3, 2.0)
        assert_allclose(xy.transverse_magnetization(p), -np.tanh(1.0), atol=1e-10)
        assert_allclose(xy.g_function(1, p), 0.0, atol=1e-10)

    def test_infinite_temperature(self):
        p = XYParams(0.8, 0.4, 1e-6)
        assert_allclose(xy.transverse_magnetization(p), 0.0, atol=1e-6)

    def test_pinned_value(self):
        p = XYParams(1.5, 0.5, 10.0)
        assert_allclose(xy.g_function(1, p), G1_PIN, atol=1e-9)
        assert_allclose(g_trapezoid(1, p), G1_PIN, atol=1e-9)

    @pytest.mark.parametrize("k", [-3, -1, 0, 2, 4])
    def test_two_quadratures(self, k):
        p = XYParams(0.7, -0.6, 3.0)
        assert_allclose(xy.g_function(k, p), g_trapezoid(k, p), atol=1e-9)

    def test_table_is_read_only(self):
        table = xy.g_values(XYParams(1.1, 0.2, 2.0), 3)
        with pytest.raises(ValueError):
            table[0] = 1.0

    def test_sharp_feature_resolved(self):
        # gapless point near zero temperature, where the integrand has a kink at pi
        # 1 - sz ~ (2 / (pi sqrt(beta))) * int_0^inf (1 - tanh u^2) du
        tail = quad(lambda u: 1 - np.tanh(u * u), 0, np.inf, epsabs=1e-14)[0]
        for beta in (1e6, 1e8):
            p = XYParams(1.0, 0.0, beta)
            expected = -1 + 2 * tail / (np.pi * np.sqrt(beta))
            assert_allclose(xy.transverse_magnetization(p), expected, atol=1e-9)


class TestCorrelators:
    def test_decoupled(self):
        p = XYParams(0.0, 0.5, 2.0)
        for k in (1, 2, 3):
            assert_allclose(xy.correlator_xx(k, p), 0.0, atol=1e-10)
            assert_allclose(xy.correlator_yy(k, p), 0.0, atol=1e-10)
            assert_allclose(xy.correlator_zz(k, p), np.tanh(1.0) ** 2, atol=1e-10)

    def test_infinite_temperature(self):
        p = XYParams(1.2, 0.5, 1e-6)
        for k in (1, 2):
            for f in (xy.correlator_xx, xy.correlator_yy, xy.correlator_zz):
                assert_allclose(f(k, p), 0.0, atol=1e-6)

    def test_isotropic_plane(self):
        p = XYParams(0.9, 0.0, 4.0)
        for k in (1, 2, 3):
            assert_allclose(xy.correlator_xx(k, p), xy.correlator_yy(k, p), atol=1e-12)

    def test_bad_separation(self):
        with pytest.raises(DomainError):
            xy.correlator_xx(0, XYParams(1.0, 1.0, 1.0))

    def test_high_temperature_decay(self):
        for k in (1, 2, 3):
            hot = abs(xy.correlator_xx(k, XYParams(1.0, 1.0, 0.05)))
            cold = abs(xy.correlator_xx(k, XYParams(1.0, 1.0, 5.0)))
            assert hot < cold


class TestPairState:
    def test_infinite_temperature(self):
        s = xy.pair_state(1, XYParams(1.4, 0.2, 1e-8))
        assert_allclose([s.rho11, s.rho22, s.rho44], [0.25] * 3, atol=1e-7)
        assert_allclose([s.rho23, s.rho14], [0.0, 0.0], atol=1e-7)

    def test_isotropic_no_rho14(self):
        s = xy.pair_state(1, XYParams(0.7, 0.0, 3.0))
        assert_allclose(s.rho14, 0.0, atol=1e-12)

    def test_positive_on_grid(self):
        for lam in (0.3, 1.0, 1.7):
            for gamma in (-1.0, 0.0, 0.5):
                for beta in (0.1, 1.0, 20.0):
                    for k in (1, 2):
                        s = xy.pair_state(k, XYParams(lam, gamma, beta))
                        assert np.linalg.eigvalsh(s.matrix()).min() > -1e-9


class TestAgainstRing:
    @pytest.fixture(scope="class")
    @staticmethod
    def reference():
        p = XYParams(0.5, 1.0, 1.0)
        return p, {k: ed.xy_formula_convention_state(10, p, k) for k in (1, 2)}

    @pytest.mark.parametrize("k", [1, 2])
    def test_observables(self, reference, k):
        p, ring = reference
        r = ed.pair_correlators(ring[k])
        assert_allclose(xy.correlator_xx(k, p), r["sxsx"], atol=5e-3)
        assert_allclose(xy.correlator_yy(k, p), r["sysy"], atol=5e-3)
        assert_allclose(xy.correlator_zz(k, p), r["szsz"], atol=5e-3)
        assert_allclose(xy.transverse_magnetization(p), r["sz"], atol=5e-3)

    @pytest.mark.parametrize("k", [1, 2])
    def test_states(self, reference, k):
        p, ring = reference
        s = xy.pair_state(k, p)
        assert_allclose(
            [getattr(s, e) for e in ELEMENTS], [getattr(ring[k], e) for e in ELEMENTS], atol=5e-3
        )

    @pytest.mark.slow
    def test_random_points(self):
        rng = np.random.default_rng(7)
        for _ in range(20):
            p = XYParams(rng.uniform(0, 2), rng.uniform(-1, 1), rng.uniform(0.05, 1.0))
            for k in (1, 2):
                a = xy.pair_state(k, p)
                b = ed.xy_formula_convention_state(10, p, k)
                assert_allclose(
                    [getattr(a, e) for e in ELEMENTS], [getattr(b, e) for e in ELEMENTS], atol=5e-3
                )
