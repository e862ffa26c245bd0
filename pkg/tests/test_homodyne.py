import math

import numpy as np
import pytest
from scipy.integrate import quad

from wfhsim.constellation import Constellation, CoherentSymbol, build_psk
from wfhsim.homodyne import (
    GridAccuracyError,
    HomodyneParams,
    conditional_mean,
    hd_conditional_pdf,
    hd_mutual_information,
)


def binary_awgn_mi_oracle(mean: float, sigma: float) -> float:
    """MI of antipodal signaling over a Gaussian channel, by adaptive quadrature.

    I = 1 - E_{y ~ N(mean, sigma^2)}[log2(1 + exp(-2 mean y / sigma^2))],
    an independent formulation and integrator from the Simpson-grid path.
    """

    def integrand(y):
        dens = math.exp(-((y - mean) ** 2) / (2 * sigma**2)) / math.sqrt(
            2 * math.pi * sigma**2
        )
        arg = -2.0 * mean * y / sigma**2
        # log1p under/overflow-safe evaluation of log2(1 + e^arg)
        if arg > 50:
            penalty = arg / math.log(2.0)
        else:
            penalty = math.log1p(math.exp(arg)) / math.log(2.0)
        return dens * penalty

    lo, hi = mean - 12 * sigma, mean + 12 * sigma
    val1, err1 = quad(integrand, lo, mean, limit=400, epsabs=1e-13, epsrel=1e-12)
    val2, err2 = quad(integrand, mean, hi, limit=400, epsabs=1e-13, epsrel=1e-12)
    assert err1 + err2 < 1e-10
    return 1.0 - (val1 + val2)


class TestConditionalPdf:
    def test_vacuum_is_standard_normal(self):
        s = CoherentSymbol(0.0, 0.0, 1.0)
        p = HomodyneParams()
        xs = np.linspace(-5, 5, 11)
        expected = np.exp(-(xs**2) / 2) / math.sqrt(2 * math.pi)
        assert hd_conditional_pdf(xs, s, p) == pytest.approx(expected, rel=1e-12)

    def test_mean_at_canonical_amplitude(self):
        s = CoherentSymbol(2.04, 0.0, 1.0)
        assert conditional_mean(s, HomodyneParams()) == pytest.approx(4.08)

    @pytest.mark.parametrize("phase", [0.1, 0.9, 2.0])
    def test_reflection_symmetry(self, phase):
        p = HomodyneParams()
        a = CoherentSymbol(1.7, phase, 1.0)
        b = CoherentSymbol(1.7, math.pi - phase, 1.0)
        xs = np.linspace(-6, 6, 25)
        assert hd_conditional_pdf(xs, a, p) == pytest.approx(
            hd_conditional_pdf(-xs, b, p), rel=1e-12
        )


class TestMutualInformation:
    def test_single_symbol_carries_nothing(self):
        single = Constellation((CoherentSymbol(2.0, 0.0, 1.0),), order_m=2, phi0=0.0)
        assert hd_mutual_information(single, HomodyneParams()) == pytest.approx(
            0.0, abs=1e-9
        )

    def test_bpsk_saturates_to_one_bit(self):
        c = build_psk(2, 10.0, 0.0)
        assert hd_mutual_information(c, HomodyneParams()) == pytest.approx(1.0, abs=1e-6)

    def test_qpsk_saturates_to_two_bits(self):
        c = build_psk(4, 40.0)
        assert hd_mutual_information(c, HomodyneParams()) == pytest.approx(2.0, abs=1e-4)

    @pytest.mark.parametrize("m,alpha,t", [(2, 2.04, 1.0), (2, 1.2, 0.4), (4, 2.04, 0.7)])
    def test_bounded_by_source_entropy(self, m, alpha, t):
        c = build_psk(m, alpha, 0.0 if m == 2 else None)
        mi = hd_mutual_information(c, HomodyneParams(transmissivity=t))
        assert 0.0 <= mi <= math.log2(m) + 1e-9

    @pytest.mark.parametrize("alpha,t", [(2.04, 1.0), (2.04, 0.5), (0.9, 0.8)])
    def test_matches_binary_channel_oracle(self, alpha, t):
        c = build_psk(2, alpha, 0.0)
        params = HomodyneParams(transmissivity=t)
        ours = hd_mutual_information(c, params)
        oracle = binary_awgn_mi_oracle(2.0 * math.sqrt(t) * alpha, 1.0)
        assert ours == pytest.approx(oracle, abs=1e-9)

    def test_grid_convergence_at_defaults(self, qpsk):
        params = HomodyneParams()
        base = hd_mutual_information(qpsk, params, check_convergence=False)
        fine = hd_mutual_information(
            qpsk,
            HomodyneParams(grid=(-25.0, 25.0, 1.0 / 400)),
            check_convergence=False,
        )
        assert abs(base - fine) < 1e-8

    def test_coarse_grid_rejected(self, qpsk):
        with pytest.raises(GridAccuracyError):
            hd_mutual_information(qpsk, HomodyneParams(grid=(-15.0, 15.0, 1.0)))

    def test_visibility_scales_information(self, qpsk):
        full = hd_mutual_information(qpsk, HomodyneParams())
        reduced = hd_mutual_information(qpsk, HomodyneParams(visibility=0.845))
        assert reduced < full

    def test_jitter_reduces_information(self, qpsk):
        clean = hd_mutual_information(qpsk, HomodyneParams())
        noisy = hd_mutual_information(qpsk, HomodyneParams(), phase_jitter_rms=0.25)
        assert noisy < clean


class TestParams:
    @pytest.mark.parametrize(
        "kwargs",
        [
            dict(shot_noise_variance=0.0),
            dict(transmissivity=1.2),
            dict(visibility=-0.1),
            dict(grid=(1.0, -1.0, 0.1)),
        ],
    )
    def test_invalid_params(self, kwargs):
        with pytest.raises(ValueError):
            HomodyneParams(**kwargs)
