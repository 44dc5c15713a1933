import warnings

import numpy as np
import pytest

from wavescale.spectrum import (DegenerateSpectrumError, WaveletSpectrum, fit_spectrum_slope,
                                hurst_from_slope, ols, wavelet_spectrum)
from wavescale.synth import FbmSpec, gen_fbm
from wavescale.wavelets import WaveletDecomposition, dwt


def test_constant_details_give_flat_spectrum():
    d = WaveletDecomposition.from_flat(np.full(256, 2.0), 1)
    spec = wavelet_spectrum(d)
    assert np.allclose(spec.log_energy, 2.0)


def test_constant_signal_is_degenerate():
    with pytest.raises(DegenerateSpectrumError):
        wavelet_spectrum(dwt(np.ones(256), "haar", 1))


def test_exact_line():
    spec = WaveletSpectrum(np.arange(1, 9), -2.0 * np.arange(1, 9))
    fit = fit_spectrum_slope(spec, 3, 7)
    assert fit.slope == pytest.approx(-2.0, abs=1e-12)
    assert fit.intercept == pytest.approx(0.0, abs=1e-12)
    assert fit.r2 == pytest.approx(1.0, abs=1e-12)


def test_single_usable_level():
    y = np.array([1.0, 2.0, -np.inf, -np.inf, -np.inf, -np.inf, 3.0, 4.0])
    with pytest.raises(DegenerateSpectrumError):
        fit_spectrum_slope(WaveletSpectrum(np.arange(1, 9), y), 3, 7)


def test_window_validation():
    spec = WaveletSpectrum(np.arange(1, 6), np.arange(5.0))
    with pytest.raises(ValueError):
        fit_spectrum_slope(spec, 3, 7)
    with pytest.raises(ValueError):
        fit_spectrum_slope(spec, 4, 4)


@pytest.mark.parametrize("slope,H", [(-2.0, 0.5), (-2.6, 0.8)])
def test_hurst_from_slope(slope, H):
    assert hurst_from_slope(slope) == pytest.approx(H)


def test_hurst_boundary_warns():
    with pytest.warns(RuntimeWarning):
        assert hurst_from_slope(-1.0) == 0.0


def test_ols_flat_is_perfect():
    assert ols([1, 2, 3], [5, 5, 5]) == (0.0, 5.0, 1.0)


@pytest.mark.parametrize("c", [10.0, -3.0, 1e-4])
def test_scaling_shifts_levels(c):
    x = gen_fbm(FbmSpec(0.5, 1024, 3))
    a = wavelet_spectrum(dwt(x, "db4", 1))
    b = wavelet_spectrum(dwt(c * x, "db4", 1))
    assert np.allclose(b.log_energy - a.log_energy, 2 * np.log2(abs(c)), atol=1e-10)
    assert abs(fit_spectrum_slope(a).slope - fit_spectrum_slope(b).slope) < 1e-10


@pytest.mark.parametrize("H", [0.3, 0.5, 0.8])
def test_hurst_recovery_small_ensemble(H):
    hs = []
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        for s in range(20):
            hs.append(fit_spectrum_slope(wavelet_spectrum(dwt(gen_fbm(FbmSpec(H, 4096, s)), "haar", 1))).hurst)
    assert abs(np.mean(hs) - H) < 0.07
