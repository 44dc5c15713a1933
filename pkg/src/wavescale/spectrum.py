"""Wavelet (monofractal) spectrum and Hurst exponent."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .wavelets import WaveletDecomposition

__all__ = [
    "WaveletSpectrum",
    "SlopeFit",
    "DegenerateSpectrumError",
    "wavelet_spectrum",
    "fit_spectrum_slope",
    "hurst_from_slope",
    "ols",
]


class DegenerateSpectrumError(ValueError):
    """Too few usable levels to define a spectrum or a fit."""


@dataclass(frozen=True)
class WaveletSpectrum:
    levels: np.ndarray
    log_energy: np.ndarray

    @property
    def usable(self) -> np.ndarray:
        return np.isfinite(self.log_energy)

    def rows(self):
        """``(j, log2_energy)`` pairs for CSV export."""
        return [(int(j), float(y)) for j, y in zip(self.levels, self.log_energy)]


@dataclass(frozen=True)
class SlopeFit:
    slope: float
    intercept: float
    j_min: int
    j_max: int
    r2: float

    @property
    def hurst(self) -> float:
        return hurst_from_slope(self.slope)


def ols(x, y):
    """Slope, intercept and r^2 of a least-squares line.

    A perfectly flat response counts as a perfect fit (r^2 = 1).
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    xm = x - x.mean()
    slope = float(xm @ (y - y.mean()) / (xm @ xm))
    intercept = float(y.mean() - slope * x.mean())
    resid = y - (intercept + slope * x)
    ss_tot = float(((y - y.mean()) ** 2).sum())
    ss_res = float((resid**2).sum())
    r2 = 1.0 if ss_tot <= 1e-300 else 1.0 - ss_res / ss_tot
    return slope, intercept, r2


def wavelet_spectrum(decomp: WaveletDecomposition) -> WaveletSpectrum:
    """``log2`` of the mean squared detail coefficient at every level.

    Levels with nothing above the roundoff floor get ``-inf`` and are skipped by :func:`fit_spectrum_slope`.
    """
    if len(decomp.details) < 2:
        raise DegenerateSpectrumError("need at least two detail levels")
    levels = decomp.levels
    floor = decomp.noise_floor
    energy = np.array([np.mean(np.square(d)) if np.abs(d).max() > floor else 0.0
                       for d in decomp.details])
    with np.errstate(divide="ignore"):
        log_energy = np.log2(energy)
    if np.isfinite(log_energy).sum() < 2:
        raise DegenerateSpectrumError("fewer than two levels with nonzero detail energy")
    return WaveletSpectrum(levels, log_energy)


def fit_spectrum_slope(spec: WaveletSpectrum, j_min: int = 3, j_max: int = 7) -> SlopeFit:
    if j_min >= j_max:
        raise ValueError(f"empty fit window [{j_min}, {j_max}]")
    if j_min < spec.levels[0] or j_max > spec.levels[-1]:
        raise ValueError(
            f"window [{j_min}, {j_max}] outside available levels "
            f"[{spec.levels[0]}, {spec.levels[-1]}]"
        )
    sel = (spec.levels >= j_min) & (spec.levels <= j_max) & spec.usable
    if sel.sum() < 2:
        raise DegenerateSpectrumError(f"fewer than two usable levels in [{j_min}, {j_max}]")
    slope, intercept, r2 = ols(spec.levels[sel], spec.log_energy[sel])
    return SlopeFit(slope, intercept, j_min, j_max, r2)


def hurst_from_slope(slope: float) -> float:
    """``H = -(slope + 1) / 2``; warns when H falls outside (0, 1)."""
    H = -(slope + 1.0) / 2.0
    if not 0.0 < H < 1.0:
        warnings.warn(f"Hurst exponent {H:.3f} outside (0, 1) for slope {slope:.3f}",
                      RuntimeWarning, stacklevel=2)
    return H
