"""Synthetic signals with known scaling behaviour.

fBm is generated by circulant embedding of the fractional Gaussian noise
autocovariance, so it shares no code with the wavelet estimators it is
used to check.  Random streams come from numpy's counter-based Philox
bit generator.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .multifractal import MomentGrid, MultifractalSpectrum, legendre_spectrum

__all__ = [
    "RNG_NAME",
    "rng_for",
    "FbmSpec",
    "CascadeSpec",
    "fgn_autocovariance",
    "gen_fbm",
    "gen_cascade",
    "cascade_raw_tau",
    "cascade_theoretical_spectrum",
]

log = logging.getLogger(__name__)

RNG_NAME = "numpy.random.Philox"


def rng_for(seed, *stream) -> np.random.Generator:
    """Generator for ``seed``, optionally split into an independent sub-stream."""
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(s) for s in stream))
    return np.random.Generator(np.random.Philox(ss))


def _is_pow2(n: int) -> bool:
    return n >= 2 and not n & (n - 1)


@dataclass(frozen=True)
class FbmSpec:
    hurst: float
    n: int
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.hurst < 1.0:
            raise ValueError(f"hurst must lie in (0, 1), got {self.hurst}")
        if not _is_pow2(self.n):
            raise ValueError(f"n must be a power of two, got {self.n}")


@dataclass(frozen=True)
class CascadeSpec:
    m0: float
    depth: int
    seed: int = 0

    def __post_init__(self):
        if not 0.5 <= self.m0 < 1.0:
            raise ValueError(f"m0 must lie in [0.5, 1), got {self.m0}")
        if self.depth < 1:
            raise ValueError("depth must be positive")

    @property
    def m1(self) -> float:
        return 1.0 - self.m0


def fgn_autocovariance(hurst: float, n: int) -> np.ndarray:
    k = np.arange(n, dtype=float)
    h2 = 2.0 * hurst
    return 0.5 * (np.abs(k + 1) ** h2 - 2.0 * np.abs(k) ** h2 + np.abs(k - 1) ** h2)


def _fgn(spec: FbmSpec, rng: np.random.Generator) -> np.ndarray:
    n = spec.n
    gamma = fgn_autocovariance(spec.hurst, n + 1)
    row = np.concatenate([gamma[: n + 1], gamma[n - 1:0:-1]])
    lam = np.fft.fft(row).real
    m = len(row)
    if lam.min() < -1e-10 * lam.max():
        if n > 4096:
            raise ValueError("circulant embedding failed and n is too large for Cholesky")
        log.warning("circulant embedding not positive definite for H=%s; using Cholesky",
                    spec.hurst)
        idx = np.arange(n)
        cov = fgn_autocovariance(spec.hurst, n)[np.abs(idx[:, None] - idx[None, :])]
        return np.linalg.cholesky(cov) @ rng.standard_normal(n)
    lam = np.clip(lam, 0.0, None)
    z = rng.standard_normal(m) + 1j * rng.standard_normal(m)
    w = np.fft.fft(np.sqrt(lam / m) * z)
    return w[:n].real


def gen_fbm(spec: FbmSpec) -> np.ndarray:
    """Sample path of fBm with unit-variance increments (length ``spec.n``)."""
    return np.cumsum(_fgn(spec, rng_for(spec.seed)))


def gen_cascade(spec: CascadeSpec) -> np.ndarray:
    """Per-cell masses of a binomial cascade with random left/right weights."""
    rng = rng_for(spec.seed)
    mass = np.ones(1)
    for _ in range(spec.depth):
        left = np.where(rng.random(mass.size) < 0.5, spec.m0, spec.m1)
        mass = np.column_stack([mass * left, mass * (1.0 - left)]).ravel()
    return mass


def cascade_raw_tau(m0: float, q) -> np.ndarray:
    """Closed-form regression slope of ``log2 S(j, q)`` for a Haar-analysed cascade."""
    q = np.asarray(q, dtype=float)
    return q / 2 - 1 + np.log2(m0**q + (1.0 - m0) ** q)


def cascade_theoretical_spectrum(m0: float, grid: MomentGrid) -> MultifractalSpectrum:
    """Closed-form cascade exponents pushed through :func:`legendre_spectrum`."""
    if not 0.5 <= m0 < 1.0:
        raise ValueError(f"m0 must lie in [0.5, 1), got {m0}")
    return legendre_spectrum(cascade_raw_tau(m0, grid.q_values), grid,
                             q_range_used=grid.label, alpha_tol=None)
