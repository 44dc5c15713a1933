"""Partition-function multifractal spectrum on DWT detail magnitudes.

Convention (fixed everywhere, including the synthetic oracles):

* ``tau(q)`` is the raw regression slope of ``log2 S(j, q)`` against the
  level index ``j`` (``j`` grows toward fine scales, so slopes of rough
  signals are negative).  At ``q = 2`` it equals the wavelet-spectrum slope.
* The mass exponent is ``T(q) = -tau(q) + q/2 - 1``.  For a binomial
  cascade analysed with Haar this is exactly ``-log2(m0**q + m1**q)``, and
  for fBm it is ``q (H + 1) - 1``.
* ``alpha(q) = dT/dq`` and ``f(alpha(q)) = q alpha(q) - T(q) - 1``, so the
  apex (at ``q = 0``) sits at ``f = 0`` and a monofractal collapses to the
  point ``(H + 1, 0)``.

Moment grids are signed and straddle ``q = 0``; without negative orders
the Legendre pair has no interior apex.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .spectrum import ols
from .wavelets import WaveletDecomposition

__all__ = [
    "MomentGrid",
    "PartitionTable",
    "ScalingExponents",
    "MultifractalSpectrum",
    "MultifractalError",
    "DegenerateLevelError",
    "SpectrumUnavailable",
    "partition_function",
    "tau_exponents",
    "legendre_spectrum",
    "select_q_range",
    "multifractal_spectrum",
    "PRIMARY_Q_RANGE",
    "FALLBACK_Q_RANGE",
    "R2_MIN",
    "R2_ORDER_MIN",
    "ALPHA_MONOTONE_TOL",
]

PRIMARY_Q_RANGE = (-5.0, 5.0)
FALLBACK_Q_RANGE = (-3.0, 3.0)
Q_STEP = 0.25
R2_MIN = 0.9
# r^2 is only meaningful where the expected slope is well away from zero;
# near q = 0 every tau is ~0 and r^2 degenerates, and negative orders of
# Gaussian-like coefficients are noisy at N = 1024
R2_ORDER_MIN = 1.0
ALPHA_MONOTONE_TOL = 0.05


class MultifractalError(ValueError):
    pass


class DegenerateLevelError(MultifractalError):
    pass


class NonConcaveError(MultifractalError):
    pass


class SpectrumUnavailable(MultifractalError):
    pass


@dataclass(frozen=True)
class MomentGrid:
    q_values: np.ndarray
    step: float
    label: str = ""

    def __post_init__(self):
        q = np.asarray(self.q_values, dtype=float)
        if len(q) < 5:
            raise ValueError("moment grid needs at least 5 points")
        d = np.diff(q)
        if np.any(d <= 0) or np.max(np.abs(d - self.step)) > 1e-12:
            raise ValueError("moment grid must be strictly increasing with uniform step")
        object.__setattr__(self, "q_values", q)

    @classmethod
    def from_range(cls, lo: float, hi: float, step: float = Q_STEP, label: str | None = None):
        n = int(round((hi - lo) / step))
        q = lo + step * np.arange(n + 1)
        return cls(q, float(step), label if label is not None else f"[{lo:g},{hi:g}]")

    def __len__(self):
        return len(self.q_values)


@dataclass(frozen=True)
class PartitionTable:
    levels: np.ndarray
    q: np.ndarray
    log2_S: np.ndarray  # shape (levels, q)


@dataclass(frozen=True)
class ScalingExponents:
    q: np.ndarray
    tau: np.ndarray
    r2: np.ndarray
    j_range: tuple[int, int]


@dataclass(frozen=True)
class MultifractalSpectrum:
    q: np.ndarray
    tau: np.ndarray
    alpha: np.ndarray
    f_alpha: np.ndarray
    j_range: tuple[int, int] | None = None
    q_range_used: str = ""
    r2: np.ndarray | None = field(default=None, repr=False)

    @property
    def mass_exponent(self) -> np.ndarray:
        return -self.tau + self.q / 2 - 1

    def rows(self):
        """``(q, tau, alpha, f_alpha)`` tuples for CSV export."""
        return [tuple(map(float, r)) for r in zip(self.q, self.tau, self.alpha, self.f_alpha)]


def _window(decomp: WaveletDecomposition, j_range) -> np.ndarray:
    j_min, j_max = j_range
    if j_min >= j_max:
        raise ValueError(f"empty scale window {j_range}")
    if j_min < decomp.j0 or j_max > decomp.J - 1:
        raise ValueError(f"scale window {j_range} outside levels [{decomp.j0}, {decomp.J - 1}]")
    return np.arange(j_min, j_max + 1)


def partition_function(decomp: WaveletDecomposition, grid: MomentGrid, j_range=(3, 7)) -> PartitionTable:
    """``S(j, q) = 2**-j * sum_k |d_jk|**q`` over the nonzero coefficients.

    Coefficients at or below the decomposition's roundoff floor count as zero.
    """
    levels = _window(decomp, j_range)
    q = grid.q_values
    out = np.empty((len(levels), len(q)))
    floor = decomp.noise_floor
    for i, j in enumerate(levels):
        a = np.abs(decomp.detail(int(j)))
        nz = a[a > floor]
        if nz.size == 0:
            raise DegenerateLevelError(f"degenerate level {j}: all detail coefficients are zero")
        # log-sum-exp keeps large |q| from overflowing
        logs = np.outer(q, np.log2(nz))
        peak = logs.max(axis=1)
        out[i] = peak + np.log2(np.exp2(logs - peak[:, None]).sum(axis=1)) - j
    return PartitionTable(levels, q.copy(), out)


def tau_exponents(table: PartitionTable, j_range=None) -> ScalingExponents:
    """OLS slope of ``log2 S(j, q)`` on ``j`` for every moment order."""
    levels = table.levels
    if j_range is not None:
        sel = (levels >= j_range[0]) & (levels <= j_range[1])
    else:
        sel = np.ones(len(levels), bool)
    if sel.sum() < 2:
        raise DegenerateLevelError("need at least two scales for the tau regression")
    js = levels[sel]
    fits = [ols(js, table.log2_S[sel, k]) for k in range(len(table.q))]
    tau = np.array([f[0] for f in fits])
    r2 = np.array([f[2] for f in fits])
    return ScalingExponents(table.q.copy(), tau, r2, (int(js[0]), int(js[-1])))


def legendre_spectrum(tau, grid: MomentGrid, *, j_range=None, q_range_used: str = "",
                      r2=None, alpha_tol: float | None = ALPHA_MONOTONE_TOL) -> MultifractalSpectrum:
    """Legendre pair ``(alpha(q), f(alpha(q)))`` from raw exponents ``tau``.

    Derivatives are central differences inside the grid and one-sided at
    the ends.  With ``alpha_tol`` set, an ``alpha`` that rises by more than
    the tolerance between neighbouring orders raises :class:`NonConcaveError`.
    """
    tau = np.asarray(tau, dtype=float)
    q = grid.q_values
    if tau.shape != q.shape:
        raise ValueError("tau and grid differ in length")
    if not np.all(np.isfinite(tau)):
        raise MultifractalError("tau is not finite on the grid")
    T = -tau + q / 2 - 1
    alpha = np.gradient(T, grid.step, edge_order=1)
    f = q * alpha - T - 1
    if alpha_tol is not None:
        rise = np.max(np.diff(alpha))
        if rise > alpha_tol:
            raise NonConcaveError(f"alpha increases by {rise:.3g} (> {alpha_tol}) across the grid")
    return MultifractalSpectrum(q.copy(), tau, alpha, f, j_range, q_range_used or grid.label, r2)


def _attempt(decomp, grid, j_range, r2_min, alpha_tol):
    table = partition_function(decomp, grid, j_range)
    ex = tau_exponents(table)
    gated = ex.q >= R2_ORDER_MIN
    worst = float(np.min(ex.r2[gated])) if gated.any() else 1.0
    if worst < r2_min:
        raise MultifractalError(f"tau regression r2 {worst:.3f} below {r2_min} on {grid.label}")
    return legendre_spectrum(ex.tau, grid, j_range=ex.j_range, q_range_used=grid.label,
                             r2=ex.r2, alpha_tol=alpha_tol)


def select_q_range(decomp: WaveletDecomposition, j_range=(3, 7), *,
                   ranges=(PRIMARY_Q_RANGE, FALLBACK_Q_RANGE), step: float = Q_STEP,
                   r2_min: float = R2_MIN, alpha_tol: float = ALPHA_MONOTONE_TOL) -> MomentGrid:
    """First moment grid in ``ranges`` whose spectrum passes the fit checks."""
    return _select(decomp, j_range, ranges, step, r2_min, alpha_tol)[0]


def _select(decomp, j_range, ranges, step, r2_min, alpha_tol):
    reasons = []
    for lo, hi in ranges:
        grid = MomentGrid.from_range(lo, hi, step)
        try:
            return grid, _attempt(decomp, grid, j_range, r2_min, alpha_tol)
        except DegenerateLevelError:
            raise SpectrumUnavailable("multifractal spectrum unavailable: degenerate level in window")
        except MultifractalError as exc:
            reasons.append(str(exc))
    raise SpectrumUnavailable("multifractal spectrum unavailable: " + "; ".join(reasons))


def multifractal_spectrum(decomp: WaveletDecomposition, j_range=(3, 7), *,
                          ranges=(PRIMARY_Q_RANGE, FALLBACK_Q_RANGE), step: float = Q_STEP,
                          r2_min: float = R2_MIN,
                          alpha_tol: float = ALPHA_MONOTONE_TOL) -> MultifractalSpectrum:
    """Spectrum on the first acceptable range, recording which one was used."""
    return _select(decomp, tuple(j_range), ranges, step, r2_min, alpha_tol)[1]
