"""The twelve scaling descriptors of a single signal.

One monofractal descriptor (the wavelet-spectrum slope ``S``) and eleven
geometric summaries of the multifractal spectrum ``(alpha, f(alpha))``.
``LTP``/``RTP`` are the abscissae of the two cut points, so
``B == RTP - LTP`` holds by construction.

Geometric helpers work on any :class:`MultifractalSpectrum`, including
hand-built ones, and report problems through a set of string flags
rather than raising, so one awkward spectrum never sinks a batch.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .config import RunConfig
from .multifractal import MultifractalSpectrum, SpectrumUnavailable, multifractal_spectrum
from .spectrum import DegenerateSpectrumError, fit_spectrum_slope, ols, wavelet_spectrum
from .wavelets import dwt

__all__ = [
    "DESCRIPTOR_NAMES",
    "MULTIFRACTAL_NAMES",
    "ScalingDescriptors",
    "spectral_mode",
    "broadness_and_cuts",
    "branch_slopes",
    "cut_tangents",
    "max_curvature",
    "curvature_K",
    "curvature_KC",
    "multifractal_descriptors",
    "extract_descriptors",
    "truncate_to_pow2",
]

DESCRIPTOR_NAMES = ("S", "LS", "RS", "B", "SM", "LTP", "RTP", "LT", "RT", "MC", "K", "KC")
MULTIFRACTAL_NAMES = DESCRIPTOR_NAMES[1:]
MIN_LENGTH = 256
APEX_TIE_RTOL = 1e-9

NAN = float("nan")


@dataclass
class ScalingDescriptors:
    S: float = NAN
    LS: float = NAN
    RS: float = NAN
    B: float = NAN
    SM: float = NAN
    LTP: float = NAN
    RTP: float = NAN
    LT: float = NAN
    RT: float = NAN
    MC: float = NAN
    K: float = NAN
    KC: float = NAN
    flags: set[str] = field(default_factory=set)
    q_range_used: str = ""

    def values(self) -> np.ndarray:
        return np.array([getattr(self, n) for n in DESCRIPTOR_NAMES], dtype=float)

    @property
    def multifractal_available(self) -> bool:
        return "multifractal_unavailable" not in self.flags

    def to_dict(self) -> dict:
        d = {n: getattr(self, n) for n in DESCRIPTOR_NAMES}
        d["q_range_used"] = self.q_range_used
        d["flags"] = ";".join(sorted(self.flags))
        return d


def _apex(f) -> int:
    return int(np.argmax(f))


def spectral_mode(mfs: MultifractalSpectrum, flags: set | None = None):
    """``(SM, apex index)``; the apex is refined by a parabola through three points.

    The parabola is fitted in the moment order, where points are evenly
    spaced, and ``alpha`` is read off at the refined order.
    """
    flags = set() if flags is None else flags
    alpha, f = mfs.alpha, mfs.f_alpha
    if len(f) < 3:
        raise ValueError("spectrum needs at least 3 points")
    i = _apex(f)
    if i == 0 or i == len(f) - 1:
        flags.add("apex_at_boundary")
        return float(alpha[i]), i
    f0, f1, f2 = f[i - 1], f[i], f[i + 1]
    denom = f0 - 2 * f1 + f2
    if denom >= 0:
        return float(alpha[i]), i
    t = float(np.clip(0.5 * (f0 - f2) / denom, -1.0, 1.0))
    a0, a1, a2 = alpha[i - 1], alpha[i], alpha[i + 1]
    sm = a1 + 0.5 * t * (a2 - a0) + 0.5 * t * t * (a0 - 2 * a1 + a2)
    return float(sm), i


def _crossing(alpha, f, order, a, flags, side):
    for p, n in zip(order[:-1], order[1:]):
        if f[n] <= a:
            return alpha[p] + (a - f[p]) * (alpha[n] - alpha[p]) / (f[n] - f[p]), (p, n)
    if len(order) < 2:
        flags.add(f"{side}_branch_missing")
        return NAN, None
    p, n = order[-2], order[-1]
    flags.add(f"{side}_cut_extrapolated")
    if f[n] == f[p]:
        flags.add(f"{side}_cut_unavailable")
        return NAN, (p, n)
    return alpha[p] + (a - f[p]) * (alpha[n] - alpha[p]) / (f[n] - f[p]), (p, n)


def _cuts(mfs, a, flags):
    alpha, f = mfs.alpha, mfs.f_alpha
    i = _apex(f)
    up, down = list(range(i, len(f))), list(range(i, -1, -1))
    # estimated spectra have alpha falling with q; planted ones may not
    if alpha[-1] > alpha[0]:
        up, down = down, up
    left, lseg = _crossing(alpha, f, up, a, flags, "left")
    right, rseg = _crossing(alpha, f, down, a, flags, "right")
    return left, right, lseg, rseg


def broadness_and_cuts(mfs: MultifractalSpectrum, a: float = -0.2, flags: set | None = None):
    """``(B, LTP, RTP)`` where ``f`` crosses the level ``a`` on either side of the apex.

    Crossings are linearly interpolated; a branch that never reaches ``a``
    is extended along its last segment and flagged.
    """
    flags = set() if flags is None else flags
    ltp, rtp, _, _ = _cuts(mfs, a, flags)
    return float(rtp - ltp), float(ltp), float(rtp)


def branch_slopes(mfs: MultifractalSpectrum, sm: float | None = None, flags: set | None = None):
    flags = set() if flags is None else flags
    if sm is None:
        sm, _ = spectral_mode(mfs, flags)
    alpha, f = mfs.alpha, mfs.f_alpha
    # a grid point within roundoff of SM is the apex itself and sits on
    # neither branch; otherwise rescaling the signal can flip its side
    tie = APEX_TIE_RTOL * max(1.0, abs(sm))
    out = []
    for side, sel in (("left", alpha < sm - tie), ("right", alpha > sm + tie)):
        if sel.sum() < 2 or np.ptp(alpha[sel]) == 0:
            flags.add(f"{side}_slope_unavailable")
            out.append(NAN)
        else:
            out.append(ols(alpha[sel], f[sel])[0])
    return out[0], out[1]


def cut_tangents(mfs: MultifractalSpectrum, a: float = -0.2, flags: set | None = None):
    """Slopes of the spectrum at the two cut points, from the bracketing segments."""
    flags = set() if flags is None else flags
    alpha, f = mfs.alpha, mfs.f_alpha
    _, _, lseg, rseg = _cuts(mfs, a, flags)
    out = []
    for seg in (lseg, rseg):
        if seg is None or alpha[seg[1]] == alpha[seg[0]]:
            out.append(NAN)
        else:
            p, n = seg
            out.append(float((f[n] - f[p]) / (alpha[n] - alpha[p])))
    return out[0], out[1]


def max_curvature(mfs: MultifractalSpectrum, flags: set | None = None) -> float:
    """Curvature ``|f''| / (1 + f'^2)^1.5`` at the apex.

    ``f'`` and ``f''`` in ``alpha`` come from central differences in the
    moment order via the chain rule.
    """
    flags = set() if flags is None else flags
    alpha, f = mfs.alpha, mfs.f_alpha
    i = _apex(f)
    if i < 2 or i > len(f) - 3:
        flags.add("curvature_boundary")
        return NAN
    h = float(mfs.q[1] - mfs.q[0])
    da = np.gradient(alpha, h)
    df = np.gradient(f, h)
    if abs(da[i]) < 1e-12 or np.any(np.abs(da[i - 1:i + 2]) < 1e-12):
        flags.add("degenerate_parametrization")
        return NAN
    fp = df / np.where(np.abs(da) < 1e-300, np.nan, da)
    fpp = np.gradient(fp, h)[i] / da[i]
    return float(abs(fpp) / (1.0 + fp[i] ** 2) ** 1.5)


def _second_divided(x0, x1, x2, y0, y1, y2) -> float:
    if x0 == x1 or x1 == x2 or x0 == x2:
        return NAN
    return 2.0 * ((y2 - y1) / (x2 - x1) - (y1 - y0) / (x1 - x0)) / (x2 - x0)


def _stencil_centre(f, half: int, flags: set) -> int:
    """Apex index, pulled inward so a stencil of ``half`` points per side fits."""
    i = _apex(f)
    lo, hi = half, len(f) - 1 - half
    if lo <= hi and not lo <= i <= hi:
        flags.add("stencil_clamped")
        i = min(max(i, lo), hi)
    return i


def curvature_K(mfs: MultifractalSpectrum, flags: set | None = None) -> float:
    """Mean of the two one-sided three-point ``|f''|`` estimates at the apex."""
    flags = set() if flags is None else flags
    alpha, f = mfs.alpha, mfs.f_alpha
    i = _stencil_centre(f, 2, flags)
    ests = []
    if i >= 2:
        ests.append(abs(_second_divided(*alpha[i - 2:i + 1], *f[i - 2:i + 1])))
    if i <= len(f) - 3:
        ests.append(abs(_second_divided(*alpha[i:i + 3], *f[i:i + 3])))
    if len(ests) < 2:
        flags.add("K_one_sided")
    if not ests:
        return NAN
    return float(np.mean(ests))


def curvature_KC(mfs: MultifractalSpectrum, flags: set | None = None) -> float:
    """``|f''|`` at the apex from the quartic through the five central points."""
    flags = set() if flags is None else flags
    alpha, f = mfs.alpha, mfs.f_alpha
    i = _stencil_centre(f, 2, flags)
    if 2 <= i <= len(f) - 3:
        x = alpha[i - 2:i + 3] - alpha[i]
        scale = np.max(np.abs(x))
        if scale > 0 and len(np.unique(x)) == 5:
            u = x / scale
            coef = np.linalg.solve(np.vander(u, 5, increasing=True), f[i - 2:i + 3])
            return float(abs(2.0 * coef[2]) / scale**2)
    flags.add("KC_three_point")
    if 1 <= i <= len(f) - 2:
        return float(abs(_second_divided(*alpha[i - 1:i + 2], *f[i - 1:i + 2])))
    return NAN


def multifractal_descriptors(mfs: MultifractalSpectrum, cut_level: float = -0.2,
                             flags: set | None = None) -> dict:
    flags = set() if flags is None else flags
    sm, _ = spectral_mode(mfs, flags)
    B, ltp, rtp = broadness_and_cuts(mfs, cut_level, flags)
    ls, rs = branch_slopes(mfs, sm, flags)
    lt, rt = cut_tangents(mfs, cut_level, flags)
    return {
        "LS": ls, "RS": rs, "B": B, "SM": sm, "LTP": ltp, "RTP": rtp,
        "LT": lt, "RT": rt,
        "MC": max_curvature(mfs, flags),
        "K": curvature_K(mfs, flags),
        "KC": curvature_KC(mfs, flags),
    }


def truncate_to_pow2(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    n = 1 << (len(x).bit_length() - 1) if len(x) else 0
    return x[:n]


def extract_descriptors(signal, cfg: RunConfig | None = None) -> ScalingDescriptors:
    """Full descriptor record for one signal.

    Signals whose length is not a power of two keep their leading
    ``2**floor(log2 n)`` samples.  A signal whose multifractal spectrum
    fails on every moment range still gets ``S``; the other fields are
    NaN and ``multifractal_unavailable`` is flagged.
    """
    cfg = cfg or RunConfig()
    x = truncate_to_pow2(signal)
    if len(x) < MIN_LENGTH:
        raise ValueError(f"signal too short: {len(x)} < {MIN_LENGTH} after truncation")
    out = ScalingDescriptors()
    decomp = dwt(x, cfg.wavelet, cfg.j0)
    try:
        fit = fit_spectrum_slope(wavelet_spectrum(decomp), *cfg.slope_window)
        out.S = fit.slope
    except DegenerateSpectrumError:
        out.flags.add("mono_unavailable")
    try:
        mfs = multifractal_spectrum(decomp, cfg.tau_range, ranges=cfg.q_ranges,
                                    step=cfg.q_step, r2_min=cfg.r2_min, alpha_tol=cfg.alpha_tol)
    except SpectrumUnavailable:
        out.flags.add("multifractal_unavailable")
        return out
    out.q_range_used = mfs.q_range_used
    if mfs.q_range_used != f"[{cfg.q_primary[0]:g},{cfg.q_primary[1]:g}]":
        out.flags.add("q_fallback")
    for k, v in multifractal_descriptors(mfs, cfg.cut_level, out.flags).items():
        setattr(out, k, v)
    return out

