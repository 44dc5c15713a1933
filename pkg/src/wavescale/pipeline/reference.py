"""Published reference values for checks that need the real MIRS dataset.

Per-category mean and standard deviation of S, B and SM, keyed by
``(trait, category)``.  Only meaningful for runs on the real data, so the
checks here are opt-in.
"""

from __future__ import annotations

import math
from pathlib import Path

import numpy as np

from .io import read_table

__all__ = ["REFERENCE_BANDS", "S_RANGE", "S_MIN_FRACTION", "TLC_LOGIT_BAND", "real_data_checks"]

S_RANGE = (-3.0, -1.0)
S_MIN_FRACTION = 0.85
BAND_WIDTH = 3.0  # in reported standard deviations
TLC_LOGIT_BAND = (0.66, 0.82)

REFERENCE_BANDS = {
    ("RCT", "QLow"): {"S": (-1.886, 0.17), "B": (1.975, 0.17), "SM": (1.497, 0.06)},
    ("RCT", "QHigh"): {"S": (-1.873, 0.19), "B": (1.864, 0.19), "SM": (1.452, 0.07)},
    ("k20", "QLow"): {"S": (-1.901, 0.18), "B": (1.97, 0.2), "SM": (1.497, 0.06)},
    ("k20", "QHigh"): {"S": (-1.864, 0.18), "B": (1.882, 0.16), "SM": (1.457, 0.07)},
    ("a30", "QLow"): {"S": (-1.879, 0.19), "B": (1.87, 0.17), "SM": (1.456, 0.07)},
    ("a30", "QHigh"): {"S": (-1.895, 0.17), "B": (1.992, 0.18), "SM": (1.503, 0.06)},
    ("a60", "QLow"): {"S": (-1.898, 0.19), "B": (1.861, 0.17), "SM": (1.464, 0.07)},
    ("a60", "QHigh"): {"S": (-1.862, 0.17), "B": (1.972, 0.18), "SM": (1.483, 0.07)},
    ("CMS", "QLow"): {"S": (-1.905, 0.2), "B": (1.904, 0.21), "SM": (1.475, 0.07)},
    ("CMS", "QHigh"): {"S": (-1.876, 0.19), "B": (1.935, 0.19), "SM": (1.477, 0.07)},
    ("pH", "QLow"): {"S": (-1.91, 0.2), "B": (1.938, 0.21), "SM": (1.484, 0.06)},
    ("pH", "QHigh"): {"S": (-1.861, 0.19), "B": (1.905, 0.19), "SM": (1.467, 0.08)},
    ("HS", "QLow"): {"S": (-1.914, 0.2), "B": (1.831, 0.15), "SM": (1.456, 0.07)},
    ("HS", "QHigh"): {"S": (-1.843, 0.17), "B": (1.958, 0.19), "SM": (1.485, 0.07)},
    ("aS1-CN", "Q1"): {"S": (-1.886, 0.18), "B": (1.875, 0.2), "SM": (1.463, 0.06)},
    ("aS1-CN", "Q2"): {"S": (-1.897, 0.19), "B": (1.93, 0.2), "SM": (1.48, 0.05)},
    ("aS1-CN", "Q3"): {"S": (-1.921, 0.21), "B": (1.926, 0.22), "SM": (1.483, 0.06)},
    ("aS1-CN", "Q4"): {"S": (-1.95, 0.21), "B": (1.961, 0.2), "SM": (1.501, 0.05)},
    ("aS2-CN", "Q1"): {"S": (-1.859, 0.18), "B": (1.929, 0.2), "SM": (1.48, 0.07)},
    ("aS2-CN", "Q2"): {"S": (-1.914, 0.2), "B": (1.898, 0.22), "SM": (1.47, 0.06)},
    ("aS2-CN", "Q3"): {"S": (-1.963, 0.2), "B": (1.875, 0.2), "SM": (1.474, 0.05)},
    ("aS2-CN", "Q4"): {"S": (-1.914, 0.2), "B": (1.991, 0.2), "SM": (1.503, 0.06)},
    ("b-CN", "Q1"): {"S": (-1.89, 0.18), "B": (1.889, 0.22), "SM": (1.473, 0.06)},
    ("b-CN", "Q2"): {"S": (-1.881, 0.2), "B": (1.932, 0.19), "SM": (1.482, 0.06)},
    ("b-CN", "Q3"): {"S": (-1.933, 0.21), "B": (1.93, 0.19), "SM": (1.483, 0.06)},
    ("b-CN", "Q4"): {"S": (-1.948, 0.2), "B": (1.948, 0.22), "SM": (1.492, 0.06)},
    ("k-CN", "Q1"): {"S": (-1.919, 0.19), "B": (1.846, 0.18), "SM": (1.462, 0.06)},
    ("k-CN", "Q2"): {"S": (-1.911, 0.21), "B": (1.893, 0.22), "SM": (1.472, 0.06)},
    ("k-CN", "Q3"): {"S": (-1.929, 0.23), "B": (1.927, 0.21), "SM": (1.483, 0.06)},
    ("k-CN", "Q4"): {"S": (-1.894, 0.18), "B": (2.023, 0.17), "SM": (1.507, 0.05)},
    ("a-LA", "Q1"): {"S": (-1.879, 0.17), "B": (1.941, 0.18), "SM": (1.474, 0.06)},
    ("a-LA", "Q2"): {"S": (-1.889, 0.2), "B": (1.921, 0.19), "SM": (1.484, 0.05)},
    ("a-LA", "Q3"): {"S": (-1.927, 0.2), "B": (1.905, 0.22), "SM": (1.477, 0.06)},
    ("a-LA", "Q4"): {"S": (-1.954, 0.22), "B": (1.931, 0.24), "SM": (1.493, 0.07)},
    ("b-LGA", "Q1"): {"S": (-1.913, 0.19), "B": (1.885, 0.19), "SM": (1.468, 0.06)},
    ("b-LGA", "Q2"): {"S": (-1.936, 0.21), "B": (1.882, 0.2), "SM": (1.478, 0.06)},
    ("b-LGA", "Q3"): {"S": (-1.905, 0.2), "B": (1.935, 0.2), "SM": (1.482, 0.06)},
    ("b-LGA", "Q4"): {"S": (-1.903, 0.2), "B": (1.991, 0.23), "SM": (1.5, 0.06)},
    ("b-LGB", "Q1"): {"S": (-1.952, 0.2), "B": (1.899, 0.24), "SM": (1.482, 0.07)},
    ("b-LGB", "Q2"): {"S": (-1.893, 0.17), "B": (1.879, 0.2), "SM": (1.466, 0.05)},
    ("b-LGB", "Q3"): {"S": (-1.922, 0.23), "B": (1.933, 0.18), "SM": (1.486, 0.05)},
    ("b-LGB", "Q4"): {"S": (-1.906, 0.2), "B": (1.975, 0.21), "SM": (1.495, 0.07)},
    ("TLC", "QLow"): {"S": (-1.881, 0.2), "B": (1.979, 0.2), "SM": (1.485, 0.07)},
    ("TLC", "QHigh"): {"S": (-1.895, 0.19), "B": (1.863, 0.19), "SM": (1.468, 0.06)},
    ("TUC", "QLow"): {"S": (-1.887, 0.19), "B": (1.846, 0.18), "SM": (1.457, 0.07)},
    ("TUC", "QHigh"): {"S": (-1.886, 0.2), "B": (1.995, 0.19), "SM": (1.494, 0.06)},
    ("TFC", "QLow"): {"S": (-1.831, 0.17), "B": (1.922, 0.2), "SM": (1.461, 0.07)},
    ("TFC", "QHigh"): {"S": (-1.937, 0.2), "B": (1.923, 0.21), "SM": (1.489, 0.06)},
    ("TPC", "Q1"): {"S": (-1.863, 0.19), "B": (1.838, 0.18), "SM": (1.447, 0.07)},
    ("TPC", "Q2"): {"S": (-1.88, 0.2), "B": (1.906, 0.2), "SM": (1.467, 0.07)},
    ("TPC", "Q3"): {"S": (-1.895, 0.2), "B": (1.945, 0.2), "SM": (1.485, 0.06)},
    ("TPC", "Q4"): {"S": (-1.912, 0.19), "B": (2.003, 0.19), "SM": (1.506, 0.05)},
}


def _num(v):
    return float(v) if v not in ("", None) else math.nan


def real_data_checks(out_dir) -> list[tuple[str, bool, str]]:
    """``(name, passed, detail)`` for each plausibility band on a finished run."""
    out_dir = Path(out_dir)
    checks = []

    _, rows = read_table(out_dir / "descriptors.csv")
    s = np.array([_num(r["S"]) for r in rows])
    s = s[np.isfinite(s)]
    frac = float(np.mean((s >= S_RANGE[0]) & (s <= S_RANGE[1]))) if s.size else 0.0
    checks.append(("S within [-3, -1]", frac >= S_MIN_FRACTION,
                   f"{frac:.3f} of {s.size} samples (need >= {S_MIN_FRACTION})"))

    _, stats = read_table(out_dir / "category_stats.csv")
    misses, compared = [], 0
    for r in stats:
        ref = REFERENCE_BANDS.get((r["mqp"], r["category"]))
        if ref is None:
            continue
        for name, (mean, std) in ref.items():
            compared += 1
            got = _num(r[f"{name}_mean"])
            if not abs(got - mean) <= BAND_WIDTH * std:
                misses.append(f"{r['mqp']}/{r['category']}/{name}={got:.3f} (ref {mean}±{std})")
    checks.append(("category means within 3 reported std", compared > 0 and not misses,
                   f"{compared - len(misses)}/{compared} within band" + (f"; misses: {', '.join(misses[:5])}" if misses else "")))

    _, curves = read_table(out_dir / "fig5_accuracy_curves.csv")
    acc = [_num(r["test_acc_mean"]) for r in curves
           if r["mqp"] == "TLC" and r["family"] == "Logit" and r["feature_set"] == "descriptors"]
    best = max(acc) if acc else math.nan
    lo, hi = TLC_LOGIT_BAND
    checks.append(("TLC Logit best accuracy", lo <= best <= hi, f"{best:.3f} (band [{lo}, {hi}])"))
    return checks
