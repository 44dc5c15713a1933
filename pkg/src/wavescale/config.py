"""Run configuration: one YAML file plus command-line overrides."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from pathlib import Path

import yaml

from .multifractal import ALPHA_MONOTONE_TOL, FALLBACK_Q_RANGE, PRIMARY_Q_RANGE, Q_STEP, R2_MIN

FAMILIES = ("KNN", "GNB", "LDA", "QDA", "Logit", "LinearSVM", "PLSDA")


@dataclass
class RunConfig:
    wavelet: str = "haar"
    j0: int = 1
    slope_window: tuple[int, int] = (3, 7)
    tau_window: tuple[int, int] | None = None  # None: same as slope_window
    q_primary: tuple[float, float] = PRIMARY_Q_RANGE
    q_fallback: tuple[float, float] = FALLBACK_Q_RANGE
    q_step: float = Q_STEP
    r2_min: float = R2_MIN
    alpha_tol: float = ALPHA_MONOTONE_TOL
    cut_level: float = -0.2
    truncate: int = 1024
    analyze_mode: str = "absorbance"
    seed: int = 20240101
    repeats: int = 4
    test_frac: float = 0.2
    cv_folds: int = 10
    search_budget: int = 32
    families: tuple[str, ...] = FAMILIES
    max_features: int | None = None  # None: the full descriptor ranking
    pca_max_components: int = 25
    min_category_size: int = 5
    workers: int = 1
    out: str = "out"

    def __post_init__(self):
        self.slope_window = tuple(int(v) for v in self.slope_window)
        if self.tau_window is not None:
            self.tau_window = tuple(int(v) for v in self.tau_window)
        self.q_primary = tuple(float(v) for v in self.q_primary)
        self.q_fallback = tuple(float(v) for v in self.q_fallback)
        self.families = tuple(self.families)
        unknown = set(self.families) - set(FAMILIES)
        if unknown:
            raise ValueError(f"unknown model families: {sorted(unknown)}")
        if self.slope_window[0] >= self.slope_window[1]:
            raise ValueError("slope_window must be increasing")
        if self.analyze_mode not in ("absorbance", "transmittance"):
            raise ValueError("analyze_mode must be absorbance or transmittance")
        if not 0.0 < self.test_frac < 1.0:
            raise ValueError("test_frac must lie in (0, 1)")

    @property
    def q_ranges(self):
        return (self.q_primary, self.q_fallback)

    @property
    def tau_range(self):
        return self.tau_window or self.slope_window

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        return {k: list(v) if isinstance(v, tuple) else v for k, v in d.items()}

    def replace(self, **changes) -> "RunConfig":
        changes = {k: v for k, v in changes.items() if v is not None}
        return dataclasses.replace(self, **changes)

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        flat = {}
        for key, value in (d or {}).items():
            # nested sections (e.g. ``analysis: {wavelet: ...}``) are flattened
            if isinstance(value, dict):
                flat.update(value)
            else:
                flat[key] = value
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(flat) - names
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**flat)

    @classmethod
    def load(cls, path) -> "RunConfig":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(yaml.safe_load(fh) or {})

    def dump(self, path) -> None:
        Path(path).write_text(yaml.safe_dump(self.to_dict(), sort_keys=False), encoding="utf-8")

