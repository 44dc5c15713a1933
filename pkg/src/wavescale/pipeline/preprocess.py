"""Spectra and trait preprocessing, in the order the experiment applies it.

zero removal -> per-animal averaging -> per-channel standardization ->
trait outlier filter.  Each stage appends a row-count record to a
:class:`StageTrace`.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .io import SpectraTable, TraitTable

__all__ = [
    "TRAIT_IDS",
    "QUARTILE_TRAITS",
    "MEDIAN_TRAITS",
    "PreprocessError",
    "StageRecord",
    "StageTrace",
    "to_absorbance",
    "remove_zero_traits",
    "clean_and_average",
    "standardize",
    "filter_trait_outliers",
    "categorize",
    "category_names",
    "truncate_pow2",
]

log = logging.getLogger(__name__)

TRAIT_IDS = ("RCT", "k20", "a30", "a60", "CMS", "pH", "HS",
             "aS1-CN", "aS2-CN", "b-CN", "k-CN", "a-LA", "b-LGA", "b-LGB",
             "TLC", "TUC", "TFC", "TPC")
QUARTILE_TRAITS = ("aS1-CN", "aS2-CN", "b-CN", "k-CN", "a-LA", "b-LGA", "b-LGB", "TPC")
MEDIAN_TRAITS = tuple(t for t in TRAIT_IDS if t not in QUARTILE_TRAITS)


class PreprocessError(ValueError):
    pass


@dataclass(frozen=True)
class StageRecord:
    stage: str
    unit: str
    n_in: int
    n_used: int
    n_dropped: int
    detail: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.n_in != self.n_used + self.n_dropped:
            raise AssertionError(f"{self.stage}: {self.n_in} != {self.n_used} + {self.n_dropped}")


@dataclass
class StageTrace:
    records: list[StageRecord] = field(default_factory=list)

    def add(self, stage, unit, n_in, n_used, detail=None) -> StageRecord:
        rec = StageRecord(stage, unit, int(n_in), int(n_used), int(n_in - n_used), dict(detail or {}))
        self.records.append(rec)
        log.info("%s: %d %s in, %d used, %d dropped", stage, n_in, unit, n_used, n_in - n_used)
        return rec

    @property
    def stages(self) -> list[str]:
        return [r.stage for r in self.records]

    def to_list(self) -> list[dict]:
        return [dict(stage=r.stage, unit=r.unit, n_in=r.n_in, n_used=r.n_used,
                     n_dropped=r.n_dropped, **({"detail": r.detail} if r.detail else {}))
                for r in self.records]


def to_absorbance(table: SpectraTable) -> SpectraTable:
    """A = log10(1/T) per cell."""
    if table.mode != "transmittance":
        raise PreprocessError(f"expected transmittance input, got {table.mode}")
    bad = np.argwhere(~(table.values > 0))
    if bad.size:
        i, j = bad[0]
        raise PreprocessError(
            f"non-positive transmittance {table.values[i, j]!r} at sample "
            f"{table.sample_id[i]!r} (row {i + 2}), channel {j + 1} "
            f"({table.wavenumbers[j]:g} cm-1); {len(bad)} such cells"
        )
    return table.with_values(-np.log10(table.values), mode="absorbance")


def remove_zero_traits(traits: TraitTable, trace: StageTrace | None = None) -> TraitTable:
    """Zero trait values are unrecorded measurements; mark them missing."""
    out = {}
    for name, col in traits.traits.items():
        col = col.copy()
        present = np.isfinite(col)
        zero = present & (col == 0)
        col[zero] = np.nan
        out[name] = col
        if trace is not None:
            trace.add(f"zero_removal:{name}", "animals", present.sum(), present.sum() - zero.sum())
    return TraitTable(list(traits.animal_id), out)


def _group_mean(keys, values):
    order = list(dict.fromkeys(keys))
    pos = {k: i for i, k in enumerate(order)}
    idx = np.array([pos[k] for k in keys])
    counts = np.bincount(idx, minlength=len(order))
    sums = np.zeros((len(order),) + values.shape[1:])
    np.add.at(sums, idx, values)
    return order, sums / counts.reshape((-1,) + (1,) * (values.ndim - 1)), counts


def _nanmean_by(keys, col):
    order = list(dict.fromkeys(keys))
    out = np.full(len(order), np.nan)
    for i, k in enumerate(order):
        v = col[[j for j, kk in enumerate(keys) if kk == k]]
        v = v[np.isfinite(v)]
        if v.size:
            out[i] = v.mean()
    return order, out


def clean_and_average(spectra: SpectraTable, traits: TraitTable, descriptors=None,
                      trace: StageTrace | None = None):
    """Zero removal, then one row per animal.

    Animals with several spectra get the arithmetic mean spectrum (and the
    mean of any per-sample ``descriptors`` rows, NaNs ignored per column).
    Animals present in only one of the two tables are dropped and logged.

    Returns ``(spectra, traits, descriptors)`` aligned on animal.
    """
    trace = trace if trace is not None else StageTrace()
    traits = remove_zero_traits(traits, trace)

    # duplicate trait rows for one animal are averaged too
    t_animals = list(traits.animal_id)
    if len(set(t_animals)) != len(t_animals):
        merged = {}
        for name, col in traits.traits.items():
            order, merged[name] = _nanmean_by(t_animals, col)
        traits = TraitTable(order, merged)
        t_animals = order

    animals, mean_spec, counts = _group_mean(list(spectra.animal_id), spectra.values)
    has_traits = set(t_animals)
    keep = [a for a in animals if a in has_traits]
    for a in animals:
        if a not in has_traits:
            log.warning("animal %s has spectra but no trait row; dropped", a)
    for a in t_animals:
        if a not in set(animals):
            log.warning("animal %s has traits but no spectra; dropped", a)
    trace.add("averaging", "samples", len(spectra), int(sum(c for a, c in zip(animals, counts) if a in has_traits)),
              {"animals_out": len(keep)})

    rows = [animals.index(a) for a in keep]
    out_spec = SpectraTable(keep, keep, spectra.wavenumbers, mean_spec[rows], spectra.mode, dict(spectra.flags))
    t_pos = {a: i for i, a in enumerate(t_animals)}
    t_rows = [t_pos[a] for a in keep]
    out_traits = TraitTable(keep, {k: v[t_rows] for k, v in traits.traits.items()})

    out_desc = None
    if descriptors is not None:
        D = np.asarray(descriptors, dtype=float)
        keys = list(spectra.animal_id)
        cols = [_nanmean_by(keys, D[:, k])[1] for k in range(D.shape[1])]
        out_desc = np.column_stack(cols)[rows] if cols else np.zeros((len(keep), 0))
    return out_spec, out_traits, out_desc


def standardize(spectra: SpectraTable, trace: StageTrace | None = None) -> SpectraTable:
    """Per-channel z-score with the sample (n-1) standard deviation.

    Constant channels are centred only and listed in ``flags["constant_channels"]``.
    """
    X = spectra.values
    if len(X) < 2:
        raise PreprocessError("standardize needs at least 2 samples")
    mu = X.mean(axis=0)
    sd = X.std(axis=0, ddof=1)
    # relative threshold so an already standardized table maps to itself
    const = sd <= 1e-12 * np.maximum(1.0, np.abs(mu))
    Z = (X - mu) / np.where(const, 1.0, sd)
    Z[:, const] = 0.0
    flags = dict(spectra.flags)
    flags["constant_channels"] = [int(j) for j in np.flatnonzero(const)]
    if trace is not None:
        trace.add("standardization", "channels", X.shape[1], X.shape[1],
                  {"constant_channels": int(const.sum())})
    return spectra.with_values(Z, flags=flags)


def filter_trait_outliers(traits: TraitTable, k: float = 3.0, trace: StageTrace | None = None) -> TraitTable:
    """Single pass: drop values more than ``k`` sample standard deviations from the mean."""
    out = {}
    for name, col in traits.traits.items():
        col = col.copy()
        ok = np.isfinite(col)
        n = int(ok.sum())
        if n >= 3:
            v = col[ok]
            mu, sd = v.mean(), v.std(ddof=1)
            far = ok & (np.abs(col - mu) > k * sd)
            col[far] = np.nan
        out[name] = col
        if trace is not None:
            trace.add(f"outlier_filter:{name}", "animals", n, int(np.isfinite(col).sum()))
    return TraitTable(list(traits.animal_id), out)


def category_names(mqp: str) -> tuple[str, ...]:
    if mqp in QUARTILE_TRAITS:
        return ("Q1", "Q2", "Q3", "Q4")
    return ("QLow", "QHigh")


def categorize(values, mqp: str) -> np.ndarray:
    """Category label per value; NaN values get ``""``.

    Median split for most traits, quartiles for the protein traits and TPC.
    A value equal to a boundary goes to the lower category.  Traits outside
    the known list are median split.
    """
    x = np.asarray(values, dtype=float)
    ok = np.isfinite(x)
    v = x[ok]
    if v.size == 0:
        raise PreprocessError(f"{mqp}: no values to categorize")
    if np.all(v == v[0]):
        raise PreprocessError(f"{mqp}: all values equal; cannot categorize")
    names = category_names(mqp)
    if len(names) == 4:
        bounds = np.percentile(v, [25, 50, 75])
    else:
        bounds = np.array([np.median(v)])
    idx = np.searchsorted(bounds, v, side="left")
    out = np.full(len(x), "", dtype=object)
    out[ok] = np.array(names, dtype=object)[idx]
    return out


def truncate_pow2(spectrum, length: int = 1024) -> np.ndarray:
    """Leading ``length`` channels (last axis)."""
    x = np.asarray(spectrum, dtype=float)
    if length < 2 or length & (length - 1):
        raise PreprocessError(f"length must be a power of two, got {length}")
    if x.shape[-1] < length:
        raise PreprocessError(f"spectrum has {x.shape[-1]} channels, need at least {length}")
    return x[..., :length]
