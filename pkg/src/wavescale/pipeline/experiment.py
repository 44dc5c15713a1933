"""End-to-end experiment: ingest, preprocess, describe, rank, classify, report.

Every artifact embeds the resolved configuration and master seed.  Outputs
depend only on the configuration and inputs, so a rerun reproduces them
byte for byte.
"""

from __future__ import annotations

import logging
import time
import zlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .. import __version__
from ..classify import FAMILIES, best_report, child_seed, feature_curve, pca_curve, seed_label
from ..config import RunConfig
from ..descriptors import DESCRIPTOR_NAMES, extract_descriptors
from ..multifractal import SpectrumUnavailable, multifractal_spectrum
from ..spectrum import DegenerateSpectrumError, fit_spectrum_slope, wavelet_spectrum
from ..stats import kde, rank_descriptors
from ..synth import RNG_NAME, FbmSpec, gen_fbm
from ..wavelets import dwt
from . import io
from .preprocess import (
    StageTrace,
    categorize,
    clean_and_average,
    filter_trait_outliers,
    standardize,
    to_absorbance,
    truncate_pow2,
)

__all__ = ["STAGES", "ExperimentResult", "run_experiment", "make_surrogate", "artifact_meta"]

log = logging.getLogger(__name__)

STAGES = ("descriptors", "rank", "classify", "all")
KDE_PLOT_POINTS = 128
PLOT_EXAMPLES = 3

NOTES = [
    "hyperparameters chosen by seeded random search over a fixed space",
    "gradient boosting and kernel SVM families are not implemented",
    "descriptors computed per sample on unstandardized spectra, then averaged per animal",
    "PCA baseline uses standardized spectra; standardization and PCA refitted on each training split",
]


@dataclass
class ExperimentResult:
    out_dir: Path
    files: dict[str, Path] = field(default_factory=dict)
    summary: dict = field(default_factory=dict)

    @property
    def hard_errors(self) -> list[dict]:
        return [e for e in self.summary.get("errors", []) if e.get("hard")]


def artifact_meta(cfg: RunConfig) -> dict:
    return {"config": cfg.to_dict(), "seed": cfg.seed, "rng": RNG_NAME, "package": f"wavescale {__version__}"}


def _mqp_seed(cfg: RunConfig, mqp: str):
    # keyed by name so results do not depend on column order
    return child_seed(cfg.seed, zlib.crc32(mqp.encode("utf-8")))


def _pmap(fn, items, workers: int):
    if workers <= 1 or len(items) < 2:
        return [fn(it) for it in items]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def _describe_one(job):
    signal, cfg_dict = job
    try:
        d = extract_descriptors(signal, RunConfig.from_dict(cfg_dict))
    except Exception as exc:  # counted and reported, never dropped silently
        return np.full(len(DESCRIPTOR_NAMES), np.nan), "", "", f"{type(exc).__name__}: {exc}"
    return d.values(), d.q_range_used, ";".join(sorted(d.flags)), ""


def _curve_job(job):
    kind, mqp, family, X, y, ranking, names, seed, cfg_dict = job
    cfg = RunConfig.from_dict(cfg_dict)
    common = dict(mqp=mqp, repeats=cfg.repeats, seed=seed, budget=cfg.search_budget,
                  folds=cfg.cv_folds, test_frac=cfg.test_frac)
    try:
        if kind == "descriptors":
            return feature_curve(X, y, ranking, family, names=names, max_features=cfg.max_features, **common), ""
        return pca_curve(X, y, family, max_components=cfg.pca_max_components, **common), ""
    except Exception as exc:
        return [], f"{type(exc).__name__}: {exc}"


def _analysis_values(table, cfg: RunConfig):
    if cfg.analyze_mode == table.mode:
        return table
    if cfg.analyze_mode == "absorbance":
        return to_absorbance(table)
    return table.with_values(10.0 ** (-table.values), mode="transmittance")


def _fig2_rows(signals, ids, cfg: RunConfig):
    wav, mf = [], []
    for sid, x in zip(ids, signals):
        decomp = dwt(x, cfg.wavelet, cfg.j0)
        spec = wavelet_spectrum(decomp)
        try:
            fit = fit_spectrum_slope(spec, *cfg.slope_window)
        except DegenerateSpectrumError:
            fit = None
        lo, hi = cfg.slope_window
        for j, e in spec.rows():
            line = fit.intercept + fit.slope * j if fit is not None and lo <= j <= hi else float("nan")
            wav.append((sid, j, e, line))
        try:
            mfs = multifractal_spectrum(decomp, cfg.tau_range, ranges=cfg.q_ranges, step=cfg.q_step,
                                        r2_min=cfg.r2_min, alpha_tol=cfg.alpha_tol)
        except SpectrumUnavailable:
            continue
        for q, tau, a, f in mfs.rows():
            mf.append((sid, mfs.q_range_used, q, tau, a, f))
    return wav, mf


def _category_stats(mqp, labels, D):
    rows = []
    for c in sorted(set(labels)):
        sel = D[labels == c]
        row = [mqp, c, len(sel)]
        for k in range(D.shape[1]):
            v = sel[:, k]
            v = v[np.isfinite(v)]
            row += [v.mean() if v.size else np.nan, v.std(ddof=1) if v.size > 1 else np.nan]
        rows.append(row)
    return rows


def _kde_rows(mqp, labels, D, cats):
    rows = []
    for k, name in enumerate(DESCRIPTOR_NAMES):
        for c in cats:
            v = D[labels == c, k]
            v = v[np.isfinite(v)]
            if v.size < 2 or np.all(v == v[0]):
                continue
            est = kde(v, points=KDE_PLOT_POINTS)
            rows += [(mqp, name, c, x, y) for x, y in zip(est.grid, est.density)]
    return rows


def run_experiment(cfg: RunConfig, spectra_path, traits_path=None, *, mode: str = "transmittance",
                   stop_after: str = "all", out=None) -> ExperimentResult:
    """Run the experiment up to ``stop_after`` and write its artifacts.

    Stages: ``descriptors`` (per-sample descriptor table), ``rank``
    (adds averaging, categorization, rankings and category statistics),
    ``classify`` (adds descriptor accuracy curves) and ``all`` (adds the
    PCA baseline, the best-model table and plot data).  Input errors
    raise; per-sample, per-trait and per-model failures are recorded in
    ``summary.json`` and counted.
    """
    if stop_after not in STAGES:
        raise ValueError(f"stop_after must be one of {STAGES}")
    level = STAGES.index(stop_after)
    if level >= 1 and traits_path is None:
        raise ValueError(f"stage {stop_after!r} needs a traits file")
    out_dir = Path(out or cfg.out)
    meta = artifact_meta(cfg)
    result = ExperimentResult(out_dir)
    errors: list[dict] = []
    skipped: list[dict] = []
    trace = StageTrace()
    t0 = time.perf_counter()

    raw = io.load_spectra_csv(spectra_path, mode)
    trace.add("ingest", "samples", len(raw), len(raw), {"channels": len(raw.wavenumbers)})
    spectra = _analysis_values(raw, cfg)
    signals = truncate_pow2(spectra.values, cfg.truncate)

    # per-sample descriptors on unstandardized spectra
    cfg_dict = cfg.to_dict()
    rows = _pmap(_describe_one, [(x, cfg_dict) for x in signals], cfg.workers)
    D = np.array([r[0] for r in rows])
    failed = [i for i, r in enumerate(rows) if r[3]]
    for i in failed:
        errors.append({"stage": "descriptors", "item": spectra.sample_id[i], "error": rows[i][3], "hard": False})
    mf_missing = sum("multifractal_unavailable" in r[2] for r in rows)
    trace.add("descriptor_extraction", "samples", len(spectra), len(spectra) - len(failed),
              {"multifractal_unavailable": mf_missing,
               "q_fallback": sum("q_fallback" in r[2] for r in rows)})
    log.info("descriptors: %d samples in %.1fs", len(spectra), time.perf_counter() - t0)
    header = ["sample_id", "animal_id", *DESCRIPTOR_NAMES, "q_range_used", "flags", "error"]
    result.files["descriptors"] = io.write_csv(
        out_dir / "descriptors.csv", header,
        [[sid, aid, *D[i], r[1], r[2], r[3]]
         for i, (sid, aid, r) in enumerate(zip(spectra.sample_id, spectra.animal_id, rows))], meta)

    if level >= 1:
        traits = io.load_traits_csv(traits_path)
        averaged, traits, D_animal = clean_and_average(spectra, traits, D, trace)
        std_spectra = standardize(averaged, trace)
        traits = filter_trait_outliers(traits, trace=trace)
        result.files["descriptors_animal"] = io.write_csv(
            out_dir / "descriptors_animal.csv", ["animal_id", *DESCRIPTOR_NAMES],
            [[a, *D_animal[i]] for i, a in enumerate(averaged.animal_id)], meta)

        rankings, stats_rows, kde_rows, jobs, labelled = {}, [], [], [], {}
        for mqp in traits.names:
            col = traits.column(mqp)
            n_animals = len(col)
            if not np.isfinite(col).any():
                skipped.append({"mqp": mqp, "reason": "no trait values"})
                trace.add(f"categorize:{mqp}", "animals", n_animals, 0)
                continue
            try:
                labels = categorize(col, mqp)
                trace.add(f"categorize:{mqp}", "animals", n_animals, int((labels != "").sum()))
                have = labels != ""
                ranking = rank_descriptors(D_animal[have], labels[have], mqp, min_size=cfg.min_category_size)
            except ValueError as exc:
                skipped.append({"mqp": mqp, "reason": str(exc)})
                continue
            rankings[mqp] = ranking
            stats_rows += _category_stats(mqp, labels[have], D_animal[have])
            kde_rows += _kde_rows(mqp, labels[have], D_animal[have], ranking.categories)
            in_cats = np.isin(labels, ranking.categories)
            complete = in_cats & np.isfinite(D_animal).all(axis=1)
            trace.add(f"classification_rows:{mqp}", "animals", int(have.sum()), int(complete.sum()),
                      {"excluded_categories": int((have & ~in_cats).sum()),
                       "incomplete_descriptors": int((in_cats & ~complete).sum())})
            labelled[mqp] = (labels, in_cats, complete)
            seed = _mqp_seed(cfg, mqp)
            if level >= 2:
                for fam in cfg.families:
                    jobs.append(("descriptors", mqp, fam, D_animal[complete], labels[complete],
                                 ranking.names, list(DESCRIPTOR_NAMES), seed, cfg_dict))
            if level >= 3:
                for fam in cfg.families:
                    jobs.append(("pca", mqp, fam, std_spectra.values[in_cats], labels[in_cats],
                                 None, None, seed, cfg_dict))

        result.files["rankings"] = io.write_json(out_dir / "rankings.json", {
            **meta, "rankings": {k: r.to_dict() for k, r in rankings.items()}, "skipped": skipped})
        stat_header = ["mqp", "category", "n"] + [f"{n}_{s}" for n in DESCRIPTOR_NAMES for s in ("mean", "std")]
        result.files["category_stats"] = io.write_csv(out_dir / "category_stats.csv", stat_header, stats_rows, meta)
        result.files["fig4_kde"] = io.write_csv(
            out_dir / "fig4_kde.csv", ["mqp", "descriptor", "category", "x", "density"], kde_rows, meta)

        if jobs:
            t1 = time.perf_counter()
            outcomes = _pmap(_curve_job, jobs, cfg.workers)
            log.info("classification: %d curves in %.1fs", len(jobs), time.perf_counter() - t1)
            curves = {}
            for job, (reports, err) in zip(jobs, outcomes):
                kind, mqp, fam = job[:3]
                if err:
                    errors.append({"stage": f"classify:{kind}", "item": f"{mqp}/{fam}", "error": err, "hard": False})
                curves[(kind, mqp, fam)] = reports
            _write_classification(out_dir, result, curves, rankings, meta)

        if level >= 3:
            picks = list(range(min(PLOT_EXAMPLES, len(signals))))
            wav, mf = _fig2_rows(signals[picks], [spectra.sample_id[i] for i in picks], cfg)
            result.files["fig2a"] = io.write_csv(
                out_dir / "fig2a_wavelet_spectrum.csv", ["sample_id", "j", "log2_energy", "fit"], wav, meta)
            result.files["fig2b"] = io.write_csv(
                out_dir / "fig2b_multifractal_spectrum.csv",
                ["sample_id", "q_range", "q", "tau", "alpha", "f_alpha"], mf, meta)

    summary = {
        **meta,
        "stop_after": stop_after,
        "input": {"spectra": str(spectra_path), "traits": None if traits_path is None else str(traits_path),
                  "mode": mode, "analyze_mode": cfg.analyze_mode},
        "stages": trace.stages,
        "trace": trace.to_list(),
        "errors": errors,
        "error_counts": {"hard": sum(e["hard"] for e in errors), "soft": sum(not e["hard"] for e in errors)},
        "skipped": skipped,
        "notes": NOTES,
        "files": sorted(p.name for p in result.files.values()) + ["summary.json"],
    }
    result.summary = summary
    result.files["summary"] = io.write_json(out_dir / "summary.json", summary)
    log.info("run finished in %.1fs", time.perf_counter() - t0)
    return result


def _write_classification(out_dir, result, curves, rankings, meta):
    curve_rows, report_dump, table = [], [], []
    for (kind, mqp, fam), reports in curves.items():
        for r in reports:
            curve_rows.append([mqp, kind, fam, r.feature_count, r.train_acc_mean, r.train_acc_std,
                               r.test_acc_mean, r.test_acc_std, r.repeats, " ".join(r.features)])
            report_dump.append(r.to_dict())
    result.files["fig5_curves"] = io.write_csv(
        out_dir / "fig5_accuracy_curves.csv",
        ["mqp", "feature_set", "family", "feature_count", "train_acc_mean", "train_acc_std",
         "test_acc_mean", "test_acc_std", "repeats", "features"], curve_rows, meta)
    result.files["eval_reports"] = io.write_json(out_dir / "eval_reports.json", {**meta, "reports": report_dump})

    for mqp in rankings:
        row = [mqp]
        for kind in ("descriptors", "pca"):
            pool = [r for (k, m, _), reps in curves.items() if k == kind and m == mqp for r in reps]
            if pool:
                b = best_report(pool)
                row += [b.family, b.acc_text(), b.test_acc_mean, b.test_acc_std, b.feature_count]
            else:
                row += ["", "", np.nan, np.nan, ""]
        row.append(" ".join(rankings[mqp].names))
        table.append(row)
    result.files["table3"] = io.write_csv(
        out_dir / "table3.csv",
        ["mqp", "descriptor_model", "descriptor_accuracy", "descriptor_test_mean", "descriptor_test_std",
         "descriptor_count", "pca_model", "pca_accuracy", "pca_test_mean", "pca_test_std", "pca_components",
         "descriptor_order"], table, meta)


def make_surrogate(out_dir, *, n_per_class: int = 100, n: int = 1024, hursts=(0.4, 0.6), seed: int = 0,
                   trait: str = "H"):
    """Write a two-file surrogate dataset of fBm "spectra" labelled by Hurst exponent.

    Each path ``x`` is stored as transmittance ``10**-(1 + 0.1 z)`` with
    ``z`` the standardized path, so absorbance conversion recovers an
    affine copy of the fBm.  The traits file holds the true exponent.
    """
    out_dir = Path(out_dir)
    wn = 925.0 + np.arange(n) * (4080.0 / n)
    rows, trait_rows = [], []
    for c, h in enumerate(hursts):
        for i in range(n_per_class):
            x = gen_fbm(FbmSpec(h, n, int(child_seed(seed, c, i).generate_state(1)[0])))
            z = (x - x.mean()) / x.std()
            sid = f"s{c}_{i:04d}"
            aid = f"a{c}_{i:04d}"
            rows.append([sid, aid, *(10.0 ** -(1.0 + 0.1 * z))])
            trait_rows.append([aid, h])
    spectra = io.write_csv(out_dir / "spectra.csv", ["sample_id", "animal_id", *map(io.fmt, wn)], rows)
    traits = io.write_csv(out_dir / "traits.csv", ["animal_id", trait], trait_rows)
    return spectra, traits
