"""Repeated split / search / fit / score runs and successive-feature curves."""

from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, field

import numpy as np

from .models import fit
from .pca import pca_fit, pca_transform
from .selection import (child_seed, hyperparam_search, seed_label, standardize_train_test,
                        stratified_split)

__all__ = ["EvalReport", "RepeatResult", "repeat_splits", "evaluate_repeats", "feature_curve", "pca_curve", "best_report"]

log = logging.getLogger(__name__)


@dataclass
class RepeatResult:
    repeat: int
    spec: str
    cv_acc: float
    train_acc: float
    test_acc: float
    n_train: int
    n_test: int


@dataclass
class EvalReport:
    """Accuracy summary for one (trait, family, feature count).

    Standard deviations are sample standard deviations over repeats
    (zero for a single repeat).
    """

    mqp: str
    family: str
    feature_count: int
    train_acc_mean: float
    train_acc_std: float
    test_acc_mean: float
    test_acc_std: float
    repeats: int
    seeds: list[str]
    feature_set: str = "descriptors"
    features: list[str] = field(default_factory=list)
    per_repeat: list[RepeatResult] = field(default_factory=list)

    @classmethod
    def from_repeats(cls, mqp, family, features, results, seeds, feature_set="descriptors"):
        tr = np.array([r.train_acc for r in results])
        te = np.array([r.test_acc for r in results])
        ddof = 1 if len(results) > 1 else 0
        return cls(mqp, family, len(features), float(tr.mean()), float(tr.std(ddof=ddof)),
                   float(te.mean()), float(te.std(ddof=ddof)), len(results), list(seeds),
                   feature_set, list(features), list(results))

    def acc_text(self) -> str:
        return f"{self.test_acc_mean:.2f}±{self.test_acc_std:.2f}"

    def to_dict(self) -> dict:
        d = asdict(self)
        d["per_repeat"] = [asdict(r) for r in self.per_repeat]
        return d


def _one_repeat(Xtr, ytr, Xte, yte, family, budget, folds, seed):
    spec, cv = hyperparam_search(Xtr, ytr, family, budget, seed, folds)
    Ztr, Zte = standardize_train_test(Xtr, Xte)
    model = fit(spec, Ztr, ytr)
    return spec, cv, float(np.mean(model.predict(Ztr) == ytr)), float(np.mean(model.predict(Zte) == yte))


def repeat_splits(y, repeats: int, seed: int, test_frac: float = 0.2):
    """The ``repeats`` stratified splits shared by every family and feature count."""
    return [stratified_split(y, test_frac, child_seed(seed, r, 0)) for r in range(repeats)]


def evaluate_repeats(X, y, family: str, *, mqp: str = "", features=None, repeats: int = 4,
                     seed: int = 0, budget: int = 32, folds: int = 10, test_frac: float = 0.2,
                     splits=None, feature_set: str = "descriptors") -> EvalReport:
    """Split, search, fit and score ``repeats`` times on the columns of ``X``."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y)
    features = list(features) if features is not None else [f"x{i}" for i in range(X.shape[1])]
    splits = splits or repeat_splits(y, repeats, seed, test_frac)
    results = []
    for r, (tr, te) in enumerate(splits):
        spec, cv, a_tr, a_te = _one_repeat(X[tr], y[tr], X[te], y[te], family, budget, folds,
                                           child_seed(seed, r, 1))
        results.append(RepeatResult(r, spec.label(), cv, a_tr, a_te, len(tr), len(te)))
    return EvalReport.from_repeats(mqp, family, features, results, [seed_label(seed)], feature_set)


def feature_curve(X, y, ranking, family: str, *, names, mqp: str = "", repeats: int = 4,
                  seed: int = 0, budget: int = 32, folds: int = 10, test_frac: float = 0.2,
                  max_features: int | None = None) -> list[EvalReport]:
    """Accuracy as ranked descriptors are added one at a time.

    ``X`` holds one column per entry of ``names``; ``ranking`` lists the
    same names, most significant first.  Splits and search seeds depend
    only on ``seed`` and the repeat index, so the last point equals a
    direct run on the full ranked feature set.
    """
    names = list(names)
    order = [names.index(n) for n in ranking]
    if sorted(order) != list(range(len(names))):
        raise ValueError("ranking must cover every descriptor exactly once")
    X = np.asarray(X, dtype=float)[:, order]
    y = np.asarray(y)
    splits = repeat_splits(y, repeats, seed, test_frac)
    top = len(order) if max_features is None else min(max_features, len(order))
    out = []
    for k in range(1, top + 1):
        out.append(evaluate_repeats(X[:, :k], y, family, mqp=mqp, features=list(ranking)[:k],
                                    repeats=repeats, seed=seed, budget=budget, folds=folds,
                                    splits=splits))
    return out


def pca_curve(spectra, y, family: str, *, mqp: str = "", max_components: int = 25,
              repeats: int = 4, seed: int = 0, budget: int = 32, folds: int = 10,
              test_frac: float = 0.2) -> list[EvalReport]:
    """Baseline curve on leading principal components of standardized spectra.

    Standardization and PCA are fitted on each training split only.
    """
    S = np.asarray(spectra, dtype=float)
    y = np.asarray(y)
    splits = repeat_splits(y, repeats, seed, test_frac)
    scores = []
    for tr, te in splits:
        Ztr, Zte = standardize_train_test(S[tr], S[te])
        ncomp = min(max_components, len(tr) - 1, S.shape[1])
        proj = pca_fit(Ztr, ncomp)
        scores.append((pca_transform(proj, Ztr), pca_transform(proj, Zte)))
    top = min(sc[0].shape[1] for sc in scores)
    out = []
    for k in range(1, top + 1):
        results = []
        for r, ((tr, te), (Ptr, Pte)) in enumerate(zip(splits, scores)):
            spec, cv, a_tr, a_te = _one_repeat(Ptr[:, :k], y[tr], Pte[:, :k], y[te], family,
                                               budget, folds, child_seed(seed, r, 1))
            results.append(RepeatResult(r, spec.label(), cv, a_tr, a_te, len(tr), len(te)))
        out.append(EvalReport.from_repeats(mqp, family, [f"PC{i + 1}" for i in range(k)],
                                           results, [seed_label(seed)], "pca"))
    return out


def best_report(reports) -> EvalReport:
    """Highest mean test accuracy; ties go to fewer features, then list order."""
    return min(reports, key=lambda r: (-r.test_acc_mean, r.feature_count))
