"""Stratified splitting, k-fold cross-validation and random hyperparameter search."""

from __future__ import annotations

import math

import numpy as np

from .models import _REGISTRY, ModelSpec

__all__ = [
    "stratified_split",
    "stratified_folds",
    "kfold_cv",
    "cv_scores",
    "sample_specs",
    "complexity",
    "hyperparam_search",
    "standardize_train_test",
    "child_seed",
    "seed_label",
]

C_RANGE = (1e-3, 1e3)
KNN_MAX = 25
PLS_MAX = 12


def _rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    if not isinstance(seed, np.random.SeedSequence):
        seed = np.random.SeedSequence(seed)
    return np.random.Generator(np.random.Philox(seed))


def child_seed(seed, *key) -> np.random.SeedSequence:
    """Deterministic sub-stream of ``seed`` (int or SeedSequence) named by ``key``."""
    if isinstance(seed, np.random.SeedSequence):
        return np.random.SeedSequence(seed.entropy, spawn_key=tuple(seed.spawn_key) + tuple(key))
    return np.random.SeedSequence(int(seed), spawn_key=tuple(key))


def seed_label(seed) -> str:
    """Printable identity of an int or SeedSequence seed."""
    if isinstance(seed, np.random.SeedSequence):
        key = "/".join(str(k) for k in seed.spawn_key)
        return f"{seed.entropy}" + (f"/{key}" if key else "")
    return str(int(seed))


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def stratified_split(labels, test_frac: float = 0.2, seed=0):
    """Per-class proportional split; every class keeps one sample on each side.

    Returns sorted ``(train_idx, test_idx)``.
    """
    labels = np.asarray(labels)
    if not 0.0 < test_frac < 1.0:
        raise ValueError("test_frac must lie in (0, 1)")
    rng = _rng(seed)
    train, test = [], []
    for c in np.unique(labels):
        idx = np.flatnonzero(labels == c)
        if len(idx) < 2:
            raise ValueError(f"class {c!r} has a single sample; cannot split")
        n_test = min(max(1, _round_half_up(test_frac * len(idx))), len(idx) - 1)
        perm = rng.permutation(idx)
        test.append(perm[:n_test])
        train.append(perm[n_test:])
    return np.sort(np.concatenate(train)), np.sort(np.concatenate(test))


def stratified_folds(labels, k: int = 10, seed=0) -> np.ndarray:
    """Fold id per sample, dealing each shuffled class round-robin over the folds."""
    labels = np.asarray(labels)
    n = len(labels)
    if n < k:
        raise ValueError(f"cannot make {k} folds from {n} samples")
    if k < 2:
        raise ValueError("need at least 2 folds")
    rng = _rng(seed)
    fold = np.empty(n, int)
    start = 0
    for c in np.unique(labels):
        idx = rng.permutation(np.flatnonzero(labels == c))
        # carry the offset across classes so fold sizes stay balanced
        fold[idx] = (start + np.arange(len(idx))) % k
        start += len(idx)
    return fold


def standardize_train_test(X_train, X_test):
    """z-score both sets with training means and sample standard deviations."""
    mu = X_train.mean(axis=0)
    sd = X_train.std(axis=0, ddof=1) if len(X_train) > 1 else np.ones(X_train.shape[1])
    sd = np.where(sd > 0, sd, 1.0)
    return (X_train - mu) / sd, (X_test - mu) / sd


def cv_scores(X, y, specs, k: int = 10, seed=0, folds=None) -> np.ndarray:
    """Mean held-out accuracy of every spec on the same stratified folds.

    Specs must share one family; candidates are trained together where the
    family supports it.  Each fold is standardized with its own training
    statistics.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y)
    if not specs:
        return np.zeros(0)
    family = specs[0].family
    if any(s.family != family for s in specs):
        raise ValueError("cv_scores expects specs of one family")
    cls = _REGISTRY[family]
    if folds is None:
        folds = stratified_folds(y, k, seed)
    params = [s.hyper for s in specs]
    n_folds = int(folds.max()) + 1
    parts = [standardize_train_test(X[folds != f], X[folds == f]) for f in range(n_folds)]
    fitted = cls.fit_folds([p[0] for p in parts], [y[folds != f] for f in range(n_folds)], params)
    acc = np.zeros((len(specs), n_folds))
    for f, models in enumerate(fitted):
        yte = y[folds == f]
        for i, (m, dec) in enumerate(zip(models, cls.decision_many(models, parts[f][1]))):
            acc[i, f] = np.mean(m.classes_[np.argmax(dec, axis=1)] == yte)
    return acc.mean(axis=1)


def kfold_cv(X, y, spec: ModelSpec, k: int = 10, seed=0) -> float:
    return float(cv_scores(X, y, [spec], k, seed)[0])


def sample_specs(family: str, budget: int, n_features: int, seed=0) -> list[ModelSpec]:
    """``budget`` seeded draws from the family's search space, duplicates removed."""
    if budget < 1:
        raise ValueError("budget must be at least 1")
    rng = _rng(seed)
    lo, hi = np.log(C_RANGE[0]), np.log(C_RANGE[1])
    out, seen = [], set()
    for _ in range(budget):
        if family == "KNN":
            spec = ModelSpec.of("KNN", n_neighbors=int(rng.integers(1, KNN_MAX + 1)), p=int(rng.integers(1, 3)))
        elif family == "LDA":
            spec = ModelSpec.of("LDA", shrinkage=float(rng.uniform(0.0, 1.0)))
        elif family == "Logit":
            spec = ModelSpec.of("Logit", C=float(np.exp(rng.uniform(lo, hi))), l1_ratio=float(rng.uniform(0.0, 1.0)))
        elif family == "LinearSVM":
            spec = ModelSpec.of("LinearSVM", C=float(np.exp(rng.uniform(lo, hi))))
        elif family == "PLSDA":
            spec = ModelSpec.of("PLSDA", n_components=int(rng.integers(1, min(PLS_MAX, n_features) + 1)))
        else:
            spec = ModelSpec.of(family)
        if spec not in seen:
            seen.add(spec)
            out.append(spec)
    return out


def complexity(spec: ModelSpec) -> float:
    """Larger means more flexible; used to break CV ties toward simpler models."""
    h = spec.hyper
    if spec.family == "KNN":
        return -h["n_neighbors"]
    if spec.family == "LDA":
        return -h["shrinkage"]
    if spec.family in ("Logit", "LinearSVM"):
        return h["C"]
    if spec.family == "PLSDA":
        return h["n_components"]
    return 0.0


def hyperparam_search(X, y, family: str, budget: int = 32, seed=0, k: int = 10):
    """Best spec by mean CV accuracy, plus its score.

    Candidates and folds are drawn from independent sub-streams of ``seed``.
    """
    specs = sample_specs(family, budget, np.asarray(X).shape[1], child_seed(seed, 0))
    scores = cv_scores(X, y, specs, k, child_seed(seed, 1))
    best = min(range(len(specs)), key=lambda i: (-scores[i], complexity(specs[i]), i))
    return specs[best], float(scores[best])
