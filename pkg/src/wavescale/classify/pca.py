"""PCA by eigendecomposition of the training covariance."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["PcaProjection", "pca_fit", "pca_transform", "pca_inverse"]


@dataclass(frozen=True)
class PcaProjection:
    mean: np.ndarray
    components: np.ndarray  # (n_components, features), rows are unit loadings
    eigenvalues: np.ndarray
    total_variance: float

    @property
    def explained_ratio(self) -> np.ndarray:
        return self.eigenvalues / self.total_variance


def pca_fit(X, n_components: int) -> PcaProjection:
    """Leading principal axes of ``X``.

    Components are sorted by decreasing eigenvalue and each is signed so
    its largest-magnitude loading is positive.
    """
    X = np.asarray(X, dtype=float)
    n, p = X.shape
    if not 1 <= n_components <= min(n - 1, p):
        raise ValueError(f"n_components must lie in [1, {min(n - 1, p)}], got {n_components}")
    mean = X.mean(axis=0)
    Xc = X - mean
    if p <= n:
        evals, evecs = np.linalg.eigh(Xc.T @ Xc / (n - 1))
        order = np.argsort(evals)[::-1][:n_components]
        comps = evecs[:, order].T
        evals = evals[order]
    else:
        # wide data: eigendecompose the Gram matrix and map back
        g_evals, g_vecs = np.linalg.eigh(Xc @ Xc.T / (n - 1))
        order = np.argsort(g_evals)[::-1][:n_components]
        evals = g_evals[order]
        comps = (Xc.T @ g_vecs[:, order]).T
        comps /= np.linalg.norm(comps, axis=1, keepdims=True)
    lead = np.argmax(np.abs(comps), axis=1)
    comps *= np.sign(comps[np.arange(len(comps)), lead])[:, None]
    total = float((Xc * Xc).sum() / (n - 1))
    return PcaProjection(mean, comps, np.clip(evals, 0.0, None), total)


def pca_transform(proj: PcaProjection, X) -> np.ndarray:
    return (np.asarray(X, dtype=float) - proj.mean) @ proj.components.T


def pca_inverse(proj: PcaProjection, scores) -> np.ndarray:
    return np.asarray(scores) @ proj.components + proj.mean
