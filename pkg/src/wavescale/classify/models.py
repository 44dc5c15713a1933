"""Seven small classifiers written directly in numpy.

Every model stores the sorted class labels in ``classes_`` and resolves
score ties toward the lowest class index, so predictions are fully
determined by the data.  Inputs are assumed standardized by the caller.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

__all__ = [
    "FAMILIES",
    "ModelSpec",
    "SingularCovarianceError",
    "Classifier",
    "KNN",
    "GNB",
    "LDA",
    "QDA",
    "Logit",
    "LinearSVM",
    "PLSDA",
    "make_model",
    "fit",
    "predict",
]

log = logging.getLogger(__name__)

MAX_ITER = 5000
QDA_SHRINKAGE = 1e-3
COV_EPS = 1e-6  # PLS stops adding components below this relative covariance


class SingularCovarianceError(np.linalg.LinAlgError):
    pass


@dataclass(frozen=True)
class ModelSpec:
    family: str
    params: tuple = ()

    def __post_init__(self):
        if self.family not in _REGISTRY:
            raise ValueError(f"unknown model family {self.family!r}")
        p = dict(self.params)
        _REGISTRY[self.family].check(p)
        object.__setattr__(self, "params", tuple(sorted(p.items())))

    @classmethod
    def of(cls, family: str, **params) -> "ModelSpec":
        return cls(family, tuple(params.items()))

    @property
    def hyper(self) -> dict:
        return dict(self.params)

    def label(self) -> str:
        if not self.params:
            return self.family
        inner = ",".join(f"{k}={v:.4g}" if isinstance(v, float) else f"{k}={v}" for k, v in self.params)
        return f"{self.family}({inner})"


class Classifier:
    """Base class: label encoding and argmax prediction."""

    converged: bool = True

    def __init__(self, **params):
        self.params = params

    @staticmethod
    def check(params: dict) -> None:
        if params:
            raise ValueError(f"unexpected hyperparameters {sorted(params)}")

    def fit(self, X, y):
        X = np.asarray(X, dtype=float)
        if not np.all(np.isfinite(X)):
            raise ValueError("inputs contain missing or infinite values")
        self.classes_, yi = np.unique(np.asarray(y), return_inverse=True)
        self._fit(X, yi)
        return self

    @classmethod
    def fit_many(cls, X, y, params: list[dict]) -> list["Classifier"]:
        """Fit one model per hyperparameter map on the same data."""
        return [cls(**p).fit(X, y) for p in params]

    @classmethod
    def fit_folds(cls, Xs, ys, params: list[dict]) -> list[list["Classifier"]]:
        """``fit_many`` on every (train set, labels) pair, e.g. the folds of a CV."""
        return [cls.fit_many(X, y, params) for X, y in zip(Xs, ys)]

    @staticmethod
    def decision_many(models, X) -> list[np.ndarray]:
        return [m.decision(X) for m in models]

    def decision(self, X) -> np.ndarray:
        raise NotImplementedError

    def predict(self, X) -> np.ndarray:
        # argmax returns the first maximum, i.e. the lowest class index
        return self.classes_[np.argmax(self.decision(np.asarray(X, dtype=float)), axis=1)]


def _one_hot(yi, k):
    Y = np.zeros((len(yi), k))
    Y[np.arange(len(yi)), yi] = 1.0
    return Y


class KNN(Classifier):
    @staticmethod
    def check(params):
        k = params.get("n_neighbors", 5)
        if int(k) != k or k < 1:
            raise ValueError("n_neighbors must be a positive integer")
        if params.get("p", 2) not in (1, 2):
            raise ValueError("p must be 1 or 2")

    def _fit(self, X, yi):
        self.X_, self.y_ = X, yi

    def _ranked(self, X, p):
        diff = X[:, None, :] - self.X_[None, :, :]
        if p == 1:
            dist = np.abs(diff).sum(axis=2)
        else:
            dist = np.einsum("ijk,ijk->ij", diff, diff)
        # stable sort: equal distances go to the earlier training sample
        return self.y_[np.argsort(dist, axis=1, kind="stable")]

    def _votes(self, ranked_labels):
        k = min(int(self.params.get("n_neighbors", 5)), ranked_labels.shape[1])
        lab = ranked_labels[:, :k]
        return (lab[:, :, None] == np.arange(len(self.classes_))).sum(axis=1).astype(float)

    def decision(self, X):
        return self._votes(self._ranked(X, self.params.get("p", 2)))

    @staticmethod
    def decision_many(models, X):
        X = np.asarray(X, dtype=float)
        cache = {}
        out = []
        for m in models:
            # models fitted on the same data share one neighbour ranking per metric
            key = (id(m.X_), m.params.get("p", 2))
            if key not in cache:
                cache[key] = m._ranked(X, key[1])
            out.append(m._votes(cache[key]))
        return out


class GNB(Classifier):
    def _fit(self, X, yi):
        k = len(self.classes_)
        self.mu_ = np.array([X[yi == c].mean(axis=0) for c in range(k)])
        var = np.array([X[yi == c].var(axis=0) for c in range(k)])
        var += 1e-9 * max(float(X.var(axis=0).max()), 1e-300)
        self.var_ = var
        self.logprior_ = np.log(np.bincount(yi, minlength=k) / len(yi))

    def decision(self, X):
        ll = -0.5 * (((X[:, None, :] - self.mu_) ** 2) / self.var_ + np.log(2 * np.pi * self.var_)).sum(axis=2)
        return ll + self.logprior_


def _shrink(cov, lam):
    p = cov.shape[0]
    return (1.0 - lam) * cov + lam * (np.trace(cov) / p) * np.eye(p)


class LDA(Classifier):
    @staticmethod
    def check(params):
        if not 0.0 <= params.get("shrinkage", 0.0) <= 1.0:
            raise ValueError("shrinkage must lie in [0, 1]")

    def _fit(self, X, yi):
        k = len(self.classes_)
        self.mu_ = np.array([X[yi == c].mean(axis=0) for c in range(k)])
        resid = X - self.mu_[yi]
        dof = max(len(X) - k, 1)
        cov = _shrink(resid.T @ resid / dof, float(self.params.get("shrinkage", 0.0)))
        try:
            L = np.linalg.cholesky(cov)
        except np.linalg.LinAlgError:
            raise SingularCovarianceError("pooled covariance is singular after shrinkage") from None
        self.coef_ = np.linalg.solve(L.T, np.linalg.solve(L, self.mu_.T)).T
        self.intercept_ = -0.5 * np.einsum("ij,ij->i", self.coef_, self.mu_)
        self.intercept_ += np.log(np.bincount(yi, minlength=k) / len(yi))

    def decision(self, X):
        return X @ self.coef_.T + self.intercept_


class QDA(Classifier):
    def _fit(self, X, yi):
        self.mu_, self.chol_, self.logdet_ = [], [], []
        for c, name in enumerate(self.classes_):
            Xc = X[yi == c]
            mu = Xc.mean(axis=0)
            r = Xc - mu
            cov = _shrink(r.T @ r / max(len(Xc) - 1, 1), QDA_SHRINKAGE)
            try:
                L = np.linalg.cholesky(cov)
            except np.linalg.LinAlgError:
                raise SingularCovarianceError(f"covariance of class {name!r} is singular") from None
            self.mu_.append(mu)
            self.chol_.append(L)
            self.logdet_.append(2.0 * np.log(np.diag(L)).sum())
        self.logprior_ = np.log(np.bincount(yi, minlength=len(self.classes_)) / len(yi))

    def decision(self, X):
        out = np.empty((len(X), len(self.classes_)))
        for c, (mu, L, ld) in enumerate(zip(self.mu_, self.chol_, self.logdet_)):
            z = np.linalg.solve(L, (X - mu).T)
            out[:, c] = -0.5 * (z * z).sum(axis=0) - 0.5 * ld + self.logprior_[c]
        return out


def _log_softmax(Z):
    # the class axis is short; slice-wise max/sum beats a strided reduce
    m = Z[..., 0]
    for i in range(1, Z.shape[-1]):
        m = np.maximum(m, Z[..., i])
    Z = Z - m[..., None]
    E = np.exp(Z)
    s = E[..., 0]
    for i in range(1, Z.shape[-1]):
        s = s + E[..., i]
    return Z - np.log(s)[..., None]


def _stack(designs, targets):
    """Pad per-fold designs to one ``(F, n, p+1)`` block with row weights.

    Each fold's real rows carry weight ``1 / n_f`` so weighted sums are
    per-fold means; padding rows carry zero weight.
    """
    F = len(designs)
    n = max(len(X) for X in designs)
    p1 = designs[0].shape[1] + 1
    k = targets[0].shape[1]
    Xs = np.zeros((F, n, p1))
    Ts = np.zeros((F, n, k))
    w = np.zeros((F, n))
    for f, (X, T) in enumerate(zip(designs, targets)):
        Xs[f, : len(X), :-1] = X
        Xs[f, : len(X), -1] = 1.0
        Ts[f, : len(X)] = T
        w[f, : len(X)] = 1.0 / len(X)
    return Xs, Ts, w


def _mm(Xs, W):
    """``(F, n, p1) x (F, p1, C, k) -> (F, n, C, k)`` as one product per fold."""
    F, p1, C, k = W.shape
    return (Xs @ W.reshape(F, p1, C * k)).reshape(F, -1, C, k)


def _mmT(Xs, G):
    """``(F, n, p1)^T x (F, n, C, k) -> (F, p1, C, k)``."""
    F, n, C, k = G.shape
    return (np.swapaxes(Xs, 1, 2) @ G.reshape(F, n, C * k)).reshape(F, -1, C, k)


def _softplus_diff(Z):
    # two classes: log-partition relative to class 0 is softplus(z1 - z0)
    d = Z[..., 1] - Z[..., 0]
    return d, np.maximum(d, 0.0) + np.log1p(np.exp(-np.abs(d)))


def _nll(Z, Yc, wn):
    """Weighted negative log-likelihood summed over rows and classes, ``(F, C)``."""
    if Z.shape[-1] == 2:
        d, sp = _softplus_diff(Z)
        return (wn[..., 0] * ((Yc[..., 0] + Yc[..., 1]) * sp - Yc[..., 1] * d)).sum(axis=1)
    return -(wn * Yc * _log_softmax(Z)).sum(axis=(1, 3))


def _residual(Z, Yc, wn):
    """``w * (softmax(Z) - Y)``; rows with one-hot targets or zero weight."""
    if Z.shape[-1] == 2:
        d, sp = _softplus_diff(Z)
        g = wn[..., 0] * (np.exp(d - sp) - Yc[..., 1])
        return np.stack([-g, g], axis=-1)
    return wn * (np.exp(_log_softmax(Z)) - Yc)


def logit_batch(Xs, Y, w, lam, l1, tol=1e-8, max_iter=MAX_ITER):
    """Elastic-net multinomial logistic regression for every (fold, candidate) pair.

    Minimizes ``sum_i w_i NLL_i + lam * (l1 |W|_1 + (1 - l1) |W|_2^2 / 2)``
    per pair by accelerated proximal gradient, restarting momentum after
    an uphill step.  A pair stops once its objective falls by less than
    ``tol`` in one step and is frozen from then on, so the batch never
    changes an individual result.  Shapes: ``Xs (F, n, p+1)``,
    ``Y (F, n, k)``, ``w (F, n)``, ``lam, l1 (C,)`` or ``(F, C)``; returns weights
    ``(F, p+1, C, k)``, iteration counts and convergence flags ``(F, C)``.
    """
    F, n, p1 = Xs.shape
    C = np.shape(lam)[-1]
    lam = np.broadcast_to(np.asarray(lam, float), (F, C))
    l1 = np.broadcast_to(np.asarray(l1, float), (F, C))
    mask = np.ones((1, p1, 1, 1))
    mask[0, -1] = 0.0  # intercept is not penalized
    l2 = (lam * (1 - l1))[:, None, :, None]
    wn = w[:, :, None, None]
    Yc = Y[:, :, None, :]
    # Lipschitz constant of the weighted softmax loss: 0.5 * |diag(sqrt w) X|_2^2
    lip = np.array([0.5 * np.linalg.norm(Xs[f] * np.sqrt(w[f])[:, None], 2) ** 2 for f in range(F)])
    step = 1.0 / (lip[:, None] + lam * (1 - l1))[:, None, :, None]
    thr = step * (lam * l1)[:, None, :, None] * mask

    def objective(W, cols):
        nll = _nll(_mm(Xs, W), Yc, wn)
        Wm = W * mask
        a, b = l1[:, cols], lam[:, cols]
        pen = a * np.abs(Wm).sum(axis=(1, 3)) + 0.5 * (1 - a) * (Wm * Wm).sum(axis=(1, 3))
        return nll + b * pen

    all_cols = np.arange(C)
    W = np.zeros((F, p1, C, Y.shape[2]))
    V = W.copy()
    t = np.ones((F, C))
    obj = objective(W, all_cols)
    active = np.ones((F, C), bool)
    n_iter = np.zeros((F, C), int)
    for _ in range(max_iter):
        live = active.any(axis=0)
        if not live.any():
            break
        # candidates frozen on every fold drop out of the arithmetic
        cols = all_cols if live.all() else np.flatnonzero(live)
        Wc, Vc, act = W[:, :, cols], V[:, :, cols], active[:, cols]
        grad = _mmT(Xs, _residual(_mm(Xs, Vc), Yc, wn)) + l2[:, :, cols] * Vc * mask
        Z = Vc - step[:, :, cols] * grad
        Wn = np.sign(Z) * np.maximum(np.abs(Z) - thr[:, :, cols], 0.0)
        on = objective(Wn, cols)
        n_iter[:, cols] += act
        oc, tc = obj[:, cols], t[:, cols]
        up = act & (on > oc)
        ok = act & ~up
        t_new = np.where(ok, 0.5 * (1 + np.sqrt(1 + 4 * tc * tc)), 1.0)
        mom = np.where(ok, (tc - 1) / t_new, 0.0)[:, None, :, None]
        okb = ok[:, None, :, None]
        # uphill pairs restart from their last accepted iterate
        V[:, :, cols] = np.where(okb, Wn + mom * (Wn - Wc), np.where(up[:, None, :, None], Wc, Vc))
        done = ok & (oc - on < tol)
        W[:, :, cols] = np.where(okb, Wn, Wc)
        obj[:, cols] = np.where(ok, on, oc)
        t[:, cols] = np.where(ok | up, t_new, tc)
        active[:, cols] = act & ~done
    return W, n_iter, ~active


def svm_batch(Xs, S, w, lam, tol=1e-4, max_epochs=MAX_ITER, check_every=25):
    """Averaged projected subgradient descent for one-vs-rest linear SVMs.

    For each (fold, candidate) pair and each target column of ``S``
    (values in {-1, +1}) minimizes ``lam/2 |w|^2 + sum_i w_i hinge_i`` with
    step ``1 / (lam t)``; the bias is not penalized.  The averaged iterate
    is returned.  A pair stops at the epoch cap or once the objective of
    its averaged iterate improves by less than ``tol`` (relative) over
    ``check_every`` epochs.  Shapes as in :func:`logit_batch`.
    """
    F, n, p1 = Xs.shape
    lam = np.asarray(lam, float)
    C = len(lam)
    k = S.shape[2]
    mask = np.ones((1, p1, 1))
    mask[0, -1] = 0.0
    # one row per (fold, candidate) pair so each pair drops out on its own
    fi = np.repeat(np.arange(F), C)
    ci = np.tile(np.arange(C), F)
    W = np.zeros((F * C, p1, k))
    avg = W.copy()
    prev = np.full(F * C, np.inf)
    active = np.ones(F * C, bool)
    n_iter = np.zeros(F * C, int)
    t = 0
    while t < max_epochs and active.any():
        idx = np.flatnonzero(active)
        Xa, Sa, wa = Xs[fi[idx]], S[fi[idx]], w[fi[idx]][:, :, None]
        XaT = np.swapaxes(Xa, 1, 2)
        la = lam[ci[idx]][:, None, None]
        ra = 1.0 / np.sqrt(la)
        live = wa > 0
        Wa, Aa = W[idx], avg[idx]
        # the active set only changes at convergence checks
        for _ in range(min(check_every - t % check_every, max_epochs - t)):
            t += 1
            viol = ((Sa * (Xa @ Wa) < 1.0) & live) * Sa
            Wn = Wa - (la * Wa * mask - XaT @ (wa * viol)) / (la * t)
            norm = np.sqrt(((Wn * mask) ** 2).sum(axis=1, keepdims=True))
            Wa = Wn * np.minimum(1.0, ra / np.maximum(norm, 1e-300))
            Aa = Aa + (Wa - Aa) / t
        W[idx], avg[idx] = Wa, Aa
        n_iter[idx] = t
        if t % check_every == 0:
            hinge = (wa * np.maximum(0.0, 1.0 - Sa * (Xa @ Aa))).sum(axis=(1, 2))
            cur = 0.5 * la[:, 0, 0] * ((Aa * mask) ** 2).sum(axis=(1, 2)) + hinge
            done = prev[idx] - cur < tol * np.abs(cur)
            prev[idx] = cur
            active[idx[done]] = False
    shape = (F, C)
    avg = avg.reshape(F, C, p1, k).transpose(0, 2, 1, 3)
    n_iter, active = n_iter.reshape(shape), active.reshape(shape)
    return avg, n_iter, ~active


class _Batched(Classifier):
    """Iterative models: every fold and hyperparameter candidate trains in one batch."""

    def _fit(self, X, yi):
        W, n_iter, conv = self._solve([X], [yi], [self.params], len(self.classes_))
        self._set(W[0, :, 0], n_iter[0, 0], conv[0, 0])

    def _set(self, W, n_iter, conv):
        self.W_, self.n_iter_, self.converged = W, int(n_iter), bool(conv)

    @classmethod
    def fit_folds(cls, Xs, ys, params):
        for X in Xs:
            if not np.all(np.isfinite(X)):
                raise ValueError("inputs contain missing or infinite values")
        classes = np.unique(np.concatenate([np.asarray(y) for y in ys]))
        yis = [np.searchsorted(classes, np.asarray(y)) for y in ys]
        W, n_iter, conv = cls._solve([np.asarray(X, float) for X in Xs], yis, params, len(classes))
        out = []
        for f in range(len(Xs)):
            row = []
            for c, p in enumerate(params):
                model = cls(**p)
                model.classes_ = classes
                model._set(W[f, :, c], n_iter[f, c], conv[f, c])
                row.append(model)
            out.append(row)
        return out

    @classmethod
    def fit_many(cls, X, y, params):
        return cls.fit_folds([X], [y], params)[0]


class Logit(_Batched):
    """Multinomial logistic regression with an elastic-net penalty.

    The objective is ``NLL + (1/C) * (l1_ratio |W|_1 + (1 - l1_ratio) |W|_2^2 / 2)``
    divided through by ``n``; see :func:`logit_batch`.
    """

    @staticmethod
    def check(params):
        if params.get("C", 1.0) <= 0:
            raise ValueError("C must be positive")
        if not 0.0 <= params.get("l1_ratio", 0.0) <= 1.0:
            raise ValueError("l1_ratio must lie in [0, 1]")

    @staticmethod
    def _solve(Xs, yis, params, k):
        Xs_, Y, w = _stack(Xs, [_one_hot(yi, k) for yi in yis])
        n = np.array([len(X) for X in Xs], float)
        inv_c = np.array([1.0 / float(p.get("C", 1.0)) for p in params])
        l1 = [float(p.get("l1_ratio", 0.0)) for p in params]
        return logit_batch(Xs_, Y, w, inv_c[None, :] / n[:, None], l1)

    def decision(self, X):
        return X @ self.W_[:-1] + self.W_[-1]


class LinearSVM(_Batched):
    """One-vs-rest linear SVM, ``|w|^2 / 2 + C * mean hinge``, i.e. ``lam = 1 / C``."""

    @staticmethod
    def check(params):
        if params.get("C", 1.0) <= 0:
            raise ValueError("C must be positive")

    @staticmethod
    def _solve(Xs, yis, params, k):
        T = [np.where(_one_hot(yi, k) > 0, 1.0, -1.0) for yi in yis]
        if k == 2:
            T = [t[:, 1:] for t in T]
        Xs_, S, w = _stack(Xs, T)
        return svm_batch(Xs_, S, w, [1.0 / float(p.get("C", 1.0)) for p in params])

    def decision(self, X):
        s = X @ self.W_[:-1] + self.W_[-1]
        if s.shape[1] == 1:
            return np.hstack([-s, s])
        return s


class PLSDA(Classifier):
    """PLS2 regression on one-hot labels (NIPALS), classified by argmax."""

    @staticmethod
    def check(params):
        n = params.get("n_components", 2)
        if int(n) != n or n < 1:
            raise ValueError("n_components must be a positive integer")

    @staticmethod
    def _nipals(E, F, ncomp, tol=1e-10, max_iter=500):
        """Weights, X loadings and Y loadings of up to ``ncomp`` components."""
        Wx, P, Q = [], [], []
        for _ in range(ncomp):
            u = F[:, np.argmax((F * F).sum(axis=0))]
            # no covariance left: the fit is already least squares and any
            # further weight vector would be rounding noise
            if np.linalg.norm(E.T @ u) < COV_EPS * np.linalg.norm(E) * np.linalg.norm(u):
                break
            w = w_prev = np.zeros(E.shape[1])
            for _ in range(max_iter):
                w = E.T @ u
                nw = np.linalg.norm(w)
                if nw < 1e-12:
                    break
                w /= nw
                # the unit weight vector is scale-free, unlike the score u
                if np.linalg.norm(w - w_prev) < tol:
                    break
                w_prev = w
                t = E @ w
                c = F.T @ t / (t @ t)
                u = F @ c / (c @ c)
            if np.linalg.norm(w) < 1e-12:
                break
            t = E @ w
            tt = t @ t
            p_load = E.T @ t / tt
            q_load = F.T @ t / tt
            E = E - np.outer(t, p_load)
            F = F - np.outer(t, q_load)
            Wx.append(w)
            P.append(p_load)
            Q.append(q_load)
        return np.array(Wx).T, np.array(P).T, np.array(Q).T

    def _ncomp(self, X):
        return min(int(self.params.get("n_components", 2)), X.shape[1], len(X) - 1)

    def _set_coef(self, Wx, P, Q, k, p, m):
        # components are nested, so a k-component model is a prefix of a larger fit
        k = min(k, Wx.shape[1] if Wx.size else 0)
        if k == 0:
            self.B_ = np.zeros((p, m))
            return
        Wx, P, Q = Wx[:, :k], P[:, :k], Q[:, :k]
        self.B_ = Wx @ np.linalg.solve(P.T @ Wx, Q.T)

    def _fit(self, X, yi):
        Y = _one_hot(yi, len(self.classes_))
        self.x_mean_, self.y_mean_ = X.mean(axis=0), Y.mean(axis=0)
        k = self._ncomp(X)
        self._set_coef(*self._nipals(X - self.x_mean_, Y - self.y_mean_, k), k, X.shape[1], Y.shape[1])

    @classmethod
    def fit_many(cls, X, y, params):
        X = np.asarray(X, dtype=float)
        if not np.all(np.isfinite(X)):
            raise ValueError("inputs contain missing or infinite values")
        classes, yi = np.unique(np.asarray(y), return_inverse=True)
        Y = _one_hot(yi, len(classes))
        xm, ym = X.mean(axis=0), Y.mean(axis=0)
        models = [cls(**p) for p in params]
        ks = [m._ncomp(X) for m in models]
        loads = cls._nipals(X - xm, Y - ym, max(ks))
        for m, k in zip(models, ks):
            m.classes_, m.x_mean_, m.y_mean_ = classes, xm, ym
            m._set_coef(*loads, k, X.shape[1], Y.shape[1])
        return models

    def decision(self, X):
        return (X - self.x_mean_) @ self.B_ + self.y_mean_


_REGISTRY = {
    "KNN": KNN,
    "GNB": GNB,
    "LDA": LDA,
    "QDA": QDA,
    "Logit": Logit,
    "LinearSVM": LinearSVM,
    "PLSDA": PLSDA,
}


FAMILIES = tuple(_REGISTRY)


def make_model(spec: ModelSpec) -> Classifier:
    return _REGISTRY[spec.family](**spec.hyper)


def fit(spec: ModelSpec, X, y) -> Classifier:
    model = make_model(spec).fit(X, y)
    if not model.converged:
        log.warning("%s did not converge; returning the last iterate", spec.label())
    return model


def predict(model: Classifier, X) -> np.ndarray:
    return model.predict(X)

