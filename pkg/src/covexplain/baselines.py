"""Classical baselines, built directly on numpy.

Three model families share one container and a common predict() entry:
  - ridge least squares on +/-1 targets (intercept unpenalized),
  - Gaussian Naive Bayes with floored per-class variances,
  - soft-margin RBF SVM trained by SMO with a working set of two.

Labels are 0 (anti) / 1 (pro) everywhere at the API boundary; internally the
linear and SVM paths use signed targets. Score ties always resolve to class 0.
Fitted parameters stay float64 in memory (the closed-form agreement gates
need the full solve precision); the checkpoint layer rounds to float32 only
at the file boundary.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ConvergenceError, DataError

VAR_FLOOR = 1e-9


@dataclass
class BaselineModel:
    kind: str                               # "linear" | "gnb" | "svm_rbf"
    # linear
    w: np.ndarray | None = None
    b: float = 0.0
    # gnb
    priors: np.ndarray | None = None        # (2,)
    means: np.ndarray | None = None         # (2, d)
    variances: np.ndarray | None = None     # (2, d)
    # svm_rbf
    sv: np.ndarray | None = None            # (m, d) support vectors
    coef: np.ndarray | None = None          # (m,) alpha_i * s_i
    gamma: float = 0.0


def _signed_targets(y: np.ndarray) -> np.ndarray:
    # accepts 0/1 labels or +/-1 targets; anything <= 0 counts as the anti class
    y = np.asarray(y, dtype=np.float64).ravel()
    return np.where(y > 0, 1.0, -1.0)


def _check_xy(x: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2:
        raise DataError("features must be 2-D")
    y = np.asarray(y).ravel()
    if y.shape[0] != x.shape[0]:
        raise DataError(f"got {y.shape[0]} labels for {x.shape[0]} rows")
    if not np.isfinite(x).all():
        raise DataError("non-finite values in features")
    return x, y


def fit_linear(x: np.ndarray, y: np.ndarray, ridge: float = 0.0) -> BaselineModel:
    """Ridge least squares on signed targets.

    Solves min ||X w + b - s||^2 + ridge ||w||^2 via a stacked least-squares
    system; the intercept is not penalized, so ridge -> inf collapses the
    prediction to the majority (bias) class.
    """
    x, y = _check_xy(x, y)
    if ridge < 0:
        raise DataError(f"ridge must be >= 0, got {ridge}")
    s = _signed_targets(y)
    n, d = x.shape
    a = np.hstack([x, np.ones((n, 1))])
    if ridge > 0:
        pen = np.hstack([np.sqrt(ridge) * np.eye(d), np.zeros((d, 1))])
        a = np.vstack([a, pen])
        s = np.concatenate([s, np.zeros(d)])
    sol, *_ = np.linalg.lstsq(a, s, rcond=None)
    return BaselineModel(kind="linear", w=sol[:d], b=float(sol[d]))


def fit_gnb(x: np.ndarray, y: np.ndarray) -> BaselineModel:
    """Gaussian Naive Bayes: empirical priors, per-class diagonal Gaussians."""
    x, y = _check_xy(x, y)
    y01 = (np.asarray(y).ravel() > 0).astype(np.int64)
    counts = np.array([(y01 == 0).sum(), (y01 == 1).sum()])
    if counts.min() == 0:
        raise DataError("single-class data")
    if counts.min() < 2:
        raise DataError("fewer than 2 samples in one class")
    priors = counts / counts.sum()
    means = np.stack([x[y01 == c].mean(axis=0) for c in (0, 1)])
    # biased (MLE) variances, floored so constant features stay finite
    variances = np.stack([
        np.maximum(x[y01 == c].var(axis=0), VAR_FLOOR) for c in (0, 1)
    ])
    return BaselineModel(kind="gnb", priors=priors, means=means,
                         variances=variances)


def gnb_log_posteriors(model: BaselineModel, x: np.ndarray) -> np.ndarray:
    """Unnormalized log posteriors, one column per class."""
    if model.kind != "gnb":
        raise DataError("not a gnb model")
    x = np.asarray(x, dtype=np.float64)
    out = np.zeros((x.shape[0], 2))
    for c in (0, 1):
        mu = model.means[c].astype(np.float64)
        var = model.variances[c].astype(np.float64)
        ll = -0.5 * (np.log(2.0 * np.pi * var) + (x - mu) ** 2 / var).sum(axis=1)
        out[:, c] = np.log(float(model.priors[c])) + ll
    return out


def _rbf_kernel(a: np.ndarray, b: np.ndarray, gamma: float) -> np.ndarray:
    sq = (np.sum(a * a, axis=1)[:, None] + np.sum(b * b, axis=1)[None, :]
          - 2.0 * (a @ b.T))
    return np.exp(-gamma * np.maximum(sq, 0.0))


def fit_svm_rbf(x: np.ndarray, y: np.ndarray, c: float = 1.0,
                gamma: float | None = None, tol: float = 1e-3,
                max_passes: int = 10,
                max_iter: int | None = None) -> BaselineModel:
    """Soft-margin RBF SVM trained by sequential minimal optimization.

    Working set of two: the first index violates a KKT condition beyond tol;
    the second maximizes |E_i - E_j|, falling back to a cyclic scan when that
    pair makes no progress. Optimization stops after max_passes consecutive
    sweeps without an alpha change; the safety iteration cap raises
    ConvergenceError carrying the count.
    """
    x, yraw = _check_xy(x, y)
    s = _signed_targets(yraw)
    if len(np.unique(s)) < 2:
        raise DataError("single-class data")
    if c <= 0:
        raise DataError("c must be positive")
    n, d = x.shape
    if gamma is None:
        gamma = 1.0 / d
    if gamma <= 0:
        raise DataError("gamma must be positive")
    if max_iter is None:
        max_iter = max(200_000, 2_000 * n)
    kmat = _rbf_kernel(x, x, gamma)
    alpha = np.zeros(n)
    bias = 0.0
    iters = 0

    def errors_all() -> np.ndarray:
        return kmat @ (alpha * s) + bias - s

    def take_step(i: int, j: int, ei: float, ej: float) -> bool:
        nonlocal bias
        if i == j:
            return False
        ai, aj = alpha[i], alpha[j]
        si, sj = s[i], s[j]
        if si != sj:
            lo, hi = max(0.0, aj - ai), min(c, c + aj - ai)
        else:
            lo, hi = max(0.0, ai + aj - c), min(c, ai + aj)
        if lo >= hi:
            return False
        eta = 2.0 * kmat[i, j] - kmat[i, i] - kmat[j, j]
        if eta >= 0:
            return False
        aj_new = np.clip(aj - sj * (ei - ej) / eta, lo, hi)
        if abs(aj_new - aj) < 1e-7:
            return False
        ai_new = ai + si * sj * (aj - aj_new)
        b1 = (bias - ei - si * (ai_new - ai) * kmat[i, i]
              - sj * (aj_new - aj) * kmat[i, j])
        b2 = (bias - ej - si * (ai_new - ai) * kmat[i, j]
              - sj * (aj_new - aj) * kmat[j, j])
        if 0.0 < ai_new < c:
            bias = b1
        elif 0.0 < aj_new < c:
            bias = b2
        else:
            bias = 0.5 * (b1 + b2)
        alpha[i], alpha[j] = ai_new, aj_new
        return True

    passes = 0
    while passes < max_passes:
        changed = 0
        for i in range(n):
            if iters >= max_iter:
                raise ConvergenceError(
                    f"SMO did not converge within {max_iter} iterations",
                    iterations=iters)
            iters += 1
            e = errors_all()
            ri = e[i] * s[i]
            if not ((ri < -tol and alpha[i] < c) or (ri > tol and alpha[i] > 0)):
                continue
            gap = np.abs(e[i] - e)
            gap[i] = -1.0
            j = int(np.argmax(gap))
            if take_step(i, j, e[i], e[j]):
                changed += 1
                continue
            moved = False
            for off in range(1, n):
                j2 = (j + off) % n
                if j2 == i:
                    continue
                if take_step(i, j2, e[i], e[j2]):
                    moved = True
                    break
            if moved:
                changed += 1
        passes = passes + 1 if changed == 0 else 0

    keep = alpha > 1e-12
    return BaselineModel(kind="svm_rbf", sv=x[keep],
                         coef=alpha[keep] * s[keep],
                         b=float(bias), gamma=float(gamma))


def decision_scores(model: BaselineModel, x: np.ndarray) -> np.ndarray:
    """Signed scores: > 0 leans pro (class 1), < 0 anti, 0 is a tie."""
    x = np.asarray(x, dtype=np.float64)
    if model.kind == "linear":
        return x @ model.w.astype(np.float64) + model.b
    if model.kind == "gnb":
        lp = gnb_log_posteriors(model, x)
        return lp[:, 1] - lp[:, 0]
    if model.kind == "svm_rbf":
        if model.sv.shape[0] == 0:
            return np.full(x.shape[0], model.b)
        k = _rbf_kernel(x, model.sv.astype(np.float64), model.gamma)
        return k @ model.coef.astype(np.float64) + model.b
    raise DataError(f"unknown model kind {model.kind!r}")


def predict(model: BaselineModel, x: np.ndarray) -> np.ndarray:
    """0/1 labels from decision scores; exact ties resolve to class 0."""
    return (decision_scores(model, x) > 0).astype(np.int64)


def kkt_residuals(model: BaselineModel, x: np.ndarray, y: np.ndarray,
                  c: float) -> np.ndarray:
    """|s_i f(x_i) - 1| for the free support vectors (0 < alpha < c)."""
    if model.kind != "svm_rbf":
        raise DataError("not an svm model")
    x, yraw = _check_xy(x, y)
    s = _signed_targets(yraw)
    f = decision_scores(model, x)
    # recover alpha magnitudes for rows that are support vectors
    res = []
    sv = model.sv.astype(np.float64)
    coef = model.coef.astype(np.float64)
    for i in range(x.shape[0]):
        match = np.where((np.abs(sv - x[i]).max(axis=1) < 1e-12))[0]
        if match.size == 0:
            continue
        a = abs(float(coef[match[0]]))
        if 1e-9 < a < c - 1e-9:
            res.append(abs(s[i] * f[i] - 1.0))
    return np.asarray(res)
