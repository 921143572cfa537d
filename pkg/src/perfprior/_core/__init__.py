"""Numerical core: least-squares fitting and leave-one-out scoring.

The scoring kernel is the hot path of hypothesis search; a compiled
extension is used when available and a pure-numpy implementation otherwise.
Set PERFPRIOR_NO_EXT=1 to force the fallback. Both paths share the exact
SVD route used for final coefficients and for rank-deficient folds.
"""

from __future__ import annotations

import os

import numpy as np

from . import _fallback

if os.environ.get("PERFPRIOR_NO_EXT"):
    _impl = _fallback
    BACKEND = "fallback"
else:
    try:
        from . import _fitcore as _impl  # type: ignore[no-redef]

        BACKEND = "compiled"
    except ImportError:
        _impl = _fallback
        BACKEND = "fallback"

_REFINE_STEPS = 2


def column_scaled(a: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Scale columns to unit 2-norm; zero columns are left untouched."""
    norms = np.sqrt(np.einsum("...nk,...nk->...k", a, a))
    norms = np.where(norms > 0, norms, 1.0)
    return a / norms[..., None, :], norms


def fit_ols(a: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, float, int]:
    """Least-squares coefficients for a (N, k) design matrix.

    Full-rank systems are solved column-scaled with iterative refinement
    (extended-precision residuals), which keeps small coefficients accurate
    next to terms that are many orders of magnitude larger. Rank-deficient
    systems return the minimum-norm solution in the original coordinates.
    Returns (coefficients, rss, rank).
    """
    a = np.asarray(a, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    scaled, norms = column_scaled(a)
    coef_s, _, rank, _ = np.linalg.lstsq(scaled, y, rcond=None)
    if rank < a.shape[1]:
        coef, _, _, _ = np.linalg.lstsq(a, y, rcond=None)
        rss = float(np.sum((a @ coef - y) ** 2))
        return coef, rss, int(rank)
    # residuals against the original matrix, rescaled in extended precision:
    # the double rounding of `scaled` is exactly the error being refined away
    a_ld = a.astype(np.longdouble) / norms.astype(np.longdouble)
    y_ld = y.astype(np.longdouble)
    best = coef_s.astype(np.longdouble)
    best_res = y_ld - a_ld @ best
    best_norm = float(np.sqrt(np.sum(best_res * best_res)))
    current = best
    residual = best_res
    for _ in range(_REFINE_STEPS):
        delta, _, _, _ = np.linalg.lstsq(scaled, np.asarray(residual, dtype=np.float64), rcond=None)
        current = current + delta.astype(np.longdouble)
        residual = y_ld - a_ld @ current
        norm = float(np.sqrt(np.sum(residual * residual)))
        if norm < best_norm:
            best, best_norm = current, norm
    coef = np.asarray(best / norms.astype(np.longdouble), dtype=np.float64)
    rss = float(np.sum((a @ coef - y) ** 2))
    return coef, rss, int(rank)


def loo_cv_slow(a: np.ndarray, y: np.ndarray) -> float:
    """Per-fold SVD leave-one-out score; handles rank-deficient folds."""
    n = a.shape[0]
    total = 0.0
    for i in range(n):
        mask = np.arange(n) != i
        coef, _, _, _ = np.linalg.lstsq(a[mask], y[mask], rcond=None)
        pred = float(a[i] @ coef)
        denom = abs(y[i]) + abs(pred)
        if denom > 0:
            total += abs(pred - y[i]) / denom
    return total / n


def loo_cv_batch(a_stack: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Leave-one-out scores for hypotheses sharing the same targets.

    a_stack: (H, N, k) raw design matrices. Column scaling and the
    rank-deficient rescue path are applied here so both backends see the
    same prepared input.
    """
    a_stack = np.ascontiguousarray(a_stack, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    scaled, _ = column_scaled(a_stack)
    scores, ok = _impl.loo_cv_batch(scaled, y)
    if not np.all(ok):
        for hi in np.nonzero(~np.asarray(ok))[0]:
            scores[hi] = loo_cv_slow(scaled[hi], y)
    return scores
