"""Pure-numpy leave-one-out scoring, used when the extension is absent.

Same contract as the compiled kernel: the input stack holds column-scaled
design matrices, and a hypothesis whose fold systems fall below the pivot
guard is flagged not-ok so the caller can rescore it on the exact path.
"""

from __future__ import annotations

import numpy as np

# Square of the smallest acceptable Cholesky pivot of a column-scaled
# normal system; below this the fold is treated as rank-deficient.
PIVOT_GUARD = 1e-10


def _scores_from_solutions(a_stack, y, coef):
    pred = np.einsum("hnk,hnk->hn", a_stack, coef)
    denom = np.abs(y)[None, :] + np.abs(pred)
    err = np.zeros_like(pred)
    np.divide(np.abs(pred - y[None, :]), denom, out=err, where=denom > 0)
    return err.mean(axis=1)


def loo_cv_batch(a_stack: np.ndarray, y: np.ndarray):
    """Mean symmetric relative LOO error per hypothesis.

    a_stack: (H, N, k) column-scaled design matrices sharing the targets y.
    Returns (scores, ok); scores of not-ok hypotheses are NaN.
    """
    a_stack = np.ascontiguousarray(a_stack, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    h, n, k = a_stack.shape
    gram = a_stack.transpose(0, 2, 1) @ a_stack
    rhs = np.einsum("hnk,n->hk", a_stack, y)
    gram_folds = gram[:, None, :, :] - np.einsum("hni,hnj->hnij", a_stack, a_stack)
    rhs_folds = rhs[:, None, :] - a_stack * y[None, :, None]
    ok = np.ones(h, dtype=bool)
    scores = np.full(h, np.nan)
    try:
        chol = np.linalg.cholesky(gram_folds)
    except np.linalg.LinAlgError:
        for hi in range(h):
            try:
                chol_h = np.linalg.cholesky(gram_folds[hi])
            except np.linalg.LinAlgError:
                ok[hi] = False
                continue
            if (np.diagonal(chol_h, axis1=-2, axis2=-1) ** 2).min() < PIVOT_GUARD:
                ok[hi] = False
                continue
            coef = np.linalg.solve(gram_folds[hi], rhs_folds[hi][..., None])[..., 0]
            scores[hi] = _scores_from_solutions(
                a_stack[hi : hi + 1], y, coef[None]
            )[0]
        return scores, ok
    pivots = np.diagonal(chol, axis1=-2, axis2=-1) ** 2
    ok = pivots.reshape(h, -1).min(axis=1) >= PIVOT_GUARD
    if ok.any():
        coef = np.linalg.solve(gram_folds[ok], rhs_folds[ok][..., None])[..., 0]
        scores[ok] = _scores_from_solutions(a_stack[ok], y, coef)
    return scores, ok
