"""Hypothesis search over the model normal form.

Selection uses leave-one-out cross-validation with the symmetric relative
error |pred - y| / (|y| + |pred|), which is scale-free and bounded by 1
across the many orders of magnitude spanned by time and count metrics.
Scores below SCORE_FLOOR are treated as exact fits, so the choice among
indistinguishable exact fits rests on the structural tie-break alone:
(basis count, sum of monomial exponents, sum of log exponents,
lexicographic signature). The same floor and order apply in the
independent oracle, which makes selection deterministic end to end.

Multi-parameter search is hierarchical: a consensus single-parameter term
per parameter (minimal mean score across grid lines), then an enumeration
of candidate skeletons whose non-constant bases are products of the best
terms over non-empty parameter subsets, capped at m + 1 bases.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, Sequence

import numpy as np

from . import _core
from .dataset import Coordinate, ParameterSpace
from .errors import InsufficientDataError, ValidationError
from .pmnf import (
    BasisFunction,
    Expo,
    PmnfModel,
    Skeleton,
    Term,
    constant_basis,
    default_exponent_sets,
    design_matrix,
    model_from_skeleton,
)

SCORE_FLOOR = 1e-12

PROVENANCE_SINGLE = "single_param"
PROVENANCE_MULTI = "multi_param_candidate"
PROVENANCE_PRIOR = "prior"


@dataclass(frozen=True)
class Hypothesis:
    """A candidate structure together with where it came from."""

    skeleton: Skeleton
    provenance: str


@dataclass(frozen=True)
class FitResult:
    coefficients: tuple[float, ...]
    cv_score: float
    rss: float


def _snap(score: float) -> float:
    return 0.0 if score < SCORE_FLOOR else float(score)


def _skeleton_key(skel: Skeleton) -> tuple:
    total_i = Fraction(0)
    total_j = 0
    for b in skel.bases:
        for i, j in b.exponents:
            total_i += i
            total_j += j
    signature = tuple(sorted(b.signature() for b in skel.bases))
    return (len(skel.bases), total_i, total_j, signature)


def _ordered(data: Mapping[Coordinate, float]) -> tuple[np.ndarray, np.ndarray]:
    coords = sorted(data)
    arr = np.array(coords, dtype=float)
    y = np.array([data[c] for c in coords], dtype=float)
    return arr, y


def fit_coefficients(
    skel: Skeleton, data: Mapping[Coordinate, float]
) -> tuple[tuple[float, ...], float]:
    """Least-squares coefficients of a skeleton; returns (coefficients, rss).

    Rank-deficient systems yield the minimum-norm solution.
    """
    if len(data) < skel.size:
        raise InsufficientDataError(
            f"{len(data)} points cannot determine {skel.size} coefficients"
        )
    coords, y = _ordered(data)
    a = design_matrix(skel, coords)
    coef, rss, _ = _core.fit_ols(a, y)
    return tuple(float(c) for c in coef), rss


def cv_score(skel: Skeleton, data: Mapping[Coordinate, float]) -> float:
    """Leave-one-out mean symmetric relative error, in [0, 1]."""
    if len(data) < skel.size + 1:
        raise InsufficientDataError(
            f"{len(data)} points are too few to cross-validate {skel.size} bases"
        )
    coords, y = _ordered(data)
    a = design_matrix(skel, coords)
    return float(_core.loo_cv_batch(a[None], y)[0])


def evaluate_hypothesis(skel: Skeleton, data: Mapping[Coordinate, float]) -> FitResult:
    coef, rss = fit_coefficients(skel, data)
    return FitResult(coef, cv_score(skel, data), rss)


def single_param_hypotheses(param: str) -> list[Hypothesis]:
    """The constant plus one skeleton {1, x^i log2^j(x)} per (i, j) != (0, 0)."""
    i_set, j_set = default_exponent_sets()
    names = (param,)
    out = [Hypothesis(Skeleton(names, (constant_basis(1),)), PROVENANCE_SINGLE)]
    for i in i_set:
        for j in j_set:
            if i == 0 and j == 0:
                continue
            skel = Skeleton(names, (constant_basis(1), BasisFunction(((i, j),))))
            out.append(Hypothesis(skel, PROVENANCE_SINGLE))
    return out


def _score_single_stack(x: np.ndarray, hyps: Sequence[Hypothesis]) -> list[np.ndarray]:
    """Design matrices of the single-parameter family, grouped by size."""
    logs = np.log2(x)
    ones = np.ones_like(x)
    singles = []
    for h in hyps:
        if h.skeleton.size == 1:
            continue
        (i, j) = h.skeleton.bases[1].exponents[0]
        col = ones.copy()
        if i:
            col = col * x ** float(i)
        if j:
            col = col * logs**j
        singles.append(np.stack([ones, col], axis=1))
    return [ones[None, :, None], np.array(singles)]


def _scores_for_lines(
    x: np.ndarray, hyps: Sequence[Hypothesis], ys: Sequence[np.ndarray]
) -> np.ndarray:
    """Score every hypothesis on every line sharing the x values."""
    const_stack, term_stack = _score_single_stack(x, hyps)
    scores = np.empty((len(hyps), len(ys)))
    for col, y in enumerate(ys):
        scores[0, col] = _core.loo_cv_batch(const_stack, y)[0]
        scores[1:, col] = _core.loo_cv_batch(term_stack, y)
    return scores


def _select(
    hyps: Sequence[Hypothesis], scores: Sequence[float]
) -> tuple[Hypothesis, float]:
    best = min(
        range(len(hyps)),
        key=lambda idx: (_snap(scores[idx]), _skeleton_key(hyps[idx].skeleton)),
    )
    return hyps[best], _snap(scores[best])


def search_single(data: Mapping[Coordinate, float], param: str) -> PmnfModel:
    """Best single-parameter hypothesis under cross-validation."""
    coords, y = _ordered(data)
    if coords.shape[1] != 1:
        raise ValidationError("search_single expects one-parameter coordinates")
    x = coords[:, 0]
    if len(np.unique(x)) < 3:
        raise InsufficientDataError("need at least 3 distinct parameter values")
    hyps = single_param_hypotheses(param)
    scores = _scores_for_lines(x, hyps, [y])[:, 0]
    winner, _ = _select(hyps, scores)
    coef, _ = fit_coefficients(winner.skeleton, data)
    return model_from_skeleton(winner.skeleton, coef)


def _line_views(
    space: ParameterSpace, data: Mapping[Coordinate, float], axis: int
) -> list[np.ndarray]:
    """Targets of every grid line along one axis, in canonical order."""
    others = [space.values[l] for l in range(space.m) if l != axis]
    lines = []
    for fixed in itertools.product(*others):
        y = []
        for v in space.values[axis]:
            coord = list(fixed)
            coord.insert(axis, v)
            y.append(data[tuple(coord)])
        lines.append(np.array(y))
    return lines


def _combine_exponents(
    terms: Mapping[int, tuple[Expo, ...]], subset: Sequence[int], m: int
) -> tuple[Expo, ...]:
    exps: list[Expo] = [(Fraction(0), 0)] * m
    for axis in subset:
        for l, (i, j) in enumerate(terms[axis]):
            old_i, old_j = exps[l]
            exps[l] = (old_i + i, old_j + j)
    return tuple(exps)


def _multi_candidates(
    space: ParameterSpace, best_terms: Mapping[int, tuple[Expo, ...]]
) -> list[Hypothesis]:
    """All skeletons over products of per-parameter best terms, <= m+1 bases."""
    m = space.m
    axes = sorted(best_terms)
    products = []
    for size in range(1, len(axes) + 1):
        for subset in itertools.combinations(axes, size):
            products.append(_combine_exponents(best_terms, subset, m))
    const = constant_basis(m)
    candidates = []
    for count in range(0, m + 1):
        for chosen in itertools.combinations(products, count):
            bases = (const,) + tuple(BasisFunction(e) for e in chosen)
            candidates.append(
                Hypothesis(Skeleton(space.names, bases), PROVENANCE_MULTI)
            )
    return candidates


def search_multi(data: Mapping[Coordinate, float], space: ParameterSpace) -> PmnfModel:
    """Hierarchical multi-parameter search; see module docstring."""
    if space.m not in (2, 3):
        raise ValidationError("multi-parameter search supports m in {2, 3}")
    if set(data) != set(space.grid()):
        raise ValidationError("multi-parameter search requires the full grid")

    best_terms: dict[int, tuple[Expo, ...]] = {}
    for axis in range(space.m):
        hyps = single_param_hypotheses(space.names[axis])
        x = np.array(space.values[axis])
        lines = _line_views(space, data, axis)
        line_scores = _scores_for_lines(x, hyps, lines)
        line_scores[line_scores < SCORE_FLOOR] = 0.0
        winner, _ = _select(hyps, line_scores.mean(axis=1))
        if winner.skeleton.size > 1:
            (i, j) = winner.skeleton.bases[1].exponents[0]
            exps: list[Expo] = [(Fraction(0), 0)] * space.m
            exps[axis] = (i, j)
            best_terms[axis] = tuple(exps)

    candidates = _multi_candidates(space, best_terms)
    coords, y = _ordered(data)
    scores = np.empty(len(candidates))
    by_size: dict[int, list[int]] = {}
    for idx, cand in enumerate(candidates):
        by_size.setdefault(cand.skeleton.size, []).append(idx)
    for size, idxs in by_size.items():
        stack = np.stack(
            [design_matrix(candidates[idx].skeleton, coords) for idx in idxs]
        )
        scores[idxs] = _core.loo_cv_batch(stack, y)
    winner, _ = _select(candidates, scores)
    coef, _ = fit_coefficients(winner.skeleton, data)
    return model_from_skeleton(winner.skeleton, coef)


def search(data: Mapping[Coordinate, float], space: ParameterSpace) -> PmnfModel:
    """Dispatch to the single- or multi-parameter search by dimension."""
    if space.m == 1:
        return search_single(data, space.names[0])
    return search_multi(data, space)


def fit_skeleton_to_time(
    skel: Skeleton, time_data: Mapping[Coordinate, float]
) -> PmnfModel:
    """Bind a prior's coefficients to time measurements (structure fixed)."""
    coef, _ = fit_coefficients(skel, time_data)
    return model_from_skeleton(skel, coef)


# --- independent oracle -----------------------------------------------------
#
# A deliberately naive re-implementation used to cross-check the search:
# designs are built element by element, every fold is refit with a plain
# SVD solve, and the family is enumerated from the exponent sets directly.


def _oracle_basis_value(exps: Sequence[Expo], coord: Coordinate) -> float:
    v = 1.0
    for x, (i, j) in zip(coord, exps):
        if i != 0:
            v *= float(x) ** (i.numerator / i.denominator)
        if j != 0:
            v *= math.log2(x) ** j
    return v


def _oracle_matrix(bases: Sequence[tuple[Expo, ...]], coords) -> np.ndarray:
    a = np.array(
        [[_oracle_basis_value(b, c) for b in bases] for c in coords], dtype=float
    )
    # normalize columns (max-abs) so lstsq's rank cutoff cannot drop the
    # constant next to a 1e16-scale term column
    peaks = np.abs(a).max(axis=0)
    return a / np.where(peaks > 0, peaks, 1.0)


def _oracle_cv(bases: Sequence[tuple[Expo, ...]], coords, y) -> float:
    n = len(coords)
    a = _oracle_matrix(bases, coords)
    total = 0.0
    for hold in range(n):
        keep = [r for r in range(n) if r != hold]
        coef = np.linalg.lstsq(a[keep], y[keep], rcond=None)[0]
        pred = float(a[hold] @ coef)
        denom = abs(y[hold]) + abs(pred)
        if denom > 0:
            total += abs(pred - y[hold]) / denom
    return total / n


def _oracle_key(bases: Sequence[tuple[Expo, ...]]) -> tuple:
    total_i = sum((i for b in bases for i, _ in b), Fraction(0))
    total_j = sum(j for b in bases for _, j in b)
    signature = tuple(
        sorted(
            (sum((i for i, _ in b), Fraction(0)), sum(j for _, j in b), b, "")
            for b in bases
        )
    )
    return (len(bases), total_i, total_j, signature)


def _oracle_single_family(m: int, axis: int) -> list[list[tuple[Expo, ...]]]:
    i_set, j_set = default_exponent_sets()
    zero: tuple[Expo, ...] = tuple(((Fraction(0), 0)) for _ in range(m))
    family = [[zero]]
    for i in i_set:
        for j in j_set:
            if i == 0 and j == 0:
                continue
            exps = [(Fraction(0), 0)] * m
            exps[axis] = (i, j)
            family.append([zero, tuple(exps)])
    return family


def _oracle_best(family, coords, y) -> list[tuple[Expo, ...]]:
    scored = []
    for bases in family:
        s = _oracle_cv(bases, coords, y)
        scored.append(((_snap(s), _oracle_key(bases)), bases))
    return min(scored, key=lambda t: t[0])[1]


def _oracle_model(bases, coords, y, names) -> PmnfModel:
    a = np.array(
        [[_oracle_basis_value(b, c) for b in bases] for c in coords], dtype=float
    )
    peaks = np.abs(a).max(axis=0)
    peaks = np.where(peaks > 0, peaks, 1.0)
    coef = np.linalg.lstsq(a / peaks, y, rcond=None)[0] / peaks
    terms = [
        Term(float(c), b)
        for c, b in zip(coef[1:], bases[1:])
    ]
    return PmnfModel(float(coef[0]), tuple(terms), names)


def exhaustive_oracle(
    data: Mapping[Coordinate, float], family: str, space: ParameterSpace
) -> PmnfModel:
    """Brute-force search over the same family via an independent code path."""
    coords = sorted(data)
    y = np.array([data[c] for c in coords], dtype=float)
    if family == "single":
        if space.m != 1:
            raise ValidationError("single family expects a one-parameter space")
        best = _oracle_best(_oracle_single_family(1, 0), coords, y)
        return _oracle_model(best, coords, y, space.names)
    if family != "multi_restricted":
        raise ValidationError(f"unknown oracle family {family!r}")
    if space.m not in (2, 3):
        raise ValidationError("oracle family too large: m must be 2 or 3")

    best_terms: dict[int, tuple[Expo, ...]] = {}
    for axis in range(space.m):
        family_ax = _oracle_single_family(space.m, axis)
        per_hyp = []
        others = [space.values[l] for l in range(space.m) if l != axis]
        lines = []
        for fixed in itertools.product(*others):
            line_coords = []
            for v in space.values[axis]:
                coord = list(fixed)
                coord.insert(axis, v)
                line_coords.append(tuple(coord))
            lines.append((line_coords, np.array([data[c] for c in line_coords])))
        for bases in family_ax:
            mean = sum(
                _snap(_oracle_cv(bases, lcs, ly)) for lcs, ly in lines
            ) / len(lines)
            per_hyp.append(((_snap(mean), _oracle_key(bases)), bases))
        chosen = min(per_hyp, key=lambda t: t[0])[1]
        if len(chosen) > 1:
            best_terms[axis] = chosen[1]

    zero: tuple[Expo, ...] = tuple(((Fraction(0), 0)) for _ in range(space.m))
    products = []
    axes = sorted(best_terms)
    for size in range(1, len(axes) + 1):
        for subset in itertools.combinations(axes, size):
            exps = [(Fraction(0), 0)] * space.m
            for ax in subset:
                for l, (i, j) in enumerate(best_terms[ax]):
                    exps[l] = (exps[l][0] + i, exps[l][1] + j)
            products.append(tuple(exps))
    candidates = []
    for count in range(0, space.m + 1):
        for chosen in itertools.combinations(products, count):
            candidates.append([zero] + list(chosen))
    best = _oracle_best(candidates, coords, y)
    return _oracle_model(best, coords, y, space.names)
