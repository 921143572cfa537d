"""Model normal form: sums of terms c_k * prod_l x_l^i * log2(x_l)^j.

Monomial exponents are exact rationals and log exponents are small
non-negative integers, so model structures can be compared, deduplicated,
and ordered exactly; floats only enter when a model is evaluated.

A skeleton is the coefficient-free counterpart of a model: a list of basis
functions whose coefficients get fitted later. Basis functions (and terms
of fitted skeleton models) may carry a single (p-1)/p factor on the
parameter that counts MPI ranks; asymptotically it contributes exponent 0.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .errors import ValidationError

# (monomial exponent, log2 exponent) for one parameter
Expo = tuple[Fraction, int]

GENERIC = "generic"
ALPHA = "alpha"
BETA = "beta"
GAMMA = "gamma"
_LABELS = (GENERIC, ALPHA, BETA, GAMMA)
_LABEL_GLYPHS = {ALPHA: "α", BETA: "β", GAMMA: "γ"}


def default_exponent_sets() -> tuple[list[Fraction], list[int]]:
    """The preset search-space exponents: 20 rationals and J = {0, 1, 2}."""
    i_set = [
        Fraction(0),
        Fraction(1, 4),
        Fraction(1, 3),
        Fraction(1, 2),
        Fraction(2, 3),
        Fraction(3, 4),
        Fraction(4, 5),
        Fraction(1),
        Fraction(5, 4),
        Fraction(4, 3),
        Fraction(3, 2),
        Fraction(5, 3),
        Fraction(7, 4),
        Fraction(2),
        Fraction(9, 4),
        Fraction(7, 3),
        Fraction(5, 2),
        Fraction(8, 3),
        Fraction(11, 4),
        Fraction(3),
    ]
    return i_set, [0, 1, 2]


def _coerce_exponents(exponents: Iterable) -> tuple[Expo, ...]:
    out = []
    for pair in exponents:
        i, j = pair
        out.append((Fraction(i), int(j)))
    return tuple(out)


def _is_zero(exponents: Sequence[Expo]) -> bool:
    return all(i == 0 and j == 0 for i, j in exponents)


def exponent_signature(
    exponents: Sequence[Expo], ranks_fraction: str | None = None
) -> tuple:
    """Total-order key for one term/basis: (sum i, sum j, pairs, factor)."""
    total_i = sum((i for i, _ in exponents), Fraction(0))
    total_j = sum(j for _, j in exponents)
    return (total_i, total_j, tuple(exponents), ranks_fraction or "")


@dataclass(frozen=True)
class Term:
    """One model term: coefficient times a product of parameter factors."""

    coefficient: float
    exponents: tuple[Expo, ...]
    ranks_fraction: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "exponents", _coerce_exponents(self.exponents))
        object.__setattr__(self, "coefficient", float(self.coefficient))
        if _is_zero(self.exponents) and self.ranks_fraction is None:
            raise ValidationError("term with all-zero exponents is the constant")

    def signature(self) -> tuple:
        return exponent_signature(self.exponents, self.ranks_fraction)


@dataclass(frozen=True)
class PmnfModel:
    """A fitted model: constant plus terms over named parameters."""

    constant: float
    terms: tuple[Term, ...]
    space_names: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "terms", tuple(self.terms))
        object.__setattr__(self, "space_names", tuple(self.space_names))
        object.__setattr__(self, "constant", float(self.constant))
        if not self.space_names:
            raise ValidationError("model needs at least one parameter name")
        for t in self.terms:
            if len(t.exponents) != len(self.space_names):
                raise ValidationError("term exponent count does not match parameters")
            if t.ranks_fraction is not None and t.ranks_fraction not in self.space_names:
                raise ValidationError(
                    f"ranks fraction parameter {t.ranks_fraction!r} not in space"
                )
        sigs = [t.signature() for t in self.terms]
        if len(set(sigs)) != len(sigs):
            raise ValidationError("duplicate term structure in model")


@dataclass(frozen=True)
class BasisFunction:
    """A coefficient-free product of parameter factors."""

    exponents: tuple[Expo, ...]
    ranks_fraction: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "exponents", _coerce_exponents(self.exponents))

    @property
    def is_constant(self) -> bool:
        return _is_zero(self.exponents) and self.ranks_fraction is None

    def signature(self) -> tuple:
        return exponent_signature(self.exponents, self.ranks_fraction)


def constant_basis(n_params: int) -> BasisFunction:
    return BasisFunction(((Fraction(0), 0),) * n_params)


@dataclass(frozen=True)
class Skeleton:
    """Basis list (constant first) with per-basis coefficient labels."""

    space_names: tuple[str, ...]
    bases: tuple[BasisFunction, ...]
    labels: tuple[str, ...] = field(default=())

    def __post_init__(self):
        object.__setattr__(self, "space_names", tuple(self.space_names))
        object.__setattr__(self, "bases", tuple(self.bases))
        if not self.labels:
            object.__setattr__(self, "labels", (GENERIC,) * len(self.bases))
        object.__setattr__(self, "labels", tuple(self.labels))
        if not self.bases:
            raise ValidationError("skeleton needs at least the constant basis")
        if len(self.labels) != len(self.bases):
            raise ValidationError("one label per basis function required")
        for lab in self.labels:
            if lab not in _LABELS:
                raise ValidationError(f"unknown coefficient label {lab!r}")
        if not self.bases[0].is_constant:
            raise ValidationError("first basis function must be the constant")
        n_const = sum(1 for b in self.bases if b.is_constant)
        if n_const != 1:
            raise ValidationError("constant basis must appear exactly once")
        for b in self.bases:
            if len(b.exponents) != len(self.space_names):
                raise ValidationError("basis exponent count does not match parameters")
            if b.ranks_fraction is not None and b.ranks_fraction not in self.space_names:
                raise ValidationError(
                    f"ranks fraction parameter {b.ranks_fraction!r} not in space"
                )
        sigs = [b.signature() for b in self.bases]
        if len(set(sigs)) != len(sigs):
            raise ValidationError("duplicate basis function in skeleton")

    @property
    def size(self) -> int:
        return len(self.bases)


def _factor_value(values: Sequence[float], names: Sequence[str], param: str) -> float:
    x = values[names.index(param)]
    return (x - 1.0) / x


def _check_coordinate(values: Sequence[float], n_params: int) -> None:
    if len(values) != n_params:
        raise ValidationError(
            f"coordinate has {len(values)} values, expected {n_params}"
        )


def evaluate(model: PmnfModel, at: Sequence[float]) -> float:
    """Evaluate the model at one coordinate (values aligned with names)."""
    _check_coordinate(at, len(model.space_names))
    total = model.constant
    for t in model.terms:
        v = t.coefficient
        for x, (i, j) in zip(at, t.exponents):
            if i:
                v *= float(x) ** float(i)
            if j:
                v *= np.log2(x) ** j
        if t.ranks_fraction is not None:
            v *= _factor_value(at, model.space_names, t.ranks_fraction)
        total += v
    return float(total)


def evaluate_basis(skel: Skeleton, at: Sequence[float]) -> np.ndarray:
    """One value per basis function at a coordinate; constant gives 1."""
    _check_coordinate(at, len(skel.space_names))
    out = np.empty(len(skel.bases))
    for c, b in enumerate(skel.bases):
        v = 1.0
        for x, (i, j) in zip(at, b.exponents):
            if i:
                v *= float(x) ** float(i)
            if j:
                v *= np.log2(x) ** j
        if b.ranks_fraction is not None:
            v *= _factor_value(at, skel.space_names, b.ranks_fraction)
        out[c] = v
    return out


def design_matrix(skel: Skeleton, coords: np.ndarray) -> np.ndarray:
    """Design matrix (one row per coordinate) for fitting the skeleton."""
    coords = np.asarray(coords, dtype=float)
    if coords.ndim != 2 or coords.shape[1] != len(skel.space_names):
        raise ValidationError("coordinate array does not match parameter count")
    logs = np.log2(coords)
    a = np.empty((coords.shape[0], len(skel.bases)))
    for c, b in enumerate(skel.bases):
        col = np.ones(coords.shape[0])
        for l, (i, j) in enumerate(b.exponents):
            if i:
                col = col * coords[:, l] ** float(i)
            if j:
                col = col * logs[:, l] ** j
        if b.ranks_fraction is not None:
            l = skel.space_names.index(b.ranks_fraction)
            col = col * (coords[:, l] - 1.0) / coords[:, l]
        a[:, c] = col
    return a


def leading_from_terms(
    term_exponents: Iterable[Sequence[Expo]], n_params: int
) -> tuple[Expo, ...]:
    """Per-parameter leading (i, j): max i, then max j among terms at max i."""
    lead: list[Expo] = [(Fraction(0), 0)] * n_params
    terms = list(term_exponents)
    for l in range(n_params):
        if not terms:
            continue
        i_star = max(t[l][0] for t in terms)
        j_star = max(t[l][1] for t in terms if t[l][0] == i_star)
        lead[l] = (i_star, j_star)
    return tuple(lead)


def leading_exponents(model: PmnfModel) -> dict[str, Expo]:
    """Leading (monomial, log) exponent per parameter; constants give (0, 0)."""
    lead = leading_from_terms((t.exponents for t in model.terms), len(model.space_names))
    return dict(zip(model.space_names, lead))


def _format_number(v: float) -> str:
    if v == int(v) and abs(v) < 1e15:
        return str(int(v))
    return repr(v)


def _format_exponent(i: Fraction) -> str:
    if i.denominator == 1:
        return str(i.numerator)
    return f"({i.numerator}/{i.denominator})"


def _format_factors(
    exponents: Sequence[Expo], names: Sequence[str], ranks_fraction: str | None
) -> list[str]:
    parts = []
    for name, (i, j) in zip(names, exponents):
        if i == 1:
            parts.append(name)
        elif i != 0:
            parts.append(f"{name}^{_format_exponent(i)}")
        if j == 1:
            parts.append(f"log2({name})")
        elif j != 0:
            parts.append(f"log2({name})^{j}")
    if ranks_fraction is not None:
        parts.append(f"({ranks_fraction}-1)/{ranks_fraction}")
    return parts


def render(obj: PmnfModel | Skeleton) -> str:
    """Canonical human-readable form, terms ordered by exponent signature."""
    if isinstance(obj, PmnfModel):
        parts = []
        if obj.constant != 0 or not obj.terms:
            parts.append(_format_number(obj.constant))
        for t in sorted(obj.terms, key=Term.signature):
            factors = _format_factors(t.exponents, obj.space_names, t.ranks_fraction)
            parts.append(" * ".join([_format_number(t.coefficient)] + factors))
        return " + ".join(parts)
    if isinstance(obj, Skeleton):
        parts = []
        generic_idx = 0
        order = sorted(range(len(obj.bases)), key=lambda c: obj.bases[c].signature())
        for c in order:
            basis, label = obj.bases[c], obj.labels[c]
            if label == GENERIC:
                symbol = f"c{generic_idx}"
                generic_idx += 1
            else:
                symbol = _LABEL_GLYPHS[label]
            factors = _format_factors(
                basis.exponents, obj.space_names, basis.ranks_fraction
            )
            parts.append(" * ".join([symbol] + factors) if factors else symbol)
        return " + ".join(parts)
    raise TypeError(f"cannot render {type(obj).__name__}")


def model_from_skeleton(
    skel: Skeleton, coefficients: Sequence[float]
) -> PmnfModel:
    """Bind fitted coefficients to a skeleton, giving a model."""
    if len(coefficients) != len(skel.bases):
        raise ValidationError("coefficient count does not match basis count")
    terms = [
        Term(float(c), b.exponents, b.ranks_fraction)
        for c, b in zip(coefficients[1:], skel.bases[1:])
    ]
    return PmnfModel(float(coefficients[0]), tuple(terms), skel.space_names)


def skeleton_from_model(model: PmnfModel, labels: str = GENERIC) -> Skeleton:
    """Strip coefficients from a model, keeping its structure."""
    n = len(model.space_names)
    bases = [constant_basis(n)]
    seen = {bases[0].signature()}
    for t in sorted(model.terms, key=Term.signature):
        b = BasisFunction(t.exponents, t.ranks_fraction)
        if b.signature() not in seen:
            seen.add(b.signature())
            bases.append(b)
    return Skeleton(model.space_names, tuple(bases), (labels,) * len(bases))
