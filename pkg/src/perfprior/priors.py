"""Noise-resilient dynamic priors from effort metrics.

Computation priors keep the exponents of the basic-block model and drop
its coefficients. Communication priors embed the transferred-bytes model B
into the standard cost forms of MPI operations (latency alpha, per-byte
transfer beta, per-byte computation gamma):

    send/receive        alpha + B beta
    broadcast           log2(p) alpha + B beta
    scatter/gather/
    allgather           log2(p) alpha + B (p-1)/p beta
    reduce/allreduce    log2(p) alpha + (beta + (p-1)/p gamma) B
    barrier             log2(p) alpha

Barrier carries no payload; its log2(p) latency form follows the same
tree-transfer argument as the collectives and is our extension. The
constant of the bytes model is dropped when forming B terms: a constant
payload is absorbed by the skeleton's constant and latency bases.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .dataset import (
    METRIC_BASIC_BLOCKS,
    METRIC_BYTES,
    METRIC_TIME,
    KIND_COMPUTATION,
    CallPath,
    ExperimentSet,
    MpiOp,
    aggregate,
)
from .errors import ModelingError, ValidationError
from .modeler import fit_skeleton_to_time, search
from .pmnf import (
    ALPHA,
    BETA,
    GAMMA,
    GENERIC,
    BasisFunction,
    PmnfModel,
    Skeleton,
    constant_basis,
)

INT_SIZE = 4
DOUBLE_SIZE = 8


@dataclass(frozen=True)
class CommPrior:
    """Labeled skeleton for one communication operation."""

    op: MpiOp
    skeleton: Skeleton


def derive_computation_prior(bb_model: PmnfModel) -> Skeleton:
    """Constant basis plus one basis per basic-block-model term."""
    n = len(bb_model.space_names)
    bases = [constant_basis(n)]
    labels = [GENERIC]
    seen = {bases[0].signature()}
    for term in sorted(bb_model.terms, key=lambda t: t.signature()):
        b = BasisFunction(term.exponents, term.ranks_fraction)
        if b.signature() in seen:
            continue
        seen.add(b.signature())
        bases.append(b)
        labels.append(GENERIC)
    return Skeleton(bb_model.space_names, tuple(bases), tuple(labels))


def derive_communication_prior(
    op: MpiOp | str, bytes_model: PmnfModel, ranks_param: str
) -> CommPrior:
    """Embed the bytes model's structural terms into the op's cost form."""
    op = MpiOp(op)
    names = bytes_model.space_names
    if ranks_param not in names:
        raise ValidationError(f"ranks parameter {ranks_param!r} not in space")
    n = len(names)
    ranks_axis = names.index(ranks_param)

    log_exps: list = [(Fraction(0), 0)] * n
    log_exps[ranks_axis] = (Fraction(0), 1)
    log_basis = BasisFunction(tuple(log_exps))
    b_terms = [
        BasisFunction(t.exponents)
        for t in sorted(bytes_model.terms, key=lambda t: t.signature())
    ]
    b_frac_terms = [
        BasisFunction(b.exponents, ranks_param) for b in b_terms
    ]

    bases: list[BasisFunction] = [constant_basis(n)]
    labels: list[str] = [GENERIC]
    if op in (MpiOp.SEND, MpiOp.RECEIVE):
        parts = [(b, BETA) for b in b_terms]
    elif op is MpiOp.BROADCAST:
        parts = [(log_basis, ALPHA)] + [(b, BETA) for b in b_terms]
    elif op in (MpiOp.SCATTER, MpiOp.GATHER, MpiOp.ALLGATHER):
        parts = [(log_basis, ALPHA)] + [(b, BETA) for b in b_frac_terms]
    elif op in (MpiOp.REDUCE, MpiOp.ALLREDUCE):
        parts = (
            [(log_basis, ALPHA)]
            + [(b, BETA) for b in b_terms]
            + [(b, GAMMA) for b in b_frac_terms]
        )
    elif op is MpiOp.BARRIER:
        parts = [(log_basis, ALPHA)]
    else:  # pragma: no cover - MpiOp is a closed enum
        raise ValidationError(f"unknown MPI operation {op!r}")

    seen = {bases[0].signature()}
    for basis, label in parts:
        if basis.signature() in seen:
            continue
        seen.add(basis.signature())
        bases.append(basis)
        labels.append(label)
    return CommPrior(op, Skeleton(names, tuple(bases), tuple(labels)))


def account_bytes(
    op: MpiOp | str, elem_count: int, elem_size: int, p: int
) -> tuple[int, int]:
    """Bytes moved by one operation: (at the root, at each target).

    elem_count counts elements of elem_size bytes per endpoint payload,
    e.g. a broadcast of n ints to p ranks accounts n*4 bytes at each
    target and p*n*4 at the root.
    """
    op = MpiOp(op)
    if elem_count < 0 or int(elem_count) != elem_count:
        raise ValidationError("elem_count must be a non-negative integer")
    if elem_size <= 0 or int(elem_size) != elem_size:
        raise ValidationError("elem_size must be a positive integer")
    if p < 1 or int(p) != p:
        raise ValidationError("rank count must be a positive integer")
    payload = int(elem_count) * int(elem_size)
    if op is MpiOp.BARRIER:
        return 0, 0
    if op in (MpiOp.SEND, MpiOp.RECEIVE):
        return payload, payload
    # collectives: the root (or every rank, for all- variants) aggregates
    # one payload per rank
    return int(p) * payload, payload


def model_effort(
    exp: ExperimentSet, callpath: CallPath | str, metric: str
) -> PmnfModel:
    """Model how an effort metric scales, from median-aggregated data."""
    if metric not in (METRIC_BASIC_BLOCKS, METRIC_BYTES):
        raise ValidationError(f"{metric!r} is not an effort metric")
    cp, metrics = _resolve(exp, callpath)
    if metric not in metrics:
        raise ModelingError(f"call path {cp.name!r} lacks metric {metric!r}")
    data = aggregate(metrics[metric], "median")
    return search(data, exp.space)


def build_swc_model(
    exp: ExperimentSet, callpath: CallPath | str, ranks_param: str | None = None
) -> PmnfModel:
    """Software-counter-based model: effort-derived prior fitted to time.

    The prior fixes the structure; time measurements only set coefficients,
    so the leading exponents are invariant under any change of the time
    metric. ranks_param defaults to the first space parameter.
    """
    cp, metrics = _resolve(exp, callpath)
    if ranks_param is None:
        ranks_param = exp.space.names[0]
    if cp.kind == KIND_COMPUTATION:
        skeleton = derive_computation_prior(
            model_effort(exp, cp, METRIC_BASIC_BLOCKS)
        )
    else:
        bytes_model = model_effort(exp, cp, METRIC_BYTES)
        skeleton = derive_communication_prior(
            cp.mpi_op, bytes_model, ranks_param
        ).skeleton
    if METRIC_TIME not in metrics:
        raise ModelingError(f"call path {cp.name!r} lacks metric {METRIC_TIME!r}")
    time_data = aggregate(metrics[METRIC_TIME], "median")
    return fit_skeleton_to_time(skeleton, time_data)


def _resolve(exp: ExperimentSet, callpath: CallPath | str):
    name = callpath.name if isinstance(callpath, CallPath) else callpath
    return exp.callpath(name)
