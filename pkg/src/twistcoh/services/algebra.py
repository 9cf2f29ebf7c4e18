from __future__ import annotations

from dataclasses import dataclass
from enum import StrEnum
from functools import cached_property
from typing import TYPE_CHECKING, Any

import numpy as np
import structlog
from opentelemetry import trace

from twistcoh.core.linalg import (
    LinearSolver,
    QuotientBasis,
    SingularMatrixError,
    column_basis,
    dot,
    hstack,
    identity,
    invert_array,
    is_zero,
    kron,
    null_space,
    rank_of,
    zeros,
)

if TYPE_CHECKING:
    from collections.abc import Mapping, Sequence

    from twistcoh.core.field import Field

logger = structlog.get_logger()
tracer = trace.get_tracer(__name__)


class RadicalCheck(StrEnum):
    FULL = "full"
    PARTIAL = "partial"


@dataclass(frozen=True, eq=False)
class Algebra:
    """A finite-dimensional algebra given by structure constants.

    ``structure[i, j]`` holds the coordinates of ``basis_i * basis_j``. The radical
    is stored as a matrix whose columns span it. Instances compare by identity.
    """

    name: str
    field: Field
    basis_labels: tuple[str, ...]
    structure: np.ndarray
    unit: np.ndarray
    radical: np.ndarray
    idempotents: tuple[np.ndarray, ...] = ()
    grading: tuple[int, ...] | None = None
    radical_check: RadicalCheck = RadicalCheck.FULL
    enveloped: Algebra | None = None

    @property
    def dim(self) -> int:
        return len(self.basis_labels)

    @property
    def is_local(self) -> bool:
        return self.radical.shape[1] == self.dim - 1

    @property
    def is_enveloping(self) -> bool:
        return self.enveloped is not None

    @cached_property
    def left_stack(self) -> np.ndarray:
        # left_stack[i] is the matrix of v -> basis_i * v
        return self.structure.transpose(0, 2, 1)

    @cached_property
    def right_stack(self) -> np.ndarray:
        # right_stack[j] is the matrix of v -> v * basis_j
        return self.structure.transpose(1, 2, 0)

    @cached_property
    def left_entries(self) -> np.ndarray:
        return np.argwhere(self.left_stack != 0)

    @cached_property
    def unit_index(self) -> int | None:
        support = np.flatnonzero(self.unit != 0)
        if support.size == 1 and self.unit[support[0]] == 1:
            return int(support[0])
        return None

    def basis_vector(self, i: int) -> np.ndarray:
        v = zeros(self.dim)
        v[i] = 1
        return v

    def vector(self, coeffs: Mapping[str, Any]) -> np.ndarray:
        v = zeros(self.dim)
        for label, value in coeffs.items():
            if label not in self.basis_labels:
                msg = f"{self.name} has no basis element {label!r}"
                raise AlgebraShapeError(msg)
            v[self.basis_labels.index(label)] = self.field.coerce(value)
        return v

    def _combine(self, stack: np.ndarray, a: np.ndarray) -> np.ndarray:
        support = np.flatnonzero(a != 0)
        if support.size == 0:
            return zeros((self.dim, self.dim))
        return self.field.reduce(np.tensordot(a[support], stack[support], axes=1))

    def left_matrix(self, a: np.ndarray) -> np.ndarray:
        return self._combine(self.left_stack, a)

    def right_matrix(self, a: np.ndarray) -> np.ndarray:
        return self._combine(self.right_stack, a)

    def mul(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        left = np.flatnonzero(a != 0)
        right = np.flatnonzero(b != 0)
        if left.size == 0 or right.size == 0:
            return zeros(self.dim)
        block = self.structure[np.ix_(left, right)]
        partial = np.tensordot(a[left], block, axes=1)
        return self.field.reduce(np.tensordot(b[right], partial, axes=1))

    def format_vector(self, v: np.ndarray) -> str:
        terms = [
            f"{self.field.format(c)}*{label}"
            for c, label in zip(v, self.basis_labels, strict=True)
            if c != 0
        ]
        return " + ".join(terms) if terms else "0"

    @cached_property
    def radical_square(self) -> np.ndarray:
        if self.radical.shape[1] == 0:
            return zeros((self.dim, 0))
        products = [dot(self.field, self.left_matrix(r), self.radical) for r in self.radical.T]
        return column_basis(self.field, hstack(products, self.dim))

    @cached_property
    def radical_generators(self) -> tuple[np.ndarray, ...]:
        """Lifts of a basis of rad/rad^2; rad is the right ideal they generate."""
        quotient = QuotientBasis(self.field, self.radical_square, self.radical)
        return tuple(quotient.representatives().T)

    @cached_property
    def generators(self) -> tuple[np.ndarray, ...]:
        """Algebra generators: a complement of the radical plus ``radical_generators``."""
        complement = QuotientBasis(self.field, self.radical, identity(self.dim))
        gens = list(complement.representatives().T) + list(self.radical_generators)
        span = column_basis(self.field, hstack([self.unit, *gens], self.dim))
        while True:
            grown = [span] + [dot(self.field, self.left_matrix(g), span) for g in gens]
            wider = column_basis(self.field, hstack(grown, self.dim))
            if wider.shape[1] == span.shape[1]:
                break
            span = wider
        if span.shape[1] < self.dim:
            logger.debug("generator_closure_incomplete", algebra=self.name)
            return tuple(self.basis_vector(i) for i in range(self.dim))
        return tuple(gens)

    @cached_property
    def envelope(self) -> Algebra:
        return _build_enveloping(self)


def validate_algebra(
    name: str,
    field: Field,
    basis_labels: Sequence[str],
    structure: Any,
    unit: Any,
    radical: Any | None = None,
    idempotents: Sequence[Any] = (),
    grading: Sequence[int] | None = None,
) -> Algebra:
    with tracer.start_as_current_span("algebra.validate", attributes={"algebra.name": name}):
        labels = tuple(basis_labels)
        d = len(labels)
        c = field.array(structure)
        u = field.array(unit)
        if c.shape != (d, d, d) or u.shape != (d,):
            msg = f"{name}: structure must be {d}x{d}x{d} and unit of length {d}"
            raise AlgebraShapeError(msg)
        if len(set(labels)) != d:
            msg = f"{name}: basis labels must be distinct"
            raise AlgebraShapeError(msg)

        draft = Algebra(name, field, labels, c, u, zeros((d, 0)))
        check_associative(draft)
        _check_unit(draft)

        supplied = None if radical is None else field.array(radical).reshape(d, -1)
        rad, check = _resolve_radical(draft, supplied)
        idems = tuple(field.array(e) for e in idempotents)
        algebra = Algebra(
            name,
            field,
            labels,
            c,
            u,
            rad,
            idems,
            tuple(grading) if grading is not None else None,
            check,
        )
        if idems:
            _check_idempotents(algebra)
        if algebra.grading is not None:
            _check_grading(algebra)
        logger.debug(
            "algebra_validated", algebra=name, dim=d, radical_dim=rad.shape[1], check=check
        )
        return algebra


def check_associative(algebra: Algebra) -> None:
    """Brute force over basis triples, as ``L(b_i b_j) == L_i L_j`` for all i, j."""
    field = algebra.field
    stack = algebra.left_stack
    lhs = np.tensordot(algebra.structure, stack, axes=([2], [0]))
    rhs = np.matmul(stack[:, None], stack[None, :])
    bad = np.argwhere(field.reduce(lhs - rhs) != 0)
    if bad.size:
        i, j, _, k = (int(v) for v in bad[0])
        labels = algebra.basis_labels
        msg = (
            f"{algebra.name}: ({labels[i]}*{labels[j]})*{labels[k]} "
            f"!= {labels[i]}*({labels[j]}*{labels[k]})"
        )
        raise NonAssociativeError(msg)


def _check_unit(algebra: Algebra) -> None:
    ident = identity(algebra.dim)
    if not is_zero(algebra.left_matrix(algebra.unit) - ident) or not is_zero(
        algebra.right_matrix(algebra.unit) - ident
    ):
        msg = f"{algebra.name}: unit is not a two-sided identity"
        raise BadUnitError(msg)


def trace_form(algebra: Algebra) -> np.ndarray:
    stack = algebra.left_stack
    return algebra.field.reduce(np.tensordot(stack, stack, axes=([1, 2], [2, 1])))


def _same_span(algebra: Algebra, a: np.ndarray, b: np.ndarray) -> bool:
    field = algebra.field
    ra = rank_of(field, a)
    return ra == rank_of(field, b) == rank_of(field, np.hstack([a, b]))


def _resolve_radical(
    algebra: Algebra, supplied: np.ndarray | None
) -> tuple[np.ndarray, RadicalCheck]:
    field = algebra.field
    p = field.characteristic
    kernel = null_space(field, trace_form(algebra))
    if p == 0:
        if supplied is not None and not _same_span(algebra, supplied, kernel):
            msg = f"{algebra.name}: supplied radical differs from the trace-form radical"
            raise BadRadicalError(msg)
        return column_basis(field, kernel), RadicalCheck.FULL

    if supplied is None:
        msg = f"{algebra.name}: algebras over {field.name} need an explicit radical"
        raise BadRadicalError(msg)
    rad = column_basis(field, supplied)
    _check_ideal(algebra, rad)
    _check_nilpotent(algebra, rad)
    if p > algebra.dim:
        if not _same_span(algebra, rad, kernel):
            msg = f"{algebra.name}: quotient by the supplied radical is not semisimple"
            raise BadRadicalError(msg)
        return rad, RadicalCheck.FULL
    logger.info("radical_partially_verified", algebra=algebra.name, characteristic=p)
    return rad, RadicalCheck.PARTIAL


def _check_ideal(algebra: Algebra, rad: np.ndarray) -> None:
    field = algebra.field
    d, r = rad.shape
    if r == 0:
        return
    solver = LinearSolver(field, rad)
    for stack in (algebra.left_stack, algebra.right_stack):
        images = np.tensordot(stack, rad, axes=([2], [0])).transpose(1, 0, 2).reshape(d, d * r)
        if not solver.solvable(field.reduce(images)):
            msg = f"{algebra.name}: radical is not a two-sided ideal"
            raise BadRadicalError(msg)


def _check_nilpotent(algebra: Algebra, rad: np.ndarray) -> None:
    field = algebra.field
    power = rad
    for _ in range(algebra.dim + 1):
        if power.shape[1] == 0:
            return
        products = [dot(field, algebra.left_matrix(r), power) for r in rad.T]
        following = column_basis(field, hstack(products, algebra.dim))
        if following.shape[1] >= power.shape[1]:
            break
        power = following
    msg = f"{algebra.name}: radical is not nilpotent"
    raise RadicalNotNilpotentError(msg)


def _check_idempotents(algebra: Algebra) -> None:
    total = zeros(algebra.dim)
    for i, e in enumerate(algebra.idempotents):
        total = algebra.field.reduce(total + e)
        for j, f in enumerate(algebra.idempotents):
            expected = e if i == j else zeros(algebra.dim)
            if not is_zero(algebra.mul(e, f) - expected):
                msg = f"{algebra.name}: idempotents {i} and {j} are not orthogonal idempotents"
                raise BadIdempotentsError(msg)
    if not is_zero(total - algebra.unit):
        msg = f"{algebra.name}: idempotents do not sum to the unit"
        raise BadIdempotentsError(msg)


def _check_grading(algebra: Algebra) -> None:
    grading = algebra.grading
    if grading is None:
        return
    if len(grading) != algebra.dim:
        msg = f"{algebra.name}: grading needs {algebra.dim} degrees"
        raise BadGradingError(msg)
    for i, j, k in np.argwhere(algebra.structure != 0):
        if grading[int(k)] != grading[int(i)] + grading[int(j)]:
            msg = f"{algebra.name}: product of basis {i} and {j} is not homogeneous"
            raise BadGradingError(msg)


def opposite(algebra: Algebra) -> Algebra:
    return Algebra(
        name=f"{algebra.name}^op",
        field=algebra.field,
        basis_labels=algebra.basis_labels,
        structure=algebra.structure.transpose(1, 0, 2).copy(),
        unit=algebra.unit,
        radical=algebra.radical,
        idempotents=algebra.idempotents,
        grading=algebra.grading,
        radical_check=algebra.radical_check,
    )


def enveloping(algebra: Algebra) -> Algebra:
    return algebra.envelope


def _build_enveloping(algebra: Algebra) -> Algebra:
    with tracer.start_as_current_span(
        "algebra.enveloping", attributes={"algebra.name": algebra.name}
    ):
        field = algebra.field
        d = algebra.dim
        c = algebra.structure
        flipped = c.transpose(1, 0, 2)
        # (a (x) b)(a' (x) b') = aa' (x) b'b on index pairs (i, j)
        structure = field.reduce(
            (c[:, None, :, None, :, None] * flipped[None, :, None, :, None, :]).reshape(
                d * d, d * d, d * d
            )
        )
        labels = tuple(f"{a}|{b}" for a in algebra.basis_labels for b in algebra.basis_labels)
        ident = identity(d)
        radical = column_basis(
            field, np.hstack([kron(algebra.radical, ident), kron(ident, algebra.radical)])
        )
        idempotents = tuple(kron(e, f) for e in algebra.idempotents for f in algebra.idempotents)
        grading = (
            tuple(g + h for g in algebra.grading for h in algebra.grading)
            if algebra.grading is not None
            else None
        )
        return Algebra(
            name=f"{algebra.name}^e",
            field=field,
            basis_labels=labels,
            structure=structure,
            unit=kron(algebra.unit, algebra.unit),
            radical=radical,
            idempotents=idempotents,
            grading=grading,
            radical_check=algebra.radical_check,
            enveloped=algebra,
        )


def center(algebra: Algebra) -> list[np.ndarray]:
    with tracer.start_as_current_span("algebra.center", attributes={"algebra.name": algebra.name}):
        d = algebra.dim
        commutators = (algebra.left_stack - algebra.right_stack).reshape(d, d * d).T
        kernel = null_space(algebra.field, algebra.field.reduce(commutators))
        return list(kernel.T)


@dataclass(frozen=True, eq=False)
class AlgebraMorphism:
    source: Algebra
    target: Algebra
    matrix: np.ndarray
    name: str = ""

    @property
    def is_endomorphism(self) -> bool:
        return self.source is self.target

    @cached_property
    def rank(self) -> int:
        return rank_of(self.source.field, self.matrix)

    @property
    def is_automorphism(self) -> bool:
        return self.is_endomorphism and self.rank == self.source.dim

    @cached_property
    def fingerprint(self) -> tuple[str, ...]:
        return tuple(self.source.field.format(v) for v in self.matrix.flat)

    @cached_property
    def is_identity(self) -> bool:
        return self.is_endomorphism and is_zero(self.matrix - identity(self.source.dim))

    @cached_property
    def inverse(self) -> AlgebraMorphism:
        if not self.is_automorphism:
            msg = f"{self.name or 'morphism'} is not invertible"
            raise NotInvertibleError(msg)
        try:
            inv = invert_array(self.source.field, self.matrix)
        except SingularMatrixError as e:
            msg = f"{self.name or 'morphism'} is not invertible"
            raise NotInvertibleError(msg) from e
        return AlgebraMorphism(self.target, self.source, inv, f"{self.name}^-1")

    def apply(self, v: np.ndarray) -> np.ndarray:
        return dot(self.source.field, self.matrix, v)


def validate_morphism(
    source: Algebra, target: Algebra, matrix: Any, name: str = ""
) -> AlgebraMorphism:
    field = source.field
    f = field.array(matrix)
    if f.shape != (target.dim, source.dim):
        msg = f"{name}: matrix must be {target.dim}x{source.dim}, got {f.shape}"
        raise MorphismError(msg)
    lhs = np.tensordot(source.structure, f.T, axes=([2], [0]))
    partial = np.tensordot(f, target.structure, axes=([0], [0]))
    rhs = np.tensordot(partial, f, axes=([1], [0])).transpose(0, 2, 1)
    if not is_zero(field.reduce(lhs - rhs)):
        msg = f"{name}: map is not multiplicative"
        raise NotMultiplicativeError(msg)
    if not is_zero(dot(field, f, source.unit) - target.unit):
        msg = f"{name}: map does not preserve the unit"
        raise NotMultiplicativeError(msg)
    morphism = AlgebraMorphism(source, target, f, name)
    if morphism.is_automorphism and source.radical.shape[1]:
        image = dot(field, f, source.radical)
        if not LinearSolver(field, source.radical).solvable(image):
            msg = f"{name}: automorphism does not preserve the radical"
            raise MorphismError(msg)
    return morphism


def identity_morphism(algebra: Algebra) -> AlgebraMorphism:
    return AlgebraMorphism(algebra, algebra, identity(algebra.dim), "id")


def compose_morphisms(f: AlgebraMorphism, g: AlgebraMorphism) -> AlgebraMorphism:
    """``f o g``: apply g first."""
    if g.target is not f.source:
        msg = f"Cannot compose {f.name} after {g.name}"
        raise MorphismError(msg)
    matrix = dot(f.source.field, f.matrix, g.matrix)
    return AlgebraMorphism(g.source, f.target, matrix, f"{f.name}*{g.name}")


def power(f: AlgebraMorphism, n: int) -> AlgebraMorphism:
    if not f.is_endomorphism:
        msg = f"{f.name} is not an endomorphism"
        raise MorphismError(msg)
    if n == 0:
        return identity_morphism(f.source)
    if n == 1:
        return f
    base = f.inverse if n < 0 else f
    result = identity_morphism(f.source)
    square = base
    k = abs(n)
    while k:
        if k & 1:
            result = compose_morphisms(result, square)
        k >>= 1
        if k:
            square = compose_morphisms(square, square)
    return AlgebraMorphism(f.source, f.source, result.matrix, f"{f.name}^{n}")


def enveloping_morphism(f: AlgebraMorphism, g: AlgebraMorphism) -> AlgebraMorphism:
    """``a (x) b -> f(a) (x) g(b)`` on the enveloping algebra."""
    if not (f.is_endomorphism and g.is_endomorphism and f.source is g.source):
        msg = "Enveloping morphisms need two endomorphisms of one algebra"
        raise MorphismError(msg)
    env = enveloping(f.source)
    return AlgebraMorphism(env, env, kron(f.matrix, g.matrix), f"{f.name}(x){g.name}")


@dataclass(frozen=True, eq=False)
class FrobeniusForm:
    algebra: Algebra
    functional: np.ndarray

    @cached_property
    def gram(self) -> np.ndarray:
        return self.algebra.field.reduce(
            np.tensordot(self.algebra.structure, self.functional, axes=([2], [0]))
        )


def validate_form(algebra: Algebra, functional: Any) -> FrobeniusForm:
    form = FrobeniusForm(algebra, algebra.field.array(functional))
    if form.functional.shape != (algebra.dim,):
        msg = f"Form needs {algebra.dim} coefficients"
        raise DegenerateFormError(msg)
    if rank_of(algebra.field, form.gram) < algebra.dim:
        msg = f"Form on {algebra.name} is degenerate"
        raise DegenerateFormError(msg)
    return form


def nakayama(form: FrobeniusForm) -> AlgebraMorphism:
    """The automorphism with ``form(g * x) == form(nu(x) * g)`` for all g, x."""
    algebra = form.algebra
    field = algebra.field
    with tracer.start_as_current_span(
        "algebra.nakayama", attributes={"algebra.name": algebra.name}
    ):
        gram = form.gram
        try:
            transposed_inverse = invert_array(field, gram.T)
        except SingularMatrixError as e:
            msg = f"Form on {algebra.name} is degenerate"
            raise DegenerateFormError(msg) from e
        matrix = dot(field, transposed_inverse, gram)
        if not is_zero(dot(field, gram.T, matrix) - gram):
            msg = f"Nakayama identity fails on {algebra.name}"
            raise DegenerateFormError(msg)
        nu = validate_morphism(algebra, algebra, matrix, "nu")
        logger.debug("nakayama_computed", algebra=algebra.name)
        return nu


class AlgebraError(Exception):
    pass


class AlgebraShapeError(AlgebraError):
    pass


class NonAssociativeError(AlgebraError):
    pass


class BadUnitError(AlgebraError):
    pass


class RadicalNotNilpotentError(AlgebraError):
    pass


class BadRadicalError(AlgebraError):
    pass


class BadIdempotentsError(AlgebraError):
    pass


class BadGradingError(AlgebraError):
    pass


class MorphismError(AlgebraError):
    pass


class NotMultiplicativeError(MorphismError):
    pass


class NotInvertibleError(MorphismError):
    pass


class DegenerateFormError(AlgebraError):
    pass
