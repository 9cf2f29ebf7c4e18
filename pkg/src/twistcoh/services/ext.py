"""Ext groups on projective complexes, chain-map lifting and twisted products.

A cochain of degree n on a complex P with values in N is stored as the matrix of
generator images, shape ``(dim N, r_n)``; image ``j`` lies in ``e_j N``. Classes are
compared through canonical coordinates in a fixed basis of cocycles modulo coboundaries.
Products are splice compositions of lifts and carry no extra signs.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Any

import numpy as np
import structlog
from opentelemetry import trace

from twistcoh.core.events import Event, EventType, emit
from twistcoh.core.linalg import (
    NoSolutionError,
    QuotientBasis,
    block_diag,
    column_basis,
    dot,
    identity,
    is_zero,
    null_space,
    zeros,
)
from twistcoh.services.algebra import enveloping_morphism, identity_morphism, power
from twistcoh.services.modules import free_apply, twist
from twistcoh.services.resolution import free_compose, minimal_resolution

if TYPE_CHECKING:
    from collections.abc import Sequence

    from twistcoh.services.algebra import AlgebraMorphism
    from twistcoh.services.modules import Module
    from twistcoh.services.resolution import ProjectiveComplex

logger = structlog.get_logger()
tracer = trace.get_tracer(__name__)


class ExtSpace:
    """``H^n(Hom(P, N))`` for a projective complex P."""

    def __init__(self, complex_: ProjectiveComplex, target: Module, degree: int) -> None:
        if target.algebra is not complex_.algebra:
            msg = f"{target.name} is not a module over {complex_.algebra.name}"
            raise TwistMismatchError(msg)
        if degree < 0:
            msg = f"Negative degree {degree}"
            raise DegreeMismatchError(msg)
        self.complex = complex_
        self.target = target
        self.degree = degree
        self.field = target.field
        f = self.field
        basis = self.cochain_basis(degree)
        cocycles = dot(f, basis, null_space(f, dot(f, self.coboundary(degree), basis)))
        if degree:
            coboundaries = dot(f, self.coboundary(degree - 1), self.cochain_basis(degree - 1))
        else:
            coboundaries = zeros((cocycles.shape[0], 0))
        self._quotient = QuotientBasis(f, coboundaries, cocycles)
        self.cocycle_dim = cocycles.shape[1]

    @property
    def dim(self) -> int:
        return self._quotient.dim

    @property
    def rank(self) -> int:
        return self.complex.rank(self.degree)

    def cochain_basis(self, n: int) -> np.ndarray:
        m = self.target.dim
        if self.complex.is_free(n):
            return identity(self.complex.rank(n) * m)
        return block_diag(
            [column_basis(self.field, self.target.act(e)) for e in self.complex.idempotents(n)]
        )

    def coboundary(self, n: int) -> np.ndarray:
        """Matrix of ``f -> f o d_{n+1}`` on vectorized cochains."""
        m = self.target.dim
        diff = self.complex.differential(n + 1)
        rows, cols = diff.shape[1], diff.shape[0]
        if rows == 0 or cols == 0 or m == 0:
            return zeros((rows * m, cols * m))
        blocks = np.tensordot(diff, self.target.stack, axes=([2], [0]))
        return self.field.reduce(blocks.transpose(1, 2, 0, 3).reshape(rows * m, cols * m))

    def vec(self, images: np.ndarray) -> np.ndarray:
        return images.T.reshape(-1)

    def unvec(self, v: np.ndarray) -> np.ndarray:
        return v.reshape(self.rank, self.target.dim).T

    def is_cocycle(self, images: np.ndarray) -> bool:
        return is_zero(dot(self.field, self.coboundary(self.degree), self.vec(images)))

    def class_of(self, images: np.ndarray) -> ExtClass:
        images = self.field.reduce(np.asarray(images, dtype=object))
        if images.shape != (self.target.dim, self.rank):
            msg = f"Cochain of shape {images.shape}, expected {(self.target.dim, self.rank)}"
            raise NotACocycleError(msg)
        if not self.is_cocycle(images):
            msg = f"Cochain is not a cocycle in degree {self.degree}"
            raise NotACocycleError(msg)
        coords = self._quotient.coords(self.vec(images))
        return ExtClass(self, images, coords)

    def from_coords(self, coords: Sequence[Any]) -> ExtClass:
        c = self.field.array(list(coords)) if len(coords) else zeros(0)
        return ExtClass(self, self.unvec(self._quotient.representative(c)), c)

    def basis(self) -> list[ExtClass]:
        reps = self._quotient.representatives()
        return [
            ExtClass(self, self.unvec(reps[:, k]), identity(self.dim)[:, k])
            for k in range(self.dim)
        ]

    def zero(self) -> ExtClass:
        return ExtClass(self, zeros((self.target.dim, self.rank)), zeros(self.dim))


@dataclass(frozen=True, eq=False)
class ExtClass:
    space: ExtSpace
    images: np.ndarray
    coords: np.ndarray

    @property
    def degree(self) -> int:
        return self.space.degree

    @property
    def is_zero(self) -> bool:
        return is_zero(self.coords)

    @property
    def twist(self) -> AlgebraMorphism | None:
        return self.space.complex.twist_map

    def scaled(self, c: Any) -> ExtClass:
        f = self.space.field
        c = f.coerce(c)
        return ExtClass(self.space, f.reduce(self.images * c), f.reduce(self.coords * c))

    def __add__(self, other: ExtClass) -> ExtClass:
        _require_same_space(self, other)
        f = self.space.field
        images = f.reduce(self.images + other.images)
        return ExtClass(self.space, images, f.reduce(self.coords + other.coords))

    def __sub__(self, other: ExtClass) -> ExtClass:
        return self + other.scaled(-1)

    def equals(self, other: ExtClass) -> bool:
        return class_equal(self, other)


def _require_same_space(a: ExtClass, b: ExtClass) -> None:
    if a.space is not b.space:
        msg = f"Classes live in different spaces (degrees {a.degree} and {b.degree})"
        raise SpaceMismatchError(msg)


def class_equal(a: ExtClass, b: ExtClass) -> bool:
    _require_same_space(a, b)
    return bool(np.array_equal(a.coords, b.coords))


def ext_space_on(complex_: ProjectiveComplex, target: Module, degree: int) -> ExtSpace:
    key = ("ext", id(target.algebra), target.fingerprint, degree)
    cached = complex_.ext_cache.get(key)
    if isinstance(cached, ExtSpace):
        return cached
    with tracer.start_as_current_span(
        "ext.ext_space",
        attributes={"complex.name": complex_.name, "target.name": target.name, "degree": degree},
    ):
        space = ExtSpace(complex_, target, degree)
        complex_.ext_cache[key] = space
        emit(
            Event(
                EventType.EXT_SPACE_COMPUTED,
                {
                    "complex": complex_.name,
                    "target": target.name,
                    "degree": degree,
                    "dim": space.dim,
                },
            )
        )
        return space


def ext_space(source: Module, target: Module, degree: int) -> list[ExtClass]:
    res = minimal_resolution(source, degree + 1)
    return ext_space_on(res, target, degree).basis()


def twisted_ext_space(
    source: Module, target: Module, psi: AlgebraMorphism, t: int, index: int
) -> ExtSpace:
    """``Ext^{t j}(_{psi^j} source, target)`` on the twisted minimal resolution."""
    res = minimal_resolution(source, t * index + 1)
    return ext_space_on(res.twisted(power(psi, index)), target, t * index)


@dataclass(frozen=True)
class ChainMapLift:
    """``maps[i]`` sends generators of ``source_{shift + i}`` into ``target_i``."""

    source: ProjectiveComplex
    shift: int
    target: ProjectiveComplex
    cocycle: np.ndarray
    maps: list[np.ndarray] = field(default_factory=list)

    def ambient(self, i: int) -> np.ndarray:
        g = self.maps[i]
        rows, cols, d = g.shape
        return g.transpose(0, 2, 1).reshape(rows * d, cols)

    def verify(self) -> None:
        algebra = self.target.algebra
        f = algebra.field
        if self.maps:
            first = dot(f, self.target.ambient_augmentation(), self.ambient(0))
            if not is_zero(f.reduce(first - self.cocycle)):
                msg = "Lift does not cover the cocycle"
                raise LiftFailedError(msg)
        for i in range(1, len(self.maps)):
            lhs = free_compose(algebra, self.maps[i], self.target.differential(i))
            rhs = free_compose(algebra, self.source.differential(self.shift + i), self.maps[i - 1])
            if not is_zero(f.reduce(lhs - rhs)):
                msg = f"Lifted square {i} does not commute"
                raise LiftFailedError(msg)


def _same_target(a: Module, b: Module) -> bool:
    return a.algebra is b.algebra and a.fingerprint == b.fingerprint


def lift_chain_map(cls: ExtClass, along: ProjectiveComplex, length: int) -> ChainMapLift:
    """Lift a cocycle ``P_n -> N`` to a ladder ``P_{n+i} -> Q_i`` over a resolution Q of N."""
    space = cls.space
    source = space.complex
    if not _same_target(space.target, along.target):
        msg = (
            f"Cannot lift into a resolution of {along.target.name}; "
            f"class ends in {space.target.name}"
        )
        raise TwistMismatchError(msg)
    algebra = source.algebra
    f = algebra.field
    d = algebra.dim
    n = space.degree
    with tracer.start_as_current_span(
        "ext.lift_chain_map", attributes={"degree": n, "length": length, "along": along.name}
    ):
        maps: list[np.ndarray] = []
        rhs = cls.images
        for i in range(length + 1):
            if i:
                previous = maps[-1]
                composite = free_compose(algebra, source.differential(n + i), previous)
                rhs = composite.transpose(0, 2, 1).reshape(previous.shape[0] * d, -1)
            try:
                x = along.lifting_solver(i).solve(rhs)
            except NoSolutionError as e:
                msg = f"No lift in degree {i} (exactness of {along.name} fails)"
                raise LiftFailedError(msg) from e
            rank = along.rank(i)
            y = dot(f, along.projective_basis(i), x)
            y = _restrict_columns(algebra, rank, y, source.idempotents(n + i))
            maps.append(y.reshape(rank, d, y.shape[1]).transpose(0, 2, 1))
        emit(Event(EventType.CHAIN_MAP_LIFTED, {"degree": n, "length": length}))
        return ChainMapLift(source, n, along, cls.images, maps)


def _restrict_columns(
    algebra: Any, rank: int, y: np.ndarray, idempotents: Sequence[np.ndarray]
) -> np.ndarray:
    unit = algebra.unit
    if rank == 0 or all(e is unit or is_zero(e - unit) for e in idempotents):
        return y
    out = y.copy()
    for j, e in enumerate(idempotents):
        out[:, j] = free_apply(algebra, rank, e, y[:, [j]])[:, 0]
    return out


def apply_cocycle(images: np.ndarray, chain_map: np.ndarray, target: Module) -> np.ndarray:
    """Images of ``cocycle o chain_map`` on the source generators."""
    f = target.field
    if chain_map.shape[0] == 0 or target.dim == 0:
        return zeros((target.dim, chain_map.shape[1]))
    blocks = np.tensordot(chain_map, target.stack, axes=([2], [0]))
    return f.reduce(np.tensordot(blocks, images, axes=([0, 3], [1, 0])).T)


def yoneda(outer: ExtClass, inner: ExtClass, lift: ChainMapLift | None = None) -> ExtClass:
    """``outer o inner``; inner must end where the complex of outer starts."""
    if lift is None:
        lift = lift_chain_map(inner, outer.space.complex, outer.degree)
    images = apply_cocycle(outer.images, lift.maps[outer.degree], outer.space.target)
    space = ext_space_on(inner.space.complex, outer.space.target, inner.degree + outer.degree)
    return space.class_of(images)


def twist_class(cls: ExtClass, phi: AlgebraMorphism) -> ExtClass:
    """``_phi cls``: same cochain, read on the phi-twisted complex and target."""
    if phi.is_identity:
        return cls
    space = cls.space
    view = space.complex.twisted(phi)
    target = twist(space.target, phi)
    return ext_space_on(view, target, space.degree).class_of(cls.images)


class TwistedRing:
    """``Ext^{t*}(_{psi*} X, N)`` on the twisted views of one complex resolving X.

    With N the resolved module itself this is a graded algebra under
    ``eta * theta = eta o _{psi^m} theta``.
    """

    def __init__(
        self,
        complex_: ProjectiveComplex,
        psi: AlgebraMorphism,
        t: int,
        target: Module | None = None,
    ) -> None:
        if t < 1:
            msg = f"Stride must be positive, got {t}"
            raise DegreeMismatchError(msg)
        algebra = complex_.algebra
        if psi.source is algebra:
            self.twist_map = psi
        elif algebra.enveloped is not None and psi.source is algebra.enveloped:
            self.twist_map = enveloping_morphism(psi, identity_morphism(psi.source))
        else:
            msg = f"{psi.name} does not act on {algebra.name}"
            raise TwistMismatchError(msg)
        self.psi = psi
        self.complex = complex_
        self.t = t
        self.target = complex_.target if target is None else target

    @property
    def is_algebra(self) -> bool:
        return _same_target(self.target, self.complex.target)

    def twist_power(self, n: int) -> AlgebraMorphism:
        return power(self.twist_map, n)

    def view(self, n: int) -> ProjectiveComplex:
        return self.complex.twisted(self.twist_power(n))

    def space(self, n: int) -> ExtSpace:
        return ext_space_on(self.view(n), self.target, self.t * n)

    def index_of(self, cls: ExtClass) -> int:
        n, rest = divmod(cls.degree, self.t)
        if rest:
            msg = f"Degree {cls.degree} is not a multiple of {self.t}"
            raise DegreeMismatchError(msg)
        if cls.space is not self.space(n):
            msg = f"Class of degree {cls.degree} does not belong to this ring"
            raise TwistMismatchError(msg)
        return n

    def unit(self) -> ExtClass:
        if not self.is_algebra:
            msg = "Module-valued samples have no unit"
            raise TwistMismatchError(msg)
        return self.space(0).class_of(self.complex.augmentation())

    def product(self, eta: ExtClass, theta: ExtClass) -> ExtClass:
        if not self.is_algebra:
            msg = "Products need the ring to end in the resolved module"
            raise TwistMismatchError(msg)
        m = self.index_of(eta)
        self.index_of(theta)
        return yoneda(eta, twist_class(theta, self.twist_power(m)))

    def power(self, eta: ExtClass, k: int) -> ExtClass:
        if k < 0:
            msg = f"Negative power {k}"
            raise DegreeMismatchError(msg)
        result = self.unit()
        for _ in range(k):
            result = self.product(eta, result)
        return result


@dataclass
class GradedRingSample:
    """Bases per index ``n`` (degree ``t n``) and structure constants up to ``max_index``."""

    ring: TwistedRing
    max_index: int
    bases: dict[int, list[ExtClass]]
    table: dict[tuple[int, int, int, int], np.ndarray] = field(default_factory=dict)

    @property
    def t(self) -> int:
        return self.ring.t

    @property
    def dims(self) -> list[int]:
        return [len(self.bases[n]) for n in range(self.max_index + 1)]

    def labels(self, n: int) -> list[str]:
        return [f"e{n}.{i}" for i in range(len(self.bases[n]))]

    def product_coords(self, m: int, i: int, n: int, j: int) -> np.ndarray:
        key = (m, i, n, j)
        if key not in self.table:
            msg = f"Product {key} lies outside the sampled window"
            raise DegreeMismatchError(msg)
        return self.table[key]

    def unit_coords(self) -> np.ndarray:
        return self.ring.unit().coords

    def element(self, n: int, coords: Sequence[Any]) -> ExtClass:
        return self.ring.space(n).from_coords(coords)


def ring_sample(ring: TwistedRing, max_index: int, with_products: bool = True) -> GradedRingSample:
    with tracer.start_as_current_span(
        "ext.ring_sample", attributes={"t": ring.t, "max_index": max_index}
    ):
        bases = {n: ring.space(n).basis() for n in range(max_index + 1)}
        sample = GradedRingSample(ring, max_index, bases)
        if with_products and ring.is_algebra:
            for n in range(max_index + 1):
                for j, theta in enumerate(bases[n]):
                    for m in range(max_index + 1 - n):
                        if not bases[m]:
                            continue
                        # one lift of the twisted right factor serves every left factor
                        twisted = twist_class(theta, ring.twist_power(m))
                        lift = lift_chain_map(twisted, ring.view(m), ring.t * m)
                        for i, eta in enumerate(bases[m]):
                            sample.table[(m, i, n, j)] = yoneda(eta, twisted, lift).coords
        logger.info("ring_sampled", dims=sample.dims, products=len(sample.table))
        return sample


def _table_product(
    sample: GradedRingSample, m: int, a: np.ndarray, n: int, b: np.ndarray
) -> np.ndarray:
    f = sample.ring.complex.algebra.field
    out = zeros(len(sample.bases[m + n]))
    for i, ai in enumerate(a):
        if ai == 0:
            continue
        for j, bj in enumerate(b):
            if bj != 0:
                out = out + ai * bj * sample.table[(m, i, n, j)]
    return f.reduce(out)


def check_associativity(sample: GradedRingSample) -> list[tuple[int, int, int, int, int, int]]:
    """Basis triples where ``(ab)c != a(bc)`` inside the window."""
    failures = []
    top = sample.max_index
    for m in range(top + 1):
        for n in range(top + 1 - m):
            for p in range(top + 1 - m - n):
                for i in range(len(sample.bases[m])):
                    for j in range(len(sample.bases[n])):
                        for k in range(len(sample.bases[p])):
                            ab = sample.table[(m, i, n, j)]
                            bc = sample.table[(n, j, p, k)]
                            e_k = identity(len(sample.bases[p]))[:, k]
                            e_i = identity(len(sample.bases[m]))[:, i]
                            left = _table_product(sample, m + n, ab, p, e_k)
                            right = _table_product(sample, m, e_i, n + p, bc)
                            if not np.array_equal(left, right):
                                failures.append((m, i, n, j, p, k))
    return failures


def check_unit(sample: GradedRingSample) -> bool:
    unit = sample.unit_coords()
    for n in range(sample.max_index + 1):
        for j in range(len(sample.bases[n])):
            e_j = identity(len(sample.bases[n]))[:, j]
            if not np.array_equal(_table_product(sample, 0, unit, n, e_j), e_j):
                return False
            if not np.array_equal(_table_product(sample, n, e_j, 0, unit), e_j):
                return False
    return True


class ExtError(Exception):
    pass


class DegreeMismatchError(ExtError):
    pass


class TwistMismatchError(ExtError):
    pass


class SpaceMismatchError(ExtError):
    pass


class NotACocycleError(ExtError):
    pass


class LiftFailedError(ExtError):
    pass
