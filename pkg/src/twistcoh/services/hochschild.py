"""Twisted Hochschild cohomology: bar complex, tensoring down to modules, strong
commutativity and the extension bimodule attached to a class."""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from enum import StrEnum
from typing import TYPE_CHECKING

import numpy as np
import structlog
from opentelemetry import trace

from twistcoh.config import settings
from twistcoh.core.events import Event, EventType, emit
from twistcoh.core.linalg import (
    LinearSolver,
    dot,
    hstack,
    identity,
    is_zero,
    kron,
    rank_of,
    zeros,
)
from twistcoh.services.algebra import enveloping, enveloping_morphism, identity_morphism, power
from twistcoh.services.ext import (
    ChainMapLift,
    ExtClass,
    ExtSpace,
    GradedRingSample,
    NotACocycleError,
    TwistedRing,
    apply_cocycle,
    ext_space_on,
    lift_chain_map,
    ring_sample,
    twist_class,
    yoneda,
)
from twistcoh.services.modules import (
    Module,
    ModuleMap,
    direct_sum,
    free_submodule,
    quotient_module,
    regular_bimodule,
    tensor_map,
    tensor_over_algebra,
    twist,
)
from twistcoh.services.resolution import (
    ProjectiveComplex,
    TensorComplex,
    minimal_resolution,
)

if TYPE_CHECKING:
    from collections.abc import Sequence

    from twistcoh.core.field import Field
    from twistcoh.services.algebra import Algebra, AlgebraMorphism

logger = structlog.get_logger()
tracer = trace.get_tracer(__name__)


class BarComplex(ProjectiveComplex):
    """The bar resolution of A over its enveloping algebra.

    ``B^n`` is free on tuples of basis indices; the normalized version drops
    tuples containing the unit and needs the unit to be a basis element.
    """

    def __init__(self, algebra: Algebra, normalized: bool = True, cap: int | None = None) -> None:
        super().__init__(enveloping(algebra), regular_bimodule(algebra), f"Bar({algebra.name})")
        self.base = algebra
        unit_index = algebra.unit_index
        if normalized and unit_index is None:
            logger.info("bar_normalization_unavailable", algebra=algebra.name)
            normalized = False
        self.normalized = normalized
        self.letters = [
            i for i in range(algebra.dim) if not (normalized and i == unit_index)
        ]
        self._position = {letter: k for k, letter in enumerate(self.letters)}
        self.cap = settings.bar_size_cap if cap is None else cap
        self._differentials: dict[int, np.ndarray] = {}

    def rank(self, n: int) -> int:
        return len(self.letters) ** n

    def tuples(self, n: int) -> list[tuple[int, ...]]:
        return list(itertools.product(self.letters, repeat=n))

    def index(self, letters: Sequence[int]) -> int:
        out = 0
        for letter in letters:
            out = out * len(self.letters) + self._position[letter]
        return out

    def augmentation(self) -> np.ndarray:
        return self.base.unit.reshape(self.base.dim, 1)

    def check_cap(self, n: int) -> None:
        size = self.rank(n - 1) * self.rank(n) * self.algebra.dim**2
        if size > self.cap:
            emit(Event(EventType.BAR_SIZE_CAPPED, {"degree": n, "entries": size, "cap": self.cap}))
            msg = f"Bar differential in degree {n} has {size} entries, cap is {self.cap}"
            raise SizeCapError(msg)

    def differential(self, n: int) -> np.ndarray:
        if n in self._differentials:
            return self._differentials[n]
        self.check_cap(n)
        base = self.base
        field = base.field
        unit = base.unit
        env_unit = kron(unit, unit)
        out = zeros((self.rank(n - 1), self.rank(n), base.dim**2))
        for col, word in enumerate(self.tuples(n)):
            out[self.index(word[1:]), col] += kron(base.basis_vector(word[0]), unit)
            for i in range(n - 1):
                product = base.structure[word[i], word[i + 1]]
                sign = -1 if i % 2 == 0 else 1
                for k in np.flatnonzero(product != 0):
                    if int(k) not in self._position:
                        continue
                    merged = (*word[:i], int(k), *word[i + 2 :])
                    out[self.index(merged), col] += sign * product[k] * env_unit
            last_sign = -1 if n % 2 else 1
            out[self.index(word[:-1]), col] += last_sign * kron(unit, base.basis_vector(word[-1]))
        self._differentials[n] = field.reduce(out)
        return self._differentials[n]


class HochschildMethod(StrEnum):
    MINIMAL = "minimal"
    BAR = "bar"
    BUILTIN = "builtin"


def hochschild_complex(algebra: Algebra, method: HochschildMethod) -> ProjectiveComplex:
    """A projective bimodule resolution of the algebra, by method."""
    if method is HochschildMethod.BAR:
        return _cached_bar(algebra)
    if method is HochschildMethod.BUILTIN:
        from twistcoh.services.qexterior import lookup

        built = lookup(algebra)
        if built is None:
            msg = f"No built-in resolution for {algebra.name}"
            raise BuiltinUnavailableError(msg)
        return built.buchweitz()
    return minimal_resolution(regular_bimodule(algebra), 0)


_BARS: dict[int, BarComplex] = {}


def _cached_bar(algebra: Algebra) -> BarComplex:
    bar = _BARS.get(id(algebra))
    if bar is None or bar.base is not algebra:
        bar = BarComplex(algebra)
        _BARS[id(algebra)] = bar
    return bar


def hh_ring(
    algebra: Algebra,
    psi: AlgebraMorphism,
    t: int,
    method: HochschildMethod = HochschildMethod.MINIMAL,
) -> TwistedRing:
    return TwistedRing(hochschild_complex(algebra, method), psi, t)


def hh_twisted(
    algebra: Algebra,
    psi: AlgebraMorphism,
    t: int,
    max_index: int,
    method: HochschildMethod = HochschildMethod.MINIMAL,
    with_products: bool = True,
) -> GradedRingSample:
    """``HH^{tn}(_{psi^n} A_1, A)`` for ``n <= max_index`` with its multiplication."""
    with tracer.start_as_current_span(
        "hochschild.hh_twisted",
        attributes={"algebra.name": algebra.name, "t": t, "max_index": max_index, "method": method},
    ):
        ring = hh_ring(algebra, psi, t, method)
        return ring_sample(ring, max_index, with_products)


def module_ring(module: Module, psi: AlgebraMorphism, t: int) -> TwistedRing:
    return TwistedRing(minimal_resolution(module, 0), psi, t)


def tensor_complex(ring: TwistedRing, m: int, module: Module) -> TensorComplex:
    view = ring.view(m)
    target = twist(module, power(ring.psi, m))
    key = ("tensor", id(module.algebra), module.fingerprint)
    cached = view.ext_cache.get(key)
    if isinstance(cached, TensorComplex):
        return cached
    complex_ = TensorComplex(view, module, target)
    view.ext_cache[key] = complex_
    return complex_


def tensor_down(
    eta: ExtClass, module: Module, ring: TwistedRing, target_ring: TwistedRing | None = None
) -> ExtClass:
    """``eta (x)_A M`` as a class of ``Ext^{tm}(_{psi^m} M, M)`` on the minimal resolution."""
    m = ring.index_of(eta)
    target_ring = target_ring or module_ring(module, ring.psi, ring.t)
    tm = ring.t * m
    with tracer.start_as_current_span(
        "hochschild.tensor_down", attributes={"degree": tm, "module.name": module.name}
    ):
        tensored = tensor_complex(ring, m, module)
        cochain = hstack(
            [module.act(eta.images[:, j]) for j in range(eta.images.shape[1])], module.dim
        )
        resolution_view = target_ring.view(m)
        lift = _comparison_lift(resolution_view, tensored, tm)
        images = apply_cocycle(cochain, lift.maps[tm], module)
        return target_ring.space(m).class_of(images)


def _comparison_lift(
    source: ProjectiveComplex, target: ProjectiveComplex, length: int
) -> ChainMapLift:
    """Lift of the identity of the resolved module from ``source`` into ``target``."""
    key = ("comparison", id(target), length)
    cached = source.ext_cache.get(key)
    if isinstance(cached, ChainMapLift):
        return cached
    start = ext_space_on(source, target.target, 0).class_of(source.augmentation())
    lift = lift_chain_map(start, target, length)
    source.ext_cache[key] = lift
    return lift


class ExtModule:
    """``Ext^{t*}(_{psi*} M, N)`` with its right and left actions of a twisted HH ring."""

    def __init__(self, hh: TwistedRing, source: Module, target: Module) -> None:
        self.hh = hh
        self.source = source
        self.target = target
        self.source_ring = module_ring(source, hh.psi, hh.t)
        self.target_ring = module_ring(target, hh.psi, hh.t)
        self.ring = TwistedRing(self.source_ring.complex, hh.psi, hh.t, target)

    def space(self, n: int) -> ExtSpace:
        return self.ring.space(n)

    def right_action(self, zeta: ExtClass, eta: ExtClass) -> ExtClass:
        """``zeta . eta = zeta o _{psi^n}(eta (x) M)``."""
        n = self.ring.index_of(zeta)
        inner = self._right_inner(eta, n)
        return yoneda(zeta, inner)

    def left_action(self, eta: ExtClass, zeta: ExtClass) -> ExtClass:
        """``eta . zeta = (eta (x) N) o _{psi^m} zeta``."""
        m = self.hh.index_of(eta)
        self.ring.index_of(zeta)
        outer = tensor_down(eta, self.target, self.hh, self.target_ring)
        return yoneda(outer, twist_class(zeta, self.ring.twist_power(m)))

    def _right_inner(self, eta: ExtClass, n: int) -> ExtClass:
        down = tensor_down(eta, self.source, self.hh, self.source_ring)
        return twist_class(down, self.ring.twist_power(n))

    def right_action_matrix(self, eta: ExtClass, n: int) -> np.ndarray:
        """Matrix of ``zeta -> zeta . eta`` from index n to index ``n + m`` in canonical bases."""
        m = self.hh.index_of(eta)
        source_space = self.space(n)
        target_space = self.space(n + m)
        field = self.source.field
        if source_space.dim == 0 or target_space.dim == 0:
            return zeros((target_space.dim, source_space.dim))
        inner = self._right_inner(eta, n)
        # one lift serves the whole basis
        lift = lift_chain_map(inner, self.ring.view(n), self.ring.t * n)
        columns = [yoneda(zeta, inner, lift).coords for zeta in source_space.basis()]
        return field.reduce(np.column_stack(columns))


def scalar_action(
    eta: ExtClass, zeta: ExtClass, side: str, ext_module: ExtModule
) -> ExtClass:
    if side == "right":
        return ext_module.right_action(zeta, eta)
    if side == "left":
        return ext_module.left_action(eta, zeta)
    msg = f"Unknown side {side!r}"
    raise HochschildError(msg)


def strong_comm_check(eta: ExtClass, n: int, ring: TwistedRing) -> bool:
    """Compare ``eta_{psi^-n}`` with ``_{psi^n} eta`` as classes of
    ``Ext^{tm}(_{psi^{m+n}} A_1, _{psi^n} A_1)``."""
    m = ring.index_of(eta)
    if n == 0:
        return True
    base = ring.psi.source
    field = base.field
    tm = ring.t * m
    with tracer.start_as_current_span("hochschild.strong_comm_check", attributes={"m": m, "n": n}):
        forward = power(ring.psi, n)
        backward = power(ring.psi, -n)
        one = identity_morphism(base)
        right_twisted = twist_class(eta, enveloping_morphism(one, backward))
        skew_complex = right_twisted.space.complex
        resolved = ring.view(m + n)
        images = dot(field, backward.matrix, ring.complex.augmentation())
        start = ext_space_on(resolved, skew_complex.target, 0).class_of(images)
        transported = yoneda(right_twisted, start)
        left_twisted = twist_class(eta, enveloping_morphism(forward, one))
        corrected = dot(field, forward.matrix, transported.images)
        try:
            candidate = left_twisted.space.class_of(corrected)
        except NotACocycleError:
            logger.debug("strong_check_not_cocycle", m=m, n=n)
            return False
        verdict = bool(np.array_equal(candidate.coords, left_twisted.coords))
        logger.debug("strong_check", degree=tm, n=n, verdict=verdict)
        return verdict


def bar_criterion_check(
    eta: ExtClass, n: int, ring: TwistedRing, bar: BarComplex | None = None
) -> bool:
    """Check ``f(psi^-n l0 (x) ... (x) psi^-n lk (x) 1) = psi^-n f(l0 (x) ... (x) 1)``
    for the bar representative f of eta on all basis tensors."""
    m = ring.index_of(eta)
    base = ring.psi.source
    field = base.field
    d = base.dim
    tm = ring.t * m
    bar = bar or _cached_bar(base)
    with tracer.start_as_current_span(
        "hochschild.bar_criterion_check", attributes={"m": m, "n": n}
    ):
        for k in range(1, tm + 1):
            bar.check_cap(k)
        bar_view = bar.twisted(ring.twist_power(m))
        target = ring.view(m)
        start = ext_space_on(bar_view, target.target, 0).class_of(bar.augmentation())
        lift = lift_chain_map(start, target, tm)
        values = apply_cocycle(eta.images, lift.maps[tm], ring.target)
        full = zeros((d, d**tm))
        for col, word in enumerate(bar.tuples(tm)):
            position = 0
            for letter in word:
                position = position * d + letter
            full[:, position] = values[:, col]
        inverse = power(ring.psi, -n).matrix
        tensor_power = identity(1)
        for _ in range(tm):
            tensor_power = kron(tensor_power, inverse)
        shifted = dot(field, full, tensor_power)
        pre_m = power(ring.psi, -m).matrix
        pre_mn = power(ring.psi, -m - n).matrix
        for i in range(d):
            e = base.basis_vector(i)
            lhs = dot(field, base.left_matrix(dot(field, pre_mn, e)), shifted)
            rhs = dot(field, inverse, dot(field, base.left_matrix(dot(field, pre_m, e)), full))
            if not is_zero(field.reduce(lhs - rhs)):
                return False
        return True


@dataclass(frozen=True)
class StrongSubalgebra:
    s: int
    ring: TwistedRing
    generators: list[ExtClass]


def strongify(
    ring: TwistedRing, generators: Sequence[ExtClass], s_max: int
) -> StrongSubalgebra:
    """Smallest ``s`` making the s-th powers of the generators strongly commutative for psi^s."""
    with tracer.start_as_current_span("hochschild.strongify", attributes={"s_max": s_max}):
        for s in range(1, s_max + 1):
            powered = [g if ring.index_of(g) == 0 else ring.power(g, s) for g in generators]
            if all(strong_comm_check(g, s, ring) for g in powered):
                sub = TwistedRing(ring.complex, power(ring.psi, s), ring.t * s)
                logger.info("strongified", s=s, generators=len(powered))
                return StrongSubalgebra(s, sub, powered)
        msg = f"No s <= {s_max} makes the generators strongly commutative"
        raise NotFoundError(msg)


def default_generators(sample: GradedRingSample) -> list[ExtClass]:
    """Degree-0 basis plus the basis of the lowest nonzero positive index."""
    gens = list(sample.bases[0])
    for n in range(1, sample.max_index + 1):
        if sample.bases[n]:
            gens.extend(sample.bases[n])
            break
    return gens


@dataclass(frozen=True)
class ExactnessCertificate:
    left_rank: int
    right_rank: int
    composite_zero: bool
    dims: tuple[int, int, int]

    @property
    def exact(self) -> bool:
        left, middle, right = self.dims
        return (
            self.composite_zero
            and self.left_rank == left
            and self.right_rank == right
            and middle == left + right
        )


@dataclass(frozen=True)
class KEtaExtension:
    """``0 -> A -> K_eta -> Omega^{tm-1}(_{psi^m} A_1) -> 0``."""

    eta: ExtClass
    k_eta: Module
    syzygy: Module
    inclusion: ModuleMap
    projection: ModuleMap
    certificate: ExactnessCertificate


def _certify(
    left: np.ndarray, right: np.ndarray, dims: tuple[int, int, int], field: Field
) -> ExactnessCertificate:
    composite = dot(field, right, left)
    return ExactnessCertificate(
        rank_of(field, left), rank_of(field, right), is_zero(composite), dims
    )


def k_eta(eta: ExtClass, ring: TwistedRing) -> KEtaExtension:
    """Pushout of ``Omega^{tm} -> P_{tm-1}`` along the cocycle of eta."""
    m = ring.index_of(eta)
    tm = ring.t * m
    if tm == 0:
        msg = "K_eta needs a class of positive degree"
        raise DegreeZeroError(msg)
    view = ring.view(m)
    env = view.algebra
    field = env.field
    target = ring.target
    with tracer.start_as_current_span("hochschild.k_eta", attributes={"degree": tm}):
        prev_basis = view.projective_basis(tm - 1)
        coords = LinearSolver(field, prev_basis)
        top_map = dot(field, view.ambient_differential(tm), view.projective_basis(tm))
        cocycle = hstack(
            [target.orbit(eta.images[:, j]) for j in range(eta.images.shape[1])], target.dim
        )
        cocycle = dot(field, cocycle, view.projective_basis(tm))
        relations = np.vstack([coords.solve(top_map), field.reduce(-cocycle)])
        middle_source = direct_sum(view.projective(tm - 1), target)
        pushout = quotient_module(middle_source, relations, f"K({tm})")
        k = pushout.module
        p_len = prev_basis.shape[1]
        inject = zeros((p_len + target.dim, target.dim))
        inject[p_len:, :] = identity(target.dim)
        inclusion = dot(field, pushout.projection, inject)
        if tm == 1:
            syzygy = view.target
            outgoing = view.ambient_augmentation()
            to_syzygy = dot(field, outgoing, prev_basis)
        else:
            image = dot(field, view.ambient_differential(tm - 1), prev_basis)
            embedding = free_submodule(env, view.rank(tm - 2), image, f"Omega^{tm - 1}")
            syzygy = embedding.module
            to_syzygy = embedding.coords(image)
        onto = zeros((syzygy.dim, p_len + target.dim))
        onto[:, :p_len] = to_syzygy
        projection = dot(field, onto, pushout.section)
        certificate = _certify(
            inclusion, projection, (target.dim, k.dim, syzygy.dim), field
        )
        logger.info("k_eta_built", degree=tm, dim=k.dim, exact=certificate.exact)
        return KEtaExtension(
            eta,
            k,
            syzygy,
            ModuleMap(target, k, inclusion),
            ModuleMap(k, syzygy, projection),
            certificate,
        )


@dataclass(frozen=True)
class TensorSequence:
    modules: tuple[Module, Module, Module]
    certificate: ExactnessCertificate


def tensor_sequence(extension: KEtaExtension, module: Module) -> TensorSequence:
    """The defining sequence of ``K_eta`` after ``- (x)_A M``."""
    field = module.field
    left = tensor_over_algebra(extension.inclusion.source, module)
    middle = tensor_over_algebra(extension.k_eta, module)
    right = tensor_over_algebra(extension.syzygy, module)
    one = identity(module.dim)
    first = tensor_map(extension.inclusion.matrix, left, middle, one, field)
    second = tensor_map(extension.projection.matrix, middle, right, one, field)
    dims = (left.module.dim, middle.module.dim, right.module.dim)
    return TensorSequence(
        (left.module, middle.module, right.module), _certify(first, second, dims, field)
    )


class HochschildError(Exception):
    pass


class SizeCapError(HochschildError):
    pass


class BuiltinUnavailableError(HochschildError):
    pass


class NotFoundError(HochschildError):
    pass


class DegreeZeroError(HochschildError):
    pass
