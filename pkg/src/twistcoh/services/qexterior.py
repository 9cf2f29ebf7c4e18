"""The quantum exterior algebra ``k<x, y>/(x^2, xy + q yx, y^2)`` and its explicit data."""

from __future__ import annotations

import weakref
from dataclasses import dataclass
from functools import cached_property
from typing import TYPE_CHECKING, Any

import numpy as np
import structlog
from opentelemetry import trace

from twistcoh.core.field import RationalField
from twistcoh.core.linalg import identity, is_zero, kron, zeros
from twistcoh.services.algebra import (
    Algebra,
    AlgebraMorphism,
    FrobeniusForm,
    enveloping,
    nakayama,
    power,
    validate_algebra,
    validate_form,
    validate_morphism,
)
from twistcoh.services.ext import (
    ChainMapLift,
    ExtClass,
    LiftFailedError,
    TwistedRing,
    apply_cocycle,
    class_equal,
)
from twistcoh.services.modules import (
    Embedding,
    Module,
    cyclic_submodule,
    regular_bimodule,
    regular_module,
    top,
)
from twistcoh.services.resolution import ProjectiveComplex, TensorComplex

if TYPE_CHECKING:
    from twistcoh.core.field import Field

logger = structlog.get_logger()
tracer = trace.get_tracer(__name__)

LABELS = ("1", "x", "y", "yx")
ONE, X, Y, YX = range(4)


@dataclass(frozen=True)
class QExteriorParams:
    q: Any
    field: Field

    @classmethod
    def create(cls, q: Any, field: Field | None = None) -> QExteriorParams:
        field = field or RationalField()
        if not isinstance(field, RationalField):
            msg = f"The quantum exterior algebra is built over Q only, got {field.name}"
            raise BadParamsError(msg)
        try:
            value = field.coerce(q)
        except (ValueError, ZeroDivisionError) as e:
            msg = f"Bad parameter q={q!r}"
            raise BadParamsError(msg) from e
        if value == 0 or field.reduce(np.array([value * value - 1], dtype=object))[0] == 0:
            msg = f"q must be nonzero and not +-1, got {field.format(value)}"
            raise BadParamsError(msg)
        return cls(value, field)


def structure_constants(params: QExteriorParams) -> np.ndarray:
    c = zeros((4, 4, 4))
    for b in range(4):
        c[ONE, b, b] = 1
        c[b, ONE, b] = 1
    c[X, Y, YX] = -params.q
    c[Y, X, YX] = 1
    return params.field.reduce(c)


@dataclass(frozen=True, eq=False)
class QExterior:
    params: QExteriorParams
    algebra: Algebra
    form: FrobeniusForm
    nu: AlgebraMorphism

    @property
    def q(self) -> Any:
        return self.params.q

    @cached_property
    def bimodule(self) -> Module:
        return regular_bimodule(self.algebra)

    def buchweitz(self) -> BuchweitzComplex:
        return _buchweitz(self)


_REGISTRY: weakref.WeakKeyDictionary[Algebra, QExterior] = weakref.WeakKeyDictionary()
_BUCHWEITZ: weakref.WeakKeyDictionary[QExterior, BuchweitzComplex] = weakref.WeakKeyDictionary()


def build(params: QExteriorParams, name: str = "Lq") -> QExterior:
    with tracer.start_as_current_span(
        "qexterior.build", attributes={"q": params.field.format(params.q)}
    ):
        field = params.field
        radical = zeros((4, 3))
        radical[X, 0] = radical[Y, 1] = radical[YX, 2] = 1
        algebra = validate_algebra(
            name,
            field,
            LABELS,
            structure_constants(params),
            [1, 0, 0, 0],
            radical=radical,
            grading=(0, 1, 1, 2),
        )
        return _attach(params, algebra)


def _attach(params: QExteriorParams, algebra: Algebra) -> QExterior:
    form = validate_form(algebra, [0, 0, 0, 1])
    nu = nakayama(form)
    expected = nakayama_closed_form(params)
    if not is_zero(nu.matrix - expected):
        msg = "Nakayama automorphism disagrees with x -> -x/q, y -> -q y"
        raise QExteriorError(msg)
    built = QExterior(params, algebra, form, nu)
    _REGISTRY[algebra] = built
    logger.debug("qexterior_built", algebra=algebra.name, q=params.field.format(params.q))
    return built


def nakayama_closed_form(params: QExteriorParams) -> np.ndarray:
    f = params.field
    out = identity(4)
    out[X, X] = f.reduce(np.array([-f.inv(params.q)], dtype=object))[0]
    out[Y, Y] = f.reduce(np.array([-params.q], dtype=object))[0]
    return out


def lookup(algebra: Algebra) -> QExterior | None:
    """The built-in data for an algebra, recognizing parsed copies by their constants."""
    built = _REGISTRY.get(algebra)
    if built is not None:
        return built
    if algebra.basis_labels != LABELS or algebra.dim != 4:
        return None
    q = algebra.field.reduce(np.array([-algebra.structure[X, Y, YX]], dtype=object))[0]
    try:
        params = QExteriorParams.create(q, algebra.field)
    except BadParamsError:
        return None
    if not np.array_equal(algebra.structure, structure_constants(params)):
        return None
    if not is_zero(algebra.unit - algebra.basis_vector(ONE)):
        return None
    return _attach(params, algebra)


def skewed_automorphism(built: QExterior, factor: Any = 2) -> AlgebraMorphism:
    """``x -> factor * x, y -> y``; fixes the relations but not the center."""
    f = built.params.field
    matrix = identity(4)
    matrix[X, X] = f.coerce(factor)
    matrix[YX, YX] = f.coerce(factor)
    return validate_morphism(built.algebra, built.algebra, matrix, "sigma")


def build_module_embedding(built: QExterior, alpha: Any, beta: Any) -> Embedding:
    f = built.params.field
    a, b = f.coerce(alpha), f.coerce(beta)
    if a == 0 and b == 0:
        msg = "M(alpha, beta) needs (alpha, beta) != (0, 0)"
        raise ZeroPairError(msg)
    generator = zeros(4)
    generator[X], generator[Y] = a, b
    name = f"M({f.format(a)},{f.format(b)})"
    return cyclic_submodule(regular_module(built.algebra), generator, name)


def build_module(built: QExterior, alpha: Any, beta: Any) -> Module:
    """``Lambda (alpha x + beta y)`` inside the regular module."""
    return build_module_embedding(built, alpha, beta).module


def module_generator(built: QExterior, alpha: Any, beta: Any) -> np.ndarray:
    """Coordinates of ``alpha x + beta y`` in ``build_module``."""
    f = built.params.field
    embedding = build_module_embedding(built, alpha, beta)
    generator = zeros(4)
    generator[X], generator[Y] = f.coerce(alpha), f.coerce(beta)
    return embedding.coords(generator)


def simple_module(built: QExterior) -> Module:
    quotient = top(regular_module(built.algebra)).module
    return Module(built.algebra, quotient.stack, "k")


class BuchweitzComplex(ProjectiveComplex):
    """Minimal bimodule resolution of the algebra: ``F^n`` free of rank ``n + 1``."""

    def __init__(self, built: QExterior) -> None:
        super().__init__(enveloping(built.algebra), built.bimodule, f"F({built.algebra.name})")
        self.built = built
        self._differentials: dict[int, np.ndarray] = {}

    def rank(self, n: int) -> int:
        return n + 1 if n >= 0 else 0

    def augmentation(self) -> np.ndarray:
        return self.built.algebra.unit.reshape(4, 1)

    def differential(self, n: int) -> np.ndarray:
        if n in self._differentials:
            return self._differentials[n]
        algebra = self.built.algebra
        f = algebra.field
        q = self.built.q
        unit = algebra.unit
        x, y = algebra.basis_vector(X), algebra.basis_vector(Y)
        sign = -1 if n % 2 else 1
        out = zeros((n, n + 1, 16))
        for i in range(n + 1):
            if i <= n - 1:
                out[i, i] = kron(x, unit) + sign * q**i * kron(unit, x)
            if i >= 1:
                out[i - 1, i] = q ** (n - i) * kron(y, unit) + sign * kron(unit, y)
        self._differentials[n] = f.reduce(out)
        return self._differentials[n]


def _buchweitz(built: QExterior) -> BuchweitzComplex:
    complex_ = _BUCHWEITZ.get(built)
    if complex_ is None:
        complex_ = BuchweitzComplex(built)
        _BUCHWEITZ[built] = complex_
    return complex_


class ExplicitComplex(ProjectiveComplex):
    """Free resolution of ``M(alpha, beta)`` with ``d_n`` right multiplication by
    ``alpha x + q^n beta y``."""

    def __init__(self, built: QExterior, alpha: Any, beta: Any) -> None:
        module = build_module(built, alpha, beta)
        super().__init__(built.algebra, module, f"E({module.name})")
        f = built.params.field
        self.built = built
        self.alpha = f.coerce(alpha)
        self.beta = f.coerce(beta)
        self._generator = module_generator(built, alpha, beta)

    def rank(self, n: int) -> int:
        return 1

    def augmentation(self) -> np.ndarray:
        return self._generator.reshape(-1, 1)

    def differential(self, n: int) -> np.ndarray:
        f = self.built.params.field
        out = zeros((1, 1, 4))
        out[0, 0, X] = self.alpha
        out[0, 0, Y] = f.reduce(np.array([self.built.q**n * self.beta], dtype=object))[0]
        return out


def nakayama_ring(built: QExterior, t: int = 2) -> TwistedRing:
    """Twisted HH ring for the Nakayama automorphism on the built-in resolution."""
    return TwistedRing(built.buchweitz(), built.nu, t)


def g_class(built: QExterior, ring: TwistedRing, m: int) -> ExtClass:
    """``g_{4m}``: the middle generator of ``F^{4m}`` goes to 1, the rest to 0."""
    if m < 1:
        msg = f"g needs m >= 1, got {m}"
        raise QExteriorError(msg)
    index, rest = divmod(4 * m, ring.t)
    if rest:
        msg = f"Degree {4 * m} is not a multiple of {ring.t}"
        raise QExteriorError(msg)
    space = ring.space(index)
    images = zeros((4, 4 * m + 1))
    images[:, 2 * m] = built.algebra.unit
    cls = space.class_of(images)
    if cls.is_zero:
        msg = f"g_{4 * m} is a coboundary"
        raise QExteriorError(msg)
    return cls


def theta(built: QExterior, ring: TwistedRing) -> ExtClass:
    return g_class(built, ring, 1)


def gbar_maps(built: QExterior, m: int) -> list[np.ndarray]:
    """``gbar_{4m+i}(f^{4m+i}_{2m+j}) = q^{2m(i-j)} f^i_j`` for ``0 <= j <= i <= 4``."""
    f = built.params.field
    q = built.q
    env_unit = kron(built.algebra.unit, built.algebra.unit)
    maps = []
    for i in range(5):
        g = zeros((i + 1, 4 * m + i + 1, 16))
        for j in range(i + 1):
            scale = f.reduce(np.array([q ** (2 * m * (i - j))], dtype=object))[0]
            g[j, 2 * m + j] = scale * env_unit
        maps.append(g)
    return maps


@dataclass(frozen=True)
class GbarLifting:
    lift: ChainMapLift
    composite: ExtClass
    expected: ExtClass


def gbar_lifting(built: QExterior, ring: TwistedRing, m: int) -> GbarLifting:
    """Check the explicit lifting of ``_{nu^2} g_{4m}``.

    Also checks ``g_4 o gbar_{4m+4} == q^{4m} g_{4m+4}``.
    """
    if ring.t != 2 or ring.psi is not built.nu:
        msg = "The explicit lifting lives on the nu-twisted ring with t = 2"
        raise QExteriorError(msg)
    g4 = theta(built, ring)
    source = ring.view(2 * m + 2)
    target = ring.view(2)
    cocycle = zeros((4, 4 * m + 1))
    cocycle[:, 2 * m] = built.algebra.unit
    lift = ChainMapLift(source, 4 * m, target, cocycle, gbar_maps(built, m))
    try:
        lift.verify()
    except LiftFailedError as e:
        msg = f"Explicit lifting for m={m} does not commute"
        raise LiftingBrokenError(msg) from e
    images = apply_cocycle(g4.images, lift.maps[4], ring.target)
    composite = ring.space(2 * m + 2).class_of(images)
    expected = g_class(built, ring, m + 1).scaled(built.q ** (4 * m))
    if not class_equal(composite, expected):
        msg = f"g_4 o gbar_{4 * m + 4} != q^{4 * m} g_{4 * m + 4}"
        raise LiftingBrokenError(msg)
    return GbarLifting(lift, composite, expected)


def h_maps(built: QExterior, beta: Any, n_max: int) -> ChainMapLift:
    """Comparison ``P_n -> F^n (x) M(1, beta)`` of the two resolutions.

    ``1 -> sum_i q^{i(i+1)/2} beta^i f^n_i (x) (x + beta y)``
    """
    f = built.params.field
    b = f.coerce(beta)
    explicit = ExplicitComplex(built, 1, b)
    module = explicit.target
    tensored = TensorComplex(built.buchweitz(), module, module)
    generator = module_generator(built, 1, b)
    unit = built.algebra.unit
    maps = []
    for n in range(n_max + 1):
        h = zeros((2 * (n + 1), 1, 4))
        for i in range(n + 1):
            scale = f.reduce(np.array([built.q ** (i * (i + 1) // 2) * b**i], dtype=object))[0]
            for s in range(2):
                h[i * 2 + s, 0] = scale * generator[s] * unit
        maps.append(f.reduce(h))
    lift = ChainMapLift(explicit, 0, tensored, explicit.augmentation(), maps)
    try:
        lift.verify()
    except LiftFailedError as e:
        msg = "h_n comparison maps do not commute"
        raise LiftingBrokenError(msg) from e
    return lift


def scalar_lifts(built: QExterior, beta: Any, n_max: int) -> ChainMapLift:
    """Lift of ``theta (x) M(1, beta)`` on the explicit complex: ``1 -> q^{2i+3} beta^2``."""
    f = built.params.field
    b = f.coerce(beta)
    explicit = ExplicitComplex(built, 1, b)
    twisted = explicit.twisted(power(built.nu, 2))
    generator = module_generator(built, 1, b)
    q = built.q
    cocycle = f.reduce((q**3 * b**2 * generator).reshape(-1, 1))
    unit = built.algebra.unit
    maps = [
        f.reduce((q ** (2 * i + 3) * b**2 * unit).reshape(1, 1, 4)) for i in range(n_max + 1)
    ]
    lift = ChainMapLift(twisted, 4, explicit, cocycle, maps)
    try:
        lift.verify()
    except LiftFailedError as e:
        msg = "Scalar lifts do not commute"
        raise LiftingBrokenError(msg) from e
    return lift


class QExteriorError(Exception):
    pass


class BadParamsError(QExteriorError):
    pass


class ZeroPairError(QExteriorError):
    pass


class LiftingBrokenError(QExteriorError):
    pass
