from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import cached_property
from typing import TYPE_CHECKING, Any

import numpy as np
import structlog
from opentelemetry import trace

from twistcoh.config import settings
from twistcoh.core.events import Event, EventType, emit
from twistcoh.core.linalg import (
    LinearSolver,
    QuotientBasis,
    block_diag,
    column_basis,
    dot,
    hstack,
    identity,
    invert_array,
    is_zero,
    kron,
    null_space,
    rank_of,
    row_reduce,
    zeros,
)
from twistcoh.services.algebra import (
    Algebra,
    AlgebraMorphism,
    enveloping,
    enveloping_morphism,
    opposite,
    power,
)

if TYPE_CHECKING:
    from collections.abc import Callable, Sequence

    from twistcoh.core.field import Field

    Action = Callable[[np.ndarray, np.ndarray], np.ndarray]

logger = structlog.get_logger()
tracer = trace.get_tracer(__name__)


@dataclass(frozen=True, eq=False)
class Module:
    """A left module; ``stack[i]`` is the action matrix of ``basis_i``."""

    algebra: Algebra
    stack: np.ndarray
    name: str = ""

    @property
    def dim(self) -> int:
        return self.stack.shape[1]

    @property
    def field(self) -> Field:
        return self.algebra.field

    def act(self, a: np.ndarray) -> np.ndarray:
        support = np.flatnonzero(a != 0)
        if support.size == 0:
            return zeros((self.dim, self.dim))
        return self.field.reduce(np.tensordot(a[support], self.stack[support], axes=1))

    def apply(self, a: np.ndarray, vectors: np.ndarray) -> np.ndarray:
        return dot(self.field, self.act(a), vectors)

    def orbit(self, v: np.ndarray) -> np.ndarray:
        """Column i is ``basis_i * v``."""
        if self.dim == 0:
            return zeros((0, self.algebra.dim))
        return self.field.reduce(np.tensordot(self.stack, v, axes=([2], [0]))).T

    @cached_property
    def fingerprint(self) -> tuple[str, ...]:
        return tuple(self.field.format(v) for v in self.stack.flat)

    def same_as(self, other: Module) -> bool:
        return (
            other.algebra is self.algebra
            and other.stack.shape == self.stack.shape
            and bool(np.array_equal(other.stack, self.stack))
        )


@dataclass(frozen=True, eq=False)
class ModuleMap:
    source: Module
    target: Module
    matrix: np.ndarray

    def is_intertwiner(self) -> bool:
        if self.source.algebra is not self.target.algebra:
            return False
        field = self.source.field
        lhs = np.matmul(self.matrix, self.source.stack)
        rhs = np.matmul(self.target.stack, self.matrix)
        return is_zero(field.reduce(lhs - rhs))

    def is_invertible(self) -> bool:
        rows, cols = self.matrix.shape
        return rows == cols and rank_of(self.source.field, self.matrix) == rows

    def inverse(self) -> ModuleMap:
        return ModuleMap(self.target, self.source, invert_array(self.source.field, self.matrix))

    def compose(self, first: ModuleMap) -> ModuleMap:
        """``self o first``."""
        matrix = dot(self.source.field, self.matrix, first.matrix)
        return ModuleMap(first.source, self.target, matrix)


@dataclass(frozen=True)
class Embedding:
    module: Module
    inclusion: np.ndarray
    pivots: list[int]

    def coords(self, vectors: np.ndarray) -> np.ndarray:
        return vectors[self.pivots]


@dataclass(frozen=True)
class Quotient:
    module: Module
    projection: np.ndarray
    section: np.ndarray


def validate_module(algebra: Algebra, stack: Any, name: str = "") -> Module:
    field = algebra.field
    s = field.array(stack)
    if s.ndim != 3 or s.shape[0] != algebra.dim or s.shape[1] != s.shape[2]:
        msg = f"{name}: action must be {algebra.dim} square matrices of one size"
        raise NotAModuleError(msg)
    module = Module(algebra, s, name)
    if not is_zero(module.act(algebra.unit) - identity(module.dim)):
        msg = f"{name}: unit does not act as the identity"
        raise NotAModuleError(msg)
    for g in algebra.generators:
        lhs = np.tensordot(algebra.left_matrix(g).T, s, axes=1)
        rhs = np.matmul(module.act(g), s)
        if not is_zero(field.reduce(lhs - rhs)):
            msg = f"{name}: action does not respect the structure constants"
            raise NotAModuleError(msg)
    return module


def zero_module(algebra: Algebra) -> Module:
    return Module(algebra, zeros((algebra.dim, 0, 0)), "0")


def regular_module(algebra: Algebra) -> Module:
    return Module(algebra, algebra.left_stack.copy(), algebra.name)


def regular_bimodule(algebra: Algebra) -> Module:
    d = algebra.dim
    env = enveloping(algebra)
    # (a (x) b) . v = a v b
    stack = np.matmul(algebra.left_stack[:, None], algebra.right_stack[None, :])
    return Module(env, algebra.field.reduce(stack.reshape(d * d, d, d)), algebra.name)


def free_module(algebra: Algebra, rank: int) -> Module:
    d = algebra.dim
    stack = zeros((d, rank * d, rank * d))
    for g in range(rank):
        stack[:, g * d : (g + 1) * d, g * d : (g + 1) * d] = algebra.left_stack
    return Module(algebra, stack, f"{algebra.name}^{rank}")


def free_action(algebra: Algebra, rank: int, vectors: np.ndarray) -> np.ndarray:
    """All basis actions on vectors of the free module of the given rank.

    Returns shape ``(d, rank * d, k)``; uses only nonzero structure constants.
    """
    d = algebra.dim
    k = vectors.shape[1]
    blocks = vectors.reshape(rank, d, k)
    out = zeros((d, rank, d, k))
    stack = algebra.left_stack
    for i, m, j in algebra.left_entries:
        out[i, :, m, :] += stack[i, m, j] * blocks[:, j, :]
    return algebra.field.reduce(out.reshape(d, rank * d, k))


def free_apply(algebra: Algebra, rank: int, a: np.ndarray, vectors: np.ndarray) -> np.ndarray:
    d = algebra.dim
    blocks = vectors.reshape(rank, d, -1)
    return algebra.field.reduce(np.matmul(algebra.left_matrix(a), blocks)).reshape(rank * d, -1)


def direct_sum(*modules: Module) -> Module:
    algebra = modules[0].algebra
    if any(m.algebra is not algebra for m in modules):
        msg = "Direct summands must share one algebra"
        raise WrongAlgebraError(msg)
    stack = np.stack([block_diag([m.stack[i] for m in modules]) for i in range(algebra.dim)])
    return Module(algebra, stack, "+".join(m.name for m in modules))


def twist(module: Module, phi: AlgebraMorphism, n: int = 1) -> Module:
    """``_{phi^n}M``: same space, ``a . v = phi^n(a) v``."""
    if n == 0:
        return module
    if phi.source is not module.algebra or not phi.is_automorphism:
        msg = f"{phi.name} is not an automorphism of {module.algebra.name}"
        raise NotAutomorphismError(msg)
    matrix = power(phi, n).matrix
    stack = module.field.reduce(np.tensordot(matrix.T, module.stack, axes=1))
    return Module(module.algebra, stack, f"{phi.name}^{n}.{module.name}")


def bimodule_twist(
    bimodule: Module,
    phi_left: AlgebraMorphism,
    phi_right: AlgebraMorphism,
    left_power: int = 1,
    right_power: int = 1,
) -> Module:
    base = bimodule.algebra.enveloped
    if base is None or phi_left.source is not base or phi_right.source is not base:
        msg = f"{bimodule.name} is not a bimodule over the algebra of the twists"
        raise WrongAlgebraError(msg)
    both = enveloping_morphism(power(phi_left, left_power), power(phi_right, right_power))
    return twist(bimodule, both, 1)


def left_restriction(bimodule: Module) -> Module:
    base = _base_algebra(bimodule)
    stack = np.stack([bimodule.act(kron(base.basis_vector(i), base.unit)) for i in range(base.dim)])
    return Module(base, stack, f"{bimodule.name}|left")


def right_restriction(bimodule: Module) -> Module:
    """The right action as a left module over the opposite algebra."""
    base = _base_algebra(bimodule)
    stack = np.stack([bimodule.act(kron(base.unit, base.basis_vector(j))) for j in range(base.dim)])
    return Module(opposite(base), stack, f"{bimodule.name}|right")


def _base_algebra(bimodule: Module) -> Algebra:
    base = bimodule.algebra.enveloped
    if base is None:
        msg = f"{bimodule.name} is not a bimodule"
        raise WrongAlgebraError(msg)
    return base


def _embed(
    algebra: Algebra,
    vectors: np.ndarray,
    images_of: Callable[[np.ndarray], np.ndarray],
    name: str,
) -> Embedding:
    field = algebra.field
    reduced, pivots = row_reduce(field, vectors.T)
    basis = reduced[: len(pivots)].T.copy()
    images = images_of(basis)
    stack = images[:, pivots, :]
    if not is_zero(field.reduce(np.matmul(basis, stack) - images)):
        msg = f"{name}: span is not a submodule"
        raise NotSubmoduleError(msg)
    return Embedding(Module(algebra, stack, name), basis, pivots)


def submodule(module: Module, vectors: np.ndarray, name: str = "") -> Embedding:
    field = module.field
    return _embed(
        module.algebra,
        vectors,
        lambda basis: field.reduce(np.matmul(module.stack, basis)),
        name or f"sub({module.name})",
    )


def free_submodule(algebra: Algebra, rank: int, vectors: np.ndarray, name: str = "") -> Embedding:
    return _embed(
        algebra, vectors, lambda basis: free_action(algebra, rank, basis), name or "syzygy"
    )


def cyclic_submodule(module: Module, v: np.ndarray, name: str = "") -> Embedding:
    return submodule(module, module.orbit(v), name)


def quotient_module(module: Module, sub: np.ndarray, name: str = "") -> Quotient:
    field = module.field
    basis = QuotientBasis(field, sub, identity(module.dim))
    projection = basis.coords(identity(module.dim))
    section = basis.representatives()
    stack = field.reduce(np.matmul(projection, field.reduce(np.matmul(module.stack, section))))
    quotient = Module(module.algebra, stack, name or f"{module.name}/sub")
    return Quotient(quotient, projection, section)


def radical_submodule(module: Module) -> Embedding:
    gens = module.algebra.radical_generators
    vectors = hstack([module.act(g) for g in gens], module.dim)
    return submodule(module, vectors, f"rad({module.name})")


def top(module: Module) -> Quotient:
    rad = radical_submodule(module)
    return quotient_module(module, rad.inclusion, f"top({module.name})")


def top_generators(
    algebra: Algebra, span: np.ndarray, action: Action
) -> list[tuple[np.ndarray, np.ndarray]]:
    """Generators of the submodule spanned by ``span`` modulo its radical.

    Each generator comes with the idempotent ``e`` it lives under (``v = e v``);
    local algebras use the unit. ``action(a, V)`` computes ``a . V``.
    """
    rows = span.shape[0]
    field = algebra.field
    rad = hstack([action(g, span) for g in algebra.radical_generators], rows)
    if algebra.is_local:
        return [
            (v, algebra.unit) for v in QuotientBasis(field, rad, span).representatives().T
        ]
    if not algebra.idempotents:
        msg = f"{algebra.name} is not local and has no idempotents"
        raise NeedIdempotentsError(msg)
    out: list[tuple[np.ndarray, np.ndarray]] = []
    for e in algebra.idempotents:
        local_span = action(e, span)
        local_rad = action(e, rad) if rad.shape[1] else zeros((rows, 0))
        reps = QuotientBasis(field, local_rad, local_span).representatives()
        out.extend((v, e) for v in reps.T)
    return out


@dataclass(frozen=True)
class Cover:
    projective: Module
    generators: np.ndarray
    idempotents: tuple[np.ndarray, ...]
    inclusion: np.ndarray
    surjection: np.ndarray

    @property
    def rank(self) -> int:
        return len(self.idempotents)

    @property
    def is_free(self) -> bool:
        return self.inclusion.shape[0] == self.inclusion.shape[1]


def projective_module(
    algebra: Algebra, idempotents: Sequence[np.ndarray]
) -> tuple[Module, np.ndarray]:
    """``(+) A e_j`` and its inclusion into the free module of the same rank."""
    rank = len(idempotents)
    if all(e is algebra.unit or is_zero(e - algebra.unit) for e in idempotents):
        return free_module(algebra, rank), identity(rank * algebra.dim)
    field = algebra.field
    basis = block_diag([column_basis(field, algebra.right_matrix(e)) for e in idempotents])
    embedding = free_submodule(algebra, rank, basis, f"P({algebra.name})")
    return embedding.module, embedding.inclusion


def projective_cover(module: Module, check_minimal: bool = True) -> Cover:
    algebra = module.algebra
    with tracer.start_as_current_span(
        "modules.projective_cover", attributes={"module.dim": module.dim}
    ):
        pairs = top_generators(algebra, identity(module.dim), module.apply)
        gens = hstack([v for v, _ in pairs], module.dim)
        idempotents = tuple(e for _, e in pairs)
        projective, inclusion = projective_module(algebra, idempotents)
        ambient = hstack([module.orbit(v) for v, _ in pairs], module.dim)
        surjection = dot(module.field, ambient, inclusion)
        cover = Cover(projective, gens, idempotents, inclusion, surjection)
        if check_minimal:
            _check_minimal(cover)
        return cover


def _check_minimal(cover: Cover) -> None:
    field = cover.projective.field
    kernel = null_space(field, cover.surjection)
    if kernel.shape[1] == 0:
        return
    rad = radical_submodule(cover.projective).inclusion
    if not LinearSolver(field, rad).solvable(kernel):
        msg = "Cover kernel is not contained in the radical"
        raise NotMinimalError(msg)


def syzygy(module: Module) -> Module:
    cover = projective_cover(module, check_minimal=False)
    kernel = null_space(module.field, cover.surjection)
    name = f"Omega({module.name})"
    if cover.is_free:
        return free_submodule(module.algebra, cover.rank, kernel, name).module
    return submodule(cover.projective, kernel, name).module


@dataclass(frozen=True)
class Presentation:
    """``(+) A f_k -> (+) A e_g -> M -> 0`` with relation ``k`` = ``relations[:, k]``."""

    cover: Cover
    relations: np.ndarray
    relation_idempotents: tuple[np.ndarray, ...]
    section: np.ndarray


def presentation(module: Module) -> Presentation:
    algebra = module.algebra
    field = module.field
    d = algebra.dim
    cover = projective_cover(module, check_minimal=False)
    rank = cover.rank
    kernel = dot(field, cover.inclusion, null_space(field, cover.surjection))
    pairs = top_generators(
        algebra, kernel, lambda a, v: free_apply(algebra, rank, a, v)
    )
    if pairs:
        rel = np.stack([v.reshape(rank, d) for v, _ in pairs], axis=1)
    else:
        rel = zeros((rank, 0, d))
    solution = LinearSolver(field, cover.surjection).solve(identity(module.dim))
    section = dot(field, cover.inclusion, solution)
    return Presentation(cover, rel, tuple(e for _, e in pairs), section)


def hom_basis(source: Module, target: Module) -> list[ModuleMap]:
    if source.algebra is not target.algebra:
        msg = "Hom needs modules over one algebra"
        raise WrongAlgebraError(msg)
    if source.dim == 0 or target.dim == 0:
        return []
    with tracer.start_as_current_span(
        "modules.hom_basis",
        attributes={"source.dim": source.dim, "target.dim": target.dim},
    ):
        try:
            pres = presentation(source)
        except NeedIdempotentsError:
            return _hom_basis_kron(source, target)
        field = source.field
        n = target.dim
        cover = pres.cover
        rank = cover.rank
        count = pres.relations.shape[1]
        domain = block_diag([column_basis(field, target.act(e)) for e in cover.idempotents])
        equations = zeros((count * n, rank * n))
        for k in range(count):
            for g in range(rank):
                equations[k * n : (k + 1) * n, g * n : (g + 1) * n] = target.act(
                    pres.relations[g, k]
                )
        solutions = dot(field, domain, null_space(field, dot(field, equations, domain)))
        maps = []
        for sol in solutions.T:
            images = hstack([target.orbit(sol[g * n : (g + 1) * n]) for g in range(rank)], n)
            maps.append(ModuleMap(source, target, dot(field, images, pres.section)))
        return maps


def _hom_basis_kron(source: Module, target: Module) -> list[ModuleMap]:
    field = source.field
    m, n = source.dim, target.dim
    blocks = [
        kron(identity(n), source.act(g).T) - kron(target.act(g), identity(m))
        for g in source.algebra.generators
    ]
    kernel = null_space(field, field.reduce(np.vstack(blocks)))
    return [ModuleMap(source, target, v.reshape(n, m)) for v in kernel.T]


@dataclass(frozen=True)
class IsomorphismFound:
    certificate: ModuleMap
    attempts: int


@dataclass(frozen=True)
class NotIsomorphic:
    reason: str


@dataclass(frozen=True)
class SearchExhausted:
    attempts: int


IsomorphismVerdict = IsomorphismFound | NotIsomorphic | SearchExhausted


def is_isomorphic(
    source: Module,
    target: Module,
    seed: int | None = None,
    box: int | None = None,
    trials: int | None = None,
) -> IsomorphismVerdict:
    """Search for an invertible intertwiner; negative answers only when definitive."""
    if source.algebra is not target.algebra:
        msg = "Isomorphism test needs modules over one algebra"
        raise WrongAlgebraError(msg)
    seed = settings.seed if seed is None else seed
    box = settings.iso_search_box if box is None else box
    trials = settings.iso_random_trials if trials is None else trials
    with tracer.start_as_current_span(
        "modules.is_isomorphic", attributes={"module.dim": source.dim, "seed": seed}
    ):
        if source.dim != target.dim:
            return NotIsomorphic(f"dimensions differ: {source.dim} vs {target.dim}")
        if source.dim == 0:
            return IsomorphismFound(ModuleMap(source, target, zeros((0, 0))), 0)
        forward = hom_basis(source, target)
        if not forward:
            return NotIsomorphic("no nonzero homomorphisms")
        backward = hom_basis(target, source)
        endo = hom_basis(source, source)
        if not len(forward) == len(backward) == len(endo):
            return NotIsomorphic(
                f"dim Hom(M,N)={len(forward)}, dim Hom(N,M)={len(backward)}, "
                f"dim End(M)={len(endo)}"
            )

        attempts = 0
        for coeffs in _candidate_coefficients(len(forward), box, trials, seed):
            attempts += 1
            candidate = _combine_maps(forward, coeffs)
            if candidate.is_invertible() and candidate.is_intertwiner():
                emit(
                    Event(
                        EventType.ISOMORPHISM_FOUND,
                        {"dim": source.dim, "attempts": attempts},
                    )
                )
                return IsomorphismFound(candidate, attempts)
        emit(Event(EventType.ISOMORPHISM_INCONCLUSIVE, {"dim": source.dim, "attempts": attempts}))
        return SearchExhausted(attempts)


def _candidate_coefficients(
    count: int, box: int, trials: int, seed: int, cap: int = 5000
) -> itertools.chain[tuple[int, ...]]:
    singles = (tuple(int(i == k) for i in range(count)) for k in range(count))

    def boxed() -> itertools.chain[tuple[int, ...]]:
        rounds = []
        for size in range(1, box + 1):
            grid = (
                c
                for c in itertools.product(range(-size, size + 1), repeat=count)
                if max(abs(v) for v in c) == size
            )
            rounds.append(itertools.islice(grid, cap))
        return itertools.chain(*rounds)

    def randomized() -> itertools.chain[tuple[int, ...]]:
        rng = np.random.default_rng(seed)
        draws = (tuple(int(v) for v in rng.integers(-10, 11, size=count)) for _ in range(trials))
        return itertools.chain(draws)

    return itertools.chain(singles, boxed(), randomized())


def _combine_maps(maps: Sequence[ModuleMap], coeffs: Sequence[int]) -> ModuleMap:
    first = maps[0]
    total = zeros(first.matrix.shape)
    for c, f in zip(coeffs, maps, strict=True):
        if c:
            total = total + c * f.matrix
    return ModuleMap(first.source, first.target, first.source.field.reduce(total))


def tensor_over_algebra(bimodule: Module, module: Module) -> Quotient:
    """``B (x)_A M`` as the quotient of ``B (x)_k M`` by ``b a (x) v - b (x) a v``."""
    base = bimodule.algebra.enveloped
    if base is None or module.algebra is not base:
        msg = f"{bimodule.name} is not a bimodule over the algebra of {module.name}"
        raise WrongAlgebraError(msg)
    field = base.field
    with tracer.start_as_current_span(
        "modules.tensor_over_algebra",
        attributes={"bimodule.dim": bimodule.dim, "module.dim": module.dim},
    ):
        nb, nm = bimodule.dim, module.dim
        ib, im = identity(nb), identity(nm)
        relations = [
            kron(bimodule.act(kron(base.unit, g)), im) - kron(ib, module.act(g))
            for g in base.generators
        ]
        quotient = QuotientBasis(field, field.reduce(hstack(relations, nb * nm)), identity(nb * nm))
        projection = quotient.coords(identity(nb * nm))
        section = quotient.representatives()
        lefts = [bimodule.act(kron(base.basis_vector(i), base.unit)) for i in range(base.dim)]
        stack = np.stack(
            [dot(field, projection, dot(field, kron(left, im), section)) for left in lefts]
        )
        product = Module(base, stack, f"{bimodule.name}(x){module.name}")
        return Quotient(product, projection, section)


def tensor_map(
    bimodule_map: np.ndarray,
    source: Quotient,
    target: Quotient,
    module_map: np.ndarray,
    field: Field,
) -> np.ndarray:
    return dot(field, target.projection, dot(field, kron(bimodule_map, module_map), source.section))


def tensor_dimension_via_presentation(bimodule: Module, module: Module) -> int:
    """``dim B (x)_A M`` as a cokernel of ``B (x)_A`` applied to a presentation of M."""
    base = _base_algebra(bimodule)
    if module.algebra is not base:
        msg = f"{module.name} is not a module over {base.name}"
        raise WrongAlgebraError(msg)
    field = base.field
    if module.dim == 0:
        return 0
    pres = presentation(module)

    def right(a: np.ndarray) -> np.ndarray:
        return bimodule.act(kron(base.unit, a))

    codomain = [column_basis(field, right(e)) for e in pres.cover.idempotents]
    domain = block_diag([column_basis(field, right(f)) for f in pres.relation_idempotents])
    nb = bimodule.dim
    rank, count = pres.cover.rank, pres.relations.shape[1]
    matrix = zeros((rank * nb, count * nb))
    for g in range(rank):
        for k in range(count):
            matrix[g * nb : (g + 1) * nb, k * nb : (k + 1) * nb] = right(pres.relations[g, k])
    image_rank = rank_of(field, dot(field, matrix, domain)) if count else 0
    return sum(c.shape[1] for c in codomain) - image_rank


class ModuleError(Exception):
    pass


class NotAModuleError(ModuleError):
    pass


class NotAutomorphismError(ModuleError):
    pass


class WrongAlgebraError(ModuleError):
    pass


class NeedIdempotentsError(ModuleError):
    pass


class NotSubmoduleError(ModuleError):
    pass


class NotMinimalError(ModuleError):
    pass
