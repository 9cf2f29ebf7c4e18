"""Projective complexes and minimal projective resolutions.

Every complex here is presented by generators. Generator ``j`` of ``P_n`` lives in
``A e_j`` for an idempotent ``e_j`` (the unit for free modules) and
``differential(n)[b, j]`` is the algebra element ``a`` with ``d(gen_j) = sum_b a * gen_b``.
Vectors of ``P_n`` are written in the ambient free module ``A^{r_n}``, index ``g * d + i``.
"""

from __future__ import annotations

import math
import threading
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
    block_diag,
    column_basis,
    dot,
    hstack,
    identity,
    is_zero,
    null_space,
    rank_of,
    zeros,
)
from twistcoh.services.algebra import compose_morphisms
from twistcoh.services.modules import (
    free_apply,
    free_module,
    free_submodule,
    top_generators,
    twist,
)

if TYPE_CHECKING:
    from twistcoh.services.algebra import Algebra, AlgebraMorphism
    from twistcoh.services.modules import Module

logger = structlog.get_logger()
tracer = trace.get_tracer(__name__)


def free_compose(algebra: Algebra, inner: np.ndarray, outer: np.ndarray) -> np.ndarray:
    """Coefficient array of ``outer o inner`` for maps given on generators."""
    field = algebra.field
    r_out = outer.shape[0]
    r_src = inner.shape[1]
    out = zeros((r_out, r_src, algebra.dim))
    if r_out == 0:
        return out
    for c, j in np.argwhere(np.any(inner != 0, axis=2)):
        left = algebra.left_matrix(inner[c, j])
        out[:, j, :] += outer[:, c, :] @ left.T
    return field.reduce(out)


def ambient_map(algebra: Algebra, coefficients: np.ndarray) -> np.ndarray:
    """The k-linear matrix of a map between ambient free modules."""
    d = algebra.dim
    rows, cols = coefficients.shape[:2]
    out = zeros((rows * d, cols * d))
    for b, j in np.argwhere(np.any(coefficients != 0, axis=2)):
        out[b * d : (b + 1) * d, j * d : (j + 1) * d] = algebra.right_matrix(coefficients[b, j])
    return out


class ProjectiveComplex:
    """``... -> P_1 -> P_0 -> target``, presented by generators and coefficients."""

    def __init__(self, algebra: Algebra, target: Module, name: str = "") -> None:
        self.algebra = algebra
        self.target = target
        self.name = name or f"P({target.name})"
        self.ext_cache: dict[tuple[object, ...], object] = {}
        self._views: dict[tuple[str, ...], TwistedComplex] = {}
        self._ambient: dict[int, np.ndarray] = {}
        self._bases: dict[int, np.ndarray] = {}
        self._solvers: dict[int, LinearSolver] = {}
        self._lock = threading.RLock()

    def rank(self, n: int) -> int:
        raise NotImplementedError

    def differential(self, n: int) -> np.ndarray:
        raise NotImplementedError

    def augmentation(self) -> np.ndarray:
        """Images of the generators of ``P_0`` in the target, as columns."""
        raise NotImplementedError

    def idempotents(self, n: int) -> tuple[np.ndarray, ...]:
        return (self.algebra.unit,) * self.rank(n)

    @property
    def twist_map(self) -> AlgebraMorphism | None:
        return None

    def is_free(self, n: int) -> bool:
        unit = self.algebra.unit
        return all(e is unit or is_zero(e - unit) for e in self.idempotents(n))

    def projective_basis(self, n: int) -> np.ndarray:
        """Columns span ``P_n`` inside ``A^{r_n}``."""
        if n not in self._bases:
            d = self.algebra.dim
            if self.is_free(n):
                basis = identity(self.rank(n) * d)
            else:
                field = self.algebra.field
                spanning = block_diag(
                    [column_basis(field, self.algebra.right_matrix(e)) for e in self.idempotents(n)]
                )
                basis = free_submodule(self.algebra, self.rank(n), spanning).inclusion
            self._bases[n] = basis
        return self._bases[n]

    def length(self, n: int) -> int:
        return self.projective_basis(n).shape[1]

    def projective(self, n: int) -> Module:
        if self.is_free(n):
            return free_module(self.algebra, self.rank(n))
        return free_submodule(
            self.algebra, self.rank(n), self.projective_basis(n), f"P{n}"
        ).module

    def ambient_differential(self, n: int) -> np.ndarray:
        if n not in self._ambient:
            self._ambient[n] = ambient_map(self.algebra, self.differential(n))
        return self._ambient[n]

    def ambient_augmentation(self) -> np.ndarray:
        images = self.augmentation()
        return hstack(
            [self.target.orbit(images[:, j]) for j in range(images.shape[1])], self.target.dim
        )

    def lifting_solver(self, n: int) -> LinearSolver:
        """Solver for preimages under ``d_n`` (``epsilon`` at n = 0) restricted to ``P_n``."""
        with self._lock:
            if n not in self._solvers:
                field = self.algebra.field
                outgoing = self.ambient_augmentation() if n == 0 else self.ambient_differential(n)
                restricted = dot(field, outgoing, self.projective_basis(n))
                self._solvers[n] = LinearSolver(field, restricted)
            return self._solvers[n]

    def twisted(self, phi: AlgebraMorphism) -> ProjectiveComplex:
        """The complex for ``_phi(target)``; views are shared per automorphism."""
        if phi.is_identity:
            return self
        with self._lock:
            view = self._views.get(phi.fingerprint)
            if view is None:
                view = TwistedComplex(self, phi)
                self._views[phi.fingerprint] = view
            return view

    def check(self, n_max: int, minimal: bool = False) -> None:
        """Verify ``d o d = 0``, exactness by rank counts and optionally minimality."""
        field = self.algebra.field
        with tracer.start_as_current_span(
            "resolution.check", attributes={"complex.name": self.name, "n_max": n_max}
        ):
            augmentation = self.ambient_augmentation()
            basis0 = self.projective_basis(0)
            image_rank = rank_of(field, dot(field, augmentation, basis0))
            if image_rank != self.target.dim:
                msg = f"{self.name}: augmentation is not onto"
                raise NotExactError(msg)
            previous_rank = image_rank
            for n in range(1, n_max + 1):
                if n == 1:
                    composite = dot(field, augmentation, self.ambient_differential(1))
                    if not is_zero(composite):
                        msg = f"{self.name}: augmentation o d_1 != 0"
                        raise NotAComplexError(msg)
                else:
                    composite = free_compose(
                        self.algebra, self.differential(n), self.differential(n - 1)
                    )
                    if not is_zero(composite):
                        msg = f"{self.name}: d_{n - 1} o d_{n} != 0"
                        raise NotAComplexError(msg)
                n_rank = rank_of(
                    field, dot(field, self.ambient_differential(n), self.projective_basis(n))
                )
                if n_rank != self.length(n - 1) - previous_rank:
                    msg = f"{self.name}: not exact at degree {n - 1}"
                    raise NotExactError(msg)
                if minimal and not self._in_radical(self.differential(n)):
                    msg = f"{self.name}: d_{n} leaves the radical"
                    raise NotMinimalResolutionError(msg)
                previous_rank = n_rank

    def _in_radical(self, coefficients: np.ndarray) -> bool:
        entries = coefficients.reshape(-1, self.algebra.dim).T
        radical = self.algebra.radical
        if radical.shape[1] == 0:
            return is_zero(entries)
        return LinearSolver(self.algebra.field, radical).solvable(entries)


class TwistedComplex(ProjectiveComplex):
    """``_phi P`` identified with a complex of projectives via ``a -> phi^-1(a)``."""

    def __init__(self, base: ProjectiveComplex, phi: AlgebraMorphism) -> None:
        super().__init__(base.algebra, twist(base.target, phi), f"{phi.name}.{base.name}")
        self.base = base
        self._phi = phi
        self._inverse = phi.inverse.matrix
        self._differentials: dict[int, np.ndarray] = {}

    @property
    def twist_map(self) -> AlgebraMorphism:
        return self._phi

    def rank(self, n: int) -> int:
        return self.base.rank(n)

    def differential(self, n: int) -> np.ndarray:
        if n not in self._differentials:
            raw = np.tensordot(self.base.differential(n), self._inverse, axes=([2], [1]))
            self._differentials[n] = self.algebra.field.reduce(raw)
        return self._differentials[n]

    def augmentation(self) -> np.ndarray:
        return self.base.augmentation()

    def idempotents(self, n: int) -> tuple[np.ndarray, ...]:
        if self.base.is_free(n):
            return self.base.idempotents(n)
        field = self.algebra.field
        return tuple(dot(field, self._inverse, e) for e in self.base.idempotents(n))

    def twisted(self, phi: AlgebraMorphism) -> ProjectiveComplex:
        return self.base.twisted(compose_morphisms(self._phi, phi))


class TensorComplex(ProjectiveComplex):
    """``F (x)_A M`` for a complex F of free bimodules resolving ``_phi A_1``.

    ``Ae (x) Ae (x)_A M`` is free over A on generators ``gen_j (x) u_s``, indexed
    ``j * dim M + s``. The augmentation is ``a (x) u -> a u`` into ``target``.
    """

    def __init__(self, bimodule_complex: ProjectiveComplex, module: Module, target: Module) -> None:
        base = bimodule_complex.algebra.enveloped
        if base is None or module.algebra is not base or target.algebra is not base:
            msg = f"{bimodule_complex.name} and {module.name} do not share an algebra"
            raise ResolutionError(msg)
        if target.dim != module.dim:
            msg = f"{target.name} is not a twist of {module.name}"
            raise ResolutionError(msg)
        super().__init__(base, target, f"{bimodule_complex.name}(x){module.name}")
        self.bimodule_complex = bimodule_complex
        self.module = module
        self._differentials: dict[int, np.ndarray] = {}

    def _require_free(self, n: int) -> None:
        if not self.bimodule_complex.is_free(n):
            msg = f"{self.bimodule_complex.name} is not free in degree {n}"
            raise ResolutionError(msg)

    def rank(self, n: int) -> int:
        return self.bimodule_complex.rank(n) * self.module.dim

    def differential(self, n: int) -> np.ndarray:
        if n not in self._differentials:
            self._require_free(n)
            d = self.algebra.dim
            m = self.module.dim
            coeffs = self.bimodule_complex.differential(n)
            rows, cols = coeffs.shape[:2]
            if rows == 0 or cols == 0 or m == 0:
                self._differentials[n] = zeros((rows * m, cols * m, d))
            else:
                split = coeffs.reshape(rows, cols, d, d)
                # the right tensor factor acts on M
                raw = np.tensordot(split, self.module.stack, axes=([3], [0]))
                raw = raw.transpose(0, 3, 1, 4, 2).reshape(rows * m, cols * m, d)
                self._differentials[n] = self.algebra.field.reduce(raw)
        return self._differentials[n]

    def augmentation(self) -> np.ndarray:
        self._require_free(0)
        images = self.bimodule_complex.augmentation()
        return hstack(
            [self.module.act(images[:, g]) for g in range(images.shape[1])], self.module.dim
        )


@dataclass(frozen=True)
class Stage:
    degree: int
    projective: Module
    differential: np.ndarray
    syzygy: Module
    syzygy_embedding: np.ndarray


class MinimalResolution(ProjectiveComplex):
    """Minimal projective resolution, extended on demand one stage at a time."""

    def __init__(self, module: Module, name: str = "") -> None:
        super().__init__(module.algebra, module, name)
        algebra = module.algebra
        field = algebra.field
        pairs = top_generators(algebra, identity(module.dim), module.apply)
        self._augmentation = hstack([v for v, _ in pairs], module.dim)
        self._idempotents: list[tuple[np.ndarray, ...]] = [tuple(e for _, e in pairs)]
        self._differentials: list[np.ndarray] = [zeros((0, len(pairs), algebra.dim))]
        basis = self.projective_basis(0)
        kernel = null_space(field, dot(field, self.ambient_augmentation(), basis))
        self._kernels: list[np.ndarray] = [dot(field, basis, kernel)]

    @property
    def computed_length(self) -> int:
        return len(self._differentials) - 1

    @property
    def projective_dimension(self) -> int | None:
        """Last degree with a nonzero projective, once a zero one has been reached."""
        for n, gens in enumerate(self._idempotents):
            if not gens:
                return n - 1
        return None

    def rank(self, n: int) -> int:
        self.extend(n)
        return len(self._idempotents[n])

    def idempotents(self, n: int) -> tuple[np.ndarray, ...]:
        self.extend(n)
        return self._idempotents[n]

    def differential(self, n: int) -> np.ndarray:
        self.extend(n)
        return self._differentials[n]

    def augmentation(self) -> np.ndarray:
        return self._augmentation

    def kernel(self, n: int) -> np.ndarray:
        """``ker d_n`` (``ker epsilon`` at 0) in ambient coordinates of ``P_n``."""
        self.extend(n)
        return self._kernels[n]

    def extend(self, steps: int) -> MinimalResolution:
        with self._lock:
            while self.computed_length < steps:
                self._add_stage()
        return self

    def _add_stage(self) -> None:
        algebra = self.algebra
        field = algebra.field
        d = algebra.dim
        n = self.computed_length + 1
        kernel = self._kernels[-1]
        previous = len(self._idempotents[-1])
        if kernel.shape[1] == 0:
            self._idempotents.append(())
            self._differentials.append(zeros((previous, 0, d)))
            self._kernels.append(zeros((0, 0)))
            return
        pairs = top_generators(algebra, kernel, lambda a, v: free_apply(algebra, previous, a, v))
        vectors = hstack([v for v, _ in pairs], previous * d)
        self._idempotents.append(tuple(e for _, e in pairs))
        self._differentials.append(vectors.reshape(previous, d, len(pairs)).transpose(0, 2, 1))
        basis = self.projective_basis(n)
        outgoing = dot(field, ambient_map(algebra, self._differentials[n]), basis)
        self._kernels.append(dot(field, basis, null_space(field, outgoing)))
        logger.debug("resolution_extended", module=self.target.name, degree=n, rank=len(pairs))
        emit(
            Event(
                EventType.RESOLUTION_EXTENDED,
                {"module": self.target.name, "degree": n, "rank": len(pairs)},
            )
        )

    def syzygy(self, n: int) -> Module:
        if n == 0:
            return self.target
        kernel = self.kernel(n - 1)
        return free_submodule(
            self.algebra, self.rank(n - 1), kernel, f"Omega^{n}({self.target.name})"
        ).module

    def stages(self) -> list[Stage]:
        out = []
        for n in range(self.computed_length + 1):
            embedding = self.kernel(n - 1) if n else identity(self.target.dim)
            out.append(
                Stage(n, self.projective(n), self.differential(n), self.syzygy(n), embedding)
            )
        return out


class ResolutionCache:
    """Minimal resolutions keyed by module, shared across callers."""

    def __init__(self) -> None:
        self._entries: dict[tuple[int, tuple[str, ...]], MinimalResolution] = {}
        self._lock = threading.Lock()

    def get(self, module: Module) -> MinimalResolution:
        key = (id(module.algebra), module.fingerprint)
        with self._lock:
            res = self._entries.get(key)
            if res is None or res.algebra is not module.algebra:
                res = MinimalResolution(module)
                self._entries[key] = res
            return res

    def clear(self) -> None:
        with self._lock:
            self._entries.clear()


resolution_cache = ResolutionCache()


def minimal_resolution(module: Module, steps: int) -> MinimalResolution:
    with tracer.start_as_current_span(
        "resolution.minimal_resolution",
        attributes={"module.name": module.name, "module.dim": module.dim, "steps": steps},
    ):
        return resolution_cache.get(module).extend(steps)


def betti_lengths(res: MinimalResolution) -> list[int]:
    if res.target.dim == 0:
        return []
    return [res.length(n) for n in range(res.computed_length + 1)]


def betti_ranks(res: MinimalResolution) -> list[int]:
    if res.target.dim == 0:
        return []
    return [res.rank(n) for n in range(res.computed_length + 1)]


class GrowthVerdict(StrEnum):
    EVENTUALLY_ZERO = "eventually_zero"
    BOUNDED = "bounded"
    POLYNOMIAL_DEGREE = "polynomial_degree"
    INCONCLUSIVE = "inconclusive"


@dataclass(frozen=True)
class GrowthEstimate:
    window: tuple[int, int]
    values: list[int]
    verdict: GrowthVerdict
    gamma: int | None = None


def classify_growth(values: list[int], window: int) -> tuple[GrowthVerdict, int | None]:
    tail = values[-math.ceil(window / 2) :] if values else []
    if not tail:
        return GrowthVerdict.INCONCLUSIVE, None
    if all(v == 0 for v in tail):
        return GrowthVerdict.EVENTUALLY_ZERO, 0
    if min(tail) > 0 and max(tail) == min(tail):
        return GrowthVerdict.BOUNDED, 1
    diffs = list(tail)
    for c in range(1, len(tail)):
        diffs = [b - a for a, b in zip(diffs, diffs[1:], strict=False)]
        if len(diffs) < 2:
            break
        if all(v == 0 for v in diffs):
            return GrowthVerdict.POLYNOMIAL_DEGREE, c
    return GrowthVerdict.INCONCLUSIVE, None


def complexity(module: Module, t: int = 1, window: int | None = None) -> GrowthEstimate:
    """Growth of ``dim P_{tn}`` for ``n < window`` in the minimal resolution."""
    window = settings.complexity_window if window is None else window
    if t < 1 or window < 1:
        msg = f"Stride and window must be positive, got t={t}, window={window}"
        raise ResolutionError(msg)
    with tracer.start_as_current_span(
        "resolution.complexity", attributes={"module.name": module.name, "t": t, "window": window}
    ):
        last = t * (window - 1)
        res = minimal_resolution(module, last)
        values = [res.length(t * n) for n in range(window)] if module.dim else [0] * window
        verdict, gamma = classify_growth(values, window)
        logger.info(
            "complexity_estimated", module=module.name, t=t, verdict=verdict.value, gamma=gamma
        )
        return GrowthEstimate((0, last), values, verdict, gamma)


def twisted_syzygy_track(
    module: Module, psi: AlgebraMorphism, t: int, steps: int
) -> list[Module]:
    """``Omega^{tn}(_{psi^n} M)`` for ``n = 0..steps``, read off the untwisted resolution."""
    res = minimal_resolution(module, t * steps)
    return [twist(res.syzygy(t * n), psi, n) for n in range(steps + 1)]


def top_multiplicities(module: Module, t: int, window: int) -> list[int]:
    """Generator counts of ``P_{tn}``; for basic algebras ``dim Ext^{tn}(M, A/rad)``."""
    res = minimal_resolution(module, t * (window - 1))
    return [res.rank(t * n) for n in range(window)] if module.dim else [0] * window


class ResolutionError(Exception):
    pass


class NotAComplexError(ResolutionError):
    pass


class NotExactError(ResolutionError):
    pass


class NotMinimalResolutionError(ResolutionError):
    pass
