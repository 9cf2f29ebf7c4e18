"""Twisted support varieties, read through complexity, finite generation evidence
and periodicity."""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import StrEnum
from typing import TYPE_CHECKING

import numpy as np
import structlog
from opentelemetry import trace

from twistcoh.config import settings
from twistcoh.core.events import Event, EventType, emit
from twistcoh.core.linalg import LinearSolver, null_space, rank_of, zeros
from twistcoh.services.algebra import DegenerateFormError, nakayama
from twistcoh.services.hochschild import ExtModule, k_eta
from twistcoh.services.modules import (
    IsomorphismFound,
    Module,
    ModuleMap,
    SearchExhausted,
    is_isomorphic,
    regular_module,
    tensor_over_algebra,
    top,
    twist,
)
from twistcoh.services.resolution import (
    GrowthVerdict,
    complexity,
    minimal_resolution,
)

if TYPE_CHECKING:
    from collections.abc import Sequence

    from twistcoh.core.field import Field
    from twistcoh.services.algebra import AlgebraMorphism, FrobeniusForm
    from twistcoh.services.ext import ExtClass, TwistedRing
    from twistcoh.services.resolution import GrowthEstimate

logger = structlog.get_logger()
tracer = trace.get_tracer(__name__)


class FgVerdict(StrEnum):
    PASS_EVIDENCE = "pass_evidence"
    FAIL_WITNESS = "fail_witness"
    INCONCLUSIVE = "inconclusive"


class WitnessKind(StrEnum):
    # a nonzero class killed by every positive generator while Ext goes on
    ANNIHILATED = "annihilated"
    # the tail of the window is not reached by the generators
    GROWTH = "growth"


@dataclass(frozen=True)
class FailWitness:
    kind: WitnessKind
    cls: ExtClass
    degree: int


@dataclass(frozen=True)
class FgEvidence:
    """Finite generation of ``Ext^{t*}(_{psi*} M, A/rad)`` over the generators, on a window.

    Degrees are cohomological degrees; ``dims[n]`` is the dimension in degree ``t n``.
    """

    module: Module
    psi: AlgebraMorphism
    t: int
    generator_degrees: list[int]
    window: int
    dims: list[int]
    uncovered: list[int]
    generated_up_to: int
    action_injective_from: int | None
    verdict: FgVerdict
    witness: FailWitness | None = None


def simple_top(module: Module) -> Module:
    return top(regular_module(module.algebra)).module


def fg_check(
    module: Module, generators: Sequence[ExtClass], ring: TwistedRing, window: int = 10
) -> FgEvidence:
    """Evidence, never proof, that the twisted Ext module to the simple top is finitely
    generated over the subalgebra spanned by ``generators``."""
    t = ring.t
    top_index = window // t
    with tracer.start_as_current_span(
        "varieties.fg_check",
        attributes={"module.name": module.name, "t": t, "window": window},
    ):
        ext = ExtModule(ring, module, simple_top(module))
        dims = [ext.space(n).dim for n in range(top_index + 1)]
        indices = [ring.index_of(g) for g in generators]
        positive = [(g, m) for g, m in zip(generators, indices, strict=True) if m > 0]

        actions: dict[tuple[int, int], np.ndarray] = {}
        for k, (g, m) in enumerate(positive):
            for n in range(top_index - m + 1):
                actions[k, n] = ext.right_action_matrix(g, n)

        uncovered = list(dims)
        for n in range(1, top_index + 1):
            images = [
                actions[k, n - m] for k, (_, m) in enumerate(positive) if n - m >= 0
            ]
            if images and dims[n]:
                uncovered[n] = dims[n] - rank_of(module.field, np.hstack(images))
        generated_up_to = max((n for n in range(1, top_index + 1) if uncovered[n]), default=0)
        injective_from = _injective_from(module.field, positive, actions, dims, top_index)
        period = max((m for _, m in positive), default=0)

        witness = None
        if not any(dims[1:]):
            verdict = FgVerdict.PASS_EVIDENCE
        elif positive and generated_up_to + period <= top_index and injective_from is not None:
            verdict = FgVerdict.PASS_EVIDENCE
        else:
            witness = _find_witness(ext, positive, actions, dims, uncovered, top_index, t)
            verdict = FgVerdict.INCONCLUSIVE if witness is None else FgVerdict.FAIL_WITNESS

        evidence = FgEvidence(
            module,
            ring.psi,
            t,
            [t * m for m in indices],
            window,
            dims,
            uncovered,
            t * generated_up_to,
            None if injective_from is None else t * injective_from,
            verdict,
            witness,
        )
        emit(
            Event(
                EventType.FG_VERDICT,
                {"module": module.name, "verdict": verdict.value, "window": window},
            )
        )
        return evidence


def _injective_from(
    f: Field,
    positive: list[tuple[ExtClass, int]],
    actions: dict[tuple[int, int], np.ndarray],
    dims: list[int],
    top_index: int,
) -> int | None:
    best: int | None = None
    for k, (_, m) in enumerate(positive):
        last = top_index - m
        if last < 0:
            continue
        start = last + 1
        for n in range(last, -1, -1):
            matrix = actions[k, n]
            if matrix.shape[1] and rank_of(f, matrix) < dims[n]:
                break
            start = n
        if start <= last and (best is None or start < best):
            best = start
    return best


def _find_witness(
    ext: ExtModule,
    positive: list[tuple[ExtClass, int]],
    actions: dict[tuple[int, int], np.ndarray],
    dims: list[int],
    uncovered: list[int],
    top_index: int,
    t: int,
) -> FailWitness | None:
    f = ext.source.field
    for n in range(top_index + 1):
        if not dims[n]:
            continue
        applicable = [(k, m) for k, (_, m) in enumerate(positive) if n + m <= top_index]
        if not applicable or not any(uncovered[n + m] for _, m in applicable):
            continue
        stacked = np.vstack([actions[k, n] for k, _ in applicable])
        kernel = null_space(f, stacked)
        if kernel.shape[1]:
            cls = ext.space(n).from_coords(list(kernel[:, 0]))
            m = min(m for _, m in applicable)
            return FailWitness(WitnessKind.ANNIHILATED, cls, t * (n + m))
    if uncovered[top_index] and dims[top_index] >= max(dims[1:top_index] or [0]):
        space = ext.space(top_index)
        images = [
            actions[k, top_index - m] for k, (_, m) in enumerate(positive) if top_index >= m
        ]
        basis = space.basis()
        if not images:
            return FailWitness(WitnessKind.GROWTH, basis[0], t * top_index)
        solver = LinearSolver(f, np.hstack(images))
        for cls in basis:
            if not solver.solvable(cls.coords):
                return FailWitness(WitnessKind.GROWTH, cls, t * top_index)
    return None


@dataclass(frozen=True)
class VarietyReport:
    module: Module
    psi: AlgebraMorphism
    t: int
    dim: int | None
    trivial: bool
    growth: GrowthEstimate
    fg: FgEvidence | None
    caveats: list[str] = field(default_factory=list)


def variety_report(
    module: Module,
    ring: TwistedRing,
    generators: Sequence[ExtClass] = (),
    window: int | None = None,
    fg_window: int = 10,
) -> VarietyReport:
    """Dimension of the twisted support variety as the t-complexity of the module."""
    window = settings.complexity_window if window is None else window
    t = ring.t
    with tracer.start_as_current_span(
        "varieties.variety_report",
        attributes={"module.name": module.name, "t": t, "window": window},
    ):
        growth = complexity(module, t, window)
        caveats: list[str] = []
        dim = growth.gamma
        if growth.verdict is GrowthVerdict.INCONCLUSIVE:
            caveats.append(f"growth of dim P_{t}n is inconclusive on {window} terms")
        fg = fg_check(module, generators, ring, fg_window) if generators else None
        if fg is None:
            caveats.append("no generators given; finite generation not examined")
        elif fg.verdict is not FgVerdict.PASS_EVIDENCE:
            caveats.append(f"fg={fg.verdict.value}; dimension is the complexity only")
        report = VarietyReport(module, ring.psi, t, dim, dim == 0, growth, fg, caveats)
        logger.info(
            "variety_reported",
            module=module.name,
            dim=dim,
            trivial=report.trivial,
            caveats=len(caveats),
        )
        return report


@dataclass(frozen=True)
class PeriodicityCertificate:
    """``Omega^{tj}(M) ~ Omega^{t(j+w)}(_{psi^w} M)`` through ``intertwiner``."""

    module: Module
    psi: AlgebraMorphism
    t: int
    shift: int
    period: int
    intertwiner: ModuleMap

    def verify(self) -> bool:
        return self.intertwiner.is_invertible() and self.intertwiner.is_intertwiner()


@dataclass(frozen=True)
class NotFoundUpTo:
    max_shift: int
    max_period: int
    note: str = ""
    inconclusive: list[tuple[int, int]] = field(default_factory=list)


PeriodicityVerdict = PeriodicityCertificate | NotFoundUpTo


def periodicity(
    module: Module,
    psi: AlgebraMorphism,
    t: int,
    max_shift: int,
    max_period: int,
    seed: int | None = None,
) -> PeriodicityVerdict:
    """Search ``(j, w)`` with j outer and w inner, both ascending."""
    seed = settings.seed if seed is None else seed
    with tracer.start_as_current_span(
        "varieties.periodicity",
        attributes={"module.name": module.name, "t": t, "max_shift": max_shift, "seed": seed},
    ):
        if module.dim == 0:
            return NotFoundUpTo(max_shift, max_period, "zero module")
        res = minimal_resolution(module, t * (max_shift + max_period))
        inconclusive: list[tuple[int, int]] = []
        for j in range(max_shift + 1):
            source = res.syzygy(t * j)
            if source.dim == 0:
                return NotFoundUpTo(max_shift, max_period, "finite projective dimension")
            for w in range(1, max_period + 1):
                target = twist(res.syzygy(t * (j + w)), psi, w)
                verdict = is_isomorphic(source, target, seed=seed)
                if isinstance(verdict, IsomorphismFound):
                    certificate = PeriodicityCertificate(
                        module, psi, t, j, w, verdict.certificate
                    )
                    if not certificate.verify():
                        msg = f"Certificate for (j={j}, w={w}) fails re-verification"
                        raise VarietyError(msg)
                    emit(
                        Event(
                            EventType.PERIODICITY_CERTIFIED,
                            {"module": module.name, "shift": j, "period": w},
                        )
                    )
                    return certificate
                if isinstance(verdict, SearchExhausted):
                    inconclusive.append((j, w))
        return NotFoundUpTo(max_shift, max_period, "", inconclusive)


@dataclass(frozen=True)
class TauCertificate:
    """``M ~ Omega^{2p}(_{nu^p} M)``, i.e. M is fixed by the p-th AR translate."""

    module: Module
    nu: AlgebraMorphism
    p: int
    intertwiner: ModuleMap


def tau_periodicity(
    module: Module, form: FrobeniusForm, max_power: int, seed: int | None = None
) -> TauCertificate | NotFoundUpTo:
    """The module is assumed to have no nonzero projective summand."""
    try:
        nu = nakayama(form)
    except DegenerateFormError as e:
        msg = f"{form.algebra.name} is not Frobenius for the given form"
        raise NotFrobeniusError(msg) from e
    if module.dim == 0:
        empty = ModuleMap(module, module, zeros((0, 0)))
        return TauCertificate(module, nu, 1, empty)
    verdict = periodicity(module, nu, 2, 0, max_power, seed)
    if isinstance(verdict, PeriodicityCertificate):
        return TauCertificate(module, nu, verdict.period, verdict.intertwiner)
    return verdict


def reduce_dimension(module: Module, eta: ExtClass, ring: TwistedRing) -> Module:
    """``Omega^1(K_eta) (x)_A M``; its variety has one dimension less than M's."""
    with tracer.start_as_current_span(
        "varieties.reduce_dimension", attributes={"module.name": module.name}
    ):
        extension = k_eta(eta, ring)
        omega = minimal_resolution(extension.k_eta, 1).syzygy(1)
        reduced = tensor_over_algebra(omega, module).module
        logger.info(
            "dimension_reduced",
            module=module.name,
            k_eta_dim=extension.k_eta.dim,
            result_dim=reduced.dim,
        )
        return Module(module.algebra, reduced.stack, f"R({module.name})")


class VarietyError(Exception):
    pass


class NotFrobeniusError(VarietyError):
    pass
