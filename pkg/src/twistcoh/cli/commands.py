"""Subcommands: each takes parsed arguments and a workspace and returns one report."""

from __future__ import annotations

import argparse
from pathlib import Path
from typing import TYPE_CHECKING, Any, NoReturn

import structlog

from twistcoh.cli.parser import ParseError, Workspace, emit, parse
from twistcoh.config import settings
from twistcoh.core.field import ScalarFormatError, field_from_name
from twistcoh.core.linalg import LinearAlgebraError
from twistcoh.schemas.algebra import BuiltinReport, NakayamaReport
from twistcoh.schemas.cohomology import (
    ExtReport,
    HochschildReport,
    ProductEntry,
    StrongCheckReport,
)
from twistcoh.schemas.common import ErrorDetail, ErrorReport, Report
from twistcoh.schemas.resolution import GrowthReport, ResolveReport
from twistcoh.schemas.variety import (
    FgReport,
    PeriodicityReport,
    ReduceReport,
    VarietyDimReport,
    WitnessReport,
)
from twistcoh.services.algebra import (
    AlgebraError,
    center,
    identity_morphism,
    nakayama,
    validate_form,
)
from twistcoh.services.ext import ExtError, TwistedRing, check_associativity, ring_sample
from twistcoh.services.hochschild import (
    HochschildError,
    HochschildMethod,
    SizeCapError,
    bar_criterion_check,
    default_generators,
    hh_ring,
    k_eta,
    strong_comm_check,
    tensor_sequence,
)
from twistcoh.services.modules import ModuleError, regular_module
from twistcoh.services.qexterior import (
    QExteriorError,
    QExteriorParams,
    build,
    build_module,
    lookup,
    simple_module,
    skewed_automorphism,
)
from twistcoh.services.resolution import ResolutionError, complexity, minimal_resolution
from twistcoh.services.varieties import (
    NotFoundUpTo,
    VarietyError,
    fg_check,
    periodicity,
    reduce_dimension,
    simple_top,
    variety_report,
)

if TYPE_CHECKING:
    from collections.abc import Callable, Sequence

    from twistcoh.services.algebra import Algebra, AlgebraMorphism
    from twistcoh.services.ext import ExtClass
    from twistcoh.services.resolution import GrowthEstimate
    from twistcoh.services.varieties import FgEvidence

logger = structlog.get_logger()

EXIT_OK = 0
EXIT_ERROR = 2
EXIT_USAGE = 64

DOMAIN_ERRORS = (
    AlgebraError,
    ModuleError,
    ResolutionError,
    ExtError,
    HochschildError,
    VarietyError,
    QExteriorError,
    LinearAlgebraError,
    ScalarFormatError,
    ParseError,
)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> NoReturn:
        raise UsageError(message)


def builtin_workspace(q: str, field_name: str = "Q") -> Workspace:
    """The quantum exterior algebra with its standard modules and automorphisms."""
    built = build(QExteriorParams.create(q, field_from_name(field_name)))
    ws = Workspace()
    ws.algebras[built.algebra.name] = built.algebra
    ws.morphisms["nu"] = built.nu
    ws.morphisms["sigma"] = skewed_automorphism(built)
    ws.modules["M"] = build_module(built, 1, 1)
    ws.modules["M10"] = build_module(built, 1, 0)
    ws.modules["M01"] = build_module(built, 0, 1)
    ws.modules["k"] = simple_module(built)
    ws.modules["L"] = regular_module(built.algebra)
    for name in (*ws.morphisms, *ws.modules):
        ws.sources[name] = "builtin"
    return ws


def load_workspace(args: argparse.Namespace) -> Workspace:
    if args.file:
        return parse(args.file)
    return builtin_workspace(args.q, args.field)


def _twist(ws: Workspace, name: str, algebra: Algebra) -> AlgebraMorphism:
    if name == "id":
        return identity_morphism(algebra)
    return ws.morphism(name)


def _method(args: argparse.Namespace, algebra: Algebra) -> HochschildMethod:
    if args.method == "auto":
        return HochschildMethod.BUILTIN if lookup(algebra) else HochschildMethod.MINIMAL
    return HochschildMethod(args.method)


def _coords(algebra: Algebra, values: Sequence[Any]) -> list[str]:
    return [algebra.field.format(v) for v in values]


def _growth(estimate: GrowthEstimate) -> GrowthReport:
    return GrowthReport.model_validate(estimate)


def _hh(args: argparse.Namespace, ws: Workspace, algebra: Algebra) -> TwistedRing:
    psi = _twist(ws, args.twist, algebra)
    return hh_ring(algebra, psi, args.t, _method(args, algebra))


def _generators(ring: TwistedRing, max_index: int) -> list[Any]:
    sample = ring_sample(ring, max_index, with_products=False)
    return [g for g in default_generators(sample) if g.degree > 0]


def _basis_class(ring: TwistedRing, index: int, position: int) -> ExtClass:
    basis = ring.space(index).basis()
    if position >= len(basis):
        msg = f"Index {index} has {len(basis)} basis classes, asked for #{position}"
        raise HochschildError(msg)
    return basis[position]


def cmd_resolve(args: argparse.Namespace, ws: Workspace) -> Report:
    module = ws.module(args.module)
    res = minimal_resolution(module, args.steps)
    ranks = [res.rank(n) for n in range(args.steps + 1)]
    lengths = [res.length(n) for n in range(args.steps + 1)]
    differentials = [
        [_coords(module.algebra, row) for row in res.ambient_differential(n)]
        for n in range(1, args.steps + 1)
    ]
    growth = _growth(complexity(module, args.t, args.window)) if args.window else None
    return ResolveReport(
        command="resolve",
        module=module.name,
        algebra=module.algebra.name,
        steps=args.steps,
        ranks=ranks,
        lengths=lengths,
        differentials=differentials,
        projective_dimension=res.projective_dimension,
        growth=growth,
    )


def cmd_ext(args: argparse.Namespace, ws: Workspace) -> Report:
    source = ws.module(args.module)
    target = ws.module(args.target) if args.target else simple_top(source)
    psi = _twist(ws, args.twist, source.algebra)
    res = minimal_resolution(source, args.t * args.max_degree + 1)
    ring = TwistedRing(res, psi, args.t, target)
    dims = [ring.space(n).dim for n in range(args.max_degree + 1)]
    return ExtReport(
        command="ext",
        source=source.name,
        target=target.name,
        twist=args.twist,
        t=args.t,
        degrees=[args.t * n for n in range(args.max_degree + 1)],
        dims=dims,
    )


def cmd_hochschild(args: argparse.Namespace, ws: Workspace) -> Report:
    algebra = ws.algebra(args.algebra)
    ring = _hh(args, ws, algebra)
    sample = ring_sample(ring, args.max_degree, with_products=args.products)
    products = [
        ProductEntry(left=(m, i), right=(n, j), coords=_coords(algebra, coords))
        for (m, i, n, j), coords in sorted(sample.table.items())
    ]
    associative = not check_associativity(sample) if args.products else None
    return HochschildReport(
        command="hochschild",
        algebra=algebra.name,
        twist=args.twist,
        t=args.t,
        method=_method(args, algebra).value,
        degrees=[args.t * n for n in range(args.max_degree + 1)],
        dims=sample.dims,
        products=products,
        associative=associative,
    )


def cmd_strong_check(args: argparse.Namespace, ws: Workspace) -> Report:
    algebra = ws.algebra(args.algebra)
    ring = _hh(args, ws, algebra)
    eta = _basis_class(ring, args.index, args.basis)
    strong = strong_comm_check(eta, args.n, ring)
    bar_verdict: bool | None = None
    skipped = None
    if args.bar:
        try:
            bar_verdict = bar_criterion_check(eta, args.n, ring)
        except SizeCapError as e:
            skipped = str(e)
    return StrongCheckReport(
        command="strong-check",
        algebra=algebra.name,
        twist=args.twist,
        t=args.t,
        degree=eta.degree,
        n=args.n,
        strong=strong,
        bar_criterion=bar_verdict,
        bar_skipped=skipped,
    )


def _fg_report(evidence: FgEvidence, twist: str) -> FgReport:
    witness = None
    if evidence.witness is not None:
        w = evidence.witness
        witness = WitnessReport(
            kind=w.kind.value,
            degree=w.degree,
            coords=_coords(evidence.module.algebra, w.cls.coords),
        )
    return FgReport(
        command="fg-check",
        module=evidence.module.name,
        twist=twist,
        t=evidence.t,
        window=evidence.window,
        generator_degrees=evidence.generator_degrees,
        dims=evidence.dims,
        uncovered=evidence.uncovered,
        generated_up_to=evidence.generated_up_to,
        action_injective_from=evidence.action_injective_from,
        verdict=evidence.verdict.value,
        witness=witness,
    )


def cmd_fg_check(args: argparse.Namespace, ws: Workspace) -> Report:
    module = ws.module(args.module)
    ring = _hh(args, ws, module.algebra)
    generators = _generators(ring, args.window // args.t)
    return _fg_report(fg_check(module, generators, ring, args.window), args.twist)


def cmd_variety_dim(args: argparse.Namespace, ws: Workspace) -> Report:
    module = ws.module(args.module)
    ring = _hh(args, ws, module.algebra)
    generators = _generators(ring, args.fg_window // args.t)
    report = variety_report(module, ring, generators, args.window, args.fg_window)
    return VarietyDimReport(
        command="variety-dim",
        module=module.name,
        twist=args.twist,
        t=args.t,
        dim=report.dim,
        trivial=report.trivial,
        growth=_growth(report.growth),
        fg_verdict=report.fg.verdict.value if report.fg else None,
        caveats=report.caveats,
    )


def cmd_periodicity(args: argparse.Namespace, ws: Workspace) -> Report:
    module = ws.module(args.module)
    psi = _twist(ws, args.twist, module.algebra)
    verdict = periodicity(module, psi, args.t, args.max_shift, args.max_period, args.seed)
    if isinstance(verdict, NotFoundUpTo):
        return PeriodicityReport(
            command="periodicity",
            module=module.name,
            twist=args.twist,
            t=args.t,
            found=False,
            note=verdict.note,
            inconclusive=verdict.inconclusive,
        )
    matrix = [_coords(module.algebra, row) for row in verdict.intertwiner.matrix]
    return PeriodicityReport(
        command="periodicity",
        module=module.name,
        twist=args.twist,
        t=args.t,
        found=True,
        shift=verdict.shift,
        period=verdict.period,
        intertwiner=matrix,
    )


def cmd_nakayama(args: argparse.Namespace, ws: Workspace) -> Report:
    algebra = ws.algebra(args.algebra)
    if args.form:
        form = validate_form(algebra, [algebra.field.parse(c) for c in args.form])
    else:
        built = lookup(algebra)
        if built is None:
            msg = f"{algebra.name} has no built-in form; pass --form"
            raise AlgebraError(msg)
        form = built.form
    nu = nakayama(form)
    return NakayamaReport(
        command="nakayama",
        algebra=algebra.name,
        form=_coords(algebra, form.functional),
        matrix=[_coords(algebra, row) for row in nu.matrix],
        center_dim=len(center(algebra)),
    )


def cmd_reduce(args: argparse.Namespace, ws: Workspace) -> Report:
    module = ws.module(args.module)
    ring = _hh(args, ws, module.algebra)
    eta = _basis_class(ring, args.index, args.basis)
    extension = k_eta(eta, ring)
    sequence = tensor_sequence(extension, module)
    reduced = reduce_dimension(module, eta, ring)
    return ReduceReport(
        command="reduce",
        module=module.name,
        degree=eta.degree,
        k_eta_dim=extension.k_eta.dim,
        sequence_exact=extension.certificate.exact,
        tensor_sequence_exact=sequence.certificate.exact,
        result_dim=reduced.dim,
        growth=_growth(complexity(reduced, args.t, args.window)),
    )


def cmd_builtin(args: argparse.Namespace, ws: Workspace) -> Report:
    built = lookup(ws.algebra())
    if built is None:
        msg = "Workspace algebra is not the quantum exterior algebra"
        raise QExteriorError(msg)
    modules = [ws.modules[name] for name in ("M", "M10", "M01") if name in ws.modules]
    text = emit(built, modules, ["M", "M10", "M01"])
    files = {"lambda_q.txt": text}
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        for name, content in files.items():
            (out / name).write_text(content, encoding="utf-8")
    return BuiltinReport(
        command="builtin",
        q=built.params.field.format(built.q),
        field=built.params.field.name,
        files=files,
    )


COMMANDS: dict[str, Callable[[argparse.Namespace, Workspace], Report]] = {
    "resolve": cmd_resolve,
    "ext": cmd_ext,
    "hochschild": cmd_hochschild,
    "strong-check": cmd_strong_check,
    "variety-dim": cmd_variety_dim,
    "periodicity": cmd_periodicity,
    "fg-check": cmd_fg_check,
    "nakayama": cmd_nakayama,
    "reduce": cmd_reduce,
    "builtin": cmd_builtin,
}


def _positive(text: str) -> int:
    value = int(text)
    if value < 1:
        msg = f"expected a positive integer, got {text}"
        raise argparse.ArgumentTypeError(msg)
    return value


def _natural(text: str) -> int:
    value = int(text)
    if value < 0:
        msg = f"expected a nonnegative integer, got {text}"
        raise argparse.ArgumentTypeError(msg)
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="twistcoh", description="Twisted Ext and Hochschild cohomology")
    parser.add_argument("-f", "--file", action="append", default=[], help="workspace file")
    parser.add_argument("--q", default=settings.default_q, help="parameter of the built-in")
    parser.add_argument("--field", default="Q", help="field of the built-in; only Q is accepted")
    parser.add_argument("--seed", type=int, default=settings.seed)
    parser.add_argument("--json", dest="json_path", help="also write the report here")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def twisted(p: argparse.ArgumentParser) -> None:
        p.add_argument("--twist", default="id")
        p.add_argument("--t", type=_positive, default=1)

    def hochschild(p: argparse.ArgumentParser) -> None:
        twisted(p)
        p.add_argument("--algebra")
        p.add_argument("--method", choices=["auto", "minimal", "bar", "builtin"], default="auto")

    p = sub.add_parser("resolve")
    p.add_argument("module")
    p.add_argument("--steps", type=_natural, default=6)
    p.add_argument("--t", type=_positive, default=1)
    p.add_argument("--window", type=_natural, default=0)

    p = sub.add_parser("ext")
    p.add_argument("module")
    p.add_argument("--target")
    twisted(p)
    p.add_argument("--max-degree", type=_natural, default=4)

    p = sub.add_parser("hochschild")
    hochschild(p)
    p.add_argument("--max-degree", type=_natural, default=4)
    p.add_argument("--products", action="store_true")

    p = sub.add_parser("strong-check")
    hochschild(p)
    p.add_argument("--index", type=_natural, required=True)
    p.add_argument("--basis", type=_natural, default=0)
    p.add_argument("--n", type=_natural, default=1)
    p.add_argument("--bar", action="store_true")

    p = sub.add_parser("variety-dim")
    p.add_argument("module")
    hochschild(p)
    p.add_argument("--window", type=_positive, default=settings.complexity_window)
    p.add_argument("--fg-window", type=_positive, default=10)

    p = sub.add_parser("periodicity")
    p.add_argument("module")
    twisted(p)
    p.add_argument("--max-shift", type=_natural, default=4)
    p.add_argument("--max-period", type=_positive, default=4)

    p = sub.add_parser("fg-check")
    p.add_argument("module")
    hochschild(p)
    p.add_argument("--window", type=_positive, default=10)

    p = sub.add_parser("nakayama")
    p.add_argument("--algebra")
    p.add_argument("--form", nargs="+")

    p = sub.add_parser("reduce")
    p.add_argument("module")
    hochschild(p)
    p.add_argument("--index", type=_positive, required=True)
    p.add_argument("--basis", type=_natural, default=0)
    p.add_argument("--window", type=_positive, default=6)

    p = sub.add_parser("builtin")
    p.add_argument("--out")
    return parser


def _failure(command: str, error: Exception) -> ErrorReport:
    logger.warning("command_failed", command=command, error=type(error).__name__)
    detail = ErrorDetail(type=type(error).__name__, message=str(error))
    return ErrorReport(command=command, error=detail)


def run(argv: Sequence[str] | None = None) -> tuple[Report | None, int, str]:
    """Parse arguments and dispatch; returns the report, exit code and a usage message."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as e:
        return None, EXIT_USAGE, f"{parser.format_usage()}twistcoh: error: {e}"
    command = args.command
    try:
        ws = load_workspace(args)
        report = COMMANDS[command](args, ws)
    except (*DOMAIN_ERRORS, OSError) as e:
        return _failure(command, e), EXIT_ERROR, ""
    if args.json_path:
        try:
            Path(args.json_path).write_text(report.model_dump_json(indent=2), encoding="utf-8")
        except OSError as e:
            return _failure(command, e), EXIT_ERROR, ""
    logger.info("command_completed", command=command)
    return report, EXIT_OK, ""

