"""Line-oriented text format for algebras, automorphisms and modules.

    algebra <name>
    field Q | F<p>
    dim <d>
    basis <labels>
    unit <d coeffs>
    mul <i> <j> : <d coeffs>
    radical <indices>
    idempotent <d coeffs>
    end

    automorphism <name> on <algebra>
    row <d coeffs>            (d rows; column j is the image of basis_j)
    end

    module <name> over <algebra>
    dim <m>
    action <i> :
    <m rows of m coeffs>
    end

``#`` starts a comment. Coefficients are ``a`` or ``a/b``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import TYPE_CHECKING, Any

import structlog

from twistcoh.core.field import field_from_name
from twistcoh.core.linalg import LinearAlgebraError, zeros
from twistcoh.services.algebra import AlgebraError, validate_algebra, validate_morphism
from twistcoh.services.modules import Module, ModuleError, validate_module

if TYPE_CHECKING:
    from collections.abc import Iterable, Sequence

    from twistcoh.core.field import Field
    from twistcoh.services.algebra import Algebra, AlgebraMorphism
    from twistcoh.services.qexterior import QExterior

logger = structlog.get_logger()

MAX_DIM = 256


@dataclass
class Workspace:
    algebras: dict[str, Algebra] = field(default_factory=dict)
    morphisms: dict[str, AlgebraMorphism] = field(default_factory=dict)
    modules: dict[str, Module] = field(default_factory=dict)
    sources: dict[str, str] = field(default_factory=dict)

    def algebra(self, name: str | None = None) -> Algebra:
        if name is None:
            if len(self.algebras) != 1:
                msg = f"Expected exactly one algebra, found {len(self.algebras)}"
                raise DanglingReferenceError(msg)
            return next(iter(self.algebras.values()))
        if name not in self.algebras:
            msg = f"Unknown algebra {name!r}"
            raise DanglingReferenceError(msg)
        return self.algebras[name]

    def morphism(self, name: str) -> AlgebraMorphism:
        if name not in self.morphisms:
            msg = f"Unknown automorphism {name!r}"
            raise DanglingReferenceError(msg)
        return self.morphisms[name]

    def module(self, name: str) -> Module:
        if name not in self.modules:
            msg = f"Unknown module {name!r}"
            raise DanglingReferenceError(msg)
        return self.modules[name]


@dataclass(frozen=True)
class _Token:
    text: str
    col: int


@dataclass(frozen=True)
class _Line:
    number: int
    tokens: list[_Token]

    @property
    def keyword(self) -> str:
        return self.tokens[0].text


def _tokenize(text: str) -> list[_Line]:
    lines = []
    for number, raw in enumerate(text.splitlines(), start=1):
        content = raw.split("#", 1)[0]
        tokens = []
        col = 0
        while col < len(content):
            if content[col].isspace():
                col += 1
                continue
            start = col
            while col < len(content) and not content[col].isspace():
                col += 1
            tokens.append(_Token(content[start:col], start + 1))
        if tokens:
            lines.append(_Line(number, tokens))
    return lines


class _Reader:
    def __init__(self, lines: list[_Line], source: str) -> None:
        self.lines = lines
        self.source = source
        self.pos = 0

    def at_end(self) -> bool:
        return self.pos >= len(self.lines)

    def next(self, context: str) -> _Line:
        if self.at_end():
            last = self.lines[-1].number if self.lines else 0
            msg = f"Unexpected end of input in {context}"
            raise FormatSyntaxError(msg, last + 1, 1, self.source)
        line = self.lines[self.pos]
        self.pos += 1
        return line

    def fail(self, message: str, line: _Line, index: int = 0) -> FormatSyntaxError:
        col = line.tokens[index].col if index < len(line.tokens) else line.tokens[-1].col
        return FormatSyntaxError(message, line.number, col, self.source)


def _integer(reader: _Reader, line: _Line, index: int, lower: int, upper: int) -> int:
    if index >= len(line.tokens):
        raise reader.fail("Missing integer", line, len(line.tokens) - 1)
    text = line.tokens[index].text
    if not (text.isascii() and text.isdigit()) or len(text) > 9 or not lower <= int(text) <= upper:
        raise reader.fail(f"Expected an integer in [{lower}, {upper}], got {text!r}", line, index)
    return int(text)


def _scalars(
    reader: _Reader, line: _Line, start: int, count: int, ground: Field
) -> list[Any]:
    tokens = line.tokens[start:]
    if len(tokens) != count:
        raise reader.fail(f"Expected {count} coefficients, got {len(tokens)}", line, start)
    values = []
    for offset, token in enumerate(tokens):
        try:
            values.append(ground.parse(token.text))
        except ValueError as e:
            raise reader.fail(str(e), line, start + offset) from e
    return values


def _expect(reader: _Reader, line: _Line, keyword: str, length: int | None = None) -> None:
    if line.keyword != keyword:
        raise reader.fail(f"Expected {keyword!r}, got {line.keyword!r}", line)
    if length is not None and len(line.tokens) != length:
        raise reader.fail(f"{keyword!r} takes {length - 1} argument(s)", line)


def _colon(reader: _Reader, line: _Line, index: int) -> None:
    if index >= len(line.tokens) or line.tokens[index].text != ":":
        raise reader.fail("Expected ':'", line, min(index, len(line.tokens) - 1))


def _parse_algebra(reader: _Reader, header: _Line, workspace: Workspace) -> None:
    _expect(reader, header, "algebra", 2)
    name = header.tokens[1].text
    if name in workspace.algebras:
        raise reader.fail(f"Duplicate algebra {name!r}", header, 1)
    line = reader.next("algebra")
    _expect(reader, line, "field", 2)
    try:
        ground = field_from_name(line.tokens[1].text)
    except ValueError as e:
        raise reader.fail(str(e), line, 1) from e
    line = reader.next("algebra")
    _expect(reader, line, "dim", 2)
    d = _integer(reader, line, 1, 1, MAX_DIM)
    line = reader.next("algebra")
    _expect(reader, line, "basis")
    labels = [t.text for t in line.tokens[1:]]
    if len(labels) != d:
        raise reader.fail(f"Expected {d} basis labels, got {len(labels)}", line)
    line = reader.next("algebra")
    _expect(reader, line, "unit")
    unit = _scalars(reader, line, 1, d, ground)
    structure = zeros((d, d, d))
    radical: list[int] | None = None
    idempotents: list[list[Any]] = []
    products: set[tuple[int, int]] = set()
    while True:
        line = reader.next("algebra")
        if line.keyword == "end":
            break
        if line.keyword == "mul":
            i = _integer(reader, line, 1, 0, d - 1)
            j = _integer(reader, line, 2, 0, d - 1)
            _colon(reader, line, 3)
            if (i, j) in products:
                reason = f"duplicate product entry mul {i} {j}"
                raise FormatValidationError(name, reason, line.number, line.tokens[0].col)
            products.add((i, j))
            structure[i, j] = _scalars(reader, line, 4, d, ground)
        elif line.keyword == "radical":
            radical = [_integer(reader, line, k, 0, d - 1) for k in range(1, len(line.tokens))]
        elif line.keyword == "idempotent":
            idempotents.append(_scalars(reader, line, 1, d, ground))
        else:
            raise reader.fail(f"Unknown algebra entry {line.keyword!r}", line)
    rad = None
    if radical is not None:
        rad = zeros((d, len(radical)))
        for col, index in enumerate(radical):
            rad[index, col] = 1
    try:
        algebra = validate_algebra(name, ground, labels, structure, unit, rad, idempotents)
    except (AlgebraError, LinearAlgebraError) as e:
        raise FormatValidationError(name, str(e)) from e
    workspace.algebras[name] = algebra
    workspace.sources[name] = reader.source


def _parse_automorphism(reader: _Reader, header: _Line, workspace: Workspace) -> None:
    _expect(reader, header, "automorphism", 4)
    if header.tokens[2].text != "on":
        raise reader.fail("Expected 'on'", header, 2)
    name = header.tokens[1].text
    if name in workspace.morphisms:
        raise reader.fail(f"Duplicate automorphism {name!r}", header, 1)
    algebra = workspace.algebras.get(header.tokens[3].text)
    if algebra is None:
        msg = f"Automorphism {name!r} references unknown algebra {header.tokens[3].text!r}"
        raise DanglingReferenceError(msg)
    rows = []
    for _ in range(algebra.dim):
        line = reader.next("automorphism")
        _expect(reader, line, "row")
        rows.append(_scalars(reader, line, 1, algebra.dim, algebra.field))
    _expect(reader, reader.next("automorphism"), "end", 1)
    try:
        morphism = validate_morphism(algebra, algebra, rows, name)
    except (AlgebraError, LinearAlgebraError) as e:
        raise FormatValidationError(name, str(e)) from e
    if not morphism.is_automorphism:
        raise FormatValidationError(name, "map is not invertible")
    workspace.morphisms[name] = morphism
    workspace.sources[name] = reader.source


def _parse_module(reader: _Reader, header: _Line, workspace: Workspace) -> None:
    _expect(reader, header, "module", 4)
    if header.tokens[2].text != "over":
        raise reader.fail("Expected 'over'", header, 2)
    name = header.tokens[1].text
    if name in workspace.modules:
        raise reader.fail(f"Duplicate module {name!r}", header, 1)
    algebra = workspace.algebras.get(header.tokens[3].text)
    if algebra is None:
        msg = f"Module {name!r} references unknown algebra {header.tokens[3].text!r}"
        raise DanglingReferenceError(msg)
    line = reader.next("module")
    _expect(reader, line, "dim", 2)
    m = _integer(reader, line, 1, 0, MAX_DIM)
    stack = zeros((algebra.dim, m, m))
    seen: set[int] = set()
    while True:
        line = reader.next("module")
        if line.keyword == "end":
            break
        _expect(reader, line, "action", 3)
        i = _integer(reader, line, 1, 0, algebra.dim - 1)
        _colon(reader, line, 2)
        if i in seen:
            raise reader.fail(f"Duplicate action for basis element {i}", line, 1)
        seen.add(i)
        for r in range(m):
            row = reader.next("module action")
            stack[i, r] = _scalars(reader, row, 0, m, algebra.field)
    if len(seen) != algebra.dim:
        missing = sorted(set(range(algebra.dim)) - seen)
        raise FormatValidationError(name, f"missing actions for basis elements {missing}")
    try:
        module = validate_module(algebra, stack, name)
    except (ModuleError, AlgebraError, LinearAlgebraError) as e:
        raise FormatValidationError(name, str(e)) from e
    workspace.modules[name] = module
    workspace.sources[name] = reader.source


_SECTIONS = {
    "algebra": _parse_algebra,
    "automorphism": _parse_automorphism,
    "module": _parse_module,
}


def parse_text(text: str, source: str = "<text>", workspace: Workspace | None = None) -> Workspace:
    """Parse one document into ``workspace``; every failure is a positioned ``ParseError``."""
    workspace = workspace or Workspace()
    reader = _Reader(_tokenize(text), source)
    while not reader.at_end():
        header = reader.next("document")
        handler = _SECTIONS.get(header.keyword)
        if handler is None:
            raise reader.fail(f"Unknown section {header.keyword!r}", header)
        handler(reader, header, workspace)
    logger.debug(
        "workspace_parsed",
        source=source,
        algebras=len(workspace.algebras),
        morphisms=len(workspace.morphisms),
        modules=len(workspace.modules),
    )
    return workspace


def parse(files: Iterable[Path | str]) -> Workspace:
    workspace = Workspace()
    for path in files:
        p = Path(path)
        try:
            text = p.read_text(encoding="utf-8")
        except (OSError, UnicodeDecodeError) as e:
            msg = f"Cannot read {p}: {e}"
            raise FormatSyntaxError(msg, 0, 0, str(p)) from e
        parse_text(text, str(p), workspace)
    return workspace


def _row(algebra_field: Field, values: Iterable[Any]) -> str:
    return " ".join(algebra_field.format(v) for v in values)


def emit_algebra(algebra: Algebra) -> str:
    f = algebra.field
    d = algebra.dim
    lines = [
        f"algebra {algebra.name}",
        f"field {f.name}",
        f"dim {d}",
        "basis " + " ".join(algebra.basis_labels),
        f"unit {_row(f, algebra.unit)}",
    ]
    for i in range(d):
        for j in range(d):
            if any(v != 0 for v in algebra.structure[i, j]):
                lines.append(f"mul {i} {j} : {_row(f, algebra.structure[i, j])}")
    indices = _unit_columns(algebra)
    if indices is not None:
        lines.append("radical " + " ".join(str(i) for i in indices))
    lines.extend(f"idempotent {_row(f, e)}" for e in algebra.idempotents)
    lines.append("end")
    return "\n".join(lines) + "\n"


def _unit_columns(algebra: Algebra) -> list[int] | None:
    out = []
    for col in algebra.radical.T:
        support = [i for i, v in enumerate(col) if v != 0]
        if len(support) != 1 or col[support[0]] != 1:
            return None
        out.append(support[0])
    return out


def emit_morphism(morphism: AlgebraMorphism) -> str:
    f = morphism.source.field
    lines = [f"automorphism {morphism.name} on {morphism.source.name}"]
    lines.extend(f"row {_row(f, row)}" for row in morphism.matrix)
    lines.append("end")
    return "\n".join(lines) + "\n"


def emit_module(module: Module) -> str:
    f = module.field
    lines = [f"module {module.name} over {module.algebra.name}", f"dim {module.dim}"]
    for i, action in enumerate(module.stack):
        lines.append(f"action {i} :")
        lines.extend(_row(f, row) for row in action)
    lines.append("end")
    return "\n".join(lines) + "\n"


def emit(built: QExterior, modules: Sequence[Module] = (), names: Sequence[str] = ()) -> str:
    """The algebra, its Nakayama automorphism and ``modules`` in the text format."""
    chunks = [emit_algebra(built.algebra), emit_morphism(built.nu)]
    for k, module in enumerate(modules):
        name = names[k] if k < len(names) else f"M{k}"
        renamed = Module(module.algebra, module.stack, name)
        chunks.append(emit_module(renamed))
    return "\n".join(chunks)


class ParseError(Exception):
    pass


class FormatSyntaxError(ParseError):
    def __init__(self, message: str, line: int, col: int, source: str = "<text>") -> None:
        super().__init__(f"{source}:{line}:{col}: {message}")
        self.line = line
        self.col = col
        self.source = source


class FormatValidationError(ParseError):
    def __init__(
        self, entity: str, reason: str, line: int | None = None, col: int | None = None
    ) -> None:
        where = f" (line {line}, col {col})" if line is not None else ""
        super().__init__(f"{entity}: {reason}{where}")
        self.entity = entity
        self.reason = reason
        self.line = line
        self.col = col


class DanglingReferenceError(ParseError):
    pass
