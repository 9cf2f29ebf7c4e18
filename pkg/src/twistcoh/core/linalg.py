"""Exact dense linear algebra over a `Field`.

Two layers live here. The array layer (``row_reduce``, ``null_space``,
``LinearSolver``, ``QuotientBasis``) works on numpy object arrays and is what
the services call. The ``Matrix`` layer wraps an array together with its field
and exposes ``rref``, ``kernel_basis``, ``solve`` and ``invert``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import TYPE_CHECKING, Any

import numpy as np

if TYPE_CHECKING:
    from collections.abc import Iterable, Sequence

    from twistcoh.core.field import Field


def zeros(shape: int | tuple[int, ...]) -> np.ndarray:
    return np.zeros(shape, dtype=object)


def identity(n: int) -> np.ndarray:
    return np.identity(n, dtype=object)


def is_zero(values: np.ndarray) -> bool:
    return not bool(np.any(values != 0))


def dot(field: Field, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    if a.shape[-1] == 0:
        return zeros(a.shape[:-1] + b.shape[1:])
    return field.reduce(a @ b)


def kron(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    outer = np.multiply.outer(np.asarray(a, dtype=object), np.asarray(b, dtype=object))
    if a.ndim == 1:
        return outer.reshape(a.shape[0] * b.shape[0])
    m, n = a.shape
    p, q = b.shape
    return outer.transpose(0, 2, 1, 3).reshape(m * p, n * q)


def block_diag(blocks: Sequence[np.ndarray]) -> np.ndarray:
    rows = sum(b.shape[0] for b in blocks)
    cols = sum(b.shape[1] for b in blocks)
    out = zeros((rows, cols))
    r = c = 0
    for block in blocks:
        out[r : r + block.shape[0], c : c + block.shape[1]] = block
        r += block.shape[0]
        c += block.shape[1]
    return out


def hstack(columns: Iterable[np.ndarray], rows: int) -> np.ndarray:
    parts = [c.reshape(rows, -1) for c in columns]
    if not parts:
        return zeros((rows, 0))
    return np.hstack(parts)


def row_reduce(
    field: Field, matrix: np.ndarray, pivot_limit: int | None = None
) -> tuple[np.ndarray, list[int]]:
    """Reduced row echelon form; pivot is the first nonzero entry of each column.

    With ``pivot_limit`` only the first ``pivot_limit`` columns may carry pivots,
    the rest are eliminated along (augmented systems). Over Q the elimination is
    fraction-free and rows are normalized once at the end.
    """
    r = np.array(matrix, dtype=object, copy=True)
    if r.ndim != 2:
        msg = f"Expected a 2-d array, got shape {r.shape}"
        raise DimensionMismatchError(msg)
    limit = r.shape[1] if pivot_limit is None else min(pivot_limit, r.shape[1])
    if field.characteristic == 0:
        return _reduce_fraction_free(r, limit)
    return _reduce_modular(field, r, limit)


def _next_pivot(r: np.ndarray, row: int, col: int) -> int | None:
    candidates = np.flatnonzero(r[row:, col] != 0)
    if candidates.size == 0:
        return None
    p = row + int(candidates[0])
    if p != row:
        r[[row, p], :] = r[[p, row], :]
    return p


def _integer_rows(r: np.ndarray) -> np.ndarray:
    out = zeros(r.shape)
    for i in range(r.shape[0]):
        values = [Fraction(v) for v in r[i]]
        scale = math.lcm(*(v.denominator for v in values))
        out[i, :] = [int(v * scale) for v in values]
    return out


def _reduce_fraction_free(r: np.ndarray, limit: int) -> tuple[np.ndarray, list[int]]:
    rows = r.shape[0]
    r = _integer_rows(r)
    pivots: list[int] = []
    previous = 1
    row = 0
    for col in range(limit):
        if row == rows:
            break
        if _next_pivot(r, row, col) is None:
            continue
        lead = r[row, col]
        others = np.arange(rows) != row
        # entries stay integral minors, so the division is exact
        r[others, :] = (lead * r[others, :] - np.outer(r[others, col], r[row, :])) // previous
        previous = lead
        pivots.append(col)
        row += 1
    out = zeros(r.shape)
    for i in range(rows):
        scale = r[i, pivots[i]] if i < len(pivots) else 1
        out[i, :] = [Fraction(v, scale) for v in r[i]]
    return out, pivots


def _reduce_modular(field: Field, r: np.ndarray, limit: int) -> tuple[np.ndarray, list[int]]:
    rows = r.shape[0]
    pivots: list[int] = []
    row = 0
    for col in range(limit):
        if row == rows:
            break
        if _next_pivot(r, row, col) is None:
            continue
        lead = r[row, col]
        if lead != 1:
            r[row, :] = field.reduce(r[row, :] * field.inv(lead))
        others = np.flatnonzero(r[:, col] != 0)
        others = others[others != row]
        if others.size:
            # only the pivot row's support changes
            support = np.flatnonzero(r[row, :] != 0)
            factors = r[others, col]
            block = r[np.ix_(others, support)] - np.outer(factors, r[row, support])
            r[np.ix_(others, support)] = field.reduce(block)
        pivots.append(col)
        row += 1
    return r, pivots


def rank_of(field: Field, matrix: np.ndarray) -> int:
    return len(row_reduce(field, matrix)[1])


def null_space(field: Field, matrix: np.ndarray) -> np.ndarray:
    """Columns of the result form a basis of ``{v : matrix @ v = 0}``."""
    cols = matrix.shape[1]
    reduced, pivots = row_reduce(field, matrix)
    pivot_set = set(pivots)
    free = [c for c in range(cols) if c not in pivot_set]
    basis = zeros((cols, len(free)))
    if free:
        basis[free, np.arange(len(free))] = 1
        if pivots:
            basis[pivots, :] = field.reduce(-reduced[: len(pivots)][:, free])
    return basis


def column_basis(field: Field, matrix: np.ndarray) -> np.ndarray:
    """Independent columns of ``matrix`` spanning its column space."""
    _, pivots = row_reduce(field, matrix)
    return matrix[:, pivots]


class LinearSolver:
    """Solves ``A x = b`` for many right-hand sides after one elimination.

    Reduces ``[A | I]`` with pivots restricted to A, so the right block is an
    invertible ``E`` with ``E @ A`` in reduced echelon form.
    """

    def __init__(self, field: Field, matrix: np.ndarray) -> None:
        self.field = field
        self.shape: tuple[int, int] = (matrix.shape[0], matrix.shape[1])
        rows, cols = self.shape
        augmented = np.hstack([np.asarray(matrix, dtype=object), identity(rows)])
        reduced, pivots = row_reduce(field, augmented, pivot_limit=cols)
        self.pivots = pivots
        self.rank = len(pivots)
        self._transform = reduced[:, cols:]

    def _project(self, rhs: np.ndarray) -> np.ndarray:
        if rhs.shape[0] != self.shape[0]:
            msg = f"Right-hand side has {rhs.shape[0]} rows, expected {self.shape[0]}"
            raise DimensionMismatchError(msg)
        return dot(self.field, self._transform, rhs)

    def solvable(self, rhs: np.ndarray) -> bool:
        y = self._project(rhs.reshape(rhs.shape[0], -1))
        return is_zero(y[self.rank :])

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        vector = rhs.ndim == 1
        b = rhs.reshape(rhs.shape[0], -1)
        y = self._project(b)
        if not is_zero(y[self.rank :]):
            msg = "System is inconsistent"
            raise NoSolutionError(msg)
        x = zeros((self.shape[1], b.shape[1]))
        if self.pivots:
            x[self.pivots, :] = y[: self.rank]
        return x[:, 0] if vector else x


def invert_array(field: Field, matrix: np.ndarray) -> np.ndarray:
    rows, cols = matrix.shape
    if rows != cols:
        msg = f"Cannot invert a {rows}x{cols} matrix"
        raise DimensionMismatchError(msg)
    solver = LinearSolver(field, matrix)
    if solver.rank < rows:
        msg = f"Matrix has rank {solver.rank} < {rows}"
        raise SingularMatrixError(msg)
    return solver.solve(identity(rows))


class QuotientBasis:
    """A fixed basis of ``span / sub`` with canonical coordinates.

    Both arguments hold vectors as columns and ``sub`` must lie inside ``span``.
    Coordinates are read off pivot positions after reducing modulo ``sub``, so
    two vectors get equal coordinates exactly when they differ by ``sub``.
    """

    def __init__(self, field: Field, sub: np.ndarray, span: np.ndarray) -> None:
        self.field = field
        self.ambient = span.shape[0]
        sub_reduced, sub_pivots = row_reduce(field, np.asarray(sub, dtype=object).T)
        self._sub_rows = sub_reduced[: len(sub_pivots)]
        self._sub_pivots = sub_pivots
        rows = np.asarray(span, dtype=object).T
        if sub_pivots:
            rows = field.reduce(rows - dot(field, rows[:, sub_pivots], self._sub_rows))
        reduced, pivots = row_reduce(field, rows)
        self._rows = reduced[: len(pivots)]
        self.pivots = pivots

    @property
    def dim(self) -> int:
        return len(self.pivots)

    @property
    def sub_dim(self) -> int:
        return len(self._sub_pivots)

    def residue(self, vectors: np.ndarray) -> np.ndarray:
        if not self._sub_pivots:
            return vectors
        return self.field.reduce(
            vectors - dot(self.field, self._sub_rows.T, vectors[self._sub_pivots])
        )

    def coords(self, vectors: np.ndarray) -> np.ndarray:
        r = self.residue(vectors)
        c = r[self.pivots]
        if not is_zero(self.field.reduce(r - dot(self.field, self._rows.T, c))):
            msg = "Vector does not lie in the spanning space"
            raise NotInSpanError(msg)
        return c

    def in_sub(self, vectors: np.ndarray) -> bool:
        return is_zero(self.residue(vectors))

    def representatives(self) -> np.ndarray:
        return self._rows.T.copy()

    def representative(self, coords: np.ndarray) -> np.ndarray:
        return dot(self.field, self._rows.T, coords)


@dataclass(frozen=True, eq=False)
class Matrix:
    field: Field
    data: np.ndarray

    def __post_init__(self) -> None:
        data = np.array(self.data, dtype=object)
        if data.ndim != 2:
            msg = f"Matrix data must be 2-d, got shape {data.shape}"
            raise DimensionMismatchError(msg)
        data.flags.writeable = False
        object.__setattr__(self, "data", data)

    @classmethod
    def from_rows(cls, field: Field, rows: Sequence[Sequence[Any]], cols: int = 0) -> Matrix:
        if not rows:
            return cls(field, zeros((0, cols)))
        return cls(field, field.array(rows))

    @classmethod
    def identity(cls, field: Field, n: int) -> Matrix:
        return cls(field, identity(n))

    @classmethod
    def zero(cls, field: Field, rows: int, cols: int) -> Matrix:
        return cls(field, zeros((rows, cols)))

    @property
    def rows(self) -> int:
        return self.data.shape[0]

    @property
    def cols(self) -> int:
        return self.data.shape[1]

    def _check_field(self, other: Matrix) -> None:
        if other.field != self.field:
            msg = f"Field mismatch: {self.field.name} vs {other.field.name}"
            raise DimensionMismatchError(msg)

    def __matmul__(self, other: Matrix) -> Matrix:
        self._check_field(other)
        if self.cols != other.rows:
            msg = f"Cannot multiply {self.rows}x{self.cols} by {other.rows}x{other.cols}"
            raise DimensionMismatchError(msg)
        return Matrix(self.field, dot(self.field, self.data, other.data))

    def __add__(self, other: Matrix) -> Matrix:
        self._check_field(other)
        if self.data.shape != other.data.shape:
            msg = "Shape mismatch in addition"
            raise DimensionMismatchError(msg)
        return Matrix(self.field, self.field.reduce(self.data + other.data))

    def __sub__(self, other: Matrix) -> Matrix:
        return self + other.scaled(-1)

    def scaled(self, factor: Any) -> Matrix:
        return Matrix(self.field, self.field.reduce(self.data * self.field.coerce(factor)))

    def transpose(self) -> Matrix:
        return Matrix(self.field, self.data.T)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Matrix):
            return NotImplemented
        return (
            self.field == other.field
            and self.data.shape == other.data.shape
            and bool(np.array_equal(self.data, other.data))
        )

    __hash__ = None  # type: ignore[assignment]

    def entries(self) -> list[list[str]]:
        return [[self.field.format(v) for v in row] for row in self.data]


def rref(m: Matrix) -> tuple[Matrix, list[int]]:
    reduced, pivots = row_reduce(m.field, m.data)
    return Matrix(m.field, reduced), pivots


def rank(m: Matrix) -> int:
    return rank_of(m.field, m.data)


def kernel_basis(m: Matrix) -> list[Matrix]:
    basis = null_space(m.field, m.data)
    return [Matrix(m.field, basis[:, [k]]) for k in range(basis.shape[1])]


def solve(a: Matrix, b: Matrix) -> Matrix:
    if a.rows != b.rows:
        msg = f"solve: {a.rows} rows vs {b.rows} rows"
        raise DimensionMismatchError(msg)
    return Matrix(a.field, LinearSolver(a.field, a.data).solve(b.data))


def invert(m: Matrix) -> Matrix:
    return Matrix(m.field, invert_array(m.field, m.data))


class LinearAlgebraError(Exception):
    pass


class DimensionMismatchError(LinearAlgebraError):
    pass


class NoSolutionError(LinearAlgebraError):
    pass


class SingularMatrixError(LinearAlgebraError):
    pass


class NotInSpanError(LinearAlgebraError):
    pass
