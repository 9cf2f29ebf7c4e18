from __future__ import annotations

import re
from abc import ABC, abstractmethod
from dataclasses import dataclass
from fractions import Fraction
from typing import Any

import numpy as np

SCALAR_PATTERN = re.compile(r"^([+-]?\d+)(?:/(\d+))?$")
MAX_PRIME = 2**31


class Field(ABC):
    """An exact ground field. Elements live in numpy object arrays."""

    name: str

    @property
    def characteristic(self) -> int:
        return 0

    @abstractmethod
    def coerce(self, value: Any) -> Any: ...

    @abstractmethod
    def inv(self, value: Any) -> Any: ...

    @abstractmethod
    def reduce(self, values: Any) -> Any: ...

    @abstractmethod
    def format(self, value: Any) -> str: ...

    def parse(self, text: str) -> Any:
        match = SCALAR_PATTERN.match(text.strip())
        if match is None:
            msg = f"Not a scalar: {text!r}"
            raise ScalarFormatError(msg)
        numerator = int(match.group(1))
        denominator = int(match.group(2)) if match.group(2) else 1
        if denominator == 0:
            msg = f"Zero denominator in {text!r}"
            raise ScalarFormatError(msg)
        return self.coerce(Fraction(numerator, denominator))

    def array(self, values: Any) -> np.ndarray:
        raw = np.array(values, dtype=object)
        if raw.size == 0:
            return raw
        return np.vectorize(self.coerce, otypes=[object])(raw)

    def is_zero(self, value: Any) -> bool:
        return self.coerce(value) == 0


@dataclass(frozen=True)
class RationalField(Field):
    name: str = "Q"

    def coerce(self, value: Any) -> Any:
        if isinstance(value, Fraction):
            return value
        if isinstance(value, str):
            return self.parse(value)
        return Fraction(value)

    def inv(self, value: Any) -> Any:
        if value == 0:
            msg = "Division by zero"
            raise ZeroDivisionError(msg)
        return 1 / Fraction(value)

    def reduce(self, values: Any) -> Any:
        return values

    def format(self, value: Any) -> str:
        return str(Fraction(value))


@dataclass(frozen=True)
class PrimeField(Field):
    p: int = 2
    name: str = ""

    def __post_init__(self) -> None:
        if self.p < 2 or self.p >= MAX_PRIME or not _is_prime(self.p):
            msg = f"F{self.p} is not a supported prime field"
            raise ScalarFormatError(msg)
        if not self.name:
            object.__setattr__(self, "name", f"F{self.p}")

    @property
    def characteristic(self) -> int:
        return self.p

    def coerce(self, value: Any) -> Any:
        if isinstance(value, str):
            return self.parse(value)
        if isinstance(value, Fraction):
            if value.denominator % self.p == 0:
                msg = f"{value} has no image in F{self.p}"
                raise ScalarFormatError(msg)
            return value.numerator * pow(value.denominator, -1, self.p) % self.p
        return int(value) % self.p

    def inv(self, value: Any) -> Any:
        if int(value) % self.p == 0:
            msg = "Division by zero"
            raise ZeroDivisionError(msg)
        return pow(int(value), -1, self.p)

    def reduce(self, values: Any) -> Any:
        return values % self.p

    def format(self, value: Any) -> str:
        return str(int(value) % self.p)


def _is_prime(n: int) -> bool:
    if n < 2:
        return False
    i = 2
    while i * i <= n:
        if n % i == 0:
            return False
        i += 1
    return True


def field_from_name(name: str) -> Field:
    if name == "Q":
        return RationalField()
    if name.startswith("F") and name[1:].isdigit():
        return PrimeField(int(name[1:]))
    msg = f"Unknown field {name!r}"
    raise ScalarFormatError(msg)


class ScalarFormatError(ValueError):
    pass
