"""ILP data model and the JSON instance format.

An instance is ``max{c^T x : A x <= b, x >= 0, x integer}`` with exact
rational data.  Rationals are serialized as ``"p/q"`` strings so that files
round-trip bit-exactly.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Any, Iterable, Sequence

from .rational import as_rational, format_rational, lcm_of_denominators


class InstanceFormatError(ValueError):
    """Malformed instance document; ``location`` names the offending field."""

    def __init__(self, message: str, location: str = ""):
        self.location = location
        super().__init__(f"{location}: {message}" if location else message)


class DimensionError(InstanceFormatError):
    pass


def _frac_tuple(values: Iterable[Any]) -> tuple[Fraction, ...]:
    return tuple(as_rational(v) for v in values)


@dataclass(frozen=True)
class Cut:
    """Valid inequality ``coeffs^T x <= rhs``."""

    coeffs: tuple[Fraction, ...]
    rhs: Fraction

    def __post_init__(self):
        object.__setattr__(self, "coeffs", _frac_tuple(self.coeffs))
        object.__setattr__(self, "rhs", as_rational(self.rhs))

    @property
    def is_trivial(self) -> bool:
        return self.rhs == 0 and not any(self.coeffs)

    def satisfied_by(self, x: Sequence[Any]) -> bool:
        return sum(a * v for a, v in zip(self.coeffs, x)) <= self.rhs

    def __str__(self) -> str:
        terms = " + ".join(f"{a}*x{j + 1}" for j, a in enumerate(self.coeffs) if a)
        return f"{terms or '0'} <= {self.rhs}"

    def to_json(self) -> dict:
        return {
            "coeffs": [format_rational(a) for a in self.coeffs],
            "rhs": format_rational(self.rhs),
        }

    @classmethod
    def from_json(cls, obj: dict) -> "Cut":
        return cls(tuple(obj["coeffs"]), obj["rhs"])


@dataclass(frozen=True)
class IlpInstance:
    A: tuple[tuple[Fraction, ...], ...]
    b: tuple[Fraction, ...]
    c: tuple[Fraction, ...]
    id: str = field(default="", compare=True)

    def __post_init__(self):
        A = tuple(_frac_tuple(row) for row in self.A)
        b = _frac_tuple(self.b)
        c = _frac_tuple(self.c)
        if not A:
            raise DimensionError("at least one constraint row is required", "A")
        if not c:
            raise DimensionError("at least one variable is required", "c")
        for i, row in enumerate(A):
            if len(row) != len(c):
                raise DimensionError(
                    f"row has {len(row)} entries, expected n={len(c)}", f"A[{i}]"
                )
        if len(b) != len(A):
            raise DimensionError(f"b has {len(b)} entries, expected m={len(A)}", "b")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "c", c)

    @property
    def n(self) -> int:
        return len(self.c)

    @property
    def m(self) -> int:
        return len(self.A)

    def with_rows(self, cuts: Sequence[Cut], id: str | None = None) -> "IlpInstance":
        """New instance with each cut appended as an extra constraint row."""
        return IlpInstance(
            self.A + tuple(cut.coeffs for cut in cuts),
            self.b + tuple(cut.rhs for cut in cuts),
            self.c,
            self.id if id is None else id,
        )

    def padded(self, n: int, m: int) -> "IlpInstance":
        """Lift to ``n`` variables and ``m`` rows using zero columns and ``0 <= 0`` rows."""
        if n < self.n or m < self.m:
            raise DimensionError("padding cannot shrink an instance")
        zero = Fraction(0)
        A = tuple(row + (zero,) * (n - self.n) for row in self.A)
        A += ((zero,) * n,) * (m - self.m)
        return IlpInstance(A, self.b + (zero,) * (m - self.m), self.c + (zero,) * (n - self.n), self.id)

    def is_feasible_point(self, x: Sequence[Any]) -> bool:
        if any(v < 0 for v in x):
            return False
        return all(
            sum(a * v for a, v in zip(row, x)) <= rhs for row, rhs in zip(self.A, self.b)
        )

    def objective(self, x: Sequence[Any]) -> Fraction:
        return sum((cj * v for cj, v in zip(self.c, x)), Fraction(0))

    @cached_property
    def integer_rows(self) -> tuple[tuple[tuple[int, ...], int, int], ...]:
        """Each row scaled to integers: ``(row, rhs, scale)`` with ``scale > 0``."""
        out = []
        for row, rhs in zip(self.A, self.b):
            lam = lcm_of_denominators(row + (rhs,))
            out.append((tuple(int(a * lam) for a in row), int(rhs * lam), lam))
        return tuple(out)

    def to_json(self) -> dict:
        return {
            "id": self.id,
            "n": self.n,
            "m": self.m,
            "A": [[format_rational(a) for a in row] for row in self.A],
            "b": [format_rational(v) for v in self.b],
            "c": [format_rational(v) for v in self.c],
        }

    @classmethod
    def from_json(cls, obj: Any) -> "IlpInstance":
        if not isinstance(obj, dict):
            raise InstanceFormatError("instance document must be a JSON object")
        for key in ("n", "m", "A", "b", "c"):
            if key not in obj:
                raise InstanceFormatError("missing field", key)
        n, m = obj["n"], obj["m"]
        if not isinstance(n, int) or n < 1:
            raise InstanceFormatError("must be a positive integer", "n")
        if not isinstance(m, int) or m < 1:
            raise DimensionError("must be a positive integer (m >= 1)", "m")
        A_raw, b_raw, c_raw = obj["A"], obj["b"], obj["c"]
        if not isinstance(A_raw, list) or len(A_raw) != m:
            raise DimensionError(f"expected {m} rows", "A")
        if not isinstance(b_raw, list) or len(b_raw) != m:
            raise DimensionError(f"expected {m} entries", "b")
        if not isinstance(c_raw, list) or len(c_raw) != n:
            raise DimensionError(f"expected {n} entries", "c")
        A = []
        for i, row in enumerate(A_raw):
            if not isinstance(row, list) or len(row) != n:
                raise DimensionError(f"expected {n} entries", f"A[{i}]")
            A.append(tuple(_parse(v, f"A[{i}][{j}]") for j, v in enumerate(row)))
        b = tuple(_parse(v, f"b[{i}]") for i, v in enumerate(b_raw))
        c = tuple(_parse(v, f"c[{j}]") for j, v in enumerate(c_raw))
        return cls(tuple(A), b, c, str(obj.get("id", "")))


def _parse(value: Any, location: str) -> Fraction:
    if isinstance(value, bool) or not isinstance(value, (str, int)):
        raise InstanceFormatError(f"expected a 'p/q' string, got {value!r}", location)
    try:
        q = as_rational(value)
    except (ValueError, ZeroDivisionError) as exc:
        raise InstanceFormatError(f"bad rational {value!r} ({exc})", location) from None
    return q


def write_instance(inst: IlpInstance) -> bytes:
    return json.dumps(inst.to_json(), separators=(",", ":")).encode()


def read_instance(text: bytes | str) -> IlpInstance:
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InstanceFormatError(exc.msg, f"line {exc.lineno} column {exc.colno}") from None
    return IlpInstance.from_json(obj)


def write_jsonl(path, records: Iterable[dict]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(rec, separators=(",", ":"), sort_keys=True))
            fh.write("\n")


def read_jsonl(path) -> list[dict]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                out.append(json.loads(line))
            except json.JSONDecodeError as exc:
                raise InstanceFormatError(exc.msg, f"{path}:{lineno}") from None
    return out
