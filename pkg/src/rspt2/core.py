"""Numeric tower and shared record types.

Energies are carried either as exact rational combinations over the basis
``{1, pi**-2, pi**-4}`` or as floats with an attached error bound.  Every
second-order correction produced by the package ends up in one of these two
forms, so sums, sign tests and ratios can stay exact wherever the inputs were.

States are indexed by ``s = 0, 1, 2, ...`` in ascending unperturbed energy.
For the particle in a box the quantum number is ``k = s + 1``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Sequence, Union

import mpmath

__all__ = [
    "Scalar",
    "Exact",
    "Approx",
    "ScalarLike",
    "as_scalar",
    "scalar_eval",
    "scalar_add",
    "scalar_mul",
    "compare",
    "ZERO",
    "CorrectionRecord",
    "CorrectionSeries",
    "BACKENDS",
    "RSPTError",
]

_EPS = 2.0**-52
_INV_PI2 = 1.0 / math.pi**2
_INV_PI4 = _INV_PI2 * _INV_PI2


class RSPTError(Exception):
    """Base class for every computation error raised by the package."""


RationalLike = Union[int, Fraction]
ScalarLike = Union["Scalar", int, Fraction, float]


def _frac(x: Any) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, str):
        return Fraction(x)
    raise TypeError(f"expected a rational, got {type(x).__name__}")


class Scalar:
    """Common base of :class:`Exact` and :class:`Approx`.

    Arithmetic operators dispatch to :func:`scalar_add` / :func:`scalar_mul`,
    so mixing the two variants demotes to :class:`Approx` automatically.
    """

    __slots__ = ()

    is_exact: bool = False

    def value(self) -> float:
        raise NotImplementedError

    def error(self) -> float:
        raise NotImplementedError

    def interval(self) -> tuple[float, float]:
        v, e = self.value(), self.error()
        return v - e, v + e

    def sign(self) -> int | None:
        """Return -1, 0 or +1, or ``None`` if an interval straddles zero."""
        raise NotImplementedError

    def to_json(self) -> dict:
        raise NotImplementedError

    @staticmethod
    def from_json(obj: dict) -> "Scalar":
        if "exact" in obj:
            d = obj["exact"]
            return Exact(Fraction(d["c0"]), Fraction(d["c2"]), Fraction(d["c4"]))
        if "approx" in obj:
            d = obj["approx"]
            return Approx(float(d["value"]), float(d["err"]))
        raise ValueError(f"not a serialized Scalar: {obj!r}")

    def __add__(self, other: ScalarLike) -> "Scalar":
        return scalar_add(self, as_scalar(other))

    __radd__ = __add__

    def __sub__(self, other: ScalarLike) -> "Scalar":
        return scalar_add(self, -as_scalar(other))

    def __rsub__(self, other: ScalarLike) -> "Scalar":
        return scalar_add(as_scalar(other), -self)

    def __mul__(self, other: ScalarLike) -> "Scalar":
        return scalar_mul(self, as_scalar(other))

    __rmul__ = __mul__

    def __truediv__(self, other: ScalarLike) -> "Scalar":
        return scalar_div(self, as_scalar(other))

    def __rtruediv__(self, other: ScalarLike) -> "Scalar":
        return scalar_div(as_scalar(other), self)

    def __float__(self) -> float:
        return self.value()


@dataclass(frozen=True, slots=True)
class Exact(Scalar):
    """``c0 + c2/pi**2 + c4/pi**4`` with rational coefficients."""

    c0: Fraction = Fraction(0)
    c2: Fraction = Fraction(0)
    c4: Fraction = Fraction(0)

    is_exact = True

    def __post_init__(self) -> None:
        # Fraction already normalises to lowest terms with a positive denominator.
        object.__setattr__(self, "c0", _frac(self.c0))
        object.__setattr__(self, "c2", _frac(self.c2))
        object.__setattr__(self, "c4", _frac(self.c4))

    @classmethod
    def rational(cls, q: RationalLike) -> "Exact":
        return cls(_frac(q))

    @classmethod
    def inv_pi2(cls, q: RationalLike) -> "Exact":
        return cls(Fraction(0), _frac(q))

    @classmethod
    def inv_pi4(cls, q: RationalLike) -> "Exact":
        return cls(Fraction(0), Fraction(0), _frac(q))

    @property
    def coeffs(self) -> tuple[Fraction, Fraction, Fraction]:
        return (self.c0, self.c2, self.c4)

    def is_zero(self) -> bool:
        return not (self.c0 or self.c2 or self.c4)

    def is_rational(self) -> bool:
        return not (self.c2 or self.c4)

    def value(self) -> float:
        return float(self.c0) + float(self.c2) * _INV_PI2 + float(self.c4) * _INV_PI4

    def error(self) -> float:
        return 0.0

    def rounding_bound(self) -> float:
        """Bound on the error of :meth:`value` from float rounding."""
        mag = abs(float(self.c0)) + abs(float(self.c2)) * _INV_PI2 + abs(float(self.c4)) * _INV_PI4
        return 8 * _EPS * mag

    def sign(self) -> int:
        if self.is_zero():
            return 0
        v = self.value()
        if abs(v) > self.rounding_bound():
            return 1 if v > 0 else -1
        # pi is transcendental, so a nonzero combination is nonzero; raise
        # the working precision until the sign is unambiguous.
        prec = 80
        while True:
            with mpmath.workprec(prec):
                x = 1 / mpmath.pi**2
                val = (mpmath.mpf(self.c0.numerator) / self.c0.denominator
                       + mpmath.mpf(self.c2.numerator) / self.c2.denominator * x
                       + mpmath.mpf(self.c4.numerator) / self.c4.denominator * x * x)
                scale = (abs(mpmath.mpf(self.c0.numerator) / self.c0.denominator)
                         + abs(mpmath.mpf(self.c2.numerator) / self.c2.denominator) * x
                         + abs(mpmath.mpf(self.c4.numerator) / self.c4.denominator) * x * x)
                if abs(val) > scale * mpmath.mpf(2) ** (8 - prec):
                    return 1 if val > 0 else -1
            prec *= 2

    def to_approx(self) -> "Approx":
        return Approx(self.value(), self.rounding_bound())

    def to_json(self) -> dict:
        return {"exact": {k: _frac_str(getattr(self, k)) for k in ("c0", "c2", "c4")}}

    def __neg__(self) -> "Exact":
        return Exact(-self.c0, -self.c2, -self.c4)

    def __repr__(self) -> str:
        return f"Exact({self})"

    def __str__(self) -> str:
        parts = []
        if self.c0:
            parts.append(str(self.c0))
        if self.c2:
            parts.append(f"{self.c2}*pi^-2")
        if self.c4:
            parts.append(f"{self.c4}*pi^-4")
        return " + ".join(parts) if parts else "0"


@dataclass(frozen=True, slots=True)
class Approx(Scalar):
    """A float ``value`` known to within ``err``."""

    value_: float
    err: float = 0.0

    def __post_init__(self) -> None:
        if not self.err >= 0:
            raise ValueError(f"error bound must be non-negative, got {self.err}")
        object.__setattr__(self, "value_", float(self.value_))
        object.__setattr__(self, "err", float(self.err))

    def value(self) -> float:
        return self.value_

    def error(self) -> float:
        return self.err

    def sign(self) -> int | None:
        lo, hi = self.interval()
        if lo > 0:
            return 1
        if hi < 0:
            return -1
        if self.value_ == 0 and self.err == 0:
            return 0
        return None

    def to_json(self) -> dict:
        return {"approx": {"value": self.value_, "err": self.err}}

    def __neg__(self) -> "Approx":
        return Approx(-self.value_, self.err)

    def __repr__(self) -> str:
        return f"Approx({self.value_!r} ± {self.err:.3g})"

    __str__ = __repr__


ZERO = Exact()


def _frac_str(q: Fraction) -> str:
    return f"{q.numerator}/{q.denominator}"


def as_scalar(x: ScalarLike) -> Scalar:
    if isinstance(x, Scalar):
        return x
    if isinstance(x, (int, Fraction)):
        return Exact(_frac(x))
    if isinstance(x, float):
        return Approx(x, 0.0)
    raise TypeError(f"cannot convert {type(x).__name__} to Scalar")


def _approx(x: Scalar) -> Approx:
    return x.to_approx() if isinstance(x, Exact) else x  # type: ignore[return-value]


def scalar_eval(x: Scalar) -> tuple[float, float]:
    """Float value and error bound (zero for exact scalars)."""
    return x.value(), x.error()


def scalar_add(x: Scalar, y: Scalar) -> Scalar:
    if isinstance(x, Exact) and isinstance(y, Exact):
        return Exact(x.c0 + y.c0, x.c2 + y.c2, x.c4 + y.c4)
    a, b = _approx(x), _approx(y)
    v = a.value_ + b.value_
    return Approx(v, a.err + b.err + _EPS * abs(v))


def scalar_mul(x: Scalar, y: Scalar) -> Scalar:
    if isinstance(x, Exact) and isinstance(y, Exact):
        a, b = x.coeffs, y.coeffs
        prod = [Fraction(0)] * 5
        for i, ai in enumerate(a):
            if ai:
                for j, bj in enumerate(b):
                    if bj:
                        prod[i + j] += ai * bj
        if not (prod[3] or prod[4]):
            return Exact(prod[0], prod[1], prod[2])
    a, b = _approx(x), _approx(y)
    v = a.value_ * b.value_
    err = abs(a.value_) * b.err + abs(b.value_) * a.err + a.err * b.err + _EPS * abs(v)
    return Approx(v, err)


def scalar_div(x: Scalar, y: Scalar) -> Scalar:
    """Quotient; exact when ``y`` is a single basis term and the result stays in the basis."""
    if isinstance(x, Exact) and isinstance(y, Exact):
        if y.is_zero():
            raise ZeroDivisionError("division by exact zero")
        q = _exact_div(x, y)
        if q is not None:
            return q
    a, b = _approx(x), _approx(y)
    if b.value_ == 0 or abs(b.value_) <= b.err:
        raise ZeroDivisionError("divisor interval contains zero")
    v = a.value_ / b.value_
    # worst case of |a|+ea over |b|-eb
    hi = (abs(a.value_) + a.err) / (abs(b.value_) - b.err)
    return Approx(v, max(hi - abs(v), 0.0) + 2 * _EPS * abs(v))


def _exact_div(x: Exact, y: Exact) -> Exact | None:
    nz = [i for i, c in enumerate(y.coeffs) if c]
    if len(nz) == 1:
        shift, c = nz[0], y.coeffs[nz[0]]
        xs = x.coeffs
        if any(xs[i] for i in range(shift)):
            return None
        out = [xs[i + shift] / c if i + shift < 3 else Fraction(0) for i in range(3)]
        return Exact(*out)
    # proportional operands: x = r * y for rational r
    ratios = set()
    for xc, yc in zip(x.coeffs, y.coeffs):
        if yc:
            ratios.add(xc / yc)
        elif xc:
            return None
    if len(ratios) == 1:
        return Exact(ratios.pop())
    return None


def compare(x: Scalar, y: Scalar, rtol: float = 1e-9, atol: float = 0.0) -> str:
    """Compare two scalars.

    Returns ``"equal"``, ``"less"``, ``"greater"`` or ``"indistinguishable"``.
    Exact operands compare exactly.  Otherwise disjoint intervals give an
    ordering; overlapping intervals are ``"equal"`` only when both error bars
    and the centre difference sit within ``atol + rtol*max(|x|, |y|)``.
    """
    if rtol < 0 or atol < 0:
        raise ValueError("tolerances must be non-negative")
    if isinstance(x, Exact) and isinstance(y, Exact):
        s = (x - y).sign()
        return {0: "equal", -1: "less", 1: "greater"}[s]
    a, b = _approx(x), _approx(y)
    if a.value_ + a.err < b.value_ - b.err:
        return "less"
    if a.value_ - a.err > b.value_ + b.err:
        return "greater"
    tol = atol + rtol * max(abs(a.value_), abs(b.value_))
    if max(a.err, b.err) <= tol and abs(a.value_ - b.value_) <= tol + a.err + b.err:
        return "equal"
    return "indistinguishable"


BACKENDS = ("banded", "truncated", "dalgarno-lewis", "grid", "matrix", "closed-form")


@dataclass(frozen=True)
class CorrectionRecord:
    """Energies through second order for one unperturbed state."""

    state: int
    e0: Scalar
    e1: Scalar
    e2: Scalar
    backend: str
    rigorous: bool = True

    def __post_init__(self) -> None:
        if self.state < 0:
            raise ValueError("state index must be non-negative")
        if self.backend not in BACKENDS:
            raise ValueError(f"unknown backend {self.backend!r}")

    def to_json(self) -> dict:
        return {
            "state": self.state,
            "e0": self.e0.to_json(),
            "e1": self.e1.to_json(),
            "e2": self.e2.to_json(),
            "backend": self.backend,
            "rigorous": self.rigorous,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "CorrectionRecord":
        return cls(
            state=int(obj["state"]),
            e0=Scalar.from_json(obj["e0"]),
            e1=Scalar.from_json(obj["e1"]),
            e2=Scalar.from_json(obj["e2"]),
            backend=obj["backend"],
            rigorous=bool(obj["rigorous"]),
        )


@dataclass(frozen=True)
class CorrectionSeries:
    """Records for states ``0..K`` of a single problem."""

    problem: Any
    records: tuple[CorrectionRecord, ...] = field(default_factory=tuple)

    def __post_init__(self) -> None:
        object.__setattr__(self, "records", tuple(self.records))
        for i, rec in enumerate(self.records):
            if rec.state != i:
                raise ValueError(
                    f"records must be gapless from state 0; position {i} holds state {rec.state}"
                )

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    def __getitem__(self, i):
        return self.records[i]

    @property
    def e2(self) -> list[Scalar]:
        return [r.e2 for r in self.records]

    @classmethod
    def from_e2(cls, values: Sequence[ScalarLike], problem: Any = None,
                backend: str = "closed-form") -> "CorrectionSeries":
        """Wrap a bare sequence of second-order values, e.g. for synthetic tests."""
        recs = [CorrectionRecord(i, ZERO, ZERO, as_scalar(v), backend) for i, v in enumerate(values)]
        return cls(problem, tuple(recs))

    def to_json(self) -> dict:
        from . import models

        return {
            "problem": models.problem_to_json(self.problem) if self.problem is not None else None,
            "records": [r.to_json() for r in self.records],
        }
