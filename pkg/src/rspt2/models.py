"""Unperturbed spectra, perturbation matrix elements and known closed forms.

Three model families are supported:

* ``Oscillator(M, omega)``: ``H0 = p^2/2 + omega^2 x^2/2``, ``V = x^M``.
* ``HydrogenS(M)``: s states of ``-1/2 d^2/dr^2 - (1/r) d/dr - 1/r``, ``V = r^M``.
* ``ParticleInBox(q)``: box on (0, 1) with ``m = 1/2, hbar = 1`` so that
  ``E_k = k^2 pi^2``; ``V = x`` (``q=None``) or ``V = cos(q pi x)``.

Finite matrix problems live in :mod:`rspt2.matrixlab` and are accepted here
only for dispatch.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Union

from .core import Approx, Exact, RSPTError, Scalar

__all__ = [
    "Oscillator",
    "HydrogenS",
    "ParticleInBox",
    "ProblemSpec",
    "unperturbed_energy",
    "energy_gap",
    "matrix_element",
    "squared_matrix_element",
    "bandwidth",
    "closed_form_E2",
    "quantum_number",
    "problem_to_json",
    "problem_from_json",
    "PIB_LINEAR",
]


@dataclass(frozen=True)
class Oscillator:
    M: int
    omega: Union[Fraction, float] = Fraction(1)

    def __post_init__(self) -> None:
        if int(self.M) != self.M or self.M < 1:
            raise ValueError("M must be an integer >= 1")
        om = self.omega
        if isinstance(om, int):
            om = Fraction(om)
        if not om > 0:
            raise ValueError("omega must be positive")
        object.__setattr__(self, "omega", om)

    @property
    def exact(self) -> bool:
        return isinstance(self.omega, Fraction)


@dataclass(frozen=True)
class HydrogenS:
    M: int

    def __post_init__(self) -> None:
        if int(self.M) != self.M or self.M < 1:
            raise ValueError("M must be an integer >= 1")


@dataclass(frozen=True)
class ParticleInBox:
    """Box on (0, 1); ``q=None`` selects the linear perturbation ``x``."""

    q: int | None = None

    def __post_init__(self) -> None:
        if self.q is not None and (int(self.q) != self.q or self.q < 1):
            raise ValueError("q must be an integer >= 1")

    @property
    def linear(self) -> bool:
        return self.q is None


PIB_LINEAR = ParticleInBox(None)

ProblemSpec = Union[Oscillator, HydrogenS, ParticleInBox, "MatrixProblem"]  # noqa: F821


class UnsupportedProblem(RSPTError):
    pass


def _is_matrix(p) -> bool:
    from .matrixlab import MatrixProblem

    return isinstance(p, MatrixProblem)


def _reject_matrix(p) -> None:
    if _is_matrix(p):
        raise UnsupportedProblem("matrix problems are served by rspt2.matrixlab")


def quantum_number(p, s: int) -> int:
    """Conventional quantum number: ``n = s`` for the oscillator, ``s + 1`` otherwise."""
    if isinstance(p, Oscillator):
        return s
    if isinstance(p, (HydrogenS, ParticleInBox)):
        return s + 1
    return s


# -- energies ---------------------------------------------------------------


def unperturbed_energy(p, s: int) -> Scalar:
    """``E_s0``.  Box energies ``k^2 pi^2`` fall outside the exact basis and are
    returned as floats; use :func:`energy_gap` for exact inverse gaps."""
    if s < 0:
        raise ValueError("state index must be non-negative")
    if isinstance(p, Oscillator):
        if p.exact:
            return Exact.rational(p.omega * (s + Fraction(1, 2)))
        return Approx(p.omega * (s + 0.5), 2e-16 * p.omega * (s + 0.5))
    if isinstance(p, HydrogenS):
        return Exact.rational(Fraction(-1, 2 * (s + 1) ** 2))
    if isinstance(p, ParticleInBox):
        v = (s + 1) ** 2 * math.pi**2
        return Approx(v, 4e-16 * v)
    if _is_matrix(p):
        return Approx(float(p.h0_diag[s]), 0.0)
    raise TypeError(f"unknown problem {p!r}")


def energy_gap(p, s: int, m: int) -> tuple[Fraction | float, int]:
    """``E_s0 - E_m0`` as ``(coefficient, pi_power)`` meaning ``coefficient * pi**pi_power``.

    The coefficient is a :class:`Fraction` whenever the gap is exactly
    representable (``pi_power`` is 2 for the box, 0 otherwise).
    """
    _reject_matrix(p)
    if isinstance(p, Oscillator):
        return p.omega * (s - m), 0
    if isinstance(p, HydrogenS):
        return Fraction(1, 2 * (m + 1) ** 2) - Fraction(1, 2 * (s + 1) ** 2), 0
    if isinstance(p, ParticleInBox):
        return Fraction((s + 1) ** 2 - (m + 1) ** 2), 2
    raise TypeError(f"unknown problem {p!r}")


# -- matrix elements --------------------------------------------------------


@lru_cache(maxsize=None)
def _ladder_power(M: int, a: int, b: int) -> int:
    """Integer ``C`` with ``<b|(a + a^dag)^M|a> = C * sqrt(max(a,b)!/min(a,b)!)``.

    Walks every M-step path from ``a`` to ``b``; an edge crossed in both
    directions contributes its full weight, an edge crossed once its root.
    """
    if abs(a - b) > M or (a - b - M) % 2:
        return 0
    # amplitude of reaching level j after t steps, stored as the integer
    # prefactor relative to sqrt(max(a,j)!/min(a,j)!)
    layer = {a: 1}
    for _ in range(M):
        nxt: dict[int, int] = {}
        for j, c in layer.items():
            # raise j -> j+1 with weight sqrt(j+1)
            up = j + 1
            w = (j + 1) if j < a else 1  # returning toward a squares the root
            nxt[up] = nxt.get(up, 0) + c * w
            if j > 0:
                down = j - 1
                w = j if j > a else 1
                nxt[down] = nxt.get(down, 0) + c * w
        layer = nxt
    return layer.get(b, 0)


def _oscillator_element_parts(p: Oscillator, a: int, b: int) -> tuple[int, int]:
    """``(C, R)`` with ``<b|x^M|a> = C * sqrt(R) * (2 omega)^(-M/2)``."""
    C = _ladder_power(p.M, a, b)
    lo, hi = min(a, b), max(a, b)
    R = 1
    for j in range(lo + 1, hi + 1):
        R *= j
    return C, R


def _pib_cos_element(q: int, k: int, m: int) -> Fraction:
    v = Fraction(0)
    if abs(k - m) == q:
        v += Fraction(1, 2)
    if k + m == q:
        v -= Fraction(1, 2)
    return v


def _pib_linear_element(k: int, m: int) -> Exact:
    if k == m:
        return Exact.rational(Fraction(1, 2))
    if (k - m) % 2 == 0:
        return Exact()
    return Exact.inv_pi2(Fraction(-8 * k * m, (k * k - m * m) ** 2))


def matrix_element(p, a: int, b: int) -> Scalar:
    """``V_ab = <b|V|a>``, exact where representable in the basis."""
    _reject_matrix(p)
    if a < 0 or b < 0:
        raise ValueError("state index must be non-negative")
    if isinstance(p, ParticleInBox):
        k, m = a + 1, b + 1
        if p.linear:
            return _pib_linear_element(k, m)
        return Exact.rational(_pib_cos_element(p.q, k, m))
    if isinstance(p, Oscillator):
        C, R = _oscillator_element_parts(p, a, b)
        if C == 0:
            return Exact()
        if p.exact:
            sq = Fraction(C * C * R) / (2 * p.omega) ** p.M
            root = _sqrt_fraction(sq)
            if root is not None:
                return Exact.rational(root if C > 0 else -root)
        v = C * math.sqrt(R) * (2 * float(p.omega)) ** (-p.M / 2)
        return Approx(v, 8e-16 * abs(v) * (p.M + 1))
    if isinstance(p, HydrogenS):
        sq = _hydrogen_element_squared(p.M, a + 1, b + 1)
        sgn = _hydrogen_element_sign(p.M, a + 1, b + 1)
        root = _sqrt_fraction(sq)
        if root is not None:
            return Exact.rational(sgn * root)
        v = sgn * math.sqrt(sq) if sq < 1e300 else sgn * float(_mp_sqrt(sq))
        return Approx(v, 4e-16 * abs(v))
    raise TypeError(f"unknown problem {p!r}")


def squared_matrix_element(p, a: int, b: int) -> Scalar:
    """``|V_ab|^2``; exact for rational-omega oscillators, box and hydrogen."""
    _reject_matrix(p)
    if isinstance(p, Oscillator):
        C, R = _oscillator_element_parts(p, a, b)
        if C == 0:
            return Exact()
        if p.exact:
            return Exact.rational(Fraction(C * C * R) / (2 * p.omega) ** p.M)
        v = C * C * R * (2 * float(p.omega)) ** (-p.M)
        return Approx(v, 8e-16 * v * (p.M + 1))
    if isinstance(p, HydrogenS):
        return Exact.rational(_hydrogen_element_squared(p.M, a + 1, b + 1))
    v = matrix_element(p, a, b)
    return v * v


def _sqrt_fraction(q: Fraction) -> Fraction | None:
    if q < 0:
        return None
    n, d = q.numerator, q.denominator
    rn, rd = math.isqrt(n), math.isqrt(d)
    if rn * rn == n and rd * rd == d:
        return Fraction(rn, rd)
    return None


def _mp_sqrt(q: Fraction):
    import mpmath

    return mpmath.sqrt(mpmath.mpf(q.numerator) / q.denominator)


# Hydrogen s states, reduced radial function u_n = r R_n.  The polynomial part
# of u_n is P_n(r) = r L^(1)_{n-1}(2r/n) (unnormalised), decaying as exp(-r/n).


@lru_cache(maxsize=None)
def hydrogen_polynomial(n: int) -> tuple[Fraction, ...]:
    """Coefficients ``[p_0, p_1, ...]`` of ``P_n(r)``, with ``p_0 = 0``."""
    if n < 1:
        raise ValueError("principal quantum number must be >= 1")
    # L^(1)_{n-1}(x) = sum_i (-1)^i C(n, n-1-i) x^i / i!
    coeffs = [Fraction(0)]
    for i in range(n):
        c = Fraction((-1) ** i * math.comb(n, n - 1 - i), math.factorial(i)) * Fraction(2, n) ** i
        coeffs.append(c)
    return tuple(coeffs)


def exp_moment(k: int, rate: Fraction) -> Fraction:
    """``int_0^inf r^k exp(-rate r) dr = k! / rate^(k+1)``."""
    return Fraction(math.factorial(k)) / rate ** (k + 1)


def poly_exp_integral(poly: dict[int, Fraction] | tuple, rate: Fraction) -> Fraction:
    items = poly.items() if isinstance(poly, dict) else enumerate(poly)
    return sum((c * exp_moment(j, rate) for j, c in items if c), Fraction(0))


@lru_cache(maxsize=None)
def hydrogen_norm_squared(n: int) -> Fraction:
    """``N^2`` with ``u_n = N P_n(r) exp(-r/n)`` normalised on ``(0, inf)``."""
    P = hydrogen_polynomial(n)
    sq = _poly_mul(P, P)
    return 1 / poly_exp_integral(sq, Fraction(2, n))


def _poly_mul(a, b) -> dict[int, Fraction]:
    out: dict[int, Fraction] = {}
    for i, ai in enumerate(a):
        if ai:
            for j, bj in enumerate(b):
                if bj:
                    out[i + j] = out.get(i + j, 0) + ai * bj
    return out


@lru_cache(maxsize=None)
def _hydrogen_overlap_raw(M: int, na: int, nb: int) -> Fraction:
    prod = _poly_mul(hydrogen_polynomial(na), hydrogen_polynomial(nb))
    shifted = {j + M: c for j, c in prod.items()}
    return poly_exp_integral(shifted, Fraction(1, na) + Fraction(1, nb))


def _hydrogen_element_squared(M: int, na: int, nb: int) -> Fraction:
    raw = _hydrogen_overlap_raw(M, na, nb)
    return raw * raw * hydrogen_norm_squared(na) * hydrogen_norm_squared(nb)


def _hydrogen_element_sign(M: int, na: int, nb: int) -> int:
    raw = _hydrogen_overlap_raw(M, na, nb)
    return (raw > 0) - (raw < 0)


def hydrogen_expectation(M: int, n: int) -> Fraction:
    """``<n|r^M|n>`` exactly."""
    return _hydrogen_overlap_raw(M, n, n) * hydrogen_norm_squared(n)


# -- structure --------------------------------------------------------------


def bandwidth(p) -> int | None:
    """Largest ``|a - b|`` with ``V_ab != 0``, or ``None`` when unbounded."""
    if isinstance(p, Oscillator):
        return p.M
    if isinstance(p, ParticleInBox):
        return None if p.linear else p.q
    if isinstance(p, HydrogenS):
        return None
    if _is_matrix(p):
        return len(p.h0_diag) - 1
    raise TypeError(f"unknown problem {p!r}")


def closed_form_E2(p, s: int) -> Scalar | None:
    """Known closed-form second-order energy, or ``None``."""
    if s < 0:
        raise ValueError("state index must be non-negative")
    k = s + 1
    if isinstance(p, ParticleInBox):
        if p.linear:
            return Exact(0, Fraction(1, 48 * k * k), Fraction(-15, 48 * k**4))
        if p.q == 1:
            if k == 1:
                return Exact.inv_pi2(Fraction(-1, 12))
            return Exact.inv_pi2(Fraction(1, 4) * (Fraction(1, 2 * k - 1) - Fraction(1, 2 * k + 1)))
        if p.q == 2:
            if k == 1:
                return Exact.inv_pi2(Fraction(-1, 32))
            if k == 2:
                return Exact.inv_pi2(Fraction(-1, 48))
            return Exact.inv_pi2(Fraction(1, 8 * (k * k - 1)))
        return None
    if isinstance(p, Oscillator) and p.M == 1:
        if p.exact:
            return Exact.rational(Fraction(-1, 2) / p.omega**2)
        v = -0.5 / float(p.omega) ** 2
        return Approx(v, 4e-16 * abs(v))
    return None


# -- serialisation ----------------------------------------------------------


def _num_to_json(x):
    if isinstance(x, Fraction):
        return f"{x.numerator}/{x.denominator}"
    return x


def problem_to_json(p) -> dict:
    if isinstance(p, Oscillator):
        return {"model": "oscillator", "M": p.M, "omega": _num_to_json(p.omega)}
    if isinstance(p, HydrogenS):
        return {"model": "hydrogen-s", "M": p.M}
    if isinstance(p, ParticleInBox):
        if p.linear:
            return {"model": "pib", "perturbation": "linear"}
        return {"model": "pib", "perturbation": "cos", "q": p.q}
    if _is_matrix(p):
        return p.to_json()
    raise TypeError(f"unknown problem {p!r}")


def problem_from_json(obj: dict):
    model = obj.get("model")
    if model == "oscillator":
        om = obj.get("omega", 1)
        if isinstance(om, str):
            om = Fraction(om)
        elif isinstance(om, int):
            om = Fraction(om)
        return Oscillator(int(obj["M"]), om)
    if model == "hydrogen-s":
        return HydrogenS(int(obj["M"]))
    if model == "pib":
        if obj.get("perturbation", "linear") == "linear":
            return PIB_LINEAR
        return ParticleInBox(int(obj["q"]))
    if model == "matrix":
        from .matrixlab import MatrixProblem

        return MatrixProblem.from_json(obj)
    raise ValueError(f"unknown model {model!r}")
