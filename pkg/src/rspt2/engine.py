"""First- and second-order energy corrections.

Four independent routes to the second-order energy are provided:

``banded``
    The sum over intermediate states, exact, for perturbations that couple
    only finitely many neighbours (oscillator ``x^M``, box ``cos(q pi x)``).
``truncated``
    The same sum cut at a finite basis, with a tail bound derived from a
    per-model envelope of the matrix elements.
``dalgarno-lewis``
    Solve ``(H0 - E0) psi1 = (E1 - V) psi0`` in a polynomial ansatz with
    rational arithmetic (hydrogen s states, rational-omega oscillator).
``grid``
    Second-order finite differences on a uniform grid, Richardson-extrapolated
    from two resolutions; used as an independent validator.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
import scipy.linalg

from . import models
from .core import (
    Approx,
    CorrectionRecord,
    CorrectionSeries,
    Exact,
    RSPTError,
    Scalar,
    ZERO,
)
from .models import HydrogenS, Oscillator, ParticleInBox

__all__ = [
    "UnboundedOperator",
    "BasisTooSmall",
    "AnsatzInsufficient",
    "GridTooCoarse",
    "ProjectionError",
    "DegenerateGap",
    "RadialFirstOrderState",
    "first_order",
    "second_order_banded",
    "second_order_truncated",
    "second_order_dalgarno_lewis",
    "dalgarno_lewis_state",
    "second_order_grid",
    "second_order",
    "compute_series",
    "GridSpec",
]

_EPS = 2.0**-52
DEGENERATE_GAP = 1e-9


class UnboundedOperator(RSPTError):
    pass


class BasisTooSmall(RSPTError):
    pass


class AnsatzInsufficient(RSPTError):
    pass


class GridTooCoarse(RSPTError):
    pass


class ProjectionError(GridTooCoarse):
    """The grid right-hand side is not orthogonal to the unperturbed state."""


class DegenerateGap(RSPTError):
    pass


def _matrixlab():
    from . import matrixlab

    return matrixlab


def _is_matrix(p) -> bool:
    return isinstance(p, _matrixlab().MatrixProblem)


# -- first order ------------------------------------------------------------


def first_order(p, s: int) -> Scalar:
    """``E_s1 = V_ss``."""
    if _is_matrix(p):
        return Exact.rational(Fraction(p.v[s, s]))
    if isinstance(p, HydrogenS):
        return Exact.rational(models.hydrogen_expectation(p.M, s + 1))
    return models.matrix_element(p, s, s)


# -- banded -----------------------------------------------------------------


def _inverse_gap(p, s: int, m: int) -> Scalar:
    coef, pi_pow = models.energy_gap(p, s, m)
    if isinstance(coef, Fraction):
        if pi_pow == 0:
            return Exact.rational(1 / coef)
        return Exact.inv_pi2(1 / coef)
    g = float(coef) * math.pi**pi_pow
    if abs(g) < DEGENERATE_GAP:
        raise DegenerateGap(f"|E_{s} - E_{m}| = {abs(g):.3g}")
    return Approx(1 / g, 2 * _EPS / abs(g))


def second_order_banded(p, s: int) -> Scalar:
    """Exact finite sum over ``|m - s| <= bandwidth``."""
    w = models.bandwidth(p)
    if w is None or _is_matrix(p):
        raise UnboundedOperator(f"{p!r} has no finite band")
    total: Scalar = ZERO
    for m in range(max(0, s - w), s + w + 1):
        if m == s:
            continue
        sq = models.squared_matrix_element(p, s, m)
        if isinstance(sq, Exact) and sq.is_zero():
            continue
        total = total + sq * _inverse_gap(p, s, m)
    return total


# -- truncated --------------------------------------------------------------


def _pib_linear_terms(k: int, ms: np.ndarray) -> np.ndarray:
    ms = ms[((ms - k) % 2 == 1)]
    d = (k * k - ms * ms).astype(float)
    return 64.0 * k * k * ms.astype(float) ** 2 / (math.pi**6 * d**5)


def _pib_linear_tail(k: int, B: int) -> float:
    """Bound on ``sum_{m > B} |V_km|^2 / |E_k - E_m|`` for ``B > k``.

    For ``m > B``: ``m^2 - k^2 >= m^2 (1 - k^2/B^2)``, so each term is at most
    ``64 k^2 / (pi^6 (1 - k^2/B^2)^5 m^8)``, and the sum of a decreasing
    function over ``m > B`` is bounded by its integral from ``B``.
    """
    shrink = (1 - (k / B) ** 2) ** 5
    return 64.0 * k * k / (7 * math.pi**6 * shrink * B**7)


def _banded_missing_bound(p, s: int, basis: int) -> float:
    """Bound on the banded terms with ``m >= basis``."""
    w = models.bandwidth(p)
    missing = [m for m in range(basis, s + w + 1) if m != s]
    if not missing:
        return 0.0
    if isinstance(p, ParticleInBox):
        # |V| <= 1 and |E_k - E_m| >= (2k + 1) pi^2 for m > k
        k = s + 1
        return len(missing) / ((2 * k + 1) * math.pi**2)
    if isinstance(p, Oscillator):
        # (a + a^dag) restricted to levels <= L has norm <= 2 sqrt(L); gap >= omega
        top = s + p.M
        elem = (2 * math.sqrt(top)) ** p.M * (2 * float(p.omega)) ** (-p.M / 2)
        return len(missing) * elem * elem / float(p.omega)
    raise UnboundedOperator(f"{p!r}")


def _truncated(p, s: int, basis: int) -> tuple[Approx, bool]:
    if basis <= s + 1:
        raise BasisTooSmall(f"basis {basis} must exceed s + 1 = {s + 1}")
    if _is_matrix(p):
        n = min(basis, p.dim)
        sub = _matrixlab().MatrixProblem(p.h0_diag[:n], p.v[:n, :n])
        e2, err = _matrixlab()._e2_float(sub)
        if n < p.dim:
            tail = float(np.sum(p.v[s, n:] ** 2 / np.abs(p.h0_diag[s] - p.h0_diag[n:])))
        else:
            tail = 0.0
        return Approx(float(e2[s]), float(err[s]) + tail), True
    if isinstance(p, ParticleInBox) and p.linear:
        k = s + 1
        ms = np.arange(1, basis + 1)
        ms = ms[ms != k]
        terms = _pib_linear_terms(k, ms)
        val = math.fsum(terms)
        err = 4 * _EPS * float(np.sum(np.abs(terms))) + _pib_linear_tail(k, basis)
        return Approx(val, err), True
    w = models.bandwidth(p)
    if w is not None:
        top = min(basis, s + w + 1)
        terms = []
        for m in range(max(0, s - w), top):
            if m == s:
                continue
            t = models.squared_matrix_element(p, s, m) * _inverse_gap(p, s, m)
            terms.append(t)
        val = math.fsum(t.value() for t in terms)
        err = sum(t.error() for t in terms) + 4 * _EPS * sum(abs(t.value()) for t in terms)
        return Approx(val, err + _banded_missing_bound(p, s, basis)), True
    if isinstance(p, HydrogenS):
        # Bound states only: the continuum is missing, so no rigorous bound exists.
        terms = []
        for m in range(basis):
            if m == s:
                continue
            sq = models.squared_matrix_element(p, s, m)
            terms.append(float(sq.c0 * (1 / models.energy_gap(p, s, m)[0])))
        val = math.fsum(terms)
        # heuristic: remaining bound-state terms decay like the last few
        last = abs(terms[-1]) if terms else 0.0
        return Approx(val, last * basis), False
    raise UnboundedOperator(f"no truncation envelope for {p!r}")


def second_order_truncated(p, s: int, basis: int) -> Approx:
    """Sum over ``m < basis`` with an attached tail bound."""
    return _truncated(p, s, basis)[0]


# -- Dalgarno-Lewis ---------------------------------------------------------


@dataclass(frozen=True)
class RadialFirstOrderState:
    """``u1(r) = sum_j coeffs[j-1] r^j exp(-r/n)``; not normalised with ``u0``.

    ``u0`` is carried alongside as the polynomial ``P`` with the same
    exponential so that ``E2 = N^2 <P|(V - E1)|Q>`` with ``N^2 = 1/<P|P>``.
    """

    n: int
    scale: Fraction
    coeffs: tuple[Fraction, ...]
    u0_coeffs: tuple[Fraction, ...]
    e1: Fraction
    e2: Fraction


def _hydrogen_operator_rows(n: int, top: int, rhs: dict[int, Fraction], gauge: Fraction):
    """Solve ``sum_j c_j L[r^j] = sum_p rhs_p r^p`` for ``c_1..c_top``.

    ``L[r^j] = -j(j-1)/2 r^(j-2) + (j/n - 1) r^(j-1)`` (reduced radial form).
    Coefficient of ``r^p``: ``((p+1)/n - 1) c_{p+1} - (p+2)(p+1)/2 c_{p+2}``.
    The row with ``p + 1 = n`` has no ``c_n`` term and is a consistency
    condition; ``c_n`` is the gauge freedom along ``u0``.
    """
    c = {j: Fraction(0) for j in range(1, top + 2)}
    c[n] = gauge
    for p in range(top - 1, -1, -1):
        lhs_known = -Fraction((p + 2) * (p + 1), 2) * c.get(p + 2, Fraction(0))
        diag = Fraction(p + 1, n) - 1
        r = rhs.get(p, Fraction(0)) - lhs_known
        if diag == 0:
            if r != 0:
                raise AnsatzInsufficient(f"inconsistent row r^{p}: residual {r}")
            continue
        c[p + 1] = r / diag
    return [c[j] for j in range(1, top + 1)]


def _hydrogen_u0(n: int) -> list[Fraction]:
    """Polynomial part of ``u0`` (coefficients of ``r^1..r^n``), leading coefficient 1."""
    return _hydrogen_operator_rows(n, n, {}, Fraction(1))


def _poly_integral(coeffs: dict[int, Fraction], n: int) -> Fraction:
    return models.poly_exp_integral(coeffs, Fraction(2, n))


def _mul(a: dict[int, Fraction], b: dict[int, Fraction]) -> dict[int, Fraction]:
    out: dict[int, Fraction] = {}
    for i, x in a.items():
        if x:
            for j, y in b.items():
                if y:
                    out[i + j] = out.get(i + j, Fraction(0)) + x * y
    return out


def dalgarno_lewis_state(p: HydrogenS, s: int, gauge: Fraction = Fraction(0)) -> RadialFirstOrderState:
    """Exact first-order radial function for hydrogen ``n = s + 1``.

    ``gauge`` is the coefficient of ``r^n`` in ``u1``, i.e. an arbitrary
    admixture of ``u0``; it does not change ``E2``.
    """
    if not isinstance(p, HydrogenS):
        raise TypeError("Dalgarno-Lewis radial solver needs a HydrogenS problem")
    n, M = s + 1, p.M
    P = {j: c for j, c in enumerate(_hydrogen_u0(n), start=1)}
    norm = _poly_integral(_mul(P, P), n)
    rM = {M: Fraction(1)}
    e1 = _poly_integral(_mul(_mul(P, P), rM), n) / norm
    # right-hand side (E1 - r^M) P
    rhs: dict[int, Fraction] = {}
    for j, c in P.items():
        rhs[j] = rhs.get(j, Fraction(0)) + e1 * c
        rhs[j + M] = rhs.get(j + M, Fraction(0)) - c
    top = n + M + 1
    # shift the gauge into the leading-u0 power after solving with c_n = gauge
    coeffs = _hydrogen_operator_rows(n, top, rhs, Fraction(0))
    Q = {j: c for j, c in enumerate(coeffs, start=1)}
    if gauge:
        for j, c in P.items():
            Q[j] = Q.get(j, Fraction(0)) + gauge * c
    vm = {j + M: c for j, c in P.items()}
    for j, c in P.items():
        vm[j] = vm.get(j, Fraction(0)) - e1 * c
    e2 = _poly_integral(_mul(vm, Q), n) / norm
    return RadialFirstOrderState(
        n=n,
        scale=Fraction(1, n),
        coeffs=tuple(Q.get(j, Fraction(0)) for j in range(1, top + 1)),
        u0_coeffs=tuple(P[j] for j in range(1, n + 1)),
        e1=e1,
        e2=e2,
    )


def _oscillator_moment(k: int, omega: Fraction) -> Fraction:
    """``int x^k exp(-omega x^2) dx`` divided by ``sqrt(pi/omega)``."""
    if k % 2:
        return Fraction(0)
    i = k // 2
    dfact = math.prod(range(1, k, 2)) if k else 1
    return Fraction(dfact) / (2 * omega) ** i


def _oscillator_rows(n: int, top: int, omega: Fraction, rhs: dict[int, Fraction], gauge: Fraction):
    """Solve ``sum_j q_j L[x^j] = rhs`` for ``L[x^j] = -j(j-1)/2 x^(j-2) + omega (j - n) x^j``."""
    q = {j: Fraction(0) for j in range(0, top + 3)}
    q[n] = gauge
    for p in range(top, -1, -1):
        known = -Fraction((p + 2) * (p + 1), 2) * q.get(p + 2, Fraction(0))
        r = rhs.get(p, Fraction(0)) - known
        diag = omega * (p - n)
        if diag == 0:
            if r != 0:
                raise AnsatzInsufficient(f"inconsistent row x^{p}: residual {r}")
            continue
        q[p] = r / diag
    return {j: c for j, c in q.items() if c and j <= top}


def _dl_oscillator(p: Oscillator, s: int) -> Fraction:
    if not p.exact:
        raise AnsatzInsufficient("exact Dalgarno-Lewis needs a rational omega")
    n, M, om = s, p.M, p.omega
    P = _oscillator_rows(n, n, om, {}, Fraction(1))

    def integral(poly):
        return sum((c * _oscillator_moment(k, om) for k, c in poly.items()), Fraction(0))

    norm = integral(_mul(P, P))
    e1 = integral(_mul(_mul(P, P), {M: Fraction(1)})) / norm
    rhs: dict[int, Fraction] = {}
    for j, c in P.items():
        rhs[j] = rhs.get(j, Fraction(0)) + e1 * c
        rhs[j + M] = rhs.get(j + M, Fraction(0)) - c
    Q = _oscillator_rows(n, n + M, om, rhs, Fraction(0))
    vm = {j + M: c for j, c in P.items()}
    for j, c in P.items():
        vm[j] = vm.get(j, Fraction(0)) - e1 * c
    return integral(_mul(vm, Q)) / norm


def second_order_dalgarno_lewis(p, s: int) -> Exact:
    """Exact ``E2`` from the polynomial Dalgarno-Lewis solution."""
    if isinstance(p, HydrogenS):
        return Exact.rational(dalgarno_lewis_state(p, s).e2)
    if isinstance(p, Oscillator):
        return Exact.rational(_dl_oscillator(p, s))
    raise AnsatzInsufficient(f"no polynomial ansatz for {p!r}")


# -- grid -------------------------------------------------------------------


@dataclass(frozen=True)
class GridSpec:
    """Uniform grid.  ``rmax`` is the outer radius (hydrogen) or half-width
    (oscillator); ignored for the box.  ``None`` picks a model default.
    ``tol`` is relative to ``max(1, |E2|)``."""

    rmax: float | None = None
    points: int | None = None
    tol: float = 1e-4


def _hydrogen_rmax(p: HydrogenS, s: int, rmax: float | None) -> float:
    n = s + 1
    return rmax if rmax is not None else max(40.0, 12.0 * n * n + 8.0 * p.M * n)


def _grid_operator(p, s: int, rmax: float | None, points: int):
    """Return ``(x, diag, off, potential)`` of the discretised ``H0`` and ``V``."""
    if isinstance(p, HydrogenS):
        n = s + 1
        R = _hydrogen_rmax(p, s, rmax)
        if R < 8 * n * n:
            raise ValueError(f"rmax must be >= 8 n^2 = {8 * n * n}")
        h = R / points
        x = h * np.arange(1, points)
        diag = 1.0 / h**2 - 1.0 / x
        off = np.full(points - 2, -0.5 / h**2)
        return x, diag, off, x**p.M
    if isinstance(p, Oscillator):
        om = float(p.omega)
        L = rmax if rmax is not None else (math.sqrt(2 * s + 1) + 6.0 + p.M) / math.sqrt(om)
        h = 2 * L / points
        x = -L + h * np.arange(1, points)
        diag = 1.0 / h**2 + 0.5 * om * om * x * x
        off = np.full(points - 2, -0.5 / h**2)
        return x, diag, off, x**p.M
    if isinstance(p, ParticleInBox):
        h = 1.0 / points
        x = h * np.arange(1, points)
        diag = np.full(points - 1, 2.0 / h**2)
        off = np.full(points - 2, -1.0 / h**2)
        pot = x if p.linear else np.cos(p.q * math.pi * x)
        return x, diag, off, pot
    raise models.UnsupportedProblem(f"no grid discretisation for {p!r}")


def _tridiagonal_eigenpair(diag: np.ndarray, off: np.ndarray,
                           s: int) -> tuple[float, np.ndarray, float]:
    """``s``-th eigenpair by bisection plus inverse iteration, and the gap to its neighbours."""
    lo = max(0, s - 1)
    w = scipy.linalg.eigvalsh_tridiagonal(diag, off, select="i", select_range=(lo, s + 1))
    e0 = float(w[s - lo])
    gap = float(np.min(np.abs(np.delete(w, s - lo) - e0)))
    shift = e0 * (1 + 1e-13) + 1e-13
    ab = np.zeros((3, diag.size))
    ab[0, 1:] = off
    ab[1] = diag - shift
    ab[2, :-1] = off
    vec = np.ones(diag.size)
    for _ in range(3):
        vec = scipy.linalg.solve_banded((1, 1), ab, vec)
        vec /= np.linalg.norm(vec)
    return e0, vec, gap


def _solve_deflated(diag: np.ndarray, off: np.ndarray, rhs: np.ndarray,
                    psi0: np.ndarray) -> np.ndarray:
    """Solve the singular tridiagonal system ``A x = rhs`` with ``rhs`` orthogonal to ``psi0``.

    The gauge is fixed by ``x[j] = 0`` at the peak of ``|psi0|``; dropping
    row and column ``j`` leaves two nonsingular tridiagonal blocks.
    """
    j = int(np.argmax(np.abs(psi0)))
    x = np.zeros_like(rhs)
    for lo, hi in ((0, j), (j + 1, rhs.size)):
        if hi - lo == 0:
            continue
        ab = np.zeros((3, hi - lo))
        ab[0, 1:] = off[lo:hi - 1]
        ab[1] = diag[lo:hi]
        ab[2, :-1] = off[lo:hi - 1]
        x[lo:hi] = scipy.linalg.solve_banded((1, 1), ab, rhs[lo:hi])
    return x - (psi0 @ x) * psi0


def _grid_once(p, s: int, rmax: float | None, points: int,
               e1_override: float | None) -> tuple[float, float]:
    """``(E2, roundoff)`` on one grid; ``roundoff`` scales with the condition number."""
    x, diag, off, pot = _grid_operator(p, s, rmax, points)
    e0, psi0, gap = _tridiagonal_eigenpair(diag, off, s)
    e1 = float(psi0 @ (pot * psi0)) if e1_override is None else e1_override
    rhs = (e1 - pot) * psi0
    if abs(psi0 @ rhs) > 1e-8 * (np.linalg.norm(rhs) + 1e-300):
        raise ProjectionError("right-hand side not orthogonal to psi0")
    psi1 = _solve_deflated(diag - e0, off, rhs, psi0)
    e2 = float(psi0 @ ((pot - e1) * psi1))
    cond = (np.max(np.abs(diag - e0)) + 2 * np.max(np.abs(off))) / gap
    return e2, 4 * cond * _EPS * abs(e2)


def second_order_grid(p, s: int, grid: GridSpec | None = None, *,
                      e1_override: float | None = None) -> Approx:
    """Finite-difference ``E2``, Richardson-extrapolated in the step size.

    The discretisation error is ``O(h^2)``.  Solves at ``points``,
    ``points/2`` and ``points/4``; the value is the extrapolant of the two
    finest levels and the error estimate is its distance from the extrapolant
    of the two coarsest.  :class:`GridTooCoarse` is raised when that estimate
    exceeds ``grid.tol``.
    """
    grid = grid or GridSpec()
    if grid.points:
        points = grid.points
    elif isinstance(p, HydrogenS):
        points = int(100 * _hydrogen_rmax(p, s, grid.rmax))
    else:
        points = 2000
    points = max(16, points - points % 4)
    runs = [_grid_once(p, s, grid.rmax, points // f, e1_override) for f in (1, 2, 4)]
    e = [r[0] for r in runs]
    fine = e[0] + (e[0] - e[1]) / 3
    coarse = e[1] + (e[1] - e[2]) / 3
    err = abs(fine - coarse) + 2 * runs[0][1] + runs[1][1]
    if err > grid.tol * max(1.0, abs(fine)):
        raise GridTooCoarse(f"Richardson difference {err:.3g} exceeds tol {grid.tol:.3g}")
    return Approx(fine, err)


# -- dispatch ---------------------------------------------------------------

STRATEGIES = ("auto", "banded", "truncated", "dl", "grid", "closed-form")


def second_order(p, s: int, strategy: str = "auto", *, basis: int | None = None,
                 grid: GridSpec | None = None) -> CorrectionRecord:
    """Full record for state ``s``; ``auto`` prefers banded, then DL, then truncated."""
    if strategy not in STRATEGIES:
        raise ValueError(f"unknown strategy {strategy!r}")
    if _is_matrix(p):
        if strategy not in ("auto", "banded", "truncated"):
            raise models.UnsupportedProblem(f"strategy {strategy!r} not available for matrices")
        ml = _matrixlab()
        e2, err = ml._e2_float(p)
        return CorrectionRecord(s, Approx(p.h0_diag[s]), Approx(p.v[s, s]),
                                Approx(float(e2[s]), float(err[s])), "matrix", True)
    if strategy == "auto":
        if models.bandwidth(p) is not None:
            strategy = "banded"
        elif isinstance(p, HydrogenS):
            strategy = "dl"
        else:
            strategy = "truncated"
    rigorous = True
    if strategy == "banded":
        e2, backend = second_order_banded(p, s), "banded"
    elif strategy == "dl":
        try:
            e2, backend = second_order_dalgarno_lewis(p, s), "dalgarno-lewis"
        except AnsatzInsufficient:
            import logging

            logging.getLogger(__name__).warning(
                "polynomial ansatz failed for %r, s=%d; falling back to grid", p, s)
            e2, backend, rigorous = second_order_grid(p, s, grid), "grid", False
    elif strategy == "truncated":
        e2, rigorous = _truncated(p, s, basis or _default_basis(p, s))
        backend = "truncated"
    elif strategy == "grid":
        e2, backend, rigorous = second_order_grid(p, s, grid), "grid", False
    else:
        e2 = models.closed_form_E2(p, s)
        if e2 is None:
            raise UnboundedOperator(f"no closed form known for {p!r}")
        backend = "closed-form"
    return CorrectionRecord(s, models.unperturbed_energy(p, s), first_order(p, s), e2,
                            backend, rigorous)


def _default_basis(p, s: int) -> int:
    if isinstance(p, HydrogenS):
        return s + 60
    return max(4000, 4 * (s + 1))


def compute_series(p, K: int, strategy: str = "auto", **kwargs) -> CorrectionSeries:
    """Records for states ``0..K`` inclusive."""
    if _is_matrix(p) and strategy == "auto":
        return _matrixlab().second_order_all(p)
    recs = tuple(second_order(p, s, strategy, **kwargs) for s in range(K + 1))
    return CorrectionSeries(p, recs)
