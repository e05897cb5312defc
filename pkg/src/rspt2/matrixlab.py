"""Finite-dimensional perturbation experiments.

For ``H0 = diag(h)`` and a real symmetric ``V`` of dimension ``N + 1`` the
second-order corrections sum to zero exactly, and every proper prefix sum
over the lowest states is strictly negative.  This module generates
reproducible random problems, evaluates the corrections directly, checks both
sum rules, and cross-checks against finite differences of exact eigenvalues.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .core import Approx, CorrectionRecord, CorrectionSeries, Exact, RSPTError

__all__ = [
    "MatrixProblem",
    "BadDimension",
    "BranchCrossing",
    "random_problem",
    "second_order_all",
    "trace_identity_check",
    "partial_sum_check",
    "PartialSumCheck",
    "eigen_oracle",
    "fleet",
    "FleetRecord",
]

_EPS = np.finfo(float).eps


class BadDimension(RSPTError):
    pass


class BranchCrossing(RSPTError):
    pass


@dataclass(frozen=True, eq=False)
class MatrixProblem:
    h0_diag: np.ndarray
    v: np.ndarray
    seed: int | None = None

    def __post_init__(self) -> None:
        h = np.array(self.h0_diag, dtype=float)
        v = np.array(self.v, dtype=float)
        if h.ndim != 1 or v.shape != (h.size, h.size):
            raise BadDimension(f"shape mismatch: h0 {h.shape}, v {v.shape}")
        if h.size < 1:
            raise BadDimension("empty problem")
        if h.size > 1 and not np.all(np.diff(h) > 0):
            raise ValueError("h0_diag must be strictly ascending")
        if not np.array_equal(v, v.T):
            raise ValueError("v must be exactly symmetric")
        h.setflags(write=False)
        v.setflags(write=False)
        object.__setattr__(self, "h0_diag", h)
        object.__setattr__(self, "v", v)

    @property
    def dim(self) -> int:
        return self.h0_diag.size

    @property
    def min_gap(self) -> float:
        return float(np.min(np.diff(self.h0_diag))) if self.dim > 1 else math.inf

    def hamiltonian(self, lam: float) -> np.ndarray:
        return np.diag(self.h0_diag) + lam * self.v

    def to_json(self) -> dict:
        return {
            "model": "matrix",
            "h0_diag": self.h0_diag.tolist(),
            "v": self.v.tolist(),
            "seed": self.seed,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "MatrixProblem":
        return cls(np.asarray(obj["h0_diag"]), np.asarray(obj["v"]), obj.get("seed"))


def random_problem(dim: int, seed: int, gap_min: float = 0.1) -> MatrixProblem:
    """Seeded random problem drawn from a Philox counter-based generator.

    ``h0`` is a sorted uniform(0, dim) sample pushed apart to honour
    ``gap_min``; ``V`` is ``(A + A.T)/2`` for standard-normal ``A``.
    """
    if dim < 2:
        raise BadDimension(f"dim must be >= 2, got {dim}")
    if not gap_min > 0:
        raise ValueError("gap_min must be positive")
    rng = np.random.Generator(np.random.Philox(seed))
    h = np.sort(rng.uniform(0.0, dim, size=dim))
    for i in range(1, dim):
        if h[i] - h[i - 1] < gap_min:
            h[i] = h[i - 1] + gap_min
    a = rng.standard_normal((dim, dim))
    v = (a + a.T) / 2
    return MatrixProblem(h, v, seed)


def _e2_float(p: MatrixProblem) -> tuple[np.ndarray, np.ndarray]:
    h, v = p.h0_diag, p.v
    gaps = h[:, None] - h[None, :]
    np.fill_diagonal(gaps, np.inf)
    terms = v * v / gaps  # terms[n, m] = |V_mn|^2 / (E_n - E_m)
    e2 = np.array([math.fsum(row) for row in terms])
    # each term carries ~2 ulps; fsum adds no further error
    err = 3 * _EPS * np.abs(terms).sum(axis=1)
    return e2, err


def _e2_exact(p: MatrixProblem) -> list[Fraction]:
    h = [Fraction(x) for x in p.h0_diag]
    v = [[Fraction(x) for x in row] for row in p.v]
    n = len(h)
    return [
        sum((v[i][j] * v[i][j] / (h[i] - h[j]) for j in range(n) if j != i), Fraction(0))
        for i in range(n)
    ]


def second_order_all(p: MatrixProblem, exact: bool = False) -> CorrectionSeries:
    """Corrections for every state by direct summation over the finite basis.

    With ``exact=True`` the float inputs are converted to rationals without
    loss and the sums are carried out in rational arithmetic.
    """
    recs = []
    if exact:
        for s, val in enumerate(_e2_exact(p)):
            recs.append(CorrectionRecord(
                s, Exact.rational(Fraction(p.h0_diag[s])), Exact.rational(Fraction(p.v[s, s])),
                Exact.rational(val), "matrix", True))
    else:
        e2, err = _e2_float(p)
        for s in range(p.dim):
            recs.append(CorrectionRecord(
                s, Approx(p.h0_diag[s]), Approx(p.v[s, s]), Approx(e2[s], err[s]), "matrix", True))
    return CorrectionSeries(p, tuple(recs))


def trace_identity_check(p: MatrixProblem) -> float:
    """``|sum_n E_n2|`` in float arithmetic."""
    e2, _ = _e2_float(p)
    return abs(math.fsum(e2))


def relative_trace_residual(p: MatrixProblem) -> float:
    e2, _ = _e2_float(p)
    scale = float(np.sum(np.abs(e2)))
    return abs(math.fsum(e2)) / scale if scale else 0.0


@dataclass(frozen=True)
class PartialSumCheck:
    ok: bool
    partial_sums: tuple[float, ...]
    residual: float
    note: str = ""

    def __bool__(self) -> bool:
        return self.ok


def partial_sum_check(p: MatrixProblem, rtol: float = 1e-12) -> PartialSumCheck:
    """Strict negativity of ``S_K`` for ``K < N`` and ``S_N = 0``.

    A problem with no off-diagonal coupling passes with an annotation, since
    every prefix sum is then identically zero.
    """
    e2, _ = _e2_float(p)
    sums = np.array([math.fsum(e2[: k + 1]) for k in range(p.dim)])
    scale = float(np.sum(np.abs(e2)))
    residual = abs(sums[-1])
    off = p.v - np.diag(np.diag(p.v))
    if not np.any(off):
        return PartialSumCheck(bool(np.all(sums == 0)), tuple(sums), residual,
                               "degenerate (zero coupling)")
    ok = bool(np.all(sums[:-1] < 0)) and residual <= rtol * scale
    return PartialSumCheck(ok, tuple(sums), residual)


def _stencil(p: MatrixProblem, h: float) -> np.ndarray:
    ev = {k: np.linalg.eigvalsh(p.hamiltonian(k * h)) for k in (-2, -1, 0, 1, 2)}
    return (-ev[2] + 16 * ev[1] - 30 * ev[0] + 16 * ev[-1] - ev[-2]) / (12 * h * h)


def eigen_oracle(p: MatrixProblem, lambda_step: float = 1e-3,
                 richardson: bool = True) -> np.ndarray:
    """Second-order coefficients from a five-point stencil on exact eigenvalues.

    With ``richardson`` the stencil is also evaluated at half the step and the
    leading ``h**4`` truncation term is eliminated.  Branches are matched by
    sorted order, which is valid while the Weyl bound ``2 * step * ||V||_2``
    stays below half the smallest unperturbed gap.
    """
    h = lambda_step
    norm = float(np.linalg.norm(p.v, 2))
    if p.dim > 1 and 2 * h * norm >= p.min_gap / 2:
        raise BranchCrossing(
            f"step {h} too large: 2*h*||V|| = {2 * h * norm:.3g} >= gap/2 = {p.min_gap / 2:.3g}")
    d2 = _stencil(p, h)
    if richardson:
        d2 = (16 * _stencil(p, h / 2) - d2) / 15
    return d2 / 2


@dataclass(frozen=True)
class FleetRecord:
    seed: int
    dim: int
    residual: float
    min_partial_margin: float
    oracle_error: float

    def to_json(self) -> dict:
        return {
            "seed": self.seed,
            "dim": self.dim,
            "residual": self.residual,
            "min_partial_margin": self.min_partial_margin,
            "oracle_error": self.oracle_error,
        }


def fleet(count: int, dims: Sequence[int] | Iterable[int], seed: int,
          gap_min: float = 0.1, lambda_step: float = 1e-3) -> list[FleetRecord]:
    """Run ``count`` problems with seeds ``seed, seed+1, ...`` cycling over ``dims``.

    ``residual`` is the relative trace residual; ``min_partial_margin`` is
    ``min_{K<N} (-S_K) / sum|E_n2|`` (positive when the inequality holds);
    ``oracle_error`` is the max deviation from :func:`eigen_oracle` relative
    to ``max|E_n2|``.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    dims = list(dims)
    if not dims or min(dims) < 2:
        raise BadDimension("dims must be >= 2")
    out = []
    for i in range(count):
        sd, dim = seed + i, dims[i % len(dims)]
        p = random_problem(dim, sd, gap_min)
        e2, _ = _e2_float(p)
        scale = float(np.sum(np.abs(e2)))
        sums = np.cumsum(e2)
        margin = float(np.min(-sums[:-1])) / scale
        oracle = eigen_oracle(p, lambda_step)
        oerr = float(np.max(np.abs(oracle - e2)) / np.max(np.abs(e2)))
        out.append(FleetRecord(sd, dim, relative_trace_residual(p), margin, oerr))
    return out
