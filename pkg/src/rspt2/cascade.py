"""Cascade decomposition of a sequence of second-order corrections.

With ``alpha = -E_02 > 0`` each excited correction is written as

    E_k2 = beta_k (1 - beta_{k-1}) ... (1 - beta_1) alpha,

so that ``S_K = -alpha * prod_{k<=K} (1 - beta_k)``.  Negative prefix sums
force ``beta_k < 1``; only the last entry of a complete finite problem, where
``S_N = 0``, reaches ``beta_N = 1``.  Non-negative ``beta_k`` are parametrised
as ``sin^2 theta_k`` (factor ``cos^2 theta_k``), negative ones as
``-tan^2 theta_k`` (factor ``sec^2 theta_k``), with ``theta_k`` in
``[0, pi/2)``.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np

from .core import CorrectionSeries, Exact, RSPTError, Scalar
from .sumrules import InsufficientData, _extrapolate_zero, partial_sums

__all__ = [
    "GroundStateNotNegative",
    "PartialSumNonNegative",
    "CascadeDecomposition",
    "ProductDiagnostic",
    "decompose",
    "recursive_betas",
    "thetas",
    "theta",
    "reconstruct",
    "reconstructed_sums",
    "product_diagnostic",
    "beta_statistics",
]

SIN, TAN = "sin-branch", "tan-branch"


class GroundStateNotNegative(RSPTError):
    pass


class PartialSumNonNegative(RSPTError):
    def __init__(self, K: int):
        super().__init__(f"partial sum S_{K} is not negative")
        self.K = K


def _branch(beta: Scalar) -> str:
    sg = beta.sign()
    if sg is None:
        sg = -1 if beta.value() < 0 else 1
    return TAN if sg < 0 else SIN


def theta(beta: Scalar | float) -> float:
    b = float(beta.value()) if isinstance(beta, Scalar) else float(beta)
    if b >= 0:
        return math.asin(math.sqrt(min(b, 1.0)))
    return math.atan(math.sqrt(-b))


@dataclass(frozen=True)
class CascadeDecomposition:
    alpha: Scalar
    betas: tuple[Scalar, ...]
    thetas: tuple[float, ...]
    branches: tuple[str, ...]

    def __len__(self) -> int:
        return len(self.betas)

    def factors(self) -> list[Scalar]:
        return [1 - b for b in self.betas]

    def to_json(self) -> dict:
        recon = reconstructed_sums(self)
        return {
            "alpha": self.alpha.to_json(),
            "entries": [
                {
                    "k": k,
                    "beta": b.to_json(),
                    "branch": br,
                    "theta": th,
                    "reconstructed_sum": recon[k].to_json(),
                }
                for k, (b, th, br) in enumerate(zip(self.betas, self.thetas, self.branches), start=1)
            ],
        }

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["k", "beta", "beta_exact", "theta", "branch", "S_k"])
        recon = reconstructed_sums(self)
        for k, (b, th, br) in enumerate(zip(self.betas, self.thetas, self.branches), start=1):
            S = recon[k]
            w.writerow([k, repr(b.value()), str(b) if b.is_exact else "", repr(th), br,
                        repr(S.value())])
        return buf.getvalue()


def decompose(series: CorrectionSeries) -> CascadeDecomposition:
    """``alpha = -E_02`` and ``beta_k = E_k2 / (-S_{k-1})``.

    Dividing by the previous prefix sum is algebraically the same as the
    nested product form, since ``-S_{k-1} = alpha * prod_{j<k} (1 - beta_j)``.
    """
    terms = series.e2 if isinstance(series, CorrectionSeries) else list(series)
    if not terms:
        raise GroundStateNotNegative("empty series")
    e0 = terms[0]
    if e0.sign() != -1:
        raise GroundStateNotNegative(f"E_02 = {e0} is not strictly negative")
    sums = partial_sums(series)
    betas = []
    for k in range(1, len(terms)):
        prev = sums[k - 1]
        if prev.sign() != -1:
            raise PartialSumNonNegative(k - 1)
        b = terms[k] / (-prev)
        # beta_k >= 1 iff S_k >= 0; a complete finite problem may end on S_N = 0
        sg = sums[k].sign()
        if sg == 1 or (sg == 0 and k < len(terms) - 1):
            raise PartialSumNonNegative(k)
        betas.append(b)
    return CascadeDecomposition(
        alpha=-e0,
        betas=tuple(betas),
        thetas=tuple(theta(b) for b in betas),
        branches=tuple(_branch(b) for b in betas),
    )


def recursive_betas(series: CorrectionSeries) -> list[Scalar]:
    """``beta_k`` from the nested form ``E_k2 / (alpha prod_{j<k}(1 - beta_j))``."""
    terms = series.e2 if isinstance(series, CorrectionSeries) else list(series)
    alpha = -terms[0]
    betas: list[Scalar] = []
    prod: Scalar = Exact.rational(1)
    for t in terms[1:]:
        b = t / (alpha * prod)
        betas.append(b)
        prod = prod * (1 - b)
    return betas


def thetas(d: CascadeDecomposition) -> list[float]:
    return list(d.thetas)


def reconstruct(d: CascadeDecomposition, K: int) -> Scalar:
    """``-alpha * prod_{k<=K} (1 - beta_k)``, using ``1 - beta`` directly so exactness survives."""
    if K < 0 or K > len(d.betas):
        raise ValueError(f"K must lie in 0..{len(d.betas)}")
    out: Scalar = -d.alpha
    for b in d.betas[:K]:
        out = out * (1 - b)
    return out


def reconstructed_sums(d: CascadeDecomposition) -> list[Scalar]:
    """``reconstruct(d, K)`` for every ``K = 0..len(d)`` in one pass."""
    out: list[Scalar] = [-d.alpha]
    for b in d.betas:
        out.append(out[-1] * (1 - b))
    return out


@dataclass(frozen=True)
class ProductDiagnostic:
    trend: str
    evidence: tuple[tuple[int, float], ...]
    limit: float


def product_diagnostic(d: CascadeDecomposition, zero_atol: float = 1e-6,
                       min_betas: int = 20) -> ProductDiagnostic:
    """Behaviour of ``P_K = prod_{k<=K}(1 - beta_k)`` as ``K`` grows.

    ``growing`` when the tail is monotone increasing past 1, ``vanishing``
    when it reaches or extrapolates to zero, ``bounded-away`` otherwise.
    """
    n = len(d.betas)
    if n < min_betas:
        raise InsufficientData(f"need at least {min_betas} betas, got {n}")
    one_minus = np.clip([1.0 - b.value() for b in d.betas], 0.0, None)
    with np.errstate(divide="ignore"):
        logP = np.cumsum(np.log(one_minus))
    P = np.exp(logP)
    idx = np.unique(np.linspace(0, n - 1, 6).astype(int))
    evidence = tuple((int(i) + 1, float(P[i])) for i in idx)
    tail = logP[-max(3, n // 3):]
    if np.all(np.diff(tail) > 0) and P[-1] > 1:
        return ProductDiagnostic("growing", evidence, math.inf)
    if P[-1] <= 1e-10 * np.max(P):
        return ProductDiagnostic("vanishing", evidence, float(P[-1]))
    K = np.arange(1, n + 1, dtype=float)
    a, spread = _extrapolate_zero(K, P)
    if abs(a) <= zero_atol + 3 * spread:
        return ProductDiagnostic("vanishing", evidence, a)
    return ProductDiagnostic("bounded-away", evidence, a)


def beta_statistics(d: CascadeDecomposition) -> dict:
    """Counts and magnitudes of the two branches."""
    vals = np.array([b.value() for b in d.betas])
    neg = vals < 0
    return {
        "count": int(vals.size),
        "fraction_negative": float(neg.mean()) if vals.size else 0.0,
        "max_beta": float(vals.max()) if vals.size else None,
        "min_beta": float(vals.min()) if vals.size else None,
        "mean_abs_beta": float(np.abs(vals).mean()) if vals.size else None,
    }
