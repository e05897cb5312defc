"""Prefix sums of second-order corrections and what they say about a problem.

For any Hamiltonian the prefix sums ``S_K = sum_{s<=K} E_s2`` over the lowest
states are strictly negative.  For a finite ``(N+1)``-dimensional problem the
full sum ``S_N`` vanishes.  Infinite problems split into two classes:
corrections that are all negative (``S_K`` keeps decreasing) and corrections
that turn positive beyond some state, where ``S_K`` can climb back to zero.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from numpy.polynomial import Polynomial

from . import models
from .core import Approx, CorrectionSeries, RSPTError, Scalar, ZERO, compare

__all__ = [
    "MissingGroundState",
    "InsufficientData",
    "NoisyInput",
    "InequalityResult",
    "SumRuleReport",
    "AsymptoticFit",
    "partial_sums",
    "check_inequality",
    "limit_estimate",
    "is_divergent",
    "sign_class",
    "ordering_check",
    "classify",
    "asymptotic_fit",
    "REFERENCE_LEADING_TERMS",
    "reference_leading_term",
    "compare_with_reference",
]


class MissingGroundState(RSPTError):
    pass


class InsufficientData(RSPTError):
    pass


class NoisyInput(RSPTError):
    pass


def _e2_list(series) -> list[Scalar]:
    if isinstance(series, CorrectionSeries):
        if not series.records or series.records[0].state != 0:
            raise MissingGroundState("series must start at state 0")
        return series.e2
    return list(series)


def partial_sums(series: CorrectionSeries) -> list[Scalar]:
    """Running sums ``S_K`` for ``K = 0..len-1``; exact when every term is."""
    terms = _e2_list(series)
    if not terms:
        raise MissingGroundState("empty series")
    out, acc = [], ZERO
    for t in terms:
        acc = acc + t
        out.append(acc)
    return out


@dataclass(frozen=True)
class InequalityResult:
    holds: bool
    first_violation: int | None = None
    undecided: tuple[int, ...] = ()

    def __bool__(self) -> bool:
        return self.holds


def check_inequality(series: CorrectionSeries, sums: list[Scalar] | None = None) -> InequalityResult:
    """Is every prefix sum strictly negative?

    A violation is claimed only when the whole interval of ``S_K`` is ``>= 0``;
    intervals straddling zero are listed in ``undecided``.
    """
    sums = partial_sums(series) if sums is None else sums
    undecided = []
    for K, S in enumerate(sums):
        sg = S.sign()
        if sg is None:
            lo, hi = S.interval()
            if lo >= 0:
                return InequalityResult(False, K, tuple(undecided))
            undecided.append(K)
        elif sg >= 0:
            return InequalityResult(False, K, tuple(undecided))
    return InequalityResult(True, None, tuple(undecided))


def is_divergent(series: CorrectionSeries) -> bool:
    """All corrections in the last third negative with non-decreasing magnitude."""
    terms = _e2_list(series)
    if len(terms) < 3:
        return False
    tail = [t.value() for t in terms[-max(3, len(terms) // 3):]]
    if any(v >= 0 for v in tail):
        return False
    mags = [-v for v in tail]
    return all(b >= a for a, b in zip(mags, mags[1:]))


def _is_complete_matrix(series) -> bool:
    from .matrixlab import MatrixProblem

    p = getattr(series, "problem", None)
    return isinstance(p, MatrixProblem) and len(series) == p.dim


def _extrapolate_zero(K: np.ndarray, y: np.ndarray, deg: int = 2) -> tuple[float, float]:
    """Fit ``y = a + b/K + c/K^2`` over several tail windows; return ``(a, spread)``."""
    n = len(K)
    estimates = []
    for frac in (3, 4, 2):
        w = max(deg + 2, n // frac)
        x = 1.0 / K[-w:]
        fit = Polynomial.fit(x, y[-w:], deg)
        estimates.append(float(fit(0.0)))
    a = estimates[0]
    return a, max(abs(e - a) for e in estimates)


def limit_estimate(series: CorrectionSeries, min_records: int = 20) -> Approx:
    """Extrapolated ``lim S_K``.

    Fits ``S_K = a + b/K + c/K^2`` over the last third of the data and reports
    ``a`` with the spread across fit windows as the error.  A divergent
    series returns ``-inf``.  A complete finite matrix series returns ``S_N``.
    """
    sums = partial_sums(series)
    if _is_complete_matrix(series):
        S = sums[-1]
        return Approx(S.value(), S.error())
    if len(sums) < min_records:
        raise InsufficientData(f"need at least {min_records} records, got {len(sums)}")
    if is_divergent(series):
        return Approx(-math.inf, 0.0)
    K = np.arange(1, len(sums) + 1, dtype=float)
    y = np.array([S.value() for S in sums])
    a, spread = _extrapolate_zero(K, y)
    input_err = max(S.error() for S in sums[-len(sums) // 3:])
    return Approx(a, spread + input_err + 1e-15 * abs(y[-1]))


def sign_class(series: CorrectionSeries) -> tuple[str, int | None]:
    """``("all-negative", None)``, ``("eventually-positive", k0)`` or ``("mixed", None)``.

    ``k0`` is the first state from which every correction is non-negative; the
    positive tail must cover at least half the excited states on record.
    """
    terms = _e2_list(series)
    signs = [t.sign() for t in terms[1:]]
    if all(sg is not None and sg <= 0 for sg in signs):
        return "all-negative", None
    k0 = len(terms)
    for s in range(len(terms) - 1, 0, -1):
        sg = signs[s - 1]
        if sg is None or sg < 0:
            break
        k0 = s
    tail = len(terms) - k0
    if k0 < len(terms) and tail >= max(1, (len(terms) - 1) // 2):
        return "eventually-positive", k0
    return "mixed", None


def _strictly_greater(a: Scalar, b: Scalar) -> bool:
    return compare(a, b, rtol=0.0) == "greater"


def ordering_check(series: CorrectionSeries, k0: int = 1) -> bool:
    """``|E_02| > E_k0,2 > E_k0+1,2 > ...`` over the positive tail."""
    terms = _e2_list(series)
    chain = [-terms[0]] + list(terms[k0:])
    return all(_strictly_greater(a, b) for a, b in zip(chain, chain[1:]))


@dataclass(frozen=True)
class SumRuleReport:
    partial_sums: tuple[Scalar, ...]
    limit: Approx | None
    verdict: str
    sign_class: str
    k0: int | None
    ordering_holds: bool
    inequality: InequalityResult = field(default_factory=lambda: InequalityResult(True))

    @property
    def sign_label(self) -> str:
        return f"eventually-positive({self.k0})" if self.k0 is not None else self.sign_class

    def to_json(self) -> dict:
        lim = None
        if self.limit is not None:
            lim = {"approx": {"value": _json_float(self.limit.value_), "err": _json_float(self.limit.err)}}
        return {
            "partial_sums": [S.to_json() for S in self.partial_sums],
            "limit": lim,
            "verdict": self.verdict,
            "sign_class": self.sign_class,
            "k0": self.k0,
            "ordering_holds": self.ordering_holds,
            "inequality_holds": self.inequality.holds,
            "first_violation": self.inequality.first_violation,
        }

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["K", "S_K", "err", "exact"])
        for K, S in enumerate(self.partial_sums):
            w.writerow([K, repr(S.value()), repr(S.error()), str(S) if S.is_exact else ""])
        return buf.getvalue()


def _json_float(x: float):
    if math.isinf(x):
        return "-inf" if x < 0 else "inf"
    return x


def classify(series: CorrectionSeries, zero_rtol: float = 1e-6) -> SumRuleReport:
    """Sign class, limit verdict and ordering for a series of at least 3 records.

    The verdict is ``equality-zero`` when the extrapolated limit is within
    ``max(3 err, zero_rtol |E_02|)`` of zero, ``inequality-strict`` when it is
    certainly negative (or the series diverges), ``undetermined`` otherwise.
    """
    terms = _e2_list(series)
    if len(terms) < 3:
        raise InsufficientData("classify needs at least 3 records")
    sums = partial_sums(series)
    ineq = check_inequality(series, sums)
    cls, k0 = sign_class(series)
    try:
        limit = limit_estimate(series)
    except InsufficientData:
        limit = None
    scale = abs(terms[0].value())
    if not ineq.holds or limit is None:
        verdict = "undetermined"
    elif math.isinf(limit.value_):
        verdict = "inequality-strict"
    elif abs(limit.value_) <= max(3 * limit.err, zero_rtol * scale):
        verdict = "equality-zero"
    elif limit.value_ + limit.err < 0:
        verdict = "inequality-strict"
    else:
        verdict = "undetermined"
    ordering = ordering_check(series, k0) if cls == "eventually-positive" else False
    return SumRuleReport(tuple(sums), limit, verdict, cls, k0, ordering, ineq)


# -- large-n asymptotics ----------------------------------------------------


@dataclass(frozen=True)
class AsymptoticFit:
    p: int
    c: float
    err: float

    def to_json(self) -> dict:
        return {"p": self.p, "c": self.c, "err": self.err}


def asymptotic_fit(series: CorrectionSeries, p_hint: int | None = None,
                   min_records: int = 30, noise_rtol: float = 1e-6) -> AsymptoticFit:
    """Leading behaviour ``E_n2 ~ c n^p`` in the model's own quantum number.

    ``p`` comes from ``log(E(n)/E(n/2))/log 2`` at the largest ``n``, rounded,
    unless ``p_hint`` is given.  ``c`` is the ``1/n -> 0`` intercept of a cubic
    fit to ``E(n)/n^p`` in ``1/n``, with the spread over fit windows as error.
    """
    recs = list(series.records)
    if len(recs) < min_records:
        raise InsufficientData(f"need at least {min_records} records, got {len(recs)}")
    for r in recs:
        v, e = r.e2.value(), r.e2.error()
        if e > noise_rtol * abs(v):
            raise NoisyInput(f"state {r.state}: error {e:.3g} too large for the fit")
    prob = series.problem
    ns = np.array([models.quantum_number(prob, r.state) for r in recs], dtype=float)
    ys = np.array([r.e2.value() for r in recs])
    keep = ns > 0
    ns, ys = ns[keep], ys[keep]
    if p_hint is None:
        n_hi = ns[-1]
        i_lo = int(np.argmin(np.abs(ns - n_hi / 2)))
        ratio = ys[-1] / ys[i_lo]
        p = int(round(math.log(abs(ratio)) / math.log(n_hi / ns[i_lo])))
    else:
        p = int(p_hint)
    scaled = ys / ns**p
    estimates = []
    for w in (len(ns) // 3, len(ns) // 4, len(ns) // 2):
        w = max(w, 6)
        fit = Polynomial.fit(1.0 / ns[-w:], scaled[-w:], 3)
        estimates.append(float(fit(0.0)))
    c = estimates[0]
    return AsymptoticFit(p, c, max(abs(e - c) for e in estimates))


# Tabulated large-n leading terms (power, coefficient) quoted in the
# literature for V = x^M on the oscillator and V = r^M on hydrogen s states.
REFERENCE_LEADING_TERMS: dict[tuple[str, int], tuple[int, Fraction]] = {
    ("oscillator", 3): (2, Fraction(-7, 4)),
    ("oscillator", 4): (3, Fraction(-17, 4)),
    ("oscillator", 5): (4, Fraction(-187, 16)),
    ("oscillator", 6): (5, Fraction(-393, 16)),
    ("hydrogen-s", 1): (6, Fraction(-7, 8)),
    ("hydrogen-s", 2): (10, Fraction(-143, 16)),
    ("hydrogen-s", 3): (14, Fraction(-7365, 128)),
    ("hydrogen-s", 4): (18, Fraction(-80123, 256)),
}


def reference_leading_term(p) -> tuple[int, Fraction] | None:
    if isinstance(p, models.Oscillator) and p.omega == 1:
        return REFERENCE_LEADING_TERMS.get(("oscillator", p.M))
    if isinstance(p, models.HydrogenS):
        return REFERENCE_LEADING_TERMS.get(("hydrogen-s", p.M))
    return None


def compare_with_reference(fit: AsymptoticFit, problem, rtol: float = 0.02) -> str | None:
    """``"MATCH"``/``"MISMATCH"`` against the tabulated term, ``None`` if none is tabulated."""
    ref = reference_leading_term(problem)
    if ref is None:
        return None
    p_ref, c_ref = ref
    ok = fit.p == p_ref and abs(fit.c - float(c_ref)) <= rtol * abs(float(c_ref))
    return "MATCH" if ok else "MISMATCH"
