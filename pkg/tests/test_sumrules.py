import math
from fractions import Fraction

import pytest

from rspt2 import engine, matrixlab, sumrules
from rspt2.core import Approx, CorrectionSeries, Exact
from rspt2.models import PIB_LINEAR, HydrogenS, Oscillator, ParticleInBox


def closed_series(p, K):
    return engine.compute_series(p, K, "closed-form")


def exact_series(p, K):
    return engine.compute_series(p, K)


def test_partial_sums_exact():
    ser = CorrectionSeries.from_e2([Fraction(-3), Fraction(1), Fraction(1, 2)])
    assert sumrules.partial_sums(ser) == [Exact.rational(-3), Exact.rational(-2),
                                         Exact.rational(Fraction(-3, 2))]


def test_cos_pi_telescoping_partial_sums():
    # S_K over states k = 1..K equals -1/(4 pi^2 (2K + 1))
    sums = sumrules.partial_sums(closed_series(ParticleInBox(1), 199))
    for K in range(1, 201):
        assert sums[K - 1] == Exact.inv_pi2(Fraction(-1, 4 * (2 * K + 1)))


def test_inequality_violation_reported():
    ser = CorrectionSeries.from_e2([-1, Fraction(1, 2), Fraction(1, 2), 1])
    res = sumrules.check_inequality(ser)
    assert not res.holds and res.first_violation == 2


def test_inequality_undecided_interval():
    ser = CorrectionSeries.from_e2([Approx(-1.0, 1e-3), Approx(1.0, 1e-3)])
    res = sumrules.check_inequality(ser)
    assert res.holds and res.undecided == (1,)


def test_missing_ground_state():
    with pytest.raises(sumrules.MissingGroundState):
        sumrules.partial_sums(CorrectionSeries(None, ()))


def test_sign_classes():
    assert sumrules.sign_class(exact_series(Oscillator(4), 20)) == ("all-negative", None)
    assert sumrules.sign_class(exact_series(ParticleInBox(1), 20)) == ("eventually-positive", 1)
    assert sumrules.sign_class(exact_series(ParticleInBox(2), 20)) == ("eventually-positive", 2)
    mixed = CorrectionSeries.from_e2([-1, 0.1, -0.01, 0.1, -0.01, 0.001])
    assert sumrules.sign_class(mixed)[0] == "mixed"


def test_ordering_in_positive_class():
    assert sumrules.ordering_check(exact_series(ParticleInBox(1), 50), 1)
    assert sumrules.ordering_check(closed_series(PIB_LINEAR, 50), 1)
    bad = CorrectionSeries.from_e2([-1, Fraction(1, 10), Fraction(1, 5)])
    assert not sumrules.ordering_check(bad, 1)


def test_classify_box_cosine():
    rep = sumrules.classify(exact_series(ParticleInBox(1), 999))
    assert rep.verdict == "equality-zero"
    assert rep.sign_label == "eventually-positive(1)"
    assert rep.ordering_holds and rep.inequality.holds


def test_classify_oscillator_divergent():
    rep = sumrules.classify(exact_series(Oscillator(4), 199))
    assert rep.verdict == "inequality-strict"
    assert rep.sign_class == "all-negative"
    assert rep.limit.value() == -math.inf
    assert rep.ordering_holds is False


def test_classify_complete_matrix():
    p = matrixlab.random_problem(10, 42)
    rep = sumrules.classify(engine.compute_series(p, 9))
    assert abs(rep.partial_sums[-1].value()) <= 1e-12
    assert all(S.value() < 0 for S in rep.partial_sums[:-1])
    assert rep.verdict == "equality-zero"


def test_limit_needs_data():
    with pytest.raises(sumrules.InsufficientData):
        sumrules.limit_estimate(closed_series(PIB_LINEAR, 5))


def test_limit_of_convergent_negative_series():
    # S_K = -1 - 1/(K+1): limit -1, inequality strict
    vals = [Fraction(-2)] + [Fraction(1, k) - Fraction(1, k + 1) for k in range(1, 200)]
    rep = sumrules.classify(CorrectionSeries.from_e2(vals))
    assert rep.limit.value() == pytest.approx(-1.0, abs=1e-6)
    assert rep.verdict == "inequality-strict"


def test_csv_and_json_shapes():
    rep = sumrules.classify(exact_series(ParticleInBox(2), 30))
    lines = rep.to_csv().splitlines()
    assert lines[0] == "K,S_K,err,exact" and len(lines) == 32
    doc = rep.to_json()
    assert doc["k0"] == 2 and doc["sign_class"] == "eventually-positive"


# -- asymptotics ------------------------------------------------------------


def test_oscillator_exact_polynomials():
    # classical closed forms for unit frequency
    for n in range(40):
        assert exact_series(Oscillator(3), 39)[n].e2 == Exact.rational(Fraction(-(30 * n * n + 30 * n + 11), 8))
    ser = exact_series(Oscillator(4), 39)
    for n in range(40):
        assert ser[n].e2 == Exact.rational(Fraction(-(34 * n**3 + 51 * n * n + 59 * n + 21), 8))


@pytest.mark.parametrize("M,p,c", [(3, 2, -15 / 4), (4, 3, -17 / 4), (5, 4, -315 / 16), (6, 5, -393 / 16)])
def test_oscillator_fit(M, p, c):
    fit = sumrules.asymptotic_fit(exact_series(Oscillator(M), 200))
    assert fit.p == p
    assert fit.c == pytest.approx(c, rel=1e-6)


def test_reference_flags():
    fit3 = sumrules.asymptotic_fit(exact_series(Oscillator(3), 200))
    fit4 = sumrules.asymptotic_fit(exact_series(Oscillator(4), 200))
    assert sumrules.compare_with_reference(fit3, Oscillator(3)) == "MISMATCH"
    assert sumrules.compare_with_reference(fit4, Oscillator(4)) == "MATCH"
    assert sumrules.compare_with_reference(fit4, Oscillator(4, Fraction(2))) is None


def test_hydrogen_fit_linear():
    fit = sumrules.asymptotic_fit(exact_series(HydrogenS(1), 59))
    assert fit.p == 6 and fit.c == pytest.approx(-7 / 8, rel=1e-6)


def test_fit_rejects_noisy_or_short_input():
    with pytest.raises(sumrules.InsufficientData):
        sumrules.asymptotic_fit(exact_series(Oscillator(4), 10))
    noisy = CorrectionSeries.from_e2([Approx(-float(n + 1) ** 3, 1.0) for n in range(40)])
    with pytest.raises(sumrules.NoisyInput):
        sumrules.asymptotic_fit(noisy)
