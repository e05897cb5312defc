"""Matrix elements against direct numerical integration of the eigenfunctions."""

import math
from fractions import Fraction

import numpy as np
import pytest
from scipy import integrate, special

from rspt2 import models
from rspt2.core import Approx, Exact
from rspt2.models import PIB_LINEAR, HydrogenS, Oscillator, ParticleInBox

N_MAX = 30
PAIRS = [(a, b) for a in range(0, N_MAX + 1, 3) for b in range(a, N_MAX + 1, 4)]


def _close(exact_value, numeric, scale):
    """Relative 1e-10, with an absolute floor for elements that vanish exactly."""
    return abs(exact_value - numeric) <= 1e-10 * max(abs(exact_value), 1e-4 * scale)


# -- box --------------------------------------------------------------------


def _box_element(f, k, m):
    # 2 sin(k pi x) sin(m pi x) = cos((k - m) pi x) - cos((k + m) pi x)
    def part(j):
        if j == 0:
            return integrate.quad(f, 0, 1, epsabs=1e-14, epsrel=1e-13)[0]
        val, _ = integrate.quad(f, 0, 1, weight="cos", wvar=j * math.pi,
                                epsabs=1e-16, epsrel=1e-13, limit=200)
        return val

    return part(k - m) - part(k + m)


@pytest.mark.parametrize("a,b", PAIRS)
def test_box_linear_element_matches_quadrature(a, b):
    exact = models.matrix_element(PIB_LINEAR, a, b).value()
    num = _box_element(lambda x: x, a + 1, b + 1)
    assert _close(exact, num, 1.0)


@pytest.mark.parametrize("q", [1, 2, 3])
@pytest.mark.parametrize("a,b", PAIRS[::3])
def test_box_cos_element_matches_quadrature(q, a, b):
    p = ParticleInBox(q)
    exact = models.matrix_element(p, a, b).value()
    num = _box_element(lambda x: math.cos(q * math.pi * x), a + 1, b + 1)
    assert abs(exact - num) <= 1e-10


# -- oscillator -------------------------------------------------------------


def _hermite_functions(nmax, y):
    """Normalised Hermite functions without the Gaussian factor, by recurrence."""
    out = np.zeros((nmax + 1, y.size))
    out[0] = math.pi**-0.25
    if nmax:
        out[1] = math.sqrt(2) * y * out[0]
    for n in range(1, nmax):
        out[n + 1] = math.sqrt(2 / (n + 1)) * y * out[n] - math.sqrt(n / (n + 1)) * out[n - 1]
    return out


@pytest.fixture(scope="module")
def hermite_rule():
    y, w = np.polynomial.hermite.hermgauss(80)
    return y, w, _hermite_functions(N_MAX, y)


@pytest.mark.parametrize("M", [1, 2, 3, 4, 5, 6])
@pytest.mark.parametrize("omega", [Fraction(1), Fraction(3, 2)])
def test_oscillator_elements_match_gauss_hermite(M, omega, hermite_rule):
    y, w, phi = hermite_rule
    p = Oscillator(M, omega)
    for a, b in PAIRS:
        # x = y / sqrt(omega)
        num = float(np.sum(w * phi[a] * phi[b] * y**M)) * float(omega) ** (-M / 2)
        exact = models.matrix_element(p, a, b).value()
        scale = (max(a, b) + 1) ** (M / 2)
        assert _close(exact, num, scale), (a, b, exact, num)


def test_oscillator_irrational_frequency_is_approx():
    p = Oscillator(3, math.sqrt(2))
    v = models.matrix_element(p, 0, 3)
    assert isinstance(v, Approx)
    ref = models.matrix_element(Oscillator(3), 0, 3).value() * 2 ** (-3 / 4)
    assert v.value() == pytest.approx(ref, rel=1e-14)


def test_oscillator_elements_rational_when_possible():
    # <0|x^2|2> = sqrt(2)/2 is not rational; <0|x^2|0> = 1/2 is
    p = Oscillator(2)
    assert models.matrix_element(p, 0, 0) == Exact.rational(Fraction(1, 2))
    assert isinstance(models.matrix_element(p, 0, 2), Approx)
    assert models.squared_matrix_element(p, 0, 2) == Exact.rational(Fraction(1, 2))


# -- hydrogen ---------------------------------------------------------------


def _hydrogen_u(n, r):
    norm = (2 / n) ** 1.5 * math.sqrt(math.factorial(n - 1) / (2 * n * math.factorial(n)))
    return r * norm * special.eval_genlaguerre(n - 1, 1, 2 * r / n)


@pytest.mark.parametrize("M", [1, 2, 3, 4])
def test_hydrogen_elements_match_gauss_laguerre(M):
    t, w = special.roots_laguerre(60)
    for na, nb in [(1, 1), (1, 2), (2, 5), (3, 3), (4, 9), (7, 12), (10, 10), (6, 20)]:
        rate = 1 / na + 1 / nb
        r = t / rate
        f = _hydrogen_u(na, r) * _hydrogen_u(nb, r) * r**M
        num = float(np.sum(w * f)) / rate
        exact = models.matrix_element(HydrogenS(M), na - 1, nb - 1).value()
        scale = (max(na, nb) ** 2) ** M
        assert _close(exact, num, scale), (na, nb, exact, num)


@pytest.mark.parametrize("n", [1, 2, 5, 17])
def test_hydrogen_radial_moments(n):
    assert models.hydrogen_expectation(1, n) == Fraction(3 * n * n, 2)
    assert models.hydrogen_expectation(2, n) == Fraction(n * n * (5 * n * n + 1), 2)


# -- structure --------------------------------------------------------------


@pytest.mark.parametrize("p", [PIB_LINEAR, ParticleInBox(2), Oscillator(3), Oscillator(4, Fraction(2)),
                               HydrogenS(2)])
def test_elements_symmetric(p):
    for a in range(8):
        for b in range(8):
            x, y = models.matrix_element(p, a, b), models.matrix_element(p, b, a)
            assert x.value() == y.value()


def test_selection_rules():
    for a in range(12):
        for b in range(12):
            if (a - b) % 2 == 0 and a != b:
                assert models.matrix_element(PIB_LINEAR, a, b).is_zero()
            if abs(a - b) > 3 or (a - b) % 2 == 0:
                assert models.squared_matrix_element(Oscillator(3), a, b).value() == 0
            if abs(a - b) != 1 and a + b + 2 != 1:
                assert models.matrix_element(ParticleInBox(1), a, b).is_zero()


def test_bandwidths():
    assert models.bandwidth(Oscillator(5)) == 5
    assert models.bandwidth(ParticleInBox(2)) == 2
    assert models.bandwidth(PIB_LINEAR) is None
    assert models.bandwidth(HydrogenS(1)) is None


def test_box_energy_is_k_squared_pi_squared():
    for s in range(20):
        e0 = models.unperturbed_energy(PIB_LINEAR, s)
        assert e0.value() == pytest.approx((s + 1) ** 2 * math.pi**2, rel=1e-15)
        assert models.energy_gap(PIB_LINEAR, s, s + 1) == (Fraction((s + 1) ** 2 - (s + 2) ** 2), 2)


def test_quantum_numbers():
    assert models.quantum_number(Oscillator(3), 4) == 4
    assert models.quantum_number(HydrogenS(1), 0) == 1
    assert models.quantum_number(PIB_LINEAR, 0) == 1


# -- closed forms -----------------------------------------------------------


def test_linear_box_closed_form_unsimplified():
    for k in range(1, 40):
        cf = models.closed_form_E2(PIB_LINEAR, k - 1)
        # (k^2 pi^2 - 15) / (48 k^4 pi^4)
        assert cf == Exact(0, Fraction(k * k, 48 * k**4), Fraction(-15, 48 * k**4))


def test_cos_pi_closed_form_unsimplified():
    p = ParticleInBox(1)
    assert models.closed_form_E2(p, 0) == Exact.inv_pi2(Fraction(-1, 12))
    for k in range(2, 60):
        expected = Fraction(1, 4) * (Fraction(1, 2 * k - 1) - Fraction(1, 2 * k + 1))
        assert models.closed_form_E2(p, k - 1) == Exact.inv_pi2(expected)


def test_cos_2pi_closed_form_unsimplified():
    p = ParticleInBox(2)
    assert models.closed_form_E2(p, 0) == Exact.inv_pi2(Fraction(1, 4 * (1 - 9)))
    assert models.closed_form_E2(p, 1) == Exact.inv_pi2(Fraction(1, 4 * (4 - 16)))
    for k in range(3, 60):
        expected = Fraction(1, 4) * (Fraction(1, k * k - (k - 2) ** 2) + Fraction(1, k * k - (k + 2) ** 2))
        assert models.closed_form_E2(p, k - 1) == Exact.inv_pi2(expected)


def test_oscillator_linear_closed_form():
    assert models.closed_form_E2(Oscillator(1, Fraction(3)), 7) == Exact.rational(Fraction(-1, 18))
    assert models.closed_form_E2(Oscillator(2), 0) is None


@pytest.mark.parametrize("p", [PIB_LINEAR, ParticleInBox(3), Oscillator(4, Fraction(5, 3)),
                               Oscillator(2, math.sqrt(2)), HydrogenS(3)])
def test_problem_json_round_trip(p):
    assert models.problem_from_json(models.problem_to_json(p)) == p


def test_invalid_parameters():
    with pytest.raises(ValueError):
        Oscillator(0)
    with pytest.raises(ValueError):
        Oscillator(2, Fraction(-1))
    with pytest.raises(ValueError):
        ParticleInBox(0)
    with pytest.raises(ValueError):
        models.matrix_element(PIB_LINEAR, -1, 0)
