import math
import random
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rspt2 import engine, matrixlab, models
from rspt2.core import Approx, Exact, compare
from rspt2.engine import GridSpec
from rspt2.models import PIB_LINEAR, HydrogenS, Oscillator, ParticleInBox


# -- oracles ----------------------------------------------------------------


def _position_matrix(dim, omega):
    """``x`` in the oscillator eigenbasis, built from ladder operators."""
    a = np.diag(np.sqrt(np.arange(1, dim)), 1)
    return (a + a.T) / math.sqrt(2 * omega)


def _dense_sum_over_states(M, omega, s, dim=160):
    V = np.linalg.matrix_power(_position_matrix(dim, omega), M)
    E = omega * (np.arange(dim) + 0.5)
    m = np.arange(dim) != s
    return float(np.sum(V[s, m] ** 2 / (E[s] - E[m])))


def _dense_eigen_curvature(M, omega, s, dim=120, h=2e-3):
    """Curvature in lam of the eigenvalue of a truncated H0 + lam x^M that
    continues level s.  For lam < 0 an even power pushes edge-of-basis
    states far below the spectrum, so the branch is tracked by proximity to
    the unperturbed level rather than by sorted position."""
    V = np.linalg.matrix_power(_position_matrix(dim + 2 * M, omega), M)[:dim, :dim]
    H0 = np.diag(omega * (np.arange(dim) + 0.5))

    def ev(lam):
        w = np.linalg.eigvalsh(H0 + lam * V)
        return w[np.argmin(np.abs(w - H0[s, s]))]

    def stencil(step):
        return (-ev(2 * step) + 16 * ev(step) - 30 * ev(0) + 16 * ev(-step) - ev(-2 * step)) / (12 * step**2)

    d2 = (16 * stencil(h / 2) - stencil(h)) / 15
    return d2 / 2


# -- banded -----------------------------------------------------------------


def test_cubic_oscillator_ground_state():
    assert engine.second_order_banded(Oscillator(3), 0) == Exact.rational(Fraction(-11, 8))


@pytest.mark.parametrize("M", [2, 3, 4, 5, 6])
@pytest.mark.parametrize("s", [0, 1, 4, 9])
def test_banded_oscillator_against_dense_sum(M, s):
    e2 = engine.second_order_banded(Oscillator(M), s)
    assert isinstance(e2, Exact)
    assert e2.value() == pytest.approx(_dense_sum_over_states(M, 1.0, s), rel=1e-11)


@pytest.mark.parametrize("M,s", [(3, 0), (3, 2), (4, 0), (4, 3)])
def test_banded_oscillator_against_dense_diagonalisation(M, s):
    e2 = engine.second_order_banded(Oscillator(M), s).value()
    assert _dense_eigen_curvature(M, 1.0, s) == pytest.approx(e2, rel=1e-6)


@pytest.mark.parametrize("omega", [Fraction(1), Fraction(2), Fraction(3, 7), Fraction(5, 2)])
def test_linear_oscillator_shift_for_all_low_states(omega):
    p = Oscillator(1, omega)
    want = Exact.rational(-1 / (2 * omega**2))
    for s in range(51):
        assert engine.second_order_banded(p, s) == want


def test_irrational_frequency_runs_on_floats():
    p = Oscillator(4, math.sqrt(2))
    e2 = engine.second_order_banded(p, 3)
    assert isinstance(e2, Approx)
    assert e2.value() == pytest.approx(_dense_sum_over_states(4, math.sqrt(2), 3), rel=1e-11)


def test_box_cosine_banded_exact():
    assert engine.second_order_banded(ParticleInBox(1), 0) == Exact.inv_pi2(Fraction(-1, 12))
    assert engine.second_order_banded(ParticleInBox(1), 1) == Exact.inv_pi2(Fraction(1, 30))
    assert engine.second_order_banded(ParticleInBox(2), 1) == Exact.inv_pi2(Fraction(-1, 48))
    for q in (1, 2):
        for s in range(40):
            assert engine.second_order_banded(ParticleInBox(q), s) == models.closed_form_E2(ParticleInBox(q), s)


# -- truncated --------------------------------------------------------------


@pytest.mark.parametrize("basis", [20, 60, 300])
@pytest.mark.parametrize("s", [0, 3, 9])
def test_truncated_interval_contains_closed_form(basis, s):
    got = engine.second_order_truncated(PIB_LINEAR, s, basis)
    truth = models.closed_form_E2(PIB_LINEAR, s).value()
    assert abs(got.value() - truth) <= got.error()


def test_truncated_error_shrinks_with_basis():
    errs = [engine.second_order_truncated(PIB_LINEAR, 0, b).error() for b in (50, 500, 5000)]
    assert errs[0] > errs[1] > errs[2]


@pytest.mark.parametrize("basis", [4, 6, 20])
def test_truncated_banded_problem_bound_contains_exact(basis):
    p = Oscillator(4)
    got = engine.second_order_truncated(p, 2, basis)
    exact = engine.second_order_banded(p, 2).value()
    assert abs(got.value() - exact) <= got.error()


def test_truncated_matrix_sub_block():
    p = matrixlab.random_problem(8, 3)
    full = matrixlab.second_order_all(p).e2[1]
    cut = engine.second_order_truncated(p, 1, 5)
    assert abs(cut.value() - full.value()) <= cut.error()


def test_hydrogen_truncation_is_flagged_non_rigorous():
    rec = engine.second_order(HydrogenS(1), 0, "truncated", basis=40)
    assert rec.rigorous is False
    # bound states alone miss the continuum share
    assert rec.e2.value() > -1.5


def test_basis_too_small():
    with pytest.raises(engine.BasisTooSmall):
        engine.second_order_truncated(PIB_LINEAR, 5, 6)


# -- Dalgarno-Lewis ---------------------------------------------------------


def test_hydrogen_dl_ground_states():
    assert engine.second_order_dalgarno_lewis(HydrogenS(1), 0) == Exact.rational(Fraction(-3, 2))
    assert engine.second_order_dalgarno_lewis(HydrogenS(2), 0) == Exact.rational(Fraction(-129, 4))


def test_hydrogen_linear_family_formula():
    # -n^4 (7 n^2 + 5) / 8 for the linear radial perturbation
    for n in range(1, 25):
        want = Fraction(-(n**4) * (7 * n * n + 5), 8)
        assert engine.second_order_dalgarno_lewis(HydrogenS(1), n - 1) == Exact.rational(want)


@settings(max_examples=25, deadline=None)
@given(st.integers(1, 4), st.integers(0, 8), st.fractions(-50, 50, max_denominator=97))
def test_dl_gauge_invariance(M, s, gauge):
    base = engine.dalgarno_lewis_state(HydrogenS(M), s)
    shifted = engine.dalgarno_lewis_state(HydrogenS(M), s, gauge)
    assert shifted.e2 == base.e2
    assert shifted.coeffs != base.coeffs or gauge == 0


def test_dl_state_solves_the_radial_equation():
    st_ = engine.dalgarno_lewis_state(HydrogenS(2), 2)
    n = st_.n
    r = np.linspace(0.1, 30, 50)

    def u(coeffs, rr):
        return sum(float(c) * rr ** (j + 1) for j, c in enumerate(coeffs)) * np.exp(-rr / n)

    h = 1e-4
    u1 = u(st_.coeffs, r)
    d2 = (u(st_.coeffs, r + h) - 2 * u1 + u(st_.coeffs, r - h)) / h**2
    lhs = -0.5 * d2 - u1 / r + 1 / (2 * n * n) * u1
    u0 = u(st_.u0_coeffs, r)
    rhs = (float(st_.e1) - r**2) * u0
    assert np.allclose(lhs, rhs, rtol=1e-5, atol=1e-5 * np.max(np.abs(rhs)))


@pytest.mark.parametrize("M", [2, 3, 4, 6])
def test_oscillator_dl_equals_banded(M):
    for s in range(12):
        assert engine.second_order_dalgarno_lewis(Oscillator(M), s) == engine.second_order_banded(
            Oscillator(M), s)


def test_dl_has_no_ansatz_for_the_box():
    with pytest.raises(engine.AnsatzInsufficient):
        engine.second_order_dalgarno_lewis(PIB_LINEAR, 0)


def test_dl_fallback_to_grid_for_irrational_frequency(caplog):
    rec = engine.second_order(Oscillator(4, math.sqrt(2)), 0, "dl")
    assert rec.backend == "grid" and not rec.rigorous
    ref = engine.second_order_banded(Oscillator(4, math.sqrt(2)), 0)
    assert abs(rec.e2.value() - ref.value()) <= rec.e2.error() + ref.error()
    assert "falling back" in caplog.text


# -- grid -------------------------------------------------------------------


@pytest.mark.parametrize("M,s", [(1, 0), (2, 0), (1, 3), (2, 2), (3, 1), (4, 0)])
def test_grid_agrees_with_dl_within_estimate(M, s):
    g = engine.second_order_grid(HydrogenS(M), s)
    exact = engine.second_order_dalgarno_lewis(HydrogenS(M), s).value()
    assert abs(g.value() - exact) <= g.error()
    assert abs(g.value() - exact) <= 1e-6 * max(1.0, abs(exact))


@pytest.mark.parametrize("M,s", [(3, 0), (4, 2), (6, 1)])
def test_grid_oscillator(M, s):
    g = engine.second_order_grid(Oscillator(M), s)
    exact = engine.second_order_banded(Oscillator(M), s).value()
    assert abs(g.value() - exact) <= g.error()


def test_grid_box_linear():
    g = engine.second_order_grid(PIB_LINEAR, 0)
    truth = models.closed_form_E2(PIB_LINEAR, 0).value()
    assert abs(g.value() - truth) <= g.error()


def test_grid_too_coarse():
    with pytest.raises(engine.GridTooCoarse):
        engine.second_order_grid(HydrogenS(2), 3, GridSpec(points=64, tol=1e-8))


def test_grid_projection_error():
    with pytest.raises(engine.ProjectionError):
        engine.second_order_grid(HydrogenS(1), 0, e1_override=0.0)


# -- dispatch ---------------------------------------------------------------


def test_auto_strategy_choices():
    assert engine.second_order(Oscillator(3), 0).backend == "banded"
    assert engine.second_order(ParticleInBox(2), 0).backend == "banded"
    assert engine.second_order(HydrogenS(1), 0).backend == "dalgarno-lewis"
    assert engine.second_order(PIB_LINEAR, 0).backend == "truncated"
    assert engine.second_order(matrixlab.random_problem(4, 1), 0).backend == "matrix"


def test_backends_agree_on_cubic_oscillator():
    p = Oscillator(3)
    banded = engine.second_order(p, 1, "banded").e2
    dl = engine.second_order(p, 1, "dl").e2
    trunc = engine.second_order(p, 1, "truncated").e2
    grid = engine.second_order(p, 1, "grid").e2
    assert banded == dl
    assert compare(trunc, banded) == "equal"
    assert abs(grid.value() - banded.value()) <= grid.error()


def test_record_contents():
    rec = engine.second_order(HydrogenS(1), 1)
    assert rec.e0 == Exact.rational(Fraction(-1, 8))
    assert rec.e1 == Exact.rational(Fraction(6))  # <r> = 3 n^2 / 2


def test_closed_form_strategy():
    rec = engine.second_order(PIB_LINEAR, 0, "closed-form")
    assert rec.backend == "closed-form"
    with pytest.raises(engine.UnboundedOperator):
        engine.second_order(HydrogenS(1), 0, "closed-form")


def test_error_paths():
    with pytest.raises(engine.UnboundedOperator):
        engine.second_order_banded(PIB_LINEAR, 0)
    with pytest.raises(ValueError):
        engine.second_order(PIB_LINEAR, 0, "bogus")
    with pytest.raises(models.UnsupportedProblem):
        engine.second_order(matrixlab.random_problem(4, 1), 0, "dl")


def test_compute_series_is_gapless():
    ser = engine.compute_series(Oscillator(2), 9)
    assert [r.state for r in ser] == list(range(10))


def test_rational_gauge_fuzz_is_reproducible():
    rng = random.Random(7)
    g = Fraction(rng.randint(-99, 99), rng.randint(1, 99))
    a = engine.dalgarno_lewis_state(HydrogenS(3), 4, g)
    b = engine.dalgarno_lewis_state(HydrogenS(3), 4, g)
    assert a == b
