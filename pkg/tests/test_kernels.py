import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from bec_linear import kernels as K
from bec_linear.errors import DomainError, NumericalFailure, SingularEvaluationError
from bec_linear.kernels import Convention

mp.mp.dps = 50

pos = st.floats(min_value=1e-2, max_value=6.0, allow_nan=False)


def mp_M(x, y):
    x, y = mp.mpf(x), mp.mpf(y)
    br = 1 / mp.sinh(abs(x * x - y * y)) - 1 / mp.sinh(x * x + y * y)
    return br * y ** 3 * mp.sinh(x * x) / (x ** 3 * mp.sinh(y * y))


def mp_T(x, y):
    x, y = mp.mpf(x), mp.mpf(y)
    lk = (1 / abs(x * x - y * y) - 1 / (x * x + y * y)) * y / x
    return mp_M(x, y) - lk


def test_equilibrium_n0_values():
    assert K.equilibrium_n0(math.log(2)) == pytest.approx(1.0, rel=1e-15)
    assert K.equilibrium_n0(1.0) == pytest.approx(0.5819767068693265, rel=1e-14)
    assert K.equilibrium_n0(800.0) == 0.0
    with pytest.raises(DomainError):
        K.equilibrium_n0(0.0)


@pytest.mark.parametrize("conv", list(Convention))
def test_weights_positive_and_ratio(conv):
    # up to the edge of double range: w6 ~ exp(-2 c x^2)
    x = np.geomspace(1e-3, 12.0, 200)
    w = K.equilibrium_weights(x, conv)
    assert np.all(w.w4 > 0) and np.all(w.w6 > 0)
    assert np.all(np.isfinite(w.w6))
    assert np.allclose(w.w6 / w.w4, x * x, rtol=1e-15)


def test_pair_weight_matches_occupation():
    x = np.geomspace(0.05, 5, 50)
    for conv in Convention:
        n0 = K.n0_of_x(x, conv)
        assert np.allclose(K.pair_weight(x, conv), n0 * (1 + n0), rtol=1e-12)


def test_M_against_high_precision():
    assert K.kernel_M(1.0, 1.1) == pytest.approx(float(mp_M(1.0, 1.1)), rel=1e-13)


def test_M_bracket_symmetry():
    left = K.kernel_M(1.0, 2.0) * math.sinh(4.0) / (8.0 * math.sinh(1.0))
    right = K.kernel_M(2.0, 1.0) * 8.0 * math.sinh(1.0) / math.sinh(4.0)
    assert left == pytest.approx(right, rel=1e-14)
    assert left == pytest.approx(1 / math.sinh(3) - 1 / math.sinh(5), rel=1e-14)


def test_W_defining_relation():
    assert K.kernel_W(1.0, 2.0) * math.sinh(1.0) ** 2 * 16.0 == pytest.approx(K.kernel_M(1.0, 2.0), rel=1e-14)


def test_diagonal_is_singular():
    with pytest.raises(SingularEvaluationError):
        K.kernel_M(1.0, 1.0)
    with pytest.raises(SingularEvaluationError):
        K.kernel_W(2.0, 2.0)
    with pytest.raises(DomainError):
        K.kernel_M(-1.0, 1.0)


@settings(max_examples=200, deadline=None)
@given(pos, pos)
def test_W_symmetric_and_positive(x, y):
    if x == y:
        return
    assert K.kernel_W(x, y) == K.kernel_W(y, x)
    assert K.kernel_W(x, y) > 0
    assert K.kernel_M(x, y) > 0


@settings(max_examples=200, deadline=None)
@given(pos, pos)
def test_detailed_balance_pointwise(x, y):
    if x == y:
        return
    lhs = K.pair_weight(x) * x ** 6 * K.kernel_M(x, y)
    rhs = 0.25 * K.kernel_W(x, y) * x ** 4 * y ** 4
    assert lhs == pytest.approx(rhs, rel=1e-12)


def test_eps_W_limit():
    # 1/sinh|x^2 - y^2| ~ 1/(2 eps) at x = 1, so eps W(1, 1 + eps) -> 1/(2 sinh(1)^2)
    limit = 1.0 / (2.0 * math.sinh(1.0) ** 2)
    vals = [e * K.kernel_W(1.0, 1.0 + e) for e in (1e-3, 1e-4, 1e-5, 1e-6)]
    errs = [abs(v - limit) for v in vals]
    assert errs[-1] < 1e-5 * limit
    assert all(b < a for a, b in zip(errs, errs[1:]))


def test_T1_diagonal_value():
    assert K.kernel_T1(1.0, 1.0) == pytest.approx(0.5 - 1 / math.sinh(2.0), rel=1e-15)
    assert K.kernel_T1(1.0, 1.0) == pytest.approx(0.22427, abs=1e-5)


def test_T_diagonal_two_sided_richardson():
    # mean of the one-sided limits, extrapolated in eps
    def side(e):
        return 0.5 * (float(mp_T(1.0, 1.0 + e)) + float(mp_T(1.0, 1.0 - e)))

    # the one-sided offsets are O(eps), so eliminate that term
    e = 1e-3
    a, b = side(e), side(e / 2)
    limit = 2 * b - a
    assert K.kernel_T(1.0, 1.0) == pytest.approx(limit, abs=1e-6)


def test_T2_jump_across_diagonal():
    x = 1.3
    e = 1e-7
    up = K.kernel_T2(x, x * (1 + e))
    dn = K.kernel_T2(x, x * (1 - e))
    assert up == pytest.approx(K.t2_jump(x), rel=1e-5)
    assert dn == pytest.approx(-K.t2_jump(x), rel=1e-5)
    assert K.kernel_T2(x, x) == 0.0


@pytest.mark.parametrize("x,y", [(0.5, 0.3), (1.0, 2.0), (2.0, 1.0), (0.05, 3.0), (4.0, 4.5), (20.0, 3.0),
                                 (0.01, 0.0123)])
def test_T_against_high_precision(x, y):
    ref = float(mp_T(x, y))
    assert K.kernel_T(x, y) == pytest.approx(ref, rel=1e-10, abs=1e-14)


def test_T1_small_square_bound():
    xs = np.linspace(0.01, 1.0, 60)
    X, Y = np.meshgrid(xs, xs)
    c_fit = np.max(np.abs(K.kernel_T1(X, Y)) / (X * Y))
    assert np.isfinite(c_fit)
    assert abs(K.kernel_T1(0.5, 0.3)) <= c_fit * 0.5 * 0.3


@settings(max_examples=100, deadline=None)
@given(st.floats(0.3, 10.0), st.sampled_from([1.0, -1.0]), st.floats(0.05, 0.95))
def test_branches_agree_near_diagonal(x, sign, frac):
    d = frac * K.NEAR_DIAGONAL_REL * max(1.0, x * x)
    y = math.sqrt(x * x + sign * d)
    if y == x:
        return
    scale = max(abs(K.kernel_T1(x, y)), abs(K.kernel_T2(x, y)))
    assert abs(K.kernel_T_series(x, y) - K.kernel_T_direct(x, y)) < 1e-9 * scale


def test_h_series_matches_direct():
    z = np.linspace(0.01, 0.25, 30)
    direct = np.array([float(1 / mp.mpf(v) - 1 / mp.sinh(v)) for v in z])
    assert np.allclose(K.h_function(z), direct, rtol=5e-15, atol=0)


def test_row_mass_finite_and_decays():
    m1 = K.kernel_row_mass(1.0, 20.0)
    m10 = K.kernel_row_mass(10.0, 20.0)
    assert np.isfinite(m1) and np.isfinite(m10)
    col = K.kernel_row_mass(1.0, 20.0, column=True)
    assert np.isfinite(col) and col > 0


def test_row_mass_against_plain_quadrature():
    ref = integrate.quad(lambda y: abs(K.kernel_T(0.7, y)), 0, 10, points=[0.7], limit=400)[0]
    assert K.kernel_row_mass(0.7, 10.0) == pytest.approx(ref, rel=1e-8)


def test_row_mass_budget_failure_reports_partial():
    with pytest.raises(NumericalFailure) as info:
        K.kernel_row_mass(1.0, 20.0, epsabs=1e-30, limit=1)
    assert info.value.partial is not None
