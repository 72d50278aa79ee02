import math

import mpmath as mp
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bec_linear import mellin
from bec_linear.errors import DomainError, PoleError

mp.mp.dps = 30


def mp_W(s):
    s = mp.mpc(s)
    return complex(-2 * mp.euler - 2 * mp.digamma(s / 2) - mp.pi * mp.cot(mp.pi * s / 4))


@pytest.mark.parametrize("z", [0.3 + 0.1j, 2.5, 11 + 3j, -2.7 + 0.4j, 0.5 + 20j, 1e-3 + 1e-3j,
                               -7.5 - 2j, 40 + 0.5j])
def test_digamma_against_mpmath(z):
    ref = complex(mp.digamma(z))
    assert abs(mellin.digamma(z) - ref) <= 1e-14 * max(1.0, abs(ref))


def test_digamma_pole_raises():
    with pytest.raises(PoleError):
        mellin.digamma(-3.0)


def test_W_known_values():
    assert abs(mellin.symbol_W(2.0)) < 1e-14
    assert abs(mellin.symbol_W(1.0) - (4 * math.log(2) - math.pi)) < 1e-12


@pytest.mark.parametrize("s", [2 + 10j, 0.7 - 3j, -1.5 + 0.2j, 3.5 + 1j, 1.0 + 50j])
def test_W_against_mpmath(s):
    ref = mp_W(s)
    assert abs(mellin.symbol_W(s) - ref) <= 1e-13 * max(1.0, abs(ref))


@settings(max_examples=50, deadline=None)
@given(st.floats(-1.9, 3.9), st.floats(-30, 30))
def test_W_reflection_and_conjugation(a, b):
    s = complex(a, b)
    if min(abs(s - p) for p in mellin.W_POLES) < 1e-3:
        return
    w = mellin.symbol_W(s)
    assert abs(mellin.symbol_W(2 - s) - w) <= 1e-12 * max(1.0, abs(w))
    assert abs(mellin.symbol_W(s.conjugate()) - w.conjugate()) <= 1e-13 * max(1.0, abs(w))


def test_W_poles_and_domain():
    for p in mellin.W_POLES:
        with pytest.raises(PoleError):
            mellin.symbol_W(p + 1e-10)
    with pytest.raises(DomainError):
        mellin.symbol_W(5.0)


def test_W_sign_on_real_segment():
    # W tends to 0 as s -> 0, vanishes at 2 and is negative in between
    for x in (0.05, 0.8, 1.5, 1.95):
        assert mellin.symbol_W(x).real < 0
    for x in (2.05, 3.0, 3.9):
        assert mellin.symbol_W(x).real > 0


def test_B_independent_of_line_within_cell():
    s = 1.0 + 0.2j
    a = mellin.symbol_B(s, 0.6)
    b = mellin.symbol_B(s, 0.7)
    assert abs(a - b) < 1e-10 * abs(a)


def test_B_conjugate_symmetry():
    s = 1.8 + 0.7j
    assert abs(mellin.symbol_B(s.conjugate(), 1.2) - mellin.symbol_B(s, 1.2).conjugate()) < 1e-12


def test_B_rejects_half_integer_line_and_bad_strip():
    with pytest.raises(DomainError):
        mellin.symbol_B(1.0, 0.5)
    with pytest.raises(DomainError):
        mellin.symbol_B(3.0, 1.2)


@pytest.mark.parametrize("s", [1.6 + 0.0j, 1.9 + 1.3j, 2.1 - 1.7j])
def test_functional_equation(s):
    assert mellin.functional_residual(s, 1.2) < 1e-6


def test_functional_equation_needs_shared_cell():
    with pytest.raises(DomainError):
        mellin.shifted_beta(1.2 + 0j)
    with pytest.raises(DomainError):
        mellin.functional_residual(1.8 + 0j, 0.4)
