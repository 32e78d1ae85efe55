import cmath
import math

import mpmath
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from stokes_resum.connection import MeromorphicSystem
from stokes_resum.errors import DomainError
from stokes_resum.oracle import (
    PathSpec,
    airy_fundamental,
    airy_values,
    airy_wronskian,
    euler_closed_form,
    expint_Ei,
    transport,
)

points = st.complex_numbers(max_magnitude=7.5, allow_nan=False, allow_infinity=False)


def rel(a, b):
    return abs(complex(a) - complex(b)) / max(1.0, abs(complex(b)))


@given(points)
def test_airy_against_mpmath(x):
    ai, aip, bi, bip = airy_values(x)
    assert rel(ai, mpmath.airyai(x)) < 1e-13
    assert rel(aip, mpmath.airyai(x, 1)) < 1e-13
    assert rel(bi, mpmath.airybi(x)) < 1e-13
    assert rel(bip, mpmath.airybi(x, 1)) < 1e-13


@given(points)
def test_wronskian(x):
    assert abs(airy_wronskian(x) - 1 / math.pi) < 1e-13


def test_airy_outside_budget():
    with pytest.raises(DomainError):
        airy_values(9)


@pytest.mark.parametrize("x", [0.5, 3, 9.5, 39, 41, 60, -2, -50, 2 + 3j, 30j, -45 + 1j])
def test_ei_against_mpmath(x):
    assert rel(expint_Ei(x), mpmath.ei(x)) < 1e-13


def test_ei_derivative():
    h = 1e-5
    d = (expint_Ei(3 + h) - expint_Ei(3 - h)) / (2 * h)
    assert abs(d - math.exp(3) / 3) < 1e-8


def test_ei_branch_continuation():
    # approaching the negative axis from above and below
    above = expint_Ei(-2, branch_hint=[1, 1j, -2])
    below = expint_Ei(-2, branch_hint=[1, -1j, -2])
    assert abs((above - below) - 2j * math.pi) < 1e-12


def test_transport_scalar():
    sys = MeromorphicSystem.from_matrix([[1]], 1)
    res = transport(sys, PathSpec.parse("1,0;2,0"), 1e-11)
    assert abs(res.matrix[0, 0] - 0.5) < 1e-10


def test_transport_loop_monodromy():
    sys = MeromorphicSystem.from_matrix([[{0: -1}]], 1)
    # psi' = z^-1 psi gives psi = z; around the origin it returns unchanged
    loop = PathSpec((1, 1j, -1, -1j, 1))
    assert abs(transport(sys, loop).matrix[0, 0] - 1) < 1e-9


def test_transport_composes():
    sys = MeromorphicSystem.from_matrix([[0, {0: 1}], [{1: 1}, 0]], 2)
    a = transport(sys, PathSpec((1, 1.5))).matrix
    b = transport(sys, PathSpec((1.5, 2 + 0.3j))).matrix
    ab = transport(sys, PathSpec((1, 1.5, 2 + 0.3j))).matrix
    assert np.allclose(b @ a, ab, atol=1e-9)


def test_path_avoids_pole():
    with pytest.raises(DomainError):
        PathSpec.parse("1,0;-1,0")


def test_airy_fundamental_solves_ode():
    z = 0.3
    h = 1e-6
    d = (airy_fundamental(z + h) - airy_fundamental(z - h)) / (2 * h)
    A = np.array([[0, z], [1, 0]]) * z ** -3
    assert np.allclose(d, -A @ airy_fundamental(z), rtol=1e-6)


def test_euler_closed_form_vanishes_on_identity():
    assert abs(euler_closed_form(0.1, 0.0)) < 1e-14


def test_euler_closed_form_matches_quadrature():
    z, mu = 0.1, 0.5
    # rho = -int_0^mu exp((z mu - 1)/z) ... checked through mpmath directly
    x = (1 - z * mu) / z
    ref = cmath.exp(-x) * (mpmath.ei(x) - mpmath.ei(1 / z))
    assert rel(euler_closed_form(z, mu), ref) < 1e-13
