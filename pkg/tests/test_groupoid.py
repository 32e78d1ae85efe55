import cmath
from fractions import Fraction

import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from stokes_resum.errors import DomainError, NotComposableError
from stokes_resum.groupoid import (
    PAIR,
    STO,
    GroupoidChart,
    additive_value,
    check_axioms,
    compose,
    hom_E_value,
    inverse,
    pair,
    ratio,
    sto,
    target,
)
from stokes_resum.series import Scalar

small = st.fractions(min_value=-2, max_value=2, max_denominator=9)


@pytest.mark.parametrize("k", [1, 2, 3, 4, 5])
def test_pair_axioms_exact(k):
    res = check_axioms(PAIR, k, degree=6, samples=20)
    assert all(v["pass"] for v in res.values()), res


@pytest.mark.parametrize("k", [1, 2, 3])
def test_sto_axioms(k):
    res = check_axioms(STO, k, degree=6, samples=20)
    assert all(v["pass"] for v in res.values()), res


@given(st.integers(1, 5), small, small, small, small)
def test_pair_composition_associative_on_rationals(k, z, u1, u2, u3):
    c = pair(k)
    z = Scalar(z)
    assume(z)
    assume(1 + u1 * z.re ** (k - 1) != 0)
    g1 = c.point(z, Scalar(u1))
    z2 = target(c, g1.z, g1.u)
    assume(1 + u2 * z2.re ** (k - 1) != 0)
    g2 = c.point(z2, Scalar(u2))
    z3 = target(c, g2.z, g2.u)
    assume(1 + u3 * z3.re ** (k - 1) != 0)
    g3 = c.point(z3, Scalar(u3))
    left = compose(c, g3, compose(c, g2, g1))
    right = compose(c, compose(c, g3, g2), g1)
    assert left.u == right.u and left.z == right.z


@given(st.integers(1, 5), small.filter(bool), small)
def test_pair_inverse_exact(k, z, u):
    c = pair(k)
    assume(1 + u * z ** (k - 1) != 0)
    g = c.point(Scalar(z), Scalar(u))
    back = compose(c, inverse(c, g), g)
    assert back.u == 0 and back.z == g.z


@pytest.mark.parametrize("k", [1, 2, 3, 4])
def test_sto_numeric_composition(k):
    c = sto(k)
    g1 = (0.3 + 0.1j, 0.2 - 0.4j)
    t1 = target(c, *g1)
    g2 = (t1, -0.5 + 0.2j)
    g = compose(c, g2, g1)
    assert abs(target(c, g.z, g.u) - target(c, *g2)) < 1e-12
    s = additive_value(c, *g1) + additive_value(c, *g2)
    assert abs(additive_value(c, g.z, g.u) - s) < 1e-12


def test_hom_E_maps_targets():
    z, u = 0.4 + 0.2j, 0.3 - 0.1j
    for k in (1, 2, 3):
        zz, v = hom_E_value(k, z, u)
        assert abs(target(sto(k), z, u) - target(pair(k), zz, v)) < 1e-13


def test_mu_chart():
    c = GroupoidChart(PAIR, 2, mu=True)
    assert ratio(c, Scalar(Fraction(1, 10)), Scalar(Fraction(1, 2))) == Scalar(Fraction(20, 19))
    with pytest.raises(ValueError):
        GroupoidChart(PAIR, 3, mu=True)


def test_pair_excludes_singular_locus():
    with pytest.raises(DomainError):
        pair(2).point(Scalar(1), Scalar(-1))


def test_not_composable():
    c = pair(2)
    with pytest.raises(NotComposableError):
        compose(c, (Scalar(5), Scalar(0)), (Scalar(1), Scalar(1)))


def test_sto_k1_is_exponential():
    assert abs(target(sto(1), 2.0, 0.5) - 2 * cmath.exp(0.5)) < 1e-14
