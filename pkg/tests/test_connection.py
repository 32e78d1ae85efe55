from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from stokes_resum.connection import (
    MeromorphicSystem,
    ScalarOperator,
    anti_stokes,
    companion,
    divisor_calculus,
    eigenvalues,
    elementary_modification,
    modification_gauge_identity,
    poly,
    pullback,
    pushforward,
    read_back,
    schwarzian,
    schwarzian_derivative,
    uniformizing_system,
)
from stokes_resum.errors import EtaleError, NotCompanionError, StokesResumError
from stokes_resum.series import MultiSeries, Scalar, VarSpec

coeff = st.fractions(min_value=-4, max_value=4, max_denominator=5)
polys = st.dictionaries(st.integers(0, 4), coeff, max_size=4)


@given(st.lists(polys, min_size=1, max_size=4), st.integers(0, 4))
def test_companion_roundtrip(ps, k):
    op = ScalarOperator.from_polys(ps, k)
    sys = companion(op)
    assert sys.rank == len(ps)
    back = read_back(sys)
    assert all(a.same_coefficients(b) for a, b in zip(back.coefficients, op.coefficients))


def test_read_back_rejects_non_companion():
    sys = MeromorphicSystem.from_matrix([[1, 0], [0, 1]], 2)
    with pytest.raises(NotCompanionError):
        read_back(sys)


@given(st.lists(st.lists(polys, min_size=2, max_size=2), min_size=2, max_size=2), st.integers(1, 4))
def test_system_json_roundtrip(m, k):
    sys = MeromorphicSystem.from_matrix(m, k)
    assert MeromorphicSystem.from_json(sys.to_json()) == sys


def test_pushforward_rank_one_pole_three():
    # A(z) = a0(z^2) + z a1(z^2) with a0 = 2 + 3z^2, a1 = 5
    sys = MeromorphicSystem.from_matrix([[{0: 2, 1: 5, 2: 3}]], 3)
    push = pushforward(sys, 2)
    assert push.pole_order == 2
    half = Fraction(1, 2)
    w = VarSpec("z")
    expected = [
        [{0: 2 * half, 1: 3 * half}, {1: 5 * half}],
        [{0: 5 * half}, {0: 2 * half, 1: 3 * half + half}],
    ]
    for i in range(2):
        for j in range(2):
            assert push.A[i, j].same_coefficients(MultiSeries([w], expected[i][j]))


@given(polys, polys, st.integers(1, 3))
def test_pushforward_general_pole_formula(a0, a1, q):
    n = 2
    K = n * q - n + 1
    A = {2 * e: c for e, c in a0.items()}
    for e, c in a1.items():
        A[2 * e + 1] = A.get(2 * e + 1, 0) + c
    push = pushforward(MeromorphicSystem.from_matrix([[A]], K), n)
    w = VarSpec("z")
    p0 = MultiSeries([w], a0).scale(Fraction(1, 2))
    p1 = MultiSeries([w], a1).scale(Fraction(1, 2))
    assert push.A[0, 0].same_coefficients(p0)
    assert push.A[1, 0].same_coefficients(p1)
    assert push.A[0, 1].same_coefficients(p1.shift((1,)))
    bump = MultiSeries([w], {q - 1: Fraction(1, 2)})
    assert push.A[1, 1].same_coefficients(p0 + bump)


def test_pushforward_rejects_bad_pole_order():
    with pytest.raises(EtaleError):
        pushforward(MeromorphicSystem.from_matrix([[1]], 2), 2)


def test_pullback_pole_order():
    sys = MeromorphicSystem.from_matrix([[{0: 1, 1: 1}]], 2)
    pb = pullback(sys, 3)
    assert pb.pole_order == 3 * 2 - 3 + 1
    assert pb.A[0, 0].same_coefficients(MultiSeries([VarSpec("z")], {0: 3, 3: 3}))


def test_divisor_calculus():
    d = divisor_calculus(2, 2)
    assert d.to_json()


def test_eigenvalues_exact_and_anti_stokes():
    sys = MeromorphicSystem.from_matrix([[0, 1], [1, 0]], 2)
    values, method = eigenvalues(sys.leading_matrix())
    assert method == "exact"
    assert sorted(complex(v).real for v in values) == [-1, 1]
    res = anti_stokes(sys)
    assert res.diagonalizable and len(res.directions) == 2
    assert {d.exact_roots[0] for d in res.directions} == {Scalar(2), Scalar(-2)}


def test_anti_stokes_gaussian_roots():
    sys = MeromorphicSystem.from_matrix([[0, 0], [0, 4]], 3)
    res = anti_stokes(sys)
    roots = {r for d in res.directions for r in d.exact_roots}
    assert roots == {Scalar(2), Scalar(-2), Scalar(0, 2), Scalar(0, -2)}


def test_anti_stokes_nilpotent_leading_term():
    sys = MeromorphicSystem.from_matrix([[0, {1: 1}], [1, 0]], 3)
    res = anti_stokes(sys)
    assert not res.diagonalizable and not res.directions


def test_anti_stokes_needs_irregular_pole():
    with pytest.raises(StokesResumError):
        anti_stokes(MeromorphicSystem.from_matrix([[1]], 1))


def test_schwarzian_of_mobius_vanishes():
    v = VarSpec("w", 1, 0, 10)
    # g = w / (1 - w)
    g = MultiSeries([v], {n: 1 for n in range(1, 10)})
    assert schwarzian_derivative(g).is_zero()


def test_schwarzian_classical_cocycle():
    v = VarSpec("w", 1, 0, 9)
    g = MultiSeries([v], {1: 1, 2: 1})
    h = MultiSeries([VarSpec("z")], {0: Fraction(1, 4)})
    q = schwarzian(g, h, convention="classical")
    # g' = 1 + 2w, S(g) = -6 / (1 + 2w)^2
    assert q.coefficient((0,)) == Fraction(1, 4) - 3
    assert q.coefficient((1,)) == 1 + 12


@pytest.mark.parametrize("k", [1, 2, 3, 4])
def test_uniformizing_system_modifications(k):
    sys = uniformizing_system(k)
    assert sys.pole_order == k
    if k > 1:
        prev = uniformizing_system(k - 1)
        assert modification_gauge_identity(prev, elementary_modification(prev))


def test_poly_builder():
    p = poly({0: 1, 2: Scalar(0, 1)})
    assert p.coefficient((2,)) == Scalar(0, 1)


def test_schwarzian_quotient_convention():
    v = VarSpec("w", 1, 0, 9)
    g = MultiSeries([v], {1: 1, 2: 1})
    q = MultiSeries([v], {0: Fraction(1, 4)})
    out = schwarzian(g, q)
    # (1/4 - 6 / (1 + 2w)^2) / (1 + 2w)^2 at w = 0
    assert out.coefficient((0,)) == Fraction(1, 4) - 6
