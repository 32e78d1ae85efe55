from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from stokes_resum.errors import NotInvertibleError, VariableMismatchError, WindowError
from stokes_resum.series import (
    EXACT,
    I,
    MatSeries,
    MultiSeries,
    Scalar,
    VarSpec,
    binom_power,
    derivative,
    exp_series,
    invert,
    log_series,
    mat_invert,
    mat_mul,
    mul,
    substitute,
)

PREC = 7
X = VarSpec("x", 1, 0, PREC)
XY = (VarSpec("x", 1, 0, 5), VarSpec("y", 1, 0, 5))

fractions = st.fractions(min_value=-5, max_value=5, max_denominator=6)
scalars = st.builds(Scalar, fractions, fractions)


def series(vars, min_size=0):
    exps = st.tuples(*[st.integers(v.low, v.prec - 1) for v in vars])
    return st.dictionaries(exps, scalars, min_size=min_size, max_size=8).map(lambda c: MultiSeries(vars, c))


uni = series([X])
bi = series(XY)


def with_constant(s, c):
    zero = (0,) * s.nvars
    coeffs = dict(s.coeffs)
    coeffs[zero] = Scalar.coerce(c)
    return MultiSeries(s.vars, coeffs)


def no_constant(s):
    zero = (0,) * s.nvars
    return MultiSeries(s.vars, {e: c for e, c in s.coeffs.items() if e != zero})


# -- scalars ------------------------------------------------------------------


@given(scalars, scalars, scalars)
def test_scalar_field_laws(a, b, c):
    assert (a + b) + c == a + (b + c)
    assert a * (b + c) == a * b + a * c
    assert a * b == b * a
    if a:
        assert a * a.reciprocal() == 1


def test_scalar_rejects_floats():
    with pytest.raises(TypeError):
        Scalar(0.5)
    assert I * I == -1


def test_scalar_json_roundtrip():
    s = Scalar(Fraction(-3, 7), Fraction(2, 5))
    assert Scalar.from_json(s.to_json()) == s


# -- ring laws ----------------------------------------------------------------


@given(bi, bi, bi)
def test_ring_laws_bivariate(a, b, c):
    assert mul(a, b) == mul(b, a)
    assert mul(mul(a, b), c) == mul(a, mul(b, c))
    assert mul(a, b + c) == mul(a, b) + mul(a, c)
    assert (a - a).is_zero()


@given(uni, scalars.filter(bool))
def test_inverse_of_unit(a, c0):
    a = with_constant(a, c0)
    one = mul(a, invert(a))
    assert one.coeffs == {(0,): Scalar(1)}


def test_inverse_shifts_window():
    s = MultiSeries([VarSpec("x", 1, 0, 6)], {(2,): 1, (3,): 1})
    inv = invert(s)
    assert inv.vars[0].low == -2
    assert mul(s, inv).coeffs == {(0,): Scalar(1)}


def test_invert_zero_raises():
    with pytest.raises(NotInvertibleError):
        invert(MultiSeries.zero([X]))


@given(uni, uni)
def test_exp_is_additive(a, b):
    a, b = no_constant(a), no_constant(b)
    assert exp_series(a + b) == mul(exp_series(a), exp_series(b))


@given(uni)
def test_log_inverts_exp(a):
    a = no_constant(a)
    assert log_series(exp_series(a)) == a


@given(bi)
def test_binomial_square_root(a):
    a = with_constant(no_constant(a), 1)
    r = binom_power(a, Fraction(1, 2))
    assert mul(r, r) == a


@given(uni, uni)
def test_product_rule(a, b):
    lhs = derivative(mul(a, b), "x")
    rhs = mul(derivative(a, "x"), b) + mul(a, derivative(b, "x"))
    assert lhs.same_coefficients(rhs.truncate(lhs.precs))


@given(uni)
def test_substitution_into_identity_is_identity(a):
    x = MultiSeries.variable("x", [VarSpec("x", 1, 0, PREC)])
    assert substitute(a, {"x": x}) == a


def test_exact_polynomials_stay_exact():
    v = VarSpec("x")
    p = MultiSeries([v], {(0,): 1, (1,): 1})
    assert mul(p, p).vars[0].prec == EXACT


def test_degree_mode_drops_high_total_degree():
    a = MultiSeries(XY, {(1, 0): 1, (0, 1): 1})
    sq = mul(a, a, degree=1)
    assert sq.is_zero()
    assert mul(a, a, degree=2).coeffs == {(2, 0): 1, (1, 1): 2, (0, 2): 1}


def test_mismatched_variables_rejected():
    a = MultiSeries([X], {(0,): 1})
    b = MultiSeries([VarSpec("y", 1, 0, PREC)], {(0,): 1})
    with pytest.raises(VariableMismatchError):
        a + b


def test_empty_window_rejected():
    with pytest.raises(WindowError):
        VarSpec("x", 1, 3, 3)


def test_ramified_variable_renders_fractional_exponents():
    w = VarSpec("z", 2, 0, 6)
    s = MultiSeries([w], {(1,): 1})
    assert mul(s, s).coefficient((2,)) == 1
    assert s.with_ramification("z", 4).coefficient((2,)) == 1


@given(bi)
def test_json_roundtrip(a):
    assert MultiSeries.from_json(a.to_json()) == a


# -- matrices -----------------------------------------------------------------


@given(st.lists(uni, min_size=4, max_size=4), st.lists(scalars.filter(bool), min_size=2, max_size=2))
def test_matrix_inverse(entries, diag):
    a, b, c, d = entries
    m = MatSeries([[with_constant(a, diag[0]), no_constant(b)], [no_constant(c), with_constant(d, diag[1])]])
    assert mat_mul(m, mat_invert(m)).is_identity()


def test_mat_mul_is_thread_count_independent(monkeypatch):
    v = [VarSpec("x", 1, 0, 8)]
    m = MatSeries([[MultiSeries(v, {(i,): i + j + 1 for i in range(8)}) for j in range(3)] for _ in range(3)])
    serial = mat_mul(m, m)
    monkeypatch.setenv("STOKES_RESUM_THREADS", "4")
    assert mat_mul(m, m) == serial
