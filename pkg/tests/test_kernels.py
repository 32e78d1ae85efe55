import random
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from stokes_resum.series import _kernels_py

compiled = pytest.importorskip("stokes_resum.series._kernels")


def _both(a, b, lo, hi):
    a, b = list(a.items()), list(b.items())
    return compiled.convolve(a, b, lo, hi) == _kernels_py.convolve(a, b, lo, hi)


def coeff_dicts(nvars):
    exps = st.tuples(*[st.integers(-3, 6)] * nvars)
    vals = st.fractions(min_value=-50, max_value=50, max_denominator=12).filter(bool)
    return st.dictionaries(exps, vals, max_size=10)


@pytest.mark.parametrize("nvars", [1, 2, 3])
def test_backends_agree_random(nvars):
    rng = random.Random(nvars)
    for _ in range(30):
        a = {tuple(rng.randint(-2, 6) for _ in range(nvars)): Fraction(rng.randint(-9, 9), rng.randint(1, 9)) for _ in range(8)}
        b = {tuple(rng.randint(-2, 6) for _ in range(nvars)): Fraction(rng.randint(-9, 9), rng.randint(1, 9)) for _ in range(8)}
        a = {e: x for e, x in a.items() if x}
        b = {e: x for e, x in b.items() if x}
        lo, hi = (-4,) * nvars, (7,) * nvars
        assert _both(a, b, lo, hi)


@given(coeff_dicts(2), coeff_dicts(2))
def test_backends_agree_property(a, b):
    assert _both(a, b, (-6, -6), (5, 5))


def test_big_integers_survive():
    a = {(0,): Fraction(10**40 + 1, 3), (1,): Fraction(-(10**30), 7)}
    b = {(0,): Fraction(10**25, 11), (2,): Fraction(1, 10**20)}
    assert _both(a, b, (0,), (4,))


def test_backend_labels():
    assert compiled.BACKEND != _kernels_py.BACKEND
