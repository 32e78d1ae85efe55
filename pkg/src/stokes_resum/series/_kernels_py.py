"""Pure-Python exact sparse convolution.

Both kernel backends expose ``convolve(a, b, lo, hi)``:

* ``a`` and ``b`` are sequences of ``(exponent_tuple, Fraction)`` pairs,
* ``lo`` and ``hi`` bound the output window (``lo <= e < hi`` componentwise),
* the result is a dict from exponent tuples to nonzero Fractions.
"""

from fractions import Fraction
from math import lcm

BACKEND = "python"


def common_denominator(terms):
    """Rewrite Fraction coefficients as integers over one denominator."""
    d = lcm(*(c.denominator for _, c in terms))
    return [(e, c.numerator * (d // c.denominator)) for e, c in terms], d


def _convolve1(a, b, lo, hi):
    lo0, hi0 = lo[0], hi[0]
    acc = {}
    get = acc.get
    bl = sorted(((e[0], c) for e, c in b))
    for (ea,), ca in a:
        start = lo0 - ea
        stop = hi0 - ea
        for eb, cb in bl:
            if eb < start:
                continue
            if eb >= stop:
                break
            k = ea + eb
            acc[k] = get(k, 0) + ca * cb
    return {(k,): v for k, v in acc.items() if v}


def _convolve2(a, b, lo, hi):
    lo0, lo1 = lo
    hi0, hi1 = hi
    acc = {}
    get = acc.get
    bl = sorted(b)
    for (a0, a1), ca in a:
        s0, t0 = lo0 - a0, hi0 - a0
        s1, t1 = lo1 - a1, hi1 - a1
        for (b0, b1), cb in bl:
            if b0 < s0:
                continue
            if b0 >= t0:
                break
            if s1 <= b1 < t1:
                k = (a0 + b0, a1 + b1)
                acc[k] = get(k, 0) + ca * cb
    return {k: v for k, v in acc.items() if v}


def _convolven(a, b, lo, hi):
    acc = {}
    get = acc.get
    n = len(lo)
    rng = range(n)
    bl = sorted(b)
    for ea, ca in a:
        s = [lo[i] - ea[i] for i in rng]
        t = [hi[i] - ea[i] for i in rng]
        for eb, cb in bl:
            if eb[0] < s[0]:
                continue
            if eb[0] >= t[0]:
                break
            ok = True
            for i in range(1, n):
                if not s[i] <= eb[i] < t[i]:
                    ok = False
                    break
            if ok:
                k = tuple([ea[i] + eb[i] for i in rng])
                acc[k] = get(k, 0) + ca * cb
    return {k: v for k, v in acc.items() if v}


def convolve(a, b, lo, hi):
    if not a or not b:
        return {}
    if len(a) > len(b):
        a, b = b, a
    ai, da = common_denominator(a)
    bi, db = common_denominator(b)
    n = len(lo)
    if n == 1:
        raw = _convolve1(ai, bi, lo, hi)
    elif n == 2:
        raw = _convolve2(ai, bi, lo, hi)
    else:
        raw = _convolven(ai, bi, lo, hi)
    d = da * db
    if d == 1:
        return {k: Fraction(v) for k, v in raw.items()}
    return {k: Fraction(v, d) for k, v in raw.items()}
