"""The Euler and Airy resummations with their expected values."""

from fractions import Fraction

from .oracle import euler_closed_form
from .resummation import airy_demo, euler_demo, euler_expected
from .series import Scalar

# Resummed Airy representation through total degree 6, keyed by
# entry (i, j) and then by (z-exponent, u-exponent).
AIRY_GOLDEN = {
    (0, 0): {(0, 0): 1, (1, 2): Fraction(1, 2), (3, 3): Fraction(-7, 6), (2, 4): Fraction(1, 24)},
    (0, 1): {(1, 1): -1, (3, 2): 1, (2, 3): Fraction(-1, 6)},
    (1, 0): {(0, 1): -1, (2, 2): Fraction(3, 2), (1, 3): Fraction(-1, 6)},
    (1, 1): {(0, 0): 1, (1, 2): Fraction(1, 2), (3, 3): Fraction(-4, 3), (2, 4): Fraction(1, 24)},
}
AIRY_GOLDEN_DEGREE = 6

EULER_POINT = (Fraction(1, 10), Fraction(1, 2))


def euler_expected_entry(i, j, a, b):
    """Expected coefficient of z^a mu^b in entry (i, j) of the resummed Euler gauge."""
    if (i, j) == (0, 0):
        if a:
            return Fraction(0)
        f = 1
        for x in range(2, b + 1):
            f *= x
        return Fraction(1, f)
    if (i, j) == (1, 1):
        return Fraction(1 if (a, b) == (0, 0) else 0)
    if (i, j) == (1, 0):
        return Fraction(0)
    return euler_expected(a, b)


def compare_euler(rep):
    """List of (i, j, a, b, got, expected) mismatches over all terms of degree <= rep.degree."""
    bad = []
    D = rep.degree
    for i in range(2):
        for j in range(2):
            for a in range(D + 1):
                for b in range(D + 1 - a):
                    got = rep.coefficient(i, j, a, b)
                    exp = euler_expected_entry(i, j, a, b)
                    if got != Scalar(exp):
                        bad.append((i, j, a, b, str(got), str(exp)))
    return bad


def compare_airy(rep):
    """Mismatches against the golden matrix over terms of degree <= min(6, rep.degree)."""
    D = min(rep.degree, AIRY_GOLDEN_DEGREE)
    bad = []
    for (i, j), golden in AIRY_GOLDEN.items():
        for a in range(D + 1):
            for b in range(D + 1 - a):
                got = rep.coefficient(i, j, a, b)
                exp = golden.get((a, b), 0)
                if got != Scalar(exp):
                    bad.append((i, j, a, b, str(got), str(Fraction(exp))))
    return bad


def run_euler(degree):
    rep = euler_demo(degree)
    bad = compare_euler(rep)
    z, mu = EULER_POINT
    approx = complex(rep.eval_numeric(float(z), float(mu))[0, 1])
    exact = euler_closed_form(float(z), float(mu))
    return rep, {
        "exact_match": not bad,
        "mismatches": bad[:20],
        "closed_form_point": [str(z), str(mu)],
        "closed_form_abs_error": abs(approx - exact),
    }


def run_airy(degree):
    rep = airy_demo(degree)
    bad = compare_airy(rep)
    return rep, {
        "exact_match": not bad,
        "golden_degree": min(degree, AIRY_GOLDEN_DEGREE),
        "mismatches": bad[:20],
    }


__all__ = [
    "AIRY_GOLDEN",
    "AIRY_GOLDEN_DEGREE",
    "compare_airy",
    "compare_euler",
    "euler_expected_entry",
    "run_airy",
    "run_euler",
]
