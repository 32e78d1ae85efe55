"""Independent numerics: parallel transport along polylines, Airy functions and Ei.

Transport integrates psi' = -A(z) z^(-k) psi with an adaptive embedded
Runge-Kutta method of order 8(5,3). Airy functions are summed from their
Maclaurin series in exact rationals and combined with 60-digit initial
values; Ei uses its convergent series for moderate arguments and the
continued fraction of E1 (or the asymptotic series on the positive axis)
for large ones.
"""

import cmath
import math
from dataclasses import dataclass
from decimal import Decimal, localcontext
from fractions import Fraction

import numpy as np

from .errors import DomainError, ToleranceError

# Ai(0) and -Ai'(0)
AI0 = Decimal("0.355028053887817239260063186004183176397979174199177240583327")
AIP0 = Decimal("0.258819403792806798405183560189203963479091138354934582210002")
SQRT3 = Decimal("1.73205080756887729352744634150587236694280525381038062805581")
EULER_GAMMA = 0.5772156649015328606065120900824024310421593359

MIN_TOL = 1e-13
AIRY_MAX_ABS = 8.0


# ---------------------------------------------------------------------------
# transport


@dataclass(frozen=True)
class PathSpec:
    """A polyline through ``waypoints`` staying ``min_distance`` away from the poles."""

    waypoints: tuple
    min_distance: float = 1e-3
    poles: tuple = (0j,)

    def __post_init__(self):
        pts = tuple(complex(p) for p in self.waypoints)
        if not pts:
            raise ValueError("a path needs at least one point")
        object.__setattr__(self, "waypoints", pts)
        if self.min_distance <= 0:
            raise ValueError("min_distance must be positive")
        for a, b in zip(pts, pts[1:]):
            for p in self.poles:
                if _segment_distance(a, b, complex(p)) < self.min_distance:
                    raise DomainError(f"segment {a} -> {b} passes within {self.min_distance} of the pole {p}")
        for a in pts:
            for p in self.poles:
                if abs(a - complex(p)) < self.min_distance:
                    raise DomainError(f"waypoint {a} lies too close to the pole {p}")

    @classmethod
    def parse(cls, text, min_distance=1e-3):
        """Parse "x0,y0;x1,y1;..." into a path."""
        pts = []
        for chunk in text.split(";"):
            chunk = chunk.strip()
            if not chunk:
                continue
            parts = chunk.split(",")
            if len(parts) != 2:
                raise ValueError(f"bad waypoint {chunk!r}; expected 'x,y'")
            pts.append(complex(float(parts[0]), float(parts[1])))
        return cls(tuple(pts), min_distance)

    def then(self, other):
        """This path followed by ``other`` (which must start where this one ends)."""
        if abs(self.waypoints[-1] - other.waypoints[0]) > 1e-15:
            raise ValueError("paths do not connect")
        return PathSpec(self.waypoints + other.waypoints[1:], min(self.min_distance, other.min_distance), self.poles)


def _segment_distance(a, b, p):
    d = b - a
    if d == 0:
        return abs(a - p)
    t = ((p - a) * d.conjugate()).real / abs(d) ** 2
    t = min(1.0, max(0.0, t))
    return abs(a + t * d - p)


@dataclass(frozen=True)
class TransportResult:
    matrix: np.ndarray
    error_estimate: float

    def to_json(self):
        return {
            "matrix": [[[float(x.real), float(x.imag)] for x in row] for row in self.matrix],
            "error_estimate": self.error_estimate,
        }


def _coefficient_evaluator(sys):
    """Callable (z, w) -> -A(w) z^(-k) where w is the system variable z^(1/r) on a chosen branch."""
    k = sys.pole_order
    n = sys.rank
    tables = []
    for i in range(n):
        for j in range(n):
            s = sys.A[i, j]
            tables.append(
                (i, j, [(e[0], complex(float(c.re), float(c.im))) for e, c in s.coeffs.items()])
            )

    def rhs(z, w):
        m = np.zeros((n, n), dtype=complex)
        for i, j, terms in tables:
            acc = 0j
            for e, c in terms:
                acc += c * w ** e
            m[i, j] = acc
        return -m * z ** (-k)

    return rhs


def _transport_segment(rhs, a, b, wa, r, n, tol):
    from scipy.integrate import solve_ivp

    d = b - a

    def f(tau, y):
        z = a + tau * d
        w = wa * (z / a) ** (1.0 / r) if r > 1 else z
        m = rhs(z, w) * d
        Y = y.reshape(n, n)
        return (m @ Y).reshape(-1)

    y0 = np.eye(n, dtype=complex).reshape(-1)
    sol = solve_ivp(f, (0.0, 1.0), y0, method="DOP853", rtol=tol, atol=tol)
    if not sol.success:
        raise ToleranceError(f"integration failed on segment {a} -> {b}: {sol.message}")
    return sol.y[:, -1].reshape(n, n)


def transport(sys, path, tol=1e-10, branch=None):
    """Fundamental matrix of psi' = -A(z) z^(-k) psi from the start of ``path`` to its end.

    Segments are composed multiplicatively. For a ramified system the
    variable z^(1/r) starts on ``branch`` (default: principal) and is
    continued along the path. The error estimate compares against a run
    at a tenth of the tolerance.
    """
    if tol < MIN_TOL:
        raise ValueError(f"tolerance must be at least {MIN_TOL}")
    if not isinstance(path, PathSpec):
        path = PathSpec(tuple(path))
    n = sys.rank
    r = sys.ramification
    rhs = _coefficient_evaluator(sys)
    pts = path.waypoints

    def run(t):
        total = np.eye(n, dtype=complex)
        w = branch if branch is not None else (pts[0] ** (1.0 / r) if r > 1 else pts[0])
        for a, b in zip(pts, pts[1:]):
            if a == b:
                continue
            total = _transport_segment(rhs, a, b, w, r, n, t) @ total
            if r > 1:
                w = w * (b / a) ** (1.0 / r)
        return total

    m = run(tol)
    if len(pts) < 2 or all(a == b for a, b in zip(pts, pts[1:])):
        return TransportResult(m, 0.0)
    fine = run(max(tol / 10, MIN_TOL))
    err = float(np.max(np.abs(m - fine)))
    if not np.isfinite(err):
        raise ToleranceError("transport produced non-finite values")
    if abs(np.linalg.det(m)) == 0:
        raise ToleranceError("transport matrix is singular")
    return TransportResult(m, err)


# ---------------------------------------------------------------------------
# Airy functions


SUM_DIGITS = 90


def _gauss(x):
    x = complex(x)
    return Fraction(x.real), Fraction(x.imag)


def _cmul(a, b):
    return (a[0] * b[0] - a[1] * b[1], a[0] * b[1] + a[1] * b[0])


def _maclaurin(x, budget):
    """Partial sums of f, f', g, g' in 90-digit Decimal, where y'' = x y,
    f(0) = 1, f'(0) = 0, g(0) = 0, g'(0) = 1. Decimal(float) is exact, so
    only the rounding of the sums themselves enters.
    """
    x = complex(x)
    mag = abs(x)
    with localcontext() as ctx:
        ctx.prec = SUM_DIGITS
        xr = (Decimal(x.real), Decimal(x.imag))
        one, zero = (Decimal(1), Decimal(0)), (Decimal(0), Decimal(0))
        # f = sum a_k x^(3k), a_k = a_{k-1} / ((3k-1)(3k)); g = sum b_k x^(3k+1), b_k = b_{k-1} / ((3k)(3k+1))
        f, fp, g, gp = one, zero, xr, one
        x2 = _cmul(xr, xr)
        x3 = _cmul(x2, xr)
        pw = one
        a = Decimal(1)
        b = Decimal(1)
        k = 0
        while True:
            k += 1
            if k > budget:
                raise DomainError(f"Airy series did not converge within {budget} terms")
            a = a / ((3 * k - 1) * (3 * k))
            b = b / ((3 * k) * (3 * k + 1))
            prev = pw
            pw = _cmul(pw, x3)
            d_f = _cmul(prev, x2)
            p1 = _cmul(pw, xr)
            ca, cb = 3 * k * a, (3 * k + 1) * b
            f = (f[0] + a * pw[0], f[1] + a * pw[1])
            fp = (fp[0] + ca * d_f[0], fp[1] + ca * d_f[1])
            g = (g[0] + b * p1[0], g[1] + b * p1[1])
            gp = (gp[0] + cb * pw[0], gp[1] + cb * pw[1])
            bound = float(a) * (mag ** (3 * k + 1) + 1) * (3 * k + 4) * max(mag, 1.0) ** 3
            if 3 * k > mag ** 1.5 and bound < 1e-60:
                return f, fp, g, gp


def _airy_decimal(x, budget):
    """(Ai, Ai', Bi, Bi') as pairs of 60-digit Decimals (real, imaginary)."""
    x = complex(x)
    if abs(x) > AIRY_MAX_ABS:
        raise DomainError(f"|x| = {abs(x)} exceeds the Maclaurin range {AIRY_MAX_ABS}")
    f, fp, g, gp = _maclaurin(x, budget)
    with localcontext() as ctx:
        ctx.prec = 60

        def comb(c1, u, c2, v):
            re = c1 * u[0] + c2 * v[0]
            im = c1 * u[1] + c2 * v[1]
            return re, im

        return (
            comb(AI0, f, -AIP0, g),
            comb(AI0, fp, -AIP0, gp),
            comb(SQRT3 * AI0, f, SQRT3 * AIP0, g),
            comb(SQRT3 * AI0, fp, SQRT3 * AIP0, gp),
        )


def airy_values(x, budget=400):
    """(Ai, Ai', Bi, Bi') at complex x with |x| <= 8, rounded once to complex doubles."""
    return tuple(complex(float(re), float(im)) for re, im in _airy_decimal(x, budget))


def airy_wronskian(x, budget=400):
    """Ai Bi' - Bi Ai' evaluated before rounding, so large values do not cancel."""
    ai, aip, bi, bip = _airy_decimal(x, budget)
    with localcontext() as ctx:
        ctx.prec = 60

        def mul(p, q):
            return p[0] * q[0] - p[1] * q[1], p[0] * q[1] + p[1] * q[0]

        a = mul(ai, bip)
        b = mul(bi, aip)
        return complex(float(a[0] - b[0]), float(a[1] - b[1]))


def airy_fundamental(z):
    """Fundamental matrix [[Ai(1/z), Bi(1/z)], [Ai'(1/z), Bi'(1/z)]] of the Airy system at infinity."""
    ai, aip, bi, bip = airy_values(1 / complex(z))
    return np.array([[ai, bi], [aip, bip]], dtype=complex)


# ---------------------------------------------------------------------------
# exponential integral

SERIES_RADIUS = 40.0


def _ei_series(x):
    """gamma + log x + sum x^n / (n n!) with the sum computed exactly, principal log."""
    xr = _gauss(x)
    mag = abs(x)
    s = (Fraction(0), Fraction(0))
    term = (Fraction(1), Fraction(0))  # x^n / n!
    n = 0
    while True:
        n += 1
        term = _cmul(term, xr)
        term = (term[0] / n, term[1] / n)
        s = (s[0] + term[0] / n, s[1] + term[1] / n)
        if n > 2 * mag:
            t = abs(complex(float(term[0]), float(term[1]))) / n
            if t < 1e-20 * max(1.0, abs(complex(float(s[0]), float(s[1])))):
                break
    val = EULER_GAMMA + cmath.log(x) + complex(float(s[0]), float(s[1]))
    if x.imag == 0 and x.real < 0:
        # principal value on the cut: the mean of the two sides
        val = complex(val.real, 0.0)
    return val


def _e1_continued_fraction(w):
    """E1(w) for large |w| off the negative axis (modified Lentz)."""
    tiny = 1e-300
    b = w + 1
    c = 1 / tiny
    d = 1 / b
    h = d
    for i in range(1, 10000):
        a = -i * i
        b = b + 2
        d = 1 / (a * d + b)
        c = b + a / c
        delta = c * d
        h = h * delta
        if abs(delta - 1) < 1e-16:
            return h * cmath.exp(-w)
    raise ToleranceError("E1 continued fraction did not converge")


def _ei_asymptotic_real(x):
    """Ei(x) for large positive real x: e^x / x sum n! / x^n, cut at the smallest term."""
    s = 0.0
    term = 1.0
    n = 0
    while True:
        s += term
        n += 1
        nxt = term * n / x
        if abs(nxt) >= abs(term) or abs(nxt) < 1e-17 * abs(s):
            break
        term = nxt
    return math.exp(x) / x * s


def _continuous_arg(path):
    """arg of the last point of a polyline, continued from the principal arg of the first."""
    pts = [complex(p) for p in path]
    theta = cmath.phase(pts[0])
    for a, b in zip(pts, pts[1:]):
        if b == 0 or a == 0:
            raise DomainError("branch path passes through 0")
        theta += cmath.phase(b / a)
    return theta


def expint_Ei(x, branch_hint=None):
    """Exponential integral Ei(x) = -PV int_{-x}^inf e^(-t)/t dt.

    Without a hint the principal branch is returned: cut along the negative
    real axis, real (the principal value) on both real half-axes. A
    ``branch_hint`` is a polyline ending at x; the value is then continued
    along it from the principal branch at its first point, which changes
    the result by i times the change in arg.
    """
    x = complex(x)
    if x == 0:
        raise DomainError("Ei has a logarithmic singularity at 0")
    on_cut = x.imag == 0 and x.real < 0
    if abs(x) <= SERIES_RADIUS:
        val = _ei_series(x)
    elif x.real > 0 and abs(x.imag) < 1e-3 * x.real:
        val = complex(_ei_asymptotic_real(x.real), 0.0)
        if x.imag:
            val += complex(0, math.copysign(math.pi, x.imag))
    else:
        # Ei(x) = -E1(-x) + log x - log(-x) off the real axis
        val = -_e1_continued_fraction(-x) + cmath.log(x) - cmath.log(-x)
        if on_cut:
            val = complex(val.real, 0.0)
    if branch_hint is not None:
        pts = list(branch_hint)
        if abs(complex(pts[-1]) - x) > 1e-12 * max(1.0, abs(x)):
            raise ValueError("branch hint must end at x")
        base = 0.0 if on_cut else cmath.phase(x)
        val += 1j * (_continuous_arg(pts) - base)
    return val


def euler_closed_form(z, mu):
    """rho(z, mu) = exp((z mu - 1)/z) (Ei((1 - z mu)/z) - Ei(1/z)), with rho(z, 0) = 0.

    The two Ei values are joined along the straight segment from 1/z to
    (1 - z mu)/z so that the difference vanishes at mu = 0.
    """
    z, mu = complex(z), complex(mu)
    a = 1 / z
    b = (1 - z * mu) / z
    ea = expint_Ei(a)
    eb = expint_Ei(b, branch_hint=[a, b]) if a != b else ea
    return cmath.exp((z * mu - 1) / z) * (eb - ea)


__all__ = [
    "PathSpec",
    "TransportResult",
    "airy_fundamental",
    "airy_values",
    "airy_wronskian",
    "euler_closed_form",
    "expint_Ei",
    "transport",
]
