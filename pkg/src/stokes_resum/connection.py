"""Meromorphic connections d + A(z) z^(-k) dz and scalar operators.

Horizontal sections satisfy psi' = -A(z) z^(-k) psi. A system carries a
ramification index r: its matrix is a series in w = z^(1/r).
"""

import cmath
import math
from dataclasses import dataclass, field
from fractions import Fraction

from .errors import EtaleError, NotCompanionError, StokesResumError, WindowError
from .series import (
    EXACT,
    MatSeries,
    MultiSeries,
    Scalar,
    VarSpec,
    base_derivative,
    const_det,
    derivative,
    invert,
    mul,
    substitute,
)
from .series.matseries import const_inverse

DEFAULT_VAR = "z"


def _var(name=DEFAULT_VAR, ramification=1, prec=EXACT):
    return VarSpec(name, ramification, 0, prec)


def poly(coeffs, name=DEFAULT_VAR, ramification=1, prec=EXACT):
    """Univariate series from {exponent: value} or a list of values by exponent."""
    if isinstance(coeffs, (list, tuple)):
        coeffs = dict(enumerate(coeffs))
    v = _var(name, ramification, prec)
    return MultiSeries([v], {(e,): c for e, c in coeffs.items()})


@dataclass(frozen=True)
class MeromorphicSystem:
    """The connection d + A(z) z^(-pole_order) dz with A regular at 0."""

    A: MatSeries
    pole_order: int

    def __post_init__(self):
        A = self.A
        if A.rows != A.cols:
            raise ValueError("connection matrix must be square")
        if len(A.vars) != 1:
            raise ValueError("connection matrix must be univariate")
        if A.vars[0].low < 0:
            raise ValueError("connection matrix must be regular at 0")
        if not isinstance(self.pole_order, int) or self.pole_order < 0:
            raise ValueError("pole order must be a nonnegative integer")

    @classmethod
    def from_matrix(cls, matrix, pole_order, ramification=1, prec=EXACT, var=DEFAULT_VAR):
        """Build from a nested list whose entries are coefficient lists/dicts or MultiSeries."""
        rows = []
        for row in matrix:
            out = []
            for x in row:
                if isinstance(x, MultiSeries):
                    out.append(x)
                elif isinstance(x, (list, tuple, dict)):
                    out.append(poly(x, var, ramification, prec))
                else:
                    out.append(poly({0: x}, var, ramification, prec))
            rows.append(out)
        A = MatSeries(rows)
        return cls(A.map(lambda s: s.lower((0,))), pole_order)

    @property
    def rank(self):
        return self.A.rows

    @property
    def ramification(self):
        return self.A.vars[0].ramification

    @property
    def var(self):
        return self.A.vars[0].name

    @property
    def prec(self):
        return self.A.vars[0].prec

    def entry(self, i, j):
        return self.A[i, j]

    def leading_matrix(self):
        return self.A.constant_matrix()

    def truncate(self, prec):
        return MeromorphicSystem(self.A.truncate((prec,)), self.pole_order)

    def coefficient_matrix(self, n):
        """The matrix of coefficients of w^n."""
        return [[self.A[i, j].coefficient((n,)) for j in range(self.rank)] for i in range(self.rank)]

    def eval_matrix(self, z):
        """A(z) as a complex numpy matrix (principal branch for ramified systems)."""
        import numpy as np

        out = np.empty((self.rank, self.rank), dtype=complex)
        for i in range(self.rank):
            for j in range(self.rank):
                out[i, j] = self.A[i, j].eval_numeric({self.var: z})
        return out

    def rhs(self, z):
        """-A(z) z^(-k): the coefficient of the linear ODE psi' = rhs(z) psi."""
        return -self.eval_matrix(z) * complex(z) ** (-self.pole_order)

    def with_ramification(self, r):
        return MeromorphicSystem(self.A.map(lambda s: s.with_ramification(self.var, r)), self.pole_order)

    def __eq__(self, other):
        if not isinstance(other, MeromorphicSystem):
            return NotImplemented
        return self.pole_order == other.pole_order and self.A == other.A

    def __hash__(self):
        return hash((self.pole_order, self.A))

    # -- serialization ---------------------------------------------------
    def to_json(self):
        out = {
            "rank": self.rank,
            "pole_order": self.pole_order,
            "ramification": self.ramification,
            "var": self.var,
            "matrix": [
                [
                    [[e[0], *c.to_json()] for e, c in self.A[i, j].terms()]
                    for j in range(self.rank)
                ]
                for i in range(self.rank)
            ],
        }
        if not self.A.vars[0].exact:
            out["prec"] = self.prec
        return out

    @classmethod
    def from_json(cls, d):
        try:
            rank = int(d["rank"])
            k = int(d["pole_order"])
            r = int(d.get("ramification", 1))
            var = str(d.get("var", DEFAULT_VAR))
            prec = d.get("prec")
            prec = EXACT if prec is None else int(prec)
            rows = d["matrix"]
        except (KeyError, TypeError) as exc:
            raise ValueError(f"malformed system: {exc}") from exc
        if len(rows) != rank or any(len(row) != rank for row in rows):
            raise ValueError("matrix shape does not match rank")
        mat = []
        for row in rows:
            out = []
            for entry in row:
                coeffs = {}
                for term in entry:
                    if len(term) not in (2, 3):
                        raise ValueError(f"bad polynomial term {term!r}")
                    e = int(term[0])
                    if e < 0:
                        raise ValueError("connection matrix entries must be regular")
                    c = Scalar.parse(str(term[1]), str(term[2]) if len(term) == 3 else "0")
                    coeffs[e] = coeffs.get(e, Scalar(0)) + c
                out.append(poly(coeffs, var, r, prec))
            mat.append(out)
        return cls(MatSeries(mat).map(lambda s: s.lower((0,))), k)


@dataclass(frozen=True)
class ScalarOperator:
    """delta^m + p_{m-1} delta^(m-1) + ... + p_0 with delta = z^n d/dz."""

    coefficients: tuple
    pole_order: int

    def __post_init__(self):
        if not self.coefficients:
            raise ValueError("operator order must be positive")
        object.__setattr__(self, "coefficients", tuple(self.coefficients))
        if self.pole_order < 0:
            raise ValueError("pole order must be nonnegative")

    @property
    def order(self):
        return len(self.coefficients)

    @classmethod
    def from_polys(cls, coeffs, pole_order, var=DEFAULT_VAR, ramification=1, prec=EXACT):
        ps = []
        for c in coeffs:
            if isinstance(c, MultiSeries):
                ps.append(c)
            elif isinstance(c, (list, tuple, dict)):
                ps.append(poly(c, var, ramification, prec))
            else:
                ps.append(poly({0: c}, var, ramification, prec))
        return cls(tuple(ps), pole_order)

    def to_json(self):
        return {
            "order": self.order,
            "pole_order": self.pole_order,
            "coefficients": [[[e[0], *c.to_json()] for e, c in p.terms()] for p in self.coefficients],
            "ramification": self.coefficients[0].vars[0].ramification,
            "var": self.coefficients[0].vars[0].name,
        }

    @classmethod
    def from_json(cls, d):
        var = str(d.get("var", DEFAULT_VAR))
        r = int(d.get("ramification", 1))
        ps = []
        for entry in d["coefficients"]:
            coeffs = {}
            for term in entry:
                e = int(term[0])
                c = Scalar.parse(str(term[1]), str(term[2]) if len(term) == 3 else "0")
                coeffs[e] = coeffs.get(e, Scalar(0)) + c
            ps.append(poly(coeffs, var, r))
        if "order" in d and int(d["order"]) != len(ps):
            raise ValueError("operator order does not match the number of coefficients")
        return cls(tuple(ps), int(d["pole_order"]))


def companion(op):
    """First-order system on jets (f, delta f, ...) equivalent to op f = 0.

    The matrix has -1 on the superdiagonal and bottom row p_0, ..., p_{m-1}.
    """
    m = op.order
    vars = op.coefficients[0].vars
    for p in op.coefficients:
        if p.signature() != op.coefficients[0].signature():
            raise ValueError("operator coefficients must share one variable")
    zero = MultiSeries.zero(vars)
    minus_one = MultiSeries.constant(-1, vars)
    rows = []
    for i in range(m):
        row = []
        for j in range(m):
            if i == m - 1:
                row.append(op.coefficients[j])
            elif j == i + 1:
                row.append(minus_one)
            else:
                row.append(zero)
        rows.append(row)
    return MeromorphicSystem(MatSeries(rows).map(lambda s: s.lower((0,))), op.pole_order)


def is_companion(sys):
    n = sys.rank
    for i in range(n - 1):
        for j in range(n):
            c = sys.A[i, j].coeffs
            if j == i + 1:
                if c != {(0,): Scalar(-1)}:
                    return False
            elif c:
                return False
    return True


def read_back(sys):
    """Recover the scalar operator from a companion system."""
    if not is_companion(sys):
        raise NotCompanionError("system is not in companion form")
    n = sys.rank
    return ScalarOperator(tuple(sys.A[n - 1, j] for j in range(n)), sys.pole_order)


def isotropy_leading(sys):
    """The leading term A(0) of the principal part."""
    if sys.pole_order < 1:
        raise ValueError("the leading term of the principal part needs a pole")
    return sys.leading_matrix()


# ---------------------------------------------------------------------------
# eigenvalues and anti-Stokes directions


def _rational_sqrt(q):
    if q < 0:
        return None
    n, d = q.numerator, q.denominator
    rn, rd = math.isqrt(n), math.isqrt(d)
    if rn * rn == n and rd * rd == d:
        return Fraction(rn, rd)
    return None


def gaussian_sqrt(s):
    """An exact square root of a Gaussian rational, or None if it is irrational."""
    s = Scalar.coerce(s)
    c, d = s.re, s.im
    if not d:
        r = _rational_sqrt(c)
        if r is not None:
            return Scalar(r)
        r = _rational_sqrt(-c)
        return Scalar(0, r) if r is not None else None
    m = _rational_sqrt(c * c + d * d)
    if m is None:
        return None
    a = _rational_sqrt((c + m) / 2)
    if a is None or not a:
        return None
    b = d / (2 * a)
    return Scalar(a, b)


def _nullity(m):
    n = len(m)
    a = [[Scalar.coerce(x) for x in row] for row in m]
    rank = 0
    for col in range(n):
        piv = next((r for r in range(rank, n) if a[r][col]), None)
        if piv is None:
            continue
        a[rank], a[piv] = a[piv], a[rank]
        inv = a[rank][col].reciprocal()
        for r in range(n):
            if r != rank and a[r][col]:
                f = a[r][col] * inv
                a[r] = [x - f * y for x, y in zip(a[r], a[rank])]
        rank += 1
    return n - rank


def eigenvalues(m):
    """Eigenvalues of a constant matrix.

    Returns (values, method): exact Scalars for triangular and 2x2 matrices
    whose discriminant has a Gaussian-rational square root, complex doubles
    otherwise.
    """
    n = len(m)
    m = [[Scalar.coerce(x) for x in row] for row in m]
    upper = all(not m[i][j] for i in range(n) for j in range(i))
    lower = all(not m[i][j] for i in range(n) for j in range(i + 1, n))
    if upper or lower:
        return [m[i][i] for i in range(n)], "exact"
    if n == 2:
        tr = m[0][0] + m[1][1]
        det = m[0][0] * m[1][1] - m[0][1] * m[1][0]
        root = gaussian_sqrt(tr * tr - 4 * det)
        if root is not None:
            half = Scalar(Fraction(1, 2))
            return [(tr - root) * half, (tr + root) * half], "exact"
    import numpy as np

    vals = np.linalg.eigvals(np.array([[complex(x) for x in row] for row in m]))
    return [complex(v) for v in vals], "numeric"


def is_diagonalizable(m, values, method):
    n = len(m)
    if method == "exact":
        distinct = []
        for v in values:
            if v not in distinct:
                distinct.append(v)
        total = 0
        for v in distinct:
            shifted = [[Scalar.coerce(m[i][j]) - (v if i == j else 0) for j in range(n)] for i in range(n)]
            total += _nullity(shifted)
        return total == n
    import numpy as np

    a = np.array([[complex(x) for x in row] for row in m])
    _, vecs = np.linalg.eig(a)
    return bool(np.linalg.cond(vecs) < 1e8)


@dataclass(frozen=True)
class AntiStokesDirection:
    i: int
    j: int
    q: object
    roots: tuple
    exact_roots: tuple = None

    def to_json(self):
        q = self.q.to_json() if isinstance(self.q, Scalar) else [repr(complex(self.q).real), repr(complex(self.q).imag)]
        out = {
            "i": self.i,
            "j": self.j,
            "q": q,
            "roots": [[r.real, r.imag] for r in self.roots],
        }
        if self.exact_roots is not None:
            out["exact_roots"] = [r.to_json() for r in self.exact_roots]
        return out


@dataclass(frozen=True)
class AntiStokesResult:
    eigenvalues: tuple
    method: str
    diagonalizable: bool
    directions: tuple = field(default_factory=tuple)

    def to_json(self):
        ev = [v.to_json() if isinstance(v, Scalar) else [complex(v).real, complex(v).imag] for v in self.eigenvalues]
        return {
            "eigenvalues": ev,
            "method": self.method,
            "diagonalizable": self.diagonalizable,
            "directions": [d.to_json() for d in self.directions],
        }


def _snap(x, q, p):
    """Try to express a numeric root x of v^p = q exactly."""
    cand = Scalar(
        Fraction(x.real).limit_denominator(10 ** 6),
        Fraction(x.imag).limit_denominator(10 ** 6),
    )
    return cand if cand ** p == q else None


def anti_stokes(sys):
    """Pairs (i, j) of leading eigenvalues and the directions v with v^(k-1) = lambda_j - lambda_i."""
    k = sys.pole_order
    if k < 2:
        raise StokesResumError("anti-Stokes directions need pole order at least 2")
    m = sys.leading_matrix()
    values, method = eigenvalues(m)
    diag = is_diagonalizable(m, values, method)
    dirs = []
    p = k - 1
    if diag:
        n = len(values)
        for i in range(n):
            for j in range(n):
                if i == j:
                    continue
                q = values[j] - values[i]
                if (not q) if isinstance(q, Scalar) else abs(q) == 0:
                    continue
                qc = complex(q)
                r = abs(qc) ** (1.0 / p)
                th = cmath.phase(qc)
                roots = tuple(cmath.rect(r, (th + 2 * math.pi * s) / p) for s in range(p))
                exact = None
                if isinstance(q, Scalar):
                    snapped = [_snap(x, q, p) for x in roots]
                    if all(s is not None for s in snapped):
                        exact = tuple(snapped)
                        roots = tuple(complex(s) for s in snapped)
                dirs.append(AntiStokesDirection(i, j, q, roots, exact))
    return AntiStokesResult(tuple(values), method, diag, tuple(dirs))


# ---------------------------------------------------------------------------
# branched covers z -> z^n


@dataclass(frozen=True)
class DivisorData:
    n: int
    q: int
    ramification_order: int
    pullback_order: int
    upstairs_order: int
    etale: bool

    def to_json(self):
        return {
            "n": self.n,
            "q": self.q,
            "ramification_order": self.ramification_order,
            "pullback_order": self.pullback_order,
            "upstairs_order": self.upstairs_order,
            "etale": self.etale,
        }


def divisor_calculus(n, q):
    """Divisor bookkeeping for f: z -> z^n over a pole of order q."""
    if n < 1 or q < 1:
        raise ValueError("need n >= 1 and q >= 1")
    R = n - 1
    return DivisorData(n, q, R, n * q - R, n * q - R, R <= n * q)


def pullback(sys, n):
    """Pull back along z -> z^n: A_X(x) = n A(x^n), pole order n k - n + 1."""
    if n < 1:
        raise ValueError("covering degree must be positive")
    if n == 1:
        return sys
    r = sys.ramification
    g = math.gcd(n, r)
    factor = n // g
    new_r = r // g
    name = sys.var
    k = sys.pole_order

    def lift(s):
        v = s.vars[0]
        nv = VarSpec(name, new_r, v.low * factor, EXACT if v.exact else v.prec * factor)
        return MultiSeries(
            [nv], {(e[0] * factor,): c * n for e, c in s.coeffs.items()}
        )

    # a pole of order 0 pulls back to n z^(n-1) dz; keep the form d + B x^(-K) dx
    if k >= 1:
        return MeromorphicSystem(sys.A.map(lift), n * k - n + 1)
    shift = (n - 1) * new_r
    return MeromorphicSystem(sys.A.map(lambda s: lift(s).shift((shift,))), 0)


def pushforward(sys, n):
    """Direct image along z -> w = z^n in the fiber basis (1, z, ..., z^(n-1)).

    Requires ramification 1 and upstairs pole order K = n q - n + 1 with q >= 1.
    Block (m', m) of the result is
    (1/n) [delta_{m'm} m w^(q-1) + A_c(w) * (w if c + m >= n else 1)],
    c = (m' - m) mod n, where A(z) = sum_c z^c A_c(z^n).
    """
    if n < 1:
        raise ValueError("covering degree must be positive")
    if n == 1:
        return sys
    if sys.ramification != 1:
        raise ValueError("pushforward is implemented for unramified systems")
    K = sys.pole_order
    if (K + n - 1) % n or (K + n - 1) // n < 1:
        raise EtaleError(f"pole order {K} is not of the form n q - n + 1 for n = {n}")
    q = (K + n - 1) // n
    rank = sys.rank
    name = sys.var
    v = sys.A.vars[0]
    prec_w = EXACT if v.exact else -(-v.prec // n)
    wv = VarSpec(name, 1, 0, prec_w)
    # split A_ij(z) = sum_c z^c A_c,ij(z^n)
    parts = {}
    for i in range(rank):
        for j in range(rank):
            for (e,), c in sys.A[i, j].coeffs.items():
                cc, ee = e % n, e // n
                parts.setdefault((cc, i, j), {})
                parts[(cc, i, j)][ee] = c
    inv_n = Fraction(1, n)
    size = rank * n
    rows = [[dict() for _ in range(size)] for _ in range(size)]
    for mp in range(n):
        for m in range(n):
            c = (mp - m) % n
            bump = 1 if c + m >= n else 0
            for i in range(rank):
                for j in range(rank):
                    cell = rows[mp * rank + i][m * rank + j]
                    for ee, val in parts.get((c, i, j), {}).items():
                        e2 = ee + bump
                        cell[e2] = cell.get(e2, 0) + val * inv_n
                    if mp == m and i == j and m:
                        cell[q - 1] = cell.get(q - 1, 0) + Fraction(m, n)
    mat = [[MultiSeries([wv], {(e,): x for e, x in cell.items()}) for cell in row] for row in rows]
    return MeromorphicSystem(MatSeries(mat).map(lambda s: s.lower((0,))), q)


# ---------------------------------------------------------------------------
# projective connections


def schwarzian_derivative(g):
    """S(g) = g'''/g' - (3/2) (g''/g')^2 for a univariate series g."""
    name = g.names[0]
    g1 = derivative(g, name)
    g2 = derivative(g1, name)
    g3 = derivative(g2, name)
    inv = invert(g1)
    r2 = mul(g2, inv)
    return mul(g3, inv) - mul(r2, r2).scale(Fraction(3, 2))


def schwarzian(g, q_z, convention="quotient"):
    """Transform a projective connection q_z along z = g(w).

    ``convention="quotient"``: q_w = (q_z + S(g)) (g')^(-2), with q_z given in
    the same variable as g.

    ``convention="classical"``: q_w = (g')^2 q_z(g(w)) + S(g)/2, the rule under
    which y'' + q_z y = 0 becomes Y'' + q_w Y = 0 for Y = (g')^(-1/2) y(g).
    """
    name = g.names[0]
    s = schwarzian_derivative(g)
    gp = derivative(g, name)
    if convention == "quotient":
        return mul(q_z + s, invert(mul(gp, gp)))
    if convention == "classical":
        composed = substitute(q_z, {q_z.names[0]: g})
        return mul(mul(gp, gp), composed) + s.scale(Fraction(1, 2))
    raise ValueError(f"unknown convention {convention!r}")


def compose_univariate(g, h):
    """g(h(w)) for univariate series."""
    return substitute(g, {g.names[0]: h})


# ---------------------------------------------------------------------------
# elementary modification


def elementary_modification(sys):
    """[[0,-1],[p0,p1]] z^(-n) dz  ->  [[0,-1],[z^2 p0, z p1 - z^n]] z^(-n-1) dz.

    The result is the conjugate of the input by the gauge diag(1, z).
    """
    if sys.rank != 2 or not is_companion(sys):
        raise NotCompanionError("elementary modification needs a 2x2 companion system")
    n = sys.pole_order
    name = sys.var
    v = sys.A.vars[0]
    p0, p1 = sys.A[1, 0], sys.A[1, 1]
    zn = MultiSeries.monomial([VarSpec(name, v.ramification)], (n * v.ramification,))
    new_p0 = p0.shift((2 * v.ramification,))
    new_p1 = p1.shift((v.ramification,)) - zn
    op = ScalarOperator((new_p0.lower((0,)), new_p1.lower((0,))), n + 1)
    return companion(op)


def modification_gauge_identity(sys, modified):
    """Check z^(n+1) (G A G^-1 z^(-n) - G' G^-1) == A_modified for G = diag(1, z), exactly."""
    n = sys.pole_order
    r = sys.ramification
    A = sys.A
    a01 = A[0, 1].shift((-r,))
    a10 = A[1, 0].shift((r,))
    conj = [[A[0, 0], a01], [a10, A[1, 1]]]
    expected = [
        [conj[0][0].shift((r,)), conj[0][1].shift((r,))],
        [conj[1][0].shift((r,)), conj[1][1].shift((r,)) - MultiSeries.monomial(A.vars, ((n) * r,))],
    ]
    return all(
        expected[i][j].same_coefficients(modified.A[i, j].lower((expected[i][j].lows[0],)))
        for i in range(2)
        for j in range(2)
    )


def uniformizing_system(k):
    """Reduced form f'' + z^(-2) f / 4 = 0 as a companion system (pole 1), modified k-1 times."""
    sys = companion(ScalarOperator.from_polys([Fraction(1, 4), -1], 1))
    for _ in range(k - 1):
        sys = elementary_modification(sys)
    return sys


__all__ = [
    "AntiStokesDirection",
    "AntiStokesResult",
    "DivisorData",
    "MeromorphicSystem",
    "ScalarOperator",
    "anti_stokes",
    "companion",
    "compose_univariate",
    "divisor_calculus",
    "eigenvalues",
    "elementary_modification",
    "gaussian_sqrt",
    "is_companion",
    "isotropy_leading",
    "modification_gauge_identity",
    "poly",
    "pullback",
    "pushforward",
    "read_back",
    "schwarzian",
    "schwarzian_derivative",
    "uniformizing_system",
]
