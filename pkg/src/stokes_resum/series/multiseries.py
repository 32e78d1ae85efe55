"""Truncated multivariate Laurent series with exact Gaussian-rational coefficients.

A series carries one :class:`VarSpec` per variable. The window
``[low, prec)`` of a variable means two things about the *true* series being
approximated:

* every coefficient whose exponent in that variable is below ``low`` is zero,
* a coefficient is known when its exponent is below ``prec`` in every variable.

Stored coefficients are exactly the nonzero known ones. A ``prec`` equal to
:data:`EXACT` marks a variable in which nothing is truncated (polynomials,
monomials).

Several operations accept ``degree=D``. They then work modulo all terms of
total degree above D, which is sound for series without negative exponents.
Such results are used for identities checked up to a total degree; their
coefficients beyond degree D carry no information.
"""

import cmath
import math
from dataclasses import dataclass, replace
from fractions import Fraction

from ..errors import NotInvertibleError, VariableMismatchError, WindowError
from . import _backend
from .scalar import ONE, ZERO, Scalar, fraction_str

EXACT = 1 << 62


def _cap(x):
    return EXACT if x >= EXACT // 2 else x


def is_exact(prec):
    return prec >= EXACT // 2


@dataclass(frozen=True)
class VarSpec:
    name: str
    ramification: int = 1
    low: int = 0
    prec: int = EXACT

    def __post_init__(self):
        if not isinstance(self.name, str) or not self.name.isidentifier():
            raise ValueError(f"variable name must be an identifier, got {self.name!r}")
        if not isinstance(self.ramification, int) or self.ramification < 1:
            raise ValueError("ramification must be a positive integer")
        if self.low >= self.prec:
            raise WindowError(f"empty window [{self.low}, {self.prec}) for {self.name}")

    @property
    def regular(self):
        return self.low >= 0

    @property
    def exact(self):
        return is_exact(self.prec)

    def window(self, low=None, prec=None):
        return replace(
            self,
            low=self.low if low is None else low,
            prec=self.prec if prec is None else _cap(prec),
        )

    def to_json(self):
        return {
            "name": self.name,
            "ramification": self.ramification,
            "low": self.low,
            "prec": None if self.exact else self.prec,
        }

    @classmethod
    def from_json(cls, d):
        prec = d.get("prec")
        return cls(
            str(d["name"]),
            int(d.get("ramification", 1)),
            int(d.get("low", 0)),
            EXACT if prec is None else int(prec),
        )


def grlex_key(e):
    return (sum(e), e)


def _coerce_vars(vars):
    out = []
    for v in vars:
        if isinstance(v, VarSpec):
            out.append(v)
        elif isinstance(v, str):
            out.append(VarSpec(v))
        else:
            raise TypeError(f"expected VarSpec, got {v!r}")
    names = [v.name for v in out]
    if len(set(names)) != len(names):
        raise ValueError(f"duplicate variable names {names}")
    if not 1 <= len(out) <= 4:
        raise ValueError("a series has between one and four variables")
    return tuple(out)


class MultiSeries:
    """An immutable truncated Laurent series in one to four variables."""

    __slots__ = ("vars", "_c")

    def __init__(self, vars, coeffs=None):
        vars = _coerce_vars(vars)
        n = len(vars)
        c = {}
        if coeffs:
            items = coeffs.items() if hasattr(coeffs, "items") else coeffs
            for e, val in items:
                if isinstance(e, int):
                    e = (e,)
                e = tuple(int(x) for x in e)
                if len(e) != n:
                    raise ValueError(f"exponent {e} has wrong length for {n} variables")
                s = Scalar.coerce(val)
                if not s:
                    continue
                if any(x < v.low for x, v in zip(e, vars)):
                    raise WindowError(f"exponent {e} lies below the window lower bound")
                if any(x >= v.prec for x, v in zip(e, vars)):
                    continue
                c[e] = c[e] + s if e in c else s
            c = {e: s for e, s in c.items() if s}
        self.vars = vars
        self._c = c

    @classmethod
    def _new(cls, vars, c):
        s = object.__new__(cls)
        s.vars = vars
        s._c = c
        return s

    # -- constructors -----------------------------------------------------
    @classmethod
    def zero(cls, vars):
        return cls._new(_coerce_vars(vars), {})

    @classmethod
    def constant(cls, c, vars):
        vars = _coerce_vars(vars)
        s = Scalar.coerce(c)
        if any(v.low > 0 or v.prec <= 0 for v in vars):
            raise WindowError("window does not contain the constant term")
        return cls._new(vars, {(0,) * len(vars): s} if s else {})

    @classmethod
    def monomial(cls, vars, exps, c=1):
        """The exact monomial c * x^exps; window lows are set to exps, precs to EXACT."""
        vars = _coerce_vars(vars)
        exps = tuple(exps)
        s = Scalar.coerce(c)
        vs = tuple(v.window(low=e, prec=EXACT) for v, e in zip(vars, exps))
        return cls._new(vs, {exps: s} if s else {})

    @classmethod
    def variable(cls, name, vars):
        vars = _coerce_vars(vars)
        exps = tuple(1 if v.name == name else 0 for v in vars)
        if 1 not in exps:
            raise VariableMismatchError(f"no variable named {name!r}")
        return cls.monomial(vars, exps)

    @classmethod
    def polynomial(cls, vars, coeffs):
        """An exact polynomial: precs EXACT, lows at the componentwise minimum exponent."""
        vars = _coerce_vars(vars)
        tmp = MultiSeries([v.window(low=-EXACT + 1, prec=EXACT) for v in vars], coeffs)
        if not tmp._c:
            return cls._new(tuple(v.window(low=0, prec=EXACT) for v in vars), {})
        lows = [min(e[i] for e in tmp._c) for i in range(len(vars))]
        vs = tuple(v.window(low=lo, prec=EXACT) for v, lo in zip(vars, lows))
        return cls._new(vs, tmp._c)

    # -- basic accessors --------------------------------------------------
    @property
    def names(self):
        return tuple(v.name for v in self.vars)

    @property
    def nvars(self):
        return len(self.vars)

    @property
    def lows(self):
        return tuple(v.low for v in self.vars)

    @property
    def precs(self):
        return tuple(v.prec for v in self.vars)

    @property
    def coeffs(self):
        return dict(self._c)

    def index(self, name):
        for i, v in enumerate(self.vars):
            if v.name == name:
                return i
        raise VariableMismatchError(f"no variable named {name!r}")

    def var(self, name):
        return self.vars[self.index(name)]

    def __len__(self):
        return len(self._c)

    def terms(self):
        """Nonzero terms in graded lexicographic order."""
        return [(e, self._c[e]) for e in sorted(self._c, key=grlex_key)]

    def coefficient(self, exps):
        if isinstance(exps, int):
            exps = (exps,)
        exps = tuple(exps)
        if any(x >= v.prec for x, v in zip(exps, self.vars)):
            raise WindowError(f"coefficient {exps} is outside the known window")
        return self._c.get(exps, ZERO)

    __getitem__ = coefficient

    def is_zero(self):
        return not self._c

    def is_real(self):
        return all(not c.im for c in self._c.values())

    def constant_term(self):
        return self.coefficient((0,) * self.nvars)

    def support_bounds(self):
        if not self._c:
            return None
        n = self.nvars
        return (
            tuple(min(e[i] for e in self._c) for i in range(n)),
            tuple(max(e[i] for e in self._c) for i in range(n)),
        )

    def signature(self):
        return tuple((v.name, v.ramification) for v in self.vars)

    def __eq__(self, other):
        if not isinstance(other, MultiSeries):
            return NotImplemented
        return self.vars == other.vars and self._c == other._c

    def __hash__(self):
        return hash((self.vars, frozenset(self._c.items())))

    def same_coefficients(self, other):
        """Compare coefficients on the common window, ignoring window metadata."""
        _check_same(self, other)
        precs = tuple(min(a, b) for a, b in zip(self.precs, other.precs))
        return _clip(self._c, precs) == _clip(other._c, precs)

    def __repr__(self):
        names = ",".join(self.names)
        return f"MultiSeries[{names}]({self.format()})"

    def format(self, max_terms=12):
        ts = self.terms()
        if not ts:
            return "0"
        parts = []
        for e, c in ts[:max_terms]:
            mono = "*".join(
                f"{v.name}^{x}" if x != 1 else v.name for v, x in zip(self.vars, e) if x
            )
            cs = f"({c})" if c.im or c.re < 0 else str(c)
            if not mono:
                parts.append(cs)
            elif c == 1:
                parts.append(mono)
            else:
                parts.append(f"{cs}*{mono}")
        if len(ts) > max_terms:
            parts.append("...")
        return " + ".join(parts)

    # -- windows ----------------------------------------------------------
    def truncate(self, precs=None, **by_name):
        """Lower precisions (never raises them)."""
        ps = list(self.precs)
        if precs is not None:
            if isinstance(precs, int):
                precs = (precs,) * self.nvars
            ps = [min(p, q) for p, q in zip(ps, precs)]
        for name, q in by_name.items():
            i = self.index(name)
            ps[i] = min(ps[i], q)
        vs = tuple(v.window(prec=p) for v, p in zip(self.vars, ps))
        return MultiSeries._new(vs, _clip(self._c, tuple(ps)))

    def lower(self, lows):
        """Lower the window's lower bounds (always sound)."""
        vs = tuple(v.window(low=min(v.low, lo)) for v, lo in zip(self.vars, lows))
        return MultiSeries._new(vs, self._c)

    def rewindow(self, lows, precs):
        """Return the series on window [min(low, lows), min(prec, precs))."""
        return self.truncate(precs).lower(lows)

    def tighten(self):
        """Raise lower bounds to the support where that is provably sound.

        Sound only for univariate series or fully exact series, where every
        coefficient below the smallest stored exponent is known to vanish.
        """
        if not self._c:
            return self
        if self.nvars != 1 and not all(v.exact for v in self.vars):
            return self
        lo, _ = self.support_bounds()
        vs = tuple(v.window(low=max(v.low, x)) for v, x in zip(self.vars, lo))
        return MultiSeries._new(vs, self._c)

    # -- ring operations --------------------------------------------------
    def __neg__(self):
        return MultiSeries._new(self.vars, {e: -c for e, c in self._c.items()})

    def _as_series(self, other):
        if isinstance(other, MultiSeries):
            return other
        try:
            s = Scalar.coerce(other)
        except TypeError:
            return None
        if any(v.prec <= 0 for v in self.vars):
            raise WindowError("constant term lies outside the known window")
        vs = tuple(v.window(low=min(v.low, 0), prec=EXACT) for v in self.vars)
        return MultiSeries.constant(s, vs)

    def __add__(self, other):
        other = self._as_series(other)
        if other is None:
            return NotImplemented
        return add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        other = self._as_series(other)
        if other is None:
            return NotImplemented
        return add(self, -other)

    def __rsub__(self, other):
        return (-self).__add__(other)

    def __mul__(self, other):
        if isinstance(other, MultiSeries):
            return mul(self, other)
        try:
            s = Scalar.coerce(other)
        except TypeError:
            return NotImplemented
        return self.scale(s)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, MultiSeries):
            return mul(self, invert(other))
        try:
            s = Scalar.coerce(other)
        except TypeError:
            return NotImplemented
        return self.scale(s.reciprocal())

    def __pow__(self, n):
        if not isinstance(n, int):
            return NotImplemented
        return power(self, n)

    def scale(self, s):
        s = Scalar.coerce(s)
        if not s:
            return MultiSeries._new(self.vars, {})
        if s == ONE:
            return self
        return MultiSeries._new(self.vars, {e: c * s for e, c in self._c.items()})

    def shift(self, exps):
        """Multiply by the monomial x^exps (moves the window along)."""
        exps = tuple(exps)
        vs = tuple(
            v.window(low=v.low + d, prec=v.prec if v.exact else v.prec + d)
            for v, d in zip(self.vars, exps)
        )
        c = {tuple(a + b for a, b in zip(e, exps)): x for e, x in self._c.items()}
        return MultiSeries._new(vs, c)

    def map_coefficients(self, fn):
        c = {}
        for e, x in self._c.items():
            y = Scalar.coerce(fn(e, x))
            if y:
                c[e] = y
        return MultiSeries._new(self.vars, c)

    def conjugate(self):
        return MultiSeries._new(self.vars, {e: c.conjugate() for e, c in self._c.items()})

    # -- variables --------------------------------------------------------
    def embed(self, vars):
        """Re-express in a variable list containing this one's variables.

        New variables enter as constants (window low 0, exact).
        """
        vars = _coerce_vars(vars)
        pos = []
        for v in self.vars:
            idx = [i for i, w in enumerate(vars) if w.name == v.name]
            if not idx:
                raise VariableMismatchError(f"variable {v.name} missing from target")
            if vars[idx[0]].ramification != v.ramification:
                raise VariableMismatchError(f"ramification mismatch for {v.name}")
            pos.append(idx[0])
        new_vars = []
        for w in vars:
            if w.name in self.names:
                new_vars.append(self.var(w.name))
            else:
                new_vars.append(w.window(low=0, prec=EXACT))
        n = len(vars)
        c = {}
        for e, x in self._c.items():
            f = [0] * n
            for i, p in enumerate(pos):
                f[p] = e[i]
            c[tuple(f)] = x
        return MultiSeries._new(tuple(new_vars), c)

    def rename(self, mapping):
        vs = tuple(replace(v, name=mapping.get(v.name, v.name)) for v in self.vars)
        return MultiSeries._new(_coerce_vars(vs), self._c)

    def with_ramification(self, name, r):
        """Rewrite so variable ``name`` has ramification r (a multiple of the current one)."""
        i = self.index(name)
        v = self.vars[i]
        if r % v.ramification:
            raise ValueError(f"ramification {r} is not a multiple of {v.ramification}")
        m = r // v.ramification
        if m == 1:
            return self
        nv = replace(
            v,
            ramification=r,
            low=v.low * m,
            prec=EXACT if v.exact else v.prec * m,
        )
        vs = self.vars[:i] + (nv,) + self.vars[i + 1:]
        c = {e[:i] + (e[i] * m,) + e[i + 1:]: x for e, x in self._c.items()}
        return MultiSeries._new(vs, c)

    def drop_variable(self, name):
        """Restrict to exponent 0 in ``name`` and remove that variable."""
        i = self.index(name)
        v = self.vars[i]
        if v.low > 0 or v.prec <= 0:
            raise WindowError("variable window does not contain exponent 0")
        vs = self.vars[:i] + self.vars[i + 1:]
        c = {e[:i] + e[i + 1:]: x for e, x in self._c.items() if e[i] == 0}
        return MultiSeries._new(_coerce_vars(vs), c)

    def restrict_total_degree(self, d):
        return MultiSeries._new(self.vars, {e: x for e, x in self._c.items() if sum(e) <= d})

    # -- calculus ----------------------------------------------------------
    def derivative(self, name):
        return derivative(self, name)

    def eval_numeric(self, point, raw=False):
        return eval_numeric(self, point, raw=raw)

    def exp(self):
        return exp_series(self)

    def log(self):
        return log_series(self)

    def binom_power(self, alpha):
        return binom_power(self, alpha)

    def invert(self):
        return invert(self)

    def substitute(self, assignments, **kw):
        return substitute(self, assignments, **kw)

    # -- serialization ---------------------------------------------------
    def to_json(self):
        return {
            "vars": [v.to_json() for v in self.vars],
            "coeffs": [
                [*e, fraction_str(c.re), fraction_str(c.im)] for e, c in self.terms()
            ],
        }

    @classmethod
    def from_json(cls, d):
        vars = [VarSpec.from_json(v) for v in d["vars"]]
        n = len(vars)
        coeffs = {}
        for row in d.get("coeffs", []):
            if len(row) not in (n + 1, n + 2):
                raise ValueError(f"coefficient row {row!r} has wrong length")
            e = tuple(int(x) for x in row[:n])
            im = row[n + 1] if len(row) == n + 2 else "0"
            if e in coeffs:
                raise ValueError(f"duplicate exponent {e}")
            coeffs[e] = Scalar.parse(str(row[n]), str(im))
        return cls(vars, coeffs)


# ---------------------------------------------------------------------------
# helpers


def _clip(c, precs, lows=None):
    if lows is None:
        return {e: x for e, x in c.items() if all(a < p for a, p in zip(e, precs))}
    return {
        e: x
        for e, x in c.items()
        if all(lo <= a < p for a, lo, p in zip(e, lows, precs))
    }


def _check_same(a, b):
    if a.signature() != b.signature():
        raise VariableMismatchError(
            f"variables {a.signature()} and {b.signature()} do not match"
        )


def _split(c):
    re = [(e, x.re) for e, x in c.items() if x.re]
    im = [(e, x.im) for e, x in c.items() if x.im]
    return re, im


def _combine(re, im):
    out = {}
    z = Fraction(0)
    for e, x in re.items():
        out[e] = Scalar._make(x, z)
    for e, y in im.items():
        if e in out:
            out[e] = Scalar._make(out[e].re, y)
        else:
            out[e] = Scalar._make(z, y)
    return out


def _sub_dict(a, b):
    out = dict(a)
    for e, y in b.items():
        v = out.get(e, 0) - y
        if v:
            out[e] = v
        else:
            out.pop(e, None)
    return out


def _add_dict(a, b):
    out = dict(a)
    for e, y in b.items():
        v = out.get(e, 0) + y
        if v:
            out[e] = v
        else:
            out.pop(e, None)
    return out


def convolve_coeffs(ca, cb, lo, hi):
    """Exact Cauchy product of two coefficient dicts restricted to [lo, hi)."""
    if not ca or not cb:
        return {}
    ar, ai = _split(ca)
    br, bi = _split(cb)
    conv = _backend.convolve
    re = conv(ar, br, lo, hi) if ar and br else {}
    im = {}
    if ai and bi:
        re = _sub_dict(re, conv(ai, bi, lo, hi))
    if ar and bi:
        im = conv(ar, bi, lo, hi)
    if ai and br:
        im = _add_dict(im, conv(ai, br, lo, hi))
    return _combine(re, im)


# ---------------------------------------------------------------------------
# ring operations


def add(a, b):
    _check_same(a, b)
    vs = tuple(
        u.window(low=min(u.low, v.low), prec=min(u.prec, v.prec))
        for u, v in zip(a.vars, b.vars)
    )
    precs = tuple(v.prec for v in vs)
    c = _clip(a._c, precs)
    for e, x in b._c.items():
        if all(p < q for p, q in zip(e, precs)):
            if e in c:
                y = c[e] + x
                if y:
                    c[e] = y
                else:
                    del c[e]
            else:
                c[e] = x
    return MultiSeries._new(vs, c)


def mul_window(a, b):
    lows = tuple(u.low + v.low for u, v in zip(a.vars, b.vars))
    precs = tuple(
        _cap(min(u.prec + v.low, v.prec + u.low)) for u, v in zip(a.vars, b.vars)
    )
    return lows, precs


def mul(a, b, hi=None, degree=None):
    """Cauchy product.

    ``hi`` optionally clips the result's precision further. With ``degree``
    all terms of total degree above it are dropped; such results are only
    meaningful up to that total degree (see the module notes on degree mode).
    """
    _check_same(a, b)
    lows, precs = mul_window(a, b)
    if hi is not None:
        precs = tuple(min(p, h) for p, h in zip(precs, hi))
    precs = tuple(max(p, lo + 1) for p, lo in zip(precs, lows))
    vs = tuple(v.window(low=lo, prec=p) for v, lo, p in zip(a.vars, lows, precs))
    if degree is not None:
        precs = tuple(min(p, degree + 1 - sum(lows) + lo) for p, lo in zip(precs, lows))
        precs = tuple(max(p, lo + 1) for p, lo in zip(precs, lows))
    c = convolve_coeffs(a._c, b._c, lows, precs)
    return MultiSeries._new(vs, degree_filter(c, degree))


def power(a, n, hi=None, degree=None):
    if n < 0:
        return power(invert(a, degree=degree), -n, hi=hi, degree=degree)
    result = None
    base = a
    while True:
        if n & 1:
            result = base if result is None else mul(result, base, hi=hi, degree=degree)
        n >>= 1
        if not n:
            break
        base = mul(base, base, hi=hi, degree=degree)
    if result is None:
        return MultiSeries.constant(1, [v.window(low=0, prec=EXACT) for v in a.vars])
    return result


# ---------------------------------------------------------------------------
# recurrences


def _reachable(steps, precs, degree=None):
    """Exponents reachable from 0 by adding elements of ``steps`` (all >= 0, nonzero).

    The set must be finite: each step needs a positive exponent in a variable
    of finite precision, unless a total ``degree`` bound is given.
    """
    if degree is None:
        for s in steps:
            if not any(x > 0 and not is_exact(p) for x, p in zip(s, precs)):
                raise WindowError(
                    "series recurrence would be infinite: truncate exactly known variables first"
                )
    seen = {(0,) * len(precs)}
    frontier = list(seen)
    while frontier:
        nxt = []
        for r in frontier:
            for s in steps:
                e = tuple(x + y for x, y in zip(r, s))
                if e in seen or not all(x < p for x, p in zip(e, precs)):
                    continue
                if degree is not None and sum(e) > degree:
                    continue
                seen.add(e)
                nxt.append(e)
        frontier = nxt
    return sorted(seen, key=grlex_key)


def degree_filter(c, degree):
    if degree is None:
        return c
    return {e: x for e, x in c.items() if sum(e) <= degree}


def _values(c, complex_ok):
    """Coefficient values as Fractions when all real, else Scalars."""
    if not complex_ok:
        return {e: x.re for e, x in c.items()}
    return dict(c)


def _wrap(c):
    z = Fraction(0)
    out = {}
    for e, x in c.items():
        if isinstance(x, Scalar):
            if x:
                out[e] = x
        elif x:
            out[e] = Scalar._make(x, z)
    return out


def _regular_part(a, what):
    if any(v.low < 0 for v in a.vars):
        raise WindowError(f"{what} requires a series without negative exponents")


def exp_series(a, degree=None):
    """exp(a) for a with zero constant term and no negative exponents."""
    _regular_part(a, "exp_series")
    zero = (0,) * a.nvars
    if a._c.get(zero):
        raise ValueError("exp_series requires a zero constant term")
    vs = tuple(v.window(low=0) for v in a.vars)
    if not a._c:
        return MultiSeries.constant(1, vs)
    precs = a.precs
    cplx = not a.is_real()
    av = _values(a._c, cplx)
    steps = list(av)
    deg = {e: sum(e) for e in steps}
    order = _reachable(steps, precs, degree)
    b = {zero: ONE if cplx else Fraction(1)}
    for e in order[1:]:
        acc = 0
        for i in steps:
            r = tuple(x - y for x, y in zip(e, i))
            br = b.get(r)
            if br is not None:
                acc = acc + br * av[i] * deg[i]
        if acc:
            b[e] = acc / sum(e)
    return MultiSeries._new(vs, _wrap(b))


def binom_power(a, alpha, degree=None):
    """(1 + x)^alpha for a = 1 + x with x regular, exact generalized binomial series."""
    _regular_part(a, "binom_power")
    zero = (0,) * a.nvars
    if a._c.get(zero) != ONE:
        raise ValueError("binom_power requires constant term 1")
    alpha = Scalar.coerce(alpha)
    vs = tuple(v.window(low=0) for v in a.vars)
    rest = {e: x for e, x in a._c.items() if e != zero}
    if not rest or not alpha:
        return MultiSeries.constant(1, vs)
    if alpha.is_real() and alpha.re.denominator == 1 and alpha.re >= 0:
        return power(a, int(alpha.re), degree=degree)
    precs = a.precs
    cplx = not (a.is_real() and alpha.is_real())
    av = _values(rest, cplx)
    al = alpha if cplx else alpha.re
    steps = list(av)
    deg = {e: sum(e) for e in steps}
    order = _reachable(steps, precs, degree)
    b = {zero: ONE if cplx else Fraction(1)}
    for e in order[1:]:
        acc = 0
        for i in steps:
            r = tuple(x - y for x, y in zip(e, i))
            br = b.get(r)
            if br is not None:
                acc = acc + br * av[i] * (al * deg[i] - sum(r))
        if acc:
            b[e] = acc / sum(e)
    return MultiSeries._new(vs, _wrap(b))


def log_series(a, degree=None):
    """log(a) for a with constant term 1 and no negative exponents."""
    _regular_part(a, "log_series")
    zero = (0,) * a.nvars
    if a._c.get(zero) != ONE:
        raise ValueError("log_series requires constant term 1")
    vs = tuple(v.window(low=0) for v in a.vars)
    rest = {e: x for e, x in a._c.items() if e != zero}
    if not rest:
        return MultiSeries.zero(vs)
    precs = a.precs
    cplx = not a.is_real()
    av = _values(rest, cplx)
    steps = list(av)
    order = _reachable(steps, precs, degree)
    b = {}
    for e in order[1:]:
        d = sum(e)
        acc = av.get(e, 0) * d
        for i in steps:
            r = tuple(x - y for x, y in zip(e, i))
            br = b.get(r)
            if br is not None:
                acc = acc - br * av[i] * sum(r)
        if acc:
            b[e] = acc / d
    return MultiSeries._new(vs, _wrap(b))


def _unit_inverse(c0, rest, nvars, precs, degree=None):
    """Inverse of c0 + rest where rest is regular with zero constant term."""
    zero = (0,) * nvars
    cplx = not c0.is_real() or any(x.im for x in rest.values())
    av = _values(rest, cplx)
    inv0 = c0.reciprocal() if cplx else 1 / c0.re
    neg_inv0 = -inv0
    steps = list(av)
    order = _reachable(steps, precs, degree)
    b = {zero: inv0}
    for e in order[1:]:
        acc = 0
        for i in steps:
            r = tuple(x - y for x, y in zip(e, i))
            br = b.get(r)
            if br is not None:
                acc = acc + br * av[i]
        if acc:
            b[e] = acc * neg_inv0
    return _wrap(b)


def invert(a, prec=None, degree=None):
    """Multiplicative inverse.

    The series must be a monomial times a unit: the coefficient at the lower
    corner of the window (after tightening, for univariate series) must be
    nonzero. ``prec`` supplies a finite precision when ``a`` is exact.
    """
    a = a.tighten()
    if not a._c:
        raise NotInvertibleError("cannot invert the zero series")
    m = a.lows
    c0 = a._c.get(m)
    if not c0:
        raise NotInvertibleError(
            "leading structure is not a unit times a monomial: "
            f"no nonzero coefficient at the window corner {m}"
        )
    rest = {}
    for e, x in a._c.items():
        if e != m:
            rest[tuple(p - q for p, q in zip(e, m))] = x
    # unit u = a / x^m, window [0, prec - m)
    uprecs = tuple(_cap(p - q) if not is_exact(p) else EXACT for p, q in zip(a.precs, m))
    if prec is not None:
        if isinstance(prec, int):
            prec = (prec,) * a.nvars
        uprecs = tuple(min(u, _cap(p - q)) for u, p, q in zip(uprecs, prec, m))
    if not rest:
        c = {tuple(-x for x in m): c0.reciprocal()}
    elif degree is None and any(is_exact(u) for u in uprecs):
        raise WindowError("inverse of a non-monomial exact series needs an explicit precision")
    else:
        if degree is not None and any(m):
            raise WindowError("degree mode inverts units only")
        inv = _unit_inverse(c0, rest, a.nvars, uprecs, degree)
        c = {tuple(x - q for x, q in zip(e, m)): y for e, y in inv.items()}
    vs = tuple(
        v.window(low=-q, prec=EXACT if is_exact(u) else u - q)
        for v, q, u in zip(a.vars, m, uprecs)
    )
    return MultiSeries._new(vs, c)


# ---------------------------------------------------------------------------
# calculus


def derivative(f, name):
    """d/dx in the variable ``name`` itself (exponents of x^e, not of the base z)."""
    i = f.index(name)
    v = f.vars[i]
    low = v.low - 1 if v.low != 0 else 0
    prec = v.prec if v.exact else v.prec - 1
    if prec <= low:
        raise WindowError("derivative exhausts the window")
    c = {}
    for e, x in f._c.items():
        k = e[i]
        if k:
            c[e[:i] + (k - 1,) + e[i + 1:]] = x * k
    c = {e: x for e, x in c.items() if e[i] < prec}
    vs = f.vars[:i] + (v.window(low=low, prec=prec),) + f.vars[i + 1:]
    return MultiSeries._new(vs, c)


def base_derivative(f, name):
    """d/dz where the variable is w = z^(1/r): w^e -> (e/r) w^(e-r)."""
    i = f.index(name)
    v = f.vars[i]
    r = v.ramification
    if r == 1:
        return derivative(f, name)
    low = v.low - r if v.low != 0 else 0
    prec = v.prec if v.exact else v.prec - r
    if prec <= low:
        raise WindowError("derivative exhausts the window")
    c = {}
    for e, x in f._c.items():
        k = e[i]
        if k:
            c[e[:i] + (k - r,) + e[i + 1:]] = x * Fraction(k, r)
    vs = f.vars[:i] + (v.window(low=low, prec=prec),) + f.vars[i + 1:]
    return MultiSeries._new(vs, c)


def eval_numeric(f, point, raw=False):
    """Evaluate at a point given as {name: complex value of the base coordinate}.

    For a variable with ramification r the value of the variable itself is the
    principal branch of z^(1/r). With ``raw=True`` the point gives the
    variables' own values. Each exact coefficient is rounded once and the
    terms are accumulated with compensated summation.
    """
    vals = []
    for v in f.vars:
        if v.name not in point:
            raise VariableMismatchError(f"no value for variable {v.name}")
        x = complex(point[v.name])
        if not raw and v.ramification > 1:
            x = cmath.exp(cmath.log(x) / v.ramification) if x else 0j
        vals.append(x)
    re_parts = []
    im_parts = []
    for e, c in f._c.items():
        m = 1 + 0j
        for x, k in zip(vals, e):
            if k:
                m *= x ** k
        cr = float(c.re)
        ci = float(c.im)
        re_parts.append(cr * m.real - ci * m.imag)
        im_parts.append(cr * m.imag + ci * m.real)
    return complex(math.fsum(re_parts), math.fsum(im_parts))


# ---------------------------------------------------------------------------
# substitution


def _series_for(name, out_vars, ramification):
    for v in out_vars:
        if v.name == name:
            if v.ramification != ramification:
                raise VariableMismatchError(f"ramification mismatch for {name}")
            return MultiSeries.variable(name, out_vars)
    raise VariableMismatchError(f"variable {name} has no image and is not an output variable")


def _substitute_degree(f, images, out_vars, degree):
    """Substitution modulo total degree > ``degree`` (regular series only)."""
    if any(v.low < 0 for v in f.vars):
        raise WindowError("degree-mode substitution needs a regular series")
    for v, g in zip(f.vars, images):
        if any(x.low < 0 for x in g.vars):
            raise WindowError("degree-mode substitution needs regular images")
        finite = [x.prec for x in g.vars if not x.exact]
        if finite and min(finite) <= degree:
            raise WindowError(f"image for {v.name} is not known up to total degree {degree}")
        vals = [sum(e) for e in g._c] + finite
        val = min(vals) if vals else degree + 1
        if val < 1:
            raise WindowError(f"image for {v.name} must vanish at the origin")
        if not v.exact and v.prec * val <= degree:
            raise WindowError(f"series is not known far enough in {v.name} for total degree {degree}")
    vs = tuple(o.window(low=0, prec=degree + 1) for o in out_vars)
    cache = [dict() for _ in f.vars]

    def pw(v, e):
        c = cache[v]
        if e not in c:
            if e == 0:
                c[e] = MultiSeries.constant(1, vs)
            elif e == 1:
                c[e] = MultiSeries._new(vs, degree_filter(images[v]._c, degree))
            else:
                c[e] = mul(pw(v, e - 1), pw(v, 1), degree=degree)
        return c[e]

    acc = {}
    for e, x in f.terms():
        if sum(e) > degree:
            continue
        t = None
        for v in range(f.nvars):
            p = pw(v, e[v])
            t = p if t is None else mul(t, p, degree=degree)
        for k, y in t._c.items():
            s = acc.get(k)
            acc[k] = y * x if s is None else s + y * x
    return MultiSeries._new(vs, {k: y for k, y in acc.items() if y})


def substitute(f, assignments, prec=None, degree=None):
    """Compose f with series for (some of) its variables.

    ``assignments`` maps variable names of f to MultiSeries that all share
    one variable list (the output variables). Variables of f without an
    assignment must be output variables and pass through unchanged. The
    output window is computed conservatively; it is an error if some
    variable of f admits no bound (only finitely many terms of f would not
    suffice) or if the window comes out empty. ``prec`` optionally caps the
    output precisions.

    With ``degree`` set, everything is computed modulo terms of total degree
    above it; f and the images must be regular and the images must vanish at
    the origin. The result has window [0, degree] in every variable and is
    meaningful only up to that total degree.
    """
    if not assignments:
        return f
    gs = list(assignments.values())
    sig = gs[0].signature()
    for g in gs[1:]:
        if g.signature() != sig:
            raise VariableMismatchError("substituted series must share their variables")
    for name in assignments:
        f.index(name)
    out_vars = tuple(v.window(low=0, prec=EXACT) for v in gs[0].vars)
    images = []
    for v in f.vars:
        if v.name in assignments:
            images.append(assignments[v.name])
        else:
            images.append(_series_for(v.name, out_vars, v.ramification))
    if degree is not None:
        return _substitute_degree(f, images, out_vars, degree)
    nout = len(out_vars)
    f_exact = all(v.exact for v in f.vars)

    lam = [g.lows for g in images]
    # range of exponents of f in each variable
    if f_exact and f._c:
        lo_e, hi_e = f.support_bounds()
    else:
        lo_e = f.lows
        hi_e = tuple(None for _ in f.vars)

    low_out = []
    for w in range(nout):
        total = 0
        for v in range(f.nvars):
            l = lam[v][w]
            cands = [lo_e[v] * l]
            if hi_e[v] is None:
                if l < 0:
                    raise WindowError(
                        f"substituting for {f.vars[v].name} produces unbounded negative "
                        f"exponents in {out_vars[w].name}"
                    )
            else:
                cands.append(hi_e[v] * l)
            total += min(cands)
        low_out.append(total)

    prec_out = [EXACT] * nout
    if prec is not None:
        if isinstance(prec, int):
            prec = (prec,) * nout
        prec_out = [min(p, q) for p, q in zip(prec_out, prec)]
    # unknown terms of f: for each non-exact variable v some witness w must separate them
    if not f_exact:
        for v in range(f.nvars):
            pv = f.vars[v].prec
            if is_exact(pv):
                continue
            witnesses = [w for w in range(nout) if lam[v][w] > 0]
            if not witnesses:
                raise WindowError(
                    f"substitution would need infinitely many terms of f in {f.vars[v].name}"
                )
            for w in witnesses:
                bound = pv * lam[v][w]
                for v2 in range(f.nvars):
                    if v2 != v:
                        bound += lo_e[v2] * lam[v2][w]
                prec_out[w] = min(prec_out[w], bound)

    # powers of each image, clipped to what can still reach the output window
    terms = f.terms()
    if not terms:
        vs = tuple(o.window(low=lo, prec=max(p, lo + 1)) for o, lo, p in zip(out_vars, low_out, prec_out))
        return MultiSeries._new(vs, {})

    def own_min(v, w):
        l = lam[v][w]
        if hi_e[v] is None:
            return lo_e[v] * l
        return min(lo_e[v] * l, hi_e[v] * l)

    clip = []
    for v in range(f.nvars):
        clip.append(
            tuple(
                _cap(prec_out[w] - (low_out[w] - own_min(v, w))) if not is_exact(prec_out[w]) else EXACT
                for w in range(nout)
            )
        )

    cache = [dict() for _ in f.vars]

    def pw(v, e):
        c = cache[v]
        if e in c:
            return c[e]
        g = images[v]
        if e == 0:
            r = MultiSeries.constant(1, out_vars)
        elif e == 1:
            r = g.truncate(clip[v])
        elif e == -1:
            t = g.tighten()
            if any(x.exact for x in t.vars):
                if any(is_exact(c) for c in clip[v]):
                    raise WindowError("negative powers of an exact series need a finite output window")
                t = t.truncate(tuple(c + 2 * lo for c, lo in zip(clip[v], t.lows)))
            r = invert(t).truncate(clip[v])
        elif e > 0:
            r = mul(pw(v, e - 1), pw(v, 1), hi=clip[v])
        else:
            r = mul(pw(v, e + 1), pw(v, -1), hi=clip[v])
        c[e] = r
        return r

    images_terms = []
    for e, x in terms:
        acc = None
        for v in range(f.nvars):
            p = pw(v, e[v])
            acc = p if acc is None else mul(acc, p, hi=tuple(prec_out))
        images_terms.append((x, acc))

    for _, t in images_terms:
        for w in range(nout):
            prec_out[w] = min(prec_out[w], t.vars[w].prec)
    if any(p <= lo for p, lo in zip(prec_out, low_out)):
        raise WindowError("substitution leaves an empty window")
    po = tuple(prec_out)
    c = {}
    for x, t in images_terms:
        for e, y in t._c.items():
            if all(a < p for a, p in zip(e, po)):
                s = c.get(e)
                c[e] = y * x if s is None else s + y * x
    c = {e: y for e, y in c.items() if y}
    vs = tuple(o.window(low=lo, prec=p) for o, lo, p in zip(out_vars, low_out, po))
    return MultiSeries._new(vs, c)
