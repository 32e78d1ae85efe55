"""Matrices of truncated series sharing one variable window."""

import os
from concurrent.futures import ThreadPoolExecutor

from ..errors import NotInvertibleError, VariableMismatchError, WindowError
from .multiseries import (
    EXACT,
    MultiSeries,
    _reachable,
    _wrap,
    add,
    is_exact,
    mul,
    substitute,
)
from .scalar import ONE, ZERO, Scalar


def common_window(series):
    """Lows are lowered and precs lowered to the weakest entry; this is always sound."""
    first = series[0]
    sig = first.signature()
    lows = list(first.lows)
    precs = list(first.precs)
    for s in series[1:]:
        if s.signature() != sig:
            raise VariableMismatchError("matrix entries must share variables")
        lows = [min(a, b) for a, b in zip(lows, s.lows)]
        precs = [min(a, b) for a, b in zip(precs, s.precs)]
    return tuple(lows), tuple(precs)


class MatSeries:
    """A rows x cols matrix of MultiSeries with identical variable windows."""

    __slots__ = ("rows", "cols", "entries")

    def __init__(self, entries):
        rows = [list(r) for r in entries]
        if not rows or not rows[0]:
            raise ValueError("matrix must be nonempty")
        ncols = len(rows[0])
        if any(len(r) != ncols for r in rows):
            raise ValueError("ragged matrix")
        flat = [x for r in rows for x in r]
        if not all(isinstance(x, MultiSeries) for x in flat):
            raise TypeError("matrix entries must be MultiSeries")
        lows, precs = common_window(flat)
        flat = [x.rewindow(lows, precs) for x in flat]
        self.rows = len(rows)
        self.cols = ncols
        self.entries = tuple(flat)

    @classmethod
    def _new(cls, rows, cols, flat):
        m = object.__new__(cls)
        m.rows = rows
        m.cols = cols
        m.entries = tuple(flat)
        return m

    @classmethod
    def from_rows(cls, rows):
        return cls(rows)

    @classmethod
    def identity(cls, n, vars):
        one = MultiSeries.constant(1, vars)
        zero = MultiSeries.zero(one.vars)
        return cls([[one if i == j else zero for j in range(n)] for i in range(n)])

    @classmethod
    def constant(cls, matrix, vars):
        return cls([[MultiSeries.constant(Scalar.coerce(x), vars) for x in row] for row in matrix])

    @classmethod
    def diagonal(cls, series):
        n = len(series)
        zero = MultiSeries.zero(series[0].vars)
        return cls([[series[i] if i == j else zero for j in range(n)] for i in range(n)])

    # -- access -----------------------------------------------------------
    def __getitem__(self, ij):
        i, j = ij
        return self.entries[i * self.cols + j]

    def row_list(self):
        return [list(self.entries[i * self.cols:(i + 1) * self.cols]) for i in range(self.rows)]

    @property
    def vars(self):
        return self.entries[0].vars

    @property
    def names(self):
        return self.entries[0].names

    @property
    def shape(self):
        return (self.rows, self.cols)

    def __eq__(self, other):
        if not isinstance(other, MatSeries):
            return NotImplemented
        return self.shape == other.shape and self.entries == other.entries

    def __hash__(self):
        return hash((self.shape, self.entries))

    def __repr__(self):
        return f"MatSeries({self.rows}x{self.cols}, vars={self.names})"

    def map(self, fn):
        return MatSeries([[fn(x) for x in r] for r in self.row_list()])

    def truncate(self, precs=None, **kw):
        return self.map(lambda x: x.truncate(precs, **kw))

    def constant_matrix(self):
        return [[x.constant_term() for x in r] for r in self.row_list()]

    def transpose(self):
        r = self.row_list()
        return MatSeries([[r[i][j] for i in range(self.rows)] for j in range(self.cols)])

    def is_identity(self):
        n = self.rows
        if n != self.cols:
            return False
        zero = (0,) * len(self.vars)
        for i in range(n):
            for j in range(n):
                c = self[i, j].coeffs
                if i == j:
                    if c != {zero: ONE}:
                        return False
                elif c:
                    return False
        return True

    # -- arithmetic -------------------------------------------------------
    def __add__(self, other):
        if self.shape != other.shape:
            raise ValueError("shape mismatch")
        return MatSeries._new(
            self.rows, self.cols, [add(a, b) for a, b in zip(self.entries, other.entries)]
        )

    def __neg__(self):
        return MatSeries._new(self.rows, self.cols, [-a for a in self.entries])

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, other):
        if isinstance(other, MatSeries):
            return mat_mul(self, other)
        if isinstance(other, MultiSeries):
            return self.map(lambda x: mul(x, other))
        s = Scalar.coerce(other)
        return MatSeries._new(self.rows, self.cols, [a.scale(s) for a in self.entries])

    def __rmul__(self, other):
        if isinstance(other, MultiSeries):
            return self.map(lambda x: mul(other, x))
        s = Scalar.coerce(other)
        return MatSeries._new(self.rows, self.cols, [a.scale(s) for a in self.entries])

    def substitute(self, assignments, **kw):
        return self.map(lambda x: substitute(x, assignments, **kw))

    def derivative(self, name):
        return self.map(lambda x: x.derivative(name))

    def eval_numeric(self, point, raw=False):
        import numpy as np

        out = np.empty((self.rows, self.cols), dtype=complex)
        for i in range(self.rows):
            for j in range(self.cols):
                out[i, j] = self[i, j].eval_numeric(point, raw=raw)
        return out

    def to_json(self):
        return {
            "rows": self.rows,
            "cols": self.cols,
            "entries": [[x.to_json() for x in r] for r in self.row_list()],
        }

    @classmethod
    def from_json(cls, d):
        return cls([[MultiSeries.from_json(x) for x in r] for r in d["entries"]])


def thread_count():
    """Worker cap from STOKES_RESUM_THREADS (default 1)."""
    raw = os.environ.get("STOKES_RESUM_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def mat_mul(a, b, hi=None, degree=None):
    """Matrix product; entries may be computed in parallel, assembled in a fixed order."""
    if a.cols != b.rows:
        raise ValueError(f"cannot multiply {a.shape} by {b.shape}")

    def entry(ij):
        i, j = ij
        acc = None
        for k in range(a.cols):
            p = mul(a[i, k], b[k, j], hi=hi, degree=degree)
            acc = p if acc is None else add(acc, p)
        return acc

    cells = [(i, j) for i in range(a.rows) for j in range(b.cols)]
    workers = min(thread_count(), len(cells))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            flat = list(pool.map(entry, cells))
    else:
        flat = [entry(c) for c in cells]
    return MatSeries([flat[i * b.cols:(i + 1) * b.cols] for i in range(a.rows)])


# ---------------------------------------------------------------------------
# exact constant matrices


def const_inverse(m):
    """Inverse of a square matrix of Scalars by Gauss-Jordan elimination."""
    n = len(m)
    a = [[Scalar.coerce(x) for x in row] + [ONE if i == j else ZERO for j in range(n)] for i, row in enumerate(m)]
    for col in range(n):
        piv = next((r for r in range(col, n) if a[r][col]), None)
        if piv is None:
            raise NotInvertibleError("singular constant matrix")
        a[col], a[piv] = a[piv], a[col]
        inv = a[col][col].reciprocal()
        a[col] = [x * inv for x in a[col]]
        for r in range(n):
            if r != col and a[r][col]:
                f = a[r][col]
                a[r] = [x - f * y for x, y in zip(a[r], a[col])]
    return [row[n:] for row in a]


def const_det(m):
    n = len(m)
    a = [[Scalar.coerce(x) for x in row] for row in m]
    det = ONE
    for col in range(n):
        piv = next((r for r in range(col, n) if a[r][col]), None)
        if piv is None:
            return ZERO
        if piv != col:
            a[col], a[piv] = a[piv], a[col]
            det = -det
        det = det * a[col][col]
        inv = a[col][col].reciprocal()
        for r in range(col + 1, n):
            if a[r][col]:
                f = a[r][col] * inv
                a[r] = [x - f * y for x, y in zip(a[r], a[col])]
    return det


def _const_mul(p, q):
    n, k, m = len(p), len(q), len(q[0])
    return [[sum((p[i][t] * q[t][j] for t in range(k)), ZERO) for j in range(m)] for i in range(n)]


# ---------------------------------------------------------------------------
# series matrices


def mat_invert(a, degree=None):
    """Inverse of a square matrix series with regular entries and invertible constant term."""
    if a.rows != a.cols:
        raise ValueError("mat_invert needs a square matrix")
    n = a.rows
    vars = a.vars
    if any(v.low < 0 for v in vars):
        raise WindowError("mat_invert requires regular entries; factor out monomials first")
    precs = a.entries[0].precs
    if degree is None and any(is_exact(p) for p in precs):
        # exact entries: only constant matrices have a finite inverse here
        if all(set(x.coeffs) <= {(0,) * len(vars)} for x in a.entries):
            inv = const_inverse(a.constant_matrix())
            return MatSeries.constant(inv, [v.window(low=0) for v in vars])
        raise WindowError("inverse of an exact non-constant matrix needs finite precision; truncate first")
    zero = (0,) * len(vars)
    a0inv = const_inverse(a.constant_matrix())
    coef = {}
    for idx, x in enumerate(a.entries):
        i, j = divmod(idx, n)
        for e, c in x.coeffs.items():
            if e != zero:
                coef.setdefault(e, [[ZERO] * n for _ in range(n)])[i][j] = c
    steps = list(coef)
    order = _reachable(steps, precs, degree)
    b = {zero: a0inv}
    for e in order[1:]:
        acc = None
        for s in steps:
            r = tuple(x - y for x, y in zip(e, s))
            br = b.get(r)
            if br is not None:
                t = _const_mul(coef[s], br)
                acc = t if acc is None else [[x + y for x, y in zip(u, v)] for u, v in zip(acc, t)]
        if acc is not None:
            val = _const_mul(a0inv, acc)
            if any(x for row in val for x in row):
                b[e] = [[-x for x in row] for row in val]
    out_vars = tuple(v.window(low=0) for v in vars)
    rows = []
    for i in range(n):
        row = []
        for j in range(n):
            c = {e: m[i][j] for e, m in b.items() if m[i][j]}
            row.append(MultiSeries._new(out_vars, _wrap(c)))
        rows.append(row)
    return MatSeries(rows)


def mat_det(a):
    """Determinant by cofactor expansion along the first row."""
    if a.rows != a.cols:
        raise ValueError("mat_det needs a square matrix")
    rows = a.row_list()

    def det(m):
        if len(m) == 1:
            return m[0][0]
        acc = None
        for j, x in enumerate(m[0]):
            if x.is_zero():
                continue
            minor = [r[:j] + r[j + 1:] for r in m[1:]]
            t = mul(x, det(minor))
            if j % 2:
                t = -t
            acc = t if acc is None else add(acc, t)
        if acc is None:
            return MultiSeries.zero(m[0][0].vars)
        return acc

    return det(rows)


def mat_equal_on_window(a, b):
    """Entrywise coefficient equality on the common window."""
    if a.shape != b.shape:
        return False
    return all(x.same_coefficients(y) for x, y in zip(a.entries, b.entries))


__all__ = [
    "MatSeries",
    "mat_mul",
    "mat_invert",
    "mat_det",
    "const_inverse",
    "const_det",
    "mat_equal_on_window",
    "EXACT",
]
