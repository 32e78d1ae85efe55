"""Formal gauges, exponential models and the resummation map.

A formal gauge phi intertwines d + A1 z^(-k) dz with d + A2 z^(-k) dz, which
amounts to z^k phi' = phi A1 - A2 phi. Groupoid representations are
matrix series Psi(z, u) on a chart, and resummation conjugates a model
representation:

    Sigma = (t* (H phi)) Psi1 (s* (H phi))^(-1)

where s* and t* are pullbacks along the source z and the target
z * ratio(z, u), and H = diag(c_i z^(e_i)) is an optional monomial pre-gauge.
Ramified series use the variable w = z^(1/R); pulling back along the target
sends w to w * ratio^(1/R).
"""

import math
import random
from dataclasses import dataclass, field
from fractions import Fraction

from .connection import MeromorphicSystem
from .errors import (
    CancellationError,
    DomainError,
    LeadingTermMismatchError,
    ResonanceError,
    WindowError,
)
from .groupoid import (
    PAIR,
    STO,
    GroupoidChart,
    GroupoidPoint,
    compose_u_series,
    ratio,
    target,
)
from .series import (
    EXACT,
    MatSeries,
    MultiSeries,
    Scalar,
    VarSpec,
    base_derivative,
    binom_power,
    const_inverse,
    exp_series,
    mat_invert,
    mat_mul,
    mul,
    substitute,
)
from .series.multiseries import degree_filter

# ---------------------------------------------------------------------------
# models


def _scalar(x):
    return Scalar.coerce(x)


@dataclass(frozen=True)
class ModelEntry:
    """One diagonal entry: solutions z^(-residue) exp(-q) with q = sum c_m w^(-m)."""

    residue: Scalar
    q: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "residue", _scalar(self.residue))
        if isinstance(self.q, dict):
            q = self.q.items()
        else:
            q = self.q
        terms = {}
        for m, c in q:
            m = int(m)
            if m < 1:
                raise ValueError("exponential parts must be polynomials in w^(-1) without constant term")
            c = _scalar(c)
            if c:
                terms[m] = terms.get(m, Scalar(0)) + c
        object.__setattr__(self, "q", tuple(sorted((m, c) for m, c in terms.items() if c)))

    @property
    def max_pole(self):
        return max((m for m, _ in self.q), default=0)


@dataclass(frozen=True)
class ExponentialModel:
    """A diagonal model d + diag(a_i z^(-1) + q_i'(z)) dz with pole order k and ramification r."""

    entries: tuple
    pole_order: int
    ramification: int = 1

    def __post_init__(self):
        ents = tuple(e if isinstance(e, ModelEntry) else ModelEntry(*e) for e in self.entries)
        object.__setattr__(self, "entries", ents)
        if not ents:
            raise ValueError("model needs at least one entry")
        if self.pole_order < 1 or self.ramification < 1:
            raise ValueError("pole order and ramification must be positive")

    @property
    def rank(self):
        return len(self.entries)

    def degree_bound_ok(self):
        bound = (self.pole_order - 1) * self.ramification
        return all(e.max_pole <= bound for e in self.entries)

    def induced_system(self, var="z"):
        """The model as a MeromorphicSystem: A = diag(a w^(r(k-1)) - sum (m/r) c_m w^(r(k-1)-m))."""
        if not self.degree_bound_ok():
            raise DomainError("exponential part too singular for the pole order")
        r, k = self.ramification, self.pole_order
        base = r * (k - 1)
        v = VarSpec(var, r)
        zero = MultiSeries.zero([v])
        diag = []
        for e in self.entries:
            c = {base: e.residue}
            for m, cm in e.q:
                c[base - m] = c.get(base - m, Scalar(0)) - cm * Fraction(m, r)
            diag.append(MultiSeries([v], {(x,): y for x, y in c.items()}))
        rows = [[diag[i] if i == j else zero for j in range(self.rank)] for i in range(self.rank)]
        return MeromorphicSystem(MatSeries(rows).map(lambda s: s.lower((0,))), k)

    def to_json(self):
        return {
            "rank": self.rank,
            "pole_order": self.pole_order,
            "ramification": self.ramification,
            "entries": [
                {"residue": e.residue.to_json(), "q": [[m, *c.to_json()] for m, c in e.q]}
                for e in self.entries
            ],
        }

    @classmethod
    def from_json(cls, d):
        try:
            ents = []
            for e in d["entries"]:
                res = e.get("residue", "0")
                res = Scalar.from_json(res) if isinstance(res, list) else Scalar.parse(str(res))
                q = []
                for t in e.get("q", []):
                    c = Scalar.parse(str(t[1]), str(t[2]) if len(t) == 3 else "0")
                    q.append((int(t[0]), c))
                ents.append(ModelEntry(res, tuple(q)))
            model = cls(tuple(ents), int(d["pole_order"]), int(d.get("ramification", 1)))
        except (KeyError, TypeError, IndexError) as exc:
            raise ValueError(f"malformed model: {exc}") from exc
        if "rank" in d and int(d["rank"]) != model.rank:
            raise ValueError("model rank does not match its entries")
        return model


def rank_one_model(k, a):
    """Residue a for k = 1; exponential exp(a z^(-(k-1)) / (k-1)) for k > 1."""
    a = _scalar(a)
    if k == 1:
        return ExponentialModel((ModelEntry(a),), 1)
    return ExponentialModel((ModelEntry(0, ((k - 1, -a * Fraction(1, k - 1)),)),), k)


def descends_to_pair(k, a):
    """Whether the rank-one model with residue a gives a representation of the pair groupoid."""
    a = _scalar(a)
    if k == 1:
        return a.re.denominator == 1 and a.im.denominator == 1
    return True


# ---------------------------------------------------------------------------
# pre-gauges


@dataclass(frozen=True)
class MonomialGauge:
    """H = diag(c_i z^(e_i)) with rational exponents e_i."""

    exponents: tuple
    coefficients: tuple = None

    def __post_init__(self):
        exps = tuple(Fraction(e) for e in self.exponents)
        object.__setattr__(self, "exponents", exps)
        coeffs = self.coefficients
        if coeffs is None:
            coeffs = (1,) * len(exps)
        coeffs = tuple(_scalar(c) for c in coeffs)
        if len(coeffs) != len(exps):
            raise ValueError("pre-gauge needs one coefficient per exponent")
        if not all(coeffs):
            raise ValueError("pre-gauge coefficients must be nonzero")
        object.__setattr__(self, "coefficients", coeffs)

    @property
    def rank(self):
        return len(self.exponents)

    def ramification(self):
        """Smallest R with all differences e_i - e_j in (1/R) Z.

        Conjugation by H multiplies entry (i, j) by z^(e_i - e_j) ratio^(e_i),
        and ratio^(e_i) is a regular series for any exponent.
        """
        e0 = self.exponents[0]
        return math.lcm(*((e - e0).denominator for e in self.exponents))

    def spread(self):
        """Largest e_j - e_i, the depth of the negative shifts H produces."""
        return max(self.exponents) - min(self.exponents)

    def to_json(self):
        return {
            "exponents": [f"{e.numerator}/{e.denominator}" for e in self.exponents],
            "coefficients": [c.to_json() for c in self.coefficients],
        }

    @classmethod
    def from_json(cls, d):
        try:
            exps = tuple(Fraction(str(e)) for e in d["exponents"])
            cs = d.get("coefficients")
            if cs is not None:
                cs = tuple(Scalar.from_json(c) if isinstance(c, list) else Scalar.parse(str(c)) for c in cs)
        except (KeyError, TypeError, ValueError, ZeroDivisionError) as exc:
            raise ValueError(f"malformed pre-gauge: {exc}") from exc
        return cls(exps, cs)


# ---------------------------------------------------------------------------
# formal gauges


@dataclass(frozen=True)
class FormalGauge:
    """A regular univariate matrix series phi with invertible constant term."""

    phi: MatSeries
    model: object = None
    system: MeromorphicSystem = None
    pre_gauge: MonomialGauge = None

    def __post_init__(self):
        if len(self.phi.vars) != 1 or self.phi.vars[0].low < 0:
            raise ValueError("gauge must be a regular univariate matrix series")
        from .series import const_det

        if not const_det(self.phi.constant_matrix()):
            raise ValueError("gauge constant term must be invertible")

    @property
    def ramification(self):
        return self.phi.vars[0].ramification

    @property
    def prec(self):
        return self.phi.vars[0].prec

    def coefficient(self, n):
        """Matrix coefficient of w^n."""
        return [[self.phi[i, j].coefficient((n,)) for j in range(self.phi.cols)] for i in range(self.phi.rows)]

    def truncate(self, prec):
        return FormalGauge(self.phi.truncate((prec,)), self.model, self.system, self.pre_gauge)

    def residual(self, source=None, target=None):
        """z^k Phi' - Phi A1 + A2 Phi for Phi = H phi, on the known window.

        Returns the residual matrix series; it vanishes identically when the
        intertwining relation holds to the gauge's precision.
        """
        source = source if source is not None else self.model
        target = target if target is not None else self.system
        if source is None or target is None:
            raise ValueError("residual needs source and target connections")
        if isinstance(source, ExponentialModel):
            source = source.induced_system()
        return intertwining_residual(self.phi, source, target, self.pre_gauge)

    def to_json(self):
        out = {
            "ramification": self.ramification,
            "prec": self.prec,
            "phi": [
                [[[e[0], *c.to_json()] for e, c in self.phi[i, j].terms()] for j in range(self.phi.cols)]
                for i in range(self.phi.rows)
            ],
        }
        if self.pre_gauge is not None:
            out["pre_gauge"] = self.pre_gauge.to_json()
        return out

    @classmethod
    def from_json(cls, d, var="z"):
        try:
            r = int(d.get("ramification", 1))
            prec = int(d["prec"])
            v = VarSpec(var, r, 0, prec)
            rows = []
            for row in d["phi"]:
                out = []
                for entry in row:
                    c = {}
                    for t in entry:
                        c[(int(t[0]),)] = Scalar.parse(str(t[1]), str(t[2]) if len(t) == 3 else "0")
                    out.append(MultiSeries([v], c))
                rows.append(out)
            pg = d.get("pre_gauge")
            pg = MonomialGauge.from_json(pg) if pg is not None else None
        except (KeyError, TypeError, IndexError) as exc:
            raise ValueError(f"malformed gauge: {exc}") from exc
        return cls(MatSeries(rows), pre_gauge=pg)


def _lift(s, name, R):
    v = s.vars[0]
    if v.ramification == R:
        return s
    return s.with_ramification(name, R)


def intertwining_residual(phi, source, target, pre_gauge=None):
    """z^k Phi' - Phi A1 + A2 Phi with Phi = H phi, exactly, on a common ramification."""
    if source.pole_order != target.pole_order:
        raise LeadingTermMismatchError("source and target pole orders differ")
    k = source.pole_order
    name = phi.vars[0].name
    R = math.lcm(phi.vars[0].ramification, source.ramification, target.ramification)
    if pre_gauge is not None:
        R = math.lcm(R, *(e.denominator for e in pre_gauge.exponents))
    lift = lambda m: m.map(lambda s: _lift(s.rename({s.names[0]: name}), name, R))
    P = lift(phi)
    A1 = lift(source.A)
    A2 = lift(target.A)
    if pre_gauge is not None:
        rows = P.row_list()
        rows = [
            [s.shift((int(pre_gauge.exponents[i] * R),)).scale(pre_gauge.coefficients[i]) for s in row]
            for i, row in enumerate(rows)
        ]
        P = MatSeries(rows)
    dP = P.map(lambda s: base_derivative(s, name).shift((k * R,)))
    return dP - mat_mul(P, A1) + mat_mul(A2, P)


def residual_vanishes(res):
    return all(not s.coeffs for s in res.entries)


# -- solver ------------------------------------------------------------------


def _coeff_matrices(sys, name, R, upto):
    A = sys.A.map(lambda s: _lift(s.rename({s.names[0]: name}), name, R))
    prec = A.vars[0].prec
    if prec <= upto:
        raise WindowError(f"system known only below w^{prec}; the solver needs order {upto}")
    n = A.rows
    out = []
    for m in range(upto + 1):
        out.append([[A[i, j].coefficient((m,)) for j in range(n)] for i in range(n)])
    return out


def _solve_sparse(rows, ncols):
    """Reduced row echelon form of sparse rows (dict col -> value, rhs, tag).

    Returns (pivots, inconsistent_tag) where pivots maps col -> (row dict, rhs),
    fully reduced so pivot rows contain only their pivot and free columns.
    """
    pivots = {}
    for row, rhs, tag in rows:
        row = dict(row)
        changed = True
        while changed:
            changed = False
            for c in [c for c in row if c in pivots]:
                f = row.pop(c)
                prow, prhs = pivots[c]
                for c2, v in prow.items():
                    if c2 == c:
                        continue
                    nv = row.get(c2, 0) - f * v
                    if nv:
                        row[c2] = nv
                    else:
                        row.pop(c2, None)
                rhs = rhs - f * prhs
                changed = True
        if not row:
            if rhs:
                return pivots, tag
            continue
        p = min(row)
        inv = 1 / row[p] if not isinstance(row[p], Scalar) else row[p].reciprocal()
        row = {c: v * inv for c, v in row.items()}
        rhs = rhs * inv
        # keep earlier pivot rows reduced with respect to the new pivot
        for c, (prow, prhs) in list(pivots.items()):
            f = prow.get(p)
            if f:
                nrow = dict(prow)
                del nrow[p]
                for c2, v in row.items():
                    if c2 == p:
                        continue
                    nv = nrow.get(c2, 0) - f * v
                    if nv:
                        nrow[c2] = nv
                    else:
                        nrow.pop(c2, None)
                pivots[c] = (nrow, prhs - f * rhs)
        pivots[p] = (row, rhs)
    return pivots, None


def pre_gauge_transform(sys, pre_gauge):
    """The system phi solves when H phi intertwines the source with ``sys``.

    A' = H^(-1) A H + z^k H^(-1) H', on the ramification the exponent
    differences need. Raises DomainError if A' is not regular at 0.
    """
    k = sys.pole_order
    name = sys.var
    R = math.lcm(sys.ramification, pre_gauge.ramification())
    A = sys.A.map(lambda s: _lift(s, name, R))
    e, c = pre_gauge.exponents, pre_gauge.coefficients
    rows = []
    for i in range(sys.rank):
        row = []
        for j in range(sys.rank):
            d = (e[j] - e[i]) * R
            x = A[i, j].shift((int(d),)).scale(c[j] / c[i])
            if i == j and e[i]:
                v = x.vars[0]
                x = x + MultiSeries([v], {(R * (k - 1),): Scalar(e[i])})
            if any(t[0] < 0 for t in x.coeffs):
                raise DomainError("pre-gauge makes the system singular beyond its pole order")
            v = x.vars[0]
            row.append(MultiSeries._new((v.window(low=0),), x.coeffs))
        rows.append(row)
    return MeromorphicSystem(MatSeries(rows), k)


def _kernel_basis(m):
    """Basis of the null space of a square matrix of Scalars."""
    n = len(m)
    a = [[Scalar.coerce(x) for x in row] for row in m]
    pivots = []
    r = 0
    for col in range(n):
        p = next((i for i in range(r, n) if a[i][col]), None)
        if p is None:
            continue
        a[r], a[p] = a[p], a[r]
        inv = a[r][col].reciprocal()
        a[r] = [x * inv for x in a[r]]
        for i in range(n):
            if i != r and a[i][col]:
                f = a[i][col]
                a[i] = [x - f * y for x, y in zip(a[i], a[r])]
        pivots.append(col)
        r += 1
    out = []
    for free in (c for c in range(n) if c not in pivots):
        v = [Scalar(0)] * n
        v[free] = Scalar(1)
        for row, pc in enumerate(pivots):
            v[pc] = -a[row][free]
        out.append(v)
    return out


def leading_basis(source, target):
    """Constant P0 with P0^(-1) T P0 equal to the diagonal leading term of the source.

    T is the lowest nonzero coefficient among source and target. Returns
    None if the two already agree there, and raises LeadingTermMismatchError
    if no such P0 exists.
    """
    name = target.var
    R = math.lcm(source.ramification, target.ramification)
    d = R * (max(source.pole_order, 1) - 1)
    n = source.rank
    for t in range(d + 1):
        S = _coeff_matrices(source, name, R, t)[t]
        T = _coeff_matrices(target, name, R, t)[t]
        if any(x for row in S for x in row) or any(x for row in T for x in row):
            break
    else:
        return None
    if S == T:
        return None
    if any(S[i][j] for i in range(n) for j in range(n) if i != j):
        raise LeadingTermMismatchError("source leading term is not diagonal")
    cols = [None] * n
    for lam in {S[i][i] for i in range(n)}:
        idx = [i for i in range(n) if S[i][i] == lam]
        shifted = [[T[i][j] - (lam if i == j else 0) for j in range(n)] for i in range(n)]
        basis = _kernel_basis(shifted)
        if len(basis) != len(idx):
            raise LeadingTermMismatchError("leading terms of source and target are not conjugate")
        for i, v in zip(idx, basis):
            lead = next(x for x in v if x)
            cols[i] = [x / lead for x in v]
    return [[cols[j][i] for j in range(n)] for i in range(n)]


def _constant_matrix(m, v):
    return MatSeries([[MultiSeries([v], {(0,): x} if x else {}) for x in row] for row in m])


def solve_formal_gauge(model, sys, N, max_extra=None, pre_gauge=None):
    """Solve z^k Phi' = Phi A1 - A2 Phi for Phi = H phi through w^N.

    ``model`` is an ExponentialModel or a MeromorphicSystem (the source), and
    ``sys`` the target; H is the optional monomial ``pre_gauge``. If the
    leading terms differ by a constant change of basis P0 then phi(0) = P0,
    otherwise phi(0) = 1. The coefficients of orders 1..M are found jointly
    by exact elimination; M grows until every order <= N is uniquely
    determined. Raises LeadingTermMismatchError if the leading terms are not
    conjugate and ResonanceError if some order is not uniquely solvable.
    """
    source = model.induced_system() if isinstance(model, ExponentialModel) else model
    if source.rank != sys.rank:
        raise ValueError("source and target ranks differ")
    if source.pole_order != sys.pole_order:
        raise LeadingTermMismatchError("source and target pole orders differ")
    if N < 0:
        raise ValueError("N must be nonnegative")
    target = sys if pre_gauge is None else pre_gauge_transform(sys, pre_gauge)
    P0 = leading_basis(source, target)
    if P0 is not None:
        v = target.A.vars[0]
        target = MeromorphicSystem(
            mat_mul(mat_mul(_constant_matrix(const_inverse(P0), v), target.A), _constant_matrix(P0, v)),
            target.pole_order,
        )
    phi = _solve_normalized(source, target, N, max_extra)
    if P0 is not None:
        phi = mat_mul(_constant_matrix(P0, phi.vars[0]), phi)
    return FormalGauge(phi, model, sys, pre_gauge)


def _solve_normalized(source, sys, N, max_extra):
    n = sys.rank
    k = sys.pole_order
    name = sys.var
    R = math.lcm(source.ramification, sys.ramification)
    d = R * (k - 1)
    if max_extra is None:
        max_extra = 4 * d + 8
    exact_sources = source.A.vars[0].exact and sys.A.vars[0].exact
    base1 = _coeff_matrices(source, name, R, 0)
    base2 = _coeff_matrices(sys, name, R, 0)
    if base1[0] != base2[0]:
        raise LeadingTermMismatchError("leading matrices of source and target differ")
    extra = d
    while True:
        M = N + extra
        A1 = _coeff_matrices(source, name, R, M)
        A2 = _coeff_matrices(sys, name, R, M)
        cplx = any(x.im for mats in (A1, A2) for m in mats for row in m for x in row)
        conv = (lambda x: x) if cplx else (lambda x: x.re)
        A1c = [[[conv(x) for x in row] for row in m] for m in A1]
        A2c = [[[conv(x) for x in row] for row in m] for m in A2]

        def col(order, a, b):
            return ((order - 1) * n + a) * n + b

        rows = []
        for m in range(1, M + 1):
            for i in range(n):
                for j in range(n):
                    eq = {}
                    for order in range(1, m + 1):
                        s = m - order
                        B1, B2 = A1c[s], A2c[s]
                        # (phi_order A1_s)_ij = sum_b phi[i][b] A1_s[b][j]
                        for b in range(n):
                            if B1[b][j]:
                                c = col(order, i, b)
                                eq[c] = eq.get(c, 0) + B1[b][j]
                        # -(A2_s phi_order)_ij = -sum_a A2_s[i][a] phi[a][j]
                        for a in range(n):
                            if B2[i][a]:
                                c = col(order, a, j)
                                eq[c] = eq.get(c, 0) - B2[i][a]
                    if m - d >= 1:
                        c = col(m - d, i, j)
                        eq[c] = eq.get(c, 0) - Fraction(m - d, R)
                    eq = {c: v for c, v in eq.items() if v}
                    rhs = -(A1c[m][i][j] - A2c[m][i][j])
                    rows.append((eq, rhs, m))
        pivots, bad = _solve_sparse(rows, n * n * M)
        if bad is not None:
            raise ResonanceError(bad, "the intertwining equations are inconsistent")
        undetermined = None
        for order in range(1, N + 1):
            for a in range(n):
                for b in range(n):
                    c = col(order, a, b)
                    if c not in pivots or len(pivots[c][0]) != 1:
                        undetermined = order
                        break
                if undetermined:
                    break
            if undetermined:
                break
        if undetermined is None:
            break
        if extra >= max_extra or not exact_sources and M + 1 >= min(source.prec, sys.prec):
            raise ResonanceError(undetermined, "coefficient not uniquely determined")
        extra = min(max_extra, extra + max(d, 1))

    v = VarSpec(name, R, 0, N + 1)
    entries = [[dict() for _ in range(n)] for _ in range(n)]
    for a in range(n):
        entries[a][a][(0,)] = 1
    for order in range(1, N + 1):
        for a in range(n):
            for b in range(n):
                val = pivots[col(order, a, b)][1]
                if val:
                    entries[a][b][(order,)] = val
    return MatSeries([[MultiSeries([v], entries[a][b]) for b in range(n)] for a in range(n)])


# ---------------------------------------------------------------------------
# groupoid representations


@dataclass(frozen=True)
class GroupoidRepresentation:
    """A matrix series Psi(z, u) on a chart.

    ``degree`` is None when every coefficient inside the box window is known,
    or a total degree D (in base units, z-exponent / ramification + u-exponent)
    when only the terms up to D are meaningful.
    """

    chart: GroupoidChart
    psi: MatSeries
    degree: int = None

    def __post_init__(self):
        if len(self.psi.vars) != 2:
            raise ValueError("representation must be a series in (z, u)")
        if self.psi.names != self.chart.names:
            raise ValueError(f"representation variables {self.psi.names} do not match chart {self.chart.names}")

    @property
    def ramification(self):
        return self.psi.vars[0].ramification

    @property
    def rank(self):
        return self.psi.rows

    def coefficient(self, i, j, z_exp, u_exp):
        """Coefficient of z^z_exp u^u_exp in entry (i, j); z_exp may be a Fraction."""
        e = Fraction(z_exp) * self.ramification
        if e.denominator != 1:
            return Scalar(0)
        if self.degree is not None and Fraction(z_exp) + u_exp > self.degree:
            raise WindowError("coefficient lies above the truncation degree")
        return self.psi[i, j].coefficient((int(e), u_exp))

    def restrict_degree(self, D):
        """Keep only terms of total degree <= D."""
        R = self.ramification
        D = D if self.degree is None else min(D, self.degree)
        def cut(s):
            c = {e: x for e, x in s.coeffs.items() if Fraction(e[0], R) + e[1] <= D}
            return MultiSeries(s.vars, c)
        return GroupoidRepresentation(self.chart, self.psi.map(cut), D)

    def at_identity(self):
        """Psi on the identity bisection u = 0 as a univariate matrix series."""
        def cut(s):
            v = s.vars[0]
            return MultiSeries([v], {(e[0],): x for e, x in s.coeffs.items() if e[1] == 0})
        return self.psi.map(cut)

    def check_identity(self):
        m = self.at_identity()
        return m.is_identity()

    def check_multiplicativity(self, degree=8):
        """Psi(g2 g1) == Psi(g2) Psi(g1) modulo total degree > ``degree`` in (z, u1, u2)."""
        return representation_multiplicativity(self, degree)

    def eval_numeric(self, z, u):
        import numpy as np

        out = np.empty((self.rank, self.rank), dtype=complex)
        for i in range(self.rank):
            for j in range(self.rank):
                out[i, j] = self.psi[i, j].eval_numeric({self.chart.z: z, self.chart.u: u})
        return out

    def coefficient_table(self, D=None):
        """Rows (i, j, z-exponent, u-exponent, coefficient) in graded-lex order."""
        R = self.ramification
        out = []
        for i in range(self.rank):
            for j in range(self.rank):
                for e, c in self.psi[i, j].terms():
                    ze = Fraction(e[0], R)
                    if D is not None and ze + e[1] > D:
                        continue
                    out.append((i, j, ze, e[1], c))
        out.sort(key=lambda t: (t[0], t[1], t[2] + t[3], t[2], t[3]))
        return out

    def to_json(self, D=None):
        if D is None:
            D = self.degree
        table = []
        for i, j, ze, ue, c in self.coefficient_table(D):
            zs = str(ze.numerator) if ze.denominator == 1 else f"{ze.numerator}/{ze.denominator}"
            table.append([i, j, zs, ue, *c.to_json()])
        return {
            "chart": {"kind": self.chart.kind, "k": self.chart.k, "mu": self.chart.mu},
            "variables": list(self.chart.names),
            "ramification": self.ramification,
            "degree": D,
            "window": [self.psi.vars[0].prec, self.psi.vars[1].prec],
            "coefficients": table,
        }


def _chart_vars(chart, R, pz, pu):
    return (VarSpec(chart.z, R, 0, pz), VarSpec(chart.u, 1, 0, pu))


def ratio_power(chart, alpha, vars, degree=None):
    """ratio(z, u)^alpha as a series in (w, u), w = z^(1/R), equal to 1 at u = 0."""
    alpha = _scalar(alpha)
    R = vars[0].ramification
    precs = tuple(v.prec for v in vars)
    if chart.mu:
        x = MultiSeries.monomial(vars, (R, 1), -1).truncate(precs)
        return binom_power(1 + x, -alpha, degree=degree)
    x = MultiSeries.monomial(vars, (R * (chart.k - 1), 1)).truncate(precs)
    if chart.kind == PAIR:
        return binom_power(1 + x, alpha, degree=degree)
    if not alpha:
        return MultiSeries.constant(1, [v.window(low=0) for v in vars])
    return exp_series(x.scale(alpha), degree=degree)


def model_rep(model, chart, degree=None, precs=None):
    """Closed-form representation of a diagonal exponential model.

    Entry i is ratio^(-a_i) exp(q_i(s) - q_i(t)); each term c w^(-m) of q_i
    contributes c z^(-m/r) (1 - ratio^(-m/r)). The window is (r (D+1), D+1)
    for a total degree D, or explicit ``precs`` in units of w and u.
    """
    if not isinstance(chart, GroupoidChart):
        raise TypeError("chart must be a GroupoidChart")
    if chart.mu and chart.k != 2:
        raise DomainError("the mu chart exists only for pole order 2")
    if chart.k != model.pole_order:
        raise DomainError(f"chart order {chart.k} differs from model pole order {model.pole_order}")
    if not model.degree_bound_ok():
        raise DomainError("exponential part too singular: the representation would have a pole")
    r = model.ramification
    if precs is None:
        if degree is None:
            raise ValueError("model_rep needs a degree or explicit precisions")
        precs = (r * (degree + 1), degree + 1)
    pz, pu = precs
    vars = _chart_vars(chart, r, pz, pu)
    out_vars = tuple(v.window(low=0) for v in vars)
    zero = MultiSeries.zero(out_vars)
    diag = []
    for e in model.entries:
        log_part = None
        for m, c in e.q:
            wide = _chart_vars(chart, r, pz + m, pu)
            p = ratio_power(chart, Fraction(-m, r), wide)
            term = (1 - p).shift((-m, 0)).scale(c)
            if any(x[0] < 0 for x in term.coeffs):
                raise DomainError("exponential contribution has a pole on the chart")
            term = MultiSeries(out_vars, term.coeffs)
            log_part = term if log_part is None else log_part + term
        entry = ratio_power(chart, -e.residue, vars)
        if log_part is not None:
            entry = mul(entry, exp_series(log_part))
        diag.append(MultiSeries(out_vars, entry.truncate((pz, pu)).coeffs))
    n = model.rank
    rows = [[diag[i] if i == j else zero for j in range(n)] for i in range(n)]
    return GroupoidRepresentation(chart, MatSeries(rows))


def closed_form_rank_one(chart, a, degree=None, precs=None):
    """exp(-a S) for the chart's additive function S, as a 1x1 representation."""
    from .groupoid import additive_fn

    if precs is None:
        precs = (degree + 1, degree + 1)
    S = additive_fn(chart, precs)
    return GroupoidRepresentation(chart, MatSeries([[exp_series(S.scale(-_scalar(a)))]]))


# -- resummation -------------------------------------------------------------


def required_precs(phi_ramification, pre_gauge, degree, model_ramification=1):
    """(R, w-precision, u-precision) needed to know Sigma through total degree ``degree``."""
    R = math.lcm(phi_ramification, model_ramification)
    spread = Fraction(0)
    if pre_gauge is not None:
        R = math.lcm(R, pre_gauge.ramification())
        spread = pre_gauge.spread()
    return R, int(R * (degree + spread)) + 1, degree + 1


def _target_pullback(phi, chart, vars):
    """phi(w * ratio^(1/R)) for a univariate matrix series phi in w."""
    R = vars[0].ramification
    precs = tuple(v.prec for v in vars)
    exps = sorted({e[0] for s in phi.entries for e in s.coeffs})
    powers = {}
    for e in exps:
        if e >= precs[0]:
            continue
        p = ratio_power(chart, Fraction(e, R), vars) if e else MultiSeries.constant(1, vars)
        powers[e] = p.shift((e, 0)).truncate(precs)
    out_vars = tuple(v.window(low=0) for v in vars)
    rows = []
    for row in phi.row_list():
        out = []
        for s in row:
            acc = {}
            for (e,), c in s.coeffs.items():
                if e not in powers:
                    continue
                for k, x in powers[e].coeffs.items():
                    y = acc.get(k)
                    acc[k] = x * c if y is None else y + x * c
            out.append(MultiSeries._new(out_vars, {k: x for k, x in acc.items() if x}))
        rows.append(out)
    return MatSeries(rows)


def _to_chart(s, chart, R, pz, pu):
    """Embed a univariate series in w into the chart's (w, u) variables."""
    v = s.vars[0]
    nv = VarSpec(chart.z, R, v.low, min(v.prec, pz))
    s = MultiSeries._new((nv,), {e: x for e, x in s.coeffs.items() if e[0] < nv.prec})
    return s.embed((nv, VarSpec(chart.u, 1, 0, pu))).truncate((pz, pu))


def resum(phi, psi1, pre_gauge=None, degree=None):
    """Sigma = t*(H phi) Psi1 (s*(H phi))^(-1) through total degree ``degree``.

    All negative and fractional z-exponents must cancel; a surviving one
    raises CancellationError. The result has ramification 1.
    """
    if degree is None:
        raise ValueError("resum needs a truncation degree")
    if isinstance(phi, FormalGauge):
        if pre_gauge is None:
            pre_gauge = phi.pre_gauge
        phi_m = phi.phi
    else:
        phi_m = phi
    chart = psi1.chart
    n = psi1.rank
    if phi_m.rows != n or phi_m.cols != n:
        raise ValueError("gauge and representation ranks differ")
    if pre_gauge is not None and pre_gauge.rank != n:
        raise ValueError("pre-gauge rank differs")
    R, pz, pu = required_precs(phi_m.vars[0].ramification, pre_gauge, degree, psi1.ramification)
    name = chart.z

    # gauge in w = z^(1/R)
    phi_w = phi_m.map(lambda s: _lift(s.rename({s.names[0]: name}), name, R))
    if phi_w.vars[0].prec < pz:
        raise WindowError(
            f"gauge known below w^{phi_w.vars[0].prec} but degree {degree} needs w^{pz - 1}"
        )
    phi_w = phi_w.truncate((pz,))
    # model representation in (w, u)
    psi = psi1.psi.map(lambda s: s.with_ramification(name, R))
    if psi.vars[0].prec < pz or psi.vars[1].prec < pu:
        raise WindowError("model representation window too small for the requested degree")
    psi = psi.truncate((pz, pu))
    vars = _chart_vars(chart, R, pz, pu)

    phi_t = _target_pullback(phi_w, chart, vars)
    phi_s_inv = mat_invert(phi_w).map(lambda s: _to_chart(s, chart, R, pz, pu))
    X = mat_mul(mat_mul(phi_t, psi), phi_s_inv)

    if pre_gauge is not None:
        exps = pre_gauge.exponents
        cs = pre_gauge.coefficients
        rp = {}
        rows = []
        for i in range(n):
            if exps[i] not in rp:
                rp[exps[i]] = ratio_power(chart, exps[i], vars)
            row = []
            for j in range(n):
                shift = int((exps[i] - exps[j]) * R)
                s = mul(X[i, j], rp[exps[i]]).shift((shift, 0))
                if cs[i] != cs[j]:
                    s = s.scale(cs[i] * cs[j].reciprocal())
                row.append(s)
            rows.append(row)
    else:
        rows = X.row_list()

    out_vars = (VarSpec(chart.z, 1, 0, degree + 1), VarSpec(chart.u, 1, 0, pu))
    entries = []
    for i, row in enumerate(rows):
        out = []
        for j, s in enumerate(row):
            c = {}
            for (ez, eu), x in s.coeffs.items():
                if Fraction(ez, R) + eu > degree:
                    continue
                if ez < 0 or ez % R:
                    raise CancellationError(Fraction(ez, R), x, (i, j))
                c[(ez // R, eu)] = x
            out.append(MultiSeries._new(out_vars, c))
        entries.append(out)
    return GroupoidRepresentation(chart, MatSeries(entries), degree)


def resum_model(phi, model, chart, pre_gauge=None, degree=None):
    """Resummation with the model representation built at the window the degree needs."""
    if isinstance(phi, FormalGauge) and pre_gauge is None:
        pre_gauge = phi.pre_gauge
    phi_m = phi.phi if isinstance(phi, FormalGauge) else phi
    R, pz, pu = required_precs(phi_m.vars[0].ramification, pre_gauge, degree, model.ramification)
    psi1 = model_rep(model, chart, precs=(pz * model.ramification // R + 1, pu))
    return resum(phi, psi1, pre_gauge, degree)


# -- representation laws ------------------------------------------------------


def representation_multiplicativity(rep, degree=8):
    """Exact check of Psi(g2 g1) = Psi(g2) Psi(g1) modulo total degree > ``degree``.

    Arrows are g1 = (z, u1) and g2 = (target(g1), u2). For a ramified
    variable w = z^(1/R) the target sends w to w ratio^(1/R).
    """
    chart = rep.chart
    R = rep.ramification
    psi = rep.psi
    if rep.degree is not None and rep.degree < degree:
        raise WindowError("representation is truncated below the requested degree")
    zname, uname = chart.names
    vs = (VarSpec(zname, R), VarSpec("_u1"), VarSpec("_u2"))
    w = MultiSeries.variable(zname, vs)
    u1 = MultiSeries.variable("_u1", vs)
    u2 = MultiSeries.variable("_u2", vs)
    z_base = MultiSeries.monomial(vs, (R, 0, 0))
    u21 = compose_u_series(chart, u2, z_base, u1, degree=degree)
    root = ratio_power(chart, Fraction(1, R), _rename_u(vs, "_u1"), degree=degree)
    root = MultiSeries(vs, {(e[0], e[1], 0): x for e, x in root.coeffs.items()})
    w_t = mul(w, root, degree=degree)
    if rep.degree is not None:
        psi = rep.restrict_degree(rep.degree).psi

    def sub(m, assign):
        return m.map(lambda s: substitute(s, assign, degree=degree))

    lhs = sub(psi, {zname: w, uname: u21})
    g2 = sub(psi, {zname: w_t, uname: u2})
    g1 = sub(psi, {zname: w, uname: u1})
    rhs = mat_mul(g2, g1, degree=degree)
    return all(
        degree_filter(a.coeffs, degree) == degree_filter(b.coeffs, degree)
        for a, b in zip(lhs.entries, rhs.entries)
    )


def _rename_u(vs, uname):
    """Variables (w, u) for ratio_power from the three-variable list."""
    return (vs[0], VarSpec(uname))


# ---------------------------------------------------------------------------
# numerics and demos


def delta_psi_numeric(fund, chart, g):
    """psi(t(g)) psi(s(g))^(-1) from a fundamental-solution evaluator ``fund``."""
    import numpy as np

    if isinstance(g, GroupoidPoint):
        z, u = g.as_complex()
    else:
        z, u = (complex(x) for x in g)
    if u == 0:
        m = np.asarray(fund(z), dtype=complex)
        return np.eye(m.shape[0], dtype=complex)
    t = complex(target(chart, z, u))
    a = np.asarray(fund(t), dtype=complex)
    b = np.asarray(fund(z), dtype=complex)
    return a @ np.linalg.inv(b)


def airy_coefficients(N):
    """Exact l_n, m_n for n <= N.

    l_n = 2^n prod_{j<3n} (j + 1/2) / (27^n (2n)!), m_n = -(6n+1)/(6n-1) l_n.
    """
    ls, ms = [], []
    for n in range(N + 1):
        prod = Fraction(1)
        for j in range(3 * n):
            prod *= Fraction(2 * j + 1, 2)
        l = Fraction(2 ** n) * prod / (27 ** n * math.factorial(2 * n))
        ls.append(l)
        ms.append(-Fraction(6 * n + 1, 6 * n - 1) * l)
    return ls, ms


AIRY_PRE_GAUGE = MonomialGauge((Fraction(1, 4), Fraction(-1, 4)))


def airy_model():
    """Exponential parts exp(-(2/3) z^(-3/2)) and exp((2/3) z^(-3/2)) at the pole of order 3."""
    c = Fraction(2, 3)
    return ExponentialModel(
        (ModelEntry(0, ((3, c),)), ModelEntry(0, ((3, -c),))),
        3,
        2,
    )


def airy_system(var="z"):
    """f'' = x f at x = infinity in z = 1/x, for the vector (f, df/dx): d + [[0,z],[1,0]] z^(-3) dz."""
    return MeromorphicSystem.from_matrix([[[0], [0, 1]], [[1], [0]]], 3, var=var)


def airy_gauge(N):
    """phi = [[l(-zeta), l(zeta)], [-m(-zeta), m(zeta)]], zeta = (3/2) z^(3/2), through z^N.

    Built on w = z^(1/2); the pre-gauge diag(z^(1/4), z^(-1/4)) is attached.
    """
    prec = 2 * N + 1
    nmax = (prec - 1) // 3
    ls, ms = airy_coefficients(nmax)
    v = VarSpec("z", 2, 0, prec)
    lp, lm, mp, mm = {}, {}, {}, {}
    for n in range(nmax + 1):
        zc = Fraction(3, 2) ** n
        sign = -1 if n % 2 else 1
        lp[(3 * n,)] = ls[n] * zc
        lm[(3 * n,)] = ls[n] * zc * sign
        mp[(3 * n,)] = ms[n] * zc
        mm[(3 * n,)] = -ms[n] * zc * sign
    phi = MatSeries(
        [
            [MultiSeries([v], lm), MultiSeries([v], lp)],
            [MultiSeries([v], mm), MultiSeries([v], mp)],
        ]
    )
    return FormalGauge(phi, airy_model(), airy_system(), AIRY_PRE_GAUGE)


def euler_system():
    """z^2 f' = f - z as the system [[-1, z], [0, 0]] z^(-2) dz."""
    return MeromorphicSystem.from_matrix([[[-1], [0, 1]], [[0], [0]]], 2)


def euler_model():
    return ExponentialModel((ModelEntry(0, ((1, 1),)), ModelEntry(0)), 2)


def euler_expected(a, b):
    """Coefficient of z^a mu^b in the off-diagonal entry of the resummed Euler gauge."""
    if a < 1 or b < a:
        return Fraction(0)
    d = 1
    for x in range(a, b + 1):
        d *= x
    return Fraction(-1, d)


def euler_demo(degree):
    chart = GroupoidChart(PAIR, 2, mu=True)
    phi = solve_formal_gauge(euler_model(), euler_system(), degree + 1)
    return resum_model(phi, euler_model(), chart, degree=degree)


def airy_demo(degree):
    chart = GroupoidChart(PAIR, 3)
    phi = airy_gauge(degree + 1)
    return resum_model(phi, airy_model(), chart, degree=degree)


# -- truncation locality -----------------------------------------------------


def _perturb_series(s, rng, pick):
    c = dict(s.coeffs)
    added = 0
    for e in pick(s):
        x = Scalar(Fraction(rng.randint(-9, 9) or 1, rng.randint(1, 9)))
        c[e] = c.get(e, Scalar(0)) + x
        added += 1
    return MultiSeries(s.vars, c), added


def truncation_locality_check(phi, model, chart, N, pre_gauge=None, seed=0, perturb_degree=None):
    """Perturb phi and Psi1 above degree N (or phi at ``perturb_degree``) and compare Sigma through N.

    With a pre-gauge, conjugation lowers z-exponents by up to spread(H), so
    Psi1 is perturbed only above N + spread(H). Returns True when the
    degree <= N coefficients of Sigma are unchanged.
    """
    rng = random.Random(seed)
    if isinstance(phi, FormalGauge) and pre_gauge is None:
        pre_gauge = phi.pre_gauge
    phi_m = phi.phi if isinstance(phi, FormalGauge) else phi
    R, pz, pu = required_precs(phi_m.vars[0].ramification, pre_gauge, N, model.ramification)
    rphi = phi_m.vars[0].ramification
    spread = pre_gauge.spread() if pre_gauge is not None else 0
    psi1 = model_rep(model, chart, precs=(pz * model.ramification // R + 1, pu))
    base = resum(phi_m, psi1, pre_gauge, N)

    def above_phi(s):
        prec = s.vars[0].prec
        if perturb_degree is not None:
            e = int(perturb_degree * rphi)
            return [(e,)] if e < prec else []
        lo = N * rphi + 1
        return [(e,) for e in range(lo, prec)]

    def above_psi(s):
        r = s.vars[0].ramification
        pzz, puu = s.precs
        if perturb_degree is not None:
            e = int(perturb_degree * r)
            return [(e, 0)] if e < pzz else []
        return [(a, b) for a in range(pzz) for b in range(puu) if Fraction(a, r) + b > N + spread][:40]

    total = 0
    rows = []
    for row in phi_m.row_list():
        out = []
        for s in row:
            p, added = _perturb_series(s, rng, above_phi)
            total += added
            out.append(p)
        rows.append(out)
    phi2 = MatSeries(rows)
    rows = []
    for i, row in enumerate(psi1.psi.row_list()):
        out = []
        for j, s in enumerate(row):
            if perturb_degree is None:
                p, added = _perturb_series(s, rng, above_psi)
                total += added
            else:
                p = s
            out.append(p)
        rows.append(out)
    psi2 = GroupoidRepresentation(chart, MatSeries(rows))
    try:
        new = resum(phi2, psi2, pre_gauge, N)
    except CancellationError:
        return False
    return base.psi == new.psi


__all__ = [
    "AIRY_PRE_GAUGE",
    "ExponentialModel",
    "FormalGauge",
    "GroupoidRepresentation",
    "ModelEntry",
    "MonomialGauge",
    "airy_coefficients",
    "airy_demo",
    "airy_gauge",
    "airy_model",
    "airy_system",
    "closed_form_rank_one",
    "delta_psi_numeric",
    "descends_to_pair",
    "euler_demo",
    "euler_expected",
    "euler_model",
    "euler_system",
    "intertwining_residual",
    "model_rep",
    "rank_one_model",
    "ratio_power",
    "representation_multiplicativity",
    "required_precs",
    "residual_vanishes",
    "resum",
    "resum_model",
    "leading_basis",
    "pre_gauge_transform",
    "solve_formal_gauge",
    "truncation_locality_check",
]
