"""Acceptance criteria 1-11, one PASS/FAIL line each.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the lines; they
are also printed (uncaptured) under plain ``pytest -v``.
"""

import math
import random
import time
from fractions import Fraction

import numpy as np
import pytest

from stokes_resum.connection import MeromorphicSystem, ScalarOperator, companion, pushforward
from stokes_resum.demos import compare_airy, compare_euler
from stokes_resum.groupoid import PAIR, STO, GroupoidChart, check_axioms, target
from stokes_resum.oracle import PathSpec, airy_wronskian, euler_closed_form, transport
from stokes_resum.resummation import (
    AIRY_PRE_GAUGE,
    airy_demo,
    airy_gauge,
    airy_model,
    airy_system,
    closed_form_rank_one,
    delta_psi_numeric,
    descends_to_pair,
    euler_demo,
    euler_expected,
    euler_model,
    euler_system,
    rank_one_model,
    resum_model,
    solve_formal_gauge,
    truncation_locality_check,
)
from stokes_resum.oracle import airy_fundamental
from stokes_resum.series import MultiSeries, Scalar, VarSpec

# pinned thresholds
EULER_EXACT_MAX_SUM = 12
EULER_EXACT_SECONDS = 2.0
EULER_NUMERIC_DEGREE = 40
EULER_NUMERIC_POINT = (0.1, 0.5)
EULER_NUMERIC_ABS_TOL = 1e-10
GAUGE_FACTORIAL_MAX = 20
AIRY_EXACT_DEGREE = 6
AIRY_EXACT_SECONDS = 10.0
AIRY_NUMERIC_DEGREE = 30
AIRY_NUMERIC_POINT = (0.2, 0.1)
AIRY_NUMERIC_REL_TOL = 1e-6
WRONSKIAN_POINTS = 20
WRONSKIAN_ABS_TOL = 1e-12
PAIR_KS = (1, 2, 3, 4, 5)
STO_KS = (1, 2, 3, 4)
GROUPOID_DEGREE = 10
GROUPOID_SAMPLES = 100
GROUPOID_TOL = 1e-9
GROUPOID_SECONDS = 5.0
RANK_ONE_KS = (1, 2, 3, 4)
RANK_ONE_RESIDUES = (1, 2, Fraction(1, 2), Scalar(0, 1))
RANK_ONE_DEGREE = 12
LOCALITY_NS = (4, 8)
MULTIPLICATIVITY_DEGREE = 8


@pytest.fixture
def report(capsys):
    def emit(number, ok, detail):
        with capsys.disabled():
            print(f"\nACCEPTANCE {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}")
        return ok

    return emit


def test_criterion_01_euler_exact_coefficients(report):
    start = time.perf_counter()
    rep = euler_demo(2 * EULER_EXACT_MAX_SUM + 2)
    bad = []
    for i in range(EULER_EXACT_MAX_SUM + 1):
        for j in range(EULER_EXACT_MAX_SUM + 1 - i):
            d = 1
            for x in range(i + 1, i + j + 2):
                d *= x
            if rep.coefficient(0, 1, i + 1, i + j + 1) != Fraction(-1, d):
                bad.append((i, j))
    elapsed = time.perf_counter() - start
    ok = not bad and not compare_euler(rep) and elapsed < EULER_EXACT_SECONDS
    assert report(1, ok, f"i+j <= {EULER_EXACT_MAX_SUM} exact, mismatches={len(bad)}, {elapsed:.3f}s < {EULER_EXACT_SECONDS}s")


def test_criterion_02_euler_closed_form(report):
    rep = euler_demo(EULER_NUMERIC_DEGREE)
    z, mu = EULER_NUMERIC_POINT
    approx = rep.eval_numeric(z, mu)[0, 1]
    exact = euler_closed_form(z, mu)
    err = abs(approx - exact)
    ok = err <= EULER_NUMERIC_ABS_TOL and abs(euler_closed_form(z, 0.0)) == 0
    assert report(2, ok, f"degree {EULER_NUMERIC_DEGREE} at {EULER_NUMERIC_POINT}: abs error {err:.2e} <= {EULER_NUMERIC_ABS_TOL}")


def test_criterion_03_gauge_factorials(report):
    phi = solve_formal_gauge(euler_model(), euler_system(), GAUGE_FACTORIAL_MAX + 1)
    # the off-diagonal entry is z f(z) with f = sum n! z^n
    coeffs = [phi.coefficient(n + 1)[0][1] for n in range(GAUGE_FACTORIAL_MAX + 1)]
    ok = all(c == math.factorial(n) for n, c in enumerate(coeffs))
    assert report(3, ok, f"f_n = n! for n <= {GAUGE_FACTORIAL_MAX}, exact")


def test_criterion_04_airy_exact_matrix(report):
    start = time.perf_counter()
    phi = airy_gauge(AIRY_EXACT_DEGREE + 1)
    rep = resum_model(phi, airy_model(), GroupoidChart(PAIR, 3), pre_gauge=AIRY_PRE_GAUGE, degree=AIRY_EXACT_DEGREE)
    elapsed = time.perf_counter() - start
    bad = compare_airy(rep)
    ok = not bad and rep.ramification == 1 and elapsed < AIRY_EXACT_SECONDS
    assert report(4, ok, f"degree <= {AIRY_EXACT_DEGREE} exact, integral powers only, mismatches={len(bad)}, {elapsed:.3f}s")


def test_criterion_05_airy_numeric(report):
    rep = airy_demo(AIRY_NUMERIC_DEGREE)
    z, u = AIRY_NUMERIC_POINT
    sigma = rep.eval_numeric(z, u)
    ref = delta_psi_numeric(airy_fundamental, rep.chart, (z, u))
    err_special = np.max(np.abs(sigma - ref)) / np.max(np.abs(ref))

    # transport the scalar Airy operator's companion system from s to t; its
    # jets (f, delta f) with delta = z^3 d/dz equal diag(1, -z) (f, df/dx)
    op = ScalarOperator.from_polys([{1: -1}, {2: -1}], 3)
    comp = companion(op)
    t = complex(target(rep.chart, z, u))
    T = transport(comp, PathSpec((z, t)), 1e-12).matrix
    D = lambda x: np.diag([1, -x])
    T_fx = np.linalg.inv(D(t)) @ T @ D(z)
    err_transport = np.max(np.abs(sigma - T_fx)) / np.max(np.abs(T_fx))
    ok = err_special <= AIRY_NUMERIC_REL_TOL and err_transport <= AIRY_NUMERIC_REL_TOL
    assert report(
        5, ok, f"rel error vs Airy values {err_special:.2e}, vs transport {err_transport:.2e} (tol {AIRY_NUMERIC_REL_TOL})"
    )


def test_criterion_06_airy_wronskian(report):
    rng = random.Random(6)
    points = [complex(rng.uniform(-8, 8), 0) for _ in range(WRONSKIAN_POINTS // 2)]
    while len(points) < WRONSKIAN_POINTS:
        x = complex(rng.uniform(-6, 6), rng.uniform(-6, 6))
        if abs(x) <= 8:
            points.append(x)
    worst = max(abs(airy_wronskian(x) - 1 / math.pi) for x in points)
    ok = worst <= WRONSKIAN_ABS_TOL
    assert report(6, ok, f"{len(points)} points, max abs error {worst:.2e} <= {WRONSKIAN_ABS_TOL}")


def test_criterion_07_groupoid_axioms(report):
    start = time.perf_counter()
    failures = []
    for k in PAIR_KS:
        res = check_axioms(PAIR, k, degree=GROUPOID_DEGREE, samples=GROUPOID_SAMPLES, tol=GROUPOID_TOL)
        failures += [(PAIR, k, name) for name, v in res.items() if not v["pass"]]
    for k in STO_KS:
        res = check_axioms(STO, k, degree=GROUPOID_DEGREE, samples=GROUPOID_SAMPLES, tol=GROUPOID_TOL)
        failures += [(STO, k, name) for name, v in res.items() if not v["pass"]]
        assert "hom_E" in res
    elapsed = time.perf_counter() - start
    ok = not failures and elapsed < GROUPOID_SECONDS
    assert report(7, ok, f"Pair k={PAIR_KS} exact, Sto k={STO_KS} degree {GROUPOID_DEGREE} + {GROUPOID_SAMPLES} samples, failures={failures}, {elapsed:.2f}s")


def test_criterion_08_rank_one_closed_forms(report):
    bad = []
    checked = 0
    for k in RANK_ONE_KS:
        for a in RANK_ONE_RESIDUES:
            m = rank_one_model(k, a)
            phi = solve_formal_gauge(m, m.induced_system(), RANK_ONE_DEGREE + 1)
            for kind in (STO, PAIR):
                if kind == PAIR and not descends_to_pair(k, a):
                    continue
                chart = GroupoidChart(kind, k)
                rep = resum_model(phi, m, chart, degree=RANK_ONE_DEGREE)
                ref = closed_form_rank_one(chart, a, RANK_ONE_DEGREE)
                checked += 1
                for ze in range(RANK_ONE_DEGREE + 1):
                    for ue in range(RANK_ONE_DEGREE + 1 - ze):
                        if rep.coefficient(0, 0, ze, ue) != ref.coefficient(0, 0, ze, ue):
                            bad.append((kind, k, str(a), ze, ue))
    ok = not bad
    assert report(8, ok, f"{checked} (chart, k, a) cases to degree {RANK_ONE_DEGREE}, mismatches={len(bad)}")


def test_criterion_09_pushforward(report):
    rng = random.Random(9)
    ok = True
    half = Fraction(1, 2)
    w = VarSpec("z")
    for _ in range(10):
        a0 = {e: Fraction(rng.randint(-9, 9), rng.randint(1, 5)) for e in range(rng.randint(1, 4))}
        a1 = {e: Scalar(rng.randint(-9, 9), rng.randint(-3, 3)) for e in range(rng.randint(1, 4))}
        A = {}
        for e, c in a0.items():
            A[2 * e] = Scalar(c)
        for e, c in a1.items():
            A[2 * e + 1] = c
        push = pushforward(MeromorphicSystem.from_matrix([[A]], 3), 2)
        A0 = MultiSeries([w], a0)
        A1 = MultiSeries([w], a1)
        expected = [
            [A0.scale(half), A1.shift((1,)).scale(half)],
            [A1.scale(half), (A0 + MultiSeries([w], {1: 1})).scale(half)],
        ]
        ok &= push.pole_order == 2
        ok &= all(push.A[i, j].same_coefficients(expected[i][j]) for i in range(2) for j in range(2))
    assert report(9, ok, "pole 3 rank one along z -> z^2 gives (1/2)[[A0, wA1], [A1, A0 + w]] w^-2 dw, exact")


def test_criterion_10_truncation_locality(report):
    results = {}
    for N in LOCALITY_NS:
        euler_phi = solve_formal_gauge(euler_model(), euler_system(), N + 2)
        mu_chart = GroupoidChart(PAIR, 2, mu=True)
        results[("euler", N)] = truncation_locality_check(euler_phi, euler_model(), mu_chart, N)
        results[("euler-below", N)] = not truncation_locality_check(
            euler_phi, euler_model(), mu_chart, N, perturb_degree=N - 1
        )
        airy_phi = airy_gauge(N + 2)
        pair3 = GroupoidChart(PAIR, 3)
        results[("airy", N)] = truncation_locality_check(airy_phi, airy_model(), pair3, N, AIRY_PRE_GAUGE)
        results[("airy-below", N)] = not truncation_locality_check(
            airy_phi, airy_model(), pair3, N, AIRY_PRE_GAUGE, perturb_degree=N - 2
        )
    ok = all(results.values())
    assert report(10, ok, f"N in {LOCALITY_NS}: unchanged above N, perturbation at or below N detected: {ok}")


def test_criterion_11_representation_property(report):
    outputs = [euler_demo(12), airy_demo(10)]
    for k in (1, 2, 3):
        m = rank_one_model(k, 2)
        phi = solve_formal_gauge(m, m.induced_system(), 11)
        outputs += [resum_model(phi, m, GroupoidChart(kind, k), degree=10) for kind in (STO, PAIR)]
    ident = all(r.check_identity() for r in outputs)
    mult = all(r.check_multiplicativity(MULTIPLICATIVITY_DEGREE) for r in outputs)
    ok = ident and mult
    assert report(11, ok, f"{len(outputs)} outputs: identity {ident}, multiplicative to degree {MULTIPLICATIVITY_DEGREE} {mult}")
