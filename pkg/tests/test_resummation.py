import math
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from stokes_resum.connection import MeromorphicSystem
from stokes_resum.errors import CancellationError, LeadingTermMismatchError, ResonanceError
from stokes_resum.groupoid import PAIR, STO, GroupoidChart
from stokes_resum.resummation import (
    AIRY_PRE_GAUGE,
    ExponentialModel,
    FormalGauge,
    GroupoidRepresentation,
    ModelEntry,
    MonomialGauge,
    airy_demo,
    airy_gauge,
    airy_model,
    airy_system,
    closed_form_rank_one,
    descends_to_pair,
    euler_demo,
    euler_model,
    euler_system,
    intertwining_residual,
    model_rep,
    rank_one_model,
    residual_vanishes,
    resum_model,
    solve_formal_gauge,
    truncation_locality_check,
)
from stokes_resum.series import MatSeries, MultiSeries, Scalar


def same_through(a, b, D):
    for i in range(a.rank):
        for j in range(a.rank):
            for ze in range(D + 1):
                for ue in range(D + 1 - ze):
                    if a.coefficient(i, j, ze, ue) != b.coefficient(i, j, ze, ue):
                        return False
    return True


# -- solver -------------------------------------------------------------------


def test_euler_gauge_is_factorial():
    phi = solve_formal_gauge(euler_model(), euler_system(), 20)
    for n in range(1, 21):
        assert phi.coefficient(n)[0][1] == math.factorial(n - 1)
    assert residual_vanishes(phi.residual())


def test_airy_gauge_from_system_matches_closed_form():
    solved = solve_formal_gauge(airy_model(), airy_system(), 12, pre_gauge=AIRY_PRE_GAUGE)
    ref = airy_gauge(6)
    assert solved.phi == ref.phi
    source = airy_model().induced_system()
    assert residual_vanishes(intertwining_residual(ref.phi, source, airy_system(), AIRY_PRE_GAUGE))


def test_resonance_detected():
    source = MeromorphicSystem.from_matrix([[0, 0], [0, 1]], 1)
    target = MeromorphicSystem.from_matrix([[0, {1: 1}], [0, 1]], 1)
    with pytest.raises(ResonanceError) as err:
        solve_formal_gauge(source, target, 3)
    assert err.value.order == 1


def test_leading_term_mismatch():
    source = MeromorphicSystem.from_matrix([[1, 0], [0, 2]], 2)
    target = MeromorphicSystem.from_matrix([[1, 0], [0, 3]], 2)
    with pytest.raises(LeadingTermMismatchError):
        solve_formal_gauge(source, target, 3)


def test_constant_basis_change():
    source = MeromorphicSystem.from_matrix([[1, 0], [0, -1]], 2)
    target = MeromorphicSystem.from_matrix([[0, 1], [1, 0]], 2)
    phi = solve_formal_gauge(source, target, 4)
    assert residual_vanishes(phi.residual())


# -- models -------------------------------------------------------------------


def test_model_json_roundtrip():
    m = airy_model()
    assert ExponentialModel.from_json(m.to_json()) == m
    assert MonomialGauge.from_json(AIRY_PRE_GAUGE.to_json()) == AIRY_PRE_GAUGE


def test_model_degree_bound():
    m = ExponentialModel((ModelEntry(0, ((3, 1),)),), 2)
    assert not m.degree_bound_ok()


def test_pre_gauge_ramification_uses_differences():
    assert AIRY_PRE_GAUGE.ramification() == 2
    assert AIRY_PRE_GAUGE.spread() == Fraction(1, 2)


@pytest.mark.parametrize("kind", [STO, PAIR])
@pytest.mark.parametrize("k", [1, 2, 3])
def test_model_rep_is_a_representation(kind, k):
    m = rank_one_model(k, 2)
    if kind == PAIR and not descends_to_pair(k, 2):
        pytest.skip("does not descend")
    rep = model_rep(m, GroupoidChart(kind, k), degree=6)
    assert rep.check_identity()
    assert rep.check_multiplicativity(5)


@pytest.mark.parametrize("k", [1, 2, 3])
@pytest.mark.parametrize("a", [1, Fraction(1, 2), Scalar(0, 1)])
def test_rank_one_pipeline_matches_closed_form(k, a):
    m = rank_one_model(k, a)
    phi = solve_formal_gauge(m, m.induced_system(), 9)
    for kind in (STO, PAIR):
        if kind == PAIR and not descends_to_pair(k, a):
            continue
        chart = GroupoidChart(kind, k)
        rep = resum_model(phi, m, chart, degree=8)
        assert same_through(rep, closed_form_rank_one(chart, a, 8), 8)


def test_half_integer_residue_does_not_descend():
    assert not descends_to_pair(1, Fraction(1, 2))
    assert descends_to_pair(1, 3)


# -- resummation --------------------------------------------------------------


def test_euler_small_degree():
    rep = euler_demo(4)
    assert rep.coefficient(0, 1, 1, 1) == -1
    assert rep.coefficient(0, 1, 1, 3) == Fraction(-1, 6)
    assert rep.coefficient(0, 1, 2, 2) == Fraction(-1, 2)
    assert rep.coefficient(0, 0, 0, 2) == Fraction(1, 2)
    assert rep.check_identity()


def test_airy_representation_laws():
    rep = airy_demo(6)
    assert rep.check_identity()
    assert rep.check_multiplicativity(6)
    assert rep.ramification == 1


def test_wrong_pre_gauge_leaves_fractional_powers():
    phi = solve_formal_gauge(euler_model(), euler_system(), 8)
    with pytest.raises(CancellationError):
        resum_model(phi, euler_model(), GroupoidChart(PAIR, 2), pre_gauge=MonomialGauge((Fraction(1, 2), 0)), degree=4)


def test_perturbed_representation_fails_multiplicativity():
    rep = airy_demo(5)
    psi = rep.psi.row_list()
    bumped = psi[0][0] + MultiSeries(psi[0][0].vars, {(1, 1): 1})
    bad = GroupoidRepresentation(rep.chart, MatSeries([[bumped, psi[0][1]], psi[1]]), rep.degree)
    assert not bad.check_multiplicativity(5)


@pytest.mark.parametrize("N", [4, 8])
def test_truncation_locality(N):
    phi = solve_formal_gauge(euler_model(), euler_system(), N + 2)
    chart = GroupoidChart(PAIR, 2, mu=True)
    assert truncation_locality_check(phi, euler_model(), chart, N)
    assert not truncation_locality_check(phi, euler_model(), chart, N, perturb_degree=N - 1)


@given(st.integers(0, 2**31))
def test_locality_any_seed(seed):
    phi = airy_gauge(5)
    assert truncation_locality_check(phi, airy_model(), GroupoidChart(PAIR, 3), 3, AIRY_PRE_GAUGE, seed=seed)


def test_gauge_json_roundtrip():
    phi = airy_gauge(4)
    back = FormalGauge.from_json(phi.to_json())
    assert back.phi == phi.phi
    assert back.pre_gauge == phi.pre_gauge


def test_representation_json_is_graded():
    data = euler_demo(3).to_json()
    degs = [(r[0], r[1], Fraction(r[2]) + r[3]) for r in data["coefficients"]]
    assert degs == sorted(degs)
