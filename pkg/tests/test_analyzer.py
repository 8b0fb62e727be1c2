import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from mobius_lq.analyzer import (
    CASE_I, CASE_II, DEFAULT_M_LIST, DEFAULT_Q_GRID, INCONCLUSIVE, classify,
    counterexample_bounds, dichotomy_probe, entropy, hausdorff_formula,
    hausdorff_report, lyapunov_enumeration,
)
from mobius_lq.errors import NoSharedFixedPointError
from mobius_lq.ifs import solomyak
from mobius_lq.measure import DyadicHistogram, discretize, multifractal_diagnostics
from mobius_lq.measure import spectrum_estimate

SHIFTED = tuple(q + 0.1 for q in DEFAULT_Q_GRID)


@pytest.fixture(scope="module")
def sol_verdict(sol):
    return dichotomy_probe(sol)


def test_classify_linear_spike():
    q = [2, 4, 6, 8, 10, 12]
    v = classify(q, [0.1 * x for x in q], [x - 1 for x in q])
    assert v.case == CASE_II
    assert v.alpha_hat == pytest.approx(0.1)
    assert v.fit_residual == pytest.approx(0.0, abs=1e-12)


def test_classify_consistent_and_inconclusive():
    q = [2, 4, 6, 8, 10, 12]
    assert classify(q, [(x - 1) / 2 for x in q], [(x - 1) / 2 for x in q]).case == CASE_I
    # gaps too large for case I, spectrum not linear through the origin
    tau = [(x - 1) / 2 - 1.0 for x in q]
    assert classify(q, tau, [(x - 1) / 2 for x in q]).case == INCONCLUSIVE


def test_envelope_uses_trivial_bound():
    v = classify([2, 4, 6, 8, 10, 12], [1, 3, 5, 7, 9, 11], [None] * 6)
    assert v.envelope == [1, 3, 5, 7, 9, 11]
    assert v.case == CASE_I


@given(alpha=st.floats(0.01, 0.3), lift=st.floats(0.5, 3))
def test_classify_q0_location(alpha, lift):
    q = list(DEFAULT_Q_GRID)
    v = classify(q, [alpha * x for x in q], [alpha * x + lift for x in q])
    assert v.case == CASE_II
    if v.q0_hat is not None:
        assert q[0] <= v.q0_hat <= q[-1]
        assert v.q0_uncertainty == pytest.approx(min(np.diff(q)))


def test_grid_too_small(ssc):
    with pytest.raises(ValueError):
        dichotomy_probe(ssc, (2, 4, 8))


def test_ssc_case_i(ssc):
    v = dichotomy_probe(ssc)
    assert v.case == CASE_I
    for row in v.table():
        assert row["tau_hat"] == pytest.approx((row["q"] - 1) / 2, abs=0.15)


def test_uniform_synthetic_case_i():
    v = dichotomy_probe(DyadicHistogram.uniform, m_list=(8, 10, 12))
    assert v.case == CASE_I
    assert np.allclose(v.tau_hat, np.array(DEFAULT_Q_GRID) - 1)


def test_solomyak_case_ii(sol_verdict):
    v = sol_verdict
    assert v.case == CASE_II
    assert v.alpha_hat <= 0.2
    assert v.fit_residual <= 0.10
    row = next(r for r in v.table() if r["q"] == 12.0)
    assert row["gap"] >= 2.0
    d = v.to_dict()
    assert {"case", "alpha_hat", "q0_hat", "table"} <= set(d)


def test_verdict_stable_under_grid_shift(sol, ssc, sol_verdict):
    assert dichotomy_probe(sol, SHIFTED).case == sol_verdict.case
    assert dichotomy_probe(ssc, SHIFTED).case == dichotomy_probe(ssc).case


def test_legendre_consistency(sol, sol_verdict):
    rep = counterexample_bounds(sol, m_list=(12,), q_list=(12.0,))
    assert abs(sol_verdict.alpha_hat - rep.pointwise) <= 0.05
    h = discretize(sol, 18)
    tau12 = spectrum_estimate(sol, 12.0, DEFAULT_M_LIST).estimate
    diag = multifractal_diagnostics(h, 12.0, sol_verdict.alpha_hat, tau12)
    assert diag["checks"]["case_ii_census"]["passed"]


def test_counterexample_bounds(sol):
    rep = counterexample_bounds(sol)
    assert rep.p0 == pytest.approx(0.49)
    assert rep.pair == (0, 1)
    assert rep.r_local == pytest.approx(2.0)
    assert rep.slope_bound == pytest.approx(-math.log2(0.98) / 2)
    by_m = {c[0]: c for c in rep.mass_bound_checks}
    assert by_m[16][1] == 8
    assert by_m[16][3] == pytest.approx(0.98 ** 8)
    assert rep.passed
    assert rep.to_dict()["passed"]


def test_counterexample_needs_shared_point(ssc):
    with pytest.raises(NoSharedFixedPointError):
        counterexample_bounds(ssc)


def test_p0_zero_rejected():
    with pytest.raises(ValueError):
        solomyak(9, 0)


def test_hausdorff_diag(diag24):
    rep = hausdorff_report(diag24, samples=20_000)
    assert rep.entropy == pytest.approx(1.0)
    assert rep.chi_enumeration == pytest.approx(1.5)
    assert rep.chi_monte_carlo == pytest.approx(1.5, abs=0.02)
    assert rep.prediction == pytest.approx(1 / 3, abs=0.01)


def test_hausdorff_ssc(ssc):
    rep = hausdorff_report(ssc, samples=20_000)
    assert rep.prediction == pytest.approx(0.5, abs=0.02)
    assert rep.chi_enumeration == pytest.approx(1.0, abs=0.05)


@given(H=st.floats(-1, 5), chi=st.floats(0.01, 5))
def test_hausdorff_formula_range(H, chi):
    v = hausdorff_formula(H, chi)
    assert 0 <= v <= 1
    if H >= 2 * chi:
        assert v == 1
    if H <= 0:
        assert v == 0


def test_entropy_and_enumeration_budget(sol):
    assert entropy([1.0]) == 0
    assert entropy([0.5, 0.5]) == pytest.approx(1.0)
    _, used = lyapunov_enumeration(sol, depth=10, budget=1000)
    assert 3 ** used <= 1000
