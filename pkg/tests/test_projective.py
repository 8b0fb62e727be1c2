import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from mobius_lq.projective import (
    PI, Mat2, ProjPoint, act, act_angles, action_derivative, angle_dist,
    derivative_at, proj_metric, singular_decompose,
)

B = Mat2.exact("1/2", 0, 0, 2)
A = Mat2.exact("1/2", 0, 2, 2)

angles = st.floats(0, PI, exclude_max=True, allow_nan=False)


@st.composite
def sl2(draw, bound=100.0):
    # g = rotation * diag * rotation keeps the norm under control
    a, b = draw(angles), draw(angles)
    lam = draw(st.floats(1.0, math.sqrt(bound)))
    r1, r2 = Mat2.rotation(a), Mat2.rotation(b)
    return r1 @ Mat2(lam, 0.0, 0.0, 1.0 / lam) @ r2


def test_determinant_is_enforced():
    with pytest.raises(ValueError):
        Mat2.exact(1, 1, 1, 1)
    with pytest.raises(ValueError):
        Mat2(2.0, 0.0, 0.0, 1.0)


def test_exact_product_stays_exact():
    assert (A @ B).is_exact
    assert (A @ B).entries() == (A @ B).entries()


def test_identity_acts_trivially():
    x = ProjPoint(0.7)
    assert act(Mat2.identity(), x).angle == pytest.approx(0.7, abs=1e-12)


def test_B_on_diagonal_direction():
    # (1/2, 2) ~ (1, 4)
    assert act(B, ProjPoint(PI / 4)).angle == pytest.approx(math.atan(4), abs=1e-12)
    assert act(B, ProjPoint(PI / 4)).angle == pytest.approx(1.32582, abs=1e-5)


@given(angles, st.floats(-10, 10))
def test_rotation_shifts(theta, phi):
    out = act(Mat2.rotation(phi), ProjPoint(theta)).angle
    assert angle_dist(out, theta + phi) < 1e-9


def test_metric_examples():
    assert proj_metric(ProjPoint(1.0), ProjPoint(1.0)) == 0
    assert proj_metric(ProjPoint(0.0), ProjPoint(PI / 2)) == pytest.approx(PI / 2)
    assert proj_metric(ProjPoint(0.1), ProjPoint(3.1)) == pytest.approx(PI - 3.0, abs=1e-12)


@given(angles, angles, angles)
def test_metric_axioms(x, y, z):
    assert 0 <= angle_dist(x, y) <= PI / 2 + 1e-15
    assert angle_dist(x, y) == pytest.approx(angle_dist(y, x), abs=1e-15)
    assert angle_dist(x, z) <= angle_dist(x, y) + angle_dist(y, z) + 1e-12


def test_singular_values_of_presets():
    sd = singular_decompose(Mat2.identity())
    assert sd.lambda_plus == 1.0 and sd.degenerate
    sd = singular_decompose(B)
    assert sd.lambda_plus == pytest.approx(2.0)
    assert sd.u_plus.angle == pytest.approx(PI / 2)
    assert sd.v_plus.angle == pytest.approx(PI / 2)
    sd = singular_decompose(A)
    assert sd.lambda_plus ** 2 == pytest.approx((8.25 + math.sqrt(64.0625)) / 2)
    assert sd.lambda_plus ** 2 == pytest.approx(8.12695, abs=1e-5)


@given(sl2())
def test_singular_data_invariants(g):
    sd = singular_decompose(g)
    assert sd.lambda_plus * sd.lambda_minus == pytest.approx(1.0)
    assert angle_dist(sd.u_plus.angle, sd.u_minus.angle) == pytest.approx(PI / 2, abs=1e-9)
    assert angle_dist(sd.v_plus.angle, sd.v_minus.angle) == pytest.approx(PI / 2, abs=1e-9)
    if sd.lambda_plus > 1 + 1e-6:
        assert angle_dist(act(g, sd.u_plus).angle, sd.v_plus.angle) < 1e-9
        assert angle_dist(act(g, sd.u_minus).angle, sd.v_minus.angle) < 1e-9


@given(sl2())
def test_norm_matches_sampled_maximum(g):
    t = np.linspace(0, PI, 10_000, endpoint=False)
    v = np.stack([np.cos(t), np.sin(t)])
    sampled = np.linalg.norm(g.array() @ v, axis=0).max()
    # the grid maximum is within O(h^2) of the true norm; refine with the exact direction
    u = singular_decompose(g).u_plus.vector
    exact = np.linalg.norm(g.array() @ u)
    assert sampled <= exact * (1 + 1e-12)
    assert exact == pytest.approx(g.norm(), rel=1e-9)
    assert sampled == pytest.approx(g.norm(), rel=1e-6)


@given(sl2(), sl2(), angles)
def test_action_is_a_homomorphism(g, h, x):
    lhs = act(g, act(h, ProjPoint(x))).angle
    rhs = act(g @ h, ProjPoint(x)).angle
    assert angle_dist(lhs, rhs) < 1e-9


def test_action_derivative_examples():
    assert action_derivative(Mat2.identity(), 0.3) == pytest.approx(1.0)
    assert action_derivative(2.0, 0.0) == pytest.approx(0.25)
    assert action_derivative(2.0, PI / 2) == pytest.approx(4.0)


@given(sl2())
def test_action_derivative_range_and_integral(g):
    lam = singular_decompose(g).lambda_plus
    th = np.linspace(0, PI, 4001)
    d = action_derivative(lam, th)
    assert d.min() >= lam ** -2 * (1 - 1e-12)
    assert d.max() <= lam ** 2 * (1 + 1e-12)
    from scipy.integrate import quad
    val, _ = quad(lambda t: action_derivative(lam, t), 0, PI, limit=400, points=[PI / 2])
    assert val == pytest.approx(PI, abs=1e-6)


def test_chart_derivative_is_bounded_by_norm():
    g = A @ B @ A
    th = np.linspace(0, PI, 2000, endpoint=False)
    d = derivative_at(g.array(), th)
    n2 = g.norm() ** 2
    assert d.min() >= 1 / n2 * (1 - 1e-12) and d.max() <= n2 * (1 + 1e-12)


@given(sl2(), st.floats(0.05, 0.5))
def test_bounded_distortion_away_from_u_minus(g, eps):
    """Ratio d(gx, gy) |g|^2 / d(x, y) stays in [1/C, C] off an eps-ball of u_minus."""
    sd = singular_decompose(g)
    th = np.linspace(0, PI, 721, endpoint=False)
    ok = angle_dist(th, sd.u_minus.angle) >= eps
    grid = th[ok]
    lam2 = sd.lambda_plus ** 2
    ratio = derivative_at(g.array(), grid) * lam2
    C = max(ratio.max(), 1 / ratio.min())
    # the lemma's constant depends only on eps
    assert C <= 1 / math.sin(eps) ** 2 + 1e-9
    x, y = grid[:-1], grid[1:]
    near = angle_dist(x, y) < 1.5 * (th[1] - th[0])
    x, y = x[near], y[near]
    gx, gy = act_angles(g.array(), x), act_angles(g.array(), y)
    chord = angle_dist(gx, gy) * lam2 / angle_dist(x, y)
    assert np.all(chord <= C * 1.01) and np.all(chord >= 1 / (C * 1.01))
