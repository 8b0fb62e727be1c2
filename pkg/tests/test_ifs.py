from fractions import Fraction
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from mobius_lq.errors import NoDomainFoundError, NotInvariantError
from mobius_lq.ifs import (
    IntervalSet, MobiusIFS, attractor_cover, certify, diag, find_invariant_domain,
    float_products, format_ifs_text, load_ifs, parse_ifs_text, parse_preset,
    shared_fixed_points, solomyak, ssc4, verify_invariant_domain, _norm_sq_array,
)
from mobius_lq.projective import PI, Mat2, act_angles, angle_dist, real_to_angle


def rotations(phi=1.0):
    return MobiusIFS((Mat2.rotation(phi), Mat2.rotation(2 * phi)), (0.5, 0.5))


def test_family_validation():
    B = Mat2.exact("1/2", 0, 0, 2)
    with pytest.raises(ValueError):
        MobiusIFS((B,), (1,))
    with pytest.raises(ValueError):
        MobiusIFS((B, B), (Fraction(1, 2), Fraction(1, 3)))
    with pytest.raises(ValueError):
        MobiusIFS((B, B), (Fraction(1), Fraction(0)))
    with pytest.raises(ValueError):
        solomyak(9, 0)


@pytest.mark.parametrize("make", [solomyak, ssc4, lambda: diag(2, 4), lambda: diag(2, 3, 5)])
def test_preset_weights_are_exact(make):
    ifs = make()
    assert ifs.is_exact
    assert sum(ifs.weights) == 1


def test_verify_solomyak_on_padded_interval(sol):
    cert = verify_invariant_domain(sol, IntervalSet.from_real_interval(-0.1, 6.1))
    assert cert.margin > 0
    assert cert.contraction_constant_C1 > 1
    for x in (0, 9 / 14, 1.5, 4.5, 6):
        assert cert.U.contains_angle(real_to_angle(x))


def test_certificate_nesting(sol):
    cert = certify(sol)
    assert cert.U1.clearance_of(cert.U) >= cert.margin * (1 - 1e-9)
    assert cert.U0.clearance_of(cert.U1) >= cert.margin * (1 - 1e-9)
    for m in sol.arrays:
        assert cert.U.clearance_of(cert.U0.image(m)) >= cert.margin * (1 - 1e-9)


def test_rotation_family_is_not_invariant():
    with pytest.raises(NotInvariantError) as info:
        verify_invariant_domain(rotations(), IntervalSet.from_angle_interval(0.2, 0.9))
    assert info.value.map_index == 0


def test_diag_family_attracts_the_vertical_direction(diag24):
    # diag(1/lam, lam) pulls lines towards [0:1], angle pi/2
    cert = verify_invariant_domain(diag24, IntervalSet.from_angle_interval(PI / 2 - 0.1, PI / 2 + 0.1))
    assert cert.U.contains_angle(PI / 2)
    with pytest.raises(NotInvariantError):
        verify_invariant_domain(diag24, IntervalSet.from_angle_interval(-0.1, 0.1))


def test_find_domain_for_solomyak(sol):
    cert = find_invariant_domain(sol)
    for x in (0, 9 / 14, 1.5, 4.5, 6):
        assert cert.U.contains_angle(real_to_angle(x))
    # the cover of the attractor sits inside U0
    cover = attractor_cover(sol, cert, 3)
    assert cert.U0.clearance_of(cover) > 0


def test_find_domain_fails_for_rotations():
    with pytest.raises(NoDomainFoundError):
        find_invariant_domain(rotations(1.0), max_iters=50)


def test_find_domain_for_ssc(ssc):
    cert = find_invariant_domain(ssc)
    a, b = (cert.U.image(m) for m in ssc.arrays)
    # the two first-level pieces are disjoint
    for s, l in a.arcs:
        for t in np.linspace(s, s + l, 50):
            assert not b.contains_angle(t)


def test_cover_depth_zero_is_U(sol):
    cert = certify(sol)
    assert attractor_cover(sol, cert, 0) == cert.U


def test_cover_depth_one_contains_interval_images(sol):
    cover = attractor_cover(sol, certify(sol), 1)
    for lo, hi in [(0, 9 / 14), (0, 1.5), (4.5, 6)]:
        for x in np.linspace(lo, hi, 40):
            assert cover.contains_angle(real_to_angle(x), tol=1e-9)


@pytest.mark.parametrize("depth", [1, 2, 3])
def test_cover_refines(sol, depth):
    cert = certify(sol)
    outer = attractor_cover(sol, cert, depth)
    inner = attractor_cover(sol, cert, depth + 1)
    assert outer.clearance_of(inner) >= -1e-9 or all(
        outer.contains_angle(s, 1e-9) and outer.contains_angle(s + l, 1e-9) for s, l in inner.arcs)
    assert inner.total_length < outer.total_length


def test_shared_fixed_points_solomyak(sol):
    rep = shared_fixed_points(sol)
    assert [fp.real for fp in rep.by_map(2) if fp.real != math.inf] == [6]
    inside = [s for s in rep.shared if s.in_attractor]
    assert [(s.pair, s.real) for s in inside] == [((0, 1), 0)]
    for fp in rep.fixed_points:
        img = act_angles(sol.arrays[fp.map_index], fp.angle)
        assert angle_dist(img, fp.angle) < 1e-9


def test_shared_fixed_points_ssc(ssc):
    rep = shared_fixed_points(ssc)
    finite = sorted(fp.real for fp in rep.fixed_points if fp.real != math.inf)
    assert finite == [0, Fraction(2, 3)]
    [shared] = rep.shared
    assert shared.real == math.inf and not shared.in_attractor


def test_C1_bounds_random_words(sol):
    cert = certify(sol)
    C1 = cert.contraction_constant_C1
    rng = np.random.default_rng(7)
    pts = cert.U.grid(400)
    words = [tuple(rng.integers(0, 3, rng.integers(1, 7))) for _ in range(10_000)]
    mats = np.array([np.linalg.multi_dot([np.eye(2)] + [sol.arrays[i] for i in w]) for w in words])
    x = rng.choice(pts, len(words))
    y = rng.choice(pts, len(words))
    keep = angle_dist(x, y) > 1e-6
    mats, x, y = mats[keep], x[keep], y[keep]
    nsq = _norm_sq_array(mats)
    ratio = angle_dist(act_angles(mats, x), act_angles(mats, y)) * nsq / angle_dist(x, y)
    # a small slack covers grid points the estimator did not see
    assert ratio.max() <= C1 * 1.05
    assert ratio.min() >= 1 / (C1 * 1.05)


def test_interval_set_rejects_full_circle():
    with pytest.raises(ValueError):
        IntervalSet(((0.0, PI),))
    assert IntervalSet.try_from_arcs([(0.0, 2.0), (1.9, 1.3)]) is None


@given(st.lists(st.tuples(st.floats(0, 3.1), st.floats(0.01, 0.5)), min_size=1, max_size=5))
def test_interval_set_components_disjoint(arcs):
    s = IntervalSet.try_from_arcs(arcs)
    if s is None:
        return
    for (a, la), (b, lb) in zip(s.arcs, s.arcs[1:]):
        assert a + la < b
    for a, l in arcs:
        assert s.contains_angle(a + l / 2, 1e-12)


def test_text_format_round_trip(sol):
    again = parse_ifs_text(format_ifs_text(sol))
    assert again.maps == sol.maps and again.weights == sol.weights


def test_text_format_parsing():
    text = """# two maps
    label: toy
    1/2 0 0 2
    1/2 1 0 2
    weights: 1/3 2/3
    """
    ifs = parse_ifs_text(text)
    assert ifs.label == "toy" and ifs.weights == (Fraction(1, 3), Fraction(2, 3))
    with pytest.raises(ValueError):
        parse_ifs_text("1 0 0 1\n")


def test_presets_by_string(tmp_path):
    assert parse_preset("preset:solomyak:t=18:p0=0.45").maps[2].b == 18
    assert parse_preset("preset:diag:lambdas=2,4").maps[1].d == 4
    with pytest.raises(ValueError):
        parse_preset("preset:nope")
    path = tmp_path / "f.txt"
    path.write_text(format_ifs_text(ssc4()))
    assert load_ifs(str(path)).maps == ssc4().maps
