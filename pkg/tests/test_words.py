from fractions import Fraction
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from mobius_lq.errors import BudgetExceededError
from mobius_lq.ifs import MobiusIFS, diag
from mobius_lq.projective import Mat2, ProjPoint, angle_to_real
from mobius_lq.words import (
    norm_product_constant, product, stopping_pushforward, stopping_set,
)


def exact_norm_sq_at_least(M, m):
    # |M|^2 >= 2^m  iff  T >= 2^m + 2^-m
    return M.frobenius_sq >= Fraction(2) ** m + Fraction(1, 2 ** m)


def test_empty_word(sol):
    wp = product(sol, ())
    assert wp.matrix == Mat2.identity() and wp.weight == 1


def test_AB_versus_BA(sol):
    assert product(sol, (0, 1)).matrix == Mat2.exact("1/4", 0, 1, 4)
    assert product(sol, (1, 0)).matrix == Mat2.exact("1/4", 0, 4, 4)
    assert product(sol, (0, 1)).weight == Fraction(49, 100) ** 2


@given(st.lists(st.integers(0, 1), max_size=8))
def test_diag_norm_is_multiplicative(word):
    ifs = diag(2, 4)
    wp = product(ifs, word)
    assert wp.norm_sq == pytest.approx(math.prod([4, 16][i] for i in word))


def test_diag_stopping_words_have_equal_length():
    ifs = diag(2, 2)
    for m in range(1, 9):
        ss = stopping_set(ifs, m)
        assert set(ss.lengths) == {math.ceil(m / 2)}
        assert len(ss) == 2 ** math.ceil(m / 2)


def test_m_zero_gives_letters(sol):
    ss = stopping_set(sol, 0)
    assert ss.words == [(0,), (1,), (2,)]


def test_solomyak_m4(sol):
    ss = stopping_set(sol, 4)
    assert ss.weight_sum() == 1
    assert len(set(ss.lengths)) > 1
    assert ss.words == sorted(ss.words)


@pytest.mark.parametrize("m", [1, 5, 9, 13, 16])
def test_first_passage_rechecked_exactly(sol, m):
    ss = stopping_set(sol, m)
    for w in ss.words:
        assert exact_norm_sq_at_least(product(sol, w).matrix, m)
        assert not exact_norm_sq_at_least(product(sol, w[:-1]).matrix, m) or len(w) == 1 and m == 0


@pytest.mark.parametrize("m", [3, 8, 14])
def test_norm_bounds(sol, m):
    ss = stopping_set(sol, m)
    assert np.all(ss.norm_sq >= 2.0 ** m * (1 - 1e-12))
    assert np.all(ss.norm_sq <= ss.C * 2.0 ** m * (1 + 1e-12))
    # one letter can overshoot by at most the largest single-letter norm
    top = max(Mat2.from_array(a).norm() ** 2 for a in sol.arrays)
    assert ss.C <= top


def test_monotone_refinement(sol):
    for m in range(1, 12):
        coarse = set(stopping_set(sol, m).words)
        for w in stopping_set(sol, m + 1).words:
            prefixes = [w[:k] for k in range(1, len(w) + 1) if w[:k] in coarse]
            assert len(prefixes) == 1


@given(st.integers(1, 10),
       st.lists(st.integers(1, 20), min_size=3, max_size=3))
def test_weights_sum_to_one_for_any_rational_weights(m, raw):
    total = sum(raw)
    w = tuple(Fraction(r, total) for r in raw)
    ifs = MobiusIFS((Mat2.exact("1/2", 0, 2, 2), Mat2.exact("1/2", 0, 0, 2),
                     Mat2.exact("1/2", 9, 0, 2)), w)
    assert stopping_set(ifs, m).weight_sum() == 1


def test_budget(sol):
    with pytest.raises(BudgetExceededError):
        stopping_set(sol, 12, cap=50)


def test_guard_band_uses_exact_test():
    # B^k has |B^k|^2 = 4^k exactly, on the threshold for even m
    ifs = diag(2, 4)
    ss = stopping_set(ifs, 8)
    assert ((0, 0, 0, 0)) in ss.words
    assert (0, 0, 0) not in ss.words


def test_pushforward_solomyak_in_interval(sol):
    atoms = stopping_pushforward(sol, 6, ProjPoint.from_real(0))
    xs = angle_to_real(atoms.angles)
    assert np.all(xs >= -1e-12) and np.all(xs <= 6 + 1e-12)
    assert sum(w for _, w in atoms) == pytest.approx(1.0)


def test_pushforward_fixed_base_point():
    # angle pi/2 is the attracting line of both diagonal maps
    atoms = stopping_pushforward(diag(2, 4), 6, ProjPoint(math.pi / 2))
    assert np.allclose(atoms.angles, math.pi / 2)
    atoms = stopping_pushforward(diag(2, 4), 6, ProjPoint(0.0))
    assert np.allclose(atoms.angles, 0.0)


def test_pushforward_identical_maps_coincide():
    B = Mat2.exact("1/2", 0, 0, 2)
    ifs = MobiusIFS((B, B), (Fraction(1, 2), Fraction(1, 2)))
    atoms = stopping_pushforward(ifs, 5, ProjPoint.from_real(0.3))
    assert np.ptp(atoms.angles) == 0


def test_norm_product_constant(sol, diag24):
    assert norm_product_constant(diag24, 3) == pytest.approx(1.0)
    rho = norm_product_constant(sol, 4)
    assert 0 < rho < 1
    assert norm_product_constant(sol, 1) <= 1
