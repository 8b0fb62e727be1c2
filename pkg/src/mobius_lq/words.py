"""Words over the alphabet, exact products, and stopping-word sets.

Exact mode works on integer-scaled matrices: with ``D`` the common
denominator of the generator entries, a word of length ``n`` is stored as
the integer matrix ``D**n * A_w``.  Weights are handled the same way with
the common denominator of the probability vector.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
import math
import os

import numpy as np

from .errors import BudgetExceededError
from .ifs import _attracting_direction, float_products, _norm_sq_array
from .projective import Mat2, ProjPoint, act_angles, norm_sq_entries

DEFAULT_CAP = int(os.environ.get("MOBIUS_LQ_BUDGET", 10_000_000))
GUARD = 1e-9


@dataclass(frozen=True)
class WordProduct:
    word: tuple
    matrix: Mat2
    weight: Fraction | float
    norm_sq: float


def product(ifs, word):
    """Left-to-right product ``A_{i1} ... A_{in}`` and weight ``p_{i1} ... p_{in}``."""
    mat = Mat2.identity() if ifs.is_exact else Mat2.identity().to_float()
    weight = Fraction(1) if ifs.is_exact else 1.0
    for i in word:
        mat = mat @ ifs.maps[i]
        weight = weight * ifs.weights[i]
    return WordProduct(tuple(word), mat, weight,
                       norm_sq_entries(*(float(v) for v in mat.entries())))


def _lcm(values):
    out = 1
    for v in values:
        out = out * v // math.gcd(out, v)
    return out


@dataclass(frozen=True)
class _Scaled:
    """Integer-scaled generators for exact enumeration."""
    D: int
    mats: tuple  # integer 4-tuples, D * A_i
    P: int
    weights: tuple  # integers, P * p_i

    @classmethod
    def of(cls, ifs):
        D = _lcm(v.denominator for m in ifs.maps for v in m.entries())
        P = _lcm(w.denominator for w in ifs.weights)
        mats = tuple(tuple(int(v * D) for v in m.entries()) for m in ifs.maps)
        weights = tuple(int(w * P) for w in ifs.weights)
        return cls(D, mats, P, weights)


def _mul(x, y):
    a, b, c, d = x
    e, f, g, h = y
    return (a * e + b * g, a * f + b * h, c * e + d * g, c * f + d * h)


@dataclass
class StoppingSet:
    """First-passage words ``2^m <= |A_w|^2`` with all proper prefixes below.

    Entries are stored column-wise: ``words``, float ``matrices`` of shape
    ``(K, 2, 2)``, float ``weights``, ``norm_sq``.  In exact mode
    ``exact_weights`` holds the weights as ``Fraction``.
    """

    m: int
    words: list
    matrices: np.ndarray
    weights: np.ndarray
    norm_sq: np.ndarray
    exact_weights: list | None = None
    log2_weights: np.ndarray | None = None
    C: float = field(init=False)

    def __post_init__(self):
        self.C = float(self.norm_sq.max() / 2.0 ** self.m) if len(self.words) else 1.0

    def __len__(self):
        return len(self.words)

    @property
    def entries(self):
        ws = self.exact_weights if self.exact_weights is not None else self.weights
        return [WordProduct(w, Mat2.from_array(a), wt, float(n))
                for w, a, wt, n in zip(self.words, self.matrices, ws, self.norm_sq)]

    def weight_sum(self):
        if self.exact_weights is not None:
            return sum(self.exact_weights, Fraction(0))
        return float(np.sum(self.weights))

    @property
    def lengths(self):
        return np.array([len(w) for w in self.words])

    def csv_rows(self):
        ws = self.exact_weights if self.exact_weights is not None else self.weights
        for w, wt, n in zip(self.words, ws, self.norm_sq):
            yield ("".join(_letter(i) for i in w) if len(w) else "-",
                   str(wt) if isinstance(wt, Fraction) else f"{wt:.12g}",
                   f"{n:.12g}")


def _letter(i):
    return chr(ord("a") + i) if i < 26 else f"[{i}]"


def _stops_exact(N, n, m, D):
    """Exact test of ``|A|^2 >= 2^m`` via ``T >= 2^m + 2^-m``."""
    T_num = N[0] * N[0] + N[1] * N[1] + N[2] * N[2] + N[3] * N[3]
    return T_num * (1 << m) >= ((1 << (2 * m)) + 1) * D ** (2 * n)


@lru_cache(maxsize=64)
def stopping_set(ifs, m, cap=DEFAULT_CAP, max_length=4096):
    """Depth-first, lexicographic enumeration of the stopping words.

    Floating norms decide the first-passage test except inside a relative
    guard band of ``1e-9`` around ``2^m``, where the decision is redone in
    exact arithmetic (exact families only).  Words have length at least one,
    so ``m = 0`` yields the single letters.
    """
    if m < 0:
        raise ValueError("m must be non-negative")
    k = len(ifs)
    threshold = 2.0 ** m
    exact = ifs.is_exact
    words, mats, nsq, wx = [], [], [], []
    gens_f = [tuple(float(v) for v in g.entries()) for g in ifs.maps]
    if exact:
        sc = _Scaled.of(ifs)
        root = ((), (1, 0, 0, 1), 1, 0)
    else:
        sc = None
        root = ((), (1.0, 0.0, 0.0, 1.0), 1.0, 0)
    fw = [float(w) for w in ifs.weights]
    logw = [math.log2(w) for w in fw]
    stack = [root]
    nodes = 0
    while stack:
        word, M, W, n = stack.pop()
        nodes += 1
        if nodes > 4 * cap:
            raise BudgetExceededError(f"stopping_set(m={m}) tree", nodes, 4 * cap)
        if exact:
            scale = sc.D ** n  # int / int division rounds correctly for big values
            Mf = (M[0] / scale, M[1] / scale, M[2] / scale, M[3] / scale)
        else:
            Mf = M
        ns = norm_sq_entries(*Mf) if n else 1.0
        if abs(ns - threshold) <= GUARD * threshold and exact:
            stop = _stops_exact(M, n, m, sc.D)
        else:
            stop = ns >= threshold
        if stop and n > 0:
            words.append(word)
            mats.append(Mf)
            nsq.append(ns)
            if exact:
                wx.append(Fraction(W, sc.P ** n))
            if len(words) > cap:
                raise BudgetExceededError(f"stopping_set(m={m})", len(words), cap)
            continue
        if n >= max_length:
            raise BudgetExceededError(f"stopping_set(m={m}) word length", n, max_length)
        for i in reversed(range(k)):
            if exact:
                child = (word + (i,), _mul(M, sc.mats[i]), W * sc.weights[i], n + 1)
            else:
                child = (word + (i,), _mul(M, gens_f[i]), W * fw[i], n + 1)
            stack.append(child)
    matrices = np.array(mats).reshape(-1, 2, 2)
    lw = np.array([sum(logw[i] for i in w) for w in words])
    weights = np.array([float(x) for x in wx]) if exact else np.exp2(lw)
    return StoppingSet(m=m, words=words, matrices=matrices, weights=weights,
                       norm_sq=np.array(nsq), exact_weights=wx if exact else None,
                       log2_weights=lw)


def default_base_point(ifs):
    """Attracting fixed direction of the first hyperbolic generator.

    It lies in the attractor, as the base point of the coding map must.
    """
    for m in ifs.arrays:
        t = _attracting_direction(m)
        if t is not None:
            return ProjPoint(t)
    raise ValueError("no hyperbolic generator to take a base point from")


@dataclass(frozen=True)
class Atoms:
    """Weighted atoms ``A_w x0`` over the stopping words."""
    angles: np.ndarray
    weights: np.ndarray
    m: int
    x0: ProjPoint

    def __iter__(self):
        for a, w in zip(self.angles, self.weights):
            yield ProjPoint(a), float(w)

    def __len__(self):
        return len(self.angles)


def stopping_pushforward(ifs, m, x0=None, cap=DEFAULT_CAP):
    """Atoms of the stopping coding map, ``mu_m . delta_x0``."""
    x0 = default_base_point(ifs) if x0 is None else x0
    ss = stopping_set(ifs, m, cap)
    ang = act_angles(ss.matrices, x0.angle) if len(ss) else np.empty(0)
    return Atoms(np.atleast_1d(ang), ss.weights, m, x0)


def words_upto(k, depth):
    """Words of length ``1..depth`` in the order used by ``float_products``."""
    out = []
    level = [()]
    for _ in range(depth):
        level = [w + (i,) for w in level for i in range(k)]
        out.extend(level)
    return out


def norm_product_constant(ifs, sample_depth=4):
    """Empirical ``min |A_j A_i| / (|A_j| |A_i|)`` over words of length <= depth."""
    mats = np.concatenate([float_products(ifs.arrays, n) for n in range(1, sample_depth + 1)])
    norms = np.sqrt(_norm_sq_array(mats))
    best = 1.0
    for chunk in np.array_split(np.arange(len(mats)), max(1, len(mats) // 256)):
        prod = np.einsum("aij,bjk->abik", mats[chunk], mats)
        ratio = np.sqrt(_norm_sq_array(prod)) / (norms[chunk][:, None] * norms[None, :])
        best = min(best, float(ratio.min()))
    return min(best, 1.0)
