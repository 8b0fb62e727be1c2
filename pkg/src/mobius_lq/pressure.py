"""Pressure function of a matrix family and its zero.

``a_n(s) = log2 sum_{|i| = n} p_i^q |A_i|^(2s)`` is computed from two
cached arrays per depth, ``log2 p_i`` and ``log2 |A_i|^2``, in
lexicographic word order.  Sums are log-sum-exp reductions, done per root
letter and merged in letter order so results do not depend on threading.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import lru_cache
import math

import numpy as np
from scipy.special import logsumexp

from .errors import BudgetExceededError, NoSignChangeError
from .ifs import _norm_sq_array
from .words import DEFAULT_CAP, norm_product_constant, stopping_set

LN2 = math.log(2.0)


def log2sumexp2(x):
    """``log2 sum 2^x`` without overflow."""
    return float(logsumexp(np.asarray(x) * LN2) / LN2)


@lru_cache(maxsize=32)
def _levels(ifs, n, cap=DEFAULT_CAP):
    k = len(ifs)
    if k ** n > cap:
        raise BudgetExceededError(f"pressure level n={n}", k ** n, cap)
    logp = np.log2(ifs.float_weights)
    lp = np.zeros(1)
    mats = np.eye(2)[None]
    for _ in range(n):
        mats = np.einsum("wij,kjl->wkil", mats, ifs.arrays).reshape(-1, 2, 2)
        lp = (lp[:, None] + logp[None, :]).ravel()
        # keep products normalised, the norm is tracked separately
    ln = np.log2(_norm_sq_array(mats))
    lp.setflags(write=False)
    ln.setflags(write=False)
    return lp, ln


def log_partition(ifs, q, s, n, threads=1, cap=DEFAULT_CAP):
    """``a_n(s)``; for ``n = 0`` the empty word gives 0."""
    if n == 0:
        return 0.0
    lp, ln = _levels(ifs, n, cap)
    k = len(ifs)
    chunks = np.split(q * lp + s * ln, k)
    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            partial = list(pool.map(log2sumexp2, chunks))
    else:
        partial = [log2sumexp2(c) for c in chunks]
    return log2sumexp2(partial)


def pressure_partial(ifs, q, s, n, threads=1, cap=DEFAULT_CAP):
    """``(1/n) log2 sum_{i in I^n} p_i^q |A_i|^(2s)``."""
    if n < 1:
        raise ValueError("n must be at least 1")
    return log_partition(ifs, q, s, n, threads, cap) / n


@dataclass
class PressureCurve:
    q: float
    evaluations: list  # (s, n, a_n(s) / n)
    upper_bound: dict  # s -> inf_n a_n / n
    lower_bound: dict  # s -> sup_n (a_n + 2 s log2 rho) / n
    rho: float

    def csv_rows(self):
        for s, n, v in self.evaluations:
            yield self.q, s, n, v, self.upper_bound[s], self.lower_bound[s]


def _bounds(ifs, q, s, n_max, log_rho, threads, cap):
    vals = [log_partition(ifs, q, s, n, threads, cap) / n for n in range(1, n_max + 1)]
    upper = min(vals)
    lower = max((v * n + 2 * s * log_rho) / n for n, v in enumerate(vals, 1))
    return vals, upper, lower


def pressure_curve(ifs, q, s_values, n_max, rho=None, rho_depth=4, threads=1, cap=DEFAULT_CAP):
    """Partial pressures for ``n = 1..n_max`` with the two-sided bounds.

    The upper bound needs ``s >= 0`` (submultiplicativity of the norm); the
    lower bound uses the norm-product constant ``rho``.
    """
    rho = norm_product_constant(ifs, rho_depth) if rho is None else rho
    log_rho = math.log2(rho)
    evals, ub, lb = [], {}, {}
    for s in s_values:
        vals, ub[s], lb[s] = _bounds(ifs, q, s, n_max, log_rho, threads, cap)
        evals.extend((s, n, v) for n, v in enumerate(vals, 1))
    return PressureCurve(q, evals, ub, lb, rho)


@dataclass
class TauTildeEstimate:
    q: float
    root: float
    bracket: tuple
    n_used: int
    via_stopping: float | None = None
    bound_lo: float | None = None  # zero of inf_n a_n/n: a lower bound for the limit
    bound_hi: float | None = None  # zero of sup_n (a_n + 2s log rho)/n: an upper bound

    def csv_row(self):
        return (self.q, self.root, self.bracket[0], self.bracket[1],
                "" if self.via_stopping is None else self.via_stopping)


def _increasing_root(f, q, tol, s_max=64.0, what="pressure"):
    """Zero of an increasing function on ``s > 0`` by bracketing and bisection."""
    lo = float(q)
    tries = 0
    while f(lo) >= 0:
        lo /= 2
        tries += 1
        if tries > 60:
            raise NoSignChangeError(f"{what} is nonnegative as s -> 0+")
    hi = max(lo, 1e-3)
    while f(hi) <= 0:
        hi *= 2
        if hi > s_max:
            raise NoSignChangeError(f"{what} stays negative up to s = {s_max}")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if f(mid) < 0:
            lo = mid
        else:
            hi = mid
    return lo, hi


def tau_tilde(ifs, q, n=12, tol=1e-6, *, bounds=True, rho=None, rho_depth=4,
              via_stopping_m=None, threads=1, cap=DEFAULT_CAP):
    """Zero of ``s -> a_n(s)/n`` at a fixed working depth.

    With ``bounds`` the zeros of the two bound curves over depths ``1..n``
    are located as well; they bracket the true zero whenever ``rho`` is a
    valid norm-product constant.
    """
    if not q > 1:
        raise ValueError("q must exceed 1")
    f = lambda s: log_partition(ifs, q, s, n, threads, cap)
    lo, hi = _increasing_root(f, q, tol)
    est = TauTildeEstimate(q, 0.5 * (lo + hi), (lo, hi), n)
    if bounds:
        rho = norm_product_constant(ifs, rho_depth) if rho is None else rho
        log_rho = math.log2(rho)
        up = lambda s: _bounds(ifs, q, s, n, log_rho, threads, cap)[1]
        low = lambda s: _bounds(ifs, q, s, n, log_rho, threads, cap)[2]
        a, b = _increasing_root(up, q, tol, what="upper pressure bound")
        est.bound_lo = 0.5 * (a + b)
        try:
            a, b = _increasing_root(low, q, tol, s_max=1e6, what="lower pressure bound")
            est.bound_hi = 0.5 * (a + b)
        except NoSignChangeError:
            est.bound_hi = math.inf
    if via_stopping_m is not None:
        est.via_stopping = tau_tilde_via_stopping(ifs, q, via_stopping_m, cap)
    return est


def tau_tilde_via_stopping(ifs, q, m, cap=DEFAULT_CAP):
    """``-(1/m) log2 sum_{Omega_m} p_i^q``."""
    if m < 1:
        raise ValueError("m must be at least 1")
    ss = stopping_set(ifs, m, cap)
    if ss.exact_weights is not None and float(q).is_integer():
        total = sum(w ** int(q) for w in ss.exact_weights)
        return -(math.log2(total.numerator) - math.log2(total.denominator)) / m
    return -log2sumexp2(q * ss.log2_weights) / m
