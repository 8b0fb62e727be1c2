"""Dichotomy verdicts, the shared-fixed-point counterexample, dimension prediction."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
import math

import numpy as np

from .errors import NoSharedFixedPointError
from .ifs import MobiusIFS, float_products, _norm_sq_array, shared_fixed_points
from .measure import discretize, pointwise_dimension, spectrum_grid
from .pressure import tau_tilde
from .projective import derivative_at
from .words import stopping_set

CASE_I = "CASE_I_CONSISTENT"
CASE_II = "CASE_II_EVIDENCE"
INCONCLUSIVE = "INCONCLUSIVE"

DEFAULT_Q_GRID = (1.2, 2.0, 4.0, 6.0, 8.0, 10.0, 12.0, 14.0, 16.0)
DEFAULT_M_LIST = (12, 14, 16, 18, 20)


@dataclass
class DichotomyVerdict:
    q_grid: list
    tau_hat: list
    tau_tilde_hat: list
    envelope: list
    gap: list
    case: str
    alpha_hat: float | None = None
    q0_hat: float | None = None
    q0_uncertainty: float | None = None
    fit_residual: float | None = None
    gap_threshold: float = 0.25
    notes: list = field(default_factory=list)

    def table(self):
        return [
            {"q": q, "tau_hat": t, "tau_tilde_hat": tt, "envelope": e, "gap": g}
            for q, t, tt, e, g in zip(self.q_grid, self.tau_hat, self.tau_tilde_hat,
                                      self.envelope, self.gap)
        ]

    def to_dict(self):
        return {
            "case": self.case, "alpha_hat": self.alpha_hat, "q0_hat": self.q0_hat,
            "q0_uncertainty": self.q0_uncertainty, "fit_residual": self.fit_residual,
            "gap_threshold": self.gap_threshold, "table": self.table(),
            "notes": self.notes,
            "paper_anchor": "dichotomy theorem for the L^q spectrum",
        }


def _through_origin(q, tau):
    q, tau = np.asarray(q, float), np.asarray(tau, float)
    alpha = float(q @ tau / (q @ q))
    line = alpha * q
    resid = float(np.max(np.abs(tau - line) / np.abs(line))) if alpha != 0 else math.inf
    return alpha, resid


def _q0(q, envelope, alpha):
    """Where ``alpha q`` meets the envelope, interpolated on the grid."""
    h = np.asarray(envelope) - alpha * np.asarray(q)
    for a in range(len(q) - 1):
        if h[a] < 0 <= h[a + 1]:
            return float(q[a] - h[a] * (q[a + 1] - q[a]) / (h[a + 1] - h[a])), False
    if h[0] >= 0:
        # the crossing is at or below the smallest grid point
        return float(q[0]), True
    return None, False


def classify(q_grid, tau_hat, tau_tilde_hat, gap_threshold=0.25, residual_tol=0.10):
    """Case I/II classification from spectrum and pressure estimates on a grid."""
    q = [float(v) for v in q_grid]
    tt = [math.inf if v is None else float(v) for v in tau_tilde_hat]
    env = [min(a, b - 1) for a, b in zip(tt, q)]
    gap = [e - t for e, t in zip(env, tau_hat)]
    top = list(range(len(q)))[len(q) // 2:]
    alpha, resid = _through_origin([q[i] for i in top], [tau_hat[i] for i in top])
    notes = []
    if resid <= residual_tol and all(gap[i] >= gap_threshold for i in top):
        case = CASE_II
    elif max(abs(g) for g in gap) <= gap_threshold:
        case = CASE_I
    else:
        case = INCONCLUSIVE
    q0 = q0_unc = None
    if case == CASE_II:
        q0, below = _q0(q, env, alpha)
        spacing = float(np.min(np.diff(q))) if len(q) > 1 else 0.0
        q0_unc = spacing
        if below:
            notes.append("envelope lies above the line on the whole grid; "
                         "q0_hat is an upper estimate at the first grid point")
    return DichotomyVerdict(q, list(map(float, tau_hat)), tt, env, gap, case,
                            alpha, q0, q0_unc, resid,
                            gap_threshold, notes)


def dichotomy_probe(source, q_grid=DEFAULT_Q_GRID, m_list=DEFAULT_M_LIST, *,
                    depth=12, gap_threshold=0.25, oversample=4, tau_tilde_hat=None,
                    threads=1):
    """Spectrum against pressure envelope over a q-grid, classified.

    ``source`` is a ``MobiusIFS`` or a callable ``m -> DyadicHistogram``; for
    the latter the pressure zeros can be passed in ``tau_tilde_hat`` (missing
    values mean the envelope is ``q - 1``).
    """
    q_grid = list(q_grid)
    if len(q_grid) < 6:
        raise ValueError("the q-grid needs at least 6 points")
    reports = spectrum_grid(source, q_grid, m_list, oversample)
    tau_hat = [r.estimate for r in reports]
    if tau_tilde_hat is None:
        if isinstance(source, MobiusIFS):
            tau_tilde_hat = [tau_tilde(source, q, depth, bounds=False, threads=threads).root
                             for q in q_grid]
        else:
            tau_tilde_hat = [None] * len(q_grid)
    return classify(q_grid, tau_hat, tau_tilde_hat, gap_threshold)


# --------------------------------------------------------------------------

@dataclass
class CounterexampleReport:
    p0: float
    pair: tuple
    x0_angle: float
    r_local: float
    r_global: float
    slope_bound: float
    mass_bound_checks: list  # (m, n, mass, bound, passed)
    gap_at_q: list  # (q, tau_hat, slope * q + 0.1, passed)
    pointwise: float | None = None

    @property
    def passed(self):
        return all(c[-1] for c in self.mass_bound_checks) and all(g[-1] for g in self.gap_at_q)

    def to_dict(self):
        return {
            "p0": self.p0, "pair": list(self.pair), "x0_angle": self.x0_angle,
            "r_local": self.r_local, "r_global": self.r_global,
            "slope_bound": self.slope_bound,
            "mass_bound_checks": [dict(zip(("m", "n", "mass", "bound", "passed"), c))
                                  for c in self.mass_bound_checks],
            "gap_at_q": [dict(zip(("q", "tau_hat", "bound", "passed"), g))
                         for g in self.gap_at_q],
            "pointwise_dimension": self.pointwise,
            "passed": self.passed,
            "paper_anchor": "counterexample with a shared fixed point",
        }


def global_rate(ifs, depth=8):
    """``min_{|w| = depth} |A_w|^(1/depth)``, a uniform expansion rate."""
    mats = float_products(ifs.arrays, depth)
    return float(np.min(_norm_sq_array(mats)) ** (0.5 / depth))


def counterexample_bounds(ifs, m_list=(12, 16, 20), q_list=(8.0, 12.0, 16.0), *,
                          spectrum_m=DEFAULT_M_LIST, oversample=4):
    """Finite-scale mass bound at a shared fixed point and the slope it forces."""
    rep = shared_fixed_points(ifs)
    cands = [s for s in rep.shared if s.in_attractor
             and ifs.weights[s.pair[0]] == ifs.weights[s.pair[1]]]
    if not cands:
        raise NoSharedFixedPointError(
            "no pair of equally weighted maps shares a fixed point in the attractor")
    sfp = cands[0]
    i, j = sfp.pair
    p0 = float(ifs.weights[i])
    half = Fraction(1, 2) if ifs.is_exact else 0.5
    sub = MobiusIFS((ifs.maps[i], ifs.maps[j]), (half, half), label="shared pair")
    ders = derivative_at(ifs.arrays[[i, j]], sfp.angle)
    r_local = float(np.min(ders ** -0.5))
    slope = -math.log2(2 * p0) / (2 * math.log2(r_local))
    checks = []
    for m in m_list:
        n = int(stopping_set(sub, m).lengths.max())
        mass = discretize(ifs, m, oversample).neighbourhood_mass(sfp.angle)
        bound = (2 * p0) ** n
        checks.append((m, n, mass, bound, bool(mass >= bound)))
    reports = spectrum_grid(ifs, q_list, spectrum_m, oversample)
    gaps = [(r.q, r.estimate, slope * r.q + 0.1, bool(r.estimate <= slope * r.q + 0.1))
            for r in reports]
    pw = pointwise_dimension(ifs, sfp.angle, spectrum_m, oversample).estimate
    return CounterexampleReport(p0, (i, j), sfp.angle, r_local, global_rate(ifs), slope,
                                checks, gaps, pw)


# --------------------------------------------------------------------------

def entropy(weights):
    p = np.asarray([float(w) for w in weights])
    return float(-(p * np.log2(p)).sum())


def hausdorff_formula(H, chi):
    if H <= 0:
        return 0.0
    return min(H / (2.0 * chi), 1.0)


@dataclass
class HausdorffReport:
    entropy: float
    chi_enumeration: float
    chi_monte_carlo: float
    enumeration_depth: int
    prediction: float


def lyapunov_enumeration(ifs, depth=10, budget=2_000_000):
    k = len(ifs)
    while depth > 1 and k ** depth > budget:
        depth -= 1
    lp = np.zeros(1)
    logp = np.log2(ifs.float_weights)
    for _ in range(depth):
        lp = (lp[:, None] + logp[None, :]).ravel()
    mats = float_products(ifs.arrays, depth)
    lognorm = 0.5 * np.log2(_norm_sq_array(mats))
    return float(np.sum(np.exp2(lp) * lognorm) / depth), depth


def lyapunov_monte_carlo(ifs, samples=100_000, depth=40, seed=0):
    rng = np.random.default_rng(seed)
    letters = rng.choice(len(ifs), size=(samples, depth), p=ifs.float_weights)
    vec = np.tile(np.eye(2), (samples, 1, 1))
    logn = np.zeros(samples)
    for step in range(depth):
        vec = vec @ ifs.arrays[letters[:, step]]
        # renormalise every few steps to stay in range
        if step % 8 == 7:
            s = np.linalg.norm(vec, ord=2, axis=(1, 2))
            logn += np.log2(s)
            vec /= s[:, None, None]
    logn += np.log2(np.linalg.norm(vec, ord=2, axis=(1, 2)))
    return float(logn.mean() / depth)


def hausdorff_report(ifs, depth=10, samples=100_000, mc_depth=40, seed=0):
    H = entropy(ifs.weights)
    chi_e, used = lyapunov_enumeration(ifs, depth)
    chi_mc = lyapunov_monte_carlo(ifs, samples, mc_depth, seed)
    return HausdorffReport(H, chi_e, chi_mc, used, hausdorff_formula(H, chi_mc))


def hausdorff_prediction(ifs, **kw):
    """``min(H / (2 chi), 1)`` with the Lyapunov exponent from Monte Carlo at depth 40."""
    return hausdorff_report(ifs, **kw).prediction
