"""
A self-similar sanity check
===========================

Two maps act on the real chart as x/4 and x/4 + 1/2.  Their images are
disjoint, so the stationary measure with weights (1/2, 1/2) has the linear
spectrum tau(q) = (q - 1)/2, which we recover from histograms and from
pressure sums.
"""

import numpy as np

from mobius_lq.ifs import certify, ssc4
from mobius_lq.measure import discretize, legendre_transform, spectrum_grid
from mobius_lq.pressure import tau_tilde, tau_tilde_via_stopping
from mobius_lq.analyzer import hausdorff_report

ifs = ssc4()
cert = certify(ifs)
print("invariant arc (real chart):", cert.U0.as_real_intervals())
print("contraction constant C1 ~", round(cert.contraction_constant_C1, 3))

# the histogram at scale 16 is built from stopping words at scale 20
h = discretize(ifs, 16)
print("bins with mass:", len(h.indices), "of", 2 ** 16)

q_grid = [1.5, 2, 3, 4, 6, 8]
reports = spectrum_grid(ifs, q_grid, [12, 14, 16, 18, 20])
for r in reports:
    print(f"q={r.q:<4} tau_hat={r.estimate:.4f}  exact={(r.q - 1) / 2:.4f}")

# pressure zeros at depth 10, and the stopping-set description at m = 20
for q in (2, 4):
    est = tau_tilde(ifs, q, 10, bounds=False)
    print(f"q={q}: tau_tilde(n=10)={est.root:.4f}  via stopping={tau_tilde_via_stopping(ifs, q, 20):.4f}")

# for a linear spectrum alpha is constant and tau* equals 1/2
lc = legendre_transform(reports)
print("alpha:", np.round(lc.alpha, 3))
print("tau*: ", np.round(lc.tau_star_matched, 3))

rep = hausdorff_report(ifs)
print(f"H/(2 chi) = {rep.prediction:.4f} with chi ~ {rep.chi_monte_carlo:.4f}")
