"""
A singular spike from a shared fixed point
==========================================

A = [[1/2, 0], [2, 2]] and B = [[1/2, 0], [0, 2]] both fix the real point 0,
where each contracts by 1/4.  Giving each weight 0.49 piles mass onto 0
so fast that tau(q) grows like a small multiple of q, far below the
pressure zero.
"""

from fractions import Fraction
import math

from mobius_lq.analyzer import counterexample_bounds, dichotomy_probe
from mobius_lq.ifs import shared_fixed_points, solomyak
from mobius_lq.pressure import tau_tilde

ifs = solomyak(9, Fraction(49, 100))
for s in shared_fixed_points(ifs).shared:
    print("maps", s.pair, "share the point", s.real, "in attractor:", s.in_attractor)

# mass near 0 against (2 p0)^n, n the first-passage length of the pair {A, B}
rep = counterexample_bounds(ifs)
for m, n, mass, bound, ok in rep.mass_bound_checks:
    print(f"m={m}: mass {mass:.4f} >= 0.98^{n} = {bound:.4f}  {ok}")
print(f"slope bound {rep.slope_bound:.5f} = -log2(0.98)/2 = {-math.log2(0.98) / 2:.5f}")
print(f"pointwise dimension at 0 ~ {rep.pointwise:.4f}")

# the pressure zero at q = 12 sits above 5 with two-sided bounds
tt = tau_tilde(ifs, 12.0, 12)
print(f"tau_tilde(12) = {tt.root:.4f}, bounds [{tt.bound_lo:.4f}, {tt.bound_hi:.4f}]")

v = dichotomy_probe(ifs)
print("verdict:", v.case, "alpha_hat =", round(v.alpha_hat, 5))
for row in v.table():
    print(f"  q={row['q']:<5} tau_hat={row['tau_hat']:.4f} envelope={row['envelope']:.4f} gap={row['gap']:.3f}")
