"""
Why the three maps never collide
================================

Words in {A, B, C_t} give distinct matrices.  Exhaustive search checks this
up to length 8; for t = 9n a reduction modulo 4 proves it for all lengths.
Separation between same-length products then decays like 4^-n.
"""

from mobius_lq.diophantine import (
    check_freeness_exhaustive, mod4_certificate, separation_profile, stopping_separation,
)
from mobius_lq.errors import CertificateFailedError
from mobius_lq.ifs import solomyak
from mobius_lq.projective import Mat2

ifs = solomyak(9)
rep = check_freeness_exhaustive(ifs.maps, 8)
print(rep.verdict, "after", rep.words_checked, "words")

cert = mod4_certificate(1)
for step in cert.steps:
    print(f"  {step['name']:<22} passed={step['passed']}")
print("2 R C^-1 R^-1 =", cert.details["conjugates"]["C"])

# t = 1 breaks integrality of the conjugates
try:
    mod4_certificate(t=1)
except CertificateFailedError as exc:
    print("t = 1:", exc)

# commuting generators collide immediately
B = Mat2.exact("1/2", 0, 0, 2)
print(check_freeness_exhaustive([B, B @ B], 4).witness)

prof = separation_profile(ifs, 6)
for n, d, l in prof.csv_rows():
    print(f"n={n}: min |A_j^-1 A_i - I| = {d:.3e}")
print("fitted rate", round(prof.rate, 4))
sep = stopping_separation(ifs, 8)
print(f"stopping words at m=8: {sep.size}, minimum distance {sep.min_distance:.3e}")
