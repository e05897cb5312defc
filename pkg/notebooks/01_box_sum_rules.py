"""
Particle in a box: three perturbations, one sum rule
=====================================================

The box on (0, 1) with E_k = k^2 pi^2 is perturbed by x, cos(pi x) and
cos(2 pi x).  Every correction below is exact on the basis {1, pi^-2, pi^-4}.
"""

from fractions import Fraction

from rspt2 import PIB_LINEAR, ParticleInBox, classify, compute_series, partial_sums
from rspt2.core import Exact

# The linear perturbation couples every pair of opposite-parity states, so the
# sum over states is infinite.  Its closed form is exact though.
linear = compute_series(PIB_LINEAR, 9999, "closed-form")
print("x perturbation, first corrections:")
for rec in linear.records[:4]:
    print(f"  k={rec.state + 1}:  {rec.e2}  ~ {rec.e2.value():.6e}")

# Only the ground state is pushed down; everything above goes up.
# The partial sums stay negative and creep towards zero.
sums = partial_sums(linear)
for K in (0, 9, 99, 999, 9999):
    print(f"  S_{K:<5d} = {sums[K].value(): .3e}")

rep = classify(linear)
print("  verdict:", rep.verdict, "| class:", rep.sign_label)

# cos(pi x) only couples neighbours, so each correction is a two-term sum.
# Partial sums telescope: over k = 1..K they equal -1/(4 pi^2 (2K + 1)).
cos1 = compute_series(ParticleInBox(1), 999)
S = partial_sums(cos1)
print("\ncos(pi x):")
for K in (1, 2, 10, 1000):
    print(f"  S over k<= {K:<4d} = {S[K - 1]}   (expected {Exact.inv_pi2(Fraction(-1, 4 * (2 * K + 1)))})")

# cos(2 pi x) is the mixed case: two negative corrections, then all positive.
cos2 = compute_series(ParticleInBox(2), 999)
print("\ncos(2 pi x): first five corrections")
for rec in cos2.records[:5]:
    print(f"  k={rec.state + 1}:  {rec.e2}")
head = cos2.e2[0] + cos2.e2[1]
print("  first two sum to", head)
print("  verdict:", classify(cos2).verdict, "| class:", classify(cos2).sign_label)
