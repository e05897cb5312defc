"""
Finite matrices and the beta cascade
====================================

For a finite symmetric perturbation the second-order corrections sum to zero,
and every proper prefix sum is negative.  The cascade rewrites each correction
as a fraction beta_k of what is left.
"""

import numpy as np

from rspt2 import ParticleInBox, Oscillator, compute_series, decompose, product_diagnostic
from rspt2 import matrixlab

p = matrixlab.random_problem(10, seed=42)
series = matrixlab.second_order_all(p)
e2 = np.array([r.e2.value() for r in series])
print("E_n2          :", np.array2string(e2, precision=3))
print("prefix sums   :", np.array2string(np.cumsum(e2), precision=3))
print("eigen oracle  :", np.array2string(matrixlab.eigen_oracle(p), precision=3))

# A hundred seeds at once
fleet = matrixlab.fleet(100, range(2, 21), seed=1)
print("\nfleet: max residual %.1e, min margin %.3g, max oracle error %.1e" % (
    max(r.residual for r in fleet),
    min(r.min_partial_margin for r in fleet),
    max(r.oracle_error for r in fleet),
))

# The cascade on three different behaviours
for label, prob in (("cos(pi x)", ParticleInBox(1)), ("cos(2 pi x)", ParticleInBox(2)), ("x^4", Oscillator(4))):
    d = decompose(compute_series(prob, 99))
    print(f"\n{label}: alpha = {d.alpha}")
    for k in range(3):
        print(f"  beta_{k + 1} = {str(d.betas[k]):<22} {d.branches[k]}  theta = {d.thetas[k]:.4f}")
    print("  product trend:", product_diagnostic(d).trend)
