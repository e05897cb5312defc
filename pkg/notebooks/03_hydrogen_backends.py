"""
Hydrogen s states under r^M: three independent routes
======================================================

The sum over bound states misses the continuum.  Dalgarno-Lewis sidesteps it
by solving for the first-order function directly; a finite-difference grid
does the same numerically.
"""

from rspt2 import HydrogenS, asymptotic_fit, compute_series, second_order

p = HydrogenS(1)
print("n=1, V = r")
for strategy in ("dl", "grid", "truncated"):
    rec = second_order(p, 0, strategy)
    print(f"  {rec.backend:<15} {rec.e2.value(): .10f}  +- {rec.e2.error():.1e}  rigorous={rec.rigorous}")
# the bound-state-only sum is visibly off; -3/2 is exact

p2 = HydrogenS(2)
print("\nn=1, V = r^2:", second_order(p2, 0).e2, "| grid:", f"{second_order(p2, 0, 'grid').e2.value():.8f}")

# Growth with n: E_n2 ~ c n^(4M+2)
print("\n M   p    c")
for M, top in ((1, 60), (2, 60), (3, 40), (4, 40)):
    fit = asymptotic_fit(compute_series(HydrogenS(M), top - 1))
    print(f" {M}  {fit.p:>2}   {fit.c:.6g}")
