"""
Anharmonic oscillator: exact corrections and their growth
==========================================================

H = p^2/2 + x^2/2 + lambda x^M.  x^M only links states with |m - n| <= M, so
the second-order sum is finite and the results are exact rationals.
"""

from fractions import Fraction

from rspt2 import Oscillator, compute_series, asymptotic_fit, second_order
from rspt2.sumrules import compare_with_reference, reference_leading_term

# A linear term just shifts the well: E_2 = -1/(2 omega^2) for every level.
for omega in (Fraction(1), Fraction(3, 2)):
    rec = second_order(Oscillator(1, omega), 17)
    print(f"omega={omega}: E_17,2 = {rec.e2}")

print()
print(" M   fit p   fit c        tabulated        flag")
for M in (3, 4, 5, 6):
    series = compute_series(Oscillator(M), 200)
    fit = asymptotic_fit(series)
    ref = reference_leading_term(Oscillator(M))
    flag = compare_with_reference(fit, Oscillator(M))
    print(f" {M}   {fit.p}       {fit.c: .6f}   {str(ref[1]) + ' n^' + str(ref[0]):<15}  {flag}")

# Odd powers disagree with the tabulated values.  The exact M=3 series is a
# quadratic polynomial and its leading coefficient is plainly -15/4:
series = compute_series(Oscillator(3), 5)
print("\nM=3 exact values:", [str(r.e2) for r in series])
print("-(30 n^2 + 30 n + 11)/8 :", [str(Fraction(-(30 * n * n + 30 * n + 11), 8)) for n in range(6)])
