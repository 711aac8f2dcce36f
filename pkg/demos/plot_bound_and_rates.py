"""
Evaluating the excess-risk bound and the rate table
===================================================

The bound is a sum of seven terms. Here we evaluate it on the prior class
with eigen-decay b and smoothness c, look at which term dominates, and then
read off the convergence rates when the number of bags grows like N^a.
"""

import math

from distreg.theory import BoundInputs, PriorClassParams, class_bound, lambda_schedule, rate_table

p = PriorClassParams(b=2.0, c=1.5, R=1.0)
for N in (10**3, 10**5, 10**7):
    inp = BoundInputs(L=1, h=1, b_K=1, b_k=1, C=1, l=2000, N=N, lam=0.05, eta=0.1, delta=1.0)
    rep = class_bound(inp, p)
    top = max(rep.terms, key=rep.terms.get)
    print(f"N={N:>8}: bound {rep.bound:10.3f}, largest term '{top}'")
    for con in rep.constraints:
        if con.satisfied is not None:
            print(f"    {con.name:>16}: {'ok' if con.satisfied else 'violated'} (margin {con.margin:.3g})")

# %%
# With l = N^a bags, each row of the rate table applies when its
# conditions hold. Rows 4 and 6 can never be active.
print()
for row in rate_table(a=0.4, b=math.inf, c=2, h=1):
    status = "active" if row.convergence and row.dominance else "-"
    print(f"row {row.row}: {row.rate:<42} exponent {row.n_exponent}  {status}")

# the regularization schedule that realizes row 1
for N in (10**3, 10**4, 10**5):
    print(f"N={N:>6}: lambda = {lambda_schedule(1, N, 0.4, math.inf, 2, 1):.4f}")
