"""The ordered Chinese restaurant, its decrement matrix and its local time.

Run with ``python3 demos/ordered_restaurant.py``.
"""

import numpy as np

from alphatheta import Params
from alphatheta.crp import (composition_prob, compositions, decrement_row,
                            simulate_compositions, simulate_crp)
from alphatheta.limits import local_time_moment
from alphatheta._kernels import table_counts

rng = np.random.default_rng(2)
p = Params.parse("1/2", "1/2")

s = simulate_crp(30, p, rng)
print("30 customers, tables left to right (size, birth):", s.tables)
print("spinal composition:", s.composition(), " customer 1 at block", s.customer1_block)

print("\nfirst row entries q(6, m):", [str(q) for q in decrement_row(6, p)])

n, reps = 5, 40_000
parts, ks, _ = simulate_compositions(reps, n, p, rng)
freq = {}
for row, k in zip(parts, ks):
    key = tuple(int(x) for x in row[:k])
    freq[key] = freq.get(key, 0) + 1
print(f"\ncompositions of {n}: exact against {reps} simulations")
for c in compositions(n):
    print(f"  {str(c):10s} {float(composition_prob(c, p)):.4f}  {freq.get(c.parts, 0) / reps:.4f}")

print("\nK_n / n^alpha against E L:")
for n in (10**2, 10**3, 10**4, 10**5):
    k = table_counts(2000, n, p.a, p.t, rng) / n ** p.a
    print(f"  n = {n:>6d}  mean {k.mean():.4f}")
print(f"  limit     {local_time_moment(1, p):.4f}")
