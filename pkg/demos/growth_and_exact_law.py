"""Grow (alpha, theta) trees and compare them with their exact law.

Run with ``python3 demos/growth_and_exact_law.py``.
"""

import numpy as np

from alphatheta import Params, delabel
from alphatheta.exact import exact_shape_dist, exact_tree_dist, weak_consistency_check
from alphatheta.growth import grow, tree_histogram
from alphatheta.newick import to_newick
from alphatheta.statlab import chi_square_gof

rng = np.random.default_rng(1)
p = Params.parse("1/3", "2/3")

print("one draw of T_8:", to_newick(grow(8, p, rng)))

reps = 50_000
obs = tree_histogram(reps, 5, p, rng)
law = exact_tree_dist(5, p)
print(f"\nT_5 at {p}: {len(law)} labelled trees")
for t, q in sorted(law.items(), key=lambda kv: -kv[1])[:5]:
    print(f"  {to_newick(t):24s} exact {float(q):.4f}  observed {obs.get(t, 0) / reps:.4f}")
print(" ", chi_square_gof(obs, law.support))

print("\nshape law of T_6:")
for shape, q in exact_shape_dist(6, p).items():
    print(f"  {str(shape):28s} {q}")

print("\nweak sampling consistency at n = 5:")
for theta in ("1/2", "2/3", "5/3", "2"):
    q = Params.parse("1/3", theta)
    res = weak_consistency_check(5, q)
    print(f"  theta = {theta:4s} consistent: {res.passed}  TV gap {res.details['tv_gap']}")
