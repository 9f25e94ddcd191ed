"""Bead-crushing chain: shapes, edge masses and the distance to the first branch.

Run with ``python3 demos/bead_crushing.py``.
"""

import math

import numpy as np

from alphatheta import Params
from alphatheta.beads import (d2_closed_form, d2_samples_masses, moment_check_d2, sample_Rk,
                              shape_histogram_Rk)
from alphatheta.exact import exact_tree_dist
from alphatheta.newick import to_newick
from alphatheta.statlab import chi_square_gof

rng = np.random.default_rng(4)
p = Params.parse("1/2", "1/2")

bt = sample_Rk(4, p, 2000, rng)
print("R_4 skeleton:", to_newick(bt.skeleton()))
for b in bt.shape.sorted_blocks():
    s = bt.edges[frozenset(b)]
    print(f"  edge {str(b):14s} length {s.length:.3f}  mass {s.total_mass:.4f}  beads {len(s)}")
print(f"  total mass {bt.total_mass():.15f}")

obs = shape_histogram_Rk(4, p, 20_000, rng)
print("\nshape of R_4 against the exact law of T_4:", chi_square_gof(obs, exact_tree_dist(4, p).support))

a = 0.5
print(f"\nE d_2 closed form {d2_closed_form(1, a):.4f}, Gamma(3/2) = {math.gamma(1.5):.4f}")
print("  from the chain:", moment_check_d2(1, a, 3000, rng))
print(f"  from masses:    {d2_samples_masses(a, 50_000, rng).mean():.4f}")
