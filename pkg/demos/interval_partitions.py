"""Two constructions of the regenerative interval partition.

Run with ``python3 demos/interval_partitions.py``.
"""

import numpy as np

from alphatheta import Params
from alphatheta.limits import (build_interval_partition_ordered,
                               build_interval_partition_recursive)
from alphatheta.statlab import ks_two_sample

rng = np.random.default_rng(3)
p = Params.parse("1/2", "1/2")

ip = build_interval_partition_ordered(p, 1000, rng)
g, d = ip.interval_of(0)
print(f"ordered construction: {len(ip)} intervals, leftover {ip.leftover:.2e}")
print(f"  interval of table 1: [{g:.4f}, {d:.4f}]")
print("  five largest:", np.round(np.sort(ip.masses)[::-1][:5], 4))

rec = build_interval_partition_recursive(p, 1e-4, rng)
print(f"recursive construction: {len(rec)} intervals, leftover {rec.leftover:.2e}")

reps = 2000
a = [build_interval_partition_ordered(p, 1000, rng).largest() for _ in range(reps)]
b = [build_interval_partition_recursive(p, 1e-4, rng).largest() for _ in range(reps)]
print(f"\nlargest interval, mean {np.mean(a):.4f} against {np.mean(b):.4f}")
print(" ", ks_two_sample(a, b))
