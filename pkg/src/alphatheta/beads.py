"""Bead trees: finite trees whose edges carry strings of beads.

``sample_R1`` starts from one (alpha, theta)-string of beads. Each
``crush_grow`` step picks an edge with probability equal to its mass, picks
a bead on it with the switching rule ((alpha, theta) on leaf edges, the
mass-biased (alpha, alpha) rule on inner edges), cuts the edge at that bead
and hangs a fresh (alpha, theta)-string, scaled to the bead's mass, from the
cut point as the edge of the new leaf.

Edge strings measure positions from the end nearer the root.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Mapping, Optional

import numpy as np
from numba import njit
from scipy import special

from .limits import (StringOfBeads, pick_bead, sample_dirichlet, sample_local_time,
                     string_of_beads)
from .params import Params, to_fraction
from .rng import as_generator
from .statlab import mc_mean_ci
from .trees import EdgeLengthTree, LabeledBinaryTree, validate

DEFAULT_BUDGET = 1000


@dataclass(frozen=True)
class BeadTree:
    """Shape ``T_k`` with a string of beads on the edge below every block.

    An edge of length zero without beads is a degenerate leaf edge; it
    arises when the bead at the very end of a leaf edge is crushed.
    """

    shape: LabeledBinaryTree
    edges: Mapping = field(compare=False)
    retries: int = 0

    def __post_init__(self):
        if set(self.edges) != set(self.shape.blocks):
            raise ValueError("every block needs exactly one edge string")

    @property
    def k(self) -> int:
        return self.shape.n

    def edge_mass(self, b) -> float:
        return self.edges[frozenset(b)].total_mass

    def total_mass(self) -> float:
        return float(sum(s.total_mass for s in self.edges.values()))

    def degenerate(self) -> frozenset:
        return frozenset(b for b, s in self.edges.items() if s.length == 0)

    def skeleton(self) -> EdgeLengthTree:
        return EdgeLengthTree(self.shape, {b: s.length for b, s in self.edges.items()},
                              self.degenerate())

    def height(self, b) -> float:
        return self.skeleton().height(b)

    def to_json_obj(self) -> dict:
        blocks = self.shape.sorted_blocks()
        return {"shape": {"n": self.k, "blocks": blocks},
                "edges": [{"block": b, **self.edges[frozenset(b)].to_json_obj()}
                          for b in blocks],
                "retries": self.retries}

    def to_json(self) -> str:
        return json.dumps(self.to_json_obj())


@dataclass(frozen=True)
class CrushEvent:
    """Edge ``block`` was cut at ``position`` where a bead of ``mass`` sat."""

    block: frozenset
    position: float
    mass: float
    bead_index: int
    retries: int = 0


def sample_R1(p: Params, n_budget: int = DEFAULT_BUDGET, rng=None) -> BeadTree:
    """A single edge carrying an (alpha, theta)-string of beads."""
    s = string_of_beads(p, n_budget, as_generator(rng))
    return BeadTree(LabeledBinaryTree.single(), {frozenset((1,)): s})


def edge_mass_vector(bt: BeadTree) -> dict:
    return {b: s.total_mass for b, s in bt.edges.items()}


def _choose_edge(bt: BeadTree, rng):
    blocks = bt.shape.sorted_blocks()
    w = np.array([bt.edges[frozenset(b)].total_mass for b in blocks])
    u = rng.random() * w.sum()
    i = min(int(np.searchsorted(np.cumsum(w), u, side="right")), len(w) - 1)
    return frozenset(blocks[i])


def crush_grow(bt: BeadTree, p: Params, rng, n_budget: int = DEFAULT_BUDGET,
               max_retries: int = 10_000):
    """One step of the bead-crushing chain; returns ``(new tree, event)``."""
    rng = as_generator(rng)
    block = _choose_edge(bt, rng)
    s = bt.edges[block]
    leaf_edge = len(block) == 1
    retries = 0
    while True:
        j = pick_bead(s, p, rng, mass_biased=not leaf_edge)
        if j is not None:
            break
        retries += 1
        if retries > max_retries:
            raise RuntimeError("bead pick kept running past the truncated string")
    pos, m = float(s.positions[j]), float(s.masses[j])
    upper = StringOfBeads(pos, s.positions[:j], s.masses[:j], 0.0)
    lower = StringOfBeads(max(s.length - pos, 0.0), s.positions[j + 1:] - pos,
                          s.masses[j + 1:], s.leftover)
    k = bt.k
    new_leaf = frozenset((k + 1,))
    fresh = string_of_beads(p, n_budget, rng).scaled(m, p.a)
    edges = {}
    for b, string in bt.edges.items():
        if b == block:
            continue
        edges[b | new_leaf if block <= b else b] = string
    edges[block] = lower
    edges[block | new_leaf] = upper
    edges[new_leaf] = fresh
    shape = bt.shape.insert(block)
    event = CrushEvent(block, pos, m, j, retries)
    return BeadTree(shape, edges, bt.retries + retries), event


def _node_blocks(child0, child1, root, k) -> dict:
    """Leaf set of every live node of the compiled chain (leaf v is label v+1)."""
    out = {}
    stack = [(root, False)]
    while stack:
        v, done = stack.pop()
        if child0[v] < 0:
            out[v] = frozenset((v + 1,))
        elif done:
            out[v] = out[child0[v]] | out[child1[v]]
        else:
            stack += [(v, True), (child0[v], False), (child1[v], False)]
    return out


def sample_Rk(k: int, p: Params, n_budget: int = DEFAULT_BUDGET, rng=None) -> BeadTree:
    """Run the crushing chain from ``sample_R1`` until there are ``k`` leaves.

    The chain runs compiled; it applies the same steps as repeated
    :func:`crush_grow` (leftover mass is always zero here, so no retries).
    """
    from ._kernels import crush_chain

    if k < 1:
        raise ValueError("k must be at least 1")
    _check_alpha(p)
    (pos, mass, _, child0, child1, e_start, e_end, e_off, e_len, root,
     _) = crush_chain(int(k), int(n_budget), p.a, p.t, as_generator(rng))
    blocks = _node_blocks(child0, child1, root, k)
    edges = {}
    for v, b in blocks.items():
        sl = slice(e_start[v], e_end[v])
        edges[b] = StringOfBeads(float(e_len[v]), pos[sl] - e_off[v], mass[sl], 0.0)
    return BeadTree(validate(list(blocks.values()), k), edges)


def sample_Rk_stepwise(k: int, p: Params, n_budget: int = DEFAULT_BUDGET, rng=None,
                       events: Optional[list] = None) -> BeadTree:
    """Same chain as :func:`sample_Rk` through explicit :func:`crush_grow` steps."""
    rng = as_generator(rng)
    bt = sample_R1(p, n_budget, rng)
    for _ in range(k - 1):
        bt, ev = crush_grow(bt, p, rng, n_budget)
        if events is not None:
            events.append(ev)
    return bt


def _check_alpha(p: Params):
    if not 0 < p.alpha < 1:
        raise ValueError("strings of beads need 0 < alpha < 1")


def shape_histogram_Rk(k: int, p: Params, reps: int, rng,
                       n_budget: int = DEFAULT_BUDGET) -> dict:
    """Counts of the labelled shape of ``sample_Rk(k)`` over ``reps`` runs."""
    from ._kernels import crush_histories
    from .growth import tree_from_history

    _check_alpha(p)
    if k == 1:
        return {LabeledBinaryTree.single(): reps}
    h = crush_histories(int(reps), int(k), int(n_budget), p.a, p.t, as_generator(rng))
    rows, counts = np.unique(h, axis=0, return_counts=True)
    return {tree_from_history(row): int(c) for row, c in zip(rows, counts)}


def mass_drift(k: int, p: Params, rng, n_budget: int = 100) -> float:
    """``|total mass - 1|`` after ``k - 1`` crush steps."""
    from ._kernels import crush_mass_drift

    _check_alpha(p)
    return float(crush_mass_drift(int(k), int(n_budget), p.a, p.t, as_generator(rng)))


# ---------------------------------------------------------------------------
# reduced trees of the discrete growth process


@njit(cache=True)
def _project(parent, child0, child1, root, n, k):
    """Bitmask traces (bit i = leaf i+1 <= k) of all nodes and the trace each
    leaf projects to."""
    total = parent.shape[0]
    mask = np.zeros(total, np.int64)
    order = np.empty(total, np.int64)
    stack = np.empty(total, np.int64)
    top = 0
    stack[0] = root
    cnt = 0
    while top >= 0:
        v = stack[top]
        top -= 1
        order[cnt] = v
        cnt += 1
        if child0[v] >= 0:
            top += 1
            stack[top] = child0[v]
            top += 1
            stack[top] = child1[v]
    for i in range(cnt - 1, -1, -1):
        v = order[i]
        if child0[v] < 0:
            if v < k:
                mask[v] = 1 << v
        else:
            mask[v] = mask[child0[v]] | mask[child1[v]]
    att = np.zeros(total, np.int64)
    for i in range(cnt):
        v = order[i]
        if mask[v] != 0 or parent[v] < 0:
            att[v] = mask[v]
        else:
            att[v] = att[parent[v]]
    return mask, att


def _mask_block(mask: int) -> frozenset:
    return frozenset(i + 1 for i in range(mask.bit_length()) if mask >> i & 1)


def reduced_scaled_from_growth(n: int, k: int, p: Params, rng):
    """Grow ``T_n`` and return ``R(T_n, [k])`` scaled by ``n^-alpha`` with
    the leaf mass it carries.

    Each leaf of ``T_n`` puts mass ``1/n`` on the reduced edge containing
    the first vertex of its root path that lies in the spanned subtree.
    Returns ``(EdgeLengthTree, {block: mass})``.
    """
    from ._kernels import grow_kernel

    if not 1 <= k <= n:
        raise ValueError("need 1 <= k <= n")
    if k > 62:
        raise ValueError("k is limited to 62 by the bitmask encoding")
    parent, child0, child1, _, root, _ = grow_kernel(int(n), p.a, p.t, as_generator(rng))
    mask, att = _project(parent, child0, child1, root, n, k)
    used = np.flatnonzero(mask[: 2 * n - 1])
    lengths: dict = {}
    for m in mask[used]:
        lengths[int(m)] = lengths.get(int(m), 0) + 1
    leaf_att = att[:n]
    masses: dict = {}
    vals, counts = np.unique(leaf_att, return_counts=True)
    for m, c in zip(vals, counts):
        masses[int(m)] = c / n
    scale = n ** -p.a
    shape = validate([_mask_block(m) for m in lengths], k)
    elt = EdgeLengthTree(shape, {_mask_block(m): v * scale for m, v in lengths.items()})
    return elt, {_mask_block(m): masses.get(m, 0.0) for m in lengths}


# ---------------------------------------------------------------------------
# distance from the root to the first branch point


def d2_closed_form(s: float, alpha: float) -> float:
    """``E d_2(rho, J_1)^s = G(s+1) G(2-a) / G(2 + s a - a)`` for theta = 1 - alpha."""
    a = float(alpha)
    return float(np.exp(special.gammaln(s + 1) + special.gammaln(2 - a)
                        - special.gammaln(2 + s * a - a)))


def d2_samples_chain(alpha, reps: int, rng, n_budget: int = DEFAULT_BUDGET) -> np.ndarray:
    """Root-to-branch distance of ``sample_Rk(2)`` with theta = 1 - alpha."""
    rng = as_generator(rng)
    a = to_fraction(alpha)
    p = Params(a, 1 - a)
    out = np.empty(reps)
    for r in range(reps):
        bt = sample_R1(p, n_budget, rng)
        # the new leaf's own string plays no role in this distance
        _, ev = crush_grow(bt, p, rng, n_budget=2)
        out[r] = ev.position
    return out


def d2_samples_masses(alpha, reps: int, rng) -> np.ndarray:
    """``H^a S_0`` with ``H`` the trunk mass, ``Dirichlet(a, 1-a, 1-a)``, and
    ``S_0`` an (a, a) local time."""
    rng = as_generator(rng)
    a = to_fraction(alpha)
    h = sample_dirichlet((float(a), float(1 - a), float(1 - a)), rng, size=reps)[:, 0]
    s0 = sample_local_time(Params(a, a), reps, rng)
    return h ** float(a) * s0


def d2_samples_lengths(alpha, reps: int, rng) -> np.ndarray:
    """``D_0 lambda`` with ``D_0 ~ beta(1, 2/a - 2)`` and ``lambda`` an
    (a, 2 - a) local time."""
    rng = as_generator(rng)
    a = to_fraction(alpha)
    d0 = rng.beta(1.0, float(2 / a - 2), size=reps)
    lam = sample_local_time(Params(a, 2 - a), reps, rng)
    return d0 * lam


@dataclass(frozen=True)
class MomentCheck:
    mc_estimate: float
    closed_form: float
    z_score: float
    half_width: float
    reps: int


def moment_check_d2(s: float, alpha, n_replicates: int, rng,
                    n_budget: int = DEFAULT_BUDGET) -> MomentCheck:
    """Monte Carlo ``E d_2(rho, J_1)^s`` from the crushing chain against the
    closed form."""
    x = d2_samples_chain(alpha, n_replicates, rng, n_budget) ** s
    mean, hw = mc_mean_ci(x, 0.95)
    se = float(np.std(x, ddof=1) / np.sqrt(len(x)))
    cf = d2_closed_form(s, float(alpha))
    return MomentCheck(mean, cf, (mean - cf) / se if se > 0 else 0.0, hw, n_replicates)
