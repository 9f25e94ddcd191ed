"""Sequential growth of (alpha, theta)-trees, Ford's rule and the walker model.

At a branch point whose subtrees have sizes ``m`` (the one without the
smallest label) and ``n - m`` (the one with it), the (alpha, theta) rule
weights the edge above the branch point by ``alpha``, the first subtree by
``m - alpha`` and the second by ``n - m - 1 + theta``. A chosen subtree is
entered and the rule applied again until an edge is fixed.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .params import Params
from .rng import as_generator
from .trees import LabeledBinaryTree

# ---------------------------------------------------------------------------
# (alpha, theta) selection


def _branch_weights(t: LabeledBinaryTree, b, p: Params, exact: bool):
    c0, c1 = t.children(b)
    s, m = len(b), len(c0)
    a, th = (p.alpha, p.theta) if exact else (p.a, p.t)
    return c0, c1, (a, m - a, s - m - 1 + th)


def select_edge(t: LabeledBinaryTree, p: Params, rng) -> frozenset:
    """Draw the block whose parent edge receives the next leaf."""
    rng = as_generator(rng)
    b = t.root
    while len(b) > 1:
        c0, c1, (w_root, w0, w1) = _branch_weights(t, b, p, exact=False)
        u = rng.random() * (w_root + w0 + w1)
        if u < w_root:
            return b
        b = c0 if u < w_root + w0 else c1
    return b


def edge_selection_probs(t: LabeledBinaryTree, p: Params) -> dict:
    """Exact probability of every edge under the (alpha, theta) rule."""
    out = {}

    def walk(b, mass):
        if len(b) == 1:
            out[b] = out.get(b, 0) + mass
            return
        c0, c1, (w_root, w0, w1) = _branch_weights(t, b, p, exact=True)
        tot = w_root + w0 + w1
        out[b] = out.get(b, 0) + mass * w_root / tot
        walk(c0, mass * w0 / tot)
        walk(c1, mass * w1 / tot)

    walk(t.root, Fraction(1))
    return out


def grow_step(t: LabeledBinaryTree, p: Params, rng) -> LabeledBinaryTree:
    return t.insert(select_edge(t, p, rng))


def grow_python(n: int, p: Params, rng) -> LabeledBinaryTree:
    """Reference implementation: ``n - 1`` calls of :func:`grow_step`."""
    t = LabeledBinaryTree.single()
    for _ in range(n - 1):
        t = grow_step(t, p, rng)
    return t


def tree_from_arrays(n: int, child0, child1, root: int) -> LabeledBinaryTree:
    """Convert the compiled node arrays to a block-set tree."""
    blocks = []

    def collect(v):
        if child0[v] < 0:
            s = frozenset((int(v) + 1,))
        else:
            s = collect(child0[v]) | collect(child1[v])
        blocks.append(s)
        return s

    collect(root)
    from .trees import validate

    return validate(blocks, n)


def tree_from_history(history) -> LabeledBinaryTree:
    """Rebuild ``T_n`` from the node ids that received leaves ``2..n``.

    Node ids follow the compiled kernel: leaf j is ``j - 1`` and the branch
    point created with leaf j is ``n + j - 2``.
    """
    history = [int(x) for x in history]
    n = len(history) + 1
    members = {0: {1}}
    t = LabeledBinaryTree.single()
    for j, v in enumerate(history):
        leaf = j + 2
        target = frozenset(members[v])
        t = t.insert(target)
        for u, mem in members.items():
            if u != v and target <= mem:
                mem.add(leaf)
        members[n + leaf - 2] = set(target) | {leaf}
        members[leaf - 1] = {leaf}
    return t


def grow(n: int, p: Params, rng) -> LabeledBinaryTree:
    """Grow ``T_n`` from the single-leaf tree."""
    from ._kernels import grow_kernel

    if n < 1:
        raise ValueError("n must be positive")
    _, child0, child1, _, root, _ = grow_kernel(int(n), p.a, p.t, as_generator(rng))
    return tree_from_arrays(n, child0, child1, root)


def grow_histories(reps: int, n: int, p: Params, rng) -> np.ndarray:
    """``reps`` insertion histories; each row encodes one ``T_n`` bijectively."""
    from ._kernels import grow_histories as kernel

    return kernel(int(reps), int(n), p.a, p.t, as_generator(rng))


def tree_histogram(reps: int, n: int, p: Params, rng) -> dict:
    """Counts of labelled trees among ``reps`` draws of ``T_n``."""
    hist = grow_histories(reps, n, p, rng)
    if n == 1:
        return {LabeledBinaryTree.single(): reps}
    rows, counts = np.unique(hist, axis=0, return_counts=True)
    return {tree_from_history(r): int(c) for r, c in zip(rows, counts)}


def leaf1_heights(reps: int, n: int, p: Params, rng) -> np.ndarray:
    """Number of branch points between the root and leaf 1 in ``T_n``."""
    from ._kernels import leaf1_heights as kernel

    return kernel(int(reps), int(n), p.a, p.t, as_generator(rng))


@dataclass
class GrowingTree:
    """Mutable wrapper that grows one tree step by step."""

    params: Params
    rng: np.random.Generator
    tree: LabeledBinaryTree = field(default_factory=LabeledBinaryTree.single)

    def step(self) -> frozenset:
        edge = select_edge(self.tree, self.params, self.rng)
        self.tree = self.tree.insert(edge)
        return edge

    def grow_to(self, n: int) -> LabeledBinaryTree:
        while self.tree.n < n:
            self.step()
        return self.tree


# ---------------------------------------------------------------------------
# Ford's rule


def ford_edge_probs(t: LabeledBinaryTree, alpha) -> dict:
    """Exact Ford probabilities: ``1 - alpha`` per leaf edge, ``alpha`` otherwise."""
    a = Fraction(alpha)
    tot = t.n - a
    return {b: ((1 - a) if len(b) == 1 else a) / tot for b in t.blocks}


def ford_select_edge(t: LabeledBinaryTree, alpha, rng) -> frozenset:
    if not 0 < alpha < 1:
        raise ValueError("Ford's rule needs 0 < alpha < 1")
    rng = as_generator(rng)
    blocks = t.sorted_blocks()
    a = float(alpha)
    w = np.array([(1 - a) if len(b) == 1 else a for b in blocks])
    return frozenset(blocks[rng.choice(len(blocks), p=w / w.sum())])


# ---------------------------------------------------------------------------
# alpha = 0: walker in a beta(1, theta) environment


@dataclass
class WalkerEnvironment:
    """Marks ``W_x`` on the complete binary tree, drawn on first visit.

    ``W_x`` is the probability that the walker at the vertex with word ``x``
    moves to the child *without* the smallest label; under the (0, theta)
    rule that side has urn weight 1 against ``theta``.
    """

    theta: float
    rng: np.random.Generator
    marks: dict = field(default_factory=dict)

    def mark(self, word: str) -> float:
        w = self.marks.get(word)
        if w is None:
            w = self.rng.beta(1.0, self.theta) if self.theta > 0 else 1.0
            self.marks[word] = w
        return w


def walker_select_edge(t: LabeledBinaryTree, env: WalkerEnvironment) -> frozenset:
    b, word = t.root, ""
    while len(b) > 1:
        c0, c1 = t.children(b)
        if env.rng.random() < env.mark(word):
            b, word = c0, word + "0"
        else:
            b, word = c1, word + "1"
    return b


def walker_grow(n: int, theta, rng, env: WalkerEnvironment | None = None) -> LabeledBinaryTree:
    """Grow ``T_n`` by the random-environment walker (the alpha = 0 model)."""
    if theta < 0:
        raise ValueError("theta must be non-negative")
    rng = as_generator(rng)
    env = env or WalkerEnvironment(float(theta), rng)
    t = LabeledBinaryTree.single()
    for _ in range(n - 1):
        t = t.insert(walker_select_edge(t, env))
    return t


def walker_leaf1_heights(reps: int, n: int, theta, rng) -> np.ndarray:
    """Leaf-1 heights of walker trees (compiled, marks drawn at creation)."""
    from ._kernels import walker_heights

    return walker_heights(int(reps), int(n), float(theta), as_generator(rng))


def walker_histogram(reps: int, n: int, theta, rng) -> dict:
    """Counts of labelled trees among ``reps`` compiled walker draws of ``T_n``."""
    from ._kernels import walker_histories

    if n == 1:
        return {LabeledBinaryTree.single(): reps}
    h = walker_histories(int(reps), int(n), float(theta), as_generator(rng))
    rows, counts = np.unique(h, axis=0, return_counts=True)
    return {tree_from_history(r): int(c) for r, c in zip(rows, counts)}
