"""Rooted binary trees with leaves labelled ``1..n``.

A tree is stored as the collection of its vertex blocks: every vertex above
the root is labelled by the set of leaf labels in the subtree it spans, so
``{{1, 2}, {1}, {2}}`` is the Y-shaped tree on two leaves. The edge below a
block ``B`` is identified with ``B`` itself; ``[n]`` names the root edge.

Parent/child structure is derived from the block set on demand.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from types import MappingProxyType
from typing import Iterable, Mapping

from .crp import Composition

Block = frozenset


class InvalidTreeError(ValueError):
    """Raised when a block collection is not a rooted binary tree on [n]."""


def _sorted_block(b) -> tuple:
    return tuple(sorted(b))


def _block_order(b):
    return (-len(b), _sorted_block(b))


def _children_map(blocks: frozenset, n: int) -> dict:
    """Map every block to the list of its maximal proper sub-blocks."""
    by_size = sorted(blocks, key=_block_order)
    children: dict = {b: [] for b in blocks}
    # Walking from small to large, each block's parent is the smallest block
    # strictly containing it; scanning candidates by increasing size finds it.
    for i in range(len(by_size) - 1, -1, -1):
        b = by_size[i]
        for j in range(i - 1, -1, -1):
            c = by_size[j]
            if len(c) > len(b) and b < c:
                children[c].append(b)
                break
        else:
            if len(b) != n:
                raise InvalidTreeError(f"block {_sorted_block(b)} has no parent block")
    return children


def validate(blocks: Iterable[Iterable[int]], n: int) -> "LabeledBinaryTree":
    """Check a block collection and return the corresponding tree.

    Raises
    ------
    InvalidTreeError
        If the root block or a singleton is missing, a block leaves [n], or
        some block fails to split into exactly two disjoint children.
    """
    if n < 1:
        raise InvalidTreeError("leaf count must be positive")
    bs = frozenset(frozenset(int(i) for i in b) for b in blocks)
    full = frozenset(range(1, n + 1))
    if frozenset() in bs:
        raise InvalidTreeError("empty block")
    for b in bs:
        if not b <= full:
            raise InvalidTreeError(f"block {_sorted_block(b)} is not a subset of [{n}]")
    if full not in bs:
        raise InvalidTreeError("root block [n] missing")
    for i in full:
        if frozenset((i,)) not in bs:
            raise InvalidTreeError(f"singleton {{{i}}} missing")
    children = _children_map(bs, n)
    for b, ch in children.items():
        if len(b) == 1:
            continue
        if len(ch) != 2:
            raise InvalidTreeError(
                f"block {_sorted_block(b)} has {len(ch)} maximal sub-blocks, expected 2")
        x, y = ch
        if x & y or (x | y) != b:
            raise InvalidTreeError(f"children of {_sorted_block(b)} do not partition it")
    t = LabeledBinaryTree.__new__(LabeledBinaryTree)
    object.__setattr__(t, "n", n)
    object.__setattr__(t, "blocks", bs)
    t.__dict__["_children"] = children
    return t


@dataclass(frozen=True)
class LabeledBinaryTree:
    """Rooted binary tree on leaf set [n], represented by its vertex blocks."""

    n: int
    blocks: frozenset

    def __post_init__(self):
        validate(self.blocks, self.n)

    @classmethod
    def single(cls) -> "LabeledBinaryTree":
        return validate([[1]], 1)

    @cached_property
    def _children(self) -> dict:
        return _children_map(self.blocks, self.n)

    @property
    def root(self) -> frozenset:
        return frozenset(range(1, self.n + 1))

    def children(self, b) -> tuple:
        """The two child blocks of ``b`` as ``(without_min, with_min)``.

        The second entry contains the smallest label of ``b``; leaves have no
        children and return ``()``.
        """
        ch = self._children[frozenset(b)]
        if not ch:
            return ()
        x, y = ch
        return (y, x) if min(x) < min(y) else (x, y)

    @cached_property
    def _parent(self) -> dict:
        par = {}
        for b, ch in self._children.items():
            for c in ch:
                par[c] = b
        return par

    def parent(self, b):
        """Parent block of ``b``, or None for the root block."""
        return self._parent.get(frozenset(b))

    def depth(self, b) -> int:
        """Number of edges from the root vertex down to the vertex ``b``."""
        d = 1
        b = frozenset(b)
        while (b := self._parent.get(b)) is not None:
            d += 1
        return d

    def spine(self) -> list:
        """Blocks on the path from the root edge to leaf 1, top first."""
        out = [self.root]
        b = self.root
        while len(b) > 1:
            b = self.children(b)[1]
            out.append(b)
        return out

    def to_nested(self):
        """Nested-tuple form: a leaf is its label, a branch is ``(c0, c1)``
        with ``c1`` holding the smaller labels."""

        def build(b):
            if len(b) == 1:
                return next(iter(b))
            c0, c1 = self.children(b)
            return (build(c0), build(c1))

        return build(self.root)

    @classmethod
    def from_nested(cls, nested) -> "LabeledBinaryTree":
        blocks = []

        def collect(x):
            if isinstance(x, tuple):
                s = collect(x[0]) | collect(x[1])
            else:
                s = frozenset((x,))
            blocks.append(s)
            return s

        root = collect(nested)
        return validate(blocks, len(root))

    def relabel(self, perm: Mapping[int, int]) -> "LabeledBinaryTree":
        """Apply a bijection of [n] to the leaf labels."""
        return validate([[perm[i] for i in b] for b in self.blocks], self.n)

    def insert(self, edge) -> "LabeledBinaryTree":
        """Attach leaf n+1 to the edge below block ``edge``.

        Blocks containing ``edge`` (``edge`` itself included) gain n+1, which
        turns ``edge`` into the new branch block; ``edge`` and ``{n+1}`` are
        then added back as its two children.
        """
        edge = frozenset(edge)
        if edge not in self.blocks:
            raise KeyError(f"{_sorted_block(edge)} is not an edge of the tree")
        new = self.n + 1
        out = [b | {new} if edge <= b else b for b in self.blocks]
        out.append(edge)
        out.append(frozenset((new,)))
        return validate(out, new)

    def sorted_blocks(self) -> list:
        return [list(_sorted_block(b)) for b in sorted(self.blocks, key=_block_order)]

    def __repr__(self):
        from .newick import to_newick

        return f"LabeledBinaryTree({to_newick(self)!r})"


def caterpillar(order: Iterable[int]) -> LabeledBinaryTree:
    """Comb tree whose leaves hang off a single spine, ``order`` from root down.

    The last two labels of ``order`` share the deepest branch point.
    """
    order = list(order)
    n = len(order)
    blocks = [frozenset((i,)) for i in order]
    for j in range(n - 1):
        blocks.append(frozenset(order[j:]))
    return validate(blocks, n)


# ---------------------------------------------------------------------------
# shapes


@dataclass(frozen=True, order=True)
class TreeShape:
    """Delabelled rooted binary tree, encoded by recursively sorted child codes."""

    code: str

    def __str__(self):
        return self.code


LEAF_CODE = "•"


def shape_code_nested(nested) -> str:
    if isinstance(nested, tuple):
        a, b = sorted((shape_code_nested(nested[0]), shape_code_nested(nested[1])))
        return f"({a},{b})"
    return LEAF_CODE


def delabel(t: LabeledBinaryTree) -> TreeShape:
    return TreeShape(shape_code_nested(t.to_nested()))


def comb_shape(n: int) -> TreeShape:
    return delabel(caterpillar(range(1, n + 1)))


# ---------------------------------------------------------------------------
# reduction


def _relabel_increasing(blocks, labels) -> list:
    pos = {x: i + 1 for i, x in enumerate(sorted(labels))}
    return [[pos[i] for i in b] for b in blocks]


def reduce(t: LabeledBinaryTree, leaves) -> LabeledBinaryTree:
    """Subtree spanned by ``leaves``, relabelled increasingly onto [#leaves].

    The spanned tree's vertex blocks are exactly the distinct non-empty
    traces ``A & leaves`` of the blocks ``A`` of ``t``.
    """
    s = frozenset(int(i) for i in leaves)
    if not s:
        raise ValueError("reduction needs a non-empty leaf set")
    if not s <= t.root:
        raise ValueError(f"{sorted(s)} is not a subset of [{t.n}]")
    traces = {a & s for a in t.blocks} - {frozenset()}
    return validate(_relabel_increasing(traces, s), len(s))


@dataclass(frozen=True)
class EdgeLengthTree:
    """A tree shape with a length attached to the edge below every block.

    ``degenerate`` lists blocks whose edge is allowed to have length zero.
    """

    shape: LabeledBinaryTree
    lengths: Mapping = field(compare=False)
    degenerate: frozenset = frozenset()

    def __post_init__(self):
        lengths = {frozenset(b): float(v) for b, v in dict(self.lengths).items()}
        if set(lengths) != set(self.shape.blocks):
            raise InvalidTreeError("edge lengths must be given for exactly the tree's blocks")
        for b, v in lengths.items():
            if v < 0 or (v == 0 and b not in self.degenerate):
                raise InvalidTreeError(f"edge {_sorted_block(b)} has non-positive length {v}")
        object.__setattr__(self, "lengths", MappingProxyType(lengths))
        object.__setattr__(self, "degenerate", frozenset(frozenset(b) for b in self.degenerate))

    def __eq__(self, other):
        if not isinstance(other, EdgeLengthTree):
            return NotImplemented
        return (self.shape == other.shape and dict(self.lengths) == dict(other.lengths)
                and self.degenerate == other.degenerate)

    __hash__ = None

    @property
    def k(self) -> int:
        return self.shape.n

    def total_length(self) -> float:
        return sum(self.lengths.values())

    def height(self, b) -> float:
        """Distance from the root to the top end of edge ``b``."""
        h = 0.0
        b = frozenset(b)
        while b is not None:
            h += self.lengths[b]
            b = self.shape.parent(b)
        return h

    def scaled(self, factor: float) -> "EdgeLengthTree":
        return EdgeLengthTree(self.shape, {b: v * factor for b, v in self.lengths.items()},
                              self.degenerate)


def reduce_with_lengths(t: LabeledBinaryTree, k) -> EdgeLengthTree:
    """Reduced tree on leaves ``[k]`` (or a leaf set) with graph-distance lengths.

    The edge of the reduced tree below a trace ``C`` has length equal to the
    number of unit edges of ``t`` whose block traces to ``C``.
    """
    s = frozenset(range(1, k + 1)) if isinstance(k, int) else frozenset(k)
    if not s or not s <= t.root:
        raise ValueError("leaf set must be a non-empty subset of [n]")
    counts: dict = {}
    for a in t.blocks:
        c = a & s
        if c:
            counts[c] = counts.get(c, 0) + 1
    pos = {x: i + 1 for i, x in enumerate(sorted(s))}
    relabel = {c: frozenset(pos[i] for i in c) for c in counts}
    shape = validate(relabel.values(), len(s))
    return EdgeLengthTree(shape, {relabel[c]: float(v) for c, v in counts.items()})


def spinal_composition(t: LabeledBinaryTree) -> Composition:
    """Sizes of the subtrees hanging off the path from the root to leaf 1.

    Ordered from the root towards leaf 1; the parts sum to n - 1. The
    single-leaf tree gives the empty composition.
    """
    parts = []
    b = t.root
    while len(b) > 1:
        c0, c1 = t.children(b)
        parts.append(len(c0))
        b = c1
    return Composition(tuple(parts))
