"""Text forms for trees: a Newick dialect and a block-set JSON.

Newick dialect
    The outermost parentheses stand for the root vertex and enclose the
    single subtree hanging from the root edge, so the two-leaf tree is
    ``((1,2));``. Leaves are decimal labels. Any edge may carry a
    ``:length`` suffix; the root edge length follows the outer group,
    as in ``((1:0.5,2:0.25)):1.0;``. Siblings are written with the one
    holding the smaller labels first.

JSON
    ``{"n": 2, "blocks": [[1, 2], [1], [2]]}``; trees with lengths add a
    ``"lengths"`` list aligned with ``"blocks"``.
"""

from __future__ import annotations

import json

from .trees import EdgeLengthTree, LabeledBinaryTree, validate


class TreeParseError(ValueError):
    """Malformed tree text; ``offset`` is the 0-based character position."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} at offset {offset}")
        self.offset = offset


def _fmt_len(x: float) -> str:
    return repr(float(x))


def to_newick(t: LabeledBinaryTree | EdgeLengthTree) -> str:
    shape = t.shape if isinstance(t, EdgeLengthTree) else t
    lengths = t.lengths if isinstance(t, EdgeLengthTree) else None

    def suffix(b):
        return f":{_fmt_len(lengths[b])}" if lengths is not None else ""

    def write(b):
        if len(b) == 1:
            return f"{next(iter(b))}{suffix(b)}"
        c0, c1 = shape.children(b)
        return f"({write(c1)},{write(c0)}){suffix(b)}"

    root = shape.root
    inner = write(root)
    if lengths is None:
        return f"({inner});"
    # root edge length moves outside the outer group
    inner = inner[: -len(suffix(root))]
    return f"({inner}){suffix(root)};"


class _Parser:
    def __init__(self, text: str):
        self.s = text
        self.i = 0

    def error(self, msg):
        raise TreeParseError(msg, self.i)

    def peek(self):
        return self.s[self.i] if self.i < len(self.s) else ""

    def expect(self, ch):
        if self.peek() != ch:
            found = repr(self.peek()) if self.peek() else "end of input"
            self.error(f"expected {ch!r}, found {found}")
        self.i += 1

    def number(self) -> str:
        j = self.i
        while self.peek() and (self.peek().isdigit() or self.peek() in ".eE+-"):
            self.i += 1
        if j == self.i:
            self.error("expected a number")
        return self.s[j:self.i]

    def length(self):
        if self.peek() != ":":
            return None
        self.i += 1
        start = self.i
        try:
            return float(self.number())
        except ValueError:
            raise TreeParseError("malformed edge length", start) from None

    def label(self) -> int:
        j = self.i
        while self.peek().isdigit():
            self.i += 1
        if j == self.i:
            self.error("expected a leaf label or '('")
        return int(self.s[j:self.i])

    def subtree(self, blocks, lengths):
        """Parse one edge (subtree plus optional length); return its leaf set."""
        if self.peek() == "(":
            self.i += 1
            left = self.subtree(blocks, lengths)
            self.expect(",")
            right = self.subtree(blocks, lengths)
            self.expect(")")
            b = left | right
        else:
            start = self.i
            b = frozenset((self.label(),))
            if b in blocks:
                raise TreeParseError(f"duplicate leaf {next(iter(b))}", start)
        blocks.append(b)
        lengths.append(self.length())
        return b

    def parse(self):
        blocks, lengths = [], []
        self.expect("(")
        root = self.subtree(blocks, lengths)
        self.expect(")")
        outer = self.length()
        self.expect(";")
        if self.i != len(self.s):
            self.error("trailing characters")
        if outer is not None:
            if lengths[-1] is not None:
                self.error("root edge length given twice")
            lengths[-1] = outer
        return root, blocks, lengths


def parse_newick(text: str) -> LabeledBinaryTree | EdgeLengthTree:
    """Parse the dialect written by :func:`to_newick`.

    Returns an :class:`EdgeLengthTree` when lengths are present (they must
    then be present on every edge), else a :class:`LabeledBinaryTree`.
    """
    root, blocks, lengths = _Parser(text.strip()).parse()
    n = len(root)
    if root != frozenset(range(1, n + 1)):
        raise TreeParseError(f"leaf labels must be exactly 1..{n}", 0)
    tree = validate(blocks, n)
    given = [x is not None for x in lengths]
    if not any(given):
        return tree
    if not all(given):
        raise TreeParseError("edge lengths must be given on all edges or none", 0)
    degenerate = [b for b, x in zip(blocks, lengths) if x == 0]
    return EdgeLengthTree(tree, dict(zip(blocks, lengths)), frozenset(degenerate))


def to_json_obj(t: LabeledBinaryTree | EdgeLengthTree) -> dict:
    shape = t.shape if isinstance(t, EdgeLengthTree) else t
    blocks = shape.sorted_blocks()
    obj = {"n": shape.n, "blocks": blocks}
    if isinstance(t, EdgeLengthTree):
        obj["lengths"] = [t.lengths[frozenset(b)] for b in blocks]
    return obj


def to_json(t) -> str:
    return json.dumps(to_json_obj(t))


def from_json_obj(obj: dict) -> LabeledBinaryTree | EdgeLengthTree:
    tree = validate(obj["blocks"], int(obj["n"]))
    if "lengths" not in obj:
        return tree
    lengths = {frozenset(b): x for b, x in zip(obj["blocks"], obj["lengths"])}
    degenerate = [b for b, x in lengths.items() if x == 0]
    return EdgeLengthTree(tree, lengths, frozenset(degenerate))


def from_json(text: str):
    return from_json_obj(json.loads(text))
