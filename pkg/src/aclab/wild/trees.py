"""Ordered ternary trees and their canonical (unordered) classes."""

from __future__ import annotations

import itertools
import math
from collections import Counter
from dataclasses import dataclass, field
from functools import lru_cache


@dataclass(frozen=True, order=True)
class TernaryTree:
    """Leaf (no children) or an inner node with exactly three ordered children."""

    children: tuple["TernaryTree", ...] = ()
    n_leaves: int = field(default=1, init=False, compare=False, repr=False)
    n_inner: int = field(default=0, init=False, compare=False, repr=False)

    def __post_init__(self) -> None:
        if len(self.children) not in (0, 3):
            raise ValueError("a tree node has either 0 or 3 children")
        if self.children:
            object.__setattr__(self, "n_leaves", sum(c.n_leaves for c in self.children))
            object.__setattr__(self, "n_inner", 1 + sum(c.n_inner for c in self.children))

    @property
    def is_leaf(self) -> bool:
        return not self.children

    def canonical(self) -> "TernaryTree":
        """Representative with children sorted recursively."""
        if self.is_leaf:
            return self
        return TernaryTree(tuple(sorted(c.canonical() for c in self.children)))

    def __str__(self) -> str:
        if self.is_leaf:
            return "o"
        return "[" + ",".join(str(c) for c in self.children) + "]"


LEAF = TernaryTree()


def node(a: TernaryTree, b: TernaryTree, c: TernaryTree) -> TernaryTree:
    return TernaryTree((a, b, c))


def parse_tree(text: str) -> TernaryTree:
    """Inverse of ``str``: ``o`` is a leaf, ``[x,y,z]`` an inner node."""
    text = text.replace(" ", "")
    pos = 0

    def rec() -> TernaryTree:
        nonlocal pos
        if text[pos] == "o":
            pos += 1
            return LEAF
        if text[pos] != "[":
            raise ValueError(f"unexpected character {text[pos]!r} in tree string")
        pos += 1
        kids = []
        for k in range(3):
            kids.append(rec())
            expected = "," if k < 2 else "]"
            if text[pos] != expected:
                raise ValueError(f"expected {expected!r} at position {pos}")
            pos += 1
        return TernaryTree(tuple(kids))

    tree = rec()
    if pos != len(text):
        raise ValueError("trailing characters in tree string")
    return tree


@lru_cache(maxsize=None)
def enumerate_ordered_trees(n_inner: int) -> tuple[TernaryTree, ...]:
    """All ordered ternary trees with exactly ``n_inner`` inner nodes."""
    if n_inner < 0:
        raise ValueError("n_inner must be non-negative")
    if n_inner == 0:
        return (LEAF,)
    out = []
    rest = n_inner - 1
    for a in range(rest + 1):
        for b in range(rest - a + 1):
            c = rest - a - b
            for t1, t2, t3 in itertools.product(
                enumerate_ordered_trees(a), enumerate_ordered_trees(b), enumerate_ordered_trees(c)
            ):
                out.append(TernaryTree((t1, t2, t3)))
    return tuple(out)


def ordered_tree_count(n_inner: int) -> int:
    """Closed form ``C(3n, n) / (2n + 1)``."""
    return math.comb(3 * n_inner, n_inner) // (2 * n_inner + 1)


@lru_cache(maxsize=None)
def multiplicity(tree: TernaryTree) -> int:
    """Number of distinct ordered trees equal to ``tree`` up to reordering children."""
    if tree.is_leaf:
        return 1
    kids = [c.canonical() for c in tree.children]
    perms = math.factorial(3)
    for count in Counter(kids).values():
        perms //= math.factorial(count)
    return perms * math.prod(multiplicity(c) for c in kids)


@dataclass(frozen=True, order=True)
class CanonicalTreeClass:
    n_inner: int
    representative: TernaryTree
    multiplicity: int = field(compare=False)

    @property
    def n_leaves(self) -> int:
        return self.representative.n_leaves

    @property
    def children(self) -> tuple["CanonicalTreeClass", ...]:
        return tuple(canonical_class(c) for c in self.representative.children)

    def __str__(self) -> str:
        return str(self.representative)


def canonical_class(tree: TernaryTree) -> CanonicalTreeClass:
    rep = tree.canonical()
    return CanonicalTreeClass(rep.n_inner, rep, multiplicity(rep))


def enumerate_trees(max_inner: int, limit: int = 6) -> list[CanonicalTreeClass]:
    """Canonical classes with at most ``max_inner`` inner nodes, ordered by size.

    Each class carries the number of ordered trees it stands for. ``limit``
    guards against combinatorial blow-up.
    """
    if max_inner < 0:
        raise ValueError("max_inner must be non-negative")
    if max_inner > limit:
        raise ValueError(f"max_inner={max_inner} exceeds the enumeration limit {limit}")
    out = []
    for i in range(max_inner + 1):
        reps = sorted({t.canonical() for t in enumerate_ordered_trees(i)})
        out.extend(CanonicalTreeClass(i, r, multiplicity(r)) for r in reps)
    return out
