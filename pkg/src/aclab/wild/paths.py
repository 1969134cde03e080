"""Path decomposition of a paired double tree.

The double tree joins two copies of a ternary tree under a common root. A
pairing of its leaves adds one "green" edge per pair. The decomposition
repeatedly picks a root, climbs one of its planted subtrees to a leaf whose
partner lies outside that subtree, crosses the green edge and descends to
the partner's root. Inner vertices strictly inside the path become new roots.
Each path uses exactly one green edge, so there are as many paths as pairs.

Choices are deterministic: the smallest root id, its first live child, and
the first eligible leaf in depth-first order.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field

from .pairings import Pairing
from .trees import TernaryTree


@dataclass
class DoubleTree:
    """Vertex 0 is the top root; leaves are listed left copy first, depth-first."""

    parent: list[int | None]
    kids: list[list[int]]
    leaves: list[int]
    partner: dict[int, int]

    @property
    def n_vertices(self) -> int:
        return len(self.parent)

    def black_edges(self) -> set[tuple[int, int]]:
        return {(p, c) for c, p in enumerate(self.parent) if p is not None}

    def green_edges(self) -> set[tuple[int, int]]:
        return {(min(a, b), max(a, b)) for a, b in self.partner.items()}


def build_double_tree(tree: TernaryTree, pairing: Pairing) -> DoubleTree:
    parent: list[int | None] = [None]
    kids: list[list[int]] = [[]]
    leaves: list[int] = []

    def attach(t: TernaryTree, up: int) -> None:
        vid = len(parent)
        parent.append(up)
        kids.append([])
        kids[up].append(vid)
        if t.is_leaf:
            leaves.append(vid)
        for c in t.children:
            attach(c, vid)

    attach(tree, 0)
    attach(tree, 0)
    if sorted(x for pr in pairing for x in pr) != list(range(len(leaves))):
        raise ValueError("pairing must match every leaf of the double tree exactly once")
    partner = {}
    for a, b in pairing:
        partner[leaves[a]] = leaves[b]
        partner[leaves[b]] = leaves[a]
    return DoubleTree(parent, kids, leaves, partner)


@dataclass
class Path:
    vertices: list[int]
    black: list[tuple[int, int]]
    green: tuple[int, int]
    yellow: list[int]

    @property
    def start(self) -> int:
        return self.vertices[0]

    @property
    def end(self) -> int:
        return self.vertices[-1]

    @property
    def is_cycle(self) -> bool:
        return self.start == self.end


@dataclass
class PathDecomposition:
    graph: DoubleTree
    paths: list[Path] = field(default_factory=list)
    step_violations: list[str] = field(default_factory=list)

    def check_invariants(self) -> list[str]:
        """Return a list of violated invariants (empty when all hold)."""
        g = self.graph
        problems = list(self.step_violations)
        n_pairs = len(g.leaves) // 2
        if len(self.paths) != n_pairs:
            problems.append(f"{len(self.paths)} paths for {n_pairs} pairs")
        black = Counter(e for p in self.paths for e in p.black)
        green = Counter(p.green for p in self.paths)
        if set(black) != g.black_edges() or any(v != 1 for v in black.values()):
            problems.append("black edges are not covered exactly once")
        if set(green) != g.green_edges() or any(v != 1 for v in green.values()):
            problems.append("green edges are not covered exactly once")
        yellow = Counter(v for p in self.paths for v in p.yellow)
        ends = Counter()
        for p in self.paths:
            ends[p.start] += 1
            ends[p.end] += 1
        leafset = set(g.leaves)
        for v in range(g.n_vertices):
            if v in leafset:
                hits = sum(v in p.vertices for p in self.paths)
                if hits != 1 or yellow[v] or ends[v]:
                    problems.append(f"leaf {v} appears in {hits} paths")
            elif v == 0:
                if ends[v] != 2 or yellow[v]:
                    problems.append(f"top root: {ends[v]} endpoint slots, {yellow[v]} yellow")
            elif yellow[v] != 1 or ends[v] != 2:
                problems.append(f"vertex {v}: {yellow[v]} yellow, {ends[v]} endpoint slots")
        return problems


def _f3_violations(g: DoubleTree, black: set[int], green: dict[int, int]) -> list[str]:
    """Membership test for the intermediate graph family.

    Every live component must be a root with one or two planted ternary trees
    and the live leaves must be perfectly paired.
    """
    live_kids = {v: [c for c in g.kids[v] if c in black] for v in range(g.n_vertices)}
    leafset = set(g.leaves)
    out = []
    for v in range(g.n_vertices):
        has_parent = v in black
        nk = len(live_kids[v])
        if not has_parent and nk == 0:
            if v in green:
                out.append(f"vertex {v} is an isolated paired leaf")
            continue
        if not has_parent:
            if nk not in (1, 2) or v in leafset:
                out.append(f"root {v} has {nk} planted trees")
        elif v in leafset:
            if v not in green:
                out.append(f"leaf {v} lost its partner")
        elif nk != 3:
            out.append(f"inner vertex {v} has {nk} children")
    for a, b in green.items():
        if green.get(b) != a:
            out.append(f"green edge {a}-{b} is not symmetric")
    return out


def path_decompose(tree: TernaryTree, pairing: Pairing) -> PathDecomposition:
    g = build_double_tree(tree, pairing)
    black = {c for c, p in enumerate(g.parent) if p is not None}  # child id names its parent edge
    green = dict(g.partner)
    result = PathDecomposition(g)

    def live_children(v: int) -> list[int]:
        return [c for c in g.kids[v] if c in black]

    def subtree_leaves(top: int) -> list[int]:
        out, stack = [], [top]
        while stack:
            v = stack.pop()
            kids = live_children(v)
            if not kids:
                out.append(v)
            stack.extend(reversed(kids))
        return out

    while green:
        roots = sorted(v for v in range(g.n_vertices) if v not in black and live_children(v))
        v = roots[0]
        top = live_children(v)[0]
        leaves = subtree_leaves(top)
        inside = set(leaves)
        leaf = next(x for x in leaves if green[x] not in inside)
        mate = green[leaf]
        up = [leaf]
        while up[-1] != v:
            up.append(g.parent[up[-1]])
        up.reverse()
        down = [mate]
        while down[-1] in black:
            down.append(g.parent[down[-1]])
        vertices = up + down
        edges = [(g.parent[c], c) for c in up[1:]] + [(g.parent[c], c) for c in down[:-1]]
        yellow = up[1:-1] + down[1:-1]
        for c in up[1:] + down[:-1]:
            black.discard(c)
        del green[leaf]
        del green[mate]
        result.paths.append(Path(vertices, edges, (min(leaf, mate), max(leaf, mate)), yellow))
        step = len(result.paths)
        result.step_violations.extend(f"step {step}: {m}" for m in _f3_violations(g, black, green))
    if black:
        result.step_violations.append(f"{len(black)} black edges left after all green edges were used")
    return result
