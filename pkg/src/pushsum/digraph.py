"""Directed graphs: construction from matrix patterns, strong connectivity,
unions over time windows.

Edge direction convention (fixed here, used by every module)
------------------------------------------------------------
An edge is an ordered pair ``(j, i)`` meaning *node j transmits to node i*.
The matrix convention pairs the receiver with the row index and the sender
with the column index:

    ``M[i, j] > 0``  <=>  edge ``(j, i)``  <=>  ``j`` is an in-neighbor of ``i``

so a node's out-degree is the number of positive entries in its column.
Nodes are 0-indexed.

Strong connectivity runs on Tarjan's SCC decomposition; an exponential
brute-force cut-enumeration oracle is retained for cross-validation on
small graphs.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations
from typing import Sequence

import numpy as np

from .errors import CapabilityError, DimensionError, DomainError

__all__ = [
    "DirectedGraph",
    "from_positive_pattern",
    "strongly_connected_components",
    "is_strongly_connected",
    "is_strongly_connected_bruteforce",
    "union",
    "out_degrees",
    "complete_graph",
    "cycle_graph",
    "random_strongly_connected_graph",
]

_BRUTE_FORCE_MAX_NODES = 20


@dataclass(frozen=True)
class DirectedGraph:
    """Immutable directed graph on nodes ``0..n-1``.

    Self-loops are not enforced at construction (positive patterns of
    arbitrary nonnegative matrices are representable); protocol entry
    points that require them, e.g. :func:`pushsum.stochmat.weight_from_graph`,
    check explicitly.
    """

    n: int
    edges: frozenset[tuple[int, int]] = field(default_factory=frozenset)

    def __post_init__(self) -> None:
        if self.n < 1:
            raise DimensionError(f"node count must be >= 1, got {self.n}")
        object.__setattr__(self, "edges", frozenset(self.edges))
        for (src, dst) in self.edges:
            if not (0 <= src < self.n and 0 <= dst < self.n):
                raise DimensionError(
                    f"edge ({src}, {dst}) out of range for n={self.n}"
                )

    @property
    def has_all_self_loops(self) -> bool:
        return all((v, v) in self.edges for v in range(self.n))

    def successors(self, v: int) -> list[int]:
        return sorted(dst for (src, dst) in self.edges if src == v)

    def adjacency_bool(self) -> np.ndarray:
        """Boolean adjacency with the receiver-row convention: A[i, j] for edge (j, i)."""
        adj = np.zeros((self.n, self.n), dtype=bool)
        for (src, dst) in self.edges:
            adj[dst, src] = True
        return adj


def from_positive_pattern(matrix: np.ndarray, tol: float = 0.0) -> DirectedGraph:
    """Graph of the positive pattern of a square matrix.

    Edge ``(j, i)`` is present iff ``matrix[i, j] > tol``.
    """
    m = np.asarray(matrix, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {m.shape}")
    if tol < 0:
        raise DomainError(f"tol must be nonnegative, got {tol}")
    rows, cols = np.nonzero(m > tol)
    return DirectedGraph(m.shape[0], frozenset(zip(cols.tolist(), rows.tolist())))


def strongly_connected_components(g: DirectedGraph) -> list[list[int]]:
    """Tarjan's algorithm, iterative to avoid recursion limits."""
    succ = [[] for _ in range(g.n)]
    for (src, dst) in g.edges:
        if src != dst:
            succ[src].append(dst)

    index = [-1] * g.n
    lowlink = [0] * g.n
    on_stack = [False] * g.n
    stack: list[int] = []
    sccs: list[list[int]] = []
    counter = 0

    for root in range(g.n):
        if index[root] != -1:
            continue
        # explicit DFS stack of (node, iterator position)
        work = [(root, 0)]
        while work:
            v, pos = work.pop()
            if pos == 0:
                index[v] = lowlink[v] = counter
                counter += 1
                stack.append(v)
                on_stack[v] = True
            advanced = False
            for i in range(pos, len(succ[v])):
                w = succ[v][i]
                if index[w] == -1:
                    work.append((v, i + 1))
                    work.append((w, 0))
                    advanced = True
                    break
                if on_stack[w]:
                    lowlink[v] = min(lowlink[v], index[w])
            if advanced:
                continue
            if work:
                parent = work[-1][0]
                lowlink[parent] = min(lowlink[parent], lowlink[v])
            if lowlink[v] == index[v]:
                comp = []
                while True:
                    w = stack.pop()
                    on_stack[w] = False
                    comp.append(w)
                    if w == v:
                        break
                sccs.append(comp)
    return sccs


def is_strongly_connected(g: DirectedGraph) -> bool:
    """True iff every ordered node pair is joined by a directed path.

    ``n == 1`` is strongly connected by convention.
    """
    if g.n == 1:
        return True
    return len(strongly_connected_components(g)) == 1


def is_strongly_connected_bruteforce(g: DirectedGraph) -> bool:
    """Cut-enumeration oracle: every nontrivial subset S must receive an
    edge from its complement. Exponential; guarded to small graphs."""
    if g.n > _BRUTE_FORCE_MAX_NODES:
        raise CapabilityError(
            f"brute-force cut enumeration capped at n <= {_BRUTE_FORCE_MAX_NODES}"
        )
    if g.n == 1:
        return True
    nodes = range(g.n)
    cross = {(src, dst) for (src, dst) in g.edges if src != dst}
    for size in range(1, g.n):
        for subset in combinations(nodes, size):
            s = set(subset)
            if not any(src not in s and dst in s for (src, dst) in cross):
                return False
    return True


def union(graphs: Sequence[DirectedGraph]) -> DirectedGraph:
    """Edge-set union of graphs on a common node set."""
    if not graphs:
        raise DimensionError("union of an empty graph sequence is undefined")
    n = graphs[0].n
    edges: set[tuple[int, int]] = set()
    for g in graphs:
        if g.n != n:
            raise DimensionError(f"mixed node counts in union: {g.n} != {n}")
        edges |= g.edges
    return DirectedGraph(n, frozenset(edges))


def out_degrees(g: DirectedGraph) -> np.ndarray:
    """Out-degree of every node (self-loops count)."""
    deg = np.zeros(g.n, dtype=int)
    for (src, _dst) in g.edges:
        deg[src] += 1
    return deg


def complete_graph(n: int) -> DirectedGraph:
    return DirectedGraph(n, frozenset((j, i) for j in range(n) for i in range(n)))


def cycle_graph(n: int) -> DirectedGraph:
    """Directed cycle 0 -> 1 -> ... -> n-1 -> 0 plus self-loops."""
    edges = {(v, v) for v in range(n)}
    edges |= {(v, (v + 1) % n) for v in range(n)}
    return DirectedGraph(n, frozenset(edges))


def random_strongly_connected_graph(
    n: int, rng: np.random.Generator, extra_edge_prob: float = 0.3
) -> DirectedGraph:
    """Random strongly connected digraph with all self-loops.

    A random Hamiltonian cycle guarantees strong connectivity; each of the
    remaining off-cycle edges is added independently with ``extra_edge_prob``.
    """
    perm = rng.permutation(n)
    edges = {(v, v) for v in range(n)}
    for i in range(n):
        edges.add((int(perm[i]), int(perm[(i + 1) % n])))
    for src in range(n):
        for dst in range(n):
            if src != dst and (src, dst) not in edges:
                if rng.random() < extra_edge_prob:
                    edges.add((src, dst))
    return DirectedGraph(n, frozenset(edges))
