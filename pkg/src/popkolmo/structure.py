"""Graph structure of a transition matrix: irreducibility and normal form."""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .kolmogorov import TransitionMatrix


class Kind(str, Enum):
    CLOSED = "closed"
    TRANSIENT = "transient"


@dataclass(frozen=True)
class PatchGraph:
    """Directed graph with an edge ``j -> i`` whenever ``c_ij > 0``."""

    n: int
    edges: frozenset

    def successors(self):
        out = [[] for _ in range(self.n)]
        for j, i in sorted(self.edges):
            out[j].append(i)
        return out


@dataclass(frozen=True)
class Block:
    kind: Kind
    start: int
    stop: int
    original_indices: tuple

    @property
    def size(self) -> int:
        return self.stop - self.start


@dataclass(frozen=True)
class NormalForm:
    """Permutation ``P`` with ``P C P^T`` in block normal form.

    Closed blocks come first, each isolated in its own columns; transient
    blocks follow, block upper triangular. ``blocks[k].start:stop`` index
    the permuted matrix.
    """

    permutation: tuple
    blocks: tuple
    permuted_matrix: np.ndarray = field(repr=False)

    @property
    def m(self) -> int:
        return sum(1 for b in self.blocks if b.kind is Kind.CLOSED)

    @property
    def closed_blocks(self):
        return [b for b in self.blocks if b.kind is Kind.CLOSED]

    @property
    def transient_blocks(self):
        return [b for b in self.blocks if b.kind is Kind.TRANSIENT]

    def diagonal_block(self, block: Block) -> np.ndarray:
        return self.permuted_matrix[block.start:block.stop, block.start:block.stop]

    def to_dict(self) -> dict:
        return {
            "permutation": list(self.permutation),
            "blocks": [
                {"kind": b.kind.value, "original_indices": list(b.original_indices)} for b in self.blocks
            ],
            "m": self.m,
        }


def adjacency_graph(c: TransitionMatrix) -> PatchGraph:
    a = c.entries
    n = a.shape[0]
    edges = frozenset((int(j), int(i)) for i, j in np.argwhere(a > 0) if i != j)
    return PatchGraph(n, edges)


def strongly_connected_components(n: int, successors) -> list:
    """Tarjan's algorithm with an explicit stack.

    Returns components in the order Tarjan completes them, which is a
    reverse topological order of the condensation (sinks first).
    """
    index = [-1] * n
    low = [0] * n
    on_stack = [False] * n
    stack = []
    components = []
    counter = 0

    for root in range(n):
        if index[root] >= 0:
            continue
        work = [(root, 0)]
        index[root] = low[root] = counter
        counter += 1
        stack.append(root)
        on_stack[root] = True
        while work:
            v, pos = work[-1]
            succ = successors[v]
            if pos < len(succ):
                work[-1] = (v, pos + 1)
                w = succ[pos]
                if index[w] < 0:
                    index[w] = low[w] = counter
                    counter += 1
                    stack.append(w)
                    on_stack[w] = True
                    work.append((w, 0))
                elif on_stack[w]:
                    low[v] = min(low[v], index[w])
                continue
            work.pop()
            if work:
                parent = work[-1][0]
                low[parent] = min(low[parent], low[v])
            if low[v] == index[v]:
                comp = []
                while True:
                    w = stack.pop()
                    on_stack[w] = False
                    comp.append(w)
                    if w == v:
                        break
                components.append(sorted(comp))
    return components


def is_irreducible(c: TransitionMatrix) -> bool:
    g = adjacency_graph(c)
    if g.n == 1:
        return True
    return len(strongly_connected_components(g.n, g.successors())) == 1


def normal_form(c: TransitionMatrix) -> NormalForm:
    """Permute ``c`` into closed blocks followed by transient blocks.

    A strongly connected component is closed when no edge leaves it.
    Closed blocks are ordered by smallest member; a transient block is
    placed after every transient block it feeds, ties going to the
    smallest member. Orderings among closed blocks and among incomparable
    transient blocks are otherwise arbitrary; this is one admissible choice.
    """
    g = adjacency_graph(c)
    comps = strongly_connected_components(g.n, g.successors())
    comp_of = [0] * g.n
    for k, comp in enumerate(comps):
        for v in comp:
            comp_of[v] = k
    feeds = [set() for _ in comps]
    for j, i in g.edges:
        if comp_of[j] != comp_of[i]:
            feeds[comp_of[j]].add(comp_of[i])

    closed = sorted((k for k in range(len(comps)) if not feeds[k]), key=lambda k: comps[k][0])
    transient = [k for k in range(len(comps)) if feeds[k]]

    # Kahn's algorithm: a transient block is ready once everything it feeds is placed.
    pending = {k: sum(1 for d in feeds[k] if d in transient) for k in transient}
    fed_by = {k: [] for k in transient}
    for k in transient:
        for d in feeds[k]:
            if d in fed_by:
                fed_by[d].append(k)
    ready = [(comps[k][0], k) for k in transient if pending[k] == 0]
    heapq.heapify(ready)
    transient_order = []
    while ready:
        _, k = heapq.heappop(ready)
        transient_order.append(k)
        for up in fed_by[k]:
            pending[up] -= 1
            if pending[up] == 0:
                heapq.heappush(ready, (comps[up][0], up))

    permutation = []
    blocks = []
    for kind, order in ((Kind.CLOSED, closed), (Kind.TRANSIENT, transient_order)):
        for k in order:
            start = len(permutation)
            permutation.extend(comps[k])
            blocks.append(Block(kind, start, len(permutation), tuple(comps[k])))
    perm = np.asarray(permutation, dtype=int)
    permuted = c.entries[np.ix_(perm, perm)].copy()
    permuted.setflags(write=False)
    return NormalForm(tuple(permutation), tuple(blocks), permuted)


def classify_states(nf: NormalForm) -> list:
    """Label each original patch index with the kind of its block."""
    labels = [None] * len(nf.permutation)
    for b in nf.blocks:
        for i in b.original_indices:
            labels[i] = b.kind
    return labels
