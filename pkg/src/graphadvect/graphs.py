"""Weighted directed graphs, the advection/consensus operators, and the
graph families whose advection operator reproduces finite-difference
stencils of ``u_t + v u_x = 0``.

Edge ``(j, i, w)`` carries the flux ``w * u_j`` from node ``j`` to node ``i``,
so that ``du/dt = -L_adv u`` with ``L_adv = D_out - A_in``.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np

from .errors import (
    DuplicateEdge,
    IndexOutOfRange,
    InvalidFamilyParams,
    NonFiniteWeight,
    SelfLoop,
    ValidationError,
)

__all__ = [
    "DirectedGraph",
    "OperatorKind",
    "LinearOperator",
    "FamilyKind",
    "GraphFamily",
    "from_edge_list",
    "advection_operator",
    "consensus_operator",
    "is_balanced",
    "generate",
    "node_positions",
]

Edge = tuple  # (source, target, weight)


@dataclass(frozen=True)
class DirectedGraph:
    node_count: int
    edges: tuple
    node_labels: Optional[tuple] = None

    def __post_init__(self):
        if not isinstance(self.node_count, (int, np.integer)) or self.node_count < 1:
            raise ValidationError(f"node_count must be a positive integer, got {self.node_count!r}")
        n = int(self.node_count)
        seen = set()
        clean = []
        for edge in self.edges:
            try:
                s, t, w = edge
            except (TypeError, ValueError):
                raise ValidationError(f"edge must be (source, target, weight), got {edge!r}") from None
            if int(s) != s or int(t) != t:
                raise IndexOutOfRange(f"non-integer node index in edge {edge!r}")
            s, t, w = int(s), int(t), float(w)
            if not (0 <= s < n and 0 <= t < n):
                raise IndexOutOfRange(f"edge ({s}, {t}) outside [0, {n})")
            if s == t:
                raise SelfLoop(f"self-loop at node {s}")
            if not math.isfinite(w):
                raise NonFiniteWeight(f"edge ({s}, {t}) has weight {w}")
            if (s, t) in seen:
                raise DuplicateEdge(f"duplicate edge ({s}, {t})")
            seen.add((s, t))
            clean.append((s, t, w))
        object.__setattr__(self, "node_count", n)
        object.__setattr__(self, "edges", tuple(clean))
        if self.node_labels is not None:
            labels = tuple(str(x) for x in self.node_labels)
            if len(labels) != n:
                raise ValidationError(f"{len(labels)} labels for {n} nodes")
            object.__setattr__(self, "node_labels", labels)

    @property
    def edge_count(self) -> int:
        return len(self.edges)

    def out_weight(self) -> np.ndarray:
        """Signed total weight leaving each node."""
        out = np.zeros(self.node_count)
        for s, _, w in self.edges:
            out[s] += w
        return out

    def in_weight(self) -> np.ndarray:
        """Signed total weight entering each node."""
        inc = np.zeros(self.node_count)
        for _, t, w in self.edges:
            inc[t] += w
        return inc

    def relabel(self, perm: Sequence[int]) -> "DirectedGraph":
        """Return the graph with node ``k`` renamed to ``perm[k]``."""
        perm = [int(p) for p in perm]
        if sorted(perm) != list(range(self.node_count)):
            raise ValidationError("perm must be a permutation of the node indices")
        edges = [(perm[s], perm[t], w) for s, t, w in self.edges]
        labels = None
        if self.node_labels is not None:
            labels = [""] * self.node_count
            for k, lab in enumerate(self.node_labels):
                labels[perm[k]] = lab
        return DirectedGraph(self.node_count, tuple(edges), labels)


class OperatorKind(enum.Enum):
    ADVECTION = "advection"
    CONSENSUS = "consensus"
    SYMMETRIZED_AVERAGE = "symmetrized_average"


@dataclass(frozen=True, eq=False)
class LinearOperator:
    """Dense square operator on the node space of a graph."""

    matrix: np.ndarray
    kind: OperatorKind
    graph_node_count: int

    def __post_init__(self):
        m = np.array(self.matrix, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValidationError(f"operator must be square, got shape {m.shape}")
        if m.shape[0] != self.graph_node_count:
            raise ValidationError(
                f"operator dimension {m.shape[0]} != graph_node_count {self.graph_node_count}"
            )
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "kind", OperatorKind(self.kind))

    @property
    def n(self) -> int:
        return self.graph_node_count


def from_edge_list(edges: Iterable, node_count: int, node_labels=None) -> DirectedGraph:
    return DirectedGraph(node_count, tuple(edges), node_labels)


def advection_operator(g: DirectedGraph) -> LinearOperator:
    """``L_adv = D_out - A_in``.

    Column ``j`` holds the total outgoing weight of ``j`` on the diagonal and
    ``-w`` in row ``i`` for each edge ``j -> i``, so every column sums to zero.
    """
    n = g.node_count
    m = np.zeros((n, n))
    for s, t, w in g.edges:
        m[s, s] += w
        m[t, s] -= w
    return LinearOperator(m, OperatorKind.ADVECTION, n)


def consensus_operator(g: DirectedGraph) -> LinearOperator:
    """``L_cons = D_in - A_in``: same off-diagonal as the advection operator,
    incoming weight on the diagonal."""
    n = g.node_count
    m = np.zeros((n, n))
    for s, t, w in g.edges:
        m[t, t] += w
        m[t, s] -= w
    return LinearOperator(m, OperatorKind.CONSENSUS, n)


def is_balanced(g: DirectedGraph, tol: float = 0.0) -> bool:
    if tol < 0:
        raise ValidationError("tol must be non-negative")
    return bool(np.all(np.abs(g.in_weight() - g.out_weight()) <= tol))


class FamilyKind(enum.Enum):
    UPWIND_LINE = "upwind"
    CENTRAL_LINE = "central"
    LUD_LINE = "lud"
    NONUNIFORM_LINE = "nonuniform"
    LOOP = "loop"
    INTERSECTION = "intersection"
    STAR = "star"
    COMPLETE = "complete"


_LINE_LIKE = {
    FamilyKind.UPWIND_LINE,
    FamilyKind.CENTRAL_LINE,
    FamilyKind.LUD_LINE,
    FamilyKind.NONUNIFORM_LINE,
    FamilyKind.LOOP,
    FamilyKind.INTERSECTION,
}
_CAN_WRAP = {
    FamilyKind.UPWIND_LINE,
    FamilyKind.CENTRAL_LINE,
    FamilyKind.LUD_LINE,
    FamilyKind.NONUNIFORM_LINE,
}


@dataclass(frozen=True)
class GraphFamily:
    """A named graph family with its discretization parameters.

    ``periodic`` wraps a line family onto a ring; ``LOOP`` is the periodic
    upwind line and is always periodic.
    """

    kind: FamilyKind
    n: int
    v: float = 1.0
    dx: float = 1.0
    periodic: bool = False

    def __post_init__(self):
        object.__setattr__(self, "kind", FamilyKind(self.kind))
        if self.kind is FamilyKind.LOOP:
            object.__setattr__(self, "periodic", True)
        if not isinstance(self.n, (int, np.integer)):
            raise InvalidFamilyParams(f"n must be an integer, got {self.n!r}")
        min_n = 3 if self.kind in _LINE_LIKE else 1
        if self.kind is FamilyKind.INTERSECTION:
            min_n = 4
        if self.kind is FamilyKind.NONUNIFORM_LINE and self.periodic:
            min_n = 4
        if self.n < min_n:
            raise InvalidFamilyParams(f"{self.kind.value} needs n >= {min_n}, got {self.n}")
        if not math.isfinite(self.v) or self.v == 0:
            raise InvalidFamilyParams(f"v must be finite and nonzero, got {self.v}")
        if not math.isfinite(self.dx) or self.dx <= 0:
            raise InvalidFamilyParams(f"dx must be positive, got {self.dx}")
        if self.periodic and self.kind not in _CAN_WRAP | {FamilyKind.LOOP}:
            raise InvalidFamilyParams(f"{self.kind.value} has no periodic variant")

    @property
    def is_line(self) -> bool:
        return self.kind in _LINE_LIKE and self.kind is not FamilyKind.INTERSECTION


def _stencil_edges(n, offsets, periodic):
    """Edges ``k -> k + off`` with the given weight for every ``(off, w)``;
    edges leaving the line are dropped unless ``periodic``."""
    edges = []
    for off, w in offsets:
        for k in range(n):
            t = k + off
            if periodic:
                t %= n
            elif not 0 <= t < n:
                continue
            edges.append((k, t, w))
    return edges


def _upwind_offsets(offsets, v):
    # flow right-to-left for v < 0: mirror the stencil, use |v|
    if v > 0:
        return offsets
    return [(-off, w) for off, w in offsets]


def generate(family: GraphFamily) -> DirectedGraph:
    """Build the graph for ``family``; deterministic in its parameters."""
    kind, n, v, dx = family.kind, family.n, float(family.v), float(family.dx)
    a = abs(v)
    labels = None
    if kind in (FamilyKind.UPWIND_LINE, FamilyKind.LOOP):
        offs = _upwind_offsets([(1, a / dx)], v)
        edges = _stencil_edges(n, offs, family.periodic)
    elif kind is FamilyKind.CENTRAL_LINE:
        edges = _stencil_edges(n, [(1, v / (2 * dx)), (-1, -v / (2 * dx))], family.periodic)
    elif kind is FamilyKind.LUD_LINE:
        offs = _upwind_offsets([(1, 2 * a / dx), (2, -a / (2 * dx))], v)
        edges = _stencil_edges(n, offs, family.periodic)
    elif kind is FamilyKind.NONUNIFORM_LINE:
        # node k sits at x = k*dx/2; integer and half-index nodes alternate
        edges = _stencil_edges(
            n, [(2, v / (3 * dx)), (-1, -4 * v / (3 * dx))], family.periodic
        )
        labels = [f"u_{k // 2}" if k % 2 == 0 else f"u_{k // 2}+1/2" for k in range(n)]
    elif kind is FamilyKind.INTERSECTION:
        edges, labels = _intersection(n, a / dx)
    elif kind is FamilyKind.STAR:
        edges = [(k, 0, 1.0) for k in range(1, n)]
    elif kind is FamilyKind.COMPLETE:
        edges = [(s, t, 1.0) for s in range(n) for t in range(n) if s != t]
    else:  # pragma: no cover
        raise InvalidFamilyParams(f"unknown family {kind}")
    return DirectedGraph(n, tuple(edges), labels)


def _intersection(n, w):
    """Two upwind lanes of length ``lane`` merging into node ``2*lane``, which
    feeds an outgoing lane carrying both flows (weight ``2w``).

    Node order: lane A, lane B, merge node, outgoing lane.
    """
    lane = max(1, (n - 1) // 3)
    merge = 2 * lane
    edges = []
    labels = []
    for start, tag in ((0, "a"), (lane, "b")):
        for k in range(lane):
            labels.append(f"lane_{tag}_{k}")
            nxt = start + k + 1 if k < lane - 1 else merge
            edges.append((start + k, nxt, w))
    labels.append("merge")
    for k in range(merge, n - 1):
        edges.append((k, k + 1, 2 * w))
    labels.extend(f"out_{k}" for k in range(n - merge - 1))
    return edges, labels


def node_positions(family: GraphFamily) -> np.ndarray:
    """Spatial coordinate of each node for line families.

    Open lines span ``x_i = i*dx``; the non-uniform line uses half steps.
    Non-line families get their node index.
    """
    idx = np.arange(family.n, dtype=float)
    if family.kind is FamilyKind.NONUNIFORM_LINE:
        return idx * family.dx / 2
    if family.is_line:
        return idx * family.dx
    return idx
