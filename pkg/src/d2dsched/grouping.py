"""Conflict graph over D2D pairs and partition into sharing groups."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from d2dsched.model import SpatialRealization


@dataclass(frozen=True)
class ConflictGraph:
    """Symmetric adjacency over D2D pairs; an edge marks potential interference."""

    adjacency: np.ndarray      # (K2, K2) boolean, symmetric, no self-loops
    interference_radius_m: float

    def __post_init__(self):
        adj = self.adjacency
        if adj.ndim != 2 or adj.shape[0] != adj.shape[1]:
            raise ValueError("adjacency must be square")
        if np.any(adj != adj.T) or np.any(np.diag(adj)):
            raise ValueError("adjacency must be symmetric with no self-loops")

    @property
    def n_vertices(self) -> int:
        return self.adjacency.shape[0]

    def degree(self) -> np.ndarray:
        return self.adjacency.sum(axis=1)


@dataclass(frozen=True)
class Group:
    members: tuple[int, ...]   # contender ids
    nu: float                  # fairness factor: 1 for cellular singletons, 1/2 for D2D groups

    @property
    def size(self) -> int:
        return len(self.members)


@dataclass(frozen=True)
class GroupStructure:
    groups: tuple[Group, ...]

    def __post_init__(self):
        seen: set[int] = set()
        for g in self.groups:
            if g.size < 1:
                raise ValueError("empty group")
            if seen & set(g.members):
                raise ValueError("groups must partition the contender set")
            seen |= set(g.members)

    @property
    def n_groups(self) -> int:
        return len(self.groups)

    @property
    def sizes(self) -> np.ndarray:
        return np.array([g.size for g in self.groups])

    @property
    def nus(self) -> np.ndarray:
        return np.array([g.nu for g in self.groups])

    @property
    def n_contenders(self) -> int:
        return int(self.sizes.sum())

    def group_of(self) -> dict[int, int]:
        return {m: gi for gi, g in enumerate(self.groups) for m in g.members}


def build_conflict_graph(spatial: SpatialRealization, radius_m: float) -> ConflictGraph:
    """Edge between two pairs iff their centroid distance is below the radius."""
    xy = spatial.centroid_xy()
    if xy.shape[0] < 1:
        raise ValueError("need at least one D2D pair")
    diff = xy[:, None, :] - xy[None, :, :]
    dist = np.hypot(diff[..., 0], diff[..., 1])
    adj = dist < radius_m
    np.fill_diagonal(adj, False)
    return ConflictGraph(adj, radius_m)


def greedy_coloring(graph: ConflictGraph, nu: float = 0.5) -> GroupStructure:
    """Welsh-Powell greedy coloring: vertices in descending-degree order (ties by
    lower id) take the smallest color absent among colored neighbors."""
    n = graph.n_vertices
    deg = graph.degree()
    order = np.lexsort((np.arange(n), -deg))
    color = np.full(n, -1)
    for v in order:
        used = {color[u] for u in np.flatnonzero(graph.adjacency[v]) if color[u] >= 0}
        c = 0
        while c in used:
            c += 1
        color[v] = c
    groups = []
    for c in range(color.max() + 1):
        members = tuple(int(v) for v in np.flatnonzero(color == c))
        groups.append(Group(members, nu))
    return GroupStructure(tuple(groups))


def fixed_grouping(sizes, n_contenders: int | None = None, nu: float = 0.5,
                   id_offset: int = 0) -> GroupStructure:
    """Bypass geometry: assign contenders to groups of the stated sizes in id order."""
    sizes = list(sizes)
    if not sizes or any(s < 1 for s in sizes):
        raise ValueError("sizes must be nonempty with entries >= 1")
    total = sum(sizes)
    if n_contenders is not None and total != n_contenders:
        raise ValueError(f"sizes sum to {total}, expected {n_contenders}")
    groups = []
    nxt = id_offset
    for s in sizes:
        groups.append(Group(tuple(range(nxt, nxt + s)), nu))
        nxt += s
    return GroupStructure(tuple(groups))


def with_cellular_singletons(d2d_structure: GroupStructure, K1: int) -> GroupStructure:
    """Mixed-system structure: K1 cellular singleton groups (nu=1, contender ids
    0..K1-1) followed by the D2D groups (whose member ids already start at K1)."""
    cell = tuple(Group((k,), 1.0) for k in range(K1))
    return GroupStructure(cell + d2d_structure.groups)
