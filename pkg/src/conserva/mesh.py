"""1D meshes with dual control volumes, and per-element DOF graphs.

Meshes and graphs are immutable after construction and freely shareable.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, GraphStructureError


@dataclass
class Mesh1D:
    """Nodes, cells and node-centred dual control volumes.

    ``boundary`` is "periodic" or "transmissive".  Periodic meshes identify
    the last node with the first, so the DOF count equals the cell count;
    transmissive meshes keep every node as a DOF with half-width control
    volumes at the two ends.
    """

    nodes: np.ndarray
    boundary: str = "periodic"

    def __post_init__(self):
        self.nodes = np.asarray(self.nodes, dtype=float)
        if self.nodes.ndim != 1 or len(self.nodes) < 3:
            raise ConfigError("need at least 3 nodes (2 cells)")
        dx = np.diff(self.nodes)
        if not (dx > 0).all():
            raise ConfigError("nodes must be strictly increasing")
        if self.boundary not in ("periodic", "transmissive"):
            raise ConfigError(f"unknown boundary kind {self.boundary!r}")

        self.ncell = len(self.nodes) - 1
        self.cell_sizes = dx
        if self.boundary == "periodic":
            self.ndof = self.ncell
            self.dof_x = self.nodes[:-1]
            left = np.roll(dx, 1)  # cell to the left of each dof, wrapped
            self.volumes = 0.5 * (left + dx)
            dofs = np.arange(self.ncell)
            self.cell_dofs = np.stack([dofs, (dofs + 1) % self.ncell], axis=1)
        else:
            self.ndof = self.ncell + 1
            self.dof_x = self.nodes
            vol = np.empty(self.ndof)
            vol[0] = 0.5 * dx[0]
            vol[-1] = 0.5 * dx[-1]
            vol[1:-1] = 0.5 * (dx[:-1] + dx[1:])
            self.volumes = vol
            dofs = np.arange(self.ncell)
            self.cell_dofs = np.stack([dofs, dofs + 1], axis=1)

    @property
    def length(self):
        return float(self.nodes[-1] - self.nodes[0])

    @property
    def cell_centers(self):
        return 0.5 * (self.nodes[:-1] + self.nodes[1:])

    @property
    def periodic(self):
        return self.boundary == "periodic"


def uniform_mesh(a, b, n, boundary="periodic"):
    """Equispaced mesh of n cells on [a, b]."""
    if not b > a:
        raise ConfigError(f"need a < b, got [{a}, {b}]")
    if n < 2:
        raise ConfigError(f"need at least 2 cells, got {n}")
    return Mesh1D(np.linspace(a, b, n + 1), boundary=boundary)


@dataclass
class ElementGraph:
    """DOF set of one element plus its directed-edge incidence structure.

    ``edges`` lists the direct edges (tail, head); the incidence matrix has
    one row per DOF and one column per direct edge, +1 at the tail and -1 at
    the head.
    """

    ndof: int
    edges: tuple
    incidence: np.ndarray = field(init=False)

    def __post_init__(self):
        self.edges = tuple((int(a), int(b)) for a, b in self.edges)
        A = np.zeros((self.ndof, len(self.edges)))
        for k, (a, b) in enumerate(self.edges):
            if a == b or not (0 <= a < self.ndof and 0 <= b < self.ndof):
                raise ConfigError(f"bad edge ({a}, {b}) for {self.ndof} DOFs")
            A[a, k] = 1.0
            A[b, k] = -1.0
        self.incidence = A

    @property
    def nedges(self):
        return len(self.edges)

    def epsilon(self, i, j):
        """Orientation sign: +1 if i->j is direct, -1 if j->i is, else 0."""
        if (i, j) in self.edges:
            return 1
        if (j, i) in self.edges:
            return -1
        return 0

    def is_connected(self):
        seen = {0}
        frontier = [0]
        adj = [[] for _ in range(self.ndof)]
        for a, b in self.edges:
            adj[a].append(b)
            adj[b].append(a)
        while frontier:
            cur = frontier.pop()
            for nxt in adj[cur]:
                if nxt not in seen:
                    seen.add(nxt)
                    frontier.append(nxt)
        return len(seen) == self.ndof


def element_graph(kind, n=None):
    """Build one of the supported element graphs.

    kind: "segment" (2 DOFs, 1 edge), "path" (n DOFs chained, pass n >= 2),
    or "triangle" (3 DOFs, cyclic edges 0->1, 1->2, 2->0).
    """
    if kind == "segment":
        return ElementGraph(2, ((0, 1),))
    if kind == "path":
        if n is None or n < 2:
            raise ConfigError("path graphs need n >= 2 DOFs")
        return ElementGraph(n, tuple((i, i + 1) for i in range(n - 1)))
    if kind == "triangle":
        return ElementGraph(3, ((0, 1), (1, 2), (2, 0)))
    raise ConfigError(f"unknown element graph kind {kind!r}")


@dataclass
class EdgeFluxSet:
    """One flux value per direct edge; the reverse orientation is its negation."""

    graph: ElementGraph
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape[0] != self.graph.nedges:
            raise ConfigError("one flux value per direct edge required")
        self._index = {edge: k for k, edge in enumerate(self.graph.edges)}

    def between(self, i, j):
        """Signed flux from DOF i to DOF j (antisymmetric by construction)."""
        if (i, j) in self._index:
            return self.values[self._index[(i, j)]]
        if (j, i) in self._index:
            return -self.values[self._index[(j, i)]]
        raise ConfigError(f"no edge between DOFs {i} and {j}")
