"""Recover antisymmetric edge fluxes from conservative residuals.

Given per-DOF residuals Phi_sigma and boundary-flux shares fhat_sigma^b on an
element whose DOFs form a connected graph, set Psi = Phi - fhat^b.  If the
Psi sum to zero there exist edge fluxes with A fhat = Psi (A the incidence
matrix); the minimum-norm choice is fhat = A^T L^+ Psi with L = A A^T the
graph Laplacian.  This exhibits an equivalent flux-form update for any
locally conservative residual scheme.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConservationError, GraphStructureError
from .mesh import EdgeFluxSet, ElementGraph, element_graph

SUM_TOLERANCE = 1e-10


@dataclass
class GraphLaplacian:
    """L = A A^T with a cached solver on the complement of span{1}."""

    graph: ElementGraph
    matrix: np.ndarray

    def solve(self, rhs):
        """Apply L^+ to rhs columns (rhs must be orthogonal to the ones vector).

        Projects, solves the grounded system with DOF 0 pinned to zero, then
        re-projects; exact on the image space without an eigendecomposition.
        """
        rhs = np.asarray(rhs, dtype=float)
        squeeze = rhs.ndim == 1
        if squeeze:
            rhs = rhs[:, None]
        rhs = rhs - rhs.mean(axis=0, keepdims=True)
        y = np.zeros_like(rhs)
        if self.graph.ndof > 1:
            y[1:] = np.linalg.solve(self.matrix[1:, 1:], rhs[1:])
        y = y - y.mean(axis=0, keepdims=True)
        return y[:, 0] if squeeze else y


def build_laplacian(graph):
    """Graph Laplacian of an element graph; rank ndof-1 when connected."""
    if not graph.is_connected():
        raise GraphStructureError("flux recovery needs a connected element graph")
    A = graph.incidence
    return GraphLaplacian(graph, A @ A.T)


@dataclass
class RecoveryProblem:
    """Right-hand side Psi_sigma = Phi_sigma - fhat_sigma^b of one element.

    ``scale`` is the magnitude the conservation precondition is judged
    against; building from residuals uses their size, so elements whose Psi
    cancels to rounding noise are still accepted.
    """

    psi: np.ndarray
    scale: float | None = None

    def __post_init__(self):
        self.psi = np.atleast_2d(np.asarray(self.psi, dtype=float))
        if self.scale is None:
            self.scale = max(float(np.abs(self.psi).max()), 1e-300)

    @classmethod
    def from_residuals(cls, phi, boundary_parts):
        phi = np.asarray(phi, dtype=float)
        boundary_parts = np.asarray(boundary_parts, dtype=float)
        scale = max(float(np.abs(phi).max()), float(np.abs(boundary_parts).max()), 1e-300)
        return cls(phi - boundary_parts, scale=scale)


def recover_fluxes(graph, problem, laplacian=None):
    """Minimum-norm edge fluxes with A fhat = Psi (componentwise).

    Raises ConservationError when the residual sum exceeds the relative
    tolerance: such residuals admit no flux form at all.
    """
    psi = problem.psi
    defect = psi.sum(axis=0)
    if np.abs(defect).max() > SUM_TOLERANCE * problem.scale:
        raise ConservationError(
            f"residuals sum to {defect}, not zero; no flux form exists", defect=defect
        )
    if laplacian is None:
        laplacian = build_laplacian(graph)
    y = laplacian.solve(psi)
    return EdgeFluxSet(graph, graph.incidence.T @ y)


_SEGMENT = element_graph("segment")
_SEGMENT_LAPLACIAN = None


def reconstruct_scheme(mesh, states, residuals):
    """Rewrite a conservative residual set in flux form and return its update.

    Recovers one edge flux per 1D element (segment graphs) and rebuilds the
    per-DOF increments as sum over owning elements of (signed edge fluxes +
    boundary shares).  The result equals residuals.scatter_to_dofs up to the
    recovery tolerance; each returned interface flux is shared by the two
    adjacent elements up to sign through the boundary parts.

    Returns (increments, edge_fluxes) with increments shaped (ndof, p) and
    edge_fluxes (ncell, p).
    """
    global _SEGMENT_LAPLACIAN
    if _SEGMENT_LAPLACIAN is None:
        _SEGMENT_LAPLACIAN = build_laplacian(_SEGMENT)

    ncell = residuals.ncell
    p = residuals.phi.shape[2]
    edge_fluxes = np.empty((ncell, p))
    for k in range(ncell):
        problem = RecoveryProblem.from_residuals(residuals.phi[k], residuals.boundary_parts[k])
        edge_fluxes[k] = recover_fluxes(_SEGMENT, problem, _SEGMENT_LAPLACIAN).values[0]

    increments = np.zeros((mesh.ndof, p))
    np.add.at(increments, residuals.cell_dofs[:, 0], edge_fluxes + residuals.boundary_parts[:, 0])
    np.add.at(increments, residuals.cell_dofs[:, 1], -edge_fluxes + residuals.boundary_parts[:, 1])
    return increments, edge_fluxes
