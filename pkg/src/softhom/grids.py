"""Structured multilinear (Q1) grids shared by the cell and domain solvers.

Meshes are uniform grids on an axis-aligned cube.  Periodic meshes identify
opposite faces so a grid with n cells per side carries exactly n**d nodes;
bounded meshes keep (n+1)**d nodes.  All integration uses tensor-product
2-point Gauss quadrature.
"""

import itertools
from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.sparse as sp

_GAUSS_1D = (0.5 - 0.5 / np.sqrt(3.0), 0.5 + 0.5 / np.sqrt(3.0))


def corner_offsets(dimension):
    """Binary corner multi-indices of the reference cube, last axis fastest."""
    return np.array(list(itertools.product((0, 1), repeat=dimension)), dtype=np.int64)


def reference_quad_points(dimension):
    """Tensor-product 2-point Gauss nodes on [0,1]^d, one row per point."""
    return np.array(list(itertools.product(_GAUSS_1D, repeat=dimension)))


def shape_values(dimension, points):
    """Q1 shape functions at reference points, shape (npts, 2**d)."""
    corners = corner_offsets(dimension)
    pts = np.atleast_2d(points)
    factors = np.where(corners[None, :, :] == 1, pts[:, None, :], 1.0 - pts[:, None, :])
    return factors.prod(axis=2)


def shape_gradients(dimension, points):
    """Reference gradients of the Q1 shape functions, shape (npts, 2**d, d)."""
    corners = corner_offsets(dimension)
    pts = np.atleast_2d(points)
    factors = np.where(corners[None, :, :] == 1, pts[:, None, :], 1.0 - pts[:, None, :])
    signs = 2.0 * corners - 1.0
    grads = np.empty((pts.shape[0], corners.shape[0], dimension))
    for axis in range(dimension):
        others = [a for a in range(dimension) if a != axis]
        partial = factors[:, :, others].prod(axis=2) if others else np.ones(factors.shape[:2])
        grads[:, :, axis] = signs[None, :, axis] * partial
    return grads


class StructuredMesh:
    """Uniform Q1 grid on [origin, origin+side]^d.

    With ``periodic=True`` the grid is the unit cell with opposite faces
    identified (origin 0, side 1); node (n, j) and node (0, j) are one
    degree of freedom.
    """

    def __init__(self, dimension, cells_per_side, periodic=False, origin=0.0, side=1.0):
        if dimension not in (2, 3):
            raise ValueError(f"dimension must be 2 or 3, got {dimension}")
        if cells_per_side < 2:
            raise ValueError(f"cells_per_side must be >= 2, got {cells_per_side}")
        if side <= 0:
            raise ValueError("side length must be positive")
        if periodic and (origin != 0.0 or side != 1.0):
            raise ValueError("periodic meshes discretize the unit cell [0,1)^d")
        self.dimension = int(dimension)
        self.cells_per_side = int(cells_per_side)
        self.periodic = bool(periodic)
        self.origin = float(origin)
        self.side = float(side)

    @property
    def h(self):
        return self.side / self.cells_per_side

    @property
    def nodes_per_side(self):
        return self.cells_per_side if self.periodic else self.cells_per_side + 1

    @property
    def n_nodes(self):
        return self.nodes_per_side ** self.dimension

    @property
    def n_elements(self):
        return self.cells_per_side ** self.dimension

    @property
    def node_grid_shape(self):
        return (self.nodes_per_side,) * self.dimension

    def __eq__(self, other):
        return (
            isinstance(other, StructuredMesh)
            and self.dimension == other.dimension
            and self.cells_per_side == other.cells_per_side
            and self.periodic == other.periodic
            and self.origin == other.origin
            and self.side == other.side
        )

    def __hash__(self):
        return hash((self.dimension, self.cells_per_side, self.periodic, self.origin, self.side))

    @cached_property
    def node_coords(self):
        axes = [self.origin + self.h * np.arange(self.nodes_per_side)] * self.dimension
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=1)

    @cached_property
    def element_multi_index(self):
        axes = [np.arange(self.cells_per_side)] * self.dimension
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=1)

    @cached_property
    def element_origins(self):
        return self.origin + self.h * self.element_multi_index

    @cached_property
    def element_conn(self):
        """Node ids of each element's corners, shape (nel, 2**d)."""
        corners = corner_offsets(self.dimension)
        idx = self.element_multi_index[:, None, :] + corners[None, :, :]
        if self.periodic:
            idx = idx % self.cells_per_side
        return np.ravel_multi_index(np.moveaxis(idx, 2, 0), self.node_grid_shape)

    @cached_property
    def quad_offsets(self):
        return reference_quad_points(self.dimension)

    @property
    def n_quad(self):
        return self.quad_offsets.shape[0]

    @property
    def quad_weight(self):
        """Physical weight of one quadrature point (all points are equal)."""
        return (self.h / 2.0) ** self.dimension

    @cached_property
    def quad_coords(self):
        """Quadrature point coordinates, shape (nel, nq, d)."""
        return self.element_origins[:, None, :] + self.h * self.quad_offsets[None, :, :]

    @cached_property
    def _shape_at_quad(self):
        return shape_values(self.dimension, self.quad_offsets)

    @cached_property
    def _grad_at_quad(self):
        return shape_gradients(self.dimension, self.quad_offsets) / self.h

    @cached_property
    def _grad_at_corners(self):
        pts = corner_offsets(self.dimension).astype(float)
        return shape_gradients(self.dimension, pts) / self.h

    def gather(self, values):
        """Corner values per element: (nel, 2**d) or (nel, 2**d, ncomp)."""
        return np.asarray(values)[self.element_conn]

    def eval_at_quad(self, values):
        """Interpolate nodal values at quadrature points: (nel, nq[, ncomp])."""
        gathered = self.gather(values)
        if gathered.ndim == 2:
            return np.einsum("qc,ec->eq", self._shape_at_quad, gathered)
        return np.einsum("qc,ecx->eqx", self._shape_at_quad, gathered)

    def grad_at_quad(self, values):
        """Q1 gradients at quadrature points.

        Scalar input -> (nel, nq, d); vector input -> (nel, nq, ncomp, d)
        with layout [component, axis] = du^comp/dx_axis.
        """
        gathered = self.gather(values)
        if gathered.ndim == 2:
            return np.einsum("qcd,ec->eqd", self._grad_at_quad, gathered)
        return np.einsum("qcd,ecx->eqxd", self._grad_at_quad, gathered)

    def grad_at_nodes(self, values):
        """Gradient recovery: element-corner gradients averaged per node."""
        gathered = self.gather(values)
        vec = gathered.ndim == 3
        if vec:
            corner_grads = np.einsum("qcd,ecx->eqxd", self._grad_at_corners, gathered)
            out = np.zeros(values.shape[:1] + corner_grads.shape[2:])
        else:
            corner_grads = np.einsum("qcd,ec->eqd", self._grad_at_corners, gathered)
            out = np.zeros(values.shape[:1] + (self.dimension,))
        counts = np.zeros(values.shape[0])
        flat_conn = self.element_conn.ravel()
        np.add.at(out, flat_conn, corner_grads.reshape((-1,) + corner_grads.shape[2:]))
        np.add.at(counts, flat_conn, 1.0)
        sl = (slice(None),) + (None,) * (out.ndim - 1)
        return out / counts[sl]

    def boundary_node_mask(self):
        if self.periodic:
            return np.zeros(self.n_nodes, dtype=bool)
        nside = self.nodes_per_side
        idx = np.unravel_index(np.arange(self.n_nodes), self.node_grid_shape)
        mask = np.zeros(self.n_nodes, dtype=bool)
        for axis_idx in idx:
            mask |= (axis_idx == 0) | (axis_idx == nside - 1)
        return mask

    def boundary_distance(self, points=None):
        """Distance to the cube boundary (meaningless for periodic meshes)."""
        pts = self.node_coords if points is None else np.asarray(points)
        lo = pts - self.origin
        hi = (self.origin + self.side) - pts
        return np.minimum(lo.min(axis=-1), hi.min(axis=-1))


class PeriodicMesh(StructuredMesh):
    """Unit-cell grid with periodic node identification."""

    def __init__(self, dimension, cells_per_side):
        super().__init__(dimension, cells_per_side, periodic=True)


class BoxMesh(StructuredMesh):
    """Grid on a bounded axis-aligned cube with Dirichlet-capable boundary."""

    def __init__(self, dimension, cells_per_side, origin=0.0, side=1.0):
        super().__init__(dimension, cells_per_side, periodic=False, origin=origin, side=side)


@dataclass
class DiscreteVectorField:
    """Nodal d-component field on a structured mesh; shape (n_nodes, ncomp)."""

    mesh: StructuredMesh
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape[0] != self.mesh.n_nodes:
            raise ValueError(
                f"values carry {self.values.shape[0]} nodes, mesh has {self.mesh.n_nodes}"
            )
        if self.values.ndim == 1:
            self.values = self.values[:, None]

    @property
    def n_components(self):
        return self.values.shape[1]

    def copy(self):
        return DiscreteVectorField(self.mesh, self.values.copy())

    def as_grid(self):
        """View shaped (*node_grid_shape, ncomp)."""
        return self.values.reshape(self.mesh.node_grid_shape + (self.n_components,))


def local_dof_ids(conn, ncomp):
    """Expand node connectivity to dof connectivity (node-major, comp-fastest)."""
    return (conn[:, :, None] * ncomp + np.arange(ncomp)[None, None, :]).reshape(conn.shape[0], -1)


def element_matrices(dimension, base_tensor, h):
    """Per-quad-point local stiffness blocks for a constant 4-index tensor.

    Returns (nq, ndl, ndl) with local dof = corner*d + component.  The block
    for point q is B[(a,x),(b,z)] = sum_{i,k} base[i,k,x,z] G[a,i] G[b,k].
    """
    grads = shape_gradients(dimension, reference_quad_points(dimension)) / h
    blocks = np.einsum("ikxz,qai,qbk->qaxbz", base_tensor, grads, grads)
    ndl = blocks.shape[1] * blocks.shape[2]
    blocks = blocks.reshape(blocks.shape[0], ndl, ndl)
    # elasticity major symmetry makes each block symmetric; enforce exactly
    return 0.5 * (blocks + blocks.transpose(0, 2, 1))


def assemble_weighted_stiffness(mesh, base_tensor, scalar_at_quad, chunk=65536):
    """Galerkin matrix of (u, w) -> sum_qp weight * s * base : grad u : grad w.

    ``scalar_at_quad(points)`` returns the scalar coefficient (weight field
    times any scalar modulation of the tensor) at physical points; quadrature
    weights are applied here.  Assembly is chunked and deterministic.
    """
    d = mesh.dimension
    blocks = element_matrices(d, base_tensor, mesh.h)
    ndl = blocks.shape[1]
    edof = local_dof_ids(mesh.element_conn, d)
    ndof = mesh.n_nodes * d
    w = mesh.quad_weight
    offsets = mesh.quad_offsets
    matrix = sp.csr_matrix((ndof, ndof))
    for start in range(0, mesh.n_elements, chunk):
        stop = min(start + chunk, mesh.n_elements)
        pts = mesh.element_origins[start:stop, None, :] + mesh.h * offsets[None, :, :]
        s = w * scalar_at_quad(pts.reshape(-1, d)).reshape(stop - start, -1)
        data = np.einsum("eq,qij->eij", s, blocks)
        rows = np.broadcast_to(edof[start:stop, :, None], data.shape)
        cols = np.broadcast_to(edof[start:stop, None, :], data.shape)
        matrix = matrix + sp.coo_matrix(
            (data.ravel(), (rows.ravel(), cols.ravel())), shape=(ndof, ndof)
        ).tocsr()
    matrix.sum_duplicates()
    return matrix


def assemble_affine_load(mesh, base_tensor, scalar_at_quad, j, beta, chunk=65536):
    """Load L(w) = -sum_qp weight * s * base[i, j, x, beta] dW^x/dx_i.

    This is the weak divergence of the weighted tensor column (j, beta),
    i.e. the right-hand side obtained by moving an affine profile with unit
    gradient e^beta along axis j to the right-hand side.
    """
    d = mesh.dimension
    grads = shape_gradients(d, reference_quad_points(d)) / mesh.h
    # column vector per quad point over local dofs (a, x)
    col = np.einsum("ix,qai->qax", base_tensor[:, j, :, beta], grads)
    col = col.reshape(col.shape[0], -1)
    edof = local_dof_ids(mesh.element_conn, d)
    w = mesh.quad_weight
    offsets = mesh.quad_offsets
    load = np.zeros(mesh.n_nodes * d)
    for start in range(0, mesh.n_elements, chunk):
        stop = min(start + chunk, mesh.n_elements)
        pts = mesh.element_origins[start:stop, None, :] + mesh.h * offsets[None, :, :]
        s = w * scalar_at_quad(pts.reshape(-1, d)).reshape(stop - start, -1)
        contrib = -np.einsum("eq,qa->ea", s, col)
        np.add.at(load, edof[start:stop].ravel(), contrib.ravel())
    return load
