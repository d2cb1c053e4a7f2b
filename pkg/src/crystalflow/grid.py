"""Uniform grid on (-1/2, 1/2)^n, Kuhn simplex tessellation, discrete operators.

Scalar fields are plain numpy arrays of shape (M+1,)^n holding one value per
node; node (i_1, ..., i_n) sits at coordinates (i_k/M - 1/2).  Flat node
indices are row-major (C order, lexicographic multi-index order).

Vector fields come in two layouts:

* per node (FDM): shape (M+1,)^n + (n,)
* per element (FEM/P0): shape (n!,) + (M,)^n + (n,), axis 0 indexing the
  simplex type within each cell.

The tessellation splits each cell into n! simplices indexed by the
permutations of (1, ..., n) in lexicographic order: starting from the cell
corner, the vertices of simplex p are reached by incrementing coordinate
p(1), then p(2), etc.  Every simplex therefore contains the cell's main
diagonal, and the per-type P1 gradient has the triangular form

    grad[p(j)] = (v_{j+1} - v_j) / dx.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class Grid:
    """Uniform node grid with M cells per axis on Omega = (-1/2, 1/2)^n."""

    n: int
    m: int

    def __post_init__(self):
        if self.n not in (1, 2, 3):
            raise ValueError(f"unsupported dimension {self.n}")
        if self.m < 1:
            raise ValueError("resolution must be at least 1")

    @property
    def dx(self):
        return 1.0 / self.m

    @property
    def shape(self):
        return (self.m + 1,) * self.n

    @property
    def num_nodes(self):
        return (self.m + 1) ** self.n

    def axis_coords(self):
        """1d coordinate array shared by all axes."""
        return np.arange(self.m + 1) / self.m - 0.5

    def meshgrid(self):
        """List of n coordinate arrays of shape self.shape."""
        c = self.axis_coords()
        return np.meshgrid(*([c] * self.n), indexing="ij")

    def sample(self, fn):
        """Evaluate fn(x) at every node; fn takes an (..., n) array."""
        pts = np.stack(self.meshgrid(), axis=-1)
        return np.asarray(fn(pts), dtype=float)


def kuhn_tessellate(n):
    """Vertex offsets of the n! reference simplices on [0, 1]^n.

    Returns an int array of shape (n!, n+1, n); simplex m lists its n+1
    vertices starting at the origin corner and ending at the opposite corner.
    Permutations are enumerated in lexicographic order.
    """
    if n not in (1, 2, 3):
        raise ValueError(f"unsupported dimension {n}")
    perms = list(itertools.permutations(range(n)))
    simplices = np.zeros((len(perms), n + 1, n), dtype=np.int64)
    for m, p in enumerate(perms):
        for j, axis in enumerate(p):
            simplices[m, j + 1] = simplices[m, j]
            simplices[m, j + 1, axis] += 1
    return simplices


@dataclass(frozen=True)
class KuhnMesh:
    """The n!*M^n simplex tessellation of the grid."""

    grid: Grid
    simplices: np.ndarray = field(default=None)  # (n!, n+1, n) vertex offsets
    perms: np.ndarray = field(default=None)      # (n!, n) permutations

    def __post_init__(self):
        n = self.grid.n
        if self.simplices is None:
            object.__setattr__(self, "simplices", kuhn_tessellate(n))
        if self.perms is None:
            perms = np.array(list(itertools.permutations(range(n))), dtype=np.int64)
            object.__setattr__(self, "perms", perms)

    @property
    def num_types(self):
        return self.simplices.shape[0]

    @property
    def num_elements(self):
        return self.num_types * self.grid.m ** self.grid.n

    @property
    def element_volume(self):
        return self.grid.dx ** self.grid.n / self.num_types

    def element_field_shape(self, ncomp=None):
        ncomp = self.grid.n if ncomp is None else ncomp
        return (self.num_types,) + (self.grid.m,) * self.grid.n + (ncomp,)


def _cell_vertex_view(v, offset, m):
    """View of the node array v at cell corners shifted by a vertex offset."""
    ix = tuple(slice(o, o + m) for o in offset)
    return v[ix]


def grad_p1(v, mesh):
    """Piecewise constant gradient of the P1 interpolant of node values v.

    Returns a per-element vector field of shape (n!,) + (M,)^n + (n,).
    """
    g = mesh.grid
    out = np.empty(mesh.element_field_shape())
    inv_dx = 1.0 / g.dx
    for m in range(mesh.num_types):
        p = mesh.perms[m]
        prev = _cell_vertex_view(v, mesh.simplices[m, 0], g.m)
        for j in range(g.n):
            cur = _cell_vertex_view(v, mesh.simplices[m, j + 1], g.m)
            out[m, ..., p[j]] = (cur - prev) * inv_dx
            prev = cur
    return out


def div_p0(d, mesh):
    """Discrete divergence of a per-element field, adjoint to grad_p1.

    Defined by <div d, v>_lump = -<d, grad_p1 v>_elem with the mass-lumped
    node inner product dx^n * sum_i u_i v_i and the per-element inner product
    weighted by the simplex volume dx^n/n!.
    """
    g = mesh.grid
    out = np.zeros(g.shape)
    # vol_T/dx^n = 1/n!; grad phi_j|_T = (e_{p(j-1)} - e_{p(j)})/dx
    coef = 1.0 / (mesh.num_types * g.dx)
    for m in range(mesh.num_types):
        p = mesh.perms[m]
        for j in range(g.n + 1):
            contrib = np.zeros((g.m,) * g.n)
            if j > 0:
                contrib += d[m, ..., p[j - 1]]
            if j <= g.n - 1:
                contrib -= d[m, ..., p[j]]
            ix = tuple(slice(o, o + g.m) for o in mesh.simplices[m, j])
            out[ix] -= coef * contrib
    return out


def grad_fdm(v, dx):
    """Forward-difference gradient per node; zero on each top boundary face.

    The zero row corresponds to a mirrored ghost value (homogeneous Neumann).
    """
    n = v.ndim
    out = np.zeros(v.shape + (n,))
    inv_dx = 1.0 / dx
    for k in range(n):
        lo = [slice(None)] * n
        hi = [slice(None)] * n
        lo[k] = slice(0, -1)
        hi[k] = slice(1, None)
        out[tuple(lo) + (k,)] = (v[tuple(hi)] - v[tuple(lo)]) * inv_dx
    return out


def div_fdm(d, dx):
    """Backward-difference divergence, the exact negative adjoint of grad_fdm.

    div(grad v) is the standard 2n+1-point Laplacian with homogeneous Neumann
    closure.
    """
    n = d.shape[-1]
    out = np.zeros(d.shape[:-1])
    inv_dx = 1.0 / dx
    for k in range(n):
        comp = d[..., k]
        lo = [slice(None)] * n
        lo[k] = slice(0, -1)
        out[tuple(lo)] += comp[tuple(lo)] * inv_dx
        hi = [slice(None)] * n
        hi[k] = slice(1, None)
        out[tuple(hi)] -= comp[tuple(lo)] * inv_dx
    return out


def node_inner(u, v, grid):
    """Mass-lumped inner product dx^n * sum_i u_i v_i."""
    return grid.dx ** grid.n * float(np.sum(u * v))


def element_inner(d, e, mesh):
    """Volume-weighted per-element inner product."""
    return mesh.element_volume * float(np.sum(d * e))


def node_vector_inner(d, e, grid):
    """Per-node vector field inner product dx^n * sum_i d_i . e_i."""
    return grid.dx ** grid.n * float(np.sum(d * e))


# --------------------------------------------------------------- snapshots

def save_field(path, v):
    """Write a node field as text: header ``lvl <n> <M>``, one value per line."""
    v = np.asarray(v, dtype=float)
    n = v.ndim
    m = v.shape[0] - 1
    with open(path, "w") as f:
        f.write(f"lvl {n} {m}\n")
        for val in v.ravel(order="C"):
            f.write(f"{val:.17e}\n")


def load_field(path):
    """Read a node field written by save_field."""
    with open(path) as f:
        header = f.readline().split()
        if len(header) != 3 or header[0] != "lvl":
            raise ValueError(f"{path}: not a level set snapshot")
        n, m = int(header[1]), int(header[2])
        vals = np.array([float(line) for line in f])
    if vals.size != (m + 1) ** n:
        raise ValueError(f"{path}: expected {(m + 1) ** n} values, got {vals.size}")
    return vals.reshape((m + 1,) * n)
