"""Split Bregman solver for the anisotropic total variation resolvent.

Solves min_v (mu/2) ||v - u||^2 + ||sigma(grad v)||_1 by iterating

    v   <- Gauss-Seidel passes of (mu - lam*Lap) v = mu*u + lam*div(b - d)
    d_i <- shrink_sigma((grad v + b)_i, 1/lam)
    b   <- b + grad v - d

with warm-started d, b across calls.  At convergence b = P_{W/lam}(grad v + b)
holds exactly by construction, so lam*b is a discrete Cahn-Hoffman field:
sigma°(lam*b_i) <= 1 everywhere and lam*b_i . d_i = sigma(d_i) wherever
d_i != 0 (up to floating point).

Both discretizations share the interface: FDM keeps d, b per node with the
forward/backward difference pair; FEM keeps them per element with P1/P0
operators and a mass-lumped node product.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from . import _kernels as K
from .grid import Grid, KuhnMesh, div_fdm, div_p0, grad_fdm, grad_p1


class FdmDiscretization:
    """Per-node vector fields, 2n+1 stencil, Neumann closure."""

    name = "fdm"

    def __init__(self, grid: Grid):
        self.grid = grid

    def vector_field(self):
        return np.zeros(self.grid.shape + (self.grid.n,))

    def grad(self, v):
        return grad_fdm(v, self.grid.dx)

    def div(self, d):
        return div_fdm(d, self.grid.dx)

    def gs_pass(self, v, rhs, mu, lam, n_pass=1):
        lam_dx2 = lam / self.grid.dx ** 2
        for _ in range(n_pass):
            if self.grid.n == 2:
                K.gs_fdm_2d(v, rhs, mu, lam_dx2)
            else:
                K.gs_fdm_3d(v, rhs, mu, lam_dx2)

    def tv_energy(self, d, sigma):
        """Integral of sigma(d) with the node quadrature weight dx^n."""
        return self.grid.dx ** self.grid.n * float(np.sum(sigma.sigma(d)))


class FemDiscretization:
    """P0 vector fields on the Kuhn mesh, P1 stiffness with lumped mass."""

    name = "fem"

    def __init__(self, mesh: KuhnMesh):
        self.mesh = mesh
        self.grid = mesh.grid
        self._assemble()

    def _assemble(self):
        g = self.grid
        mesh = self.mesh
        nn = g.num_nodes
        node_flat = np.arange(nn, dtype=np.int64).reshape(g.shape)
        # local gradient columns in integer units: grad phi_j = col_j / dx
        mat = None
        scale = g.dx ** (g.n - 2) / mesh.num_types
        for m in range(mesh.num_types):
            p = mesh.perms[m]
            cols = np.zeros((g.n, g.n + 1))
            for j in range(g.n + 1):
                if j > 0:
                    cols[p[j - 1], j] += 1.0
                if j <= g.n - 1:
                    cols[p[j], j] -= 1.0
            local = scale * (cols.T @ cols)  # (n+1, n+1)
            idx = [node_flat[tuple(slice(o, o + g.m) for o in mesh.simplices[m, j])].ravel()
                   for j in range(g.n + 1)]
            rows = []
            ccols = []
            vals = []
            for j in range(g.n + 1):
                for k in range(g.n + 1):
                    if local[j, k] == 0.0:
                        continue
                    rows.append(idx[j])
                    ccols.append(idx[k])
                    vals.append(np.full(idx[j].size, local[j, k]))
            part = sp.coo_matrix(
                (np.concatenate(vals), (np.concatenate(rows), np.concatenate(ccols))),
                shape=(nn, nn)).tocsr()
            mat = part if mat is None else mat + part
        # system matrix rows are mu + lam*K/dx^n; store K/dx^n once
        self._stiff = mat.multiply(1.0 / g.dx ** g.n).tocsr()
        self._stiff.sum_duplicates()

    def vector_field(self):
        return np.zeros(self.mesh.element_field_shape())

    def grad(self, v):
        return grad_p1(v, self.mesh)

    def div(self, d):
        return div_p0(d, self.mesh)

    def gs_pass(self, v, rhs, mu, lam, n_pass=1):
        a = self._stiff
        diag = mu + lam * a.diagonal()
        vflat = v.reshape(-1)
        rflat = rhs.reshape(-1)
        data = lam * a.data
        for _ in range(n_pass):
            K.gs_csr(vflat, rflat, a.indptr, a.indices, data, diag)

    def tv_energy(self, d, sigma):
        return self.mesh.element_volume * float(np.sum(sigma.sigma(d)))


@dataclass
class BregmanState:
    """Iterates of the split Bregman solver, reusable across time steps."""

    v: np.ndarray
    d: np.ndarray
    b: np.ndarray
    mu: float
    lam: float
    eps_btol: float
    iterations_used: int = 0
    converged: bool = True

    @classmethod
    def cold(cls, disc, mu, lam, eps_btol):
        return cls(v=np.zeros(disc.grid.shape), d=disc.vector_field(),
                   b=disc.vector_field(), mu=float(mu), lam=float(lam),
                   eps_btol=float(eps_btol))


def default_eps_btol(n, m):
    """Stopping tolerance: 1e-5 in 2d, 1e-4*sqrt(M) in 3d."""
    return 1e-5 if n == 2 else 1e-4 * np.sqrt(m)


def gauss_seidel_pass(v, rhs, mu, lam, disc, n_pass=1):
    """In-place lexicographic Gauss-Seidel sweeps of (mu - lam*Lap) v = rhs."""
    disc.gs_pass(v, rhs, mu, lam, n_pass)
    return v


def d_update(grad_v_plus_b, sigma, lam):
    """Pointwise shrink: d_i = shrink_sigma((grad v + b)_i, 1/lam)."""
    return sigma.shrink(grad_v_plus_b, 1.0 / lam)


def bregman_iteration(state: BregmanState, u_eff, disc, sigma, n_gs=2):
    """One v / d / b cycle; returns the unweighted l2 change of v."""
    v_old = state.v.copy()
    rhs = state.mu * u_eff + state.lam * disc.div(state.b - state.d)
    disc.gs_pass(state.v, rhs, state.mu, state.lam, n_gs)
    q = disc.grad(state.v)
    q += state.b
    state.d = d_update(q, sigma, state.lam)
    state.b = q - state.d
    delta = float(np.linalg.norm((state.v - v_old).ravel()))
    if not np.isfinite(delta):
        raise FloatingPointError(
            f"split Bregman diverged (delta={delta}, mu={state.mu}, lam={state.lam})")
    return delta


def solve_resolvent(u_eff, state: BregmanState, disc, sigma, max_iter=5000, n_gs=2):
    """Iterate to ||v_{k+1} - v_k|| < eps_btol, keeping d, b for warm starts."""
    if max_iter < 1:
        raise ValueError("max_iter must be at least 1")
    state.converged = False
    for it in range(1, max_iter + 1):
        delta = bregman_iteration(state, u_eff, disc, sigma, n_gs=n_gs)
        if delta < state.eps_btol:
            state.iterations_used = it
            state.converged = True
            break
    else:
        state.iterations_used = max_iter
    return state


def cahn_hoffman_residuals(state: BregmanState, sigma, d_floor=1e-8):
    """Optimality diagnostics of the converged state.

    Returns (max sigma°(lam*b), worst alignment lam*b.d / sigma(d)); the
    second is over entries with |d| > d_floor and equals 1 at exact
    optimality (inf when no entry qualifies).
    """
    lam_b = state.lam * state.b
    polar_max = float(np.max(sigma.polar(lam_b)))
    dmag = np.linalg.norm(state.d, axis=-1)
    mask = dmag > d_floor
    if not mask.any():
        return polar_max, np.inf
    sig = sigma.sigma(state.d[mask])
    dot = np.sum(lam_b[mask] * state.d[mask], axis=-1)
    align = float(np.min(dot / sig))
    return polar_max, align
