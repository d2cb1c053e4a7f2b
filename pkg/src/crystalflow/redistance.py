"""Anisotropic signed distance to the zero level set of a node field.

Two stages, following the marching-simplex idea:

1. Initialization on the narrow band: on every Kuhn simplex where the field
   changes sign, the field is affine, so |v_i| / beta(grad v) is the exact
   gauge distance of node i to the zero plane.  Each banded node takes the
   minimum over its sign-changing simplices and is frozen.

2. Fast sweeping for the remaining nodes: the 2^n axis orderings are run
   with the simplex Hopf-Lax update

       w_i <- min over incident simplices T, min over y in the face of T
              opposite i of  w(y) + beta°(x_i - y)

   (mirrored argument beta°(y - x_i) on the inside phase, so non-even
   mobilities are supported).  Each ordering only visits the simplices of
   its trailing cell; over a full round every incident simplex is used.

The computed distance satisfies beta(grad w) = 1 where smooth, the eikonal
property matching signdist(E)(x) = inf_{y in E} beta°(x - y) outside and
the mirrored infimum inside.  Zero is treated as inside (E = {v <= 0}).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from . import _kernels as K
from .grid import KuhnMesh, kuhn_tessellate

BIG = K.BIG

# sweep table cache keyed by (n, polar code, polar data bytes)
_TABLE_CACHE = {}


def _sweep_tables(n, code, data):
    """Per-ordering face-vertex offsets and step-cost lower bounds.

    For ordering s the node is the corner ell(s) of its trailing cell
    (ell_k = 1 if s_k > 0 else 0); the entries are the opposite faces of the
    reference simplices containing that corner, as offsets relative to the
    node.  Lower bounds are exact up to a Lipschitz-safe sampling margin and
    are valid for both sweep phases.
    """
    key = (n, int(code), data.tobytes())
    if key in _TABLE_CACHE:
        return _TABLE_CACHE[key]
    simp = kuhn_tessellate(n)
    orderings = list(itertools.product((1, -1), repeat=n))
    tables = []
    for s in orderings:
        ell = np.array([1 if sk > 0 else 0 for sk in s], dtype=np.int64)
        offs = []
        for t in range(simp.shape[0]):
            verts = simp[t]
            hit = np.all(verts == ell, axis=1)
            if not hit.any():
                continue
            face = verts[~hit] - ell
            offs.append(face)
        offs = np.ascontiguousarray(np.array(offs, dtype=np.int64))
        lb = np.empty(offs.shape[0])
        for e in range(offs.shape[0]):
            pts = offs[e].astype(float)
            lb[e] = _face_polar_min(code, data, pts)
        tables.append((offs, lb))
    _TABLE_CACHE[key] = (orderings, tables)
    return _TABLE_CACHE[key]


def _face_polar_min(code, data, pts):
    """Safe lower bound of min over the face hull of min(polar(p), polar(-p))."""
    n = pts.shape[1]
    if n == 2:
        t = np.linspace(0.0, 1.0, 201)[:, None]
        samples = pts[0] * (1 - t) + pts[1] * t
        step = np.linalg.norm(pts[1] - pts[0]) / 200
    else:
        m = 40
        b1, b2 = np.meshgrid(np.linspace(0, 1, m + 1), np.linspace(0, 1, m + 1))
        mask = b1 + b2 <= 1.0 + 1e-12
        b1 = b1[mask][:, None]
        b2 = b2[mask][:, None]
        samples = pts[0] * (1 - b1 - b2) + pts[1] * b1 + pts[2] * b2
        diam = max(np.linalg.norm(pts[i] - pts[j])
                   for i in range(3) for j in range(i + 1, 3))
        step = 2.0 * diam / m
    vals = np.minimum(_polar_np(code, data, samples), _polar_np(code, data, -samples))
    if code == 0:
        lip = 1.0
    elif code == 1:
        lip = float(np.max(data))
    else:
        lip = float(np.max(np.linalg.norm(data, axis=1)))
    return max(0.0, float(np.min(vals)) - lip * step)


def _polar_np(code, data, u):
    if code == 0:
        return np.linalg.norm(u, axis=-1)
    if code == 1:
        return np.max(np.abs(u) * data[0], axis=-1)
    return np.max(u @ data.T, axis=-1)


@dataclass
class NarrowBandInit:
    """Initialized magnitudes and the frozen mask around the interface."""

    wmag: np.ndarray      # node magnitudes, BIG where uninitialized
    frozen: np.ndarray    # uint8, nodes the sweeps must not modify
    inside: np.ndarray    # bool, v <= 0 (zero counts as inside)
    grid: object


def init_narrow_band(v, mesh: KuhnMesh, beta):
    """Exact distances on sign-changing simplices, minimum per node."""
    g = mesh.grid
    v = np.ascontiguousarray(v, dtype=float)
    wmag = np.full(g.shape, BIG)
    frozen = np.zeros(g.shape, dtype=np.uint8)
    scode, sdata = beta.sigma_kernel_spec()
    if g.n == 2:
        K.narrow_band_2d(v, mesh.simplices, mesh.perms, g.dx, scode, sdata,
                         wmag, frozen)
    else:
        K.narrow_band_3d(v, mesh.simplices, mesh.perms, g.dx, scode, sdata,
                         wmag, frozen)
    return NarrowBandInit(wmag=wmag, frozen=frozen, inside=v <= 0.0, grid=g)


def fast_sweep(init: NarrowBandInit, beta, tol=1e-12, max_passes=8):
    """Propagate the frozen band to all nodes with 2^n-ordering sweeps.

    Runs full rounds of the 2^n orderings until the largest node change in a
    round drops below tol or max_passes directional passes were done.
    """
    g = init.grid
    code, data = beta.polar_kernel_spec()
    if not init.frozen.any():
        sign = -1.0 if init.inside.all() else 1.0
        return np.full(g.shape, sign * BIG)
    orderings, tables = _sweep_tables(g.n, code, data)

    signed = np.where(init.inside, -init.wmag, init.wmag)
    out = np.where(init.frozen.astype(bool), signed, 0.0)

    # outside phase: cost beta°(x_i - y)
    wpos = np.where(init.frozen.astype(bool), signed, BIG)
    active = ((init.frozen == 0) & ~init.inside).astype(np.uint8)
    if active.any():
        _run_phase(wpos, active, orderings, tables, code, data, 1.0, g.dx,
                   tol, max_passes)
        mask = active.astype(bool)
        out[mask] = wpos[mask]

    # inside phase on u = -w: cost beta°(y - x_i)
    wneg = np.where(init.frozen.astype(bool), -signed, BIG)
    active = ((init.frozen == 0) & init.inside).astype(np.uint8)
    if active.any():
        _run_phase(wneg, active, orderings, tables, code, data, -1.0, g.dx,
                   tol, max_passes)
        mask = active.astype(bool)
        out[mask] = -wneg[mask]
    return out


def _run_phase(w, active, orderings, tables, code, data, sgn, dx, tol, max_passes):
    n = w.ndim
    passes = 0
    while passes < max_passes:
        round_chg = 0.0
        for s, (offs, lb) in zip(orderings, tables):
            if n == 2:
                chg = K.sweep_pass_2d(w, active, offs, lb, s[0], s[1],
                                      code, data, sgn, dx)
            else:
                chg = K.sweep_pass_3d(w, active, offs, lb, s[0], s[1], s[2],
                                      code, data, sgn, dx)
            round_chg = max(round_chg, chg)
            passes += 1
            if passes >= max_passes:
                break
        if round_chg <= tol:
            break


def signdist(v, mesh: KuhnMesh, beta):
    """Anisotropic signed distance to the zero level of v; negative inside."""
    init = init_narrow_band(v, mesh, beta)
    return fast_sweep(init, beta)
