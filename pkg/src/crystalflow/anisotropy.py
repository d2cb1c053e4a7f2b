"""Surface energy densities, their polars, Wulff shapes and proximal operators.

A surface energy density sigma is a convex, positively 1-homogeneous function
on R^n that is positive away from the origin.  Its polar
sigma°(x) = sup {x·p : sigma(p) <= 1} is the gauge of the Wulff shape
W = {x : sigma°(x) <= 1}, and sigma is the support function of W.  The same
objects describe the mobility beta that weighs the normal velocity.

Supported families:

* ``iso``       Euclidean norm, W = unit ball.
* ``l1``        sigma(p) = sum |p_k|, W = [-1, 1]^n.
* ``hex``       support function of the regular hexagon with circumradius 1
                (edge length 1), one vertex on the positive x-axis (n = 2).
* ``hexprism``  cylindrical extension of ``hex`` with axial weight 1,
                W = hexagon x [-1, 1].
* ``triprism``  cylindrical extension of the equilateral triangle with
                circumradius 1 and a vertex at angle 90° (non-even!).
* ``cyl:l1``, ``cyl:hex``  cylindrical kinds with optional axial weight,
                sigma(p) = sigma2(p') + mu_a*|p_n|.

Every polytopal kind is stored as two vertex lists: the Wulff vertices
(sigma = max of dot products against them) and the vertices of the unit ball
{sigma <= 1} (sigma° = max of dot products against those).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

# Codes used to hand evaluation rules to the numba kernels.
GAUGE_EUCLID = 0
GAUGE_DIAG = 1      # weighted l1 (sigma) or weighted linf (polar), data = weights
GAUGE_SUPPORT = 2   # max_k data[k]·x


def _regular_polygon(k, circumradius, angle0):
    ang = angle0 + 2.0 * np.pi * np.arange(k) / k
    return circumradius * np.stack([np.cos(ang), np.sin(ang)], axis=1)


@dataclass
class Anisotropy:
    """A convex, positively 1-homogeneous surface energy density.

    Attributes
    ----------
    n : spatial dimension, 2 or 3.
    kind : human readable tag, e.g. ``"l1"`` or ``"cyl:hex:mu=0.5"``.
    wulff_vertices : (K, n) vertices of the Wulff shape, or None (isotropic).
    polar_vertices : (K2, n) vertices of {sigma <= 1}, or None (isotropic).
    proj : projection recipe for the Wulff shape, one of
        ("ball",), ("box", halfwidths), ("polygon", verts2d),
        ("prism", verts2d, axial_halfwidth).
    even : whether sigma(-p) = sigma(p).
    axial_weight : axial weight mu_a for cylindrical kinds (None otherwise).
    """

    n: int
    kind: str
    wulff_vertices: np.ndarray | None = None
    polar_vertices: np.ndarray | None = None
    proj: tuple = ("ball",)
    even: bool = True
    axial_weight: float | None = None
    base: "Anisotropy | None" = field(default=None, repr=False)

    # ---------------------------------------------------------------- sigma
    def sigma(self, p):
        """Evaluate sigma(p).  p has shape (..., n)."""
        p = np.asarray(p, dtype=float)
        if self.wulff_vertices is None:
            return np.linalg.norm(p, axis=-1)
        return np.max(p @ self.wulff_vertices.T, axis=-1)

    def polar(self, x):
        """Evaluate sigma°(x) = sup {x·p : sigma(p) <= 1}."""
        x = np.asarray(x, dtype=float)
        if self.polar_vertices is None:
            return np.linalg.norm(x, axis=-1)
        return np.max(x @ self.polar_vertices.T, axis=-1)

    # ----------------------------------------------------------- projection
    def wulff_project(self, x, s=1.0):
        """Euclidean projection of x onto s*W.  Exact for all supported kinds."""
        if s <= 0.0:
            raise ValueError("scale s must be positive")
        x = np.asarray(x, dtype=float)
        squeeze = x.ndim == 1
        pts = np.atleast_2d(x)
        out = self._project_batch(pts, float(s))
        return out[0] if squeeze else out.reshape(x.shape)

    def _project_batch(self, pts, s):
        pts = pts.reshape(-1, self.n)
        mode = self.proj[0]
        if mode == "ball":
            r = np.linalg.norm(pts, axis=1)
            fac = np.where(r > s, s / np.maximum(r, 1e-300), 1.0)
            return pts * fac[:, None]
        if mode == "box":
            half = s * self.proj[1]
            return np.clip(pts, -half, half)
        if mode == "polygon":
            return _project_polygon(pts, s * self.proj[1])
        if mode == "prism":
            out = np.empty_like(pts)
            out[:, :2] = _project_polygon(pts[:, :2], s * self.proj[1])
            half = s * self.proj[2]
            out[:, 2] = np.clip(pts[:, 2], -half, half)
            return out
        raise ValueError(f"unknown projection mode {mode!r}")

    def shrink(self, xi, s=1.0):
        """Proximal shrink operator (I - P_{sW})(xi); zero iff sigma°(xi) <= s."""
        xi = np.asarray(xi, dtype=float)
        return xi - self.wulff_project(xi, s)

    # -------------------------------------------------------- subdifferential
    def in_subdifferential(self, z, p, tol=1e-12):
        """Test z in ∂sigma(p) via sigma°(z) <= 1 + tol and z·p >= sigma(p) - tol."""
        z = np.asarray(z, dtype=float)
        p = np.asarray(p, dtype=float)
        ok_polar = self.polar(z) <= 1.0 + tol
        ok_fenchel = np.sum(z * p, axis=-1) >= self.sigma(p) - tol
        return np.logical_and(ok_polar, ok_fenchel)

    # ------------------------------------------------------- kernel exports
    def sigma_kernel_spec(self):
        """(code, data) pair describing sigma for the numba kernels."""
        if self.wulff_vertices is None:
            return GAUGE_EUCLID, np.zeros((1, self.n))
        if self.proj[0] == "box":
            return GAUGE_DIAG, self.proj[1].reshape(1, self.n).copy()
        return GAUGE_SUPPORT, np.ascontiguousarray(self.wulff_vertices, dtype=float)

    def polar_kernel_spec(self):
        """(code, data) pair describing sigma° for the numba kernels."""
        if self.polar_vertices is None:
            return GAUGE_EUCLID, np.zeros((1, self.n))
        if self.proj[0] == "box":
            # max_k |x_k|/c_k; pass 1/c so kernels multiply
            return GAUGE_DIAG, (1.0 / self.proj[1]).reshape(1, self.n)
        return GAUGE_SUPPORT, np.ascontiguousarray(self.polar_vertices, dtype=float)


def _project_polygon(pts, verts):
    """Euclidean projection onto a convex polygon given by ordered vertices."""
    k = verts.shape[0]
    a = verts
    b = np.roll(verts, -1, axis=0)
    edge = b - a                                     # (k, 2)
    # interior test: points are inside iff on the inner side of every edge
    # outward normal of edge (a->b) for CCW polygon is (edge_y, -edge_x)
    nrm = np.stack([edge[:, 1], -edge[:, 0]], axis=1)
    inside = np.ones(pts.shape[0], dtype=bool)
    for j in range(k):
        inside &= (pts - a[j]) @ nrm[j] <= 1e-15 * np.abs(verts).max()
    out = pts.copy()
    if np.all(inside):
        return out
    q = pts[~inside]
    best_d2 = np.full(q.shape[0], np.inf)
    best = np.zeros_like(q)
    for j in range(k):
        e = edge[j]
        t = np.clip((q - a[j]) @ e / (e @ e), 0.0, 1.0)
        proj = a[j] + t[:, None] * e
        d2 = np.sum((q - proj) ** 2, axis=1)
        better = d2 < best_d2
        best_d2[better] = d2[better]
        best[better] = proj[better]
    out[~inside] = best
    return out


# ----------------------------------------------------------------- factories

def isotropic(n):
    return Anisotropy(n=n, kind="iso")


def cubic(n):
    """l1 anisotropy; W = [-1,1]^n."""
    corners = np.array(np.meshgrid(*([[-1.0, 1.0]] * n), indexing="ij"))
    corners = corners.reshape(n, -1).T
    cross = np.concatenate([np.eye(n), -np.eye(n)])
    return Anisotropy(n=n, kind="l1", wulff_vertices=corners,
                      polar_vertices=cross, proj=("box", np.ones(n)))


def hexagon2d():
    """Support function of the regular hexagon, circumradius 1, vertex at 0°."""
    w = _regular_polygon(6, 1.0, 0.0)
    # {sigma <= 1} is the polar hexagon: circumradius 2/sqrt(3), rotated 30°
    p = _regular_polygon(6, 2.0 / np.sqrt(3.0), np.pi / 6.0)
    return Anisotropy(n=2, kind="hex", wulff_vertices=w, polar_vertices=p,
                      proj=("polygon", w))


def triangle2d():
    """Equilateral triangle, circumradius 1, vertex at 90°.  Non-even."""
    w = _regular_polygon(3, 1.0, np.pi / 2.0)
    p = _regular_polygon(3, 2.0, -np.pi / 2.0)
    return Anisotropy(n=2, kind="tri", wulff_vertices=w, polar_vertices=p,
                      proj=("polygon", w), even=False)


def cylindrical(base, mu_a=1.0):
    """sigma(p) = base(p') + mu_a*|p_3| on R^3; W = W_base x [-mu_a, mu_a]."""
    if base.n != 2:
        raise ValueError("cylindrical base must be two-dimensional")
    if mu_a <= 0.0:
        raise ValueError("axial weight must be positive")
    if base.wulff_vertices is None:
        raise ValueError("cylindrical kinds need a polytopal base")
    bw = base.wulff_vertices
    top = np.column_stack([bw, np.full(len(bw), mu_a)])
    bot = np.column_stack([bw, np.full(len(bw), -mu_a)])
    wulff = np.concatenate([top, bot])
    bp = base.polar_vertices
    ring = np.column_stack([bp, np.zeros(len(bp))])
    apex = np.array([[0.0, 0.0, 1.0 / mu_a], [0.0, 0.0, -1.0 / mu_a]])
    polar = np.concatenate([ring, apex])
    if base.proj[0] == "box":
        proj = ("box", np.array([*base.proj[1], mu_a]))
    else:
        proj = ("prism", base.proj[1], mu_a)
    kind = f"cyl:{base.kind}" + (f":mu={mu_a:g}" if mu_a != 1.0 else "")
    return Anisotropy(n=3, kind=kind, wulff_vertices=wulff, polar_vertices=polar,
                      proj=proj, even=base.even, axial_weight=mu_a, base=base)


def hexagonal_prism(mu_a=1.0):
    a = cylindrical(hexagon2d(), mu_a)
    a.kind = "hexprism" if mu_a == 1.0 else f"hexprism:mu={mu_a:g}"
    return a


def triangle_prism(mu_a=1.0):
    a = cylindrical(triangle2d(), mu_a)
    a.kind = "triprism" if mu_a == 1.0 else f"triprism:mu={mu_a:g}"
    return a


def from_spec(spec, n):
    """Build an anisotropy from a CLI string.

    Accepted: ``iso``, ``l1``, ``hex``, ``hexprism``, ``triprism``,
    ``cyl:l1``, ``cyl:hex``; cylindrical kinds take an optional
    ``:mu=<float>`` axial weight, e.g. ``cyl:l1:mu=0.5``.
    """
    parts = spec.split(":")
    mu_a = 1.0
    if parts and parts[-1].startswith("mu="):
        mu_a = float(parts[-1][3:])
        parts = parts[:-1]
    name = ":".join(parts)
    if name == "iso":
        return isotropic(n)
    if name == "l1":
        return cubic(n)
    if name == "hex":
        if n != 2:
            raise ValueError("hex is two-dimensional; use hexprism or cyl:hex in 3d")
        return hexagon2d()
    if name == "hexprism":
        if n != 3:
            raise ValueError("hexprism is three-dimensional")
        return hexagonal_prism(mu_a)
    if name == "triprism":
        if n != 3:
            raise ValueError("triprism is three-dimensional")
        return triangle_prism(mu_a)
    if name == "cyl:l1":
        if n != 3:
            raise ValueError("cylindrical kinds are three-dimensional")
        return cylindrical(cubic(2), mu_a)
    if name == "cyl:hex":
        if n != 3:
            raise ValueError("cylindrical kinds are three-dimensional")
        return cylindrical(hexagon2d(), mu_a)
    raise ValueError(f"unknown anisotropy {spec!r}")
