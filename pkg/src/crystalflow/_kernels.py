"""Numba kernels: fast sweeping, Gauss-Seidel passes, marching simplices.

Gauge arguments: polar gauges are passed as (code, data) pairs,

* code 0: Euclidean norm (data unused)
* code 1: weighted max, max_k |u_k| * data[0, k]   (box Wulff shapes)
* code 2: support function, max_k data[k] . u      (general polytopes)

and sigma (support) gauges analogously with code 1 meaning the weighted sum
sum_k data[0, k] * |u_k|.

Sentinel for "not yet computed" is BIG (1e30); branches keep it out of the
arithmetic.
"""

import numpy as np
from numba import njit

BIG = 1e30
BIG_CUT = 1e29


# ------------------------------------------------------------ gauge evals

@njit(cache=True, inline="always")
def _polar2(code, data, u1, u2):
    if code == 0:
        return np.sqrt(u1 * u1 + u2 * u2)
    if code == 1:
        a = abs(u1) * data[0, 0]
        b = abs(u2) * data[0, 1]
        return a if a > b else b
    best = -BIG
    for k in range(data.shape[0]):
        v = data[k, 0] * u1 + data[k, 1] * u2
        if v > best:
            best = v
    return best


@njit(cache=True, inline="always")
def _polar3(code, data, u1, u2, u3):
    if code == 0:
        return np.sqrt(u1 * u1 + u2 * u2 + u3 * u3)
    if code == 1:
        a = abs(u1) * data[0, 0]
        b = abs(u2) * data[0, 1]
        c = abs(u3) * data[0, 2]
        m = a if a > b else b
        return m if m > c else c
    best = -BIG
    for k in range(data.shape[0]):
        v = data[k, 0] * u1 + data[k, 1] * u2 + data[k, 2] * u3
        if v > best:
            best = v
    return best


@njit(cache=True, inline="always")
def _sigma2(code, data, u1, u2):
    if code == 0:
        return np.sqrt(u1 * u1 + u2 * u2)
    if code == 1:
        return abs(u1) * data[0, 0] + abs(u2) * data[0, 1]
    best = -BIG
    for k in range(data.shape[0]):
        v = data[k, 0] * u1 + data[k, 1] * u2
        if v > best:
            best = v
    return best


@njit(cache=True, inline="always")
def _sigma3(code, data, u1, u2, u3):
    if code == 0:
        return np.sqrt(u1 * u1 + u2 * u2 + u3 * u3)
    if code == 1:
        return abs(u1) * data[0, 0] + abs(u2) * data[0, 1] + abs(u3) * data[0, 2]
    best = -BIG
    for k in range(data.shape[0]):
        v = data[k, 0] * u1 + data[k, 1] * u2 + data[k, 2] * u3
        if v > best:
            best = v
    return best


# --------------------------------------------------- segment minimizations
# minimize over t in [0,1]:  wa + (wb-wa)*t + polar(u0 + t*du)
# u0, du are the polar arguments at t=0 and its derivative.

@njit(cache=True)
def _seg_min_euclid2(wa, wb, u01, u02, du1, du2):
    c = wb - wa
    best = wa + np.sqrt(u01 * u01 + u02 * u02)
    v1 = u01 + du1
    v2 = u02 + du2
    e = wb + np.sqrt(v1 * v1 + v2 * v2)
    if e < best:
        best = e
    dd = du1 * du1 + du2 * du2
    if dd < 1e-300:
        return best
    sd = np.sqrt(dd)
    if c >= sd or c <= -sd:
        return best
    # stationary point: (q + t*dd)^2 = c^2 * |u(t)|^2
    q = du1 * u01 + du2 * u02
    uu = u01 * u01 + u02 * u02
    a2 = dd * (dd - c * c)
    b2 = 2.0 * q * (dd - c * c)
    c2 = q * q - c * c * uu
    disc = b2 * b2 - 4.0 * a2 * c2
    if disc < 0.0 or a2 <= 0.0:
        return best
    sq = np.sqrt(disc)
    for sgn in (-1.0, 1.0):
        t = (-b2 + sgn * sq) / (2.0 * a2)
        if 0.0 < t < 1.0:
            w1 = u01 + t * du1
            w2 = u02 + t * du2
            e = wa + c * t + np.sqrt(w1 * w1 + w2 * w2)
            if e < best:
                best = e
    return best


@njit(cache=True)
def _seg_min_euclid3(wa, wb, u01, u02, u03, du1, du2, du3):
    c = wb - wa
    best = wa + np.sqrt(u01 * u01 + u02 * u02 + u03 * u03)
    v1 = u01 + du1
    v2 = u02 + du2
    v3 = u03 + du3
    e = wb + np.sqrt(v1 * v1 + v2 * v2 + v3 * v3)
    if e < best:
        best = e
    dd = du1 * du1 + du2 * du2 + du3 * du3
    if dd < 1e-300:
        return best
    sd = np.sqrt(dd)
    if c >= sd or c <= -sd:
        return best
    q = du1 * u01 + du2 * u02 + du3 * u03
    uu = u01 * u01 + u02 * u02 + u03 * u03
    a2 = dd * (dd - c * c)
    b2 = 2.0 * q * (dd - c * c)
    c2 = q * q - c * c * uu
    disc = b2 * b2 - 4.0 * a2 * c2
    if disc < 0.0 or a2 <= 0.0:
        return best
    sq = np.sqrt(disc)
    for sgn in (-1.0, 1.0):
        t = (-b2 + sgn * sq) / (2.0 * a2)
        if 0.0 < t < 1.0:
            w1 = u01 + t * du1
            w2 = u02 + t * du2
            w3 = u03 + t * du3
            e = wa + c * t + np.sqrt(w1 * w1 + w2 * w2 + w3 * w3)
            if e < best:
                best = e
    return best


@njit(cache=True)
def _seg_min_pwl(wa, wb, nlin, A, G):
    """Exact min of wa + (wb-wa)t + max_k (A[k] + G[k] t) over [0,1].

    The upper envelope is convex piecewise linear; the minimum sits at an
    endpoint or at a crossing of two pieces.
    """
    c = wb - wa
    # endpoint values
    m0 = -BIG
    m1 = -BIG
    for k in range(nlin):
        if A[k] > m0:
            m0 = A[k]
        v = A[k] + G[k]
        if v > m1:
            m1 = v
    best = wa + m0
    e = wa + c + m1
    if e < best:
        best = e
    for k in range(nlin):
        for l in range(k + 1, nlin):
            dg = G[k] - G[l]
            if dg == 0.0:
                continue
            t = (A[l] - A[k]) / dg
            if 0.0 < t < 1.0:
                m = -BIG
                for j in range(nlin):
                    v = A[j] + G[j] * t
                    if v > m:
                        m = v
                e = wa + c * t + m
                if e < best:
                    best = e
    return best


@njit(cache=True)
def _seg_min2(code, data, wa, wb, u01, u02, du1, du2, A, G):
    if code == 0:
        return _seg_min_euclid2(wa, wb, u01, u02, du1, du2)
    # assemble affine pieces A[k] + G[k]*t of the polar along the segment
    if code == 1:
        nlin = 4
        A[0] = u01 * data[0, 0]
        G[0] = du1 * data[0, 0]
        A[1] = -A[0]
        G[1] = -G[0]
        A[2] = u02 * data[0, 1]
        G[2] = du2 * data[0, 1]
        A[3] = -A[2]
        G[3] = -G[2]
    else:
        nlin = data.shape[0]
        for k in range(nlin):
            A[k] = data[k, 0] * u01 + data[k, 1] * u02
            G[k] = data[k, 0] * du1 + data[k, 1] * du2
    return _seg_min_pwl(wa, wb, nlin, A, G)


@njit(cache=True)
def _seg_min3(code, data, wa, wb, u01, u02, u03, du1, du2, du3, A, G):
    if code == 0:
        return _seg_min_euclid3(wa, wb, u01, u02, u03, du1, du2, du3)
    if code == 1:
        nlin = 6
        A[0] = u01 * data[0, 0]
        G[0] = du1 * data[0, 0]
        A[1] = -A[0]
        G[1] = -G[0]
        A[2] = u02 * data[0, 1]
        G[2] = du2 * data[0, 1]
        A[3] = -A[2]
        G[3] = -G[2]
        A[4] = u03 * data[0, 2]
        G[4] = du3 * data[0, 2]
        A[5] = -A[4]
        G[5] = -G[4]
    else:
        nlin = data.shape[0]
        for k in range(nlin):
            A[k] = data[k, 0] * u01 + data[k, 1] * u02 + data[k, 2] * u03
            G[k] = data[k, 0] * du1 + data[k, 1] * du2 + data[k, 2] * du3
    return _seg_min_pwl(wa, wb, nlin, A, G)


# ------------------------------------------------------------- 3d face min

@njit(cache=True)
def _face_min3(code, data, sgn, ax, ay, az, bx, by, bz, cx, cy, cz, wa, wb, wc, A, G):
    """Hopf-Lax minimum over the triangle (a, b, c) seen from the origin.

    Positions are relative to the updated node; the cost of sourcing from y
    is w(y) + polar(sgn * (-y)).  Exact on the three edges; for the Euclidean
    polar the in-plane stationary point is included in closed form, for
    polytopal polars the foot point of the origin is tested as an extra
    interior candidate (upper bound only).
    """
    best = _seg_min3(code, data, wa, wb,
                     -sgn * ax, -sgn * ay, -sgn * az,
                     -sgn * (bx - ax), -sgn * (by - ay), -sgn * (bz - az), A, G)
    e = _seg_min3(code, data, wa, wc,
                  -sgn * ax, -sgn * ay, -sgn * az,
                  -sgn * (cx - ax), -sgn * (cy - ay), -sgn * (cz - az), A, G)
    if e < best:
        best = e
    e = _seg_min3(code, data, wb, wc,
                  -sgn * bx, -sgn * by, -sgn * bz,
                  -sgn * (cx - bx), -sgn * (cy - by), -sgn * (cz - bz), A, G)
    if e < best:
        best = e

    # in-plane data: edges, normal, dual basis, in-plane value gradient
    e1x = bx - ax
    e1y = by - ay
    e1z = bz - az
    e2x = cx - ax
    e2y = cy - ay
    e2z = cz - az
    nx = e1y * e2z - e1z * e2y
    ny = e1z * e2x - e1x * e2z
    nz = e1x * e2y - e1y * e2x
    nn = nx * nx + ny * ny + nz * nz
    if nn < 1e-300:
        return best
    # dual vectors u1 = e2 x n / nn, u2 = n x e1 / nn
    u1x = (e2y * nz - e2z * ny) / nn
    u1y = (e2z * nx - e2x * nz) / nn
    u1z = (e2x * ny - e2y * nx) / nn
    u2x = (ny * e1z - nz * e1y) / nn
    u2y = (nz * e1x - nx * e1z) / nn
    u2z = (nx * e1y - ny * e1x) / nn
    d1 = wb - wa
    d2 = wc - wa
    gx = d1 * u1x + d2 * u2x
    gy = d1 * u1y + d2 * u2y
    gz = d1 * u1z + d2 * u2z
    # foot of the origin on the plane: q = (a.n^) n^
    adotn = ax * nx + ay * ny + az * nz
    qx = adotn * nx / nn
    qy = adotn * ny / nn
    qz = adotn * nz / nn

    if code == 0:
        gg = gx * gx + gy * gy + gz * gz
        if gg >= 1.0:
            return best
        rho = abs(adotn) / np.sqrt(nn)
        gnorm = np.sqrt(gg)
        if gnorm > 1e-14:
            shift = rho * gnorm / np.sqrt(1.0 - gg)
            yx = qx - shift * gx / gnorm
            yy = qy - shift * gy / gnorm
            yz = qz - shift * gz / gnorm
        else:
            yx = qx
            yy = qy
            yz = qz
        # barycentric test
        rx = yx - ax
        ry = yy - ay
        rz = yz - az
        b1 = rx * u1x + ry * u1y + rz * u1z
        b2 = rx * u2x + ry * u2y + rz * u2z
        if b1 >= -1e-12 and b2 >= -1e-12 and b1 + b2 <= 1.0 + 1e-12:
            wq = wa + gx * (qx - ax) + gy * (qy - ay) + gz * (qz - az)
            e = wq + rho * np.sqrt(1.0 - gg)
            if e < best:
                best = e
        return best

    # polytopal: foot-point candidate only
    rx = qx - ax
    ry = qy - ay
    rz = qz - az
    b1 = rx * u1x + ry * u1y + rz * u1z
    b2 = rx * u2x + ry * u2y + rz * u2z
    if b1 >= 0.0 and b2 >= 0.0 and b1 + b2 <= 1.0:
        wq = wa + d1 * b1 + d2 * b2
        e = wq + _polar3(code, data, -sgn * qx, -sgn * qy, -sgn * qz)
        if e < best:
            best = e
    return best


# ------------------------------------------------------------ sweep kernels

@njit(cache=True)
def sweep_pass_2d(w, active, offs, lb, s1, s2, code, data, sgn, dx):
    """One directional pass of the fast sweeping update in 2d.

    offs: (E, 2, 2) int64 face-vertex offsets of the backward-cell simplices
    for this ordering; lb: (E,) lower bounds of the step cost in units of dx.
    Returns the maximum decrease of any node value.
    """
    m1 = w.shape[0]
    ne = offs.shape[0]
    maxchg = 0.0
    A = np.empty(16)
    G = np.empty(16)
    i1 = 0 if s1 > 0 else m1 - 1
    while 0 <= i1 < m1:
        i2 = 0 if s2 > 0 else m1 - 1
        while 0 <= i2 < m1:
            if active[i1, i2]:
                wi = w[i1, i2]
                for e in range(ne):
                    a1 = i1 + offs[e, 0, 0]
                    a2 = i2 + offs[e, 0, 1]
                    b1 = i1 + offs[e, 1, 0]
                    b2 = i2 + offs[e, 1, 1]
                    if a1 < 0 or a1 >= m1 or a2 < 0 or a2 >= m1:
                        continue
                    if b1 < 0 or b1 >= m1 or b2 < 0 or b2 >= m1:
                        continue
                    wa = w[a1, a2]
                    wb = w[b1, b2]
                    if wa > BIG_CUT and wb > BIG_CUT:
                        continue
                    wmin = wa if wa < wb else wb
                    if wmin + lb[e] * dx >= wi:
                        continue
                    pax = offs[e, 0, 0] * dx
                    pay = offs[e, 0, 1] * dx
                    pbx = offs[e, 1, 0] * dx
                    pby = offs[e, 1, 1] * dx
                    if wa > BIG_CUT:
                        cand = wb + _polar2(code, data, -sgn * pbx, -sgn * pby)
                    elif wb > BIG_CUT:
                        cand = wa + _polar2(code, data, -sgn * pax, -sgn * pay)
                    else:
                        cand = _seg_min2(code, data, wa, wb,
                                         -sgn * pax, -sgn * pay,
                                         -sgn * (pbx - pax), -sgn * (pby - pay), A, G)
                    if cand < wi:
                        chg = wi - cand
                        if chg > maxchg:
                            maxchg = chg
                        wi = cand
                w[i1, i2] = wi
            i2 += s2
        i1 += s1
    return maxchg


@njit(cache=True)
def sweep_pass_3d(w, active, offs, lb, s1, s2, s3, code, data, sgn, dx):
    """One directional pass of the fast sweeping update in 3d."""
    m1 = w.shape[0]
    ne = offs.shape[0]
    maxchg = 0.0
    A = np.empty(16)
    G = np.empty(16)
    i1 = 0 if s1 > 0 else m1 - 1
    while 0 <= i1 < m1:
        i2 = 0 if s2 > 0 else m1 - 1
        while 0 <= i2 < m1:
            i3 = 0 if s3 > 0 else m1 - 1
            while 0 <= i3 < m1:
                if active[i1, i2, i3]:
                    wi = w[i1, i2, i3]
                    for e in range(ne):
                        a1 = i1 + offs[e, 0, 0]
                        a2 = i2 + offs[e, 0, 1]
                        a3 = i3 + offs[e, 0, 2]
                        if a1 < 0 or a1 >= m1 or a2 < 0 or a2 >= m1 or a3 < 0 or a3 >= m1:
                            continue
                        b1 = i1 + offs[e, 1, 0]
                        b2 = i2 + offs[e, 1, 1]
                        b3 = i3 + offs[e, 1, 2]
                        if b1 < 0 or b1 >= m1 or b2 < 0 or b2 >= m1 or b3 < 0 or b3 >= m1:
                            continue
                        c1 = i1 + offs[e, 2, 0]
                        c2 = i2 + offs[e, 2, 1]
                        c3 = i3 + offs[e, 2, 2]
                        if c1 < 0 or c1 >= m1 or c2 < 0 or c2 >= m1 or c3 < 0 or c3 >= m1:
                            continue
                        wa = w[a1, a2, a3]
                        wb = w[b1, b2, b3]
                        wc = w[c1, c2, c3]
                        wmin = wa
                        if wb < wmin:
                            wmin = wb
                        if wc < wmin:
                            wmin = wc
                        if wmin > BIG_CUT or wmin + lb[e] * dx >= wi:
                            continue
                        pax = offs[e, 0, 0] * dx
                        pay = offs[e, 0, 1] * dx
                        paz = offs[e, 0, 2] * dx
                        pbx = offs[e, 1, 0] * dx
                        pby = offs[e, 1, 1] * dx
                        pbz = offs[e, 1, 2] * dx
                        pcx = offs[e, 2, 0] * dx
                        pcy = offs[e, 2, 1] * dx
                        pcz = offs[e, 2, 2] * dx
                        na = wa < BIG_CUT
                        nb = wb < BIG_CUT
                        nc = wc < BIG_CUT
                        nfin = 0
                        if na:
                            nfin += 1
                        if nb:
                            nfin += 1
                        if nc:
                            nfin += 1
                        if nfin == 3:
                            cand = _face_min3(code, data, sgn,
                                              pax, pay, paz, pbx, pby, pbz,
                                              pcx, pcy, pcz, wa, wb, wc, A, G)
                        elif nfin == 2:
                            if not na:
                                cand = _seg_min3(code, data, wb, wc,
                                                 -sgn * pbx, -sgn * pby, -sgn * pbz,
                                                 -sgn * (pcx - pbx), -sgn * (pcy - pby),
                                                 -sgn * (pcz - pbz), A, G)
                            elif not nb:
                                cand = _seg_min3(code, data, wa, wc,
                                                 -sgn * pax, -sgn * pay, -sgn * paz,
                                                 -sgn * (pcx - pax), -sgn * (pcy - pay),
                                                 -sgn * (pcz - paz), A, G)
                            else:
                                cand = _seg_min3(code, data, wa, wb,
                                                 -sgn * pax, -sgn * pay, -sgn * paz,
                                                 -sgn * (pbx - pax), -sgn * (pby - pay),
                                                 -sgn * (pbz - paz), A, G)
                        else:
                            if na:
                                cand = wa + _polar3(code, data, -sgn * pax, -sgn * pay, -sgn * paz)
                            elif nb:
                                cand = wb + _polar3(code, data, -sgn * pbx, -sgn * pby, -sgn * pbz)
                            else:
                                cand = wc + _polar3(code, data, -sgn * pcx, -sgn * pcy, -sgn * pcz)
                        if cand < wi:
                            chg = wi - cand
                            if chg > maxchg:
                                maxchg = chg
                            wi = cand
                    w[i1, i2, i3] = wi
                i3 += s3
            i2 += s2
        i1 += s1
    return maxchg


# ------------------------------------------------------- narrow band init

@njit(cache=True)
def narrow_band_2d(v, simp, perm, dx, scode, sdata, wmag, frozen):
    """Exact-on-simplices initial values |v_i| / beta(grad v|_T).

    Writes magnitudes into wmag (BIG where untouched) and marks frozen nodes.
    """
    m = v.shape[0] - 1
    ntyp = simp.shape[0]
    for c1 in range(m):
        for c2 in range(m):
            for t in range(ntyp):
                v0 = v[c1 + simp[t, 0, 0], c2 + simp[t, 0, 1]]
                v1 = v[c1 + simp[t, 1, 0], c2 + simp[t, 1, 1]]
                v2 = v[c1 + simp[t, 2, 0], c2 + simp[t, 2, 1]]
                vmin = min(v0, v1, v2)
                vmax = max(v0, v1, v2)
                if not (vmin <= 0.0 < vmax):
                    continue
                g1 = 0.0
                g2 = 0.0
                prev = v0
                for j in range(2):
                    cur = v[c1 + simp[t, j + 1, 0], c2 + simp[t, j + 1, 1]]
                    gcomp = (cur - prev) / dx
                    if perm[t, j] == 0:
                        g1 = gcomp
                    else:
                        g2 = gcomp
                    prev = cur
                denom = _sigma2(scode, sdata, g1, g2)
                if denom < 1e-300:
                    continue
                for j in range(3):
                    n1 = c1 + simp[t, j, 0]
                    n2 = c2 + simp[t, j, 1]
                    val = abs(v[n1, n2]) / denom
                    if val < wmag[n1, n2]:
                        wmag[n1, n2] = val
                    frozen[n1, n2] = 1


@njit(cache=True)
def narrow_band_3d(v, simp, perm, dx, scode, sdata, wmag, frozen):
    m = v.shape[0] - 1
    ntyp = simp.shape[0]
    for c1 in range(m):
        for c2 in range(m):
            for c3 in range(m):
                for t in range(ntyp):
                    vmin = BIG
                    vmax = -BIG
                    for j in range(4):
                        val = v[c1 + simp[t, j, 0], c2 + simp[t, j, 1], c3 + simp[t, j, 2]]
                        if val < vmin:
                            vmin = val
                        if val > vmax:
                            vmax = val
                    if not (vmin <= 0.0 < vmax):
                        continue
                    g1 = 0.0
                    g2 = 0.0
                    g3 = 0.0
                    prev = v[c1 + simp[t, 0, 0], c2 + simp[t, 0, 1], c3 + simp[t, 0, 2]]
                    for j in range(3):
                        cur = v[c1 + simp[t, j + 1, 0], c2 + simp[t, j + 1, 1],
                                c3 + simp[t, j + 1, 2]]
                        gcomp = (cur - prev) / dx
                        if perm[t, j] == 0:
                            g1 = gcomp
                        elif perm[t, j] == 1:
                            g2 = gcomp
                        else:
                            g3 = gcomp
                        prev = cur
                    denom = _sigma3(scode, sdata, g1, g2, g3)
                    if denom < 1e-300:
                        continue
                    for j in range(4):
                        n1 = c1 + simp[t, j, 0]
                        n2 = c2 + simp[t, j, 1]
                        n3 = c3 + simp[t, j, 2]
                        val = abs(v[n1, n2, n3]) / denom
                        if val < wmag[n1, n2, n3]:
                            wmag[n1, n2, n3] = val
                        frozen[n1, n2, n3] = 1


# -------------------------------------------------------- Gauss-Seidel FDM

@njit(cache=True, fastmath=True)
def gs_fdm_2d(v, rhs, mu, lam_dx2):
    """One lexicographic Gauss-Seidel pass of (mu - lam*Lap) v = rhs."""
    m1 = v.shape[0]
    for i1 in range(m1):
        for i2 in range(m1):
            acc = 0.0
            deg = 0.0
            if i1 > 0:
                acc += v[i1 - 1, i2]
                deg += 1.0
            if i1 < m1 - 1:
                acc += v[i1 + 1, i2]
                deg += 1.0
            if i2 > 0:
                acc += v[i1, i2 - 1]
                deg += 1.0
            if i2 < m1 - 1:
                acc += v[i1, i2 + 1]
                deg += 1.0
            v[i1, i2] = (rhs[i1, i2] + lam_dx2 * acc) / (mu + lam_dx2 * deg)


@njit(cache=True, fastmath=True)
def gs_fdm_3d(v, rhs, mu, lam_dx2):
    m1 = v.shape[0]
    for i1 in range(m1):
        for i2 in range(m1):
            for i3 in range(m1):
                acc = 0.0
                deg = 0.0
                if i1 > 0:
                    acc += v[i1 - 1, i2, i3]
                    deg += 1.0
                if i1 < m1 - 1:
                    acc += v[i1 + 1, i2, i3]
                    deg += 1.0
                if i2 > 0:
                    acc += v[i1, i2 - 1, i3]
                    deg += 1.0
                if i2 < m1 - 1:
                    acc += v[i1, i2 + 1, i3]
                    deg += 1.0
                if i3 > 0:
                    acc += v[i1, i2, i3 - 1]
                    deg += 1.0
                if i3 < m1 - 1:
                    acc += v[i1, i2, i3 + 1]
                    deg += 1.0
                v[i1, i2, i3] = (rhs[i1, i2, i3] + lam_dx2 * acc) / (mu + lam_dx2 * deg)


@njit(cache=True, fastmath=True)
def gs_csr(v, rhs, indptr, indices, data, diag):
    """One Gauss-Seidel pass over a CSR system in row order."""
    for i in range(v.shape[0]):
        acc = rhs[i]
        for jj in range(indptr[i], indptr[i + 1]):
            j = indices[jj]
            if j != i:
                acc -= data[jj] * v[j]
        v[i] = acc / diag[i]


# ----------------------------------------------------- marching simplices

@njit(cache=True)
def march_2d(v, simp, dx, verts, segs):
    """Zero level set by marching triangles; returns the facet count.

    verts: (max, 2) output buffer, segs: (max, 2) int output buffer.
    Inside is v <= 0.
    """
    m = v.shape[0] - 1
    nseg = 0
    nv = 0
    ntyp = simp.shape[0]
    for c1 in range(m):
        for c2 in range(m):
            for t in range(ntyp):
                neg0 = v[c1 + simp[t, 0, 0], c2 + simp[t, 0, 1]] <= 0.0
                neg1 = v[c1 + simp[t, 1, 0], c2 + simp[t, 1, 1]] <= 0.0
                neg2 = v[c1 + simp[t, 2, 0], c2 + simp[t, 2, 1]] <= 0.0
                cnt = 0
                if neg0:
                    cnt += 1
                if neg1:
                    cnt += 1
                if neg2:
                    cnt += 1
                if cnt == 0 or cnt == 3:
                    continue
                np_ = 0
                for a in range(3):
                    for b in range(a + 1, 3):
                        ia1 = c1 + simp[t, a, 0]
                        ia2 = c2 + simp[t, a, 1]
                        ib1 = c1 + simp[t, b, 0]
                        ib2 = c2 + simp[t, b, 1]
                        va = v[ia1, ia2]
                        vb = v[ib1, ib2]
                        if (va <= 0.0) == (vb <= 0.0):
                            continue
                        tt = va / (va - vb)
                        verts[nv + np_, 0] = (ia1 + tt * (ib1 - ia1)) * dx - 0.5
                        verts[nv + np_, 1] = (ia2 + tt * (ib2 - ia2)) * dx - 0.5
                        np_ += 1
                if np_ == 2:
                    segs[nseg, 0] = nv
                    segs[nseg, 1] = nv + 1
                    nv += 2
                    nseg += 1
    return nseg


@njit(cache=True)
def march_3d(v, simp, dx, verts, tris):
    """Zero level set by marching tetrahedra; returns the triangle count."""
    m = v.shape[0] - 1
    ntri = 0
    nv = 0
    ntyp = simp.shape[0]
    vals = np.empty(4)
    neg = np.empty(4, dtype=np.uint8)
    idx = np.empty((4, 3), dtype=np.int64)
    pts = np.empty((4, 3))
    negs = np.empty(4, dtype=np.int64)
    poss = np.empty(4, dtype=np.int64)
    for c1 in range(m):
        for c2 in range(m):
            for c3 in range(m):
                for t in range(ntyp):
                    cnt = 0
                    for j in range(4):
                        i1 = c1 + simp[t, j, 0]
                        i2 = c2 + simp[t, j, 1]
                        i3 = c3 + simp[t, j, 2]
                        idx[j, 0] = i1
                        idx[j, 1] = i2
                        idx[j, 2] = i3
                        vals[j] = v[i1, i2, i3]
                        if vals[j] <= 0.0:
                            neg[j] = 1
                            cnt += 1
                        else:
                            neg[j] = 0
                    if cnt == 0 or cnt == 4:
                        continue
                    nneg = 0
                    npos = 0
                    for j in range(4):
                        if neg[j]:
                            negs[nneg] = j
                            nneg += 1
                        else:
                            poss[npos] = j
                            npos += 1
                    if cnt == 1 or cnt == 3:
                        if cnt == 1:
                            lone = negs[0]
                            oth0 = poss[0]
                            oth1 = poss[1]
                            oth2 = poss[2]
                        else:
                            lone = poss[0]
                            oth0 = negs[0]
                            oth1 = negs[1]
                            oth2 = negs[2]
                        kk = 0
                        for oth in (oth0, oth1, oth2):
                            va = vals[lone]
                            vb = vals[oth]
                            tt = va / (va - vb)
                            for d in range(3):
                                pts[kk, d] = (idx[lone, d] + tt * (idx[oth, d] - idx[lone, d])) * dx - 0.5
                            kk += 1
                        for p in range(3):
                            verts[nv + p, 0] = pts[p, 0]
                            verts[nv + p, 1] = pts[p, 1]
                            verts[nv + p, 2] = pts[p, 2]
                        tris[ntri, 0] = nv
                        tris[ntri, 1] = nv + 1
                        tris[ntri, 2] = nv + 2
                        nv += 3
                        ntri += 1
                    else:
                        # quad: crossings (a1,b1), (a1,b2), (a2,b2), (a2,b1)
                        pairs_a = (negs[0], negs[0], negs[1], negs[1])
                        pairs_b = (poss[0], poss[1], poss[1], poss[0])
                        for p in range(4):
                            va = vals[pairs_a[p]]
                            vb = vals[pairs_b[p]]
                            tt = va / (va - vb)
                            for d in range(3):
                                pts[p, d] = (idx[pairs_a[p], d]
                                             + tt * (idx[pairs_b[p], d] - idx[pairs_a[p], d])) * dx - 0.5
                        for p in range(4):
                            verts[nv + p, 0] = pts[p, 0]
                            verts[nv + p, 1] = pts[p, 1]
                            verts[nv + p, 2] = pts[p, 2]
                        tris[ntri, 0] = nv
                        tris[ntri, 1] = nv + 1
                        tris[ntri, 2] = nv + 2
                        tris[ntri + 1, 0] = nv
                        tris[ntri + 1, 1] = nv + 2
                        tris[ntri + 1, 2] = nv + 3
                        nv += 4
                        ntri += 2
    return ntri


@njit(cache=True)
def count_crossing_2d(v, simp):
    m = v.shape[0] - 1
    cnt = 0
    for c1 in range(m):
        for c2 in range(m):
            for t in range(simp.shape[0]):
                vmin = BIG
                vmax = -BIG
                for j in range(3):
                    val = v[c1 + simp[t, j, 0], c2 + simp[t, j, 1]]
                    if val < vmin:
                        vmin = val
                    if val > vmax:
                        vmax = val
                if vmin <= 0.0 < vmax:
                    cnt += 1
    return cnt


@njit(cache=True)
def count_crossing_3d(v, simp):
    m = v.shape[0] - 1
    cnt = 0
    for c1 in range(m):
        for c2 in range(m):
            for c3 in range(m):
                for t in range(simp.shape[0]):
                    vmin = BIG
                    vmax = -BIG
                    for j in range(4):
                        val = v[c1 + simp[t, j, 0], c2 + simp[t, j, 1], c3 + simp[t, j, 2]]
                        if val < vmin:
                            vmin = val
                        if val > vmax:
                            vmax = val
                    if vmin <= 0.0 < vmax:
                        cnt += 1
    return cnt


# ------------------------------------------------------- P1 interpolation

@njit(cache=True)
def interp_p1_2d(field, pts, dx, out):
    """Interpolate a node field at points with the P1 Kuhn-mesh interpolant."""
    m = field.shape[0] - 1
    for p in range(pts.shape[0]):
        x1 = (pts[p, 0] + 0.5) / dx
        x2 = (pts[p, 1] + 0.5) / dx
        c1 = int(np.floor(x1))
        c2 = int(np.floor(x2))
        if c1 < 0:
            c1 = 0
        if c1 > m - 1:
            c1 = m - 1
        if c2 < 0:
            c2 = 0
        if c2 > m - 1:
            c2 = m - 1
        t1 = x1 - c1
        t2 = x2 - c2
        # descending sort of (t1, t2) gives the Kuhn simplex and weights
        if t1 >= t2:
            out[p] = (field[c1, c2] * (1.0 - t1)
                      + field[c1 + 1, c2] * (t1 - t2)
                      + field[c1 + 1, c2 + 1] * t2)
        else:
            out[p] = (field[c1, c2] * (1.0 - t2)
                      + field[c1, c2 + 1] * (t2 - t1)
                      + field[c1 + 1, c2 + 1] * t1)


@njit(cache=True)
def interp_p1_3d(field, pts, dx, out):
    m = field.shape[0] - 1
    tscratch = np.empty(3)
    for p in range(pts.shape[0]):
        x1 = (pts[p, 0] + 0.5) / dx
        x2 = (pts[p, 1] + 0.5) / dx
        x3 = (pts[p, 2] + 0.5) / dx
        c1 = int(np.floor(x1))
        c2 = int(np.floor(x2))
        c3 = int(np.floor(x3))
        if c1 < 0:
            c1 = 0
        if c1 > m - 1:
            c1 = m - 1
        if c2 < 0:
            c2 = 0
        if c2 > m - 1:
            c2 = m - 1
        if c3 < 0:
            c3 = 0
        if c3 > m - 1:
            c3 = m - 1
        t = tscratch
        t[0] = x1 - c1
        t[1] = x2 - c2
        t[2] = x3 - c3
        # insertion sort of axes by descending local coordinate
        a0 = 0
        a1 = 1
        a2 = 2
        if t[a1] > t[a0]:
            a0, a1 = a1, a0
        if t[a2] > t[a1]:
            a1, a2 = a2, a1
        if t[a1] > t[a0]:
            a0, a1 = a1, a0
        i1 = c1
        i2 = c2
        i3 = c3
        val = field[i1, i2, i3] * (1.0 - t[a0])
        w1 = t[a0] - t[a1]
        w2 = t[a1] - t[a2]
        w3 = t[a2]
        if a0 == 0:
            i1 += 1
        elif a0 == 1:
            i2 += 1
        else:
            i3 += 1
        val += field[i1, i2, i3] * w1
        if a1 == 0:
            i1 += 1
        elif a1 == 1:
            i2 += 1
        else:
            i3 += 1
        val += field[i1, i2, i3] * w2
        if a2 == 0:
            i1 += 1
        elif a2 == 1:
            i2 += 1
        else:
            i3 += 1
        val += field[i1, i2, i3] * w3
        out[p] = val


# ------------------------------------------- exact facet distances (init)

@njit(cache=True)
def facet_dist_2d(verts, segs, dx, band, wmag, frozen):
    """Exact Euclidean node-to-segment distances near each segment."""
    m = wmag.shape[0] - 1
    for s in range(segs.shape[0]):
        ax = verts[segs[s, 0], 0]
        ay = verts[segs[s, 0], 1]
        bx = verts[segs[s, 1], 0]
        by = verts[segs[s, 1], 1]
        lo1 = int(np.floor((min(ax, bx) + 0.5) / dx)) - band
        hi1 = int(np.ceil((max(ax, bx) + 0.5) / dx)) + band
        lo2 = int(np.floor((min(ay, by) + 0.5) / dx)) - band
        hi2 = int(np.ceil((max(ay, by) + 0.5) / dx)) + band
        if lo1 < 0:
            lo1 = 0
        if lo2 < 0:
            lo2 = 0
        if hi1 > m:
            hi1 = m
        if hi2 > m:
            hi2 = m
        ex = bx - ax
        ey = by - ay
        ee = ex * ex + ey * ey
        for i1 in range(lo1, hi1 + 1):
            px = i1 * dx - 0.5
            for i2 in range(lo2, hi2 + 1):
                py = i2 * dx - 0.5
                if ee > 1e-300:
                    tt = ((px - ax) * ex + (py - ay) * ey) / ee
                    if tt < 0.0:
                        tt = 0.0
                    if tt > 1.0:
                        tt = 1.0
                else:
                    tt = 0.0
                qx = ax + tt * ex
                qy = ay + tt * ey
                d = np.sqrt((px - qx) ** 2 + (py - qy) ** 2)
                if d < wmag[i1, i2]:
                    wmag[i1, i2] = d
                frozen[i1, i2] = 1


@njit(cache=True)
def _point_tri_dist(px, py, pz, ax, ay, az, bx, by, bz, cx, cy, cz):
    # Ericson-style closest point on triangle
    abx = bx - ax
    aby = by - ay
    abz = bz - az
    acx = cx - ax
    acy = cy - ay
    acz = cz - az
    apx = px - ax
    apy = py - ay
    apz = pz - az
    d1 = abx * apx + aby * apy + abz * apz
    d2 = acx * apx + acy * apy + acz * apz
    if d1 <= 0.0 and d2 <= 0.0:
        return np.sqrt(apx * apx + apy * apy + apz * apz)
    bpx = px - bx
    bpy = py - by
    bpz = pz - bz
    d3 = abx * bpx + aby * bpy + abz * bpz
    d4 = acx * bpx + acy * bpy + acz * bpz
    if d3 >= 0.0 and d4 <= d3:
        return np.sqrt(bpx * bpx + bpy * bpy + bpz * bpz)
    vc = d1 * d4 - d3 * d2
    if vc <= 0.0 and d1 >= 0.0 and d3 <= 0.0:
        t = d1 / (d1 - d3)
        qx = ax + t * abx
        qy = ay + t * aby
        qz = az + t * abz
        return np.sqrt((px - qx) ** 2 + (py - qy) ** 2 + (pz - qz) ** 2)
    cpx = px - cx
    cpy = py - cy
    cpz = pz - cz
    d5 = abx * cpx + aby * cpy + abz * cpz
    d6 = acx * cpx + acy * cpy + acz * cpz
    if d6 >= 0.0 and d5 <= d6:
        return np.sqrt(cpx * cpx + cpy * cpy + cpz * cpz)
    vb = d5 * d2 - d1 * d6
    if vb <= 0.0 and d2 >= 0.0 and d6 <= 0.0:
        t = d2 / (d2 - d6)
        qx = ax + t * acx
        qy = ay + t * acy
        qz = az + t * acz
        return np.sqrt((px - qx) ** 2 + (py - qy) ** 2 + (pz - qz) ** 2)
    va = d3 * d6 - d5 * d4
    if va <= 0.0 and (d4 - d3) >= 0.0 and (d5 - d6) >= 0.0:
        t = (d4 - d3) / ((d4 - d3) + (d5 - d6))
        qx = bx + t * (cx - bx)
        qy = by + t * (cy - by)
        qz = bz + t * (cz - bz)
        return np.sqrt((px - qx) ** 2 + (py - qy) ** 2 + (pz - qz) ** 2)
    denom = 1.0 / (va + vb + vc)
    s = vb * denom
    t = vc * denom
    qx = ax + s * abx + t * acx
    qy = ay + s * aby + t * acy
    qz = az + s * abz + t * acz
    return np.sqrt((px - qx) ** 2 + (py - qy) ** 2 + (pz - qz) ** 2)


@njit(cache=True)
def facet_dist_3d(verts, tris, dx, band, wmag, frozen):
    """Exact Euclidean node-to-triangle distances near each triangle."""
    m = wmag.shape[0] - 1
    for s in range(tris.shape[0]):
        ax = verts[tris[s, 0], 0]
        ay = verts[tris[s, 0], 1]
        az = verts[tris[s, 0], 2]
        bx = verts[tris[s, 1], 0]
        by = verts[tris[s, 1], 1]
        bz = verts[tris[s, 1], 2]
        cx = verts[tris[s, 2], 0]
        cy = verts[tris[s, 2], 1]
        cz = verts[tris[s, 2], 2]
        lo1 = int(np.floor((min(ax, bx, cx) + 0.5) / dx)) - band
        hi1 = int(np.ceil((max(ax, bx, cx) + 0.5) / dx)) + band
        lo2 = int(np.floor((min(ay, by, cy) + 0.5) / dx)) - band
        hi2 = int(np.ceil((max(ay, by, cy) + 0.5) / dx)) + band
        lo3 = int(np.floor((min(az, bz, cz) + 0.5) / dx)) - band
        hi3 = int(np.ceil((max(az, bz, cz) + 0.5) / dx)) + band
        if lo1 < 0:
            lo1 = 0
        if lo2 < 0:
            lo2 = 0
        if lo3 < 0:
            lo3 = 0
        if hi1 > m:
            hi1 = m
        if hi2 > m:
            hi2 = m
        if hi3 > m:
            hi3 = m
        for i1 in range(lo1, hi1 + 1):
            px = i1 * dx - 0.5
            for i2 in range(lo2, hi2 + 1):
                py = i2 * dx - 0.5
                for i3 in range(lo3, hi3 + 1):
                    pz = i3 * dx - 0.5
                    d = _point_tri_dist(px, py, pz, ax, ay, az,
                                        bx, by, bz, cx, cy, cz)
                    if d < wmag[i1, i2, i3]:
                        wmag[i1, i2, i3] = d
                    frozen[i1, i2, i3] = 1
