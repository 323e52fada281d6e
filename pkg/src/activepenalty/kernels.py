"""Hot numeric kernels, in a numba flavour and a pure-numpy flavour.

Every public kernel below has the same signature in both flavours. The module
level names are bound to whichever backend :mod:`activepenalty._backend`
selected; ``NUMPY`` and ``NUMBA`` expose both explicitly so tests and the
benchmark can compare them.

Stencils are centred and periodic. Index ``[i, j]`` is ``(x_i, y_j)``.
"""
from types import SimpleNamespace

import numpy as np

from ._backend import BACKEND, HAVE_NUMBA, njit

# Offsets -2..2.
FIRST = {
    2: np.array([0.0, -0.5, 0.0, 0.5, 0.0]),
    4: np.array([1.0, -8.0, 0.0, 8.0, -1.0]) / 12.0,
}
SECOND = {
    2: np.array([0.0, 1.0, -2.0, 1.0, 0.0]),
    4: np.array([-1.0, 16.0, -30.0, 16.0, -1.0]) / 12.0,
}


def _check_acc(acc):
    if acc not in (2, 4):
        raise ValueError(f"accuracy must be 2 or 4, got {acc}")
    return acc


def _first(acc):
    return FIRST[_check_acc(acc)]


def _second(acc):
    return SECOND[_check_acc(acc)]


# --------------------------------------------------------------------------
# numpy flavour
# --------------------------------------------------------------------------

def _np_laplacian_1d(f, h, acc):
    c = _second(acc)
    out = c[2] * f
    for o in (-2, -1, 1, 2):
        if c[o + 2] != 0.0:
            out = out + c[o + 2] * np.roll(f, -o)
    return out / (h * h)


def _np_laplacian_2d(f, h, acc):
    c = _second(acc)
    out = 2.0 * c[2] * f
    for o in (-2, -1, 1, 2):
        if c[o + 2] != 0.0:
            out = out + c[o + 2] * (np.roll(f, -o, axis=0) + np.roll(f, -o, axis=1))
    return out / (h * h)


def _np_advect_2d(u, v, wx, wy, h):
    inv = 0.5 / h
    ux = (np.roll(u, -1, 0) - np.roll(u, 1, 0)) * inv
    uy = (np.roll(u, -1, 1) - np.roll(u, 1, 1)) * inv
    vx = (np.roll(v, -1, 0) - np.roll(v, 1, 0)) * inv
    vy = (np.roll(v, -1, 1) - np.roll(v, 1, 1)) * inv
    return wx * ux + wy * uy, wx * vx + wy * vy


def _np_normal_derivs_1d(u, nodes, w, nrm, h, k, acc):
    n = u.shape[0]
    c1 = _first(acc)
    c2 = _second(acc)
    d1 = np.zeros(nodes.shape)
    d2 = np.zeros(nodes.shape)
    for o in range(-2, 3):
        vals = u[(nodes + o) % n]
        d1 += c1[o + 2] * vals
        if k >= 2:
            d2 += c2[o + 2] * vals
    un = nrm * np.sum(w * d1, axis=1) / h
    if k >= 2:
        unn = nrm * nrm * np.sum(w * d2, axis=1) / (h * h)
    else:
        unn = np.zeros_like(un)
    return un, unn


def _np_normal_derivs_2d(u, ii, jj, w, nx, ny, h, k, acc):
    n0, n1 = u.shape
    c1 = _first(acc)
    c2 = _second(acc)
    gx = np.zeros(ii.shape)
    gy = np.zeros(ii.shape)
    hxx = np.zeros(ii.shape)
    hyy = np.zeros(ii.shape)
    hxy = np.zeros(ii.shape)
    for o in range(-2, 3):
        a1 = c1[o + 2]
        a2 = c2[o + 2]
        if a1 == 0.0 and (k < 2 or a2 == 0.0):
            continue
        ux = u[(ii + o) % n0, jj]
        uy = u[ii, (jj + o) % n1]
        gx += a1 * ux
        gy += a1 * uy
        if k >= 2:
            hxx += a2 * ux
            hyy += a2 * uy
    if k >= 2:
        for a in range(-2, 3):
            if c1[a + 2] == 0.0:
                continue
            for b in range(-2, 3):
                if c1[b + 2] == 0.0:
                    continue
                hxy += c1[a + 2] * c1[b + 2] * u[(ii + a) % n0, (jj + b) % n1]
    gx = np.sum(w * gx, axis=1) / h
    gy = np.sum(w * gy, axis=1) / h
    un = nx * gx + ny * gy
    if k >= 2:
        h2 = h * h
        sxx = np.sum(w * hxx, axis=1) / h2
        syy = np.sum(w * hyy, axis=1) / h2
        sxy = np.sum(w * hxy, axis=1) / h2
        unn = nx * nx * sxx + 2.0 * nx * ny * sxy + ny * ny * syy
    else:
        unn = np.zeros_like(un)
    return un, unn


# --------------------------------------------------------------------------
# numba flavour
# --------------------------------------------------------------------------

@njit
def _nb_laplacian_1d_impl(f, h, c):
    n = f.shape[0]
    out = np.empty(n)
    inv = 1.0 / (h * h)
    for i in range(n):
        acc = 0.0
        for o in range(-2, 3):
            co = c[o + 2]
            if co != 0.0:
                acc += co * f[(i + o) % n]
        out[i] = acc * inv
    return out


@njit
def _nb_laplacian_2d_impl(f, h, c):
    n0, n1 = f.shape
    out = np.empty((n0, n1))
    inv = 1.0 / (h * h)
    # wrapped neighbour indices, so the inner loop has no modulo
    wi = np.empty((5, n0), dtype=np.int64)
    wj = np.empty((5, n1), dtype=np.int64)
    for o in range(5):
        for i in range(n0):
            wi[o, i] = (i + o - 2) % n0
        for j in range(n1):
            wj[o, j] = (j + o - 2) % n1
    c0, c1, c2, c3, c4 = c[0], c[1], c[2], c[3], c[4]
    for i in range(n0):
        r0 = f[wi[0, i]]
        r1 = f[wi[1, i]]
        r2 = f[i]
        r3 = f[wi[3, i]]
        r4 = f[wi[4, i]]
        for j in range(n1):
            acc = (c0 * (r0[j] + r2[wj[0, j]]) + c1 * (r1[j] + r2[wj[1, j]])
                   + 2.0 * c2 * r2[j] + c3 * (r3[j] + r2[wj[3, j]]) + c4 * (r4[j] + r2[wj[4, j]]))
            out[i, j] = acc * inv
    return out


@njit
def _nb_advect_2d_impl(u, v, wx, wy, h):
    n0, n1 = u.shape
    au = np.empty((n0, n1))
    av = np.empty((n0, n1))
    inv = 0.5 / h
    for i in range(n0):
        ip = (i + 1) % n0
        im = (i - 1) % n0
        for j in range(n1):
            jp = (j + 1) % n1
            jm = (j - 1) % n1
            a = wx[i, j]
            b = wy[i, j]
            au[i, j] = (a * (u[ip, j] - u[im, j]) + b * (u[i, jp] - u[i, jm])) * inv
            av[i, j] = (a * (v[ip, j] - v[im, j]) + b * (v[i, jp] - v[i, jm])) * inv
    return au, av


@njit
def _nb_normal_derivs_1d_impl(u, nodes, w, nrm, h, k, c1, c2):
    n = u.shape[0]
    t = nodes.shape[0]
    m = nodes.shape[1]
    un = np.zeros(t)
    unn = np.zeros(t)
    for p in range(t):
        s1 = 0.0
        s2 = 0.0
        for q in range(m):
            node = nodes[p, q]
            d1 = 0.0
            d2 = 0.0
            for o in range(-2, 3):
                val = u[(node + o) % n]
                d1 += c1[o + 2] * val
                if k >= 2:
                    d2 += c2[o + 2] * val
            s1 += w[p, q] * d1
            s2 += w[p, q] * d2
        un[p] = nrm[p] * s1 / h
        if k >= 2:
            unn[p] = nrm[p] * nrm[p] * s2 / (h * h)
    return un, unn


@njit
def _nb_normal_derivs_2d_impl(u, ii, jj, w, nx, ny, h, k, c1, c2):
    n0, n1 = u.shape
    t = ii.shape[0]
    m = ii.shape[1]
    un = np.zeros(t)
    unn = np.zeros(t)
    h2 = h * h
    for p in range(t):
        gx = 0.0
        gy = 0.0
        sxx = 0.0
        syy = 0.0
        sxy = 0.0
        for q in range(m):
            i = ii[p, q]
            j = jj[p, q]
            wq = w[p, q]
            dx = 0.0
            dy = 0.0
            dxx = 0.0
            dyy = 0.0
            dxy = 0.0
            for o in range(-2, 3):
                ux = u[(i + o) % n0, j]
                uy = u[i, (j + o) % n1]
                dx += c1[o + 2] * ux
                dy += c1[o + 2] * uy
                if k >= 2:
                    dxx += c2[o + 2] * ux
                    dyy += c2[o + 2] * uy
            if k >= 2:
                for a in range(-2, 3):
                    ca = c1[a + 2]
                    if ca == 0.0:
                        continue
                    for b in range(-2, 3):
                        cb = c1[b + 2]
                        if cb == 0.0:
                            continue
                        dxy += ca * cb * u[(i + a) % n0, (j + b) % n1]
            gx += wq * dx
            gy += wq * dy
            sxx += wq * dxx
            syy += wq * dyy
            sxy += wq * dxy
        un[p] = (nx[p] * gx + ny[p] * gy) / h
        if k >= 2:
            unn[p] = (nx[p] * nx[p] * sxx + 2.0 * nx[p] * ny[p] * sxy
                      + ny[p] * ny[p] * syy) / h2
    return un, unn


def _nb_laplacian_1d(f, h, acc):
    return _nb_laplacian_1d_impl(np.ascontiguousarray(f, dtype=np.float64), float(h), _second(acc))


def _nb_laplacian_2d(f, h, acc):
    return _nb_laplacian_2d_impl(np.ascontiguousarray(f, dtype=np.float64), float(h), _second(acc))


def _nb_advect_2d(u, v, wx, wy, h):
    wx = np.broadcast_to(np.asarray(wx, dtype=np.float64), u.shape)
    wy = np.broadcast_to(np.asarray(wy, dtype=np.float64), u.shape)
    return _nb_advect_2d_impl(u, v, np.ascontiguousarray(wx), np.ascontiguousarray(wy), float(h))


def _nb_normal_derivs_1d(u, nodes, w, nrm, h, k, acc):
    return _nb_normal_derivs_1d_impl(
        np.ascontiguousarray(u, dtype=np.float64), nodes, w, nrm, float(h), int(k),
        _first(acc), _second(acc))


def _nb_normal_derivs_2d(u, ii, jj, w, nx, ny, h, k, acc):
    return _nb_normal_derivs_2d_impl(
        np.ascontiguousarray(u, dtype=np.float64), ii, jj, w, nx, ny, float(h), int(k),
        _first(acc), _second(acc))


NUMPY = SimpleNamespace(
    name="numpy",
    laplacian_1d=_np_laplacian_1d,
    laplacian_2d=_np_laplacian_2d,
    advect_2d=_np_advect_2d,
    normal_derivs_1d=_np_normal_derivs_1d,
    normal_derivs_2d=_np_normal_derivs_2d,
)

NUMBA = SimpleNamespace(
    name="numba",
    laplacian_1d=_nb_laplacian_1d,
    laplacian_2d=_nb_laplacian_2d,
    advect_2d=_nb_advect_2d,
    normal_derivs_1d=_nb_normal_derivs_1d,
    normal_derivs_2d=_nb_normal_derivs_2d,
) if HAVE_NUMBA else None

ACTIVE = NUMBA if BACKEND == "numba" else NUMPY

laplacian_1d = ACTIVE.laplacian_1d
laplacian_2d = ACTIVE.laplacian_2d
advect_2d = ACTIVE.advect_2d
normal_derivs_1d = ACTIVE.normal_derivs_1d
normal_derivs_2d = ACTIVE.normal_derivs_2d
