"""Hot loops, compiled with numba when available.

Every kernel has a pure-numpy twin with identical semantics.  The backend is
picked at import time from ``WSURF_NUMBA`` (``0``/``false``/``off`` selects
numpy) and can be switched later with :func:`set_backend`, which the
benchmark and the equivalence tests use.
"""

from __future__ import annotations

import math
import os

import numpy as np

try:
    import numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None


def _env_wants_numba():
    return os.environ.get("WSURF_NUMBA", "1").strip().lower() not in ("0", "false", "no", "off")


# ---------------------------------------------------------------------------
# axisymmetric ODE
# ---------------------------------------------------------------------------
def _rhs_scalar(f, u, H, m):
    F = math.sqrt(1.0 + u * u)
    q = H + 2.0 / (f * F)
    return u, H * F * F * F + F * F / f, m * F / f, -0.5 * q * q * H * f * F


def _np_rk4_run(y0, t0, h, n, f_min):
    ts = np.empty(n + 1)
    ys = np.empty((n + 1, 4))
    ts[0] = t0
    ys[0] = y0
    f, u, H, m = (float(x) for x in y0)
    rhs = _rhs_scalar
    for i in range(n):
        a1 = rhs(f, u, H, m)
        a2 = rhs(f + 0.5 * h * a1[0], u + 0.5 * h * a1[1], H + 0.5 * h * a1[2], m + 0.5 * h * a1[3])
        a3 = rhs(f + 0.5 * h * a2[0], u + 0.5 * h * a2[1], H + 0.5 * h * a2[2], m + 0.5 * h * a2[3])
        a4 = rhs(f + h * a3[0], u + h * a3[1], H + h * a3[2], m + h * a3[3])
        c = h / 6.0
        fn = f + c * (a1[0] + 2.0 * a2[0] + 2.0 * a3[0] + a4[0])
        un = u + c * (a1[1] + 2.0 * a2[1] + 2.0 * a3[1] + a4[1])
        Hn = H + c * (a1[2] + 2.0 * a2[2] + 2.0 * a3[2] + a4[2])
        mn = m + c * (a1[3] + 2.0 * a2[3] + 2.0 * a3[3] + a4[3])
        if not fn > f_min:
            return ts[: i + 1], ys[: i + 1], 1
        f, u, H, m = fn, un, Hn, mn
        ts[i + 1] = t0 + (i + 1) * h
        ys[i + 1, 0] = f
        ys[i + 1, 1] = u
        ys[i + 1, 2] = H
        ys[i + 1, 3] = m
    return ts, ys, 0


# ---------------------------------------------------------------------------
# triangle meshes
# ---------------------------------------------------------------------------
def _np_face_data(V, F):
    """Corner angles, corner cotangents and areas of every face."""
    p = V[F]  # (nf, 3, 3)
    ang = np.empty(F.shape)
    cot = np.empty(F.shape)
    for k in range(3):
        a = p[:, (k + 1) % 3] - p[:, k]
        b = p[:, (k + 2) % 3] - p[:, k]
        cr = np.linalg.norm(np.cross(a, b), axis=1)
        dt = np.einsum("ij,ij->i", a, b)
        ang[:, k] = np.arctan2(cr, dt)
        with np.errstate(divide="ignore", invalid="ignore"):
            cot[:, k] = dt / cr
    area = 0.5 * np.linalg.norm(np.cross(p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]), axis=1)
    return ang, cot, area


def _np_vertex_accumulate(V, F, ang, cot, area, nv):
    """Mixed Voronoi areas and angle sums per vertex."""
    p = V[F]
    A = np.zeros(nv)
    S = np.zeros(nv)
    obtuse = ang > 0.5 * np.pi
    any_obt = obtuse.any(axis=1)
    for k in range(3):
        i = F[:, k]
        e1 = p[:, (k + 1) % 3] - p[:, k]
        e2 = p[:, (k + 2) % 3] - p[:, k]
        # Voronoi share: edges k->k+1 (opposite corner k+2) and k->k+2 (opposite k+1)
        vor = (np.einsum("ij,ij->i", e1, e1) * cot[:, (k + 2) % 3] + np.einsum("ij,ij->i", e2, e2) * cot[:, (k + 1) % 3]) / 8.0
        share = np.where(any_obt, np.where(obtuse[:, k], 0.5 * area, 0.25 * area), vor)
        np.add.at(A, i, share)
        np.add.at(S, i, ang[:, k])
    return A, S


def _np_cotan_apply(F, cot, X):
    """Unnormalized cotan Laplacian: 0.5 * sum cot (X_j - X_i)."""
    out = np.zeros_like(X)
    for k in range(3):
        i, j = F[:, (k + 1) % 3], F[:, (k + 2) % 3]
        w = 0.5 * cot[:, k][:, None]
        d = w * (X[j] - X[i])
        np.add.at(out, i, d)
        np.add.at(out, j, -d)
    return out


# ---------------------------------------------------------------------------
# numba twins
# ---------------------------------------------------------------------------
_NB = {}


def _build_numba():
    if _NB or numba is None:
        return bool(_NB)
    njit = numba.njit(cache=True, nogil=True, error_model="numpy")

    rhs = njit(_rhs_scalar)

    @njit
    def rk4_run(y0, t0, h, n, f_min):
        ts = np.empty(n + 1)
        ys = np.empty((n + 1, 4))
        ts[0] = t0
        for c in range(4):
            ys[0, c] = y0[c]
        f, u, H, m = y0[0], y0[1], y0[2], y0[3]
        for i in range(n):
            a1 = rhs(f, u, H, m)
            a2 = rhs(f + 0.5 * h * a1[0], u + 0.5 * h * a1[1], H + 0.5 * h * a1[2], m + 0.5 * h * a1[3])
            a3 = rhs(f + 0.5 * h * a2[0], u + 0.5 * h * a2[1], H + 0.5 * h * a2[2], m + 0.5 * h * a2[3])
            a4 = rhs(f + h * a3[0], u + h * a3[1], H + h * a3[2], m + h * a3[3])
            c6 = h / 6.0
            fn = f + c6 * (a1[0] + 2.0 * a2[0] + 2.0 * a3[0] + a4[0])
            un = u + c6 * (a1[1] + 2.0 * a2[1] + 2.0 * a3[1] + a4[1])
            Hn = H + c6 * (a1[2] + 2.0 * a2[2] + 2.0 * a3[2] + a4[2])
            mn = m + c6 * (a1[3] + 2.0 * a2[3] + 2.0 * a3[3] + a4[3])
            if not fn > f_min:
                return ts[: i + 1], ys[: i + 1], 1
            f, u, H, m = fn, un, Hn, mn
            ts[i + 1] = t0 + (i + 1) * h
            ys[i + 1, 0] = f
            ys[i + 1, 1] = u
            ys[i + 1, 2] = H
            ys[i + 1, 3] = m
        return ts, ys, 0

    @njit
    def face_data(V, F):
        nf = F.shape[0]
        ang = np.empty((nf, 3))
        cot = np.empty((nf, 3))
        area = np.empty(nf)
        for f in range(nf):
            for k in range(3):
                i0, i1, i2 = F[f, k], F[f, (k + 1) % 3], F[f, (k + 2) % 3]
                a0, a1, a2 = V[i1, 0] - V[i0, 0], V[i1, 1] - V[i0, 1], V[i1, 2] - V[i0, 2]
                b0, b1, b2 = V[i2, 0] - V[i0, 0], V[i2, 1] - V[i0, 1], V[i2, 2] - V[i0, 2]
                c0, c1, c2 = a1 * b2 - a2 * b1, a2 * b0 - a0 * b2, a0 * b1 - a1 * b0
                cr = math.sqrt(c0 * c0 + c1 * c1 + c2 * c2)
                dt = a0 * b0 + a1 * b1 + a2 * b2
                ang[f, k] = math.atan2(cr, dt)
                cot[f, k] = dt / cr
                if k == 0:
                    area[f] = 0.5 * cr
        return ang, cot, area

    @njit
    def vertex_accumulate(V, F, ang, cot, area, nv):
        A = np.zeros(nv)
        S = np.zeros(nv)
        half_pi = 0.5 * math.pi
        for f in range(F.shape[0]):
            obt = ang[f, 0] > half_pi or ang[f, 1] > half_pi or ang[f, 2] > half_pi
            for k in range(3):
                i = F[f, k]
                S[i] += ang[f, k]
                if obt:
                    A[i] += 0.5 * area[f] if ang[f, k] > half_pi else 0.25 * area[f]
                else:
                    j1, j2 = F[f, (k + 1) % 3], F[f, (k + 2) % 3]
                    l1 = 0.0
                    l2 = 0.0
                    for c in range(3):
                        d1 = V[j1, c] - V[i, c]
                        d2 = V[j2, c] - V[i, c]
                        l1 += d1 * d1
                        l2 += d2 * d2
                    A[i] += (l1 * cot[f, (k + 2) % 3] + l2 * cot[f, (k + 1) % 3]) / 8.0
        return A, S

    @njit
    def cotan_apply(F, cot, X):
        out = np.zeros_like(X)
        m = X.shape[1]
        for f in range(F.shape[0]):
            for k in range(3):
                i, j = F[f, (k + 1) % 3], F[f, (k + 2) % 3]
                w = 0.5 * cot[f, k]
                for c in range(m):
                    d = w * (X[j, c] - X[i, c])
                    out[i, c] += d
                    out[j, c] -= d
        return out

    _NB.update(rk4_run=rk4_run, face_data=face_data, vertex_accumulate=vertex_accumulate, cotan_apply=cotan_apply)
    return True


_NP = {
    "rk4_run": _np_rk4_run,
    "face_data": _np_face_data,
    "vertex_accumulate": _np_vertex_accumulate,
    "cotan_apply": _np_cotan_apply,
}

_active = {"name": "numpy", "impl": _NP}


def set_backend(name):
    """Select ``'numba'`` or ``'numpy'``; returns the backend actually in use."""
    if name == "numba" and _build_numba():
        _active.update(name="numba", impl=_NB)
    elif name in ("numba", "numpy"):
        _active.update(name="numpy", impl=_NP)
    else:
        raise ValueError(f"unknown backend {name!r}")
    return _active["name"]


def backend():
    return _active["name"]


set_backend("numba" if _env_wants_numba() else "numpy")


def rk4_run(y0, t0, h, n, f_min):
    return _active["impl"]["rk4_run"](np.asarray(y0, dtype=float), float(t0), float(h), int(n), float(f_min))


def face_data(V, F):
    return _active["impl"]["face_data"](np.ascontiguousarray(V, dtype=float), np.ascontiguousarray(F, dtype=np.int64))


def vertex_accumulate(V, F, ang, cot, area, nv):
    return _active["impl"]["vertex_accumulate"](
        np.ascontiguousarray(V, dtype=float), np.ascontiguousarray(F, dtype=np.int64), ang, cot, area, int(nv)
    )


def cotan_apply(F, cot, X):
    X = np.asarray(X, dtype=float)
    flat = X.ndim == 1
    out = _active["impl"]["cotan_apply"](np.ascontiguousarray(F, dtype=np.int64), cot, np.ascontiguousarray(X.reshape(len(X), -1)))
    return out[:, 0] if flat else out
