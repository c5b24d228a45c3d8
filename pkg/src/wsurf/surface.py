"""Analytic parametric surface patches and their pointwise geometry.

A patch is an immersion ``r(s, t)`` over a parameter rectangle, written once
in terms of :mod:`wsurf.taylor` helpers so it can be evaluated on Taylor jets.
Pushing coordinate jets through the immersion gives exact partial derivatives
up to the jet order, and everything else (normal, fundamental forms,
curvatures and their derivatives) is assembled from those.

Sign conventions: H is the trace of the shape operator (so the unit sphere has
H = 2 with the inward normal), ``h(X, Y) = <D_X Y, n>`` and ``D_X n = -S X``.
"""

from __future__ import annotations

import csv
import json
import warnings
from dataclasses import dataclass, field, fields
from typing import Callable

import numpy as np

from . import taylor as tj
from .errors import ClosedSurface, DegenerateMetric, InvalidParams
from .taylor import Jet

JET_ORDER = 4
_EDGES = ("s0", "s1", "t0", "t1")


# ---------------------------------------------------------------------------
# patches
# ---------------------------------------------------------------------------
@dataclass(frozen=True)
class SurfacePatch:
    """Immersion over ``[s0, s1] x [t0, t1]``.

    ``immersion(s, t)`` receives two jets (or arrays) and returns three
    components.  ``sign`` selects the unit normal ``sign * r_s x r_t / |.|``.
    Alternatively ``jet_fn(s0, t0, order)`` may supply position jets
    directly; it takes precedence over ``immersion``.
    """

    s_range: tuple
    t_range: tuple
    immersion: Callable | None = None
    sign: int = 1
    periodic: tuple = (False, False)
    scale: float = 1.0
    description: dict = field(default_factory=dict)
    jet_fn: Callable | None = None
    degenerate: frozenset = frozenset()
    approximate: bool = False

    # -- evaluation --------------------------------------------------------
    def position_jets(self, s, t, order=JET_ORDER):
        """Position jets ``[x, y, z]`` at parameter points ``(s, t)``."""
        s = np.asarray(s)
        t = np.asarray(t)
        s, t = np.broadcast_arrays(s, t)
        if self.jet_fn is not None:
            out = self.jet_fn(s, t, order)
        else:
            sj = Jet.variable(s, 0, order)
            tjet = Jet.variable(t, 1, order)
            out = list(self.immersion(sj, tjet))
            out = [x if isinstance(x, Jet) else Jet.constant(x, order, s.shape) for x in out]
        if self.scale != 1.0:
            out = [x * self.scale for x in out]
        return out

    def position(self, s, t):
        return tj.values(self.position_jets(s, t, order=0))

    def with_(self, **changes):
        d = {f.name: getattr(self, f.name) for f in fields(self)}
        d.update(changes)
        return SurfacePatch(**d)

    def to_dict(self):
        d = dict(self.description)
        d["orientation"] = int(self.description.get("orientation", 1))
        if self.scale != 1.0:
            d["scale"] = self.scale
        return d

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True)

    @property
    def boundary_edges(self):
        out = []
        for e in _EDGES:
            axis = 0 if e[0] == "s" else 1
            if self.periodic[axis] or e in self.degenerate:
                continue
            out.append(e)
        return out


def rescale(patch: SurfacePatch, lam: float) -> SurfacePatch:
    """The patch ``lam * r``."""
    if not lam > 0:
        raise InvalidParams("rescale factor must be positive")
    desc = dict(patch.description)
    return patch.with_(scale=patch.scale * float(lam), description=desc)


def _find_degenerate(patch, n=9):
    """Edges that collapse to a point (poles, disk centres)."""
    out = set()
    for e in _EDGES:
        axis = 0 if e[0] == "s" else 1
        if patch.periodic[axis]:
            continue
        lo, hi = patch.t_range if axis == 0 else patch.s_range
        along = np.linspace(lo, hi, n)
        fixed = patch.s_range[int(e[1])] if axis == 0 else patch.t_range[int(e[1])]
        if axis == 0:
            pts = patch.position(np.full(n, fixed), along)
        else:
            pts = patch.position(along, np.full(n, fixed))
        spread = np.max(np.linalg.norm(pts - pts[0], axis=-1))
        size = max(1.0, float(np.max(np.abs(pts))))
        if spread < 1e-12 * size:
            out.add(e)
    return frozenset(out)


def _finish(patch):
    return patch.with_(degenerate=_find_degenerate(patch))


def _check_orientation(orientation):
    if orientation not in (1, -1):
        raise InvalidParams("orientation must be +1 or -1")
    return orientation


def _range(r, name):
    r = tuple(float(x) for x in r)
    if len(r) != 2 or not r[0] < r[1]:
        raise InvalidParams(f"{name} must be an increasing pair")
    return r


def sphere_cap(R=1.0, theta=(0.0, np.pi / 3), phi=(0.0, 2 * np.pi), orientation=1):
    """Sphere of radius R, polar angle ``s`` and azimuth ``t``."""
    if not R > 0:
        raise InvalidParams("sphere radius must be positive")
    theta, phi = _range(theta, "theta"), _range(phi, "phi")
    if theta[0] < 0 or theta[1] > np.pi + 1e-15:
        raise InvalidParams("polar range must lie in [0, pi]")
    o = _check_orientation(orientation)

    def imm(s, t):
        return R * tj.sin(s) * tj.cos(t), R * tj.sin(s) * tj.sin(t), R * tj.cos(s)

    periodic = (False, bool(np.isclose(phi[1] - phi[0], 2 * np.pi)))
    desc = {"name": "sphere_cap", "R": R, "theta": list(theta), "phi": list(phi), "orientation": o}
    # r_s x r_t points outward; the inward normal gives H > 0
    return _finish(SurfacePatch(theta, phi, imm, -o, periodic, description=desc))


def cylinder(rho=1.0, height=1.0, phi=(0.0, 2 * np.pi), orientation=1, z0=0.0):
    """Circular cylinder about the z-axis; ``s`` is height, ``t`` azimuth."""
    if not rho > 0 or not height > 0:
        raise InvalidParams("cylinder radius and height must be positive")
    phi = _range(phi, "phi")
    o = _check_orientation(orientation)

    def imm(s, t):
        return rho * tj.cos(t), rho * tj.sin(t), s + 0.0 * t

    periodic = (False, bool(np.isclose(phi[1] - phi[0], 2 * np.pi)))
    desc = {"name": "cylinder", "rho": rho, "height": height, "phi": list(phi), "orientation": o, "z0": z0}
    # r_s x r_t = (-rho cos t, -rho sin t, 0): inward, so H = +1/rho
    return _finish(SurfacePatch((z0, z0 + height), phi, imm, o, periodic, description=desc))


def catenoid_band(a=1.0, t_range=(-1.0, 1.0), orientation=1):
    """Catenoid ``(a cosh(s/a) cos t, a cosh(s/a) sin t, s)``."""
    if not a > 0:
        raise InvalidParams("catenoid neck radius must be positive")
    t_range = _range(t_range, "t_range")
    o = _check_orientation(orientation)

    def imm(s, t):
        rad = a * tj.cosh(s / a)
        return rad * tj.cos(t), rad * tj.sin(t), s + 0.0 * t

    desc = {"name": "catenoid_band", "a": a, "t_range": list(t_range), "orientation": o}
    return _finish(SurfacePatch(t_range, (0.0, 2 * np.pi), imm, o, (False, True), description=desc))


def torus_band(R=2.0, rho=1.0, u=(0.0, 2 * np.pi), v=(-np.pi / 3, np.pi / 3), orientation=1):
    """Torus ``((R + rho cos v) cos u, (R + rho cos v) sin u, rho sin v)``; s = v, t = u."""
    if not (R > 0 and rho > 0 and R > rho):
        raise InvalidParams("torus needs R > rho > 0")
    u, v = _range(u, "u"), _range(v, "v")
    o = _check_orientation(orientation)

    def imm(s, t):
        rad = R + rho * tj.cos(s)
        return rad * tj.cos(t), rad * tj.sin(t), rho * tj.sin(s) + 0.0 * t

    periodic = (bool(np.isclose(v[1] - v[0], 2 * np.pi)), bool(np.isclose(u[1] - u[0], 2 * np.pi)))
    desc = {"name": "torus_band", "R": R, "rho": rho, "u": list(u), "v": list(v), "orientation": o}
    # r_v x r_u points into the tube: the tube-inward normal (outer equator H > 0)
    return _finish(SurfacePatch(v, u, imm, o, periodic, description=desc))


def _poly2(coeffs, x, y):
    out = 0.0 * x
    for (i, j), c in coeffs.items():
        term = float(c)
        for _ in range(int(i)):
            term = term * x
        for _ in range(int(j)):
            term = term * y
        out = out + term
    return out


def _norm_coeffs(height):
    if height is None:
        return {}
    if isinstance(height, dict):
        return {tuple(int(v) for v in k): float(c) for k, c in height.items()}
    return {(int(r[0]), int(r[1])): float(r[2]) for r in height}


def graph_patch(height=None, x_range=(0.0, 1.0), y_range=(0.0, 1.0), orientation=1):
    """Graph ``z = sum c_ij x^i y^j`` over a rectangle; upward normal for orientation +1."""
    coeffs = _norm_coeffs(height)
    x_range, y_range = _range(x_range, "x_range"), _range(y_range, "y_range")
    o = _check_orientation(orientation)

    def imm(s, t):
        return s + 0.0 * t, t + 0.0 * s, _poly2(coeffs, s, t) + 0.0 * s + 0.0 * t

    desc = {
        "name": "graph_patch",
        "height": [[i, j, c] for (i, j), c in sorted(coeffs.items())],
        "x_range": list(x_range),
        "y_range": list(y_range),
        "orientation": o,
    }
    return _finish(SurfacePatch(x_range, y_range, imm, o, (False, False), description=desc))


def disk(radius=1.0, height=None, orientation=1, r_min=0.0):
    """Polar graph ``(r cos t, r sin t, z(x, y))`` for ``r`` in ``[r_min, radius]``."""
    if not radius > 0 or not 0 <= r_min < radius:
        raise InvalidParams("disk needs 0 <= r_min < radius")
    coeffs = _norm_coeffs(height)
    o = _check_orientation(orientation)

    def imm(s, t):
        x = s * tj.cos(t)
        y = s * tj.sin(t)
        return x, y, _poly2(coeffs, x, y) + 0.0 * s

    desc = {
        "name": "disk",
        "radius": radius,
        "height": [[i, j, c] for (i, j), c in sorted(coeffs.items())],
        "orientation": o,
        "r_min": r_min,
    }
    return _finish(SurfacePatch((r_min, radius), (0.0, 2 * np.pi), imm, o, (False, True), description=desc))


# -- surfaces of revolution about the x-axis --------------------------------
class ProfileFD:
    """Derivative provider for a plain numpy profile via Richardson differences."""

    def __init__(self, f, steps=(1e-3, 5e-4)):
        self.f = f
        self.steps = steps

    def _central(self, t, k, h):
        # standard central stencils of second-order accuracy for k = 1..4
        f = self.f
        if k == 1:
            return (f(t + h) - f(t - h)) / (2 * h)
        if k == 2:
            return (f(t + h) - 2 * f(t) + f(t - h)) / h**2
        if k == 3:
            return (f(t + 2 * h) - 2 * f(t + h) + 2 * f(t - h) - f(t - 2 * h)) / (2 * h**3)
        return (f(t + 2 * h) - 4 * f(t + h) + 6 * f(t) - 4 * f(t - h) + f(t - 2 * h)) / h**4

    def __call__(self, t, order):
        t = np.asarray(t, dtype=float)
        h1, h2 = self.steps
        out = [np.asarray(self.f(t), dtype=float)]
        for k in range(1, order + 1):
            a, b = self._central(t, k, h1), self._central(t, k, h2)
            out.append(b + (b - a) / ((h1 / h2) ** 2 - 1))
        return out


def _profile_jet(profile, derivs, t, order):
    """Jet of f(t) at points ``t``, as a function of the first parameter."""
    if derivs is not None:
        d = derivs(np.asarray(t), order)
        return Jet.from_derivatives({(k, 0): d[k] for k in range(order + 1)}, order)
    return profile(Jet.variable(t, 0, order))


def axisym(profile=None, t_range=(-1.0, 1.0), convention="standard", orientation=1, derivs=None, name="axisym"):
    """Surface of revolution ``(t, f(t) cos w, f(t) sin w)``.

    ``profile`` is a callable written with :mod:`wsurf.taylor` helpers (so it
    accepts jets), or ``derivs(t, order)`` returns ``[f, f', ...]``.  A plain
    numpy callable falls back to Richardson finite differences and marks the
    patch approximate.  ``convention='meridian'`` picks the outward normal so
    that a cylinder has negative mean curvature.
    """
    t_range = _range(t_range, "t_range")
    o = _check_orientation(orientation)
    if convention not in ("standard", "meridian"):
        raise InvalidParams("convention must be 'standard' or 'meridian'")
    approximate = False
    if derivs is None:
        if profile is None:
            raise InvalidParams("axisym needs a profile or a derivative provider")
        try:
            probe = profile(Jet.variable(np.array([0.5 * sum(t_range)]), 0, 2))
            if not isinstance(probe, Jet):
                raise TypeError
        except Exception:
            derivs = ProfileFD(profile)
            approximate = True
            warnings.warn("axisym profile is not jet-aware; using Richardson finite differences", stacklevel=2)
    ts = np.linspace(*t_range, 33)
    fv = _profile_jet(profile, derivs, ts, 0).value
    if np.any(~np.isfinite(fv)) or np.any(fv <= 0):
        raise InvalidParams("profile must be positive on the t-range")

    def jet_fn(s, t, order):
        fj = _profile_jet(profile, derivs, s.ravel(), order)
        fj = Jet(fj.c.reshape(fj.c.shape[:2] + s.shape), order)
        w = Jet.variable(t, 1, order)
        return [Jet.variable(s, 0, order), fj * w.cos(), fj * w.sin()]

    # r_t x r_w = f (f', -cos w, -sin w): points toward the axis
    sign = o if convention == "standard" else -o
    desc = {"name": name, "t_range": list(t_range), "convention": convention, "orientation": o}
    return SurfacePatch(
        t_range, (0.0, 2 * np.pi), None, sign, (False, True), description=desc, jet_fn=jet_fn, approximate=approximate
    )


def make_builtin(name, **params):
    """Construct a builtin patch by name."""
    makers = {
        "sphere_cap": sphere_cap,
        "cylinder": cylinder,
        "catenoid_band": catenoid_band,
        "torus_band": torus_band,
        "graph_patch": graph_patch,
        "disk": disk,
        "axisym": axisym,
    }
    if name not in makers:
        raise InvalidParams(f"unknown builtin surface {name!r}")
    try:
        return makers[name](**params)
    except TypeError as exc:
        raise InvalidParams(str(exc)) from exc


def _axisym_from_desc(d):
    kind = d.get("profile", "constant")
    if kind == "constant":
        rho = float(d.get("rho", 1.0))
        prof = lambda t: rho + 0.0 * t  # noqa: E731
    elif kind == "cosh":
        b = float(d.get("b", 1.0))
        prof = lambda t: tj.cosh(b * t) / b  # noqa: E731
    elif kind == "sphere":
        R = float(d.get("R", 1.0))
        prof = lambda t: tj.sqrt(R * R - t * t)  # noqa: E731
    else:
        raise InvalidParams(f"unknown axisym profile {kind!r}")
    return axisym(
        prof,
        t_range=d.get("t_range", (-1.0, 1.0)),
        convention=d.get("convention", "standard"),
        orientation=int(d.get("orientation", 1)),
    )


def patch_from_dict(d):
    """Inverse of :meth:`SurfacePatch.to_dict` for builtins."""
    if not isinstance(d, dict) or "name" not in d:
        raise InvalidParams("surface JSON must be an object with a 'name'")
    d = dict(d)
    name = d.pop("name")
    scale = float(d.pop("scale", 1.0))
    if name == "axisym":
        p = _axisym_from_desc(d)
    else:
        if isinstance(d.get("height"), list):
            d["height"] = [tuple(r) for r in d["height"]]
        p = make_builtin(name, **d)
    return rescale(p, scale) if scale != 1.0 else p


def patch_from_json(text):
    return patch_from_dict(json.loads(text))


# ---------------------------------------------------------------------------
# pointwise geometry
# ---------------------------------------------------------------------------
@dataclass
class PointGeometry:
    """Geometry at a batch of parameter points (leading array axes = batch).

    Tangent objects are stored in ambient coordinates: ``S`` is the 3x3 matrix
    of the shape operator extended by zero on the normal, ``P`` the tangent
    projector, ``hess_*`` the ambient representation ``R g^-1 Hess g^-1 R^T``.
    Parameter-coordinate versions carry a ``_par`` suffix.
    """

    s: np.ndarray
    t: np.ndarray
    r: np.ndarray
    rs: np.ndarray
    rt: np.ndarray
    n: np.ndarray
    g: np.ndarray
    ginv: np.ndarray
    h: np.ndarray
    S_par: np.ndarray
    S: np.ndarray
    P: np.ndarray
    H: np.ndarray
    K: np.ndarray
    dH: np.ndarray
    dK: np.ndarray
    grad_H: np.ndarray
    grad_K: np.ndarray
    hess_H_par: np.ndarray
    hess_K_par: np.ndarray
    hess_H: np.ndarray
    hess_K: np.ndarray
    lap_H: np.ndarray
    lap_K: np.ndarray
    sqrt_det_g: np.ndarray
    christoffel: np.ndarray
    area_weight: np.ndarray

    @property
    def h_norm2(self):
        """|h|^2 = H^2 - 2K."""
        return self.H**2 - 2.0 * self.K

    @property
    def batch_shape(self):
        return np.shape(self.H)

    def __len__(self):
        return int(np.size(self.H))

    def take(self, idx):
        return PointGeometry(**{f.name: np.asarray(getattr(self, f.name))[idx] for f in fields(self)})

    # helpers on ambient tangent data ---------------------------------------
    def grad_par(self, d):
        """Ambient gradient from parameter partials ``d`` (..., 2)."""
        a = np.einsum("...ij,...j->...i", self.ginv, d)
        return a[..., :1] * self.rs + a[..., 1:] * self.rt

    def ambient_form(self, B):
        """Ambient matrix of a covariant 2-tensor ``B`` (..., 2, 2)."""
        Rm = np.stack([self.rs, self.rt], axis=-1)  # (..., 3, 2)
        X = np.einsum("...ij,...jk,...kl->...il", self.ginv, B, self.ginv)
        return np.einsum("...ai,...ij,...bj->...ab", Rm, X, Rm)

    def hessian_par(self, d, dd):
        """Covariant Hessian from partials ``d`` (..., 2) and ``dd`` (..., 2, 2)."""
        return dd - np.einsum("...kij,...k->...ij", self.christoffel, d)


def _inv2(a, b, c, det):
    return (c / det, -b / det, a / det)


def _frame(patch, s, t, order):
    """Jets of the basic frame at ``(s, t)``."""
    r = patch.position_jets(s, t, order)
    rs = [x.ds() for x in r]
    rt = [x.dt() for x in r]
    E, F, G = tj.dot(rs, rs), tj.dot(rs, rt), tj.dot(rt, rt)
    det = E * G - F * F
    N = tj.cross(rs, rt)
    nn = tj.dot(N, N).sqrt()
    inv = (nn.reciprocal()) * float(patch.sign)
    n = [x * inv for x in N]
    rss = [x.ds() for x in rs]
    rst = [x.dt() for x in rs]
    rtt = [x.dt() for x in rt]
    h11, h12, h22 = tj.dot(rss, n), tj.dot(rst, n), tj.dot(rtt, n)
    return dict(r=r, rs=rs, rt=rt, E=E, F=F, G=G, det=det, n=n, h11=h11, h12=h12, h22=h22, rss=rss, rst=rst, rtt=rtt)


def _check_metric(E, F, G, det, where):
    tr = E + G
    bad = ~(det > 1e-12 * tr * tr / 4.0)
    if np.any(bad):
        i = np.flatnonzero(np.atleast_1d(bad))[0]
        raise DegenerateMetric(f"degenerate metric at parameter point {where(i)}")


def _curvature_jets(fr):
    det = fr["det"]
    E, F, G = fr["E"], fr["F"], fr["G"]
    h11, h12, h22 = fr["h11"], fr["h12"], fr["h22"]
    rdet = det.reciprocal()
    H = (G * h11 - F * h12 * 2.0 + E * h22) * rdet
    K = (h11 * h22 - h12 * h12) * rdet
    return H, K


def _stack2(a, b, c, d):
    return np.stack([np.stack([a, b], -1), np.stack([c, d], -1)], -2)


def geometry_batch(patch: SurfacePatch, s, t, weights=None, order=JET_ORDER) -> PointGeometry:
    """Pointwise geometry at arrays of parameters (any common shape)."""
    s, t = np.broadcast_arrays(np.asarray(s), np.asarray(t))
    shape = s.shape
    s1, t1 = s.ravel(), t.ravel()
    with np.errstate(divide="ignore", invalid="ignore"):
        # degenerate points are reported by the metric check below
        fr = _frame(patch, s1, t1, order)
    E, F, G, det = fr["E"].value, fr["F"].value, fr["G"].value, fr["det"].value
    _check_metric(E, F, G, det, lambda i: (float(s1[i]), float(t1[i])))
    Hj, Kj = _curvature_jets(fr)
    rs, rt = tj.values(fr["rs"]), tj.values(fr["rt"])
    n = tj.values(fr["n"])
    g = _stack2(E, F, F, G)
    gi = _inv2(E, F, G, det)
    ginv = _stack2(gi[0], gi[1], gi[1], gi[2])
    h = _stack2(fr["h11"].value, fr["h12"].value, fr["h12"].value, fr["h22"].value)
    S_par = np.einsum("...ij,...jk->...ik", ginv, h)
    Rm = np.stack([rs, rt], axis=-1)
    X = np.einsum("...ij,...jk,...kl->...il", ginv, h, ginv)
    S = np.einsum("...ai,...ij,...bj->...ab", Rm, X, Rm)
    P = np.einsum("...ai,...ij,...bj->...ab", Rm, ginv, Rm)
    # Christoffel symbols of the second kind: Gamma^k_ij = g^kl <r_ij, r_l>
    rij = np.stack(
        [np.stack([tj.values(fr["rss"]), tj.values(fr["rst"])], -2), np.stack([tj.values(fr["rst"]), tj.values(fr["rtt"])], -2)],
        -3,
    )  # (..., i, j, 3)
    low = np.einsum("...ija,...al->...lij", rij, Rm)
    chris = np.einsum("...kl,...lij->...kij", ginv, low)

    def derivs(J):
        d = np.stack([J.deriv(1, 0), J.deriv(0, 1)], -1)
        dd = _stack2(J.deriv(2, 0), J.deriv(1, 1), J.deriv(1, 1), J.deriv(0, 2))
        return d, dd

    dH, ddH = derivs(Hj)
    dK, ddK = derivs(Kj)
    hessH_par = ddH - np.einsum("...kij,...k->...ij", chris, dH)
    hessK_par = ddK - np.einsum("...kij,...k->...ij", chris, dK)

    def amb_grad(d):
        a = np.einsum("...ij,...j->...i", ginv, d)
        return a[..., :1] * rs + a[..., 1:] * rt

    def amb_form(B):
        Y = np.einsum("...ij,...jk,...kl->...il", ginv, B, ginv)
        return np.einsum("...ai,...ij,...bj->...ab", Rm, Y, Rm)

    sqrt_det = np.sqrt(det)
    aw = sqrt_det * (1.0 if weights is None else np.asarray(weights).ravel())
    out = PointGeometry(
        s=s1,
        t=t1,
        r=tj.values(fr["r"]),
        rs=rs,
        rt=rt,
        n=n,
        g=g,
        ginv=ginv,
        h=h,
        S_par=S_par,
        S=S,
        P=P,
        H=Hj.value,
        K=Kj.value,
        dH=dH,
        dK=dK,
        grad_H=amb_grad(dH),
        grad_K=amb_grad(dK),
        hess_H_par=hessH_par,
        hess_K_par=hessK_par,
        hess_H=amb_form(hessH_par),
        hess_K=amb_form(hessK_par),
        lap_H=np.einsum("...ij,...ij->...", ginv, hessH_par),
        lap_K=np.einsum("...ij,...ij->...", ginv, hessK_par),
        sqrt_det_g=sqrt_det,
        christoffel=chris,
        area_weight=aw,
    )
    if shape != (len(s1),):
        out = PointGeometry(
            **{f.name: np.reshape(getattr(out, f.name), shape + np.shape(getattr(out, f.name))[1:]) for f in fields(out)}
        )
    return out


def geometry_at(patch: SurfacePatch, s, t) -> PointGeometry:
    """Geometry at a single parameter point (fields carry no batch axis)."""
    if not (patch.s_range[0] - 1e-12 <= s <= patch.s_range[1] + 1e-12) or not (
        patch.t_range[0] - 1e-12 <= t <= patch.t_range[1] + 1e-12
    ):
        raise InvalidParams(f"({s}, {t}) lies outside the parameter rectangle")
    return geometry_batch(patch, np.array([s]), np.array([t])).take(0)


def gauss_nodes(lo, hi, order):
    x, w = np.polynomial.legendre.leggauss(order)
    return 0.5 * (hi - lo) * x + 0.5 * (hi + lo), 0.5 * (hi - lo) * w


def interior_nodes(patch, order):
    if not 2 <= order <= 64:
        raise InvalidParams("quadrature order must lie in [2, 64]")
    xs, ws = gauss_nodes(*patch.s_range, order)
    xt, wt = gauss_nodes(*patch.t_range, order)
    S, T = np.meshgrid(xs, xt, indexing="ij")
    W = np.outer(ws, wt)
    return S.ravel(), T.ravel(), W.ravel()


def sample_interior(patch: SurfacePatch, order: int) -> PointGeometry:
    """Tensor Gauss-Legendre samples; ``area_weight = w_i w_j sqrt(det g)``."""
    s, t, w = interior_nodes(patch, order)
    return geometry_batch(patch, s, t, weights=w)


def integrate(values, geo):
    """Quadrature sum with a fixed summation order."""
    return float(np.sum(np.asarray(values) * geo.area_weight))


# ---------------------------------------------------------------------------
# boundary
# ---------------------------------------------------------------------------
@dataclass
class BoundarySamples:
    """Boundary frame data at a batch of boundary points.

    ``eta`` is the outward co-normal and ``T = n x eta``, so ``eta = T x n``.
    ``kappa_g = <D_T T, eta>``.  Directional derivatives of requested scalar
    fields are in ``d_eta[name]`` and ``d_T[name]``.
    """

    geo: PointGeometry
    edge: np.ndarray
    param: np.ndarray
    speed: np.ndarray
    T: np.ndarray
    eta: np.ndarray
    kappa_n: np.ndarray
    tau_g: np.ndarray
    h_etaeta: np.ndarray
    kappa_g: np.ndarray
    dtau_T: np.ndarray
    arc_weight: np.ndarray
    component: np.ndarray
    length: np.ndarray
    edge_sign: np.ndarray
    d_eta: dict = field(default_factory=dict)
    d_T: dict = field(default_factory=dict)

    @property
    def r(self):
        return self.geo.r

    @property
    def n(self):
        return self.geo.n

    def __len__(self):
        return len(self.arc_weight)

    def component_lengths(self):
        comps = np.unique(self.component)
        return {int(c): float(np.sum(self.arc_weight[self.component == c])) for c in comps}


def _edge_points(patch, e, x):
    fixed = (patch.s_range if e[0] == "s" else patch.t_range)[int(e[1])]
    fv = np.full_like(x, fixed)
    return (fv, x) if e[0] == "s" else (x, fv)


def boundary_components(patch):
    """Map edge name -> component index."""
    edges = patch.boundary_edges
    if not edges:
        raise ClosedSurface("patch has no boundary")
    if patch.periodic[0] or patch.periodic[1]:
        return {e: i for i, e in enumerate(edges)}
    return {e: 0 for e in edges}


def _scalar_fields(geo, names, spec):
    """Ambient gradients of named scalar fields on the patch."""
    out = {}
    jet = None
    if any(n in ("F_H", "F_K") for n in names):
        from .functional import eval_jet

        if spec is None:
            raise InvalidParams("a functional is needed for F_H / F_K fields")
        jet = eval_jet(spec, geo.H, geo.K, order=2)
    for name in names:
        if name == "H":
            out[name] = geo.grad_H
        elif name == "K":
            out[name] = geo.grad_K
        elif name == "F_H":
            out[name] = jet.F_HH[..., None] * geo.grad_H + jet.F_HK[..., None] * geo.grad_K
        elif name == "F_K":
            out[name] = jet.F_HK[..., None] * geo.grad_H + jet.F_KK[..., None] * geo.grad_K
        else:
            raise InvalidParams(f"unknown boundary field {name!r}")
    return out


def boundary_at(patch, edge, x, weights=None, fields_=(), spec=None, order=JET_ORDER):
    """Boundary samples on one edge at edge-parameter values ``x``."""
    x = np.asarray(x)
    s, t = _edge_points(patch, edge, x)
    geo = geometry_batch(patch, s, t, order=order)
    fr = _frame(patch, s, t, order - 1)
    along = 1 if edge[0] == "s" else 0
    rs, rt, n = fr["rs"], fr["rt"], fr["n"]
    tan = rt if along == 1 else rs
    d_out = np.array([1.0 if edge == "s1" else -1.0 if edge == "s0" else 0.0, 1.0 if edge == "t1" else -1.0 if edge == "t0" else 0.0])
    Rd = d_out[0] * geo.rs + d_out[1] * geo.rt
    tv = tj.values(tan)
    # orientation of the edge tangent so that T = n x eta with eta outward
    eta0 = Rd - np.sum(Rd * tv, -1, keepdims=True) * tv / np.sum(tv * tv, -1, keepdims=True)
    Tdir = np.cross(geo.n, eta0)
    sgn = np.sign(np.sum(Tdir * tv, -1))
    speed_j = tj.dot(tan, tan).sqrt()
    inv = speed_j.reciprocal() * sgn
    Tj = [c * inv for c in tan]
    etaj = tj.cross(Tj, n)
    E, F, G, det = fr["E"], fr["F"], fr["G"], fr["det"]
    rdet = det.reciprocal()
    ps, pt = tj.dot(rs, etaj), tj.dot(rt, etaj)
    b1 = (G * ps - F * pt) * rdet
    b2 = (E * pt - F * ps) * rdet
    a = (Jet.constant(0.0, inv.order, inv.shape), inv) if along == 1 else (inv, Jet.constant(0.0, inv.order, inv.shape))
    h11, h12, h22 = fr["h11"], fr["h12"], fr["h22"]

    def hform(u, v):
        return h11 * u[0] * v[0] + h12 * (u[0] * v[1] + u[1] * v[0]) + h22 * u[1] * v[1]

    kn = hform(a, a)
    tg = hform(a, (b1, b2))
    hee = hform((b1, b2), (b1, b2))
    d_along = (lambda J: J.dt()) if along == 1 else (lambda J: J.ds())
    dtau = d_along(tg).value * inv.value
    dT = [d_along(c).value * inv.value for c in Tj]
    Tv = tj.values(Tj)
    etav = tj.values(etaj)
    kg = np.sum(np.stack(dT, -1) * etav, -1)
    speed = speed_j.value
    aw = speed * (1.0 if weights is None else np.asarray(weights))
    if np.any(np.sum(etav * Rd, -1) <= 0):
        raise DegenerateMetric("co-normal failed the outward test")
    grads = _scalar_fields(geo, fields_, spec)
    return BoundarySamples(
        geo=geo,
        edge=np.array([edge] * len(x)),
        param=x,
        speed=speed,
        T=Tv,
        eta=etav,
        kappa_n=kn.value,
        tau_g=tg.value,
        h_etaeta=hee.value,
        kappa_g=kg,
        dtau_T=dtau,
        arc_weight=aw,
        component=np.zeros(len(x), dtype=int),
        length=np.zeros(len(x)),
        edge_sign=sgn,
        d_eta={k: np.sum(v * etav, -1) for k, v in grads.items()},
        d_T={k: np.sum(v * Tv, -1) for k, v in grads.items()},
    )


def _concat(parts):
    out = {}
    for f in fields(BoundarySamples):
        vals = [getattr(p, f.name) for p in parts]
        if f.name == "geo":
            out["geo"] = PointGeometry(**{g.name: np.concatenate([getattr(v, g.name) for v in vals]) for g in fields(PointGeometry)})
        elif f.name in ("d_eta", "d_T"):
            out[f.name] = {k: np.concatenate([v[k] for v in vals]) for k in vals[0]}
        else:
            out[f.name] = np.concatenate(vals)
    return BoundarySamples(**out)


def sample_boundary(patch: SurfacePatch, order: int, fields=(), spec=None) -> BoundarySamples:
    """Gauss-Legendre samples along every boundary edge.

    ``fields`` may name ``H``, ``K``, ``F_H``, ``F_K`` (the latter two need
    ``spec``); their normal and tangential derivatives are returned.
    """
    if not 2 <= order <= 64:
        raise InvalidParams("quadrature order must lie in [2, 64]")
    comps = boundary_components(patch)
    parts = []
    for e, ci in comps.items():
        rng = patch.t_range if e[0] == "s" else patch.s_range
        x, w = gauss_nodes(*rng, order)
        b = boundary_at(patch, e, x, w, fields, spec)
        b.component[:] = ci
        parts.append(b)
    out = _concat(parts)
    for c, L in out.component_lengths().items():
        out.length[out.component == c] = L
    return out


# ---------------------------------------------------------------------------
# export
# ---------------------------------------------------------------------------
def export_geometry_csv(geo: PointGeometry, path, extra=None):
    """One row per sample: parameters, position, normal, H, K, weight (+extra columns)."""
    extra = extra or {}
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["s", "t", "x", "y", "z", "nx", "ny", "nz", "H", "K", "area_weight", *extra])
        for i in range(len(geo)):
            row = [geo.s[i], geo.t[i], *geo.r[i], *geo.n[i], geo.H[i], geo.K[i], geo.area_weight[i]]
            row += [np.asarray(v)[i] for v in extra.values()]
            w.writerow([repr(float(v)) for v in row])


def curvature_data(patch: SurfacePatch, s, t):
    """Cheap (H, K, sqrt det g) using second-order jets only."""
    fr = _frame(patch, np.asarray(s), np.asarray(t), 2)
    E, F, G, det = fr["E"].value, fr["F"].value, fr["G"].value, fr["det"].value
    _check_metric(E, F, G, det, lambda i: i)
    H, K = _curvature_jets(fr)
    return H.value, K.value, np.sqrt(det)
