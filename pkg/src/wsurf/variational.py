"""Euler-Lagrange residual, stress tensor, flux identities, boundary
conditions and finite-difference oracles for W(r) = integral of F(H, K).

All routines are vectorized over batches of sample points.  The residual is

    W = lap F_H + H lap F_K - <h, Hess F_K> + F_H |h|^2 + H K F_K - H F

and the first variation of the energy along X with normal part u = <X, n>
is the integral of u W plus three boundary integrals.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from typing import Callable

import numpy as np

from . import taylor as tj
from .errors import InvalidParams, JetSingular, MissingSupportNormal
from .functional import FunctionalSpec, eval_jet, scaling_excess
from .surface import (
    SurfacePatch,
    _frame,
    boundary_at,
    curvature_data,
    gauss_nodes,
    geometry_batch,
    interior_nodes,
    sample_boundary,
    sample_interior,
)
from .taylor import Jet


def _dot(a, b):
    return np.sum(a * b, axis=-1)


def _mv(M, v):
    return np.einsum("...ij,...j->...i", M, v)


def _contract(geo, A, B):
    """Metric contraction <A, B> of two covariant 2-tensors in parameter form."""
    return np.einsum("...ia,...jb,...ij,...ab->...", geo.ginv, geo.ginv, A, B)


# ---------------------------------------------------------------------------
# chain rule through the functional jet
# ---------------------------------------------------------------------------
@dataclass
class FieldDerivatives:
    jet: object
    grad_F_H: np.ndarray
    grad_F_K: np.ndarray
    hess_F_H_par: np.ndarray | None = None
    hess_F_K_par: np.ndarray | None = None
    lap_F_H: np.ndarray | None = None
    lap_F_K: np.ndarray | None = None


def field_derivatives(spec: FunctionalSpec, geo, order=3) -> FieldDerivatives:
    """Gradients (and for ``order=3`` Hessians) of F_H and F_K on the surface."""
    j = eval_jet(spec, geo.H, geo.K, order=order)
    gH, gK = geo.grad_H, geo.grad_K
    x = lambda a: np.asarray(a)[..., None]  # noqa: E731
    grad_FH = x(j.F_HH) * gH + x(j.F_HK) * gK
    grad_FK = x(j.F_HK) * gH + x(j.F_KK) * gK
    out = FieldDerivatives(j, grad_FH, grad_FK)
    if order >= 3:
        dH, dK = geo.dH, geo.dK
        HH = np.einsum("...i,...j->...ij", dH, dH)
        KK = np.einsum("...i,...j->...ij", dK, dK)
        HK = np.einsum("...i,...j->...ij", dH, dK)
        HK = HK + np.swapaxes(HK, -1, -2)
        y = lambda a: np.asarray(a)[..., None, None]  # noqa: E731
        hFH = y(j.F_HH) * geo.hess_H_par + y(j.F_HK) * geo.hess_K_par + y(j.F_HHH) * HH + y(j.F_HHK) * HK + y(j.F_HKK) * KK
        hFK = y(j.F_HK) * geo.hess_H_par + y(j.F_KK) * geo.hess_K_par + y(j.F_HHK) * HH + y(j.F_HKK) * HK + y(j.F_KKK) * KK
        out.hess_F_H_par = hFH
        out.hess_F_K_par = hFK
        out.lap_F_H = np.einsum("...ij,...ij->...", geo.ginv, hFH)
        out.lap_F_K = np.einsum("...ij,...ij->...", geo.ginv, hFK)
    return out


# ---------------------------------------------------------------------------
# Euler-Lagrange residual
# ---------------------------------------------------------------------------
EL_TERMS = ("lap_F_H", "H_lap_F_K", "minus_h_hess_F_K", "F_H_h2", "HK_F_K", "minus_H_F")


@dataclass
class ElResidual:
    W: np.ndarray
    terms: dict

    def sup(self):
        return float(np.max(np.abs(self.W))) if np.size(self.W) else 0.0

    def to_dict(self):
        return {"W": np.asarray(self.W).tolist(), "terms": {k: np.asarray(v).tolist() for k, v in self.terms.items()}}


def el_residual(spec: FunctionalSpec, geo) -> ElResidual:
    d = field_derivatives(spec, geo, order=3)
    j = d.jet
    H, K = geo.H, geo.K
    terms = {
        "lap_F_H": d.lap_F_H,
        "H_lap_F_K": H * d.lap_F_K,
        "minus_h_hess_F_K": -_contract(geo, geo.h, d.hess_F_K_par),
        "F_H_h2": j.F_H * (H * H - 2.0 * K),
        "HK_F_K": H * K * j.F_K,
        "minus_H_F": -H * j.F,
    }
    W = terms["lap_F_H"]
    for k in EL_TERMS[1:]:
        W = W + terms[k]
    return ElResidual(W, terms)


# ---------------------------------------------------------------------------
# stress tensor
# ---------------------------------------------------------------------------
@dataclass
class StressTensor:
    """Ambient 3x3 matrix per sample; ``matrix @ e`` is the tangent vector T(e)."""

    matrix: np.ndarray
    parts: dict


def stress_tensor(spec: FunctionalSpec, geo) -> StressTensor:
    d = field_derivatives(spec, geo, order=2)
    j = d.jet
    x = lambda a: np.asarray(a)[..., None, None]  # noqa: E731
    S = geo.S
    a = _mv(S, d.grad_F_K) - d.grad_F_H - np.asarray(geo.H)[..., None] * d.grad_F_K
    parts = {
        "F_K_S2": x(j.F_K) * (S @ S),
        "S_term": -x(j.F_H + geo.H * j.F_K) * S,
        "normal_term": np.einsum("...i,...j->...ij", a, geo.n),
        "F_P": x(j.F) * geo.P,
    }
    M = parts["F_K_S2"] + parts["S_term"] + parts["normal_term"] + parts["F_P"]
    return StressTensor(M, parts)


_D5 = np.array([1.0, -8.0, 0.0, 8.0, -1.0]) / 12.0


def _divergence_fields(spec, patch, s, t):
    """sqrt(det g) * g^-1 R^T T, shape (..., 2, 3): parameter components of T(e_k)."""
    geo = geometry_batch(patch, s, t)
    st = stress_tensor(spec, geo)
    Rm = np.stack([geo.rs, geo.rt], axis=-1)
    A = np.einsum("...ij,...aj,...ak->...ik", geo.ginv, Rm, st.matrix)
    return A * geo.sqrt_det_g[..., None, None]


@dataclass
class StressCheck:
    """Residual max |div_g T + W n| per FD step, with order estimates.

    ``order_kind[i]`` is ``'measured'`` when both residuals of the pair clear
    the rounding floor, ``'lower_bound'`` when only the coarser one does (the
    finer residual is replaced by its floor, giving a lower bound on the
    order), and ``'unresolved'`` when the FD error is at rounding level for
    both steps.
    """

    steps: list
    residual: list
    normal: list
    tangential: list
    orders: list
    order_kind: list
    noise_floor: list
    precision: str

    def to_dict(self):
        return asdict(self)

    def min_order(self):
        vals = [o for o, k in zip(self.orders, self.order_kind) if k != "unresolved"]
        return min(vals) if vals else None


def _fd_divergence_error(spec, patch, S, T, h, dtype):
    geo = geometry_batch(patch, S, T)
    W = el_residual(spec, geo).W
    target = -np.asarray(W)[..., None] * geo.n
    hd = dtype(h)
    offs = np.arange(-2, 3)
    zero = 0 * offs[None, :]
    Ys = _divergence_fields(spec, patch, S[:, None] + hd * offs[None, :], T[:, None] + zero)
    Yt = _divergence_fields(spec, patch, S[:, None] + zero, T[:, None] + hd * offs[None, :])
    c = _D5.astype(dtype)
    div = (np.einsum("k,nkj->nj", c, Ys[:, :, 0, :]) + np.einsum("k,nkj->nj", c, Yt[:, :, 1, :])) / hd
    div = div / geo.sqrt_det_g[:, None]
    return div - target, geo.n


def stress_divergence_check(
    spec: FunctionalSpec,
    patch: SurfacePatch,
    steps=(2e-3, 1e-3, 5e-4),
    grid=6,
    precision="extended",
    margin=0.05,
    floor_factor=3.0,
) -> StressCheck:
    """Compare a finite-difference div_g T with -W n on a parameter grid.

    The divergence uses the five-point (Richardson-extrapolated central)
    stencil in each parameter, so the truncation error is O(h^4).  With
    ``precision='extended'`` the geometry is evaluated in long double so that
    this error stays above rounding at the default steps.  The rounding floor
    at each step is estimated empirically: the whole computation is repeated
    at grid points shifted by 1e-3 h, which leaves the smooth truncation error
    essentially unchanged but re-draws the rounding noise.
    """
    dtype = np.longdouble if precision == "extended" else np.float64
    s0, s1 = patch.s_range
    t0, t1 = patch.t_range
    ms, mt = margin * (s1 - s0), margin * (t1 - t0)
    ss = np.linspace(s0 + ms, s1 - ms, grid)
    tt = np.linspace(t0 + mt, t1 - mt, grid)
    S, T = np.meshgrid(ss, tt, indexing="ij")
    S, T = S.ravel().astype(dtype), T.ravel().astype(dtype)
    res, nor, tan, floors = [], [], [], []
    for h in steps:
        err, n = _fd_divergence_error(spec, patch, S, T, h, dtype)
        d = dtype(1e-3 * h)
        err2, _ = _fd_divergence_error(spec, patch, S + d, T + d, h, dtype)
        en = _dot(err, n)
        et = err - en[:, None] * n
        res.append(float(np.max(np.linalg.norm(err, axis=-1))))
        nor.append(float(np.max(np.abs(en))))
        tan.append(float(np.max(np.linalg.norm(et, axis=-1))))
        floors.append(floor_factor * float(np.max(np.linalg.norm(err - err2, axis=-1))))
    orders, kinds = [], []
    for i in range(len(steps) - 1):
        ratio = np.log(steps[i] / steps[i + 1])
        if res[i] > floors[i] and res[i + 1] > floors[i + 1]:
            orders.append(float(np.log(res[i] / res[i + 1]) / ratio))
            kinds.append("measured")
        elif res[i] > floors[i]:
            orders.append(float(np.log(res[i] / max(res[i + 1], floors[i + 1])) / ratio))
            kinds.append("lower_bound")
        else:
            orders.append(None)
            kinds.append("unresolved")
    return StressCheck(list(map(float, steps)), res, nor, tan, orders, kinds, floors, precision)


# ---------------------------------------------------------------------------
# flux identities
# ---------------------------------------------------------------------------
@dataclass
class FluxReport:
    kind: str
    direction: list | None
    origin: list
    interior: float
    boundary: float
    residual: float
    per_component: list
    normal_term: float | None = None
    order: int = 32

    def to_dict(self):
        return asdict(self)

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True)


def _unit(v):
    v = np.asarray(v, dtype=float)
    n = np.linalg.norm(v)
    if not n > 0:
        raise InvalidParams("direction must be a non-zero vector")
    return v / n


def _flux_vectors(kind, r, n, S, P, e, origin):
    """Return (a, grad <a, n>) at boundary samples."""
    rel = r - origin
    if kind == "translation":
        a = np.broadcast_to(e, r.shape)
        grad = -_mv(S, a)
    elif kind == "scaling":
        a = rel
        grad = -_mv(S, a)
    elif kind == "rotation":
        a = np.cross(e, rel)
        grad = _mv(P, np.cross(n, e)) - _mv(S, a)
    else:
        raise InvalidParams(f"unknown flux kind {kind!r}")
    return a, grad


def boundary_flux_integrand(spec, bs, a, grad_an):
    """Integrand of the boundary side of the first-variation identity for a field a."""
    geo = bs.geo
    d = field_derivatives(spec, geo, order=2)
    j = d.jet
    eta = bs.eta
    an = _dot(a, geo.n)
    deta_an = _dot(grad_an, eta)
    h_grad_eta = _dot(_mv(geo.S, grad_an), eta)
    h_FK_eta = _dot(_mv(geo.S, d.grad_F_K), eta)
    dFH = _dot(d.grad_F_H, eta)
    dFK = _dot(d.grad_F_K, eta)
    return (
        (j.F_H + geo.H * j.F_K) * deta_an
        - j.F_K * h_grad_eta
        + an * (h_FK_eta - dFH - geo.H * dFK)
        + j.F * _dot(a, eta)
    )


def _per_component(bs, values):
    out = []
    for c in np.unique(bs.component):
        m = bs.component == c
        out.append({"component": int(c), "boundary": float(np.sum(values[m] * bs.arc_weight[m])), "length": float(bs.length[m][0])})
    return out


def flux_check(spec, patch, kind, direction=None, origin=(0.0, 0.0, 0.0), order=32, with_normal_term=True) -> FluxReport:
    """Boundary flux versus interior integral for translation, scaling or rotation."""
    origin = np.asarray(origin, dtype=float)
    e = None
    if kind in ("translation", "rotation"):
        if direction is None:
            raise InvalidParams(f"{kind} flux needs a direction")
        e = _unit(direction)
    elif kind != "scaling":
        raise InvalidParams(f"unknown flux kind {kind!r}")
    bs = sample_boundary(patch, order)
    a, grad = _flux_vectors(kind, bs.geo.r, bs.geo.n, bs.geo.S, bs.geo.P, e, origin)
    vals = boundary_flux_integrand(spec, bs, a, grad)
    comps = _per_component(bs, vals)
    boundary = float(sum(c["boundary"] for c in comps))
    geo = sample_interior(patch, order)
    interior = float(np.sum(scaling_excess(spec, geo.H, geo.K) * geo.area_weight)) if kind == "scaling" else 0.0
    normal_term = None
    if with_normal_term:
        try:
            W = el_residual(spec, geo).W
            ai, _ = _flux_vectors(kind, geo.r, geo.n, geo.S, geo.P, e, origin)
            normal_term = float(np.sum(_dot(ai, geo.n) * W * geo.area_weight))
        except JetSingular:
            normal_term = None
    return FluxReport(
        kind,
        None if e is None else e.tolist(),
        origin.tolist(),
        interior,
        boundary,
        boundary - interior,
        comps,
        normal_term,
        order,
    )


def pwillmore_flux_check(p, patch, origin=(0.0, 0.0, 0.0), order=32) -> FluxReport:
    """Scaling flux for F = |H|^p written out explicitly."""
    if p < 2:
        raise InvalidParams("p must be at least 2")
    origin = np.asarray(origin, dtype=float)
    geo = sample_interior(patch, order)
    left = (2.0 - p) * float(np.sum(np.abs(geo.H) ** p * geo.area_weight))
    bs = sample_boundary(patch, order)
    g = bs.geo
    rel = g.r - origin
    H = g.H
    aH = np.abs(H)
    rn = _dot(rel, g.n)
    deta_rn = -_dot(_mv(g.S, rel), bs.eta)
    deta_H = _dot(g.grad_H, bs.eta)
    with np.errstate(divide="ignore", invalid="ignore"):
        pw = np.where(aH > 0, aH ** (p - 2), 1.0 if p == 2 else 0.0)
    vals = aH**p * _dot(rel, bs.eta) + p * pw * (H * deta_rn - (p - 1) * rn * deta_H)
    comps = _per_component(bs, vals)
    right = float(sum(c["boundary"] for c in comps))
    return FluxReport("pwillmore_scaling", None, origin.tolist(), left, right, right - left, comps, None, order)


# ---------------------------------------------------------------------------
# variation fields and the first variation
# ---------------------------------------------------------------------------
@dataclass
class VariationField:
    """Velocity X = u n + V.

    ``normal(s, t, r)`` returns the normal speed u and ``ambient(s, t, r)``
    returns three components of an extra ambient field V; both receive jets
    (parameters and position) and may be ``None``.
    """

    normal: Callable | None = None
    ambient: Callable | None = None
    name: str = "X"

    def jets(self, patch, s, t, order):
        """X, u = <X, n>, and the normal jet, each at jet order ``order``."""
        fr = _frame(patch, s, t, max(order + 1, 2))
        n = [c.truncate(order) for c in fr["n"]]
        r = [c.truncate(order) for c in fr["r"]]
        sj = Jet.variable(np.asarray(s), 0, order)
        tjet = Jet.variable(np.asarray(t), 1, order)
        zero = Jet.constant(0.0, order, np.shape(s))
        X = [zero, zero, zero]
        if self.normal is not None:
            u = tj.as_jet(self.normal(sj, tjet, r), order, np.shape(s))
            X = [X[i] + u * n[i] for i in range(3)]
        if self.ambient is not None:
            V = self.ambient(sj, tjet, r)
            X = [X[i] + tj.as_jet(V[i], order, np.shape(s)) for i in range(3)]
        u = tj.dot(X, n)
        return X, u, n, r


def displaced(patch: SurfacePatch, X: VariationField, eps: float) -> SurfacePatch:
    """The patch r + eps X, itself jet-evaluable."""

    def jet_fn(s, t, order):
        Xj, _, _, r = X.jets(patch, s, t, order)
        return [r[i] + Xj[i] * eps for i in range(3)]

    desc = dict(patch.description)
    desc["displaced"] = {"field": X.name, "eps": eps}
    return patch.with_(jet_fn=jet_fn, immersion=None, scale=1.0, description=desc)


def energy(spec, patch, order=32):
    """Quadrature value of the integral of F over the patch."""
    s, t, w = interior_nodes(patch, order)
    H, K, sq = curvature_data(patch, s, t)
    F = eval_jet(spec, H, K, order=0, check=False).F
    return float(np.sum(F * sq * w))


def _scalar_par_derivs(u):
    d = np.stack([u.deriv(1, 0), u.deriv(0, 1)], -1)
    dd = np.stack(
        [np.stack([u.deriv(2, 0), u.deriv(1, 1)], -1), np.stack([u.deriv(1, 1), u.deriv(0, 2)], -1)],
        -2,
    )
    return d, dd


def first_variation(spec, patch, X: VariationField, order=32) -> dict:
    """Analytic first variation: interior integral of u W plus boundary terms."""
    geo = sample_interior(patch, order)
    _, u, _, _ = X.jets(patch, geo.s, geo.t, 0)
    W = el_residual(spec, geo).W
    interior = float(np.sum(u.value * W * geo.area_weight))
    boundary = 0.0
    parts = {"F_X_eta": 0.0, "u_flux": 0.0, "du_terms": 0.0}
    if patch.boundary_edges:
        bs = sample_boundary(patch, order)
        g = bs.geo
        Xj, uj, _, _ = X.jets(patch, g.s, g.t, 1)
        Xv = tj.values(Xj)
        du = np.stack([uj.deriv(1, 0), uj.deriv(0, 1)], -1)
        grad_u = g.grad_par(du)
        d = field_derivatives(spec, g, order=2)
        j = d.jet
        eta = bs.eta
        uv = uj.value
        w = bs.arc_weight
        t1 = j.F * _dot(Xv, eta)
        t2 = uv * (_dot(_mv(g.S, d.grad_F_K), eta) - _dot(d.grad_F_H, eta) - g.H * _dot(d.grad_F_K, eta))
        t3 = (j.F_H + g.H * j.F_K) * _dot(grad_u, eta) - j.F_K * _dot(_mv(g.S, grad_u), eta)
        parts = {"F_X_eta": float(np.sum(t1 * w)), "u_flux": float(np.sum(t2 * w)), "du_terms": float(np.sum(t3 * w))}
        boundary = sum(parts.values())
    return {"interior": interior, "boundary": boundary, "total": interior + boundary, "boundary_parts": parts}


def fd_first_variation(spec, patch, X: VariationField, eps=1e-5, order=32) -> float:
    """Central difference of the energy along r + eps X."""
    if not 1e-7 <= eps <= 1e-2:
        raise InvalidParams("eps outside the supported range")
    ep = energy(spec, displaced(patch, X, eps), order)
    em = energy(spec, displaced(patch, X, -eps), order)
    return (ep - em) / (2.0 * eps)


# ---------------------------------------------------------------------------
# normal-variation formulas
# ---------------------------------------------------------------------------
VARIATION_QUANTITIES = ("dg", "dginv", "dh", "dmu", "dH", "dK", "dh2", "dlap")


def _quantities(patch, s, t, f_fn):
    """g, g^-1, h, sqrt det g, H, K, |h|^2 and lap f at parameter points."""
    fr = _frame(patch, s, t, 2)
    E, F, G, det = fr["E"].value, fr["F"].value, fr["G"].value, fr["det"].value
    g = np.stack([np.stack([E, F], -1), np.stack([F, G], -1)], -2)
    ginv = np.stack([np.stack([G, -F], -1), np.stack([-F, E], -1)], -2) / det[..., None, None]
    h = np.stack(
        [np.stack([fr["h11"].value, fr["h12"].value], -1), np.stack([fr["h12"].value, fr["h22"].value], -1)], -2
    )
    S = ginv @ h
    H = np.trace(S, axis1=-2, axis2=-1)
    K = np.linalg.det(S)
    Rm = np.stack([tj.values(fr["rs"]), tj.values(fr["rt"])], -1)
    rss, rst, rtt = tj.values(fr["rss"]), tj.values(fr["rst"]), tj.values(fr["rtt"])
    rij = np.stack([np.stack([rss, rst], -2), np.stack([rst, rtt], -2)], -3)
    chris = np.einsum("...kl,...ija,...al->...kij", ginv, rij, Rm)
    fj = f_fn(Jet.variable(s, 0, 2), Jet.variable(t, 1, 2))
    d, dd = _scalar_par_derivs(fj)
    hess = dd - np.einsum("...kij,...k->...ij", chris, d)
    lap = np.einsum("...ij,...ij->...", ginv, hess)
    h2 = np.einsum("...ij,...ji->...", S, S)
    return {"dg": g, "dginv": ginv, "dh": h, "dmu": np.sqrt(det), "dH": H, "dK": K, "dh2": h2, "dlap": lap}


def default_test_function(s, t):
    return tj.sin(s * 1.3 + 0.2) * tj.cos(t) + s * s * 0.5


def variation_formula_check(patch, X: VariationField, eps=1e-5, points=None, f_fn=default_test_function, which=VARIATION_QUANTITIES):
    """Analytic normal-variation formulas against central differences.

    ``X`` should be a purely normal field.  Returns, per quantity, the
    analytic and FD arrays and the relative sup-norm error.
    """
    if points is None:
        rng = np.random.default_rng(1)
        n = 12
        s = patch.s_range[0] + (patch.s_range[1] - patch.s_range[0]) * rng.uniform(0.1, 0.9, n)
        t = patch.t_range[0] + (patch.t_range[1] - patch.t_range[0]) * rng.uniform(0.1, 0.9, n)
    else:
        s, t = (np.asarray(p, dtype=float) for p in points)
    geo = geometry_batch(patch, s, t)
    _, uj, _, _ = X.jets(patch, s, t, 2)
    u = uj.value
    du, ddu = _scalar_par_derivs(uj)
    hess_u = geo.hessian_par(du, ddu)
    lap_u = np.einsum("...ij,...ij->...", geo.ginv, hess_u)
    h_hess_u = _contract(geo, geo.h, hess_u)
    fj = f_fn(Jet.variable(s, 0, 2), Jet.variable(t, 1, 2))
    df, ddf = _scalar_par_derivs(fj)
    hess_f = geo.hessian_par(df, ddf)
    grad_u, grad_f = geo.grad_par(du), geo.grad_par(df)
    H, K = geo.H, geo.K
    hgh = np.einsum("...ij,...jk,...kl->...il", geo.h, geo.ginv, geo.h)
    trS3 = np.einsum("...ij,...jk,...ki->...", geo.S_par, geo.S_par, geo.S_par)
    U = u[..., None, None]
    analytic = {
        "dg": -2.0 * U * geo.h,
        "dginv": 2.0 * U * np.einsum("...ij,...jk,...kl->...il", geo.ginv, geo.h, geo.ginv),
        "dh": hess_u - U * hgh,
        "dmu": -u * H * geo.sqrt_det_g,
        "dH": u * (H * H - 2.0 * K) + lap_u,
        "dK": H * lap_u - h_hess_u + H * K * u,
        "dh2": 2.0 * h_hess_u + 2.0 * u * trS3,
        "dlap": 2.0 * u * _contract(geo, geo.h, hess_f)
        + 2.0 * _dot(_mv(geo.S, grad_u), grad_f)
        - H * _dot(grad_u, grad_f)
        + u * _dot(geo.grad_H, grad_f),
    }
    q0 = _quantities(patch, s, t, f_fn)
    qp = _quantities(displaced(patch, X, eps), s, t, f_fn)
    qm = _quantities(displaced(patch, X, -eps), s, t, f_fn)
    umax = float(np.max(np.abs(u)))
    out = {}
    for k in which:
        fd = (qp[k] - qm[k]) / (2.0 * eps)
        an = analytic[k]
        # a variation can vanish identically (dmu on a minimal surface), so
        # the error is normalized by at least |u| times the quantity itself
        scale = max(float(np.max(np.abs(an))), umax * float(np.max(np.abs(q0[k]))))
        err = float(np.max(np.abs(fd - an)))
        out[k] = {"analytic": an, "fd": fd, "max_error": err, "scale": scale, "rel_error": err / scale if scale > 0 else err}
    return out


# ---------------------------------------------------------------------------
# boundary curve variations
# ---------------------------------------------------------------------------
def curve_variation_check(patch, edge, X: VariationField, eps=1e-5, n=12):
    """Analytic first variations of kappa_g, kappa_n along a boundary edge vs FD."""
    if edge not in patch.boundary_edges:
        raise InvalidParams(f"edge {edge!r} is not a boundary edge")
    rng = patch.t_range if edge[0] == "s" else patch.s_range
    x = np.linspace(rng[0], rng[1], n + 2)[1:-1]
    b = boundary_at(patch, edge, x)
    g = b.geo
    _, uj, _, _ = X.jets(patch, g.s, g.t, 2)
    du, ddu = _scalar_par_derivs(uj)
    grad_u = g.grad_par(du)
    hess_u = g.ambient_form(g.hessian_par(du, ddu))
    u = uj.value
    u_s = _dot(grad_u, b.T)
    u_eta = _dot(grad_u, b.eta)
    u_ss = np.einsum("...i,...ij,...j->...", b.T, hess_u, b.T) + b.kappa_g * u_eta
    an_g = u * b.kappa_n * b.kappa_g + u_eta * b.kappa_n - 2.0 * u_s * b.tau_g - u * b.dtau_T
    an_n = u_ss + u * (b.kappa_n**2 - b.tau_g**2) - b.kappa_g * u_eta
    bp = boundary_at(displaced(patch, X, eps), edge, x)
    bm = boundary_at(displaced(patch, X, -eps), edge, x)
    fd_g = (bp.kappa_g - bm.kappa_g) / (2 * eps)
    fd_n = (bp.kappa_n - bm.kappa_n) / (2 * eps)
    scale = float(max(np.max(np.abs(an_g)), np.max(np.abs(an_n))))
    err = float(max(np.max(np.abs(fd_g - an_g)), np.max(np.abs(fd_n - an_n))))
    return {
        "analytic": {"kappa_g": an_g, "kappa_n": an_n},
        "fd": {"kappa_g": fd_g, "kappa_n": fd_n},
        "max_error": err,
        "scale": scale,
        "rel_error": err / scale if scale > 1e-12 else err,
    }


# ---------------------------------------------------------------------------
# boundary conditions
# ---------------------------------------------------------------------------
@dataclass
class BoundaryConditionReport:
    fixed_natural: np.ndarray
    umbilic: np.ndarray
    free_third: np.ndarray | None
    free_V: np.ndarray
    rotsym_V: np.ndarray | None
    reduced_V: np.ndarray | None
    closure: np.ndarray
    sup: dict = field(default_factory=dict)
    component_V: list = field(default_factory=list)

    def to_dict(self, samples=False):
        d = {"sup": self.sup, "component_V": self.component_V}
        if samples:
            for k in ("fixed_natural", "umbilic", "free_third", "free_V", "rotsym_V", "reduced_V", "closure"):
                v = getattr(self, k)
                d[k] = None if v is None else np.asarray(v).tolist()
        return d


def boundary_conditions(spec, patch, support_normal=None, order=16, sets=("fixed", "closure"), tau_tol=1e-10):
    """Evaluate the boundary conditions of the fixed, free and scaling-closure problems.

    ``support_normal`` is either an (N, 3) array aligned with the boundary
    samples or a callable ``v(bs)``; it is required when ``'free'`` is in
    ``sets``.
    """
    bs = sample_boundary(patch, order, fields=("F_H", "F_K"), spec=spec)
    g = bs.geo
    d = field_derivatives(spec, g, order=2)
    j = d.jet
    eta, n, T = bs.eta, g.n, bs.T
    kn, tg, hee = bs.kappa_n, bs.tau_g, bs.h_etaeta
    dFH, dFK = bs.d_eta["F_H"], bs.d_eta["F_K"]
    h_FK_eta = _dot(_mv(g.S, d.grad_F_K), eta)
    third = h_FK_eta - dFH - g.H * dFK
    c = bs.d_T["F_K"] * tg + j.F_K * bs.dtau_T + third
    free_V = np.asarray(j.F)[..., None] * eta + c[..., None] * n
    fixed_natural = j.F_H + kn * j.F_K
    closure = np.stack([tg * j.F_H, j.F - hee * j.F_H - g.K * j.F_K, third], -1)
    rot_V = red_V = None
    if np.max(np.abs(tg)) <= tau_tol * max(1.0, float(np.max(np.abs(kn)))):
        rot_V = (j.F - hee * (j.F_H + kn * j.F_K))[..., None] * eta - (dFH + kn * dFK)[..., None] * n
        red_V = (0.5 * (kn - hee) * j.F_H)[..., None] * eta - (dFH + kn * dFK)[..., None] * n
    free_third = None
    if "free" in sets:
        if support_normal is None:
            raise MissingSupportNormal("free-boundary conditions need the support normal v")
        v = support_normal(bs) if callable(support_normal) else np.asarray(support_normal, dtype=float)
        if v.shape != eta.shape:
            raise InvalidParams("support normals must have one 3-vector per boundary sample")
        free_third = _dot(v, np.asarray(j.F)[..., None] * n - c[..., None] * eta)
    sup = {
        "fixed_natural": float(np.max(np.abs(fixed_natural))),
        "umbilic": float(np.max(np.abs(hee - kn))),
        "closure": [float(x) for x in np.max(np.abs(closure), axis=0)],
        "free_V": float(np.max(np.linalg.norm(free_V, axis=-1))),
    }
    if free_third is not None:
        sup["free_third"] = float(np.max(np.abs(free_third)))
    comp_V = []
    if rot_V is not None:
        sup["rotsym_V"] = float(np.max(np.linalg.norm(rot_V, axis=-1)))
        sup["reduced_V"] = float(np.max(np.linalg.norm(red_V, axis=-1)))
        for ci in np.unique(bs.component):
            m = bs.component == ci
            comp_V.append(
                {
                    "component": int(ci),
                    "length": float(bs.length[m][0]),
                    "V_eta": float(np.mean(_dot(rot_V[m], eta[m]))),
                    "V_n": float(np.mean(_dot(rot_V[m], n[m]))),
                }
            )
    return BoundaryConditionReport(fixed_natural, hee - kn, free_third, free_V, rot_V, red_V, closure, sup, comp_V)


def rotsym_flux(spec, patch, order=16, direction=(1.0, 0.0, 0.0)):
    """Sums of l_i <e, V_i> and l_i <r_i, V_i> over boundary circles (tau_g = 0)."""
    e = _unit(direction)
    bs = sample_boundary(patch, order, fields=("F_H", "F_K"), spec=spec)
    g = bs.geo
    j = eval_jet(spec, g.H, g.K, order=2)
    kn, hee = bs.kappa_n, bs.h_etaeta
    V = (j.F - hee * (j.F_H + kn * j.F_K))[..., None] * bs.eta - (bs.d_eta["F_H"] + kn * bs.d_eta["F_K"])[..., None] * g.n
    trans = float(np.sum(_dot(e, V) * bs.arc_weight))
    scale = float(np.sum(_dot(g.r, V) * bs.arc_weight))
    geo = sample_interior(patch, order)
    interior = float(np.sum(scaling_excess(spec, geo.H, geo.K) * geo.area_weight))
    return {"translation": trans, "scaling": scale, "interior": interior}


def sup_el_residual(spec, patch, order=16):
    geo = sample_interior(patch, order)
    return el_residual(spec, geo).sup()


def el_residual_grid(spec, patch, order=16):
    geo = sample_interior(patch, order)
    return geo, el_residual(spec, geo)


# ---------------------------------------------------------------------------
# ready-made variation fields
# ---------------------------------------------------------------------------
def bump_field(patch, amplitude=1.0, freq=2.0, offset=0.5):
    """Normal field ``w^3 (sin(freq x) + offset)`` supported inside the patch.

    ``x, y`` are the parameters mapped to [-1, 1] and ``w = (1-x^2)(1-y^2)``,
    so the field and its first two derivatives vanish on every parameter edge.
    """
    (s0, s1), (t0, t1) = patch.s_range, patch.t_range

    def u(s, t, r):
        x = (s - 0.5 * (s0 + s1)) * (2.0 / (s1 - s0))
        y = (t - 0.5 * (t0 + t1)) * (2.0 / (t1 - t0))
        w = (1 - x * x) * (1 - y * y)
        return w * w * w * (tj.sin(x * freq) + offset) * amplitude

    return VariationField(normal=u, name="bump")


def random_normal_field(rng, scale=1.0):
    """Smooth normal speed ``sin(a0 x + a1) cos(a2 y) + a3 z`` in ambient coordinates."""
    a = rng.normal(size=4) * scale

    def u(s, t, r):
        return tj.sin(r[0] * a[0] + a[1]) * tj.cos(r[1] * a[2]) + r[2] * a[3]

    return VariationField(normal=u, name="random_normal")


def random_interior_field(patch, rng):
    """Interior-supported bump with random frequency, phase and amplitude."""
    return bump_field(patch, amplitude=rng.uniform(0.5, 1.5), freq=rng.uniform(1.0, 3.0), offset=rng.uniform(-0.5, 0.5))


def constant_field(c=1.0):
    return VariationField(normal=lambda s, t, r: c, name="constant")


def named_field(name, patch, seed=0):
    """Fields addressable from the command line."""
    rng = np.random.default_rng(seed)
    if name == "bump":
        return bump_field(patch)
    if name == "random":
        return random_normal_field(rng)
    if name == "random_interior":
        return random_interior_field(patch, rng)
    if name == "constant":
        return constant_field()
    if name == "cos_t":
        return VariationField(normal=lambda s, t, r: tj.cos(t), name="cos_t")
    raise InvalidParams(f"unknown variation field {name!r}")


FIELD_NAMES = ("bump", "random", "random_interior", "constant", "cos_t")


__all__ = [
    "BoundaryConditionReport",
    "ElResidual",
    "FluxReport",
    "StressTensor",
    "VariationField",
    "FIELD_NAMES",
    "boundary_conditions",
    "bump_field",
    "constant_field",
    "named_field",
    "random_interior_field",
    "random_normal_field",
    "curve_variation_check",
    "displaced",
    "el_residual",
    "energy",
    "fd_first_variation",
    "field_derivatives",
    "first_variation",
    "flux_check",
    "gauss_nodes",
    "pwillmore_flux_check",
    "rotsym_flux",
    "stress_divergence_check",
    "stress_tensor",
    "variation_formula_check",
]
