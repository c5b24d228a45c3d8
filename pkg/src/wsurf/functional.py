"""Curvature Lagrangians F(H, K) and their derivative jets.

H is the sum of principal curvatures and K their product.  Every functional
provides exact partial derivatives of F up to total order three, which is
what the Euler-Lagrange residual and the stress tensor need.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, fields
from fractions import Fraction

import numpy as np

from .errors import InvalidParams, JetSingular, NonAdmissiblePoint
from .taylor import Jet

KINDS = (
    "polynomial",
    "p_willmore",
    "helfrich",
    "bump_willmore",
    "area",
    "total_mean_curvature",
    "conformal_willmore",
)

# Multi-indices (a, b) meaning d^a/dH^a d^b/dK^b, in FunctionalJet field order.
_INDEX = {
    "F": (0, 0),
    "F_H": (1, 0),
    "F_K": (0, 1),
    "F_HH": (2, 0),
    "F_HK": (1, 1),
    "F_KK": (0, 2),
    "F_HHH": (3, 0),
    "F_HHK": (2, 1),
    "F_HKK": (1, 2),
    "F_KKK": (0, 3),
}


@dataclass(frozen=True)
class FunctionalSpec:
    kind: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InvalidParams(f"unknown functional kind {self.kind!r}")
        p = dict(self.params)
        if self.kind == "polynomial":
            coeffs = {}
            for (i, j), c in dict(p.get("coefficients", {})).items():
                i, j, c = int(i), int(j), Fraction(c)
                if i < 0 or j < 0:
                    raise InvalidParams("polynomial exponents must be non-negative")
                if c != 0:
                    coeffs[(i, j)] = coeffs.get((i, j), Fraction(0)) + c
            p["coefficients"] = {k: v for k, v in sorted(coeffs.items()) if v != 0}
        elif self.kind == "p_willmore":
            if "p" not in p or not np.isfinite(p["p"]) or float(p["p"]) < 2:
                raise InvalidParams("p_willmore requires a finite p >= 2")
            p["p"] = float(p["p"])
        elif self.kind == "helfrich":
            for name in ("k_c", "k_bar", "c0"):
                p[name] = float(p.get(name, 0.0))
        object.__setattr__(self, "params", p)

    # -- convenience constructors -----------------------------------------
    @classmethod
    def polynomial(cls, coefficients):
        return cls("polynomial", {"coefficients": coefficients})

    @classmethod
    def p_willmore(cls, p):
        return cls("p_willmore", {"p": p})

    @classmethod
    def helfrich(cls, k_c, k_bar, c0):
        return cls("helfrich", {"k_c": k_c, "k_bar": k_bar, "c0": c0})

    @classmethod
    def simple(cls, kind):
        return cls(kind)

    # -- serialization ----------------------------------------------------
    def to_dict(self):
        d = {"kind": self.kind}
        if self.kind == "polynomial":
            d["coefficients"] = [
                [i, j, c.numerator, c.denominator] for (i, j), c in self.params["coefficients"].items()
            ]
        elif self.kind == "p_willmore":
            d["p"] = self.params["p"]
        elif self.kind == "helfrich":
            d.update({k: self.params[k] for k in ("k_c", "k_bar", "c0")})
        return d

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, d):
        if not isinstance(d, dict) or "kind" not in d:
            raise InvalidParams("functional JSON must be an object with a 'kind'")
        kind = d["kind"]
        if kind == "polynomial":
            coeffs = {}
            for row in d.get("coefficients", []):
                if len(row) != 4 or int(row[3]) == 0:
                    raise InvalidParams(f"bad polynomial coefficient row {row!r}")
                coeffs[(int(row[0]), int(row[1]))] = Fraction(int(row[2]), int(row[3]))
            return cls.polynomial(coeffs)
        params = {k: v for k, v in d.items() if k != "kind"}
        return cls(kind, params)

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))

    # -- structure --------------------------------------------------------
    def polynomial_coefficients(self):
        """Exact coefficient map for the polynomial kinds, else ``None``."""
        if self.kind == "polynomial":
            return dict(self.params["coefficients"])
        if self.kind == "area":
            return {(0, 0): Fraction(1)}
        if self.kind == "total_mean_curvature":
            return {(1, 0): Fraction(1)}
        if self.kind == "conformal_willmore":
            return {(2, 0): Fraction(1), (0, 1): Fraction(-4)}
        return None

    def depends_on_K(self):
        coeffs = self.polynomial_coefficients()
        if coeffs is not None:
            return any(j > 0 for (_, j) in coeffs)
        if self.kind == "helfrich":
            return False  # F_K is the constant k_bar, so its derivatives vanish
        return False

    def __str__(self):
        return self.to_json()


@dataclass
class FunctionalJet:
    """Value and partials of F at (H, K); entries may be arrays."""

    F: object
    F_H: object
    F_K: object
    F_HH: object
    F_HK: object
    F_KK: object
    F_HHH: object
    F_HHK: object
    F_HKK: object
    F_KKK: object

    def d(self, a, b):
        """Partial ``d^a/dH^a d^b/dK^b``; total order at most three."""
        for name, idx in _INDEX.items():
            if idx == (a, b):
                return getattr(self, name)
        raise ValueError(f"partial ({a},{b}) not stored")

    def as_dict(self):
        return {f.name: getattr(self, f.name) for f in fields(self)}


def _falling(n, k):
    out = 1
    for m in range(k):
        out *= n - m
    return out


def _check_admissible(H, K, tol):
    bad = H * H < 4.0 * K - tol * np.maximum(1.0, np.maximum(H * H, np.abs(K)))
    if np.any(bad):
        idx = np.flatnonzero(np.atleast_1d(bad))[0]
        Hb, Kb = np.atleast_1d(H)[idx], np.atleast_1d(K)[idx]
        raise NonAdmissiblePoint(f"H^2 < 4K at (H, K) = ({Hb:.6g}, {Kb:.6g})")


def _poly_jet(coeffs, H, K):
    out = {}
    for name, (a, b) in _INDEX.items():
        total = np.zeros(np.broadcast_shapes(np.shape(H), np.shape(K)))
        for (i, j), c in coeffs.items():
            if i < a or j < b:
                continue
            total = total + float(c * _falling(i, a) * _falling(j, b)) * H ** (i - a) * K ** (j - b)
        out[name] = total
    return out


def _pwillmore_jet(p, H, K, order):
    zero = np.zeros(np.broadcast_shapes(np.shape(H), np.shape(K)))
    H = H + zero
    a = np.abs(H)
    sgn = np.sign(H)
    nz = a > 0
    with np.errstate(divide="ignore", invalid="ignore"):
        F = a**p
        F_H = np.where(nz, p * a ** (p - 1) * sgn, 0.0)
        if p == 2.0:
            F_HH = np.full_like(a, 2.0)
        else:
            F_HH = np.where(nz, p * (p - 1) * a ** (p - 2), 0.0)
        c3 = p * (p - 1) * (p - 2)
        if c3 == 0.0:
            F_HHH = zero.copy()
        else:
            F_HHH = np.where(nz, c3 * a ** (p - 3) * sgn, 0.0)
    if order >= 3 and 2.0 < p <= 3.0 and np.any(~nz):
        raise JetSingular(f"third H-derivative of |H|^{p:g} is undefined at H = 0")
    out = {name: zero.copy() for name in _INDEX}
    out.update(F=F, F_H=F_H, F_HH=F_HH, F_HHH=F_HHH)
    return out


def _helfrich_jet(kc, kb, c0, H, K):
    zero = np.zeros(np.broadcast_shapes(np.shape(H), np.shape(K)))
    out = {name: zero.copy() for name in _INDEX}
    out["F"] = kc * (H + c0) ** 2 + kb * K + zero
    out["F_H"] = 2 * kc * (H + c0) + zero
    out["F_K"] = kb + zero
    out["F_HH"] = 2 * kc + zero
    return out


def smoothstep(x, order=3):
    """C-infinity step: 0 for x <= 0, 1 for x >= 1, with derivatives.

    Returns a list ``[s, s', ..., s^(order)]`` evaluated at ``x``.
    """
    x = np.asarray(x, dtype=float)
    out = [np.where(x >= 1.0, 1.0, 0.0)] + [np.zeros_like(x) for _ in range(order)]
    mid = (x > 0.0) & (x < 1.0)
    if np.any(mid):
        xm = Jet.variable(x[mid], 0, order)
        psi_a = (-1.0 / xm).exp()
        psi_b = (-1.0 / (1.0 - xm)).exp()
        s = psi_a / (psi_a + psi_b)
        for k in range(order + 1):
            out[k][mid] = s.deriv(k, 0)
    return out


def _bump_jet(H, K):
    zero = np.zeros(np.broadcast_shapes(np.shape(H), np.shape(K)))
    H = H + zero
    # F(H) = phi(H) H^2 with phi(H) = smoothstep(2 - H^2)
    x = 2.0 - H * H
    s = smoothstep(x, 3)
    Hj = Jet.variable(H, 0, 3)
    phi = (2.0 - Hj * Hj).compose(s)
    Fj = phi * Hj * Hj
    out = {name: zero.copy() for name in _INDEX}
    for k, name in enumerate(("F", "F_H", "F_HH", "F_HHH")):
        out[name] = Fj.deriv(k, 0)
    return out


def _as_float(x):
    x = np.asarray(x)
    return x if x.dtype.kind == "f" else x.astype(float)


def eval_jet(spec: FunctionalSpec, H, K, *, order=3, check=True, tol=1e-8) -> FunctionalJet:
    """Exact partials of F at (H, K).

    ``H`` and ``K`` may be scalars or broadcastable arrays.  ``order`` limits
    which entries the caller intends to use; it only matters for the
    singularity check of |H|^p at H = 0.
    """
    scalar = np.ndim(H) == 0 and np.ndim(K) == 0
    H, K = _as_float(H), _as_float(K)
    if check:
        _check_admissible(H, K, tol)
    coeffs = spec.polynomial_coefficients()
    if coeffs is not None:
        vals = _poly_jet(coeffs, H, K)
    elif spec.kind == "p_willmore":
        vals = _pwillmore_jet(spec.params["p"], H, K, order)
    elif spec.kind == "helfrich":
        pr = spec.params
        vals = _helfrich_jet(pr["k_c"], pr["k_bar"], pr["c0"], H, K)
    elif spec.kind == "bump_willmore":
        vals = _bump_jet(H, K)
    else:  # pragma: no cover - guarded by FunctionalSpec
        raise InvalidParams(spec.kind)
    if scalar:
        vals = {k: float(v) for k, v in vals.items()}
    return FunctionalJet(**vals)


def evaluate(spec, H, K, **kw):
    """F alone."""
    return eval_jet(spec, H, K, order=0, **kw).F


def scaling_excess(spec: FunctionalSpec, H, K, **kw):
    j = eval_jet(spec, H, K, order=1, **kw)
    H = _as_float(H) if np.ndim(H) else H
    K = _as_float(K) if np.ndim(K) else K
    return 2.0 * j.F - H * j.F_H - 2.0 * K * j.F_K


def excess_polynomial(coeffs):
    """Exact excess 2F - H F_H - 2K F_K of a polynomial: c_ij -> (2-i-2j) c_ij."""
    out = {}
    for (i, j), c in coeffs.items():
        e = c * (2 - i - 2 * j)
        if e != 0:
            out[(i, j)] = e
    return out


@dataclass
class ScalingClass:
    cls: str
    witness: tuple | None = None
    exact: bool = False

    def to_dict(self):
        d = {"class": self.cls, "exact": self.exact}
        if self.witness is not None:
            d["witness"] = [list(map(float, w)) for w in self.witness]
        return d


def default_sampler(n=2000, seed=0, h_range=5.0, k_min=-5.0):
    """Admissible (H, K) samples: a stratified grid plus uniform random points."""
    rng = np.random.default_rng(seed)
    m = int(np.ceil(np.sqrt(n / 2)))
    hs = np.linspace(-h_range, h_range, 2 * m + 1)
    grid_H, grid_K = [], []
    for h in hs:
        kmax = h * h / 4.0
        ks = np.linspace(k_min, kmax, m)
        grid_H.append(np.full(m, h))
        grid_K.append(ks)
    Hr = rng.uniform(-h_range, h_range, n)
    Kr = k_min + (Hr * Hr / 4.0 - k_min) * rng.uniform(0.0, 1.0, n)
    H = np.concatenate(grid_H + [Hr])
    K = np.concatenate(grid_K + [Kr])
    return H, K


def classify_scaling(spec: FunctionalSpec, sampler=None, tol=1e-12) -> ScalingClass:
    """Invariant / expanding / shrinking / neither, from the sign of the excess."""
    if sampler is None:
        H, K = default_sampler()
    elif callable(sampler):
        H, K = sampler()
    else:
        H, K = sampler
    H = np.asarray(H, dtype=float)
    K = np.asarray(K, dtype=float)
    if H.size < 1000:
        raise InvalidParams("classification needs at least 1000 samples")

    coeffs = spec.polynomial_coefficients()
    exact = False
    if coeffs is not None:
        ex = excess_polynomial(coeffs)
        if not ex:
            return ScalingClass("invariant", exact=True)
        if len(ex) == 1 and (0, 0) in ex:
            return ScalingClass("expanding" if ex[(0, 0)] > 0 else "shrinking", exact=True)
        vals = np.zeros_like(H)
        for (i, j), c in ex.items():
            vals = vals + float(c) * H**i * K**j
        exact = True
    elif spec.kind == "helfrich":
        kc, c0 = spec.params["k_c"], spec.params["c0"]
        if kc * c0 == 0.0:
            return ScalingClass("invariant", exact=True)
        vals = 2.0 * kc * c0 * (H + c0)
    else:
        vals = scaling_excess(spec, H, K)

    scale = np.maximum(1.0, np.abs(eval_jet(spec, H, K, order=0, check=False).F))
    pos = vals > tol * scale
    neg = vals < -tol * scale
    if not pos.any() and not neg.any():
        return ScalingClass("invariant", exact=exact)
    if pos.any() and neg.any():
        ip, ineg = np.flatnonzero(pos)[0], np.flatnonzero(neg)[0]
        return ScalingClass("neither", witness=((H[ip], K[ip]), (H[ineg], K[ineg])), exact=exact)
    return ScalingClass("expanding" if pos.any() else "shrinking", exact=exact)


def builtin(name, **params):
    """Shorthand used by tests and the CLI: ``builtin('p_willmore', p=3)``."""
    if name == "polynomial":
        return FunctionalSpec.polynomial(params["coefficients"])
    return FunctionalSpec(name, params)

