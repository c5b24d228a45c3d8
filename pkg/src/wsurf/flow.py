"""Gradient descent of curvature energies on triangle meshes.

Interior vertices move along ``-W n``, where ``W`` is the discrete
Euler-Lagrange scalar assembled from cotan Laplacians of the jet fields;
boundary vertices stay pinned.  Two schemes are available:

``l2``
    explicit step ``r <- r - dt W n``.
``semi_implicit``
    the normal displacement ``phi`` solves ``(M + dt L D L) phi = -dt M W``
    with ``M`` the mixed areas, ``L`` the cotan stiffness and
    ``D = F_HH / A``.  This is the explicit step preconditioned by the
    linearized fourth-order part of ``W``; as ``dt`` grows it approaches a
    Newton step for that part.

Both use the same backtracking line search on the discrete energy, so every
accepted step decreases it.
"""

from __future__ import annotations

import csv
import io
import os
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.sparse import diags
from scipy.sparse.linalg import spsolve

from .errors import InvalidParams, StepFloor
from .functional import FunctionalSpec, eval_jet
from .mesh import (
    TriMesh,
    boundary_frames,
    cotan_laplacian,
    cotan_matrix,
    ring_gradient_hessian,
    save_mesh,
    vertex_curvatures,
)

SCHEMES = ("l2", "semi_implicit")


@dataclass
class FlowConfig:
    spec: FunctionalSpec
    dt: float = 1e-3
    step_rule: str = "backtracking"
    alpha: float = 1e-4
    beta: float = 0.5
    grow: float = 2.0
    dt_min: float = 1e-12
    dt_max: float = 1e6
    max_steps: int = 2000
    boundary_mode: str = "fixed"
    eps_E: float = 0.0
    eps_v: float = 1e-10
    scheme: str = "l2"
    boundary_curvature: str = "zero"
    target_sup_H: float | None = None
    checkpoint_every: int = 0
    checkpoint_dir: str | None = None

    def __post_init__(self):
        if not self.dt > 0:
            raise InvalidParams("dt must be positive")
        if not 0 < self.beta < 1:
            raise InvalidParams("beta must lie in (0, 1)")
        if self.step_rule not in ("fixed", "backtracking"):
            raise InvalidParams("step_rule must be 'fixed' or 'backtracking'")
        if self.scheme not in SCHEMES:
            raise InvalidParams(f"scheme must be one of {SCHEMES}")
        if self.boundary_mode not in ("fixed", "fixed_monitor"):
            raise InvalidParams("boundary_mode must be 'fixed' or 'fixed_monitor'")
        if self.boundary_curvature not in ("zero", "measured"):
            raise InvalidParams("boundary_curvature must be 'zero' or 'measured'")
        if self.max_steps < 0:
            raise InvalidParams("max_steps must be non-negative")

    @classmethod
    def from_dict(cls, d, spec=None):
        d = dict(d)
        if spec is None:
            spec = FunctionalSpec.from_dict(d.pop("spec"))
        else:
            d.pop("spec", None)
        known = set(cls.__dataclass_fields__) - {"spec"}
        unknown = set(d) - known
        if unknown:
            raise InvalidParams(f"unknown flow config keys: {sorted(unknown)}")
        return cls(spec=spec, **d)

    def to_dict(self):
        d = asdict(self)
        d["spec"] = self.spec.to_dict()
        return d


# ---------------------------------------------------------------------------
# discrete energy and Euler-Lagrange scalar
# ---------------------------------------------------------------------------
def discrete_energy(spec: FunctionalSpec, mesh: TriMesh) -> float:
    """Sum of ``F(H_v, K_v) A_v`` over all vertices (mixed areas tile the mesh)."""
    vc = vertex_curvatures(mesh)
    F = eval_jet(spec, vc.H, vc.K, order=0, check=False).F
    return float(np.sum(np.where(mesh.used, F * vc.area, 0.0)))


def _curvature_fields(mesh, vc, boundary_curvature):
    H, K = vc.H.copy(), vc.K.copy()
    if boundary_curvature == "zero":
        H[vc.boundary] = 0.0
        K[vc.boundary] = 0.0
    return H, K


def discrete_el_residual(spec: FunctionalSpec, mesh: TriMesh, boundary_curvature="zero"):
    """Vertex values of ``W``; boundary entries are set to zero.

    With ``boundary_curvature='zero'`` the jet fields on the boundary use
    ``H = K = 0`` (the flat-collar boundary data); otherwise the one-sided
    boundary estimates.
    """
    vc = vertex_curvatures(mesh)
    H, K = _curvature_fields(mesh, vc, boundary_curvature)
    j = eval_jet(spec, H, K, order=2, check=False)
    FH = np.broadcast_to(j.F_H, H.shape).astype(float)
    FK = np.broadcast_to(j.F_K, H.shape).astype(float)
    lapFH, _ = cotan_laplacian(mesh, FH)
    W = lapFH + FH * (H * H - 2.0 * K) - H * np.broadcast_to(j.F, H.shape)
    if np.ptp(FK) > 0:
        lapFK, _ = cotan_laplacian(mesh, FK)
        _, hess = ring_gradient_hessian(mesh, FK, vc.n)
        h_hess = np.einsum("nij,nij->n", vc.S, hess)
        W = W + H * lapFK - h_hess + H * K * FK
    else:
        W = W + H * K * FK
    W = np.where(vc.boundary | ~mesh.used, 0.0, W)
    return W, vc, j


def natural_condition(spec: FunctionalSpec, mesh: TriMesh):
    """Boundary values of ``F_H + kappa_n F_K`` from the discrete frames."""
    b = boundary_frames(mesh)
    vc = vertex_curvatures(mesh)
    j = eval_jet(spec, vc.H[b.vertex], vc.K[b.vertex], order=1, check=False)
    return j.F_H + b.kappa_n * j.F_K


# ---------------------------------------------------------------------------
# stepping
# ---------------------------------------------------------------------------
@dataclass
class StepReport:
    accepted: bool
    energy_before: float
    energy_after: float
    dt: float
    next_dt: float
    sup_displacement: float
    sup_speed: float
    trials: int


def _direction(mesh, W, vc, j, config, dt):
    """Vertex displacement for step size ``dt``."""
    interior = mesh.interior_mask
    if config.scheme == "l2":
        return -dt * W[:, None] * vc.n
    idx = np.nonzero(interior)[0]
    L = cotan_matrix(mesh)[idx][:, idx]
    A = vc.area[idx]
    FHH = np.clip(np.broadcast_to(j.F_HH, vc.H.shape)[idx].astype(float), 0.0, None)
    M = diags(A)
    sysm = (M + dt * (L @ diags(FHH / A) @ L)).tocsc()
    phi = spsolve(sysm, -dt * A * W[idx])
    out = np.zeros_like(mesh.vertices)
    out[idx] = phi[:, None] * vc.n[idx]
    return out


def descent_step(spec: FunctionalSpec, mesh: TriMesh, config: FlowConfig, dt=None):
    """One pinned-boundary descent step.  Returns ``(new_mesh, StepReport)``.

    With backtracking the step is retried at ``beta * dt`` until the Armijo
    condition holds; :class:`StepFloor` is raised once ``dt`` falls below
    ``dt_min``.  ``max_steps = 0`` makes this the identity.
    """
    dt = config.dt if dt is None else dt
    E0 = discrete_energy(spec, mesh)
    if config.max_steps == 0:
        return mesh, StepReport(False, E0, E0, 0.0, dt, 0.0, 0.0, 0)
    W, vc, j = discrete_el_residual(spec, mesh, config.boundary_curvature)
    speed = float(np.max(np.abs(W)))
    gnorm = float(np.sum(vc.area * W * W))
    trials = 0
    while True:
        trials += 1
        D = _direction(mesh, W, vc, j, config, dt)
        cand = mesh.with_vertices(mesh.vertices + D)
        try:
            E1 = discrete_energy(spec, cand)
        except ArithmeticError:
            E1 = np.inf
        disp = float(np.max(np.linalg.norm(D, axis=1)))
        if config.step_rule == "fixed":
            return cand, StepReport(True, E0, E1, dt, dt, disp, speed, trials)
        # predicted decrease along the direction: sum A W phi
        pred = -float(np.sum(vc.area * W * np.einsum("ij,ij->i", D, vc.n))) if config.scheme != "l2" else dt * gnorm
        if np.isfinite(E1) and E1 <= E0 - config.alpha * pred and E1 <= E0:
            return cand, StepReport(True, E0, E1, dt, min(dt * config.grow, config.dt_max), disp, speed, trials)
        dt *= config.beta
        if dt < config.dt_min:
            raise StepFloor(f"no energy decrease for dt down to {config.dt_min:g}")


@dataclass
class FlowTrace:
    steps: list = field(default_factory=list)
    reason: str = ""
    mesh: TriMesh | None = None
    natural: list = field(default_factory=list)

    def energies(self):
        return np.array([s["energy"] for s in self.steps])

    def sup_H(self):
        return np.array([s["sup_H"] for s in self.steps])

    def monotone(self, rtol=0.0):
        E = self.energies()
        return bool(np.all(np.diff(E) <= rtol * np.abs(E[:-1])))

    def to_csv(self, path=None):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["step", "energy", "sup_H", "sup_displacement", "dt"])
        for s in self.steps:
            w.writerow([s["step"], repr(s["energy"]), repr(s["sup_H"]), repr(s["sup_displacement"]), repr(s["dt"])])
        text = buf.getvalue()
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text)
        return text

    def summary(self):
        return {
            "reason": self.reason,
            "n_steps": len(self.steps) - 1,
            "energy_initial": self.steps[0]["energy"] if self.steps else None,
            "energy_final": self.steps[-1]["energy"] if self.steps else None,
            "sup_H_initial": self.steps[0]["sup_H"] if self.steps else None,
            "sup_H_final": self.steps[-1]["sup_H"] if self.steps else None,
            "monotone": self.monotone() if self.steps else True,
        }


def interior_sup_H(mesh):
    vc = vertex_curvatures(mesh)
    m = mesh.interior_mask
    return float(np.max(np.abs(vc.H[m]))) if np.any(m) else 0.0


def run_flow(spec: FunctionalSpec, mesh: TriMesh, config: FlowConfig) -> FlowTrace:
    """Iterate :func:`descent_step` until a stop criterion fires.

    Reasons: ``'speed'`` (sup |W| below ``eps_v``), ``'energy'`` (decrease
    below ``eps_E``), ``'target'`` (sup |H| at or below ``target_sup_H``),
    ``'max_steps'`` and ``'stalled'`` (line search hit ``dt_min``).
    """
    trace = FlowTrace()
    cur = mesh
    dt = config.dt

    def record(k, E, disp, dt_used):
        trace.steps.append({"step": k, "energy": E, "sup_H": interior_sup_H(cur), "sup_displacement": disp, "dt": dt_used})
        if config.boundary_mode == "fixed_monitor" and cur.boundary_loops:
            trace.natural.append(float(np.max(np.abs(natural_condition(spec, cur)))))

    record(0, discrete_energy(spec, cur), 0.0, 0.0)
    for k in range(1, config.max_steps + 1):
        if config.target_sup_H is not None and trace.steps[-1]["sup_H"] <= config.target_sup_H:
            trace.reason = "target"
            break
        W, _, _ = discrete_el_residual(spec, cur, config.boundary_curvature)
        if float(np.max(np.abs(W))) < config.eps_v:
            trace.reason = "speed"
            break
        try:
            nxt, rep = descent_step(spec, cur, config, dt)
        except StepFloor:
            trace.reason = "stalled"
            break
        cur = nxt
        dt = rep.next_dt
        record(k, rep.energy_after, rep.sup_displacement, rep.dt)
        if config.checkpoint_every and config.checkpoint_dir and k % config.checkpoint_every == 0:
            os.makedirs(config.checkpoint_dir, exist_ok=True)
            save_mesh(cur, os.path.join(config.checkpoint_dir, f"step_{k:06d}.off"))
        if rep.energy_before - rep.energy_after < config.eps_E:
            trace.reason = "energy"
            break
    else:
        trace.reason = "max_steps"
    if not trace.reason:
        trace.reason = "max_steps"
    trace.mesh = cur
    return trace


def bump_disk(resolution=48, amplitude=0.1, radius=1.0):
    """Flat disk mesh lifted by ``amplitude (1 - r^2)^3``.

    The bump has vanishing height, slope and curvature on the boundary
    circle, so the pinned flat boundary carries ``H = 0`` data.
    """
    from .mesh import disk_mesh

    def height(x, y):
        q = 1.0 - (x * x + y * y) / radius**2
        return amplitude * np.clip(q, 0.0, None) ** 3

    return disk_mesh(resolution, radius, height)


__all__ = [
    "FlowConfig",
    "FlowTrace",
    "StepReport",
    "bump_disk",
    "descent_step",
    "discrete_el_residual",
    "discrete_energy",
    "interior_sup_H",
    "natural_condition",
    "run_flow",
]
