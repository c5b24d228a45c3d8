"""Axisymmetric Willmore meridians as a first-order ODE system.

The surface is ``X(t, w) = (t, f(t) w)`` with ``w`` on the unit circle.  The
state is ``(f, u, H, m)``, where ``u = f'``, ``H`` is the mean curvature with
the outward normal (a cylinder of radius ``rho`` has ``H = -1/rho``) and ``m``
is the auxiliary variable with ``H' = m F / f``, ``F = sqrt(1 + u^2)``.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.integrate import solve_ivp

from . import _kernels
from . import taylor as tj
from .errors import FloorHit, InvalidParams, OutOfRange, StepFloor
from .surface import axisym as axisym_patch
from .taylor import Jet

log = logging.getLogger(__name__)

F_MIN = 1e-8
MIN_STEP = 1e-12


@dataclass(frozen=True)
class OdeState:
    t: float
    f: float
    u: float
    H: float
    m: float

    def y(self):
        return np.array([self.f, self.u, self.H, self.m])


def _rhs(y):
    """Vectorized right-hand side; ``y`` has the four components first."""
    f, u, H, m = y
    F = np.sqrt(1.0 + u * u)
    q = H + 2.0 / (f * F)
    return np.array([u, H * F**3 + F * F / f, m * F / f, -0.5 * q * q * H * f * F])


def ode_rhs(state, f_min=F_MIN):
    """Derivative ``(f', u', H', m')`` at a state (``OdeState`` or 4-vector)."""
    y = state.y() if isinstance(state, OdeState) else np.asarray(state, dtype=float)
    if not np.all(y[0] > f_min):
        raise FloorHit(f"f = {np.min(y[0]):.3g} is at or below the floor {f_min:g}")
    return _rhs(y)


def _third_derivative(y):
    """f''' obtained by differentiating u' along the flow."""
    f, u, H, m = y
    F = np.sqrt(1.0 + u * u)
    up = H * F**3 + F * F / f
    Fp = u * up / F
    Hp = m * F / f
    return Hp * F**3 + 3.0 * H * F * F * Fp + (2.0 * F * Fp * f - F * F * u) / (f * f)


# ---------------------------------------------------------------------------
# trajectories
# ---------------------------------------------------------------------------
@dataclass
class Trajectory:
    """Accepted states in increasing ``t`` with cubic Hermite dense output."""

    t: np.ndarray
    y: np.ndarray
    steps: np.ndarray
    reason: str
    controller: str
    t_start: float = 0.0
    dy: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        if self.dy is None:
            self.dy = _rhs(self.y.T).T

    @property
    def t_range(self):
        return float(self.t[0]), float(self.t[-1])

    def states(self):
        return [OdeState(float(t), *map(float, y)) for t, y in zip(self.t, self.y)]

    def __len__(self):
        return len(self.t)

    def _locate(self, T):
        T = np.asarray(T, dtype=float)
        lo, hi = self.t_range
        if np.any(T < lo - 1e-12 * max(1.0, abs(lo))) or np.any(T > hi + 1e-12 * max(1.0, abs(hi))):
            raise OutOfRange(f"t outside the trajectory range [{lo:g}, {hi:g}]")
        if len(self.t) == 1:
            return T, np.zeros(T.shape, dtype=int)
        i = np.clip(np.searchsorted(self.t, T, side="right") - 1, 0, len(self.t) - 2)
        return T, i

    def __call__(self, T):
        """Dense output: state vector(s) at ``T`` by cubic Hermite."""
        T, i = self._locate(T)
        if len(self.t) == 1:
            return np.broadcast_to(self.y[0], T.shape + (4,)).copy()
        t0, t1 = self.t[i], self.t[i + 1]
        h = (t1 - t0)[..., None]
        x = ((T - t0) / (t1 - t0))[..., None]
        y0, y1, d0, d1 = self.y[i], self.y[i + 1], self.dy[i], self.dy[i + 1]
        h00 = 2 * x**3 - 3 * x**2 + 1
        h10 = x**3 - 2 * x**2 + x
        h01 = -2 * x**3 + 3 * x**2
        h11 = x**3 - x**2
        return h00 * y0 + h10 * h * d0 + h01 * y1 + h11 * h * d1

    def state(self, T):
        return OdeState(float(T), *map(float, self(float(T))))

    def refined(self, T, max_step=1e-3):
        """State(s) at ``T`` by RK4 sub-steps from the nearest accepted node.

        More accurate than the Hermite interpolant when the accepted steps are
        long (adaptive runs); used to build surface patches.
        """
        T, _ = self._locate(T)
        flat = T.ravel()
        j = np.clip(np.searchsorted(self.t, flat), 0, len(self.t) - 1)
        jm = np.clip(j - 1, 0, len(self.t) - 1)
        j = np.where(np.abs(self.t[jm] - flat) < np.abs(self.t[j] - flat), jm, j)
        y = self.y[j].T.copy()
        dt = flat - self.t[j]
        n = int(max(1, math.ceil(float(np.max(np.abs(dt), initial=0.0)) / max_step)))
        h = dt / n
        for _ in range(n):
            k1 = _rhs(y)
            k2 = _rhs(y + 0.5 * h * k1)
            k3 = _rhs(y + 0.5 * h * k2)
            k4 = _rhs(y + h * k3)
            y = y + h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        return y.T.reshape(T.shape + (4,))

    def to_csv(self, path=None):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t", "f", "u", "H", "m"])
        for t, y in zip(self.t, self.y):
            w.writerow([repr(float(t))] + [repr(float(v)) for v in y])
        text = buf.getvalue()
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text)
        return text

    def summary(self):
        return {
            "controller": self.controller,
            "reason": self.reason,
            "t_range": list(self.t_range),
            "n_states": len(self.t),
            "min_step": float(np.min(self.steps)) if len(self.steps) else None,
            "max_step": float(np.max(self.steps)) if len(self.steps) else None,
        }


def _as_y(initial):
    if isinstance(initial, OdeState):
        return initial.t, initial.y()
    a = np.asarray(initial, dtype=float)
    if a.shape == (4,):
        return 0.0, a
    if a.shape == (5,):
        return float(a[0]), a[1:]
    raise InvalidParams("initial state must be OdeState, (f, u, H, m) or (t, f, u, H, m)")


def _finish(ts, ys, reason, controller, t0):
    ts, ys = np.asarray(ts, dtype=float), np.asarray(ys, dtype=float)
    if len(ts) > 1 and ts[-1] < ts[0]:
        ts, ys = ts[::-1].copy(), ys[::-1].copy()
    return Trajectory(ts, ys, np.abs(np.diff(ts)), reason, controller, float(t0))


def integrate(initial, t_end, controller="rk4", step=1e-3, rtol=1e-10, atol=1e-12, max_step=0.01, f_min=F_MIN):
    """Integrate from ``initial`` to ``t_end`` (either direction).

    ``controller='rk4'`` takes equal fixed steps, the largest that divide the
    interval evenly without exceeding ``step``.  ``controller='rk45'`` uses
    an adaptive Dormand-Prince pair with the given tolerances.  Integration
    halts with reason ``'f_floor'`` when ``f`` would drop to ``f_min``.
    """
    t0, y0 = _as_y(initial)
    if not y0[0] > f_min:
        raise FloorHit(f"initial f = {y0[0]:g} is at or below the floor {f_min:g}")
    span = float(t_end) - t0
    if span == 0.0:
        return _finish([t0], [y0], "reached_end", controller, t0)
    if controller == "rk4":
        if not step > 0:
            raise InvalidParams("step must be positive")
        n = max(1, int(math.ceil(abs(span) / step - 1e-9)))
        ts, ys, status = _kernels.rk4_run(y0, t0, span / n, n, f_min)
        if status == 0:
            ts[-1] = float(t_end)
        return _finish(ts, ys, "f_floor" if status else "reached_end", "rk4", t0)
    if controller != "rk45":
        raise InvalidParams(f"unknown controller {controller!r}")

    def floor(t, y):
        return y[0] - f_min

    floor.terminal = True
    floor.direction = -1
    sol = solve_ivp(
        lambda t, y: _rhs(y),
        (t0, float(t_end)),
        y0,
        method="RK45",
        rtol=rtol,
        atol=atol,
        max_step=max_step,
        events=floor,
    )
    steps = np.abs(np.diff(sol.t))
    if sol.status == -1 or (len(steps) > 1 and np.min(steps[:-1]) < MIN_STEP):
        raise StepFloor(f"adaptive step fell below {MIN_STEP:g} near t = {sol.t[-1]:.6g}: {sol.message}")
    ts, ys = sol.t, sol.y.T
    reason = "reached_end"
    if sol.status == 1:
        reason = "f_floor"
        keep = ys[:, 0] > f_min
        ts, ys = ts[keep], ys[keep]
    return _finish(ts, ys, reason, "rk45", t0)


# ---------------------------------------------------------------------------
# boundary residuals and special solutions
# ---------------------------------------------------------------------------
def free_boundary_residual(traj: Trajectory, T):
    """``(m(T), m'(T))`` from the dense output."""
    y = traj(T)
    return float(y[3]), float(ode_rhs(y)[3])


def c4_boundary_residual(traj: Trajectory, T):
    """``(f'' + F^2/f, f''' - 3 f' F^2 / f^2)`` at ``T``."""
    y = traj(T)
    f, u = y[0], y[1]
    F2 = 1.0 + u * u
    fpp = ode_rhs(y)[1]
    return float(fpp + F2 / f), float(_third_derivative(y) - 3.0 * u * F2 / (f * f))


def c4_residual_profile(f, fp, fpp, fppp):
    """The same two residuals for an explicit profile."""
    F2 = 1.0 + fp * fp
    return fpp + F2 / f, fppp - 3.0 * fp * F2 / (f * f)


def constant_h_residual(f, fp, fpp, c):
    """``f'' f - F^2 - c f F^3``."""
    f, fp, fpp = (np.asarray(x, dtype=float) for x in (f, fp, fpp))
    if np.any(f <= 0):
        raise InvalidParams("f must be positive")
    F = np.sqrt(1.0 + fp * fp)
    out = fpp * f - F * F - c * f * F**3
    return float(out) if out.ndim == 0 else out


def turning_points(traj: Trajectory):
    """Parameters where ``u = f'`` changes sign (critical points of ``f``)."""
    u = traj.y[:, 1]
    idx = np.nonzero(np.sign(u[:-1]) * np.sign(u[1:]) < 0)[0]
    out = []
    for i in idx:
        a, b = traj.t[i], traj.t[i + 1]
        for _ in range(60):
            mid = 0.5 * (a + b)
            if np.sign(traj(mid)[1]) == np.sign(u[i]):
                a = mid
            else:
                b = mid
        out.append(0.5 * (a + b))
    return out


def classify_constant_h(traj: Trajectory, tol=1e-8):
    """``'catenoid'``, ``'circular'`` or ``None`` for a trajectory with constant H.

    A catenoid has ``H = m = 0``; a circular meridian satisfies
    ``f^2 + (t - c)^2 = const`` for the center ``c`` where ``f' = 0``.
    """
    H, m = traj.y[:, 2], traj.y[:, 3]
    if np.max(np.abs(H - H[0])) > tol * max(1.0, abs(H[0])):
        return None
    if abs(H[0]) <= tol and np.max(np.abs(m)) <= tol:
        return "catenoid"
    f, u, t = traj.y[:, 0], traj.y[:, 1], traj.t
    # center of the osculating circle along the normal line of the meridian
    c = t + f * u
    if np.max(np.abs(c - c[0])) <= 1e3 * tol * max(1.0, abs(c[0])):
        return "circular"
    return None


# ---------------------------------------------------------------------------
# shooting
# ---------------------------------------------------------------------------
@dataclass
class ShootResult:
    roots: list
    scan: dict
    rejected: list

    def to_dict(self):
        return asdict(self)

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True)


def _residual(H0, m0, T, rtol, atol):
    try:
        tr = integrate((1.0, 0.0, H0, m0), T, controller="rk45", rtol=rtol, atol=atol)
    except (StepFloor, FloorHit):
        return None
    if tr.reason != "reached_end":
        return None
    y = tr.refined(T)
    return np.array([y[3], ode_rhs(y)[3]])


def _scan_point(args):
    H0, m0, t_lo, t_hi, n_t, rtol, atol = args
    try:
        tr = integrate((1.0, 0.0, H0, m0), t_hi, controller="rk45", rtol=rtol, atol=atol)
    except (StepFloor, FloorHit):
        return None
    if tr.reason != "reached_end":
        return None
    Ts = np.linspace(t_lo, t_hi, n_t) if t_hi > t_lo else np.array([t_hi])
    y = tr(Ts)
    m = y[:, 3]
    mp = _rhs(y.T)[3]
    obj = m * m + mp * mp
    k = int(np.argmin(obj))
    return float(obj[k]), float(Ts[k]), int(np.count_nonzero(np.sign(m[:-1]) * np.sign(m[1:]) < 0))


def _newton(z, fixed_T, box, rtol, atol, tol, max_iter, fd=1e-6):
    def R(z):
        T = fixed_T if fixed_T is not None else z[2]
        return _residual(z[0], z[1], T, rtol, atol)

    r = R(z)
    if r is None:
        return None, None
    for _ in range(max_iter):
        if np.max(np.abs(r)) <= tol:
            break
        J = np.empty((2, len(z)))
        for k in range(len(z)):
            dz = np.zeros(len(z))
            dz[k] = fd * max(1.0, abs(z[k]))
            rp, rm = R(z + dz), R(z - dz)
            if rp is None or rm is None:
                return None, None
            J[:, k] = (rp - rm) / (2 * dz[k])
        step = -np.linalg.lstsq(J, r, rcond=None)[0]
        lam, ok = 1.0, False
        while lam > 1e-4:
            zn = np.clip(z + lam * step, box[0][: len(z)], box[1][: len(z)])
            rn = R(zn)
            if rn is not None and np.linalg.norm(rn) < np.linalg.norm(r):
                z, r, ok = zn, rn, True
                break
            lam *= 0.5
        if not ok:
            break
    return z, r


def shoot(
    H0_range=(-1.0, 1.0),
    m0_range=(-1.0, 1.0),
    T_window=(0.5, 2.0),
    grid=(9, 9),
    n_t=81,
    rtol=1e-10,
    atol=1e-12,
    verify_tol=1e-8,
    max_seeds=8,
    max_iter=25,
    threads=1,
) -> ShootResult:
    """Search initial data ``f(0)=1, u(0)=0, H(0)=H0, m(0)=m0`` for ``m(T) = m'(T) = 0``.

    A grid scan over ``(H0, m0)`` records ``min_T (m^2 + m'^2)`` on the
    window; local minima of that map seed a damped Gauss-Newton refinement.
    Each candidate is re-integrated with halved tolerances and kept only if
    both residuals are at most ``verify_tol``.  An empty root list is a valid
    outcome.
    """
    t_lo, t_hi = map(float, T_window)
    if not 0 < t_lo <= t_hi:
        raise InvalidParams("need 0 < T_lo <= T_hi")
    Hs = np.linspace(*H0_range, grid[0]) if grid[0] > 1 else np.array([float(H0_range[0])])
    ms = np.linspace(*m0_range, grid[1]) if grid[1] > 1 else np.array([float(m0_range[0])])
    args = [(float(h), float(m), t_lo, t_hi, n_t, rtol, atol) for h in Hs for m in ms]
    if threads > 1:
        with ThreadPoolExecutor(threads) as ex:
            res = list(ex.map(_scan_point, args))
    else:
        res = [_scan_point(a) for a in args]
    obj = np.full((len(Hs), len(ms)), np.inf)
    Tbest = np.full((len(Hs), len(ms)), np.nan)
    changes = np.zeros((len(Hs), len(ms)), dtype=int)
    for k, r in enumerate(res):
        if r is not None:
            i, j = divmod(k, len(ms))
            obj[i, j], Tbest[i, j], changes[i, j] = r
    seeds = []
    for i in range(len(Hs)):
        for j in range(len(ms)):
            if not np.isfinite(obj[i, j]):
                continue
            nb = obj[max(i - 1, 0) : i + 2, max(j - 1, 0) : j + 2]
            if obj[i, j] <= np.min(nb):
                seeds.append((obj[i, j], i, j))
    seeds.sort()
    fixed_T = t_lo if t_hi == t_lo else None
    # iterates stay inside the search rectangle and the T window
    box = (np.array([min(H0_range), min(m0_range), t_lo]), np.array([max(H0_range), max(m0_range), t_hi]))
    roots, rejected = [], []
    for _, i, j in seeds[:max_seeds]:
        z0 = np.array([Hs[i], ms[j]] + ([] if fixed_T is not None else [Tbest[i, j]]))
        z, r = _newton(z0, fixed_T, box, rtol, atol, 0.1 * verify_tol, max_iter)
        if z is None:
            continue
        T = fixed_T if fixed_T is not None else float(z[2])
        check = _residual(z[0], z[1], T, 0.5 * rtol, 0.5 * atol)
        cand = {"H0": float(z[0]), "m0": float(z[1]), "T": float(T)}
        if check is None or np.max(np.abs(check)) > verify_tol:
            log.info("discarding unverified shooting candidate %s (residual %s)", cand, check)
            rejected.append(dict(cand, residual=None if check is None else [float(x) for x in check]))
            continue
        if any(abs(c["H0"] - cand["H0"]) < 1e-6 and abs(c["m0"] - cand["m0"]) < 1e-6 for c in roots):
            continue
        roots.append(dict(cand, residual=[float(x) for x in check]))
    scan = {
        "H0": Hs.tolist(),
        "m0": ms.tolist(),
        "objective": [[None if not np.isfinite(v) else float(v) for v in row] for row in obj],
        "T_best": [[None if not np.isfinite(v) else float(v) for v in row] for row in Tbest],
        "m_sign_changes": changes.tolist(),
    }
    return ShootResult(roots, scan, rejected)


# ---------------------------------------------------------------------------
# surfaces from trajectories
# ---------------------------------------------------------------------------
def taylor_coefficients(y, order):
    """Taylor coefficients of the solution through state(s) ``y`` (shape (4, ...)).

    Picard iteration on truncated series: each pass fixes one more order.
    Returns an array of shape (order + 1, 4, ...) with ``c[k] = y^(k) / k!``.
    """
    y = np.asarray(y, dtype=float)
    batch = y.shape[1:]
    series = [Jet.constant(y[c], order, batch) for c in range(4)]
    for _ in range(order):
        f, u, H, m = series
        F = (u * u + 1.0).sqrt()
        q = H + 2.0 / (f * F)
        d = [u, H * F * F * F + F * F / f, m * F / f, q * q * H * f * F * (-0.5)]
        new = []
        for c in range(4):
            cc = np.zeros_like(series[c].c)
            cc[0, 0] = y[c]
            cc[1 : order + 1, 0] = d[c].c[:order, 0] / np.arange(1, order + 1).reshape((order,) + (1,) * len(batch))
            new.append(Jet(cc, order))
        series = new
    return np.stack([s.c[:, 0] for s in series], axis=1)


def profile_derivatives(traj: Trajectory, t, order=4):
    """``{k: f^(k)(t)}`` for ``k <= order`` from the trajectory."""
    t = np.asarray(t, dtype=float)
    y = np.moveaxis(traj.refined(t), -1, 0)
    c = taylor_coefficients(y, order)
    return {k: c[k, 0] * math.factorial(k) for k in range(order + 1)}


def trajectory_patch(traj: Trajectory, t_range=None, convention="meridian", orientation=1):
    """Surface of revolution whose meridian is the trajectory's profile."""
    lo, hi = traj.t_range
    t_range = (lo, hi) if t_range is None else tuple(map(float, t_range))
    if t_range[0] < lo or t_range[1] > hi:
        raise OutOfRange("patch range outside the trajectory")

    def derivs(t, order):
        d = profile_derivatives(traj, t, order)
        return [d[k] for k in range(order + 1)]

    return axisym_patch(derivs=derivs, t_range=t_range, convention=convention, orientation=orientation, name="axisym_trajectory")


def catenoid_trajectory(t_end=2.0, step=1e-3, symmetric=False):
    """Trajectory from ``(1, 0, 0, 0)``; with ``symmetric`` both directions."""
    fwd = integrate((1.0, 0.0, 0.0, 0.0), t_end, step=step)
    if not symmetric:
        return fwd
    bwd = integrate((1.0, 0.0, 0.0, 0.0), -t_end, step=step)
    t = np.concatenate([bwd.t[:-1], fwd.t])
    y = np.concatenate([bwd.y[:-1], fwd.y])
    return Trajectory(t, y, np.diff(t), "reached_end", "rk4", 0.0)


__all__ = [
    "OdeState",
    "ShootResult",
    "Trajectory",
    "c4_boundary_residual",
    "c4_residual_profile",
    "catenoid_trajectory",
    "classify_constant_h",
    "constant_h_residual",
    "free_boundary_residual",
    "integrate",
    "ode_rhs",
    "profile_derivatives",
    "shoot",
    "taylor_coefficients",
    "trajectory_patch",
    "turning_points",
]
