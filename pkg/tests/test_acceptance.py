"""Acceptance suite: one test per criterion, each recording a pass/fail line.

Run ``pytest tests/test_acceptance.py -v`` and read the "acceptance criteria"
section of the terminal summary, or run this file directly.
"""

import time

import numpy as np
import pytest
from conftest import record

from wsurf import axisym as ax
from wsurf import flow as fl
from wsurf import surface as sf
from wsurf import variational as va
from wsurf.functional import FunctionalSpec, builtin, classify_scaling, scaling_excess

CW = builtin("conformal_willmore")
H2 = FunctionalSpec.polynomial({(2, 0): 1})
H2K = FunctionalSpec.polynomial({(2, 1): 1})
HELFRICH = FunctionalSpec.helfrich(1.0, 1.0, 0.5)


def fixtures():
    return {
        "catenoid_band": sf.catenoid_band(),
        "torus_band": sf.torus_band(),
        "sphere_cap": sf.sphere_cap(),
    }


def _check(number, ok, detail):
    record(number, ok, detail)
    assert ok, f"criterion {number}: {detail}"


# 1 -------------------------------------------------------------------------
def test_c01_stress_conservation():
    t0 = time.perf_counter()
    worst, bad = 0.0, []
    for spec_name, spec in (("conformal_willmore", CW), ("H^2", H2), ("H^2 K", H2K), ("helfrich", HELFRICH)):
        for name, patch in fixtures().items():
            chk = va.stress_divergence_check(spec, patch, steps=(2e-3, 1e-3, 5e-4))
            res = chk.residual[1]
            worst = max(worst, res)
            if res > 1e-6:
                bad.append(f"{spec_name}/{name} residual {res:.2e}")
            for order, kind in zip(chk.orders, chk.order_kind):
                # an unresolved pair means both FD errors sit below the rounding floor
                if kind != "unresolved" and order < 3.0:
                    bad.append(f"{spec_name}/{name} order {order:.2f} ({kind})")
    elapsed = time.perf_counter() - t0
    if elapsed > 30.0:
        bad.append(f"runtime {elapsed:.1f}s")
    _check(1, not bad, f"max residual {worst:.2e}, {elapsed:.1f}s" + (f"; {bad}" if bad else ""))


# 2 -------------------------------------------------------------------------
def test_c02_h2_stress_closed_form():
    rng = np.random.default_rng(2)
    worst = 0.0
    for patch in fixtures().values():
        s = rng.uniform(*patch.s_range, 100)
        t = rng.uniform(*patch.t_range, 100)
        g = sf.geometry_batch(patch, s, t)
        T = va.stress_tensor(H2, g).matrix
        ref = -2 * g.H[:, None, None] * g.S - 2 * np.einsum("ni,nj->nij", g.grad_H, g.n) + (g.H**2)[:, None, None] * g.P
        worst = max(worst, float(np.max(np.abs(T - ref))))
    _check(2, worst <= 1e-12, f"max entry difference {worst:.2e}")


# 3 -------------------------------------------------------------------------
def test_c03_scaling_laws():
    patches = dict(fixtures())
    patches["cylinder"] = sf.cylinder(1.0, 2.0)
    patches["graph_patch"] = sf.graph_patch({(2, 0): 0.3, (1, 1): -0.2, (0, 3): 0.1})
    patches["disk"] = sf.disk(1.0, r_min=0.1)
    rng = np.random.default_rng(3)

    def rel(a, b):
        return float(np.max(np.abs(a - b)) / max(np.max(np.abs(b)), 1e-300)) if np.max(np.abs(b)) > 0 else float(np.max(np.abs(a)))

    worst = 0.0
    for patch in patches.values():
        s = rng.uniform(*patch.s_range, 50)
        t = rng.uniform(*patch.t_range, 50)
        g = sf.geometry_batch(patch, s, t)
        for lam in (0.5, 2.0):
            q = sf.geometry_batch(sf.rescale(patch, lam), s, t)
            worst = max(
                worst,
                rel(q.H, g.H / lam),
                rel(q.K, g.K / lam**2),
                rel(q.sqrt_det_g, g.sqrt_det_g * lam**2),
                rel(q.lap_H, g.lap_H / lam**3),
                rel(q.lap_K, g.lap_K / lam**4),
            )
    _check(3, worst <= 1e-10, f"max relative deviation {worst:.2e}")


# 4 -------------------------------------------------------------------------
def test_c04_pwillmore_excess():
    rng = np.random.default_rng(4)
    H = rng.uniform(-5, 5, 10_000)
    K = H * H / 4 - rng.uniform(0, 10, 10_000)
    worst = 0.0
    for p in (2.0, 2.5, 3.0, 4.0):
        ex = scaling_excess(FunctionalSpec.p_willmore(p), H, K)
        ref = (2 - p) * np.abs(H) ** p
        scale = np.maximum(np.abs(H) ** p, np.finfo(float).tiny)
        worst = max(worst, float(np.max(np.abs(ex - ref) / scale)))
    _check(4, worst <= 1e-14, f"max relative deviation {worst:.2e}")


# 5 -------------------------------------------------------------------------
def test_c05_catenoid_ode():
    t0 = time.perf_counter()
    tr = ax.integrate((1, 0, 0, 0), 2.0, controller="rk4", step=1e-3)
    err = float(np.max(np.abs(tr.y[:, 0] - np.cosh(tr.t))))
    errs = []
    for h in (0.2, 0.1, 0.05, 0.025):
        c = ax.integrate((1, 0, 0, 0), 2.0, controller="rk4", step=h)
        errs.append(np.max(np.abs(c.y[:, 0] - np.cosh(c.t))))
    orders = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    elapsed = time.perf_counter() - t0
    ok = err <= 1e-8 and orders.min() >= 3.8 and elapsed <= 1.0 and tr.t[-1] == pytest.approx(2.0)
    _check(5, ok, f"sup error {err:.2e}, orders {np.round(orders, 3).tolist()}, {elapsed:.3f}s")


# 6 -------------------------------------------------------------------------
def test_c06_ode_patch_consistency():
    tr = ax.catenoid_trajectory(t_end=1.5, step=1e-3, symmetric=True)
    patch = ax.trajectory_patch(tr, (-1.2, 1.2))
    s = np.linspace(-1.15, 1.15, 41)
    t = np.full_like(s, 0.7)
    g = sf.geometry_batch(patch, s, t)
    W = va.el_residual(CW, g).W
    sup = float(np.max(np.abs(W)))
    _check(6, sup <= 1e-5, f"sup |W| along meridian {sup:.2e}")


# 7 -------------------------------------------------------------------------
def test_c07_variation_oracles():
    rng = np.random.default_rng(7)
    worst_formula, worst_fv = 0.0, 0.0
    for patch in fixtures().values():
        for _ in range(5):
            X = va.random_normal_field(rng)
            out = va.variation_formula_check(patch, X, eps=1e-5)
            worst_formula = max(worst_formula, max(v["rel_error"] for v in out.values()))
            Y = va.random_interior_field(patch, rng)
            an = va.first_variation(HELFRICH, patch, Y)["total"]
            fd = va.fd_first_variation(HELFRICH, patch, Y, eps=1e-5)
            worst_fv = max(worst_fv, abs(an - fd) / abs(fd))
    ok = worst_formula <= 1e-4 and worst_fv <= 1e-4
    _check(7, ok, f"formulas {worst_formula:.2e} ({len(va.VARIATION_QUANTITIES)} quantities), first variation {worst_fv:.2e}")


# 8 -------------------------------------------------------------------------
def test_c08_curve_variations():
    disk = sf.disk(1.0)
    cases = [
        ("flat disk, u = 1", disk, disk.boundary_edges[0], va.constant_field(1.0)),
        ("sphere equator, u = 1", sf.sphere_cap(1.0, (0.0, np.pi / 2)), "s1", va.constant_field(1.0)),
        ("cylinder circle, u = cos(s/rho)", sf.cylinder(1.0, 2.0), sf.cylinder(1.0, 2.0).boundary_edges[0], va.named_field("cos_t", None)),
    ]
    worst, parts = 0.0, []
    for label, patch, edge, X in cases:
        rep = va.curve_variation_check(patch, edge, X, eps=1e-5)
        worst = max(worst, rep["rel_error"])
        parts.append(f"{label}: {rep['rel_error']:.1e}")
    _check(8, worst <= 1e-4, "; ".join(parts))


# 9 -------------------------------------------------------------------------
def test_c09_minimal_flux():
    cat = sf.catenoid_band()
    area = builtin("area")
    worst = 0.0
    for e in np.eye(3):
        rep = va.flux_check(area, cat, "translation", e, order=32)
        worst = max(worst, abs(rep.residual))
    _check(9, worst <= 1e-8, f"max translation flux residual {worst:.2e}")


# 10 ------------------------------------------------------------------------
@pytest.mark.slow
def test_c10_flow_probe():
    t0 = time.perf_counter()
    start = fl.bump_disk(48, 0.1)
    traces = {}
    for p in (3.0, 2.0):
        spec = FunctionalSpec.p_willmore(p)
        cfg = fl.FlowConfig(spec, dt=1e-3, scheme="semi_implicit", max_steps=2000, target_sup_H=1e-3)
        traces[p] = fl.run_flow(spec, start, cfg)
    elapsed = time.perf_counter() - t0
    p3, p2 = traces[3.0], traces[2.0]
    p3_ok = p3.sup_H().min() <= 1e-2 and p3.monotone() and len(p3.steps) - 1 <= 2000
    p2_control = p2.sup_H().min() > 1e-2
    ok = p3_ok and p2_control and elapsed <= 300.0
    detail = (
        f"p=3 sup|H| {p3.sup_H()[0]:.3f} -> {p3.sup_H()[-1]:.1e} in {len(p3.steps) - 1} steps "
        f"(monotone={p3.monotone()}); p=2 control sup|H| -> {p2.sup_H()[-1]:.1e} "
        f"({'stays above' if p2_control else 'also reaches'} 1e-2); {elapsed:.0f}s"
    )
    _check(10, ok, detail)


# 11 ------------------------------------------------------------------------
def test_c11_classification():
    table = [
        (CW, "invariant"),
        (builtin("area"), "expanding"),
        (FunctionalSpec.p_willmore(3), "shrinking"),
        (FunctionalSpec.helfrich(1.0, 0.0, 0.5), "neither"),
        (builtin("bump_willmore"), "expanding"),
    ]
    got = [classify_scaling(spec) for spec, _ in table]
    ok = all(g.cls == want for g, (_, want) in zip(got, table)) and got[3].witness is not None
    _check(11, ok, ", ".join(f"{s.kind}->{g.cls}" for (s, _), g in zip(table, got)))


# 12 ------------------------------------------------------------------------
def test_c12_boundary_closure_on_disk():
    disk = sf.disk(1.0)
    worst_bc, worst_int = 0.0, 0.0
    for p in (2.0, 2.5, 3.0, 4.0):
        spec = FunctionalSpec.p_willmore(p)
        rep = va.boundary_conditions(spec, disk)
        worst_bc = max(worst_bc, max(rep.sup["closure"]))
        worst_int = max(worst_int, abs(va.flux_check(spec, disk, "scaling").interior))
    ok = worst_bc == 0.0 and worst_int <= 1e-12
    _check(12, ok, f"max boundary condition {worst_bc:.1e}, scaling interior {worst_int:.1e}")


if __name__ == "__main__":
    import sys

    sys.exit(pytest.main([__file__, "-v"]))
