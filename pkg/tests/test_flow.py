import numpy as np
import pytest

from wsurf import flow as fl
from wsurf import mesh as ms
from wsurf import surface as sf
from wsurf.errors import InvalidParams
from wsurf.functional import FunctionalSpec, builtin

P3 = FunctionalSpec.p_willmore(3)


@pytest.fixture(scope="module")
def bump():
    return fl.bump_disk(16, 0.1)


def test_discrete_energy_examples():
    sq = ms.tessellate(sf.graph_patch(None), 10, 10)
    assert fl.discrete_energy(builtin("area"), sq) == pytest.approx(1.0, abs=1e-14)
    sph = ms.tessellate(sf.sphere_cap(1.0, (0.0, np.pi)), 64, 64)
    assert fl.discrete_energy(FunctionalSpec.p_willmore(2), sph) == pytest.approx(16 * np.pi, rel=0.03)
    assert abs(fl.discrete_energy(builtin("conformal_willmore"), sph)) <= 0.5


def test_discrete_el_residual_area_is_minus_H():
    m = ms.tessellate(sf.cylinder(1.0, 1.0), 24, 12)
    W, vc, _ = fl.discrete_el_residual(builtin("area"), m, "measured")
    i = m.interior_mask
    np.testing.assert_allclose(W[i], -vc.H[i], atol=1e-12)
    assert np.all(W[~i] == 0.0)


def test_catenoid_is_area_critical():
    m = ms.tessellate(sf.catenoid_band(), 48, 48)
    cfg = fl.FlowConfig(builtin("area"), dt=1e-4, step_rule="fixed", max_steps=1)
    W, _, _ = fl.discrete_el_residual(builtin("area"), m)
    assert np.max(np.abs(W)) < 5e-3
    new, rep = fl.descent_step(builtin("area"), m, cfg)
    assert rep.sup_displacement < 1e-6


def test_descent_step_decreases_energy(bump):
    cfg = fl.FlowConfig(P3, dt=1e-3, scheme="semi_implicit")
    new, rep = fl.descent_step(P3, bump, cfg)
    assert rep.accepted and rep.energy_after < rep.energy_before
    b = bump.boundary_mask
    assert np.array_equal(new.vertices[b], bump.vertices[b])


def test_l2_step_decreases_energy(bump):
    cfg = fl.FlowConfig(P3, dt=1e-6)
    new, rep = fl.descent_step(P3, bump, cfg)
    assert rep.energy_after < rep.energy_before


def test_zero_steps_is_identity(bump):
    cfg = fl.FlowConfig(P3, max_steps=0)
    new, rep = fl.descent_step(P3, bump, cfg)
    assert new is bump and not rep.accepted
    tr = fl.run_flow(P3, bump, cfg)
    assert len(tr.steps) == 1


def test_flat_input_stops_immediately():
    d = ms.disk_mesh(8)
    tr = fl.run_flow(P3, d, fl.FlowConfig(P3))
    assert len(tr.steps) == 1 and tr.reason == "speed"


def test_run_flow_monotone_and_pinned(bump, tmp_path):
    cfg = fl.FlowConfig(
        P3, dt=1e-3, scheme="semi_implicit", max_steps=15, boundary_mode="fixed_monitor",
        checkpoint_every=5, checkpoint_dir=str(tmp_path),
    )
    tr = fl.run_flow(P3, bump, cfg)
    assert tr.monotone()
    assert tr.sup_H()[-1] < tr.sup_H()[0] / 10
    b = bump.boundary_mask
    assert np.array_equal(tr.mesh.vertices[b], bump.vertices[b])
    assert len(tr.natural) == len(tr.steps)
    assert sorted(p.name for p in tmp_path.iterdir())[:1] == ["step_000005.off"]
    rows = tr.to_csv().splitlines()
    assert rows[0] == "step,energy,sup_H,sup_displacement,dt" and len(rows) == len(tr.steps) + 1


def test_flow_is_deterministic(bump):
    cfg = fl.FlowConfig(P3, dt=1e-3, scheme="semi_implicit", max_steps=5)
    assert fl.run_flow(P3, bump, cfg).to_csv() == fl.run_flow(P3, bump, cfg).to_csv()


def test_config_validation():
    with pytest.raises(InvalidParams):
        fl.FlowConfig(P3, dt=0.0)
    with pytest.raises(InvalidParams):
        fl.FlowConfig(P3, beta=1.0)
    with pytest.raises(InvalidParams):
        fl.FlowConfig(P3, scheme="implicit")
    with pytest.raises(InvalidParams):
        fl.FlowConfig.from_dict({"dtt": 1.0}, spec=P3)
    cfg = fl.FlowConfig.from_dict({"dt": 0.5, "spec": {"kind": "area"}})
    assert cfg.spec == builtin("area")
    assert fl.FlowConfig.from_dict(cfg.to_dict()).dt == 0.5


def test_k_dependent_functional_runs():
    m = fl.bump_disk(10, 0.1)
    spec = FunctionalSpec.polynomial({(2, 0): 1, (0, 1): 1, (2, 1): 1})
    W, _, _ = fl.discrete_el_residual(spec, m)
    assert np.all(np.isfinite(W))
    new, rep = fl.descent_step(spec, m, fl.FlowConfig(spec, dt=1e-6))
    assert rep.energy_after <= rep.energy_before
