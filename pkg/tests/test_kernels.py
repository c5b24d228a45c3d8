import numpy as np
import pytest

from wsurf import _kernels as K
from wsurf import mesh as ms
from wsurf import surface as sf


@pytest.fixture
def both():
    prev = K.backend()
    yield
    K.set_backend(prev)


def run_both(fn):
    K.set_backend("numpy")
    a = fn()
    got = K.set_backend("numba")
    b = fn()
    return a, b, got


def test_backend_switch(both):
    assert K.set_backend("numpy") == "numpy"
    assert K.set_backend("numba") in ("numba", "numpy")
    with pytest.raises(ValueError):
        K.set_backend("fortran")


def test_rk4_equivalence(both):
    a, b, _ = run_both(lambda: K.rk4_run([1.0, 0.2, 0.5, 0.1], 0.0, 1e-3, 500, 1e-8))
    np.testing.assert_allclose(a[1], b[1], rtol=1e-13, atol=1e-15)
    assert a[2] == b[2] == 0
    a, b, _ = run_both(lambda: K.rk4_run([1.0, -3.0, -5.0, 0.0], 0.0, 1e-3, 5000, 1e-8))
    assert a[2] == b[2] == 1 and len(a[0]) == len(b[0])


def test_mesh_kernel_equivalence(both):
    m = ms.tessellate(sf.torus_band(), 20, 16)
    V, F = m.vertices, m.faces
    fa, fb, _ = run_both(lambda: K.face_data(V, F))
    for x, y in zip(fa, fb):
        np.testing.assert_allclose(x, y, rtol=1e-12, atol=1e-14)
    ang, cot, area = fa
    aa, ab, _ = run_both(lambda: K.vertex_accumulate(V, F, ang, cot, area, len(V)))
    for x, y in zip(aa, ab):
        np.testing.assert_allclose(x, y, rtol=1e-12)
    X = np.random.default_rng(0).normal(size=(len(V), 3))
    ca, cb, _ = run_both(lambda: K.cotan_apply(F, cot, X))
    np.testing.assert_allclose(ca, cb, rtol=1e-11, atol=1e-12)
    sa, sb, _ = run_both(lambda: K.cotan_apply(F, cot, X[:, 0]))
    assert sa.shape == (len(V),)
    np.testing.assert_allclose(sa, sb, rtol=1e-11, atol=1e-12)


def test_obtuse_triangles_mixed_area(both):
    V = np.array([[0, 0, 0], [4, 0, 0], [2, 0.3, 0], [2, -3, 0]], float)
    F = np.array([[0, 1, 2], [0, 3, 1]])
    ang, cot, area = K.face_data(V, F)
    A, _ = K.vertex_accumulate(V, F, ang, cot, area, 4)
    assert A.sum() == pytest.approx(area.sum())
