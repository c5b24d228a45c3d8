import json
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wsurf.errors import InvalidParams, JetSingular, NonAdmissiblePoint
from wsurf.functional import (
    FunctionalSpec,
    builtin,
    classify_scaling,
    eval_jet,
    scaling_excess,
    smoothstep,
)


def fd_partials(spec, H, K, h=1e-5):
    f = lambda a, b: eval_jet(spec, a, b, order=0, check=False).F  # noqa: E731
    return (f(H + h, K) - f(H - h, K)) / (2 * h), (f(H, K + h) - f(H, K - h)) / (2 * h)


@pytest.mark.parametrize(
    "spec",
    [
        FunctionalSpec.polynomial({(2, 1): 1, (0, 2): Fraction(1, 3)}),
        FunctionalSpec.p_willmore(3.5),
        FunctionalSpec.helfrich(1.0, 0.7, 0.5),
        builtin("bump_willmore"),
        builtin("conformal_willmore"),
    ],
)
def test_first_partials_match_fd(spec):
    H, K = 1.1, -0.3
    j = eval_jet(spec, H, K)
    fH, fK = fd_partials(spec, H, K)
    assert j.F_H == pytest.approx(fH, rel=1e-7, abs=1e-8)
    assert j.F_K == pytest.approx(fK, rel=1e-7, abs=1e-8)


def test_polynomial_exact_values():
    spec = FunctionalSpec.polynomial({(2, 1): 1})
    j = eval_jet(spec, 2.0, 0.5)
    assert (j.F, j.F_H, j.F_K, j.F_HH, j.F_HK, j.F_HHK) == (2.0, 2.0, 4.0, 1.0, 4.0, 2.0)


def test_conformal_willmore_is_h2_minus_4k():
    j = eval_jet(builtin("conformal_willmore"), 3.0, 1.0)
    assert (j.F, j.F_H, j.F_K) == (5.0, 6.0, -4.0)


def test_area_and_total_mean_curvature():
    assert eval_jet(builtin("area"), 1.0, 0.0).F == 1.0
    j = eval_jet(builtin("total_mean_curvature"), 1.5, 0.0)
    assert (j.F, j.F_H, j.F_HH) == (1.5, 1.0, 0.0)


def test_non_admissible_point_rejected():
    with pytest.raises(NonAdmissiblePoint):
        eval_jet(builtin("area"), 0.0, 1.0)


def test_pwillmore_third_derivative_singular_at_zero():
    with pytest.raises(JetSingular):
        eval_jet(FunctionalSpec.p_willmore(2.5), 0.0, 0.0, order=3)
    # order 2 is fine, and p = 4 is smooth
    eval_jet(FunctionalSpec.p_willmore(2.5), 0.0, 0.0, order=2)
    assert eval_jet(FunctionalSpec.p_willmore(4), 0.0, 0.0).F_HHH == 0.0


def test_invalid_params():
    with pytest.raises(InvalidParams):
        FunctionalSpec.p_willmore(1.5)
    with pytest.raises(InvalidParams):
        FunctionalSpec("nonsense")
    with pytest.raises(InvalidParams):
        FunctionalSpec.from_dict({"p": 2})


@pytest.mark.parametrize(
    "spec",
    [
        FunctionalSpec.polynomial({(2, 1): 1, (0, 0): Fraction(-2, 7)}),
        FunctionalSpec.p_willmore(3),
        FunctionalSpec.helfrich(1, 2, 0.5),
        builtin("bump_willmore"),
    ],
)
def test_json_roundtrip(spec):
    again = FunctionalSpec.from_json(spec.to_json())
    assert again == spec
    assert json.loads(again.to_json()) == json.loads(spec.to_json())


@settings(max_examples=50, deadline=None)
@given(st.floats(-4, 4), st.floats(0, 5), st.sampled_from([2.0, 2.5, 3.0, 4.0, 6.0]))
def test_pwillmore_excess_property(H, gap, p):
    K = H * H / 4 - gap
    ex = scaling_excess(FunctionalSpec.p_willmore(p), H, K)
    assert ex == pytest.approx((2 - p) * abs(H) ** p, rel=1e-13, abs=1e-300)


@settings(max_examples=50, deadline=None)
@given(st.floats(-3, 3), st.floats(0, 5))
def test_invariant_functional_has_zero_excess(H, gap):
    K = H * H / 4 - gap
    assert abs(scaling_excess(builtin("conformal_willmore"), H, K)) <= 1e-12 * max(1, H * H, abs(K))


def test_classification_and_witness():
    # F = H has excess 2H - H = H, which changes sign
    assert classify_scaling(FunctionalSpec.polynomial({(1, 0): 1})).cls == "neither"
    c = classify_scaling(FunctionalSpec.helfrich(1, 0, 0.5))
    assert c.cls == "neither"
    (h1, k1), (h2, k2) = c.witness
    e1 = scaling_excess(FunctionalSpec.helfrich(1, 0, 0.5), h1, k1)
    e2 = scaling_excess(FunctionalSpec.helfrich(1, 0, 0.5), h2, k2)
    assert e1 > 0 > e2
    assert classify_scaling(FunctionalSpec.helfrich(1, 0, 0.0)).cls == "invariant"
    with pytest.raises(InvalidParams):
        classify_scaling(builtin("area"), (np.zeros(10), np.zeros(10)))


def test_smoothstep():
    s = smoothstep(np.array([-1.0, 0.0, 0.5, 1.0, 2.0]), 2)
    np.testing.assert_allclose(s[0], [0, 0, 0.5, 1, 1])
    assert s[1][2] > 0
    assert math.isclose(s[0][2], 0.5)
