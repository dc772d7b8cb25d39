import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from birot.fields import NODE_CENTERED, GridSpec, ScalarField, lp_norm
from birot.tensor import (MIXED, assemble_tensor, axis_regularity_estimate, consistency_residual,
                          mixed_components, tensor_field, tensor_lp_norm)
from birot.verify import slopes

angles = st.floats(-10.0, 10.0)
# magnitudes stay clear of underflow when entries are squared
values = st.one_of(st.just(0.0), st.floats(1e-100, 1e3), st.floats(-1e3, -1e-100))


def test_zero_vorticity_gives_zero_tensor():
    assert np.all(assemble_tensor(0.0, 0.7, 1.9).omega == 0)


def test_unit_vorticity_at_zero_angles():
    omega = assemble_tensor(1.0, 0.0, 0.0).omega
    assert omega[0, 2] == -1.0
    assert omega[0, 3] == 0.0 and omega[1, 2] == 0.0 and omega[1, 3] == 0.0
    # only the mixed block is ever populated
    mask = np.zeros((4, 4), dtype=bool)
    for i, j in MIXED:
        mask[i, j] = mask[j, i] = True
    assert np.all(omega[~mask] == 0)


@settings(max_examples=100, deadline=None)
@given(w=st.floats(-1e3, 1e3), theta=angles, phi=angles)
def test_tensor_is_antisymmetric(w, theta, phi):
    omega = assemble_tensor(w, theta, phi).omega
    assert np.array_equal(omega, -omega.T)


@settings(max_examples=100, deadline=None)
@given(w=values, theta=angles, phi=angles)
def test_frobenius_norm_is_root_two_w(w, theta, phi):
    coeffs = np.array(mixed_components(1.0, theta, phi))
    assert np.sum(coeffs ** 2) == pytest.approx(1.0, abs=1e-14)
    assert assemble_tensor(w, theta, phi).frobenius == pytest.approx(math.sqrt(2) * abs(w), rel=1e-14)


def test_tensor_field_matches_pointwise_assembly():
    rng = np.random.default_rng(0)
    w, th, ph = rng.normal(size=(3, 5))
    omega = tensor_field(w, th, ph)
    assert omega.shape == (4, 4, 5)
    for k in range(5):
        assert np.array_equal(omega[..., k], assemble_tensor(w[k], th[k], ph[k]).omega)


def test_tensor_norm_transfer():
    g = GridSpec(3.0, 3.0, 48, 48)
    w = ScalarField.from_function(g, lambda r, s: r * s * np.exp(-4 * ((r - 1) ** 2 + (s - 1) ** 2)))
    for p in (1.0, 2.0, 4.0, np.inf):
        assert tensor_lp_norm(w, p) == pytest.approx(math.sqrt(2) * lp_norm(w, p), rel=1e-12)


# ---------------------------------------------------------------------------
# consistency relations

def sample_points(n=12, seed=0):
    rng = np.random.default_rng(seed)
    r, s = rng.uniform(0.4, 1.8, (2, n))
    th, ph = rng.uniform(0, 2 * np.pi, (2, n))
    return np.stack([r * np.cos(th), r * np.sin(th), s * np.cos(ph), s * np.sin(ph)], axis=1)


def test_consistency_of_zero_field():
    g = GridSpec(3.0, 3.0, 16, 16, NODE_CENTERED)
    assert consistency_residual(ScalarField(g, np.zeros(g.shape)), sample_points()) == 0.0


def test_consistency_is_exact_for_monomial_with_exact_derivatives():
    grad = lambda r, s: (r ** 2 * s ** 2, 2 * r * s ** 2, 2 * r ** 2 * s)  # noqa: E731
    res = consistency_residual(None, sample_points(), gradient=grad)
    assert res <= 1e-14


def test_consistency_of_callable_needs_a_step():
    with pytest.raises(ValueError):
        consistency_residual(lambda r, s: r * s, sample_points())


def test_consistency_residual_refines_at_second_order():
    f = lambda r, s: r * s * np.exp(-4 * ((r - 1) ** 2 + (s - 1) ** 2))  # noqa: E731
    hs, res = [], []
    for n in (24, 48, 96):
        g = GridSpec(3.0, 3.0, n, n, NODE_CENTERED)
        res.append(consistency_residual(ScalarField.from_function(g, f), sample_points()))
        hs.append(g.h_r)
    assert min(slopes(hs, res)) >= 1.7


# ---------------------------------------------------------------------------
# axis regularity

def test_axis_estimate_of_zero_field():
    g = GridSpec(2.0, 2.0, 16, 16, NODE_CENTERED)
    est = axis_regularity_estimate(ScalarField(g, np.zeros(g.shape)))
    assert est.value == 0.0 and est.reliable


@pytest.mark.parametrize("stagger", ["node_centered", "cell_centered"])
def test_axis_estimate_recovers_w_over_rs_at_origin(stagger):
    g = GridSpec(3.0, 3.0, 96, 96, stagger)
    w = ScalarField.from_function(g, lambda r, s: 3 * r * s * np.exp(-(r ** 2) - s ** 2))
    est = axis_regularity_estimate(w)
    assert est.reliable
    assert est.value == pytest.approx(3.0, rel=0.10)


def test_under_resolved_axis_estimate_is_flagged():
    g = GridSpec(1.0, 1.0, 3, 3, NODE_CENTERED)
    w = ScalarField.from_function(g, lambda r, s: r * s)
    with pytest.warns(UserWarning):
        est = axis_regularity_estimate(w)
    assert not est.reliable
