import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vdlab.errors import InputError, StateError
from vdlab.grid import PHYSICAL, SPECTRAL, GridSpec
from vdlab.state import (
    COMPONENT_NAMES, StateU, check_density, constraint_residual_linear,
    constraint_residual_nonlinear, curl_residual, curl_residual_nonlinear, h2_norm, l2_norm,
    make_initial_data, norms)


def test_component_layout(grid16):
    U = StateU.zeros(grid16)
    assert U.data.shape == (13, 16, 16, 16)
    assert COMPONENT_NAMES[0] == "n" and COMPONENT_NAMES[5] == "E12"
    U.E[0, 1] += 1.0
    assert np.all(U.data[5] == 1.0)
    U.v[2] += 2.0
    assert np.all(U.data[3] == 2.0)


def test_from_parts_and_conversions(grid16, rng):
    n = rng.standard_normal(grid16.shape)
    v = rng.standard_normal((3,) + grid16.shape)
    E = rng.standard_normal((3, 3) + grid16.shape)
    U = StateU.from_parts(grid16, n, v, E, t=1.5)
    S = U.to_spectral()
    assert S.representation == SPECTRAL and S.t == 1.5
    back = S.to_physical()
    assert back.representation == PHYSICAL
    assert np.allclose(back.data, U.data, atol=1e-12)
    assert S.to_spectral() is S


def test_state_rejects_bad_shape(grid16):
    with pytest.raises(InputError):
        StateU(grid16, np.zeros((12,) + grid16.shape))
    with pytest.raises(InputError):
        StateU(grid16, np.zeros((13,) + grid16.shape), representation="fourier")


@pytest.mark.parametrize("profile", ["gaussian", "random_bandlimited"])
def test_initial_data_is_admissible(profile):
    g = GridSpec(24, 6.0)
    U = make_initial_data(g, 0.5, profile=profile, seed=7, width=0.8)
    assert constraint_residual_linear(U) < 1e-13
    assert curl_residual(U) < 1e-13
    S = U.to_spectral()
    assert np.allclose(S.data[:, 0, 0, 0], 0.0, atol=1e-15)
    assert np.abs(S.data[:, ~g.nyquist_free]).max() < 1e-16
    assert np.isclose(h2_norm(U), 0.5, rtol=1e-12)


def test_initial_data_normalization_and_weights():
    g = GridSpec(16, 5.0)
    U = make_initial_data(g, 2.0, normalize="l2", seed=1)
    assert np.isclose(l2_norm(U), 2.0, rtol=1e-12)
    assert np.all(make_initial_data(g, 0.0).data == 0)
    # no potential part: n and E vanish identically
    V = make_initial_data(g, 1.0, potential_weight=0.0, swirl_weight=0.0)
    assert np.all(V.data[0] == 0) and np.all(V.data[4:] == 0)
    with pytest.raises(InputError):
        make_initial_data(g, -1.0)
    with pytest.raises(InputError):
        make_initial_data(g, 1.0, width=0.0)
    with pytest.raises(InputError):
        make_initial_data(g, 1.0, profile="tophat")
    with pytest.raises(InputError):
        make_initial_data(g, 1.0, normalize="h1")


def test_initial_data_deterministic():
    g = GridSpec(16, 5.0)
    a = make_initial_data(g, 1.0, profile="random_bandlimited", seed=5)
    b = make_initial_data(g, 1.0, profile="random_bandlimited", seed=5)
    c = make_initial_data(g, 1.0, profile="random_bandlimited", seed=6)
    assert np.array_equal(a.data, b.data)
    assert not np.allclose(a.data, c.data)


def test_density_check_reports_location(grid16):
    U = StateU.zeros(grid16, t=2.0)
    U.data[0, 3, 4, 5] = -1.5
    with pytest.raises(StateError) as info:
        check_density(U)
    assert info.value.t == 2.0
    assert info.value.where == (3, 4, 5)
    assert info.value.exit_code == 3


def test_norms_match_physical_quadrature(state16):
    rep = norms(state16)
    g = state16.grid
    assert np.isclose(rep.l2_total, g.physical_norm(state16.data), rtol=1e-12)
    assert np.isclose(rep.l2_n, g.physical_norm(state16.n), rtol=1e-12)
    pointwise = np.sqrt(np.sum(state16.data ** 2, axis=0))
    assert np.isclose(rep.linf_total, pointwise.max())
    assert np.isclose(rep.l1_total, pointwise.sum() * g.spacing ** 3)
    grad = g.inverse(g.gradient(state16.to_spectral().data))
    assert np.isclose(rep.l2_grad, g.physical_norm(grad), rtol=1e-10)
    assert rep.h1_v >= rep.l2_v
    assert set(rep.as_dict()) >= {"l2_total", "linf_total", "constraint_nonlinear"}


def test_nonlinear_constraint_is_quadratic(grid16):
    # for admissible data the linear part cancels, leaving div(n E^T)
    base = make_initial_data(grid16, 1.0, profile="random_bandlimited", seed=2, width=0.6)
    small = base.with_data(base.data * 1e-3)
    smaller = base.with_data(base.data * 5e-4)
    ratio = constraint_residual_nonlinear(small) / constraint_residual_nonlinear(smaller)
    assert np.isclose(ratio, 4.0, rtol=1e-3)
    assert curl_residual_nonlinear(StateU.zeros(grid16)) == 0.0


def test_norms_nan_when_density_fails(grid16):
    U = StateU.zeros(grid16)
    U.data[0, 0, 0, 0] = -2.0
    assert np.isnan(norms(U).constraint_nonlinear)
    assert norms(U, nonlinear_constraint=False).constraint_nonlinear == 0.0


@settings(max_examples=15, deadline=None)
@given(seed=st.integers(0, 10 ** 6), amp=st.floats(1e-6, 10.0), width=st.floats(0.4, 2.0))
def test_admissibility_property(seed, amp, width):
    g = GridSpec(12, 4.0)
    U = make_initial_data(g, amp, profile="random_bandlimited", seed=seed, width=width)
    scale = max(h2_norm(U), 1e-300)
    assert constraint_residual_linear(U) <= 1e-13 * scale
    assert curl_residual(U) <= 1e-13 * scale
