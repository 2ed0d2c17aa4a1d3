import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vdlab.errors import InputError
from vdlab.grid import GridSpec


def test_geometry():
    g = GridSpec(16, 4.0)
    assert g.spacing == 0.5
    assert g.volume == 512.0
    assert g.shape == (16, 16, 16)
    assert g.spectral_shape == (16, 16, 9)
    assert g.coords[0] == -4.0 and g.coords[-1] == 3.5
    assert np.isclose(g.fundamental, np.pi / 4)


@pytest.mark.parametrize("n, L", [(7, 1.0), (6, 1.0), (16, 0.0), (16, -1.0), (16, np.inf), (16.0, 1.0)])
def test_rejects_bad_grids(n, L):
    with pytest.raises(InputError):
        GridSpec(n, L)


def test_wavenumber_signs():
    g = GridSpec(8, np.pi)
    assert g.wavenumber((1, 0, 7)).components == (1.0, 0.0, -1.0)
    assert g.wavenumber((4, 0, 0)).components == (-4.0, 0.0, 0.0)
    assert g.wavenumber((3, 4, 0)).magnitude == 5.0
    with pytest.raises(InputError):
        g.wavenumber((8, 0, 0))


def test_half_weights_count_full_spectrum():
    g = GridSpec(12, 1.0)
    assert g.half_weights.sum() == 12 ** 3


def test_nyquist_zeroed_in_derivative_wavevector():
    g = GridSpec(8, np.pi)
    assert g.xi[0][4, 0, 0] == 0.0
    assert g.xi[2][0, 0, 4] == 0.0
    assert g.lattice_abs[4, 0, 0] == 4.0


def test_dealias_mask_keeps_two_thirds():
    g = GridSpec(12, 1.0)
    m = g.dealias_mask
    # |k| < 4 on each axis: 7 full-axis values, 4 half-axis values
    assert m.sum() == 7 * 7 * 4


def test_parseval():
    g = GridSpec(16, 2.0)
    u = np.random.default_rng(0).standard_normal(g.shape)
    c = g.forward(u)
    assert np.isclose(g.spectral_norm(c), g.physical_norm(u), rtol=1e-13)
    w = np.random.default_rng(1).standard_normal(g.shape)
    assert np.isclose(g.spectral_inner(c, g.forward(w)), np.sum(u * w) * g.spacing ** 3, rtol=1e-12)


def test_derivative_of_tone_is_exact():
    g = GridSpec(16, np.pi)
    x1, x2, x3 = g.mesh()
    u = np.sin(2 * x1) * np.cos(3 * x3) + 0 * x2
    du = g.inverse(g.derivative(g.forward(u), 0))
    assert np.allclose(du, 2 * np.cos(2 * x1) * np.cos(3 * x3) + 0 * x2, atol=1e-12)
    grad = g.inverse(g.gradient(g.forward(u)))
    assert grad.shape == (3,) + g.shape
    assert np.allclose(grad[1], 0, atol=1e-12)
    assert np.allclose(grad[2], -3 * np.sin(2 * x1) * np.sin(3 * x3) + 0 * x2, atol=1e-12)


def test_gradient_of_vector_field_puts_direction_first():
    g = GridSpec(8, np.pi)
    c = g.forward(np.random.default_rng(2).standard_normal((3,) + g.shape))
    out = g.gradient(c)
    assert out.shape == (3, 3) + g.spectral_shape
    assert np.allclose(out[1, 2], g.derivative(c[2], 1))


def test_shape_mismatch_rejected():
    g = GridSpec(8, 1.0)
    with pytest.raises(InputError):
        g.forward(np.zeros((8, 8, 4)))
    with pytest.raises(InputError):
        g.inverse(np.zeros((8, 8, 8), dtype=complex))


def test_fft_workers_env(monkeypatch):
    from vdlab.grid import fft_workers

    monkeypatch.setenv("VDLAB_THREADS", "3")
    assert fft_workers() == 3
    monkeypatch.setenv("VDLAB_THREADS", "x")
    with pytest.raises(InputError):
        fft_workers()


@settings(max_examples=25, deadline=None)
@given(n=st.sampled_from([8, 10, 12, 16]), L=st.floats(0.1, 100.0), seed=st.integers(0, 10 ** 6))
def test_round_trip_property(n, L, seed):
    g = GridSpec(n, L)
    u = np.random.default_rng(seed).standard_normal((2,) + g.shape)
    back = g.inverse(g.forward(u))
    assert np.allclose(back, u, atol=1e-12 * np.abs(u).max())
