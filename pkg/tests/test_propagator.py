import os

import numpy as np
import pytest

from vdlab.config import RunConfig
from vdlab.errors import InputError, StateError
from vdlab.grid import SPECTRAL, GridSpec
from vdlab.io import read_series_csv, read_snapshot
from vdlab.propagator import (
    BAND_COLUMNS, SERIES_COLUMNS, LinearScheme, NonlinearScheme, apply_generator,
    derived_system_residuals, evolve_linear, get_propagator, nonlinear_rhs, record_row,
    run_simulation, step_nonlinear)
from vdlab.state import StateU, constraint_residual_linear, curl_residual, make_initial_data
from vdlab.symbols import PhysParams


def _rel(a, b, grid):
    return grid.spectral_norm(a - b) / grid.spectral_norm(b)


def test_schemes_validate():
    with pytest.raises(InputError):
        LinearScheme("exact")
    with pytest.raises(InputError):
        LinearScheme("reduced", 2.0, 1.0)
    with pytest.raises(InputError):
        NonlinearScheme(0.0)
    with pytest.raises(InputError):
        NonlinearScheme(0.1, integrator="rk4")


def test_paths_agree_on_admissible_data(state16, params):
    g = state16.grid
    for t in (0.05, 0.7, 4.0):
        ref = evolve_linear(state16, t, params, LinearScheme("full13")).data
        for variant in ("reduced", "general"):
            got = evolve_linear(state16, t, params, LinearScheme(variant)).data
            assert _rel(got, ref, g) < 1e-10


def test_general_path_is_exact_for_any_data(grid16, params, rng):
    # random data violate both constraints; only reduced relies on them
    c = grid16.forward(rng.standard_normal((13,) + grid16.shape)) * grid16.nyquist_free
    U = StateU(grid16, c, SPECTRAL)
    ref = evolve_linear(U, 0.9, params, LinearScheme("full13")).data
    got = evolve_linear(U, 0.9, params, LinearScheme("general")).data
    assert _rel(got, ref, grid16) < 1e-10


def test_evolve_stamps_time_and_keeps_mean(state16, params):
    U = state16.to_spectral()
    U.data[:, 0, 0, 0] = np.arange(13)
    out = evolve_linear(StateU(U.grid, U.data, SPECTRAL, 2.0), 3.0, params)
    assert out.t == 5.0
    assert np.array_equal(out.data[:, 0, 0, 0], np.arange(13))
    assert np.array_equal(evolve_linear(U, 0.0, params).data, U.data)
    with pytest.raises(InputError):
        evolve_linear(U, -1.0, params)


def test_full13_limited_to_small_grids(params):
    g = GridSpec(34, 5.0)
    with pytest.raises(InputError):
        get_propagator(g, params).apply(np.zeros((13,) + g.spectral_shape, complex), 1.0, "full13")


def test_generator_is_time_derivative(state16, params):
    g = state16.grid
    h = 1e-3
    up = evolve_linear(state16, 1.0 + h, params).data
    um = evolve_linear(state16, 1.0 - h, params).data
    mid = evolve_linear(state16, 1.0, params)
    fd = (up - um) / (2 * h)
    assert _rel(fd, apply_generator(mid, params), g) < 1e-5


def test_derived_residuals_need_uniform_snapshots(state16, params):
    snaps = [evolve_linear(state16, t, params) for t in (0.0, 0.1, 0.3)]
    with pytest.raises(InputError):
        derived_system_residuals(snaps, params)
    with pytest.raises(InputError):
        derived_system_residuals(snaps[:2], params)
    snaps = [evolve_linear(state16, t, params) for t in (0.5, 0.51, 0.52)]
    res = derived_system_residuals(snaps, params)
    assert np.allclose(res.times, [0.51])
    assert res.compressible[0] < 1e-3 and res.rotational[0] < 1e-3


# -- nonlinear -----------------------------------------------------------------------

def _tone_state(n_amp, v_amp, e_amp):
    g = GridSpec(16, np.pi)
    x1, _, _ = g.mesh()
    U = StateU.zeros(g)
    U.data[0] = n_amp * np.cos(x1)
    U.data[1] = v_amp * np.sin(x1)
    U.data[4] = e_amp * np.cos(x1)
    return g, U


def test_rhs_matches_hand_computed_tones():
    params = PhysParams(1.0, 0.0, 2.0)
    # n = a cos x, v1 = b sin x: f1 = -d_x(n v1) = -ab cos 2x
    g, U = _tone_state(0.3, 0.5, 0.0)
    x1, _, _ = g.mesh()
    f = g.inverse(nonlinear_rhs(U, params))
    assert np.allclose(f[0], -0.15 * np.cos(2 * x1), atol=1e-13)
    # n = 0, E11 = e cos x: f2_1 = -(e^2 + b^2)/2 sin 2x, f3_11 = b e
    g, U = _tone_state(0.0, 0.5, 0.2)
    f = g.inverse(nonlinear_rhs(U, params))
    assert np.allclose(f[1], -(0.04 + 0.25) / 2 * np.sin(2 * x1), atol=1e-13)
    assert np.allclose(f[4], 0.1, atol=1e-13)
    assert np.allclose(f[[2, 3, 5, 6, 7, 8, 9, 10, 11, 12]], 0.0, atol=1e-13)


def test_rhs_is_quadratic_at_small_amplitude(state16, params):
    g = state16.grid
    small = nonlinear_rhs(state16.with_data(state16.data * 1e-3), params)
    half = nonlinear_rhs(state16.with_data(state16.data * 5e-4), params)
    assert np.isclose(g.spectral_norm(small) / g.spectral_norm(half), 4.0, rtol=1e-2)
    assert g.spectral_norm(nonlinear_rhs(StateU.zeros(g), params)) == 0.0


def test_step_without_forcing_is_linear(state16, params):
    def zero(U, params, dealias):
        return np.zeros((13,) + U.grid.spectral_shape, dtype=complex)

    for integrator in ("etd_midpoint", "duhamel_trapezoid"):
        out = step_nonlinear(state16, NonlinearScheme(0.3, True, integrator), params, rhs=zero)
        ref = evolve_linear(state16, 0.3, params)
        assert out.t == pytest.approx(0.3)
        assert _rel(out.data, ref.data, state16.grid) < 1e-13


def test_step_reports_failing_time(grid16, params):
    U = StateU.zeros(grid16, t=4.0)
    # uniform so the dealias filter keeps it
    U.data[0] = -3.0
    with pytest.raises(StateError) as info:
        step_nonlinear(U, NonlinearScheme(0.1), params)
    assert info.value.t == 4.0
    assert "t=4" in str(info.value)


# -- runs ----------------------------------------------------------------------------

def test_record_row_columns(state16, params):
    row = record_row(state16, params, bands=params.default_radii())
    assert set(row) == set(SERIES_COLUMNS) | set(BAND_COLUMNS)
    total = np.sqrt(sum(row[k] ** 2 for k in BAND_COLUMNS))
    assert total <= row["l2_total"] * (1 + 1e-12)


def test_linear_run_writes_outputs(tmp_path):
    cfg = RunConfig(n_points=16, box_half_width=6.0, t_final=2.0, outputs=4, bands=True,
                    snapshots="all", out=str(tmp_path))
    res = run_simulation(cfg)
    assert len(res.series) == 4 and len(res.snapshots) == 4
    series = read_series_csv(tmp_path / "series.csv")
    assert np.allclose(series.times, [0.5, 1.0, 1.5, 2.0])
    assert np.array_equal(series.column("l2_total"), res.series.column("l2_total"))
    assert series.metadata["mode"] == "linear-reduced"
    assert sorted(os.listdir(tmp_path)) == ["series.csv"] + [f"snapshot_{i:04d}.vdl" for i in range(4)]
    U, _, _ = read_snapshot(tmp_path / "snapshot_0003.vdl")
    assert U.t == 2.0


def test_nonlinear_run_tracks_linear_run():
    common = dict(n_points=16, box_half_width=6.0, amplitude=1e-4, t_final=1.0, outputs=2)
    lin = run_simulation(RunConfig(**common))
    non = run_simulation(RunConfig(mode="nonlinear", dt=0.1, **common))
    assert np.allclose(non.series.times, lin.series.times)
    a, b = non.series.column("l2_total"), lin.series.column("l2_total")
    assert np.allclose(a, b, rtol=1e-3)


def test_density_failure_flushes_partial_series(tmp_path):
    cfg = RunConfig(n_points=16, box_half_width=6.0, amplitude=40.0, normalize="l2",
                    potential_weight=1.0, mode="nonlinear", dt=0.1, t_final=1.0,
                    outputs=2, out=str(tmp_path))
    with pytest.raises(StateError) as info:
        run_simulation(cfg)
    assert info.value.t is not None
    assert (tmp_path / "series.csv").exists()
    assert len(info.value.series) == 0


def test_admissible_data_keeps_constraints(params):
    g = GridSpec(16, 5.0)
    U = make_initial_data(g, 1.0, seed=4)
    out = evolve_linear(U, 25.0, params)
    assert constraint_residual_linear(out) < 1e-12
    assert curl_residual(out) < 1e-12
