"""Exact linear semigroup per Fourier mode and exponential integrators for the full system."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InputError, StateError
from .grid import SPECTRAL
from .state import StateU, check_density
from .symbols import block_integral, eigen_block, exp_block, exp_full, full_symbol

VARIANTS = ("reduced", "full13", "general")
INTEGRATORS = ("etd_midpoint", "duhamel_trapezoid")
FULL13_MAX_N = 32

_PAIRS = ((0, 1), (0, 2), (1, 2))


@dataclass(frozen=True)
class LinearScheme:
    """Choice of linear path; r1, r2 only feed band diagnostics."""

    variant: str = "reduced"
    r1: float | None = None
    r2: float | None = None

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise InputError(f"unknown linear variant {self.variant!r}; expected one of {VARIANTS}")
        if self.r1 is not None and self.r2 is not None and not 0 < self.r1 < self.r2:
            raise InputError(f"band radii need 0 < r1 < r2, got {self.r1}, {self.r2}")


@dataclass(frozen=True)
class NonlinearScheme:
    dt: float
    dealias: bool = True
    integrator: str = "etd_midpoint"

    def __post_init__(self):
        if not self.dt > 0:
            raise InputError(f"dt must be > 0, got {self.dt}")
        if self.integrator not in INTEGRATORS:
            raise InputError(f"unknown integrator {self.integrator!r}; expected one of {INTEGRATORS}")


# -- per-mode propagators ---------------------------------------------------------

class LinearPropagator:
    """Applies e^{tA} to spectral state data on one grid.

    ``reduced`` assumes constraint-admissible data and evolves (n, d) and the
    antisymmetric pairs (E - E^T, W); E(t) follows from the closed-form time
    integral of the velocity.  ``general`` is exact for any data: with
    e = xi/|xi| and c = E e, the scalar s = n + e.c is conserved, (n - s/2, i e.v)
    obeys the compressible block and (i c_perp, v_perp) the shear block, and
    only the column E e changes.  ``full13`` exponentiates the 13x13 symbol
    mode by mode and is limited to small grids.

    Modes with |xi| = 0 (the mean and Nyquist-zeroed modes) are left unchanged.
    """

    def __init__(self, grid, params):
        self.grid = grid
        self.params = params
        r = grid.xi_abs
        self._inactive = np.nonzero(r == 0)
        inv = np.zeros_like(r)
        np.divide(1.0, r, out=inv, where=r > 0)
        self._e = grid.xi * inv
        self._cache = {}

    def _mats(self, t, integral=False):
        """Per-mode 2x2 matrices for both blocks; eigen data are rebuilt on demand."""
        key = (float(t), integral)
        if key not in self._cache:
            # a step needs e^{hA} and e^{hA/2}; linear runs use each t once
            if len(self._cache) >= 3:
                self._cache.clear()
            fn = block_integral if integral else exp_block
            mats = {}
            for b in ("compressible", "shear"):
                mats[b] = fn(eigen_block(self.params, self.grid.xi_abs, b), t)
            self._cache[key] = mats
        return self._cache[key]

    def apply(self, c, t, variant="general"):
        """e^{tA} c for spectral data c of shape (13, *spectral_shape)."""
        t = float(t)
        if not t >= 0:
            raise InputError(f"time must be >= 0, got {t}")
        if variant not in VARIANTS:
            raise InputError(f"unknown linear variant {variant!r}")
        c = np.asarray(c)
        if t == 0:
            return np.array(c, dtype=complex, copy=True)
        if variant == "full13":
            return self._apply_full13(np.array(c, dtype=complex, copy=True), t)
        if variant == "reduced":
            out = self._apply_reduced(c, t)
        else:
            out = self._apply_general(c, t)
        idx = (slice(None),) + self._inactive
        out[idx] = c[idx]
        return out

    @staticmethod
    def _mul(m, a, b):
        """Apply batched 2x2 matrices m to the pair (a, b)."""
        return m[..., 0, 0] * a + m[..., 0, 1] * b, m[..., 1, 0] * a + m[..., 1, 1] * b

    def _apply_general(self, c, t):
        mats = self._mats(t)
        mc, ms = mats["compressible"], mats["shear"]
        e = self._e
        n = c[0]
        out = np.empty(c.shape, dtype=complex)
        col = [sum(c[4 + 3 * j + k] * e[k] for k in range(3)) for j in range(3)]
        vpar = sum(e[j] * c[1 + j] for j in range(3))
        cpar = sum(e[j] * col[j] for j in range(3))
        s = n + cpar
        n_t, d_t = self._mul(mc, n - 0.5 * s, 1j * vpar)
        out[0] = n_t + 0.5 * s
        del n_t
        for j in range(3):
            p = 1j * (col[j] - cpar * e[j])
            q = c[1 + j] - vpar * e[j]
            p_t, q_t = self._mul(ms, p, q)
            out[1 + j] = -1j * d_t * e[j] + q_t
            # change of the column E e
            dcol = (s - out[0]) * e[j] - 1j * p_t - col[j]
            for k in range(3):
                out[4 + 3 * j + k] = c[4 + 3 * j + k] + dcol * e[k]
        return out

    def _apply_reduced(self, c, t):
        mats = self._mats(t)
        ints = self._mats(t, integral=True)
        e, xi = self._e, self.grid.xi
        n = c[0]
        v = c[1:4]
        out = np.empty(c.shape, dtype=complex)
        d = 1j * sum(e[j] * v[j] for j in range(3))
        out[0], d_t = self._mul(mats["compressible"], n, d)
        _, d_int = self._mul(ints["compressible"], n, d)
        del d
        v_t = [-1j * e[j] * d_t for j in range(3)]
        v_int = [-1j * e[j] * d_int for j in range(3)]
        del d_t, d_int
        for i, j in _PAIRS:
            a = c[4 + 3 * i + j] - c[4 + 3 * j + i]
            w = 1j * (e[i] * v[j] - e[j] * v[i])
            _, w_t = self._mul(mats["shear"], a, w)
            _, w_int = self._mul(ints["shear"], a, w)
            # v_j += -i e_i W_ij and v_i += -i e_j W_ji = +i e_j W_ij
            v_t[j] -= 1j * e[i] * w_t
            v_t[i] += 1j * e[j] * w_t
            v_int[j] -= 1j * e[i] * w_int
            v_int[i] += 1j * e[j] * w_int
        for j in range(3):
            out[1 + j] = v_t[j]
            for k in range(3):
                out[4 + 3 * j + k] = c[4 + 3 * j + k] + 1j * v_int[j] * xi[k]
        return out

    def _apply_full13(self, out, t):
        if self.grid.n_points > FULL13_MAX_N:
            raise InputError(f"full13 path is limited to n_points <= {FULL13_MAX_N} "
                             f"(per-mode 13x13 exponentials), got {self.grid.n_points}")
        active = self.grid.xi_abs > 0
        xi = self.grid.xi[:, active]
        sym = full_symbol(self.params, xi)
        sub = out[:, active]
        chunk = 4096
        res = np.empty_like(sub)
        for start in range(0, sym.shape[0], chunk):
            stop = start + chunk
            m = exp_full(sym[start:stop], t)
            res[:, start:stop] = np.einsum("mab,bm->am", m, sub[:, start:stop])
        out[:, active] = res
        return out


_PROPAGATORS = {}


def get_propagator(grid, params):
    key = (grid, params)
    if key not in _PROPAGATORS:
        if len(_PROPAGATORS) > 4:
            _PROPAGATORS.clear()
        _PROPAGATORS[key] = LinearPropagator(grid, params)
    return _PROPAGATORS[key]


def evolve_linear(U0, t, params, scheme=None):
    """U(t) = e^{tA} U0, computed exactly per Fourier mode from U0.

    The result is in spectral representation with time stamp U0.t + t.
    """
    scheme = scheme or LinearScheme()
    t = float(t)
    if not t >= 0:
        raise InputError(f"time must be >= 0, got {t}")
    spec = U0.to_spectral()
    prop = get_propagator(U0.grid, params)
    data = prop.apply(spec.data, t, scheme.variant)
    return StateU(U0.grid, data, SPECTRAL, U0.t + t)


def apply_generator(U, params):
    """Spectral coefficients of A U (the linear right-hand side)."""
    c = U.to_spectral().data
    xi = U.grid.xi
    r2 = U.grid.xi_abs ** 2
    n, v = c[0], c[1:4]
    E = c[4:13].reshape((3, 3) + n.shape)
    xv = np.einsum("j...,j...->...", xi, v)
    out = np.empty_like(c, dtype=complex)
    out[0] = -1j * xv
    out[1:4] = (-params.mu * r2 * v - (params.lam + params.mu) * xi * xv
                - 1j * xi * n + 1j * np.einsum("jk...,k...->j...", E, xi))
    out[4:13] = (1j * v[:, None] * xi[None, :]).reshape((9,) + n.shape)
    return out


# -- derived second-order systems -------------------------------------------------

@dataclass
class DerivedResiduals:
    times: np.ndarray
    compressible: np.ndarray
    rotational: np.ndarray
    spacing: float


def derived_system_residuals(snapshots, params):
    """Residuals of the derived equations at every interior snapshot.

    compressible:  (div v)_t - (2mu+lam) Lap div v + 2 Lap n
    rotational:    L_t - mu Lap L + Lap(E^T - E),  L_ij = d_j v_i - d_i v_j

    Time derivatives are centered differences over the uniform snapshot
    spacing; space derivatives are spectral.
    """
    if len(snapshots) < 3:
        raise InputError(f"need at least 3 snapshots, got {len(snapshots)}")
    times = np.array([s.t for s in snapshots])
    gaps = np.diff(times)
    if np.any(gaps <= 0) or np.ptp(gaps) > 1e-9 * max(1.0, abs(gaps[0])):
        raise InputError("snapshots must be equally spaced in time")
    h = float(gaps[0])
    grid = snapshots[0].grid
    xi = grid.xi
    r2 = grid.xi_abs ** 2
    data = [s.to_spectral().data for s in snapshots]

    def div_v(c):
        return 1j * np.einsum("j...,j...->...", xi, c[1:4])

    def rot(c):
        gv = 1j * c[1:4][:, None] * xi[None, :]  # [i, j] = d_j v_i
        return gv - np.swapaxes(gv, 0, 1)

    comp, rotn = [], []
    c_mu = 2 * params.mu + params.lam
    for k in range(1, len(data) - 1):
        c = data[k]
        dd = (div_v(data[k + 1]) - div_v(data[k - 1])) / (2 * h)
        res_c = dd + c_mu * r2 * div_v(c) - 2 * r2 * c[0]
        dl = (rot(data[k + 1]) - rot(data[k - 1])) / (2 * h)
        E = c[4:13].reshape((3, 3) + c.shape[1:])
        res_r = dl + params.mu * r2 * rot(c) - r2 * (np.swapaxes(E, 0, 1) - E)
        comp.append(grid.spectral_norm(res_c))
        rotn.append(grid.spectral_norm(res_r))
    return DerivedResiduals(times[1:-1], np.array(comp), np.array(rotn), h)


# -- nonlinear terms ----------------------------------------------------------------

def nonlinear_rhs(U, params, dealias=True):
    """Spectral coefficients of (f1, f2, f3) with P(rho) = rho^gamma / gamma.

    f1 = -n div v - v.grad n
    f2_i = sum_jk E_jk d_j E_ik - n/(1+n) (mu Lap v_i + (lam+mu) d_i div v)
           - v.grad v_i - ((1+n)^(gamma-2) - 1) d_i n
    f3_ij = sum_k (d_k v_i) E_kj - v.grad E_ij

    Products are formed on the grid; with ``dealias`` the 2/3 mask is
    applied to the input coefficients and to the result.
    """
    grid = U.grid
    c = U.to_spectral().data
    if dealias:
        c = c * grid.dealias_mask
    xi = grid.xi
    inv = grid.inverse
    phys = inv(c)
    n, v = phys[0], phys[1:4]
    E = phys[4:13].reshape((3, 3) + grid.shape)
    check_density(StateU(grid, phys, t=U.t))

    grad_n = inv(1j * xi * c[0][None])
    grad_v = inv(1j * c[1:4][:, None] * xi[None, :])  # [i, k] = d_k v_i
    div_v = grad_v[0, 0] + grad_v[1, 1] + grad_v[2, 2]
    r2 = grid.xi_abs ** 2
    xv = np.einsum("j...,j...->...", xi, c[1:4])
    visc = inv(-params.mu * r2 * c[1:4] - (params.lam + params.mu) * xi * xv)

    out = np.empty((13,) + grid.shape)
    out[0] = -n * div_v - np.einsum("j...,j...->...", v, grad_n)
    rho = 1.0 + n
    press = rho ** (params.gamma - 2.0) - 1.0
    ratio = n / rho
    for i in range(3):
        out[1 + i] = (-ratio * visc[i]
                      - np.einsum("k...,k...->...", v, grad_v[i])
                      - press * grad_n[i])
    f3 = np.einsum("ik...,kj...->ij...", grad_v, E)
    del grad_v, visc
    for i in range(3):
        for k in range(3):
            dE = inv(1j * xi * c[4 + 3 * i + k][None])  # d_l E_ik
            out[1 + i] += np.einsum("j...,j...->...", E[:, k], dE)
            f3[i, k] -= np.einsum("l...,l...->...", v, dE)
    out[4:13] = f3.reshape((9,) + grid.shape)
    res = grid.forward(out)
    if dealias:
        res *= grid.dealias_mask
    return res


def step_nonlinear(U, scheme, params, rhs=None):
    """One exponential-integrator step of U_t = A U + F(U).

    etd_midpoint:
        U_half = e^{hA/2}(U + h/2 F(U));  U+ = e^{hA} U + h e^{hA/2} F(U_half)
    duhamel_trapezoid:
        U* = e^{hA}(U + h F(U));  U+ = e^{hA} U + h/2 (e^{hA} F(U) + F(U*))

    ``rhs`` replaces :func:`nonlinear_rhs` (signature rhs(U, params, dealias)).
    Density violations raise StateError carrying the failing time.
    """
    rhs = rhs or nonlinear_rhs
    grid = U.grid
    spec = U.to_spectral()
    h = scheme.dt
    prop = get_propagator(grid, params)
    c = spec.data

    def F(data, t):
        try:
            return rhs(StateU(grid, data, SPECTRAL, t), params, scheme.dealias)
        except StateError as exc:
            raise StateError(f"step from t={U.t:.6g} failed: {exc}", t=t, where=exc.where) from exc

    f0 = F(c, U.t)
    if scheme.integrator == "etd_midpoint":
        half = prop.apply(c + 0.5 * h * f0, 0.5 * h)
        del f0
        f_half = F(half, U.t + 0.5 * h)
        new = prop.apply(c, h) + h * prop.apply(f_half, 0.5 * h)
    else:
        pf0 = prop.apply(f0, h)
        pc = prop.apply(c, h)
        star = pc + h * pf0
        new = pc + 0.5 * h * (pf0 + F(star, U.t + h))
    return StateU(grid, new, SPECTRAL, U.t + h)


# -- runs -------------------------------------------------------------------------

SERIES_COLUMNS = ("l2_total", "l2_n", "l2_v", "l2_E", "l2_grad", "linf_total",
                  "constraint_linear", "constraint_nonlinear", "curl_residual",
                  "h1_v", "l1_total", "l2_dt")
BAND_COLUMNS = ("l2_low", "l2_mid", "l2_high")


@dataclass
class RunResult:
    series: object
    final: StateU
    snapshots: list


def _series_metadata(cfg):
    meta = {k: v for k, v in cfg.as_dict().items() if k not in ("out",)}
    return {k: ("none" if v is None else v) for k, v in meta.items()}


def record_row(U, params, nonlinear=False, bands=None, dealias=True):
    """One CSV row of norms for state U (spectral or physical)."""
    from .analysis import band_norms
    from .state import norms

    spec = U.to_spectral()
    rep = norms(spec).as_dict()
    dt = apply_generator(spec, params)
    if nonlinear:
        dt = dt + nonlinear_rhs(spec, params, dealias)
    rep["l2_dt"] = U.grid.spectral_norm(dt)
    row = {k: rep[k] for k in SERIES_COLUMNS}
    if bands is not None:
        row.update(zip(BAND_COLUMNS, band_norms(U.grid, spec.data, *bands)))
    return row


def run_simulation(cfg, on_output=None):
    """Evolve make_initial_data(cfg) and record norms at ``cfg.output_times()``.

    Linear modes evaluate e^{tA}U0 afresh at every output time.  Nonlinear
    mode steps with the configured integrator.  When ``cfg.out`` is set the
    series CSV and the snapshots are written there; on a StateError the
    partial series is written first and attached to the exception as
    ``exc.series``.
    """
    import os

    from .analysis import DecaySeries
    from .io import write_series_csv, write_snapshot
    from .state import make_initial_data

    params = cfg.params()
    grid = cfg.grid()
    U0 = make_initial_data(grid, cfg.amplitude, cfg.profile, cfg.seed, cfg.width,
                           cfg.normalize, cfg.potential_weight, cfg.swirl_weight).to_spectral()
    bands = cfg.radii() if cfg.records_bands else None
    series = DecaySeries(metadata=_series_metadata(cfg))
    times = cfg.output_times()
    snaps = []
    if cfg.out:
        os.makedirs(cfg.out, exist_ok=True)

    def emit(U, last):
        series.append(U.t, record_row(U, params, cfg.mode == "nonlinear", bands, cfg.dealias))
        keep = cfg.snapshots == "all" or (cfg.snapshots == "final" and last)
        if keep:
            snaps.append(U)
            if cfg.out:
                write_snapshot(os.path.join(cfg.out, f"snapshot_{len(series) - 1:04d}.vdl"),
                               U.to_physical(), params)
        if on_output is not None:
            on_output(U)

    def flush():
        if cfg.out:
            write_series_csv(os.path.join(cfg.out, "series.csv"), series)

    try:
        if cfg.mode == "nonlinear":
            scheme = NonlinearScheme(cfg.dt, cfg.dealias, cfg.integrator)
            U = U0
            steps = np.rint(times / cfg.dt).astype(int)
            k = 0
            for i, target in enumerate(steps):
                while k < target:
                    U = step_nonlinear(U, scheme, params)
                    k += 1
                U = StateU(grid, U.data, SPECTRAL, k * cfg.dt)
                emit(U, i == len(steps) - 1)
        else:
            scheme = LinearScheme("reduced" if cfg.mode == "linear-reduced" else "full13")
            for i, t in enumerate(times):
                emit(evolve_linear(U0, t, params, scheme), i == len(times) - 1)
    except StateError as exc:
        flush()
        exc.series = series
        raise
    flush()
    return RunResult(series, snaps[-1] if snaps else None, snaps)
