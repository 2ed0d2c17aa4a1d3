"""Perturbation state U = (n, v, E), admissible initial data, constraints and norms."""

from __future__ import annotations

from dataclasses import dataclass, fields

import numpy as np

from .errors import InputError, StateError
from .grid import PHYSICAL, SPECTRAL

N_COMPONENTS = 13
COMPONENT_NAMES = ("n", "v1", "v2", "v3") + tuple(
    f"E{j}{k}" for j in range(1, 4) for k in range(1, 4))


class StateU:
    """The 13 fields (n, v1..v3, E11..E33) on one grid, in one representation.

    ``data`` has shape (13, *grid.shape) in physical representation and
    (13, *grid.spectral_shape) in spectral representation; ``n``, ``v`` and
    ``E`` are views into it (E[j, k] is E_{jk}).
    """

    __slots__ = ("grid", "data", "representation", "t")

    def __init__(self, grid, data, representation=PHYSICAL, t=0.0):
        if representation not in (PHYSICAL, SPECTRAL):
            raise InputError(f"unknown representation {representation!r}")
        data = np.asarray(data)
        want = grid.shape if representation == PHYSICAL else grid.spectral_shape
        if data.shape != (N_COMPONENTS,) + want:
            raise InputError(f"state data has shape {data.shape}, expected {(N_COMPONENTS,) + want}")
        self.grid = grid
        self.data = data
        self.representation = representation
        self.t = float(t)

    @classmethod
    def zeros(cls, grid, representation=PHYSICAL, t=0.0):
        shape = grid.shape if representation == PHYSICAL else grid.spectral_shape
        dtype = float if representation == PHYSICAL else complex
        return cls(grid, np.zeros((N_COMPONENTS,) + shape, dtype=dtype), representation, t)

    @classmethod
    def from_parts(cls, grid, n, v, E, representation=PHYSICAL, t=0.0):
        n = np.asarray(n)
        data = np.concatenate([n[None], np.asarray(v), np.asarray(E).reshape((9,) + n.shape)])
        return cls(grid, data, representation, t)

    @property
    def n(self):
        return self.data[0]

    @property
    def v(self):
        return self.data[1:4]

    @property
    def E(self):
        return self.data[4:13].reshape((3, 3) + self.data.shape[1:])

    @property
    def is_spectral(self):
        return self.representation == SPECTRAL

    def copy(self):
        return StateU(self.grid, self.data.copy(), self.representation, self.t)

    def with_data(self, data, t=None):
        return StateU(self.grid, data, self.representation, self.t if t is None else t)

    def to_spectral(self):
        if self.is_spectral:
            return self
        return StateU(self.grid, self.grid.forward(self.data), SPECTRAL, self.t)

    def to_physical(self):
        if not self.is_spectral:
            return self
        return StateU(self.grid, self.grid.inverse(self.data), PHYSICAL, self.t)

    def __repr__(self):
        return (f"StateU(n_points={self.grid.n_points}, L={self.grid.L}, "
                f"representation={self.representation!r}, t={self.t})")


def _spectral_data(U):
    return U.to_spectral().data


# -- constraints --------------------------------------------------------------

def constraint_field_linear(U):
    """Coefficients of the 3-vector grad n + div E^T, component j = d_j n + sum_k d_k E_kj."""
    c = _spectral_data(U)
    grid = U.grid
    xi = grid.xi
    n_hat = c[0]
    e_hat = c[4:13].reshape((3, 3) + c.shape[1:])
    return 1j * (xi * n_hat[None] + np.einsum("k...,kj...->j...", xi, e_hat))


def constraint_residual_linear(U):
    """L2 norm of grad n + div E^T (the linearized div(rho F^T) = 0)."""
    return U.grid.spectral_norm(constraint_field_linear(U))


def curl_residual(U):
    """L2 norm over (j, k, l) of d_l E_jk - d_k E_jl."""
    c = _spectral_data(U)
    grid = U.grid
    e_hat = c[4:13].reshape((3, 3) + c.shape[1:])
    xi = grid.xi
    total = 0.0
    for k in range(3):
        for l in range(3):
            if k == l:
                continue
            diff = 1j * (xi[l] * e_hat[:, k] - xi[k] * e_hat[:, l])
            total += grid.spectral_norm(diff) ** 2
    return float(np.sqrt(total))


def check_density(U, t=None):
    """Raise StateError unless 1 + n > 0 everywhere; returns the physical n."""
    n = U.to_physical().n
    low = float(n.min())
    if not low > -1.0:
        where = tuple(int(i) for i in np.unravel_index(int(np.argmin(n)), n.shape))
        when = U.t if t is None else t
        raise StateError(
            f"nonpositive density 1+n={1.0 + low:.6g} at grid index {where}, t={when:.6g}",
            t=when, where=where)
    return n


def constraint_residual_nonlinear(U):
    """L2 norm of div((1+n)(I+E)^T), component j = sum_k d_k[(1+n)(delta_kj + E_kj)]."""
    phys = U.to_physical()
    n = check_density(phys)
    grid = U.grid
    rho = 1.0 + n
    flux = np.empty((3, 3) + grid.shape)
    for k in range(3):
        for j in range(3):
            flux[k, j] = rho * ((1.0 if k == j else 0.0) + phys.E[k, j])
    flux_hat = grid.forward(flux)
    res = 1j * np.einsum("k...,kj...->j...", grid.xi, flux_hat)
    return grid.spectral_norm(res)


def curl_residual_nonlinear(U):
    """Diagnostic L2 norm of F^{lk} d_l F^{ij} - F^{lj} d_l F^{ik} with F = I + E.

    Only reported; admissibility beyond E = grad(psi) is not enforced.
    """
    phys = U.to_physical()
    grid = U.grid
    e_hat = grid.forward(phys.E)
    grad = grid.inverse(grid.gradient(e_hat))  # grad[l, i, j] = d_l E_ij
    F = phys.E + np.eye(3).reshape(3, 3, 1, 1, 1)
    t1 = np.einsum("lk...,lij...->ijk...", F, grad)
    total = 0.0
    for i in range(3):
        for j in range(3):
            for k in range(3):
                diff = t1[i, j, k] - t1[i, k, j]
                total += float(np.sum(diff * diff))
    return float(np.sqrt(total * grid.spacing ** 3))


# -- initial data -------------------------------------------------------------

def h2_norm(U):
    """Sobolev H^2 norm with the Fourier weight (1 + |xi|^2)^2."""
    c = _spectral_data(U)
    w = (1.0 + U.grid.xi_abs ** 2)
    return U.grid.spectral_norm(c * w)


def l2_norm(U):
    return U.grid.spectral_norm(_spectral_data(U))


def _spectral_gaussian(grid, width):
    x1, x2, x3 = grid.mesh()
    return np.exp(-(x1 ** 2 + x2 ** 2 + x3 ** 2) / (2.0 * width ** 2))


def make_initial_data(grid, amplitude, profile="gaussian", seed=0, width=1.0,
                      normalize="h2", potential_weight=1.0, swirl_weight=1.0):
    """Constraint-admissible initial state.

    A vector potential psi and a velocity field are built, then
    E = grad(psi) (E_jk = d_k psi_j) and n = -div(psi) are formed with
    spectral derivatives, so grad n + div E^T and the curl of E vanish to
    roundoff.  The velocity is a localized bump with nonzero whole-space
    mass plus a divergence-free swirl, with its torus mean removed.
    Nyquist modes are dropped, so the data are band-limited.
    ``potential_weight`` and ``swirl_weight`` scale the grad(psi) and swirl
    parts relative to the mass-carrying bump.

    profile
        "gaussian": psi_i = a_i exp(-|x|^2/2s^2) and a Gaussian velocity bump,
        directions a_i drawn from ``seed``.
        "random_bandlimited": random smooth fields, each a white-noise field
        filtered by exp(-s^2|xi|^2/2).
    normalize
        "h2" scales so ||U0||_{H^2} = amplitude, "l2" so ||U0||_2 = amplitude.
    """
    if amplitude < 0:
        raise InputError(f"amplitude must be >= 0, got {amplitude}")
    if width <= 0:
        raise InputError(f"width must be > 0, got {width}")
    if normalize not in ("h2", "l2"):
        raise InputError(f"normalize must be 'h2' or 'l2', got {normalize!r}")
    rng = np.random.default_rng(seed)
    if profile == "gaussian":
        g_hat = grid.forward(_spectral_gaussian(grid, width))
        a_psi = rng.standard_normal(3)
        a_vel = rng.standard_normal(3)
        a_swirl = rng.standard_normal(3)
        psi_hat = width * a_psi[:, None, None, None] * g_hat[None]
        bump_hat = a_vel[:, None, None, None] * g_hat[None]
        swirl_pot = width * a_swirl[:, None, None, None] * g_hat[None]
    elif profile == "random_bandlimited":
        envelope = np.exp(-0.5 * (width * grid.xi_abs) ** 2)
        noise = grid.forward(rng.standard_normal((9,) + grid.shape))
        noise *= envelope
        psi_hat = noise[0:3]
        bump_hat = noise[3:6]
        swirl_pot = noise[6:9]
    else:
        raise InputError(f"unknown profile {profile!r}")

    xi = grid.xi
    psi_hat = potential_weight * psi_hat
    grad_psi = 1j * xi[None, :] * psi_hat[:, None]  # [j, k] = d_k psi_j
    n_hat = -np.einsum("j...,j...->...", 1j * xi, psi_hat)
    swirl = 1j * np.stack([
        xi[1] * swirl_pot[2] - xi[2] * swirl_pot[1],
        xi[2] * swirl_pot[0] - xi[0] * swirl_pot[2],
        xi[0] * swirl_pot[1] - xi[1] * swirl_pot[0],
    ])
    v_hat = bump_hat + swirl_weight * swirl
    v_hat[:, 0, 0, 0] = 0.0
    n_hat[0, 0, 0] = 0.0
    data = np.concatenate([n_hat[None], v_hat, grad_psi.reshape((9,) + grid.spectral_shape)])
    # band-limit: Nyquist modes have no consistent derivative
    data *= grid.nyquist_free
    U = StateU(grid, data, SPECTRAL, 0.0)
    size = h2_norm(U) if normalize == "h2" else l2_norm(U)
    scale = 0.0 if amplitude == 0 or size == 0 else amplitude / size
    U.data *= scale
    return U.to_physical()


# -- norms --------------------------------------------------------------------

@dataclass
class NormReport:
    t: float
    l2_total: float
    l2_n: float
    l2_v: float
    l2_E: float
    l2_grad: float
    linf_total: float
    h1_v: float
    constraint_linear: float
    constraint_nonlinear: float
    curl_residual: float
    l1_total: float = 0.0

    def as_dict(self):
        return {f.name: getattr(self, f.name) for f in fields(self)}


def norms(U, nonlinear_constraint=True):
    """Norm report: L2 pieces and gradient from coefficients, L-inf and L1 on the grid.

    L-inf is the max over points of the Euclidean length of the 13-vector;
    L1 integrates the same pointwise length.
    """
    grid = U.grid
    c = _spectral_data(U)
    phys_state = U.to_physical()
    phys = phys_state.data
    l2_n = grid.spectral_norm(c[0])
    l2_v = grid.spectral_norm(c[1:4])
    l2_E = grid.spectral_norm(c[4:13])
    grad_w = grid.half_weights * grid.xi_abs ** 2
    per_comp = [float(np.sum((c[i].real ** 2 + c[i].imag ** 2) * grad_w)) for i in range(13)]
    grad_sq = sum(per_comp)
    grad_v_sq = sum(per_comp[1:4])
    pointwise = np.sqrt(np.einsum("c...,c...->...", phys, phys))
    if nonlinear_constraint and np.any(phys[0] <= -1.0):
        nl = float("nan")
    elif nonlinear_constraint:
        nl = constraint_residual_nonlinear(phys_state)
    else:
        nl = 0.0
    return NormReport(
        t=U.t,
        l2_total=float(np.sqrt(l2_n ** 2 + l2_v ** 2 + l2_E ** 2)),
        l2_n=l2_n,
        l2_v=l2_v,
        l2_E=l2_E,
        l2_grad=float(np.sqrt(grad_sq)),
        linf_total=float(pointwise.max()),
        h1_v=float(np.sqrt(l2_v ** 2 + grad_v_sq)),
        constraint_linear=constraint_residual_linear(U),
        constraint_nonlinear=nl,
        curl_residual=curl_residual(U),
        l1_total=float(pointwise.sum() * grid.spacing ** 3),
    )
