"""Periodic box [-L, L)^3, its wavenumber lattice and the transform pair.

Spectral coefficients are stored in the half-spectrum layout of ``rfftn``
(last axis holds ``n//2 + 1`` entries) and are scaled so that

    sum over the *full* spectrum of |c|^2  ==  integral of |u|^2 dx,

i.e. the physical L2 norm is read off the coefficients without extra factors.
:meth:`GridSpec.spectral_inner` accounts for the half-spectrum weights.
The coefficient of mode k is taken relative to grid index 0 (x = -L), so a
pure tone picks up a constant phase; no multiplier depends on that phase.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.fft

from .errors import InputError

PHYSICAL = "physical"
SPECTRAL = "spectral"


def fft_workers():
    """Thread count for FFTs, capped by the VDLAB_THREADS environment variable."""
    raw = os.environ.get("VDLAB_THREADS")
    if not raw:
        return 1
    try:
        return max(1, int(raw))
    except ValueError as exc:
        raise InputError(f"VDLAB_THREADS must be an integer, got {raw!r}") from exc


@dataclass(frozen=True)
class WaveVector:
    components: tuple

    @property
    def magnitude(self):
        return float(np.sqrt(sum(c * c for c in self.components)))


@dataclass(frozen=True)
class GridSpec:
    """Uniform periodic grid with ``n_points`` per dimension on [-L, L)^3."""

    n_points: int
    box_half_width: float

    def __post_init__(self):
        n = self.n_points
        if not isinstance(n, (int, np.integer)) or isinstance(n, bool):
            raise InputError(f"n_points must be an integer, got {n!r}")
        if n < 8 or n % 2:
            raise InputError(f"n_points must be even and >= 8, got {n}")
        if not np.isfinite(self.box_half_width) or self.box_half_width <= 0:
            raise InputError(f"box_half_width must be positive, got {self.box_half_width}")
        object.__setattr__(self, "n_points", int(n))
        object.__setattr__(self, "box_half_width", float(self.box_half_width))

    # -- geometry ---------------------------------------------------------

    @property
    def L(self):
        return self.box_half_width

    @property
    def spacing(self):
        return 2.0 * self.L / self.n_points

    @property
    def volume(self):
        return (2.0 * self.L) ** 3

    @property
    def shape(self):
        return (self.n_points,) * 3

    @property
    def spectral_shape(self):
        n = self.n_points
        return (n, n, n // 2 + 1)

    @property
    def fundamental(self):
        return np.pi / self.L

    @cached_property
    def coords(self):
        """1-D node coordinates x_j = -L + j h."""
        return -self.L + self.spacing * np.arange(self.n_points)

    def mesh(self):
        """Broadcastable (x1, x2, x3) coordinate arrays."""
        x = self.coords
        return x[:, None, None], x[None, :, None], x[None, None, :]

    # -- wavenumbers ------------------------------------------------------

    def wavenumber(self, index):
        """Signed lattice wavevector (pi/L) k for a full-spectrum index triple."""
        n = self.n_points
        idx = tuple(int(i) for i in index)
        if len(idx) != 3 or any(i < 0 or i >= n for i in idx):
            raise InputError(f"index {index!r} outside [0, {n})^3")
        k = [i - n if i >= n // 2 else i for i in idx]
        return WaveVector(tuple(self.fundamental * kk for kk in k))

    @cached_property
    def _axis_k(self):
        n = self.n_points
        k_full = np.fft.fftfreq(n, d=1.0 / n)
        k_half = np.arange(n // 2 + 1, dtype=float)
        return k_full, k_half

    @cached_property
    def xi(self):
        """Derivative wavevectors, shape (3, *spectral_shape), Nyquist zeroed."""
        n = self.n_points
        k_full, k_half = self._axis_k
        kd_full = np.where(np.abs(k_full) == n // 2, 0.0, k_full) * self.fundamental
        kd_half = np.where(k_half == n // 2, 0.0, k_half) * self.fundamental
        out = np.empty((3,) + self.spectral_shape)
        out[0] = kd_full[:, None, None]
        out[1] = kd_full[None, :, None]
        out[2] = kd_half[None, None, :]
        return out

    @cached_property
    def xi_abs(self):
        return np.sqrt(np.einsum("i...,i...->...", self.xi, self.xi))

    @cached_property
    def lattice_abs(self):
        """|xi| of the raw lattice (Nyquist kept), used for band cutoffs."""
        k_full, k_half = self._axis_k
        kf = np.abs(k_full) * self.fundamental
        kh = k_half * self.fundamental
        return np.sqrt(kf[:, None, None] ** 2 + kf[None, :, None] ** 2 + kh[None, None, :] ** 2)

    @cached_property
    def half_weights(self):
        """Multiplicity of each stored mode in the full spectrum (1 or 2)."""
        n = self.n_points
        w = np.full(self.spectral_shape, 2.0)
        w[..., 0] = 1.0
        w[..., n // 2] = 1.0
        return w

    @cached_property
    def dealias_mask(self):
        """2/3-rule mask: keep modes with every |k_j| < n/3."""
        n = self.n_points
        k_full, k_half = self._axis_k
        cut = n / 3.0
        keep_f = np.abs(k_full) < cut
        keep_h = k_half < cut
        return keep_f[:, None, None] & keep_f[None, :, None] & keep_h[None, None, :]

    @cached_property
    def nyquist_free(self):
        """Mask of modes with every |k_j| < n/2 (derivatives are exact there)."""
        n = self.n_points
        k_full, k_half = self._axis_k
        keep_f = np.abs(k_full) < n // 2
        keep_h = k_half < n // 2
        return keep_f[:, None, None] & keep_f[None, :, None] & keep_h[None, None, :]

    # -- transforms -------------------------------------------------------

    @property
    def _scale(self):
        return np.sqrt(self.spacing ** 3)

    def _check(self, arr, spectral):
        want = self.spectral_shape if spectral else self.shape
        if arr.shape[-3:] != want:
            kind = "spectral" if spectral else "physical"
            raise InputError(f"{kind} field has trailing shape {arr.shape[-3:]}, grid expects {want}")

    def forward(self, u):
        """Physical field(s) -> spectral coefficients over the last three axes."""
        u = np.asarray(u, dtype=float)
        self._check(u, spectral=False)
        c = scipy.fft.rfftn(u, axes=(-3, -2, -1), norm="ortho", workers=fft_workers())
        c *= self._scale
        return c

    def inverse(self, c):
        """Spectral coefficients -> real physical field(s)."""
        c = np.asarray(c)
        self._check(c, spectral=True)
        u = scipy.fft.irfftn(c, s=self.shape, axes=(-3, -2, -1), norm="ortho",
                             workers=fft_workers())
        u /= self._scale
        return u

    # -- quadrature -------------------------------------------------------

    def spectral_inner(self, a, b):
        """Real L2 inner product of two real fields given by their coefficients."""
        return float(np.sum(self.half_weights * (a * np.conj(b)).real))

    def spectral_norm(self, c):
        """L2 norm from coefficients; sums over any leading component axes."""
        c = np.asarray(c)
        sq = (c.real ** 2 + c.imag ** 2) * self.half_weights
        return float(np.sqrt(np.sum(sq)))

    def physical_norm(self, u):
        u = np.asarray(u)
        return float(np.sqrt(np.sum(u * u) * self.spacing ** 3))

    def derivative(self, c, axis):
        """Spectral coefficients of d/dx_axis."""
        return 1j * self.xi[axis] * c

    def gradient(self, c):
        """Coefficients of the gradient; the new leading axis is the derivative direction."""
        return 1j * self.xi.reshape((3,) + (1,) * (np.ndim(c) - 3) + self.spectral_shape) * c[None]
