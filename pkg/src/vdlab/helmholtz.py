"""Fourier multipliers |xi|^s and the compressible/rotational split of a velocity field."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InputError


@dataclass
class HelmholtzParts:
    """Spectral pieces of v: d = Lambda^{-1} div v, W_ij = Lambda^{-1}(d_i v_j - d_j v_i).

    ``d_hat`` has the spectral shape, ``w_hat`` shape (3, 3, ...) and ``mean``
    holds the zero-mode coefficients of the three velocity components.
    """

    d_hat: np.ndarray
    w_hat: np.ndarray
    mean: np.ndarray


def _inv_abs(grid):
    r = grid.xi_abs
    out = np.zeros_like(r)
    np.divide(1.0, r, out=out, where=r > 0)
    return out


def lambda_power(grid, c, s, annihilate_mean=False):
    """Multiply coefficients by |xi|^s; the zero mode goes to 0 for s != 0.

    For s < 0 the input must have zero mean unless ``annihilate_mean`` is set.
    Modes with |xi| = 0 through Nyquist zeroing are treated like the zero mode.
    """
    c = np.asarray(c)
    if s == 0:
        return c.copy()
    if s < 0 and not annihilate_mean:
        zero = c[..., 0, 0, 0]
        if np.any(np.abs(zero) > 1e-12 * max(1.0, float(np.abs(c).max()))):
            raise InputError("negative power of Lambda needs a mean-zero field "
                             "(or annihilate_mean=True)")
    r = grid.xi_abs
    mult = np.zeros_like(r)
    pos = r > 0
    mult[pos] = r[pos] ** s
    return c * mult


def decompose(grid, v_hat):
    """Split spectral velocity coefficients (3, ...) into HelmholtzParts."""
    v_hat = np.asarray(v_hat)
    xi = grid.xi
    inv = _inv_abs(grid)
    d_hat = 1j * np.einsum("i...,i...->...", xi, v_hat) * inv
    w_hat = 1j * (xi[:, None] * v_hat[None, :] - xi[None, :] * v_hat[:, None]) * inv
    mean = v_hat[:, 0, 0, 0].copy()
    return HelmholtzParts(d_hat, w_hat, mean)


def reconstruct(grid, parts):
    """v_j = -i xi_j d/|xi| - i sum_i xi_i W_ij/|xi|, with the mean restored."""
    xi = grid.xi
    inv = _inv_abs(grid)
    v_hat = -1j * (xi * parts.d_hat[None] + np.einsum("i...,ij...->j...", xi, parts.w_hat)) * inv
    v_hat[:, 0, 0, 0] = parts.mean
    return v_hat
