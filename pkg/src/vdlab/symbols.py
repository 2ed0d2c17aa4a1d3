"""Fourier symbols of the linearized viscoelastic operator.

Two 2x2 blocks carry the whole linear dynamics of admissible data:

* compressible block on (n, d):  [[0, -r], [2r, -(2mu+lam) r^2]]
* shear block on each antisymmetric pair:  [[0, -r], [r, -mu r^2]]

with r = |xi|.  Both have characteristic polynomial
``k^2 + c r^2 k + q r^2`` (c = 2mu+lam, q = 2 resp. c = mu, q = 1); everything
below is written once for that family and vectorized over r.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import factorial

import mpmath
import numpy as np
import scipy.linalg

from .errors import InputError

TOL_DEG = 1e-9
# |delta t| below this uses the even/odd series in delta^2 instead of projections
SERIES_SWITCH = 0.5
N_SERIES = 14


@dataclass(frozen=True)
class PhysParams:
    mu: float = 1.0
    lam: float = 0.0
    gamma: float = 2.0

    def __post_init__(self):
        if not self.mu > 0:
            raise InputError(f"mu must be > 0, got {self.mu}")
        if 2 * self.mu + 3 * self.lam < 0:
            raise InputError(f"need 2*mu + 3*lambda >= 0, got mu={self.mu}, lambda={self.lam}")
        if not self.gamma > 1:
            raise InputError(f"gamma must be > 1, got {self.gamma}")

    @property
    def c_comp(self):
        return 2.0 * self.mu + self.lam

    @property
    def r_degenerate(self):
        """|xi| where the compressible eigenvalues coalesce."""
        return 2.0 * np.sqrt(2.0) / self.c_comp

    @property
    def r_degenerate_shear(self):
        return 2.0 / self.mu

    def default_radii(self):
        """(r1, r2) = (sqrt2/(2mu+lam), 4/(2mu+lam))."""
        return np.sqrt(2.0) / self.c_comp, 4.0 / self.c_comp


def _block_coefficients(params, block):
    if block == "compressible":
        return params.c_comp, 2.0
    if block == "shear":
        return params.mu, 1.0
    raise InputError(f"unknown block {block!r}")


def block_symbol(params, r, block="compressible"):
    """The 2x2 symbol for each |xi| in ``r``; shape (*r.shape, 2, 2)."""
    c, q = _block_coefficients(params, block)
    r = np.asarray(r, dtype=float)
    m = np.zeros(r.shape + (2, 2), dtype=complex)
    m[..., 0, 1] = -r
    m[..., 1, 0] = q * r
    m[..., 1, 1] = -c * r * r
    return m


def compressible_symbol(params, r):
    return block_symbol(params, r, "compressible")


def shear_symbol(params, r):
    return block_symbol(params, r, "shear")


@dataclass
class SymbolEigen:
    kappa_plus: np.ndarray
    kappa_minus: np.ndarray
    discriminant: np.ndarray
    degenerate: np.ndarray
    proj_plus: np.ndarray
    proj_minus: np.ndarray
    symbol: np.ndarray


def _roots(c, q, r):
    """Roots of k^2 + c r^2 k + q r^2 = 0 with Im k_+ >= 0 and no cancellation."""
    r = np.asarray(r, dtype=float)
    r2 = r * r
    disc = r2 * (c * c * r2 - 4.0 * q)
    half_tr = -0.5 * c * r2
    osc = disc < 0
    kp = np.empty(r.shape, dtype=complex)
    km = np.empty(r.shape, dtype=complex)
    root = 0.5 * np.sqrt(np.abs(disc))
    kp[osc] = half_tr[osc] + 1j * root[osc]
    km[osc] = half_tr[osc] - 1j * root[osc]
    real = ~osc
    km_r = half_tr[real] - root[real]
    km[real] = km_r
    with np.errstate(divide="ignore", invalid="ignore"):
        kp_r = np.where(km_r != 0.0, q * r2[real] / km_r, 0.0)
    kp[real] = kp_r
    return kp, km, disc


def _eigen(params, r, block, tol_deg=TOL_DEG):
    c, q = _block_coefficients(params, block)
    r = np.asarray(r, dtype=float)
    if np.any(r < 0):
        raise InputError("|xi| must be nonnegative")
    kp, km, disc = _roots(c, q, r)
    scale = np.abs(kp) + np.abs(km)
    degenerate = np.abs(disc) <= tol_deg * scale * scale + 1e-300
    sym = block_symbol(params, r, block)
    # (M - k-)/(k+ - k-) with the diagonal rewritten through the trace
    # (M11 = 0, M22 - k- = k+) so no entry cancels at large r
    p_plus = np.empty_like(sym)
    p_minus = np.empty_like(sym)
    p_plus[..., 0, 0] = -km
    p_plus[..., 1, 1] = kp
    p_minus[..., 0, 0] = -kp
    p_minus[..., 1, 1] = km
    p_plus[..., 0, 1] = p_minus[..., 0, 1] = sym[..., 0, 1]
    p_plus[..., 1, 0] = p_minus[..., 1, 0] = sym[..., 1, 0]
    diff = (kp - km)[..., None, None]
    with np.errstate(divide="ignore", invalid="ignore"):
        p_plus /= diff
        p_minus /= -diff
    p_plus[degenerate] = np.nan
    p_minus[degenerate] = np.nan
    return SymbolEigen(kp, km, disc.astype(complex), degenerate, p_plus, p_minus, sym)


def eigen_compressible(params, r, tol_deg=TOL_DEG):
    """Eigenvalues and spectral projections of the compressible block.

    kappa_pm = -(mu + lam/2) r^2 +- sqrt((2mu+lam)^2 r^4 - 8 r^2) / 2, the root
    taken as +i sqrt(|.|) in the oscillatory range so that Im kappa_+ >= 0.
    """
    return _eigen(params, r, "compressible", tol_deg)


def eigen_shear(params, r, tol_deg=TOL_DEG):
    """Same as :func:`eigen_compressible` for the shear block (degenerate at r = 2/mu)."""
    return _eigen(params, r, "shear", tol_deg)


def eigen_block(params, r, block, tol_deg=TOL_DEG):
    return _eigen(params, r, block, tol_deg)


def _check_time(t):
    t = float(t)
    if not t >= 0:
        raise InputError(f"time must be >= 0, got {t}")
    return t


def _even_odd_series(z2):
    """cosh(sqrt(z2)) and sinh(sqrt(z2))/sqrt(z2) from their power series in z2."""
    c = np.ones_like(z2)
    s = np.ones_like(z2)
    term = np.ones_like(z2)
    for k in range(1, N_SERIES):
        term = term * z2
        c = c + term / factorial(2 * k)
        s = s + term / factorial(2 * k + 1)
    return c, s


def _split(eigen, t):
    """Mask of modes handled by the series branch."""
    half_gap = 0.5 * np.abs(eigen.kappa_plus - eigen.kappa_minus)
    return half_gap * t <= SERIES_SWITCH


def exp_block(eigen, t):
    """e^{t M} for every 2x2 symbol M held by ``eigen``.

    Well separated roots use e^{k+ t} P+ + e^{k- t} P-.  Where the half gap
    delta = (k+ - k-)/2 satisfies |delta t| <= 0.5 (the degenerate point and
    its neighbourhood, and r -> 0) the exact form
    e^{kbar t} [cosh(delta t) I + sinh(delta t)/delta (M - kbar I)]
    is summed as a series in delta^2, which at delta = 0 is the confluent
    formula e^{k t}(I + t (M - k I)).
    """
    t = _check_time(t)
    sym = eigen.symbol
    out = np.empty(sym.shape, dtype=complex)
    ser = _split(eigen, t)
    eye = np.eye(2)

    if np.any(ser):
        m = sym[ser]
        kbar = 0.5 * (m[..., 0, 0] + m[..., 1, 1])
        z2 = 0.25 * eigen.discriminant[ser] * t * t
        ch, sh = _even_odd_series(z2)
        ek = np.exp(kbar * t)
        shifted = m - kbar[..., None, None] * eye
        out[ser] = ek[..., None, None] * (ch[..., None, None] * eye
                                          + (t * sh)[..., None, None] * shifted)
    proj = ~ser
    if np.any(proj):
        ep = np.exp(eigen.kappa_plus[proj] * t)[..., None, None]
        em = np.exp(eigen.kappa_minus[proj] * t)[..., None, None]
        out[proj] = ep * eigen.proj_plus[proj] + em * eigen.proj_minus[proj]
    return out


def phi1(kappa, t):
    """(e^{kappa t} - 1)/kappa, with a Taylor branch for |kappa t| < 1e-4."""
    t = _check_time(t)
    kappa = np.asarray(kappa, dtype=complex)
    z = kappa * t
    small = np.abs(z) < 1e-4
    out = np.empty(kappa.shape, dtype=complex)
    zs = z[small]
    out[small] = t * (1.0 + zs * (0.5 + zs * (1.0 / 6.0 + zs / 24.0)))
    big = ~small
    out[big] = np.expm1(z[big]) / kappa[big]
    return out


def block_integral(eigen, t):
    """int_0^t e^{s M} ds for every 2x2 symbol held by ``eigen``.

    Separated roots: phi1(k+, t) P+ + phi1(k-, t) P-.  Near coalescence the
    symbol is invertible (det = q r^2 > 0) and M^{-1}(e^{tM} - I) is used,
    or the Taylor series in tM when tM itself is small.
    """
    t = _check_time(t)
    sym = eigen.symbol
    out = np.empty(sym.shape, dtype=complex)
    ser = _split(eigen, t)
    eye = np.eye(2)

    proj = ~ser
    if np.any(proj):
        fp = phi1(eigen.kappa_plus[proj], t)[..., None, None]
        fm = phi1(eigen.kappa_minus[proj], t)[..., None, None]
        out[proj] = fp * eigen.proj_plus[proj] + fm * eigen.proj_minus[proj]

    if np.any(ser):
        m = sym[ser]
        size = np.abs(m).max(axis=(-1, -2)) * t
        tiny = size <= 0.5
        res = np.empty(m.shape, dtype=complex)
        if np.any(tiny):
            mt = m[tiny] * t
            term = np.broadcast_to(eye, mt.shape).astype(complex) * t
            acc = term.copy()
            for k in range(1, 30):
                term = term @ mt / (k + 1)
                acc = acc + term
            res[tiny] = acc
        rest = ~tiny
        if np.any(rest):
            sub = SymbolEigen(eigen.kappa_plus[ser][rest], eigen.kappa_minus[ser][rest],
                              eigen.discriminant[ser][rest], eigen.degenerate[ser][rest],
                              None, None, m[rest])
            ex = exp_block(sub, t) - eye
            mr = m[rest]
            det = mr[..., 0, 0] * mr[..., 1, 1] - mr[..., 0, 1] * mr[..., 1, 0]
            inv = np.empty_like(mr)
            inv[..., 0, 0] = mr[..., 1, 1]
            inv[..., 1, 1] = mr[..., 0, 0]
            inv[..., 0, 1] = -mr[..., 0, 1]
            inv[..., 1, 0] = -mr[..., 1, 0]
            inv /= det[..., None, None]
            res[rest] = inv @ ex
        out[ser] = res
    return out


# -- full 13x13 symbol ------------------------------------------------------

def state_index(name):
    """Row of a state component in the (n, v1..v3, E11..E33) ordering."""
    if name == "n":
        return 0
    if name[0] == "v":
        return int(name[1])
    if name[0] == "E":
        return 4 + 3 * (int(name[1]) - 1) + (int(name[2]) - 1)
    raise InputError(f"unknown component {name!r}")


def full_symbol(params, xi):
    """13x13 symbol A(xi), batched over trailing axes of ``xi`` (shape (3, ...)).

    n'   = -i xi.v
    v_j' = -mu|xi|^2 v_j - (lam+mu) xi_j (xi.v) - i xi_j n + i sum_k E_jk xi_k
    E_jk'= i xi_k v_j
    """
    xi = np.asarray(xi, dtype=float)
    batch = xi.shape[1:]
    a = np.zeros(batch + (13, 13), dtype=complex)
    r2 = np.einsum("i...,i...->...", xi, xi)
    for j in range(3):
        a[..., 0, 1 + j] = -1j * xi[j]
        a[..., 1 + j, 0] = -1j * xi[j]
        a[..., 1 + j, 1 + j] += -params.mu * r2
        for k in range(3):
            a[..., 1 + j, 1 + k] += -(params.lam + params.mu) * xi[j] * xi[k]
            a[..., 1 + j, 4 + 3 * j + k] = 1j * xi[k]
            a[..., 4 + 3 * j + k, 1 + j] = 1j * xi[k]
    return a


def exp_full(symbol, t):
    """Matrix exponential e^{t A} of (batched) 13x13 symbols.

    Backed by scipy's scaling-and-squaring Pade(13) expm.
    """
    t = _check_time(t)
    return scipy.linalg.expm(np.asarray(symbol) * t)


# -- expansions and bounds --------------------------------------------------

@dataclass
class ExpansionFit:
    order: float
    samples: np.ndarray
    residuals: np.ndarray


def _kappa_plus_mp(c, q, r):
    """kappa_+ in extended precision straight from the quadratic formula."""
    with mpmath.workdps(60):
        r = mpmath.mpf(r)
        disc = c * c * r ** 4 - 4 * q * r * r
        root = mpmath.sqrt(disc) if disc >= 0 else 1j * mpmath.sqrt(-disc)
        return -c * r * r / 2 + root / 2


def _loglog_slope(x, y):
    slope, _ = np.polyfit(np.log(x), np.log(y), 1)
    return float(slope)


def taylor_residual(params, samples):
    """Fitted order of |k+ - (-(mu+lam/2) r^2 + i sqrt2 r)| over small r.

    The eigenvalue is evaluated at 60 digits so the residual is not floored
    by double rounding.
    """
    samples = np.asarray(samples, dtype=float)
    c = mpmath.mpf(params.c_comp)
    if samples.size < 2:
        raise InputError("need at least two samples")
    if np.any(samples <= 0) or np.any(samples >= params.r_degenerate):
        raise InputError(f"samples must lie in (0, {params.r_degenerate}) (oscillatory range)")
    res = []
    with mpmath.workdps(60):
        for r in samples:
            rm = mpmath.mpf(float(r))
            kp = _kappa_plus_mp(c, 2, rm)
            approx = -c / 2 * rm * rm + 1j * mpmath.sqrt(2) * rm
            res.append(float(abs(kp - approx)))
    res = np.array(res)
    return ExpansionFit(_loglog_slope(samples, res), samples, res)


def laurent_residual(params, samples):
    """Fitted order of |k+ + 2/c + 4/(c^3 r^2)| over large r, c = 2mu+lam."""
    samples = np.asarray(samples, dtype=float)
    c = mpmath.mpf(params.c_comp)
    if samples.size < 2:
        raise InputError("need at least two samples")
    if np.any(samples <= params.r_degenerate):
        raise InputError(f"samples must exceed {params.r_degenerate} (overdamped range)")
    res = []
    with mpmath.workdps(60):
        for r in samples:
            rm = mpmath.mpf(float(r))
            kp = _kappa_plus_mp(c, 2, rm)
            res.append(float(abs(kp + 2 / c + 4 / c ** 3 / (rm * rm))))
    res = np.array(res)
    return ExpansionFit(_loglog_slope(samples, res), samples, res)


@dataclass
class BoundsReport:
    region: str
    block: str
    beta0: float
    beta1: float
    minus_beta0: float | None = None
    minus_beta1: float | None = None

    @property
    def positive(self):
        vals = [self.beta0, self.beta1]
        if self.minus_beta0 is not None:
            vals += [self.minus_beta0, self.minus_beta1]
        return all(v > 0 for v in vals)


def spectral_bounds_scan(params, region, samples, block="compressible", r1=None, r2=None):
    """Tightest constants in the dissipativity bounds over sampled |xi|.

    low:  -beta0 r^2 <= Re k_pm <= -beta1 r^2 for r in (0, r1]
    high: -beta0 <= Re k_+ <= -beta1 and the r^2-scaled pair for k_- on [r2, inf)
    """
    samples = np.asarray(samples, dtype=float)
    if samples.size == 0:
        raise InputError("empty sample set")
    d1, d2 = params.default_radii()
    r1 = d1 if r1 is None else r1
    r2 = d2 if r2 is None else r2
    eig = eigen_block(params, samples, block)
    if region == "low":
        if np.any(samples <= 0) or np.any(samples > r1):
            raise InputError(f"low-region samples must lie in (0, {r1}]")
        scaled = -np.concatenate([eig.kappa_plus.real, eig.kappa_minus.real]) / np.concatenate(
            [samples, samples]) ** 2
        return BoundsReport("low", block, float(scaled.max()), float(scaled.min()))
    if region == "high":
        if np.any(samples < r2):
            raise InputError(f"high-region samples must be >= {r2}")
        rp = -eig.kappa_plus.real
        rm = -eig.kappa_minus.real / samples ** 2
        return BoundsReport("high", block, float(rp.max()), float(rp.min()),
                            float(rm.max()), float(rm.min()))
    raise InputError(f"region must be 'low' or 'high', got {region!r}")
