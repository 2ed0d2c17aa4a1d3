"""Decay series, log-log slope fits, predicted exponents and frequency bands."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .errors import InputError

ACOUSTIC_SPEED = np.sqrt(2.0)
SHEAR_SPEED = 1.0

L2_TOL = 0.15
GRAD_TOL = 0.25
LINF_TOL = 0.25

_L2_NAMES = {"l2_total", "l2_n", "l2_v", "l2_E", "l2_low", "h1_v"}
_GRAD_NAMES = {"l2_grad", "l2_dt", "grad_dt"}
_LINF_NAMES = {"linf_total"}


@dataclass
class DecaySeries:
    """Norms sampled at increasing times; ``values[name]`` is aligned with ``times``."""

    times: np.ndarray = field(default_factory=lambda: np.zeros(0))
    values: dict = field(default_factory=dict)
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.values = {k: np.asarray(v, dtype=float) for k, v in self.values.items()}
        self.validate()

    def validate(self):
        if np.any(np.diff(self.times) <= 0):
            raise InputError("series times must be strictly increasing")
        for name, arr in self.values.items():
            if arr.shape != self.times.shape:
                raise InputError(f"column {name!r} has {arr.size} entries, expected {self.times.size}")

    @property
    def names(self):
        return list(self.values)

    def __len__(self):
        return int(self.times.size)

    def append(self, t, row):
        """Add one sample; ``row`` maps column names to floats."""
        if self.times.size and not t > self.times[-1]:
            raise InputError(f"time {t} does not increase the series")
        if self.times.size and set(row) != set(self.values):
            raise InputError("row columns differ from the series columns")
        self.times = np.append(self.times, float(t))
        if not self.values:
            self.values = {k: np.zeros(0) for k in row}
        for k in self.values:
            self.values[k] = np.append(self.values[k], float(row[k]))

    def column(self, name):
        if name == "grad_dt":
            return self.column("l2_grad") + self.column("l2_dt")
        if name not in self.values:
            raise InputError(f"series has no column {name!r}; available: {', '.join(self.values)}")
        return self.values[name]


@dataclass
class SlopeFit:
    slope: float
    stderr: float
    window: tuple
    r2: float
    n_samples: int
    intercept: float = 0.0


def _window_mask(times, window):
    t0, t1 = window
    if not t0 < t1:
        raise InputError(f"window start {t0} must be below its end {t1}")
    return (times >= t0) & (times <= t1)


def fit_slope(series, norm, window):
    """Least-squares line through (log t, log value) for samples inside ``window``."""
    y = series.column(norm)
    mask = _window_mask(series.times, window)
    if mask.sum() < 5:
        raise InputError(f"need at least 5 samples in window {tuple(window)}, found {int(mask.sum())}")
    t, v = series.times[mask], y[mask]
    if np.any(t <= 0) or np.any(~(v > 0)):
        raise InputError(f"{norm}: nonpositive values in window, decay fit undefined")
    res = stats.linregress(np.log(t), np.log(v))
    return SlopeFit(float(res.slope), float(res.stderr), (float(window[0]), float(window[1])),
                    float(res.rvalue ** 2), int(mask.sum()), float(res.intercept))


def fit_exponential(series, norm, window):
    """Fit log value = a - c t; returns (rate c, r^2, sample count)."""
    y = series.column(norm)
    mask = _window_mask(series.times, window)
    if mask.sum() < 3:
        raise InputError(f"need at least 3 samples in window {tuple(window)}")
    v = y[mask]
    if np.any(~(v > 0)):
        raise InputError(f"{norm}: nonpositive values in window")
    res = stats.linregress(series.times[mask], np.log(v))
    return float(-res.slope), float(res.rvalue ** 2), int(mask.sum())


def theoretical_exponent(norm, q=1.0):
    """Predicted power of t for an L_q-small initial state.

    sigma = 3/2 (1/q - 1/2); L2 norms decay like t^{-sigma}, first
    derivatives in x or t like t^{-sigma-1/2} and L-inf like t^{-3/(2q)}.
    """
    q = float(q)
    if not 1.0 <= q <= 2.0:
        raise InputError(f"q must lie in [1, 2], got {q}")
    sigma = 1.5 * (1.0 / q - 0.5)
    if norm in _L2_NAMES:
        return -sigma
    if norm in _GRAD_NAMES:
        return -sigma - 0.5
    if norm in _LINF_NAMES:
        return -1.5 / q
    raise InputError(f"no predicted exponent for norm {norm!r}")


def tolerance(norm):
    if norm in _L2_NAMES:
        return L2_TOL
    if norm in _GRAD_NAMES:
        return GRAD_TOL
    if norm in _LINF_NAMES:
        return LINF_TOL
    raise InputError(f"no tolerance for norm {norm!r}")


def wraparound_time(grid, params=None, radius=0.0):
    """Latest time the torus still behaves like R^3: L / sqrt(2) - radius.

    The acoustic branch travels at sqrt(2) and the shear branch at 1, so the
    acoustic speed is the binding one; ``params`` does not change it.
    """
    speed = max(ACOUSTIC_SPEED, SHEAR_SPEED)
    return grid.L / speed - float(radius)


def default_window(grid, params=None, radius=0.0):
    return (5.0, min(50.0, 0.9 * wraparound_time(grid, params, radius)))


@dataclass
class RateRow:
    norm: str
    predicted: float
    slope: float
    stderr: float
    r2: float
    tolerance: float
    passed: bool
    reliable: bool = True
    note: str = ""


@dataclass
class RateTable:
    q: float
    window: tuple
    rows: list

    @property
    def passed(self):
        return all(r.passed for r in self.rows)

    def as_dict(self):
        return {
            "q": self.q,
            "window": list(self.window),
            "passed": self.passed,
            "rows": [r.__dict__.copy() for r in self.rows],
        }

    def format(self):
        lines = [f"q = {self.q:g}, window = [{self.window[0]:g}, {self.window[1]:g}]",
                 f"{'norm':<12} {'predicted':>10} {'fitted':>10} {'stderr':>9} {'tol':>6}  verdict"]
        for r in self.rows:
            verdict = "PASS" if r.passed else "FAIL"
            if not r.reliable:
                verdict += " (unreliable)"
            lines.append(f"{r.norm:<12} {r.predicted:>10.4f} {r.slope:>10.4f} {r.stderr:>9.2e} "
                         f"{r.tolerance:>6.2f}  {verdict}")
        return "\n".join(lines)


def rate_table(series, norms, q=1.0, window=None, wrap_time=None):
    """Compare fitted slopes with :func:`theoretical_exponent` row by row.

    Rows are flagged unreliable when the window reaches past ``wrap_time``.
    """
    if window is None:
        raise InputError("rate_table needs a fit window")
    rows = []
    for name in norms:
        pred = theoretical_exponent(name, q)
        tol = tolerance(name)
        fit = fit_slope(series, name, window)
        reliable = wrap_time is None or window[1] <= wrap_time
        rows.append(RateRow(name, pred, fit.slope, fit.stderr, fit.r2, tol,
                            bool(abs(fit.slope - pred) <= tol), bool(reliable),
                            "" if reliable else "window extends past wrap-around time"))
    return RateTable(float(q), tuple(window), rows)


# -- frequency bands ------------------------------------------------------------

def smooth_step(x):
    """C-infinity step: 0 for x <= 0, 1 for x >= 1, built from exp(-1/x)."""
    x = np.asarray(x, dtype=float)
    a = np.where(x > 0, np.exp(-1.0 / np.where(x > 0, x, 1.0)), 0.0)
    y = 1.0 - x
    b = np.where(y > 0, np.exp(-1.0 / np.where(y > 0, y, 1.0)), 0.0)
    return a / (a + b)


def band_weights(r, r1, r2):
    """Partition of unity (phi0, phiM, phiInf) on |xi| = r.

    phi0 = 1 for r <= r1/2 and 0 for r >= r1; phiInf = 0 for r <= 2 r2 and
    1 for r >= 3 r2; phiM fills the rest.
    """
    if not 0 < r1 < r2:
        raise InputError(f"band radii need 0 < r1 < r2, got r1={r1}, r2={r2}")
    r = np.asarray(r, dtype=float)
    phi0 = 1.0 - smooth_step((r - 0.5 * r1) / (0.5 * r1))
    phi_inf = smooth_step((r - 2.0 * r2) / r2)
    return phi0, 1.0 - phi0 - phi_inf, phi_inf


def band_decompose(U, r1, r2):
    """Split a state into low, mid and high frequency parts that sum back to U."""
    spec = U.to_spectral()
    weights = band_weights(U.grid.lattice_abs, r1, r2)
    return tuple(spec.with_data(spec.data * w) for w in weights)


def band_norms(grid, c, r1, r2):
    """L2 norms of the three band pieces of spectral data c (13, ...)."""
    weights = band_weights(grid.lattice_abs, r1, r2)
    sq = np.sum(c.real ** 2 + c.imag ** 2, axis=0) * grid.half_weights
    return tuple(float(np.sqrt(np.sum(sq * w * w))) for w in weights)


@dataclass
class BandRow:
    band: str
    kind: str
    value: float
    predicted: float
    r2: float
    passed: bool
    skipped: bool = False
    note: str = ""


def band_decay_report(series, q=1.0, low_window=None, high_window=None, empty_tol=1e-13):
    """Low band fitted as a power law, mid and high bands as exponentials.

    A band whose largest recorded norm is below ``empty_tol`` times the
    largest total norm is skipped.
    """
    total = float(np.max(series.column("l2_total"))) if "l2_total" in series.values else 1.0
    rows = []
    for band, window in (("low", low_window), ("mid", high_window), ("high", high_window)):
        name = f"l2_{band}"
        vals = series.column(name)
        if window is None or not np.max(vals) > empty_tol * total:
            rows.append(BandRow(band, "", float("nan"), float("nan"), float("nan"), True, True,
                                "empty band" if window is not None else "no window"))
            continue
        if band == "low":
            fit = fit_slope(series, name, window)
            pred = theoretical_exponent("l2_low", q)
            rows.append(BandRow(band, "power", fit.slope, pred, fit.r2,
                                bool(abs(fit.slope - pred) <= L2_TOL)))
        else:
            rate, r2, _ = fit_exponential(series, name, window)
            ok = bool(rate > 0 and (band == "mid" or r2 >= 0.99))
            rows.append(BandRow(band, "exponential", rate, 0.0, r2, ok))
    return rows
