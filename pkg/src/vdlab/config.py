"""Run configuration: a flat ``key = value`` file with ``#`` comments, overridable by flags."""

from __future__ import annotations

from dataclasses import asdict, dataclass, fields, replace

import numpy as np

from .errors import InputError
from .grid import GridSpec
from .symbols import PhysParams

MODES = ("linear-reduced", "linear-full13", "nonlinear")
SPACINGS = ("linear", "log")
SNAPSHOT_POLICIES = ("none", "final", "all")

# alternative spellings accepted in files and on the command line
_ALIASES = {
    "lambda": "lam",
    "grid_n": "n_points",
    "n": "n_points",
    "box_l": "box_half_width",
    "L": "box_half_width",
}


@dataclass(frozen=True)
class RunConfig:
    mu: float = 1.0
    lam: float = -0.5
    gamma: float = 2.0
    n_points: int = 32
    box_half_width: float = 16.0
    profile: str = "gaussian"
    amplitude: float = 1e-2
    seed: int = 0
    width: float = 1.0
    potential_weight: float = 0.2
    swirl_weight: float = 0.2
    normalize: str = "h2"
    mode: str = "linear-reduced"
    t_start: float | None = None
    t_final: float = 10.0
    outputs: int = 10
    spacing: str = "linear"
    dt: float | None = None
    integrator: str = "etd_midpoint"
    dealias: bool = True
    r1: float | None = None
    r2: float | None = None
    bands: bool = False
    q: float = 1.0
    window: tuple | None = None
    out: str | None = None
    snapshots: str = "final"

    def __post_init__(self):
        self.validate()

    def validate(self):
        self.params()
        self.grid()
        if self.mode not in MODES:
            raise InputError(f"mode: expected one of {MODES}, got {self.mode!r}")
        if self.spacing not in SPACINGS:
            raise InputError(f"spacing: expected one of {SPACINGS}, got {self.spacing!r}")
        if self.snapshots not in SNAPSHOT_POLICIES:
            raise InputError(f"snapshots: expected one of {SNAPSHOT_POLICIES}, got {self.snapshots!r}")
        if self.profile not in ("gaussian", "random_bandlimited"):
            raise InputError(f"profile: unknown profile {self.profile!r}")
        if self.normalize not in ("h2", "l2"):
            raise InputError(f"normalize: expected h2 or l2, got {self.normalize!r}")
        if self.amplitude < 0:
            raise InputError(f"amplitude: must be >= 0, got {self.amplitude}")
        if not self.width > 0:
            raise InputError(f"width: must be > 0, got {self.width}")
        if not self.t_final > 0:
            raise InputError(f"t_final: must be > 0, got {self.t_final}")
        if self.outputs < 1:
            raise InputError(f"outputs: must be >= 1, got {self.outputs}")
        if self.t_start is not None and not 0 < self.t_start < self.t_final:
            raise InputError(f"t_start: must lie in (0, t_final), got {self.t_start}")
        if self.mode == "nonlinear":
            if self.dt is None:
                raise InputError("dt: required in nonlinear mode")
            if not self.dt > 0:
                raise InputError(f"dt: must be > 0, got {self.dt}")
        elif self.dt is not None:
            raise InputError(f"dt: only meaningful in nonlinear mode, not {self.mode}")
        if (self.r1 is None) != (self.r2 is None):
            raise InputError("r1/r2: give both band radii or neither")
        if self.r1 is not None and not 0 < self.r1 < self.r2:
            raise InputError(f"r1/r2: need 0 < r1 < r2, got {self.r1}, {self.r2}")
        if not 1.0 <= self.q <= 2.0:
            raise InputError(f"q: must lie in [1, 2], got {self.q}")
        if self.window is not None and not self.window[0] < self.window[1]:
            raise InputError(f"window: start must be below end, got {self.window}")

    def params(self):
        try:
            return PhysParams(self.mu, self.lam, self.gamma)
        except InputError as exc:
            raise InputError(f"mu/lambda/gamma: {exc}") from exc

    def grid(self):
        try:
            return GridSpec(self.n_points, self.box_half_width)
        except InputError as exc:
            raise InputError(f"grid_n/box_l: {exc}") from exc

    def radii(self):
        if self.r1 is not None:
            return self.r1, self.r2
        return self.params().default_radii()

    @property
    def records_bands(self):
        return self.bands or self.r1 is not None

    def output_times(self):
        """Output times; in nonlinear mode they are snapped to whole steps."""
        if self.spacing == "log":
            start = self.t_start if self.t_start is not None else min(1.0, self.t_final / 2)
            times = np.geomspace(start, self.t_final, self.outputs)
        else:
            start = self.t_start if self.t_start is not None else self.t_final / self.outputs
            times = np.linspace(start, self.t_final, self.outputs)
        if self.mode == "nonlinear":
            steps = np.unique(np.maximum(1, np.rint(times / self.dt).astype(int)))
            times = steps * self.dt
        return np.asarray(times, dtype=float)

    def as_dict(self):
        d = asdict(self)
        if d["window"] is not None:
            d["window"] = list(d["window"])
        return d


_FIELDS = {f.name: f for f in fields(RunConfig)}


def canonical_key(key):
    key = key.strip().replace("-", "_")
    return _ALIASES.get(key, key)


def _parse_bool(text):
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def parse_window(text):
    parts = [p for p in str(text).replace(",", " ").split() if p]
    if len(parts) != 2:
        raise InputError(f"window: expected two numbers 'T0,T1', got {text!r}")
    try:
        return float(parts[0]), float(parts[1])
    except ValueError as exc:
        raise InputError(f"window: {exc}") from exc


def convert_value(key, raw):
    """Convert a text value to the type of RunConfig field ``key``."""
    if key not in _FIELDS:
        raise InputError(f"unknown configuration key {key!r}")
    if isinstance(raw, str):
        text = raw.strip()
        if text.lower() in ("none", "") and key in ("t_start", "dt", "r1", "r2", "window", "out"):
            return None
        try:
            if key == "window":
                return parse_window(text)
            if key in ("n_points", "seed", "outputs"):
                return int(text)
            if key in ("dealias", "bands"):
                return _parse_bool(text)
            if key in ("profile", "normalize", "mode", "spacing", "integrator", "out", "snapshots"):
                return text
            return float(text)
        except ValueError as exc:
            raise InputError(f"{key}: cannot parse {raw!r} ({exc})") from exc
    return raw


def read_config_text(text, source="<config>"):
    """Parse ``key = value`` lines into a dict of converted values."""
    values = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise InputError(f"{source}:{lineno}: expected 'key = value', got {line.strip()!r}")
        key, raw = body.split("=", 1)
        key = canonical_key(key)
        try:
            values[key] = convert_value(key, raw)
        except InputError as exc:
            raise InputError(f"{source}:{lineno}: {exc}") from exc
    return values


def load_config(path=None, overrides=None):
    """RunConfig from an optional file, then ``overrides`` (already keyed by field)."""
    values = {}
    if path is not None:
        try:
            with open(path, "r", encoding="utf-8") as fh:
                text = fh.read()
        except OSError as exc:
            raise InputError(f"cannot read config file {path}: {exc}") from exc
        values.update(read_config_text(text, str(path)))
    for key, raw in (overrides or {}).items():
        if raw is None:
            continue
        key = canonical_key(key)
        values[key] = convert_value(key, raw)
    return RunConfig(**values)


def dump_config(cfg):
    lines = []
    for key, value in cfg.as_dict().items():
        if isinstance(value, list):
            value = ",".join(repr(float(v)) for v in value)
        lines.append(f"{key} = {value}")
    return "\n".join(lines) + "\n"


def with_overrides(cfg, **kwargs):
    return replace(cfg, **kwargs)
