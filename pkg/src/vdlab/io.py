"""Binary snapshots and series CSV files.

Snapshot layout (all little-endian)::

    offset  size  field
    0       5     magic b"VDLAB"
    5       2     format version (uint16)
    7       4     n_points (uint32)
    11      8     L (float64)
    19      8     mu
    27      8     lambda
    35      8     gamma
    43      8     t
    51      1     representation (0 physical, 1 spectral)
    52      2     component count (uint16, always 13)
    54      ...   payload

Physical payload: 13 components in the order n, v1..v3, E11, E12, ..., E33,
each n^3 float64 values with the x1 index varying fastest.  Spectral
payload: the same components in the rfftn half-spectrum layout
(n, n, n/2+1) with the x1 index fastest, each coefficient stored as a
(real, imaginary) float64 pair.
"""

from __future__ import annotations

import io as _io
import struct

import numpy as np

from .errors import DataFormatError, InputError, SnapshotError
from .grid import PHYSICAL, SPECTRAL, GridSpec
from .state import N_COMPONENTS, StateU
from .symbols import PhysParams

MAGIC = b"VDLAB"
VERSION = 1
_HEADER = struct.Struct("<5sHIdddddBH")
HEADER_SIZE = _HEADER.size


def _payload_size(n, representation):
    if representation == PHYSICAL:
        return N_COMPONENTS * n ** 3 * 8
    return N_COMPONENTS * n * n * (n // 2 + 1) * 16


def encode_snapshot(U, params):
    rep = 0 if U.representation == PHYSICAL else 1
    head = _HEADER.pack(MAGIC, VERSION, U.grid.n_points, U.grid.L, params.mu, params.lam,
                        params.gamma, U.t, rep, N_COMPONENTS)
    data = np.asarray(U.data)
    # x1 fastest: reverse the spatial axes before a C-order dump
    body = np.ascontiguousarray(np.transpose(data, (0, 3, 2, 1)))
    if rep == 0:
        payload = body.astype("<f8").tobytes()
    else:
        payload = body.astype("<c16").tobytes()
    return head + payload


def write_snapshot(path, U, params):
    try:
        with open(path, "wb") as fh:
            fh.write(encode_snapshot(U, params))
    except OSError as exc:
        raise SnapshotError(f"cannot write snapshot {path}: {exc}") from exc


def decode_header(raw):
    """Header fields as a dict; raises SnapshotError on short or foreign data."""
    if len(raw) < HEADER_SIZE:
        raise SnapshotError(f"truncated header: {len(raw)} of {HEADER_SIZE} bytes", offset=len(raw))
    magic, version, n, L, mu, lam, gamma, t, rep, ncomp = _HEADER.unpack_from(raw, 0)
    if magic != MAGIC:
        raise SnapshotError(f"bad magic {magic!r}, expected {MAGIC!r}", offset=0)
    if version != VERSION:
        raise SnapshotError(f"unsupported snapshot version {version} (reader handles {VERSION})",
                            offset=5)
    if rep not in (0, 1):
        raise SnapshotError(f"bad representation tag {rep}", offset=51)
    if ncomp != N_COMPONENTS:
        raise SnapshotError(f"component count {ncomp}, expected {N_COMPONENTS}", offset=52)
    return {
        "version": version, "n_points": n, "L": L, "mu": mu, "lambda": lam, "gamma": gamma,
        "t": t, "representation": PHYSICAL if rep == 0 else SPECTRAL, "components": ncomp,
    }


def decode_snapshot(raw):
    """(StateU, PhysParams, header) from snapshot bytes."""
    head = decode_header(raw)
    n = head["n_points"]
    try:
        grid = GridSpec(n, head["L"])
        params = PhysParams(head["mu"], head["lambda"], head["gamma"])
    except InputError as exc:
        raise SnapshotError(f"invalid header values: {exc}", offset=7) from exc
    size = _payload_size(n, head["representation"])
    have = len(raw) - HEADER_SIZE
    if have < size:
        raise SnapshotError(f"truncated payload: {have} of {size} bytes", offset=len(raw))
    if have > size:
        raise SnapshotError(f"{have - size} trailing bytes after payload",
                            offset=HEADER_SIZE + size)
    if head["representation"] == PHYSICAL:
        body = np.frombuffer(raw, dtype="<f8", count=size // 8, offset=HEADER_SIZE)
        body = body.reshape((N_COMPONENTS, n, n, n))
    else:
        body = np.frombuffer(raw, dtype="<c16", count=size // 16, offset=HEADER_SIZE)
        body = body.reshape((N_COMPONENTS, n // 2 + 1, n, n))
    data = np.ascontiguousarray(np.transpose(body, (0, 3, 2, 1))).astype(
        float if head["representation"] == PHYSICAL else complex)
    return StateU(grid, data, head["representation"], head["t"]), params, head


def read_snapshot(path):
    try:
        with open(path, "rb") as fh:
            raw = fh.read()
    except OSError as exc:
        raise SnapshotError(f"cannot read snapshot {path}: {exc}") from exc
    return decode_snapshot(raw)


def read_snapshot_header(path):
    try:
        with open(path, "rb") as fh:
            raw = fh.read(HEADER_SIZE)
            fh.seek(0, 2)
            total = fh.tell()
    except OSError as exc:
        raise SnapshotError(f"cannot read snapshot {path}: {exc}") from exc
    head = decode_header(raw)
    head["payload_bytes"] = total - HEADER_SIZE
    head["payload_expected"] = _payload_size(head["n_points"], head["representation"])
    return head


# -- series CSV -----------------------------------------------------------------

def format_series_csv(series):
    """CSV text: '# key: value' metadata lines, a header row, 17-digit values."""
    buf = _io.StringIO()
    for key in sorted(series.metadata):
        buf.write(f"# {key}: {series.metadata[key]}\n")
    names = list(series.values)
    buf.write(",".join(["t"] + names) + "\n")
    for i, t in enumerate(series.times):
        row = [t] + [series.values[k][i] for k in names]
        buf.write(",".join("%.17g" % x for x in row) + "\n")
    return buf.getvalue()


def write_series_csv(path, series):
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(format_series_csv(series))
    except OSError as exc:
        raise SnapshotError(f"cannot write series {path}: {exc}") from exc


def parse_series_csv(text):
    from .analysis import DecaySeries

    metadata = {}
    header = None
    rows = []
    for lineno, line in enumerate(text.splitlines(), 1):
        if not line.strip():
            continue
        if line.startswith("#"):
            body = line[1:].strip()
            if ":" in body:
                key, value = body.split(":", 1)
                metadata[key.strip()] = value.strip()
            continue
        cells = [c.strip() for c in line.split(",")]
        if header is None:
            header = cells
            if header[0] != "t" or len(set(header)) != len(header):
                raise DataFormatError("header must start with 't' and have unique names", lineno)
            continue
        if len(cells) != len(header):
            raise DataFormatError(f"expected {len(header)} fields, found {len(cells)}", lineno)
        try:
            rows.append([float(c) for c in cells])
        except ValueError as exc:
            raise DataFormatError(f"non-numeric field: {exc}", lineno) from exc
    if header is None:
        raise DataFormatError("no header row", 1)
    arr = np.array(rows, dtype=float).reshape(len(rows), len(header))
    try:
        return DecaySeries(arr[:, 0], {h: arr[:, i] for i, h in enumerate(header) if i},
                           metadata)
    except InputError as exc:
        raise DataFormatError(str(exc)) from exc


def read_series_csv(path):
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise SnapshotError(f"cannot read series {path}: {exc}") from exc
    except UnicodeDecodeError as exc:
        raise DataFormatError(f"{path} is not a text series file: {exc.reason}") from exc
    return parse_series_csv(text)
