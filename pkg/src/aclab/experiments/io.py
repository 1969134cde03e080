"""File formats: AFLD binary fields, nodal-line CSV, PGM snapshots, JSON/CSV reports.

Every writer goes through a temporary file in the target directory and an
atomic rename, so readers never observe partial files.
"""

from __future__ import annotations

import csv
import io
import json
import os
import struct
import tempfile
import zlib
from pathlib import Path
from typing import Iterable, Mapping

import numpy as np

from ..grid import Field, Grid
from ..mcf import NodalSet

MAGIC = b"AFLD"
VERSION = 1


class FormatError(ValueError):
    """Raised on malformed or corrupted input files."""


def atomic_write_bytes(path: str | os.PathLike, data: bytes) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def atomic_write_text(path: str | os.PathLike, text: str) -> None:
    atomic_write_bytes(path, text.encode("utf-8"))


# ------------------------------------------------------------------- AFLD


def encode_field(f: Field) -> bytes:
    """Little-endian header, row-major float64 payload, CRC32 of the payload."""
    g = f.grid
    header = MAGIC + struct.pack("<HH", VERSION, g.dim)
    header += struct.pack(f"<{g.dim}Q", *([g.n] * g.dim))
    header += struct.pack("<dd", g.extent, f.time)
    payload = np.ascontiguousarray(f.values, dtype="<f8").tobytes(order="C")
    return header + payload + struct.pack("<I", zlib.crc32(payload) & 0xFFFFFFFF)


def decode_field(data: bytes) -> Field:
    if len(data) < 8 or data[:4] != MAGIC:
        raise FormatError("not an AFLD file (bad magic)")
    version, dim = struct.unpack_from("<HH", data, 4)
    if version != VERSION:
        raise FormatError(f"unsupported AFLD version {version}")
    if dim < 1:
        raise FormatError("invalid dimension")
    off = 8
    need = off + 8 * dim + 16
    if len(data) < need:
        raise FormatError("truncated header")
    counts = struct.unpack_from(f"<{dim}Q", data, off)
    off += 8 * dim
    extent, time = struct.unpack_from("<dd", data, off)
    off += 16
    if len(set(counts)) != 1:
        raise FormatError("only cubic grids are supported")
    size = int(np.prod(counts))
    end = off + 8 * size
    if len(data) != end + 4:
        raise FormatError(f"payload length mismatch: expected {end + 4} bytes, got {len(data)}")
    payload = data[off:end]
    (crc,) = struct.unpack_from("<I", data, end)
    if zlib.crc32(payload) & 0xFFFFFFFF != crc:
        raise FormatError("CRC mismatch: file is corrupted")
    vals = np.frombuffer(payload, dtype="<f8").reshape(counts).astype(np.float64)
    try:
        grid = Grid(dim, int(counts[0]), float(extent))
        return Field(grid, vals, float(time))
    except ValueError as exc:
        raise FormatError(str(exc)) from exc


def write_field(path: str | os.PathLike, f: Field) -> None:
    atomic_write_bytes(path, encode_field(f))


def read_field(path: str | os.PathLike) -> Field:
    return decode_field(Path(path).read_bytes())


# ------------------------------------------------------------------- nodal CSV


def nodal_to_csv(nodal: NodalSet) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["curve_id", "vertex_index", "x", "y"])
    for cid, curve in enumerate(nodal.curves):
        for k, (x, y) in enumerate(curve):
            w.writerow([cid, k, repr(float(x)), repr(float(y))])
    return buf.getvalue()


def nodal_from_csv(text: str, grid: Grid) -> NodalSet:
    rows = list(csv.DictReader(io.StringIO(text)))
    curves: dict[int, list[tuple[int, float, float]]] = {}
    for r in rows:
        curves.setdefault(int(r["curve_id"]), []).append((int(r["vertex_index"]), float(r["x"]), float(r["y"])))
    out = []
    for cid in sorted(curves):
        pts = sorted(curves[cid])
        out.append(np.array([[x, y] for _, x, y in pts]))
    return NodalSet(grid, out)


def write_nodal(path: str | os.PathLike, nodal: NodalSet) -> None:
    atomic_write_text(path, nodal_to_csv(nodal))


# ------------------------------------------------------------------- PGM


def encode_pgm(f: Field, lo: float = -1.2, hi: float = 1.2) -> bytes:
    """Binary greyscale image, ``[lo, hi]`` mapped linearly to ``[0, 255]`` with clipping."""
    if f.grid.dim != 2:
        raise ValueError("PGM rendering needs a 2-D field")
    scaled = np.clip((f.values - lo) / (hi - lo), 0.0, 1.0)
    pix = np.round(scaled * 255).astype(np.uint8)
    # image rows run along the second axis so that x grows to the right
    img = np.ascontiguousarray(pix.T[::-1])
    header = f"P5\n{f.grid.n} {f.grid.n}\n255\n".encode("ascii")
    return header + img.tobytes()


def write_pgm(path: str | os.PathLike, f: Field, lo: float = -1.2, hi: float = 1.2) -> None:
    atomic_write_bytes(path, encode_pgm(f, lo, hi))


# ------------------------------------------------------------------- reports


def rows_to_csv(rows: Iterable[Mapping]) -> str:
    rows = list(rows)
    buf = io.StringIO()
    if not rows:
        return ""
    keys: list[str] = []
    for r in rows:
        for k in r:
            if k not in keys:
                keys.append(k)
    w = csv.DictWriter(buf, fieldnames=keys, lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: _fmt(r.get(k, "")) for k in keys})
    return buf.getvalue()


def _fmt(v):
    if isinstance(v, float):
        return repr(v)
    return v


def write_json(path: str | os.PathLike, obj) -> None:
    atomic_write_text(path, json.dumps(obj, indent=2, sort_keys=True, default=_json_default) + "\n")


def _json_default(o):
    if isinstance(o, (np.floating,)):
        return float(o)
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, (np.bool_,)):
        return bool(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"cannot serialise {type(o).__name__}")
