"""Binary snapshots of solver states.

Layout (little endian)::

    header  "NWS1"  u32 version  u8 kind  3 pad bytes  f64 t  u32 nfields
    field   "NWF1"  u32 N  u32 m_times_1000  u8 real  (2N+1)^3 complex128, k1 slowest
    trailer u32 CRC-32 of everything before it

``kind`` is 0 for a wave state (fields ``u, u_t``) and 1 for a first-order
state (fields ``u, p, q1, q2, q3``). A single field written with
:func:`save_field` is one bare field block. ``m_times_1000`` records the
Sobolev index the data were prepared for and is informational only.
Coefficients are stored verbatim, so a load/save cycle reproduces the file
byte for byte.
"""

from __future__ import annotations

import struct
import zlib
from pathlib import Path

import numpy as np

from ..hyperbolic import HyperbolicState
from ..spectral import SpectralField
from ..states import WaveState

__all__ = ["SnapshotError", "save_snapshot", "load_snapshot", "encode", "decode", "read_header",
           "encode_field", "decode_field", "save_field", "load_field"]

STATE_MAGIC = b"NWS1"
FIELD_MAGIC = b"NWF1"
VERSION = 1
KIND_WAVE = 0
KIND_HYPERBOLIC = 1

_HEAD = struct.Struct("<4sIB3xdI")
_FHEAD = struct.Struct("<4sIIB")
_CRC = struct.Struct("<I")
_NFIELDS = {KIND_WAVE: 2, KIND_HYPERBOLIC: 5}


class SnapshotError(ValueError):
    pass


def _fields_of(state):
    if isinstance(state, WaveState):
        return KIND_WAVE, [state.u, state.ut]
    if isinstance(state, HyperbolicState):
        return KIND_HYPERBOLIC, list(state.fields())
    raise TypeError(f"cannot snapshot {type(state).__name__}")


def encode_field(field: SpectralField, m: float = 2.0) -> bytes:
    """One field block."""
    head = _FHEAD.pack(FIELD_MAGIC, field.N, int(round(m * 1000)), int(field.real))
    return head + np.ascontiguousarray(field.coeffs, dtype="<c16").tobytes()


def _decode_field(data: bytes, off: int, i: int = 0) -> tuple[SpectralField, float, int]:
    if len(data) < off + _FHEAD.size:
        raise SnapshotError(f"truncated snapshot in field {i} header")
    magic, N, m1000, real = _FHEAD.unpack_from(data, off)
    if magic != FIELD_MAGIC:
        raise SnapshotError(f"field {i}: bad magic {magic!r}, expected {FIELD_MAGIC!r} (not a version-1 field)")
    if real not in (0, 1):
        raise SnapshotError(f"field {i}: real flag must be 0 or 1, got {real}")
    off += _FHEAD.size
    n = (2 * N + 1) ** 3 * 16
    if len(data) < off + n:
        raise SnapshotError(f"truncated snapshot in field {i} coefficients")
    c = np.frombuffer(data, dtype="<c16", count=n // 16, offset=off).reshape((2 * N + 1,) * 3)
    return SpectralField(c.astype(complex), bool(real)), m1000 / 1000.0, off + n


def decode_field(data: bytes) -> tuple[SpectralField, float]:
    """Inverse of :func:`encode_field`; returns the field and its recorded ``m``."""
    f, m, off = _decode_field(data, 0)
    if off != len(data):
        raise SnapshotError(f"{len(data) - off} trailing bytes after field")
    return f, m


def encode(state: WaveState | HyperbolicState, m: float = 2.0) -> bytes:
    kind, fields = _fields_of(state)
    parts = [_HEAD.pack(STATE_MAGIC, VERSION, kind, float(state.t), len(fields))]
    parts.extend(encode_field(f, m) for f in fields)
    body = b"".join(parts)
    return body + _CRC.pack(zlib.crc32(body))


def read_header(data: bytes) -> dict:
    """Kind, time and field count of an encoded snapshot."""
    if len(data) < _HEAD.size:
        raise SnapshotError(f"truncated snapshot: {len(data)} bytes, header needs {_HEAD.size}")
    magic, version, kind, t, nfields = _HEAD.unpack_from(data, 0)
    if magic != STATE_MAGIC:
        raise SnapshotError(f"not a snapshot: magic {magic!r}, expected {STATE_MAGIC!r}")
    if version != VERSION:
        raise SnapshotError(f"unsupported snapshot version {version} (this build reads {VERSION})")
    if kind not in _NFIELDS:
        raise SnapshotError(f"unknown state kind tag {kind}")
    if nfields != _NFIELDS[kind]:
        raise SnapshotError(f"kind {kind} stores {_NFIELDS[kind]} fields, header says {nfields}")
    return {"kind": "wave" if kind == KIND_WAVE else "hyperbolic", "kind_tag": kind, "t": t,
            "nfields": nfields, "version": version}


def decode(data: bytes) -> WaveState | HyperbolicState:
    head = read_header(data)
    off = _HEAD.size
    fields = []
    for i in range(head["nfields"]):
        f, _, off = _decode_field(data, off, i)
        fields.append(f)
    if len(data) < off + _CRC.size:
        raise SnapshotError("truncated snapshot: checksum missing")
    if len(data) > off + _CRC.size:
        raise SnapshotError(f"{len(data) - off - _CRC.size} trailing bytes after snapshot")
    (crc,) = _CRC.unpack_from(data, off)
    if crc != zlib.crc32(data[:off]):
        raise SnapshotError("snapshot checksum mismatch")
    t = head["t"]
    if head["kind_tag"] == KIND_WAVE:
        return WaveState(t, fields[0], fields[1])
    return HyperbolicState(t, fields[0], fields[1], tuple(fields[2:]))


def save_snapshot(state: WaveState | HyperbolicState, path: str | Path, m: float = 2.0) -> Path:
    path = Path(path)
    path.write_bytes(encode(state, m))
    return path


def load_snapshot(path: str | Path) -> WaveState | HyperbolicState:
    return decode(Path(path).read_bytes())


def save_field(field: SpectralField, path: str | Path, m: float = 2.0) -> Path:
    path = Path(path)
    path.write_bytes(encode_field(field, m))
    return path


def load_field(path: str | Path) -> tuple[SpectralField, float]:
    return decode_field(Path(path).read_bytes())
