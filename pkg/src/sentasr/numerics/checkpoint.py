"""Checkpoint serialization.

Layout (all integers little-endian):

    magic "SNTC" | u32 version=1 | u32 entry count
    per entry: u16 name length | UTF-8 name | u8 rank | u32 extent per dim
               | IEEE-754 32-bit values, little-endian, row-major

Values are stored as float32; float64 tensors are downcast on save, so
bit-exact round-trips are guaranteed for float32 data.
"""

import struct

import numpy as np

from ..errors import FileFormatError
from .tensor import Tensor

MAGIC = b"SNTC"
VERSION = 1


def save_checkpoint(path, tensors):
    """Write named tensors (Tensor or ndarray values) to `path`."""
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<II", VERSION, len(tensors)))
        for name, t in tensors.items():
            data = t.data if isinstance(t, Tensor) else np.asarray(t)
            data = np.ascontiguousarray(data, dtype="<f4")
            nb = name.encode("utf-8")
            if len(nb) > 0xFFFF:
                raise FileFormatError(f"tensor name too long: {name[:40]}...")
            if data.ndim > 0xFF:
                raise FileFormatError(f"rank {data.ndim} exceeds format limit")
            f.write(struct.pack("<H", len(nb)))
            f.write(nb)
            f.write(struct.pack("<B", data.ndim))
            f.write(struct.pack(f"<{data.ndim}I", *data.shape))
            f.write(data.tobytes())


def _read_exact(f, n, what):
    buf = f.read(n)
    if len(buf) != n:
        raise FileFormatError(f"truncated checkpoint: short read in {what}")
    return buf


def load_checkpoint(path):
    """Read a checkpoint back as {name: Tensor} with float32 data."""
    with open(path, "rb") as f:
        magic = f.read(4)
        if magic != MAGIC:
            raise FileFormatError(f"bad checkpoint magic {magic!r}")
        version, count = struct.unpack("<II", _read_exact(f, 8, "header"))
        if version != VERSION:
            raise FileFormatError(f"unsupported checkpoint version {version}")
        out = {}
        for _ in range(count):
            (nlen,) = struct.unpack("<H", _read_exact(f, 2, "name length"))
            name = _read_exact(f, nlen, "name").decode("utf-8")
            (rank,) = struct.unpack("<B", _read_exact(f, 1, "rank"))
            shape = struct.unpack(f"<{rank}I", _read_exact(f, 4 * rank, "extents"))
            n = int(np.prod(shape, dtype=np.int64)) if rank else 1
            raw = _read_exact(f, 4 * n, f"values of {name!r}")
            data = np.frombuffer(raw, dtype="<f4").reshape(shape)
            out[name] = Tensor(data.astype(np.float32, copy=True))
        if f.read(1):
            raise FileFormatError("trailing bytes after last checkpoint entry")
    return out
