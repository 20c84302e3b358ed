"""Variable-length feature sequences and their on-disk format.

Feature file layout (integers and floats little-endian):

    magic "ASRF" | u32 version=1 | u32 T | u32 D | f64 frame_period
    | T*D IEEE-754 32-bit values, row-major
"""

import struct
from dataclasses import dataclass

import numpy as np

from .errors import FileFormatError

MAGIC = b"ASRF"
VERSION = 1


@dataclass
class FeatureSequence:
    """T x D real matrix with frame-rate metadata."""

    values: np.ndarray          # (T, D), float32 or float64
    frame_period: float         # seconds per frame

    def __post_init__(self):
        self.values = np.asarray(self.values)
        if self.values.ndim != 2 or self.values.shape[0] < 1:
            raise ValueError(f"expected (T>=1, D) matrix, got {self.values.shape}")
        if self.frame_period <= 0:
            raise ValueError(f"frame_period must be positive, got {self.frame_period}")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("non-finite feature values")

    @property
    def length(self):
        return self.values.shape[0]

    @property
    def dim(self):
        return self.values.shape[1]


def write_features(seq, path):
    """Write a FeatureSequence; values are stored as float32."""
    data = np.ascontiguousarray(seq.values, dtype="<f4")
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<III", VERSION, data.shape[0], data.shape[1]))
        f.write(struct.pack("<d", seq.frame_period))
        f.write(data.tobytes())


def read_features(path):
    with open(path, "rb") as f:
        magic = f.read(4)
        if magic != MAGIC:
            raise FileFormatError(f"bad feature-file magic {magic!r} in {path}")
        head = f.read(20)
        if len(head) != 20:
            raise FileFormatError(f"truncated feature-file header in {path}")
        version, t, d = struct.unpack("<III", head[:12])
        (frame_period,) = struct.unpack("<d", head[12:])
        if version != VERSION:
            raise FileFormatError(f"unsupported feature-file version {version}")
        raw = f.read(4 * t * d)
        if len(raw) != 4 * t * d:
            raise FileFormatError(f"truncated feature payload in {path}")
        if f.read(1):
            raise FileFormatError(f"trailing bytes in feature file {path}")
    values = np.frombuffer(raw, dtype="<f4").reshape(t, d).astype(np.float32)
    return FeatureSequence(values=values, frame_period=frame_period)
