"""Reader/writer for the DSTV tensor interchange format.

Layout: magic "DSTV", version byte (1), rank byte, rank little-endian u32
dims, then row-major little-endian float32 payload. Implemented here from
the format description; this package never imports the producer.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

MAGIC = b"DSTV"
VERSION = 1


class TensorFormatError(RuntimeError):
    pass


def read_tensor(path) -> np.ndarray:
    raw = Path(path).read_bytes()
    if len(raw) < 6 or raw[:4] != MAGIC:
        raise TensorFormatError(f"{path}: bad magic")
    if raw[4] != VERSION:
        raise TensorFormatError(f"{path}: unsupported version {raw[4]}")
    rank = raw[5]
    head_end = 6 + 4 * rank
    dims = struct.unpack(f"<{rank}I", raw[6:head_end]) if rank else ()
    count = int(np.prod(dims, dtype=np.int64)) if rank else 1
    payload = raw[head_end:]
    if len(payload) != 4 * count:
        raise TensorFormatError(f"{path}: payload size mismatch")
    return np.frombuffer(payload, dtype="<f4").reshape(dims).copy()


def write_tensor(path, arr: np.ndarray) -> None:
    a = np.ascontiguousarray(arr, dtype="<f4")
    header = MAGIC + bytes([VERSION, a.ndim])
    header += b"".join(struct.pack("<I", d) for d in a.shape)
    Path(path).write_bytes(header + a.tobytes())
