"""Image tensors, the DSTV binary tensor format, grayscale I/O, patching.

Images are numpy arrays shaped (B, H, W) with normalized intensities in
[0, 1]. The DSTV file format is deliberately dumb so any language can read
it: 4-byte magic "DSTV", version byte, rank byte, rank little-endian u32
dims, then row-major little-endian float32 payload.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError

from .errors import (
    DataError,
    ImageReadError,
    TensorFormatError,
    UnsupportedImageError,
)

TENSOR_MAGIC = b"DSTV"
TENSOR_VERSION = 1

IMAGE_SUFFIXES = (".png", ".pgm")


def check_images(x: np.ndarray, min_h: int = 1) -> np.ndarray:
    """Validate a (B, H, W) image batch and return it as float64."""
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim != 3:
        raise DataError(f"expected a (B, H, W) array, got shape {arr.shape}")
    b, h, w = arr.shape
    if b < 1 or h < min_h or w < 1:
        raise DataError(f"degenerate image batch shape {arr.shape}")
    if not np.isfinite(arr).all():
        raise DataError("image batch contains NaN or Inf")
    return arr


# ---------------------------------------------------------------------------
# DSTV tensor files

def write_tensor(path, arr: np.ndarray) -> None:
    """Write an array as a DSTV file (cast to little-endian float32)."""
    a = np.ascontiguousarray(arr, dtype="<f4")
    if not np.isfinite(a).all():
        raise DataError("refusing to write non-finite tensor")
    if a.ndim > 255:
        raise DataError("tensor rank exceeds format limit")
    header = TENSOR_MAGIC + bytes([TENSOR_VERSION, a.ndim])
    header += b"".join(struct.pack("<I", d) for d in a.shape)
    Path(path).write_bytes(header + a.tobytes())


def read_tensor(path) -> np.ndarray:
    """Read a DSTV file; returns a float32 array bit-identical to the write."""
    try:
        raw = Path(path).read_bytes()
    except OSError as e:
        raise TensorFormatError(f"cannot read tensor file {path}: {e}") from e
    if len(raw) < 6 or raw[:4] != TENSOR_MAGIC:
        raise TensorFormatError(f"{path}: bad magic (not a DSTV file)")
    version, rank = raw[4], raw[5]
    if version != TENSOR_VERSION:
        raise TensorFormatError(f"{path}: unsupported version {version}")
    head_end = 6 + 4 * rank
    if len(raw) < head_end:
        raise TensorFormatError(f"{path}: truncated dims header")
    dims = struct.unpack(f"<{rank}I", raw[6:head_end]) if rank else ()
    count = int(np.prod(dims, dtype=np.int64)) if rank else 1
    payload = raw[head_end:]
    if len(payload) != 4 * count:
        raise TensorFormatError(
            f"{path}: payload is {len(payload)} bytes, expected {4 * count}"
        )
    arr = np.frombuffer(payload, dtype="<f4").reshape(dims)
    if not np.isfinite(arr).all():
        raise TensorFormatError(f"{path}: payload contains NaN or Inf")
    return arr.copy()


# ---------------------------------------------------------------------------
# Grayscale image I/O

def _read_pgm(path: Path) -> np.ndarray:
    raw = path.read_bytes()
    # Header = magic, width, height, maxval as whitespace-separated tokens,
    # '#' comments allowed. Payload starts after the single whitespace byte
    # that terminates maxval.
    pos = 0

    def token() -> bytes:
        nonlocal pos
        while pos < len(raw):
            c = raw[pos:pos + 1]
            if c == b"#":
                while pos < len(raw) and raw[pos:pos + 1] != b"\n":
                    pos += 1
            elif c.isspace():
                pos += 1
            else:
                break
        start = pos
        while pos < len(raw) and not raw[pos:pos + 1].isspace():
            pos += 1
        if start == pos:
            raise ImageReadError(f"{path}: truncated PGM header")
        return raw[start:pos]

    magic = token()
    if magic not in (b"P2", b"P5"):
        raise UnsupportedImageError(f"{path}: not a PGM (magic {magic!r})")
    w, h, maxval = int(token()), int(token()), int(token())
    if w < 1 or h < 1 or not 0 < maxval < 65536:
        raise ImageReadError(f"{path}: bad PGM dimensions or maxval")
    if magic == b"P2":
        values = np.array(raw[pos:].split(), dtype=np.uint32)
        if values.size != w * h:
            raise ImageReadError(f"{path}: PGM pixel count mismatch")
        data = values.reshape(h, w)
    else:
        pos += 1  # single whitespace after maxval
        dtype = ">u2" if maxval > 255 else "u1"
        need = w * h * (2 if maxval > 255 else 1)
        payload = raw[pos:pos + need]
        if len(payload) != need:
            raise ImageReadError(f"{path}: truncated PGM payload")
        data = np.frombuffer(payload, dtype=dtype).reshape(h, w)
    return data.astype(np.float64) / maxval


def _write_pgm(path: Path, quantized: np.ndarray, maxval: int) -> None:
    h, w = quantized.shape
    header = f"P5\n{w} {h}\n{maxval}\n".encode()
    payload = quantized.astype(">u2" if maxval > 255 else "u1").tobytes()
    path.write_bytes(header + payload)


def load_image(path) -> np.ndarray:
    """Load an 8/16-bit grayscale (or RGB, channel-averaged) PNG/PGM.

    Returns a (1, H, W) float64 tensor scaled to [0, 1] by the integer
    full-scale value.
    """
    p = Path(path)
    if p.suffix.lower() == ".pgm":
        return _read_pgm(p)[None]
    try:
        img = Image.open(p)
        img.load()
    except (OSError, UnidentifiedImageError) as e:
        raise ImageReadError(f"cannot read image {p}: {e}") from e
    mode = img.mode
    if mode == "L":
        data = np.asarray(img, dtype=np.float64) / 255.0
    elif mode in ("I;16", "I;16B", "I;16L", "I"):
        data = np.asarray(img, dtype=np.float64) / 65535.0
    elif mode == "RGB":
        data = np.asarray(img, dtype=np.float64).mean(axis=2) / 255.0
    else:
        raise UnsupportedImageError(f"{p}: unsupported pixel mode {mode!r}")
    data = np.clip(data, 0.0, 1.0)
    if data.ndim != 2 or data.size == 0:
        raise ImageReadError(f"{p}: empty or non-2D image")
    return data[None]


def save_image(x: np.ndarray, path, bitdepth: int = 8) -> None:
    """Quantize a single image (B=1) to 8 or 16 bits and write PNG/PGM."""
    arr = check_images(x)
    if arr.shape[0] != 1:
        raise DataError(f"save_image expects B=1, got B={arr.shape[0]}")
    if bitdepth not in (8, 16):
        raise DataError(f"bitdepth must be 8 or 16, got {bitdepth}")
    maxval = (1 << bitdepth) - 1
    q = np.rint(np.clip(arr[0], 0.0, 1.0) * maxval).astype(np.uint32)
    p = Path(path)
    try:
        if p.suffix.lower() == ".pgm":
            _write_pgm(p, q, maxval)
        elif p.suffix.lower() == ".png":
            if bitdepth == 8:
                Image.fromarray(q.astype(np.uint8), mode="L").save(p)
            else:
                Image.fromarray(q.astype(np.uint16)).save(p)
        else:
            raise UnsupportedImageError(f"unsupported output format: {p.suffix}")
    except OSError as e:
        raise DataError(f"cannot write image {p}: {e}") from e


# ---------------------------------------------------------------------------
# Operators

def grad_v(x: np.ndarray) -> np.ndarray:
    """Vertical forward difference: out[i, j] = x[i+1, j] - x[i, j].

    Output height shrinks by one (no padding). Annihilates any
    column-constant component exactly.
    """
    arr = check_images(x, min_h=2)
    return arr[:, 1:, :] - arr[:, :-1, :]


@dataclass(frozen=True)
class PatchSpec:
    size: int = 64
    stride: int = 64
    rotate90s: bool = False
    scales: tuple[float, ...] = ()

    def __post_init__(self):
        if self.size < 8:
            raise DataError(f"patch size must be >= 8, got {self.size}")
        if self.stride < 1:
            raise DataError(f"stride must be >= 1, got {self.stride}")
        if any(s <= 0 for s in self.scales):
            raise DataError("scale factors must be positive")

    @property
    def n_augments(self) -> int:
        return int(self.rotate90s) + len(self.scales)


def _zoom(patch: np.ndarray, s: float) -> np.ndarray:
    # Bilinear zoom about the patch center; s=1 is an exact copy.
    n = patch.shape[0]
    c = (n - 1) / 2.0
    src = np.clip(c + (np.arange(n) - c) / s, 0, n - 1)
    i0 = np.floor(src).astype(int)
    i1 = np.minimum(i0 + 1, n - 1)
    t = src - i0
    rows = patch[i0] * (1 - t)[:, None] + patch[i1] * t[:, None]
    return rows[:, i0] * (1 - t)[None, :] + rows[:, i1] * t[None, :]


def extract_patches(x: np.ndarray, spec: PatchSpec) -> np.ndarray:
    """Deterministic raster-order tiling with optional augmented copies.

    Augmented copies (one 90-degree rotation, one per scale factor) are
    appended after the base tiling, each block in base order, so the total
    count is base * (1 + #augments).
    """
    arr = check_images(x)
    b, h, w = arr.shape
    k = spec.size
    if h < k or w < k:
        raise DataError(f"image {h}x{w} smaller than patch size {k}")
    base = [
        arr[i, r:r + k, c:c + k]
        for i in range(b)
        for r in range(0, h - k + 1, spec.stride)
        for c in range(0, w - k + 1, spec.stride)
    ]
    out = list(base)
    if spec.rotate90s:
        out.extend(np.rot90(p) for p in base)
    for s in spec.scales:
        out.extend(_zoom(p, s) for p in base)
    return np.stack(out)
