import struct

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from stripekit import (
    DataError,
    ImageReadError,
    PatchSpec,
    TensorFormatError,
    UnsupportedImageError,
    extract_patches,
    grad_v,
    load_image,
    read_tensor,
    save_image,
    write_tensor,
)

from conftest import smooth_image


# ---------------------------------------------------------------------------
# DSTV tensor format

def test_tensor_header_layout(tmp_path):
    # dims (2,3,4) -> "DSTV",1,3 then LE u32 dims, then 96 payload bytes
    arr = np.arange(24, dtype=np.float32).reshape(2, 3, 4)
    path = tmp_path / "t.dstv"
    write_tensor(path, arr)
    raw = path.read_bytes()
    assert raw[:4] == b"DSTV"
    assert raw[4] == 1 and raw[5] == 3
    assert struct.unpack("<3I", raw[6:18]) == (2, 3, 4)
    assert len(raw) - 18 == 96


def test_tensor_roundtrip_bitwise(tmp_path):
    arr = np.random.default_rng(0).normal(size=(3, 5, 7)).astype(np.float32)
    path = tmp_path / "t.dstv"
    write_tensor(path, arr)
    back = read_tensor(path)
    assert back.dtype == np.float32
    assert back.tobytes() == arr.tobytes()


@settings(max_examples=30, deadline=None)
@given(arrays(np.float32, st.tuples(st.integers(1, 4), st.integers(1, 6), st.integers(1, 6)),
              elements=st.floats(-1e6, 1e6, width=32)))
def test_tensor_roundtrip_property(tmp_path_factory, arr):
    path = tmp_path_factory.mktemp("dstv") / "t.dstv"
    write_tensor(path, arr)
    assert np.array_equal(read_tensor(path), arr)


def test_tensor_corrupt_magic(tmp_path):
    path = tmp_path / "t.dstv"
    write_tensor(path, np.zeros((2, 2), dtype=np.float32))
    raw = bytearray(path.read_bytes())
    raw[0] = ord(b"X")
    path.write_bytes(bytes(raw))
    with pytest.raises(TensorFormatError):
        read_tensor(path)


def test_tensor_truncated_payload(tmp_path):
    path = tmp_path / "t.dstv"
    write_tensor(path, np.zeros((4, 4), dtype=np.float32))
    raw = path.read_bytes()
    path.write_bytes(raw[:-3])
    with pytest.raises(TensorFormatError):
        read_tensor(path)


def test_tensor_bad_version(tmp_path):
    path = tmp_path / "t.dstv"
    write_tensor(path, np.zeros((2,), dtype=np.float32))
    raw = bytearray(path.read_bytes())
    raw[4] = 9
    path.write_bytes(bytes(raw))
    with pytest.raises(TensorFormatError):
        read_tensor(path)


# ---------------------------------------------------------------------------
# Image I/O

def _write_pgm8(path, data):
    h, w = data.shape
    path.write_bytes(f"P5\n{w} {h}\n255\n".encode() + data.astype(np.uint8).tobytes())


def test_load_pgm_extremes(tmp_path):
    p = tmp_path / "white.pgm"
    _write_pgm8(p, np.full((4, 6), 255))
    assert np.array_equal(load_image(p), np.ones((1, 4, 6)))
    p2 = tmp_path / "black.pgm"
    _write_pgm8(p2, np.zeros((4, 6)))
    assert np.array_equal(load_image(p2), np.zeros((1, 4, 6)))


def test_load_pgm_midvalue(tmp_path):
    p = tmp_path / "mid.pgm"
    _write_pgm8(p, np.full((2, 2), 128))
    got = load_image(p)
    assert got == pytest.approx(128 / 255)


def test_load_pgm_ascii_and_comment(tmp_path):
    p = tmp_path / "a.pgm"
    p.write_text("P2\n# comment\n3 2\n255\n0 128 255\n255 128 0\n")
    got = load_image(p)
    assert got.shape == (1, 2, 3)
    assert got[0, 0, 1] == pytest.approx(128 / 255)


def test_save_quantization(tmp_path):
    p = tmp_path / "q.pgm"
    save_image(np.full((1, 3, 3), 0.6), p, bitdepth=8)
    raw = p.read_bytes()
    assert raw.endswith(bytes([153] * 9))  # round(0.6*255)
    save_image(np.zeros((1, 2, 2)), tmp_path / "z.pgm")
    assert (tmp_path / "z.pgm").read_bytes().endswith(b"\x00" * 4)
    save_image(np.ones((1, 2, 2)), tmp_path / "o.pgm")
    assert (tmp_path / "o.pgm").read_bytes().endswith(b"\xff" * 4)


@pytest.mark.parametrize("suffix,bitdepth", [(".png", 8), (".png", 16),
                                             (".pgm", 8), (".pgm", 16)])
def test_save_load_roundtrip_error_bound(tmp_path, suffix, bitdepth):
    img = smooth_image(7, 32, 24)[None]
    path = tmp_path / f"img{suffix}"
    save_image(img, path, bitdepth=bitdepth)
    back = load_image(path)
    assert back.shape == img.shape
    assert np.abs(back - img).max() <= 0.5 / ((1 << bitdepth) - 1) + 1e-12


def test_load_rgb_channel_mean(tmp_path):
    from PIL import Image
    rgb = np.zeros((4, 4, 3), dtype=np.uint8)
    rgb[..., 0] = 30
    rgb[..., 1] = 60
    rgb[..., 2] = 90
    p = tmp_path / "c.png"
    Image.fromarray(rgb, mode="RGB").save(p)
    assert load_image(p) == pytest.approx(60 / 255)


def test_load_errors_distinct(tmp_path):
    with pytest.raises(ImageReadError):
        load_image(tmp_path / "missing.png")
    bad = tmp_path / "bad.png"
    bad.write_bytes(b"not a png at all")
    with pytest.raises(ImageReadError):
        load_image(bad)
    from PIL import Image
    pal = tmp_path / "pal.png"
    Image.new("P", (4, 4)).save(pal)
    with pytest.raises(UnsupportedImageError):
        load_image(pal)


# ---------------------------------------------------------------------------
# Vertical gradient

def test_grad_v_direct():
    out = grad_v(np.array([[[1.0, 2.0], [3.0, 4.0]]]))
    assert np.array_equal(out, [[[2.0, 2.0]]])


def test_grad_v_shape_and_errors():
    x = np.zeros((2, 5, 3))
    assert grad_v(x).shape == (2, 4, 3)
    with pytest.raises(DataError):
        grad_v(np.zeros((1, 1, 3)))


@settings(max_examples=40, deadline=None)
@given(arrays(np.float64, st.tuples(st.integers(2, 12), st.integers(1, 12)),
              elements=st.floats(0, 1)))
def test_grad_v_annihilates_column_constant(row_img):
    # rows identical -> zero gradient, exactly
    field = np.tile(row_img[:1, :], (row_img.shape[0], 1))
    assert np.all(grad_v(field[None]) == 0.0)


def test_grad_v_constant_zero():
    assert np.all(grad_v(np.full((1, 6, 6), 0.37)) == 0.0)


# ---------------------------------------------------------------------------
# Patch extraction

def test_patch_identity_tile():
    img = smooth_image(3, 64, 64)[None]
    out = extract_patches(img, PatchSpec(size=64, stride=64))
    assert out.shape == (1, 64, 64)
    assert np.array_equal(out[0], img[0])


def test_patch_tiling_count():
    img = smooth_image(4, 128, 128)[None]
    out = extract_patches(img, PatchSpec(size=64, stride=64))
    assert out.shape[0] == 4  # floor((128-64)/64+1)^2


def test_patch_partition_reconstructs():
    img = smooth_image(5, 128, 192)[None]
    out = extract_patches(img, PatchSpec(size=64, stride=64))
    ny, nx = 2, 3
    rebuilt = np.block([[out[r * nx + c] for c in range(nx)] for r in range(ny)])
    assert np.array_equal(rebuilt, img[0])


def test_patch_rotate_flag_doubles():
    img = smooth_image(6, 64, 128)[None]
    base = extract_patches(img, PatchSpec(size=64, stride=64))
    aug = extract_patches(img, PatchSpec(size=64, stride=64, rotate90s=True))
    assert aug.shape[0] == 2 * base.shape[0]
    assert np.array_equal(aug[base.shape[0]], np.rot90(base[0]))


def test_patch_scale_unit_is_identity():
    img = smooth_image(8, 64, 64)[None]
    aug = extract_patches(img, PatchSpec(size=64, stride=64, scales=(1.0,)))
    assert aug.shape[0] == 2
    assert np.allclose(aug[1], aug[0])


def test_patch_too_small_errors():
    with pytest.raises(DataError):
        extract_patches(np.zeros((1, 32, 32)), PatchSpec(size=64))
