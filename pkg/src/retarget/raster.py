"""Raster types and file I/O.

Images are interleaved 8-bit RGB, maps are per-pixel scalars in [0, 1].
Both are addressed row-major, origin top-left, x rightward, y downward.
Supported formats: PNG (via Pillow), binary PPM (P6) and PGM (P5).
All types are immutable after construction and safe to share across
workers.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field

import numpy as np
from PIL import Image, UnidentifiedImageError

from .errors import DecodeError, DimensionMismatch, ZeroDimension

__all__ = [
    "RasterImage",
    "ImportanceMap",
    "TargetSpec",
    "load_image",
    "save_image",
    "load_importance",
    "save_importance",
    "to_luminance",
]

# BT.601 luma weights; the scalar image every gradient stencil runs on.
_LUMA = np.array([0.299, 0.587, 0.114])


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr = np.ascontiguousarray(arr)
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class RasterImage:
    """Interleaved RGB pixel grid, shape (height, width, 3), uint8."""

    pixels: np.ndarray

    def __post_init__(self):
        px = np.asarray(self.pixels)
        if px.ndim != 3 or px.shape[2] != 3 or px.dtype != np.uint8:
            raise ValueError("RasterImage expects a (h, w, 3) uint8 array")
        if px.shape[0] < 1 or px.shape[1] < 1:
            raise ZeroDimension(f"image with shape {px.shape[:2]} is empty")
        object.__setattr__(self, "pixels", _frozen(px))

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def channels(self) -> int:
        return 3


@dataclass(frozen=True)
class ImportanceMap:
    """Per-pixel scalar energy in [0, 1], shape (height, width), float64."""

    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.ndim != 2:
            raise ValueError("ImportanceMap expects a 2-D array")
        if v.shape[0] < 1 or v.shape[1] < 1:
            raise ZeroDimension(f"map with shape {v.shape} is empty")
        if not np.all(np.isfinite(v)) or v.min() < 0.0 or v.max() > 1.0:
            raise ValueError("importance values must lie in [0, 1]")
        object.__setattr__(self, "values", _frozen(v))

    @property
    def width(self) -> int:
        return self.values.shape[1]

    @property
    def height(self) -> int:
        return self.values.shape[0]


@dataclass(frozen=True)
class TargetSpec:
    """One retargeting request: full target size plus the axis this pass
    changes.

    axis "vertical" means vertical seams / width change, "horizontal"
    means horizontal seams / height change.  Requests that change both
    axes are decomposed by the caller into two sequential passes, width
    first.
    """

    target_width: int
    target_height: int
    axis: str = "vertical"

    def __post_init__(self):
        if self.axis not in ("vertical", "horizontal"):
            raise ValueError(f"unknown axis {self.axis!r}")
        if self.target_width < 1 or self.target_height < 1:
            raise ZeroDimension("target size must be at least 1x1")

    @classmethod
    def for_width(cls, width: int, height: int) -> "TargetSpec":
        """Target that changes width (vertical seams), keeping height."""
        return cls(target_width=width, target_height=height, axis="vertical")

    @classmethod
    def for_height(cls, width: int, height: int) -> "TargetSpec":
        """Target that changes height (horizontal seams), keeping width."""
        return cls(target_width=width, target_height=height, axis="horizontal")


def to_luminance(img: RasterImage) -> np.ndarray:
    """BT.601 luminance, float64 in [0, 255]."""
    return img.pixels.astype(np.float64) @ _LUMA


# ---------------------------------------------------------------------------
# PNM (binary PPM / PGM) codec.  maxval 255 throughout, except the 16-bit
# PGM label export which writes maxval 65535 big-endian.

def _read_pnm_tokens(data: bytes, count: int):
    """Yield `count` whitespace-separated header tokens, skipping comments.

    Returns (tokens, offset of the byte right after the final single
    whitespace that terminates the header).
    """
    tokens = []
    i = 0
    while len(tokens) < count:
        if i >= len(data):
            raise DecodeError("truncated PNM header")
        c = data[i : i + 1]
        if c == b"#":
            j = data.find(b"\n", i)
            if j < 0:
                raise DecodeError("unterminated PNM comment")
            i = j + 1
        elif c.isspace():
            i += 1
        else:
            j = i
            while j < len(data) and not data[j : j + 1].isspace():
                j += 1
            tokens.append(data[i:j])
            i = j
            if len(tokens) == count:
                # exactly one whitespace byte separates header and raster
                if i >= len(data) or not data[i : i + 1].isspace():
                    raise DecodeError("malformed PNM header")
                i += 1
    return tokens, i


def _decode_pnm(data: bytes):
    """Decode P5/P6 bytes to (array, channels). 16-bit data is kept."""
    magic = data[:2]
    if magic not in (b"P5", b"P6"):
        raise DecodeError(f"not a binary PNM file (magic {magic!r})")
    channels = 1 if magic == b"P5" else 3
    tokens, offset = _read_pnm_tokens(data[2:], 3)
    try:
        w, h, maxval = (int(t) for t in tokens)
    except ValueError:
        raise DecodeError("non-numeric PNM header field") from None
    if w < 1 or h < 1:
        raise ZeroDimension(f"PNM declares {w}x{h}")
    if not 0 < maxval < 65536:
        raise DecodeError(f"unsupported PNM maxval {maxval}")
    depth = 2 if maxval > 255 else 1
    body = data[2 + offset :]
    need = w * h * channels * depth
    if len(body) < need:
        raise DecodeError("truncated PNM raster data")
    dt = ">u2" if depth == 2 else np.uint8
    arr = np.frombuffer(body[:need], dtype=dt).reshape(
        (h, w) if channels == 1 else (h, w, 3)
    )
    return arr, maxval


def _encode_pnm(arr: np.ndarray, maxval: int = 255) -> bytes:
    if arr.ndim == 3:
        magic = b"P6"
        h, w = arr.shape[:2]
    else:
        magic = b"P5"
        h, w = arr.shape
    header = b"%s\n%d %d\n%d\n" % (magic, w, h, maxval)
    if maxval > 255:
        body = arr.astype(">u2").tobytes()
    else:
        body = arr.astype(np.uint8).tobytes()
    return header + body


def _looks_like_png(data: bytes) -> bool:
    return data[:8] == b"\x89PNG\r\n\x1a\n"


def load_image(path) -> RasterImage:
    """Load an 8-bit RGB image from PNG or binary PPM.

    16-bit sources are truncated to 8 bits; grayscale sources are
    replicated across channels.
    """
    with open(path, "rb") as fh:
        data = fh.read()
    if _looks_like_png(data):
        try:
            with Image.open(io.BytesIO(data)) as im:
                im.load()
                if im.mode in ("I", "I;16", "I;16B", "I;16L"):
                    arr = (np.asarray(im, dtype=np.uint32) >> 8).astype(np.uint8)
                    px = np.repeat(arr[:, :, None], 3, axis=2)
                else:
                    px = np.asarray(im.convert("RGB"))
        except UnidentifiedImageError as exc:
            raise DecodeError(f"cannot decode PNG {path}: {exc}") from exc
        except OSError as exc:
            raise DecodeError(f"cannot decode PNG {path}: {exc}") from exc
        return RasterImage(px)
    arr, maxval = _decode_pnm(data)
    if maxval > 255:
        arr = (arr.astype(np.uint32) >> 8).astype(np.uint8)
    if arr.ndim == 2:
        arr = np.repeat(arr[:, :, None], 3, axis=2)
    return RasterImage(arr.astype(np.uint8))


def save_image(img: RasterImage, path) -> None:
    """Write as PNG or binary PPM depending on the file extension."""
    p = str(path)
    if p.lower().endswith(".png"):
        Image.fromarray(img.pixels, mode="RGB").save(p, format="PNG")
    else:
        with open(p, "wb") as fh:
            fh.write(_encode_pnm(img.pixels))


def load_importance(path, expected=None) -> ImportanceMap:
    """Load an importance map from an 8-bit grayscale PGM or PNG.

    Each 8-bit sample u maps to u/255.  `expected` is an optional
    (width, height) pair the map must match.
    """
    with open(path, "rb") as fh:
        data = fh.read()
    if _looks_like_png(data):
        try:
            with Image.open(io.BytesIO(data)) as im:
                im.load()
                if im.mode not in ("L", "I", "I;16", "I;16B", "I;16L"):
                    im = im.convert("L")
                arr = np.asarray(im)
                if arr.dtype != np.uint8:
                    raise DecodeError(f"{path}: importance PNG must be 8-bit")
        except UnidentifiedImageError as exc:
            raise DecodeError(f"cannot decode PNG {path}: {exc}") from exc
    else:
        arr, maxval = _decode_pnm(data)
        if arr.ndim != 2:
            raise DecodeError(f"{path}: importance map must be single-channel")
        if maxval != 255:
            raise DecodeError(f"{path}: importance PGM must have maxval 255")
    if expected is not None:
        ew, eh = expected
        if (arr.shape[1], arr.shape[0]) != (ew, eh):
            raise DimensionMismatch(
                f"{path}: map is {arr.shape[1]}x{arr.shape[0]}, "
                f"expected {ew}x{eh}"
            )
    return ImportanceMap(arr.astype(np.float64) / 255.0)


def save_importance(m: ImportanceMap, path) -> None:
    """Write as 8-bit grayscale PGM or PNG; values quantized by round(v*255)."""
    q = np.rint(m.values * 255.0).astype(np.uint8)
    p = str(path)
    if p.lower().endswith(".png"):
        Image.fromarray(q, mode="L").save(p, format="PNG")
    else:
        with open(p, "wb") as fh:
            fh.write(_encode_pnm(q))


def save_labels_pgm(labels: np.ndarray, path) -> None:
    """Debug export of a label grid as 16-bit PGM, ids clamped to 65535."""
    arr = np.clip(labels, 0, 65535).astype(np.uint16)
    with open(str(path), "wb") as fh:
        fh.write(_encode_pnm(arr, maxval=65535))
